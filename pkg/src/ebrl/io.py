"""File formats: schema files, CSV input, sample logs, partitions.

A sample log directory holds three files:

``manifest.json``
    run metadata (N, n_pop, sweeps, thin, seed, hyperparameters, shapes).
``lambda.bin``
    little-endian int32 latent indices, row-major (snapshots x N).
``diagnostics.csv``
    one row per sweep: n_distinct, mult_1..mult_M, beta_<list>_<field>.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .gibbs import SampleLog, SamplerConfig
from .linkage import LinkagePartition
from .model import Dataset, FieldKind, FieldSpec, Hyperparams, IngestionError, Schema, intern_dataset

MANIFEST = "manifest.json"
LAMBDA_FILE = "lambda.bin"
DIAG_FILE = "diagnostics.csv"
FORMAT_VERSION = 1

_ROLES = {"string", "categorical", "list_id", "truth_id"}


class LogFormatError(ValueError):
    pass


def parse_schema(text: str, source: str = "<schema>") -> Schema:
    """Parse a schema file.

    The file has a ``[columns]`` table mapping each CSV column to one of
    ``string``, ``categorical``, ``list_id`` or ``truth_id``::

        [columns]
        fname = "string"
        by = "categorical"
        list = "list_id"
        ent_id = "truth_id"
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise IngestionError(f"{source}: {exc}") from None
    cols = doc.get("columns")
    if not isinstance(cols, dict) or not cols:
        raise IngestionError(f"{source}: missing or empty [columns] table")
    fields, list_col, truth_col = [], None, None
    for col, role in cols.items():
        if role not in _ROLES:
            raise IngestionError(f"{source}: column {col!r} has unknown role {role!r}; expected one of {sorted(_ROLES)}")
        if role == "list_id":
            if list_col is not None:
                raise IngestionError(f"{source}: more than one list_id column ({list_col!r}, {col!r})")
            list_col = col
        elif role == "truth_id":
            if truth_col is not None:
                raise IngestionError(f"{source}: more than one truth_id column ({truth_col!r}, {col!r})")
            truth_col = col
        else:
            fields.append(FieldSpec(col, FieldKind(role), col))
    return Schema(tuple(fields), list_column=list_col, truth_column=truth_col)


def load_schema(path) -> Schema:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read schema {path}: {exc.strerror}") from None
    return parse_schema(text, str(path))


def schema_text(schema: Schema) -> str:
    lines = ["[columns]"]
    for f in schema.fields:
        lines.append(f'{f.column} = "{f.kind.value}"')
    if schema.list_column is not None:
        lines.append(f'{schema.list_column} = "list_id"')
    if schema.truth_column is not None:
        lines.append(f'{schema.truth_column} = "truth_id"')
    return "\n".join(lines) + "\n"


def read_csv(path) -> tuple[list[str], list[dict]]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            header = list(reader.fieldnames or [])
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc.strerror}") from None
    except (csv.Error, UnicodeDecodeError) as exc:
        raise IngestionError(f"{path}: malformed CSV: {exc}") from None
    return header, rows


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(header), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


@dataclass(frozen=True)
class RunConfig:
    input: Path
    schema: Path
    hyperparams: Hyperparams = Hyperparams()
    sampler: SamplerConfig = SamplerConfig()
    out: Path | None = None
    truth_col: str | None = None


def load_input(config: RunConfig) -> Dataset:
    """Read the CSV named in ``config`` according to its schema."""
    schema = load_schema(config.schema)
    if config.truth_col is not None:
        schema = Schema(schema.fields, schema.list_column, config.truth_col)
    header, rows = read_csv(config.input)
    wanted = [f.column for f in schema.fields]
    wanted += [c for c in (schema.list_column, schema.truth_column) if c is not None]
    missing = [c for c in wanted if c not in header]
    if missing:
        raise IngestionError(f"{config.input}: schema names column(s) not in the header: {missing}")
    return intern_dataset(rows, schema, first_line=2)


# ---------------------------------------------------------------------------
# sample logs


def write_sample_log(log: SampleLog, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    snaps = np.ascontiguousarray(log.lambda_snapshots, dtype="<i4")
    snaps.tofile(d / LAMBDA_FILE)

    mult = np.asarray(log.multiplicity_counts)
    beta = log.beta_trace
    manifest = dict(log.meta)
    manifest.update(
        format_version=FORMAT_VERSION,
        n_snapshots=int(snaps.shape[0]),
        N=int(snaps.shape[1]) if snaps.ndim == 2 else int(log.meta.get("N", 0)),
        n_sweeps_logged=int(len(log.n_distinct)),
        multiplicity_width=int(mult.shape[1]),
        beta_shape=list(beta.shape[1:]) if beta is not None else None,
        files={"lambda": LAMBDA_FILE, "diagnostics": DIAG_FILE},
    )
    (d / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    header = ["sweep", "n_distinct"] + [f"mult_{m}" for m in range(1, mult.shape[1] + 1)]
    if beta is not None:
        header += [f"beta_{i}_{l}" for i in range(beta.shape[1]) for l in range(beta.shape[2])]
    with (d / DIAG_FILE).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in range(len(log.n_distinct)):
            row = [s, int(log.n_distinct[s]), *mult[s].tolist()]
            if beta is not None:
                row += [repr(float(x)) for x in beta[s].ravel()]
            w.writerow(row)
    return d


def read_sample_log(directory) -> SampleLog:
    d = Path(directory)
    try:
        manifest = json.loads((d / MANIFEST).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise LogFormatError(f"{d}: no {MANIFEST}") from None
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"{d / MANIFEST}: corrupt manifest: {exc}") from None
    try:
        N = int(manifest["N"])
        n_snap = int(manifest["n_snapshots"])
        width = int(manifest["multiplicity_width"])
        beta_shape = manifest["beta_shape"]
    except (KeyError, TypeError, ValueError) as exc:
        raise LogFormatError(f"{d / MANIFEST}: missing or invalid entry {exc}") from None

    raw = np.fromfile(d / LAMBDA_FILE, dtype="<i4")
    if raw.size != n_snap * N:
        raise LogFormatError(
            f"{d / LAMBDA_FILE}: holds {raw.size} values, manifest promises {n_snap} x {N} = {n_snap * N}"
        )
    snaps = raw.reshape(n_snap, N).astype(np.int32)

    with (d / DIAG_FILE).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise LogFormatError(f"{d / DIAG_FILE}: empty")
    body = rows[1:]
    n_beta = int(np.prod(beta_shape)) if beta_shape is not None else 0
    expected = 2 + width + n_beta
    if any(len(r) != expected for r in body):
        raise LogFormatError(f"{d / DIAG_FILE}: rows must have {expected} columns")
    n_distinct = np.array([int(r[1]) for r in body], dtype=np.int64)
    mult = np.array([[int(x) for x in r[2 : 2 + width]] for r in body], dtype=np.int32).reshape(len(body), width)
    beta = None
    if beta_shape is not None:
        beta = np.array([[float(x) for x in r[2 + width :]] for r in body]).reshape(len(body), *beta_shape)

    meta_keys = ("N", "n_pop", "sweeps", "thin", "seed", "hyperparams")
    meta = {k: manifest[k] for k in meta_keys if k in manifest}
    return SampleLog(snaps, n_distinct, mult, beta, meta)


# ---------------------------------------------------------------------------
# partitions


def write_partition(partition: LinkagePartition, path) -> None:
    """CSV (``record,cluster``) or JSON (``{"clusters": [...]}``) by file suffix."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        doc = {"n_records": partition.n_records, "clusters": [list(c) for c in partition.clusters]}
        path.write_text(json.dumps(doc) + "\n", encoding="utf-8")
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "cluster"])
        for r, c in enumerate(partition.labels):
            w.writerow([r, int(c)])


def read_partition(path) -> LinkagePartition:
    path = Path(path)
    if path.suffix.lower() == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        return LinkagePartition.from_clusters(doc["clusters"], doc.get("n_records"))
    _, rows = read_csv(path)
    try:
        recs = np.array([int(r["record"]) for r in rows])
        labels = np.array([int(r["cluster"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise IngestionError(f"{path}: expected integer columns record,cluster ({exc})") from None
    if sorted(recs.tolist()) != list(range(len(recs))):
        raise IngestionError(f"{path}: record column must list 0..N-1 exactly once")
    out = np.empty(len(recs), dtype=np.int64)
    out[recs] = labels
    return LinkagePartition(out)
