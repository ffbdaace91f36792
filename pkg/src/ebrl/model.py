"""Domain types for the empirical Bayes linkage model and its log posterior.

Records are interned so that every field value is an integer index into that
field's vocabulary.  String fields always come first in the field order,
followed by categorical fields.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np


class IngestionError(ValueError):
    """Raised when raw rows cannot be turned into a Dataset."""


class FieldKind(str, enum.Enum):
    STRING = "string"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FieldSpec:
    """A model field: its label, kind, and the source column it is read from.

    ``column`` is whatever key indexes a raw row: a header name for dict rows,
    an integer position for sequence rows.
    """

    name: str
    kind: FieldKind
    column: Any = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FieldKind(self.kind))
        if self.column is None:
            object.__setattr__(self, "column", self.name)

    @property
    def is_string(self) -> bool:
        return self.kind is FieldKind.STRING


@dataclass(frozen=True)
class Schema:
    fields: tuple[FieldSpec, ...]
    list_column: Any = None
    truth_column: Any = None

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        names = [f.name for f in self.fields]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise IngestionError(f"duplicate field names in schema: {dupes}")
        if not self.fields:
            raise IngestionError("schema declares no model fields")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Interned records from one or more lists.

    Attributes
    ----------
    fields : tuple of FieldSpec
        Model fields, string-valued first.
    records : ndarray of shape (N, p), int32
        ``records[r, l]`` indexes ``vocab[l]``.
    list_ids : ndarray of shape (N,), int32
        List membership of each record (0-based).
    vocab : tuple of tuple of str
        Per-field distinct values in first-occurrence order.
    truth : ndarray of shape (N,) or None
        Interned true-entity label per record.
    """

    fields: tuple[FieldSpec, ...]
    records: np.ndarray
    list_ids: np.ndarray
    vocab: tuple[tuple[str, ...], ...]
    truth: np.ndarray | None = None
    list_labels: tuple[str, ...] = ()

    def __post_init__(self):
        recs = np.ascontiguousarray(self.records, dtype=np.int32)
        lids = np.ascontiguousarray(self.list_ids, dtype=np.int32)
        if recs.ndim != 2 or recs.shape[1] != len(self.fields):
            raise IngestionError("records must be an (N, p) array matching the fields")
        if lids.shape != (recs.shape[0],):
            raise IngestionError("list_ids must have one entry per record")
        for l, voc in enumerate(self.vocab):
            col = recs[:, l]
            if col.size and (col.min() < 0 or col.max() >= len(voc)):
                raise IngestionError(f"field {self.fields[l].name!r} holds an index outside its vocabulary")
        kinds = [f.is_string for f in self.fields]
        if kinds != sorted(kinds, reverse=True):
            raise IngestionError("string fields must precede categorical fields")
        recs.setflags(write=False)
        lids.setflags(write=False)
        object.__setattr__(self, "records", recs)
        object.__setattr__(self, "list_ids", lids)
        if self.truth is not None:
            t = np.asarray(self.truth, dtype=np.int64)
            t.setflags(write=False)
            object.__setattr__(self, "truth", t)
        if not self.list_labels:
            n_lists = int(lids.max()) + 1 if lids.size else 0
            object.__setattr__(self, "list_labels", tuple(str(i) for i in range(n_lists)))

    @property
    def n_records(self) -> int:
        return self.records.shape[0]

    @property
    def n_fields(self) -> int:
        return self.records.shape[1]

    @property
    def n_string(self) -> int:
        return sum(f.is_string for f in self.fields)

    @property
    def n_categorical(self) -> int:
        return self.n_fields - self.n_string

    @property
    def n_lists(self) -> int:
        return len(self.list_labels)

    @property
    def list_sizes(self) -> np.ndarray:
        return np.bincount(self.list_ids, minlength=self.n_lists)

    def value(self, record: int, fld: int) -> str:
        return self.vocab[fld][self.records[record, fld]]

    def describe(self) -> dict:
        return {
            "N": self.n_records,
            "k": self.n_lists,
            "p_s": self.n_string,
            "p_c": self.n_categorical,
            "vocab_sizes": {f.name: len(v) for f, v in zip(self.fields, self.vocab)},
        }


def _cell(row, key, lineno):
    try:
        val = row[key]
    except (KeyError, IndexError):
        raise IngestionError(f"row {lineno}: missing column {key!r}") from None
    if val is None:
        raise IngestionError(f"row {lineno}: missing column {key!r}")
    val = str(val)
    if val == "":
        raise IngestionError(f"row {lineno}: empty value in column {key!r}")
    return val


def intern_dataset(rows: Sequence[Mapping | Sequence], schema: Schema, first_line: int = 1) -> Dataset:
    """Build a Dataset from raw rows.

    Vocabularies are built per field in first-occurrence order.  Fields are
    reordered so string fields precede categorical ones.  ``first_line`` only
    offsets the row numbers quoted in error messages.

    Raises
    ------
    IngestionError
        On an empty table, a missing column, or an empty field value.
    """
    if not rows:
        raise IngestionError("input table has no rows")
    fields = tuple(sorted(schema.fields, key=lambda f: not f.is_string))
    p = len(fields)
    records = np.empty((len(rows), p), dtype=np.int32)
    index: list[dict[str, int]] = [{} for _ in range(p)]
    list_index: dict[str, int] = {}
    list_ids = np.zeros(len(rows), dtype=np.int32)
    truth_index: dict[str, int] = {}
    truth = np.empty(len(rows), dtype=np.int64) if schema.truth_column is not None else None

    for r, row in enumerate(rows):
        lineno = first_line + r
        for l, f in enumerate(fields):
            val = _cell(row, f.column, lineno)
            records[r, l] = index[l].setdefault(val, len(index[l]))
        if schema.list_column is not None:
            lab = _cell(row, schema.list_column, lineno)
            list_ids[r] = list_index.setdefault(lab, len(list_index))
        if truth is not None:
            lab = _cell(row, schema.truth_column, lineno)
            truth[r] = truth_index.setdefault(lab, len(truth_index))

    vocab = tuple(tuple(ix) for ix in index)
    labels = tuple(list_index) if list_index else ("0",)
    return Dataset(fields, records, list_ids, vocab, truth, labels)


@dataclass(frozen=True, eq=False)
class EmpiricalDist:
    probs: np.ndarray

    def __post_init__(self):
        self.probs.setflags(write=False)


def build_empirical_dist(dataset: Dataset, fld: int) -> EmpiricalDist:
    """Empirical frequency of every vocabulary value of one field, pooled over all lists."""
    if not 0 <= fld < dataset.n_fields:
        raise IndexError(f"field index {fld} out of range")
    counts = np.bincount(dataset.records[:, fld], minlength=len(dataset.vocab[fld]))
    return EmpiricalDist(counts / dataset.n_records)


@dataclass(frozen=True)
class Hyperparams:
    """Beta(a, b) prior on distortion, string steepness c, population size, metric.

    ``n_pop=None`` means "use the record count N".  ``normalizer`` picks the
    string-distortion constant: ``"weighted"`` makes the distortion
    distribution a proper pmf, ``h(y) = 1 / sum_w alpha(w) exp(-c d(w, y))``;
    ``"unweighted"`` drops alpha from the sum, ``h(y) = 1 / sum_w exp(-c d(w, y))``,
    which leaves the distortion weights summing below one and makes
    distortion toward rare values much more expensive.
    """

    a: float = 1.0
    b: float = 99.0
    c: float = 1.0
    n_pop: int | None = None
    distance: str = "edit"
    normalizer: str = "weighted"

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"hyperparameter {name} must be a positive finite number, got {v!r}")
        if self.n_pop is not None:
            if int(self.n_pop) != self.n_pop or self.n_pop < 1:
                raise ValueError(f"n_pop must be a positive integer, got {self.n_pop!r}")
            object.__setattr__(self, "n_pop", int(self.n_pop))
        if self.distance not in ("edit", "jw"):
            raise ValueError(f"distance must be 'edit' or 'jw', got {self.distance!r}")
        if self.normalizer not in ("weighted", "unweighted"):
            raise ValueError(f"normalizer must be 'weighted' or 'unweighted', got {self.normalizer!r}")

    def population(self, n_records: int) -> int:
        return n_records if self.n_pop is None else self.n_pop


@dataclass
class LatentState:
    """One state of the sampler.

    ``lam`` holds 0-based latent indices, ``y`` the latent field values as
    vocabulary indices, ``z`` the distortion flags, ``beta`` the per-list
    per-field distortion probabilities.
    """

    lam: np.ndarray
    y: np.ndarray
    z: np.ndarray
    beta: np.ndarray

    def copy(self) -> "LatentState":
        return LatentState(self.lam.copy(), self.y.copy(), self.z.copy(), self.beta.copy())

    @property
    def n_pop(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class Violation:
    kind: str
    where: tuple
    message: str


def validate_state(state: LatentState, dataset: Dataset, hp: Hyperparams) -> Violation | None:
    """Check a state against the model's support; return the first violation or None."""
    N, p = dataset.records.shape
    n_pop = hp.population(N)
    shapes = {
        "lam": (state.lam.shape, (N,)),
        "y": (state.y.shape, (n_pop, p)),
        "z": (state.z.shape, (N, p)),
        "beta": (state.beta.shape, (dataset.n_lists, p)),
    }
    for name, (got, want) in shapes.items():
        if got != want:
            return Violation("shape", (name,), f"{name} has shape {got}, expected {want}")
    bad = np.flatnonzero((state.lam < 0) | (state.lam >= n_pop))
    if bad.size:
        r = int(bad[0])
        return Violation("lambda", (r,), f"record {r} assigned to latent {int(state.lam[r])} outside 0..{n_pop - 1}")
    for l in range(p):
        col = state.y[:, l]
        bad = np.flatnonzero((col < 0) | (col >= len(dataset.vocab[l])))
        if bad.size:
            v = int(bad[0])
            return Violation("y", (v, l), f"latent {v} field {l} holds index {int(col[v])} outside the vocabulary")
    bad = np.argwhere((state.z != 0) & (state.z != 1))
    if bad.size:
        r, l = map(int, bad[0])
        return Violation("z", (r, l), f"z[{r}, {l}] is not 0/1")
    bad = np.argwhere(~((state.beta > 0) & (state.beta < 1)))
    if bad.size:
        i, l = map(int, bad[0])
        return Violation("beta", (i, l), f"beta[{i}, {l}] = {state.beta[i, l]} is outside (0, 1)")
    mismatch = (state.z == 0) & (dataset.records != state.y[state.lam])
    bad = np.argwhere(mismatch)
    if bad.size:
        r, l = map(int, bad[0])
        i = int(dataset.list_ids[r])
        j = int(np.count_nonzero(dataset.list_ids[:r] == i))
        return Violation(
            "support",
            (i, j, l),
            f"record {r} (list {i}, position {j}) has z=0 on field {l} but disagrees with latent {int(state.lam[r])}",
        )
    return None


def log_joint_posterior(state: LatentState, dataset: Dataset, tables, hp: Hyperparams) -> float:
    """Unnormalized log posterior density of a full state, or -inf off the support.

    ``tables`` is a :class:`ebrl.strdist.FieldTables` built with the same
    steepness as ``hp``.
    """
    X = dataset.records
    N, p = X.shape
    n_pop = hp.population(N)
    if state.lam.shape != (N,) or state.y.shape != (n_pop, p) or state.z.shape != (N, p):
        raise ValueError("state dimensions do not match the dataset and n_pop")
    if state.beta.shape != (dataset.n_lists, p):
        raise ValueError("beta must have shape (n_lists, p)")

    Yr = state.y[state.lam]  # latent values seen by each record
    z = state.z.astype(bool)
    if np.any(~z & (X != Yr)):
        return -np.inf

    total = 0.0
    for l in range(p):
        logalpha = np.log(tables.alpha[l])
        zl = z[:, l]
        total += logalpha[X[zl, l]].sum()
        if dataset.fields[l].is_string:
            total += np.log(tables.h[l][Yr[zl, l]]).sum()
            total -= hp.c * tables.dist[l][X[zl, l], Yr[zl, l]].sum()
        total += logalpha[state.y[:, l]].sum()

    sizes = dataset.list_sizes
    Z = np.zeros((dataset.n_lists, p))
    np.add.at(Z, dataset.list_ids, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        lb = np.log(state.beta)
        l1b = np.log1p(-state.beta)
        total += np.sum(np.where(Z + hp.a - 1 != 0, (Z + hp.a - 1) * lb, 0.0))
        nz = sizes[:, None] - Z + hp.b - 1
        total += np.sum(np.where(nz != 0, nz * l1b, 0.0))
    return float(total)
