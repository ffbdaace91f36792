"""Synthetic duplicated-record data in the style of a names-and-birthdates file.

Base records are drawn from per-field value pools; a subset is copied and
each copy is corrupted.  String fields receive a Poisson number of random
single-character edits, categorical fields are swapped for another pool
value with a fixed probability.  A copy that comes out identical to its
source is corrupted again from scratch.

The corruption law is a stand-in: it is not claimed to match how any
particular published benchmark file was made.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .linkage import LinkagePartition
from .model import Dataset, FieldKind, FieldSpec, Schema, intern_dataset

FIRST_NAMES = (
    "ANDREAS ANNA ANDREA ANKE BIRGIT BERND CARSTEN CHRISTIAN CHRISTINA CLAUDIA DANIEL DIETER DIRK "
    "ELKE ERIKA FRANK GABRIELE GERD GUENTER HANS HEIKE HELGA HORST INGE JAN JENS JOACHIM JOERG "
    "JUERGEN JULIA KARIN KARL KATRIN KLAUS LARS LUKAS MANFRED MARIA MARKUS MARTIN MATTHIAS MICHAEL "
    "MONIKA NICOLE NORBERT PATRICK PETER PETRA RALF RENATE ROBERT SABINE SANDRA SEBASTIAN STEFAN "
    "STEFANIE SUSANNE SVEN THOMAS TOBIAS UTE UWE WERNER WOLFGANG ULRIKE URSULA HELMUT SILKE TANJA "
    "KERSTIN OLIVER FLORIAN TIM FELIX LEON LAURA LENA SARAH HANNAH LEA MARIE SOPHIE EMMA MIA "
    "PAUL MAX JONAS ELIAS NOAH BEN FINN LUCA DAVID SIMON MORITZ NIKLAS PHILIPP FABIAN ALEXANDER"
).split()

LAST_NAMES = (
    "MUELLER SCHMIDT SCHNEIDER FISCHER WEBER MEYER WAGNER BECKER SCHULZ HOFFMANN SCHAEFER KOCH "
    "BAUER RICHTER KLEIN WOLF SCHROEDER NEUMANN SCHWARZ ZIMMERMANN BRAUN KRUEGER HOFMANN HARTMANN "
    "LANGE SCHMITT WERNER SCHMITZ KRAUSE MEIER LEHMANN SCHMID SCHULZE MAIER KOEHLER HERRMANN "
    "KOENIG WALTER MAYER HUBER KAISER FUCHS PETERS LANG SCHOLZ MOELLER WEISS JUNG HAHN SCHUBERT "
    "VOGEL FRIEDRICH KELLER GUENTHER FRANK BERGER WINKLER ROTH BECK LORENZ BAUMANN FRANKE ALBRECHT "
    "SCHUSTER SIMON LUDWIG BOEHM WINTER KRAUS MARTIN SCHUMACHER KRAEMER VOGT STEIN JAEGER OTTO "
    "SOMMER GROSS SEIDEL HEINRICH BRANDT HAAS SCHREIBER GRAF SCHULTE DIETRICH ZIEGLER KUHN KUEHN "
    "POHL ENGEL HORN BUSCH BERGMANN THOMAS VOIGT SAUER ARNOLD WOLFF PFEIFFER ERNST HAUSER KURZ "
    "FRANZ BARTSCH MERTENS REUTER ZOBEL LINDNER HESSE KESSLER BRUNS RIEDEL EBERT KRAFT FRICKE"
).split()


@dataclass(frozen=True)
class PoolField:
    """A field of the generated table and the values base records draw from."""

    name: str
    kind: FieldKind
    pool: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", FieldKind(self.kind))
        object.__setattr__(self, "pool", tuple(self.pool))
        if not self.pool:
            raise ValueError(f"field {self.name!r} has an empty value pool")


def rldata_like_fields() -> tuple[PoolField, ...]:
    return (
        PoolField("fname", FieldKind.STRING, FIRST_NAMES),
        PoolField("lname", FieldKind.STRING, LAST_NAMES),
        PoolField("by", FieldKind.CATEGORICAL, tuple(str(y) for y in range(1930, 2010))),
        PoolField("bm", FieldKind.CATEGORICAL, tuple(str(m) for m in range(1, 13))),
        PoolField("bd", FieldKind.CATEGORICAL, tuple(str(d) for d in range(1, 29))),
    )


@dataclass(frozen=True)
class GenConfig:
    n_records: int = 500
    n_duplicates: int = 50
    fields: tuple[PoolField, ...] = field(default_factory=rldata_like_fields)
    string_error: float = 1.0
    cat_error: float = 0.05
    seed: int = 0
    n_lists: int = 1
    alphabet: str = string.ascii_uppercase

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if not 0 <= self.n_duplicates < self.n_records:
            raise ValueError("need 0 <= n_duplicates < n_records")
        if self.n_duplicates > self.n_records - self.n_duplicates:
            raise ValueError("cannot duplicate more records than there are base records")
        if self.string_error < 0:
            raise ValueError("string_error must be nonnegative")
        if not 0 <= self.cat_error <= 1:
            raise ValueError("cat_error must lie in [0, 1]")
        if self.n_lists < 1:
            raise ValueError("n_lists must be >= 1")


@dataclass(frozen=True, eq=False)
class SyntheticData:
    rows: list[dict]
    schema: Schema
    dataset: Dataset
    truth: LinkagePartition
    header: tuple[str, ...]


def perturb_string(s: str, n_edits: int, rng: np.random.Generator, alphabet: str = string.ascii_uppercase) -> str:
    """Apply ``n_edits`` random substitutions, insertions or deletions."""
    chars = list(s)
    for _ in range(n_edits):
        op = rng.integers(3) if len(chars) > 1 else rng.integers(2)
        if op == 0:  # substitute with a different character
            pos = int(rng.integers(len(chars)))
            choices = [a for a in alphabet if a != chars[pos]]
            chars[pos] = choices[int(rng.integers(len(choices)))]
        elif op == 1:  # insert
            pos = int(rng.integers(len(chars) + 1))
            chars.insert(pos, alphabet[int(rng.integers(len(alphabet)))])
        else:  # delete
            del chars[int(rng.integers(len(chars)))]
    return "".join(chars)


def _corrupt(record: list[str], cfg: GenConfig, rng: np.random.Generator) -> list[str]:
    out = list(record)
    for l, f in enumerate(cfg.fields):
        if f.kind is FieldKind.STRING:
            out[l] = perturb_string(record[l], int(rng.poisson(cfg.string_error)), rng, cfg.alphabet)
        elif len(f.pool) > 1 and rng.random() < cfg.cat_error:
            others = [v for v in f.pool if v != record[l]]
            out[l] = others[int(rng.integers(len(others)))]
    return out


def generate_synthetic(cfg: GenConfig) -> SyntheticData:
    """Draw base records, duplicate and corrupt some of them, shuffle.

    Raises
    ------
    ValueError
        If no field can ever be corrupted, so duplicates would be exact copies.
    """
    can_string = cfg.string_error > 0 and any(f.kind is FieldKind.STRING for f in cfg.fields)
    can_cat = cfg.cat_error > 0 and any(f.kind is FieldKind.CATEGORICAL and len(f.pool) > 1 for f in cfg.fields)
    if cfg.n_duplicates and not (can_string or can_cat):
        raise ValueError("all error rates are zero: duplicates could never differ from their sources")

    rng = np.random.default_rng(cfg.seed)
    n_base = cfg.n_records - cfg.n_duplicates
    base = [[f.pool[int(rng.integers(len(f.pool)))] for f in cfg.fields] for _ in range(n_base)]
    sources = rng.choice(n_base, size=cfg.n_duplicates, replace=False)
    dups = []
    for src in sources:
        copy = _corrupt(base[src], cfg, rng)
        while copy == base[src]:
            copy = _corrupt(base[src], cfg, rng)
        dups.append(copy)
    records = base + dups
    ent = list(range(n_base)) + [int(s) for s in sources]
    order = rng.permutation(len(records))
    lists = rng.integers(cfg.n_lists, size=len(records))

    header = tuple(f.name for f in cfg.fields) + ("list", "ent_id")
    rows = []
    for pos, r in enumerate(order):
        row = dict(zip(header, records[r]))
        row["list"] = str(lists[pos])
        row["ent_id"] = f"E{ent[r]:05d}"
        rows.append(row)
    schema = Schema(
        tuple(FieldSpec(f.name, f.kind) for f in cfg.fields), list_column="list", truth_column="ent_id"
    )
    dataset = intern_dataset(rows, schema, first_line=2)
    return SyntheticData(rows, schema, dataset, LinkagePartition(dataset.truth), header)
