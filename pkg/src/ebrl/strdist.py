"""String distances and the per-field tables the sampler reads every sweep.

Distances are precomputed once for every pair of vocabulary values.  For a
string field the distortion distribution around a latent value ``y`` is::

    P(w | y) = alpha(w) * exp(-c * d(w, y)) * h(y)

with ``1 / h(y) = sum_w alpha(w) * exp(-c * d(w, y))``, so ``h`` carries the
empirical weights and every row of the distortion distribution sums to one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from rapidfuzz.distance import JaroWinkler, Levenshtein
from rapidfuzz.process import cdist

from .model import Dataset, Hyperparams, build_empirical_dist

DEFAULT_VOCAB_CAP = 20_000


class VocabularyTooLarge(MemoryError):
    pass


def edit_distance(s: str, t: str) -> int:
    """Levenshtein distance with unit insert, delete and substitute costs."""
    return Levenshtein.distance(s, t)


def jaro_winkler_distance(s: str, t: str) -> float:
    """One minus the Jaro-Winkler similarity.

    Prefix scale 0.1, common prefix counted up to 4 characters, and the
    prefix boost applied only when the Jaro similarity exceeds 0.7.  Half
    the count of out-of-order matches is rounded down, as in the reference
    ``strcmp95`` code.
    """
    return JaroWinkler.distance(s, t, prefix_weight=0.1)


_SCORERS = {"edit": Levenshtein.distance, "jw": JaroWinkler.distance}


def distance_matrix(values, metric: str = "edit") -> np.ndarray:
    """Symmetric matrix of pairwise distances between ``values``."""
    try:
        scorer = _SCORERS[metric]
    except KeyError:
        raise ValueError(f"unknown distance {metric!r}; use 'edit' or 'jw'") from None
    values = list(values)
    d = cdist(values, values, scorer=scorer, dtype=np.float64, workers=1)
    # JW is symmetric in exact arithmetic; force it bitwise.
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return d


@dataclass(frozen=True, eq=False)
class FieldTables:
    """Precomputed quantities for every field.

    ``alpha[l]`` is the empirical distribution of field ``l``.  For string
    fields ``dist[l]``, ``kernel[l]`` (``exp(-c * dist)``) and ``h[l]`` are
    set; for categorical fields they are ``None``.
    """

    alpha: tuple[np.ndarray, ...]
    dist: tuple[np.ndarray | None, ...]
    kernel: tuple[np.ndarray | None, ...]
    h: tuple[np.ndarray | None, ...]
    c: float
    n_string: int

    @property
    def n_fields(self) -> int:
        return len(self.alpha)

    def is_string(self, fld: int) -> bool:
        return fld < self.n_string


def _freeze(a):
    if a is not None:
        a.setflags(write=False)
    return a


def build_field_tables(
    dataset: Dataset, hp: Hyperparams, vocab_cap: int = DEFAULT_VOCAB_CAP, c: float | None = None
) -> FieldTables:
    """Compute alpha for every field and distance, kernel and h for string fields.

    ``c`` overrides ``hp.c``; unlike the hyperparameter it may be zero, which
    is handy for probing limits.

    Raises
    ------
    VocabularyTooLarge
        If a string field has more than ``vocab_cap`` distinct values, since
        its dense distance matrix would not fit comfortably in memory.
    """
    c = hp.c if c is None else float(c)
    if c < 0:
        raise ValueError("steepness c must be nonnegative")
    alphas, dists, kernels, hs = [], [], [], []
    for l, f in enumerate(dataset.fields):
        alpha = build_empirical_dist(dataset, l).probs
        alphas.append(alpha)
        if not f.is_string:
            dists.append(None)
            kernels.append(None)
            hs.append(None)
            continue
        size = len(dataset.vocab[l])
        if size > vocab_cap:
            raise VocabularyTooLarge(
                f"string field {f.name!r} has {size} distinct values; a dense "
                f"{size}x{size} distance matrix ({size * size:.3g} entries) exceeds the cap of "
                f"{vocab_cap} values. Raise vocab_cap if memory allows, or treat the field as categorical."
            )
        d = distance_matrix(dataset.vocab[l], hp.distance)
        k = np.exp(-c * d)
        if hp.normalizer == "weighted":
            h = 1.0 / (alpha @ k)  # k symmetric: (alpha @ k)[y] = sum_w alpha(w) k(w, y)
        else:
            h = 1.0 / k.sum(axis=0)
        dists.append(_freeze(d))
        kernels.append(_freeze(k))
        hs.append(_freeze(h))
    return FieldTables(
        tuple(_freeze(a) for a in alphas), tuple(dists), tuple(kernels), tuple(hs), c, dataset.n_string
    )


def distortion_pmf(fld: int, y: int, tables: FieldTables) -> np.ndarray:
    """Distribution of a distorted string value given the latent value ``y``."""
    if not tables.is_string(fld):
        raise ValueError(f"field {fld} is categorical; its distortion distribution is the empirical prior")
    return tables.alpha[fld] * tables.kernel[fld][:, y] * tables.h[fld][y]
