"""Pairwise error rates, simple baselines, posterior summaries and trace diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .gibbs import SampleLog
from .linkage import LinkagePartition
from .model import Dataset


@dataclass(frozen=True)
class ConfusionCounts:
    """Counts over all unordered record pairs."""

    cl: int
    fn: int
    fp: int
    cnl: int

    @property
    def total(self) -> int:
        return self.cl + self.fn + self.fp + self.cnl

    def as_table(self) -> np.ndarray:
        """2x2 layout: rows = truth (linked, not linked), columns = estimate."""
        return np.array([[self.cl, self.fn], [self.fp, self.cnl]])


def _pairs(n):
    return n * (n - 1) // 2


def confusion_counts(estimate: LinkagePartition, truth: LinkagePartition) -> ConfusionCounts:
    """Classify every unordered pair as CL, FN, FP or CNL."""
    if estimate.n_records != truth.n_records:
        raise ValueError(f"estimate covers {estimate.n_records} records but truth covers {truth.n_records}")
    N = truth.n_records
    true_links = _pairs(np.bincount(truth.labels)).sum()
    est_links = _pairs(np.bincount(estimate.labels)).sum()
    cell = truth.labels * (estimate.labels.max() + 1) + estimate.labels
    both = _pairs(np.unique(cell, return_counts=True)[1]).sum()
    cl = int(both)
    fn = int(true_links - both)
    fp = int(est_links - both)
    return ConfusionCounts(cl, fn, fp, _pairs(N) - cl - fn - fp)


def fnr(c: ConfusionCounts) -> float:
    """False negative rate FN / (CL + FN); 0 when there are no true links."""
    denom = c.cl + c.fn
    return c.fn / denom if denom else 0.0


def fdr(c: ConfusionCounts) -> float:
    """False discovery rate FP / (CL + FP); 0 when nothing was linked."""
    denom = c.cl + c.fp
    return c.fp / denom if denom else 0.0


def truth_partition(dataset: Dataset) -> LinkagePartition:
    if dataset.truth is None:
        raise ValueError("dataset carries no truth column")
    return LinkagePartition(dataset.truth)


def exact_match_baseline(dataset: Dataset) -> LinkagePartition:
    """Link records iff every field is identical."""
    _, labels = np.unique(dataset.records, axis=0, return_inverse=True)
    return LinkagePartition(labels.ravel())


def _components(n, a, b) -> np.ndarray:
    graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    return connected_components(graph, directed=False)[1]


def near_twin_baseline(dataset: Dataset) -> LinkagePartition:
    """Transitive closure of "differ on at most one field".

    Two records differ on at most one field iff they agree on all fields but
    some ``l``; grouping by each leave-one-out key finds every such pair.
    """
    X = dataset.records
    N, p = X.shape
    src, dst = [], []
    for l in range(p):
        rest = np.delete(X, l, axis=1)
        if rest.shape[1] == 0:
            groups = np.zeros(N, dtype=np.int64)
        else:
            _, groups = np.unique(rest, axis=0, return_inverse=True)
            groups = groups.ravel()
        order = np.argsort(groups, kind="stable")
        same = groups[order][1:] == groups[order][:-1]
        # chain consecutive members of a group; connectivity is all that matters
        src.append(order[:-1][same])
        dst.append(order[1:][same])
    a = np.concatenate(src) if src else np.zeros(0, dtype=np.int64)
    b = np.concatenate(dst) if dst else np.zeros(0, dtype=np.int64)
    return LinkagePartition(_components(N, a, b))


@dataclass(frozen=True)
class NDistinctSummary:
    mean: float
    sd: float
    values: np.ndarray
    density: np.ndarray


def n_distinct_summary(log: SampleLog) -> NDistinctSummary:
    """Mean, sample SD and an integer-binned density of the distinct-entity count."""
    x = np.asarray(log.n_distinct)
    if x.size == 0:
        raise ValueError("empty trace")
    sd = float(np.std(x, ddof=1)) if x.size >= 2 else float("nan")
    values, counts = np.unique(x, return_counts=True)
    return NDistinctSummary(float(np.mean(x)), sd, values, counts / x.size)


def multiplicity_trace(log: SampleLog, m: int) -> np.ndarray:
    """Per-sweep number of latents with exactly ``m`` attached records."""
    return log.multiplicity(m)


class GewekeResult(NamedTuple):
    z: float
    zero_variance: bool


def _batch_se2(x: np.ndarray, batches: int) -> tuple[float, float]:
    size = len(x) // batches
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return float(x.mean()), float(means.var(ddof=1) / batches)


def geweke_z(series, frac_a: float = 0.1, frac_b: float = 0.5, batches: int = 20) -> GewekeResult:
    """Geweke's comparison of early and late window means.

    The variance of each window mean is estimated from ``batches``
    non-overlapping batch means.  A series with no variance in either window
    yields ``z = 0`` and ``zero_variance = True``.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 100:
        raise ValueError(f"series of length {x.size} is too short; need at least 100")
    if not (0 < frac_a and 0 < frac_b and frac_a + frac_b <= 1):
        raise ValueError("window fractions must be positive and sum to at most 1")
    na = int(frac_a * x.size)
    nb = int(frac_b * x.size)
    if na < batches or nb < batches:
        raise ValueError("windows are too short for the batch count")
    ma, va = _batch_se2(x[:na], batches)
    mb, vb = _batch_se2(x[x.size - nb :], batches)
    denom = np.sqrt(va + vb)
    if denom == 0:
        return GewekeResult(0.0 if ma == mb else float(np.sign(ma - mb) * np.inf), True)
    return GewekeResult(float((ma - mb) / denom), False)
