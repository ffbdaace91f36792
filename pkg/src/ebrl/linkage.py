"""Point estimates of the linkage structure from posterior samples.

A record's maximal matching set (MMS) in one sample is the set of records
sharing its latent entity.  The estimator links records exactly when they
belong to a set that is the most probable MMS of each of its members, which
keeps the estimate transitive.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from .gibbs import SampleLog


class EmptyLogError(ValueError):
    pass


# Records A, B, C = 0, 1, 2.  A-B and B-C each share a latent in 3 of 5
# samples, A-C in only 1, so linking pairs above probability 1/2 joins A-B
# and B-C but not A-C.
ABC_EXAMPLE = np.array(
    [[0, 0, 1], [0, 0, 1], [0, 1, 1], [0, 1, 1], [0, 0, 0]], dtype=np.int32
)


@dataclass(frozen=True, eq=False)
class LinkagePartition:
    """A partition of records ``0..N-1`` stored as canonical cluster labels.

    Labels are renumbered by first appearance, so two partitions are equal iff
    their label arrays are equal.
    """

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        _, first, inv = np.unique(lab, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first)] = np.arange(len(first))
        canon = rank[inv.ravel()]
        canon.setflags(write=False)
        object.__setattr__(self, "labels", canon)

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[int]], n_records: int | None = None) -> "LinkagePartition":
        clusters = [sorted(int(r) for r in c) for c in clusters]
        members = [r for c in clusters for r in c]
        n = len(members) if n_records is None else n_records
        if len(set(members)) != len(members):
            raise ValueError("clusters overlap")
        if sorted(members) != list(range(n)):
            raise ValueError(f"clusters do not cover records 0..{n - 1} exactly")
        labels = np.empty(n, dtype=np.int64)
        for k, c in enumerate(clusters):
            labels[c] = k
        return cls(labels)

    @property
    def n_records(self) -> int:
        return len(self.labels)

    @property
    def clusters(self) -> list[tuple[int, ...]]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.flatnonzero(np.diff(self.labels[order])) + 1
        return [tuple(int(r) for r in g) for g in np.split(order, bounds)]

    def linked(self, a: int, b: int) -> bool:
        return self.labels[a] == self.labels[b]

    def n_links(self) -> int:
        sizes = np.bincount(self.labels)
        return int((sizes * (sizes - 1) // 2).sum())

    def __eq__(self, other):
        if not isinstance(other, LinkagePartition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"LinkagePartition({self.clusters})"


def _snapshots(log) -> np.ndarray:
    snaps = log.lambda_snapshots if isinstance(log, SampleLog) else np.asarray(log)
    if snaps.ndim != 2 or snaps.shape[0] == 0:
        raise EmptyLogError("the sample log holds no lambda snapshots")
    return snaps


@njit(cache=True)
def _pair_keys(snaps):
    S, N = snaps.shape
    total = 0
    for s in range(S):
        order = np.argsort(snaps[s], kind="mergesort")
        start = 0
        for k in range(1, N + 1):
            if k == N or snaps[s, order[k]] != snaps[s, order[start]]:
                m = k - start
                total += m * (m - 1) // 2
                start = k
    keys = np.empty(total, dtype=np.int64)
    pos = 0
    for s in range(S):
        order = np.argsort(snaps[s], kind="mergesort")
        start = 0
        for k in range(1, N + 1):
            if k == N or snaps[s, order[k]] != snaps[s, order[start]]:
                for i in range(start, k):
                    for j in range(i + 1, k):
                        a = order[i]
                        b = order[j]
                        if a > b:
                            a, b = b, a
                        keys[pos] = a * N + b
                        pos += 1
                start = k
    return keys


def _pair_counts(snaps: np.ndarray, chunk: int = 20_000) -> tuple[np.ndarray, np.ndarray]:
    N = snaps.shape[1]
    parts_k, parts_c = [], []
    for lo in range(0, snaps.shape[0], chunk):
        keys = _pair_keys(np.ascontiguousarray(snaps[lo : lo + chunk]))
        k, c = np.unique(keys, return_counts=True)
        parts_k.append(k)
        parts_c.append(c)
    keys = np.concatenate(parts_k) if parts_k else np.zeros(0, dtype=np.int64)
    counts = np.concatenate(parts_c) if parts_c else np.zeros(0, dtype=np.int64)
    uk, inv = np.unique(keys, return_inverse=True)
    uc = np.bincount(inv.ravel(), weights=counts, minlength=len(uk)).astype(np.int64)
    return np.stack([uk // N, uk % N], axis=1), uc


def pairwise_match_probs(log) -> dict[tuple[int, int], float]:
    """Posterior probability that two records share a latent entity.

    Keys are ``(a, b)`` with ``a < b``; pairs never co-assigned are omitted.
    """
    snaps = _snapshots(log)
    pairs, counts = _pair_counts(snaps)
    S = snaps.shape[0]
    return {(int(a), int(b)): c / S for (a, b), c in zip(pairs, counts)}


def _mms_counts(snaps: np.ndarray, record: int, nbrs: np.ndarray) -> dict[frozenset, int]:
    if nbrs.size == 0:
        return {frozenset([record]): snaps.shape[0]}
    # a record's MMS can only contain records it is ever co-assigned with
    mask = snaps[:, nbrs] == snaps[:, record : record + 1]
    # pack each row into one opaque key; unique on that beats unique(axis=0)
    packed = np.ascontiguousarray(np.packbits(mask, axis=1))
    keys = packed.view(np.dtype((np.void, packed.shape[1]))).ravel()
    _, first, counts = np.unique(keys, return_index=True, return_counts=True)
    out = {}
    for i, c in zip(first, counts):
        out[frozenset([record, *nbrs[mask[i]].tolist()])] = int(c)
    return out


def record_mms_distribution(log, record: int) -> dict[frozenset, float]:
    """Posterior distribution of one record's maximal matching set."""
    snaps = _snapshots(log)
    nbrs = np.flatnonzero(np.any(snaps == snaps[:, record : record + 1], axis=0))
    nbrs = nbrs[nbrs != record]
    S = snaps.shape[0]
    return {k: c / S for k, c in _mms_counts(snaps, record, nbrs).items()}


def _pick(dist: dict[frozenset, float | int]) -> frozenset:
    # highest frequency, then smaller set, then lexicographically smaller sorted members
    return min(dist, key=lambda s: (-dist[s], len(s), sorted(s)))


def mpmms(log, record: int) -> frozenset:
    """The most probable maximal matching set of ``record``."""
    return _pick(record_mms_distribution(log, record))


@njit(cache=True)
def _cluster_hashes(snaps, w1, w2):
    # each record's cluster gets the wrapping sum of its members' random keys
    S, N = snaps.shape
    width = snaps.max() + 1
    acc1 = np.zeros(width, dtype=np.uint64)
    acc2 = np.zeros(width, dtype=np.uint64)
    out = np.empty((S, N, 3), dtype=np.uint64)
    for s in range(S):
        for r in range(N):
            acc1[snaps[s, r]] += w1[r]
            acc2[snaps[s, r]] += w2[r]
        for r in range(N):
            out[s, r, 0] = r
            out[s, r, 1] = acc1[snaps[s, r]]
            out[s, r, 2] = acc2[snaps[s, r]]
        for r in range(N):
            acc1[snaps[s, r]] = 0
            acc2[snaps[s, r]] = 0
    return out


def _unique_rows(rows: np.ndarray):
    rows = np.ascontiguousarray(rows)
    keys = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, first, inv, counts = np.unique(keys, return_index=True, return_inverse=True, return_counts=True)
    return first, inv.ravel(), counts


def all_mpmms(log, chunk: int = 5_000) -> list[frozenset]:
    """The MPMMS of every record.

    Each cluster of each snapshot is identified by a 128-bit sum of random
    per-record keys, so all records are tallied in one pass over the log.
    Two different sets collide with probability about 2**-128.
    """
    snaps = _snapshots(log)
    S, N = snaps.shape
    rng = np.random.default_rng(0x5EED)
    w1, w2 = (rng.integers(0, 2**63, size=N, dtype=np.uint64) * np.uint64(2) + np.uint64(1) for _ in range(2))
    parts, reps, cnts = [], [], []
    for lo in range(0, S, chunk):
        block = np.ascontiguousarray(snaps[lo : lo + chunk])
        h = _cluster_hashes(block, w1, w2).reshape(-1, 3)
        first, _, counts = _unique_rows(h)
        parts.append(h[first])
        reps.append(lo + first // N)
        cnts.append(counts)
    rows = np.concatenate(parts)
    rep = np.concatenate(reps)
    cnt = np.concatenate(cnts)
    first, inv, _ = _unique_rows(rows)
    total = np.bincount(inv, weights=cnt).astype(np.int64)
    rep_min = np.full(len(first), S, dtype=np.int64)
    np.minimum.at(rep_min, inv, rep)
    owner = rows[first, 0].astype(np.int64)

    best: list[frozenset] = []
    order = np.lexsort((-total, owner))
    bounds = np.searchsorted(owner[order], np.arange(N + 1))
    for r in range(N):
        idx = order[bounds[r] : bounds[r + 1]]
        top = idx[total[idx] == total[idx[0]]]
        cands = {}
        for k in top:
            row = snaps[rep_min[k]]
            cands[frozenset(np.flatnonzero(row == row[r]).tolist())] = int(total[k])
        best.append(_pick(cands))
    return best


def shared_mpmms_linkage(log) -> LinkagePartition:
    """Link records iff they belong to the same shared most probable MMS.

    Records whose MPMMS is not shared by all its members stay singletons.
    """
    best = all_mpmms(log)
    N = len(best)
    labels = np.arange(N, dtype=np.int64)
    owner = np.full(N, -1, dtype=np.int64)
    for r, s in enumerate(best):
        if len(s) < 2 or min(s) != r:
            continue
        if all(best[q] == s for q in s):
            members = np.fromiter(s, dtype=np.int64)
            assert np.all(owner[members] == -1), "record in two shared MPMMS"
            owner[members] = r
            labels[members] = r
    return LinkagePartition(labels)


def threshold_links(log, threshold: float = 0.5) -> set[tuple[int, int]]:
    """Pairs whose match probability exceeds ``threshold``; not closed transitively."""
    return {pair for pair, pr in pairwise_match_probs(log).items() if pr > threshold}


def is_transitive(links: set[tuple[int, int]]) -> bool:
    adj: dict[int, set[int]] = defaultdict(set)
    for a, b in links:
        adj[a].add(b)
        adj[b].add(a)
    for a, nb in adj.items():
        for b in nb:
            for c in adj[b]:
                if c != a and c not in nb:
                    return False
    return True
