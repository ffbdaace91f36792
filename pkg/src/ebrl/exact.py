"""Brute-force posterior over every (lambda, Y, z) configuration of a tiny instance.

This is a test oracle.  It evaluates the joint density term by term straight
from the model definition, recomputing the empirical weights and the string
normalizers with plain loops instead of reusing the sampler's tables.  With
``beta=None`` the distortion probabilities are integrated out in closed form
(each Beta kernel integrates to a Beta function); otherwise they are held at
the given values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from .model import Dataset, Hyperparams
from .strdist import edit_distance, jaro_winkler_distance

DEFAULT_MAX_CONFIGS = 10**7


class InstanceTooLarge(ValueError):
    pass


def count_configurations(dataset: Dataset, hp: Hyperparams) -> int:
    N, p = dataset.records.shape
    n_pop = hp.population(N)
    n_y = 1
    for voc in dataset.vocab:
        n_y *= len(voc) ** n_pop
    return n_pop**N * n_y * 2 ** (N * p)


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    """Normalized posterior over all configurations.

    ``logw[a, b, c]`` is the unnormalized log density of lambda configuration
    ``lam_configs[a]``, latent values ``y_configs[b]`` and flags
    ``z_configs[c]``; ``prob`` is its normalized exponential.
    """

    lam_configs: np.ndarray
    y_configs: np.ndarray
    z_configs: np.ndarray
    logw: np.ndarray
    prob: np.ndarray
    n_pop: int
    sizes: tuple[int, ...]

    def lambda_marginal(self) -> np.ndarray:
        return self.prob.sum(axis=(1, 2))

    def lam_index(self, lam) -> int:
        idx = 0
        for v in lam:
            idx = idx * self.n_pop + int(v)
        return idx

    def y_index(self, y) -> int:
        idx = 0
        for v in range(y.shape[0]):
            for l, S in enumerate(self.sizes):
                idx = idx * S + int(y[v, l])
        return idx

    def z_index(self, z) -> int:
        idx = 0
        for bit in np.asarray(z).ravel():
            idx = idx * 2 + int(bit)
        return idx

    def lam_axes(self) -> np.ndarray:
        """``prob`` with the lambda axis unfolded to one axis per record."""
        N = self.lam_configs.shape[1]
        return self.prob.reshape((self.n_pop,) * N + self.prob.shape[1:])

    def y_axes(self) -> np.ndarray:
        """``prob`` with the Y axis unfolded to one axis per (latent, field)."""
        shape = tuple(S for _ in range(self.n_pop) for S in self.sizes)
        return self.prob.reshape(self.prob.shape[:1] + shape + self.prob.shape[2:])

    def z_axes(self) -> np.ndarray:
        """``prob`` with the z axis unfolded to one binary axis per (record, field)."""
        nbits = self.z_configs.shape[1] * self.z_configs.shape[2]
        return self.prob.reshape(self.prob.shape[:2] + (2,) * nbits)


def _oracle_tables(dataset: Dataset, hp: Hyperparams):
    N = dataset.n_records
    metric = edit_distance if hp.distance == "edit" else jaro_winkler_distance
    alphas, hs, dists = [], [], []
    for l, f in enumerate(dataset.fields):
        voc = dataset.vocab[l]
        counts = [0] * len(voc)
        for r in range(N):
            counts[int(dataset.records[r, l])] += 1
        alpha = np.array([cnt / N for cnt in counts])
        alphas.append(alpha)
        if f.is_string:
            d = np.array([[float(metric(s, t)) for t in voc] for s in voc])
            wt = alpha if hp.normalizer == "weighted" else np.ones(len(voc))
            h = np.array([1.0 / sum(wt[w] * np.exp(-hp.c * d[w, w0]) for w in range(len(voc))) for w0 in range(len(voc))])
            dists.append(d)
            hs.append(h)
        else:
            dists.append(None)
            hs.append(None)
    return alphas, hs, dists


def enumerate_posterior(dataset: Dataset, hp: Hyperparams, beta: np.ndarray | None = None,
                        max_configs: int = DEFAULT_MAX_CONFIGS) -> PosteriorTable:
    """Exact posterior table of a tiny instance.

    Raises
    ------
    InstanceTooLarge
        When the configuration count exceeds ``max_configs``.
    """
    total = count_configurations(dataset, hp)
    if total > max_configs:
        raise InstanceTooLarge(f"instance has {total} configurations; the limit is {max_configs}")
    X = dataset.records
    N, p = X.shape
    n_pop = hp.population(N)
    sizes = tuple(len(v) for v in dataset.vocab)
    alphas, hs, dists = _oracle_tables(dataset, hp)

    lam_configs = np.array(list(itertools.product(range(n_pop), repeat=N)), dtype=np.int64).reshape(-1, N)
    ranges = [range(S) for _ in range(n_pop) for S in sizes]
    y_configs = np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(-1, n_pop, p)
    z_configs = np.array(list(itertools.product((0, 1), repeat=N * p)), dtype=np.int8).reshape(-1, N, p)

    logw = np.zeros((len(lam_configs), len(y_configs), len(z_configs)))
    with np.errstate(divide="ignore"):
        for r in range(N):
            for l in range(p):
                x = int(X[r, l])
                w = np.arange(sizes[l])
                distorted = np.full(sizes[l], np.log(alphas[l][x]))
                if dataset.fields[l].is_string:
                    distorted += np.log(hs[l][w]) - hp.c * dists[l][x, w]
                exact = np.where(w == x, 0.0, -np.inf)
                seen = y_configs[:, lam_configs[:, r], l].T  # (L, Ycount)
                bit = z_configs[:, r, l].astype(bool)
                logw += np.where(bit[None, None, :], distorted[seen][:, :, None], exact[seen][:, :, None])

        prior_y = np.zeros(len(y_configs))
        for l in range(p):
            prior_y += np.log(alphas[l])[y_configs[:, :, l]].sum(axis=1)
        logw += prior_y[None, :, None]

    n = dataset.list_sizes
    zterm = np.zeros(len(z_configs))
    for i in range(dataset.n_lists):
        in_list = dataset.list_ids == i
        Z = z_configs[:, in_list, :].sum(axis=1)  # (Zcount, p)
        if beta is None:
            zterm += betaln(Z + hp.a, n[i] - Z + hp.b).sum(axis=1)
        else:
            bi = np.asarray(beta, dtype=float)[i]
            zterm += ((Z + hp.a - 1) * np.log(bi) + (n[i] - Z + hp.b - 1) * np.log1p(-bi)).sum(axis=1)
    logw += zterm[None, None, :]

    m = logw.max()
    prob = np.exp(logw - m)
    prob /= prob.sum()
    return PosteriorTable(lam_configs, y_configs, z_configs, logw, prob, n_pop, sizes)
