"""Numerical checks of divergence bounds between record distributions.

Two latent values ``t != t'`` give two distributions of an observed field.
For the categorical distortion model their L1 distance is exactly
``2 (1 - beta)``; Pinsker's inequality and the reverse Pinsker inequality
then sandwich the KL divergence, and Fano's inequality turns an upper bound
on the divergence into a lower bound on the error of any estimator.
Natural logarithms throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .strdist import FieldTables


@dataclass(frozen=True, eq=False)
class CategoricalModelParams:
    theta: np.ndarray
    beta: float
    y: int
    y_prime: int

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if th.ndim != 1 or th.size < 1:
            raise ValueError("theta must be a nonempty probability vector")
        if np.any(th <= 0) or not np.isclose(th.sum(), 1.0, rtol=0, atol=1e-12):
            raise ValueError("theta must be strictly positive and sum to 1")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")
        for t in (self.y, self.y_prime):
            if not 0 <= t < th.size:
                raise ValueError(f"latent value {t} outside 0..{th.size - 1}")
        object.__setattr__(self, "theta", th)


def categorical_pmf(theta, beta: float, y: int) -> np.ndarray:
    """P(m) = 1{y = m} (1 - beta) + theta_m beta."""
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0) or not np.isclose(th.sum(), 1.0, rtol=0, atol=1e-12):
        raise ValueError("theta must be a probability vector")
    p = beta * th
    p[y] += 1.0 - beta
    return p


def model_pair(params: CategoricalModelParams) -> tuple[np.ndarray, np.ndarray]:
    return (
        categorical_pmf(params.theta, params.beta, params.y),
        categorical_pmf(params.theta, params.beta, params.y_prime),
    )


def eb_string_pmf(fld: int, y: int, tables: FieldTables, beta: float) -> np.ndarray:
    """Record distribution for a string field: point mass mixed with the distance-tilted prior."""
    if not tables.is_string(fld):
        raise ValueError(f"field {fld} is categorical")
    w = beta * tables.alpha[fld] * tables.kernel[fld][:, y]
    w[y] += 1.0 - beta
    return w / w.sum()


def l1_distance(p, q) -> float:
    p, q = np.asarray(p, float), np.asarray(q, float)
    if p.shape != q.shape:
        raise ValueError("distributions differ in length")
    return float(np.abs(p - q).sum())


def kl_divergence(p, q) -> float:
    """KL(p || q) with 0 log 0 = 0."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    if p.shape != q.shape:
        raise ValueError("distributions differ in length")
    on = p > 0
    if np.any(q[on] <= 0):
        raise ValueError("q vanishes where p has mass; KL is infinite")
    return float(np.sum(p[on] * np.log(p[on] / q[on])))


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def pinsker_check(p, q) -> BoundCheck:
    """Checks KL(p || q) >= ||p - q||_1^2 / 4, reported as lhs = bound, rhs = KL."""
    kl = kl_divergence(p, q)
    bound = 0.25 * l1_distance(p, q) ** 2
    return BoundCheck(bound, kl, kl >= bound)


def reverse_pinsker_check(p, q) -> BoundCheck:
    """Checks KL(p || q) <= ||p - q||_1 ln(1 / min q)."""
    q = np.asarray(q, float)
    if np.any(q <= 0):
        raise ValueError("q has a zero entry; the reverse Pinsker bound is infinite")
    kl = kl_divergence(p, q)
    bound = l1_distance(p, q) * math.log(1.0 / q.min())
    return BoundCheck(kl, bound, kl <= bound)


def categorical_upper_bound(params: CategoricalModelParams) -> float:
    """2 (1 - beta) ln(1 / min_m theta_m beta) for t != t'; 0 when t = t'."""
    if params.y == params.y_prime:
        return 0.0
    return 2.0 * (1.0 - params.beta) * math.log(1.0 / (params.theta.min() * params.beta))


def categorical_lower_bound(params: CategoricalModelParams) -> float:
    """(1 - beta)^2 for t != t'; 0 when t = t'."""
    return 0.0 if params.y == params.y_prime else (1.0 - params.beta) ** 2


def fano_bound(gamma: float, r: int) -> float:
    """Lower bound 1 - (gamma + ln 2) / ln r on the error probability, floored at 0."""
    if r < 2:
        raise ValueError("r must be at least 2")
    return max(0.0, 1.0 - (gamma + math.log(2.0)) / math.log(r))


def distance_mgf(fld: int, m_prime: int, tables: FieldTables) -> float:
    """sum_m alpha(m) exp(-c d(m, m')): E[exp(-c d(M, m'))] for M drawn from alpha."""
    if not tables.is_string(fld):
        raise ValueError(f"field {fld} is categorical")
    return float(tables.alpha[fld] @ tables.kernel[fld][:, m_prime])


def random_model_params(rng: np.random.Generator, max_categories: int = 12) -> CategoricalModelParams:
    """A random parameter draw with t != t'."""
    M = int(rng.integers(2, max_categories + 1))
    theta = rng.dirichlet(np.ones(M))
    theta = np.maximum(theta, 1e-12)
    theta /= theta.sum()
    y, y_prime = rng.choice(M, size=2, replace=False)
    return CategoricalModelParams(theta, float(rng.uniform(1e-6, 1 - 1e-6)), int(y), int(y_prime))


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst_margin: float
    cases: int
    detail: dict = field(default_factory=dict)


def run_bound_suite(n: int = 10_000, seed: int = 0) -> list[SuiteResult]:
    """Random sweep of the categorical-model bounds plus fixed Fano cases."""
    rng = np.random.default_rng(seed)
    l1_err = 0.0
    pinsker_margin = np.inf
    reverse_margin = np.inf
    special_margin = np.inf
    for _ in range(n):
        params = random_model_params(rng)
        P, Q = model_pair(params)
        l1_err = max(l1_err, abs(l1_distance(P, Q) - 2 * (1 - params.beta)))
        pinsker_margin = min(pinsker_margin, pinsker_check(P, Q).margin)
        reverse_margin = min(reverse_margin, reverse_pinsker_check(P, Q).margin)
        special_margin = min(special_margin, categorical_upper_bound(params) - kl_divergence(P, Q))
    fano_cases = [
        ((0.0, 2), 0.0),
        ((math.log(2), 16), 0.5),
        ((1.0, 100), 1.0 - (1.0 + math.log(2)) / math.log(100)),
    ]
    fano_err = max(abs(fano_bound(*args) - want) for args, want in fano_cases)
    return [
        SuiteResult("l1_identity", l1_err <= 1e-12, -l1_err if l1_err else 0.0, n, {"max_abs_error": l1_err}),
        SuiteResult("pinsker_lower", pinsker_margin >= 0, float(pinsker_margin), n),
        SuiteResult("reverse_pinsker_upper", reverse_margin >= 0, float(reverse_margin), n),
        SuiteResult("categorical_upper", special_margin >= 0, float(special_margin), n),
        SuiteResult("fano", fano_err <= 1e-12, -fano_err if fano_err else 0.0, len(fano_cases), {"max_abs_error": fano_err}),
    ]
