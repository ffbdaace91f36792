"""Four-block Gibbs sampler: beta, z, Y, lambda, in that order every sweep.

Randomness is keyed by coordinates.  Each (sweep, block) pair gets its own
Philox stream whose counter's high words hold the block and sweep numbers;
inside a block, coordinate ``c`` always consumes uniform number ``c`` of that
stream.  Results therefore do not depend on the order coordinates are
visited in.

The probability kernels below are shared between the sampling path and the
``*_conditional`` functions that return full conditional tables, so tests
that check the tables also check what the sampler draws from.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import Dataset, Hyperparams, LatentState
from .strdist import FieldTables

BLOCK_BETA, BLOCK_Z, BLOCK_Y, BLOCK_LAMBDA, BLOCK_INIT = range(5)
_MASK64 = (1 << 64) - 1


class SamplerInvariantError(RuntimeError):
    """A conditional had no mass anywhere; the state was off the model's support."""


def block_rng(seed: int, sweep: int, block: int) -> np.random.Generator:
    """The random stream for one block of one sweep."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64, counter=[0, 0, block, sweep]))


@dataclass(frozen=True)
class SamplerConfig:
    sweeps: int = 1000
    seed: int = 0
    thin: int = 1
    record_lambda: bool = True
    record_beta: bool = True

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")


@dataclass
class SampleLog:
    """Output of a sampler run.

    ``lambda_snapshots`` has one row per retained sweep.  The scalar traces
    (``n_distinct``, ``multiplicity_counts``, ``beta_trace``) have one entry
    per sweep; column ``m - 1`` of ``multiplicity_counts`` counts latents with
    exactly ``m`` attached records.
    """

    lambda_snapshots: np.ndarray
    n_distinct: np.ndarray
    multiplicity_counts: np.ndarray
    beta_trace: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_records(self) -> int:
        return int(self.meta.get("N", self.lambda_snapshots.shape[1]))

    def multiplicity(self, m: int) -> np.ndarray:
        if m < 1:
            raise ValueError("multiplicity m must be >= 1")
        if m > self.multiplicity_counts.shape[1]:
            return np.zeros(self.multiplicity_counts.shape[0], dtype=self.multiplicity_counts.dtype)
        return self.multiplicity_counts[:, m - 1]

    def __eq__(self, other):
        if not isinstance(other, SampleLog):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and np.array_equal(a, b)

        return (
            same(self.lambda_snapshots, other.lambda_snapshots)
            and same(self.n_distinct, other.n_distinct)
            and same(self.multiplicity_counts, other.multiplicity_counts)
            and same(self.beta_trace, other.beta_trace)
            and self.meta == other.meta
        )


# ---------------------------------------------------------------------------
# packed tables for the compiled kernels


@dataclass(frozen=True, eq=False)
class _Packed:
    X: np.ndarray
    list_ids: np.ndarray
    n_string: int
    c: float
    sizes: np.ndarray
    off: np.ndarray  # start of each field in the flat per-value arrays
    dist_off: np.ndarray  # start of each string field's matrix in dist_flat
    alpha: np.ndarray
    logalpha: np.ndarray
    cumalpha: np.ndarray
    h: np.ndarray
    logh: np.ndarray
    dist: np.ndarray


_PACK_CACHE: "weakref.WeakKeyDictionary[FieldTables, dict]" = weakref.WeakKeyDictionary()


def _pack(dataset: Dataset, tables: FieldTables) -> _Packed:
    per = _PACK_CACHE.setdefault(tables, {})
    hit = per.get(id(dataset))
    if hit is not None and hit[0]() is dataset:
        return hit[1]
    p = dataset.n_fields
    sizes = np.array([len(a) for a in tables.alpha], dtype=np.int64)
    off = np.zeros(p + 1, dtype=np.int64)
    off[1:] = np.cumsum(sizes)
    alpha = np.concatenate(tables.alpha)
    cum = np.concatenate([np.cumsum(a) for a in tables.alpha])
    h = np.ones(off[-1])
    dist_off = np.zeros(p + 1, dtype=np.int64)
    mats = []
    for l in range(p):
        if tables.is_string(l):
            h[off[l] : off[l + 1]] = tables.h[l]
            mats.append(tables.dist[l].ravel())
            dist_off[l + 1] = dist_off[l] + sizes[l] * sizes[l]
        else:
            dist_off[l + 1] = dist_off[l]
    dist = np.concatenate(mats) if mats else np.zeros(0)
    with np.errstate(divide="ignore"):
        logalpha = np.log(alpha)
    packed = _Packed(
        dataset.records, dataset.list_ids, tables.n_string, float(tables.c), sizes, off, dist_off,
        alpha, logalpha, cum, h, np.log(h), dist,
    )
    per[id(dataset)] = (weakref.ref(dataset), packed)
    return packed


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def _draw_from_logweights(lw, u):
    m = -np.inf
    for i in range(lw.shape[0]):
        if lw[i] > m:
            m = lw[i]
    if m == -np.inf:
        return -1
    total = 0.0
    for i in range(lw.shape[0]):
        if lw[i] != -np.inf:
            total += np.exp(lw[i] - m)
    target = u * total
    acc = 0.0
    last = -1
    for i in range(lw.shape[0]):
        if lw[i] != -np.inf:
            acc += np.exp(lw[i] - m)
            last = i
            if acc > target:
                return i
    return last


@njit(cache=True)
def _z_prob(r, l, X, list_ids, lam, Y, beta, n_string, c, off, dist_off, sizes, alpha, h, dist):
    x = X[r, l]
    y = Y[lam[r], l]
    if x != y:
        return 1.0
    b = beta[list_ids[r], l]
    q = b * alpha[off[l] + x]
    if l < n_string:
        q *= h[off[l] + y] * np.exp(-c * dist[dist_off[l] + x * sizes[l] + y])
    return q / (q + (1.0 - b))


@njit(cache=True)
def _z_block(X, list_ids, lam, Y, z, beta, u, n_string, c, off, dist_off, sizes, alpha, h, dist):
    N, p = X.shape
    for r in range(N):
        for l in range(p):
            pr = _z_prob(r, l, X, list_ids, lam, Y, beta, n_string, c, off, dist_off, sizes, alpha, h, dist)
            z[r, l] = 1 if u[r, l] < pr else 0


@njit(cache=True)
def _members(lam, n_pop):
    counts = np.zeros(n_pop + 1, dtype=np.int64)
    for r in range(lam.shape[0]):
        counts[lam[r] + 1] += 1
    starts = np.cumsum(counts)
    order = np.empty(lam.shape[0], dtype=np.int64)
    fill = starts[:-1].copy()
    for r in range(lam.shape[0]):
        order[fill[lam[r]]] = r
        fill[lam[r]] += 1
    return order, starts


@njit(cache=True)
def _y_kind(v, l, order, starts, X, z):
    """(0, w): forced to w by an undistorted record; (1, -1): prior; (2, -1): tilted."""
    forced = -1
    distorted = False
    for k in range(starts[v], starts[v + 1]):
        r = order[k]
        if z[r, l] == 0:
            if forced == -1:
                forced = X[r, l]
            elif forced != X[r, l]:
                return -1, -1
        else:
            distorted = True
    if forced != -1:
        return 0, forced
    return (2 if distorted else 1), -1


@njit(cache=True)
def _y_tilted_logweights(v, l, order, starts, X, z, c, off, dist_off, sizes, logalpha, logh, dist, out):
    S = sizes[l]
    for w in range(S):
        lw = logalpha[off[l] + w]
        for k in range(starts[v], starts[v + 1]):
            r = order[k]
            if z[r, l] == 1:
                lw += logh[off[l] + w] - c * dist[dist_off[l] + X[r, l] * S + w]
        out[w] = lw


@njit(cache=True)
def _y_block(X, lam, Y, z, u, n_string, c, off, dist_off, sizes, logalpha, cumalpha, logh, dist):
    n_pop, p = Y.shape
    order, starts = _members(lam, n_pop)
    buf = np.empty(sizes.max())
    for v in range(n_pop):
        for l in range(p):
            kind, w = _y_kind(v, l, order, starts, X, z)
            if kind == -1:
                raise RuntimeError("latent has undistorted records that disagree")
            if kind == 0:
                Y[v, l] = w
            elif kind == 1 or l >= n_string:
                lo = off[l]
                hi = off[l + 1]
                target = u[v, l] * cumalpha[hi - 1]
                w = np.searchsorted(cumalpha[lo:hi], target, side="right")
                Y[v, l] = min(w, hi - lo - 1)
            else:
                lw = buf[: sizes[l]]
                _y_tilted_logweights(v, l, order, starts, X, z, c, off, dist_off, sizes, logalpha, logh, dist, lw)
                Y[v, l] = _draw_from_logweights(lw, u[v, l])


@njit(cache=True)
def _lambda_logweights(r, X, z, Y, n_string, c, off, dist_off, sizes, logh, dist, out):
    n_pop, p = Y.shape
    for v in range(n_pop):
        lw = 0.0
        ok = True
        for l in range(p):
            yv = Y[v, l]
            if z[r, l] == 0:
                if X[r, l] != yv:
                    ok = False
                    break
            elif l < n_string:
                lw += logh[off[l] + yv] - c * dist[dist_off[l] + X[r, l] * sizes[l] + yv]
        out[v] = lw if ok else -np.inf


@njit(cache=True)
def _lambda_block(X, lam, Y, z, u, n_string, c, off, dist_off, sizes, logh, dist):
    buf = np.empty(Y.shape[0])
    for r in range(X.shape[0]):
        _lambda_logweights(r, X, z, Y, n_string, c, off, dist_off, sizes, logh, dist, buf)
        v = _draw_from_logweights(buf, u[r])
        if v < 0:
            raise RuntimeError("record has no admissible latent")
        lam[r] = v


@njit(cache=True)
def _occupancy(lam, n_pop):
    counts = np.zeros(n_pop, dtype=np.int64)
    for r in range(lam.shape[0]):
        counts[lam[r]] += 1
    mult = np.zeros(lam.shape[0] + 1, dtype=np.int64)
    distinct = 0
    for v in range(n_pop):
        if counts[v] > 0:
            distinct += 1
            mult[counts[v]] += 1
    return distinct, mult


# ---------------------------------------------------------------------------
# conditional tables


def beta_posterior_params(state: LatentState, dataset: Dataset, hp: Hyperparams) -> tuple[np.ndarray, np.ndarray]:
    """Shape parameters of each beta_{i,l} given the distortion flags."""
    Z = np.zeros((dataset.n_lists, dataset.n_fields))
    np.add.at(Z, dataset.list_ids, state.z)
    n = dataset.list_sizes[:, None]
    return Z + hp.a, n - Z + hp.b


def z_conditional(state: LatentState, dataset: Dataset, tables: FieldTables) -> np.ndarray:
    """P(z = 1 | rest) for every record and field, as an (N, p) array."""
    pk = _pack(dataset, tables)
    N, p = pk.X.shape
    out = np.empty((N, p))
    for r in range(N):
        for l in range(p):
            out[r, l] = _z_prob(
                r, l, pk.X, pk.list_ids, state.lam, state.y, state.beta, pk.n_string, pk.c,
                pk.off, pk.dist_off, pk.sizes, pk.alpha, pk.h, pk.dist,
            )
    return out


def y_conditional(state: LatentState, dataset: Dataset, tables: FieldTables) -> list[np.ndarray]:
    """Full conditional of every latent value; entry ``l`` is an (n_pop, |S_l|) array."""
    pk = _pack(dataset, tables)
    n_pop, p = state.y.shape
    order, starts = _members(state.lam.astype(np.int64), n_pop)
    out = []
    for l in range(p):
        S = int(pk.sizes[l])
        tab = np.zeros((n_pop, S))
        for v in range(n_pop):
            kind, w = _y_kind(v, l, order, starts, pk.X, state.z)
            if kind == -1:
                raise SamplerInvariantError(f"latent {v} field {l}: undistorted records disagree")
            if kind == 0:
                tab[v, w] = 1.0
            elif kind == 1 or l >= pk.n_string:
                tab[v] = tables.alpha[l]
            else:
                lw = np.empty(S)
                _y_tilted_logweights(
                    v, l, order, starts, pk.X, state.z, pk.c, pk.off, pk.dist_off, pk.sizes,
                    pk.logalpha, pk.logh, pk.dist, lw,
                )
                wts = np.exp(lw - lw.max())
                tab[v] = wts / wts.sum()
        out.append(tab)
    return out


def lambda_conditional(state: LatentState, dataset: Dataset, tables: FieldTables) -> np.ndarray:
    """P(lambda_r = v | rest) as an (N, n_pop) array."""
    pk = _pack(dataset, tables)
    N = pk.X.shape[0]
    out = np.empty((N, state.y.shape[0]))
    buf = np.empty(state.y.shape[0])
    for r in range(N):
        _lambda_logweights(r, pk.X, state.z, state.y, pk.n_string, pk.c, pk.off, pk.dist_off, pk.sizes, pk.logh, pk.dist, buf)
        if np.all(buf == -np.inf):
            raise SamplerInvariantError(f"record {r} has no admissible latent")
        w = np.exp(buf - buf.max())
        out[r] = w / w.sum()
    return out


# ---------------------------------------------------------------------------
# block updates


def _as_kernel_state(state: LatentState):
    for name, dt in (("lam", np.int64), ("y", np.int64), ("z", np.int8), ("beta", np.float64)):
        arr = getattr(state, name)
        if arr.dtype != dt or not arr.flags.c_contiguous:
            setattr(state, name, np.ascontiguousarray(arr, dtype=dt))


_BETA_EPS = np.finfo(float).eps


def sample_beta(state: LatentState, dataset: Dataset, hp: Hyperparams, rng: np.random.Generator) -> np.ndarray:
    """Redraw every beta_{i,l} from Beta(Z_il + a, n_i - Z_il + b).

    Draws that round to exactly 0 or 1 (possible for very small shapes) are
    pulled back into the open interval by the smallest representable amount.
    """
    _as_kernel_state(state)
    A, B = beta_posterior_params(state, dataset, hp)
    draw = rng.beta(A, B)
    state.beta[...] = np.clip(draw, np.finfo(float).tiny, 1.0 - _BETA_EPS)
    return state.beta


def sample_z(state: LatentState, dataset: Dataset, tables: FieldTables, rng: np.random.Generator) -> np.ndarray:
    _as_kernel_state(state)
    pk = _pack(dataset, tables)
    u = rng.random(pk.X.shape)
    _z_block(pk.X, pk.list_ids, state.lam, state.y, state.z, state.beta, u, pk.n_string, pk.c,
             pk.off, pk.dist_off, pk.sizes, pk.alpha, pk.h, pk.dist)
    return state.z


def sample_y(state: LatentState, dataset: Dataset, tables: FieldTables, rng: np.random.Generator) -> np.ndarray:
    _as_kernel_state(state)
    pk = _pack(dataset, tables)
    u = rng.random(state.y.shape)
    try:
        _y_block(pk.X, state.lam, state.y, state.z, u, pk.n_string, pk.c, pk.off, pk.dist_off, pk.sizes,
                 pk.logalpha, pk.cumalpha, pk.logh, pk.dist)
    except RuntimeError as exc:
        raise SamplerInvariantError(str(exc)) from None
    return state.y


def sample_lambda(state: LatentState, dataset: Dataset, tables: FieldTables, hp: Hyperparams,
                  rng: np.random.Generator) -> np.ndarray:
    _as_kernel_state(state)
    pk = _pack(dataset, tables)
    if state.y.shape[0] != hp.population(dataset.n_records):
        raise ValueError("state population does not match hp.n_pop")
    u = rng.random(pk.X.shape[0])
    try:
        _lambda_block(pk.X, state.lam, state.y, state.z, u, pk.n_string, pk.c, pk.off, pk.dist_off, pk.sizes,
                      pk.logh, pk.dist)
    except RuntimeError as exc:
        raise SamplerInvariantError(str(exc)) from None
    return state.lam


def init_state(dataset: Dataset, tables: FieldTables, hp: Hyperparams, seed: int) -> LatentState:
    """Starting state.

    Each record gets its own latent when the population allows it; otherwise
    assignments are uniform.  Occupied latents copy the values of their first
    record, empty ones draw from the empirical prior.
    """
    N, p = dataset.records.shape
    n_pop = hp.population(N)
    rng = block_rng(seed, 0, BLOCK_INIT)
    if n_pop >= N:
        lam = np.arange(N, dtype=np.int64)
    else:
        lam = rng.integers(0, n_pop, size=N).astype(np.int64)
    u = rng.random((n_pop, p))
    y = np.empty((n_pop, p), dtype=np.int64)
    for l in range(p):
        cum = np.cumsum(tables.alpha[l])
        y[:, l] = np.minimum(np.searchsorted(cum, u[:, l] * cum[-1], side="right"), len(cum) - 1)
    # first record of each occupied latent wins; iterate backwards so it writes last
    for r in range(N - 1, -1, -1):
        y[lam[r]] = dataset.records[r]
    z = (dataset.records != y[lam]).astype(np.int8)
    beta = np.full((dataset.n_lists, p), hp.a / (hp.a + hp.b))
    return LatentState(lam, y, z, beta)


def sweep(state: LatentState, dataset: Dataset, tables: FieldTables, hp: Hyperparams, seed: int, index: int) -> None:
    """One full sweep (beta, z, Y, lambda) using the coordinate-keyed streams."""
    sample_beta(state, dataset, hp, block_rng(seed, index, BLOCK_BETA))
    sample_z(state, dataset, tables, block_rng(seed, index, BLOCK_Z))
    sample_y(state, dataset, tables, block_rng(seed, index, BLOCK_Y))
    sample_lambda(state, dataset, tables, hp, block_rng(seed, index, BLOCK_LAMBDA))


def run_sampler(dataset: Dataset, tables: FieldTables, hp: Hyperparams, config: SamplerConfig,
                state: LatentState | None = None, progress=None) -> SampleLog:
    """Run ``config.sweeps`` sweeps from :func:`init_state` and collect the log.

    No burn-in is discarded.  ``progress`` is an optional callable receiving
    the number of completed sweeps.
    """
    N, p = dataset.records.shape
    n_pop = hp.population(N)
    if state is None:
        state = init_state(dataset, tables, hp, config.seed)
    _as_kernel_state(state)
    n_snap = config.sweeps // config.thin if config.record_lambda else 0
    snaps = np.empty((n_snap, N), dtype=np.int32)
    n_distinct = np.empty(config.sweeps, dtype=np.int64)
    mults = np.zeros((config.sweeps, 4), dtype=np.int32)
    betas = np.empty((config.sweeps, dataset.n_lists, p)) if config.record_beta else None
    width = 1
    k = 0
    for s in range(config.sweeps):
        sweep(state, dataset, tables, hp, config.seed, s)
        d, mult = _occupancy(state.lam, n_pop)
        n_distinct[s] = d
        top = int(np.flatnonzero(mult)[-1])
        if top > mults.shape[1]:
            grown = np.zeros((config.sweeps, max(top, 2 * mults.shape[1])), dtype=np.int32)
            grown[:, : mults.shape[1]] = mults
            mults = grown
        mults[s, :top] = mult[1 : top + 1]
        width = max(width, top)
        if betas is not None:
            betas[s] = state.beta
        if config.record_lambda and (s + 1) % config.thin == 0:
            snaps[k] = state.lam
            k += 1
        if progress is not None:
            progress(s + 1)
    meta = {
        "N": N,
        "n_pop": n_pop,
        "sweeps": config.sweeps,
        "thin": config.thin,
        "seed": int(config.seed),
        "hyperparams": {"a": hp.a, "b": hp.b, "c": hp.c, "n_pop": n_pop, "distance": hp.distance,
                        "normalizer": hp.normalizer},
    }
    return SampleLog(snaps, n_distinct, np.ascontiguousarray(mults[:, :width]), betas, meta)
