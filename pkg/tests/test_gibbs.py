import math

import numpy as np
import pytest

from ebrl.exact import enumerate_posterior
from ebrl.gibbs import (
    BLOCK_LAMBDA, SampleLog, SamplerConfig, SamplerInvariantError, beta_posterior_params, block_rng,
    init_state, lambda_conditional, run_sampler, sample_beta, sample_lambda, sample_y, sample_z, sweep,
    y_conditional, z_conditional,
)
from ebrl.model import FieldSpec, Hyperparams, LatentState, Schema, intern_dataset, validate_state
from ebrl.strdist import build_field_tables

import oracle
from conftest import categorical_pair, mixed_dataset, tiny_dataset


def chain_states(ds, hp, tables, n, seed=5):
    """States along a short chain, keeping ones that carry at least one distortion flag."""
    state = init_state(ds, tables, hp, seed)
    out = []
    for s in range(2000):
        sweep(state, ds, tables, hp, seed, s)
        if state.z.any() and (not out or not np.array_equal(state.lam, out[-1].lam)):
            out.append(state.copy())
        if len(out) == n:
            break
    return out


@pytest.fixture(scope="module", params=["tiny", "mixed", "pair"])
def instance(request):
    ds, hp = {"tiny": tiny_dataset, "mixed": mixed_dataset, "pair": categorical_pair}[request.param]()
    tables = build_field_tables(ds, hp)
    beta = np.full((ds.n_lists, ds.n_fields), 0.3)
    beta[0, 0] = 0.45
    tab = enumerate_posterior(ds, hp, beta=beta)
    states = chain_states(ds, hp, tables, 6)
    for s in states:
        s.beta[...] = beta
    return ds, hp, tables, tab, states


def test_z_conditional_matches_enumeration(instance):
    ds, hp, tables, tab, states = instance
    for s in states:
        assert np.allclose(z_conditional(s, ds, tables), oracle.z_table(tab, s), rtol=0, atol=1e-9)


def test_y_conditional_matches_enumeration(instance):
    ds, hp, tables, tab, states = instance
    for s in states:
        for got, want in zip(y_conditional(s, ds, tables), oracle.y_table(tab, s)):
            assert np.allclose(got, want, rtol=0, atol=1e-9)


def test_lambda_conditional_matches_enumeration(instance):
    ds, hp, tables, tab, states = instance
    for s in states:
        assert np.allclose(lambda_conditional(s, ds, tables), oracle.lambda_table(tab, s), rtol=0, atol=1e-9)


def test_beta_parameters_match_enumeration(instance):
    ds, hp, tables, tab, states = instance
    s = states[0]
    A, B = beta_posterior_params(s, ds, hp)
    for i, l, ratio, b0, b1 in oracle.beta_log_ratios(ds, hp, s, tab):
        want = (A[i, l] - 1) * math.log(b1 / b0) + (B[i, l] - 1) * math.log((1 - b1) / (1 - b0))
        assert ratio == pytest.approx(want, abs=1e-9)


def test_beta_parameter_arithmetic():
    schema = Schema((FieldSpec("g", "categorical"),))
    ds = intern_dataset([{"g": "x"}] * 100, schema)
    hp = Hyperparams(a=1, b=99, n_pop=100)
    z = np.zeros((100, 1), dtype=np.int8)
    z[:5] = 1
    st = LatentState(np.zeros(100, dtype=np.int64), np.zeros((100, 1), dtype=np.int64), z, np.full((1, 1), 0.01))
    A, B = beta_posterior_params(st, ds, hp)
    assert (A[0, 0], B[0, 0]) == (6, 194)
    st.z[:] = 0
    A, B = beta_posterior_params(st, ds, hp)
    assert (A[0, 0], B[0, 0]) == (1, 199) and A[0, 0] / (A[0, 0] + B[0, 0]) == 0.005


def test_beta_draw_mean():
    schema = Schema((FieldSpec("g", "categorical"),))
    ds = intern_dataset([{"g": "x"}] * 100, schema)
    hp = Hyperparams(a=1, b=99, n_pop=100)
    z = np.zeros((100, 1), dtype=np.int8)
    z[:5] = 1
    st = LatentState(np.zeros(100, dtype=np.int64), np.zeros((100, 1), dtype=np.int64), z, np.full((1, 1), 0.01))
    rng = np.random.default_rng(0)
    draws = np.array([sample_beta(st, ds, hp, rng)[0, 0] for _ in range(100_000)])
    A, B = 6, 194
    mean = A / (A + B)
    se = math.sqrt(A * B / ((A + B) ** 2 * (A + B + 1)) / draws.size)
    assert abs(draws.mean() - mean) < 3 * se


def _cat_state(beta=0.1):
    # one categorical field, alpha(x) = 0.5
    schema = Schema((FieldSpec("g", "categorical"),))
    ds = intern_dataset([{"g": "x"}, {"g": "y"}], schema)
    hp = Hyperparams(n_pop=2)
    st = LatentState(np.array([0, 1]), np.array([[0], [1]]), np.zeros((2, 1), dtype=np.int8), np.full((1, 1), beta))
    return ds, hp, build_field_tables(ds, hp), st


def test_z_examples():
    ds, hp, tables, st = _cat_state(0.1)
    pz = z_conditional(st, ds, tables)
    assert pz[0, 0] == pytest.approx(0.05 / 0.95, abs=1e-15)
    st.y[0, 0] = 1
    st.z[0, 0] = 1
    assert z_conditional(st, ds, tables)[0, 0] == 1.0
    st.y[0, 0] = 0
    st.beta[:] = 1e-300
    assert z_conditional(st, ds, tables)[0, 0] < 1e-290


def test_y_examples():
    ds, hp = tiny_dataset()
    tables = build_field_tables(ds, hp)
    st = init_state(ds, tables, hp, 0)  # one record per latent, all z = 0
    tab = y_conditional(st, ds, tables)
    for v in range(4):
        assert tab[0][v, ds.records[v, 0]] == 1.0
    # empty latent draws from alpha
    st.lam[:] = 0
    st.y[0] = ds.records[0]
    st.z[:] = (ds.records != st.y[0]).astype(np.int8)
    tab = y_conditional(st, ds, tables)
    assert np.array_equal(tab[0][1], tables.alpha[0])
    # categorical latent whose records are all distorted draws from alpha
    ds2, hp2 = mixed_dataset()
    t2 = build_field_tables(ds2, hp2)
    st2 = LatentState(np.array([0, 0, 1, 2]), np.array([[0, 0], [1, 0], [0, 0]]), np.zeros((4, 2), dtype=np.int8),
                      np.full((2, 2), 0.2))
    st2.z[0, 1] = st2.z[1, 1] = 1
    assert np.array_equal(y_conditional(st2, ds2, t2)[1][0], t2.alpha[1])


def test_lambda_examples():
    ds, hp, tables, st = _cat_state()
    st.z[:] = 1
    assert np.allclose(lambda_conditional(st, ds, tables), 0.5, rtol=0, atol=1e-15)
    st.z[:] = 0
    lc = lambda_conditional(st, ds, tables)
    assert lc[0].tolist() == [1.0, 0.0]


def test_lambda_string_odds_ratio():
    schema = Schema((FieldSpec("s", "string"),))
    ds = intern_dataset([{"s": v} for v in ["abcd", "abce", "abzz", "wxyz"]], schema)
    hp = Hyperparams(n_pop=2, c=0.8)
    tables = build_field_tables(ds, hp)
    st = LatentState(np.array([0, 1, 0, 1]), np.array([[1], [2]]), np.ones((4, 1), dtype=np.int8), np.full((1, 1), 0.5))
    lc = lambda_conditional(st, ds, tables)
    h, d = tables.h[0], tables.dist[0]
    want = h[1] * math.exp(-0.8 * d[0, 1]) / (h[2] * math.exp(-0.8 * d[0, 2]))
    assert lc[0, 0] / lc[0, 1] == pytest.approx(want, rel=1e-12)


def test_pair_lambda_ratio():
    ds, hp = categorical_pair()
    tables = build_field_tables(ds, hp)
    st = LatentState(np.array([0, 1]), np.array([[0], [1]]), np.array([[0], [1]], dtype=np.int8), np.full((1, 1), 0.25))
    tab = enumerate_posterior(ds, hp, beta=st.beta)
    want = oracle.lambda_table(tab, st)[1]
    got = lambda_conditional(st, ds, tables)[1]
    assert np.allclose(got, want, rtol=0, atol=1e-12)
    assert got[0] == pytest.approx(0.5)  # z = 1 on a categorical field carries no information


def test_lambda_sampling_frequencies():
    ds, hp = tiny_dataset()
    tables = build_field_tables(ds, hp)
    st = chain_states(ds, hp, tables, 1)[0]
    st.z[0] = 1
    probs = lambda_conditional(st, ds, tables)[0]
    counts = np.zeros(4)
    for k in range(20_000):
        s = st.copy()
        sample_lambda(s, ds, tables, hp, np.random.default_rng(k))
        counts[s.lam[0]] += 1
    freq = counts / counts.sum()
    se = np.sqrt(probs * (1 - probs) / counts.sum())
    assert np.all(np.abs(freq - probs) <= 4 * se + 1e-12)


def test_init_state():
    ds, hp = tiny_dataset()
    tables = build_field_tables(ds, hp)
    st = init_state(ds, tables, hp, 0)
    assert st.lam.tolist() == [0, 1, 2, 3]
    small = Hyperparams(a=1, b=3, n_pop=2)
    st2 = init_state(ds, build_field_tables(ds, small), small, 0)
    assert np.bincount(st2.lam).max() >= 2
    assert validate_state(st2, ds, small) is None


def test_run_determinism_and_identities():
    ds, hp = mixed_dataset()
    tables = build_field_tables(ds, hp)
    a = run_sampler(ds, tables, hp, SamplerConfig(300, seed=9))
    b = run_sampler(ds, tables, hp, SamplerConfig(300, seed=9))
    assert a == b
    c = run_sampler(ds, tables, hp, SamplerConfig(300, seed=10))
    assert not np.array_equal(a.lambda_snapshots, c.lambda_snapshots)
    m = np.arange(1, a.multiplicity_counts.shape[1] + 1)
    assert np.all(a.multiplicity_counts @ m == ds.n_records)
    assert np.all((a.n_distinct >= 1) & (a.n_distinct <= min(ds.n_records, 3)))
    assert np.array_equal(a.multiplicity_counts.sum(axis=1), a.n_distinct)


def test_thinning():
    ds, hp = mixed_dataset()
    tables = build_field_tables(ds, hp)
    full = run_sampler(ds, tables, hp, SamplerConfig(100, seed=2))
    thin = run_sampler(ds, tables, hp, SamplerConfig(100, seed=2, thin=10))
    assert thin.lambda_snapshots.shape == (10, 4)
    assert np.array_equal(thin.lambda_snapshots, full.lambda_snapshots[9::10])


def test_block_streams_are_distinct():
    x = block_rng(0, 3, BLOCK_LAMBDA).random(4)
    assert np.array_equal(x, block_rng(0, 3, BLOCK_LAMBDA).random(4))
    assert not np.array_equal(x, block_rng(0, 4, BLOCK_LAMBDA).random(4))
    assert not np.array_equal(x, block_rng(1, 3, BLOCK_LAMBDA).random(4))


def test_off_support_state_raises():
    ds, hp = tiny_dataset()
    tables = build_field_tables(ds, hp)
    st = init_state(ds, tables, hp, 0)
    st.lam[1] = 0  # records 0 and 1 disagree on the name, both undistorted
    with pytest.raises(SamplerInvariantError):
        sample_y(st, ds, tables, np.random.default_rng(0))


def test_multiplicity_beyond_width():
    log = SampleLog(np.zeros((1, 2), dtype=np.int32), np.array([1]), np.array([[0, 1]], dtype=np.int32))
    assert log.multiplicity(5).tolist() == [0]
    with pytest.raises(ValueError):
        log.multiplicity(0)


def test_sample_z_forces_mismatch():
    ds, hp, tables, st = _cat_state(0.1)
    st.y[0, 0] = 1
    st.z[0, 0] = 1
    for k in range(20):
        sample_z(st, ds, tables, np.random.default_rng(k))
        assert st.z[0, 0] == 1
