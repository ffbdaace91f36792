import numpy as np
import pytest
from scipy.special import betaln

from ebrl.exact import InstanceTooLarge, count_configurations, enumerate_posterior
from ebrl.gibbs import init_state, sweep
from ebrl.model import log_joint_posterior
from ebrl.strdist import build_field_tables

from conftest import categorical_pair, mixed_dataset


def test_table_normalized_and_support():
    ds, hp = mixed_dataset()
    tab = enumerate_posterior(ds, hp)
    assert tab.prob.sum() == pytest.approx(1.0, abs=1e-12)
    assert tab.prob.shape == (3**4, 4**3, 2**8)
    # z = 0 everywhere forces every record to equal its latent
    z0 = tab.z_index(np.zeros((4, 2), dtype=int))
    lam = np.array([0, 1, 2, 0])
    y = np.array([[0, 0], [0, 1], [0, 0]])  # record 2 ("bob") disagrees with latent 2
    assert tab.prob[tab.lam_index(lam), tab.y_index(y), z0] == 0.0


def test_matches_log_joint_with_fixed_beta():
    ds, hp = mixed_dataset()
    tables = build_field_tables(ds, hp)
    beta = np.array([[0.2, 0.4], [0.1, 0.3]])
    tab = enumerate_posterior(ds, hp, beta=beta)
    st = init_state(ds, tables, hp, 0)
    seen = 0
    for s in range(60):
        sweep(st, ds, tables, hp, 0, s)
        st.beta[...] = beta
        a, b, c = tab.lam_index(st.lam), tab.y_index(st.y), tab.z_index(st.z)
        # the two agree up to one additive constant
        want = log_joint_posterior(st, ds, tables, hp)
        got = tab.logw[a, b, c]
        if seen == 0:
            offset = got - want
        assert got - want == pytest.approx(offset, abs=1e-9)
        seen += 1


def test_beta_integrated_out():
    ds, hp = categorical_pair()
    tab = enumerate_posterior(ds, hp)
    # lam = (0, 0), y = (x, x), z = (0, 1): alpha(x)^2 alpha(y)*... by hand
    lam = np.array([0, 0])
    y = np.array([[0], [0]])
    z = np.array([[0], [1]])
    got = tab.logw[tab.lam_index(lam), tab.y_index(y), tab.z_index(z)]
    log_half = np.log(0.5)
    want = log_half * 2 + log_half + betaln(1 + hp.a, 1 + hp.b)
    assert got == pytest.approx(want, abs=1e-12)


def test_size_guard():
    ds, hp = mixed_dataset()
    assert count_configurations(ds, hp) == 3**4 * 4**3 * 2**8
    with pytest.raises(InstanceTooLarge):
        enumerate_posterior(ds, hp, max_configs=1000)
