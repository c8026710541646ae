import numpy as np
import pytest

from wpcn.allocator import allocate_epoch, epoch_lagrangian
from wpcn.channel import ChannelState, NetworkConfig
from wpcn.oracle import GridSpec, grid_search_epoch, verify_concavity_samples
from wpcn.verification import random_instance


def test_gridspec_minimum_counts():
    with pytest.raises(ValueError):
        GridSpec(n_tau0=49)
    GridSpec(n_tau0=60, n_simplex=50, n_e=50)


def test_single_user_zero_price_uses_peak_power():
    cfg = NetworkConfig(distances=(10.0,), p_c=0.0)
    ch = ChannelState.from_gains([1e6], cfg)
    g = grid_search_epoch(ch, cfg, 0.0)
    assert g.e_share == pytest.approx(1.0, abs=1e-12)
    assert g.cells_off_peak() <= 1.0
    alloc, _ = allocate_epoch(ch, cfg, 0.0)
    L = epoch_lagrangian(alloc.tau_0, alloc.tau, alloc.e, ch, cfg, 0.0)
    assert abs(g.objective - L) <= 1e-4 * L


def test_symmetric_maximiser():
    cfg = NetworkConfig(distances=(10.0, 10.0), p_c=1e-5)
    ch = ChannelState.from_gains([8e5, 8e5], cfg)
    g = grid_search_epoch(ch, cfg, 0.02)
    # the split axis is a logit axis, so log(tau_1 / tau_2) is in its units
    assert abs(np.log(g.tau[0] / g.tau[1])) <= g.resolution[2]


def test_silent_instance_returns_zero():
    cfg = NetworkConfig(distances=(10.0, 12.0))
    ch = ChannelState.from_gains([1e6, 5e5], cfg)
    g = grid_search_epoch(ch, cfg, 10.0 * ch.a.sum())
    assert g.objective == 0.0 and g.e == 0.0


def test_variants_agree_and_rejects_bad_input():
    rng = np.random.default_rng(12)
    for _ in range(4):
        ch, cfg, lam, Rbar = random_instance(rng)
        r = grid_search_epoch(ch, cfg, lam, Rbar, variant="restricted")
        z = grid_search_epoch(ch, cfg, lam, Rbar, variant="zero_rate")
        assert z.objective >= r.objective
        assert abs(z.objective - r.objective) <= 1e-4 * abs(r.objective)
    with pytest.raises(ValueError):
        grid_search_epoch(ch, cfg, lam, Rbar, variant="other")
    big = NetworkConfig()
    with pytest.raises(ValueError):
        grid_search_epoch(ChannelState.from_gains(np.ones(5) * 1e5, big), big, 0.1)


def test_oracle_agrees_on_random_instances():
    rng = np.random.default_rng(5)
    for _ in range(8):
        ch, cfg, lam, Rbar = random_instance(rng)
        alloc, _ = allocate_epoch(ch, cfg, lam, Rbar)
        L = epoch_lagrangian(alloc.tau_0, alloc.tau, alloc.e, ch, cfg, lam, Rbar)
        g = grid_search_epoch(ch, cfg, lam, Rbar)
        assert abs(g.objective - L) <= 1e-4 * abs(L)
        assert g.cells_off_peak() <= 1.0


@pytest.mark.parametrize("p_c", [0.0, 1e-5])
def test_concavity_audit(p_c):
    cfg = NetworkConfig(distances=(10.0, 13.0, 16.0), p_c=p_c)
    ch = ChannelState.from_gains([9e5, 4e5, 2e5], cfg)
    rep = verify_concavity_samples(ch, cfg, 0.05, [0.5, 1.0, 2.0], n=10_000, rng=1)
    assert rep.n_pairs == 10_000 and rep.violations == 0


def test_concavity_equal_points_give_zero_gap():
    cfg = NetworkConfig(distances=(10.0,))
    ch = ChannelState.from_gains([1e6], cfg)
    e, tau = 1.0, np.array([0.4])
    f = epoch_lagrangian(0.6, tau, e, ch, cfg, 0.1)
    mid = epoch_lagrangian(0.6, (tau + tau) / 2, (e + e) / 2, ch, cfg, 0.1)
    assert mid == f


def test_concavity_audit_needs_positive_gains():
    cfg = NetworkConfig(distances=(10.0, 12.0))
    ch = ChannelState.from_gains([1e6, 0.0], cfg)
    with pytest.raises(ValueError):
        verify_concavity_samples(ch, cfg, 0.1)
