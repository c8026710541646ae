import numpy as np
import pytest

from wpcn.channel import (
    DEFAULT_DISTANCES,
    ChannelState,
    NetworkConfig,
    load_trace_csv,
    mean_gain,
    sample_epoch,
    sample_trace,
    save_trace_csv,
)


def test_mean_gain_examples():
    cfg = NetworkConfig(distances=(10.0, 1.0, 18.8))
    assert mean_gain(cfg, 0) == pytest.approx(1e6, rel=1e-12)
    assert mean_gain(cfg, 1) == pytest.approx(1e9, rel=1e-12)
    assert mean_gain(cfg, 2) == pytest.approx(1e9 / 18.8**3, rel=1e-12)
    assert mean_gain(cfg, 2) == pytest.approx(1.505e5, rel=1e-3)


@pytest.mark.parametrize(
    "field,value",
    [("eta", 0.0), ("eta", 1.5), ("p_c", -1e-6), ("P_avg", 6.0), ("P_avg", 0.0),
     ("N_0", 0.0), ("T", -1.0), ("distances", (10.0, -1.0)), ("distances", ()),
     ("alpha", 0.0), ("ref_loss", 0.0)],
)
def test_config_validation_names_field(field, value):
    with pytest.raises(ValueError, match=("K" if value == () else field)):
        NetworkConfig(**{field: value})


def test_config_eta_broadcast_and_replace():
    cfg = NetworkConfig(distances=(10, 12), eta=0.3)
    assert cfg.eta == (0.3, 0.3) and cfg.K == 2
    cfg5 = cfg.replace(distances=DEFAULT_DISTANCES)
    assert cfg5.eta == (0.3,) * 5
    with pytest.raises(ValueError):
        NetworkConfig(distances=(10, 12), eta=(0.5, 0.5, 0.5))


def test_channel_state_derived_coefficients():
    cfg = NetworkConfig(distances=(10.0, 12.0), eta=(0.5, 0.25))
    ch = ChannelState.from_gains([2e6, 3e5], cfg, epoch_index=4)
    np.testing.assert_array_equal(ch.a, np.array([0.5, 0.25]) * 1e-12 * np.array([2e6, 3e5]) ** 2)
    assert ch.epoch_index == 4
    with pytest.raises(ValueError):
        ChannelState.from_gains([-1.0, 1.0], cfg)
    with pytest.raises(ValueError):
        ChannelState.from_gains([1.0], cfg)


def test_sample_epoch_deterministic_and_matches_trace():
    cfg = NetworkConfig()
    a = sample_epoch(42, cfg, 17)
    b = sample_epoch(42, cfg, 17)
    np.testing.assert_array_equal(a.x, b.x)
    tr = sample_trace(42, cfg, 40)
    for i in (0, 17, 39):
        np.testing.assert_array_equal(sample_epoch(42, cfg, i).x, tr[i])
    np.testing.assert_array_equal(sample_trace(42, cfg, 10, start=30), tr[30:])
    assert not np.array_equal(sample_trace(43, cfg, 40), tr)


@pytest.mark.parametrize("K", [1, 3, 4, 5, 7])
def test_trace_offsets_for_any_K(K):
    cfg = NetworkConfig(distances=(10.0,) * K)
    tr = sample_trace(3, cfg, 9)
    np.testing.assert_array_equal(sample_epoch(3, cfg, 8).x, tr[8])


def test_exponential_law_and_independence():
    cfg = NetworkConfig()
    x = sample_trace(7, cfg, 200_000)
    omega = mean_gain(cfg)
    np.testing.assert_allclose(x.mean(axis=0), omega, rtol=0.01)
    np.testing.assert_allclose(x.var(axis=0), omega**2, rtol=0.03)
    corr = np.corrcoef(x.T)
    assert np.abs(corr[~np.eye(cfg.K, dtype=bool)]).max() < 0.01
    lag = [np.corrcoef(x[:-1, k], x[1:, k])[0, 1] for k in range(cfg.K)]
    assert max(abs(v) for v in lag) < 0.01


def test_million_sample_mean_at_ten_metres():
    cfg = NetworkConfig(distances=(10.0,))
    x = sample_trace(11, cfg, 1_000_000)
    assert x.mean() == pytest.approx(1e6, rel=0.01)


def test_means_ordered_by_distance():
    cfg = NetworkConfig()
    x = sample_trace(5, cfg, 100_000)
    assert x.shape == (100_000, 5)
    assert np.all(np.diff(x.mean(axis=0)) < 0)


def test_trace_csv_round_trip(tmp_path):
    cfg = NetworkConfig()
    tr = sample_trace(1, cfg, 25, start=5)
    path = tmp_path / "trace.csv"
    save_trace_csv(path, tr, start=5)
    header = path.read_text().splitlines()[0]
    assert header == "epoch,x_1,x_2,x_3,x_4,x_5"
    epochs, x = load_trace_csv(path)
    np.testing.assert_array_equal(epochs, np.arange(5, 30))
    np.testing.assert_array_equal(x, tr)


def test_trace_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,x_1\n0,1.0\n")
    with pytest.raises(ValueError):
        load_trace_csv(path)
