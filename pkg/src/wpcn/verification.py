"""Self-checks of the numerical core, run by ``wpcn oracle``.

Each check draws its own random instances from a fixed seed and returns a
:class:`CheckResult`; :func:`run_suite` runs them all.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .allocator import (
    allocate_epoch,
    allocate_epoch_maxsum,
    beta_function,
    epoch_lagrangian,
    solve_z,
    verify_kkt,
)
from .channel import DEFAULT_DISTANCES, ChannelState, NetworkConfig, mean_gain, sample_trace
from .oracle import grid_search_epoch, verify_concavity_samples
from .special_functions import INV_E, lambert_w0

__all__ = [
    "CheckResult",
    "price_threshold",
    "random_instance",
    "check_lambert_w",
    "check_z_equation",
    "check_kkt",
    "check_oracle",
    "check_maxsum_identity",
    "check_concavity",
    "run_suite",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.2f} s)"


def price_threshold(channel: ChannelState, config: NetworkConfig, Rbar=None) -> float:
    """Smallest price at which the BS stays silent in this epoch."""
    Rbar = np.ones(config.K) if Rbar is None else np.asarray(Rbar, dtype=float)
    return beta_function(channel.a, config.p_c * channel.x, Rbar, 0.0, config.P_max)(0.0)


def random_instance(rng, K_choices=(1, 2, 3), p_c_choices=(0.0, 1e-5, 1e-4)):
    """A random epoch with a price one to two decades below its threshold.

    Distances are uniform in ``[8, 20]`` m and the weights ``Rbar`` uniform
    in ``[0.5, 2]``, so every instance transmits.

    Returns
    -------
    (ChannelState, NetworkConfig, lam, Rbar)
    """
    K = int(rng.choice(K_choices))
    p_c = float(rng.choice(p_c_choices))
    cfg = NetworkConfig(distances=tuple(rng.uniform(8.0, 20.0, K)), p_c=p_c)
    ch = ChannelState.from_gains(rng.exponential(mean_gain(cfg)), cfg)
    Rbar = rng.uniform(0.5, 2.0, K)
    lam = price_threshold(ch, cfg, Rbar) * 10.0 ** rng.uniform(-2.0, 0.0)
    return ch, cfg, lam, Rbar


def _timed(name, fn):
    t = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t)


def check_lambert_w(n: int = 10_000, seed: int = 0) -> CheckResult:
    """Residual of ``W0`` on log-spread points in ``[-1/e, 1e6]``."""

    def body():
        rng = np.random.default_rng(seed)
        neg = -INV_E * rng.uniform(0.0, 1.0, n // 2)
        pos = 10.0 ** rng.uniform(-12.0, 6.0, n - n // 2)
        x = np.concatenate([[-INV_E, 0.0], neg, pos])
        w = lambert_w0(x)
        res = np.abs(w * np.exp(w) - x) / np.maximum(1.0, np.abs(x))
        exact = lambert_w0(-INV_E) == -1.0 and lambert_w0(0.0) == 0.0
        worst = float(res.max())
        return worst <= 1e-12 and exact, f"max scaled residual {worst:.2e}"

    return _timed("lambert_w0", body)


def check_z_equation(n: int = 10_000, seed: int = 0) -> CheckResult:
    """``ln(1-c+z) - z/(1-c+z) = b`` and ``z > c`` for ``(c, b)`` in ``[0,5] x [0,10]``."""

    def body():
        rng = np.random.default_rng(seed)
        worst, bad = 0.0, 0
        for c, b in zip(rng.uniform(0, 5, n), rng.uniform(0, 10, n)):
            z = solve_z(c, b)
            u = 1.0 - c + z
            worst = max(worst, abs(math.log(u) - z / u - b))
            bad += not z > c
        return worst <= 1e-9 and bad == 0, f"max residual {worst:.2e}, z <= c in {bad} cases"

    return _timed("z equation", body)


def check_kkt(n: int = 1000, seed: int = 0) -> CheckResult:
    """KKT residuals of transmitting epochs with five users."""

    def body():
        rng = np.random.default_rng(seed)
        cfg = NetworkConfig(distances=DEFAULT_DISTANCES, p_c=1e-5)
        xs = sample_trace(seed, cfg, n)
        worst = 0.0
        for i in range(n):
            cfg_i = cfg.replace(p_c=float(rng.choice([0.0, 1e-5, 5e-5])))
            ch = ChannelState.from_gains(xs[i], cfg_i, i)
            Rbar = rng.uniform(0.05, 2.0, cfg.K)
            lam = price_threshold(ch, cfg_i, Rbar) * 10.0 ** rng.uniform(-2.0, -1e-3)
            alloc, ws = allocate_epoch(ch, cfg_i, lam, Rbar)
            if not alloc.transmit:
                return False, f"epoch {i} did not transmit"
            worst = max(worst, verify_kkt(alloc, ws, ch, cfg_i).max_residual)
        return worst <= 1e-8, f"max residual {worst:.2e} over {n} epochs"

    return _timed("KKT residuals", body)


def check_oracle(n: int = 100, seed: int = 0, variants=("restricted", "zero_rate")) -> CheckResult:
    """Closed form against the grid search; the variants must agree."""

    def body():
        rng = np.random.default_rng(seed)
        worst_gap, worst_dev, worst_interior, disagree = 0.0, 0.0, 0.0, 0
        for _ in range(n):
            ch, cfg, lam, Rbar = random_instance(rng)
            alloc, _ = allocate_epoch(ch, cfg, lam, Rbar)
            L = epoch_lagrangian(alloc.tau_0, alloc.tau, alloc.e, ch, cfg, lam, Rbar)
            best = None
            for variant in variants:
                g = grid_search_epoch(ch, cfg, lam, Rbar, variant=variant)
                scale = max(abs(L), 1e-300)
                worst_gap = max(worst_gap, (g.objective - L) / scale)
                worst_dev = max(worst_dev, abs(g.objective - L) / scale)
                if best is not None and abs(g.objective - best) > 1e-4 * abs(L):
                    disagree += 1
                best = g.objective
                if g.e > 0:
                    worst_interior = max(worst_interior, g.cells_off_peak())
        ok = worst_dev <= 1e-4 and worst_interior <= 1.0 and disagree == 0
        return ok, (f"max relative deviation {worst_dev:.2e} (grid above closed form by at "
                    f"most {worst_gap:.2e}), e off the boundary by "
                    f"{worst_interior:.2f} cells, variant disagreements {disagree}")

    return _timed("grid oracle", body)


def check_maxsum_identity(n: int = 10_000, seed: int = 0) -> CheckResult:
    """Unit weights reproduce the sum-rate allocator bit for bit."""

    def body():
        rng = np.random.default_rng(seed)
        cfg = NetworkConfig(distances=DEFAULT_DISTANCES, p_c=1e-5)
        xs = sample_trace(seed, cfg, n)
        lams = 10.0 ** rng.uniform(-3.0, 0.0, n)
        mismatches = 0
        for i in range(n):
            ch = ChannelState.from_gains(xs[i], cfg, i)
            a1, _ = allocate_epoch(ch, cfg, lams[i], np.ones(cfg.K))
            a2, _ = allocate_epoch_maxsum(ch, cfg, lams[i])
            same = (a1.p_0 == a2.p_0 and a1.tau_0 == a2.tau_0
                    and np.array_equal(a1.tau, a2.tau) and np.array_equal(a1.r, a2.r))
            mismatches += not same
        return mismatches == 0, f"{mismatches} mismatches over {n} epochs"

    return _timed("sum-rate identity", body)


def check_concavity(n_instances: int = 20, n_pairs: int = 10_000, seed: int = 0) -> CheckResult:
    """Midpoint-concavity audit of the per-epoch Lagrangian."""

    def body():
        rng = np.random.default_rng(seed)
        violations, worst = 0, math.inf
        for _ in range(n_instances):
            ch, cfg, lam, Rbar = random_instance(rng)
            rep = verify_concavity_samples(ch, cfg, lam, Rbar, n=n_pairs, rng=rng)
            violations += rep.violations
            worst = min(worst, rep.worst_gap)
        return violations == 0, f"{violations} violations, smallest midpoint gap {worst:.2e}"

    return _timed("concavity", body)


def run_suite(quick: bool = False, seed: int = 0) -> list:
    """Run every check; ``quick`` shrinks the sample sizes about tenfold."""
    scale = 10 if quick else 1
    return [
        check_lambert_w(10_000, seed),
        check_z_equation(10_000, seed),
        check_kkt(1000 // scale, seed),
        check_oracle(100 // scale, seed),
        check_maxsum_identity(10_000 // scale, seed),
        check_concavity(20 // scale, 10_000, seed),
    ]
