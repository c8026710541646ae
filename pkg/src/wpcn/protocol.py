"""Online proportional-fair and sum-rate protocols over a fading trace.

Every epoch the BS allocates with its current price estimate ``lambda_hat``
and rate normalisers ``Rbar_hat``, then

* moves ``lambda_hat`` along the running violation of the average-power
  budget, ``(1/i) * sum_{n<=i} p_0(n) tau_0(n) - P_avg``, projected to be
  nonnegative, and
* (proportional-fair mode only) updates ``Rbar_hat`` as the running mean of
  the delivered rates over the whole elapsed session.

Sum-rate mode keeps ``Rbar_hat = 1``.  The first epoch of a PF run always
transmits (allocated with ``lambda = 0`` and unit weights) and seeds
``Rbar_hat`` with its rates, floored at ``RBAR_FLOOR``.
"""

import csv
import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np
from numba import njit

from .allocator import BETA_TOL, EpochAllocation, account_kernel, allocate_kernel
from .channel import ChannelState, NetworkConfig, sample_trace

__all__ = [
    "Mode",
    "RBAR_FLOOR",
    "DEFAULT_GAMMA",
    "ProtocolState",
    "SimulationResult",
    "default_gamma",
    "jain_index",
    "step",
    "run",
    "run_stream",
    "run_fixed_lambda",
    "mean_spend",
    "calibrate_lambda_offline",
    "compute_metrics",
    "write_summary_csv",
    "SUMMARY_FIELDS",
]

RBAR_FLOOR = 1e-6
# dimensionless step; the per-run step is DEFAULT_GAMMA / P_avg**2
DEFAULT_GAMMA = 1e-3

SUMMARY_FIELDS = ["mode", "K", "p_c", "P_avg", "M", "seed", "sum_rate", "jain", "avg_bs_power"]


class Mode(str, enum.Enum):
    PF = "pf"
    MAXSUM = "maxsum"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("-", "").replace("_", "")
        aliases = {"pf": cls.PF, "proportionalfair": cls.PF, "maxsum": cls.MAXSUM,
                   "maxsumrate": cls.MAXSUM, "sumrate": cls.MAXSUM}
        if v not in aliases:
            raise ValueError(f"unknown mode {value!r}")
        return aliases[v]


def default_gamma(config: NetworkConfig) -> float:
    """Step size ``DEFAULT_GAMMA / P_avg**2``.

    The price scales like ``1 / P_avg`` and the power error like ``P_avg``,
    so this keeps the relative price move per unit relative error fixed.
    """
    return DEFAULT_GAMMA / config.P_avg**2


@dataclass
class ProtocolState:
    lambda_hat: float
    Rbar_hat: np.ndarray
    energy_sum: float
    # completed epochs; the next epoch has 1-based index ``epoch + 1``
    epoch: int
    gamma_0: float
    mode: Mode

    @classmethod
    def initial(cls, config: NetworkConfig, mode=Mode.PF, gamma_0: Optional[float] = None,
                lambda_0: float = 0.0) -> "ProtocolState":
        gamma_0 = default_gamma(config) if gamma_0 is None else float(gamma_0)
        return cls(float(lambda_0), np.ones(config.K), 0.0, 0, gamma_0, Mode.parse(mode))


@njit(cache=True)
def _protocol_epoch(x, eta, N_0, p_c, P_max, P_avg, T, gamma0, pf, i, lam, esum, Rbar,
                    tol, tau, z, c, E, P, pT, r):
    """One online epoch with 1-based index ``i``; updates ``Rbar`` in place.

    Returns ``(transmit, tau0, beta, cond, lam_next, esum_next)``.
    """
    K = x.size
    if pf and i == 1:
        ones = np.ones(K)
        transmit, tau0, beta, cond = allocate_kernel(x, eta, N_0, p_c, P_max, 0.0, ones, tol, tau, z, c)
    else:
        transmit, tau0, beta, cond = allocate_kernel(x, eta, N_0, p_c, P_max, lam, Rbar, tol, tau, z, c)
    p0 = P_max if transmit else 0.0
    account_kernel(x, eta, N_0, p_c, T, p0, tau0, tau, E, P, pT, r)
    esum_next = esum + p0 * tau0
    lam_next = lam + gamma0 * (esum_next / i - P_avg)
    if lam_next < 0.0:
        lam_next = 0.0
    if pf:
        if i == 1:
            for k in range(K):
                Rbar[k] = max(r[k], 1e-6)
        else:
            for k in range(K):
                Rbar[k] = (i - 1.0) / i * Rbar[k] + r[k] / i
    return transmit, tau0, beta, cond, lam_next, esum_next


@njit(cache=True)
def _run_online(xs, eta, N_0, p_c, P_max, P_avg, T, gamma0, pf, lam0, tol,
                out_p0, out_tau0, out_tau, out_r, out_lam):
    M, K = xs.shape
    Rbar = np.ones(K)
    lam = lam0
    esum = 0.0
    tau = np.empty(K)
    z = np.empty(K)
    c = np.empty(K)
    E = np.empty(K)
    P = np.empty(K)
    pT = np.empty(K)
    r = np.empty(K)
    for n in range(M):
        out_lam[n] = lam
        transmit, tau0, beta, cond, lam, esum = _protocol_epoch(
            xs[n], eta, N_0, p_c, P_max, P_avg, T, gamma0, pf, n + 1, lam, esum, Rbar,
            tol, tau, z, c, E, P, pT, r)
        out_p0[n] = P_max if transmit else 0.0
        out_tau0[n] = tau0
        out_tau[n, :] = tau
        out_r[n, :] = r
    return lam, esum, Rbar


@njit(cache=True)
def _run_fixed(xs, eta, N_0, p_c, P_max, T, lam, Rbar, tol, out_p0, out_tau0, out_tau, out_r):
    M, K = xs.shape
    tau = np.empty(K)
    z = np.empty(K)
    c = np.empty(K)
    E = np.empty(K)
    P = np.empty(K)
    pT = np.empty(K)
    r = np.empty(K)
    for n in range(M):
        transmit, tau0, beta, cond = allocate_kernel(xs[n], eta, N_0, p_c, P_max, lam, Rbar, tol, tau, z, c)
        p0 = P_max if transmit else 0.0
        account_kernel(xs[n], eta, N_0, p_c, T, p0, tau0, tau, E, P, pT, r)
        out_p0[n] = p0
        out_tau0[n] = tau0
        out_tau[n, :] = tau
        out_r[n, :] = r


@njit(cache=True)
def _mean_spend(xs, eta, N_0, p_c, P_max, lam, Rbar, tol):
    M, K = xs.shape
    tau = np.empty(K)
    z = np.empty(K)
    c = np.empty(K)
    total = 0.0
    for n in range(M):
        transmit, tau0, beta, cond = allocate_kernel(xs[n], eta, N_0, p_c, P_max, lam, Rbar, tol, tau, z, c)
        if transmit:
            total += P_max * tau0
    return total / M


@njit(cache=True)
def _max_threshold(xs, eta, N_0, p_c, P_max, Rbar, tol):
    """Largest switching value over the trace; any price above it silences every epoch."""
    M, K = xs.shape
    tau = np.empty(K)
    z = np.empty(K)
    c = np.empty(K)
    best = 0.0
    for n in range(M):
        transmit, tau0, beta, cond = allocate_kernel(xs[n], eta, N_0, p_c, P_max, 0.0, Rbar, tol, tau, z, c)
        if cond > best:
            best = cond
    return best


def jain_index(rates) -> tuple:
    """Jain's fairness index of per-user average rates.

    Returns ``(J, degenerate)``; all-zero rates give ``(0.0, True)``.
    """
    rates = np.asarray(rates, dtype=float)
    sq = float(np.sum(rates**2))
    if sq == 0.0:
        return 0.0, True
    return float(np.sum(rates) ** 2 / (rates.size * sq)), False


@dataclass
class SimulationResult:
    """Per-epoch trace of a run plus its aggregates.

    ``lambda_hat[n]`` is the price the BS used when deciding epoch ``n``.
    """

    config: NetworkConfig
    mode: Mode
    seed: Optional[int]
    p0: np.ndarray
    tau0: np.ndarray
    tau: np.ndarray
    r: np.ndarray
    lambda_hat: np.ndarray
    final_state: Optional[ProtocolState] = None
    rates: np.ndarray = field(init=False)
    sum_rate: float = field(init=False)
    jain: float = field(init=False)
    jain_degenerate: bool = field(init=False)
    avg_bs_power: float = field(init=False)

    def __post_init__(self):
        self.rates = self.r.mean(axis=0)
        self.sum_rate = float(self.r.sum(axis=1).mean())
        self.jain, self.jain_degenerate = jain_index(self.rates)
        self.avg_bs_power = float(np.mean(self.p0 * self.tau0))

    @property
    def M(self) -> int:
        return len(self.p0)

    @property
    def K(self) -> int:
        return self.r.shape[1]

    def summary_row(self) -> dict:
        return {
            "mode": self.mode.value,
            "K": self.K,
            "p_c": self.config.p_c,
            "P_avg": self.config.P_avg,
            "M": self.M,
            "seed": self.seed,
            "sum_rate": self.sum_rate,
            "jain": self.jain,
            "avg_bs_power": self.avg_bs_power,
        }

    def write_trace_csv(self, path):
        """``epoch,p0,tau0,tau_1..tau_K,r_1..r_K,lambda_hat``, 1-based epochs."""
        K = self.K
        header = (["epoch", "p0", "tau0"] + [f"tau_{k + 1}" for k in range(K)]
                  + [f"r_{k + 1}" for k in range(K)] + ["lambda_hat"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for n in range(self.M):
                row = [self.p0[n], self.tau0[n], *self.tau[n], *self.r[n], self.lambda_hat[n]]
                w.writerow([n + 1] + [f"{v:.17g}" for v in row])


def compute_metrics(result: SimulationResult) -> tuple:
    """``(sum_rate, jain)`` recomputed from the raw per-epoch rates."""
    rates = result.r.mean(axis=0)
    return float(rates.sum()), jain_index(rates)[0]


def write_summary_csv(path, results: Iterable[SimulationResult]):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        for res in results:
            w.writerow(res.summary_row())


def _trace_for(config, M, seed, trace):
    if trace is None:
        if seed is None:
            raise ValueError("either seed or trace is required")
        return sample_trace(seed, config, M)
    xs = np.ascontiguousarray(trace, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != config.K:
        raise ValueError(f"trace must have shape (M, {config.K})")
    return xs


def step(state: ProtocolState, channel: ChannelState, config: NetworkConfig, tol: float = BETA_TOL):
    """Advance the online protocol by one epoch.

    Returns the epoch's :class:`EpochAllocation` and the next state; the
    input state is left untouched.
    """
    K = config.K
    x = np.asarray(channel.x, dtype=float)
    Rbar = state.Rbar_hat.astype(float).copy()
    tau, z, c, E, P, pT, r = (np.empty(K) for _ in range(7))
    i = state.epoch + 1
    transmit, tau0, beta, cond, lam_next, esum_next = _protocol_epoch(
        x, config.eta_array, config.N_0, config.p_c, config.P_max, config.P_avg, config.T,
        state.gamma_0, state.mode is Mode.PF, i, state.lambda_hat, state.energy_sum, Rbar,
        tol, tau, z, c, E, P, pT, r)
    p0 = config.P_max if transmit else 0.0
    alloc = EpochAllocation(p_0=p0, tau_0=tau0, tau=tau, e=p0 * tau0, E=E, P=P, p_T=pT, r=r)
    nxt = replace(state, lambda_hat=lam_next, Rbar_hat=Rbar, energy_sum=esum_next, epoch=i)
    return alloc, nxt


def run(config: NetworkConfig, M: int, seed: Optional[int] = None, mode=Mode.PF,
        gamma_0: Optional[float] = None, trace=None, tol: float = BETA_TOL) -> SimulationResult:
    """
    Run the online protocol over ``M`` epochs.

    Parameters
    ----------
    config : NetworkConfig
    M : int
        Number of epochs (ignored when ``trace`` is given).
    seed : int, optional
        Channel seed; the trace is ``sample_trace(seed, config, M)``.
    mode : Mode or str
        ``"pf"`` or ``"maxsum"``.
    gamma_0 : float, optional
        Price step size, :func:`default_gamma` by default.
    trace : array_like, optional
        Pre-generated ``(M, K)`` gains to use instead of sampling.

    Returns
    -------
    SimulationResult
    """
    mode = Mode.parse(mode)
    xs = _trace_for(config, M, seed, trace)
    M = xs.shape[0]
    if M < 1:
        raise ValueError("M must be at least 1")
    state = ProtocolState.initial(config, mode, gamma_0)
    K = config.K
    p0, tau0, lam = np.empty(M), np.empty(M), np.empty(M)
    tau, r = np.empty((M, K)), np.empty((M, K))
    lam_f, esum, Rbar = _run_online(
        xs, config.eta_array, config.N_0, config.p_c, config.P_max, config.P_avg, config.T,
        state.gamma_0, mode is Mode.PF, state.lambda_hat, tol, p0, tau0, tau, r, lam)
    final = replace(state, lambda_hat=lam_f, Rbar_hat=Rbar, energy_sum=esum, epoch=M)
    return SimulationResult(config, mode, seed, p0, tau0, tau, r, lam, final)


def run_stream(config: NetworkConfig, channels: Iterable[ChannelState], mode=Mode.PF,
               gamma_0: Optional[float] = None, tol: float = BETA_TOL) -> SimulationResult:
    """Same protocol as :func:`run`, driven epoch by epoch from an iterable."""
    state = ProtocolState.initial(config, mode, gamma_0)
    p0, tau0, tau, r, lam = [], [], [], [], []
    for ch in channels:
        lam.append(state.lambda_hat)
        alloc, state = step(state, ch, config, tol)
        p0.append(alloc.p_0)
        tau0.append(alloc.tau_0)
        tau.append(alloc.tau)
        r.append(alloc.r)
    if not p0:
        raise ValueError("empty channel stream")
    return SimulationResult(config, state.mode, None, np.array(p0), np.array(tau0),
                            np.array(tau), np.array(r), np.array(lam), state)


def _weights(config, mode, Rbar):
    mode = Mode.parse(mode)
    if mode is Mode.MAXSUM or Rbar is None:
        if mode is Mode.PF:
            raise ValueError("PF mode needs fixed Rbar for an offline price")
        return np.ones(config.K)
    Rbar = np.asarray(Rbar, dtype=float)
    if Rbar.shape != (config.K,) or (Rbar <= 0).any():
        raise ValueError("Rbar must hold K positive values")
    return Rbar


def mean_spend(config: NetworkConfig, trace, lam: float, mode=Mode.MAXSUM, Rbar=None,
               tol: float = BETA_TOL) -> float:
    """Average BS energy ``(1/M) sum_i p_0(i) tau_0(i)`` at a fixed price."""
    xs = _trace_for(config, None, None, trace)
    return float(_mean_spend(xs, config.eta_array, config.N_0, config.p_c, config.P_max,
                             float(lam), _weights(config, mode, Rbar), tol))


def calibrate_lambda_offline(config: NetworkConfig, trace, mode=Mode.MAXSUM, Rbar=None,
                             rtol: float = 1e-3, tol: float = BETA_TOL) -> float:
    """
    Fixed price under which the trace spends ``P_avg`` on average.

    Bisection on ``lam``; the average spend is non-increasing in the price.
    Returns 0 when even a free price under-spends the budget.

    Parameters
    ----------
    rtol : float
        Accepted relative deviation of the average spend from ``P_avg``.
    """
    xs = _trace_for(config, None, None, trace)
    Rbar = _weights(config, mode, Rbar)
    args = (xs, config.eta_array, config.N_0, config.p_c, config.P_max)

    def spend(lam):
        return _mean_spend(*args, lam, Rbar, tol)

    target = config.P_avg
    if spend(0.0) <= target:
        return 0.0
    lo, hi = 0.0, float(_max_threshold(*args, Rbar, tol))
    lam = hi
    # aim inside the band so the value survives re-simulation
    band = 0.5 * rtol * target
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        s = spend(lam)
        if abs(s - target) <= band:
            break
        if s > target:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 1e-15 * hi:
            break
    return lam


def run_fixed_lambda(config: NetworkConfig, lam: float, trace=None, M: Optional[int] = None,
                     seed: Optional[int] = None, mode=Mode.MAXSUM, Rbar=None,
                     tol: float = BETA_TOL) -> SimulationResult:
    """Replay a trace with a constant price and constant weights."""
    xs = _trace_for(config, M, seed, trace)
    Rbar = _weights(config, mode, Rbar)
    M, K = xs.shape
    p0, tau0 = np.empty(M), np.empty(M)
    tau, r = np.empty((M, K)), np.empty((M, K))
    _run_fixed(xs, config.eta_array, config.N_0, config.p_c, config.P_max, config.T,
               float(lam), Rbar, tol, p0, tau0, tau, r)
    return SimulationResult(config, Mode.parse(mode), seed, p0, tau0, tau, r, np.full(M, float(lam)))
