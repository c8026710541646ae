"""Closed-form per-epoch allocation of BS power and EH/IT time fractions.

For fixed average-power price ``lam`` and rate weights ``1/Rbar_k`` the
per-epoch problem

    maximize  sum_k tau_k * ln(1 - c_k + a_k * e / tau_k) / Rbar_k - lam * e
    s.t.      0 <= e <= P_max * tau_0,  tau_0 + sum_k tau_k = 1

has a bang-bang solution: either the BS stays silent, or it radiates at
``P_max`` and the time split follows from the auxiliary SNR terms
``z_k = a_k * P_max * tau_0 / tau_k``.  Each ``z_k`` is a Lambert-W
expression of ``beta * P_max * Rbar_k``, where ``beta`` (the price of the
peak-power constraint) is the unique root of a decreasing scalar function
``g``.  Here ``c_k = p_c * x_k`` and ``a_k = eta_k * N_0 * x_k**2``.

``lam`` is expressed per nat of weighted rate, so the objective above uses
natural logs; reported rates ``r_k`` are in bits.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .channel import ChannelState, NetworkConfig
from .special_functions import find_root_decreasing, w0_scalar

__all__ = [
    "BETA_TOL",
    "EpochAllocation",
    "AllocatorWorkspace",
    "AllocationError",
    "KKTReport",
    "solve_z",
    "beta_function",
    "solve_beta",
    "allocate_epoch",
    "allocate_epoch_maxsum",
    "epoch_lagrangian",
    "verify_kkt",
]

BETA_TOL = 1e-10
# below this |1 - c| the Lambert-W form is 0/0 and the analytic limit is used
SINGULAR_TOL = 1e-9
_LARGE_B = 30.0
_LOG_MAX = 709.0
_MAX_DOUBLINGS = 200


class AllocationError(ArithmeticError):
    """The closed form produced a transmit decision with ``z_k <= c_k``."""


# --------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def z_scalar(c, b):
    omc = 1.0 - c
    if 1.0 + b > _LOG_MAX:
        return math.inf
    if abs(omc) < SINGULAR_TOL or b > _LARGE_B:
        # ln u = 1 + b - (1 - c)/u contracts fast once u >> |1 - c|; also
        # avoids exp(-1 - b) underflowing inside the Lambert-W argument
        u = math.exp(1.0 + b)
        for _ in range(4):
            u = math.exp(1.0 + b - omc / u)
        return u - omc
    if omc > 0.0:
        # distance to the branch point, 1 + e*x, without cancellation
        delta = -math.expm1(math.log1p(-c) - b)
        if delta < 1e-6:
            # z = -(1 - c)(w + 1)/w with w + 1 from the branch-point series
            p = math.sqrt(2.0 * delta)
            wp1 = p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0
                  + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))))
            return omc * wp1 / (1.0 - wp1)
    w = w0_scalar(-omc * math.exp(-1.0 - b))
    return -omc * (1.0 + 1.0 / w)


@njit(cache=True)
def _g_eval(beta, a, c, Rbar, lam, P_max, z):
    """g(beta) and g'(beta); fills ``z``."""
    s = 0.0
    ds = 0.0
    for k in range(a.size):
        zk = z_scalar(c[k], beta * P_max * Rbar[k])
        z[k] = zk
        if a[k] > 0.0:
            s += a[k] / (Rbar[k] * (1.0 - c[k] + zk))
            if zk > 0.0:
                ds += a[k] / zk
    return s - lam - beta, -1.0 - P_max * ds


@njit(cache=True)
def _solve_beta_kernel(a, c, Rbar, lam, P_max, tol, z):
    """Root of g by bracket doubling and Newton-safeguarded bisection.

    Returns ``(beta, g0)``; ``beta < 0`` flags the silent-BS branch, in which
    case ``z`` holds the values at ``beta = 0``.
    """
    g0, _ = _g_eval(0.0, a, c, Rbar, lam, P_max, z)
    if not g0 > 0.0:
        return -1.0, g0
    lo = 0.0
    hi = 1.0
    ghi, _ = _g_eval(hi, a, c, Rbar, lam, P_max, z)
    n = 0
    while ghi > 0.0:
        n += 1
        if n > _MAX_DOUBLINGS:
            raise ArithmeticError("no sign change after 200 doublings")
        lo = hi
        hi *= 2.0
        ghi, _ = _g_eval(hi, a, c, Rbar, lam, P_max, z)
    if ghi == 0.0:
        return hi, g0
    x = 0.5 * (lo + hi)
    for _ in range(400):
        gx, dgx = _g_eval(x, a, c, Rbar, lam, P_max, z)
        if abs(gx) <= tol:
            break
        if gx > 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
        nxt = 0.5 * (lo + hi)
        if dgx < 0.0:
            cand = x - gx / dgx
            if lo < cand < hi:
                nxt = cand
        x = nxt
    return x, g0


@njit(cache=True)
def allocate_kernel(x, eta, N_0, p_c, P_max, lam, Rbar, tol, tau, z, c):
    """Fill ``tau``, ``z`` and ``c`` for one epoch.

    Returns ``(transmit, tau_0, beta, condition_value)``.
    """
    K = x.size
    a = np.empty(K)
    for k in range(K):
        a[k] = eta[k] * N_0 * x[k] * x[k]
        c[k] = p_c * x[k]
    beta, g0 = _solve_beta_kernel(a, c, Rbar, lam, P_max, tol, z)
    cond = g0 + lam
    if beta < 0.0:
        for k in range(K):
            tau[k] = 0.0
        return False, 0.0, 0.0, cond
    # final z at the returned root
    _g_eval(beta, a, c, Rbar, lam, P_max, z)
    s = 0.0
    for k in range(K):
        if a[k] > 0.0:
            s += a[k] * P_max / z[k]
    tau0 = 1.0 / (1.0 + s)
    for k in range(K):
        if a[k] > 0.0:
            tau[k] = a[k] * P_max / z[k] * tau0
        else:
            tau[k] = 0.0
    return True, tau0, beta, cond


@njit(cache=True)
def account_kernel(x, eta, N_0, p_c, T, p0, tau0, tau, E, P, pT, r):
    """Harvested energy, transmit power, consumed power and rate per user."""
    for k in range(x.size):
        E[k] = eta[k] * x[k] * N_0 * p0 * tau0 * T
        if tau[k] > 0.0:
            P[k] = max(0.0, E[k] / (tau[k] * T) - p_c)
        else:
            P[k] = 0.0
        pT[k] = P[k] + p_c if P[k] > 0.0 else 0.0
        r[k] = tau[k] * math.log2(1.0 + P[k] * x[k])


# --------------------------------------------------------------------------
# public surface


@dataclass
class EpochAllocation:
    """Decision for one epoch.

    ``p_0`` is 0 or ``P_max``; ``e = p_0 * tau_0``; ``E`` in joules, ``P`` and
    ``p_T`` in watts, ``r`` in bits per channel use (per unit bandwidth).
    """

    p_0: float
    tau_0: float
    tau: np.ndarray
    e: float
    E: np.ndarray
    P: np.ndarray
    p_T: np.ndarray
    r: np.ndarray

    @property
    def transmit(self) -> bool:
        return self.p_0 > 0


@dataclass
class AllocatorWorkspace:
    c: np.ndarray
    z: np.ndarray
    beta: float
    mu: float
    condition_value: float
    transmit: bool
    inputs: dict = field(default_factory=dict, repr=False)


def solve_z(c: float, b: float) -> float:
    """Larger root ``z`` of ``ln(1 - c + z) - z / (1 - c + z) = b``.

    Uses ``z = -(1 - c) * (1 + 1 / W0(-(1 - c) * exp(-1 - b)))`` and the limit
    ``exp(1 + b)`` when ``c`` is within ``1e-9`` of one.
    """
    if c < 0 or b < 0:
        raise ValueError("solve_z requires c >= 0 and b >= 0")
    return float(z_scalar(float(c), float(b)))


def beta_function(a, c, Rbar, lam: float, P_max: float):
    """Return ``g(beta) = sum_k a_k / (Rbar_k (1 - c_k + z_k(beta))) - lam - beta``.

    ``g`` is strictly decreasing with ``g'(beta) = -1 / tau_0(beta)``; its
    positive root is the peak-power multiplier of the transmitting epoch.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    Rbar = np.asarray(Rbar, dtype=float)
    active = a > 0

    def g(beta):
        z = np.array([z_scalar(ck, beta * P_max * rk) for ck, rk in zip(c, Rbar)])
        u = 1.0 - c + z
        return float(np.sum(a[active] / (Rbar[active] * u[active]))) - lam - beta

    return g


def solve_beta(a, c, Rbar, lam: float, P_max: float, tol: float = BETA_TOL):
    """Peak-power multiplier ``beta > 0``, or ``None`` if the BS stays silent.

    Plain bracketing bisection on :func:`beta_function`; ``g(0) <= 0`` (ties
    included) means no transmission.
    """
    if lam < 0 or P_max <= 0 or np.any(np.asarray(Rbar) <= 0):
        raise ValueError("solve_beta requires lam >= 0, P_max > 0, Rbar > 0")
    return find_root_decreasing(beta_function(a, c, Rbar, lam, P_max), tol=tol)


def allocate_epoch(
    channel: ChannelState,
    config: NetworkConfig,
    lam: float,
    Rbar=None,
    tol: float = BETA_TOL,
):
    """
    Optimal allocation of one epoch for price ``lam`` and weights ``1/Rbar``.

    Parameters
    ----------
    channel : ChannelState
        Gains of the epoch.
    config : NetworkConfig
        Network parameters.
    lam : float
        Price of average BS energy, ``>= 0``.
    Rbar : array_like, optional
        Positive per-user rate normalisers; all ones (sum-rate) by default.
    tol : float
        Residual tolerance of the ``beta`` root.

    Returns
    -------
    (EpochAllocation, AllocatorWorkspace)

    Raises
    ------
    AllocationError
        If a transmitting user ends up with ``z_k <= c_k`` (non-positive
        transmit power), which the closed form rules out.
    """
    K = config.K
    Rbar = np.ones(K) if Rbar is None else np.asarray(Rbar, dtype=float)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if Rbar.shape != (K,) or (Rbar <= 0).any():
        raise ValueError("Rbar must hold K positive values")
    x = np.asarray(channel.x, dtype=float)
    eta = config.eta_array
    tau = np.empty(K)
    z = np.empty(K)
    c = np.empty(K)
    transmit, tau0, beta, cond = allocate_kernel(
        x, eta, config.N_0, config.p_c, config.P_max, float(lam), Rbar, tol, tau, z, c
    )
    p0 = config.P_max if transmit else 0.0
    if transmit:
        active = channel.a > 0
        if not (z[active] > c[active]).all():
            raise AllocationError("z_k <= c_k at a transmit decision")
    E, P, pT, r = (np.empty(K) for _ in range(4))
    account_kernel(x, eta, config.N_0, config.p_c, config.T, p0, tau0, tau, E, P, pT, r)
    alloc = EpochAllocation(
        p_0=p0, tau_0=tau0, tau=tau, e=p0 * tau0, E=E, P=P, p_T=pT, r=r
    )
    ws = AllocatorWorkspace(
        c=c,
        z=z,
        beta=beta,
        mu=beta * config.P_max,
        condition_value=cond,
        transmit=bool(transmit),
        inputs={"lam": float(lam), "Rbar": Rbar.copy()},
    )
    return alloc, ws


def allocate_epoch_maxsum(channel: ChannelState, config: NetworkConfig, lam: float, tol: float = BETA_TOL):
    """Sum-rate allocation: :func:`allocate_epoch` with every ``Rbar_k = 1``."""
    return allocate_epoch(channel, config, lam, np.ones(config.K), tol=tol)


def epoch_lagrangian(tau_0, tau, e, channel: ChannelState, config: NetworkConfig, lam, Rbar=None):
    """Per-epoch Lagrangian ``sum_k tau_k ln(1 - c_k + a_k e / tau_k) / Rbar_k - lam e``.

    Users with ``tau_k = 0`` contribute nothing.  With ``e = 0`` the value
    is zero (silent epoch, no rate).
    """
    Rbar = np.ones(config.K) if Rbar is None else np.asarray(Rbar, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if e == 0:
        return 0.0
    c = config.p_c * channel.x
    on = tau > 0
    u = 1.0 - c[on] + channel.a[on] * e / tau[on]
    return float(np.sum(tau[on] * np.log(u) / Rbar[on])) - lam * e


@dataclass
class KKTReport:
    """Stationarity residuals of a transmitting epoch.

    ``stationarity_e``: derivative in ``e`` (per epoch), ``stationarity_tau``:
    per-user derivative in ``tau_k``, ``stationarity_tau0``: ``beta P_max - mu``,
    ``z_equation``: per-user defining equation of ``z_k``; ``root_equation``
    is the Lambert-W form of the ``beta`` equation, kept as a cross-check.
    """

    stationarity_e: float
    stationarity_tau: np.ndarray
    stationarity_tau0: float
    z_equation: np.ndarray
    root_equation: float

    @property
    def max_residual(self) -> float:
        vals = np.concatenate([
            [self.stationarity_e, self.stationarity_tau0, self.root_equation],
            np.ravel(self.stationarity_tau),
            np.ravel(self.z_equation),
        ])
        vals = np.abs(vals)
        # NaN means a residual could not be evaluated: report it as a failure
        return float(np.inf) if np.isnan(vals).any() else float(vals.max())

    def ok(self, tol: float = 1e-8) -> bool:
        return self.max_residual <= tol


def verify_kkt(
    alloc: EpochAllocation,
    ws: AllocatorWorkspace,
    channel: ChannelState,
    config: NetworkConfig,
    lam: float = None,
    Rbar=None,
) -> KKTReport:
    """KKT residuals of a transmit-mode allocation.

    The SNR terms are recomputed from the time split itself
    (``a_k P_max tau_0 / tau_k``), not copied from the workspace, so a
    perturbed ``alloc`` shows up in the residuals.
    """
    if not alloc.transmit:
        raise ValueError("verify_kkt needs a transmitting allocation")
    lam = ws.inputs["lam"] if lam is None else lam
    Rbar = ws.inputs["Rbar"] if Rbar is None else np.asarray(Rbar, dtype=float)
    P_max = config.P_max
    a, c = channel.a, config.p_c * channel.x
    tau = np.asarray(alloc.tau, dtype=float)
    # a user whose weight pushes z past overflow gets tau_k = 0; its
    # conditions hold in the limit, so only that saturation is checked
    saturated = (a > 0) & (tau == 0)
    on = (a > 0) & ~saturated
    z = np.zeros(config.K)
    z[on] = a[on] * alloc.e / tau[on]
    u = np.where(on, 1.0 - c + z, 1.0)
    beta, mu = ws.beta, ws.mu
    st_e = float(np.sum(a[on] / (Rbar[on] * u[on]))) - lam - beta
    st_tau = np.where(on, np.log(u) - z / u - Rbar * mu, 0.0)
    st_tau0 = beta * P_max - mu
    b = beta * P_max * Rbar
    z_eq = np.where(on, np.log(u) - z / u - b, 0.0)
    # Lambert-W form of the beta equation; 1 - c_k ~ 0 is covered by the
    # a_k / u_k form used in stationarity_e
    regular = on & (np.abs(1.0 - c) >= SINGULAR_TOL)
    omc = 1.0 - c[regular]
    w = np.array([w0_scalar(v) for v in -omc * np.exp(-1.0 - b[regular])])
    lw_terms = a[regular] / (Rbar[regular] * omc) * w
    singular = on & ~regular
    root_eq = float(
        np.sum(lw_terms) - np.sum(a[singular] / (Rbar[singular] * u[singular])) + beta + lam
    )
    if saturated.any() and not np.all(np.isinf(ws.z[saturated])):
        st_tau = np.where(saturated & ~np.isinf(ws.z), np.inf, st_tau)
    return KKTReport(st_e, st_tau, st_tau0, z_eq, root_eq)
