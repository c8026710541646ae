"""Brute-force checks of the closed-form epoch allocation.

Nothing here uses Lambert-W, the ``beta`` root or any stationarity
condition: the grid search evaluates the per-epoch Lagrangian directly over
the feasible set and the concavity audit only compares function values.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .channel import ChannelState, NetworkConfig

__all__ = ["GridSpec", "GridResult", "grid_search_epoch", "ConcavityReport", "verify_concavity_samples"]

_TAU0_EDGE = 1e-6
_LOGIT_SPAN = 14.0
_MAX_SLIDES = 5
_MAX_POLISH = 20
_MAX_REZOOM = 5
_POLISH_RTOL = 1e-13
_LINE_ROUNDS = 6


@dataclass(frozen=True)
class GridSpec:
    """Grid sizes per axis and the zoom schedule of the refinement."""

    n_tau0: int = 50
    n_simplex: int = 50
    n_e: int = 50
    zoom_rounds: int = 2
    zoom_factor: float = 10.0

    def __post_init__(self):
        if min(self.n_tau0, self.n_simplex, self.n_e) < 50:
            raise ValueError("every grid count must be at least 50")


@dataclass
class GridResult:
    objective: float
    tau_0: float
    tau: np.ndarray
    e: float
    # e / (P_max tau_0); 1 means full peak power during the EH phase
    e_share: float
    # final grid spacing along (logit axis, idle fraction, simplex axes...)
    resolution: np.ndarray
    # best value of the unrestricted box search alone
    box_objective: float = float("nan")
    # idle fraction t of the maximiser; 0 means e = P_max tau_0
    idle_fraction: float = 0.0

    def cells_off_peak(self) -> float:
        """Distance of ``e`` from ``P_max tau_0`` in idle-fraction grid cells."""
        if self.idle_fraction == 0.0:
            return 0.0
        step = self.resolution[1]
        return self.idle_fraction / step if step > 0 else math.inf


def _point(theta, P_max, K):
    """Cube point -> ``(tau_0, e, tau)``; see :func:`grid_search_epoch`."""
    q0 = 1.0 / (1.0 + math.exp(-theta[0]))
    e = P_max / (1.0 + math.exp(theta[0]))
    q = q0 * (1.0 - theta[1])
    tau = np.empty(K)
    rest = 1.0
    for j in range(K - 1):
        tau[j] = rest / (1.0 + math.exp(-theta[2 + j]))
        rest -= tau[j]
    tau[K - 1] = rest
    return 1.0 - q, e, q * tau


@njit(cache=True)
def _grid_kernel(q0_ax, e_ax, t_ax, sig_ax, a, c, Rbar, lam, restricted):
    """Best value and its grid indices.

    ``q0_ax``/``e_ax`` hold the IT-share cap and BS energy along the logit
    axis, ``t_ax`` the idle fractions, ``sig_ax`` the stick-breaking
    fractions (one row per break, padded to a common length).
    """
    K = a.size
    n0 = q0_ax.size
    n1 = t_ax.size
    ns = sig_ax.shape[1] if K > 1 else 1
    n_simplex = 1
    for j in range(K - 1):
        n_simplex *= ns
    best = -np.inf
    best_idx = np.zeros(K + 1, dtype=np.int64)
    idx = np.zeros(K - 1, dtype=np.int64)
    w = np.empty(K)
    for i0 in range(n0):
        e = e_ax[i0]
        for m in range(n_simplex):
            rem = m
            rest = 1.0
            for j in range(K - 2, -1, -1):
                idx[j] = rem % ns
                rem //= ns
            for j in range(K - 1):
                w[j] = rest * sig_ax[j, idx[j]]
                rest -= w[j]
            w[K - 1] = rest
            for i1 in range(n1):
                q = q0_ax[i0] * (1.0 - t_ax[i1])
                val = -lam * e
                feasible = True
                for k in range(K):
                    tk = q * w[k]
                    if tk <= 0.0 or a[k] <= 0.0:
                        continue
                    u = 1.0 - c[k] + a[k] * e / tk
                    if u > 1.0:
                        val += tk * math.log(u) / Rbar[k]
                    elif restricted:
                        feasible = False
                        break
                if feasible and val > best:
                    best = val
                    best_idx[0] = i0
                    best_idx[1] = i1
                    for j in range(K - 1):
                        best_idx[2 + j] = idx[j]
    return best, best_idx


def _search_box(lo, hi, counts, args):
    a, c, Rbar, lam, P_max, restricted = args
    K = a.size
    axes = [np.linspace(lo[j], hi[j], n) for j, n in enumerate(counts)]
    theta = axes[0]
    q0_ax = 1.0 / (1.0 + np.exp(-theta))
    e_ax = P_max / (1.0 + np.exp(theta))
    # the kernel wants one common length; single-point axes are repeated
    ns = max(counts[2:]) if K > 1 else 1
    for j in range(2, len(counts)):
        axes[j] = np.resize(axes[j], ns)
    sig_ax = np.zeros((max(K - 1, 1), ns))
    for j in range(K - 1):
        sig_ax[j] = 1.0 / (1.0 + np.exp(-axes[2 + j]))
    best_val, best_idx = _grid_kernel(q0_ax, e_ax, axes[1], sig_ax, a, c, Rbar, lam, restricted)
    spacing = (np.asarray(hi) - np.asarray(lo)) / np.maximum(np.asarray(counts) - 1, 1)
    if not np.isfinite(best_val):
        return best_val, None, spacing
    best_pt = np.array([axes[j][best_idx[j]] for j in range(len(counts))])
    return best_val, best_pt, spacing


def _on_window_edge(pt, lo, hi, dom_lo, dom_hi, spacing):
    eps = 0.5 * spacing
    low = (pt - lo < eps) & (lo > dom_lo)
    high = (hi - pt < eps) & (hi < dom_hi)
    return bool((low | high).any())


def _zoom_search(dom_lo, dom_hi, counts, grid, args):
    lo, hi = dom_lo.copy(), dom_hi.copy()
    best_val, best_pt, spacing = _search_box(lo, hi, counts, args)
    for _ in range(grid.zoom_rounds):
        if best_pt is None:
            break
        half = (hi - lo) / (2.0 * grid.zoom_factor)
        # slide the window along ridges until the incumbent is inside it
        for _ in range(_MAX_SLIDES):
            lo = np.maximum(dom_lo, best_pt - half)
            hi = np.minimum(dom_hi, best_pt + half)
            val, pt, spacing = _search_box(lo, hi, counts, args)
            if not val > best_val:
                break
            best_val, best_pt = val, pt
            if not _on_window_edge(pt, lo, hi, dom_lo, dom_hi, spacing):
                break
    return best_val, best_pt, spacing


def _polish(pt, val, dom_lo, dom_hi, counts, spacing, grid, args):
    """Coordinate line searches over each full axis, then a local re-zoom.

    The zoom can stall on narrow ridges, e.g. with a weak user parked at an
    almost empty slot.  Along the idle and simplex axes the objective is
    concave, so full-range line searches escape such points cheaply.
    """
    line_grid = GridSpec(grid.n_tau0, grid.n_simplex, grid.n_e, _LINE_ROUNDS, grid.zoom_factor)
    n = len(counts)
    for _ in range(_MAX_REZOOM):
        for _ in range(_MAX_POLISH):
            start = val
            for j in range(n):
                if dom_hi[j] == dom_lo[j]:
                    continue
                lo, hi = pt.copy(), pt.copy()
                lo[j], hi[j] = dom_lo[j], dom_hi[j]
                line_counts = [1] * n
                line_counts[j] = counts[j]
                v, p, _ = _zoom_search(lo, hi, line_counts, line_grid, args)
                if p is not None and v > val:
                    val, pt = v, p
            if val - start <= _POLISH_RTOL * abs(val):
                break
        half = 0.5 * spacing * np.maximum(np.asarray(counts) - 1, 1)
        v, p, sp = _search_box(np.maximum(dom_lo, pt - half), np.minimum(dom_hi, pt + half),
                               counts, args)
        if p is None or v - val <= _POLISH_RTOL * abs(val):
            break
        val, pt, spacing = v, p, sp
    return val, pt, spacing


def grid_search_epoch(
    channel: ChannelState,
    config: NetworkConfig,
    lam: float,
    Rbar=None,
    grid: GridSpec = GridSpec(),
    variant: str = "restricted",
) -> GridResult:
    """
    Maximise the per-epoch Lagrangian by exhaustive grid search.

    The feasible set is parametrised by

    * ``theta``: logit of ``q0 = 1 - e / P_max``, the largest IT share that
      the BS energy ``e`` leaves room for,
    * ``t`` in ``[0, 1]``: idle fraction, so the IT share is
      ``q = q0 * (1 - t)`` and ``tau_0 = 1 - q`` (``t = 0`` is full peak
      power during the EH phase),
    * stick-breaking coordinates of the IT split ``tau_k = q * w_k``, each
      break point again on a logit axis.

    Logit axes resolve shares close to 0 and to 1 alike.  After
    the initial grid, each zoom round re-grids a window ``zoom_factor``
    times narrower around the incumbent.  A final polish alternates
    full-range line searches along every axis with a local re-grid until
    neither improves the value.

    Parameters
    ----------
    variant : {"restricted", "zero_rate"}
        ``"restricted"`` discards points where any scheduled user would get
        non-positive transmit power; ``"zero_rate"`` keeps them and gives
        such users zero rate (and also runs the restricted searches as
        extra starting points).  The silent epoch (``e = 0``, value 0) is a
        candidate in both.

    Returns
    -------
    GridResult
    """
    K = config.K
    if K > 3:
        raise ValueError("grid search is limited to K <= 3")
    Rbar = np.ones(K) if Rbar is None else np.asarray(Rbar, dtype=float)
    a = np.asarray(channel.a, dtype=float)
    c = config.p_c * np.asarray(channel.x, dtype=float)
    if variant not in ("restricted", "zero_rate"):
        raise ValueError(f"unknown variant {variant!r}")

    dom_lo = np.array([-_LOGIT_SPAN, 0.0] + [-_LOGIT_SPAN] * (K - 1))
    dom_hi = np.array([_LOGIT_SPAN, 1.0] + [_LOGIT_SPAN] * (K - 1))
    counts = [grid.n_tau0, grid.n_e] + [grid.n_simplex] * (K - 1)
    # The zoom can stall on a ridge next to the t = 0 face, so that face is
    # refined on its own as well; the full box still competes on equal terms.
    face_hi = dom_hi.copy()
    face_hi[1] = 0.0
    face_counts = list(counts)
    face_counts[1] = 1
    # Points with every log argument above 1 score the same in both
    # variants, so the restricted searches are extra starts for "zero_rate".
    passes = [True] if variant == "restricted" else [False, True]
    best_val, best_pt, spacing, box_val = -np.inf, None, None, -np.inf
    for restricted in passes:
        args = (a, c, Rbar, float(lam), config.P_max, restricted)
        val, pt, sp = _zoom_search(dom_lo, dom_hi, counts, grid, args)
        box_val = max(box_val, val)
        if val > best_val or spacing is None:
            best_val, best_pt, spacing = val, pt, sp
        val, pt, sp = _zoom_search(dom_lo, face_hi, face_counts, grid, args)
        if val > best_val:
            best_val, best_pt, spacing = val, pt, sp

    if best_pt is not None:
        args = (a, c, Rbar, float(lam), config.P_max, variant == "restricted")
        best_val, best_pt, spacing = _polish(
            best_pt, best_val, dom_lo, dom_hi, counts, spacing, grid, args)

    if best_pt is None or best_val < 0.0:
        return GridResult(0.0, 0.0, np.zeros(K), 0.0, 0.0, spacing, max(float(box_val), 0.0))
    tau0, e, tau = _point(best_pt, config.P_max, K)
    return GridResult(
        float(best_val), tau0, tau, e, e / (config.P_max * tau0), spacing, float(box_val),
        float(best_pt[1]),
    )


@dataclass
class ConcavityReport:
    n_pairs: int
    violations: int
    worst_gap: float


def verify_concavity_samples(
    channel: ChannelState,
    config: NetworkConfig,
    lam: float,
    Rbar=None,
    n: int = 10_000,
    rng=None,
    tol: float = 1e-12,
) -> ConcavityReport:
    """Midpoint-concavity audit of the per-epoch Lagrangian in ``(e, tau)``.

    Draws ``n`` pairs of feasible points where every user has positive
    transmit power and counts pairs with
    ``f((p+q)/2) < (f(p) + f(q))/2 - tol``.
    """
    rng = np.random.default_rng(rng)
    K = config.K
    Rbar = np.ones(K) if Rbar is None else np.asarray(Rbar, dtype=float)
    a = np.asarray(channel.a, dtype=float)
    c = config.p_c * np.asarray(channel.x, dtype=float)
    if not (a > 0).all():
        raise ValueError("concavity audit needs every a_k > 0")

    def f(e, tau):
        u = 1.0 - c + a * (e[:, None] / tau)
        return (tau * np.log(u) / Rbar).sum(axis=1) - lam * e

    def draw(m):
        # direct sampler on the convex transmit region
        # {e > max_k c_k tau_k / a_k, e <= P_max tau_0}: pick the split of the
        # transmit time, the smallest tau_0 that still affords it, then e
        w = rng.dirichlet(np.ones(K), size=m)
        need = (np.maximum(c, 0.0) * w / a).max(axis=1)
        lo = np.maximum(need / (config.P_max + need), _TAU0_EDGE)
        tau0 = lo + (1.0 - lo) * rng.uniform(0.0, 1.0, size=m)
        tau = (1.0 - tau0)[:, None] * w
        e_min = (1.0 - tau0) * need
        e = e_min + (config.P_max * tau0 - e_min) * (1.0 - rng.uniform(0.0, 1.0, size=m))
        ok = (tau > 0).all(axis=1) & (1.0 - c + a * (e[:, None] / tau) > 1.0).all(axis=1)
        if not ok.all():
            raise RuntimeError("could not sample enough transmit-regime points")
        return e, tau

    e1, t1 = draw(n)
    e2, t2 = draw(n)
    gap = f(0.5 * (e1 + e2), 0.5 * (t1 + t2)) - 0.5 * (f(e1, t1) + f(e2, t2))
    return ConcavityReport(n, int((gap < -tol).sum()), float(gap.min()))
