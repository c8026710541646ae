"""Real principal-branch Lambert-W and a monotone scalar root finder.

The scalar kernels are compiled with numba so the allocator can call them
from its own compiled loops; the public wrappers accept scalars or arrays.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numba import njit

__all__ = [
    "INV_E",
    "BRANCH_TOL",
    "RootBracket",
    "RootFindingError",
    "lambert_w0",
    "bracket_decreasing",
    "find_root_decreasing",
]

INV_E = math.exp(-1.0)
# inputs this far below -1/e are treated as rounding noise at the branch point
BRANCH_TOL = 1e-14
_MAX_ITER = 50
_MAX_DOUBLINGS = 200


class RootFindingError(RuntimeError):
    """Raised when a bracket cannot be established for a decreasing function."""


@njit(cache=True)
def w0_scalar(x):
    """Principal branch W0(x) for x >= -1/e; inputs slightly below are clamped."""
    if x <= -INV_E:
        return -1.0
    if x == 0.0:
        return 0.0
    if x < -0.25:
        # series around the branch point in p = sqrt(2(ex + 1))
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
        if p < 1e-5:
            return w
    elif x < math.e:
        w = math.log1p(x)
        w = w * (1.0 - math.log1p(w) / (2.0 + w))
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-15 * (1.0 + abs(w)):
            break
    return w


@njit(cache=True)
def _w0_array(x, out):
    for i in range(x.size):
        out[i] = w0_scalar(x[i])


def lambert_w0(x):
    """
    Principal branch of the real Lambert-W function.

    Solves ``w * exp(w) = x`` for ``w >= -1`` using Halley iteration from a
    branch-point series, ``log1p`` or asymptotic starting guess.

    Parameters
    ----------
    x : float or array_like
        Arguments, all ``>= -1/e`` (values within ``1e-14`` below are
        treated as the branch point itself).

    Returns
    -------
    float or np.ndarray
        ``W0(x)`` with the same shape as the input.

    Raises
    ------
    ValueError
        If any argument lies below ``-1/e - 1e-14`` or is NaN.
    """
    arr = np.asarray(x, dtype=float)
    if np.isnan(arr).any() or (arr < -INV_E - BRANCH_TOL).any():
        raise ValueError("lambert_w0 argument outside [-1/e, inf)")
    if arr.ndim == 0:
        return float(w0_scalar(float(arr)))
    flat = np.ascontiguousarray(arr).ravel()
    out = np.empty_like(flat)
    _w0_array(flat, out)
    return out.reshape(arr.shape)


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")
        if self.f_lo * self.f_hi > 0:
            raise ValueError("bracket endpoints do not straddle a root")


def bracket_decreasing(f: Callable[[float], float]) -> Optional[RootBracket]:
    """Bracket the root of a decreasing ``f`` on ``[0, inf)``.

    Starts from ``[0, 1]`` and doubles the upper end until ``f`` changes
    sign. Returns ``None`` when ``f(0) <= 0``.
    """
    f_lo = f(0.0)
    if not f_lo > 0:
        return None
    lo, hi = 0.0, 1.0
    f_hi = f(hi)
    n = 0
    while f_hi > 0:
        n += 1
        if n > _MAX_DOUBLINGS:
            raise RootFindingError("no sign change after 200 doublings")
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi = f(hi)
    return RootBracket(lo, hi, f_lo, f_hi)


def find_root_decreasing(
    f: Callable[[float], float],
    tol: float = 1e-10,
    fprime: Optional[Callable[[float], float]] = None,
) -> Optional[float]:
    """
    Root of a continuous, strictly decreasing function on ``[0, inf)``.

    Parameters
    ----------
    f : callable
        Scalar function with finite ``f(0)``.
    tol : float
        Target on the residual ``|f(root)|``.
    fprime : callable, optional
        Derivative of ``f``. When given, Newton steps are taken inside the
        bracket and bisection is used only when a step would leave it.

    Returns
    -------
    float or None
        The root, or ``None`` when ``f(0) <= 0`` (no nonnegative root).

    Raises
    ------
    RootFindingError
        If no sign change is found after 200 doublings of the bracket.
    """
    br = bracket_decreasing(f)
    if br is None:
        return None
    lo, hi = br.lo, br.hi
    if br.f_hi == 0:
        return hi
    x = 0.5 * (lo + hi)
    for _ in range(400):
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if fx > 0:
            lo = x
        else:
            hi = x
        if hi - lo <= 4 * np.finfo(float).eps * max(hi, 1.0):
            return x
        nxt = 0.5 * (lo + hi)
        if fprime is not None:
            d = fprime(x)
            if d < 0:
                cand = x - fx / d
                if lo < cand < hi:
                    nxt = cand
        x = nxt
    return x
