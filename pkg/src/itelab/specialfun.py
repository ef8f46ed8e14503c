"""Integer-order cylinder functions J_l, Y_l, I_l and the zeros of J_l.

Everything is evaluated from scratch with numpy arrays as the only helper.
Scalars and 1-d arrays of arguments are both accepted; results keep the
shape of ``x``.

Routing for J_l:

* ascending series when ``x <= 6`` or ``x**2 <= 4 (l + 1)`` (no growth of
  the alternating terms, so no cancellation),
* Hankel asymptotic expansion when ``x >= 25 + l**2 / 2``,
* Miller backward recurrence otherwise.

Y_0 and Y_1 come from the Neumann series driven by the same Miller sweep
(or from the Hankel expansion for large ``x``); higher orders use the
stable upward recurrence.  I_l is a sum of positive series terms and is
accurate everywhere.

Values that would overflow or underflow are returned as a mantissa plus a
``log_scale``: the true value is ``value * exp(log_scale)``.  The scale is
zero whenever the value is representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError

MAX_ORDER = 500
MAX_ARG = 1.0e4
# The zero finder may evaluate a little outside the public box.
_ZERO_ARG_LIMIT = 4.0e4

_EULER_GAMMA = 0.57721566490153286061
_BIG = 1.0e250
_LOG_BIG = math.log(_BIG)
_FOLD_LIMIT = 650.0


@dataclass(frozen=True)
class CylinderValue:
    """Value and x-derivative of a cylinder function, sharing one scale.

    The true function value is ``value * exp(log_scale)`` and likewise for
    the derivative.
    """

    value: float | np.ndarray
    derivative: float | np.ndarray
    log_scale: float | np.ndarray

    def unscaled(self) -> tuple[float | np.ndarray, float | np.ndarray]:
        """Return ``(value, derivative)`` with the scale multiplied back in."""
        f = np.exp(self.log_scale)
        return self.value * f, self.derivative * f


def _check_order(l: int) -> int:
    if int(l) != l or l < 0:
        raise DomainError(f"order must be a non-negative integer, got {l!r}")
    if l > MAX_ORDER:
        raise CapacityError(f"order {l} exceeds the supported maximum {MAX_ORDER}")
    return int(l)


def _check_arg(x, limit: float = MAX_ARG) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DomainError("argument must be a scalar or a 1-d array")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("argument must be finite and strictly positive")
    if np.any(arr > limit):
        raise CapacityError(f"argument exceeds the supported maximum {limit:g}")
    return arr


def _fold(value: np.ndarray, deriv: np.ndarray, logs: np.ndarray):
    """Absorb the scale into the mantissa wherever that is representable."""
    value = np.array(value, dtype=float)
    deriv = np.array(deriv, dtype=float)
    logs = np.array(logs, dtype=float)
    with np.errstate(divide="ignore"):
        top = np.log(np.maximum(np.abs(value), np.abs(deriv)))
    small = (np.abs(logs) < _FOLD_LIMIT) & (logs + top < 700.0) & (logs + top > -700.0)
    small |= logs == 0.0
    f = np.exp(np.where(small, logs, 0.0))
    value[small] *= f[small]
    deriv[small] *= f[small]
    logs[small] = 0.0
    return value, deriv, logs


def _shape_like(x, value, deriv, logs) -> CylinderValue:
    if np.ndim(x) == 0:
        return CylinderValue(float(value[0]), float(deriv[0]), float(logs[0]))
    return CylinderValue(value, deriv, logs)


# --------------------------------------------------------------------------
# ascending series


def _ascending_series(l: int, x: np.ndarray, sign: float):
    """Series for J (sign=-1) or I (sign=+1) as mantissa, derivative, log.

    The common factor (x/2)^l / l! lives in the log scale; the loop
    rescales on the fly so that I_l does not overflow for large x.
    """
    q = 0.25 * x * x
    term = np.ones_like(x)
    s = np.ones_like(x)
    ds = np.full_like(x, float(l))
    logs = l * np.log(0.5 * x) - math.lgamma(l + 1.0)
    peak = np.ones_like(x)
    m = 0
    while True:
        m += 1
        term = sign * term * q / (m * (m + l))
        s = s + term
        ds = ds + (l + 2 * m) * term
        a = np.abs(term)
        peak = np.maximum(peak, a)
        big = np.abs(s) > _BIG
        if np.any(big):
            for arr in (term, s, ds, peak):
                arr[big] /= _BIG
            logs = logs + np.where(big, _LOG_BIG, 0.0)
        past_peak = m * (m + l) > q
        if np.all(past_peak & ((l + 2 * m) * a <= 1e-17 * np.maximum(np.abs(s), peak))):
            break
        if m > 200000:  # pragma: no cover - guarded by the argument box
            raise CapacityError("series failed to converge")
    return s, ds / x, logs


# --------------------------------------------------------------------------
# Miller backward recurrence


@dataclass
class _MillerSweep:
    mant: np.ndarray  # (lmax+2, M) mantissas of J_0..J_{lmax+1}
    logs: np.ndarray  # matching log scales
    counts: np.ndarray | None  # zeros of J_l in (0, x) for l = 0..lmax
    neumann0: np.ndarray | None
    neumann1: np.ndarray | None


def _miller_start(lmax: int, xmax: float) -> int:
    top = max(lmax, int(math.ceil(xmax)))
    return top + int(math.sqrt(200.0 * (top + 10))) + 20


def _miller(x: np.ndarray, lmax: int, counts: bool = False, neumann: bool = False) -> _MillerSweep:
    """Backward recurrence for J_0..J_{lmax+1} at every entry of ``x``.

    Normalisation uses J_0 + 2 sum J_2k = 1.  With ``counts`` the sign
    changes of the sequence J_l, J_{l+1}, ... are tallied; their number is
    the count of zeros of J_l below x.  With ``neumann`` the two alternating
    sums needed for Y_0 and Y_1 are accumulated as well.
    """
    M = x.size
    N = _miller_start(lmax, float(np.max(x)))
    store = lmax + 2
    mant = np.zeros((store, M))
    slog = np.zeros((store, M))
    scale = np.zeros(M)
    f_next = np.zeros(M)
    f = np.ones(M)
    even = np.zeros(M)
    s0 = np.zeros(M)
    s1 = np.zeros(M)
    change = np.zeros((store, M), dtype=np.int64) if counts else None
    tail = np.zeros(M, dtype=np.int64)
    two_over_x = 2.0 / x
    for k in range(N, 0, -1):
        if k < store:
            mant[k] = f
            slog[k] = scale
        if k % 2 == 0:
            even += f
            if neumann:
                h = k // 2
                s0 += (-1.0 if h % 2 else 1.0) / h * f
        elif neumann:
            h = (k + 1) // 2
            w = (-1.0 if h % 2 else 1.0) / h
            if k >= 3:
                h2 = (k - 1) // 2
                w -= (-1.0 if h2 % 2 else 1.0) / h2
            s1 += w * f
        f_prev = k * two_over_x * f - f_next
        if counts:
            flip = (f_prev < 0.0) != (f < 0.0)
            if k - 1 < store:
                change[k - 1] = flip
            else:
                tail += flip
        big = np.abs(f_prev) > _BIG
        if np.any(big):
            f_prev[big] /= _BIG
            f[big] /= _BIG
            even[big] /= _BIG
            s0[big] /= _BIG
            s1[big] /= _BIG
            scale[big] += _LOG_BIG
        f_next = f
        f = f_prev
    mant[0] = f
    slog[0] = scale
    norm = f + 2.0 * even
    sgn = np.sign(norm)
    lognorm = np.log(np.abs(norm))
    logs = slog - scale[None, :] - lognorm[None, :]
    mant = mant * sgn[None, :]
    cnt = None
    if counts:
        # change[k] flags a sign flip between entries k and k+1
        cnt = np.cumsum(change[::-1], axis=0)[::-1] + tail[None, :]
        cnt = cnt[: lmax + 1]
    n0 = s0 / norm if neumann else None
    n1 = s1 / norm if neumann else None
    return _MillerSweep(mant, logs, cnt, n0, n1)


# --------------------------------------------------------------------------
# Hankel asymptotic expansion


def _hankel(nu: int, x: np.ndarray):
    """J_nu and Y_nu from the large-argument expansion (valid for x >> nu^2)."""
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    a = np.ones_like(x)
    k = 0
    while True:
        k += 1
        a = a * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p = p + sign * a
        else:
            q = q + sign * a
        if np.all(np.abs(a) < 1e-17) or k > 300:
            break
    chi = x - (0.5 * nu + 0.25) * math.pi
    amp = np.sqrt(2.0 / (math.pi * x))
    c, s = np.cos(chi), np.sin(chi)
    return amp * (p * c - q * s), amp * (p * s + q * c)


# --------------------------------------------------------------------------
# public evaluators


def _j_arrays(l: int, x: np.ndarray):
    value = np.empty_like(x)
    deriv = np.empty_like(x)
    logs = np.zeros_like(x)
    series = (x <= 6.0) | (x * x <= 4.0 * (l + 1))
    asym = (~series) & (x >= 25.0 + 0.5 * l * l)
    miller = ~(series | asym)
    if np.any(series):
        v, d, g = _ascending_series(l, x[series], -1.0)
        value[series], deriv[series], logs[series] = v, d, g
    if np.any(asym):
        xa = x[asym]
        j0, _ = _hankel(l, xa)
        j1, _ = _hankel(l + 1, xa)
        value[asym] = j0
        deriv[asym] = (l / xa) * j0 - j1
    if np.any(miller):
        xm = x[miller]
        sw = _miller(xm, l)
        # bring J_{l+1} onto the scale of J_l
        v = sw.mant[l]
        w = sw.mant[l + 1] * np.exp(sw.logs[l + 1] - sw.logs[l])
        value[miller] = v
        deriv[miller] = (l / xm) * v - w
        logs[miller] = sw.logs[l]
    return _fold(value, deriv, logs)


def bessel_j(l: int, x) -> CylinderValue:
    """Bessel function of the first kind J_l(x) and its derivative.

    Parameters
    ----------
    l : int
        Order, ``0 <= l <= 500``.
    x : float or array
        Positive argument, at most ``1e4``.
    """
    l = _check_order(l)
    arr = _check_arg(x)
    return _shape_like(x, *_j_arrays(l, arr))


def _y01(x: np.ndarray):
    """Y_0 and Y_1 at every entry of x."""
    y0 = np.empty_like(x)
    y1 = np.empty_like(x)
    asym = x >= 25.0
    if np.any(asym):
        _, y0[asym] = _hankel(0, x[asym])
        _, y1[asym] = _hankel(1, x[asym])
    rest = ~asym
    if np.any(rest):
        xr = x[rest]
        sw = _miller(xr, 1, neumann=True)
        j0 = sw.mant[0] * np.exp(sw.logs[0])
        j1 = sw.mant[1] * np.exp(sw.logs[1])
        lg = np.log(0.5 * xr) + _EULER_GAMMA
        y0[rest] = (2.0 / math.pi) * (lg * j0 - 2.0 * sw.neumann0)
        y1[rest] = (2.0 / math.pi) * (lg * j1 - j0 / xr + sw.neumann1)
    return y0, y1


def bessel_y(l: int, x) -> CylinderValue:
    """Bessel function of the second kind Y_l(x) and its derivative."""
    l = _check_order(l)
    arr = _check_arg(x)
    y0, y1 = _y01(arr)
    if l == 0:
        return _shape_like(x, *_fold(y0, -y1, np.zeros_like(arr)))
    prev, cur = y0, y1
    logs = np.zeros_like(arr)
    for k in range(1, l):
        nxt = (2.0 * k / arr) * cur - prev
        big = np.abs(nxt) > _BIG
        if np.any(big):
            nxt[big] /= _BIG
            cur[big] /= _BIG
            logs[big] += _LOG_BIG
        prev, cur = cur, nxt
    deriv = prev - (l / arr) * cur
    return _shape_like(x, *_fold(cur, deriv, logs))


def bessel_i(l: int, x) -> CylinderValue:
    """Modified Bessel function I_l(x) and its derivative."""
    l = _check_order(l)
    arr = _check_arg(x)
    s, ds, logs = _ascending_series(l, arr, 1.0)
    return _shape_like(x, *_fold(s, ds, logs))


# --------------------------------------------------------------------------
# ladders used by the vectorised scanners


@dataclass(frozen=True)
class BesselLadder:
    """J_l(x) for every order ``0..lmax`` at every argument.

    ``value``, ``derivative`` and ``log_scale`` have shape ``(lmax+1, M)``.
    ``zero_count[l]`` is the number of zeros of J_l in ``(0, x)``.
    """

    x: np.ndarray
    value: np.ndarray
    derivative: np.ndarray
    log_scale: np.ndarray
    zero_count: np.ndarray


def bessel_j_ladder(lmax: int, x) -> BesselLadder:
    """All orders ``0..lmax`` of J at once, from one Miller sweep.

    Mantissas are normalised so that ``max(|J|, |J'|/(1+x)) ~ 1`` whenever
    the true magnitude would leave the representable range.
    """
    lmax = _check_order(lmax)
    arr = _check_arg(x, _ZERO_ARG_LIMIT)
    sw = _miller(arr, lmax, counts=True)
    ls = np.arange(lmax + 1)[:, None]
    v = sw.mant[: lmax + 1]
    w = sw.mant[1 : lmax + 2] * np.exp(sw.logs[1 : lmax + 2] - sw.logs[: lmax + 1])
    d = (ls / arr[None, :]) * v - w
    logs = sw.logs[: lmax + 1].copy()
    value, deriv, logs = _fold(v.ravel(), d.ravel(), logs.ravel())
    shape = v.shape
    return BesselLadder(arr, value.reshape(shape), deriv.reshape(shape), logs.reshape(shape), sw.counts)


def j_zero_count(l: int, x) -> np.ndarray:
    """Number of zeros of J_l in ``(0, x)`` via the sign changes of J_l, J_{l+1}, ..."""
    l = _check_order(l)
    arr = _check_arg(x, _ZERO_ARG_LIMIT)
    sw = _miller(arr, l, counts=True)
    return sw.counts[l]


# --------------------------------------------------------------------------
# zeros


def _zero_guess(l: int, k: int) -> float:
    if l == 0 or k > l:
        beta = (k + 0.5 * l - 0.25) * math.pi
        mu = 4.0 * l * l
        e = 8.0 * beta
        return beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e**3)
    t = 3.0 * math.pi * (4 * k - 1) / 8.0
    airy = t ** (2.0 / 3.0) * (1.0 + 5.0 / (48.0 * t * t))
    h = (0.5 * l) ** (1.0 / 3.0)
    return l + airy * h + 0.15 * airy * airy / h


def _j_scalar(l: int, x: float) -> tuple[float, float]:
    v, d, g = _j_arrays(l, np.array([x]))
    return float(v[0] * math.exp(g[0])), float(d[0] * math.exp(g[0]))


def bessel_j_zero(l: int, k: int) -> float:
    """The k-th positive zero j_{l,k} of J_l.

    The zero is first bracketed by the sign-change count (which pins the
    index exactly), then polished by Newton steps that fall back to
    bisection whenever they leave the bracket.
    """
    l = _check_order(l)
    if int(k) != k or k < 1:
        raise DomainError(f"zero index must be a positive integer, got {k!r}")
    if k > 10_000:
        raise CapacityError("zero index exceeds the supported maximum 10000")
    k = int(k)

    def count(v: float) -> int:
        return int(j_zero_count(l, v)[0])

    g = _zero_guess(l, k)
    lo = max(g - 1.5, max(l, 1e-3) * 0.999 if l else 1e-3)
    hi = g + 1.5
    while count(lo) >= k:
        lo = max(0.5 * lo, lo - 2.0 * math.pi)
    while count(hi) < k:
        hi += 2.0 * math.pi
    while True:
        mid = 0.5 * (lo + hi)
        c_lo, c_hi = count(lo), count(hi)
        if c_lo == k - 1 and c_hi == k:
            break
        if count(mid) >= k:
            hi = mid
        else:
            lo = mid
    f_lo, _ = _j_scalar(l, lo)
    x = min(max(g, lo), hi)
    for _ in range(200):
        f, df = _j_scalar(l, x)
        if f == 0.0:
            return x
        if (f < 0.0) == (f_lo < 0.0):
            lo, f_lo = x, f
        else:
            hi = x
        step = f / df if df != 0.0 else math.inf
        nxt = x - step
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 4e-16 * x or hi - lo <= 4e-16 * x:
            return nxt
        x = nxt
    return x  # pragma: no cover
