"""Extended-precision reference values for the cylinder functions.

These evaluators sum the defining power series in mpmath arithmetic with
enough guard digits to absorb the cancellation of the alternating series.
They are slow and exist only to check :mod:`itelab.specialfun`; no
production code path imports this module.
"""

from __future__ import annotations

import math

import mpmath


def _digits(x: float) -> int:
    # the largest series term is about exp(x); carry that many extra digits
    return 40 + int(x / math.log(10.0)) + 10


def _j_series(n: int, x: mpmath.mpf) -> mpmath.mpf:
    if n < 0:
        return (-1) ** n * _j_series(-n, x)
    h = x / 2
    q = -h * h
    term = h**n / mpmath.factorial(n)
    total = term
    m = 0
    tol = mpmath.mpf(10) ** (-(mpmath.mp.dps - 5))
    while True:
        m += 1
        term = term * q / (m * (m + n))
        total += term
        if m * (m + n) > abs(q) and abs(term) < tol * abs(total):
            break
    return total


def _i_series(n: int, x: mpmath.mpf) -> mpmath.mpf:
    n = abs(n)
    h = x / 2
    q = h * h
    term = h**n / mpmath.factorial(n)
    total = term
    m = 0
    tol = mpmath.mpf(10) ** (-(mpmath.mp.dps - 5))
    while True:
        m += 1
        term = term * q / (m * (m + n))
        total += term
        if m * (m + n) > q and term < tol * total:
            break
    return total


def _y_series(n: int, x: mpmath.mpf) -> mpmath.mpf:
    if n < 0:
        return (-1) ** n * _y_series(-n, x)
    h = x / 2
    head = mpmath.mpf(0)
    for k in range(n):
        head += mpmath.factorial(n - k - 1) / mpmath.factorial(k) * h ** (2 * k - n)
    gamma = mpmath.euler
    q = -h * h
    term = h**n / mpmath.factorial(n)
    # psi(k+1) + psi(n+k+1) with psi(j+1) = -gamma + H_j
    harm_k = mpmath.mpf(0)
    harm_nk = mpmath.fsum(mpmath.mpf(1) / j for j in range(1, n + 1))
    tail = term * (-2 * gamma + harm_k + harm_nk)
    m = 0
    tol = mpmath.mpf(10) ** (-(mpmath.mp.dps - 5))
    while True:
        m += 1
        term = term * q / (m * (m + n))
        harm_k += mpmath.mpf(1) / m
        harm_nk += mpmath.mpf(1) / (n + m)
        piece = term * (-2 * gamma + harm_k + harm_nk)
        tail += piece
        if m * (m + n) > abs(q) and abs(piece) < tol * (abs(tail) + 1):
            break
    return -head / mpmath.pi + 2 / mpmath.pi * mpmath.log(h) * _j_series(n, x) - tail / mpmath.pi


def _eval(kind: str, l: int, x: float) -> tuple[float, float]:
    with mpmath.workdps(_digits(x)):
        xm = mpmath.mpf(x)
        f = {"j": _j_series, "y": _y_series, "i": _i_series}[kind]
        v = f(l, xm)
        if kind == "i":
            d = (f(l - 1, xm) + f(l + 1, xm)) / 2
        else:
            d = (f(l - 1, xm) - f(l + 1, xm)) / 2
        return float(v), float(d)


def j(l: int, x: float) -> tuple[float, float]:
    """High-precision ``(J_l(x), J_l'(x))``."""
    return _eval("j", l, x)


def y(l: int, x: float) -> tuple[float, float]:
    """High-precision ``(Y_l(x), Y_l'(x))``."""
    return _eval("y", l, x)


def i(l: int, x: float) -> tuple[float, float]:
    """High-precision ``(I_l(x), I_l'(x))``."""
    return _eval("i", l, x)


def j_zero(l: int, k: int) -> float:
    """k-th zero of J_l by bisection on the series oracle.

    The bracket is found by stepping from x = l in increments of 1, which
    is safely below the zero spacing of about pi.
    """
    with mpmath.workdps(60):
        found = 0
        a = mpmath.mpf(max(l, 0.5))
        fa = _j_series(l, a)
        while True:
            b = a + 1
            with mpmath.workdps(_digits(float(b))):
                fb = _j_series(l, b)
            if fa * fb < 0:
                found += 1
                if found == k:
                    break
            a, fa = b, fb
        for _ in range(80):
            mid = (a + b) / 2
            with mpmath.workdps(_digits(float(mid))):
                fm = _j_series(l, mid)
            if fa * fm <= 0:
                b = mid
            else:
                a, fa = mid, fm
        return float((a + b) / 2)


FUNCTIONS = {"j": j, "y": y, "i": i, "j_zero": j_zero}
