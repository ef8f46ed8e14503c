"""Reference media shipped with the library.

``gamma_plus`` has an index just below one near the boundary and a large
one inside (``n'(R) > 0``, ``V_n - 2 V_0 > 0``).  Its interior decays like a
power ``r^-p`` with ``p < 2`` so that ``n r^2`` increases with ``r``: the
radial problem then has no tunnelling barrier and no exponentially narrow
Dirichlet poles.  ``gamma_minus`` has a low-index
core and an index slightly above one in a boundary layer (``n'(R) < 0``,
``V_0 - 2 V_n > 0``).  ``parabolic`` is a gentle third medium used by the
identity grids, and :func:`singular_fixture` tunes a parabolic medium so
that one of its Dirichlet eigenvalues coincides with a free one.
"""

from __future__ import annotations

import math

from numpy.polynomial import Polynomial

from .radialode import MediumProfile, Piece, dirichlet_eigenvalue
from .specialfun import bessel_j_zero


def layered(R: float, core: float, slope: float, ramp: tuple[float, float], gamma: int) -> MediumProfile:
    """Constant core, C1 cubic ramp, and a linear boundary layer.

    ``n = core`` for ``r < ramp[0] R``; ``n = 1 + gamma slope (r - R)`` for
    ``r > ramp[1] R``; in between the cubic Hermite interpolant matching
    values and slopes.  Hence ``n'(R) = gamma slope`` and all higher
    boundary derivatives vanish.
    """
    a, b = ramp[0] * R, ramp[1] * R
    h = b - a
    s = gamma * slope
    nb = 1.0 - s * (R - b)
    tau = Polynomial([-a / h, 1.0 / h])
    h00 = Polynomial([1.0, 0.0, -3.0, 2.0])
    h01 = Polynomial([0.0, 0.0, 3.0, -2.0])
    h11 = Polynomial([0.0, 0.0, -1.0, 1.0])
    cubic = (core * h00 + nb * h01 + s * h * h11)(tau)
    outer = Polynomial([1.0 - s * R, s])
    pieces = (
        Piece(0.0, a, (float(core),)),
        Piece(a, b, tuple(float(c) for c in cubic.coef)),
        Piece(b, R, tuple(float(c) for c in outer.coef)),
    )
    return MediumProfile(R, pieces, gamma=gamma)


def _hermite(x0: float, x1: float, f0: float, d0: float, f1: float, d1: float) -> Polynomial:
    h = x1 - x0
    tau = Polynomial([-x0 / h, 1.0 / h])
    basis = (
        f0 * Polynomial([1.0, 0.0, -3.0, 2.0])
        + d0 * h * Polynomial([0.0, 1.0, -2.0, 1.0])
        + f1 * Polynomial([0.0, 0.0, 3.0, -2.0])
        + d1 * h * Polynomial([0.0, 0.0, -1.0, 1.0])
    )
    return basis(tau)


def power_law(
    R: float,
    core: float,
    power: float,
    knee: float,
    layer: float,
    slope: float = 0.5,
    knee_value: float = 1.0,
    segments: int = 8,
) -> MediumProfile:
    """Rising-index medium without a tunnelling barrier (``gamma = +1``).

    ``n = core`` near the centre, then ``n ~ K r^-power`` (piecewise cubic
    Hermite on a geometric grid) down to ``knee_value`` at ``r = knee R``, a
    C1 cubic dip, and the linear layer ``n = 1 + slope (r - R)`` on
    ``r > layer R``.  For ``power < 2`` the product ``n r^2`` increases.
    """
    b, c = knee * R, layer * R
    a = b * (knee_value / core) ** (1.0 / power)
    K = core * a**power

    def f(r: float) -> float:
        return K * r**-power

    def df(r: float) -> float:
        return -power * K * r ** (-power - 1.0)

    pieces = [Piece(0.0, a, (float(core),))]
    nodes = [a * (b / a) ** (i / segments) for i in range(segments + 1)]
    nodes[-1] = b
    for x0, x1 in zip(nodes[:-1], nodes[1:]):
        poly = _hermite(x0, x1, f(x0), df(x0), f(x1), df(x1))
        pieces.append(Piece(x0, x1, tuple(float(v) for v in poly.coef)))
    dip = _hermite(b, c, f(b), df(b), 1.0 - slope * (R - c), slope)
    pieces.append(Piece(b, c, tuple(float(v) for v in dip.coef)))
    pieces.append(Piece(c, R, (1.0 - slope * R, slope)))
    return MediumProfile(R, tuple(pieces), gamma=1)


def gamma_plus() -> MediumProfile:
    """Unit disk, core index 25 with an ``r^-1.85`` fall-off, ``n'(R) = 1/2``.

    ``V_n - 2 V_0`` is about 25% of ``V_n``.
    """
    return power_law(1.0, core=25.0, power=1.85, knee=0.75, layer=0.85, knee_value=1.05)


def gamma_minus() -> MediumProfile:
    """Radius 2, core index 0.05, ``n'(R) = -1/2``.

    ``V_0 - 2 V_n`` is about 24% of ``V_0``.
    """
    return layered(2.0, core=0.05, slope=0.5, ramp=(0.75, 0.9), gamma=-1)


def parabolic(amplitude: float = 0.5, R: float = 1.0) -> MediumProfile:
    """``n = 1 + A (1 - r^2/R^2)``; ``gamma = -sign(A)``."""
    return MediumProfile.from_polynomial(R, [1.0 + amplitude, 0.0, -amplitude / R**2])


def reference_profiles() -> dict[str, MediumProfile]:
    return {"gamma_plus": gamma_plus(), "gamma_minus": gamma_minus(), "parabolic": parabolic()}


def singular_fixture(l: int = 0, k_perturbed: int = 2, k_free: int = 1, guess: float = 9.0) -> tuple[MediumProfile, float]:
    """Parabolic medium sharing a mode-``l`` Dirichlet eigenvalue with ``n = 1``.

    The amplitude ``A`` of ``n = 1 + A (1 - r^2)`` is tuned by a secant
    iteration until the ``k_perturbed``-th perturbed eigenvalue equals
    ``j_{l,k_free}^2``.  Returns the profile and the common eigenvalue.
    """
    target = bessel_j_zero(l, k_free) ** 2

    def miss(a: float) -> float:
        return dirichlet_eigenvalue(parabolic(a), l, k_perturbed) - target

    a0, a1 = guess, guess * 1.05
    f0, f1 = miss(a0), miss(a1)
    for _ in range(60):
        if f1 == f0:
            break
        a2 = a1 - f1 * (a1 - a0) / (f1 - f0)
        a0, f0 = a1, f1
        a1, f1 = a2, miss(a2)
        if abs(f1) <= 1e-13 * target:
            break
    if not math.isfinite(a1) or abs(f1) > 1e-10 * target:
        raise RuntimeError("singular fixture secant failed to converge")
    return parabolic(a1), target
