"""Mode-wise boundary and scattering scalars on the disk.

Every operator on the boundary circle is diagonal in the Fourier modes
``exp(i l theta)``, so each one reduces to a scalar per ``(l, lam)``.  The
frames for ``l`` and ``-l`` coincide; functions accept either sign and work
with ``|l|``.

Conventions
-----------
* ``k = sqrt(lam)`` and all normal derivatives are ``d/dr`` at ``r = R``.
* ``H`` is the outgoing Hankel function ``J + iY``.
* ``scattering_coeff`` returns ``a_l = (i/pi) s_l`` where the scattered
  field for the incident mode ``J_l(kr)`` is ``s_l H_l(kr)``.  The matching
  partial-wave S-matrix entry is ``1 + 2 s_l = 1 - 2 pi i a_l``.
* ``g_coeffs`` returns the far-field coefficient of the outgoing exterior
  Dirichlet solution and the adjoint of the incoming one, normalised so
  that ``g_plus * m0_plus * g_minus_star`` equals the sound-soft obstacle
  coefficient.

Complex results are ordinary Python complex numbers (IEEE pairs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatchingError, MismatchError, NotAnEigenvalueError
from .radialode import MediumProfile, RadialPropagator, eigen_data
from .specialfun import bessel_i, bessel_j, bessel_y

# |u(R)| below this multiple of |u'(R)| R is treated as sitting on a pole
POLE_TOL = 1e-13
# window, relative to (1 + lam), inside which D_n switches to the regular part
POLE_WINDOW = 1e-6
RESIDUE_RTOL = 1e-6


class PoleMarker:
    """Returned instead of a number when a D-N value sits on a pole."""

    _instance: "PoleMarker | None" = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "POLE"

    def __reduce__(self):
        return (PoleMarker, ())


POLE = PoleMarker()


def is_pole(value) -> bool:
    return value is POLE


# --------------------------------------------------------------------------
# free-space cylinder data


@dataclass(frozen=True)
class _Cyl:
    """J, J', Y, Y' at ``x = kR`` with separate log scales (arrays)."""

    j: np.ndarray
    dj: np.ndarray
    sj: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    sy: np.ndarray


def _cyl(l: int, x) -> _Cyl:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    J = bessel_j(l, x)
    Y = bessel_y(l, x)
    return _Cyl(np.atleast_1d(J.value), np.atleast_1d(J.derivative), np.atleast_1d(J.log_scale),
                np.atleast_1d(Y.value), np.atleast_1d(Y.derivative), np.atleast_1d(Y.log_scale))


def _h_parts(c: _Cyl):
    """``(J, J', Y, Y')`` rescaled by a common factor, plus that factor's log."""
    top = np.maximum(c.sj, c.sy)
    fj = np.exp(c.sj - top)
    fy = np.exp(c.sy - top)
    return c.j * fj, c.dj * fj, c.y * fy, c.dy * fy, top


def _as_scalar(v):
    v = np.asarray(v)
    return v.item() if v.size == 1 else v


# --------------------------------------------------------------------------
# D-N values


def dtn_0(l: int, lam, R: float):
    """Free interior D-N value ``k J_l'(kR) / J_l(kR)``.

    For ``lam < 0`` the modified Bessel function is used; ``lam = 0`` gives
    ``|l| / R``.  Returns :data:`POLE` at a free Dirichlet eigenvalue.
    """
    l = abs(int(l))
    lam = float(lam)
    if lam == 0.0:
        return l / R
    if lam < 0.0:
        t = math.sqrt(-lam)
        I = bessel_i(l, t * R)
        return t * I.derivative / I.value
    k = math.sqrt(lam)
    J = bessel_j(l, k * R)
    if abs(J.value) <= POLE_TOL * abs(J.derivative) * k * R:
        return POLE
    return k * J.derivative / J.value


def dtn_n(profile: MediumProfile, l: int, lam: float):
    """Interior D-N value ``u'(R)/u(R)`` for the perturbed medium.

    Returns :data:`POLE` when ``u(R)`` vanishes to working precision.
    """
    prop = RadialPropagator(profile, l, abs(lam))
    res = prop.evaluate(np.array([float(lam)]))
    u, du = float(res.u[0]), float(res.du[0])
    if abs(u) <= POLE_TOL * abs(du) * profile.R:
        return POLE
    return du / u


def dtn_ext_plus(l: int, lam, R: float):
    """Outgoing exterior D-N value ``k H_l'(kR) / H_l(kR)``.

    Accepts a scalar or an array of positive energies.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= 0):
        raise ValueError("dtn_ext_plus needs lam > 0")
    k = np.sqrt(lam_arr)
    j, dj, y, dy, _ = _h_parts(_cyl(abs(int(l)), k * R))
    H = j + 1j * y
    if np.any(np.abs(H) == 0.0):
        raise AssertionError("Hankel function vanished on the real axis")
    out = k * (dj + 1j * dy) / H
    return _as_scalar(out)


# --------------------------------------------------------------------------
# Laurent data


@dataclass(frozen=True)
class LaurentData:
    """Local structure ``residue / (pole - lam) + regular`` of a D-N value.

    ``residue_formula`` and ``residue_fit`` are the two independent
    estimates; ``residue`` is the formula value.  ``slope`` and ``curvature``
    are the fitted Taylor terms of the regular part around the pole.
    """

    pole: float
    residue: float
    regular_value: float
    mode: int
    operator_tag: str
    residue_fit: float
    slope: float = 0.0
    curvature: float = 0.0

    def regular_part(self, lam: float) -> float:
        x = lam - self.pole
        return self.regular_value + self.slope * x + self.curvature * x * x

    @property
    def residue_mismatch(self) -> float:
        return abs(self.residue_fit - self.residue) / abs(self.residue)


def _fit_laurent(values: np.ndarray, offsets: np.ndarray) -> tuple[float, float, float, float]:
    """Least squares for ``c/(-x) + d + e x + f x^2`` on offsets ``x``."""
    A = np.column_stack([-1.0 / offsets, np.ones_like(offsets), offsets, offsets**2])
    scale = np.abs(A).max(axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, values, rcond=None)
    c, d, e, f = coef / scale
    return float(c), float(d), float(e), float(f)


def _stencil(pole: float) -> np.ndarray:
    delta = 1e-4 * (1.0 + pole)
    return delta * np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])


def laurent_at_pole(profile: MediumProfile, l: int, pole: float, check: bool = True) -> LaurentData:
    """Residue and regular part of ``Lambda_n`` at a Dirichlet eigenvalue.

    The residue is computed from the eigenfunction,
    ``-R u'(R)^2 / int_0^R u^2 n r dr``, and independently by fitting the
    pole-plus-polynomial model to D-N values on a symmetric stencil.  A
    disagreement above ``1e-6`` relative raises :class:`MismatchError`.
    """
    l = abs(int(l))
    ed = eigen_data(profile, l, pole)
    q_formula = -profile.R * ed.duR**2 / ed.norm
    x = _stencil(pole)
    prop = RadialPropagator(profile, l, pole + x[-1])
    res = prop.evaluate(pole + x)
    vals = res.du / res.u
    c, d, e, f = _fit_laurent(vals, x)
    data = LaurentData(float(pole), float(q_formula), d, l, "perturbed", c, e, f)
    if check and data.residue_mismatch > RESIDUE_RTOL:
        raise MismatchError(f"mode {l} pole {pole}: residue formula {q_formula} vs fit {c} (rel {data.residue_mismatch:.3g})")
    return data


def laurent_at_free_pole(l: int, pole: float, R: float, check: bool = True) -> LaurentData:
    """Residue and regular part of ``Lambda_0`` at ``pole = j_{l,k}^2 / R^2``.

    The eigenfunction formula reduces to ``-2 pole / R`` in closed form.
    """
    l = abs(int(l))
    k = math.sqrt(pole)
    J = bessel_j(l, k * R)
    if abs(J.value) > 1e-6 * abs(J.derivative) * k * R:
        raise NotAnEigenvalueError(f"lambda={pole} is not a free mode-{l} Dirichlet eigenvalue")
    q_formula = -2.0 * pole / R
    x = _stencil(pole)
    kk = np.sqrt(pole + x)
    Jx = bessel_j(l, kk * R)
    vals = kk * Jx.derivative / Jx.value
    c, d, e, f = _fit_laurent(vals, x)
    data = LaurentData(float(pole), q_formula, d, l, "free", c, e, f)
    if check and data.residue_mismatch > RESIDUE_RTOL:
        raise MismatchError(f"free mode {l} pole {pole}: residue {q_formula} vs fit {c}")
    return data


def _nearby_pole(prop: RadialPropagator, lam: float) -> float | None:
    w = POLE_WINDOW * (1.0 + abs(lam))
    lo, hi = lam - w, lam + w
    if hi <= 0:
        return None
    lo = max(lo, 1e-300)
    cnt = prop.evaluate(np.array([lo, hi])).osc
    if cnt[0] == cnt[1]:
        return None
    from . import _roots

    kref = prop.kappa_ref

    def f(xs):
        return prop.evaluate(xs).normalized(kref)[0]

    return float(_roots.refine_brackets(f, np.array([lo]), np.array([hi]))[0])


def regularized_dtn_n(profile: MediumProfile, l: int, lam: float) -> float:
    """``D_n(lam)``: the D-N value off poles, its regular part near them."""
    prop = RadialPropagator(profile, l, abs(lam) * (1 + 2 * POLE_WINDOW) + 2 * POLE_WINDOW)
    pole = _nearby_pole(prop, lam) if lam > 0 else None
    if pole is None:
        res = prop.evaluate(np.array([float(lam)]))
        return float(res.du[0] / res.u[0])
    return laurent_at_pole(profile, l, pole).regular_part(lam)


def regularized_dtn_0(l: int, lam: float, R: float) -> float:
    """``D_0(lam)`` for the free medium."""
    from .specialfun import bessel_j_zero, j_zero_count

    l = abs(int(l))
    if lam <= 0:
        return dtn_0(l, lam, R)
    w = POLE_WINDOW * (1.0 + lam)
    a = math.sqrt(max(lam - w, 1e-300)) * R
    b = math.sqrt(lam + w) * R
    ca, cb = int(j_zero_count(l, a)[0]), int(j_zero_count(l, b)[0])
    if ca == cb:
        return dtn_0(l, lam, R)
    pole = (bessel_j_zero(l, cb) / R) ** 2
    return laurent_at_free_pole(l, pole, R).regular_part(lam)


# --------------------------------------------------------------------------
# single layers, scattering and far-field coefficients


def single_layer_free(l: int, lam, R: float):
    """Closed-form ``M_{0,+}`` mode value ``(i pi R / 2) J_l(kR) H_l(kR)``."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    k = np.sqrt(lam_arr)
    c = _cyl(abs(int(l)), k * R)
    JH = c.j * c.j * np.exp(2 * c.sj) + 1j * c.j * c.y * np.exp(c.sj + c.sy)
    return _as_scalar(0.5j * math.pi * R * JH)


def match_single_layer(u, du, l: int, lam, R: float):
    """Boundary trace of the field with unit jump ``u'_in - u'_out = 1``.

    ``(u, du)`` is the interior regular solution at ``R`` (any scale); the
    exterior is ``beta H_l(kr)``.  Solves the 2x2 matching system.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    du = np.atleast_1d(np.asarray(du, dtype=float))
    k = np.sqrt(lam_arr)
    j, dj, y, dy, _ = _h_parts(_cyl(abs(int(l)), k * R))
    H = j + 1j * y
    dH = k * (dj + 1j * dy)
    # [u  -H ] [alpha]   [0]
    # [du -dH] [beta ] = [1]
    det = -u * dH + H * du
    size = (np.abs(u) + np.abs(du) / k) * (np.abs(H) + np.abs(dH) / k) * k
    if np.any(np.abs(det) <= 1e-13 * size):
        raise DegenerateMatchingError(f"matching system singular for mode {l}")
    alpha = H / det
    return _as_scalar(alpha * u)


def single_layer_n(profile: MediumProfile, l: int, lam: float) -> complex:
    """``M_+`` mode value by matching the interior solution to ``H_l``."""
    prop = RadialPropagator(profile, l, lam)
    res = prop.evaluate(np.array([float(lam)]))
    return complex(match_single_layer(res.u, res.du, l, lam, profile.R))


def _scatter_s(u, du, l: int, lam, R: float):
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    k = np.sqrt(lam_arr)
    c = _cyl(abs(int(l)), k * R)
    top = np.maximum(c.sj, c.sy)
    fj = np.exp(c.sj - top)
    fy = np.exp(c.sy - top)
    num = (k * c.dj * u - c.j * du) * fj
    den = num + 1j * (k * c.dy * u - c.y * du) * fy
    return -num / den


def scattering_from_boundary(u, du, l: int, lam, R: float):
    """``a_l`` from interior boundary data (vectorised)."""
    return _as_scalar(1j / math.pi * _scatter_s(u, du, l, lam, R))


def scattering_coeff(profile: MediumProfile, l: int, lam: float) -> complex:
    """Far-field coefficient ``a_l`` of the medium for incident mode ``J_l``."""
    prop = RadialPropagator(profile, l, lam)
    res = prop.evaluate(np.array([float(lam)]))
    return complex(scattering_from_boundary(res.u, res.du, l, lam, profile.R))


def s_matrix_entry(profile: MediumProfile, l: int, lam: float) -> complex:
    """Partial-wave S-matrix entry ``1 - 2 pi i a_l``; unimodular."""
    return 1.0 - 2j * math.pi * scattering_coeff(profile, l, lam)


def obstacle_coeff(l: int, lam, R: float):
    """Sound-soft disk coefficient ``(i/pi)(-J_l(kR)/H_l(kR))``."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    k = np.sqrt(lam_arr)
    j, _, y, _, _ = _h_parts(_cyl(abs(int(l)), k * R))
    return _as_scalar(1j / math.pi * (-j / (j + 1j * y)))


def g_coeffs(l: int, lam, R: float):
    """``(g_plus, g_minus_star)`` mode values.

    ``g_plus = (2/pi) (-i)^(l+1) / H_l(kR)``; ``g_minus_star`` is the adjoint
    of ``g_minus = (2/pi) i (-i)^l / H_l^(2)(kR)`` under the pairing that
    divides by the circumference factor ``2R``.
    """
    l = abs(int(l))
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    k = np.sqrt(lam_arr)
    c = _cyl(l, k * R)
    j, _, y, _, top = _h_parts(c)
    inv_h = np.exp(-top) / (j + 1j * y)
    phase_p = (-1j) ** ((l + 1) % 4)
    g_plus = 2.0 / math.pi * phase_p * inv_h
    # conj(1/H^(2)) = 1/H^(1) on the real axis
    g_minus = 2.0 / math.pi * 1j * (-1j) ** (l % 4) * np.conj(inv_h)
    g_minus_star = np.conj(g_minus) / (2.0 * R)
    return _as_scalar(g_plus), _as_scalar(g_minus_star)


# --------------------------------------------------------------------------
# frames


@dataclass(frozen=True)
class ModeFrame:
    """All mode-``l`` boundary and scattering scalars at one energy."""

    l: int
    lam: float
    dtn_n: float | PoleMarker
    dtn_0: float | PoleMarker
    dtn_ext_plus: complex
    m_plus: complex
    m0_plus: complex
    g_plus: complex
    g_minus_star: complex
    a_l: complex
    a_ext_l: complex

    def residuals(self) -> dict[str, float]:
        """Identity residuals, each relative to its natural scale."""
        out = {}
        if not is_pole(self.dtn_n):
            lhs = self.m_plus * (self.dtn_n - self.dtn_ext_plus)
            out["inverse_n"] = abs(lhs - 1.0)
        if not is_pole(self.dtn_0):
            lhs = self.m0_plus * (self.dtn_0 - self.dtn_ext_plus)
            out["inverse_0"] = abs(lhs - 1.0)
        gg = self.g_plus * self.g_minus_star
        scale = max(abs(self.a_ext_l), abs(self.a_l), 1e-300)
        out["factorization"] = abs(gg * self.m_plus - (self.a_ext_l - self.a_l)) / scale
        out["corollary"] = abs(gg * (self.m_plus - self.m0_plus) + self.a_l) / max(abs(self.a_l), abs(gg * self.m0_plus), 1e-300)
        return out


def mode_frames(profile: MediumProfile, l: int, lams) -> list[ModeFrame]:
    """Frames for one mode at many energies, sharing one propagator."""
    l = abs(int(l))
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if np.any(lams <= 0):
        raise ValueError("frames need lam > 0")
    R = profile.R
    prop = RadialPropagator(profile, l, float(lams.max()))
    res = prop.evaluate(lams)
    k = np.sqrt(lams)
    c = _cyl(l, k * R)
    j, dj, y, dy, top = _h_parts(c)
    H = j + 1j * y
    ext = k * (dj + 1j * dy) / H
    u, du = res.u, res.du
    dn_pole = np.abs(u) <= POLE_TOL * np.abs(du) * R
    d0_pole = np.abs(c.j) <= POLE_TOL * np.abs(c.dj) * k * R
    m_plus = np.atleast_1d(match_single_layer(u, du, l, lams, R))
    m0 = np.atleast_1d(single_layer_free(l, lams, R))
    gp, gms = g_coeffs(l, lams, R)
    gp, gms = np.atleast_1d(gp), np.atleast_1d(gms)
    a = np.atleast_1d(scattering_from_boundary(u, du, l, lams, R))
    ae = np.atleast_1d(obstacle_coeff(l, lams, R))
    frames = []
    for i in range(lams.size):
        frames.append(
            ModeFrame(
                l, float(lams[i]),
                POLE if dn_pole[i] else float(du[i] / u[i]),
                POLE if d0_pole[i] else float(k[i] * c.dj[i] / c.j[i]),
                complex(ext[i]), complex(m_plus[i]), complex(m0[i]),
                complex(gp[i]), complex(gms[i]), complex(a[i]), complex(ae[i]),
            )
        )
    return frames


def mode_frame(profile: MediumProfile, l: int, lam: float) -> ModeFrame:
    """Frame at a single energy."""
    return mode_frames(profile, l, [lam])[0]
