"""Radial reduction of the Helmholtz equation with a radial index.

For a fixed angular mode ``l`` the regular solution of

    -u'' - u'/r + (l^2/r^2) u = lam * n(r) * u,    0 < r <= R,

is built in two stages.  Near the origin the Frobenius series
``u = r^l * sum c_k r^k`` is summed exactly (n is polynomial on the first
piece).  From there on the solution is carried by Taylor-series transfer
matrices.  The Taylor coefficients are polynomials in ``lam``, so one
precomputation per ``(profile, l, |lam| bound)`` serves every energy in a
batch and every later bisection step.  Step lengths keep the local phase
advance below 2.5 radians, which bounds the truncation error near machine
precision and guarantees at most one zero of ``u`` per step.  Zeros are
therefore counted exactly from sign changes at the step ends.

The solution is renormalised after each step; ``log_scale`` carries the
factored-out exponent so that ``(uR, duR) * exp(log_scale)`` is the
solution normalised as ``u ~ r^l`` at the origin.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from . import _roots
from .errors import AmbiguityError, CapacityError, IntegrationError, NotAnEigenvalueError, ProfileError
from .specialfun import bessel_j_zero

_STEP_PHASE = 2.5
_STEP_FRACTION = 0.4
_TRUNC = 1e-17
_MAX_TERMS = 400


def eigen_tol(lam: float) -> float:
    """Tolerance for eigenvalue proximity at energy ``lam``."""
    return 1e-8 * (1.0 + abs(lam))


# --------------------------------------------------------------------------
# profile


@dataclass(frozen=True)
class Piece:
    """One polynomial piece ``n(r) = sum coeffs[j] r^j`` on ``[start, end]``."""

    start: float
    end: float
    coeffs: tuple[float, ...]


@dataclass(frozen=True)
class MediumProfile:
    """Radial refraction index on the disk of radius ``R``.

    ``pieces`` is an ordered list of polynomial pieces covering ``[0, R]``.
    ``gamma`` is the sign of the outward normal derivative of ``n`` at the
    boundary.  ``fixture=True`` relaxes the boundary conditions
    ``n(R) = 1`` and ``n'(R) != 0`` so that constant media can be used as
    test fixtures.
    """

    R: float
    pieces: tuple[Piece, ...]
    gamma: int
    fixture: bool = False
    _extrema: tuple[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pieces = tuple(p if isinstance(p, Piece) else Piece(float(p[0]), float(p[1]), tuple(float(c) for c in p[2])) for p in self.pieces)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "R", float(self.R))
        R = self.R
        if not (R > 0.0 and math.isfinite(R)):
            raise ProfileError(f"R: radius must be positive, got {R!r}")
        if not pieces:
            raise ProfileError("pieces: at least one piece is required")
        if abs(pieces[0].start) > 1e-14 * R:
            raise ProfileError("pieces[0].start: first piece must start at r=0")
        if abs(pieces[-1].end - R) > 1e-12 * R:
            raise ProfileError("pieces[-1].end: last piece must end at r=R")
        for i, p in enumerate(pieces):
            if not p.end > p.start:
                raise ProfileError(f"pieces[{i}]: empty interval [{p.start}, {p.end}]")
            if not p.coeffs or not all(math.isfinite(c) for c in p.coeffs):
                raise ProfileError(f"pieces[{i}].coeffs: need finite coefficients")
        for i in range(len(pieces) - 1):
            a, b = pieces[i], pieces[i + 1]
            if abs(a.end - b.start) > 1e-14 * R:
                raise ProfileError(f"pieces[{i + 1}].start: pieces must be contiguous")
            left = P.polyval(a.end, a.coeffs)
            right = P.polyval(b.start, b.coeffs)
            if abs(left - right) > 1e-12 * max(1.0, abs(left)):
                raise ProfileError(f"pieces[{i + 1}]: n jumps at r={a.end} ({left} vs {right})")
        lo, hi = math.inf, -math.inf
        for p in pieces:
            cands = [p.start, p.end]
            d = P.polyder(p.coeffs)
            if len(d) and np.any(d != 0):
                for z in P.polyroots(d) if len(d) > 1 else []:
                    if abs(z.imag) < 1e-12 and p.start < z.real < p.end:
                        cands.append(z.real)
            vals = P.polyval(np.array(cands), p.coeffs)
            lo, hi = min(lo, float(vals.min())), max(hi, float(vals.max()))
        object.__setattr__(self, "_extrema", (lo, hi))
        if lo <= 0.0:
            raise ProfileError(f"pieces: n must be positive on [0, R], minimum is {lo}")
        if self.gamma not in (1, -1):
            raise ProfileError(f"gamma: must be +1 or -1, got {self.gamma!r}")
        if not self.fixture:
            nR = self.n(R)
            if abs(nR - 1.0) > 1e-12:
                raise ProfileError(f"pieces: n(R) must equal 1, got {nR!r}")
            slope = self.boundary_slope
            if abs(slope) <= 1e-12:
                raise ProfileError("pieces: n'(R) must be nonzero")
            if int(np.sign(slope)) != self.gamma:
                raise ProfileError(f"gamma: sign of n'(R)={slope:.6g} disagrees with gamma={self.gamma}")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_polynomial(cls, R: float, coeffs, gamma: int | None = None, fixture: bool = False) -> "MediumProfile":
        """Single-piece profile; ``gamma`` defaults to the sign of ``n'(R)``."""
        coeffs = tuple(float(c) for c in coeffs)
        if gamma is None:
            s = P.polyval(R, P.polyder(coeffs)) if len(coeffs) > 1 else 0.0
            gamma = 1 if s >= 0 else -1
        return cls(R, (Piece(0.0, float(R), coeffs),), gamma, fixture)

    @classmethod
    def constant(cls, R: float, value: float = 1.0) -> "MediumProfile":
        """Constant-index fixture (``value = 1`` is the free medium)."""
        return cls(R, (Piece(0.0, float(R), (float(value),)),), 1, fixture=True)

    # -- evaluation -------------------------------------------------------------

    def _piece_index(self, r: np.ndarray) -> np.ndarray:
        ends = np.array([p.end for p in self.pieces[:-1]])
        return np.searchsorted(ends, r, side="left")

    def n(self, r):
        """Index at radius ``r`` (scalar or array)."""
        arr = np.asarray(r, dtype=float)
        idx = self._piece_index(arr)
        out = np.empty_like(arr)
        for i, p in enumerate(self.pieces):
            m = idx == i
            out[m] = P.polyval(arr[m], p.coeffs)
        return float(out) if out.ndim == 0 else out

    def dn(self, r):
        """Radial derivative of the index."""
        arr = np.asarray(r, dtype=float)
        idx = self._piece_index(arr)
        out = np.empty_like(arr)
        for i, p in enumerate(self.pieces):
            m = idx == i
            out[m] = P.polyval(arr[m], P.polyder(p.coeffs)) if len(p.coeffs) > 1 else 0.0
        return float(out) if out.ndim == 0 else out

    @property
    def n_max(self) -> float:
        return self._extrema[1]

    @property
    def n_min(self) -> float:
        return self._extrema[0]

    @property
    def boundary_slope(self) -> float:
        """``n'(R^-)``: the outward normal derivative at the boundary."""
        c = self.pieces[-1].coeffs
        return float(P.polyval(self.R, P.polyder(c))) if len(c) > 1 else 0.0

    def boundary_jet(self, order: int) -> list[float]:
        """Taylor coefficients of ``n(R - y)`` in ``y`` up to ``y^order``."""
        c = np.array(self.pieces[-1].coeffs)
        out = []
        d = c
        for j in range(order + 1):
            val = P.polyval(self.R, d) if len(d) else 0.0
            out.append(float(val) * (-1) ** j / math.factorial(j))
            d = P.polyder(d) if len(d) > 1 else np.zeros(1)
        return out

    @property
    def is_free(self) -> bool:
        return all(len(p.coeffs) >= 1 and p.coeffs[0] == 1.0 and all(c == 0.0 for c in p.coeffs[1:]) for p in self.pieces)

    def key(self) -> str:
        """Stable content hash, used as a cache key."""
        body = repr((self.R, tuple((p.start, p.end, p.coeffs) for p in self.pieces), self.gamma, self.fixture))
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "gamma": self.gamma,
            "pieces": [{"start": p.start, "end": p.end, "coeffs": list(p.coeffs)} for p in self.pieces],
        }


# --------------------------------------------------------------------------
# boundary data


@dataclass(frozen=True)
class RadialBoundaryData:
    """Boundary trace of the regular solution for one ``(l, lambda)``."""

    uR: float
    duR: float
    log_scale: float
    osc_count: int
    mode: int
    lam: float


@dataclass(frozen=True)
class DirichletSpectrum:
    """Mode-``l`` Dirichlet eigenvalues of ``-n^{-1} Delta`` or ``-Delta``."""

    mode: int
    eigenvalues: tuple[float, ...]
    operator_tag: str


@dataclass
class BatchResult:
    """Vectorised boundary data for an array of energies."""

    lam: np.ndarray
    u: np.ndarray
    du: np.ndarray
    log_scale: np.ndarray
    osc: np.ndarray
    norm: np.ndarray | None = None

    def normalized(self, kappa: float) -> tuple[np.ndarray, np.ndarray]:
        """``(u, du/kappa)`` scaled to unit l1 length; continuous in lam."""
        s = np.abs(self.u) + np.abs(self.du) / kappa
        return self.u / s, self.du / (kappa * s)


def _poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)


def _pad(a: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[: min(n, a.size)] = a[:n]
    return out


class RadialPropagator:
    """Precomputed regular-solution map for one profile and mode.

    Parameters
    ----------
    profile : MediumProfile
    l : int
        Angular mode (sign ignored).
    lam_bound : float
        Largest ``|lam|`` that will be evaluated; fixes step lengths.
    r_end : float, optional
        Radius at which to stop (defaults to ``profile.R``).
    with_norm : bool
        Also prepare the weighted integral ``int_0^r_end u^2 n r dr``.
    """

    def __init__(self, profile: MediumProfile, l: int, lam_bound: float, r_end: float | None = None, with_norm: bool = False):
        self.profile = profile
        self.l = abs(int(l))
        self.lam_bound = max(abs(float(lam_bound)), 1e-12)
        self.r_end = profile.R if r_end is None else float(r_end)
        if not 0.0 < self.r_end <= profile.R * (1 + 1e-14):
            raise ValueError("r_end must lie in (0, R]")
        self.with_norm = with_norm
        self.kappa_ref = math.sqrt(self.lam_bound * profile.n_max + (self.l**2 + 1) / profile.R**2)
        self._build_start()
        self._build_steps()

    # -- Frobenius start ----------------------------------------------------------

    def _build_start(self) -> None:
        prof, l, lb = self.profile, self.l, self.lam_bound
        first = prof.pieces[0]
        nmax = prof.n_max
        rs = math.sqrt(4.0 * (l + 1) / (lb * nmax))
        rs = min(rs, first.end, self.r_end)
        self.r_start = rs
        ncoef = np.array(first.coeffs, dtype=float)
        # scaled coefficients: C_k = c_k rs^k as polynomials in mu = lam/lb
        nscaled = ncoef * rs ** np.arange(ncoef.size)
        C: list[np.ndarray] = [np.array([1.0])]
        bound = [1.0]
        total = 1.0
        k = 0
        while True:
            k += 1
            acc = np.zeros(k // 2 + 1)
            for j, nj in enumerate(nscaled):
                src = k - 2 - j
                if src < 0 or nj == 0.0:
                    continue
                term = np.concatenate(([0.0], C[src])) * (nj * rs * rs * lb)
                acc[: term.size] += term
            Ck = -acc / (k * (k + 2 * l))
            C.append(Ck)
            b = float(np.sum(np.abs(Ck)))
            bound.append(b)
            total += b
            if k >= 4 and bound[-1] + bound[-2] <= _TRUNC * total:
                break
            if k > _MAX_TERMS:
                raise IntegrationError("Frobenius series failed to converge", rs)
        deg = max(c.size for c in C)
        mat = np.array([_pad(c, deg) for c in C])  # (K+1, deg)
        ks = np.arange(len(C), dtype=float)
        self._start_u = mat.sum(axis=0)
        self._start_du = ((l + ks)[:, None] * mat).sum(axis=0) / rs
        self._start_norm = None
        if self.with_norm:
            # int_0^rs (r/rs)^{2l} (sum C_k (r/rs)^k)^2 n(r) r dr
            K = len(C)
            ndeg = nscaled.size
            out = np.zeros(2 * deg)
            for a in range(K):
                for b2 in range(K):
                    prod = _poly_mul(mat[a], mat[b2])
                    for j in range(ndeg):
                        if nscaled[j] == 0.0:
                            continue
                        w = nscaled[j] * rs * rs / (2 * l + 2 + a + b2 + j)
                        out[: prod.size] += w * prod
            self._start_norm = out

    # -- Taylor steps -------------------------------------------------------------

    def _build_steps(self) -> None:
        prof, l, lb = self.profile, self.l, self.lam_bound
        r = self.r_start
        end = self.r_end
        steps = []
        pieces = prof.pieces
        while r < end * (1 - 1e-15):
            pi = int(np.searchsorted([p.end for p in pieces[:-1]], r, side="right"))
            piece = pieces[min(pi, len(pieces) - 1)]
            piece_end = min(piece.end, end)
            if piece_end - r <= 1e-15 * end:
                pi += 1
                piece = pieces[min(pi, len(pieces) - 1)]
                piece_end = min(piece.end, end)
            pn = np.array(piece.coeffs, dtype=float)
            nmax_here = max(abs(P.polyval(np.linspace(r, piece_end, 9), pn)).max(), 1e-300)
            kappa = math.sqrt(lb * nmax_here + (l * l + 1) / (r * r))
            h = min(_STEP_PHASE / kappa, _STEP_FRACTION * r, piece_end - r)
            if piece_end - (r + h) < 1e-3 * h:
                h = piece_end - r
            steps.append(self._transfer(r, h, pn))
            r = r + h if r + h < piece_end else piece_end
        self._steps = steps
        self._assemble()

    def _transfer(self, rc: float, h: float, ncoef: np.ndarray):
        """Transfer polynomials (in mu = lam/lb) for one Taylor step."""
        l, lb = self.l, self.lam_bound
        # m_j: Taylor coefficients of n(r) r^2 at rc, scaled by h^(j+2)
        nr2 = P.polymul(ncoef, [0.0, 0.0, 1.0])
        m = []
        d = nr2
        for j in range(nr2.size):
            m.append(P.polyval(rc, d) / math.factorial(j) * h ** (j + 2) * lb)
            d = P.polyder(d) if d.size > 1 else np.zeros(1)
        m = np.array(m)
        l2h2 = l * l * h * h
        r2 = rc * rc
        basis = []
        for init in ((1.0, 0.0), (0.0, h)):
            rows = [np.array([init[0]]), np.array([init[1]])]
            bound = [abs(init[0]), abs(init[1])]
            total = sum(bound)
            k = 0
            while True:
                # rows[k+2] from rows[k+1], rows[k], rows[k-j]
                nxt = np.zeros((k + 2) // 2 + 2)
                a1 = rows[k + 1]
                nxt[: a1.size] -= h * rc * (k + 1) * (2 * k + 1) * a1
                a0 = rows[k]
                nxt[: a0.size] -= (h * h * k * k - l2h2) * a0
                for j, mj in enumerate(m):
                    src = k - j
                    if src < 0:
                        break
                    if mj == 0.0:
                        continue
                    s = rows[src]
                    nxt[1 : s.size + 1] -= mj * s
                nxt /= r2 * (k + 2) * (k + 1)
                nxt = np.trim_zeros(nxt, "b") if np.any(nxt) else np.zeros(1)
                rows.append(nxt)
                b = float(np.sum(np.abs(nxt)))
                bound.append(b)
                total += b
                k += 1
                if k >= 6 and bound[-1] + bound[-2] + bound[-3] <= _TRUNC * total:
                    break
                if k > _MAX_TERMS:
                    raise IntegrationError("Taylor step failed to converge", rc)
            basis.append(rows)
        deg = max(max(r.size for r in rows) for rows in basis)
        mats = [np.array([_pad(r, deg) for r in rows]) for rows in basis]
        out = []
        for mat in mats:
            ks = np.arange(mat.shape[0], dtype=float)
            out.append((mat.sum(axis=0), (ks[:, None] * mat).sum(axis=0) / h))
        (u0, du0), (u1, du1) = out
        # u(rc+h) = u0 * u(rc) + u1 * u'(rc) / h * ... basis 1 starts with b1 = h
        t = [u0, u1, du0, du1]
        norm = None
        if self.with_norm:
            # int_0^1 (sum_k b_k s^k)(sum_k b'_k s^k) n(rc+hs)(rc+hs) h ds
            w = P.polymul(ncoef, [0.0, 1.0])
            wj = []
            d = w
            for j in range(w.size):
                wj.append(P.polyval(rc, d) / math.factorial(j) * h**j)
                d = P.polyder(d) if d.size > 1 else np.zeros(1)
            wj = np.array(wj)
            pairs = []
            for A, B in ((mats[0], mats[0]), (mats[0], mats[1]), (mats[1], mats[1])):
                acc = np.zeros(2 * deg)
                for ka in range(A.shape[0]):
                    for kb in range(B.shape[0]):
                        prod = _poly_mul(A[ka], B[kb])
                        coef = float(np.sum(wj / (ka + kb + np.arange(wj.size) + 1.0))) * h
                        acc[: prod.size] += coef * prod
                pairs.append(acc)
            norm = pairs
        return rc, h, t, norm

    def _assemble(self) -> None:
        deg = max(max(p.size for p in s[2]) for s in self._steps) if self._steps else 1
        deg = max(deg, self._start_u.size)
        if self.with_norm:
            ndeg = max([max(p.size for p in s[3]) for s in self._steps] + [self._start_norm.size])
            deg = max(deg, ndeg)
        self._deg = deg
        S = len(self._steps)
        T = np.zeros((deg, 4 * S))
        for i, (_, _, t, _) in enumerate(self._steps):
            for e in range(4):
                T[: t[e].size, 4 * i + e] = t[e]
        self._T = T
        if self.with_norm:
            Nn = np.zeros((deg, 3 * S))
            for i, s in enumerate(self._steps):
                for e in range(3):
                    Nn[: s[3][e].size, 3 * i + e] = s[3][e]
            self._N = Nn
        self.radii = np.array([s[0] for s in self._steps] + [self.r_end])
        self.step_count = S

    # -- evaluation --------------------------------------------------------------

    def _vander(self, mu: np.ndarray) -> np.ndarray:
        return np.vander(mu, self._deg, increasing=True)

    def evaluate(self, lam) -> BatchResult:
        """Boundary data at every energy in ``lam`` (|lam| <= lam_bound)."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if np.any(np.abs(lam) > self.lam_bound * (1 + 1e-12)):
            raise CapacityError("energy exceeds the propagator bound")
        mu = lam / self.lam_bound
        V = self._vander(mu)
        l = self.l
        u = V[:, : self._start_u.size] @ self._start_u
        du = V[:, : self._start_du.size] @ self._start_du
        logs = np.full(lam.shape, l * math.log(self.r_start))
        osc = np.zeros(lam.shape, dtype=np.int64)
        integ = None
        if self.with_norm:
            integ = V[:, : self._start_norm.size] @ self._start_norm
        kref = self.kappa_ref
        s = np.abs(u) + np.abs(du) / kref
        u, du = u / s, du / s
        logs += np.log(s)
        if integ is not None:
            integ = integ / (s * s)
        S = self.step_count
        chunk = 64
        for c0 in range(0, S, chunk):
            c1 = min(S, c0 + chunk)
            Tv = V @ self._T[:, 4 * c0 : 4 * c1]
            Nv = V @ self._N[:, 3 * c0 : 3 * c1] if integ is not None else None
            for i in range(c1 - c0):
                t00, t01, t10, t11 = Tv[:, 4 * i], Tv[:, 4 * i + 1], Tv[:, 4 * i + 2], Tv[:, 4 * i + 3]
                h = self._steps[c0 + i][1]
                if integ is not None:
                    dh = du * h
                    integ = integ + Nv[:, 3 * i] * u * u + 2.0 * Nv[:, 3 * i + 1] * u * dh / h + Nv[:, 3 * i + 2] * dh * dh / (h * h)
                un = t00 * u + t01 * du
                dun = t10 * u + t11 * du
                osc += (un < 0.0) != (u < 0.0)
                s = np.abs(un) + np.abs(dun) / kref
                if not np.all(np.isfinite(s)) or np.any(s == 0.0):
                    raise IntegrationError("non-finite state in Taylor propagation", self._steps[c0 + i][0])
                u, du = un / s, dun / s
                logs += np.log(s)
                if integ is not None:
                    integ = integ / (s * s)
        return BatchResult(lam, u, du, logs, osc, integ)


# ---------------------------------------------------------------------------
# public operations


def solve_regular(profile: MediumProfile, l: int, lam: float) -> RadialBoundaryData:
    """Regular solution data at ``r = R`` for one mode and energy.

    ``lam`` may be negative; then the solution does not oscillate.
    """
    prop = RadialPropagator(profile, l, abs(lam))
    res = prop.evaluate(np.array([lam]))
    return RadialBoundaryData(float(res.u[0]), float(res.du[0]), float(res.log_scale[0]), int(res.osc[0]), abs(int(l)), float(lam))


def regular_solution_at(profile: MediumProfile, l: int, lam: float, r: float) -> tuple[float, float]:
    """Unscaled ``(u(r), u'(r))`` of the regular solution with ``u ~ r^l``."""
    prop = RadialPropagator(profile, l, abs(lam), r_end=r)
    res = prop.evaluate(np.array([lam]))
    f = math.exp(res.log_scale[0])
    return float(res.u[0] * f), float(res.du[0] * f)


def _counts(profile: MediumProfile, l: int, lams: np.ndarray, lam_bound: float | None = None) -> np.ndarray:
    bound = float(np.max(np.abs(lams))) if lam_bound is None else lam_bound
    return RadialPropagator(profile, l, bound).evaluate(lams).osc


def dirichlet_count(profile: MediumProfile, l: int, lam: float) -> int:
    """Number of mode-``l`` Dirichlet eigenvalues not exceeding ``lam``.

    The count is the number of zeros of the regular solution in ``(0, R)``
    (the integer part of the Pruefer angle over pi).  Energies within
    ``1e-8 (1 + lam)`` of an eigenvalue are rejected.
    """
    if lam <= 0:
        return 0
    tol = eigen_tol(lam)
    c = _counts(profile, l, np.array([lam - tol, lam, lam + tol]))
    if c[0] != c[2]:
        raise AmbiguityError(f"lambda={lam} lies within {tol:.3g} of a mode-{l} Dirichlet eigenvalue")
    return int(c[1])


def _eigen_bracket(profile: MediumProfile, l: int, k: int) -> tuple[float, float]:
    j = bessel_j_zero(abs(int(l)), k)
    R = profile.R
    lo = j * j / (profile.n_max * R * R) * (1 - 1e-9)
    hi = j * j / (profile.n_min * R * R) * (1 + 1e-9)
    return lo, hi


def dirichlet_eigenvalues(profile: MediumProfile, l: int, lam_max: float) -> DirichletSpectrum:
    """All mode-``l`` Dirichlet eigenvalues in ``(0, lam_max]``."""
    l = abs(int(l))
    prop = RadialPropagator(profile, l, lam_max)
    total = int(prop.evaluate(np.array([lam_max])).osc[0])
    if total == 0:
        return DirichletSpectrum(l, (), "free" if profile.is_free else "perturbed")
    return DirichletSpectrum(l, tuple(_locate_eigenvalues(prop, range(1, total + 1), lam_max)), "free" if profile.is_free else "perturbed")


def _locate_eigenvalues(prop: RadialPropagator, ks, lam_max: float) -> list[float]:
    """Eigenvalues with the given indices, all below ``lam_max``."""
    ks = np.array(list(ks), dtype=np.int64)
    if ks.size == 0:
        return []
    # bisection on the zero count until each bracket holds one eigenvalue
    lo = np.full(ks.shape, 0.0)
    hi = np.full(ks.shape, float(lam_max))
    for _ in range(200):
        clo = prop.evaluate(np.maximum(lo, 1e-300)).osc
        chi = prop.evaluate(hi).osc
        ok = (clo == ks - 1) & (chi == ks)
        if np.all(ok):
            break
        mid = 0.5 * (lo + hi)
        cm = prop.evaluate(mid).osc
        upd = ~ok
        go_low = upd & (cm >= ks)
        go_high = upd & (cm < ks)
        hi = np.where(go_low, mid, hi)
        lo = np.where(go_high, mid, lo)
    kref = prop.kappa_ref

    def f(x):
        r = prop.evaluate(x)
        return r.normalized(kref)[0]

    lo = np.maximum(lo, 1e-300)
    roots = _roots.refine_brackets(f, lo, hi, xtol=1e-15 * (1.0 + hi))
    return [float(x) for x in roots]


def dirichlet_eigenvalue(profile: MediumProfile, l: int, k: int) -> float:
    """The ``k``-th mode-``l`` Dirichlet eigenvalue of ``-n^{-1} Delta``.

    Bracketed with the comparison bounds ``j_{l,k}^2 / (n R^2)`` and the
    zero count, then refined on ``u(R)``.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    lo, hi = _eigen_bracket(profile, l, int(k))
    prop = RadialPropagator(profile, l, hi)
    return _locate_eigenvalues(prop, [int(k)], hi)[0]


@dataclass(frozen=True)
class EigenData:
    """Boundary derivative and weighted norm of one Dirichlet eigenfunction.

    Both are in the same scaled units; ``log_scale`` restores
    ``duR * exp(log_scale)`` and ``norm * exp(2 log_scale)``.
    """

    lam: float
    uR: float
    duR: float
    norm: float
    log_scale: float


def eigen_data(profile: MediumProfile, l: int, lam_k: float, check: bool = True) -> EigenData:
    """Scaled ``u'(R)`` and ``int_0^R u^2 n r dr`` at an eigenvalue."""
    prop = RadialPropagator(profile, l, abs(lam_k), with_norm=True)
    res = prop.evaluate(np.array([lam_k]))
    u, du, nrm = float(res.u[0]), float(res.du[0]), float(res.norm[0])
    if check and abs(u) > 1e-6 * abs(du) * profile.R:
        raise NotAnEigenvalueError(f"lambda={lam_k} is not a mode-{l} Dirichlet eigenvalue (|u(R)|/|u'(R)R| = {abs(u) / abs(du * profile.R):.3g})")
    return EigenData(float(lam_k), u, du, nrm, float(res.log_scale[0]))


def l2n_norm(profile: MediumProfile, l: int, lam_k: float) -> float:
    """``int_0^R u^2 n(r) r dr`` for the eigenfunction normalised as ``u ~ r^l``."""
    d = eigen_data(profile, l, lam_k)
    val = d.norm * math.exp(2.0 * d.log_scale) if abs(2.0 * d.log_scale) < 700 else math.inf
    if not math.isfinite(val):
        raise CapacityError("weighted norm overflows; use eigen_data for scaled values")
    return val
