"""Transmission eigenvalues, branch bookkeeping and counting functions.

Per mode ``l`` everything is driven by three real functions of ``lam``:

* ``u(R)``: vanishes at the perturbed Dirichlet eigenvalues (poles of
  ``Lambda_n``),
* ``J_l(kR)``: vanishes at the free Dirichlet eigenvalues (poles of
  ``Lambda_0``),
* ``d_l = u'(R) J_l(kR) - u(R) k J_l'(kR)``: vanishes at the transmission
  eigenvalues of the mode.

The branch ``mu_l = gamma (1 + l^2/R^2)^(3/2) (Lambda_n - Lambda_0)``
equals ``gamma c d_l / (u(R) J_l)``, so its sign is the product of the
three signs.  A scan samples the three functions on a grid, locates all
sign changes, and measures the jump of ``[mu_l < 0]`` across each event
directly.  Counting functions are then assembled with weight 1 for
``l = 0`` and 2 for ``l >= 1`` (the modes ``+l`` and ``-l``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _roots
from .dtn import scattering_from_boundary
from .errors import AccountingError, CutoffError, UnresolvedEventError
from .radialode import MediumProfile, RadialPropagator, _locate_eigenvalues
from .specialfun import bessel_j, bessel_j_zero, j_zero_count

GRID_STEP = 0.25
# events closer than this (relative) are treated as one compound event
MERGE_TOL = 1e-9
JUMP_OFFSET = 1e-6
SINGULAR_TOL = 1e-6
DET_FLOOR = 1e-11
TAIL_WIDTH = 5
CUTOFF_MARGIN = 8


def multiplicity(l: int) -> int:
    """Number of Fourier modes folded into ``|l|``."""
    return 1 if l == 0 else 2


def mode_cutoff(profile: MediumProfile, lam: float, margin: int = CUTOFF_MARGIN) -> int:
    """``ceil(R sqrt(lam max n)) + margin``."""
    return int(math.ceil(profile.R * math.sqrt(lam * profile.n_max))) + int(margin)


def branch_weight(l: int, R: float) -> float:
    return (1.0 + (l / R) ** 2) ** 1.5


# --------------------------------------------------------------------------
# Weyl volumes


def weyl_volumes_exact(profile: MediumProfile) -> tuple[Fraction, Fraction]:
    """``V_n = (1/2) int_0^R n r dr`` and ``V_0 = R^2/4`` as exact rationals
    of the (binary) profile data."""
    total = Fraction(0)
    for p in profile.pieces:
        a, b = Fraction(p.start), Fraction(p.end)
        for j, c in enumerate(p.coeffs):
            total += Fraction(c) * (b ** (j + 2) - a ** (j + 2)) / (j + 2)
    R = Fraction(profile.R)
    return total / 2, R * R / 4


def weyl_volumes(profile: MediumProfile) -> tuple[float, float]:
    """``(V_n, V_0)`` for the two-dimensional disk."""
    vn, v0 = weyl_volumes_exact(profile)
    return float(vn), float(v0)


# --------------------------------------------------------------------------
# evaluation of the three driving functions


@dataclass
class _Samples:
    lam: np.ndarray
    u: np.ndarray
    du: np.ndarray
    j: np.ndarray
    dj: np.ndarray
    osc: np.ndarray

    @property
    def k(self) -> np.ndarray:
        return np.sqrt(self.lam)

    def det(self) -> np.ndarray:
        """Scale-free transmission determinant."""
        k = self.k
        num = self.du * self.j - self.u * k * self.dj
        den = (np.abs(self.u) + np.abs(self.du) / k) * (np.abs(self.j) + np.abs(self.dj)) * k
        return num / den

    def mu_sign(self, gamma: int) -> np.ndarray:
        return gamma * np.sign(self.det()) * np.sign(self.u) * np.sign(self.j)

    def mu(self, gamma: int, l: int, R: float) -> np.ndarray:
        k = self.k
        with np.errstate(divide="ignore", invalid="ignore"):
            diff = self.du / self.u - k * self.dj / self.j
        return gamma * branch_weight(l, R) * diff


class _ModeEvaluator:
    """Vectorised access to ``u``, ``J`` and ``d_l`` for one mode."""

    def __init__(self, profile: MediumProfile, l: int, lam_bound: float):
        self.profile = profile
        self.l = l
        self.prop = RadialPropagator(profile, l, lam_bound)

    def __call__(self, lam) -> _Samples:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        res = self.prop.evaluate(lam)
        u, du = res.normalized(1.0)
        J = bessel_j(self.l, np.sqrt(lam) * self.profile.R)
        j, dj = np.atleast_1d(J.value), np.atleast_1d(J.derivative)
        s = np.abs(j) + np.abs(dj)
        return _Samples(lam, u, du, j / s, dj / s, res.osc)


def transmission_det(profile: MediumProfile, l: int, lam) -> float | np.ndarray:
    """Normalised mode determinant ``d_l(lam)``.

    ``d_l = u'(R) J_l(kR) - u(R) k J_l'(kR)`` divided by
    ``k (|u| + |u'|/k)(|J| + |J'|)``; it vanishes exactly at the mode-``l``
    transmission eigenvalues and has no poles.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= 0):
        raise ValueError("transmission_det needs lam > 0")
    ev = _ModeEvaluator(profile, abs(int(l)), float(lam_arr.max()))
    out = ev(lam_arr).det()
    return float(out[0]) if np.ndim(lam) == 0 else out


# --------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class ITERecord:
    """One transmission eigenvalue of mode ``l``.

    ``score_n`` and ``score_0`` are the raw singularity scores
    ``|u(R)| k / |u'(R)|`` and ``|J| / |J'|``; both small means singular.
    """

    lambda_star: float
    mode: int
    multiplicity: int
    singular: bool
    min_scattering_abs: float
    score_n: float = 0.0
    score_0: float = 0.0


@dataclass(frozen=True)
class BranchEvent:
    """A zero or pole of ``mu_l`` with the measured jump of ``[mu_l < 0]``.

    ``predicted`` is the jump implied by the residue sign law (``None`` for
    zeros and for coincident poles, where only a bound is available).
    """

    lam: float
    kind: str
    crossing_sign: int
    predicted: int | None
    singular: bool = False


@dataclass
class BranchTrace:
    mode: int
    gamma: int
    samples: np.ndarray  # shape (M, 2): lambda, mu
    events: list[BranchEvent]

    def negative_at(self, lam: float) -> int:
        """``[mu_l(lam) < 0]`` reconstructed from the nearest sample."""
        i = int(np.searchsorted(self.samples[:, 0], lam))
        i = min(max(i, 0), len(self.samples) - 1)
        return int(self.samples[i, 1] < 0)


@dataclass(frozen=True)
class CountReport:
    """Counting functions at one checkpoint, all with mode multiplicity."""

    lam: float
    N_n: int
    N_0: int
    N_T: int
    N_T_sng: int
    N_T_reg: int
    N_minus: int
    N_minus_alpha: int
    script_N0: int
    script_Ninf: int
    V_n: float
    V_0: float
    alpha: float
    gamma: int
    mode_cutoff: int

    @property
    def accounting_ok(self) -> bool:
        return self.N_minus - self.N_minus_alpha == self.script_N0 + self.script_Ninf

    @property
    def weyl_bound(self) -> int:
        """Right-hand side ``gamma (N_n - N_0) - N_minus(alpha)``."""
        return self.gamma * (self.N_n - self.N_0) - self.N_minus_alpha

    @property
    def weyl_ok(self) -> bool:
        return self.N_T >= self.weyl_bound

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["lambda"] = d.pop("lam")
        return d


# --------------------------------------------------------------------------
# per-mode scan


@dataclass
class ModeScan:
    """Everything a scan learns about one mode on ``(alpha, lam_max]``."""

    l: int
    gamma: int
    alpha: float
    lam_max: float
    poles_n: list[float]
    poles_0: list[float]
    roots: list[float]
    events: list[BranchEvent]
    records: list[ITERecord]
    grid: np.ndarray
    mu_grid: np.ndarray
    evaluator: _ModeEvaluator = field(repr=False)
    dirichlet: list[float] = field(default_factory=list, repr=False)
    reused: bool = False

    def negative(self, lam) -> np.ndarray:
        """``[mu_l(lam) < 0]`` evaluated directly."""
        s = self.evaluator(lam)
        return (s.mu_sign(self.gamma) < 0).astype(int)

    def trace(self) -> BranchTrace:
        R = self.evaluator.profile.R
        extra = []
        for e in self.events:
            d = JUMP_OFFSET * (1.0 + e.lam)
            extra += [e.lam - d, e.lam + d]
        lam = np.sort(np.concatenate([self.grid, np.array(extra)])) if extra else self.grid
        s = self.evaluator(lam)
        mu = s.mu(self.gamma, self.l, R)
        return BranchTrace(self.l, self.gamma, np.column_stack([lam, mu]), list(self.events))


def _free_poles(l: int, R: float, lo: float, hi: float) -> list[float]:
    n_hi = int(j_zero_count(l, math.sqrt(hi) * R)[0])
    n_lo = int(j_zero_count(l, math.sqrt(lo) * R)[0]) if lo > 0 else 0
    return [(bessel_j_zero(l, k) / R) ** 2 for k in range(n_lo + 1, n_hi + 1)]


def _perturbed_poles(ev: _ModeEvaluator, lo: float, hi: float) -> list[float]:
    c = ev.prop.evaluate(np.array([max(lo, 1e-300), hi])).osc
    return _locate_eigenvalues(ev.prop, range(int(c[0]) + 1, int(c[1]) + 1), hi)


def _grid(lo: float, hi: float, gaps: list[float]) -> np.ndarray:
    step = GRID_STEP
    if gaps:
        step = min(step, min(gaps) / 8.0)
    n = max(int(math.ceil((hi - lo) / step)), 1)
    return np.linspace(lo, hi, n + 1)


def _gaps(values: list[float]) -> list[float]:
    return [b - a for a, b in zip(values, values[1:])]


def scan_mode(
    profile: MediumProfile,
    l: int,
    alpha: float,
    lam_max: float,
    lam_bound: float | None = None,
    dirichlet: list[float] | None = None,
) -> ModeScan:
    """Locate every zero and pole of ``mu_l`` in ``(alpha, lam_max]``.

    Perturbed poles come from the oscillation count, free poles from the
    Bessel zero count, and zeros from sign changes of ``d_l`` on a grid of
    step ``min(0.25, gap/8)``.  Each event is then isolated and the jump of
    ``[mu_l < 0]`` is measured at ``lam +- 1e-6 (1 + lam)``.

    ``dirichlet`` optionally supplies the perturbed eigenvalues in
    ``(0, lam_max]`` (e.g. from a cache); it is used only if it passes
    :func:`dirichlet_list_valid`, otherwise the list is recomputed.
    """
    l = abs(int(l))
    gamma = profile.gamma
    R = profile.R
    ev = _ModeEvaluator(profile, l, lam_bound or lam_max)
    reused = dirichlet is not None and dirichlet_list_valid(ev, dirichlet, lam_max)
    full = [float(x) for x in dirichlet] if reused else _perturbed_poles(ev, 0.0, lam_max)
    poles_n = [x for x in full if alpha < x <= lam_max]
    poles_0 = _free_poles(l, R, alpha, lam_max)
    grid = _grid(alpha, lam_max, _gaps(poles_n) + _gaps(poles_0))
    s = ev(grid)
    d = s.det()

    # zeros of d_l; samples at roundoff level carry no sign (n = 1 gives d_l = 0)
    live = np.nonzero(np.abs(d) > DET_FLOOR)[0]
    dl = d[live]
    change = np.nonzero(np.sign(dl[:-1]) * np.sign(dl[1:]) < 0)[0]
    roots = []
    if change.size:
        ia, ib = live[change], live[change + 1]
        r = _roots.refine_brackets(lambda x: ev(x).det(), grid[ia], grid[ib], d[ia], d[ib])
        roots += [float(x) for x in r]
    roots.sort()

    # group coincident events
    cand = [(x, "zero") for x in roots] + [(x, "pole_n") for x in poles_n] + [(x, "pole_0") for x in poles_0]
    cand.sort()
    groups: list[list[tuple[float, str]]] = []
    for x, kind in cand:
        if groups and x - groups[-1][-1][0] <= MERGE_TOL * (1.0 + x):
            groups[-1].append((x, kind))
        else:
            groups.append([(x, kind)])

    centers = [float(np.mean([x for x, _ in g])) for g in groups]
    events: list[BranchEvent] = []
    probes = []
    for i, (g, c) in enumerate(zip(groups, centers)):
        delta = JUMP_OFFSET * (1.0 + c)
        if i > 0:
            delta = min(delta, 0.25 * (c - centers[i - 1]))
        if i + 1 < len(centers):
            delta = min(delta, 0.25 * (centers[i + 1] - c))
        if delta <= 0.25 * MERGE_TOL * (1.0 + c):
            raise UnresolvedEventError(f"mode {l}: events near lambda={c} could not be isolated")
        probes += [c - delta, c + delta]
    if probes:
        ps = ev(np.array(probes))
        neg = (ps.mu_sign(gamma) < 0).astype(int)
    records = []
    for i, (g, c) in enumerate(zip(groups, centers)):
        kinds = {k for _, k in g}
        jump = int(neg[2 * i + 1] - neg[2 * i])
        has_zero = "zero" in kinds
        if {"pole_n", "pole_0"} <= kinds:
            kind, predicted = "pole_both", None
        elif "pole_n" in kinds:
            kind, predicted = "pole_n", -gamma
        elif "pole_0" in kinds:
            kind, predicted = "pole_0", gamma
        else:
            kind, predicted = "zero", None
        if has_zero and kind in ("pole_n", "pole_0"):
            raise UnresolvedEventError(f"mode {l}: transmission root at a simple pole near lambda={c}")
        singular = has_zero and kind == "pole_both"
        events.append(BranchEvent(c, kind, jump, predicted, singular))
        if has_zero:
            x = next(v for v, k in g if k == "zero")
            records.append(_record(ev, l, x, singular))

    return ModeScan(l, gamma, alpha, lam_max, poles_n, poles_0, roots, events, records, grid, s.mu(gamma, l, R), ev,
                    dirichlet=full, reused=reused)


def dirichlet_list_valid(ev: _ModeEvaluator, values: list[float], lam_max: float) -> bool:
    """Cheap revalidation of a stored eigenvalue list.

    The count must match the oscillation count at ``lam_max`` and the
    largest entry must leave ``|u(R)| <= 1e-6 |u'(R)| R``.
    """
    vals = [float(x) for x in values if x <= lam_max]
    if len(vals) != len(values) or any(b <= a for a, b in zip(vals, vals[1:])):
        return False
    if int(ev.prop.evaluate(np.array([lam_max])).osc[0]) != len(vals):
        return False
    if not vals:
        return True
    res = ev.prop.evaluate(np.array([vals[-1]]))
    return bool(abs(res.u[0]) <= 1e-6 * abs(res.du[0]) * ev.profile.R)


def _record(ev: _ModeEvaluator, l: int, lam: float, singular_hint: bool) -> ITERecord:
    res = ev.prop.evaluate(np.array([lam]))
    u, du = float(res.u[0]), float(res.du[0])
    k = math.sqrt(lam)
    J = bessel_j(l, k * ev.profile.R)
    score_n = abs(u) * k / abs(du) if du else math.inf
    score_0 = abs(J.value) / abs(J.derivative) if J.derivative else math.inf
    singular = singular_hint or (score_n <= SINGULAR_TOL and score_0 <= SINGULAR_TOL)
    a = abs(complex(scattering_from_boundary(res.u, res.du, l, lam, ev.profile.R)))
    return ITERecord(float(lam), l, multiplicity(l), bool(singular), float(a), float(score_n), float(score_0))


# --------------------------------------------------------------------------
# whole-medium survey


def first_event(profile: MediumProfile) -> float:
    """Smallest pole or transmission root over all modes."""
    from .radialode import dirichlet_eigenvalue

    R = profile.R
    lowest = min(dirichlet_eigenvalue(profile, 0, 1), (bessel_j_zero(0, 1) / R) ** 2)
    # transmission roots below the lowest pole
    lo = 1e-6 * lowest
    for l in range(0, mode_cutoff(profile, lowest) + 1):
        ev = _ModeEvaluator(profile, l, lowest)
        grid = np.linspace(lo, lowest, 4001)
        d = ev(grid).det()
        ch = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
        if ch.size:
            r = _roots.refine_brackets(lambda x: ev(x).det(), grid[ch[:1]], grid[ch[:1] + 1])
            lowest = min(lowest, float(r[0]))
    return lowest


def default_alpha(profile: MediumProfile) -> float:
    """``alpha = first_event / 2``."""
    return 0.5 * first_event(profile)


@dataclass
class Survey:
    """Result of scanning every retained mode of one medium."""

    profile: MediumProfile
    alpha: float
    lam_max: float
    cutoff: int
    scans: list[ModeScan]
    tail: list[_ModeEvaluator] = field(repr=False)

    @property
    def records(self) -> list[ITERecord]:
        recs = [r for s in self.scans for r in s.records]
        return sorted(recs, key=lambda r: (r.lambda_star, r.mode))

    def report(self, lam: float, check: bool = True) -> CountReport:
        """Count report at ``alpha < lam <= lam_max``."""
        if not self.alpha < lam <= self.lam_max * (1 + 1e-12):
            raise ValueError("checkpoint outside the surveyed window")
        g = self.profile.gamma
        R = self.profile.R
        vn, v0 = weyl_volumes(self.profile)
        N_n = N_0 = N_T = N_sng = N_minus = N_minus_a = sN0 = sNinf = 0
        for s in self.scans:
            w = multiplicity(s.l)
            N_n += w * int(s.evaluator.prop.evaluate(np.array([lam])).osc[0])
            N_0 += w * int(j_zero_count(s.l, math.sqrt(lam) * R)[0])
            neg = s.negative(np.array([self.alpha, lam]))
            N_minus_a += w * int(neg[0])
            N_minus += w * int(neg[1])
            for e in s.events:
                if e.lam > lam:
                    break
                if e.kind == "zero":
                    sN0 += w * e.crossing_sign
                    N_T += w
                else:
                    sNinf += w * e.crossing_sign
                    if e.singular:
                        N_T += w
                        N_sng += w
        rep = CountReport(float(lam), N_n, N_0, N_T, N_sng, N_T - N_sng, N_minus, N_minus_a, sN0, sNinf,
                          vn, v0, self.alpha, g, self.cutoff)
        if check:
            self.check_tail(lam)
            if not rep.accounting_ok:
                raise AccountingError(
                    f"lambda={lam}: N_-(lam)-N_-(alpha)={rep.N_minus - rep.N_minus_alpha} but N0+Ninf={sN0 + sNinf}")
        return rep

    def check_tail(self, lam: float) -> None:
        for ev in self.tail:
            s = ev(np.array([lam]))
            if s.mu_sign(self.profile.gamma)[0] <= 0:
                raise CutoffError(f"mu_{ev.l}({lam}) is not positive above the mode cutoff")

    def pole_jump_violations(self) -> list[tuple[int, BranchEvent]]:
        """Simple-pole events whose measured jump differs from the law."""
        return [(s.l, e) for s in self.scans for e in s.events if e.predicted is not None and e.crossing_sign != e.predicted]

    def common_pole_violations(self) -> list[tuple[int, BranchEvent]]:
        """Coincident poles breaking ``|jump + gamma (m_n - m_0)| <= m``."""
        out = []
        for s in self.scans:
            for e in s.events:
                if e.kind == "pole_both":
                    m = 1 if e.singular else 0
                    if abs(e.crossing_sign) > m:
                        out.append((s.l, e))
        return out


def survey(
    profile: MediumProfile,
    lam_max: float,
    alpha: float | None = None,
    modes: int | None = None,
    margin: int = CUTOFF_MARGIN,
    dirichlet: dict[int, list[float]] | None = None,
) -> Survey:
    """Scan modes ``0..L`` with ``L = mode_cutoff(lam_max, margin)``.

    The propagators are built with a bound a little above ``lam_max`` so
    that the jump probes past the last event stay inside it.  ``dirichlet``
    maps modes to previously computed eigenvalue lists.
    """
    if alpha is None:
        alpha = default_alpha(profile)
    L = mode_cutoff(profile, lam_max, margin) if modes is None else modes
    bound = lam_max * (1 + 1e-5) + 1e-5
    known = dirichlet or {}
    scans = [scan_mode(profile, l, alpha, lam_max, bound, known.get(l)) for l in range(L + 1)]
    tail = [_ModeEvaluator(profile, l, bound) for l in range(L, L + TAIL_WIDTH + 1)]
    return Survey(profile, alpha, lam_max, L, scans, tail)


def ite_scan(profile: MediumProfile, lambda_max: float, alpha: float | None = None) -> list[ITERecord]:
    """All transmission eigenvalues in ``(alpha, lambda_max]``, sorted."""
    return survey(profile, lambda_max, alpha).records


def branch_trace(profile: MediumProfile, l: int, alpha: float, lambda_max: float) -> BranchTrace:
    """Samples and events of ``mu_l`` on ``(alpha, lambda_max]``."""
    bound = lambda_max * (1 + 1e-5) + 1e-5
    return scan_mode(profile, l, alpha, lambda_max, bound).trace()


@dataclass(frozen=True)
class DecadeCheck:
    """``|a_l|`` at a transmission eigenvalue against its surrounding decade."""

    lambda_star: float
    mode: int
    abs_a: float
    median_abs_a: float
    max_unitarity_error: float

    @property
    def ratio(self) -> float:
        return self.abs_a / self.median_abs_a if self.median_abs_a > 0 else math.inf


def decade_check(profile: MediumProfile, record: ITERecord, samples: int = 201) -> DecadeCheck:
    """Median of ``|a_l|`` over ``[lam*/sqrt 10, lam* sqrt 10]`` and the
    largest ``||S_l| - 1|`` over the same samples."""
    lam = record.lambda_star
    lo, hi = lam / math.sqrt(10.0), lam * math.sqrt(10.0)
    grid = np.geomspace(lo, hi, samples)
    prop = RadialPropagator(profile, record.mode, hi)
    res = prop.evaluate(grid)
    a = np.asarray(scattering_from_boundary(res.u, res.du, record.mode, grid, profile.R))
    s = 1.0 - 2j * math.pi * a
    return DecadeCheck(lam, record.mode, record.min_scattering_abs, float(np.median(np.abs(a))),
                       float(np.max(np.abs(np.abs(s) - 1.0))))


def count_report(profile: MediumProfile, lam: float, alpha: float | None = None) -> CountReport:
    """Counting functions at a single energy."""
    return survey(profile, lam, alpha).report(lam)
