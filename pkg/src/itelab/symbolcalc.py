"""Exact half-line parametrix recursion for boundary D-N symbols (d = 2).

Near a boundary point the operator ``-Delta - lam n`` is written in
boundary normal coordinates ``(y', y)`` with ``y >= 0`` the inward
distance.  Its symbol is

    xi_d^2 + a xi^2 + 2 a_t xi xi_d - i b_d xi_d - i b_t xi - lam c

with Taylor jets of ``a, a_t, b_d, b_t, c`` at the base point.  Every
solution piece of the recursion is a finite sum of terms

    coeff * y^k * rho^m * nu^p * exp(-sigma y),   sigma in {rho, nu},

with ``rho = xi`` (the tangential cone ``xi > 0``) and ``nu^2 = rho^2 - lam``.
Coefficients are sympy polynomials in ``lam`` and the jet symbols, so all
arithmetic is exact.  Terms with ``sigma = None`` carry no exponential and
are used for boundary values.

Two gradings are supported.  In the plain grading ``lam`` has degree 0 and
``lam c`` enters two grades above its jet order.  In the parameter grading
``lam = kappa^2`` has degree 2, so ``-lam c`` enters at the jet order and
the grade-0 operator is ``D_y^2 + nu^2``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable

import sympy as sp

from .errors import ResonanceError, UnsupportedOrderError

LAM = sp.Symbol("lam")
RHO = sp.Symbol("rho", positive=True)
NU = sp.Symbol("nu", positive=True)
Y = sp.Symbol("y", nonnegative=True)

ZERO = sp.Integer(0)
ONE = sp.Integer(1)
I = sp.I

_SIGMAS = ("rho", "nu", None)


def jet_symbol(name: str, i: int, j: int) -> sp.Symbol:
    """Taylor coefficient symbol ``name_{i,j}`` of ``y'^i y^j``."""
    return sp.Symbol(f"{name}_{i}{j}")


# --------------------------------------------------------------------------
# term algebra


Key = tuple  # (k, m, p, sigma)


def _canon_key(k: int, m: int, p: int, sigma) -> list[tuple[Key, sp.Expr]]:
    """Apply ``rho^2 -> nu^2 + lam`` wherever a ``nu`` is present."""
    if (sigma == "nu" or p != 0) and m >= 2:
        out = []
        for key, c in _canon_key(k, m - 2, p + 2, sigma):
            out.append((key, c))
        for key, c in _canon_key(k, m - 2, p, sigma):
            out.append((key, c * LAM))
        return out
    return [((k, m, p, sigma), ONE)]


@dataclass(frozen=True)
class SymbolExpr:
    """Finite sum of ``c y^k rho^m nu^p exp(-sigma y)`` in canonical form.

    Construct through :meth:`from_terms` (or the helpers) so the canonical
    rewrite and the zero-pruning are always applied.
    """

    terms: tuple[tuple[Key, sp.Expr], ...] = ()

    # -- construction ------------------------------------------------------------

    @staticmethod
    def from_terms(items: Iterable[tuple[Key, sp.Expr]]) -> "SymbolExpr":
        acc: dict[Key, sp.Expr] = {}
        for (k, m, p, sigma), c in items:
            if sigma not in _SIGMAS:
                raise ValueError(f"unknown decay generator {sigma!r}")
            if k < 0:
                raise ValueError("negative y power")
            for key, f in _canon_key(k, m, p, sigma):
                acc[key] = acc.get(key, ZERO) + c * f
        out = []
        for key in sorted(acc, key=_sort_key):
            c = sp.expand(acc[key])
            if c != 0:
                out.append((key, c))
        return SymbolExpr(tuple(out))

    @staticmethod
    def exp_decay(sigma: str) -> "SymbolExpr":
        return SymbolExpr.from_terms([((0, 0, 0, sigma), ONE)])

    @staticmethod
    def monomial(coeff=ONE, k: int = 0, m: int = 0, p: int = 0, sigma=None) -> "SymbolExpr":
        return SymbolExpr.from_terms([((k, m, p, sigma), sp.sympify(coeff))])

    # -- basic algebra -----------------------------------------------------------

    def items(self):
        return self.terms

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "SymbolExpr") -> "SymbolExpr":
        return SymbolExpr.from_terms(self.terms + other.terms)

    def __neg__(self) -> "SymbolExpr":
        return SymbolExpr.from_terms([(key, -c) for key, c in self.terms])

    def __sub__(self, other: "SymbolExpr") -> "SymbolExpr":
        return self + (-other)

    def scale(self, c) -> "SymbolExpr":
        c = sp.sympify(c)
        return SymbolExpr.from_terms([(key, c * v) for key, v in self.terms])

    def shift(self, k: int = 0, m: int = 0, p: int = 0) -> "SymbolExpr":
        """Multiply by ``y^k rho^m nu^p``."""
        return SymbolExpr.from_terms([((a + k, b + m, q + p, s), c) for (a, b, q, s), c in self.terms])

    def __mul__(self, other: "SymbolExpr") -> "SymbolExpr":
        out = []
        for (k1, m1, p1, s1), c1 in self.terms:
            for (k2, m2, p2, s2), c2 in other.terms:
                if s1 is not None and s2 is not None:
                    raise ValueError("product of two exponentials leaves the term algebra")
                out.append(((k1 + k2, m1 + m2, p1 + p2, s1 if s1 is not None else s2), c1 * c2))
        return SymbolExpr.from_terms(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymbolExpr) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(self.terms)

    # -- calculus ------------------------------------------------------------------

    def dy(self) -> "SymbolExpr":
        """Derivative in the normal variable ``y``."""
        out = []
        for (k, m, p, s), c in self.terms:
            if k:
                out.append(((k - 1, m, p, s), c * k))
            if s == "rho":
                out.append(((k, m + 1, p, s), -c))
            elif s == "nu":
                out.append(((k, m, p + 1, s), -c))
        return SymbolExpr.from_terms(out)

    def dxi(self) -> "SymbolExpr":
        """Derivative in ``xi``: ``d rho = 1`` and ``d nu = rho / nu``."""
        out = []
        for (k, m, p, s), c in self.terms:
            if m:
                out.append(((k, m - 1, p, s), c * m))
            if p:
                out.append(((k, m + 1, p - 2, s), c * p))
            if s == "rho":
                out.append(((k + 1, m, p, s), -c))
            elif s == "nu":
                out.append(((k + 1, m + 1, p - 1, s), -c))
        return SymbolExpr.from_terms(out)

    def at_boundary(self) -> "SymbolExpr":
        """Restriction to ``y = 0`` (drops the exponential)."""
        return SymbolExpr.from_terms([((0, m, p, None), c) for (k, m, p, s), c in self.terms if k == 0])

    # -- inspection ----------------------------------------------------------------

    def degrees(self, parameterized: bool) -> set[int]:
        """Homogeneity degrees of the terms (``y`` counts as -1)."""
        out = set()
        for (k, m, p, _), c in self.terms:
            base = m + p - k
            if parameterized:
                for mono in sp.Poly(c, LAM).monoms():
                    out.add(base + 2 * mono[0])
            else:
                out.add(base)
        return out

    def to_sympy(self) -> sp.Expr:
        total = ZERO
        for (k, m, p, s), c in self.terms:
            e = c * Y**k * RHO**m * NU**p
            if s == "rho":
                e *= sp.exp(-RHO * Y)
            elif s == "nu":
                e *= sp.exp(-NU * Y)
            total += e
        return total

    def pretty(self) -> str:
        """Stable one-term-per-line text form."""
        if not self.terms:
            return "0"
        lines = []
        for (k, m, p, s), c in self.terms:
            lines.append(f"[y^{k} rho^{m} nu^{p} exp(-{s or '0'} y)] {sp.sstr(c, order='lex')}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"SymbolExpr({len(self.terms)} terms)"


def _sort_key(key: Key):
    k, m, p, s = key
    return (_SIGMAS.index(s) if s in _SIGMAS else 3, k, m, p)


# --------------------------------------------------------------------------
# boundary jets


@dataclass(frozen=True)
class BoundaryJet:
    """Taylor jets of the coefficient functions at the base point.

    Each field maps ``(i, j)`` to the coefficient of ``y'^i y^j``.  The
    zeroth-order values of ``a`` and ``c`` are pinned to 1 (unit tangential
    metric and ``n(z) = 1``) so that ``rho`` and ``nu`` are the grade-0
    decay rates.
    """

    order: int
    kind: str
    a: dict = field(default_factory=dict)
    a_t: dict = field(default_factory=dict)
    b_d: dict = field(default_factory=dict)
    b_t: dict = field(default_factory=dict)
    c: dict = field(default_factory=dict)
    R: object = None

    def __post_init__(self):
        if sp.sympify(self.a.get((0, 0), ONE)) != 1:
            raise ValueError("a(z) must be 1 in boundary normal coordinates")
        if sp.sympify(self.c.get((0, 0), ONE)) != 1:
            raise ValueError("c(z) = n(z) must be 1 at the boundary")
        for (i, j), v in self.a_t.items():
            if j == 0 and sp.sympify(v) != 0:
                raise ValueError("mixed metric entry must vanish on the boundary")

    def free(self) -> "BoundaryJet":
        """Same geometry with ``n = 1``."""
        return BoundaryJet(self.order, self.kind, self.a, self.a_t, self.b_d, self.b_t, {(0, 0): ONE}, self.R)


MAX_JET_ORDER = 6


def build_jet(kind: str = "flat", order: int = 4, R=None, n_jets=None, tangential: bool = False) -> BoundaryJet:
    """Jet of the boundary-normal-coordinate coefficients.

    Parameters
    ----------
    kind : {"flat", "disk"}
        ``flat`` has the identity metric; ``disk`` uses polar coordinates
        ``r = R - y``, giving ``a = R^2/(R - y)^2`` and ``b_d = -1/(R - y)``.
    order : int
        Highest total Taylor order kept, at most 6.
    R : number or sympy expression, optional
        Disk radius (symbolic ``R`` by default).
    n_jets : sequence, optional
        Normal Taylor coefficients ``n_j`` of ``n(y)`` for ``j >= 1``;
        symbols ``n_01, n_02, ...`` when omitted.
    tangential : bool
        Also include tangential derivatives ``n_ij`` (i >= 1) of the index.
    """
    if order > MAX_JET_ORDER or order < 0:
        raise UnsupportedOrderError(f"jet order {order} outside 0..{MAX_JET_ORDER}")
    c = {(0, 0): ONE}
    for j in range(1, order + 1):
        if n_jets is not None:
            c[(0, j)] = sp.nsimplify(n_jets[j - 1]) if j - 1 < len(n_jets) else ZERO
        else:
            c[(0, j)] = jet_symbol("n", 0, j)
    if tangential:
        for i in range(1, order + 1):
            for j in range(0, order + 1 - i):
                c[(i, j)] = jet_symbol("n", i, j)
    if kind == "flat":
        return BoundaryJet(order, "flat", {(0, 0): ONE}, {}, {}, {}, c, None)
    if kind == "disk":
        Rs = sp.Symbol("R", positive=True) if R is None else sp.nsimplify(R)
        a = {(0, j): (j + 1) / Rs**j for j in range(order + 1)}
        b = {(0, j): -1 / Rs ** (j + 1) for j in range(order + 1)}
        return BoundaryJet(order, "disk", a, {}, b, {}, c, Rs)
    raise ValueError(f"unknown jet kind {kind!r}")


# --------------------------------------------------------------------------
# homogeneous operator parts


@dataclass(frozen=True)
class OpTerm:
    """``coeff * y^jy * (i d_xi)^jt [ xi^q D_y^s (.) ]``."""

    coeff: sp.Expr
    jy: int
    jt: int
    q: int
    s: int

    def apply(self, E: SymbolExpr, ordering: str = "left") -> SymbolExpr:
        v = E
        for _ in range(self.s):
            v = v.dy().scale(-I)
        if ordering == "left":
            v = v.shift(m=self.q)
            for _ in range(self.jt):
                v = v.dxi().scale(I)
        else:
            for _ in range(self.jt):
                v = v.dxi().scale(I)
            v = v.shift(m=self.q)
        return v.shift(k=self.jy).scale(self.coeff)


@dataclass(frozen=True)
class OperatorPart:
    """Grade-``m`` operator ``A_m`` as a list of :class:`OpTerm`."""

    grade: int
    terms: tuple[OpTerm, ...]

    def apply(self, E: SymbolExpr, ordering: str = "left") -> SymbolExpr:
        out = SymbolExpr()
        for t in self.terms:
            out = out + t.apply(E, ordering)
        return out

    def canonical(self) -> tuple:
        acc: dict = {}
        for t in self.terms:
            key = (t.jy, t.jt, t.q, t.s)
            acc[key] = sp.expand(acc.get(key, ZERO) + t.coeff)
        return tuple(sorted((k, v) for k, v in acc.items() if v != 0))

    def __eq__(self, other) -> bool:
        return isinstance(other, OperatorPart) and self.grade == other.grade and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash((self.grade, self.canonical()))

    def contains(self, coeff, jy: int = 0, jt: int = 0, q: int = 0, s: int = 0) -> bool:
        want = sp.expand(sp.sympify(coeff))
        return any(k == (jy, jt, q, s) and sp.expand(v - want) == 0 for k, v in self.canonical())


def homogeneous_parts(jet: BoundaryJet, N: int, parameterized: bool = False) -> list[OperatorPart]:
    """Operators ``A_0 .. A_N`` of the graded expansion.

    Grade counting: a jet term of total order ``|alpha|`` multiplying a
    symbol of degree ``2 - g`` lands in grade ``|alpha| + g``, where the
    drift terms have ``g = 1`` and ``lam c`` has ``g = 2`` (plain grading)
    or ``g = 0`` (parameter grading).
    """
    parts: list[list[OpTerm]] = [[] for _ in range(N + 1)]

    def put(grade, coeff, i, j, q, s):
        if 0 <= grade <= N and sp.sympify(coeff) != 0:
            parts[grade].append(OpTerm(sp.sympify(coeff), j, i, q, s))

    # xi_d^2 -> D_y^2
    put(0, ONE, 0, 0, 0, 2)
    for (i, j), v in jet.a.items():
        put(i + j, v, i, j, 2, 0)
    for (i, j), v in jet.a_t.items():
        put(i + j, 2 * v, i, j, 1, 1)
    for (i, j), v in jet.b_d.items():
        put(i + j + 1, -I * v, i, j, 0, 1)
    for (i, j), v in jet.b_t.items():
        put(i + j + 1, -I * v, i, j, 1, 0)
    shift = 0 if parameterized else 2
    for (i, j), v in jet.c.items():
        put(i + j + shift, -LAM * v, i, j, 0, 0)
    return [OperatorPart(g, tuple(ts)) for g, ts in enumerate(parts)]


# --------------------------------------------------------------------------
# half-line solver and recursion


def solve_halfline(rhs: SymbolExpr, sigma: str) -> SymbolExpr:
    """Decaying solution of ``-v'' + sigma^2 v = rhs`` with ``v(0) = 0``.

    For ``rhs = y^k e^{-sigma y}`` the solution is ``P(y) e^{-sigma y}``
    with ``2 sigma P' - P'' = y^k`` and ``P(0) = 0``, i.e.
    ``P' = sum_j (2 sigma)^{-(j+1)} D^j y^k``.
    """
    if sigma not in ("rho", "nu"):
        raise ValueError("sigma must be 'rho' or 'nu'")
    out = []
    for (k, m, p, s), c in rhs.terms:
        if s != sigma:
            raise ResonanceError(f"right-hand side term with generator {s!r} cannot be solved with decay {sigma!r}")
        for j in range(k + 1):
            factor = sp.Rational(math.factorial(k), math.factorial(k - j) * (k - j + 1) * 2 ** (j + 1))
            if sigma == "rho":
                out.append(((k - j + 1, m - (j + 1), p, s), c * factor))
            else:
                out.append(((k - j + 1, m, p - (j + 1), s), c * factor))
    return SymbolExpr.from_terms(out)


def apply_a0(v: SymbolExpr, sigma: str) -> SymbolExpr:
    """``-v'' + sigma^2 v`` computed with the algebra's own calculus."""
    sq = v.shift(m=2) if sigma == "rho" else v.shift(p=2)
    return sq - v.dy().dy()


MAX_ORDER = {False: 4, True: 2}


@dataclass(frozen=True)
class Recursion:
    """Solutions ``E_0 .. E_N`` with the operator parts used."""

    E: tuple[SymbolExpr, ...]
    parts: tuple[OperatorPart, ...]
    parameterized: bool
    sigma: str

    def residual(self, m: int, ordering: str = "left") -> SymbolExpr:
        total = SymbolExpr()
        for l in range(m + 1):
            total = total + self.parts[m - l].apply(self.E[l], ordering)
        return total


def recursion(jet: BoundaryJet, N: int, parameterized: bool = False, ordering: str = "left") -> Recursion:
    """Solve ``sum_{l<=m} A_{m-l} E_l = 0`` with ``E_0 = exp(-sigma y)``.

    Boundary values are ``E_0(0) = 1`` and ``E_m(0) = 0`` for ``m >= 1``.
    """
    if N > MAX_ORDER[parameterized] or N < 0:
        raise UnsupportedOrderError(f"recursion order {N} unsupported (max {MAX_ORDER[parameterized]})")
    if jet.order < N:
        raise UnsupportedOrderError(f"jet order {jet.order} is below the recursion order {N}")
    parts = homogeneous_parts(jet, N, parameterized)
    sigma = "nu" if parameterized else "rho"
    E = [SymbolExpr.exp_decay(sigma)]
    for m in range(1, N + 1):
        rhs = SymbolExpr()
        for l in range(m):
            rhs = rhs + parts[m - l].apply(E[l], ordering)
        E.append(solve_halfline(-rhs, sigma))
    return Recursion(tuple(E), tuple(parts), parameterized, sigma)


def dn_symbol(E_list: Iterable[SymbolExpr]) -> list[SymbolExpr]:
    """Grade-wise D-N symbol ``-dE_m/dy`` at ``y = 0``."""
    return [(-E.dy()).at_boundary() for E in E_list]


def dn_difference(jet: BoundaryJet, N: int, parameterized: bool = False) -> list[SymbolExpr]:
    """Grade-wise ``sigma(Lambda_n) - sigma(Lambda_0)`` for the jet."""
    pert = dn_symbol(recursion(jet, N, parameterized).E)
    free = dn_symbol(recursion(jet.free(), N, parameterized).E)
    return [a - b for a, b in zip(pert, free)]


def ordering_sensitivity(jet: BoundaryJet, N: int = 4, parameterized: bool = False) -> list[SymbolExpr]:
    """Grade-wise change of the D-N symbol between the two operator orderings."""
    left = dn_symbol(recursion(jet, N, parameterized, "left").E)
    right = dn_symbol(recursion(jet, N, parameterized, "right").E)
    return [a - b for a, b in zip(left, right)]


def e_difference(m: int, parameterized: bool = False) -> SymbolExpr:
    """``E_m - E_{0,m}`` on the flat jet (free medium: ``n = 1``)."""
    jet = build_jet("flat", m + 1 if parameterized else m)
    return recursion(jet, m, parameterized).E[m] - recursion(jet.free(), m, parameterized).E[m]


# --------------------------------------------------------------------------
# closed forms used as checks


def expected_e3_difference() -> SymbolExpr:
    """``(lam/4) n_01 (y/rho)(y + 1/rho) e^{-rho y}``."""
    n1 = jet_symbol("n", 0, 1)
    c = LAM * n1 / 4
    return SymbolExpr.from_terms([((2, -1, 0, "rho"), c), ((1, -2, 0, "rho"), c)])


def expected_param_e1_difference(sign: int = 1) -> SymbolExpr:
    """``sign * (lam/4) n_01 (y^2/nu + y/nu^2) e^{-nu y}``."""
    n1 = jet_symbol("n", 0, 1)
    c = sign * LAM * n1 / 4
    return SymbolExpr.from_terms([((2, 0, -1, "nu"), c), ((1, 0, -2, "nu"), c)])


# --------------------------------------------------------------------------
# bridge to the numerical D-N maps


def evaluate(expr: SymbolExpr, values: dict) -> complex:
    """Numeric value of a boundary symbol (``sigma = None`` terms)."""
    rho = complex(values[RHO])
    nu = complex(values[NU]) if NU in values else (rho * rho - complex(values.get(LAM, 0))) ** 0.5
    total = 0j
    for (k, m, p, s), c in expr.terms:
        if k != 0 or s is not None:
            raise ValueError("evaluate expects a boundary symbol")
        cv = complex(sp.N(c.subs(values), 30))
        total += cv * rho**m * nu**p
    return total


@dataclass(frozen=True)
class SymbolRow:
    l: int
    predicted_leading: float
    predicted_next: float
    measured: float
    error_leading: float
    error_next: float


def disk_difference_symbols(profile, order: int = 4) -> list[SymbolExpr]:
    """Grade-wise difference symbols for the profile's boundary jet."""
    jet = build_jet("disk", order, R=profile.R, n_jets=profile.boundary_jet(order)[1:])
    return dn_difference(jet, order)


def symbol_vs_numeric(profile, l_list, lam: float, diff=None) -> list[SymbolRow]:
    """Compare symbol predictions of ``Lambda_n - Lambda_0`` with ``dtn``.

    ``predicted_leading`` keeps grade 3 (``lam n'(R) R^2 / (4 l^2)``);
    ``predicted_next`` adds grade 4.  Errors are relative to the measured
    difference.
    """
    from .dtn import dtn_0, dtn_n, is_pole

    if diff is None:
        diff = disk_difference_symbols(profile)
    rows = []
    for l in l_list:
        rho = l / profile.R
        vals = {LAM: lam, RHO: rho}
        g3 = evaluate(diff[3], vals).real
        g4 = evaluate(diff[4], vals).real if len(diff) > 4 else 0.0
        a, b = dtn_n(profile, l, lam), dtn_0(l, lam, profile.R)
        if is_pole(a) or is_pole(b):
            raise ValueError(f"lambda={lam} sits on a pole of mode {l}")
        meas = a - b
        rows.append(SymbolRow(int(l), g3, g3 + g4, meas, abs(g3 / meas - 1.0), abs((g3 + g4) / meas - 1.0)))
    return rows


# --------------------------------------------------------------------------
# random expressions for confluence tests


def random_expr(rng: random.Random, n_terms: int = 4, sigma: str | None = "nu") -> SymbolExpr:
    """Random expression with small integer data (test helper)."""
    items = []
    for _ in range(n_terms):
        k = rng.randint(0, 3)
        m = rng.randint(0, 4)
        p = rng.randint(-2, 3)
        c = sp.Integer(rng.randint(-5, 5)) + sp.Integer(rng.randint(-3, 3)) * LAM
        items.append(((k, m, p, sigma), c))
    return SymbolExpr.from_terms(items)
