from __future__ import annotations

import random
import time
from pathlib import Path

import pytest
import sympy as sp

from itelab.dtn import dtn_0, dtn_n
from itelab.errors import ResonanceError, UnsupportedOrderError
from itelab.profiles import gamma_minus, gamma_plus
from itelab.symbolcalc import (
    LAM,
    NU,
    RHO,
    Y,
    SymbolExpr,
    apply_a0,
    build_jet,
    dn_difference,
    e_difference,
    expected_e3_difference,
    expected_param_e1_difference,
    evaluate,
    homogeneous_parts,
    jet_symbol,
    ordering_sensitivity,
    random_expr,
    recursion,
    solve_halfline,
)

GOLDEN = Path(__file__).parent / "golden"


def _explicit(expr: SymbolExpr) -> sp.Expr:
    """Plain sympy form with nu written out as sqrt(rho^2 - lam)."""
    return expr.to_sympy().subs(NU, sp.sqrt(RHO**2 - LAM))


def _same(a: sp.Expr, b: sp.Expr) -> bool:
    return sp.simplify(sp.expand(a - b)) == 0


def test_canonical_rewrite():
    lhs = SymbolExpr.monomial(k=1, m=2, sigma="nu")
    rhs = SymbolExpr.monomial(k=1, p=2, sigma="nu") + SymbolExpr.monomial(LAM, k=1, sigma="nu")
    assert lhs == rhs
    # without nu the rho powers are left alone
    assert SymbolExpr.monomial(m=2, sigma="rho").terms[0][0] == (0, 2, 0, "rho")
    assert (lhs - lhs).is_zero


@pytest.mark.parametrize("seed", range(5))
def test_ring_laws(seed):
    rng = random.Random(seed)
    a, b, c = (random_expr(rng) for _ in range(3))
    k1, k2 = random_expr(rng, sigma=None), random_expr(rng, sigma=None)
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (b + c) * k1 == b * k1 + c * k1
    assert (a * k1) * k2 == a * (k1 * k2)
    assert (a * k1).dy() == a.dy() * k1 + a * k1.dy()


@pytest.mark.parametrize("seed", range(4))
def test_calculus_matches_sympy(seed):
    rng = random.Random(100 + seed)
    e = random_expr(rng, sigma="nu") + random_expr(rng, sigma="rho")
    assert _same(_explicit(e.dy()), sp.diff(_explicit(e), Y))
    assert _same(_explicit(e.dxi()), sp.diff(_explicit(e), RHO))


def test_product_of_exponentials_rejected():
    e = SymbolExpr.exp_decay("rho")
    with pytest.raises(ValueError):
        e * e


@pytest.mark.parametrize("sigma", ["rho", "nu"])
def test_halfline_solution(sigma):
    rng = random.Random(7)
    rhs = random_expr(rng, n_terms=5, sigma=sigma)
    v = solve_halfline(rhs, sigma)
    assert apply_a0(v, sigma) == rhs
    assert v.at_boundary().is_zero
    s = RHO if sigma == "rho" else NU
    ev = _explicit(v)
    resid = -sp.diff(ev, Y, 2) + _explicit(SymbolExpr.monomial(m=2) if sigma == "rho" else SymbolExpr.monomial(p=2)) * ev - _explicit(rhs)
    assert sp.simplify(resid) == 0
    assert s is not None


def test_halfline_resonance():
    with pytest.raises(ResonanceError):
        solve_halfline(SymbolExpr.exp_decay("rho"), "nu")


def test_order_limits():
    with pytest.raises(UnsupportedOrderError):
        build_jet("flat", 7)
    with pytest.raises(UnsupportedOrderError):
        recursion(build_jet("flat", 6), 5)
    with pytest.raises(UnsupportedOrderError):
        recursion(build_jet("flat", 6), 3, parameterized=True)
    with pytest.raises(UnsupportedOrderError):
        recursion(build_jet("flat", 2), 3)


def test_operator_parts_layout():
    n1 = jet_symbol("n", 0, 1)
    plain = homogeneous_parts(build_jet("flat", 2), 3)
    assert plain[0].contains(1, s=2) and plain[0].contains(1, q=2)
    assert plain[2].contains(-LAM)
    assert plain[3].contains(-LAM * n1, jy=1)
    param = homogeneous_parts(build_jet("flat", 2), 2, parameterized=True)
    assert param[0].contains(-LAM) and param[1].contains(-LAM * n1, jy=1)


@pytest.mark.parametrize("kind, N, param", [("flat", 4, False), ("disk", 4, False), ("flat", 2, True), ("disk", 2, True)])
def test_recursion_residuals_and_degrees(kind, N, param):
    rec = recursion(build_jet(kind, max(N, 2) + (1 if param else 0)), N, parameterized=param)
    for m in range(N + 1):
        assert rec.residual(m).is_zero
        if not rec.E[m].is_zero:
            assert rec.E[m].degrees(param) == {-m}


def test_e3_difference_closed_form():
    t = time.perf_counter()
    d = e_difference(3)
    assert time.perf_counter() - t < 1.0
    assert d == expected_e3_difference()


def test_parameterized_e1_sign():
    d = e_difference(1, parameterized=True)
    assert d == expected_param_e1_difference(+1)
    assert d != expected_param_e1_difference(-1)


@pytest.mark.parametrize("make", [gamma_plus, gamma_minus])
def test_parameterized_symbol_at_negative_energy(make):
    # grade 1 of the parameter grading predicts lam n'(R) / (4 nu^2)
    prof = make()
    diff1 = dn_difference(build_jet("flat", 2), 2, parameterized=True)[1]
    errs = []
    for l in (20, 40, 80):
        tau = float(l) / prof.R
        lam = -tau * tau
        meas = dtn_n(prof, l, lam) - dtn_0(l, lam, prof.R)
        pred = evaluate(diff1, {LAM: lam, RHO: l / prof.R, jet_symbol("n", 0, 1): -prof.boundary_slope}).real
        errs.append(abs(pred / meas - 1))
        assert pred * meas > 0
    assert errs[0] > errs[1] > errs[2] and errs[2] < 0.02


def test_orderings_agree_without_tangential_metric():
    for jet in (build_jet("disk", 4), build_jet("flat", 4, tangential=True)):
        assert all(x.is_zero for x in ordering_sensitivity(jet, 4))


@pytest.mark.parametrize(
    "name, make",
    [
        ("e3_difference.txt", lambda: e_difference(3).pretty() + "\n"),
        ("param_e1_difference.txt", lambda: e_difference(1, parameterized=True).pretty() + "\n"),
        ("disk_dn_difference.txt", lambda: "".join(f"# grade {m}\n{x.pretty()}\n" for m, x in enumerate(dn_difference(build_jet("disk", 4), 4)))),
    ],
)
def test_golden_pretty(name, make):
    assert make() == (GOLDEN / name).read_text()


def test_evaluate_boundary_symbol():
    d = dn_difference(build_jet("disk", 4), 4)
    n1, n2 = jet_symbol("n", 0, 1), jet_symbol("n", 0, 2)
    vals = {LAM: 10.0, RHO: 20.0, n1: -0.5, n2: 0.0, sp.Symbol("R", positive=True): 1.0}
    g3 = evaluate(d[3], vals)
    assert g3 == pytest.approx(10.0 * 0.5 / (4 * 400.0))
    with pytest.raises(ValueError):
        evaluate(SymbolExpr.exp_decay("rho"), vals)
