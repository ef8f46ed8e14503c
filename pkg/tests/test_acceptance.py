"""Acceptance criteria 1-10.

Each test records its verdict through the ``criterion`` fixture; the
terminal summary prints one PASS/FAIL line per criterion.  Run with
``pytest tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from itelab.dtn import dtn_0, dtn_n, is_pole, laurent_at_pole, mode_frames, scattering_coeff
from itelab.profiles import gamma_minus, gamma_plus, parabolic
from itelab.radialode import MediumProfile, dirichlet_eigenvalue
from itelab.spectra import decade_check, default_alpha, scan_mode, survey, weyl_volumes
from itelab.symbolcalc import e_difference, expected_e3_difference, expected_param_e1_difference, symbol_vs_numeric

LAM_TOP = 2000.0
CHECKPOINTS = np.linspace(LAM_TOP / 20, LAM_TOP, 20)
PROFILES = {"gamma_plus": gamma_plus, "gamma_minus": gamma_minus, "parabolic": parabolic}


@pytest.fixture(scope="module")
def surveys():
    out = {}
    t = time.perf_counter()
    for name in ("gamma_plus", "gamma_minus"):
        p = PROFILES[name]()
        out[name] = survey(p, LAM_TOP, default_alpha(p))
    out["seconds"] = time.perf_counter() - t
    return out


# -- 1 ----------------------------------------------------------------------


def test_c1_e3_difference(criterion):
    t = time.perf_counter()
    d = e_difference(3)
    dt = time.perf_counter() - t
    ok = criterion(1, d == expected_e3_difference() and dt < 1.0, f"E3-E03 exact ({dt:.2f}s)")
    assert ok


@pytest.mark.xfail(strict=True, reason="the recursion gives the parameterized grade-1 difference with the opposite overall sign")
def test_c1_param_e1_as_stated(criterion):
    d = e_difference(1, parameterized=True)
    ok = d == expected_param_e1_difference(-1)
    criterion(1, ok, "param E1-E01 with leading minus: " + ("match" if ok else "no match, recursion gives +"))
    assert ok


def test_c1_param_e1_sign_confirmed_numerically():
    # at lam = -tau^2 the D-N difference is real and the + form predicts it
    p = gamma_plus()
    d = e_difference(1, parameterized=True)
    assert d == expected_param_e1_difference(+1)
    for l in (40, 80):
        lam = -float(l) ** 2
        meas = dtn_n(p, l, lam) - dtn_0(l, lam, p.R)
        pred = lam * p.boundary_slope / (4.0 * (l**2 - lam))
        assert abs(meas / pred - 1.0) < 0.05


# -- 2 ----------------------------------------------------------------------


def test_c2_principal_symbol_convergence(criterion):
    t = time.perf_counter()
    p = gamma_plus()
    rows = symbol_vs_numeric(p, [20, 40, 80], 10.0)
    lead = [abs(r.measured / r.predicted_leading - 1.0) for r in rows]
    nxt = [abs(r.measured / r.predicted_next - 1.0) for r in rows]
    f_lead = [a / b for a, b in zip(lead, lead[1:])]
    f_next = [a / b for a, b in zip(nxt, nxt[1:])]
    dt = time.perf_counter() - t
    ok = all(1.6 <= f <= 2.6 for f in f_lead) and all(3.2 <= f <= 5.2 for f in f_next) and dt < 30
    detail = "leading factors " + ", ".join(f"{f:.3f}" for f in f_lead)
    detail += "; next-grade factors " + ", ".join(f"{f:.3f}" for f in f_next) + f" ({dt:.1f}s)"
    assert criterion(2, ok, detail)


# -- 3 ----------------------------------------------------------------------


def test_c3_factorization_identities(criterion):
    t = time.perf_counter()
    lams = np.linspace(0.5, 60.0, 50)
    worst = dict(inverse_n=0.0, factorization=0.0, corollary=0.0)
    for make in PROFILES.values():
        p = make()
        for l in range(21):
            for fr in mode_frames(p, l, lams):
                r = fr.residuals()
                for key in worst:
                    if key in r:
                        worst[key] = max(worst[key], r[key])
    dt = time.perf_counter() - t
    ok = max(worst.values()) <= 1e-7 and dt < 120
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" ({dt:.1f}s)"
    assert criterion(3, ok, detail)


# -- 4 ----------------------------------------------------------------------


def test_c4_residue_law(criterion):
    worst = 0.0
    all_negative = True
    for make in PROFILES.values():
        p = make()
        for l in (0, 1, 2):
            for k in (1, 2, 3):
                data = laurent_at_pole(p, l, dirichlet_eigenvalue(p, l, k), check=False)
                all_negative &= data.residue_fit < 0 and data.residue < 0
                worst = max(worst, data.residue_mismatch)
    ok = all_negative and worst <= 1e-6
    assert criterion(4, ok, f"27 poles, all negative: {all_negative}, max rel mismatch {worst:.1e}")


# -- 5 to 7 -----------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize("name", ["gamma_plus", "gamma_minus"])
def test_c5_branch_accounting(surveys, name, criterion):
    sv = surveys[name]
    bad = [lam for lam in CHECKPOINTS if not sv.report(lam, check=False).accounting_ok]
    for lam in CHECKPOINTS:
        sv.check_tail(lam)
    jumps = sv.pole_jump_violations()
    common = sv.common_pole_violations()
    ok = not bad and not jumps and not common
    assert criterion(5, ok, f"{name}: accounting misses {len(bad)}/20, jump-law violations {len(jumps)}, common-pole {len(common)}")


@pytest.mark.slow
@pytest.mark.parametrize("name", ["gamma_plus", "gamma_minus"])
def test_c6_weyl_lower_bound(surveys, name, criterion):
    sv = surveys[name]
    reps = [sv.report(lam, check=False) for lam in CHECKPOINTS]
    bound_ok = all(r.weyl_ok for r in reps)
    last = reps[-1]
    vn, v0 = weyl_volumes(sv.profile)
    density = last.N_T / LAM_TOP
    need = 0.8 * sv.profile.gamma * (vn - v0)
    ok = bound_ok and density >= need and surveys["seconds"] < 600
    detail = f"{name}: bound at all checkpoints {bound_ok}, N_T/lam {density:.4f} >= {need:.4f} ({surveys['seconds']:.0f}s both surveys)"
    assert criterion(6, ok, detail)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["gamma_plus", "gamma_minus"])
def test_c7_weyl_law(surveys, name, criterion):
    sv = surveys[name]
    rep = sv.report(LAM_TOP, check=False)
    vn, _ = weyl_volumes(sv.profile)
    e0 = abs(rep.N_0 * 4 / (LAM_TOP * sv.profile.R**2) - 1)
    en = abs(rep.N_n / (vn * LAM_TOP) - 1)
    assert criterion(7, e0 <= 0.1 and en <= 0.1, f"{name}: N_0 off by {e0:.3f}, N_n off by {en:.3f}")


# -- 8 ----------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize("name", ["gamma_plus", "gamma_minus"])
def test_c8_non_scattering(surveys, name, criterion):
    sv = surveys[name]
    checks = [decade_check(sv.profile, r) for r in sv.records if r.lambda_star < 500 and not r.singular]
    worst_ratio = max(c.ratio for c in checks)
    worst_s = max(c.max_unitarity_error for c in checks)
    ok = bool(checks) and worst_ratio <= 1e-6 and worst_s <= 1e-8
    assert criterion(8, ok, f"{name}: {len(checks)} ITEs, max |A|/median {worst_ratio:.1e}, max ||S|-1| {worst_s:.1e}")


# -- 9 ----------------------------------------------------------------------


@pytest.mark.parametrize("R", [1.0, 2.0])
def test_c9_free_medium_collapse(R, criterion):
    free = MediumProfile.constant(R)
    lams = np.linspace(0.37, 100.0, 60)
    dn_err = a_max = 0.0
    roots = 0
    for l in range(11):
        for lam in lams:
            a, b = dtn_n(free, l, lam), dtn_0(l, lam, R)
            if not (is_pole(a) or is_pole(b)):
                dn_err = max(dn_err, abs(a - b) / max(1.0, abs(b)))
            a_max = max(a_max, abs(scattering_coeff(free, l, lam)))
        roots += len(scan_mode(free, l, 0.3, 100.0).roots)
    ok = dn_err <= 1e-8 and a_max <= 1e-10 and roots == 0
    assert criterion(9, ok, f"R={R:g}: |dLambda| {dn_err:.1e}, |A| {a_max:.1e}, roots flagged {roots}")


# -- 10 ---------------------------------------------------------------------


def test_c10_special_function_floor(criterion):
    here = Path(__file__).parent
    keys = "oracle_agreement or wronskian or recurrence or interlacing"
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(here / "test_specialfun.py"), "-k", keys],
        capture_output=True, text=True, cwd=here.parent,
    )
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    assert criterion(10, proc.returncode == 0, summary)
