from __future__ import annotations

import dataclasses
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from itelab.errors import AccountingError
from itelab.profiles import gamma_minus, parabolic, singular_fixture
from itelab.radialode import MediumProfile, dirichlet_eigenvalues
from itelab.spectra import (
    branch_trace,
    branch_weight,
    decade_check,
    default_alpha,
    first_event,
    mode_cutoff,
    multiplicity,
    scan_mode,
    survey,
    transmission_det,
    weyl_volumes,
    weyl_volumes_exact,
)


@pytest.fixture(scope="module")
def small_survey():
    return survey(gamma_minus(), 150.0)


def _constant_disk_roots(l, c, lo, hi):
    """Transmission roots of a constant-index unit disk from mpmath."""

    def f(lam):
        k = mpmath.sqrt(lam)
        kc = k * mpmath.sqrt(c)
        return kc * mpmath.besselj(l, kc, derivative=1) * mpmath.besselj(l, k) - mpmath.besselj(l, kc) * k * mpmath.besselj(l, k, derivative=1)

    grid = np.linspace(lo, hi, 4000)
    vals = [f(x) for x in grid]
    roots = []
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa * fb < 0:
            roots.append(float(mpmath.findroot(f, (a, b), solver="anderson")))
    return roots


def test_small_helpers():
    assert multiplicity(0) == 1 and multiplicity(3) == 2
    p = parabolic()
    assert mode_cutoff(p, 100.0) == math.ceil(math.sqrt(150.0)) + 8
    assert branch_weight(0, 1.0) == 1.0
    assert branch_weight(2, 2.0) == pytest.approx(2.0**1.5)


def test_weyl_volumes_exact():
    vn, v0 = weyl_volumes_exact(parabolic(0.5))
    # n = 3/2 - r^2/2: (1/2) int (3r/2 - r^3/2) dr = 5/16
    assert vn == Fraction(5, 16) and v0 == Fraction(1, 4)
    assert weyl_volumes(parabolic(0.5)) == (0.3125, 0.25)


@pytest.mark.parametrize("l", [0, 1, 3])
def test_constant_disk_transmission_roots(l):
    prof = MediumProfile.constant(1.0, 4.0)
    scan = scan_mode(prof, l, 0.5, 60.0, 60.1)
    expected = _constant_disk_roots(l, 4, 0.5, 60.0)
    assert len(scan.roots) == len(expected)
    for a, b in zip(scan.roots, expected):
        assert a == pytest.approx(b, rel=1e-11)


def test_transmission_det_vanishes_at_roots():
    prof = gamma_minus()
    scan = scan_mode(prof, 2, 0.5, 80.0, 80.1)
    assert scan.roots
    for r in scan.roots:
        d = transmission_det(prof, 2, r)
        d_off = transmission_det(prof, 2, r + 0.05)
        assert abs(d) < 1e-9 * abs(d_off)


def test_poles_match_dirichlet_spectrum():
    prof = gamma_minus()
    scan = scan_mode(prof, 1, 0.2, 90.0, 90.1)
    spec = dirichlet_eigenvalues(prof, 1, 90.0).eigenvalues
    assert scan.poles_n == pytest.approx([x for x in spec if x > 0.2], rel=1e-14)
    assert scan.dirichlet == pytest.approx(list(spec), rel=1e-14)


def test_pole_jumps_follow_the_law(small_survey):
    assert small_survey.pole_jump_violations() == []
    assert small_survey.common_pole_violations() == []
    g = small_survey.profile.gamma
    for s in small_survey.scans:
        for e in s.events:
            if e.kind == "pole_n":
                assert e.crossing_sign == -g
            elif e.kind == "pole_0":
                assert e.crossing_sign == g


def test_accounting_and_weyl_bound(small_survey):
    for lam in np.linspace(10.0, 150.0, 15):
        rep = small_survey.report(float(lam))
        assert rep.accounting_ok and rep.weyl_ok
        assert rep.N_T == rep.N_T_reg + rep.N_T_sng


def test_accounting_detects_a_missing_event(small_survey):
    scans = list(small_survey.scans)
    i = next(i for i, s in enumerate(scans) if any(e.kind == "zero" for e in s.events))
    s = scans[i]
    kept = [e for e in s.events if e.kind != "zero"]
    scans[i] = dataclasses.replace(s, events=kept)
    broken = dataclasses.replace(small_survey, scans=scans)
    with pytest.raises(AccountingError):
        broken.report(150.0)


def test_records_do_not_scatter(small_survey):
    recs = small_survey.records
    assert recs and all(r.min_scattering_abs < 1e-12 for r in recs)
    assert all(a.lambda_star <= b.lambda_star for a, b in zip(recs, recs[1:]))
    chk = decade_check(small_survey.profile, recs[0])
    assert chk.ratio < 1e-6
    assert chk.max_unitarity_error < 1e-12


def test_alpha_below_every_event():
    prof = parabolic()
    a = default_alpha(prof)
    assert a == pytest.approx(0.5 * first_event(prof))
    for l in range(4):
        scan = scan_mode(prof, l, 1e-3, 2 * a, 2 * a + 0.1)
        assert all(e.lam >= 2 * a * (1 - 1e-12) for e in scan.events)


def test_cached_list_reused_or_rebuilt():
    prof = gamma_minus()
    fresh = scan_mode(prof, 0, 0.5, 60.0, 60.1)
    again = scan_mode(prof, 0, 0.5, 60.0, 60.1, dirichlet=fresh.dirichlet)
    assert again.reused and again.events == fresh.events
    bad = list(fresh.dirichlet)
    bad[-1] *= 1.001
    rebuilt = scan_mode(prof, 0, 0.5, 60.0, 60.1, dirichlet=bad)
    assert not rebuilt.reused and rebuilt.dirichlet == fresh.dirichlet
    short = scan_mode(prof, 0, 0.5, 60.0, 60.1, dirichlet=fresh.dirichlet[:-1])
    assert not short.reused


def test_singular_fixture_common_pole():
    prof, lam = singular_fixture()
    scan = scan_mode(prof, 0, 0.5, 30.0, 30.1)
    both = [e for e in scan.events if e.kind == "pole_both"]
    assert len(both) == 1 and both[0].lam == pytest.approx(lam, rel=1e-12)
    assert both[0].singular and abs(both[0].crossing_sign) <= 1
    sing = [r for r in scan.records if r.singular]
    assert len(sing) == 1 and sing[0].score_n < 1e-6 and sing[0].score_0 < 1e-6


def test_branch_trace_signs_match_events():
    prof = gamma_minus()
    tr = branch_trace(prof, 1, 0.5, 60.0)
    lam, mu = tr.samples[:, 0], tr.samples[:, 1]
    assert np.all(np.diff(lam) >= 0)
    for e in tr.events:
        d = 1e-6 * (1 + e.lam)
        before = int(mu[np.searchsorted(lam, e.lam - d)] < 0)
        after = int(mu[np.searchsorted(lam, e.lam + d)] < 0)
        assert after - before == e.crossing_sign


def test_free_medium_flags_no_roots():
    # d_l vanishes identically for n = 1; roundoff must not produce roots
    free = MediumProfile.constant(1.5)
    for l in (0, 4):
        scan = scan_mode(free, l, 0.3, 80.0)
        assert scan.roots == [] and scan.records == []
        assert all(e.kind == "pole_both" for e in scan.events)
