from __future__ import annotations

import math
import re

import mpmath
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from itelab.errors import AmbiguityError, NotAnEigenvalueError, ProfileError
from itelab.profiles import gamma_minus, gamma_plus, parabolic
from itelab.radialode import (
    MediumProfile,
    Piece,
    RadialPropagator,
    dirichlet_count,
    dirichlet_eigenvalue,
    dirichlet_eigenvalues,
    eigen_data,
    l2n_norm,
    regular_solution_at,
    solve_regular,
)
from itelab.specialfun import bessel_j_zero


def _bessel_regular(l, lam, c, r):
    """Regular solution of the constant-index equation normalised as r^l."""
    k = mpmath.sqrt(lam * c)
    scale = mpmath.mpf(2) ** l * mpmath.factorial(l) / k**l
    return float(scale * mpmath.besselj(l, k * r)), float(scale * k * mpmath.besselj(l, k * r, derivative=1))


def _ivp_boundary(profile, l, lam, r0, u0, du0):
    def rhs(r, y):
        return [y[1], -y[1] / r + (l * l / (r * r) - lam * profile.n(r)) * y[0]]

    bps = sorted({p.end for p in profile.pieces if p.end > r0})
    y = [u0, du0]
    r = r0
    for b in bps:
        sol = solve_ivp(rhs, (r, b), y, method="DOP853", rtol=1e-13, atol=1e-300)
        y, r = sol.y[:, -1], b
    return y


def _rel(a, b):
    return abs(a[0] - b[0]) / math.hypot(*b) + abs(a[1] - b[1]) / math.hypot(*b)


@pytest.mark.parametrize("l, lam", [(0, 3.0), (2, 40.0), (7, 150.0)])
def test_constant_medium_matches_bessel(l, lam):
    prof = MediumProfile.constant(1.0, 2.5)
    u, du = regular_solution_at(prof, l, lam, 1.0)
    ref = _bessel_regular(l, lam, 2.5, 1.0)
    assert _rel((u, du), ref) < 1e-12


@pytest.mark.parametrize("l, lam", [(0, 12.0), (3, 80.0), (10, 400.0)])
def test_layered_profile_matches_ivp(l, lam):
    prof = gamma_plus()
    core = prof.pieces[0]
    r0 = 0.5 * core.end
    u0, du0 = _bessel_regular(l, lam, core.coeffs[0], r0)
    ref = _ivp_boundary(prof, l, lam, r0, u0, du0)
    u, du = regular_solution_at(prof, l, lam, prof.R)
    assert _rel((u, du), ref) < 1e-8


def test_negative_energy_is_monotone():
    prof = parabolic()
    d = solve_regular(prof, 2, -50.0)
    assert d.osc_count == 0
    assert d.uR > 0 and d.duR > 0


def test_batch_equals_single_calls():
    prof = gamma_minus()
    lams = np.array([0.5, 7.0, 33.3, 120.0])
    batch = RadialPropagator(prof, 4, 120.0).evaluate(lams)
    for i, lam in enumerate(lams):
        single = solve_regular(prof, 4, float(lam))
        a = batch.u[i] * math.exp(batch.log_scale[i])
        b = single.uR * math.exp(single.log_scale)
        assert a == pytest.approx(b, rel=1e-10)
        assert batch.osc[i] == single.osc_count


@pytest.mark.parametrize("l, k", [(0, 1), (0, 3), (2, 2), (9, 1)])
def test_constant_medium_eigenvalues(l, k):
    c = 3.0
    prof = MediumProfile.constant(1.5, c)
    expected = bessel_j_zero(l, k) ** 2 / (c * 1.5**2)
    assert dirichlet_eigenvalue(prof, l, k) == pytest.approx(expected, rel=1e-12)


def test_eigenvalue_list_is_consistent_with_counts():
    prof = gamma_plus()
    spec = dirichlet_eigenvalues(prof, 1, 300.0)
    assert spec.operator_tag == "perturbed"
    assert len(spec.eigenvalues) == dirichlet_count(prof, 1, 300.0)
    for k, lam in enumerate(spec.eigenvalues, start=1):
        assert dirichlet_count(prof, 1, lam * (1 - 1e-6)) == k - 1
        assert dirichlet_count(prof, 1, lam * (1 + 1e-6)) == k
    assert all(b > a for a, b in zip(spec.eigenvalues, spec.eigenvalues[1:]))


def test_eigenvalue_zeroes_ivp_solution():
    prof = parabolic(0.8)
    lam = dirichlet_eigenvalue(prof, 1, 2)
    # Frobenius start at small radius from the series of the first piece
    r0 = 1e-3
    u0, du0 = r0, 1.0
    u, du = _ivp_boundary(prof, 1, lam, r0, u0, du0)
    assert abs(u) < 1e-7 * abs(du)


def test_free_l2n_norm():
    free = MediumProfile.constant(1.0)
    j01 = bessel_j_zero(0, 1)
    expected = float(mpmath.besselj(1, j01) ** 2 / 2)
    assert l2n_norm(free, 0, j01**2) == pytest.approx(expected, rel=1e-9)
    assert expected == pytest.approx(0.13475706, abs=1e-8)


def test_eigen_data_rejects_non_eigenvalue():
    with pytest.raises(NotAnEigenvalueError):
        eigen_data(gamma_plus(), 0, 10.0)


def test_count_near_eigenvalue_is_ambiguous():
    prof = gamma_minus()
    lam = dirichlet_eigenvalue(prof, 0, 1)
    with pytest.raises(AmbiguityError):
        dirichlet_count(prof, 0, lam * (1 + 1e-10))


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(R=1.0, pieces=(Piece(0.0, 1.0, (2.0, -0.5)),), gamma=-1), "n(R) must equal 1"),
        (dict(R=1.0, pieces=(Piece(0.0, 0.5, (1.0,)), Piece(0.5, 1.0, (0.0, 1.0))), gamma=1), "jumps"),
        (dict(R=1.0, pieces=(Piece(0.0, 1.0, (1.5, 0.0, -0.5)),), gamma=1), "gamma"),
        (dict(R=1.0, pieces=(Piece(0.0, 0.9, (1.0,)),), gamma=1), "pieces[-1].end"),
        (dict(R=1.0, pieces=(Piece(0.0, 1.0, (-1.0, 2.0)),), gamma=1), "positive"),
    ],
)
def test_profile_validation(kwargs, field):
    with pytest.raises(ProfileError, match=re.escape(field)):
        MediumProfile(**kwargs)


def test_profile_helpers():
    p = parabolic(0.5)
    assert p.gamma == -1
    assert p.boundary_slope == pytest.approx(-1.0)
    jet = p.boundary_jet(3)
    # n(R - y) = 1 + y - 0.5 y^2
    assert jet == pytest.approx([1.0, 1.0, -0.5, 0.0])
    assert p.key() == parabolic(0.5).key() != parabolic(0.4).key()
    assert p.n_max == pytest.approx(1.5) and p.n_min == pytest.approx(1.0)
    assert MediumProfile.constant(1.0).is_free and not p.is_free
