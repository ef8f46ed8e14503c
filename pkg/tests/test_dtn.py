from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np
import pytest

from itelab.dtn import (
    POLE,
    dtn_0,
    dtn_ext_plus,
    dtn_n,
    g_coeffs,
    is_pole,
    laurent_at_free_pole,
    laurent_at_pole,
    match_single_layer,
    mode_frame,
    mode_frames,
    obstacle_coeff,
    regularized_dtn_0,
    regularized_dtn_n,
    s_matrix_entry,
    scattering_coeff,
    single_layer_free,
    single_layer_n,
)
from itelab.errors import MismatchError
from itelab.profiles import gamma_minus, gamma_plus, parabolic
from itelab.radialode import MediumProfile, dirichlet_eigenvalue
from itelab.specialfun import bessel_j_zero

mpmath.mp.dps = 40


def _mp_disk_dtn(l, lam, c, R):
    """``sqrt(lam c) J_l'/J_l`` for a constant index ``c`` at 40 digits."""
    z = mpmath.sqrt(mpmath.mpf(lam) * c) * R
    return mpmath.sqrt(mpmath.mpf(lam) * c) * mpmath.besselj(l, z, derivative=1) / mpmath.besselj(l, z)


def test_dtn_0_known_value():
    assert dtn_0(0, 1.0, 1.0) == pytest.approx(-0.5750809149, rel=1e-9)
    assert dtn_0(3, 0.0, 2.0) == 1.5


def test_dtn_0_negative_energy_uses_modified_bessel():
    t = 3.0
    expected = float(t * mpmath.besseli(2, t * 1.5, derivative=1) / mpmath.besseli(2, t * 1.5))
    assert dtn_0(2, -t * t, 1.5) == pytest.approx(expected, rel=1e-12)


def test_pole_sentinel():
    j = bessel_j_zero(1, 2)
    assert is_pole(dtn_0(1, j * j, 1.0))
    assert dtn_0(1, j * j, 1.0) is POLE
    prof = MediumProfile.constant(1.0, 2.0)
    lam = dirichlet_eigenvalue(prof, 0, 1)
    assert is_pole(dtn_n(prof, 0, lam))


@pytest.mark.parametrize("l, lam", [(0, 2.0), (4, 55.0), (12, 30.0)])
def test_constant_medium_dtn(l, lam):
    prof = MediumProfile.constant(1.2, 1.7)
    assert dtn_n(prof, l, lam) == pytest.approx(float(_mp_disk_dtn(l, lam, 1.7, 1.2)), rel=1e-11)


def test_exterior_dtn_against_mpmath():
    for l, lam, R in [(0, 4.0, 1.0), (5, 30.0, 2.0), (20, 9.0, 1.0)]:
        k = math.sqrt(lam)
        x = k * R
        h = mpmath.hankel1(l, x)
        dh = (mpmath.hankel1(l - 1, x) - mpmath.hankel1(l + 1, x)) / 2 if l else -mpmath.hankel1(1, x)
        expected = complex(k * dh / h)
        got = dtn_ext_plus(l, lam, R)
        assert abs(got - expected) <= 1e-11 * abs(expected)
    arr = dtn_ext_plus(3, np.array([1.0, 2.0]), 1.0)
    assert arr.shape == (2,)


@pytest.mark.parametrize("l, idx", [(0, 1), (1, 2), (3, 1)])
def test_constant_medium_laurent(l, idx):
    c, R = 2.0, 1.0
    prof = MediumProfile.constant(R, c)
    pole = dirichlet_eigenvalue(prof, l, idx)
    data = laurent_at_pole(prof, l, pole)
    assert data.residue < 0
    assert data.residue == pytest.approx(-2 * pole / R, rel=1e-9)
    assert data.residue_mismatch < 1e-6
    # regular part: Lambda - Q/(pole - lam) a hair away from the pole, at 40 digits
    p = mpmath.besseljzero(l, idx) ** 2 / (c * R * R)
    eps = mpmath.mpf("1e-12")
    q = -2 * p / R
    reg = sum(_mp_disk_dtn(l, p + e, c, R) - q / (-e) for e in (eps, -eps)) / 2
    assert data.regular_value == pytest.approx(float(reg), rel=1e-6, abs=1e-6)


def test_free_laurent_and_regularized_values():
    j = bessel_j_zero(2, 1)
    data = laurent_at_free_pole(2, j * j, 1.0)
    assert data.residue == pytest.approx(-2 * j * j)
    assert data.residue_mismatch < 1e-6
    assert regularized_dtn_0(2, j * j, 1.0) == pytest.approx(data.regular_value)
    off = j * j + 0.3
    assert regularized_dtn_0(2, off, 1.0) == dtn_0(2, off, 1.0)


def test_regularized_dtn_n_is_continuous_through_pole():
    prof = gamma_minus()
    pole = dirichlet_eigenvalue(prof, 1, 1)
    at = regularized_dtn_n(prof, 1, pole)
    near = regularized_dtn_n(prof, 1, pole * (1 + 1e-7))
    assert at == pytest.approx(near, rel=1e-4)


def test_residue_mismatch_is_reported(monkeypatch):
    import itelab.dtn as dtn

    prof = parabolic()
    pole = dirichlet_eigenvalue(prof, 0, 1)
    data = laurent_at_pole(prof, 0, pole)
    assert data.residue < 0 and 0 < data.residue_mismatch < 1e-6
    monkeypatch.setattr(dtn, "RESIDUE_RTOL", data.residue_mismatch / 10)
    with pytest.raises(MismatchError):
        laurent_at_pole(prof, 0, pole)


def test_single_layer_closed_form():
    l, lam, R = 3, 7.0, 1.3
    x = math.sqrt(lam) * R
    expected = complex(1j * math.pi * R / 2 * mpmath.besselj(l, x) * mpmath.hankel1(l, x))
    assert abs(single_layer_free(l, lam, R) - expected) < 1e-12 * abs(expected)


def test_single_layer_matches_free_for_free_boundary_data():
    l, lam, R = 2, 5.0, 1.0
    k = math.sqrt(lam)
    u = float(mpmath.besselj(l, k * R))
    du = float(k * mpmath.besselj(l, k * R, derivative=1))
    assert abs(match_single_layer(u, du, l, lam, R) - single_layer_free(l, lam, R)) < 1e-13


def test_free_medium_scatters_nothing():
    free = MediumProfile.constant(1.0)
    for l in (0, 1, 5):
        for lam in (0.7, 9.0, 41.0):
            assert abs(scattering_coeff(free, l, lam)) < 1e-14
            assert abs(single_layer_n(free, l, lam) - single_layer_free(l, lam, 1.0)) < 1e-12


def test_constant_disk_scattering_against_mpmath():
    c, R, l, lam = 2.5, 1.0, 2, 6.0
    prof = MediumProfile.constant(R, c)
    k = mpmath.sqrt(lam)
    kc = k * mpmath.sqrt(c)
    u = mpmath.besselj(l, kc * R)
    du = kc * mpmath.besselj(l, kc * R, derivative=1)
    J = mpmath.besselj(l, k * R)
    dJ = k * mpmath.besselj(l, k * R, derivative=1)
    H = mpmath.hankel1(l, k * R)
    dH = k * (mpmath.hankel1(l - 1, k * R) - mpmath.hankel1(l + 1, k * R)) / 2
    s = -(dJ * u - J * du) / (dH * u - H * du)
    expected = complex(1j / mpmath.pi * s)
    got = scattering_coeff(prof, l, lam)
    assert abs(got - expected) < 1e-12 * abs(expected)
    assert abs(abs(s_matrix_entry(prof, l, lam)) - 1) < 1e-13


def test_obstacle_and_far_field_coefficients():
    l, lam, R = 3, 11.0, 1.0
    x = math.sqrt(lam) * R
    J, H = mpmath.besselj(l, x), mpmath.hankel1(l, x)
    H2 = mpmath.hankel2(l, x)
    assert abs(obstacle_coeff(l, lam, R) - complex(1j / mpmath.pi * (-J / H))) < 1e-13
    gp, gms = g_coeffs(l, lam, R)
    assert abs(gp - complex(2 / mpmath.pi * (-1j) ** (l + 1) / H)) < 1e-13
    gm = complex(2 / mpmath.pi * 1j * (-1j) ** l / H2)
    assert abs(gms - gm.conjugate() / (2 * R)) < 1e-13
    # the three pieces recombine into the obstacle coefficient
    assert abs(gp * single_layer_free(l, lam, R) * gms - obstacle_coeff(l, lam, R)) < 1e-13


@pytest.mark.parametrize("make", [gamma_plus, gamma_minus, parabolic])
def test_identity_residuals_small(make):
    prof = make()
    worst = 0.0
    for l in (0, 3, 11):
        for fr in mode_frames(prof, l, np.linspace(0.5, 40.0, 17)):
            worst = max([worst] + list(fr.residuals().values()))
            assert abs(abs(1 - 2j * math.pi * fr.a_l) - 1) < 1e-12
    assert worst < 1e-9


def test_frame_signs_agree():
    fr = mode_frame(parabolic(), 2, 3.0)
    assert fr.l == 2
    assert fr == mode_frame(parabolic(), -2, 3.0)
    assert cmath.isfinite(fr.m_plus)
