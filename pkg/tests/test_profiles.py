from __future__ import annotations

import numpy as np
import pytest

from itelab.profiles import gamma_minus, gamma_plus, layered, parabolic, power_law, singular_fixture
from itelab.radialode import dirichlet_eigenvalue
from itelab.spectra import weyl_volumes
from itelab.specialfun import bessel_j_zero


@pytest.mark.parametrize("make", [gamma_plus, gamma_minus])
def test_reference_margin(make):
    p = make()
    vn, v0 = weyl_volumes(p)
    if p.gamma > 0:
        assert p.boundary_slope > 0 and (vn - 2 * v0) / vn >= 0.2
    else:
        assert p.boundary_slope < 0 and (v0 - 2 * vn) / v0 >= 0.2


@pytest.mark.parametrize(
    "make, smooth_from",
    [(gamma_plus, 2), (gamma_minus, 1), (lambda: parabolic(0.5), 1)],
)
def test_pieces_join(make, smooth_from):
    # the power-law core edge is only continuous; everything else is C1
    p = make()
    for i, piece in enumerate(p.pieces[1:], start=1):
        a = piece.start
        lo, hi = a * (1 - 1e-12), a * (1 + 1e-12)
        assert p.n(lo) == pytest.approx(p.n(hi), rel=1e-9)
        if i >= smooth_from:
            assert p.dn(lo) == pytest.approx(p.dn(hi), rel=1e-6, abs=1e-6)
    assert p.n(p.R) == pytest.approx(1.0, abs=1e-12)


def test_gamma_plus_has_no_barrier():
    p = gamma_plus()
    r = np.linspace(1e-3, p.R, 4001)
    assert np.all(np.diff(p.n(r) * r**2) > 0)


def test_power_law_shape():
    p = power_law(1.0, core=10.0, power=1.5, knee=0.7, layer=0.85)
    assert p.gamma == 1 and p.n_max == pytest.approx(10.0)
    assert p.boundary_slope == pytest.approx(0.5)


def test_layered_slope_sign():
    p = layered(1.0, core=0.2, slope=0.3, ramp=(0.5, 0.8), gamma=-1)
    assert p.boundary_slope == pytest.approx(-0.3)
    assert p.boundary_jet(3)[2:] == pytest.approx([0.0, 0.0])


@pytest.mark.slow
def test_singular_fixture_shares_eigenvalue():
    p, lam = singular_fixture()
    assert lam == pytest.approx(bessel_j_zero(0, 1) ** 2)
    assert dirichlet_eigenvalue(p, 0, 2) == pytest.approx(lam, rel=1e-10)
