import numpy as np
import pytest

from kinetic_gap import build_grid, maxwellian
from kinetic_gap.fields import (DistributionField, SplitParams, chi_profile,
                                kinetic_factor, maxwellian_array)


def test_maxwellian_formula_peak():
    # the analytic peak value; the half-offset lattice has no node at v = 0
    assert abs((2 * np.pi) ** (-1.5) - 0.06349363593424097) < 1e-15
    g = build_grid(8.0, 16)
    mu3 = maxwellian_array(g)
    peak_node = np.unravel_index(np.argmax(mu3), mu3.shape)
    v = np.array([g.axis[i] for i in peak_node])
    assert abs(mu3[peak_node] - (2 * np.pi) ** (-1.5) * np.exp(-v @ v / 2)) < 1e-18


def test_maxwellian_lattice_moments():
    # lattice sums carry a Poisson-aliasing floor ~1.6e-8 at h=1; exact only
    # as h decreases
    g = build_grid(8.0, 16)
    mu3 = maxwellian_array(g)
    assert abs(np.sum(mu3) * g.h ** 3 - 1.0) < 5e-8
    assert abs(np.sum(g.vsq * mu3) * g.h ** 3 - 3.0) < 2e-6
    g24 = build_grid(8.0, 24)
    mu24 = maxwellian_array(g24)
    assert abs(np.sum(mu24) * g24.h ** 3 - 1.0) < 1e-13
    assert abs(np.sum(g24.vsq * mu24) * g24.h ** 3 - 3.0) < 1e-11


def test_field_reality_and_modes():
    g = build_grid(6.0, 8)
    rng = np.random.default_rng(0)
    arr = rng.standard_normal((8, 8, 8)) + 1j * rng.standard_normal((8, 8, 8))
    f = DistributionField(g, {(1, 0, 0): arr})
    assert np.allclose(f.mode((-1, 0, 0)), np.conj(arr))
    assert f.mode((2, 0, 0)).max() == 0.0
    assert set(f.mode_set()) == {(1, 0, 0), (-1, 0, 0)}


def test_field_algebra():
    g = build_grid(6.0, 8)
    mu = maxwellian(g)
    two = mu + mu
    assert np.allclose(two.ell0, 2 * mu.ell0)
    assert abs((2.0 * mu).l2() - 2 * mu.l2()) < 1e-14


def test_physical_reality():
    g = build_grid(6.0, 8)
    rng = np.random.default_rng(1)
    arr = rng.standard_normal((8, 8, 8)) + 1j * rng.standard_normal((8, 8, 8))
    f = DistributionField(g, {(0, 0, 0): rng.standard_normal((8, 8, 8)).astype(complex),
                              (1, 0, 0): arr})
    x = np.array([[0.3, 0.0, 0.0]])
    vals = f.physical_on(x)
    assert vals.dtype == np.float64


def test_chi_profile_plateaus_and_bounds():
    r = np.linspace(0.0, 10.0, 2001)
    for R in (1.0, 2.0, 4.0):
        chi = chi_profile(r, R)
        assert np.all((chi >= 0) & (chi <= 1))
        assert np.all(chi[r <= R] == 1.0)
        assert np.all(chi[r >= 2 * R] == 0.0)
        assert np.all(np.diff(chi) <= 1e-15)


def test_chi_derivative_bound():
    # |d^k chi| <= C <r>^-k with C independent of R over the tested R >= 1
    r = np.linspace(0.0, 10.0, 40001)
    fitted = []
    for R in (1.0, 2.0, 4.0):
        chi = chi_profile(r, R)
        d1 = np.gradient(chi, r)
        d2 = np.gradient(d1, r)
        br = np.sqrt(1 + r ** 2)
        fitted.append(max(np.max(np.abs(d1) * br), np.max(np.abs(d2) * br ** 2)))
    assert max(fitted) < 25.0


def test_kinetic_factor_partitions():
    d = np.linspace(0.0, 12.0, 500)
    sp = SplitParams(R=2.0)
    full = kinetic_factor(d, 0.7, "full")
    qr = kinetic_factor(d, 0.7, "R", sp=sp)
    qbar = kinetic_factor(d, 0.7, "Rbar", sp=sp)
    assert np.array_equal(full, qr + qbar)
    p1 = kinetic_factor(d, 0.7, "phi1", delta=0.05)
    p2 = kinetic_factor(d, 0.7, "phi2", delta=0.05)
    assert np.array_equal(full, p1 + p2)


def test_split_params_validation():
    with pytest.raises(ValueError):
        SplitParams(R=0.0)
