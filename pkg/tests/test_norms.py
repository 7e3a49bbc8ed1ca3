import numpy as np
import pytest

from kinetic_gap import build_grid, maxwellian
from kinetic_gap.fields import DistributionField, maxwellian_array
from kinetic_gap.norms import (NormSpec, c0_functional, entropy_dissipation,
                               gagliardo_constant, hs_sq_gagliardo,
                               j1_functional, l_log_l, pos_neg_parts,
                               test_family, weighted_sobolev, y_l_norm)

from conftest import make_field


def test_weighted_sobolev_zero_and_l2(grid8):
    zero = np.zeros((8, 8, 8))
    assert weighted_sobolev(zero, grid8, NormSpec(beta=0.7, k=2.0)) == 0.0
    rng = np.random.default_rng(0)
    f = rng.standard_normal((8, 8, 8))
    assert abs(weighted_sobolev(f, grid8, NormSpec()) - grid8.l2(f)) \
        <= 1e-12 * grid8.l2(f)


def test_weighted_sobolev_homogeneous(grid8):
    rng = np.random.default_rng(1)
    f = rng.standard_normal((8, 8, 8))
    spec = NormSpec(beta=0.5, k=1.5)
    assert abs(weighted_sobolev(3.0 * f, grid8, spec)
               - 3.0 * weighted_sobolev(f, grid8, spec)) < 1e-10


def test_norm_triangle_inequality(grid8):
    rng = np.random.default_rng(2)
    spec = NormSpec(beta=0.5, k=1.0)
    for _ in range(20):
        a = rng.standard_normal((8, 8, 8))
        b = rng.standard_normal((8, 8, 8))
        na = weighted_sobolev(a, grid8, spec)
        nb = weighted_sobolev(b, grid8, spec)
        nab = weighted_sobolev(a + b, grid8, spec)
        assert nab <= na + nb + 1e-12 * (na + nb)


def test_y_l_single_mode_reduces(grid8):
    mu = maxwellian(grid8)
    l, m0 = 4.0, 1.5
    w = grid8.bracket_v(m0 * l)
    expect = grid8.l2(w * mu.ell0)
    assert abs(y_l_norm(mu, l, m0) - expect) / expect < 1e-12


def test_y_l_homogeneous(grid8):
    f = make_field(grid8, lambda vx, vy, vz, mu3: (1 + vx) * mu3)
    assert abs(y_l_norm(2.0 * f, 4.0, 1.5) - 2.0 * y_l_norm(f, 4.0, 1.5)) < 1e-10


def test_y_l_against_x_quadrature(grid8):
    # two-mode field: evaluate d_x^alpha exactly from the modes and integrate
    # over x with the trapezoid rule (exact for trigonometric polynomials)
    rng = np.random.default_rng(3)
    mu3 = maxwellian_array(grid8)
    arr = (rng.standard_normal((8, 8, 8)) + 1j * rng.standard_normal((8, 8, 8))) * mu3
    f = DistributionField(grid8, {(0, 0, 0): (0.5 * mu3).astype(complex),
                                  (1, 0, 0): arr})
    l, m0 = 4.0, 1.5
    got = y_l_norm(f, l, m0)
    nx = 8
    xs = np.arange(nx) / nx
    tot = 0.0
    from kinetic_gap.norms import ALPHAS
    from kinetic_gap.grids import eta_of
    for alpha in ALPHAS:
        a = sum(alpha)
        w = grid8.bracket_v(m0 * (l - a))
        for x in xs:
            val = np.zeros((8, 8, 8), complex)
            for m in f.mode_set():
                eta = eta_of(m)
                fac = np.prod([(1j * e) ** p for e, p in zip(eta, alpha)])
                val += fac * np.exp(2j * np.pi * np.dot(m, [x, 0, 0])) * f.mode(m)
            tot += grid8.l2(w * val) ** 2 / nx
    assert abs(got - np.sqrt(tot)) / got < 1e-10


def test_j1_constant_zero(grid12, kp, aq_small):
    const = DistributionField(grid12, {(0, 0, 0): np.ones((12,) * 3, complex)})
    assert j1_functional(const, kp, aq_small, "zero") == 0.0
    assert j1_functional(const, kp, aq_small, "gamma") == 0.0


def test_j1_nonnegative(grid8, kp, aq_small):
    rng = np.random.default_rng(4)
    for _ in range(10):
        f = make_field(grid8, lambda vx, vy, vz, mu3:
                       rng.standard_normal() * (1 + vx) * mu3
                       + rng.standard_normal() * vy * vz * mu3)
        assert j1_functional(f, kp, aq_small, "gamma") >= 0.0


def test_c0_mu_equals_j1(grid8, kp, aq_small, mu8):
    gb = make_field(grid8, lambda vx, vy, vz, mu3: np.exp(-(vx - 1) ** 2 - vy ** 2 - vz ** 2))
    j = j1_functional(gb, kp, aq_small, "zero")
    c = c0_functional(mu8, gb, aq_small, "zero")
    assert j == c


def test_c0_requires_nonneg(grid8, aq_small):
    bad = make_field(grid8, lambda vx, vy, vz, mu3: vx * mu3)
    gb = make_field(grid8, lambda vx, vy, vz, mu3: mu3)
    with pytest.raises(ValueError):
        c0_functional(bad, gb, aq_small)


def test_entropy_dissipation(grid12, kp, aq_small):
    mu = maxwellian(grid12)
    assert entropy_dissipation(mu, kp, aq_small) == 0.0
    bump = make_field(grid12, lambda vx, vy, vz, mu3:
                      mu3 * (1.0 + 0.1 * np.exp(-((vx - 1) ** 2 + vy ** 2 + vz ** 2))))
    d = entropy_dissipation(bump, kp, aq_small)
    assert d > 0.0
    with pytest.raises(ValueError):
        entropy_dissipation(make_field(grid12, lambda vx, vy, vz, mu3: -mu3),
                            kp, aq_small)


def test_pos_neg_parts(grid8):
    rng = np.random.default_rng(5)
    h = rng.standard_normal((8, 8, 8))
    hp, hm = pos_neg_parts(h)
    assert np.all(hp >= 0) and np.all(hm <= 0)
    assert np.array_equal(hp + hm, h)
    hp2, hm2 = pos_neg_parts(np.abs(h))
    assert np.all(hm2 == 0.0)
    # odd function: parts supported on opposite half-lattices
    vx = grid8.nodes[0]
    mu3 = maxwellian_array(grid8)
    hp3, hm3 = pos_neg_parts(vx * mu3)
    assert np.all(hp3[vx < 0] == 0.0)
    assert np.all(hm3[vx > 0] == 0.0)


def test_l2_split_exact(grid8):
    rng = np.random.default_rng(6)
    h = rng.standard_normal((8, 8, 8))
    hp, hm = pos_neg_parts(h)
    assert abs(grid8.l2(h) ** 2 - grid8.l2(hp) ** 2 - grid8.l2(hm) ** 2) < 1e-12


def test_gagliardo_constant_value():
    # c_{3, 1/2} = 4^(1/2) Gamma(2) / (pi^(3/2) |Gamma(-1/2)|), Gamma(-1/2) = -2 sqrt(pi)
    expect = 2.0 / (np.pi ** 1.5 * 2.0 * np.sqrt(np.pi))
    assert abs(gagliardo_constant(0.5) - expect) < 1e-14


def test_hs_gagliardo_scaling(grid8):
    rng = np.random.default_rng(7)
    f = rng.standard_normal((8, 8, 8)) * maxwellian_array(grid8)
    v1 = hs_sq_gagliardo(f, grid8, 0.5)
    v2 = hs_sq_gagliardo(2.0 * f, grid8, 0.5)
    assert abs(v2 - 4.0 * v1) / v1 < 1e-12


def test_l_log_l(grid8, mu8):
    val = l_log_l(mu8)
    # int mu |log mu| dv = (2 pi)^(-3/2) int e^(-v^2/2)(3/2 log(2 pi) + v^2/2)
    expect = 1.5 * np.log(2 * np.pi) + 1.5
    assert abs(val - expect) / expect < 1e-6


def test_test_family_versioned(grid8):
    a = test_family(grid8, seed=9, count=6)
    b = test_family(grid8, seed=9, count=6)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    for x in a:
        assert abs(grid8.l2(x) - 1.0) < 1e-12
        assert np.max(np.abs(x[0, :, :])) < 1e-4  # decays at the face
