import numpy as np
import pytest

from kinetic_gap import KernelParams, build_angular, build_grid, maxwellian
from kinetic_gap.collision import (UnsupportedPathError, cancellation_check,
                                   change_of_variables_check,
                                   collision_invariants, q_direct, q_fourier,
                                   q_split, q_weak)
from kinetic_gap.fields import DistributionField, SplitParams, maxwellian_array

from conftest import make_field


def test_equilibrium_annihilation(grid8, kp, aq_small, mu8):
    q = q_direct(mu8, mu8, kp, aq_small)
    assert np.max(np.abs(q.ell0)) <= 1e-6 * np.max(np.abs(mu8.ell0))


def test_bilinearity(grid8, kp, aq_small, smooth8, mu8):
    q1 = q_direct(smooth8, 2.0 * mu8, kp, aq_small)
    q2 = q_direct(smooth8, mu8, kp, aq_small)
    assert np.max(np.abs(q1.ell0 - 2 * q2.ell0)) <= 1e-12 * np.max(np.abs(q2.ell0))
    q3 = q_direct(3.0 * smooth8, mu8, kp, aq_small)
    assert np.max(np.abs(q3.ell0 - 3 * q2.ell0)) <= 1e-12 * np.max(np.abs(q2.ell0))


def test_collision_invariants_weak(grid8, kp, aq_small, smooth8):
    inv = collision_invariants(smooth8, kp, aq_small)
    assert np.max(np.abs(inv)) <= 1e-8 * smooth8.l2() ** 2


def test_collision_invariants_multimode(grid8, kp, aq_small):
    rng = np.random.default_rng(2)
    mu3 = maxwellian_array(grid8)
    vx, vy, vz = grid8.nodes
    f = DistributionField(grid8, {
        (0, 0, 0): ((0.2 + 0.1 * vx) * mu3).astype(complex),
        (1, 0, 0): (0.1 * (vx + 0.5j * vy) * mu3),
    })
    inv = collision_invariants(f, kp, aq_small)
    assert np.max(np.abs(inv)) <= 1e-8 * f.l2() ** 2


def test_grid_mismatch_raises(kp, aq_small, mu8):
    g2 = build_grid(8.0, 10)
    with pytest.raises(ValueError):
        q_direct(mu8, maxwellian(g2), kp, aq_small)


def test_split_partition(grid8, kp, aq_small, smooth8):
    sp = SplitParams(R=2.0)
    qr, qbar = q_split(smooth8, smooth8, kp, sp, aq_small)
    q = q_direct(smooth8, smooth8, kp, aq_small)
    recon = (qr + qbar - q).l2()
    assert recon <= 1e-12 * max(q.l2(), 1e-300)


def test_split_saturation_large_R(grid8, kp, aq_small, smooth8):
    # R beyond the lattice diameter: the complement part vanishes identically
    sp = SplitParams(R=2.1 * np.sqrt(3.0) * grid8.Lv)
    qr, qbar = q_split(smooth8, smooth8, kp, sp, aq_small)
    assert qbar.l2() == 0.0


def test_split_small_R(grid8, kp, aq_small, smooth8):
    # R far below the lattice spacing: the cutoff part carries almost nothing
    sp = SplitParams(R=grid8.h / 10.0)
    qr, qbar = q_split(smooth8, smooth8, kp, sp, aq_small)
    q = q_direct(smooth8, smooth8, kp, aq_small)
    assert qr.l2() <= 1e-6 * q.l2()


def test_mode_convolution_targets():
    g = build_grid(6.0, 8)
    kp = KernelParams(gamma=1.0, s=0.5, b0=0.3, theta_min=0.1)
    aq = build_angular(kp, 4, 4, nodes_per_panel=2)
    mu3 = maxwellian_array(g)
    f = DistributionField(g, {(1, 0, 0): (0.1 * mu3).astype(complex)})
    h = DistributionField(g, {(0, 1, 0): (0.1 * mu3).astype(complex)})
    q = q_direct(f, h, kp, aq)
    modes = set(q.mode_set())
    assert (1, 1, 0) in modes and (-1, -1, 0) in modes
    assert (1, 0, 0) not in q.modes


def test_q_fourier_equilibrium(kp):
    g = build_grid(5.0, 12)
    aq = build_angular(kp, 5, 6, nodes_per_panel=2)
    sp = SplitParams(R=2.4)
    mu = maxwellian(g)
    qf = q_fourier(mu, mu, kp, sp, aq)
    # no exact annihilation on the Fourier side; quadrature-level smallness
    assert qf.l2() <= 1e-2 * mu.l2()


def test_q_fourier_linearity(kp):
    g = build_grid(5.0, 10)
    aq = build_angular(kp, 4, 4, nodes_per_panel=2)
    sp = SplitParams(R=2.0)
    mu = maxwellian(g)
    f = make_field(g, lambda vx, vy, vz, mu3: (1 + 0.2 * vx) * mu3)
    q1 = q_fourier(f, 2.0 * mu, kp, sp, aq)
    q2 = q_fourier(f, mu, kp, sp, aq)
    assert np.max(np.abs(q1.ell0 - 2 * q2.ell0)) <= 1e-12 * np.max(np.abs(q2.ell0))


def test_q_fourier_unsupported_path(kp, aq_small, mu8):
    with pytest.raises(UnsupportedPathError):
        q_fourier(mu8, mu8, kp, SplitParams(R=1.0), aq_small, variant="Rbar")


def test_cross_oracle_small(kp):
    # mu-modulated linear ratios: gauge reads exact, periodized box
    g = build_grid(5.0, 16)
    aq = build_angular(kp, 5, 6, nodes_per_panel=2)
    sp = SplitParams(R=2.4)
    f = make_field(g, lambda vx, vy, vz, mu3: (1 + 0.25 * vx) * mu3)
    h = make_field(g, lambda vx, vy, vz, mu3: (1 - 0.15 * vy + 0.1 * vz) * mu3)
    qd = q_direct(f, h, kp, aq, variant="R", sp=sp, periodic=True)
    qf = q_fourier(f, h, kp, sp, aq, in_rel_tol=1e-9)
    rel = (qf - qd).l2() / qd.l2()
    assert rel < 2e-3


def test_cancellation_lemma(grid12, kp):
    aq = build_angular(kp, 8, 8, nodes_per_panel=3)
    mu = maxwellian(grid12)
    vx, vy, vz = grid12.nodes
    mu3 = maxwellian_array(grid12)
    # mu-proportional weight with affine ratio: gauge read exact
    g2 = ((2.0 + 0.1 * vx + 0.05 * vy) * mu3).astype(complex)
    r = cancellation_check(mu, mu, kp, aq, g_squared=g2, gauge=True)
    assert r.stats["rel_discrepancy"] < 2e-2
    # constant g: the quadrature side vanishes identically (g' = g)
    ones = DistributionField(grid12, {(0, 0, 0): np.ones((12,) * 3, complex)})
    r0 = cancellation_check(mu, ones, kp, aq)
    assert r0.stats["lhs"] == 0.0


def test_cancellation_generic_bump(grid12, kp):
    # interpolated generic bump: discrepancy at the trilinear O(h^2) level
    aq = build_angular(kp, 6, 8, nodes_per_panel=3)
    mu = maxwellian(grid12)
    gb = make_field(grid12, lambda vx, vy, vz, mu3:
                    np.exp(-((vx - 1) ** 2 + vy ** 2 + (vz + 0.5) ** 2) / 2.5))
    r = cancellation_check(mu, gb, kp, aq)
    assert r.stats["rel_discrepancy"] < 0.5


def test_change_of_variables_regular(kp):
    g = build_grid(8.0, 16)
    aq = build_angular(kp, 6, 8, nodes_per_panel=3)
    w = 1.0
    f = make_field(g, lambda vx, vy, vz, mu3:
                   (1 + 0.2 * vx - 0.1 * vy) * np.exp(-(vx**2 + vy**2 + vz**2) / (2 * w * w)))
    r = change_of_variables_check(f, kp, aq, base_w=w, sides=("regular",))
    assert r.stats["regular"]["rel_discrepancy"] < 1e-4


def test_change_of_variables_singular():
    # the singular identity compresses scales by sin(theta/2); verifiable on a
    # desk box only for large angular truncations and concentrated fields
    kp = KernelParams(gamma=1.0, s=0.5, b0=0.3, theta_min=1.0)
    aq = build_angular(kp, 6, 8, nodes_per_panel=3)
    g = build_grid(8.0, 24)
    w = 0.8
    f = make_field(g, lambda vx, vy, vz, mu3:
                   (1 + 0.3 * vx) * np.exp(-(vx**2 + vy**2 + vz**2) / (2 * w * w)))
    r = change_of_variables_check(f, kp, aq, anchor=(0.0, 0.0, 0.0),
                                  base_w=w, sides=("singular",))
    assert r.stats["singular"]["rel_discrepancy"] < 5e-3


def test_change_of_variables_zero_field(kp, aq_small):
    g = build_grid(8.0, 8)
    zero = DistributionField(g, {(0, 0, 0): np.zeros((8,) * 3, complex)})
    r = change_of_variables_check(zero, kp, aq_small)
    assert r.stats["regular"]["lhs"] == 0.0
    assert r.stats["singular"]["rhs"] == 0.0


def test_q_weak_matches_strong(grid8, kp, aq_small, mu8, smooth8):
    # <Q(mu, f), h> via the test-function form against the strong-form field
    qh = q_weak(mu8, smooth8, smooth8, kp, aq_small)
    strong = q_direct(mu8, smooth8, kp, aq_small, gauge=False)
    ref = np.sum(strong.ell0 * np.conj(smooth8.ell0)) * grid8.h ** 3
    assert abs(qh - ref) / abs(ref) < 0.2
