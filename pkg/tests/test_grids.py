import numpy as np
import pytest

from kinetic_gap import KernelParams, build_angular, build_grid
from kinetic_gap.grids import angular_calibration, frame_normal_to, grazing_mass


def test_build_grid_basic():
    g = build_grid(8.0, 16)
    assert g.h == 1.0
    assert g.size == 4096
    assert len(g.axis) == 16


@pytest.mark.parametrize("Lv,n", [(8.0, 15), (8.0, 3), (-1.0, 16), (0.0, 8)])
def test_build_grid_rejects(Lv, n):
    with pytest.raises(ValueError):
        build_grid(Lv, n)


def test_node_set_negation_invariant():
    g = build_grid(4.0, 8)
    axis = g.axis
    assert np.allclose(np.sort(-axis), np.sort(axis))
    assert g.h * g.n == 2 * g.Lv


def test_dft_roundtrip():
    g = build_grid(6.0, 10)
    rng = np.random.default_rng(0)
    f = rng.standard_normal((10, 10, 10)) + 1j * rng.standard_normal((10, 10, 10))
    rt = g.idft(g.dft(f))
    assert np.max(np.abs(rt - f)) / np.max(np.abs(f)) < 1e-12


def test_dft_matches_continuum_on_gaussian():
    # hat f(xi) for exp(-|v|^2/2) is (2 pi)^(3/2) exp(-|xi|^2/2)
    g = build_grid(8.0, 16)
    f = np.exp(-g.vsq / 2.0)
    fh = g.dft(f)
    xi0 = g.xi_axis[1]
    expected = (2 * np.pi) ** 1.5 * np.exp(-3 * xi0 ** 2 / 2.0)
    got = fh[1, 1, 1]
    assert abs(got - expected) / expected < 1e-7


def test_parseval():
    g = build_grid(6.0, 8)
    rng = np.random.default_rng(1)
    f = rng.standard_normal((8, 8, 8))
    l2v = g.l2(f)
    fh = g.dft(f)
    l2xi = np.sqrt(np.sum(np.abs(fh) ** 2) / (2 * g.Lv) ** 3)
    assert abs(l2v - l2xi) / l2v < 1e-13


@pytest.mark.parametrize("bad", [dict(gamma=0.0), dict(gamma=1.5), dict(s=0.0),
                                 dict(s=1.0), dict(b0=-1.0), dict(theta_min=0.0)])
def test_kernel_params_rejects(bad):
    with pytest.raises(ValueError):
        KernelParams(**bad)


def test_angular_rejects_odd_phi():
    kp = KernelParams()
    with pytest.raises(ValueError):
        build_angular(kp, 6, 7)
    with pytest.raises(ValueError):
        build_angular(kp, 1, 8)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_calibration_identity(s):
    # discrete int b sin(t) t^2 dt dphi against the closed form of b0 t^(1-2s)
    kp = KernelParams(gamma=1.0, s=s, b0=1.0, theta_min=1e-3)
    aq = build_angular(kp, n_theta=12, n_phi=8, nodes_per_panel=6)
    disc, exact = angular_calibration(kp, aq)
    assert abs(disc - exact) / abs(exact) < 1e-8


def test_calibration_refinement():
    kp = KernelParams(gamma=1.0, s=0.7, b0=1.0, theta_min=1e-3)
    a1 = build_angular(kp, n_theta=12, n_phi=8, nodes_per_panel=6)
    a2 = build_angular(kp, n_theta=24, n_phi=8, nodes_per_panel=6)
    d1, e = angular_calibration(kp, a1)
    d2, _ = angular_calibration(kp, a2)
    assert abs(d2 - d1) / abs(e) < 1e-10


def test_antipodal_pairing_kills_omega():
    # any integrand linear in the azimuthal unit vector sums to exactly zero
    kp = KernelParams()
    aq = build_angular(kp, 6, 8)
    sc, sa1, sa2, wb = aq.sigma_coeffs
    assert abs(np.sum(wb * sa1)) < 1e-12 * np.sum(wb)
    assert abs(np.sum(wb * sa2)) < 1e-12 * np.sum(wb)


def test_weights_positive_and_range():
    kp = KernelParams(theta_min=0.02)
    aq = build_angular(kp, 8, 8)
    assert np.all(aq.w_theta > 0)
    assert np.all(aq.theta >= kp.theta_min)
    assert np.all(aq.theta <= np.pi / 2)


def test_grazing_mass_monotone_in_theta_min():
    vals = []
    for tm in (0.2, 0.1, 0.05, 0.01, 1e-3):
        kp = KernelParams(gamma=1.0, s=0.5, b0=1.0, theta_min=tm)
        aq = build_angular(kp, 12, 8, nodes_per_panel=4)
        vals.append(grazing_mass(kp, aq))
    assert all(np.diff(vals) > 0)
    # converges toward the improper integral: last refinement step is small
    assert (vals[-1] - vals[-2]) / vals[-1] < 0.01


def test_b1_b2_masks_partition(kp):
    aq = build_angular(kp, 6, 8)
    w = aq.masked_weights("full")
    w1 = aq.masked_weights("b1", eps=0.3)
    w2 = aq.masked_weights("b2", eps=0.3)
    assert np.array_equal(w, w1 + w2)


def test_frame_normal():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = rng.standard_normal(3)
        e1, e2 = frame_normal_to(d)
        dn = d / np.linalg.norm(d)
        assert abs(np.dot(e1, dn)) < 1e-12
        assert abs(np.dot(e2, dn)) < 1e-12
        assert abs(np.dot(e1, e2)) < 1e-12
        assert abs(np.linalg.norm(e1) - 1) < 1e-12
