"""Bilinear collision operator: direct quadrature path, Fourier-side path,
kinetic-factor splittings, and the structural integral identities.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import map_coordinates
from scipy.signal import fftconvolve

from .backend import kernels
from .fields import DistributionField, SplitParams, kinetic_factor, maxwellian_array
from .grids import AngularQuadrature, KernelParams, VelocityGrid, _gauss, frame_normal_to
from .reports import EstimateReport

Mode = tuple[int, int, int]


class UnsupportedPathError(ValueError):
    """Raised when a kernel variant has no valid evaluation path."""


# ---------------------------------------------------------------------------
# Kinetic-factor tables on the displacement lattice
# ---------------------------------------------------------------------------

def displacement_distances(grid: VelocityGrid) -> np.ndarray:
    d = grid.h * np.arange(-(grid.n - 1), grid.n)
    dx, dy, dz = np.meshgrid(d, d, d, indexing="ij")
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def phi_table(grid: VelocityGrid, kp: KernelParams, variant: str = "full",
              sp: SplitParams | None = None, delta: float | None = None) -> np.ndarray:
    """Kinetic factor per displacement; complements are exact partitions."""
    return kinetic_factor(displacement_distances(grid), kp.gamma, variant,
                          sp=sp, delta=delta)


def _pairs_into(out_modes, f_modes, g_modes):
    for lo in out_modes:
        for l1 in f_modes:
            l2 = (lo[0] - l1[0], lo[1] - l1[1], lo[2] - l1[2])
            if l2 in g_modes:
                yield lo, l1, l2


# ---------------------------------------------------------------------------
# Direct sigma-quadrature path
# ---------------------------------------------------------------------------

def q_direct_arrays(fa: np.ndarray, ga: np.ndarray, grid: VelocityGrid,
                    aq: AngularQuadrature, phi_d: np.ndarray,
                    gauge: bool = True, r_cut: float = 0.0,
                    periodic: bool = False) -> np.ndarray:
    """Q(f, g) for one pair of velocity arrays.

    gauge=True reads off-lattice values as mu * trilinear(field/mu); the
    Maxwellian factors recombine exactly (mu' mu*' = mu mu_*), so Q(mu, mu)
    vanishes to roundoff and span{mu, v mu} is annihilated exactly by the
    linearization.  r_cut > 0 skips node pairs beyond that radius (only valid
    for fields negligible there); real inputs take the real fast path.
    """
    sc, sa1, sa2, wb = aq.sigma_coeffs
    mu3 = maxwellian_array(grid)
    real_in = (not np.iscomplexobj(fa) or np.all(fa.imag == 0.0)) and \
              (not np.iscomplexobj(ga) or np.all(ga.imag == 0.0))
    vsq = grid.vsq
    rc2 = float(r_cut) ** 2
    if periodic:
        if not real_in:
            raise ValueError("periodic evaluation supports real fields only")
        Ff = np.ascontiguousarray(np.real(fa) / mu3 if gauge else np.real(fa))
        Fg = np.ascontiguousarray(np.real(ga) / mu3 if gauge else np.real(ga))
        out = np.empty_like(Ff)
        kernels.q_bilinear_periodic_real(Ff, Fg, mu3, gauge, phi_d, sc, sa1,
                                         sa2, wb, grid.h, out, vsq, rc2)
        return out.astype(np.complex128)
    if real_in:
        Ff = np.ascontiguousarray(np.real(fa) / mu3 if gauge else np.real(fa))
        Fg = np.ascontiguousarray(np.real(ga) / mu3 if gauge else np.real(ga))
        out = np.empty_like(Ff)
        kernels.q_bilinear_real(Ff, Fg, mu3, gauge, phi_d, sc, sa1, sa2, wb,
                                grid.h, out, vsq, rc2)
        return out.astype(np.complex128)
    if gauge:
        Ff = np.ascontiguousarray(fa / mu3, dtype=np.complex128)
        Fg = np.ascontiguousarray(ga / mu3, dtype=np.complex128)
    else:
        Ff = np.ascontiguousarray(fa, dtype=np.complex128)
        Fg = np.ascontiguousarray(ga, dtype=np.complex128)
    out = np.empty_like(Ff)
    kernels.q_bilinear(Ff, Fg, mu3, gauge, phi_d, sc, sa1, sa2, wb, grid.h,
                       out, vsq, rc2)
    return out


def q_direct(f: DistributionField, g: DistributionField, kp: KernelParams,
             aq: AngularQuadrature, variant: str = "full",
             sp: SplitParams | None = None, delta: float | None = None,
             gauge: bool = True, out_modes=None, r_cut: float = 0.0,
             periodic: bool = False) -> DistributionField:
    """Discrete Q(f, g) per torus mode (convolution over x-modes)."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch between f and g")
    grid = f.grid
    phi_d = phi_table(grid, kp, variant, sp=sp, delta=delta)
    fm, gm = f.mode_set(), g.mode_set()
    if out_modes is None:
        out_modes = sorted({(a[0] + b[0], a[1] + b[1], a[2] + b[2])
                            for a in fm for b in gm})
    out = {}
    for lo, l1, l2 in _pairs_into(out_modes, fm, gm):
        arr = q_direct_arrays(f.mode(l1), g.mode(l2), grid, aq, phi_d, gauge,
                              r_cut=r_cut, periodic=periodic)
        if lo in out:
            out[lo] += arr
        else:
            out[lo] = arr
    return DistributionField(grid, out)


def q_split(f: DistributionField, g: DistributionField, kp: KernelParams,
            sp: SplitParams, aq: AngularQuadrature,
            gauge: bool = True) -> tuple[DistributionField, DistributionField]:
    """(Q_R, Q_Rbar) with Q_R + Q_Rbar an exact partition of q_direct."""
    qr = q_direct(f, g, kp, aq, variant="R", sp=sp, gauge=gauge)
    qbar = q_direct(f, g, kp, aq, variant="Rbar", sp=sp, gauge=gauge)
    return qr, qbar


def collision_invariants(f: DistributionField, kp: KernelParams,
                         aq: AngularQuadrature,
                         variant: str = "full", sp=None) -> np.ndarray:
    """x-averaged weak form of Q(f, f) against {1, v1, v2, v3, |v|^2}.

    Symmetrized over (v, v_*) and over pre/post states, with the test
    functions evaluated analytically at the post-collision points; momentum
    and energy brackets then vanish pointwise, so the returned values sit at
    roundoff for any field.
    """
    grid = f.grid
    sc, sa1, sa2, wb = aq.sigma_coeffs
    phi_d = phi_table(grid, kp, variant, sp=sp)

    def quad(arr):
        return kernels.conservation_weak(
            np.ascontiguousarray(arr, np.complex128), phi_d, sc, sa1, sa2, wb,
            grid.axis, grid.h)

    # sum_{l1+l2=0} <Q(f_l1, f_l2), phi>; group +-l through the quadratic form
    tot = quad(f.ell0)
    seen = set()
    for ell in f.mode_set():
        if ell == (0, 0, 0) or ell in seen:
            continue
        neg = (-ell[0], -ell[1], -ell[2])
        seen.add(ell)
        seen.add(neg)
        a, b = f.mode(ell), f.mode(neg)
        tot += quad(a + b) - quad(a) - quad(b)
    return tot


def q_weak(f: DistributionField, g: DistributionField, h: DistributionField,
           kp: KernelParams, aq: AngularQuadrature, variant="full", sp=None,
           delta=None) -> complex:
    """<Q(f, g), h>_{L2(dv)} at mode l=0 via the test-function form."""
    grid = f.grid
    sc, sa1, sa2, wb = aq.sigma_coeffs
    phi_d = phi_table(grid, kp, variant, sp=sp, delta=delta)
    return complex(kernels.weak_form(
        np.ascontiguousarray(f.ell0, np.complex128),
        np.ascontiguousarray(g.ell0, np.complex128),
        np.ascontiguousarray(np.conj(h.ell0), np.complex128),
        phi_d, sc, sa1, sa2, wb, grid.h))


# ---------------------------------------------------------------------------
# Fourier-side (Bobylev) path for the cutoff part
# ---------------------------------------------------------------------------

def phi_r_hat_table(kp: KernelParams, sp: SplitParams, rho_max: float,
                    n_table: int = 60000) -> np.ndarray:
    """Radial table of the continuum transform of the truncated kinetic factor:

    PhiRhat(rho) = 4 pi int_0^{2R} r^(2+gamma) chi_R(r) sinc(r rho) dr.
    """
    x, w = _gauss(400)
    r = sp.R * (x + 1.0)            # [0, 2R]
    wr = sp.R * w
    fr = r ** (2.0 + kp.gamma) * sp.chi(r)
    rho = np.linspace(0.0, rho_max, n_table)
    arg = np.outer(rho, r)
    s = np.where(arg > 1e-12, np.sin(arg) / np.where(arg > 0, arg, 1.0), 1.0)
    return 4.0 * np.pi * (s * (fr * wr)[None, :]).sum(axis=1)


def _signed_modes(n):
    k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    return k


def q_fourier_arrays(fa, ga, grid: VelocityGrid, kp: KernelParams,
                     sp: SplitParams, aq: AngularQuadrature,
                     in_rel_tol: float = 1e-11,
                     out_rel_tol: float = 0.0) -> np.ndarray:
    """Weak-form hat Q_R on the dual lattice, inverse-transformed to a field."""
    fhat = grid.dft(fa)
    ghat = grid.dft(ga)
    k1 = _signed_modes(grid.n)
    KX, KY, KZ = np.meshgrid(k1, k1, k1, indexing="ij")
    fmax = np.max(np.abs(fhat))
    in_mask = np.abs(fhat) >= in_rel_tol * fmax
    modes_in = np.stack([KX[in_mask], KY[in_mask], KZ[in_mask]], axis=1)
    if out_rel_tol > 0.0:
        proxy = np.abs(np.fft.ifftn(np.fft.fftn(np.abs(fhat))
                                    * np.fft.fftn(np.abs(ghat))))
        out_mask = proxy >= out_rel_tol * np.max(proxy)
    else:
        out_mask = np.ones_like(in_mask)
    modes_out = np.stack([KX[out_mask], KY[out_mask], KZ[out_mask]], axis=1)
    rho_max = 2.2 * np.sqrt(3.0) * float(np.max(np.abs(grid.xi_axis))) + 1.0
    table = phi_r_hat_table(kp, sp, rho_max)
    xi_in = grid.xi_axis[np.asarray(modes_in) % grid.n]
    phihat0_in = np.interp(np.sqrt(np.sum(xi_in ** 2, axis=1)),
                           np.linspace(0.0, rho_max, len(table)), table)
    fhat_in = fhat[modes_in[:, 0] % grid.n, modes_in[:, 1] % grid.n,
                   modes_in[:, 2] % grid.n]
    sc, sa1, sa2, wb = aq.sigma_coeffs
    vals = np.empty(len(modes_out), np.complex128)
    kernels.bobylev_qr(fhat, ghat, modes_out, modes_in,
                       np.ascontiguousarray(fhat_in),
                       np.ascontiguousarray(phihat0_in),
                       grid.xi_axis, table, rho_max, sc, sa1, sa2, wb,
                       1.0 / (2.0 * grid.Lv) ** 3, vals)
    qhat = np.zeros((grid.n,) * 3, np.complex128)
    qhat[modes_out[:, 0] % grid.n, modes_out[:, 1] % grid.n,
         modes_out[:, 2] % grid.n] = vals
    return grid.idft(qhat)


def q_fourier(f: DistributionField, g: DistributionField, kp: KernelParams,
              sp: SplitParams, aq: AngularQuadrature, variant: str = "R",
              out_modes=None, **kw) -> DistributionField:
    """Bobylev-formula evaluation of the cutoff part Q_R.

    Only the truncated factor Phi_R has an integrable transform; requesting
    the complement raises UnsupportedPathError.
    """
    if variant != "R":
        raise UnsupportedPathError(
            "q_fourier evaluates Q_R only; Phi_Rbar has no integrable transform")
    if f.grid != g.grid:
        raise ValueError("grid mismatch between f and g")
    grid = f.grid
    fm, gm = f.mode_set(), g.mode_set()
    if out_modes is None:
        out_modes = sorted({(a[0] + b[0], a[1] + b[1], a[2] + b[2])
                            for a in fm for b in gm})
    out = {}
    for lo, l1, l2 in _pairs_into(out_modes, fm, gm):
        arr = q_fourier_arrays(f.mode(l1), g.mode(l2), grid, kp, sp, aq, **kw)
        if lo in out:
            out[lo] += arr
        else:
            out[lo] = arr
    return DistributionField(grid, out)


# ---------------------------------------------------------------------------
# Structural identities
# ---------------------------------------------------------------------------

def cancellation_check(f: DistributionField, g: DistributionField,
                       kp: KernelParams, aq: AngularQuadrature,
                       g_squared: np.ndarray | None = None,
                       gauge: bool = False) -> EstimateReport:
    """Cancellation-lemma identity on g^2:

    iiint b Phi f_* (g'^2 - g^2) = int (S * f) g^2,
    S(z) = 2 pi |z|^gamma int b(cos t) sin t (cos^(-3-gamma)(t/2) - 1) dt.

    The left side reads g^2 off-lattice by trilinear interpolation, so the
    discrepancy carries an O(h^2) interpolation component for generic fields;
    passing an affine `g_squared` makes the read exact and isolates the
    quadrature-level identity error.
    """
    grid = f.grid
    sc, sa1, sa2, wb = aq.sigma_coeffs
    phi_d = phi_table(grid, kp, "full")
    g2arr = g.ell0 ** 2 if g_squared is None else g_squared
    g2 = np.ascontiguousarray(g2arr, np.complex128)
    ones = np.ones_like(g2)
    if gauge:
        mu3 = maxwellian_array(grid)
        ratio = np.ascontiguousarray(g2 / mu3, np.complex128)
        lhs = complex(kernels.weak_form_gauge(
            np.ascontiguousarray(f.ell0, np.complex128), ones, ratio, mu3,
            grid.axis, phi_d, sc, sa1, sa2, wb, grid.h))
    else:
        lhs = complex(kernels.weak_form(
            np.ascontiguousarray(f.ell0, np.complex128), ones, g2, phi_d,
            sc, sa1, sa2, wb, grid.h))
    s0 = 2.0 * np.pi * aq.theta_integral(
        np.cos(aq.theta / 2.0) ** (-3.0 - kp.gamma) - 1.0)
    sker = kinetic_factor(displacement_distances(grid), kp.gamma) * s0
    conv = fftconvolve(np.real(f.ell0), sker, mode="valid") * grid.h ** 3
    rhs = complex(np.sum(conv * np.real(g2)) * grid.h ** 3)
    denom = max(abs(lhs), abs(rhs), 1e-300)
    disc = abs(lhs - rhs) / denom
    return EstimateReport(
        name="cancellation_lemma", tier="exact",
        sample_desc="single field pair, convolution vs direct quadrature",
        stats={"lhs": _c2f(lhs), "rhs": _c2f(rhs), "rel_discrepancy": disc},
        passed=bool(np.isfinite(disc)), tolerances={})


def _c2f(z):
    z = complex(z)
    return z.real if abs(z.imag) < 1e-12 * max(1.0, abs(z.real)) else [z.real, z.imag]


def _cov_side(f_arr, grid, kp, aq, anchor, which, base_w: float | None = None):
    """One side of the change-of-variables identities at a fixed anchor point.

    With base_w set, the field is factored as f = exp(-|v|^2/(2 w^2)) * r and
    the Gaussian base is evaluated analytically at the off-lattice point, so
    the interpolation error only touches the (smooth, slowly varying) ratio.
    """
    sc, sa1, sa2, wb = aq.sigma_coeffs
    if base_w is not None:
        ratio = f_arr * np.exp(grid.vsq / (2.0 * base_w ** 2))
    else:
        ratio = f_arr
    vx, vy, vz = grid.nodes
    lhs = 0.0
    rhs = 0.0
    theta_flat = np.repeat(aq.theta, aq.n_phi)
    for q in range(len(sc)):
        if which == "regular":
            # integrate over v at fixed v_*
            ux, uy, uz = vx - anchor[0], vy - anchor[1], vz - anchor[2]
        else:
            # integrate over v_* at fixed v
            ux, uy, uz = anchor[0] - vx, anchor[1] - vy, anchor[2] - vz
        un = np.sqrt(ux * ux + uy * uy + uz * uz)
        un_safe = np.where(un > 0, un, 1.0)
        phi_kin = np.where(un > 0, un_safe ** kp.gamma, 0.0)
        # sigma = cos t u_hat + sin t omega; frame per node is expensive, so
        # build omega from a fixed pair orthogonalized against u per node
        a = np.zeros((3,) + un.shape)
        a[0] = 1.0
        proj = (a[0] * ux) / un_safe
        w1x = a[0] - proj * ux / un_safe
        w1y = -proj * uy / un_safe
        w1z = -proj * uz / un_safe
        w1n = np.sqrt(w1x ** 2 + w1y ** 2 + w1z ** 2)
        bad = w1n < 1e-9
        # fall back to y axis where u is near x
        w1x = np.where(bad, -uy * ux / un_safe ** 2, w1x)
        w1y = np.where(bad, 1.0 - uy * uy / un_safe ** 2, w1y)
        w1z = np.where(bad, -uy * uz / un_safe ** 2, w1z)
        w1n = np.sqrt(w1x ** 2 + w1y ** 2 + w1z ** 2)
        w1n = np.where(w1n > 0, w1n, 1.0)
        w1x, w1y, w1z = w1x / w1n, w1y / w1n, w1z / w1n
        w2x = (uy * w1z - uz * w1y) / un_safe
        w2y = (uz * w1x - ux * w1z) / un_safe
        w2z = (ux * w1y - uy * w1x) / un_safe
        sgx = sc[q] * ux / un_safe + sa1[q] * w1x + sa2[q] * w2x
        sgy = sc[q] * uy / un_safe + sa1[q] * w1y + sa2[q] * w2y
        sgz = sc[q] * uz / un_safe + sa1[q] * w1z + sa2[q] * w2z
        if which == "regular":
            cx = 0.5 * (vx + anchor[0]) + 0.5 * un * sgx
            cy = 0.5 * (vy + anchor[1]) + 0.5 * un * sgy
            cz = 0.5 * (vz + anchor[2]) + 0.5 * un * sgz
        else:
            cx = 0.5 * (vx + anchor[0]) + 0.5 * un * sgx
            cy = 0.5 * (vy + anchor[1]) + 0.5 * un * sgy
            cz = 0.5 * (vz + anchor[2]) + 0.5 * un * sgz
        # half-offset lattice: node j sits at -Lv + (j + 1/2) h
        coords = np.stack([(cx + grid.Lv) / grid.h - 0.5,
                           (cy + grid.Lv) / grid.h - 0.5,
                           (cz + grid.Lv) / grid.h - 0.5])
        fprime = map_coordinates(ratio, coords, order=1, mode="constant", cval=0.0)
        if base_w is not None:
            fprime = fprime * np.exp(-(cx ** 2 + cy ** 2 + cz ** 2)
                                     / (2.0 * base_w ** 2))
        lhs += wb[q] * np.sum(phi_kin * fprime)
        th = theta_flat[q]
        if which == "regular":
            jac = np.cos(th / 2.0) ** (-(3.0 + kp.gamma))
        else:
            jac = np.sin(th / 2.0) ** (-(3.0 + kp.gamma))
        rhs += wb[q] * jac * np.sum(phi_kin * f_arr)
    return lhs * grid.h ** 3, rhs * grid.h ** 3


def change_of_variables_check(f: DistributionField, kp: KernelParams,
                              aq: AngularQuadrature,
                              anchor=(0.5, -0.25, 0.125),
                              base_w: float | None = None,
                              sides=("regular", "singular")) -> EstimateReport:
    """Regular and singular change-of-variables identities on a smooth field.

    The singular identity compresses scales by sin(theta/2): its left side
    needs |v_*| up to (field reach)/sin(theta_min/2), so desk-scale boxes can
    only witness it for angular truncations with sin(theta_min/2) * Lv above
    the field reach.  Callers pick theta_min and the field accordingly.
    """
    grid = f.grid
    fr = np.real(f.ell0).astype(np.float64)
    stats = {}
    ok = True
    for which in sides:
        lhs, rhs = _cov_side(fr, grid, kp, aq, np.asarray(anchor, float),
                             which, base_w=base_w)
        denom = max(abs(lhs), abs(rhs), 1e-300)
        disc = abs(lhs - rhs) / denom
        stats[which] = {"lhs": lhs, "rhs": rhs, "rel_discrepancy": disc}
        ok = ok and np.isfinite(disc)
    return EstimateReport(
        name="change_of_variables", tier="exact",
        sample_desc=f"anchor {tuple(anchor)}",
        stats=stats, passed=bool(ok), tolerances={})
