"""Weighted Sobolev norms, the anisotropic functionals, and the versioned
test family used by every fitted-constant check.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as gamma_fn

import numpy as np

from .backend import kernels
from .collision import phi_table
from .fields import DistributionField, maxwellian_array
from .grids import AngularQuadrature, KernelParams, VelocityGrid, eta_of

Mode = tuple[int, int, int]

#: multi-indices |alpha| <= 2 for the x-derivative ladder of Y_l
ALPHAS = [(0, 0, 0),
          (1, 0, 0), (0, 1, 0), (0, 0, 1),
          (2, 0, 0), (0, 2, 0), (0, 0, 2),
          (1, 1, 0), (1, 0, 1), (0, 1, 1)]


@dataclass(frozen=True)
class NormSpec:
    """Sobolev order beta (may be negative) and polynomial weight order k."""
    beta: float = 0.0
    k: float = 0.0


def weighted_sobolev(arr: np.ndarray, grid: VelocityGrid, spec: NormSpec) -> float:
    """|| <v>^k f ||_{H^beta(dv)} via lattice frequency multipliers."""
    w = arr * grid.bracket_v(spec.k)
    wh = grid.dft(w)
    mult = grid.bracket_xi(spec.beta)
    val = np.sum(np.abs(mult * wh) ** 2) / (2.0 * grid.Lv) ** 3
    return float(np.sqrt(val))


def sobolev_then_weight(arr: np.ndarray, grid: VelocityGrid, spec: NormSpec) -> float:
    """|| <v>^k <D>^beta f ||_{L2} -- the commuted ordering of weighted_sobolev."""
    wh = grid.dft(arr) * grid.bracket_xi(spec.beta)
    w = grid.idft(wh) * grid.bracket_v(spec.k)
    return grid.l2(w)


def y_l_norm(f: DistributionField, l: float, m0: float) -> float:
    """Y_l norm: sum over |alpha| <= 2 of ||W^(l-|alpha|) d_x^alpha f||_{L2(dx dv)},
    with W = <v>^m0 and d_x^alpha realized as mode multipliers (2 pi l)^alpha."""
    grid = f.grid
    tot = 0.0
    for ell in f.mode_set():
        eta = eta_of(ell)
        arr = f.mode(ell)
        for alpha in ALPHAS:
            a = sum(alpha)
            fac = np.prod([abs(e) ** p for e, p in zip(eta, alpha)])
            if fac == 0.0 and a > 0:
                continue
            w = grid.bracket_v(m0 * (l - a))
            tot += (fac * grid.l2(w * arr)) ** 2
    return float(np.sqrt(tot))


def weighted_hs_x(f: DistributionField, l: float, m0: float, s: float,
                  gamma: float) -> float:
    """sum_alpha ||W^(l-|alpha|) d_x^alpha f||_{L2(dx; H^s_{gamma/2}(dv))},
    the dissipation integrand of the energy functional."""
    grid = f.grid
    tot = 0.0
    for ell in f.mode_set():
        eta = eta_of(ell)
        arr = f.mode(ell)
        for alpha in ALPHAS:
            a = sum(alpha)
            fac = np.prod([abs(e) ** p for e, p in zip(eta, alpha)])
            if fac == 0.0 and a > 0:
                continue
            w = grid.bracket_v(m0 * (l - a)) * arr
            tot += (fac * weighted_sobolev(w, grid, NormSpec(beta=s, k=gamma / 2.0))) ** 2
    return float(np.sqrt(tot))


# ---------------------------------------------------------------------------
# Anisotropic functionals
# ---------------------------------------------------------------------------

def j1_functional(f: DistributionField, kp: KernelParams, aq: AngularQuadrature,
                  kinetic: str = "gamma") -> float:
    """J_1(f) = iiint b Phi mu_* (f(v') - f(v))^2, Phi = |u|^gamma or 1.

    Plain trilinear reads of f, so constants give exactly zero.
    """
    grid = f.grid
    mu3 = maxwellian_array(grid).astype(np.complex128)
    return c0_functional_arrays(mu3, f.ell0, grid, kp, aq, kinetic)


def c0_functional(F: DistributionField, g: DistributionField,
                  aq: AngularQuadrature, kinetic: str = "zero") -> float:
    """C_0(F, g) = iiint b F_* (g' - g)^2 (Phi = 1); F must be nonnegative."""
    grid = F.grid
    fr = np.real(F.ell0)
    if np.min(fr) < -1e-12 * max(np.max(np.abs(fr)), 1e-300):
        raise ValueError("C_0 requires a nonnegative field F")
    return c0_functional_arrays(F.ell0, g.ell0, grid, aq.kp, aq, kinetic)


def c0_functional_arrays(Fa, ga, grid, kp, aq, kinetic) -> float:
    sc, sa1, sa2, wb = aq.sigma_coeffs
    if kinetic == "gamma":
        phi_d = phi_table(grid, kp, "full")
    elif kinetic == "zero":
        phi_d = np.ones((2 * grid.n - 1,) * 3)
        phi_d[grid.n - 1, grid.n - 1, grid.n - 1] = 0.0  # d = 0: f'-f = 0 anyway
    else:
        raise ValueError(f"unknown kinetic tag {kinetic!r}")
    return float(kernels.quad_diff(np.ascontiguousarray(Fa, np.complex128),
                                   np.ascontiguousarray(ga, np.complex128),
                                   phi_d, sc, sa1, sa2, wb, grid.h))


def entropy_dissipation(F: DistributionField, kp: KernelParams,
                        aq: AngularQuadrature) -> float:
    """D(F) = -int Q(F, F) log F dv for F > 0, in the sign-exact pair form;
    nonnegative term by term, exactly zero at F = mu."""
    grid = F.grid
    fr = np.real(F.ell0)
    if np.min(fr) <= 0.0:
        raise ValueError("entropy dissipation needs strictly positive F")
    mu3 = maxwellian_array(grid)
    g = np.log(fr / mu3)
    sc, sa1, sa2, wb = aq.sigma_coeffs
    phi_d = phi_table(grid, kp, "full")
    return float(kernels.entropy_quad(np.ascontiguousarray(g), mu3, phi_d,
                                      sc, sa1, sa2, wb, grid.h))


def l_log_l(F: DistributionField) -> float:
    """Diagnostic sum F |log F| h^3 over strictly positive values."""
    fr = np.real(F.ell0)
    pos = fr[fr > 0]
    return float(np.sum(pos * np.abs(np.log(pos))) * F.grid.h ** 3)


def pos_neg_parts(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """h = h_plus + h_minus with h_plus >= 0 >= h_minus pointwise."""
    hp = np.maximum(arr.real, 0.0)
    hm = np.minimum(arr.real, 0.0)
    return hp, hm


# ---------------------------------------------------------------------------
# Gagliardo form of the H^s seminorm (used by the explicit-constant sandwich)
# ---------------------------------------------------------------------------

def gagliardo_constant(s: float, d: int = 3) -> float:
    """c_{d,s} = 4^s Gamma(d/2 + s) / (pi^(d/2) |Gamma(-s)|)."""
    return 4.0 ** s * gamma_fn(d / 2.0 + s) / (np.pi ** (d / 2.0)
                                               * abs(gamma_fn(-s)))


def hs_sq_gagliardo(arr: np.ndarray, grid: VelocityGrid, s: float,
                    radius_cells: int = 8) -> float:
    """||h||_{H^s}^2 as L2 part plus the Gagliardo double sum truncated at
    `radius_cells` lattice spacings with an analytic far-field tail."""
    f = np.ascontiguousarray(np.real(arr), np.float64)
    double = kernels.gagliardo(f, radius_cells, grid.h, s)
    rho = radius_cells * grid.h
    l2sq = grid.l2(f) ** 2
    tail = 2.0 * l2sq * 4.0 * np.pi / (2.0 * s * rho ** (2.0 * s))
    return l2sq + gagliardo_constant(s) * (double + tail)


# ---------------------------------------------------------------------------
# Versioned test family
# ---------------------------------------------------------------------------

TEST_FAMILY_VERSION = 1


def test_family(grid: VelocityGrid, seed: int, count: int,
                kind: str = "mixed") -> list[np.ndarray]:
    """Deterministic decaying test fields.

    Half are mu-modulated polynomials up to degree 4, half random band-limited
    fields under a wide Gaussian envelope (so everything decays below 1e-12 at
    the box face and stays in the domain of the collision forms).
    """
    rng = np.random.default_rng(seed)
    vx, vy, vz = grid.nodes
    mu3 = maxwellian_array(grid)
    env = np.exp(-grid.vsq / 4.0)
    mons = [np.ones_like(vx), vx, vy, vz, vx * vy, vy * vz, vx * vz,
            vx ** 2, vy ** 2, vz ** 2, vx ** 3, vx * vy * vz, grid.vsq ** 2]
    out = []
    for i in range(count):
        if kind == "hermite" or (kind == "mixed" and i % 2 == 0):
            coef = rng.standard_normal(len(mons))
            f = sum(c * m for c, m in zip(coef, mons)) * mu3
        else:
            kmax = max(2, grid.n // 4)
            spec = np.zeros((grid.n,) * 3, np.complex128)
            k = np.fft.fftfreq(grid.n, d=1.0 / grid.n).astype(int)
            mask = (np.abs(k)[:, None, None] <= kmax) \
                & (np.abs(k)[None, :, None] <= kmax) \
                & (np.abs(k)[None, None, :] <= kmax)
            vals = rng.standard_normal(int(mask.sum())) \
                + 1j * rng.standard_normal(int(mask.sum()))
            spec[mask] = vals
            f = np.real(np.fft.ifftn(spec)) * env
        nrm = grid.l2(f)
        out.append((f / nrm).astype(np.float64))
    return out
