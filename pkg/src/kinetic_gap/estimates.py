"""Verification harness: exact identities at machine/quadrature precision,
explicit-constant inequalities checked verbatim, and fitted-constant
inequalities with regression-stable extremes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .backend import kernels
from .collision import phi_table, q_weak
from .fields import DistributionField, maxwellian, maxwellian_array
from .grids import AngularQuadrature, KernelParams, VelocityGrid, _gauss, eta_of
from .norms import (NormSpec, c0_functional_arrays, hs_sq_gagliardo,
                    pos_neg_parts, sobolev_then_weight, test_family,
                    weighted_sobolev)
from .reports import EstimateReport

GAUSS64 = _gauss(64)


# ---------------------------------------------------------------------------
# Collision-pair sampling and the weight expansion (Taylor split)
# ---------------------------------------------------------------------------

def sample_pairs(rng, count, vscale=2.0, theta_lo=1e-3):
    """Random (v, v*, theta, phi) with log-uniform theta in [theta_lo, pi/2]."""
    v = rng.normal(0.0, vscale, (count, 3))
    vs = rng.normal(0.0, vscale, (count, 3))
    theta = np.exp(rng.uniform(np.log(theta_lo), np.log(np.pi / 2), count))
    phi = rng.uniform(0.0, 2.0 * np.pi, count)
    return v, vs, theta, phi


def post_collision(v, vs, theta, phi):
    """sigma-representation v' and the in-plane unit vector omega."""
    u = v - vs
    un = np.linalg.norm(u, axis=-1, keepdims=True)
    uh = u / un
    a = np.zeros_like(uh)
    a[np.arange(len(uh)), np.argmin(np.abs(uh), axis=1)] = 1.0
    e1 = np.cross(a, uh)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(uh, e1)
    omega = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    sigma = np.cos(theta)[:, None] * uh + np.sin(theta)[:, None] * omega
    vp = 0.5 * (v + vs) + 0.5 * un * sigma
    return vp, omega


def _bracket_sq(x):
    return 1.0 + np.sum(x * x, axis=-1)


def verify_weight_expansion(k: int, n_samples: int = 10000, seed: int = 0,
                            ks=(4, 6, 10)) -> EstimateReport:
    """Taylor split of <v'>^2k - <v>^2k cos^2k(t/2).

    (a) the three displayed terms, with the integral remainder evaluated by
        Gauss quadrature exact for its polynomial degree, reproduce the left
        side to 1e-12 relative;
    (b) the remainder beyond the two leading terms of the expansion stays
        below a fitted multiple of its stated bound expression.
    """
    rng = np.random.default_rng(seed)
    v, vs, theta, phi = sample_pairs(rng, n_samples)
    vp, omega = post_collision(v, vs, theta, phi)
    un = np.linalg.norm(v - vs, axis=1)
    vdw = np.sum(v * omega, axis=1)
    ct, st = np.cos(theta / 2.0), np.sin(theta / 2.0)
    bv, bs, bp = _bracket_sq(v), _bracket_sq(vs), _bracket_sq(vp)
    # the classical pre/post bracket identity underlying the expansion
    ident = bv * ct ** 2 + bs * st ** 2 + 2.0 * ct * st * un * vdw
    ident_err = float(np.max(np.abs(bp - ident) / np.abs(bp)))
    x, w = GAUSS64
    tq = 0.5 * (x + 1.0)
    tw = 0.5 * w
    worst_recon = 0.0
    worst_ratio = 0.0
    for kk in ks:
        lhs = bp ** kk - (bv * ct ** 2) ** kk
        hterm = bs * st ** 2 + 2.0 * ct * st * un * vdw
        d1 = kk * (bv * ct ** 2) ** (kk - 1) * bs * st ** 2
        d2 = 2.0 * kk * (bv * ct ** 2) ** (kk - 1) * ct * st * un * vdw
        baseq = bv[:, None] * (ct ** 2)[:, None] + tq[None, :] * hterm[:, None]
        d3 = kk * (kk - 1) * np.sum(tw[None, :] * (1.0 - tq)[None, :]
                                    * baseq ** (kk - 2), axis=1) * hterm ** 2
        # relative to the term scale of the identity (the split is exact, but
        # the left side is a near-cancellation of large brackets)
        scale = np.abs(lhs) + np.abs(d1) + np.abs(d2) + np.abs(d3) + bp ** kk
        recon = np.max(np.abs(lhs - (d1 + d2 + d3)) / scale)
        worst_recon = max(worst_recon, float(recon))
        # remainder of the displayed split: everything beyond the first two
        # terms of the precise expansion
        rem = lhs - d2 - bs ** kk * st ** (2 * kk)
        bnd = (np.sqrt(bv) * bs ** (kk - 0.5) * st ** (2 * kk - 3)
               + bv ** (kk - 1) * bs * st ** 2
               + bv ** (kk - 2) * bs ** 2 * st ** 2)
        worst_ratio = max(worst_ratio, float(np.max(np.abs(rem) / bnd)))
    passed = worst_recon < 1e-12 and ident_err < 1e-12 and np.isfinite(worst_ratio)
    return EstimateReport(
        name="weight_expansion", tier="exact", seed=seed, n_samples=n_samples,
        sample_desc=f"random collision pairs, k in {list(ks)}",
        stats={"max_reconstruction_rel": worst_recon,
               "bracket_identity_rel": ident_err},
        fitted={"remainder_ratio_Ck": worst_ratio},
        passed=bool(passed),
        tolerances={"reconstruction": 1e-12})


def convexity_constant(m: float, nu: float) -> float:
    return (1.0 + 1.0 / ((1.0 + nu) ** (1.0 / m) - 1.0)) ** m


def weight_diff_constant(k: float, nu: float) -> float:
    """C_{k, nu} = k (1 + 1/((1+nu)^(1/(k-1)) - 1))^(k-1) (sqrt 2)^(k-1)."""
    return (k * (1.0 + 1.0 / ((1.0 + nu) ** (1.0 / (k - 1.0)) - 1.0)) ** (k - 1.0)
            * np.sqrt(2.0) ** (k - 1.0))


def verify_weight_diff_bound(k: float = 6.0, nu: float = 0.5,
                             n_samples: int = 10000, seed: int = 1,
                             ms=(2, 5, 9)) -> EstimateReport:
    """Convexity inequality and the weight-difference bound with the closed
    form constant, checked verbatim on random samples."""
    rng = np.random.default_rng(seed)
    ok_convex = True
    worst_margin = np.inf
    for m in ms:
        X = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), n_samples))
        lhs = (1.0 + X) ** m
        rhs = (1.0 + nu) * X ** m + convexity_constant(m, nu)
        ok_convex &= bool(np.all(lhs <= rhs * (1.0 + 1e-12)))
        worst_margin = min(worst_margin, float(np.min(rhs - lhs)))
    v, vs, theta, phi = sample_pairs(rng, n_samples)
    vp, _ = post_collision(v, vs, theta, phi)
    bv = np.sqrt(_bracket_sq(v))
    bp = np.sqrt(_bracket_sq(vp))
    dvp = np.linalg.norm(v - vp, axis=1)
    lhs = np.abs(bv ** k - bp ** k)
    ck = weight_diff_constant(k, nu)
    rhs = (1.0 + nu) * dvp ** k + ck * dvp * bv ** (k - 1.0)
    ok_pairs = bool(np.all(lhs <= rhs * (1.0 + 1e-12)))
    return EstimateReport(
        name="weight_diff_bound", tier="explicit", seed=seed,
        n_samples=n_samples,
        sample_desc=f"convexity m in {list(ms)}; collision pairs k={k}, nu={nu}",
        stats={"convexity_min_margin": worst_margin,
               "pairs_max_ratio": float(np.max(lhs / rhs))},
        bound=ck, passed=ok_convex and ok_pairs,
        tolerances={"verbatim": 0.0})


# ---------------------------------------------------------------------------
# Ukai-type time-integral estimates
# ---------------------------------------------------------------------------

def ukai_lhs(xi, eta, t, power):
    """int_0^t |xi - s eta|^power ds, split at the near-kink point."""
    x, w = GAUSS64

    def seg(a, b):
        s = 0.5 * (a + b) + 0.5 * (b - a) * x
        ww = 0.5 * (b - a) * w
        pts = xi[None, :] - s[:, None] * eta[None, :]
        return float(np.sum(ww * np.linalg.norm(pts, axis=1) ** power))

    ee = float(np.dot(eta, eta))
    if ee == 0.0:
        return float(np.linalg.norm(xi) ** power * t)
    sstar = float(np.dot(xi, eta)) / ee
    if 0.0 < sstar < t:
        return seg(0.0, sstar) + seg(sstar, t)
    return seg(0.0, t)


def ukai_bracket_lhs(xi, eta, t, power):
    """int_0^t <xi - s eta>^power ds by Gauss quadrature."""
    x, w = GAUSS64
    s = 0.5 * t * (x + 1.0)
    ww = 0.5 * t * w
    pts = xi[None, :] - s[:, None] * eta[None, :]
    return float(np.sum(ww * (1.0 + np.sum(pts ** 2, axis=1)) ** (power / 2.0)))


def ukai_constant(alpha: float) -> float:
    return 1.0 / (2.0 ** (alpha + 1.0) * (alpha + 1.0))


def verify_ukai(alphas=(0.5, 1.0, 2.0), betas=(0.3, 0.7),
                n_samples: int = 10000, seed: int = 2) -> EstimateReport:
    """Time-integral lower bound with its proof constant, the two-sided
    bracket equivalence, and the negative-power upper bound."""
    rng = np.random.default_rng(seed)
    stats = {}
    passed = True
    closed_err = 0.0
    for alpha in alphas:
        c_a = ukai_constant(alpha)
        worst = np.inf
        for _ in range(n_samples // 10):
            xi = rng.normal(0, 3, 3)
            eta = rng.normal(0, 3, 3)
            t = np.exp(rng.uniform(np.log(1e-2), np.log(10.0)))
            lhs = ukai_lhs(xi, eta, t, alpha)
            rhs = c_a * (t * np.linalg.norm(xi) ** alpha
                         + t ** (alpha + 1) * np.linalg.norm(eta) ** alpha)
            worst = min(worst, lhs / rhs)
            if alpha == 2.0:
                exact = (t * np.dot(xi, xi) - t * t * np.dot(xi, eta)
                         + t ** 3 * np.dot(eta, eta) / 3.0)
                closed_err = max(closed_err, abs(lhs - exact) / abs(exact))
        stats[f"alpha_{alpha}"] = {"min_lhs_over_bound": float(worst),
                                   "c_alpha": c_a}
        passed &= worst >= 1.0 - 1e-10
    equiv = {}
    for alpha in alphas:
        ratios = []
        for _ in range(200):
            xi = rng.normal(0, 3, 3)
            eta = rng.normal(0, 3, 3)
            t = np.exp(rng.uniform(np.log(1e-2), np.log(10.0)))
            lhs = ukai_bracket_lhs(xi, eta, t, alpha)
            ref = t * (1.0 + np.dot(xi, xi)
                       + t * t * np.dot(eta, eta)) ** (alpha / 2.0)
            ratios.append(lhs / ref)
        equiv[f"alpha_{alpha}"] = [float(np.min(ratios)), float(np.max(ratios))]
    neg = {}
    for beta in betas:
        worst = 0.0
        for _ in range(200):
            xi = rng.normal(0, 3, 3)
            eta = rng.normal(0, 3, 3)
            t = np.exp(rng.uniform(np.log(1e-2), np.log(10.0)))
            lhs = ukai_bracket_lhs(xi, eta, t, -beta)
            ref = t / (1.0 + np.dot(xi, xi) + t * t * np.dot(eta, eta)) ** (beta / 2.0)
            worst = max(worst, lhs / ref)
        neg[f"beta_{beta}"] = float(worst)
    return EstimateReport(
        name="ukai_estimates", tier="explicit", seed=seed, n_samples=n_samples,
        sample_desc=f"alphas {list(alphas)}, betas {list(betas)}",
        stats={"lower_bound": stats, "alpha2_closed_form_rel": closed_err},
        fitted={"bracket_equiv_ratio": equiv, "negative_power_C": neg},
        passed=bool(passed and closed_err < 1e-10),
        tolerances={"closed_form": 1e-10, "constant": "verbatim"})


# ---------------------------------------------------------------------------
# Regularization multiplier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierSymbol:
    """Time-dependent Fourier symbol manufacturing H^s smoothing.

    M(t, l, xi) = (1 + delta int_0^(T-t) <xi - 2 pi tau l>^(2s) dtau)^(-1/2-eps),
    0 < eps < (1-s)/(2s).
    """

    s: float
    delta: float
    eps: float
    T: float
    ell: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        cap = (1.0 - self.s) / (2.0 * self.s)
        if not 0.0 < self.eps < cap:
            raise ValueError(f"eps must lie in (0, {cap}), got {self.eps}")
        if self.delta <= 0 or self.T <= 0:
            raise ValueError("delta and T must be positive")

    def integral(self, t: float, xi: np.ndarray) -> float:
        eta = eta_of(self.ell)
        return ukai_bracket_lhs(np.asarray(xi, float), eta, self.T - t,
                                2.0 * self.s)

    def eval(self, t: float, xi) -> float:
        if not 0.0 <= t <= self.T:
            raise ValueError("t must lie in [0, T]")
        return float((1.0 + self.delta * self.integral(t, np.asarray(xi, float)))
                     ** (-0.5 - self.eps))


def multiplier_eval(ms: MultiplierSymbol, t: float, xi) -> float:
    return ms.eval(t, xi)


def multiplier_checks(ms: MultiplierSymbol, n_samples: int = 1000,
                      seed: int = 3, fd_scale: float = 1e-4) -> EstimateReport:
    """Range, terminal value, the transport-commutation identity by central
    finite differences, and the gradient-ratio bound with a fitted constant."""
    rng = np.random.default_rng(seed)
    eta = eta_of(ms.ell)
    t_vals = rng.uniform(0.0, ms.T, n_samples)
    ok_range = True
    worst_comm = 0.0
    worst_grad = 0.0
    for i in range(n_samples):
        xi = rng.normal(0.0, 4.0, 3)
        t = float(t_vals[i] * 0.98)
        m = ms.eval(t, xi)
        ok_range &= 0.0 < m <= 1.0 + 1e-14
        dt = fd_scale * ms.T
        dxi = fd_scale * (1.0 + np.linalg.norm(xi))
        m_tp = ms.eval(min(t + dt, ms.T), xi)
        m_tm = ms.eval(max(t - dt, 0.0), xi)
        ddt = (m_tp - m_tm) / (min(t + dt, ms.T) - max(t - dt, 0.0))
        grad = np.zeros(3)
        for a in range(3):
            e = np.zeros(3)
            e[a] = dxi
            grad[a] = (ms.eval(t, xi + e) - ms.eval(t, xi - e)) / (2.0 * dxi)
        lhs = ddt - float(np.dot(eta, grad))
        denom = 1.0 + ms.delta * ms.integral(t, xi)
        rhs = (0.5 + ms.eps) * m * ms.delta \
            * (1.0 + float(np.dot(xi, xi))) ** ms.s / denom
        worst_comm = max(worst_comm, abs(lhs - rhs) / max(abs(rhs), 1e-30))
        ratio = np.linalg.norm(grad) / m \
            * (np.sqrt(1.0 + np.dot(xi, xi)) + (ms.T - t) * np.linalg.norm(eta))
        worst_grad = max(worst_grad, float(ratio))
    ok_terminal = abs(ms.eval(ms.T, np.array([1.7, -0.3, 2.4])) - 1.0) < 1e-14
    passed = ok_range and ok_terminal and worst_comm < 1e-5
    return EstimateReport(
        name="multiplier_symbol", tier="exact", seed=seed, n_samples=n_samples,
        sample_desc=f"l={ms.ell}, delta={ms.delta}, eps={ms.eps}, T={ms.T}",
        stats={"commute_identity_max_rel": worst_comm,
               "terminal_value_ok": ok_terminal, "range_ok": ok_range},
        fitted={"grad_ratio_C": worst_grad},
        passed=bool(passed), tolerances={"commute_fd": 1e-5})


# ---------------------------------------------------------------------------
# Explicit numeric constants of the moment machinery
# ---------------------------------------------------------------------------

def kinetic_moment_profile(kp: KernelParams, r: np.ndarray) -> np.ndarray:
    """I(r) = int |v - v*|^gamma mu(v*) dv* at |v| = r (radial quadrature)."""
    x, w = _gauss(200)
    rs = 0.5 * 12.0 * (x + 1.0)           # radial support of mu up to 12
    ws = 0.5 * 12.0 * w
    xt, wt = _gauss(200)
    out = np.empty_like(r)
    mu_r = (2.0 * np.pi) ** (-1.5) * np.exp(-rs ** 2 / 2.0)
    for i, ri in enumerate(np.atleast_1d(r)):
        d2 = ri ** 2 + rs[None, :] ** 2 - 2.0 * ri * rs[None, :] * xt[:, None]
        vals = np.maximum(d2, 0.0) ** (kp.gamma / 2.0)
        inner = np.sum(wt[:, None] * vals, axis=0)
        out[i] = 2.0 * np.pi * float(np.sum(ws * rs ** 2 * mu_r * inner))
    return out


def gamma_one_lower_value(kp: KernelParams) -> float:
    return 2.0 ** (-kp.gamma - 7.0) * 28.0 / (3.0 * np.sqrt(2.0 * np.pi))


def upper_moment_value() -> float:
    return 26.0 / (3.0 * np.sqrt(2.0 * np.pi))


def k0_default(gamma: float) -> int:
    return int(np.ceil((5.0 * gamma + 37.0) / 2.0)) + 1


def verify_constants(kp: KernelParams, aq: AngularQuadrature,
                     Lv: float = 8.0) -> EstimateReport:
    """gamma_1 above its displayed lower value; the gamma-weighted Maxwellian
    moment below its displayed chain; gamma_0/2 > gamma_3 at the global
    existence weight."""
    r = np.linspace(0.0, np.sqrt(3.0) * Lv, 800)
    prof = kinetic_moment_profile(kp, r)
    ratios = prof / (1.0 + r ** 2) ** (kp.gamma / 2.0)
    gamma1 = float(np.min(ratios))
    gamma2 = float(np.max(ratios))
    low = gamma_one_lower_value(kp)
    x, w = _gauss(400)
    rs = 0.5 * 14.0 * (x + 1.0)
    ws = 0.5 * 14.0 * w
    mu_r = (2.0 * np.pi) ** (-1.5) * np.exp(-rs ** 2 / 2.0)
    mom = float(np.sum(ws * 4.0 * np.pi * rs ** 2 * mu_r
                       * (1.0 + rs ** 2) ** (kp.gamma / 2.0)))
    up = upper_moment_value()
    k0 = k0_default(kp.gamma)
    ct2 = np.cos(aq.theta / 2.0)
    gamma0 = -0.5 * gamma1 * 2.0 * np.pi * aq.theta_integral(
        ct2 ** (2.0 * k0 - 3.0 - kp.gamma) - 1.0)
    st2 = np.sin(aq.theta / 2.0) ** 2
    b_sin2 = 2.0 * np.pi * aq.theta_integral(st2)
    gamma3 = 2.0 ** (-(2.0 * k0 - kp.gamma - 5.0) / 4.0) * mom * b_sin2
    ok = gamma1 > low and mom < up and gamma0 / 2.0 > gamma3
    return EstimateReport(
        name="explicit_constants", tier="explicit",
        sample_desc=f"gamma={kp.gamma}, k0={k0}, radial quadrature to {np.sqrt(3)*Lv:.1f}",
        stats={"gamma1": gamma1, "gamma1_lower_value": low,
               "gamma2": gamma2,
               "bracket_moment": mom, "bracket_moment_upper": up,
               "gamma0": float(gamma0), "gamma3": float(gamma3), "k0": k0},
        passed=bool(ok), tolerances={"verbatim": 0.0})


# ---------------------------------------------------------------------------
# Field-level fitted inequalities
# ---------------------------------------------------------------------------

def _l1_weighted(arr, grid, w):
    return float(np.sum(np.abs(arr) * grid.bracket_v(w)) * grid.h ** 3)


def verify_coercivity(grid: VelocityGrid, kp: KernelParams, aq: AngularQuadrature,
                      n_samples: int = 60, seed: int = 4,
                      k_extra: float = 0.0) -> EstimateReport:
    """Fitted (c, C) in <Q(mu, f), f> <= -c ||f||_{H^s_{g/2}}^2 + C ||f||_{L2_{g/2}}^2.

    C is pinned from the worst unpenalized ratio with a 1.2 safety factor;
    c is then the minimal admissible margin ratio over the family.
    """
    mu = maxwellian(grid)
    fam = test_family(grid, seed, n_samples)
    a_vals, b_vals, d_vals = [], [], []
    for fa in fam:
        f = DistributionField(grid, {(0, 0, 0): fa.astype(complex)})
        a = float(np.real(q_weak(mu, f, f, kp, aq)))
        b = weighted_sobolev(fa, grid, NormSpec(beta=kp.s, k=kp.gamma / 2.0)) ** 2
        d = grid.l2(fa * grid.bracket_v(kp.gamma / 2.0)) ** 2
        a_vals.append(a)
        b_vals.append(b)
        d_vals.append(d)
    a_vals = np.asarray(a_vals)
    b_vals = np.asarray(b_vals)
    d_vals = np.asarray(d_vals)
    c_upper = np.max(np.maximum(a_vals / d_vals, 0.0))
    C_fit = 1.2 * c_upper + 1e-12
    c_fit = float(np.min((C_fit * d_vals - a_vals) / b_vals))
    return EstimateReport(
        name="coercivity", tier="fitted", seed=seed, n_samples=n_samples,
        sample_desc="versioned family, <Q(mu,f),f> vs H^s_{gamma/2}",
        stats={"worst_raw_ratio": float(c_upper)},
        fitted={"c": c_fit, "C": float(C_fit), "b0": kp.b0},
        passed=bool(c_fit > 0.0),
        tolerances={"positivity": 0.0})


def verify_trilinear(grid: VelocityGrid, kp: KernelParams, aq: AngularQuadrature,
                     n_samples: int = 40, seed: int = 5, m: float = 0.0,
                     sigma: float = 0.0) -> EstimateReport:
    """Fitted constant of the trilinear bound at (m, sigma)."""
    fam = test_family(grid, seed, 3 * n_samples)
    worst = 0.0
    for i in range(n_samples):
        fa, ga, ha = fam[3 * i], fam[3 * i + 1], fam[3 * i + 2]
        f = DistributionField(grid, {(0, 0, 0): fa.astype(complex)})
        g = DistributionField(grid, {(0, 0, 0): ga.astype(complex)})
        hh = DistributionField(grid, {(0, 0, 0): ha.astype(complex)})
        val = abs(q_weak(f, g, hh, kp, aq))
        w1 = max(m - kp.gamma / 2.0, 0.0) + kp.gamma + 2.0 * kp.s
        nf = _l1_weighted(fa, grid, w1) + grid.l2(fa)
        ng = weighted_sobolev(ga, grid, NormSpec(beta=kp.s + sigma,
                                                 k=kp.gamma / 2.0 + 2.0 * kp.s + m))
        nh = weighted_sobolev(ha, grid, NormSpec(beta=kp.s - sigma,
                                                 k=kp.gamma / 2.0 - m))
        worst = max(worst, val / (nf * ng * nh))
    return EstimateReport(
        name="trilinear_bound", tier="fitted", seed=seed, n_samples=n_samples,
        sample_desc=f"(m, sigma) = ({m}, {sigma}), versioned family triples",
        fitted={"C": float(worst), "b0": kp.b0},
        passed=bool(np.isfinite(worst) and worst > 0),
        tolerances={"finiteness": 0.0})


def fourier_side_j1(Fa: np.ndarray, ga: np.ndarray, grid: VelocityGrid,
                    aq: AngularQuadrature) -> float:
    """Bobylev-side value of iiint b F_*(g'-g)^2:

    (2 pi)^-3 iint b(xihat.sigma) { hat F(0)|hat g(xi) - hat g(xi+)|^2
        + 2 Re[(hat F(0) - hat F(xi-)) hat g(xi+) conj(hat g(xi))] } dxi dsigma,

    with hat g at the off-lattice xi+ read by trilinear interpolation in
    frequency space.
    """
    gh = grid.dft(ga.astype(np.complex128))
    Fh = grid.dft(Fa.astype(np.complex128))
    F0 = float(np.real(Fh.flat[0]))
    sc, sa1, sa2, wb = aq.sigma_coeffs
    # order frequencies for interpolation
    shift = np.fft.fftshift
    gh_s = shift(gh)
    Fh_s = shift(Fh)
    xi1 = shift(grid.xi_axis)
    dxi = xi1[1] - xi1[0]
    KX, KY, KZ = np.meshgrid(xi1, xi1, xi1, indexing="ij")
    xin = np.sqrt(KX ** 2 + KY ** 2 + KZ ** 2)
    xin_safe = np.where(xin > 0, xin, 1.0)
    # deterministic frame normal to xi
    a = np.zeros((3,) + xin.shape)
    a[0] = 1.0
    proj = KX / xin_safe
    e1x = 1.0 - proj * KX / xin_safe
    e1y = -proj * KY / xin_safe
    e1z = -proj * KZ / xin_safe
    nrm = np.sqrt(e1x ** 2 + e1y ** 2 + e1z ** 2)
    bad = nrm < 1e-9
    e1x = np.where(bad, -KY * KX / xin_safe ** 2, e1x)
    e1y = np.where(bad, 1.0 - KY * KY / xin_safe ** 2, e1y)
    e1z = np.where(bad, -KY * KZ / xin_safe ** 2, e1z)
    nrm = np.sqrt(e1x ** 2 + e1y ** 2 + e1z ** 2)
    nrm = np.where(nrm > 0, nrm, 1.0)
    e1x, e1y, e1z = e1x / nrm, e1y / nrm, e1z / nrm
    e2x = (KY * e1z - KZ * e1y) / xin_safe
    e2y = (KZ * e1x - KX * e1z) / xin_safe
    e2z = (KX * e1y - KY * e1x) / xin_safe
    tot = 0.0
    for q in range(len(sc)):
        sgx = sc[q] * KX / xin_safe + sa1[q] * e1x + sa2[q] * e2x
        sgy = sc[q] * KY / xin_safe + sa1[q] * e1y + sa2[q] * e2y
        sgz = sc[q] * KZ / xin_safe + sa1[q] * e1z + sa2[q] * e2z
        xpx = 0.5 * (KX + xin * sgx)
        xpy = 0.5 * (KY + xin * sgy)
        xpz = 0.5 * (KZ + xin * sgz)
        xmx, xmy, xmz = KX - xpx, KY - xpy, KZ - xpz
        coords = np.stack([(xpx - xi1[0]) / dxi, (xpy - xi1[0]) / dxi,
                           (xpz - xi1[0]) / dxi])
        gp = (map_coordinates(np.real(gh_s), coords, order=1, cval=0.0)
              + 1j * map_coordinates(np.imag(gh_s), coords, order=1, cval=0.0))
        coords_m = np.stack([(xmx - xi1[0]) / dxi, (xmy - xi1[0]) / dxi,
                             (xmz - xi1[0]) / dxi])
        Fm = (map_coordinates(np.real(Fh_s), coords_m, order=1, cval=0.0)
              + 1j * map_coordinates(np.imag(Fh_s), coords_m, order=1, cval=0.0))
        term = F0 * np.abs(gh_s - gp) ** 2 \
            + 2.0 * np.real((F0 - Fm) * gp * np.conj(gh_s))
        tot += wb[q] * float(np.sum(term))
    return tot * dxi ** 3 / (2.0 * np.pi) ** 3


def verify_j1_family(grid: VelocityGrid, kp: KernelParams, aq: AngularQuadrature,
                     n_samples: int = 12, seed: int = 6) -> EstimateReport:
    """Fourier identity for the quadratic difference form plus the fitted
    two-sided relations between C_0, J_1 variants, and Sobolev norms."""
    mu3 = maxwellian_array(grid)
    fam = test_family(grid, seed, n_samples)
    F = mu3 + 0.05 * np.abs(fam[0]) * mu3 / np.max(np.abs(fam[0]) * mu3)
    ident_rel = 0.0
    for ga in fam[:3]:
        phys = c0_functional_arrays(F.astype(complex), ga.astype(complex),
                                    grid, kp, aq, "zero")
        four = fourier_side_j1(F, ga, grid, aq)
        ident_rel = max(ident_rel, abs(phys - four) / max(abs(phys), 1e-30))
    w_gh = grid.bracket_v(kp.gamma / 2.0)
    fits = {"B1_upper": 0.0, "B2_upper": 0.0, "B3_upper": 0.0,
            "B4_lower_Cf": 0.0, "B6_C": 0.0,
            "remark_equiv_fwd": 0.0, "remark_equiv_bwd": 0.0}
    f1_2s = _l1_weighted(F, grid, 2.0 * kp.s)
    f1_mx = _l1_weighted(F, grid, max(2.0, 2.0 * kp.s + kp.gamma))
    f2_4 = grid.l2(F * grid.bracket_v(4.0))
    Ff = DistributionField(grid, {(0, 0, 0): F.astype(complex)})
    mu = maxwellian(grid)
    for i, ga in enumerate(fam):
        g = DistributionField(grid, {(0, 0, 0): ga.astype(complex)})
        c0F = c0_functional_arrays(F.astype(complex), ga.astype(complex),
                                   grid, kp, aq, "zero")
        j1_0 = c0_functional_arrays(mu3.astype(complex), ga.astype(complex),
                                    grid, kp, aq, "zero")
        j1_0w = c0_functional_arrays(mu3.astype(complex),
                                     (w_gh * ga).astype(complex),
                                     grid, kp, aq, "zero")
        j1_g = c0_functional_arrays(mu3.astype(complex), ga.astype(complex),
                                    grid, kp, aq, "gamma")
        cgF = c0_functional_arrays(F.astype(complex), ga.astype(complex),
                                   grid, kp, aq, "gamma")
        l2 = grid.l2(ga) ** 2
        l2g = grid.l2(ga * w_gh) ** 2
        hs = weighted_sobolev(ga, grid, NormSpec(beta=kp.s)) ** 2
        qfg = float(np.real(q_weak(Ff, g, g, kp, aq)))
        fits["B1_upper"] = max(fits["B1_upper"],
                               c0F / (f1_2s * (j1_0 + l2)))
        fits["B2_upper"] = max(fits["B2_upper"],
                               cgF / (f1_mx * (j1_0w + l2g)))
        fits["B3_upper"] = max(fits["B3_upper"],
                               max(-qfg, 0.0) / (f1_mx * (j1_0w + l2g)))
        fits["B4_lower_Cf"] = max(fits["B4_lower_Cf"], j1_0 / (c0F + l2))
        fits["B6_C"] = max(fits["B6_C"],
                           abs(qfg) / (f2_4 * np.sqrt(j1_0w + l2g)
                                       * np.sqrt(j1_0w
                                                 + weighted_sobolev(
                                                     ga, grid,
                                                     NormSpec(k=kp.s + kp.gamma / 2)) ** 2)))
        fits["remark_equiv_fwd"] = max(fits["remark_equiv_fwd"],
                                       j1_g / (j1_0w + l2g))
        fits["remark_equiv_bwd"] = max(fits["remark_equiv_bwd"],
                                       j1_0w / (j1_g + l2g))
    passed = np.isfinite(ident_rel) and all(np.isfinite(v) for v in fits.values())
    return EstimateReport(
        name="j1_family", tier="fitted", seed=seed, n_samples=n_samples,
        sample_desc="versioned family; F = mu + bump",
        stats={"fourier_identity_rel": float(ident_rel)},
        fitted={**{k: float(v) for k, v in fits.items()}, "b0": kp.b0},
        passed=bool(passed),
        tolerances={"identity_target": 1e-3})


def verify_lemma_a2(grid: VelocityGrid, s: float, n_samples: int = 200,
                    seed: int = 7, radius_cells: int = 8) -> EstimateReport:
    """Positive/negative part sandwich with the explicit constants 1/2 and 2,
    using the Gagliardo double-sum realization of the H^s norm."""
    fam = test_family(grid, seed, n_samples)
    worst_lo, worst_hi = np.inf, 0.0
    for fa in fam:
        hp, hm = pos_neg_parts(fa)
        tot = hs_sq_gagliardo(fa, grid, s, radius_cells)
        parts = (hs_sq_gagliardo(hp, grid, s, radius_cells)
                 + hs_sq_gagliardo(hm, grid, s, radius_cells))
        worst_lo = min(worst_lo, parts / tot)
        worst_hi = max(worst_hi, parts / tot)
    ok = worst_lo >= 0.5 - 1e-12 and worst_hi <= 2.0 + 1e-12
    return EstimateReport(
        name="pos_neg_sandwich", tier="explicit", seed=seed,
        n_samples=n_samples,
        sample_desc=f"s={s}, Gagliardo radius {radius_cells} cells",
        stats={"min_ratio": float(worst_lo), "max_ratio": float(worst_hi)},
        bound=2.0, passed=bool(ok),
        tolerances={"sandwich": "verbatim [1/2, 2]"})


def verify_norm_equivalence(grid: VelocityGrid, n_samples: int = 200,
                            seed: int = 8, alpha: float = 1.5,
                            theta: float = 0.75) -> EstimateReport:
    """Weight/derivative commutation equivalence with the fitted constant."""
    fam = test_family(grid, seed, n_samples)
    spec = NormSpec(beta=theta, k=alpha)
    ratios = []
    for fa in fam:
        n1 = weighted_sobolev(fa, grid, spec)       # <D>^t <v>^a f
        n2 = sobolev_then_weight(fa, grid, spec)    # <v>^a <D>^t f
        ratios.append(n1 / n2)
    lo, hi = float(np.min(ratios)), float(np.max(ratios))
    C = max(hi, 1.0 / lo)
    return EstimateReport(
        name="weight_derivative_equivalence", tier="fitted", seed=seed,
        n_samples=n_samples,
        sample_desc=f"alpha={alpha}, theta={theta}",
        fitted={"C": C, "ratio_range": [lo, hi]},
        passed=bool(np.isfinite(C) and C < 10.0),
        tolerances={"C_below": 10.0})


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def run_suite(suite: str, grid: VelocityGrid, kp: KernelParams,
              aq: AngularQuadrature, seed: int = 7) -> list[EstimateReport]:
    """Named verification suites driven by the CLI."""
    reports: list[EstimateReport] = []
    ms = MultiplierSymbol(s=kp.s, delta=0.5, eps=min(0.2, (1 - kp.s) / (2 * kp.s) * 0.5),
                          T=0.7, ell=(1, 0, 0))
    if suite in ("exact", "all"):
        reports.append(verify_weight_expansion(k=10, seed=seed))
        reports.append(multiplier_checks(ms, seed=seed))
    if suite in ("explicit", "all"):
        reports.append(verify_weight_diff_bound(seed=seed))
        reports.append(verify_ukai(seed=seed))
        reports.append(verify_lemma_a2(grid, kp.s, seed=seed))
    if suite in ("constants", "all"):
        reports.append(verify_constants(kp, aq, Lv=grid.Lv))
        kp2 = KernelParams(gamma=0.5, s=kp.s, b0=kp.b0, theta_min=kp.theta_min)
        from .grids import build_angular
        aq2 = build_angular(kp2, aq.n_theta, aq.n_phi)
        reports.append(verify_constants(kp2, aq2, Lv=grid.Lv))
    if suite in ("fitted", "all"):
        reports.append(verify_coercivity(grid, kp, aq, seed=seed))
        reports.append(verify_trilinear(grid, kp, aq, seed=seed))
        reports.append(verify_j1_family(grid, kp, aq, seed=seed))
        reports.append(verify_norm_equivalence(grid, seed=seed))
    if not reports:
        raise ValueError(f"unknown suite {suite!r}")
    return reports
