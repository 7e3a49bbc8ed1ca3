"""Numba implementations of the hot collision-integral loops.

Shared geometry: the double velocity integral is organized as a loop over
integer displacements d = v* - v, so the sigma-sphere geometry, trilinear
stencil offsets, and fractional weights are computed once per (d, sigma) and
reused across every lattice node v.  Post-collision points:

    v' = v + o',   v*' = v + d - o',
    o' = (d/2)(1 - cos t) + (|d|/2) sin t (cos p e1 + sin p e2),

with (e1, e2) an orthonormal frame normal to d.  Gauge weighting uses the
exact identity mu(v') mu(v*') = mu(v) mu(v+d), so the Maxwellian never needs
to be evaluated off-lattice.

Out-of-lattice reads are zero: fields are required to decay below tolerance
at the box boundary.
"""

import numpy as np
from numba import njit, prange
from numba import config as _nb_config

NTHREADS = int(_nb_config.NUMBA_NUM_THREADS)

# arguments shared by most kernels:
#   phi_d : (2n-1,)^3 kinetic factor per displacement, phi_d[dx+n-1, ...]
#   sc, sa1, sa2, wb : flattened sigma rule (cos t, sin t cos p, sin t sin p,
#                      weight including b(cos t) dsigma)


@njit(cache=True, inline="always")
def _frame(dx, dy, dz, dn):
    """Orthonormal (e1, e2) normal to d, chosen deterministically."""
    ux, uy, uz = dx / dn, dy / dn, dz / dn
    ax, ay, az = abs(ux), abs(uy), abs(uz)
    # axis least aligned with d
    if ax <= ay and ax <= az:
        bx, by, bz = 1.0, 0.0, 0.0
    elif ay <= az:
        bx, by, bz = 0.0, 1.0, 0.0
    else:
        bx, by, bz = 0.0, 0.0, 1.0
    e1x = by * uz - bz * uy
    e1y = bz * ux - bx * uz
    e1z = bx * uy - by * ux
    nrm = np.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
    e1x, e1y, e1z = e1x / nrm, e1y / nrm, e1z / nrm
    e2x = uy * e1z - uz * e1y
    e2y = uz * e1x - ux * e1z
    e2z = ux * e1y - uy * e1x
    return e1x, e1y, e1z, e2x, e2y, e2z


@njit(cache=True)
def _sigma_tables(dxp, dyp, dzp, h, sc, sa1, sa2):
    """Per-sigma stencil tables for one displacement d (physical components).

    Returns int base offsets and fractional parts for v' and v*' reads.
    """
    nq = sc.shape[0]
    mofs = np.empty((nq, 6), np.int64)
    frac = np.empty((nq, 6), np.float64)
    dn = np.sqrt(dxp * dxp + dyp * dyp + dzp * dzp)
    e1x, e1y, e1z, e2x, e2y, e2z = _frame(dxp, dyp, dzp, dn)
    for q in range(nq):
        c = 0.5 * (1.0 - sc[q])
        r = 0.5 * dn
        ox = c * dxp + r * (sa1[q] * e1x + sa2[q] * e2x)
        oy = c * dyp + r * (sa1[q] * e1y + sa2[q] * e2y)
        oz = c * dzp + r * (sa1[q] * e1z + sa2[q] * e2z)
        for axi, o in enumerate((ox, oy, oz)):
            g = o / h
            m = int(np.floor(g))
            mofs[q, axi] = m
            frac[q, axi] = g - m
        for axi, o in enumerate((dxp - ox, dyp - oy, dzp - oz)):
            g = o / h
            m = int(np.floor(g))
            mofs[q, 3 + axi] = m
            frac[q, 3 + axi] = g - m
    return mofs, frac


@njit(cache=True, inline="always")
def _interp_c(F, bx, by, bz, tx, ty, tz, n):
    """Trilinear read of a complex array; zero when the cell leaves the lattice."""
    if bx < 0 or by < 0 or bz < 0 or bx > n - 2 or by > n - 2 or bz > n - 2:
        return 0.0 + 0.0j
    sx, sy, sz = 1.0 - tx, 1.0 - ty, 1.0 - tz
    return (
        sx * (sy * (sz * F[bx, by, bz] + tz * F[bx, by, bz + 1])
              + ty * (sz * F[bx, by + 1, bz] + tz * F[bx, by + 1, bz + 1]))
        + tx * (sy * (sz * F[bx + 1, by, bz] + tz * F[bx + 1, by, bz + 1])
                + ty * (sz * F[bx + 1, by + 1, bz] + tz * F[bx + 1, by + 1, bz + 1]))
    )


@njit(cache=True, parallel=True)
def q_bilinear(Ff, Fg, mu3, gauge, phi_d, sc, sa1, sa2, wb, h, out,
               vsq=None, rc2=0.0):
    """Strong-form Q(f, g) on the lattice.

    Ff, Fg are f, g themselves (gauge=False) or f/mu, g/mu (gauge=True); out
    accumulates mu-weighted gain minus loss, scaled by h^3 at the end.
    Passing (vsq, rc2 > 0) skips node pairs with either endpoint outside the
    radius rc (valid when both fields are negligible there).
    """
    n = Ff.shape[0]
    nq = sc.shape[0]
    use_rc = rc2 > 0.0 and vsq is not None
    bsum = 0.0
    for q in range(nq):
        bsum += wb[q]
    out[:, :, :] = 0.0 + 0.0j
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi == 0.0:
                    continue
                mofs, frac = _sigma_tables(dx * h, dy * h, dz * h, h, sc, sa1, sa2)
                x0 = max(0, -dx)
                x1 = min(n, n - dx)
                y0 = max(0, -dy)
                y1 = min(n, n - dy)
                z0 = max(0, -dz)
                z1 = min(n, n - dz)
                for ix in prange(x0, x1):
                    jx = ix + dx
                    for iy in range(y0, y1):
                        jy = iy + dy
                        for iz in range(z0, z1):
                            jz = iz + dz
                            if use_rc and (vsq[ix, iy, iz] > rc2
                                           or vsq[jx, jy, jz] > rc2):
                                continue
                            w = mu3[ix, iy, iz] * mu3[jx, jy, jz] if gauge else 1.0
                            acc = -bsum * Ff[jx, jy, jz] * Fg[ix, iy, iz]
                            for q in range(nq):
                                gv = _interp_c(Fg, ix + mofs[q, 0], iy + mofs[q, 1],
                                               iz + mofs[q, 2], frac[q, 0], frac[q, 1],
                                               frac[q, 2], n)
                                fv = _interp_c(Ff, ix + mofs[q, 3], iy + mofs[q, 4],
                                               iz + mofs[q, 5], frac[q, 3], frac[q, 4],
                                               frac[q, 5], n)
                                acc += wb[q] * fv * gv
                            out[ix, iy, iz] += phi * w * acc
    out *= h ** 3


@njit(cache=True, parallel=True)
def q_bilinear_real(Ff, Fg, mu3, gauge, phi_d, sc, sa1, sa2, wb, h, out,
                    vsq=None, rc2=0.0):
    """Real-field variant of `q_bilinear` (same semantics, half the traffic)."""
    n = Ff.shape[0]
    nq = sc.shape[0]
    use_rc = rc2 > 0.0 and vsq is not None
    bsum = 0.0
    for q in range(nq):
        bsum += wb[q]
    out[:, :, :] = 0.0
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi == 0.0:
                    continue
                mofs, frac = _sigma_tables(dx * h, dy * h, dz * h, h, sc, sa1, sa2)
                x0 = max(0, -dx)
                x1 = min(n, n - dx)
                y0 = max(0, -dy)
                y1 = min(n, n - dy)
                z0 = max(0, -dz)
                z1 = min(n, n - dz)
                for ix in prange(x0, x1):
                    jx = ix + dx
                    for iy in range(y0, y1):
                        jy = iy + dy
                        for iz in range(z0, z1):
                            jz = iz + dz
                            if use_rc and (vsq[ix, iy, iz] > rc2
                                           or vsq[jx, jy, jz] > rc2):
                                continue
                            w = mu3[ix, iy, iz] * mu3[jx, jy, jz] if gauge else 1.0
                            acc = -bsum * Ff[jx, jy, jz] * Fg[ix, iy, iz]
                            for q in range(nq):
                                gv = _interp_r(Fg, ix + mofs[q, 0], iy + mofs[q, 1],
                                               iz + mofs[q, 2], frac[q, 0], frac[q, 1],
                                               frac[q, 2], n)
                                fv = _interp_r(Ff, ix + mofs[q, 3], iy + mofs[q, 4],
                                               iz + mofs[q, 5], frac[q, 3], frac[q, 4],
                                               frac[q, 5], n)
                                acc += wb[q] * fv * gv
                            out[ix, iy, iz] += phi * w * acc
    out *= h ** 3


@njit(cache=True, inline="always")
def _interp_r_periodic(F, bx, by, bz, tx, ty, tz, n):
    """Trilinear read with periodic index wrap (torus velocity box)."""
    bx %= n
    by %= n
    bz %= n
    cx = bx + 1 if bx + 1 < n else 0
    cy = by + 1 if by + 1 < n else 0
    cz = bz + 1 if bz + 1 < n else 0
    sx, sy, sz = 1.0 - tx, 1.0 - ty, 1.0 - tz
    return (
        sx * (sy * (sz * F[bx, by, bz] + tz * F[bx, by, cz])
              + ty * (sz * F[bx, cy, bz] + tz * F[bx, cy, cz]))
        + tx * (sy * (sz * F[cx, by, bz] + tz * F[cx, by, cz])
                + ty * (sz * F[cx, cy, bz] + tz * F[cx, cy, cz]))
    )


@njit(cache=True, parallel=True)
def q_bilinear_periodic_real(Ff, Fg, mu3, gauge, phi_d, sc, sa1, sa2, wb, h,
                             out, vsq, rc2):
    """Periodized-box variant of `q_bilinear_real`: field reads wrap around,
    matching the Fourier-side evaluation exactly in structure (valid when the
    kinetic-factor support is smaller than the box and fields decay at the
    faces)."""
    n = Ff.shape[0]
    nq = sc.shape[0]
    use_rc = rc2 > 0.0
    bsum = 0.0
    for q in range(nq):
        bsum += wb[q]
    out[:, :, :] = 0.0
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi == 0.0:
                    continue
                mofs, frac = _sigma_tables(dx * h, dy * h, dz * h, h, sc, sa1, sa2)
                for ix in prange(0, n):
                    jx = (ix + dx) % n
                    for iy in range(0, n):
                        jy = (iy + dy) % n
                        for iz in range(0, n):
                            jz = (iz + dz) % n
                            if use_rc and (vsq[ix, iy, iz] > rc2
                                           or vsq[jx, jy, jz] > rc2):
                                continue
                            w = mu3[ix, iy, iz] * mu3[jx, jy, jz] if gauge else 1.0
                            acc = -bsum * Ff[jx, jy, jz] * Fg[ix, iy, iz]
                            for q in range(nq):
                                gv = _interp_r_periodic(
                                    Fg, ix + mofs[q, 0], iy + mofs[q, 1],
                                    iz + mofs[q, 2], frac[q, 0], frac[q, 1],
                                    frac[q, 2], n)
                                fv = _interp_r_periodic(
                                    Ff, ix + mofs[q, 3], iy + mofs[q, 4],
                                    iz + mofs[q, 5], frac[q, 3], frac[q, 4],
                                    frac[q, 5], n)
                                acc += wb[q] * fv * gv
                            out[ix, iy, iz] += phi * w * acc
    out *= h ** 3


@njit(cache=True, parallel=True)
def assemble_l(mu3, phi_d, sc, sa1, sa2, wb, h, inc_mu_h, inc_h_mu, gauge, out):
    """Dense matrix of h -> Q(mu, h) + Q(h, mu).

    gauge=True reads h as mu * trilinear(h/mu) (exact equilibrium structure,
    but tail columns carry 1/mu amplification); gauge=False reads both h and
    mu by plain trilinear interpolation (bounded entries, right for fields
    with algebraic tails).  Row-parallel: every contribution of the
    (v, d, sigma) sweep lands in the row of v.  Matches `q_bilinear` with the
    same gauge flag term by term (same quadrature, same stencils).
    """
    n = mu3.shape[0]
    N = n * n * n
    nq = sc.shape[0]
    bsum = 0.0
    for q in range(nq):
        bsum += wb[q]
    out[:, :] = 0.0
    h3 = h ** 3
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi == 0.0:
                    continue
                mofs, frac = _sigma_tables(dx * h, dy * h, dz * h, h, sc, sa1, sa2)
                x0 = max(0, -dx)
                x1 = min(n, n - dx)
                y0 = max(0, -dy)
                y1 = min(n, n - dy)
                z0 = max(0, -dz)
                z1 = min(n, n - dz)
                for ix in prange(x0, x1):
                    jx = ix + dx
                    for iy in range(y0, y1):
                        jy = iy + dy
                        for iz in range(z0, z1):
                            jz = iz + dz
                            i = (ix * n + iy) * n + iz
                            j = (jx * n + jy) * n + jz
                            wmm = mu3[ix, iy, iz] * mu3[jx, jy, jz] * h3
                            # losses (sigma-independent); matrix acts on
                            # plain node values, so divide the gauge pair
                            # weight by mu at the acted-on node
                            if inc_mu_h:
                                out[i, i] -= bsum * phi * mu3[jx, jy, jz] * h3
                            if inc_h_mu:
                                out[i, j] -= bsum * phi * mu3[ix, iy, iz] * h3
                            for q in range(nq):
                                bgx = ix + mofs[q, 0]
                                bgy = iy + mofs[q, 1]
                                bgz = iz + mofs[q, 2]
                                bfx = ix + mofs[q, 3]
                                bfy = iy + mofs[q, 4]
                                bfz = iz + mofs[q, 5]
                                gin = (0 <= bgx <= n - 2 and 0 <= bgy <= n - 2
                                       and 0 <= bgz <= n - 2)
                                fin = (0 <= bfx <= n - 2 and 0 <= bfy <= n - 2
                                       and 0 <= bfz <= n - 2)
                                if not (gin and fin):
                                    continue
                                if gauge:
                                    f_mu_h = wb[q] * phi * wmm
                                    f_h_mu = f_mu_h
                                else:
                                    # plain: interpolated Maxwellian at the
                                    # point not carrying h
                                    mug = _interp_r(mu3, bgx, bgy, bgz,
                                                    frac[q, 0], frac[q, 1],
                                                    frac[q, 2], n)
                                    muf = _interp_r(mu3, bfx, bfy, bfz,
                                                    frac[q, 3], frac[q, 4],
                                                    frac[q, 5], n)
                                    f_mu_h = wb[q] * phi * h3 * muf
                                    f_h_mu = wb[q] * phi * h3 * mug
                                # Q(mu, h): h interpolated at v'
                                if inc_mu_h:
                                    tx, ty, tz = frac[q, 0], frac[q, 1], frac[q, 2]
                                    sx, sy, sz = 1.0 - tx, 1.0 - ty, 1.0 - tz
                                    for a in range(8):
                                        cx = bgx + (a >> 2)
                                        cy = bgy + ((a >> 1) & 1)
                                        cz = bgz + (a & 1)
                                        wa = ((tx if a >> 2 else sx)
                                              * (ty if (a >> 1) & 1 else sy)
                                              * (tz if a & 1 else sz))
                                        c = (cx * n + cy) * n + cz
                                        if gauge:
                                            out[i, c] += f_mu_h * wa / mu3[cx, cy, cz]
                                        else:
                                            out[i, c] += f_mu_h * wa
                                # Q(h, mu): h interpolated at v*'
                                if inc_h_mu:
                                    tx, ty, tz = frac[q, 3], frac[q, 4], frac[q, 5]
                                    sx, sy, sz = 1.0 - tx, 1.0 - ty, 1.0 - tz
                                    for a in range(8):
                                        cx = bfx + (a >> 2)
                                        cy = bfy + ((a >> 1) & 1)
                                        cz = bfz + (a & 1)
                                        wa = ((tx if a >> 2 else sx)
                                              * (ty if (a >> 1) & 1 else sy)
                                              * (tz if a & 1 else sz))
                                        c = (cx * n + cy) * n + cz
                                        if gauge:
                                            out[i, c] += f_h_mu * wa / mu3[cx, cy, cz]
                                        else:
                                            out[i, c] += f_h_mu * wa


@njit(cache=True, parallel=True)
def assemble_lmu_gram(mu3, phi_d, sc, sa1, sa2, wb, h, out):
    """Gaussian-weighted linearized operator via its Dirichlet form.

    <L^(mu) h, g> = -1/4 iiint b Phi mu mu_* (H'+H*'-H-H_*)(G'+G*'-G-G_*),
    H = h/sqrt(mu).  Assembled as a Gram sum, so the matrix is exactly
    symmetric and <L^(mu) h, h> <= 0 holds to roundoff by construction.
    """
    n = mu3.shape[0]
    N = n * n * n
    nq = sc.shape[0]
    nthreads = NTHREADS
    buf = np.zeros((nthreads, N, N), np.float64)
    smu = np.sqrt(mu3)
    h3 = h ** 3
    for tid in prange(nthreads):
        idxs = np.empty(18, np.int64)
        vals = np.empty(18, np.float64)
        for ix in range(tid, n, nthreads):
            for dx in range(-(n - 1), n):
                jx = ix + dx
                if jx < 0 or jx >= n:
                    continue
                for dy in range(-(n - 1), n):
                    for dz in range(-(n - 1), n):
                        phi0 = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                        if phi0 == 0.0:
                            continue
                        mofs, frac = _sigma_tables(dx * h, dy * h, dz * h, h,
                                                   sc, sa1, sa2)
                        y0 = max(0, -dy)
                        y1 = min(n, n - dy)
                        z0 = max(0, -dz)
                        z1 = min(n, n - dz)
                        for iy in range(y0, y1):
                            jy = iy + dy
                            for iz in range(z0, z1):
                                jz = iz + dz
                                i = (ix * n + iy) * n + iz
                                j = (jx * n + jy) * n + jz
                                kmm = (mu3[ix, iy, iz] * mu3[jx, jy, jz]
                                       * phi0 * h3 * 0.25)
                                for q in range(nq):
                                    m = 0
                                    idxs[m] = i
                                    vals[m] = 1.0 / smu[ix, iy, iz]
                                    m += 1
                                    idxs[m] = j
                                    vals[m] = 1.0 / smu[jx, jy, jz]
                                    m += 1
                                    for half in range(2):
                                        bx = ix + mofs[q, 3 * half]
                                        by = iy + mofs[q, 3 * half + 1]
                                        bz = iz + mofs[q, 3 * half + 2]
                                        if (bx < 0 or by < 0 or bz < 0
                                                or bx > n - 2 or by > n - 2
                                                or bz > n - 2):
                                            continue
                                        tx = frac[q, 3 * half]
                                        ty = frac[q, 3 * half + 1]
                                        tz = frac[q, 3 * half + 2]
                                        sx, sy, sz = 1.0 - tx, 1.0 - ty, 1.0 - tz
                                        for a in range(8):
                                            cx = bx + (a >> 2)
                                            cy = by + ((a >> 1) & 1)
                                            cz = bz + (a & 1)
                                            wa = ((tx if a >> 2 else sx)
                                                  * (ty if (a >> 1) & 1 else sy)
                                                  * (tz if a & 1 else sz))
                                            idxs[m] = (cx * n + cy) * n + cz
                                            vals[m] = -wa / smu[cx, cy, cz]
                                            m += 1
                                    f = kmm * wb[q]
                                    for a in range(m):
                                        fa = f * vals[a]
                                        ia = idxs[a]
                                        for bq in range(m):
                                            buf[tid, ia, idxs[bq]] -= fa * vals[bq]
    out[:, :] = buf[0]
    for tid in range(1, nthreads):
        out += buf[tid]


@njit(cache=True, parallel=True)
def conservation_weak(f, phi_d, sc, sa1, sa2, wb, axis, h):
    """Symmetrized weak form of Q(f, f) against {1, v1, v2, v3, |v|^2}.

    Test functions are evaluated analytically at the exact post-collision
    points, so momentum and energy brackets vanish pointwise to roundoff.
    """
    n = f.shape[0]
    nq = sc.shape[0]
    part = np.zeros((n, 5), np.complex128)
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi0 = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi0 == 0.0:
                    continue
                dxp, dyp, dzp = dx * h, dy * h, dz * h
                dn = np.sqrt(dxp * dxp + dyp * dyp + dzp * dzp)
                e1x, e1y, e1z, e2x, e2y, e2z = _frame(dxp, dyp, dzp, dn)
                x0 = max(0, -dx)
                x1 = min(n, n - dx)
                y0 = max(0, -dy)
                y1 = min(n, n - dy)
                z0 = max(0, -dz)
                z1 = min(n, n - dz)
                for ix in prange(x0, x1):
                    jx = ix + dx
                    vx = axis[ix]
                    for iy in range(y0, y1):
                        jy = iy + dy
                        vy = axis[iy]
                        for iz in range(z0, z1):
                            jz = iz + dz
                            vz = axis[iz]
                            ff = f[jx, jy, jz] * f[ix, iy, iz] * phi0
                            vsx = vx + dxp
                            vsy = vy + dyp
                            vsz = vz + dzp
                            en0 = (vx * vx + vy * vy + vz * vz
                                   + vsx * vsx + vsy * vsy + vsz * vsz)
                            for q in range(nq):
                                c = 0.5 * (1.0 - sc[q])
                                r = 0.5 * dn
                                ox = c * dxp + r * (sa1[q] * e1x + sa2[q] * e2x)
                                oy = c * dyp + r * (sa1[q] * e1y + sa2[q] * e2y)
                                oz = c * dzp + r * (sa1[q] * e1z + sa2[q] * e2z)
                                px = vx + ox
                                py = vy + oy
                                pz = vz + oz
                                psx = vsx - ox
                                psy = vsy - oy
                                psz = vsz - oz
                                wq = wb[q] * ff * 0.5
                                part[ix, 1] += wq * (px + psx - vx - vsx)
                                part[ix, 2] += wq * (py + psy - vy - vsy)
                                part[ix, 3] += wq * (pz + psz - vz - vsz)
                                part[ix, 4] += wq * (px * px + py * py + pz * pz
                                                     + psx * psx + psy * psy
                                                     + psz * psz - en0)
    res = np.zeros(5, np.complex128)
    for ix in range(n):
        for m in range(5):
            res[m] += part[ix, m]
    return res * h ** 6


@njit(cache=True, parallel=True)
def weak_form(F, G, H, phi_d, sc, sa1, sa2, wb, h):
    """iiint b Phi F(v*) G(v) (H(v') - H(v)); H read by plain interpolation."""
    n = F.shape[0]
    nq = sc.shape[0]
    part = np.zeros(n, np.complex128)
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi0 = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi0 == 0.0:
                    continue
                mofs, frac = _sigma_tables(dx * h, dy * h, dz * h, h, sc, sa1, sa2)
                x0 = max(0, -dx)
                x1 = min(n, n - dx)
                y0 = max(0, -dy)
                y1 = min(n, n - dy)
                z0 = max(0, -dz)
                z1 = min(n, n - dz)
                for ix in prange(x0, x1):
                    jx = ix + dx
                    for iy in range(y0, y1):
                        jy = iy + dy
                        for iz in range(z0, z1):
                            jz = iz + dz
                            fg = F[jx, jy, jz] * G[ix, iy, iz] * phi0
                            hv = H[ix, iy, iz]
                            acc = 0.0 + 0.0j
                            for q in range(nq):
                                bx = ix + mofs[q, 0]
                                by = iy + mofs[q, 1]
                                bz = iz + mofs[q, 2]
                                if (bx < 0 or by < 0 or bz < 0 or bx > n - 2
                                        or by > n - 2 or bz > n - 2):
                                    continue      # off-lattice: treat h' = h
                                hp = _interp_c(H, bx, by, bz, frac[q, 0],
                                               frac[q, 1], frac[q, 2], n)
                                acc += wb[q] * (hp - hv)
                            part[ix] += fg * acc
    tot = 0.0 + 0.0j
    for ix in range(n):
        tot += part[ix]
    return tot * h ** 6


@njit(cache=True, parallel=True)
def weak_form_gauge(F, G, R, mu3, axis, phi_d, sc, sa1, sa2, wb, h):
    """iiint b Phi F(v*) G(v) (H(v') - H(v)) with H = mu * R read in the
    Maxwellian gauge: H(v') = mu(v') * trilinear(R)(v'), mu evaluated exactly
    through per-offset axis exponentials."""
    n = F.shape[0]
    nq = sc.shape[0]
    part = np.zeros(n, np.complex128)
    norm_mu = (2.0 * np.pi) ** (-1.5)
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi0 = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi0 == 0.0:
                    continue
                dxp, dyp, dzp = dx * h, dy * h, dz * h
                dn = np.sqrt(dxp * dxp + dyp * dyp + dzp * dzp)
                e1x, e1y, e1z, e2x, e2y, e2z = _frame(dxp, dyp, dzp, dn)
                mofs = np.empty((nq, 3), np.int64)
                frac = np.empty((nq, 3), np.float64)
                # exp(-axis * o_a) per sigma node and axis component
                ex = np.empty((nq, 3, n), np.float64)
                s0 = np.empty(nq, np.float64)
                for q in range(nq):
                    c = 0.5 * (1.0 - sc[q])
                    r = 0.5 * dn
                    ox = c * dxp + r * (sa1[q] * e1x + sa2[q] * e2x)
                    oy = c * dyp + r * (sa1[q] * e1y + sa2[q] * e2y)
                    oz = c * dzp + r * (sa1[q] * e1z + sa2[q] * e2z)
                    s0[q] = np.exp(-0.5 * (ox * ox + oy * oy + oz * oz))
                    for axi, o in enumerate((ox, oy, oz)):
                        gq = o / h
                        m = int(np.floor(gq))
                        mofs[q, axi] = m
                        frac[q, axi] = gq - m
                        for i in range(n):
                            ex[q, axi, i] = np.exp(-axis[i] * o)
                x0 = max(0, -dx)
                x1 = min(n, n - dx)
                y0 = max(0, -dy)
                y1 = min(n, n - dy)
                z0 = max(0, -dz)
                z1 = min(n, n - dz)
                for ix in prange(x0, x1):
                    jx = ix + dx
                    for iy in range(y0, y1):
                        jy = iy + dy
                        for iz in range(z0, z1):
                            jz = iz + dz
                            fg = F[jx, jy, jz] * G[ix, iy, iz] * phi0
                            vsq = (axis[ix] * axis[ix] + axis[iy] * axis[iy]
                                   + axis[iz] * axis[iz])
                            mu_v = norm_mu * np.exp(-0.5 * vsq)
                            hv = mu_v * R[ix, iy, iz]
                            acc = 0.0 + 0.0j
                            for q in range(nq):
                                bx = ix + mofs[q, 0]
                                by = iy + mofs[q, 1]
                                bz = iz + mofs[q, 2]
                                if (bx < 0 or by < 0 or bz < 0 or bx > n - 2
                                        or by > n - 2 or bz > n - 2):
                                    continue
                                rp = _interp_c(R, bx, by, bz, frac[q, 0],
                                               frac[q, 1], frac[q, 2], n)
                                mu_p = (mu_v * s0[q] * ex[q, 0, ix]
                                        * ex[q, 1, iy] * ex[q, 2, iz])
                                acc += wb[q] * (mu_p * rp - hv)
                            part[ix] += fg * acc
    tot = 0.0 + 0.0j
    for ix in range(n):
        tot += part[ix]
    return tot * h ** 6


@njit(cache=True, parallel=True)
def quad_diff(F, G, phi_d, sc, sa1, sa2, wb, h):
    """iiint b Phi F(v*) |G(v') - G(v)|^2 with plain interpolation of G."""
    n = F.shape[0]
    nq = sc.shape[0]
    part = np.zeros(n, np.float64)
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi0 = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi0 == 0.0:
                    continue
                mofs, frac = _sigma_tables(dx * h, dy * h, dz * h, h, sc, sa1, sa2)
                x0 = max(0, -dx)
                x1 = min(n, n - dx)
                y0 = max(0, -dy)
                y1 = min(n, n - dy)
                z0 = max(0, -dz)
                z1 = min(n, n - dz)
                for ix in prange(x0, x1):
                    jx = ix + dx
                    for iy in range(y0, y1):
                        jy = iy + dy
                        for iz in range(z0, z1):
                            jz = iz + dz
                            fs = F[jx, jy, jz].real * phi0
                            gv = G[ix, iy, iz]
                            acc = 0.0
                            for q in range(nq):
                                bx = ix + mofs[q, 0]
                                by = iy + mofs[q, 1]
                                bz = iz + mofs[q, 2]
                                if (bx < 0 or by < 0 or bz < 0 or bx > n - 2
                                        or by > n - 2 or bz > n - 2):
                                    continue      # off-lattice: treat g' = g
                                gp = _interp_c(G, bx, by, bz, frac[q, 0],
                                               frac[q, 1], frac[q, 2], n)
                                dgr = (gp - gv).real
                                dgi = (gp - gv).imag
                                acc += wb[q] * (dgr * dgr + dgi * dgi)
                            part[ix] += fs * acc
    tot = 0.0
    for ix in range(n):
        tot += part[ix]
    return tot * h ** 6


@njit(cache=True, parallel=True)
def entropy_quad(g, mu3, phi_d, sc, sa1, sa2, wb, h):
    """Entropy dissipation of F = mu e^g in the sign-exact product form.

    D = 1/4 iiint b Phi mu mu_* (e^(g'+g*') - e^(g+g_*)) ((g'+g*') - (g+g_*)),
    where g is interpolated plainly; both factors share one evaluation, so
    every term is nonnegative and F = mu gives exactly zero.
    """
    n = g.shape[0]
    nq = sc.shape[0]
    part = np.zeros(n, np.float64)
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi0 = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi0 == 0.0:
                    continue
                mofs, frac = _sigma_tables(dx * h, dy * h, dz * h, h, sc, sa1, sa2)
                x0 = max(0, -dx)
                x1 = min(n, n - dx)
                y0 = max(0, -dy)
                y1 = min(n, n - dy)
                z0 = max(0, -dz)
                z1 = min(n, n - dz)
                for ix in prange(x0, x1):
                    jx = ix + dx
                    for iy in range(y0, y1):
                        jy = iy + dy
                        for iz in range(z0, z1):
                            jz = iz + dz
                            wmm = mu3[ix, iy, iz] * mu3[jx, jy, jz] * phi0
                            b0 = g[ix, iy, iz] + g[jx, jy, jz]
                            acc = 0.0
                            for q in range(nq):
                                a1 = _interp_r(g, ix + mofs[q, 0], iy + mofs[q, 1],
                                               iz + mofs[q, 2], frac[q, 0],
                                               frac[q, 1], frac[q, 2], n)
                                a2 = _interp_r(g, ix + mofs[q, 3], iy + mofs[q, 4],
                                               iz + mofs[q, 5], frac[q, 3],
                                               frac[q, 4], frac[q, 5], n)
                                da = a1 + a2 - b0
                                acc += wb[q] * (np.exp(a1 + a2) - np.exp(b0)) * da
                            part[ix] += wmm * acc
    tot = 0.0
    for ix in range(n):
        tot += part[ix]
    return 0.25 * tot * h ** 6


@njit(cache=True, inline="always")
def _interp_r(F, bx, by, bz, tx, ty, tz, n):
    if bx < 0 or by < 0 or bz < 0 or bx > n - 2 or by > n - 2 or bz > n - 2:
        return 0.0
    sx, sy, sz = 1.0 - tx, 1.0 - ty, 1.0 - tz
    return (
        sx * (sy * (sz * F[bx, by, bz] + tz * F[bx, by, bz + 1])
              + ty * (sz * F[bx, by + 1, bz] + tz * F[bx, by + 1, bz + 1]))
        + tx * (sy * (sz * F[bx + 1, by, bz] + tz * F[bx + 1, by, bz + 1])
                + ty * (sz * F[bx + 1, by + 1, bz] + tz * F[bx + 1, by + 1, bz + 1]))
    )


@njit(cache=True, parallel=True)
def gagliardo(f, rad_cells, h, s):
    """Truncated Gagliardo double sum  sum_{0<|d|<=rad} (f(v+d)-f(v))^2 / |d|^(3+2s) h^6."""
    n = f.shape[0]
    part = np.zeros(n, np.float64)
    r2max = rad_cells * rad_cells
    for ix in prange(n):
        for iy in range(n):
            for iz in range(n):
                fv = f[ix, iy, iz]
                acc = 0.0
                for dx in range(-rad_cells, rad_cells + 1):
                    jx = ix + dx
                    if jx < 0 or jx >= n:
                        continue
                    for dy in range(-rad_cells, rad_cells + 1):
                        jy = iy + dy
                        if jy < 0 or jy >= n:
                            continue
                        for dz in range(-rad_cells, rad_cells + 1):
                            r2 = dx * dx + dy * dy + dz * dz
                            if r2 == 0 or r2 > r2max:
                                continue
                            jz = iz + dz
                            if jz < 0 or jz >= n:
                                continue
                            df = f[jx, jy, jz] - fv
                            rr = h * np.sqrt(r2)
                            acc += df * df / rr ** (3.0 + 2.0 * s)
                part[ix] += acc
    tot = 0.0
    for ix in range(n):
        tot += part[ix]
    return tot * h ** 6


@njit(cache=True, parallel=True)
def bobylev_qr(fhat, ghat, modes_out, modes_in, fhat_in, phihat0_in,
               xi_axis, table, rho_max, sc, sa1, sa2, wb, inv_vol, out):
    """Fourier-side weak form of the cutoff part:

    hat Q_R(xi) = sum_{xi*} int_b b(xihat.sigma) [PhiRhat(xi*-xi^-) - PhiRhat(xi*)]
                  hat f(xi*) hat g(xi - xi*) dsigma / (2 Lv)^3,

    with xi^- = (xi - |xi| sigma)/2 and PhiRhat from a fine radial table.
    """
    n = xi_axis.shape[0]
    nq = sc.shape[0]
    nin = modes_in.shape[0]
    nt = table.shape[0]
    drho = rho_max / (nt - 1)
    half = n // 2
    for io in prange(modes_out.shape[0]):
        kx, ky, kz = modes_out[io, 0], modes_out[io, 1], modes_out[io, 2]
        xix = xi_axis[kx % n]
        xiy = xi_axis[ky % n]
        xiz = xi_axis[kz % n]
        xin = np.sqrt(xix * xix + xiy * xiy + xiz * xiz)
        if xin == 0.0:
            out[io] = 0.0 + 0.0j
            continue
        e1x, e1y, e1z, e2x, e2y, e2z = _frame(xix, xiy, xiz, xin)
        acc = 0.0 + 0.0j
        for q in range(nq):
            # sigma with xi as the north pole; xi^- = (xi - |xi| sigma)/2
            sxx = sc[q] * xix / xin + sa1[q] * e1x + sa2[q] * e2x
            sxy = sc[q] * xiy / xin + sa1[q] * e1y + sa2[q] * e2y
            sxz = sc[q] * xiz / xin + sa1[q] * e1z + sa2[q] * e2z
            xmx = 0.5 * (xix - xin * sxx)
            xmy = 0.5 * (xiy - xin * sxy)
            xmz = 0.5 * (xiz - xin * sxz)
            accq = 0.0 + 0.0j
            for m in range(nin):
                mx, my, mz = modes_in[m, 0], modes_in[m, 1], modes_in[m, 2]
                gx = kx - mx
                gy = ky - my
                gz = kz - mz
                if (gx < -half or gx >= half or gy < -half or gy >= half
                        or gz < -half or gz >= half):
                    continue
                zx = xi_axis[mx % n] - xmx
                zy = xi_axis[my % n] - xmy
                zz = xi_axis[mz % n] - xmz
                rho = np.sqrt(zx * zx + zy * zy + zz * zz)
                u = rho / drho
                iu = int(u)
                if iu >= nt - 1:
                    pz = table[nt - 1]
                else:
                    fu = u - iu
                    pz = table[iu] * (1.0 - fu) + table[iu + 1] * fu
                gval = ghat[gx % n, gy % n, gz % n]
                accq += (pz - phihat0_in[m]) * fhat_in[m] * gval
            acc += wb[q] * accq
        out[io] = acc * inv_vol
