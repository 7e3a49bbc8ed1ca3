"""Pure-numpy reference implementations of the hot kernels.

Same quadrature, same stencils, same zero-outside-lattice conventions as the
numba backend; the velocity loop is vectorized with array slices while the
(displacement, sigma) loops stay in Python.  Intended for small lattices:
correctness reference, benchmark baseline, and numba-free installs.
"""

import numpy as np

from .grids import frame_normal_to


def _sigma_offset(dphys, dn, e1, e2, sc, sa1, sa2, q):
    c = 0.5 * (1.0 - sc[q])
    r = 0.5 * dn
    return c * dphys + r * (sa1[q] * e1 + sa2[q] * e2)


def _interp_box(F, box, m, t):
    """Trilinear read of F at (v + offset) for all v in box; zero when the
    stencil cell leaves the lattice."""
    n = F.shape[0]
    (x0, x1, y0, y1, z0, z1) = box
    out = np.zeros((x1 - x0, y1 - y0, z1 - z0), dtype=F.dtype)
    lo = [max(b, -mm) for b, mm in zip((x0, y0, z0), m)]
    hi = [min(b, n - 1 - mm) for b, mm in zip((x1, y1, z1), m)]
    if any(l >= h for l, h in zip(lo, hi)):
        return out
    sl_rel = tuple(slice(l - b, h - b) for l, h, b in zip(lo, hi, (x0, y0, z0)))
    acc = np.zeros(tuple(h - l for l, h in zip(lo, hi)), dtype=F.dtype)
    w1 = (1.0 - t[0], t[0])
    w2 = (1.0 - t[1], t[1])
    w3 = (1.0 - t[2], t[2])
    for a in range(8):
        ax, ay, az = a >> 2, (a >> 1) & 1, a & 1
        w = w1[ax] * w2[ay] * w3[az]
        sl = tuple(slice(l + mm + o, h + mm + o)
                   for l, h, mm, o in zip(lo, hi, m, (ax, ay, az)))
        acc += w * F[sl]
    out[sl_rel] = acc
    return out


def _boxes(n, d):
    dx, dy, dz = d
    x0, x1 = max(0, -dx), min(n, n - dx)
    y0, y1 = max(0, -dy), min(n, n - dy)
    z0, z1 = max(0, -dz), min(n, n - dz)
    if x0 >= x1 or y0 >= y1 or z0 >= z1:
        return None, None
    bi = (x0, x1, y0, y1, z0, z1)
    bj = (x0 + dx, x1 + dx, y0 + dy, y1 + dy, z0 + dz, z1 + dz)
    return bi, bj


def _sl(box):
    return (slice(box[0], box[1]), slice(box[2], box[3]), slice(box[4], box[5]))


def _d_iter(n, phi_d):
    for dx in range(-(n - 1), n):
        for dy in range(-(n - 1), n):
            for dz in range(-(n - 1), n):
                phi = phi_d[dx + n - 1, dy + n - 1, dz + n - 1]
                if phi != 0.0:
                    yield (dx, dy, dz), phi


def _geom(d, h, sc, sa1, sa2):
    dphys = np.array(d, dtype=float) * h
    dn = float(np.linalg.norm(dphys))
    e1, e2 = frame_normal_to(dphys)
    tabs = []
    for q in range(len(sc)):
        o = _sigma_offset(dphys, dn, e1, e2, sc, sa1, sa2, q)
        g1 = o / h
        m1 = np.floor(g1).astype(int)
        t1 = g1 - m1
        g2 = (dphys - o) / h
        m2 = np.floor(g2).astype(int)
        t2 = g2 - m2
        tabs.append((m1, t1, m2, t2))
    return tabs


def q_bilinear(Ff, Fg, mu3, gauge, phi_d, sc, sa1, sa2, wb, h, out,
               vsq=None, rc2=0.0):
    n = Ff.shape[0]
    bsum = float(np.sum(wb))
    out[:] = 0.0
    for d, phi in _d_iter(n, phi_d):
        bi, bj = _boxes(n, d)
        if bi is None:
            continue
        tabs = _geom(d, h, sc, sa1, sa2)
        acc = -bsum * Ff[_sl(bj)] * Fg[_sl(bi)]
        for q, (m1, t1, m2, t2) in enumerate(tabs):
            Ig = _interp_box(Fg, bi, m1, t1)
            If = _interp_box(Ff, bi, m2, t2)
            acc = acc + wb[q] * If * Ig
        w = mu3[_sl(bi)] * mu3[_sl(bj)] if gauge else 1.0
        if rc2 > 0.0 and vsq is not None:
            w = w * ((vsq[_sl(bi)] <= rc2) & (vsq[_sl(bj)] <= rc2))
        out[_sl(bi)] += phi * w * acc
    out *= h ** 3


def q_bilinear_real(Ff, Fg, mu3, gauge, phi_d, sc, sa1, sa2, wb, h, out,
                    vsq=None, rc2=0.0):
    tmp = np.zeros(out.shape, np.complex128)
    q_bilinear(Ff.astype(np.complex128), Fg.astype(np.complex128), mu3, gauge,
               phi_d, sc, sa1, sa2, wb, h, tmp, vsq, rc2)
    out[:] = np.real(tmp)


def assemble_l(mu3, phi_d, sc, sa1, sa2, wb, h, inc_mu_h, inc_h_mu, gauge, out):
    n = mu3.shape[0]
    out[:] = 0.0
    bsum = float(np.sum(wb))
    h3 = h ** 3
    flat = np.arange(n ** 3).reshape(n, n, n)
    mu3c = mu3.astype(np.complex128)
    for d, phi in _d_iter(n, phi_d):
        bi, bj = _boxes(n, d)
        if bi is None:
            continue
        tabs = _geom(d, h, sc, sa1, sa2)
        ii = flat[_sl(bi)].ravel()
        jj = flat[_sl(bj)].ravel()
        if inc_mu_h:
            np.add.at(out, (ii, ii), -bsum * phi * h3 * mu3[_sl(bj)].ravel())
        if inc_h_mu:
            np.add.at(out, (ii, jj), -bsum * phi * h3 * mu3[_sl(bi)].ravel())
        for q, (m1, t1, m2, t2) in enumerate(tabs):
            gin = _inbounds_mask(n, bi, m1)
            fin = _inbounds_mask(n, bi, m2)
            ok = gin & fin
            if not np.any(ok):
                continue
            if gauge:
                base_g = base_f = wb[q] * phi * h3 * (mu3[_sl(bi)] * mu3[_sl(bj)])
            else:
                mug = np.real(_interp_box(mu3c, bi, m1, t1))
                muf = np.real(_interp_box(mu3c, bi, m2, t2))
                base_g = wb[q] * phi * h3 * muf     # Q(mu, h) gain weight
                base_f = wb[q] * phi * h3 * mug     # Q(h, mu) gain weight
            for (mm, tt, base, enabled) in ((m1, t1, base_g, inc_mu_h),
                                            (m2, t2, base_f, inc_h_mu)):
                if not enabled:
                    continue
                for a in range(8):
                    ax, ay, az = a >> 2, (a >> 1) & 1, a & 1
                    wa = ((tt[0] if ax else 1 - tt[0])
                          * (tt[1] if ay else 1 - tt[1])
                          * (tt[2] if az else 1 - tt[2]))
                    cx = np.clip(np.arange(bi[0], bi[1]) + mm[0] + ax, 0, n - 1)
                    cy = np.clip(np.arange(bi[2], bi[3]) + mm[1] + ay, 0, n - 1)
                    cz = np.clip(np.arange(bi[4], bi[5]) + mm[2] + az, 0, n - 1)
                    cc = ((cx[:, None, None] * n + cy[None, :, None]) * n
                          + cz[None, None, :])
                    if gauge:
                        vals = (base * wa / mu3.ravel()[cc]) * ok
                    else:
                        vals = (base * wa) * ok
                    np.add.at(out, (flat[_sl(bi)][ok], cc[ok]), vals[ok])


def _inbounds_mask(n, box, m):
    (x0, x1, y0, y1, z0, z1) = box
    mx = (np.arange(x0, x1) + m[0] >= 0) & (np.arange(x0, x1) + m[0] <= n - 2)
    my = (np.arange(y0, y1) + m[1] >= 0) & (np.arange(y0, y1) + m[1] <= n - 2)
    mz = (np.arange(z0, z1) + m[2] >= 0) & (np.arange(z0, z1) + m[2] <= n - 2)
    return mx[:, None, None] & my[None, :, None] & mz[None, None, :]


def assemble_lmu_gram(mu3, phi_d, sc, sa1, sa2, wb, h, out):
    n = mu3.shape[0]
    N = n ** 3
    out[:] = 0.0
    smu = np.sqrt(mu3).ravel()
    h3 = h ** 3
    axis_idx = np.arange(n)
    flat = np.arange(N).reshape(n, n, n)
    for d, phi in _d_iter(n, phi_d):
        bi, bj = _boxes(n, d)
        if bi is None:
            continue
        tabs = _geom(d, h, sc, sa1, sa2)
        ii = flat[_sl(bi)].ravel()
        jj = flat[_sl(bj)].ravel()
        kmm = (mu3[_sl(bi)] * mu3[_sl(bj)]).ravel() * (0.25 * phi * h3)
        for q, (m1, t1, m2, t2) in enumerate(tabs):
            idxs = [ii, jj]
            vals = [1.0 / smu[ii], 1.0 / smu[jj]]
            for mm, tt in ((m1, t1), (m2, t2)):
                ok = _inbounds_mask(n, bi, mm).ravel()
                for a in range(8):
                    ax, ay, az = a >> 2, (a >> 1) & 1, a & 1
                    wa = ((tt[0] if ax else 1 - tt[0])
                          * (tt[1] if ay else 1 - tt[1])
                          * (tt[2] if az else 1 - tt[2]))
                    cx = np.clip(axis_idx[bi[0]:bi[1]] + mm[0] + ax, 0, n - 1)
                    cy = np.clip(axis_idx[bi[2]:bi[3]] + mm[1] + ay, 0, n - 1)
                    cz = np.clip(axis_idx[bi[4]:bi[5]] + mm[2] + az, 0, n - 1)
                    cc = ((cx[:, None, None] * n + cy[None, :, None]) * n
                          + cz[None, None, :]).ravel()
                    idxs.append(cc)
                    vals.append(np.where(ok, -wa / smu[cc], 0.0))
            f = kmm * wb[q]
            for a in range(len(idxs)):
                fa = f * vals[a]
                for b in range(len(idxs)):
                    np.add.at(out, (idxs[a], idxs[b]), -fa * vals[b])


def conservation_weak(f, phi_d, sc, sa1, sa2, wb, axis, h):
    n = f.shape[0]
    res = np.zeros(5, np.complex128)
    vx, vy, vz = np.meshgrid(axis, axis, axis, indexing="ij")
    for d, phi in _d_iter(n, phi_d):
        bi, bj = _boxes(n, d)
        if bi is None:
            continue
        dphys = np.array(d, dtype=float) * h
        dn = float(np.linalg.norm(dphys))
        e1, e2 = frame_normal_to(dphys)
        ff = f[_sl(bj)] * f[_sl(bi)] * (0.5 * phi)
        px0 = vx[_sl(bi)]
        py0 = vy[_sl(bi)]
        pz0 = vz[_sl(bi)]
        en0 = (px0 ** 2 + py0 ** 2 + pz0 ** 2
               + (px0 + dphys[0]) ** 2 + (py0 + dphys[1]) ** 2
               + (pz0 + dphys[2]) ** 2)
        for q in range(len(sc)):
            o = _sigma_offset(dphys, dn, e1, e2, sc, sa1, sa2, q)
            pxa, pya, pza = px0 + o[0], py0 + o[1], pz0 + o[2]
            pxb = px0 + dphys[0] - o[0]
            pyb = py0 + dphys[1] - o[1]
            pzb = pz0 + dphys[2] - o[2]
            res[1] += wb[q] * np.sum(ff * (pxa + pxb - 2 * px0 - dphys[0]))
            res[2] += wb[q] * np.sum(ff * (pya + pyb - 2 * py0 - dphys[1]))
            res[3] += wb[q] * np.sum(ff * (pza + pzb - 2 * pz0 - dphys[2]))
            en1 = pxa ** 2 + pya ** 2 + pza ** 2 + pxb ** 2 + pyb ** 2 + pzb ** 2
            res[4] += wb[q] * np.sum(ff * (en1 - en0))
    return res * h ** 6


def weak_form(F, G, H, phi_d, sc, sa1, sa2, wb, h):
    n = F.shape[0]
    tot = 0.0 + 0.0j
    for d, phi in _d_iter(n, phi_d):
        bi, bj = _boxes(n, d)
        if bi is None:
            continue
        tabs = _geom(d, h, sc, sa1, sa2)
        fg = F[_sl(bj)] * G[_sl(bi)] * phi
        hv = H[_sl(bi)]
        acc = np.zeros_like(hv)
        for q, (m1, t1, _, _) in enumerate(tabs):
            ok = _inbounds_mask(n, bi, m1)
            acc = acc + wb[q] * ok * (_interp_box(H, bi, m1, t1) - hv)
        tot += np.sum(fg * acc)
    return tot * h ** 6


def quad_diff(F, G, phi_d, sc, sa1, sa2, wb, h):
    n = F.shape[0]
    tot = 0.0
    for d, phi in _d_iter(n, phi_d):
        bi, bj = _boxes(n, d)
        if bi is None:
            continue
        tabs = _geom(d, h, sc, sa1, sa2)
        fs = np.real(F[_sl(bj)]) * phi
        gv = G[_sl(bi)]
        acc = np.zeros(gv.shape, np.float64)
        for q, (m1, t1, _, _) in enumerate(tabs):
            ok = _inbounds_mask(n, bi, m1)
            acc = acc + wb[q] * ok * np.abs(_interp_box(G, bi, m1, t1) - gv) ** 2
        tot += float(np.sum(fs * acc))
    return tot * h ** 6


def entropy_quad(g, mu3, phi_d, sc, sa1, sa2, wb, h):
    n = g.shape[0]
    tot = 0.0
    for d, phi in _d_iter(n, phi_d):
        bi, bj = _boxes(n, d)
        if bi is None:
            continue
        tabs = _geom(d, h, sc, sa1, sa2)
        wmm = mu3[_sl(bi)] * mu3[_sl(bj)] * phi
        b0 = g[_sl(bi)] + g[_sl(bj)]
        acc = np.zeros(b0.shape, np.float64)
        for q, (m1, t1, m2, t2) in enumerate(tabs):
            a = (_interp_box(g, bi, m1, t1) + _interp_box(g, bi, m2, t2))
            acc = acc + wb[q] * (np.exp(a) - np.exp(b0)) * (a - b0)
        tot += float(np.sum(wmm * acc))
    return 0.25 * tot * h ** 6


def gagliardo(f, rad_cells, h, s):
    n = f.shape[0]
    tot = 0.0
    for dx in range(-rad_cells, rad_cells + 1):
        for dy in range(-rad_cells, rad_cells + 1):
            for dz in range(-rad_cells, rad_cells + 1):
                r2 = dx * dx + dy * dy + dz * dz
                if r2 == 0 or r2 > rad_cells * rad_cells:
                    continue
                bi, bj = _boxes(n, (dx, dy, dz))
                if bi is None:
                    continue
                df = f[_sl(bj)] - f[_sl(bi)]
                rr = h * np.sqrt(r2)
                tot += float(np.sum(df * df)) / rr ** (3.0 + 2.0 * s)
    return tot * h ** 6


def bobylev_qr(fhat, ghat, modes_out, modes_in, fhat_in, phihat0_in,
               xi_axis, table, rho_max, sc, sa1, sa2, wb, inv_vol, out):
    n = xi_axis.shape[0]
    half = n // 2
    nt = table.shape[0]
    drho = rho_max / (nt - 1)
    xi_in = xi_axis[np.asarray(modes_in) % n]        # (M, 3)
    for io in range(modes_out.shape[0]):
        k = modes_out[io]
        xi = xi_axis[np.asarray(k) % n]
        xin = float(np.linalg.norm(xi))
        if xin == 0.0:
            out[io] = 0.0
            continue
        e1, e2 = frame_normal_to(xi)
        gk = k[None, :] - modes_in                   # (M, 3)
        inside = np.all((gk >= -half) & (gk < half), axis=1)
        gval = np.zeros(len(modes_in), np.complex128)
        gidx = gk[inside] % n
        gval[inside] = ghat[gidx[:, 0], gidx[:, 1], gidx[:, 2]]
        acc = 0.0 + 0.0j
        for q in range(len(sc)):
            sig = sc[q] * xi / xin + sa1[q] * e1 + sa2[q] * e2
            xm = 0.5 * (xi - xin * sig)
            z = xi_in - xm[None, :]
            rho = np.sqrt(np.sum(z * z, axis=1))
            u = np.minimum(rho / drho, nt - 1.0)
            iu = np.minimum(u.astype(int), nt - 2)
            fu = u - iu
            pz = table[iu] * (1.0 - fu) + table[iu + 1] * fu
            acc += wb[q] * np.sum((pz - phihat0_in) * fhat_in * gval)
        out[io] = acc * inv_vol


def q_bilinear_periodic_real(Ff, Fg, mu3, gauge, phi_d, sc, sa1, sa2, wb, h,
                             out, vsq, rc2):
    """Periodized-box variant (numpy reference): wrap via np.roll."""
    n = Ff.shape[0]
    bsum = float(np.sum(wb))
    out[:] = 0.0
    mask = (vsq <= rc2) if rc2 > 0.0 else np.ones_like(vsq, dtype=bool)
    for d, phi in _d_iter(n, phi_d):
        tabs = _geom(d, h, sc, sa1, sa2)
        Fj = np.roll(Ff, shift=(-d[0], -d[1], -d[2]), axis=(0, 1, 2))
        mj = np.roll(mask, shift=(-d[0], -d[1], -d[2]), axis=(0, 1, 2))
        acc = -bsum * Fj * Fg
        for q, (m1, t1, m2, t2) in enumerate(tabs):
            Ig = _interp_periodic(Fg, m1, t1)
            If = _interp_periodic(Ff, m2, t2)
            acc = acc + wb[q] * If * Ig
        w = mu3 * np.roll(mu3, shift=(-d[0], -d[1], -d[2]), axis=(0, 1, 2)) \
            if gauge else 1.0
        out += phi * (w * (mask & mj)) * acc
    out *= h ** 3


def _interp_periodic(F, m, t):
    acc = np.zeros_like(F)
    w1 = (1.0 - t[0], t[0])
    w2 = (1.0 - t[1], t[1])
    w3 = (1.0 - t[2], t[2])
    for a in range(8):
        ax, ay, az = a >> 2, (a >> 1) & 1, a & 1
        w = w1[ax] * w2[ay] * w3[az]
        acc += w * np.roll(F, shift=(-(m[0] + ax), -(m[1] + ay), -(m[2] + az)),
                           axis=(0, 1, 2))
    return acc


def weak_form_gauge(F, G, R, mu3, axis, phi_d, sc, sa1, sa2, wb, h):
    """Gauge-read weak form (numpy reference)."""
    n = F.shape[0]
    tot = 0.0 + 0.0j
    norm_mu = (2.0 * np.pi) ** (-1.5)
    ax3 = np.meshgrid(axis, axis, axis, indexing="ij")
    vsq = ax3[0] ** 2 + ax3[1] ** 2 + ax3[2] ** 2
    mu_v = norm_mu * np.exp(-0.5 * vsq)
    for d, phi in _d_iter(n, phi_d):
        bi, bj = _boxes(n, d)
        if bi is None:
            continue
        dphys = np.array(d, dtype=float) * h
        dn = float(np.linalg.norm(dphys))
        e1, e2 = frame_normal_to(dphys)
        fg = F[_sl(bj)] * G[_sl(bi)] * phi
        hv = (mu_v * R)[_sl(bi)]
        acc = np.zeros_like(hv)
        for q in range(len(sc)):
            o = _sigma_offset(dphys, dn, e1, e2, sc, sa1, sa2, q)
            g1 = o / h
            m1 = np.floor(g1).astype(int)
            t1 = g1 - m1
            ok = _inbounds_mask(n, bi, m1)
            rp = _interp_box(R, bi, m1, t1)
            shift = np.exp(-(ax3[0][_sl(bi)] * o[0] + ax3[1][_sl(bi)] * o[1]
                             + ax3[2][_sl(bi)] * o[2]) - 0.5 * float(o @ o))
            acc = acc + wb[q] * ok * (mu_v[_sl(bi)] * shift * rp - hv)
        tot += np.sum(fg * acc)
    return tot * h ** 6
