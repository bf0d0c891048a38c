"""Hot per-node kernels for curvature extraction and flow right-hand sides.

Two lanes, selected by ``hflow._compat`` (env ``HFLOW_NO_NUMBA=1`` forces
numpy): numba @njit scalar loops (``*_numba``) and vectorized numpy
fallbacks (``*_numpy``). The exported ``full2d_curvature``, ``full2d_rhs_*``
and ``axisym_*`` names point at the active lane.

Grid conventions: staggered colatitude theta_j = (j + 1/2) h_t (poles are
never nodes), periodic longitude xi_i = i h_x. Across-pole ghost value at
(-theta, xi) is the node value at (theta, xi + pi), which requires an even
longitude count. phi is the flow variable with r = 2 atanh(exp(phi)).

Family codes: 0 weighted-volume-preserving, 1 inverse-constrained,
2 quermass-preserving. Phi codes: 0 identity, 1 power, 2 neg_inv_power,
3 log.
"""

from __future__ import annotations

import math

import numpy as np

from ._compat import USE_NUMBA, njit
from ._twoval import twoval_e, twoval_speed
from .symfun import phi_value

FAMILY_WVP = 0
FAMILY_INV = 1
FAMILY_QM = 2

PHI_CODES = {"identity": 0, "power": 1, "neg_inv_power": 2, "log": 3}


# ---------------------------------------------------------------------------
# numpy lane helpers
# ---------------------------------------------------------------------------


def _ghost_rows(arr: np.ndarray) -> np.ndarray:
    """Pad theta with one across-pole ghost row on each side."""
    nx = arr.shape[1]
    top = np.roll(arr[0], nx // 2)[None, :]
    bot = np.roll(arr[-1], nx // 2)[None, :]
    return np.concatenate([top, arr, bot], axis=0)


def _radial(phi):
    q = np.exp(phi)
    r = 2.0 * np.arctanh(q)
    return r, np.sinh(r), np.cosh(r)


def _warp_factors(phi):
    """(sinh r, cosh r) through q = e^phi: sinh = 2q/(1-q^2), cosh = (1+q^2)/(1-q^2).

    Exact identities for r = 2 atanh(q); three transcendentals cheaper than
    the direct route, safe while 1 - q^2 stays away from zero (desk-scale
    radii; q = tanh(r/2) < 0.99 for r < 5.3).
    """
    q = np.exp(phi)
    d = 1.0 / (1.0 - q * q)
    return 2.0 * q * d, (1.0 + q * q) * d


def full2d_geometry_numpy(phi, sin_t, cos_t, h_t, h_x):
    """All pointwise geometry of the radial graph on the full 2-d grid.

    Returns (r, lam, lamp, v, u, k1, k2, pt, px, att, atx, axx, gradsq)
    where k1 <= k2 are the principal curvatures of the symmetric pencil
    (h_ij, g_ij) and a** are covariant-Hessian components of phi on the
    round sphere.
    """
    pad = _ghost_rows(phi)
    pt = (pad[2:] - pad[:-2]) / (2.0 * h_t)
    ptt = (pad[2:] - 2.0 * pad[1:-1] + pad[:-2]) / (h_t * h_t)
    east = np.roll(phi, -1, axis=1)
    west = np.roll(phi, 1, axis=1)
    px = (east - west) / (2.0 * h_x)
    pxx = (east - 2.0 * phi + west) / (h_x * h_x)
    pad_e = np.roll(pad, -1, axis=1)
    pad_w = np.roll(pad, 1, axis=1)
    ptx = (pad_e[2:] - pad_w[2:] - pad_e[:-2] + pad_w[:-2]) / (4.0 * h_t * h_x)

    st = sin_t[:, None]
    ct = cos_t[:, None]
    att = ptt
    atx = ptx - (ct / st) * px
    axx = pxx + st * ct * pt

    r, lam, lamp = _radial(phi)
    gradsq = pt * pt + (px / st) ** 2
    v = np.sqrt(1.0 + gradsq)
    u = lam / v

    gtt = lam * lam * (1.0 + pt * pt)
    gtx = lam * lam * pt * px
    gxx = lam * lam * (st * st + px * px)
    w = lamp / (lam * v)
    s = lam / v
    htt = w * gtt - s * att
    htx = w * gtx - s * atx
    hxx = w * gxx - s * axx
    # Weingarten matrix B = g^{-1} h; the discriminant is assembled from the
    # entries of B directly, which stays at round-off level near umbilic
    # points (the naive tr^2 - 4 det cancels catastrophically there).
    detg = gtt * gxx - gtx * gtx
    b11 = (gxx * htt - gtx * htx) / detg
    b22 = (gtt * hxx - gtx * htx) / detg
    b12 = (gxx * htx - gtx * hxx) / detg
    b21 = (gtt * htx - gtx * htt) / detg
    tr = b11 + b22
    root = np.sqrt(np.maximum((b11 - b22) ** 2 + 4.0 * b12 * b21, 0.0))
    k1 = 0.5 * (tr - root)
    k2 = 0.5 * (tr + root)
    return r, lam, lamp, v, u, k1, k2, pt, px, att, atx, axx, gradsq


def full2d_rhs_general_numpy(phi, sin_t, cos_t, h_t, h_x,
                             family, phicode, phip, phi1, qk, ql):
    """Curvature-form d(phi)/dt for any family/speed on the full grid (n = 2).

    Returns (dphi, max_gradsq, min_alpha, min_margin, err_j, err_i); err
    indices are -1 when every node satisfied the cone requirement, else the
    first offending node (dphi is then invalid).
    """
    (_, lam, lamp, v, u, k1, k2, _, _, _, _, _, gradsq) = full2d_geometry_numpy(
        phi, sin_t, cos_t, h_t, h_x
    )
    ok = np.ones(phi.shape, dtype=bool)
    for m in range(1, qk + 1):
        ok &= twoval_e(k1, k2, 2, m) > 0.0
    if not ok.all():
        j, i = np.unravel_index(np.argmin(ok), ok.shape)
        return np.zeros_like(phi), 0.0, 0.0, 0.0, int(j), int(i)

    F, _, _ = twoval_speed(k1, k2, 2, qk, ql)
    kind = _PHI_NAMES[phicode]
    if family == FAMILY_WVP:
        speed = phi1 - phi_value(kind, phip, u * F / lamp)
    elif family == FAMILY_INV:
        speed = phi_value(kind, phip, lamp / u) - phi_value(kind, phip, F)
    else:
        speed = lamp / F - u
    dphi = speed * v / lam
    alpha = 1.0 / (lam * lamp * v)  # 2(n-1)/(n lam lam' v) at n = 2
    margin = np.minimum(k1, k2) - u / lamp
    return (dphi, float(gradsq.max()), float(alpha.min()), float(margin.min()), -1, -1)


_PHI_NAMES = {v: k for k, v in PHI_CODES.items()}


def full2d_rhs_conserved_numpy(phi, sin_t, h_t, h_x):
    """Flux-form d(phi)/dt for the weighted-volume-preserving F = E_1 flow.

    Uses the identity n (lam' - u E_1) = Lap_g lam' to write the normal
    speed as an induced-metric Laplacian, discretized in flux form with
    face-averaged coefficients and exactly zero flux through the poles.
    The quadrature sum of lam^{n+1} dsigma (the weighted enclosed volume)
    is then conserved to round-off by telescoping.

    Returns (dphi, max_gradsq, min_alpha, nan, -1, -1).
    """
    nt, nx = phi.shape
    pad = _ghost_rows(phi)
    pt = (pad[2:] - pad[:-2]) / (2.0 * h_t)
    px = (np.roll(phi, -1, axis=1) - np.roll(phi, 1, axis=1)) / (2.0 * h_x)
    lam, lamp = _warp_factors(phi)
    st = sin_t[:, None]
    gradsq = pt * pt + (px / st) ** 2
    v = np.sqrt(1.0 + gradsq)

    # lam-free flux coefficients sqrt(g) g^{ij} of the induced metric
    ctt = st * (v * v - pt * pt) / v
    ctx = -pt * px / (st * v)
    cxx = (v * v * st * st - px * px) / (v * st**3)

    lamp_pad = _ghost_rows(lamp)
    lt = (lamp_pad[2:] - lamp_pad[:-2]) / (2.0 * h_t)
    lx = (np.roll(lamp, -1, axis=1) - np.roll(lamp, 1, axis=1)) / (2.0 * h_x)

    # colatitude faces j+1/2 between rows j and j+1; pole faces carry zero flux
    ft = 0.5 * (ctt[1:] + ctt[:-1]) * (lamp[1:] - lamp[:-1]) / h_t
    ft += 0.5 * (ctx[1:] + ctx[:-1]) * 0.5 * (lx[1:] + lx[:-1])
    divt = np.zeros_like(phi)
    divt[:-1] += ft
    divt[1:] -= ft
    divt /= h_t

    # longitude faces i+1/2, periodic
    cxx_e = np.roll(cxx, -1, axis=1)
    ctx_e = np.roll(ctx, -1, axis=1)
    fx = 0.5 * (cxx + cxx_e) * (np.roll(lamp, -1, axis=1) - lamp) / h_x
    fx += 0.5 * (ctx + ctx_e) * 0.5 * (lt + np.roll(lt, -1, axis=1))
    divx = (fx - np.roll(fx, 1, axis=1)) / h_x

    lap = (divt + divx) / (lam * lam * v * st)
    dphi = v * lap / (2.0 * lam * lamp)
    alpha = 1.0 / (lam * lamp * v)
    return dphi, float(gradsq.max()), float(alpha.min()), float("nan"), -1, -1


def axisym_geometry_numpy(phi, nsph, sin_t, cos_t, h_t):
    """Pointwise geometry of an axisymmetric profile phi(theta) on S^n.

    Returns (r, lam, lamp, v, u, kt, ka, pt, ptt, gradsq): kt is the
    curvature along the profile direction, ka the (n-1)-fold angular one.
    """
    pad = np.empty(phi.size + 2)
    pad[1:-1] = phi
    pad[0] = phi[0]
    pad[-1] = phi[-1]
    pt = (pad[2:] - pad[:-2]) / (2.0 * h_t)
    ptt = (pad[2:] - 2.0 * phi + pad[:-2]) / (h_t * h_t)
    r, lam, lamp = _radial(phi)
    gradsq = pt * pt
    v = np.sqrt(1.0 + gradsq)
    u = lam / v
    kt = (lamp - ptt / (v * v)) / (lam * v)
    ka = (lamp - (cos_t / sin_t) * pt) / (lam * v)
    return r, lam, lamp, v, u, kt, ka, pt, ptt, gradsq


def axisym_rhs_general_numpy(phi, nsph, sin_t, cos_t, h_t,
                             family, phicode, phip, phi1, qk, ql):
    """Curvature-form d(phi)/dt for the axisymmetric profile."""
    _, lam, lamp, v, u, kt, ka, _, _, gradsq = axisym_geometry_numpy(
        phi, nsph, sin_t, cos_t, h_t
    )
    ok = np.ones(phi.shape, dtype=bool)
    for m in range(1, qk + 1):
        ok &= twoval_e(kt, ka, nsph, m) > 0.0
    if not ok.all():
        j = int(np.argmin(ok))
        return np.zeros_like(phi), 0.0, 0.0, 0.0, j, -1

    F, _, _ = twoval_speed(kt, ka, nsph, qk, ql)
    kind = _PHI_NAMES[phicode]
    if family == FAMILY_WVP:
        speed = phi1 - phi_value(kind, phip, u * F / lamp)
    elif family == FAMILY_INV:
        speed = phi_value(kind, phip, lamp / u) - phi_value(kind, phip, F)
    else:
        speed = lamp / F - u
    dphi = speed * v / lam
    alpha = 2.0 * (nsph - 1) / (nsph * lam * lamp * v)
    margin = np.minimum(kt, ka) - u / lamp
    return (dphi, float(gradsq.max()), float(alpha.min()), float(margin.min()), -1, -1)


def axisym_rhs_conserved_numpy(phi, nsph, sin_t, cos_t, h_t):
    """Flux-form conserved RHS for the axisymmetric F = E_1 flow."""
    pad = np.empty(phi.size + 2)
    pad[1:-1] = phi
    pad[0] = phi[0]
    pad[-1] = phi[-1]
    pt = (pad[2:] - pad[:-2]) / (2.0 * h_t)
    lam, lamp = _warp_factors(phi)
    gradsq = pt * pt
    v = np.sqrt(1.0 + gradsq)

    coef = lam ** (nsph - 2) * sin_t ** (nsph - 1) / v
    ft = 0.5 * (coef[1:] + coef[:-1]) * (lamp[1:] - lamp[:-1]) / h_t
    div = np.zeros_like(phi)
    div[:-1] += ft
    div[1:] -= ft
    lap = div / (h_t * lam**nsph * v * sin_t ** (nsph - 1))
    dphi = v * lap / (nsph * lam * lamp)
    alpha = 2.0 * (nsph - 1) / (nsph * lam * lamp * v)
    return dphi, float(gradsq.max()), float(alpha.min()), float("nan"), -1, -1


# ---------------------------------------------------------------------------
# numba lane
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _bget(arr, j):
    if j < 0 or j >= arr.shape[0]:
        return 0.0
    return arr[j]


@njit(cache=True, inline="always")
def _e2v(ka, kb, k, cm, cn):
    if k == 0:
        return 1.0
    raw = _bget(cm, k) * kb**k + _bget(cm, k - 1) * ka * kb ** (k - 1)
    return raw / cn[k]


@njit(cache=True, inline="always")
def _phi_val(code, p, s):
    if code == 0:
        return s
    elif code == 1:
        return s**p
    elif code == 2:
        return -(s ** (-p))
    return math.log(s)


@njit(cache=True, inline="always")
def _normal_speed(family, phicode, phip, phi1, lam, lamp, u,
                  ka, kb, qk, ql, cm, cn):
    """(ok, speed) for one node; ok False on a Garding-cone violation."""
    for m in range(1, qk + 1):
        if _e2v(ka, kb, m, cm, cn) <= 0.0:
            return False, 0.0
    ek = _e2v(ka, kb, qk, cm, cn)
    el = _e2v(ka, kb, ql, cm, cn)
    gap = qk - ql
    if gap == 1:
        F = ek / el
    else:
        F = (ek / el) ** (1.0 / gap)
    if family == 0:
        return True, phi1 - _phi_val(phicode, phip, u * F / lamp)
    elif family == 1:
        return True, _phi_val(phicode, phip, lamp / u) - _phi_val(phicode, phip, F)
    return True, lamp / F - u


@njit(cache=True)
def full2d_curvature_numba(phi, sin_t, cos_t, h_t, h_x):
    nt, nx = phi.shape
    half = nx // 2
    r = np.empty((nt, nx))
    lam = np.empty((nt, nx))
    lamp = np.empty((nt, nx))
    v = np.empty((nt, nx))
    u = np.empty((nt, nx))
    k1 = np.empty((nt, nx))
    k2 = np.empty((nt, nx))
    pt_a = np.empty((nt, nx))
    px_a = np.empty((nt, nx))
    att_a = np.empty((nt, nx))
    atx_a = np.empty((nt, nx))
    axx_a = np.empty((nt, nx))
    gsq_a = np.empty((nt, nx))
    for j in range(nt):
        st = sin_t[j]
        ct = cos_t[j]
        cot = ct / st
        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i - 1 >= 0 else nx - 1
            if j == 0:
                pm = phi[0, (i + half) % nx]
                pmp = phi[0, (ip + half) % nx]
                pmm = phi[0, (im + half) % nx]
            else:
                pm = phi[j - 1, i]
                pmp = phi[j - 1, ip]
                pmm = phi[j - 1, im]
            if j == nt - 1:
                pp = phi[nt - 1, (i + half) % nx]
                ppp = phi[nt - 1, (ip + half) % nx]
                ppm = phi[nt - 1, (im + half) % nx]
            else:
                pp = phi[j + 1, i]
                ppp = phi[j + 1, ip]
                ppm = phi[j + 1, im]
            p0 = phi[j, i]
            pe = phi[j, ip]
            pw = phi[j, im]

            pt = (pp - pm) / (2.0 * h_t)
            ptt = (pp - 2.0 * p0 + pm) / (h_t * h_t)
            px = (pe - pw) / (2.0 * h_x)
            pxx = (pe - 2.0 * p0 + pw) / (h_x * h_x)
            ptx = (ppp - ppm - pmp + pmm) / (4.0 * h_t * h_x)

            att = ptt
            atx = ptx - cot * px
            axx = pxx + st * ct * pt

            q = math.exp(p0)
            rr = 2.0 * math.atanh(q)
            la = math.sinh(rr)
            lp = math.cosh(rr)
            gsq = pt * pt + (px / st) ** 2
            vv = math.sqrt(1.0 + gsq)
            uu = la / vv

            gtt = la * la * (1.0 + pt * pt)
            gtx = la * la * pt * px
            gxx = la * la * (st * st + px * px)
            w = lp / (la * vv)
            sf = la / vv
            htt = w * gtt - sf * att
            htx = w * gtx - sf * atx
            hxx = w * gxx - sf * axx
            detg = gtt * gxx - gtx * gtx
            b11 = (gxx * htt - gtx * htx) / detg
            b22 = (gtt * hxx - gtx * htx) / detg
            b12 = (gxx * htx - gtx * hxx) / detg
            b21 = (gtt * htx - gtx * htt) / detg
            tr = b11 + b22
            disc = (b11 - b22) ** 2 + 4.0 * b12 * b21
            if disc < 0.0:
                disc = 0.0
            root = math.sqrt(disc)

            r[j, i] = rr
            lam[j, i] = la
            lamp[j, i] = lp
            v[j, i] = vv
            u[j, i] = uu
            k1[j, i] = 0.5 * (tr - root)
            k2[j, i] = 0.5 * (tr + root)
            pt_a[j, i] = pt
            px_a[j, i] = px
            att_a[j, i] = att
            atx_a[j, i] = atx
            axx_a[j, i] = axx
            gsq_a[j, i] = gsq
    return r, lam, lamp, v, u, k1, k2, pt_a, px_a, att_a, atx_a, axx_a, gsq_a


@njit(cache=True)
def full2d_rhs_general_numba(phi, sin_t, cos_t, h_t, h_x,
                             family, phicode, phip, phi1, qk, ql, cm, cn):
    nt, nx = phi.shape
    half = nx // 2
    dphi = np.zeros((nt, nx))
    max_grad = 0.0
    min_alpha = 1.0e300
    min_margin = 1.0e300
    for j in range(nt):
        st = sin_t[j]
        ct = cos_t[j]
        cot = ct / st
        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i - 1 >= 0 else nx - 1
            if j == 0:
                pm = phi[0, (i + half) % nx]
                pmp = phi[0, (ip + half) % nx]
                pmm = phi[0, (im + half) % nx]
            else:
                pm = phi[j - 1, i]
                pmp = phi[j - 1, ip]
                pmm = phi[j - 1, im]
            if j == nt - 1:
                pp = phi[nt - 1, (i + half) % nx]
                ppp = phi[nt - 1, (ip + half) % nx]
                ppm = phi[nt - 1, (im + half) % nx]
            else:
                pp = phi[j + 1, i]
                ppp = phi[j + 1, ip]
                ppm = phi[j + 1, im]
            p0 = phi[j, i]
            pe = phi[j, ip]
            pw = phi[j, im]

            pt = (pp - pm) / (2.0 * h_t)
            ptt = (pp - 2.0 * p0 + pm) / (h_t * h_t)
            px = (pe - pw) / (2.0 * h_x)
            pxx = (pe - 2.0 * p0 + pw) / (h_x * h_x)
            ptx = (ppp - ppm - pmp + pmm) / (4.0 * h_t * h_x)
            att = ptt
            atx = ptx - cot * px
            axx = pxx + st * ct * pt

            q = math.exp(p0)
            dq = 1.0 / (1.0 - q * q)
            la = 2.0 * q * dq
            lp = (1.0 + q * q) * dq
            gsq = pt * pt + (px / st) ** 2
            vv = math.sqrt(1.0 + gsq)
            uu = la / vv

            gtt = la * la * (1.0 + pt * pt)
            gtx = la * la * pt * px
            gxx = la * la * (st * st + px * px)
            w = lp / (la * vv)
            sf = la / vv
            htt = w * gtt - sf * att
            htx = w * gtx - sf * atx
            hxx = w * gxx - sf * axx
            detg = gtt * gxx - gtx * gtx
            b11 = (gxx * htt - gtx * htx) / detg
            b22 = (gtt * hxx - gtx * htx) / detg
            b12 = (gxx * htx - gtx * hxx) / detg
            b21 = (gtt * htx - gtx * htt) / detg
            tr = b11 + b22
            disc = (b11 - b22) ** 2 + 4.0 * b12 * b21
            if disc < 0.0:
                disc = 0.0
            root = math.sqrt(disc)
            ka = 0.5 * (tr - root)
            kb = 0.5 * (tr + root)

            ok, speed = _normal_speed(family, phicode, phip, phi1,
                                      la, lp, uu, ka, kb, qk, ql, cm, cn)
            if not ok:
                return dphi, 0.0, 0.0, 0.0, j, i
            dphi[j, i] = speed * vv / la
            if gsq > max_grad:
                max_grad = gsq
            alpha = 1.0 / (la * lp * vv)
            if alpha < min_alpha:
                min_alpha = alpha
            marg = ka - uu / lp
            if marg < min_margin:
                min_margin = marg
    return dphi, max_grad, min_alpha, min_margin, -1, -1


@njit(cache=True)
def full2d_rhs_conserved_numba(phi, sin_t, h_t, h_x):
    nt, nx = phi.shape
    half = nx // 2
    lam = np.empty((nt, nx))
    lamp = np.empty((nt, nx))
    v = np.empty((nt, nx))
    ctt = np.empty((nt, nx))
    ctx = np.empty((nt, nx))
    cxx = np.empty((nt, nx))
    lt = np.empty((nt, nx))
    lx = np.empty((nt, nx))
    max_grad = 0.0
    min_alpha = 1.0e300

    for j in range(nt):
        for i in range(nx):
            q = math.exp(phi[j, i])
            dq = 1.0 / (1.0 - q * q)
            lam[j, i] = 2.0 * q * dq
            lamp[j, i] = (1.0 + q * q) * dq

    for j in range(nt):
        st = sin_t[j]
        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i - 1 >= 0 else nx - 1
            if j == 0:
                pm = phi[0, (i + half) % nx]
                lm = lamp[0, (i + half) % nx]
            else:
                pm = phi[j - 1, i]
                lm = lamp[j - 1, i]
            if j == nt - 1:
                pp = phi[nt - 1, (i + half) % nx]
                lpn = lamp[nt - 1, (i + half) % nx]
            else:
                pp = phi[j + 1, i]
                lpn = lamp[j + 1, i]
            pt = (pp - pm) / (2.0 * h_t)
            px = (phi[j, ip] - phi[j, im]) / (2.0 * h_x)
            gsq = pt * pt + (px / st) ** 2
            vv = math.sqrt(1.0 + gsq)
            v[j, i] = vv
            ctt[j, i] = st * (vv * vv - pt * pt) / vv
            ctx[j, i] = -pt * px / (st * vv)
            cxx[j, i] = (vv * vv * st * st - px * px) / (vv * st * st * st)
            lt[j, i] = (lpn - lm) / (2.0 * h_t)
            lx[j, i] = (lamp[j, ip] - lamp[j, im]) / (2.0 * h_x)
            if gsq > max_grad:
                max_grad = gsq
            alpha = 1.0 / (lam[j, i] * lamp[j, i] * vv)
            if alpha < min_alpha:
                min_alpha = alpha

    ft = np.empty((nt - 1, nx))
    for j in range(nt - 1):
        for i in range(nx):
            ft[j, i] = 0.5 * (ctt[j, i] + ctt[j + 1, i]) * (lamp[j + 1, i] - lamp[j, i]) / h_t
            ft[j, i] += 0.5 * (ctx[j, i] + ctx[j + 1, i]) * 0.5 * (lx[j, i] + lx[j + 1, i])

    dphi = np.empty((nt, nx))
    for j in range(nt):
        st = sin_t[j]
        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i - 1 >= 0 else nx - 1
            fxp = 0.5 * (cxx[j, i] + cxx[j, ip]) * (lamp[j, ip] - lamp[j, i]) / h_x
            fxp += 0.5 * (ctx[j, i] + ctx[j, ip]) * 0.5 * (lt[j, i] + lt[j, ip])
            fxm = 0.5 * (cxx[j, im] + cxx[j, i]) * (lamp[j, i] - lamp[j, im]) / h_x
            fxm += 0.5 * (ctx[j, im] + ctx[j, i]) * 0.5 * (lt[j, im] + lt[j, i])
            divx = (fxp - fxm) / h_x
            up = ft[j, i] if j < nt - 1 else 0.0
            dn = ft[j - 1, i] if j > 0 else 0.0
            divt = (up - dn) / h_t
            lap = (divt + divx) / (lam[j, i] * lam[j, i] * v[j, i] * st)
            dphi[j, i] = v[j, i] * lap / (2.0 * lam[j, i] * lamp[j, i])
    return dphi, max_grad, min_alpha, np.nan, -1, -1


@njit(cache=True)
def axisym_geometry_numba(phi, nsph, sin_t, cos_t, h_t):
    nt = phi.shape[0]
    r = np.empty(nt)
    lam = np.empty(nt)
    lamp = np.empty(nt)
    v = np.empty(nt)
    u = np.empty(nt)
    kt = np.empty(nt)
    ka = np.empty(nt)
    pt_a = np.empty(nt)
    ptt_a = np.empty(nt)
    gsq_a = np.empty(nt)
    for j in range(nt):
        pm = phi[j - 1] if j > 0 else phi[0]
        pp = phi[j + 1] if j < nt - 1 else phi[nt - 1]
        p0 = phi[j]
        pt = (pp - pm) / (2.0 * h_t)
        ptt = (pp - 2.0 * p0 + pm) / (h_t * h_t)
        q = math.exp(p0)
        rr = 2.0 * math.atanh(q)
        la = math.sinh(rr)
        lp = math.cosh(rr)
        gsq = pt * pt
        vv = math.sqrt(1.0 + gsq)
        r[j] = rr
        lam[j] = la
        lamp[j] = lp
        v[j] = vv
        u[j] = la / vv
        kt[j] = (lp - ptt / (vv * vv)) / (la * vv)
        ka[j] = (lp - (cos_t[j] / sin_t[j]) * pt) / (la * vv)
        pt_a[j] = pt
        ptt_a[j] = ptt
        gsq_a[j] = gsq
    return r, lam, lamp, v, u, kt, ka, pt_a, ptt_a, gsq_a


@njit(cache=True)
def axisym_rhs_general_numba(phi, nsph, sin_t, cos_t, h_t,
                             family, phicode, phip, phi1, qk, ql, cm, cn):
    nt = phi.shape[0]
    dphi = np.zeros(nt)
    max_grad = 0.0
    min_alpha = 1.0e300
    min_margin = 1.0e300
    for j in range(nt):
        pm = phi[j - 1] if j > 0 else phi[0]
        pp = phi[j + 1] if j < nt - 1 else phi[nt - 1]
        p0 = phi[j]
        pt = (pp - pm) / (2.0 * h_t)
        ptt = (pp - 2.0 * p0 + pm) / (h_t * h_t)
        q = math.exp(p0)
        dq = 1.0 / (1.0 - q * q)
        la = 2.0 * q * dq
        lp = (1.0 + q * q) * dq
        gsq = pt * pt
        vv = math.sqrt(1.0 + gsq)
        uu = la / vv
        kt = (lp - ptt / (vv * vv)) / (la * vv)
        ka = (lp - (cos_t[j] / sin_t[j]) * pt) / (la * vv)

        ok, speed = _normal_speed(family, phicode, phip, phi1,
                                  la, lp, uu, kt, ka, qk, ql, cm, cn)
        if not ok:
            return dphi, 0.0, 0.0, 0.0, j, -1
        dphi[j] = speed * vv / la
        if gsq > max_grad:
            max_grad = gsq
        alpha = 2.0 * (nsph - 1) / (nsph * la * lp * vv)
        if alpha < min_alpha:
            min_alpha = alpha
        kmin = kt if kt < ka else ka
        marg = kmin - uu / lp
        if marg < min_margin:
            min_margin = marg
    return dphi, max_grad, min_alpha, min_margin, -1, -1


@njit(cache=True)
def axisym_rhs_conserved_numba(phi, nsph, sin_t, cos_t, h_t):
    nt = phi.shape[0]
    lam = np.empty(nt)
    lamp = np.empty(nt)
    v = np.empty(nt)
    coef = np.empty(nt)
    max_grad = 0.0
    min_alpha = 1.0e300
    for j in range(nt):
        pm = phi[j - 1] if j > 0 else phi[0]
        pp = phi[j + 1] if j < nt - 1 else phi[nt - 1]
        pt = (pp - pm) / (2.0 * h_t)
        q = math.exp(phi[j])
        dq = 1.0 / (1.0 - q * q)
        la = 2.0 * q * dq
        lp = (1.0 + q * q) * dq
        gsq = pt * pt
        vv = math.sqrt(1.0 + gsq)
        lam[j] = la
        lamp[j] = lp
        v[j] = vv
        coef[j] = la ** (nsph - 2) * sin_t[j] ** (nsph - 1) / vv
        if gsq > max_grad:
            max_grad = gsq
        alpha = 2.0 * (nsph - 1) / (nsph * la * lp * vv)
        if alpha < min_alpha:
            min_alpha = alpha
    dphi = np.empty(nt)
    for j in range(nt):
        up = 0.0
        if j < nt - 1:
            up = 0.5 * (coef[j] + coef[j + 1]) * (lamp[j + 1] - lamp[j]) / h_t
        dn = 0.0
        if j > 0:
            dn = 0.5 * (coef[j - 1] + coef[j]) * (lamp[j] - lamp[j - 1]) / h_t
        lap = (up - dn) / (h_t * lam[j] ** nsph * v[j] * sin_t[j] ** (nsph - 1))
        dphi[j] = v[j] * lap / (nsph * lam[j] * lamp[j])
    return dphi, max_grad, min_alpha, np.nan, -1, -1


# ---------------------------------------------------------------------------
# lane dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    full2d_curvature = full2d_curvature_numba

    def full2d_rhs_general(phi, sin_t, cos_t, h_t, h_x,
                           family, phicode, phip, phi1, qk, ql):
        cm = np.array([1.0, 1.0])
        cn = np.array([1.0, 2.0, 1.0])
        return full2d_rhs_general_numba(phi, sin_t, cos_t, h_t, h_x,
                                        family, phicode, phip, phi1, qk, ql, cm, cn)

    full2d_rhs_conserved = full2d_rhs_conserved_numba

    def axisym_curvature(phi, nsph, sin_t, cos_t, h_t):
        return axisym_geometry_numba(phi, nsph, sin_t, cos_t, h_t)

    def axisym_rhs_general(phi, nsph, sin_t, cos_t, h_t,
                           family, phicode, phip, phi1, qk, ql):
        cm = np.array([float(math.comb(nsph - 1, j)) for j in range(nsph)])
        cn = np.array([float(math.comb(nsph, j)) for j in range(nsph + 1)])
        return axisym_rhs_general_numba(phi, nsph, sin_t, cos_t, h_t,
                                        family, phicode, phip, phi1, qk, ql, cm, cn)

    axisym_rhs_conserved = axisym_rhs_conserved_numba
else:
    full2d_curvature = full2d_geometry_numpy
    full2d_rhs_general = full2d_rhs_general_numpy
    full2d_rhs_conserved = full2d_rhs_conserved_numpy

    def axisym_curvature(phi, nsph, sin_t, cos_t, h_t):
        return axisym_geometry_numpy(phi, nsph, sin_t, cos_t, h_t)

    axisym_rhs_general = axisym_rhs_general_numpy
    axisym_rhs_conserved = axisym_rhs_conserved_numpy
