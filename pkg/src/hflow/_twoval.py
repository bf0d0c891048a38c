"""Closed forms for E_k and speed gradients when kappa has two distinct values.

Every hypersurface this package discretizes has principal curvatures of the
shape (ka with multiplicity 1, kb with multiplicity n-1): the full 2-d grid
is n = 2, and the axisymmetric profile has one radial and n-1 equal angular
curvatures. All formulas are plain binomial identities and vectorize over
node arrays.
"""

from __future__ import annotations

import math

import numpy as np


def _comb(m: int, j: int) -> float:
    if j < 0 or j > m or m < 0:
        return 0.0
    return float(math.comb(m, j))


def twoval_e(ka, kb, n: int, k: int):
    """Normalized E_k of (ka, kb * (n-1)); elementwise over arrays."""
    if k == 0:
        return np.ones_like(np.asarray(ka, dtype=float))
    if k > n:
        return np.zeros_like(np.asarray(ka, dtype=float))
    m = n - 1
    raw = _comb(m, k) * kb**k + _comb(m, k - 1) * ka * kb ** (k - 1)
    return raw / _comb(n, k)


def twoval_e_all(ka, kb, n: int):
    """Stacked E_0..E_n of (ka, kb * (n-1)): shape (n+1,) + ka.shape."""
    ka = np.asarray(ka, dtype=float)
    out = np.empty((n + 1,) + ka.shape)
    for k in range(n + 1):
        out[k] = twoval_e(ka, kb, n, k)
    return out


def twoval_grad(ka, kb, n: int, k: int):
    """(dE_k/dka, dE_k/dkb_one) for one of the kb directions; elementwise.

    Deleted-variable identity: the derivative along a direction is
    e_{k-1} of the remaining values divided by C(n, k).
    """
    ka = np.asarray(ka, dtype=float)
    if k <= 0 or k > n:
        z = np.zeros_like(ka)
        return z, z
    m = n - 1
    cnk = _comb(n, k)
    ga = _comb(m, k - 1) * kb ** (k - 1) / cnk
    gb = (_comb(m - 1, k - 1) * kb ** (k - 1) + _comb(m - 1, k - 2) * ka * kb ** (k - 2)) / cnk
    return ga, gb


def twoval_speed(ka, kb, n: int, k: int, l: int):
    """F = (E_k/E_l)^(1/(k-l)) with gradient components along both directions.

    Caller is responsible for cone membership; divisions here assume
    E_l > 0 and E_k > 0.
    """
    ek = twoval_e(ka, kb, n, k)
    el = twoval_e(ka, kb, n, l)
    gap = k - l
    ratio = ek / el
    F = ratio if gap == 1 else ratio ** (1.0 / gap)
    gka, gkb = twoval_grad(ka, kb, n, k)
    gla, glb = twoval_grad(ka, kb, n, l)
    dFa = (F / gap) * (gka / ek - gla / el)
    dFb = (F / gap) * (gkb / ek - glb / el)
    return F, dFa, dFb


def twoval_cone_ok(ka, kb, n: int, k: int):
    """Boolean array: E_m(ka, kb*(n-1)) > 0 for every m <= k."""
    ok = np.ones(np.broadcast(np.asarray(ka), np.asarray(kb)).shape, dtype=bool)
    for m in range(1, k + 1):
        ok &= twoval_e(ka, kb, n, m) > 0.0
    return ok
