"""Normalized elementary symmetric functions and curvature speed functions.

``E_k`` denotes the k-th elementary symmetric polynomial of the principal
values kappa divided by binomial(n, k), so ``E_0 = 1`` and
``E_k(1, ..., 1) = 1``. Gradients ``dE_k/dkappa_i`` carry the same
normalization, which fixes ``sum_i dE_k/dkappa_i = k E_{k-1}`` exactly; all
trace identities in this package rely on that convention. ``E_k = 0`` for
``k > n`` by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConeViolation, InvalidInput

__all__ = [
    "SymmetricPoint",
    "SpeedFunctionSpec",
    "ConcavityReport",
    "binom_row",
    "elementary_raw",
    "elementary_raw_batch",
    "subset_sum_elementary",
    "eval_elementary",
    "newton_identities",
    "newton_maclaurin_margin",
    "eval_speed",
    "concavity_diagnostics",
    "phi_value",
    "phi_prime",
]


def binom_row(n: int) -> np.ndarray:
    """Binomial coefficients C(n, 0..n) as floats."""
    return np.array([math.comb(n, k) for k in range(n + 1)], dtype=float)


def elementary_raw(kappa: np.ndarray) -> np.ndarray:
    """Unnormalized e_0..e_n via the one-root-at-a-time recurrence.

    The update only ever adds terms with the signs of the kappa products, so
    it is cancellation-free on the positive cone and O(n^2) overall.
    """
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.size
    e = np.zeros(n + 1)
    e[0] = 1.0
    for i in range(n):
        for j in range(min(i + 1, n), 0, -1):
            e[j] += kappa[i] * e[j - 1]
    return e


def elementary_raw_batch(kappas: np.ndarray) -> np.ndarray:
    """Row-wise ``elementary_raw`` for an (m, n) sample batch."""
    kappas = np.asarray(kappas, dtype=float)
    m, n = kappas.shape
    e = np.zeros((m, n + 1))
    e[:, 0] = 1.0
    for i in range(n):
        ki = kappas[:, i]
        for j in range(min(i + 1, n), 0, -1):
            e[:, j] += ki * e[:, j - 1]
    return e


def subset_sum_elementary(kappa: np.ndarray, k: int) -> float:
    """O(2^n) enumeration oracle for normalized E_k (test reference, small n)."""
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.size
    if k == 0:
        return 1.0
    if k > n:
        return 0.0
    total = math.fsum(math.prod(c) for c in combinations(kappa, k))
    return total / math.comb(n, k)


@dataclass(frozen=True)
class SymmetricPoint:
    """Principal-value vector with cached E_k values, gradients and cone index.

    ``e[k]`` is the normalized E_k, ``grad_e[k, i] = dE_k/dkappa_i``, and
    ``cone_index`` is the largest k with kappa in the open Garding cone
    Gamma_k^+ (strict sign test, no tolerance; callers add slack).
    """

    kappa: np.ndarray
    e: np.ndarray
    grad_e: np.ndarray
    cone_index: int

    @property
    def n(self) -> int:
        return self.kappa.size

    def e_padded(self, k: int) -> float:
        """E_k with the E_k = 0 for k > n (and k < 0) convention."""
        if k < 0 or k > self.n:
            return 0.0
        return float(self.e[k])


def eval_elementary(kappa) -> SymmetricPoint:
    """Evaluate all E_k, their kappa-gradients, and the cone index.

    Gradients use the exact deleted-variable identity
    ``dE_k/dkappa_i = e_{k-1}(kappa with kappa_i removed) / C(n, k)``
    rather than differentiating the recurrence, avoiding cancellation.
    """
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim != 1 or kappa.size < 1:
        raise InvalidInput("kappa must be a non-empty 1-d vector")
    if not np.all(np.isfinite(kappa)):
        raise InvalidInput("kappa must be finite")
    n = kappa.size
    binoms = binom_row(n)
    e = elementary_raw(kappa) / binoms

    grad = np.zeros((n + 1, n))
    for i in range(n):
        deleted = elementary_raw(np.delete(kappa, i))
        grad[1:, i] = deleted / binoms[1:]

    cone = 0
    for k in range(1, n + 1):
        if e[k] > 0.0:
            cone = k
        else:
            break
    return SymmetricPoint(kappa=kappa, e=e, grad_e=grad, cone_index=cone)


def newton_identities(p: SymmetricPoint, k: int) -> np.ndarray:
    """Residuals of the three Newton trace identities at index k.

    Returns ``(sum_i dE_k^i kappa_i - k E_k,
               sum_i dE_k^i - k E_{k-1},
               sum_i dE_k^i kappa_i^2 - (n E_1 E_k - (n-k) E_{k+1}))``;
    all three vanish to round-off for exact arithmetic.
    """
    if not 1 <= k <= p.n:
        raise InvalidInput(f"k={k} out of range 1..{p.n}")
    g = p.grad_e[k]
    r1 = float(g @ p.kappa - k * p.e[k])
    r2 = float(g.sum() - k * p.e[k - 1])
    r3 = float(g @ (p.kappa**2) - (p.n * p.e[1] * p.e[k] - (p.n - k) * p.e_padded(k + 1)))
    return np.array([r1, r2, r3])


def newton_maclaurin_margin(p: SymmetricPoint, k: int) -> float:
    """E_k^2 - E_{k+1} E_{k-1}, nonnegative on Gamma_k^+, zero iff all kappa equal."""
    if not 1 <= k <= p.n - 1:
        raise InvalidInput(f"k={k} out of range 1..{p.n - 1}")
    if p.cone_index < k:
        raise InvalidInput(f"kappa lies in Gamma_{p.cone_index} only, need Gamma_{k}")
    return float(p.e[k] ** 2 - p.e[k + 1] * p.e[k - 1])


# ---------------------------------------------------------------------------
# Speed functions F = (E_k / E_l)^(1/(k-l)) and the rescaling Phi.
# ---------------------------------------------------------------------------

_PHI_KINDS = ("identity", "power", "neg_inv_power", "log")


def phi_value(kind: str, param: float, s):
    """Phi(s) for the admissible rescaling families."""
    s = np.asarray(s, dtype=float)
    if kind == "identity":
        out = s
    elif kind == "power":
        out = s**param
    elif kind == "neg_inv_power":
        out = -(s**-param)
    elif kind == "log":
        out = np.log(s)
    else:
        raise InvalidInput(f"unknown phi kind {kind!r}")
    return out if out.ndim else float(out)


def phi_prime(kind: str, param: float, s):
    """dPhi/ds for the admissible rescaling families."""
    s = np.asarray(s, dtype=float)
    if kind == "identity":
        out = np.ones_like(s)
    elif kind == "power":
        out = param * s ** (param - 1.0)
    elif kind == "neg_inv_power":
        out = param * s ** (-param - 1.0)
    elif kind == "log":
        out = 1.0 / s
    else:
        raise InvalidInput(f"unknown phi kind {kind!r}")
    return out if out.ndim else float(out)


def _check_phi_admissible(kind: str, param: float) -> None:
    # Numeric admissibility check on a log-spaced sample: Phi' > 0 and
    # s Phi'' + 2 Phi' >= 0 on s > 0. Second derivative by central FD; the
    # tolerance is scaled by the term magnitudes to absorb FD noise at the
    # equality cases (e.g. -1/s, where the combination vanishes exactly).
    s = np.logspace(-3.0, 3.0, 61)
    h = 3e-5 * s
    p_prime = phi_prime(kind, param, s)
    if np.any(p_prime <= 0.0) or not np.all(np.isfinite(p_prime)):
        raise InvalidInput(f"phi {kind}({param}) is not strictly increasing")
    p_second = (phi_value(kind, param, s + h) - 2.0 * phi_value(kind, param, s)
                + phi_value(kind, param, s - h)) / h**2
    combo = s * p_second + 2.0 * p_prime
    scale = np.abs(s * p_second) + 2.0 * np.abs(p_prime)
    if np.any(combo < -1e-5 * scale):
        raise InvalidInput(
            f"phi {kind}({param}) violates s*phi'' + 2*phi' >= 0 (min {combo.min():.3e})"
        )


@dataclass(frozen=True)
class SpeedFunctionSpec:
    """Admissible curvature speed: F = (E_k/E_l)^(1/(k-l)) plus a rescaling Phi.

    ``kind="mean"`` is shorthand for quotient(1, 0), i.e. F = E_1. The phi
    families are admissible for the constrained flows: identity, s^p (p>0),
    -s^-p (0<p<=1), log s; admissibility (Phi' > 0, s Phi'' + 2 Phi' >= 0)
    is verified numerically at construction.
    """

    kind: str = "quotient"
    k: int = 1
    l: int = 0
    phi: str = "identity"
    phi_param: float = 1.0

    def __post_init__(self):
        if self.kind == "mean":
            object.__setattr__(self, "k", 1)
            object.__setattr__(self, "l", 0)
        elif self.kind != "quotient":
            raise InvalidInput(f"unknown speed kind {self.kind!r}")
        if not (0 <= self.l < self.k):
            raise InvalidInput(f"quotient requires 0 <= l < k, got (k={self.k}, l={self.l})")
        if self.phi not in _PHI_KINDS:
            raise InvalidInput(f"unknown phi kind {self.phi!r}")
        if self.phi == "power" and not self.phi_param > 0:
            raise InvalidInput("power rescaling needs p > 0")
        if self.phi == "neg_inv_power" and not 0 < self.phi_param <= 1:
            raise InvalidInput("neg_inv_power rescaling needs 0 < p <= 1")
        _check_phi_admissible(self.phi, self.phi_param)

    @classmethod
    def quotient(cls, k: int, l: int, phi: str = "identity", phi_param: float = 1.0):
        return cls(kind="quotient", k=k, l=l, phi=phi, phi_param=phi_param)

    @classmethod
    def mean(cls, phi: str = "identity", phi_param: float = 1.0):
        return cls(kind="mean", k=1, l=0, phi=phi, phi_param=phi_param)

    @property
    def degree_gap(self) -> int:
        return self.k - self.l

    def phi_at(self, s):
        return phi_value(self.phi, self.phi_param, s)

    def phi_prime_at(self, s):
        return phi_prime(self.phi, self.phi_param, s)

    def phi_one(self) -> float:
        return float(self.phi_at(1.0))

    def label(self) -> str:
        base = "E_1" if (self.k, self.l) == (1, 0) else f"(E_{self.k}/E_{self.l})^(1/{self.degree_gap})"
        return f"F={base}, phi={self.phi}" + ("" if self.phi in ("identity", "log") else f"({self.phi_param:g})")


def eval_speed(spec: SpeedFunctionSpec, p: SymmetricPoint):
    """Evaluate F and its kappa-gradient at a symmetric point.

    Raises :class:`ConeViolation` when kappa is outside Gamma_k^+ for the
    quotient's upper index. F is 1-homogeneous: F(c kappa) = c F(kappa).
    """
    k, l = spec.k, spec.l
    if k > p.n:
        raise InvalidInput(f"speed needs E_{k} but n={p.n}")
    if p.cone_index < k:
        raise ConeViolation(
            f"kappa in Gamma_{p.cone_index} only, speed requires Gamma_{k}",
            cone_index=p.cone_index,
            required=k,
        )
    ek, el = p.e[k], p.e[l]
    ratio = ek / el
    gap = k - l
    F = ratio ** (1.0 / gap)
    dF = (F / gap) * (p.grad_e[k] / ek - p.grad_e[l] / el)
    return float(F), dF


@dataclass(frozen=True)
class ConcavityReport:
    """Finite-difference concavity / inverse-concavity diagnostics for a speed.

    ``hessian_max_eig <= 0`` (to FD accuracy) certifies concavity of f;
    ``inverse_min_eig >= 0`` certifies inverse concavity via
    f''_{kl} + 2 (f'_k / kappa_k) delta_{kl} >= 0. ``quotient_max`` is the
    largest pairwise (f'_k - f'_l)/(kappa_k - kappa_l) (<= 0 for concave F)
    and ``inverse_combo_min`` the smallest pairwise
    (f'_k - f'_l)/(kappa_k - kappa_l) + f'_k/kappa_l + f'_l/kappa_k
    (>= 0 for inverse-concave F). Pairs with nearly equal kappas are skipped
    and counted in ``degenerate_pairs``.
    """

    hessian_min_eig: float
    hessian_max_eig: float
    inverse_min_eig: float
    quotient_max: float
    inverse_combo_min: float
    degenerate_pairs: int
    fd_step: float


def concavity_diagnostics(
    spec: SpeedFunctionSpec,
    p: SymmetricPoint,
    step_scale: float = 1e-4,
    degenerate_tol: float = 1e-8,
) -> ConcavityReport:
    """Second-derivative diagnostics of f(kappa) by central finite differences.

    Uses step h = step_scale * |kappa|; validated against F = E_1 whose
    Hessian vanishes identically.
    """
    kappa = p.kappa
    if np.any(kappa <= 0):
        raise InvalidInput("concavity diagnostics need kappa in the positive cone")
    n = p.n
    h = step_scale * float(np.linalg.norm(kappa))

    def f_at(vec):
        return eval_speed(spec, eval_elementary(vec))[0]

    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            val = (
                f_at(kappa + ei + ej)
                - f_at(kappa + ei - ej)
                - f_at(kappa - ei + ej)
                + f_at(kappa - ei - ej)
            ) / (4.0 * h * h)
            hess[i, j] = val
            hess[j, i] = val

    _, df = eval_speed(spec, p)
    eigs = np.linalg.eigvalsh(hess)
    inv_matrix = hess + np.diag(2.0 * df / kappa)
    inv_eigs = np.linalg.eigvalsh(inv_matrix)

    quotient_max = -np.inf
    combo_min = np.inf
    degenerate = 0
    for a in range(n):
        for b in range(a + 1, n):
            dk = kappa[a] - kappa[b]
            if abs(dk) < degenerate_tol:
                degenerate += 1
                continue
            q = (df[a] - df[b]) / dk
            quotient_max = max(quotient_max, q)
            combo_min = min(combo_min, q + df[a] / kappa[b] + df[b] / kappa[a])
    return ConcavityReport(
        hessian_min_eig=float(eigs[0]),
        hessian_max_eig=float(eigs[-1]),
        inverse_min_eig=float(inv_eigs[0]),
        quotient_max=float(quotient_max),
        inverse_combo_min=float(combo_min),
        degenerate_pairs=degenerate,
        fd_step=h,
    )
