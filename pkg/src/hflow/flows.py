"""Explicit time integration of the locally constrained curvature flows.

Nonparametric form: the graph variable evolves by d(phi)/dt = speed * v /
lam, stepped with classical RK4 under a parabolic stability bound. Three
families of normal speeds:

* ``weighted_volume_preserving``: Phi(1) - Phi(u F / lam'); with Phi the
  identity and F = E_1 this conserves the weighted enclosed volume Wl_0 and
  contracts the graph gradient exponentially.
* ``inverse_constrained``: Phi(lam'/u) - Phi(F); the classical locally
  constrained inverse-type flow is Phi(s) = -1/s, F = E_k/E_{k-1}.
* ``quermass_preserving``: lam' E_{k-1}/E_k - u (experimental; monitored,
  no invariant guarantees asserted beyond W_k tracking).

For the conserved (weighted_volume_preserving, identity, F = E_1) case the
stepper uses the flux-form kernel (see ``_kernels``), which keeps Wl_0
constant to round-off and obeys a discrete maximum principle for phi. All
other cases step the curvature-form kernel.

On the full 2-d grid a tapered zonal Fourier filter is applied to each
stage derivative poleward of a configurable colatitude. Without it the
longitude spacing collapses like sin(theta) near the poles and the
explicit step size would scale like h^4; the filter caps the effective
zonal wavenumber so dt scales like h^2. It leaves the zonal mean (and thus
any axisymmetric solution) untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels, functionals
from ._twoval import twoval_cone_ok, twoval_speed
from .errors import ConeViolation, FlowBlowUp, InvalidInput, NeedsMoreSamples
from .hypersurface import CurvatureField, RadialGraph, curvature
from .symfun import SpeedFunctionSpec

__all__ = [
    "FlowSpec",
    "FlowState",
    "MonitorSample",
    "FlowResult",
    "speed_field",
    "initial_state",
    "step",
    "run",
    "variational_consistency",
    "gradient_envelope_excess",
    "ZonalFilter",
]

FAMILIES = ("weighted_volume_preserving", "inverse_constrained", "quermass_preserving")
_FAMILY_CODE = {name: code for code, name in enumerate(FAMILIES)}

_RK4_REAL_AXIS = 2.5  # conservative real-axis stability radius for RK4


@dataclass(frozen=True)
class FlowSpec:
    """One flow family plus speed, horizon, and stepping policy."""

    family: str
    speed: SpeedFunctionSpec
    t_end: float
    cfl: float = 0.5
    convergence_tol: float = 1e-10
    polar_filter: bool = True
    filter_cutoff_deg: float = 45.0
    max_steps: int = 5_000_000

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown flow family {self.family!r}")
        if not 0.0 < self.cfl <= 1.0:
            raise InvalidInput("cfl safety factor must lie in (0, 1]")
        if self.t_end <= 0.0:
            raise InvalidInput("t_end must be positive")
        if self.family == "quermass_preserving":
            if self.speed.l != self.speed.k - 1 or self.speed.phi != "identity":
                raise InvalidInput(
                    "quermass_preserving needs speed quotient(k, k-1) with identity phi"
                )

    @property
    def conserves_weighted_volume(self) -> bool:
        """True when the discrete stepper keeps Wl_0 constant (F=E_1, identity)."""
        return (self.family == "weighted_volume_preserving"
                and (self.speed.k, self.speed.l) == (1, 0)
                and self.speed.phi == "identity")


@dataclass(frozen=True)
class MonitorSample:
    """One monitor snapshot along a run."""

    t: float
    step: int
    min_phi: float
    max_phi: float
    max_grad_sq: float
    min_static_margin: float
    min_alpha_bound: float
    min_static_factor: float
    record: functionals.FunctionalRecord
    rhs_W: np.ndarray
    rhs_Wl: np.ndarray


@dataclass
class FlowState:
    """Graph + clock + step size; ``monitors`` accumulates samples in run()."""

    graph: RadialGraph
    t: float = 0.0
    dt: float = 0.0
    step_index: int = 0
    monitors: list = dc_field(default_factory=list)


@dataclass
class FlowResult:
    spec: FlowSpec
    state: FlowState
    samples: list
    step_t: np.ndarray
    step_max_grad: np.ndarray
    step_min_margin: np.ndarray
    step_min_alpha: np.ndarray
    step_max_phi: np.ndarray
    step_min_phi: np.ndarray
    alpha_hat: float
    alpha_fit: float
    r_inf: float
    converged: bool
    status: str
    c0_violations: int
    c0_worst: float
    wl0_rel_drift: float


def speed_field(spec: FlowSpec, fieldc: CurvatureField) -> np.ndarray:
    """Per-node normal speed of the flow evaluated from a curvature field.

    Identically zero on origin-centered spheres for the weighted-volume and
    inverse families, and for the quermass family at every index. Raises
    :class:`ConeViolation` (with the offending node) when the curvature
    leaves the cone the speed needs.
    """
    n = fieldc.n
    sp = spec.speed
    if sp.k > n:
        raise InvalidInput(f"speed needs E_{sp.k} but the hypersurface has n={n}")
    ok = twoval_cone_ok(fieldc.kappa_a, fieldc.kappa_b, n, sp.k)
    if not ok.all():
        node = np.unravel_index(int(np.argmin(ok)), ok.shape)
        raise ConeViolation(
            f"curvature outside Gamma_{sp.k} at node {node}",
            required=sp.k, node=tuple(int(x) for x in node),
        )
    F, _, _ = twoval_speed(fieldc.kappa_a, fieldc.kappa_b, n, sp.k, sp.l)
    if spec.family == "weighted_volume_preserving":
        return sp.phi_one() - sp.phi_at(fieldc.u * F / fieldc.lamp)
    if spec.family == "inverse_constrained":
        return sp.phi_at(fieldc.lamp / fieldc.u) - sp.phi_at(F)
    return fieldc.lamp / F - fieldc.u


def _diffusion_bound(fieldc: CurvatureField, spec: FlowSpec) -> np.ndarray:
    """Per-node bound on the second-order coefficient of the phi equation.

    The principal symbol of dphi/dt is (speed-linearization) * (sigma^{ij} -
    phi^i phi^j / v^2) / lam^2; the grid-direction factor is accounted for
    separately, this returns the scalar prefactor.
    """
    sp = spec.speed
    F, dfa, dfb = twoval_speed(fieldc.kappa_a, fieldc.kappa_b, fieldc.n, sp.k, sp.l)
    fmax = np.maximum(dfa, dfb)
    lam2 = fieldc.lam**2
    if spec.family == "weighted_volume_preserving":
        s = fieldc.u * F / fieldc.lamp
        return sp.phi_prime_at(s) * (fieldc.u / fieldc.lamp) * fmax / lam2
    if spec.family == "inverse_constrained":
        return sp.phi_prime_at(F) * fmax / lam2
    return fieldc.lamp * fmax / (F**2 * lam2)


def _grid_stiffness(grid, spec: FlowSpec) -> np.ndarray:
    """Worst second-difference symbol per latitude row (times the 1/sin^2)."""
    kt = 4.0 / grid.h_theta**2
    if grid.mode == "axisym":
        return np.full(grid.n_theta, kt)
    raw = 4.0 / (grid.h_xi * grid.sin_t) ** 2
    if spec.polar_filter:
        stc = math.sin(math.radians(spec.filter_cutoff_deg))
        cap = (math.pi / (grid.h_xi * stc)) ** 2
        kx = np.minimum(raw, cap)
    else:
        kx = raw
    return kt + kx


def stable_dt(fieldc: CurvatureField, spec: FlowSpec) -> float:
    """Fixed step size from the parabolic bound at the given state."""
    D = _diffusion_bound(fieldc, spec)
    K = _grid_stiffness(fieldc.grid, spec)
    if fieldc.grid.mode == "full2d":
        K = K[:, None]
    worst = float(np.max(D * K))
    return spec.cfl * _RK4_REAL_AXIS / worst


class ZonalFilter:
    """Tapered zonal Fourier cutoff applied to stage derivatives near poles.

    Poleward of the cutoff colatitude the retained zonal wavenumbers are
    capped at m_cap(theta) = (n_xi/2) sin(theta)/sin(cutoff) with a cosine
    taper on the top 30%; the zonal mean always passes through, so
    axisymmetric fields are fixed points of the filter.
    """

    def __init__(self, grid, cutoff_deg: float = 45.0):
        if grid.mode != "full2d":
            raise InvalidInput("zonal filter only applies to the full 2-d grid")
        stc = math.sin(math.radians(cutoff_deg))
        nt, nx = grid.n_theta, grid.n_xi
        self._nx = nx
        rows = np.where(grid.sin_t < stc)[0]
        self._rows = rows
        m = np.arange(nx // 2 + 1, dtype=float)
        mask = np.ones((rows.size, nx // 2 + 1))
        for a, j in enumerate(rows):
            mcap = 0.5 * nx * grid.sin_t[j] / stc
            lo = 0.7 * mcap
            ramp = np.clip((m - lo) / max(mcap - lo, 1e-12), 0.0, 1.0)
            mask[a] = 0.5 * (1.0 + np.cos(math.pi * ramp))
            mask[a, m > mcap] = 0.0
            mask[a, 0] = 1.0
        self._mask = mask

    def __call__(self, arr: np.ndarray) -> np.ndarray:
        if self._rows.size == 0:
            return arr
        block = arr[self._rows]
        spec = np.fft.rfft(block, axis=1)
        spec *= self._mask
        arr[self._rows] = np.fft.irfft(spec, n=self._nx, axis=1)
        return arr


def _make_rhs(grid, spec: FlowSpec):
    """Bind the lane kernel for this grid/family; returns phi -> 6-tuple."""
    fam = _FAMILY_CODE[spec.family]
    sp = spec.speed
    phicode = _kernels.PHI_CODES[sp.phi]
    phi1 = sp.phi_one()
    if grid.mode == "full2d":
        if spec.conserves_weighted_volume:
            def rhs(phi):
                return _kernels.full2d_rhs_conserved(phi, grid.sin_t, grid.h_theta, grid.h_xi)
        else:
            def rhs(phi):
                return _kernels.full2d_rhs_general(
                    phi, grid.sin_t, grid.cos_t, grid.h_theta, grid.h_xi,
                    fam, phicode, sp.phi_param, phi1, sp.k, sp.l)
    else:
        if spec.conserves_weighted_volume:
            def rhs(phi):
                return _kernels.axisym_rhs_conserved(phi, grid.n, grid.sin_t,
                                                     grid.cos_t, grid.h_theta)
        else:
            def rhs(phi):
                return _kernels.axisym_rhs_general(
                    phi, grid.n, grid.sin_t, grid.cos_t, grid.h_theta,
                    fam, phicode, sp.phi_param, phi1, sp.k, sp.l)
    return rhs


def _sample(graph: RadialGraph, spec: FlowSpec, t: float, nstep: int) -> MonitorSample:
    fieldc = curvature(graph)
    rec = functionals.evaluate(fieldc, t=t)
    speed = speed_field(spec, fieldc)
    n = fieldc.n
    rhs_W = np.empty(n + 1)
    for k in range(n + 1):
        rhs_W[k] = (n + 1 - k) / (n + 1) * fieldc.integrate(fieldc.E[k] * speed)
    rhs_Wl = np.empty(n + 2)
    for k in range(n + 2):
        lower = fieldc.E[k - 1] if 1 <= k <= n + 1 else 0.0
        upper = fieldc.E[k] if k <= n else 0.0
        rhs_Wl[k] = fieldc.integrate(
            (k * fieldc.u * lower + (n + 1 - k) * fieldc.lamp * upper) * speed
        )
    factor = fieldc.lamp * fieldc.kappa_min - fieldc.u
    alpha = 2.0 * (n - 1) / (n * fieldc.lam * fieldc.lamp * fieldc.v)
    return MonitorSample(
        t=t, step=nstep,
        min_phi=float(graph.phi.min()), max_phi=float(graph.phi.max()),
        max_grad_sq=float(fieldc.grad_sq.max()),
        min_static_margin=float(fieldc.static_margin.min()),
        min_alpha_bound=float(alpha.min()),
        min_static_factor=float(factor.min()),
        record=rec, rhs_W=rhs_W, rhs_Wl=rhs_Wl,
    )


def initial_state(graph: RadialGraph, spec: FlowSpec) -> FlowState:
    """Validate the initial shape for the spec and fix the step size."""
    fieldc = curvature(graph)
    speed_field(spec, fieldc)  # raises ConeViolation if the start is inadmissible
    return FlowState(graph=graph, t=0.0, dt=stable_dt(fieldc, spec))


def _advance(phi, dt, rhs, filt):
    """One RK4 step; returns (new_phi, stage1_stats) or raises ConeViolation."""

    def stage(p):
        dphi, mg, mal, mmar, ej, ei = rhs(p)
        if ej >= 0:
            raise ConeViolation(
                f"curvature left the required cone at node ({ej}, {ei})",
                node=(ej, ei) if ei >= 0 else (ej,),
            )
        if filt is not None:
            dphi = filt(dphi)
        return dphi, (mg, mal, mmar)

    k1, stats = stage(phi)
    k2, _ = stage(phi + 0.5 * dt * k1)
    k3, _ = stage(phi + 0.5 * dt * k2)
    k4, _ = stage(phi + dt * k3)
    return phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), stats


def _try_advance(phi, dt, rhs, filt):
    """RK4 step that downgrades arithmetic faults on garbage states to NaN.

    An unstable step can push phi to >= 0 (infinite radius), where kernels
    may divide by zero; report that as a non-finite result so the caller's
    retry/abort logic handles it uniformly.
    """
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return _advance(phi, dt, rhs, filt)
    except (ZeroDivisionError, FloatingPointError):
        return np.full_like(phi, np.nan), (np.nan, np.nan, np.nan)


def _phi_valid(phi) -> bool:
    """Star-shaped graph states satisfy phi < 0 and finite everywhere."""
    return bool(np.all(np.isfinite(phi)) and np.all(phi < 0.0))


def step(state: FlowState, spec: FlowSpec) -> FlowState:
    """Advance one RK4 step (public single-step entry point)."""
    grid = state.graph.grid
    rhs = _make_rhs(grid, spec)
    filt = (ZonalFilter(grid, spec.filter_cutoff_deg)
            if grid.mode == "full2d" and spec.polar_filter else None)
    dt = state.dt if state.dt > 0 else stable_dt(curvature(state.graph), spec)
    new_phi, _ = _try_advance(state.graph.phi, dt, rhs, filt)
    if not _phi_valid(new_phi):
        raise FlowBlowUp("non-finite or non-star-shaped phi after one step",
                         last_state=state)
    return FlowState(graph=state.graph.with_phi(new_phi), t=state.t + dt,
                     dt=dt, step_index=state.step_index + 1,
                     monitors=state.monitors)


def run(graph: RadialGraph, spec: FlowSpec, monitor_dt: float = 0.02) -> FlowResult:
    """Integrate to t_end or to gradient convergence, with monitors.

    Stops early when max |D phi|^2 falls below ``spec.convergence_tol``
    (a centered sphere has D phi = 0 exactly). Per-step extrema of phi are
    tracked against the one-sided 1e-8 slack; on a non-finite step the step
    size is halved and the step retried once before aborting with
    :class:`FlowBlowUp`.
    """
    grid = graph.grid
    rhs = _make_rhs(grid, spec)
    filt = (ZonalFilter(grid, spec.filter_cutoff_deg)
            if grid.mode == "full2d" and spec.polar_filter else None)

    phi = graph.phi.copy()
    if filt is not None:
        phi = filt(phi)
        graph = graph.with_phi(phi)
        phi = graph.phi

    dt = initial_state(graph, spec).dt
    k_sample = max(1, int(round(monitor_dt / dt)))

    samples = [_sample(graph, spec, 0.0, 0)]
    ts, grads, margins, alphas, maxphis, minphis = [], [], [], [], [], []
    c0_violations = 0
    c0_worst = 0.0
    prev_max = float(phi.max())
    prev_min = float(phi.min())
    converged = False
    status = "t_end"

    t = 0.0
    nstep = 0
    while t < spec.t_end and nstep < spec.max_steps:
        try:
            new_phi, stats = _try_advance(phi, dt, rhs, filt)
        except ConeViolation as exc:
            exc.history = samples  # type: ignore[attr-defined]
            raise
        if not _phi_valid(new_phi):
            dt *= 0.5
            k_sample = max(1, int(round(monitor_dt / dt)))
            new_phi, stats = _try_advance(phi, dt, rhs, filt)
            if not _phi_valid(new_phi):
                raise FlowBlowUp(
                    f"non-finite or non-star-shaped phi at t={t:.6g} even after halving dt",
                    last_state=FlowState(graph=graph.with_phi(phi), t=t, dt=dt,
                                         step_index=nstep, monitors=samples),
                    history=samples,
                )
        mg, mal, mmar = stats
        ts.append(t)
        grads.append(mg)
        alphas.append(mal)
        margins.append(mmar)
        maxphis.append(prev_max)
        minphis.append(prev_min)

        if mg < spec.convergence_tol:
            converged = True
            status = "converged"
            break

        phi = new_phi
        t += dt
        nstep += 1
        cur_max = float(phi.max())
        cur_min = float(phi.min())
        if cur_max > prev_max + 1e-8:
            c0_violations += 1
            c0_worst = max(c0_worst, cur_max - prev_max)
        if cur_min < prev_min - 1e-8:
            c0_violations += 1
            c0_worst = max(c0_worst, prev_min - cur_min)
        prev_max = cur_max
        prev_min = cur_min
        if nstep % k_sample == 0:
            samples.append(_sample(graph.with_phi(phi), spec, t, nstep))

    final_graph = graph.with_phi(phi)
    if not samples or samples[-1].step != nstep:
        samples.append(_sample(final_graph, spec, t, nstep))

    step_t = np.asarray(ts)
    step_grad = np.asarray(grads)
    alpha_hat = float(np.min(alphas)) if alphas else float("nan")
    alpha_fit = _fit_decay_rate(step_t, step_grad)
    sw = grid.sigma_weights()
    r_inf = float(np.sum(final_graph.r * sw) / np.sum(sw))
    wl0 = np.array([s.record.Wl[0] for s in samples])
    wl0_drift = float(np.max(np.abs(wl0 - wl0[0])) / abs(wl0[0]))

    return FlowResult(
        spec=spec,
        state=FlowState(graph=final_graph, t=t, dt=dt, step_index=nstep,
                        monitors=samples),
        samples=samples,
        step_t=step_t,
        step_max_grad=step_grad,
        step_min_margin=np.asarray(margins),
        step_min_alpha=np.asarray(alphas),
        step_max_phi=np.asarray(maxphis),
        step_min_phi=np.asarray(minphis),
        alpha_hat=alpha_hat,
        alpha_fit=alpha_fit,
        r_inf=r_inf,
        converged=converged,
        status=status,
        c0_violations=c0_violations,
        c0_worst=c0_worst,
        wl0_rel_drift=wl0_drift,
    )


def _fit_decay_rate(t: np.ndarray, grad: np.ndarray) -> float:
    """Log-linear decay rate of max |D phi|^2 over the trailing half."""
    if t.size < 8:
        return float("nan")
    lo = t.size // 2
    tt = t[lo:]
    gg = grad[lo:]
    keep = gg > 0.0
    if keep.sum() < 4:
        return float("nan")
    slope = np.polyfit(tt[keep], np.log(gg[keep]), 1)[0]
    return float(-slope)


def gradient_envelope_excess(result: FlowResult, slack: float = 1e-6) -> float:
    """max over the run of grad(t) / (grad(0) e^{-alpha_hat t}) - (1 + slack).

    Nonpositive when the exponential-decay envelope with the run-minimum
    rate bound holds at every recorded step.
    """
    g0 = result.step_max_grad[0]
    envelope = g0 * np.exp(-result.alpha_hat * result.step_t)
    ratio = result.step_max_grad / np.maximum(envelope, 1e-300)
    return float(ratio.max() - (1.0 + slack))


@dataclass(frozen=True)
class VariationalReport:
    """Measured d/dt of each functional vs the variational surface integral."""

    t: np.ndarray
    measured_W: np.ndarray    # (samples, n+1)
    predicted_W: np.ndarray
    measured_Wl: np.ndarray   # (samples, n+2)
    predicted_Wl: np.ndarray

    def worst_relative_mismatch(self, floors_W, floors_Wl):
        """Per-index worst |measured - predicted| / (|predicted| + floor)."""
        outW = np.max(np.abs(self.measured_W - self.predicted_W)
                      / (np.abs(self.predicted_W) + np.asarray(floors_W)), axis=0)
        outWl = np.max(np.abs(self.measured_Wl - self.predicted_Wl)
                       / (np.abs(self.predicted_Wl) + np.asarray(floors_Wl)), axis=0)
        return outW, outWl


def variational_consistency(samples, spec: FlowSpec) -> VariationalReport:
    """Centered-difference d/dt of W and Wl against the stored variational RHS.

    Needs at least five samples; endpoint samples are dropped (one-sided
    differences there). Sample spacing may be mildly non-uniform, the
    second-order gradient handles it.
    """
    if len(samples) < 5:
        raise NeedsMoreSamples(f"need >= 5 monitor samples, have {len(samples)}")
    t = np.array([s.t for s in samples])
    W = np.stack([s.record.W for s in samples])
    Wl = np.stack([s.record.Wl for s in samples])
    predW = np.stack([s.rhs_W for s in samples])
    predWl = np.stack([s.rhs_Wl for s in samples])
    dW = np.gradient(W, t, axis=0)
    dWl = np.gradient(Wl, t, axis=0)
    sl = slice(1, -1)
    return VariationalReport(
        t=t[sl],
        measured_W=dW[sl], predicted_W=predW[sl],
        measured_Wl=dWl[sl], predicted_Wl=predWl[sl],
    )
