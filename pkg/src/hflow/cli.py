"""Configuration-driven command line: build shapes, run flows, verify.

Subcommands::

    hflow run-flow <config>                 integrate a flow, write monitors
    hflow check <config>                    inequality checks on a shape
    hflow convergence <config> --levels ... refinement study (orders)
    hflow corpus <dir>                      run every .cfg in a directory

Config files are flat ``key = value`` text with ``#`` comments; see
``configs/`` in the repository for annotated examples. Relative output
directories resolve against ``HFLOW_OUTPUT_ROOT`` when set.

Exit codes: 0 success, 2 config parse/validation error, 3 flow abort
(cone violation, blow-up, lost star-shapedness); ``check``/``corpus``
return 1 when any verdict is ``fail``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import flows, functionals, verify
from .errors import ConeViolation, ConfigError, FlowBlowUp, HFlowError
from .hypersurface import SphereGrid, curvature, make_shape
from .symfun import SpeedFunctionSpec

_BOOL = {"on": True, "true": True, "1": True, "yes": True,
         "off": False, "false": False, "0": False, "no": False}


def _parse_kv(path: Path) -> dict:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _parse_speed(text: str, phi: str, phi_param: float) -> SpeedFunctionSpec:
    text = text.strip()
    try:
        if text == "mean":
            return SpeedFunctionSpec.mean(phi=phi, phi_param=phi_param)
        if text.startswith("quotient:"):
            k, l = (int(x) for x in text.split(":", 1)[1].split(","))
            return SpeedFunctionSpec.quotient(k, l, phi=phi, phi_param=phi_param)
    except HFlowError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad flow.speed {text!r}: {exc}") from exc
    raise ConfigError(f"bad flow.speed {text!r} (use 'mean' or 'quotient:k,l')")


def _parse_phi(text: str):
    text = text.strip()
    if ":" in text:
        kind, param = text.split(":", 1)
        try:
            return kind.strip(), float(param)
        except ValueError as exc:
            raise ConfigError(f"bad flow.phi parameter in {text!r}") from exc
    return text, 1.0


@dataclass
class RunConfig:
    """Validated run configuration."""

    n: int
    grid: SphereGrid
    shape_kind: str
    shape_params: dict
    flow: flows.FlowSpec | None
    monitor_dt: float
    checks: list
    out_dir: Path
    plots: bool
    c_equality: float
    c_fail: float
    name: str = "run"


_SHAPE_KEYS = {
    "centered_sphere": {"r0": float},
    "offcenter_sphere": {"rho": float, "d": float},
    "perturbed_sphere": {"r0": float, "eps": float, "m": int},
    "custom_profile": {"path": str},
}


def load_config(path) -> RunConfig:
    """Parse and validate a flat key-value config file."""
    path = Path(path)
    kv = _parse_kv(path)

    def take(key, default=None, cast=str):
        if key in kv:
            raw = kv.pop(key)
            try:
                if cast is bool:
                    return _BOOL[raw.lower()]
                return cast(raw)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        if default is None and cast is not bool:
            return None
        return default

    try:
        n = take("n", 2, int)
        mode = take("grid.mode", "axisym")
        n_theta = take("grid.n_theta", 128, int)
        n_xi = take("grid.n_xi", n_theta, int)
        if mode == "full2d":
            if n != 2:
                raise ConfigError("grid.mode=full2d requires n = 2")
            grid = SphereGrid.full2d(n_theta, n_xi)
        elif mode == "axisym":
            grid = SphereGrid.axisym(n, n_theta)
        else:
            raise ConfigError(f"unknown grid.mode {mode!r}")

        shape_kind = take("shape.kind", "centered_sphere")
        if shape_kind not in _SHAPE_KEYS:
            raise ConfigError(f"unknown shape.kind {shape_kind!r}")
        params = {}
        for pname, pcast in _SHAPE_KEYS[shape_kind].items():
            raw = take(f"shape.{pname}", cast=pcast)
            if raw is None:
                raise ConfigError(f"shape.kind={shape_kind} needs shape.{pname}")
            params[pname] = raw
        if shape_kind == "custom_profile":
            table_path = Path(params.pop("path"))
            if not table_path.is_absolute():
                table_path = path.parent / table_path
            params["table"] = np.loadtxt(table_path)

        flow_spec = None
        family = take("flow.family", "none")
        if family != "none":
            phi_kind, phi_param = _parse_phi(take("flow.phi", "identity"))
            speed = _parse_speed(take("flow.speed", "mean"), phi_kind, phi_param)
            flow_spec = flows.FlowSpec(
                family=family,
                speed=speed,
                t_end=take("flow.t_end", 10.0, float),
                cfl=take("flow.cfl", 0.5, float),
                convergence_tol=take("flow.convergence_tol", 1e-10, float),
                polar_filter=take("flow.polar_filter", True, bool),
                filter_cutoff_deg=take("flow.filter_cutoff_deg", 45.0, float),
            )
        monitor_dt = take("flow.monitor_dt", 0.02, float)

        checks_raw = take("checks", "")
        checks = [c.strip() for c in checks_raw.split(",") if c.strip()]
        for c in checks:
            if c not in verify.CHECK_NAMES:
                raise ConfigError(f"unknown check {c!r}; choose from {verify.CHECK_NAMES}")

        out_dir = Path(take("output.dir", path.stem + "_out"))
        if not out_dir.is_absolute():
            root = os.environ.get("HFLOW_OUTPUT_ROOT", "")
            out_dir = (Path(root) / out_dir) if root else out_dir
        plots = take("output.plots", False, bool)
        c_eq = take("tol.c_equality", 10.0, float)
        c_fail = take("tol.c_fail", 10.0, float)
    except HFlowError:
        raise
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if kv:
        raise ConfigError(f"{path}: unknown keys {sorted(kv)}")
    return RunConfig(n=n, grid=grid, shape_kind=shape_kind, shape_params=params,
                     flow=flow_spec, monitor_dt=monitor_dt, checks=checks,
                     out_dir=out_dir, plots=plots, c_equality=c_eq, c_fail=c_fail,
                     name=path.stem)


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------


def _monitors_csv(samples, n: int) -> str:
    head = ["t", "step", "min_phi", "max_phi", "max_grad_sq",
            "min_static_margin", "min_alpha_bound", "min_static_factor"]
    head += functionals.csv_header(n).split(",")[1:]  # record columns minus t
    head += [f"rhs_W{k}" for k in range(n + 1)]
    head += [f"rhs_Wl{k}" for k in range(n + 2)]
    lines = [",".join(head)]
    for s in samples:
        row = [f"{s.t:.17g}", str(s.step), f"{s.min_phi:.17g}", f"{s.max_phi:.17g}",
               f"{s.max_grad_sq:.17g}", f"{s.min_static_margin:.17g}",
               f"{s.min_alpha_bound:.17g}", f"{s.min_static_factor:.17g}"]
        rec_cols = functionals.csv_row(s.record).split(",")[1:]
        row += rec_cols
        row += [f"{v:.17g}" for v in s.rhs_W]
        row += [f"{v:.17g}" for v in s.rhs_Wl]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _profile_table(graph) -> str:
    grid = graph.grid
    r = graph.r
    if grid.mode == "full2d":
        r = r.mean(axis=1)
    lines = ["# theta_radians radius" +
             (" (longitude average)" if grid.mode == "full2d" else "")]
    for th, rr in zip(grid.theta, r):
        lines.append(f"{th:.17g} {rr:.17g}")
    return "\n".join(lines) + "\n"


def _plot_run(outdir: Path, result) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    samples = result.samples
    t = np.array([s.t for s in samples])
    n = samples[0].record.n

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(result.step_t, np.maximum(result.step_max_grad, 1e-300), lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("max |D phi|^2")
    fig.tight_layout()
    fig.savefig(outdir / "gradient_decay.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for k in range(n + 1):
        ax.plot(t, [s.record.W[k] for s in samples], label=f"W{k}")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax.set_title("quermassintegrals")
    fig.tight_layout()
    fig.savefig(outdir / "quermassintegrals.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for k in range(n + 2):
        ax.plot(t, [s.record.Wl[k] for s in samples], label=f"Wl{k}")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax.set_title("weighted curvature integrals")
    fig.tight_layout()
    fig.savefig(outdir / "weighted_integrals.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, [s.min_static_margin for s in samples], lw=0.8)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("t")
    ax.set_ylabel("min static margin")
    fig.tight_layout()
    fig.savefig(outdir / "static_margin.svg")
    plt.close(fig)


def cmd_run_flow(cfg: RunConfig) -> int:
    if cfg.flow is None:
        raise ConfigError("run-flow needs a flow.family")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    graph = make_shape(cfg.grid, cfg.shape_kind, **cfg.shape_params)
    try:
        result = flows.run(graph, cfg.flow, monitor_dt=cfg.monitor_dt)
    except (ConeViolation, FlowBlowUp) as exc:
        print(f"flow aborted: {exc}", file=sys.stderr)
        node = getattr(exc, "node", None)
        if node is not None:
            print(f"  at grid node {node}", file=sys.stderr)
        history = getattr(exc, "history", None) or []
        if history:
            (cfg.out_dir / "monitors.csv").write_text(_monitors_csv(history, cfg.n))
            print(f"  monitor history up to failure in {cfg.out_dir/'monitors.csv'}",
                  file=sys.stderr)
        return 3

    (cfg.out_dir / "monitors.csv").write_text(_monitors_csv(result.samples, cfg.n))
    (cfg.out_dir / "final_profile.txt").write_text(_profile_table(result.state.graph))

    audit = verify.monotonicity_audit(result.samples, cfg.flow, h=cfg.grid.h_theta)
    lines = [
        f"flow family        : {cfg.flow.family}",
        f"speed              : {cfg.flow.speed.label()}",
        f"grid               : {cfg.grid.mode} {cfg.grid.shape}",
        f"status             : {result.status} (t={result.state.t:.6g}, "
        f"steps={result.state.step_index}, dt={result.state.dt:.3e})",
        f"max|Dphi|^2        : {result.step_max_grad[0]:.3e} -> {result.step_max_grad[-1]:.3e}",
        f"fitted decay rate  : {result.alpha_fit:.6g}",
        f"decay rate bound   : {result.alpha_hat:.6g} (run min of 2(n-1)/(n lam lam' v))",
        f"r_inf (mean radius): {result.r_inf:.9g}",
        f"Wl0 relative drift : {result.wl0_rel_drift:.3e}",
        f"C0 slack violations: {result.c0_violations} (worst {result.c0_worst:.3e})",
        "monotonicity audit : "
        + ("hypothesis=static-convex ok" if audit.hypothesis_static_convex
           else "static-convexity hypothesis NOT met (claims informational)"),
    ]
    for c in audit.claims:
        lines.append(f"  {c.functional:<4} {c.direction:<10} worst={c.worst_violation:+.3e} "
                     f"tol={c.tol:.3e} {'ok' if c.ok else 'VIOLATED'}")
    if cfg.flow.conserves_weighted_volume:
        wl0 = result.samples[0].record.Wl[0]
        r_pred = functionals.ball_profile_inverse(cfg.n, 0, True, wl0)
        lines.append(f"limit radius check : |r_inf - h0^-1(Wl0(0))| = {abs(result.r_inf - r_pred):.3e}")
    report = "\n".join(lines) + "\n"
    (cfg.out_dir / "report.txt").write_text(report)
    print(report, end="")

    if cfg.plots:
        _plot_run(cfg.out_dir, result)
    return 0


def cmd_check(cfg: RunConfig) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    graph = make_shape(cfg.grid, cfg.shape_kind, **cfg.shape_params)
    fieldc = curvature(graph)
    names = cfg.checks or list(verify.CHECK_NAMES)
    reports = verify.run_checks(fieldc, names, shape_id=cfg.name,
                                c_eq=cfg.c_equality, c_fail=cfg.c_fail)
    (cfg.out_dir / "reports.csv").write_text(verify.reports_csv(reports))
    text = verify.reports_text(reports)
    (cfg.out_dir / "report.txt").write_text(text)
    print(text, end="")
    return 1 if any(r.verdict == "fail" for r in reports) else 0


def cmd_convergence(cfg: RunConfig, levels, temporal: bool) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if len(levels) < 3:
        raise ConfigError("convergence study needs >= 3 levels")
    rows = []
    for nt in levels:
        if cfg.grid.mode == "full2d":
            grid = SphereGrid.full2d(nt, nt)
        else:
            grid = SphereGrid.axisym(cfg.n, nt)
        graph = make_shape(grid, cfg.shape_kind, **cfg.shape_params)
        fieldc = curvature(graph)
        rec = functionals.evaluate(fieldc)
        from .hypersurface import support_identity_residuals

        mink = float(np.abs(rec.minkowski).max())
        supp = support_identity_residuals(fieldc, graph).max_abs
        row = {"n_theta": nt, "minkowski": mink, "support_identity": supp}
        if cfg.shape_kind in ("centered_sphere", "offcenter_sphere"):
            rho = cfg.shape_params.get("r0", cfg.shape_params.get("rho"))
            target = 1.0 / math.tanh(rho)
            row["curvature_err"] = float(max(np.abs(fieldc.kappa_a - target).max(),
                                             np.abs(fieldc.kappa_b - target).max()))
        if cfg.shape_kind == "centered_sphere":
            rep = verify.check_wl_vs_wl0(fieldc, 1, rec)
            row["equality_slack"] = abs(rep.relative_slack)
        rows.append(row)

    metrics = [k for k in rows[0] if k != "n_theta"]
    lines = ["metric," + ",".join(str(r["n_theta"]) for r in rows) + ",orders"]
    print(f"{'metric':<18}" + "".join(f"{r['n_theta']:>12}" for r in rows) + "   orders")
    for m in metrics:
        vals = [r[m] for r in rows]
        orders = [math.log2(vals[i] / vals[i + 1]) if vals[i + 1] > 0 else float("nan")
                  for i in range(len(vals) - 1)]
        otxt = "/".join(f"{o:.2f}" for o in orders)
        print(f"{m:<18}" + "".join(f"{v:>12.3e}" for v in vals) + f"   {otxt}")
        lines.append(m + "," + ",".join(f"{v:.17g}" for v in vals) + "," + otxt)

    if temporal:
        if cfg.flow is None:
            raise ConfigError("--temporal needs a flow.family in the config")
        graph = make_shape(cfg.grid, cfg.shape_kind, **cfg.shape_params)
        rhs = flows._make_rhs(cfg.grid, cfg.flow)
        state0 = flows.initial_state(graph, cfg.flow)
        base_dt = state0.dt
        horizon = 40 * base_dt

        def solve(dt):
            phi = graph.phi.copy()
            for _ in range(int(round(horizon / dt))):
                phi, _ = flows._advance(phi, dt, rhs, None)
            return phi

        s1, s2, s4 = solve(base_dt), solve(base_dt / 2), solve(base_dt / 4)
        e1 = float(np.abs(s1 - s4).max())
        e2 = float(np.abs(s2 - s4).max())
        p_t = math.log2(e1 / e2) if e2 > 0 else float("nan")
        print(f"temporal RK4 order: {p_t:.2f}  (e1={e1:.3e}, e2={e2:.3e})")
        lines.append(f"temporal_order,{p_t:.17g}")

    (cfg.out_dir / "convergence.csv").write_text("\n".join(lines) + "\n")
    return 0


def cmd_corpus(directory) -> int:
    directory = Path(directory)
    cfgs = sorted(directory.glob("*.cfg"))
    if not cfgs:
        print(f"no .cfg files in {directory}", file=sys.stderr)
        return 2
    any_fail = False
    any_abort = False
    for path in cfgs:
        try:
            cfg = load_config(path)
        except ConfigError as exc:
            print(f"[config error] {path.name}: {exc}", file=sys.stderr)
            return 2
        if cfg.flow is not None:
            status = cmd_run_flow(cfg)
            any_abort |= status == 3
            print(f"[{'ok' if status == 0 else 'ABORT'}] run-flow {path.name}")
        else:
            status = cmd_check(cfg)
            any_fail |= status == 1
            print(f"[{'ok' if status == 0 else 'FAIL'}] check {path.name}")
    if any_abort:
        return 3
    return 1 if any_fail else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hflow", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run-flow", help="integrate a configured flow")
    p_run.add_argument("config")
    p_chk = sub.add_parser("check", help="inequality checks on a configured shape")
    p_chk.add_argument("config")
    p_cnv = sub.add_parser("convergence", help="grid refinement study")
    p_cnv.add_argument("config")
    p_cnv.add_argument("--levels", default="32,64,128",
                       help="comma-separated n_theta levels (>= 3)")
    p_cnv.add_argument("--temporal", action="store_true",
                       help="also estimate the RK4 order by dt halving")
    p_cor = sub.add_parser("corpus", help="run every .cfg in a directory")
    p_cor.add_argument("directory")
    args = parser.parse_args(argv)

    try:
        if args.command == "run-flow":
            return cmd_run_flow(load_config(args.config))
        if args.command == "check":
            return cmd_check(load_config(args.config))
        if args.command == "convergence":
            levels = [int(x) for x in args.levels.split(",") if x.strip()]
            return cmd_convergence(load_config(args.config), levels, args.temporal)
        if args.command == "corpus":
            return cmd_corpus(args.directory)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConeViolation, FlowBlowUp) as exc:
        print(f"flow aborted: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
