"""Command-line pipelines: data collection, excitation checks, controller and
trigger synthesis, event-triggered simulation, verification, and trace/report
serialization.

Commands
--------
synthesize --config <path> [--out <dir>]   stabilization pipeline
track      --config <path> [--out <dir>]   reference-tracking pipeline
reproduce  --example <1|2a|2b|3a|3b>       bundled demo run with assertions

Exit codes: 0 all checks pass, 1 infeasible stage or failed check, 2 bad
configuration.  Traces are CSV files with header
``k,x1..xn,u1..um,p1..pl,w1..wn,triggered,V``; the report is JSON.
"""
from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import examples as bundled
from .data_engine import (collect, min_data_length, pe_margin, regressor_rank,
                          uniform_input_law)
from .event_trigger import (detector_soundness, extract_input_matrix,
                            inter_event_stats, iss_practical_constant,
                            practical_decrease_check, simulate_event_triggered,
                            solve_trigger, zoh_contract)
from .lpv_core import (AffineMatrixFunction, LpvSystem, SchedulingBox,
                       SimulationTrace, bounded_noise_law, box_schedule_law,
                       walk_schedule_law)
from .stabilization_synthesis import (SynthesisConfig, iss_constants,
                                      solve_synthesis, verify_closed_loop)
from .tracking import (AugmentedSystem, augment_system, collect_aug,
                       from_augmented_matrices, make_reference,
                       min_data_length_aug, simulate_tracking_event_triggered,
                       solve_tracking_synthesis, solve_tracking_trigger)

OUT_DIR_ENV = "LPVET_OUT_DIR"


class ConfigError(ValueError):
    """Invalid run configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_REQUIRED_TOP = ("mode", "seed", "scheduling_box", "data", "synthesis",
                 "trigger", "simulation")


@dataclass
class RunConfig:
    raw: dict

    @property
    def mode(self) -> str:
        return self.raw["mode"]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    def box(self) -> SchedulingBox:
        b = self.raw["scheduling_box"]
        return SchedulingBox(b["lower"], b["upper"])

    def solver_kwargs(self) -> dict:
        s = self.raw.get("solver", {})
        kw = {}
        if "solvers" in s:
            kw["solvers"] = tuple(s["solvers"])
        if "tol" in s:
            kw["tol"] = float(s["tol"])
        if "interior_cap" in s:
            kw["interior_cap"] = float(s["interior_cap"])
        opts = {}
        if "scs_eps" in s or "scs_max_iters" in s:
            opts["SCS"] = {}
            if "scs_eps" in s:
                opts["SCS"]["eps"] = float(s["scs_eps"])
            if "scs_max_iters" in s:
                opts["SCS"]["max_iters"] = int(s["scs_max_iters"])
        if "clarabel_max_iter" in s:
            opts["CLARABEL"] = {"max_iter": int(s["clarabel_max_iter"])}
        if opts:
            kw["solver_opts"] = opts
        return kw


def _affine_from_json(d: dict) -> AffineMatrixFunction:
    return AffineMatrixFunction(np.array(d["base"], dtype=float),
                                tuple(np.array(c, dtype=float)
                                      for c in d.get("coeffs", [])))


def _affine_to_json(f: AffineMatrixFunction) -> dict:
    return {"base": f.base.tolist(), "coeffs": [c.tolist() for c in f.coeffs]}


def validate_config(raw: dict) -> RunConfig:
    for key in _REQUIRED_TOP:
        if key not in raw:
            raise ConfigError(f"missing required field {key!r}")
    if raw["mode"] not in ("stabilize", "track"):
        raise ConfigError(f"mode must be 'stabilize' or 'track', got {raw['mode']!r}")
    if not isinstance(raw["seed"], int):
        raise ConfigError("seed must be an integer (mandatory for reproducibility)")
    syn = raw["synthesis"]
    if not syn.get("sigma", 0) > 1:
        raise ConfigError("synthesis.sigma must exceed 1")
    if not 0 < syn.get("beta1", -1) < 1:
        raise ConfigError("synthesis.beta1 must lie in (0, 1)")
    if not syn.get("eps1", 0) > 0:
        raise ConfigError("synthesis.eps1 must be positive")
    trg = raw["trigger"]
    if not trg.get("mu", 0) > 0:
        raise ConfigError("trigger.mu must be positive")
    if not trg.get("eps2", 0) > 0:
        raise ConfigError("trigger.eps2 must be positive")
    if not trg.get("v", 0) > 0:
        raise ConfigError("trigger.v must be positive")
    box = raw["scheduling_box"]
    if len(box.get("lower", [])) != len(box.get("upper", [])):
        raise ConfigError("scheduling_box lower/upper lengths differ")
    if raw["mode"] == "track":
        trk = raw.get("tracking")
        if not trk or "reference" not in trk:
            raise ConfigError("track mode needs tracking.reference")
        kind = trk["reference"].get("kind")
        if kind not in ("sinusoid", "square", "circle", "figure8", "custom"):
            raise ConfigError(f"unknown reference kind {kind!r}")
    if "system" not in raw:
        raise ConfigError("missing required field 'system'")
    if "horizon" not in raw["simulation"]:
        raise ConfigError("simulation.horizon is required")
    return RunConfig(raw)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed config {path}: line {e.lineno}, col {e.colno}: {e.msg}")
    return validate_config(raw)


def emit_config(cfg: RunConfig, path):
    with open(path, "w") as fh:
        json.dump(cfg.raw, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _build_plant(cfg: RunConfig):
    """Returns (LpvSystem, None) in stabilize mode or (LpvSystem, AugmentedSystem)
    in track mode."""
    s = cfg.raw["system"]
    if "builtin" in s:
        name = s["builtin"]
        if name not in bundled.REGISTRY:
            raise ConfigError(f"unknown builtin system {name!r}")
        ex = bundled.REGISTRY[name]()
        if cfg.mode == "stabilize":
            if not isinstance(ex, bundled.StabilizationExample):
                raise ConfigError(f"builtin {name!r} is not a stabilization plant")
            return ex.system, None
        if isinstance(ex, bundled.TrackingExample):
            return ex.augsys.base, ex.augsys
        return ex.system, augment_system(ex.system)
    if "A_aug" in s:
        if cfg.mode != "track":
            raise ConfigError("augmented matrices are only valid in track mode")
        aug = from_augmented_matrices(_affine_from_json(s["A_aug"]),
                                      _affine_from_json(s["B_aug"]),
                                      int(s["n_base"]))
        return aug.base, aug
    try:
        sys_ = LpvSystem(_affine_from_json(s["A"]), _affine_from_json(s["B"]),
                         _affine_from_json(s["C"]), _affine_from_json(s["D"]))
    except KeyError as e:
        raise ConfigError(f"system definition missing matrix {e}")
    return sys_, (augment_system(sys_) if cfg.mode == "track" else None)


def _schedule_law(cfg: RunConfig, box: SchedulingBox):
    sim = cfg.raw["simulation"]
    sched = sim.get("schedule", {"kind": "walk", "step": 0.05})
    if sched.get("kind", "walk") == "walk":
        return walk_schedule_law(box, float(sched.get("step", 0.05)))
    return box_schedule_law(box)


# ---------------------------------------------------------------------------
# trace serialization
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def emit_trace(trace: SimulationTrace, path, P=None):
    """CSV with one row per state sample (N+1 rows).

    Header: k, x1..xn, u1..um, p1..pl, w1..wn, triggered, V.  Per-step
    columns (inputs, schedules, perturbations, trigger flag) are written as
    zero on the final row, which has no step attached.  V is x' P^-1 x when
    P is given, else zero.
    """
    n = trace.n
    m = trace.inputs.shape[1]
    ell = trace.schedules.shape[1]
    V = np.zeros(trace.horizon + 1)
    if P is not None:
        Pinv = np.linalg.inv(np.asarray(P, dtype=float))
        V = np.einsum("ki,ij,kj->k", trace.states, Pinv, trace.states)
    header = (["k"] + [f"x{i+1}" for i in range(n)] + [f"u{i+1}" for i in range(m)]
              + [f"p{i+1}" for i in range(ell)] + [f"w{i+1}" for i in range(n)]
              + ["triggered", "V"])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(trace.horizon + 1):
            row = [str(k)]
            row += [_fmt(v) for v in trace.states[k]]
            if k < trace.horizon:
                row += [_fmt(v) for v in trace.inputs[k]]
                row += [_fmt(v) for v in trace.schedules[k]]
                row += [_fmt(v) for v in trace.perturbations[k]]
                row.append(str(int(trace.triggered[k])))
            else:
                row += [_fmt(0.0)] * (m + ell + n) + ["0"]
            row.append(_fmt(V[k]))
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    stages: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def stage(self, name: str, status: str, **details):
        self.stages.append({"name": name, "status": status,
                            "details": _jsonable(details)})

    @property
    def ok(self) -> bool:
        return all(s["status"] == "ok" for s in self.stages)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "stages": self.stages, **_jsonable(self.data)}

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def run_stabilization_pipeline(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Procedure for robust stabilization: collect, excitation check,
    controller synthesis, trigger synthesis, event-triggered simulation,
    verification."""
    report = RunReport()
    sys_, _ = _build_plant(cfg)
    box = cfg.box()
    raw = cfg.raw
    n, m, ell = sys_.n, sys_.m, sys_.nsched

    # stage 1: experiment
    dcfg = raw["data"]
    T = dcfg.get("length", "auto")
    T = min_data_length(n, m, ell) if T == "auto" else int(T)
    delta = float(dcfg.get("delta", 0.0))
    amp = float(dcfg.get("input_range", 1.0))
    data = collect(sys_, T, uniform_input_law(m, -amp, amp), box_schedule_law(box),
                   bounded_noise_law(delta, n), dcfg.get("x0", np.zeros(n)),
                   rng=cfg.seed, delta=delta)
    rank = regressor_rank(data)
    target = data.full_rank_target()
    margin = pe_margin(data) if T >= (1 + ell) * n + 1 else 0.0
    if raw.get("pe_check", True) and data.too_short:
        report.stage("collect", "failed", reason="insufficient data length",
                     T=T, required=min_data_length(n, m, ell))
        return report
    report.stage("collect", "ok", T=T, rank=rank, rank_target=target,
                 pe_margin=margin, too_short=data.too_short)
    if rank < target:
        report.stage("excitation", "failed", rank=rank, required=target)
        return report
    report.stage("excitation", "ok", rank=rank, required=target)

    # stage 2: controller synthesis
    syn = raw["synthesis"]
    trg = raw["trigger"]
    beta2 = float(trg.get("beta2", syn["beta1"] / 2.0))
    scfg = SynthesisConfig(sigma=float(syn["sigma"]), beta1=float(syn["beta1"]),
                           eps1=float(syn["eps1"]), delta=delta,
                           trace_bounds=tuple(syn.get("trace_bounds", (0.1, 10.0))),
                           psd_margin=float(syn.get("psd_margin", 1e-7)))
    headroom = (float(trg["mu"]), float(trg["eps2"]), beta2) \
        if raw.get("solver", {}).get("headroom", True) else None
    res = solve_synthesis(data, box, scfg, trigger_headroom=headroom,
                          **cfg.solver_kwargs())
    if not hasattr(res, "P"):
        report.stage("controller_synthesis", "infeasible", solver_status=res.status,
                     solver=res.solver)
        return report
    report.stage("controller_synthesis", "ok", solver=res.solution.solver,
                 psd_residual=res.solution.psd_residual,
                 eq_residual=res.solution.eq_residual,
                 trace_P=float(np.trace(res.P)))
    report.data["P"] = res.P
    report.data["gains"] = _affine_to_json(res.gains)
    report.data["iss"] = iss_constants(res.P, scfg.beta1)

    # stage 3: trigger synthesis
    trig = solve_trigger(res.P, res.f_quad, data, box, mu=float(trg["mu"]),
                         eps2=float(trg["eps2"]), beta2=beta2, v=float(trg["v"]),
                         delta=delta, **cfg.solver_kwargs())
    if not hasattr(trig, "config"):
        report.stage("trigger_synthesis", "infeasible", solver_status=trig.status)
        return report
    report.stage("trigger_synthesis", "ok", solver=trig.solution.solver,
                 psd_residual=trig.solution.psd_residual)
    report.data["psi1"] = trig.config.psi1
    report.data["psi2"] = trig.config.psi2
    report.data["iss_practical_c0"] = iss_practical_constant(res.P, trig.config.mu,
                                                             trig.config.beta2)

    # stage 4: event-triggered simulation + verification
    sim = raw["simulation"]
    N = int(sim["horizon"])
    sim_delta = float(sim.get("delta", delta))
    b_est = extract_input_matrix(data)
    trace = simulate_event_triggered(sys_, res.gains, trig.config, b_est,
                                     _schedule_law(cfg, box),
                                     bounded_noise_law(sim_delta, n),
                                     sim.get("x0", np.zeros(n)), N,
                                     rng=cfg.seed + 1)
    trace_path = out_dir / "trace_event_triggered.csv"
    emit_trace(trace, trace_path, P=res.P)
    stats = inter_event_stats(trace)
    report.stage("simulation", "ok", horizon=N, inter_event=stats,
                 final_state_norm=float(np.linalg.norm(trace.states[-1])),
                 trace_csv=str(trace_path))

    verify = verify_closed_loop(sys_, data, res.gains, res.P, scfg, box,
                                trials=int(raw.get("verification", {}).get("trials", 100)),
                                seed=cfg.seed + 2)
    checks = {
        "frozen_vertices_stable": verify["vertices_stable"],
        "lyapunov_decrease": verify["decrease_ok"],
        "detector_soundness": detector_soundness(trace, trig.config),
        "zoh_contract": zoh_contract(trace, res.gains),
        "practical_decrease": practical_decrease_check(trace, res.P, trig.config,
                                                       scfg.sigma)["passed"],
    }
    report.data["verification"] = {**verify, "checks": checks}
    report.stage("verification", "ok" if all(checks.values()) else "failed", **checks)
    return report


def run_tracking_pipeline(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Procedure for robust reference tracking on the augmented plant."""
    report = RunReport()
    _, augsys = _build_plant(cfg)
    box = cfg.box()
    raw = cfg.raw
    nbar, m, ell = augsys.n, augsys.m, augsys.nsched

    sim = raw["simulation"]
    N = int(sim["horizon"])
    trk = raw["tracking"]
    ref_spec = dict(trk["reference"])
    kind = ref_spec.pop("kind")
    reference = make_reference(kind, ref_spec, N)
    if reference.r != augsys.r:
        report.stage("reference", "failed",
                     reason=f"reference dimension {reference.r} != output dimension {augsys.r}")
        return report
    report.stage("reference", "ok", kind=kind, max_norm=reference.max_norm())

    dcfg = raw["data"]
    T = dcfg.get("length", "auto")
    T = min_data_length_aug(nbar, m, ell) if T == "auto" else int(T)
    delta = float(dcfg.get("delta", 0.0))
    amp = float(dcfg.get("input_range", 1.0))
    data = collect_aug(augsys, T, uniform_input_law(m, -amp, amp),
                       box_schedule_law(box), bounded_noise_law(delta, augsys.n_base),
                       reference, dcfg.get("x0", np.zeros(nbar)), rng=cfg.seed,
                       delta=delta)
    rank = regressor_rank(data)
    target = data.full_rank_target()
    if raw.get("pe_check", True) and data.too_short:
        report.stage("collect", "failed", reason="insufficient data length",
                     T=T, required=min_data_length_aug(nbar, m, ell))
        return report
    report.stage("collect", "ok", T=T, rank=rank, rank_target=target,
                 delta_hat=data.delta)
    if rank < target:
        report.stage("excitation", "failed", rank=rank, required=target)
        return report
    report.stage("excitation", "ok", rank=rank, required=target)

    syn = raw["synthesis"]
    trg = raw["trigger"]
    beta4 = float(trg.get("beta2", syn["beta1"] / 2.0))
    scfg = SynthesisConfig(sigma=float(syn["sigma"]), beta1=float(syn["beta1"]),
                           eps1=float(syn["eps1"]), delta=data.delta,
                           trace_bounds=tuple(syn.get("trace_bounds", (0.1, 10.0))),
                           psd_margin=float(syn.get("psd_margin", 1e-7)))
    headroom = (float(trg["mu"]), float(trg["eps2"]), beta4) \
        if raw.get("solver", {}).get("headroom", True) else None
    res = solve_tracking_synthesis(data, box, scfg, trigger_headroom=headroom,
                                   **cfg.solver_kwargs())
    if not hasattr(res, "P"):
        report.stage("controller_synthesis", "infeasible", solver_status=res.status)
        return report
    report.stage("controller_synthesis", "ok", solver=res.solution.solver,
                 psd_residual=res.solution.psd_residual,
                 eq_residual=res.solution.eq_residual,
                 trace_P=float(np.trace(res.P)))
    report.data["P"] = res.P
    report.data["gains"] = _affine_to_json(res.gains)

    trig = solve_tracking_trigger(res.P, res.f_quad, data, box, mu=float(trg["mu"]),
                                  eps4=float(trg["eps2"]), beta4=beta4,
                                  v=float(trg["v"]), delta_hat=data.delta,
                                  **cfg.solver_kwargs())
    if not hasattr(trig, "config"):
        report.stage("trigger_synthesis", "infeasible", solver_status=trig.status)
        return report
    report.stage("trigger_synthesis", "ok", solver=trig.solution.solver,
                 psd_residual=trig.solution.psd_residual)
    report.data["psi1"] = trig.config.psi1
    report.data["psi2"] = trig.config.psi2

    sim_delta = float(sim.get("delta", delta))
    b_est = extract_input_matrix(data)
    trace, metrics = simulate_tracking_event_triggered(
        augsys, res.gains, trig.config, b_est, reference, _schedule_law(cfg, box),
        bounded_noise_law(sim_delta, augsys.n_base), sim.get("x0", np.zeros(nbar)),
        N, rng=cfg.seed + 1)
    trace_path = out_dir / "trace_tracking.csv"
    emit_trace(trace, trace_path, P=res.P)
    stats = inter_event_stats(trace)
    report.stage("simulation", "ok", horizon=N, inter_event=stats,
                 tracking=metrics, trace_csv=str(trace_path))
    report.data["tracking_metrics"] = metrics

    checks = {
        "detector_soundness": detector_soundness(trace, trig.config),
        "zoh_contract": zoh_contract(trace, res.gains),
        "practical_decrease": practical_decrease_check(trace, res.P, trig.config,
                                                       scfg.sigma)["passed"],
        "transmissions_below_horizon": stats["count"] < N,
        "integral_state_bounded": metrics["integral_state_final_quarter_max"]
        <= 10.0 * max(metrics["integral_state_mid"], 1e-6),
    }
    report.data["verification"] = {"checks": checks}
    report.stage("verification", "ok" if all(checks.values()) else "failed", **checks)
    return report


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _resolve_out_dir(arg_out) -> Path:
    out = arg_out or os.environ.get(OUT_DIR_ENV) or "lpvet_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_overrides(cfg: RunConfig, seed=None, solver_tol=None) -> RunConfig:
    raw = copy.deepcopy(cfg.raw)
    if seed is not None:
        raw["seed"] = int(seed)
    if solver_tol is not None:
        raw.setdefault("solver", {})["tol"] = float(solver_tol)
    return validate_config(raw)


def cmd_synthesize(config_path, out_dir=None, seed=None, solver_tol=None) -> RunReport:
    cfg = _apply_overrides(load_config(config_path), seed, solver_tol)
    if cfg.mode != "stabilize":
        raise ConfigError("synthesize expects a stabilize-mode config")
    out = _resolve_out_dir(out_dir)
    report = run_stabilization_pipeline(cfg, out)
    report.write(out / "report.json")
    return report

def cmd_track(config_path, out_dir=None, seed=None, solver_tol=None) -> RunReport:
    cfg = _apply_overrides(load_config(config_path), seed, solver_tol)
    if cfg.mode != "track":
        raise ConfigError("track expects a track-mode config")
    out = _resolve_out_dir(out_dir)
    report = run_tracking_pipeline(cfg, out)
    report.write(out / "report.json")
    return report


EXAMPLE_CONFIGS = {
    "1": "example1.json",
    "2a": "example2_sine.json",
    "2b": "example2_square.json",
    "3a": "example3_circle.json",
    "3b": "example3_fig8.json",
}


def bundled_config_path(example_id: str) -> Path:
    if example_id not in EXAMPLE_CONFIGS:
        raise ConfigError(f"unknown example id {example_id!r}; "
                          f"choose from {sorted(EXAMPLE_CONFIGS)}")
    return Path(str(resources.files("lpvet").joinpath("configs",
                                                      EXAMPLE_CONFIGS[example_id])))


def _reproduce_assertions(example_id: str, report: RunReport) -> list[str]:
    """Per-example acceptance checks; returns failure messages."""
    fails = []

    def expect(cond, msg):
        if not cond:
            fails.append(msg)

    stages = {s["name"]: s for s in report.stages}

    def stage_ok(name):
        return name in stages and stages[name]["status"] == "ok"

    if example_id == "1":
        expect(stage_ok("collect") and stages["collect"]["details"]["T"] == 23,
               "experiment length must be 23")
        expect(stage_ok("excitation") and stages["collect"]["details"]["rank"] == 9,
               "regressor rank must be 9")
        expect(stage_ok("controller_synthesis"), "controller synthesis must be feasible")
        expect(stage_ok("trigger_synthesis"), "trigger synthesis must be feasible")
        expect(stage_ok("verification"), "closed-loop verification must pass")
        if stage_ok("simulation"):
            expect(stages["simulation"]["details"]["inter_event"]["mean_interval"] > 1.0,
                   "mean inter-event interval must exceed 1")
    else:
        want_T = {"2a": 17, "2b": 17, "3a": 29, "3b": 29}[example_id]
        want_rank = {"2a": 6, "2b": 6, "3a": 10, "3b": 10}[example_id]
        expect(stage_ok("collect") and stages["collect"]["details"]["T"] == want_T,
               f"experiment length must be {want_T}")
        expect(stage_ok("excitation")
               and stages["collect"]["details"]["rank"] == want_rank,
               f"regressor rank must be {want_rank}")
        expect(stage_ok("controller_synthesis"), "controller synthesis must be feasible")
        expect(stage_ok("trigger_synthesis"), "trigger synthesis must be feasible")
        expect(stage_ok("verification"), "tracking verification must pass")
        if stage_ok("simulation"):
            det = stages["simulation"]["details"]
            expect(det["inter_event"]["count"] < det["horizon"],
                   "transmissions must stay below the horizon")
            ceiling = {"2a": 0.5, "2b": 1.0, "3a": 1.0, "3b": 1.5}[example_id]
            expect(det["tracking"]["rms_final_quarter"] <= ceiling,
                   f"final-quarter RMS must stay below {ceiling}")
    return fails


def cmd_reproduce(example_id: str, out_dir=None, seed=None, solver_tol=None) -> RunReport:
    path = bundled_config_path(example_id)
    cfg = _apply_overrides(load_config(path), seed, solver_tol)
    out = _resolve_out_dir(out_dir)
    runner = run_stabilization_pipeline if cfg.mode == "stabilize" \
        else run_tracking_pipeline
    report = runner(cfg, out)
    fails = _reproduce_assertions(example_id, report)
    report.data["reproduce_checks"] = {"example": example_id, "failures": fails}
    if fails:
        report.stage("reproduce_assertions", "failed", failures=fails)
    else:
        report.stage("reproduce_assertions", "ok")
    report.write(out / "report.json")
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lpvet",
        description="Data-driven event-triggered LPV control pipelines")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("synthesize", "track"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--solver-tol", type=float, default=None)
    p = sub.add_parser("reproduce")
    p.add_argument("--example", required=True, choices=sorted(EXAMPLE_CONFIGS))
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--solver-tol", type=float, default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "synthesize":
            report = cmd_synthesize(args.config, args.out, args.seed, args.solver_tol)
        elif args.command == "track":
            report = cmd_track(args.config, args.out, args.seed, args.solver_tol)
        else:
            report = cmd_reproduce(args.example, args.out, args.seed, args.solver_tol)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    for s in report.stages:
        print(f"[{s['status']:>10}] {s['name']}")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
