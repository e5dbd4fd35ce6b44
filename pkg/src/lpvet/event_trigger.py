"""Event-triggered communication on the controller-to-actuator channel.

Implements the quadratic event detector, the sampling-induced error signal
computed from a data-estimated input matrix, the trigger-parameter synthesis
program (vertex-relaxed like the stabilization program, but with the
Lyapunov matrix and closed-loop parameterization frozen), the event-triggered
closed-loop simulation with zero-order hold, and the post-hoc decrease and
inter-event diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp_interface as sdp
from .data_engine import ExperimentData, RankDeficiencyError, build_regressors, regressor_rank
from .lpv_core import AffineMatrixFunction, LpvSystem, SchedulingBox, SimulationTrace
from .sdp_interface import AffineMatrixExpression, Program, Solution, as_expression, bmat, blkdiag
from .stabilization_synthesis import (ChannelStructure, FQuad,
                                      add_multiplier_constraints)

Array = np.ndarray


@dataclass(frozen=True)
class TriggerConfig:
    """Event rule nu' Psi1 nu >= x' Psi2 x + v, plus the scalars that shaped it."""

    psi1: Array
    psi2: Array
    v: float
    mu: float
    eps2: float
    beta2: float

    def __post_init__(self):
        psi1 = np.asarray(self.psi1, dtype=float)
        psi2 = np.asarray(self.psi2, dtype=float)
        object.__setattr__(self, "psi1", psi1)
        object.__setattr__(self, "psi2", psi2)
        for name, M in (("psi1", psi1), ("psi2", psi2)):
            if np.linalg.eigvalsh(0.5 * (M + M.T))[0] <= 0:
                raise ValueError(f"{name} must be positive definite")
        if self.v <= 0 or self.mu <= 0 or self.eps2 <= 0 or self.beta2 <= 0:
            raise ValueError("v, mu, eps2, beta2 must all be positive")


@dataclass
class EtState:
    """Held quantities between transmissions (zero-order hold)."""

    x_held: Array
    p_held: Array
    u_held: Array
    last_instant: int


def extract_input_matrix(data: ExperimentData) -> AffineMatrixFunction:
    """Input-matrix estimate from the data: columns n(1+l)+1 .. (n+m)(1+l) of
    (Xplus - W) G^+, reshaped into the affine function B0 + sum p_i Bi.
    """
    target = data.full_rank_target()
    if regressor_rank(data) < target:
        raise RankDeficiencyError("cannot extract input matrix from rank-deficient data")
    G = build_regressors(data).G
    coeff = (data.Xplus - data.W) @ np.linalg.pinv(G)
    Bcal = coeff[:, data.n * (1 + data.nsched):]
    return AffineMatrixFunction.from_stacked(Bcal, data.nsched)


def compute_nu(b_est: AffineMatrixFunction, gains: AffineMatrixFunction,
               x, p, et: EtState) -> Array:
    """Sampling-induced input discrepancy, propagated through the input matrix:

        nu = B(p) K(p) (x_held - x) + B(p) (K(p_held) - K(p)) x_held
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    Bp = b_est(p)
    Kp = gains(p)
    e = et.x_held - x
    return Bp @ (Kp @ e) + Bp @ ((gains(et.p_held) - Kp) @ et.x_held)


def trigger_fire(nu, x, cfg: TriggerConfig) -> bool:
    """True iff nu' Psi1 nu >= x' Psi2 x + v (inclusive threshold)."""
    nu = np.asarray(nu, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    return bool(nu @ cfg.psi1 @ nu >= x @ cfg.psi2 @ x + cfg.v)


# ---------------------------------------------------------------------------
# trigger-parameter synthesis
# ---------------------------------------------------------------------------

def build_trigger_program(P: Array, f_quad: FQuad, data: ExperimentData,
                          box: SchedulingBox, mu: float, eps2: float, beta2: float,
                          delta: float, psd_margin: float = 1e-7,
                          use_known_noise: bool = False) -> Program:
    """Vertex-relaxed LMI program for the detector weights Psi1, Psi2.

    P and FQ come from a feasible stabilization synthesis and are frozen;
    mu and eps2 are fixed scalars so the program stays linear in the
    decision variables ("Psi1", "Psi2", and the multiplier "XiT" when the
    scheduling dimension is positive).
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if eps2 <= 0:
        raise ValueError("eps2 must be positive")
    if beta2 <= 0:
        raise ValueError("beta2 must be positive")
    n, ell, T = data.n, data.nsched, data.T
    P = np.asarray(P, dtype=float)
    if P.shape != (n, n):
        raise ValueError("P dimension mismatch with the data")
    Xplus = data.Xplus - data.W if use_known_noise else data.Xplus
    dlt = 0.0 if use_known_noise else delta
    DDt = data.T * dlt * dlt * np.eye(n)

    prog = Program()
    Psi1 = prog.declare_symmetric(n, "Psi1")
    Psi2 = prog.declare_symmetric(n, "Psi2")
    prog.add_psd(as_expression(Psi1), ">=", psd_margin, label="Psi1 positive definite")
    prog.add_psd(as_expression(Psi2), ">=", psd_margin, label="Psi2 positive definite")

    q = n * (1 + ell)
    s = T * (1 + ell)
    pad_q = sdp.zeros(ell * n, ell * n)
    # Omega11 = -mu beta2 P + P Psi2 P ; Omega22 = -P Psi1 P + eps2 mu^2 DDt
    omega11 = AffineMatrixExpression(-mu * beta2 * P, [(P, Psi2, P, False)])
    omega22 = AffineMatrixExpression(eps2 * mu * mu * DDt, [(-P, Psi1, P, False)])
    Ycal = blkdiag([omega11, pad_q])
    Ybar = blkdiag([omega22, pad_q])
    Ecal = np.zeros((s, s))
    Ecal[:T, :T] = -eps2 * np.eye(T)
    Xcal = np.zeros((q, s))
    Xcal[:n, :T] = Xplus
    for i in range(ell):
        Xcal[n * (1 + i):n * (2 + i), T * (1 + i):T * (2 + i)] = Xplus
    XFQ = Xcal @ f_quad.matrix  # constant: q x q
    FQc = f_quad.matrix
    phi = -1.0 * bmat([
        [Ycal, as_expression(mu * XFQ.T), as_expression(FQc.T)],
        [as_expression(mu * XFQ), Ybar, sdp.zeros(q, s)],
        [as_expression(FQc), sdp.zeros(s, q), as_expression(Ecal)],
    ])
    struct = ChannelStructure((n, n, T), ell)
    add_multiplier_constraints(prog, phi, struct, box, "XiT", psd_margin)
    return prog


@dataclass(frozen=True)
class TriggerSynthesis:
    """Feasible trigger parameters plus the raw solver output."""

    config: TriggerConfig
    Xi: Array | None
    solution: Solution

    @property
    def feasible(self) -> bool:
        return self.solution.status == "feasible"


def solve_trigger(P: Array, f_quad: FQuad, data: ExperimentData, box: SchedulingBox,
                  mu: float, eps2: float, beta2: float, v: float, delta: float,
                  psd_margin: float = 1e-7, tol: float = sdp.DEFAULT_TOL,
                  solvers=sdp.DEFAULT_SOLVERS, **solve_kw) -> TriggerSynthesis | Solution:
    """Convenience wrapper: returns a TriggerSynthesis, or the bare Solution
    when the program is not feasible.  Among feasible detector weights the
    solve prefers a small Psi1 and a large Psi2, which lengthens inter-event
    intervals.
    """
    prog = build_trigger_program(P, f_quad, data, box, mu, eps2, beta2, delta,
                                 psd_margin)
    lazy_detector = [(sdp.trace_expr(prog.variable("Psi1")), 1.0),
                     (sdp.trace_expr(prog.variable("Psi2")), -1.0)]
    sol = prog.solve(tol=tol, solvers=solvers, minimize=lazy_detector, **solve_kw)
    if sol.status != "feasible":
        return sol
    cfg = TriggerConfig(psi1=sol["Psi1"], psi2=sol["Psi2"], v=v, mu=mu,
                        eps2=eps2, beta2=beta2)
    return TriggerSynthesis(config=cfg, Xi=sol.values.get("XiT"), solution=sol)


# ---------------------------------------------------------------------------
# event-triggered simulation and diagnostics
# ---------------------------------------------------------------------------

def simulate_event_triggered(sys: LpvSystem, gains: AffineMatrixFunction,
                             cfg: TriggerConfig, b_est: AffineMatrixFunction,
                             schedule_law, noise_law, x0, N: int,
                             rng: np.random.Generator | int | None = None) -> SimulationTrace:
    """Event-triggered closed loop: the detector evaluates nu against the
    current state each step; on a trigger the state/schedule pair is
    transmitted and the zero-order-held input updated.  Step 0 always
    transmits.
    """
    if N < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(rng)
    n, m, ell = sys.n, sys.m, sys.nsched
    x = np.asarray(x0, dtype=float).reshape(n)
    states = np.empty((N + 1, n)); states[0] = x
    inputs = np.empty((N, m)); schedules = np.empty((N, ell))
    perturbations = np.empty((N, n)); outputs = np.empty((N, sys.r))
    triggered = np.zeros(N, dtype=bool); nu_rec = np.empty((N, n))
    et: EtState | None = None
    for k in range(N):
        p = np.asarray(schedule_law(k, rng), dtype=float).reshape(ell)
        if et is None:
            et = EtState(x_held=x.copy(), p_held=p.copy(),
                         u_held=gains(p) @ x, last_instant=0)
            fire = True
            nu = np.zeros(n)
        else:
            nu = compute_nu(b_est, gains, x, p, et)
            fire = trigger_fire(nu, x, cfg)
            if fire:
                et = EtState(x_held=x.copy(), p_held=p.copy(),
                             u_held=gains(p) @ x, last_instant=k)
                nu = np.zeros(n)
        u = et.u_held
        w = np.asarray(noise_law(k, rng), dtype=float).reshape(n)
        x_next = sys.A(p) @ x + sys.B(p) @ u + w
        y = sys.C(p) @ x + sys.D(p) @ u
        states[k + 1] = x_next
        inputs[k] = u; schedules[k] = p; perturbations[k] = w
        outputs[k] = y; triggered[k] = fire; nu_rec[k] = nu
        x = x_next
    return SimulationTrace(states, inputs, schedules, perturbations, outputs,
                           triggered, nu_rec)


def detector_soundness(trace: SimulationTrace, cfg: TriggerConfig) -> bool:
    """Re-check the loop guard from the recorded trace: at every
    non-transmission step, nu' Psi1 nu < x' Psi2 x + v must hold strictly.
    """
    for k in range(trace.horizon):
        if trace.triggered[k]:
            continue
        if trigger_fire(trace.nu[k], trace.states[k], cfg):
            return False
    return True


def zoh_contract(trace: SimulationTrace, gains: AffineMatrixFunction,
                 atol: float = 1e-12) -> bool:
    """Between transmissions the input is constant and equals K(p_held) x_held."""
    u_expected = None
    for k in range(trace.horizon):
        if trace.triggered[k]:
            u_expected = gains(trace.schedules[k]) @ trace.states[k]
        if u_expected is None or np.abs(trace.inputs[k] - u_expected).max() > atol:
            return False
    return True


def practical_decrease_check(trace: SimulationTrace, P: Array, cfg: TriggerConfig,
                             sigma: float, slack: float = 1e-8) -> dict:
    """Per-step practical decrease along an event-triggered trace:

        V(x+) - V(x) <= -beta2 V(x) + sigma lmax(P^-1) |nu + w|^2 + v/mu
    """
    P = np.asarray(P, dtype=float)
    Pinv = np.linalg.inv(P)
    lam_max = float(np.linalg.eigvalsh(Pinv)[-1])
    worst = -np.inf
    first = None
    for k in range(trace.horizon):
        x = trace.states[k]
        x1 = trace.states[k + 1]
        zeta = trace.nu[k] + trace.perturbations[k]
        V0 = x @ Pinv @ x
        V1 = x1 @ Pinv @ x1
        gap = (V1 - V0) - (-cfg.beta2 * V0 + sigma * lam_max * float(zeta @ zeta)
                           + cfg.v / cfg.mu)
        if gap > worst:
            worst = gap
        if gap > slack and first is None:
            first = k
    return {"passed": first is None, "worst_gap": float(worst), "first_violation": first}


def inter_event_stats(trace: SimulationTrace) -> dict:
    """Transmission count and inter-event interval statistics.

    Intervals partition [0, N): gaps between consecutive transmissions plus
    the tail from the last transmission to the horizon end, so the mean
    interval is N / count.
    """
    instants = np.flatnonzero(trace.triggered)
    N = trace.horizon
    if instants.size == 0:
        return {"count": 0, "mean_interval": float("inf"), "max_interval": float(N)}
    gaps = np.diff(np.concatenate([instants, [N]]))
    return {"count": int(instants.size),
            "mean_interval": float(gaps.mean()),
            "max_interval": float(gaps.max()),
            "instants": instants.tolist()}


def iss_practical_constant(P: Array, mu: float, beta2: float) -> float:
    """c0 = c1 / (mu (1 - exp(-beta2/2))) with c1 = lmin(P^-1)^(-1/2)."""
    if beta2 <= 0:
        raise ValueError("beta2 must be positive")
    if mu <= 0:
        raise ValueError("mu must be positive")
    lam_min = float(np.linalg.eigvalsh(np.linalg.inv(np.asarray(P, dtype=float)))[0])
    if lam_min <= 0:
        raise ValueError("P must be positive definite")
    c1 = lam_min ** -0.5
    return float(c1 / (mu * (1.0 - np.exp(-beta2 / 2.0))))
