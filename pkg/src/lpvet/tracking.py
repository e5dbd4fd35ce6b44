"""Output reference tracking via an integral compensator.

The plant state is augmented with an accumulated output error
chi_{k+1} = chi_k + (y_k - r_k); the augmented system is again LPV with the
pair (omega_k, r_k) entering as a bounded disturbance, so the stabilization
and trigger programs apply verbatim on the augmented data.  This module owns
the augmentation, augmented data collection, reference generators, the
event-triggered tracking simulation, and tracking metrics.  The synthesis
builders delegate to the stabilization/event-trigger modules on purpose: the
tracking programs must stay byte-identical to the stabilization ones under a
renaming of dimensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import sdp_interface as sdp
from .data_engine import ExperimentData, min_data_length, _kron_columns
from .event_trigger import (TriggerConfig, TriggerSynthesis, EtState,
                            build_trigger_program, compute_nu, solve_trigger,
                            trigger_fire)
from .lpv_core import AffineMatrixFunction, LpvSystem, SchedulingBox, SimulationTrace
from .sdp_interface import Program, Solution
from .stabilization_synthesis import (FQuad, SynthesisConfig, SynthesisSolution,
                                      build_synthesis_program, solve_synthesis)

Array = np.ndarray


@dataclass(frozen=True)
class AugmentedSystem:
    """Plant plus integral compensator.

    A_hat(p) = [[A(p), 0], [C(p), I]], B_hat(p) = [B(p); D(p)], and the
    disturbance channel is E = Blkdiag(I_n, -I_r) acting on Col(omega, r).
    """

    base: LpvSystem
    A_hat: AffineMatrixFunction
    B_hat: AffineMatrixFunction

    @property
    def n_base(self) -> int:
        return self.base.n

    @property
    def r(self) -> int:
        return self.base.r

    @property
    def n(self) -> int:
        return self.base.n + self.base.r

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def nsched(self) -> int:
        return self.base.nsched

    def E(self) -> Array:
        n, r = self.n_base, self.r
        out = np.eye(n + r)
        out[n:, n:] = -np.eye(r)
        return out

    def as_lpv(self) -> LpvSystem:
        """The augmented dynamics as a plain LPV system with output
        y = [C(p), 0] psi + D(p) u, so the core simulator applies."""
        n, r, ell = self.n_base, self.r, self.nsched
        C_aug = AffineMatrixFunction(
            np.hstack([self.base.C.base, np.zeros((r, r))]),
            tuple(np.hstack([Ci, np.zeros((r, r))]) for Ci in self.base.C.coeffs))
        return LpvSystem(self.A_hat, self.B_hat, C_aug, self.base.D)


def augment_system(sys: LpvSystem) -> AugmentedSystem:
    """Attach the integral compensator to a base plant."""
    n, r = sys.n, sys.r
    A0 = np.block([[sys.A.base, np.zeros((n, r))],
                   [sys.C.base, np.eye(r)]])
    A_coeffs = tuple(np.block([[Ai, np.zeros((n, r))],
                               [Ci, np.zeros((r, r))]])
                     for Ai, Ci in zip(sys.A.coeffs, sys.C.coeffs))
    B0 = np.vstack([sys.B.base, sys.D.base])
    B_coeffs = tuple(np.vstack([Bi, Di])
                     for Bi, Di in zip(sys.B.coeffs, sys.D.coeffs))
    return AugmentedSystem(base=sys,
                           A_hat=AffineMatrixFunction(A0, A_coeffs),
                           B_hat=AffineMatrixFunction(B0, B_coeffs))


def from_augmented_matrices(A_hat: AffineMatrixFunction, B_hat: AffineMatrixFunction,
                            n_base: int, atol: float = 1e-12) -> AugmentedSystem:
    """Rebuild an AugmentedSystem from directly specified augmented matrices,
    validating the compensator block structure and de-augmenting the base
    plant (C and D are read off the lower blocks).
    """
    nbar = A_hat.shape[0]
    r = nbar - n_base
    if r < 1:
        raise ValueError("augmented dimension must exceed the base state dimension")
    if np.abs(A_hat.base[:n_base, n_base:]).max(initial=0.0) > atol:
        raise ValueError("base block of A_hat must not feed back the integral state")
    if np.abs(A_hat.base[n_base:, n_base:] - np.eye(r)).max() > atol:
        raise ValueError("integral block of A_hat must be the identity")
    for Ai in A_hat.coeffs:
        if np.abs(Ai[:, n_base:]).max(initial=0.0) > atol:
            raise ValueError("scheduled coefficients must not touch the integral state")
    A = AffineMatrixFunction(A_hat.base[:n_base, :n_base],
                             tuple(Ai[:n_base, :n_base] for Ai in A_hat.coeffs))
    C = AffineMatrixFunction(A_hat.base[n_base:, :n_base],
                             tuple(Ai[n_base:, :n_base] for Ai in A_hat.coeffs))
    B = AffineMatrixFunction(B_hat.base[:n_base, :],
                             tuple(Bi[:n_base, :] for Bi in B_hat.coeffs))
    D = AffineMatrixFunction(B_hat.base[n_base:, :],
                             tuple(Bi[n_base:, :] for Bi in B_hat.coeffs))
    return AugmentedSystem(base=LpvSystem(A, B, C, D), A_hat=A_hat, B_hat=B_hat)


def min_data_length_aug(nbar: int, m: int, nsched: int) -> int:
    """Same excitation-length formula, on the augmented dimension."""
    return min_data_length(nbar, m, nsched)


# ---------------------------------------------------------------------------
# references
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceSignal:
    kind: str
    samples: Array  # (N+1, r)

    @property
    def r(self) -> int:
        return self.samples.shape[1]

    def __call__(self, k: int) -> Array:
        return self.samples[min(k, self.samples.shape[0] - 1)]

    def max_norm(self) -> float:
        return float(np.linalg.norm(self.samples, axis=1).max())


def make_reference(kind: str, params: dict, N: int) -> ReferenceSignal:
    """Sampled reference of length N+1.

    Kinds: "sinusoid" (amplitude, period), "square" (levels, period),
    "circle" (radius, period; 2-D), "figure8" (amplitude, period; 2-D with
    y = 2x sqrt(1 - (x/a)^2) up to the half-period lobe sign), and "custom"
    (explicit samples).
    """
    k = np.arange(N + 1)
    if kind == "sinusoid":
        amp = float(params.get("amplitude", 1.0))
        period = float(params.get("period", max(N, 1) / 4.0))
        samples = amp * np.sin(2.0 * np.pi * k / period).reshape(-1, 1)
    elif kind == "square":
        lo, hi = params.get("levels", (-1.0, 1.0))
        period = float(params.get("period", max(N, 1) / 4.0))
        phase = np.mod(k, period) < period / 2.0
        samples = np.where(phase, float(hi), float(lo)).reshape(-1, 1)
    elif kind == "circle":
        rad = float(params.get("radius", 2.5))
        period = float(params.get("period", 1000.0))
        th = 2.0 * np.pi * k / period
        samples = np.column_stack([rad * np.cos(th), rad * np.sin(th)])
    elif kind == "figure8":
        amp = float(params.get("amplitude", 2.5))
        period = float(params.get("period", 1000.0))
        th = 2.0 * np.pi * k / period
        samples = np.column_stack([amp * np.sin(th), amp * np.sin(2.0 * th)])
    elif kind == "custom":
        samples = np.asarray(params["samples"], dtype=float)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        if samples.shape[0] != N + 1:
            raise ValueError(f"custom reference needs {N + 1} samples")
    else:
        raise ValueError(f"unknown reference kind {kind!r}")
    return ReferenceSignal(kind, samples)


def augmented_noise_bound(delta: float, reference: ReferenceSignal) -> float:
    """Default bound on Col(omega, r): hypot of the two bounds, rounded up
    to two decimals."""
    raw = math.hypot(delta, reference.max_norm())
    return math.ceil(raw * 100.0 - 1e-9) / 100.0


@dataclass(frozen=True)
class AugmentedPerturbation:
    """Norm bound for the stacked disturbance Col(omega, r)."""

    delta_hat: float

    def envelope(self, T: int, nbar: int) -> Array:
        return math.sqrt(T) * self.delta_hat * np.eye(nbar)


# ---------------------------------------------------------------------------
# augmented data collection
# ---------------------------------------------------------------------------

def collect_aug(augsys: AugmentedSystem, T: int, input_law, schedule_law,
                noise_law, reference: ReferenceSignal, psi0,
                rng: np.random.Generator | int | None = None,
                delta_hat: float | None = None,
                delta: float = 0.0) -> ExperimentData:
    """Open-loop experiment on the augmented plant.

    The recorded perturbation column is E Col(omega_k, r_k) =
    Col(omega_k, -r_k); its norm bound delta_hat defaults to
    :func:`augmented_noise_bound`.
    """
    if T < 1:
        raise ValueError("experiment length must be >= 1")
    rng = np.random.default_rng(rng)
    nbar, m, ell = augsys.n, augsys.m, augsys.nsched
    nb, r = augsys.n_base, augsys.r
    psi = np.asarray(psi0, dtype=float).reshape(nbar)
    if delta_hat is None:
        delta_hat = augmented_noise_bound(delta, reference)
    U = np.empty((m, T)); X = np.empty((nbar, T)); Xplus = np.empty((nbar, T))
    W = np.empty((nbar, T)); Y = np.empty((r, T)); P_seq = np.empty((T, ell))
    for k in range(T):
        u = np.asarray(input_law(k, rng), dtype=float).reshape(m)
        p = np.asarray(schedule_law(k, rng), dtype=float).reshape(ell)
        w = np.asarray(noise_law(k, rng), dtype=float).reshape(nb)
        varpi = np.concatenate([w, -reference(k)])
        X[:, k] = psi
        U[:, k] = u
        P_seq[k] = p
        W[:, k] = varpi
        psi = augsys.A_hat(p) @ psi + augsys.B_hat(p) @ u + varpi
        Xplus[:, k] = psi
        Y[:, k] = augsys.base.C(p) @ X[:nb, k] + augsys.base.D(p) @ u
    return ExperimentData(
        U=U, UP=_kron_columns(P_seq, U), X=X, XP=_kron_columns(P_seq, X),
        Xplus=Xplus, W=W, WP=_kron_columns(P_seq, W), Y=Y,
        schedules=P_seq, delta=float(delta_hat),
        too_short=T < min_data_length_aug(nbar, m, ell))


# ---------------------------------------------------------------------------
# synthesis (delegating to the stabilization machinery)
# ---------------------------------------------------------------------------

def build_tracking_synthesis_program(data: ExperimentData, box: SchedulingBox,
                                     cfg: SynthesisConfig) -> Program:
    """Identical block construction to the stabilization program on the
    augmented data; cfg.delta must carry the augmented bound delta_hat."""
    return build_synthesis_program(data, box, cfg)


def solve_tracking_synthesis(data: ExperimentData, box: SchedulingBox,
                             cfg: SynthesisConfig, **kw) -> SynthesisSolution | Solution:
    return solve_synthesis(data, box, cfg, **kw)


def build_tracking_trigger_program(P: Array, f_quad: FQuad, data: ExperimentData,
                                   box: SchedulingBox, mu: float, eps4: float,
                                   beta4: float, delta_hat: float,
                                   psd_margin: float = 1e-7) -> Program:
    return build_trigger_program(P, f_quad, data, box, mu, eps4, beta4,
                                 delta_hat, psd_margin)


def solve_tracking_trigger(P: Array, f_quad: FQuad, data: ExperimentData,
                           box: SchedulingBox, mu: float, eps4: float, beta4: float,
                           v: float, delta_hat: float,
                           **kw) -> TriggerSynthesis | Solution:
    return solve_trigger(P, f_quad, data, box, mu, eps4, beta4, v, delta_hat, **kw)


# ---------------------------------------------------------------------------
# event-triggered tracking simulation
# ---------------------------------------------------------------------------

def simulate_tracking_event_triggered(augsys: AugmentedSystem,
                                      gains: AffineMatrixFunction,
                                      cfg: TriggerConfig,
                                      b_est: AffineMatrixFunction,
                                      reference: ReferenceSignal,
                                      schedule_law, noise_law, psi0, N: int,
                                      rng: np.random.Generator | int | None = None
                                      ) -> tuple[SimulationTrace, dict]:
    """Event-triggered loop on the augmented state with the trigger comparing
    nu against the full augmented state.  Returns the trace (outputs hold
    y_k) and tracking metrics.
    """
    if N < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(rng)
    nbar, m, ell = augsys.n, augsys.m, augsys.nsched
    nb = augsys.n_base
    psi = np.asarray(psi0, dtype=float).reshape(nbar)
    states = np.empty((N + 1, nbar)); states[0] = psi
    inputs = np.empty((N, m)); schedules = np.empty((N, ell))
    perturbations = np.empty((N, nbar)); outputs = np.empty((N, augsys.r))
    triggered = np.zeros(N, dtype=bool); nu_rec = np.empty((N, nbar))
    et: EtState | None = None
    for k in range(N):
        p = np.asarray(schedule_law(k, rng), dtype=float).reshape(ell)
        if et is None:
            et = EtState(x_held=psi.copy(), p_held=p.copy(),
                         u_held=gains(p) @ psi, last_instant=0)
            fire = True
            nu = np.zeros(nbar)
        else:
            nu = compute_nu(b_est, gains, psi, p, et)
            fire = trigger_fire(nu, psi, cfg)
            if fire:
                et = EtState(x_held=psi.copy(), p_held=p.copy(),
                             u_held=gains(p) @ psi, last_instant=k)
                nu = np.zeros(nbar)
        u = et.u_held
        w = np.asarray(noise_law(k, rng), dtype=float).reshape(nb)
        varpi = np.concatenate([w, -reference(k)])
        y = augsys.base.C(p) @ psi[:nb] + augsys.base.D(p) @ u
        psi_next = augsys.A_hat(p) @ psi + augsys.B_hat(p) @ u + varpi
        states[k + 1] = psi_next
        inputs[k] = u; schedules[k] = p; perturbations[k] = varpi
        outputs[k] = y; triggered[k] = fire; nu_rec[k] = nu
        psi = psi_next
    trace = SimulationTrace(states, inputs, schedules, perturbations, outputs,
                            triggered, nu_rec)
    return trace, tracking_error_stats(trace, reference, n_base=nb)


def tracking_error_stats(trace: SimulationTrace, reference: ReferenceSignal,
                         n_base: int | None = None) -> dict:
    """Output-error metrics: max |y - r|, RMS over the final quarter of the
    horizon, and the largest integral-state norm."""
    N = trace.horizon
    ref = reference.samples[:N]
    err = trace.outputs - ref
    err_norms = np.linalg.norm(err, axis=1)
    tail = err_norms[(3 * N) // 4:]
    out = {
        "max_error": float(err_norms.max()),
        "rms_final_quarter": float(np.sqrt(np.mean(tail ** 2))),
    }
    if n_base is not None:
        chi_norms = np.linalg.norm(trace.states[:, n_base:], axis=1)
        out["integral_state_max"] = float(chi_norms.max())
        mid = trace.states.shape[0] // 2
        # running max up to the midpoint; the instantaneous value is useless
        # for divergence detection when the compensator oscillates through 0
        out["integral_state_mid"] = float(chi_norms[:mid + 1].max())
        out["integral_state_final_quarter_max"] = float(chi_norms[(3 * N) // 4:].max())
    return out
