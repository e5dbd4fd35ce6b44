"""Data-driven stabilization synthesis.

Builds the robust state-feedback synthesis program (a semidefinite
feasibility problem checked at the vertices of the scheduling box via a
full-block multiplier), the fixed-controller certificate program, gain
recovery, and numerical verification of the closed loop.

Conventions for the closed-loop parameterization: the decision matrix F of
shape T x n(1+l+l^2) represents the parameter-dependent map

    F(p) = F0 + sum_i p[i] Fi + sum_ij p[i]p[j] Fij,

stored as column blocks [F0 | F1..Fl | F11..Fll].  Its quadratic-form
repackaging FQ of shape T(1+l) x n(1+l) satisfies

    [I_T ; p (x) I_T]' FQ [I_n ; p (x) I_n] = F(p)

and uses the canonical split Q00 = F0, Q01 = [F1 .. Fl], Q10 = 0,
Q11(i,j) = Fij, which pins the layout deterministically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp_interface as sdp
from .data_engine import ExperimentData, build_regressors
from .lpv_core import (AffineMatrixFunction, LpvSystem, SchedulingBox,
                       SimulationTrace, bounded_noise_law, box_schedule_law,
                       simulate, spectral_radius, vertices)
from .sdp_interface import (AffineMatrixExpression, Program, Solution,
                            as_expression, bmat, blkdiag, kron_eye)

Array = np.ndarray


@dataclass(frozen=True)
class SynthesisConfig:
    """Scalars of the stabilization program.

    sigma > 1 weighs the perturbation channel, 0 < beta1 < 1 is the decay
    rate, eps1 > 0 is the fixed robustification weight (not a decision
    variable), delta the per-sample perturbation bound, trace_bounds the
    conditioning guard on P, psd_margin the strictness shift for open cones.
    use_known_noise subtracts the recorded W from Xplus instead of relying
    on the aggregate envelope alone.
    """

    sigma: float = 4.0
    beta1: float = 0.2
    eps1: float = 0.01
    delta: float = 0.0
    trace_bounds: tuple[float, float] = (0.1, 10.0)
    psd_margin: float = 1e-7
    use_known_noise: bool = False

    def __post_init__(self):
        if not self.sigma > 1:
            raise ValueError("sigma must exceed 1")
        if not 0 < self.beta1 < 1:
            raise ValueError("beta1 must lie in (0, 1)")
        if not self.eps1 > 0:
            raise ValueError("eps1 must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.trace_bounds[0] > self.trace_bounds[1]:
            raise ValueError("empty trace box")


def _f_width(n: int, ell: int) -> int:
    return n * (1 + ell + ell * ell)


@dataclass(frozen=True)
class ScriptF:
    """The T x n(1+l+l^2) closed-loop parameterization matrix."""

    matrix: Array
    n: int
    nsched: int

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.shape[1] != _f_width(self.n, self.nsched):
            raise ValueError(f"matrix width {M.shape[1]} does not match "
                             f"n={self.n}, l={self.nsched}")
        object.__setattr__(self, "matrix", M)

    @property
    def T(self) -> int:
        return self.matrix.shape[0]

    def block0(self) -> Array:
        return self.matrix[:, :self.n]

    def block_lin(self, i: int) -> Array:
        """F_i for i in 1..l."""
        n = self.n
        return self.matrix[:, n * i:n * (i + 1)]

    def block_quad(self, i: int, j: int) -> Array:
        """F_ij for i, j in 1..l."""
        n, ell = self.n, self.nsched
        c0 = n * (1 + ell) + n * ((i - 1) * ell + (j - 1))
        return self.matrix[:, c0:c0 + n]


def monomial_stack(n: int, ell: int, p) -> Array:
    """Col(I_n, p (x) I_n, p (x) p (x) I_n), the right factor of F(p)."""
    p = np.asarray(p, dtype=float).reshape(-1)
    blocks = [np.eye(n)]
    blocks += [p[i] * np.eye(n) for i in range(ell)]
    blocks += [p[i] * p[j] * np.eye(n) for i in range(ell) for j in range(ell)]
    return np.vstack(blocks)


def eval_F(script_f: ScriptF, p) -> Array:
    """F(p) = F0 + sum p_i Fi + sum p_i p_j Fij."""
    return script_f.matrix @ monomial_stack(script_f.n, script_f.nsched, p)


@dataclass(frozen=True)
class FQuad:
    """FQ in the quadratic-form repackaging of F(p); see module docstring."""

    matrix: Array
    n: int
    nsched: int

    @property
    def T(self) -> int:
        return self.matrix.shape[0] // (1 + self.nsched)

    def eval(self, p) -> Array:
        p = np.asarray(p, dtype=float).reshape(-1)
        T, n, ell = self.T, self.n, self.nsched
        left = np.vstack([np.eye(T)] + [p[i] * np.eye(T) for i in range(ell)])
        right = np.vstack([np.eye(n)] + [p[i] * np.eye(n) for i in range(ell)])
        return left.T @ self.matrix @ right


def fq_layout(n: int, ell: int) -> list[tuple[int, int, int]]:
    """(FQ block-row index, FQ block-col index, F column-block start) for the
    canonical split; block rows/cols are in units of T and n respectively.
    """
    entries = [(0, 0, 0)]
    for i in range(1, ell + 1):
        entries.append((0, i, n * i))
    for i in range(1, ell + 1):
        for j in range(1, ell + 1):
            entries.append((i, j, n * (1 + ell) + n * ((i - 1) * ell + (j - 1))))
    return entries


def build_fq(script_f: ScriptF) -> FQuad:
    """Canonical FQ: Q00 = F0, Q01 = [F1..Fl], Q10 = 0, Q11(i,j) = Fij."""
    n, ell, T = script_f.n, script_f.nsched, script_f.T
    out = np.zeros((T * (1 + ell), n * (1 + ell)))
    for bi, bj, c0 in fq_layout(n, ell):
        out[T * bi:T * (bi + 1), n * bj:n * (bj + 1)] = script_f.matrix[:, c0:c0 + n]
    return FQuad(out, n, ell)


def _fq_expression(F: sdp.VariableHandle, n: int, ell: int, T: int) -> AffineMatrixExpression:
    """FQ as an affine expression of the F decision variable (canonical split)."""
    out = sdp.zeros(T * (1 + ell), n * (1 + ell))
    width = _f_width(n, ell)
    for bi, bj, c0 in fq_layout(n, ell):
        rowsel = np.zeros((T * (1 + ell), T))
        rowsel[T * bi:T * (bi + 1), :] = np.eye(T)
        colsel = np.zeros((width, n * (1 + ell)))
        colsel[c0:c0 + n, n * bj:n * (bj + 1)] = np.eye(n)
        out = out + AffineMatrixExpression(
            np.zeros((T * (1 + ell), n * (1 + ell))), [(rowsel, F, colsel, False)])
    return out


# ---------------------------------------------------------------------------
# full-block multiplier scaffolding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelStructure:
    """Constant matrices of the linear-fractional representation whose
    parameter block is Blkdiag over channels of Diag(p) (x) I_c."""

    channels: tuple[int, ...]
    nsched: int

    @property
    def inner_dim(self) -> int:
        """Height of the parameter channel, l * sum(channels)."""
        return self.nsched * sum(self.channels)

    @property
    def outer_dim(self) -> int:
        return sum(self.channels)

    def _blkdiag(self, maker) -> Array:
        mats = [maker(c) for c in self.channels]
        rows = sum(M.shape[0] for M in mats)
        cols = sum(M.shape[1] for M in mats)
        out = np.zeros((rows, cols))
        r = c = 0
        for M in mats:
            out[r:r + M.shape[0], c:c + M.shape[1]] = M
            r += M.shape[0]
            c += M.shape[1]
        return out

    def m12(self) -> Array:
        ell = self.nsched
        return self._blkdiag(lambda c: np.kron(np.ones((ell, 1)), np.eye(c)))

    def m21(self) -> Array:
        ell = self.nsched
        return self._blkdiag(
            lambda c: np.vstack([np.zeros((c, ell * c)), np.eye(ell * c)]))

    def m22(self) -> Array:
        ell = self.nsched
        return self._blkdiag(lambda c: np.vstack([np.eye(c), np.zeros((ell * c, c))]))

    def upsilon(self, p) -> Array:
        p = np.asarray(p, dtype=float).reshape(-1)
        return self._blkdiag(lambda c: np.kron(np.diag(p), np.eye(c)))

    def loop_matrix(self, p) -> Array:
        """M(p) = M22 + M21 Upsilon(p) M12 (M11 = 0); per channel [I; p (x) I]."""
        return self.m22() + self.m21() @ self.upsilon(p) @ self.m12()


def add_multiplier_constraints(prog: Program, phi: AffineMatrixExpression,
                               struct: ChannelStructure, box: SchedulingBox,
                               xi_name: str, margin: float) -> sdp.VariableHandle | None:
    """Register the vertex-relaxed condition "M(p)' Phi M(p) > 0 on the box".

    Adds the multiplier LMI coupling Xi to Phi, the vertex copies of the
    multiplier positivity condition, and the concavity condition on Xi's
    lower-right block.  With no scheduling channel the condition collapses to
    Phi > 0 directly and no multiplier is declared.
    """
    if struct.nsched == 0:
        prog.add_psd(phi, ">=", margin, label="parameter-free positivity")
        return None
    dz = struct.inner_dim
    Xi = prog.declare_symmetric(2 * dz, xi_name)
    M12, M21, M22 = struct.m12(), struct.m21(), struct.m22()
    B = np.block([[np.zeros((dz, dz)), M12],
                  [np.eye(dz), np.zeros((dz, struct.outer_dim))]])
    C = np.hstack([M21, M22])
    lmi = as_expression(Xi).left_mul(B.T).right_mul(B) \
        - phi.left_mul(C.T).right_mul(C)
    prog.add_psd(lmi, "<=", margin, label="multiplier coupling")
    for v in vertices(box):
        IU = np.vstack([np.eye(dz), struct.upsilon(v)])
        prog.add_psd(as_expression(Xi).left_mul(IU.T).right_mul(IU), ">=", 0.0,
                     label=f"vertex multiplier {np.array2string(v)}")
    prog.add_psd(sdp.sym_slice(Xi, slice(dz, 2 * dz), slice(dz, 2 * dz)),
                 "<=", margin, label="multiplier concavity block")
    return Xi


def multiplier_value(Xi: Array, struct: ChannelStructure, p) -> Array:
    """[I; Upsilon(p)]' Xi [I; Upsilon(p)], for post-hoc interior checks."""
    dz = struct.inner_dim
    IU = np.vstack([np.eye(dz), struct.upsilon(p)])
    return IU.T @ Xi @ IU


# ---------------------------------------------------------------------------
# synthesis program
# ---------------------------------------------------------------------------

def _effective_data(data: ExperimentData, cfg_delta: float, use_known_noise: bool):
    """(Xplus actually used, aggregate envelope Delta) per the noise mode."""
    Xplus = data.Xplus - data.W if use_known_noise else data.Xplus
    delta = 0.0 if use_known_noise else cfg_delta
    Delta = np.sqrt(data.T) * delta * np.eye(data.n)
    return Xplus, Delta


def _phi_blocks(P_expr, FQ_expr, Xplus: Array, Delta: Array, sigma: float,
                beta_inv_weight: float, eps1: float, n: int, ell: int, T: int):
    """The five-channel quadratic-form matrix of the synthesis condition."""
    q = n * (1 + ell)
    s = T * (1 + ell)
    pad_q = sdp.zeros(ell * n, ell * n)
    Ycal = blkdiag([P_expr, pad_q])
    Ybar = blkdiag([P_expr - as_expression(eps1 * (Delta @ Delta.T)), pad_q])
    Ecal = np.zeros((s, s))
    Ecal[:T, :T] = eps1 * np.eye(T)
    Xcal = np.zeros((q, s))
    Xcal[:n, :T] = Xplus
    for i in range(ell):
        Xcal[n * (1 + i):n * (2 + i), T * (1 + i):T * (2 + i)] = Xplus
    XF = FQ_expr.left_mul(Xcal)
    Z_qq = sdp.zeros(q, q)
    Z_qs = sdp.zeros(q, s)
    return bmat([
        [Ycal,   Z_qq,         XF.T,  Ycal,                         FQ_expr.T],
        [Z_qq,   sigma * Ycal, Ycal,  Z_qq,                         Z_qs],
        [XF,     Ycal,         Ybar,  Z_qq,                         Z_qs],
        [Ycal,   Z_qq,         Z_qq,  beta_inv_weight * Ycal,       Z_qs],
        [FQ_expr, Z_qs.T,      Z_qs.T, Z_qs.T,                      as_expression(Ecal)],
    ])


def build_synthesis_program(data: ExperimentData, box: SchedulingBox,
                            cfg: SynthesisConfig,
                            f_norm_gauge: bool = True,
                            trigger_headroom: tuple[float, float, float] | None = None
                            ) -> Program:
    """Assemble the vertex-relaxed stabilization synthesis program.

    Decision variables (by name): "P" (n x n), "Z0" (m x n), "Zbar"
    (m x ln), "F" (T x n(1+l+l^2)), and for l > 0 the multiplier "Xi".
    The gain-linking equality ties G F to the block matrix of P, Z0, Zbar.

    With ``f_norm_gauge`` an epigraph variable "S" with trace(S) >= |F|_F^2
    is added (always satisfiable, so feasibility is untouched); minimizing
    its trace steers the solver to the small-norm representative of the
    closed-loop parameterization, which the trigger program downstream
    needs because its robustification penalizes F quadratically.

    ``trigger_headroom = (mu, eps2, beta2)`` additionally imposes
    F(v)' F(v) <= (eps2 mu beta2 / 2) P at every scheduling vertex.  The
    trigger program run after synthesis needs eps2^-1 F(p)' F(p) strictly
    below mu beta2 P; a synthesis point without reserved headroom routinely
    exhausts that budget even when a better-shaped feasible point exists.
    """
    n, m, ell, T = data.n, data.m, data.nsched, data.T
    if box.dim != ell:
        raise ValueError("scheduling box dimension does not match the data")
    Xplus, Delta = _effective_data(data, cfg.delta, cfg.use_known_noise)
    G = build_regressors(data).G

    prog = Program()
    P = prog.declare_symmetric(n, "P")
    Z0 = prog.declare_rectangular(m, n, "Z0")
    Zbar = prog.declare_rectangular(m, max(ell * n, 0), "Zbar") if ell > 0 else None
    F = prog.declare_rectangular(T, _f_width(n, ell), "F")

    margin = cfg.psd_margin
    prog.add_psd(as_expression(P), ">=", margin, label="P positive definite")
    prog.add_trace_box(P, *cfg.trace_bounds)

    if f_norm_gauge:
        S = prog.declare_symmetric(_f_width(n, ell), "S")
        F_e = as_expression(F)
        prog.add_psd(bmat([[as_expression(S), F_e.T],
                           [F_e, as_expression(np.eye(T))]]),
                     ">=", 0.0, label="F norm gauge")

    if trigger_headroom is not None:
        mu_t, eps_t, beta_t = trigger_headroom
        gamma = 0.5 * eps_t * mu_t * beta_t
        if gamma <= 0:
            raise ValueError("trigger headroom scalars must be positive")
        for v in vertices(box):
            Fv = as_expression(F) @ monomial_stack(n, ell, v)
            prog.add_psd(bmat([[gamma * as_expression(P), Fv.T],
                               [Fv, as_expression(np.eye(T))]]),
                         ">=", 0.0, label=f"trigger headroom {np.array2string(v)}")

    FQ_expr = _fq_expression(F, n, ell, T)
    phi = _phi_blocks(as_expression(P), FQ_expr, Xplus, Delta, cfg.sigma,
                      1.0 / cfg.beta1, cfg.eps1, n, ell, T)
    struct = ChannelStructure((n, n, n, n, T), ell)
    add_multiplier_constraints(prog, phi, struct, box, "Xi", margin)

    # gain-linking equality: G F = Col(P-rows, Z-rows) block matrix
    P_e = as_expression(P)
    if ell > 0:
        Z0_e, Zb_e = as_expression(Z0), as_expression(Zbar)
        rhs = bmat([
            [P_e, sdp.zeros(n, ell * n), sdp.zeros(n, ell * ell * n)],
            [sdp.zeros(ell * n, n), kron_eye(ell, P_e), sdp.zeros(ell * n, ell * ell * n)],
            [Z0_e, Zb_e, sdp.zeros(m, ell * ell * n)],
            [sdp.zeros(ell * m, n), kron_eye(ell, Z0_e), kron_eye(ell, Zb_e)],
        ])
    else:
        rhs = bmat([[P_e], [as_expression(Z0)]])
    prog.add_equality(as_expression(F).left_mul(G) - rhs, label="gain linking")
    return prog


def recover_gains(P: Array, Z0: Array, Zbar: Array | None) -> AffineMatrixFunction:
    """K0 = Z0 P^-1 and, blockwise, Ki = Zbar_i P^-1."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError("P is numerically singular")
    Pinv = np.linalg.inv(P)
    K0 = np.asarray(Z0, dtype=float) @ Pinv
    coeffs = []
    if Zbar is not None and Zbar.size:
        Zbar = np.asarray(Zbar, dtype=float)
        for i in range(Zbar.shape[1] // n):
            coeffs.append(Zbar[:, n * i:n * (i + 1)] @ Pinv)
    return AffineMatrixFunction(K0, tuple(coeffs))


@dataclass(frozen=True)
class SynthesisSolution:
    """Feasible point of the synthesis program plus the recovered gains."""

    P: Array
    Z0: Array
    Zbar: Array | None
    script_f: ScriptF
    f_quad: FQuad
    Xi: Array | None
    gains: AffineMatrixFunction
    solution: Solution

    @property
    def feasible(self) -> bool:
        return self.solution.status == "feasible"


def solve_synthesis(data: ExperimentData, box: SchedulingBox, cfg: SynthesisConfig,
                    tol: float = sdp.DEFAULT_TOL, solvers=sdp.DEFAULT_SOLVERS,
                    solver_opts: dict | None = None,
                    trigger_headroom: tuple[float, float, float] | None = None,
                    **solve_kw) -> SynthesisSolution | Solution:
    """Build, solve, and unpack.  Returns the bare Solution when not feasible.

    Among feasible points the solve prefers small trace(P) and a small-norm
    F: the trigger program inherits both, its data coupling grows with |P|,
    and its robustification penalizes |F| quadratically, so the compact
    representative keeps the downstream LMI well posed.  When
    ``trigger_headroom`` is given but renders the program infeasible, the
    solve falls back to the unshaped program.
    """
    def attempt(headroom):
        prog = build_synthesis_program(data, box, cfg, trigger_headroom=headroom)
        compact = [(sdp.trace_expr(prog.variable("P")), 1.0),
                   (sdp.trace_expr(prog.variable("S")), 1.0)]
        return prog.solve(tol=tol, solvers=solvers, solver_opts=solver_opts,
                          minimize=compact, **solve_kw)

    sol = attempt(trigger_headroom)
    if sol.status != "feasible" and trigger_headroom is not None:
        sol = attempt(None)
    if sol.status != "feasible":
        return sol
    return unpack_synthesis(data, sol)


def unpack_synthesis(data: ExperimentData, sol: Solution) -> SynthesisSolution:
    n, ell = data.n, data.nsched
    P = sol["P"]
    Z0 = sol["Z0"]
    Zbar = sol.values.get("Zbar")
    sf = ScriptF(sol["F"], n, ell)
    return SynthesisSolution(P=P, Z0=Z0, Zbar=Zbar, script_f=sf, f_quad=build_fq(sf),
                             Xi=sol.values.get("Xi"), gains=recover_gains(P, Z0, Zbar),
                             solution=sol)


# ---------------------------------------------------------------------------
# fixed-controller certificate
# ---------------------------------------------------------------------------

def build_certificate_program(data: ExperimentData, script_f: ScriptF,
                              cfg: SynthesisConfig, grid) -> Program:
    """Certificate LMI over a user-supplied grid of scheduling points, with
    the closed-loop parameterization F fixed and P the only decision variable.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("certificate grid must be nonempty")
    n, T = data.n, data.T
    Xplus, Delta = _effective_data(data, cfg.delta, cfg.use_known_noise)
    DDt = Delta @ Delta.T
    prog = Program()
    P = prog.declare_symmetric(n, "P")
    P_e = as_expression(P)
    prog.add_psd(P_e, ">=", cfg.psd_margin, label="P positive definite")
    prog.add_trace_box(P, *cfg.trace_bounds)
    for idx, p in enumerate(grid):
        Fp = eval_F(script_f, p)
        lmi = bmat([
            [P_e, sdp.zeros(n, n), as_expression((Xplus @ Fp).T), P_e, as_expression(Fp.T)],
            [sdp.zeros(n, n), cfg.sigma * P_e, P_e, sdp.zeros(n, n), sdp.zeros(n, T)],
            [as_expression(Xplus @ Fp), P_e, P_e - as_expression(cfg.eps1 * DDt),
             sdp.zeros(n, n), sdp.zeros(n, T)],
            [P_e, sdp.zeros(n, n), sdp.zeros(n, n), (1.0 / cfg.beta1) * P_e,
             sdp.zeros(n, T)],
            [as_expression(Fp), sdp.zeros(T, n), sdp.zeros(T, n), sdp.zeros(T, n),
             as_expression(cfg.eps1 * np.eye(T))],
        ])
        prog.add_psd(lmi, ">=", cfg.psd_margin, label=f"certificate point {idx}")
    return prog


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def iss_constants(P: Array, beta: float) -> dict[str, float]:
    """Overshoot R = sqrt(lmax(P^-1)/lmin(P^-1)) and c1 = lmin(P^-1)^(-1/2)."""
    lam = np.linalg.eigvalsh(np.linalg.inv(np.asarray(P, dtype=float)))
    if lam[0] <= 0:
        raise ValueError("P must be positive definite")
    return {"overshoot": float(np.sqrt(lam[-1] / lam[0])),
            "c1": float(lam[0] ** -0.5),
            "decay_rate": float(beta)}


def verify_closed_loop(sys: LpvSystem | None, data: ExperimentData,
                       gains: AffineMatrixFunction, P: Array, cfg: SynthesisConfig,
                       box: SchedulingBox, trials: int = 100, horizon: int = 100,
                       seed: int = 0, slack: float = 1e-8) -> dict:
    """Numerical check of the synthesized controller.

    (a) frozen-vertex spectral radii of A(p) + B(p)K(p) (true matrices when
    available, identified ones otherwise), (b) the per-step decrease
    V(x+) - V(x) <= -beta1 V(x) + sigma w' P^-1 w along simulated
    trajectories with admissible schedules and perturbations.
    """
    from .data_engine import identified_system_functions

    if sys is not None:
        A_fun, B_fun = sys.A, sys.B
        source = "true"
    else:
        A_fun, B_fun = identified_system_functions(data)
        source = "identified"
    P = np.asarray(P, dtype=float)
    Pinv = np.linalg.inv(P)

    vertex_radii = []
    for v in vertices(box):
        Acl = A_fun(v) + B_fun(v) @ gains(v)
        vertex_radii.append(float(spectral_radius(Acl)))

    rng = np.random.default_rng(seed)
    worst = -np.inf
    first_violation = None
    for trial in range(trials):
        x = rng.uniform(-2.0, 2.0, P.shape[0])
        for k in range(horizon):
            p = box.sample(rng)
            w = bounded_noise_law(cfg.delta, P.shape[0])(k, rng)
            x_next = A_fun(p) @ x + B_fun(p) @ (gains(p) @ x) + w
            V0 = x @ Pinv @ x
            V1 = x_next @ Pinv @ x_next
            gap = (V1 - V0) - (-cfg.beta1 * V0 + cfg.sigma * (w @ Pinv @ w))
            if gap > worst:
                worst = gap
            if gap > slack and first_violation is None:
                first_violation = {"trial": trial, "step": k, "gap": float(gap)}
            x = x_next
    decrease_ok = first_violation is None
    return {
        "matrix_source": source,
        "vertex_spectral_radii": vertex_radii,
        "vertices_stable": bool(max(vertex_radii) < 1.0),
        "decrease_ok": decrease_ok,
        "worst_decrease_gap": float(worst),
        "first_violation": first_violation,
        "passed": bool(max(vertex_radii) < 1.0 and decrease_ok),
    }


def as_state_feedback(gains: AffineMatrixFunction):
    """Gain function as a feedback(x, p) callable for the simulator."""

    def feedback(x, p):
        return gains(p) @ x

    return feedback


def simulate_closed_loop(sys: LpvSystem, gains: AffineMatrixFunction,
                         box: SchedulingBox, delta: float, x0, N: int,
                         seed: int = 0) -> SimulationTrace:
    return simulate(sys, as_state_feedback(gains), box_schedule_law(box),
                    bounded_noise_law(delta, sys.n), x0, N,
                    np.random.default_rng(seed))
