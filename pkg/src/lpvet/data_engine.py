"""Excitation experiments and data-matrix assembly.

Runs the open-loop experiment, builds the stacked data matrices used by the
synthesis programs, and provides the persistence-of-excitation checks plus a
least-squares identification routine used as a correctness oracle in tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lpv_core import AffineMatrixFunction, LpvSystem, hankel, lift_state

Array = np.ndarray


class RankDeficiencyError(RuntimeError):
    """Raised when a regressor matrix does not have the rank the theory needs."""


def min_data_length(n: int, m: int, nsched: int) -> int:
    """Smallest experiment length supporting the excitation-order requirement:
    n(1+l)(1+m(1+l)) - 1.
    """
    if n < 1 or m < 1 or nsched < 0:
        raise ValueError("need n, m >= 1 and nsched >= 0")
    return n * (1 + nsched) * (1 + m * (1 + nsched)) - 1


@dataclass(frozen=True)
class ExperimentData:
    """Data matrices of one open-loop experiment of length T.

    Columns of U, X, W are u_k, x_k, w_k; UP, XP, WP hold the Kronecker
    columns p_k (x) u_k etc.; Xplus holds x_{k+1}.  ``schedules`` keeps the
    raw p-sequence (rows p_0..p_{T-1}) for excitation diagnostics.
    ``delta`` is the per-sample perturbation norm bound.
    """

    U: Array
    UP: Array
    X: Array
    XP: Array
    Xplus: Array
    W: Array
    WP: Array
    Y: Array
    schedules: Array
    delta: float
    too_short: bool = False

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def r(self) -> int:
        return self.Y.shape[0]

    @property
    def nsched(self) -> int:
        return self.schedules.shape[1]

    @property
    def T(self) -> int:
        return self.X.shape[1]

    def noise_envelope(self) -> Array:
        """Delta = sqrt(T) * delta * I, the aggregate bound with W W' <= Delta Delta'."""
        return np.sqrt(self.T) * self.delta * np.eye(self.n)

    def full_rank_target(self) -> int:
        return (1 + self.nsched) * (self.n + self.m)


@dataclass(frozen=True)
class RegressorMatrices:
    """Stacked regressors: G = Col(X, XP, U, UP), Theta = Col(U, UP, X, XP),
    Z = Col(X, XP).  G and Theta contain the same rows in different order.
    """

    G: Array
    Theta: Array
    Z: Array


def build_regressors(data: ExperimentData) -> RegressorMatrices:
    Z = np.vstack([data.X, data.XP])
    Ubar = np.vstack([data.U, data.UP])
    return RegressorMatrices(G=np.vstack([Z, Ubar]), Theta=np.vstack([Ubar, Z]), Z=Z)


def uniform_input_law(m: int, lo: float = -1.0, hi: float = 1.0):
    """Default excitation: i.i.d. uniform entries for u_k."""

    def law(k: int, rng: np.random.Generator) -> Array:
        return rng.uniform(lo, hi, m)

    return law


def _kron_columns(P_seq: Array, M: Array) -> Array:
    """Columnwise p_k (x) m_k for P_seq rows p_k and M columns m_k."""
    ell = P_seq.shape[1]
    if ell == 0:
        return np.zeros((0, M.shape[1]))
    return np.vstack([P_seq[:, i] * M for i in range(ell)])


def collect(sys: LpvSystem, T: int, input_law, schedule_law, noise_law, x0,
            rng: np.random.Generator | int | None = None,
            delta: float = 0.0) -> ExperimentData:
    """Run the open-loop excitation experiment and assemble the data matrices.

    Laws are called as law(k, rng) in the fixed order input, schedule, noise.
    A too-short experiment is flagged, not rejected; the excitation checks
    are separate.
    """
    if T < 1:
        raise ValueError("experiment length must be >= 1")
    rng = np.random.default_rng(rng)
    n, m, r, ell = sys.n, sys.m, sys.r, sys.nsched
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.size != n:
        raise ValueError(f"x0 has length {x.size}, expected {n}")
    U = np.empty((m, T)); X = np.empty((n, T)); Xplus = np.empty((n, T))
    W = np.empty((n, T)); Y = np.empty((r, T)); P_seq = np.empty((T, ell))
    for k in range(T):
        u = np.asarray(input_law(k, rng), dtype=float).reshape(m)
        p = np.asarray(schedule_law(k, rng), dtype=float).reshape(ell)
        w = np.asarray(noise_law(k, rng), dtype=float).reshape(n)
        X[:, k] = x
        U[:, k] = u
        P_seq[k] = p
        W[:, k] = w
        x = sys.A(p) @ x + sys.B(p) @ u + w
        Xplus[:, k] = x
        Y[:, k] = sys.C(p) @ X[:, k] + sys.D(p) @ u
    return ExperimentData(
        U=U, UP=_kron_columns(P_seq, U), X=X, XP=_kron_columns(P_seq, X),
        Xplus=Xplus, W=W, WP=_kron_columns(P_seq, W), Y=Y,
        schedules=P_seq, delta=delta,
        too_short=T < min_data_length(n, m, ell))


def consistency_residual(data: ExperimentData, sys: LpvSystem) -> float:
    """Max abs residual of Xplus = Acal*Col(X,XP) + Bcal*Col(U,UP) + W for ``sys``."""
    Acal = sys.A.stacked()
    Bcal = sys.B.stacked()
    pred = Acal @ np.vstack([data.X, data.XP]) + Bcal @ np.vstack([data.U, data.UP]) + data.W
    return float(np.abs(pred - data.Xplus).max())


def theta_pe_margin(u_seq, p_seq, depth: int) -> float:
    """Smallest singular value of the depth-L Hankel matrix of Col(u_k, p_k (x) u_k).

    The caller compares the margin against its excitation threshold.
    """
    u_seq = np.asarray(u_seq, dtype=float)
    p_seq = np.asarray(p_seq, dtype=float)
    if u_seq.ndim == 1:
        u_seq = u_seq.reshape(-1, 1)
    if p_seq.ndim == 1:
        p_seq = p_seq.reshape(-1, 1)
    T = u_seq.shape[0]
    if p_seq.shape[0] != T:
        raise ValueError("input and schedule sequences must have equal length")
    if T < depth:
        raise ValueError(f"sequence of length {T} shorter than order {depth}")
    lifted = np.vstack([lift_state(u_seq[k], p_seq[k]) for k in range(T)])
    H = hankel(lifted, depth)
    return float(np.linalg.svd(H, compute_uv=False)[-1])


def pe_margin(data: ExperimentData, depth: int | None = None) -> float:
    """theta_pe_margin on the recorded experiment, at the default order (1+l)n + 1."""
    if depth is None:
        depth = (1 + data.nsched) * data.n + 1
    return theta_pe_margin(data.U.T, data.schedules, depth)


def regressor_rank(data: ExperimentData, tol: float | None = None) -> int:
    """Numerical rank of Theta = Col(U, UP, X, XP).

    ``tol`` is a relative threshold on singular values; defaults to 1e-9 of
    the largest.
    """
    Theta = build_regressors(data).Theta
    sv = np.linalg.svd(Theta, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    rel = 1e-9 if tol is None else float(tol)
    return int(np.count_nonzero(sv > rel * sv[0]))


def identify(data: ExperimentData) -> tuple[Array, Array]:
    """Least-squares identification [Acal, Bcal] = (Xplus - W) G^+.

    Requires the regressor Theta (equivalently G) to have full row rank;
    with the recorded perturbation subtracted the recovery is exact up to
    numerical precision.
    """
    reg = build_regressors(data)
    target = data.full_rank_target()
    if regressor_rank(data) < target:
        raise RankDeficiencyError(
            f"regressor rank {regressor_rank(data)} below required {target}")
    coeff = (data.Xplus - data.W) @ np.linalg.pinv(reg.G)
    ncols = data.n * (1 + data.nsched)
    return coeff[:, :ncols], coeff[:, ncols:]


def identified_system_functions(data: ExperimentData) -> tuple[AffineMatrixFunction,
                                                               AffineMatrixFunction]:
    """identify() repackaged as affine matrix functions (A_hat, B_hat)."""
    Acal, Bcal = identify(data)
    return (AffineMatrixFunction.from_stacked(Acal, data.nsched),
            AffineMatrixFunction.from_stacked(Bcal, data.nsched))


def perturbation_accumulation_bound(A: AffineMatrixFunction, p_seq, delta: float) -> float:
    """Upper bound on the accumulated perturbation norm of the nominal-vs-
    perturbed trajectory split:

        sum_{i=1}^{T-1} (1 + |p_i|) * [ sum_{j=1}^{i-1} prod_{h=j}^{i-1} |Abar_h| + 1 ] * delta

    with Abar_h = A(p_h) in spectral norm.  The i = 0 term is absent because
    the two trajectories share the initial state.
    """
    p_seq = np.asarray(p_seq, dtype=float)
    if p_seq.ndim == 1:
        p_seq = p_seq.reshape(-1, 1)
    T = p_seq.shape[0]
    if delta == 0.0 or T <= 1:
        return 0.0
    norms = np.array([np.linalg.norm(A(p_seq[h]), 2) for h in range(T)])
    total = 0.0
    for i in range(1, T):
        # products prod_{h=j}^{i-1} |Abar_h| for j = 1..i-1
        acc = 0.0
        prod = 1.0
        for j in range(i - 1, 0, -1):
            prod *= norms[j]
            acc += prod
        total += (1.0 + np.linalg.norm(p_seq[i])) * (acc + 1.0) * delta
    return float(total)


def accumulated_perturbation_norm(A: AffineMatrixFunction, p_seq, W: Array) -> float:
    """Exact spectral norm of Col(Wbar, Wbar_P) for a known noise realization.

    Test oracle for :func:`perturbation_accumulation_bound`: runs the
    recursion wbar_{k+1} = A(p_k) wbar_k + w_k from wbar_0 = 0.
    """
    p_seq = np.asarray(p_seq, dtype=float)
    if p_seq.ndim == 1:
        p_seq = p_seq.reshape(-1, 1)
    W = np.asarray(W, dtype=float)
    n, T = W.shape
    Wbar = np.zeros((n, T))
    wbar = np.zeros(n)
    for k in range(T - 1):
        wbar = A(p_seq[k]) @ wbar + W[:, k]
        Wbar[:, k + 1] = wbar
    WbarP = _kron_columns(p_seq, Wbar)
    return float(np.linalg.norm(np.vstack([Wbar, WbarP]), 2))
