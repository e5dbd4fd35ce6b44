"""Core LPV machinery: affine matrix maps, state lifting, Hankel windows,
scheduling boxes, and plant simulation.

All matrices are dense float64.  Types are immutable after construction and
operations are pure functions, so everything here is safe to share across
threads.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray

_MAX_VERTEX_DIMS = 20


def _matrix(M) -> Array:
    out = np.array(M, dtype=float)
    if out.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {out.ndim}")
    out.setflags(write=False)
    return out


def _vector(v, size=None, name="vector") -> Array:
    out = np.asarray(v, dtype=float).reshape(-1)
    if size is not None and out.size != size:
        raise ValueError(f"{name} has length {out.size}, expected {size}")
    return out


@dataclass(frozen=True)
class AffineMatrixFunction:
    """Matrix-valued map M(p) = M0 + sum_i p[i] * Mi.

    ``base`` is M0; ``coeffs`` holds M1..Ml, all with base's shape.
    """

    base: Array
    coeffs: tuple[Array, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "base", _matrix(self.base))
        coeffs = tuple(_matrix(C) for C in self.coeffs)
        for i, C in enumerate(coeffs):
            if C.shape != self.base.shape:
                raise ValueError(
                    f"coefficient {i + 1} has shape {C.shape}, base has {self.base.shape}"
                )
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.base.shape

    @property
    def nsched(self) -> int:
        """Number of scheduling parameters l."""
        return len(self.coeffs)

    def __call__(self, p) -> Array:
        p = _vector(p, self.nsched, "scheduling vector")
        out = self.base.copy()
        for pi, Ci in zip(p, self.coeffs):
            out += pi * Ci
        return out

    def stacked(self) -> Array:
        """Row block [M0, M1, ..., Ml]."""
        return np.hstack((self.base,) + self.coeffs) if self.coeffs else self.base.copy()

    @classmethod
    def from_stacked(cls, S, nsched: int) -> "AffineMatrixFunction":
        """Split a row block [M0 | M1 | ... | Ml] back into an affine function."""
        S = np.asarray(S, dtype=float)
        if S.shape[1] % (nsched + 1) != 0:
            raise ValueError("stacked width not divisible by 1 + nsched")
        w = S.shape[1] // (nsched + 1)
        return cls(S[:, :w], tuple(S[:, (i + 1) * w:(i + 2) * w] for i in range(nsched)))

    @classmethod
    def constant(cls, M, nsched: int = 0) -> "AffineMatrixFunction":
        M = _matrix(M)
        return cls(M, tuple(np.zeros_like(M) for _ in range(nsched)))


def eval_affine(f: AffineMatrixFunction, p) -> Array:
    """Evaluate M(p) = M0 + sum_i p[i] Mi."""
    return f(p)


@dataclass(frozen=True)
class LpvSystem:
    """Discrete-time LPV plant x+ = A(p)x + B(p)u + w, y = C(p)x + D(p)u."""

    A: AffineMatrixFunction
    B: AffineMatrixFunction
    C: AffineMatrixFunction
    D: AffineMatrixFunction

    def __post_init__(self):
        n, m, r = self.n, self.m, self.r
        if self.A.shape != (n, n):
            raise ValueError("A must be square")
        if self.B.shape != (n, m):
            raise ValueError("B row count must match A")
        if self.C.shape != (r, n) or self.D.shape != (r, m):
            raise ValueError("C/D dimensions inconsistent with A/B")
        ls = {f.nsched for f in (self.A, self.B, self.C, self.D)}
        if len(ls) != 1:
            raise ValueError(f"A, B, C, D disagree on scheduling dimension: {ls}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def r(self) -> int:
        return self.C.shape[0]

    @property
    def nsched(self) -> int:
        return self.A.nsched


@dataclass(frozen=True)
class SchedulingBox:
    """Axis-aligned box of admissible scheduling vectors."""

    lower: Array
    upper: Array

    def __post_init__(self):
        lo = _vector(self.lower)
        hi = _vector(self.upper, lo.size, "upper bound")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, p, atol: float = 1e-12) -> bool:
        p = _vector(p, self.dim, "scheduling vector")
        return bool(np.all(p >= self.lower - atol) and np.all(p <= self.upper + atol))

    def sample(self, rng: np.random.Generator) -> Array:
        return rng.uniform(self.lower, self.upper)

    @classmethod
    def symmetric(cls, radius, dim: int) -> "SchedulingBox":
        r = float(radius)
        return cls(-r * np.ones(dim), r * np.ones(dim))


def vertices(box: SchedulingBox) -> list[Array]:
    """All 2^l corner points of the box, in lexicographic (lower-first) order.

    A zero-dimensional box yields the single empty vertex, so downstream
    vertex loops degrade gracefully to the LTI case.
    """
    if box.dim > _MAX_VERTEX_DIMS:
        raise ValueError(f"refusing to enumerate 2^{box.dim} vertices")
    out = []
    seen = set()
    for choice in itertools.product((0, 1), repeat=box.dim):
        v = np.asarray(np.where(np.asarray(choice, dtype=bool),
                                box.upper, box.lower), dtype=float)
        key = v.tobytes()
        if key not in seen:  # degenerate axes collapse duplicate corners
            seen.add(key)
            out.append(v)
    return out


def lift_state(x, p) -> Array:
    """Stacked vector Col(x, p (x) x); also serves Col(u, p (x) u)."""
    x = _vector(x)
    p = _vector(p)
    return np.concatenate([x, np.kron(p, x)])


def step(sys: LpvSystem, x, u, p, w) -> tuple[Array, Array]:
    """One plant step: returns (x_next, y)."""
    x = _vector(x, sys.n, "state")
    u = _vector(u, sys.m, "input")
    p = _vector(p, sys.nsched, "schedule")
    w = _vector(w, sys.n, "perturbation")
    x_next = sys.A(p) @ x + sys.B(p) @ u + w
    y = sys.C(p) @ x + sys.D(p) @ u
    return x_next, y


def hankel(seq, depth: int) -> Array:
    """Block Hankel matrix of a vector sequence x_0..x_{T-1}.

    Block entry (i, j) is x_{i+j}; ``depth`` block rows, T - depth + 1 block
    columns.  Scalars are treated as 1-vectors.
    """
    data = np.atleast_2d(np.asarray(seq, dtype=float))
    if data.shape[0] == 1 and np.asarray(seq).ndim == 1:
        data = data.T
    T, d = data.shape
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > T:
        raise ValueError(f"depth {depth} exceeds sequence length {T}")
    cols = T - depth + 1
    out = np.empty((depth * d, cols))
    for i in range(depth):
        out[i * d:(i + 1) * d, :] = data[i:i + cols, :].T
    return out


def spectral_radius(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("spectral radius requires a square matrix")
    return float(np.max(np.abs(np.linalg.eigvals(M))))


@dataclass(frozen=True)
class SimulationTrace:
    """Time series of a closed- or open-loop run.

    ``states`` holds x_0..x_N (N+1 rows); all other per-step series have N
    rows.  ``triggered[k]`` marks a transmission at step k and is always True
    at k = 0.  ``nu`` is zero for traces without an event detector.
    ``lyapunov`` is filled lazily via :func:`with_lyapunov`.
    """

    states: Array
    inputs: Array
    schedules: Array
    perturbations: Array
    outputs: Array
    triggered: Array
    nu: Array
    lyapunov: Array | None = None

    def __post_init__(self):
        N = self.horizon
        for name in ("inputs", "schedules", "perturbations", "outputs", "triggered", "nu"):
            arr = getattr(self, name)
            if arr.shape[0] != N:
                raise ValueError(f"{name} has {arr.shape[0]} rows, expected {N}")
        if N > 0 and not bool(self.triggered[0]):
            raise ValueError("trigger flag must be set at k = 0")
        if self.lyapunov is not None and self.lyapunov.shape[0] != N + 1:
            raise ValueError("lyapunov series must cover all N+1 states")

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]


def with_lyapunov(trace: SimulationTrace, P: Array) -> SimulationTrace:
    """Return a copy of the trace carrying V(x_k) = x_k' P^-1 x_k."""
    Pinv = np.linalg.inv(np.asarray(P, dtype=float))
    V = np.einsum("ki,ij,kj->k", trace.states, Pinv, trace.states)
    return SimulationTrace(trace.states, trace.inputs, trace.schedules,
                           trace.perturbations, trace.outputs, trace.triggered,
                           trace.nu, V)


def bounded_noise_law(delta: float, dim: int):
    """Perturbation law: uniform random direction, norm uniform on [0, delta]."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")

    def law(k: int, rng: np.random.Generator) -> Array:
        if delta == 0.0:
            return np.zeros(dim)
        d = rng.normal(size=dim)
        nrm = np.linalg.norm(d)
        while nrm == 0.0:
            d = rng.normal(size=dim)
            nrm = np.linalg.norm(d)
        return (rng.uniform(0.0, delta) / nrm) * d

    return law


def zero_noise_law(dim: int):
    def law(k: int, rng: np.random.Generator) -> Array:
        return np.zeros(dim)

    return law


def box_schedule_law(box: SchedulingBox):
    def law(k: int, rng: np.random.Generator) -> Array:
        return box.sample(rng)

    return law


def walk_schedule_law(box: SchedulingBox, step: float = 0.05):
    """Slowly varying admissible schedule: a reflected random walk in the box.

    Excitation experiments want rich i.i.d. schedules, but physical
    scheduling signals move slowly; closed-loop demos use this law so the
    held gain of an event-triggered loop does not go stale every step.
    """
    state = {"p": None}
    span = box.upper - box.lower

    def law(k: int, rng: np.random.Generator) -> Array:
        if state["p"] is None or k == 0:
            state["p"] = box.sample(rng)
        else:
            p = state["p"] + rng.uniform(-step, step, box.dim) * np.maximum(span, 1e-12)
            # reflect at the walls to stay admissible
            low_over = np.maximum(box.lower - p, 0.0)
            p = p + 2.0 * low_over
            high_over = np.maximum(p - box.upper, 0.0)
            p = p - 2.0 * high_over
            state["p"] = np.clip(p, box.lower, box.upper)
        return state["p"].copy()

    return law


def simulate(sys: LpvSystem, feedback, schedule_law, noise_law, x0, N: int,
             rng: np.random.Generator | int | None = None) -> SimulationTrace:
    """Closed-loop run of ``sys`` for N steps under ``feedback(x, p) -> u``.

    ``schedule_law`` and ``noise_law`` are called as law(k, rng) in that fixed
    order each step, so a seeded rng reproduces the trace exactly.
    """
    if N < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(rng)
    x = _vector(x0, sys.n, "initial state")
    states = np.empty((N + 1, sys.n))
    inputs = np.empty((N, sys.m))
    schedules = np.empty((N, sys.nsched))
    perturbations = np.empty((N, sys.n))
    outputs = np.empty((N, sys.r))
    states[0] = x
    for k in range(N):
        p = _vector(schedule_law(k, rng), sys.nsched, "schedule")
        u = _vector(feedback(x, p), sys.m, "input")
        w = _vector(noise_law(k, rng), sys.n, "perturbation")
        x, y = step(sys, x, u, p, w)
        inputs[k] = u
        schedules[k] = p
        perturbations[k] = w
        outputs[k] = y
        states[k + 1] = x
    return SimulationTrace(states, inputs, schedules, perturbations, outputs,
                           np.ones(N, dtype=bool), np.zeros((N, sys.n)))
