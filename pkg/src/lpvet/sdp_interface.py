"""Solver-neutral semidefinite feasibility programs.

A :class:`Program` collects matrix decision variables and affine matrix
constraints (PSD with a strictness margin, equalities, scalar/trace boxes)
and hands them to a conic backend.  Expressions are kept in a small affine
algebra (constant + sum of L @ V @ R terms) so every constraint can be
re-evaluated independently in plain numpy: feasibility is always double
checked against the solver's answer.

The bundled backends are the CLARABEL interior-point solver with an SCS
fallback, both driven through cvxpy; no external service is involved.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray

DEFAULT_SOLVERS = ("CLARABEL", "SCS")
DEFAULT_TOL = 1e-7


@dataclass(frozen=True)
class VariableHandle:
    vid: int
    kind: str  # "symmetric" | "rectangular" | "scalar"
    rows: int
    cols: int
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("symmetric", "rectangular", "scalar"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "symmetric" and self.rows != self.cols:
            raise ValueError("symmetric variable must be square")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def num_components(self) -> int:
        """Free scalar components: d(d+1)/2 symmetric, r*c rectangular, 1 scalar."""
        if self.kind == "symmetric":
            return self.rows * (self.rows + 1) // 2
        if self.kind == "scalar":
            return 1
        return self.rows * self.cols


class AffineMatrixExpression:
    """constant + sum of  left @ V @ right  (or left @ V.T @ right) terms."""

    __array_ufunc__ = None  # keep numpy from hijacking binary operators

    def __init__(self, constant, terms=()):
        self.constant = np.array(constant, dtype=float)
        if self.constant.ndim != 2:
            raise ValueError("expression constant must be a matrix")
        self.terms: list[tuple[Array, VariableHandle, Array, bool]] = []
        for left, var, right, transposed in terms:
            left = np.asarray(left, dtype=float)
            right = np.asarray(right, dtype=float)
            inner = (var.cols, var.rows) if transposed else (var.rows, var.cols)
            if left.shape != (self.constant.shape[0], inner[0]):
                raise ValueError("term left multiplier shape mismatch")
            if right.shape != (inner[1], self.constant.shape[1]):
                raise ValueError("term right multiplier shape mismatch")
            self.terms.append((left, var, right, bool(transposed)))

    # --- construction helpers -------------------------------------------------
    @classmethod
    def constant_expr(cls, M) -> "AffineMatrixExpression":
        return cls(M)

    @classmethod
    def variable(cls, var: VariableHandle) -> "AffineMatrixExpression":
        return cls(np.zeros(var.shape),
                   [(np.eye(var.rows), var, np.eye(var.cols), False)])

    @property
    def shape(self) -> tuple[int, int]:
        return self.constant.shape

    # --- algebra ---------------------------------------------------------------
    def __add__(self, other) -> "AffineMatrixExpression":
        other = as_expression(other)
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} + {other.shape}")
        return AffineMatrixExpression(self.constant + other.constant,
                                      self.terms + other.terms)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-as_expression(other))

    def __rsub__(self, other):
        return as_expression(other) + (-self)

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, alpha):
        alpha = float(alpha)
        return AffineMatrixExpression(
            alpha * self.constant,
            [(alpha * L, v, R, t) for (L, v, R, t) in self.terms])

    __rmul__ = __mul__

    @property
    def T(self) -> "AffineMatrixExpression":
        return AffineMatrixExpression(
            self.constant.T,
            [(R.T, v, L.T, not t) for (L, v, R, t) in self.terms])

    def left_mul(self, A) -> "AffineMatrixExpression":
        A = np.asarray(A, dtype=float)
        return AffineMatrixExpression(
            A @ self.constant, [(A @ L, v, R, t) for (L, v, R, t) in self.terms])

    def right_mul(self, B) -> "AffineMatrixExpression":
        B = np.asarray(B, dtype=float)
        return AffineMatrixExpression(
            self.constant @ B, [(L, v, R @ B, t) for (L, v, R, t) in self.terms])

    def __matmul__(self, other):
        if isinstance(other, AffineMatrixExpression):
            if other.terms and self.terms:
                raise ValueError("product of two variable expressions is not affine")
            if not other.terms:
                return self.right_mul(other.constant)
            return other.left_mul(self.constant)
        return self.right_mul(other)

    def __rmatmul__(self, other):
        return self.left_mul(other)

    # --- evaluation ------------------------------------------------------------
    def evaluate(self, values: dict[int, Array]) -> Array:
        out = self.constant.copy()
        for L, v, R, t in self.terms:
            V = np.asarray(values[v.vid], dtype=float)
            if v.kind == "scalar":
                V = V.reshape(1, 1)
            out += L @ (V.T if t else V) @ R
        return out

    def variables(self) -> set[int]:
        return {v.vid for (_, v, _, _) in self.terms}


def as_expression(obj) -> AffineMatrixExpression:
    if isinstance(obj, AffineMatrixExpression):
        return obj
    if isinstance(obj, VariableHandle):
        return AffineMatrixExpression.variable(obj)
    return AffineMatrixExpression(np.asarray(obj, dtype=float))


def zeros(rows: int, cols: int) -> AffineMatrixExpression:
    return AffineMatrixExpression(np.zeros((rows, cols)))


def _block_dims(grid) -> tuple[list[int], list[int]]:
    nrows, ncols = len(grid), len(grid[0])
    rh: list[int | None] = [None] * nrows
    cw: list[int | None] = [None] * ncols
    for i, row in enumerate(grid):
        if len(row) != ncols:
            raise ValueError("ragged block grid")
        for j, e in enumerate(row):
            if e is None:
                continue
            r, c = as_expression(e).shape
            if rh[i] is None:
                rh[i] = r
            elif rh[i] != r:
                raise ValueError(f"block row {i} height conflict")
            if cw[j] is None:
                cw[j] = c
            elif cw[j] != c:
                raise ValueError(f"block column {j} width conflict")
    if any(v is None for v in rh) or any(v is None for v in cw):
        raise ValueError("a block row/column has no sizing entry")
    return rh, cw  # type: ignore[return-value]


def bmat(grid) -> AffineMatrixExpression:
    """Block matrix of expressions/arrays; ``None`` entries are zero blocks."""
    rh, cw = _block_dims(grid)
    total_r, total_c = sum(rh), sum(cw)
    roff = np.concatenate([[0], np.cumsum(rh)])
    coff = np.concatenate([[0], np.cumsum(cw)])
    out = zeros(total_r, total_c)
    for i, row in enumerate(grid):
        for j, e in enumerate(row):
            if e is None:
                continue
            e = as_expression(e)
            S_r = np.zeros((total_r, rh[i]))
            S_r[roff[i]:roff[i] + rh[i], :] = np.eye(rh[i])
            S_c = np.zeros((cw[j], total_c))
            S_c[:, coff[j]:coff[j] + cw[j]] = np.eye(cw[j])
            out = out + e.left_mul(S_r).right_mul(S_c)
    return out


def blkdiag(entries) -> AffineMatrixExpression:
    n = len(entries)
    grid = [[entries[i] if i == j else None for j in range(n)] for i in range(n)]
    return bmat(grid)


def kron_eye(k: int, e) -> AffineMatrixExpression:
    """I_k (x) e as a block-diagonal expression."""
    return blkdiag([e] * k)


def sym_slice(var: VariableHandle, rows: slice, cols: slice) -> AffineMatrixExpression:
    """Submatrix of a matrix variable as an expression."""
    sel_r = np.eye(var.rows)[rows, :]
    sel_c = np.eye(var.cols)[:, cols]
    return AffineMatrixExpression.variable(var).left_mul(sel_r).right_mul(sel_c)


def trace_expr(var: VariableHandle) -> AffineMatrixExpression:
    """trace(V) as a 1x1 expression."""
    d = min(var.rows, var.cols)
    terms = [(np.eye(var.rows)[i:i + 1, :], var, np.eye(var.cols)[:, i:i + 1], False)
             for i in range(d)]
    return AffineMatrixExpression(np.zeros((1, 1)), terms)


@dataclass
class PsdConstraint:
    expr: AffineMatrixExpression
    sense: str  # ">=" (succeq 0) or "<=" (preceq 0)
    margin: float
    label: str = ""

    def normalized(self) -> AffineMatrixExpression:
        """Expression E with the constraint equivalent to E >= 0 (PSD)."""
        d = self.expr.shape[0]
        shift = AffineMatrixExpression(self.margin * np.eye(d))
        if self.sense == ">=":
            return self.expr - shift
        return (-self.expr) - shift


@dataclass
class EqualityConstraint:
    expr: AffineMatrixExpression
    label: str = ""


@dataclass
class ScalarBox:
    var: VariableHandle
    lo: float
    hi: float
    trace: bool


@dataclass
class Solution:
    status: str  # "feasible" | "infeasible" | "numerical-failure"
    values: dict[str, Array] = field(default_factory=dict)
    psd_residual: float = np.inf
    eq_residual: float = np.inf
    solver: str = ""
    solver_status: str = ""
    solve_time: float = 0.0
    interior_slack: float | None = None
    phase2_status: str = ""

    def __getitem__(self, name: str) -> Array:
        return self.values[name]


class Program:
    """A semidefinite feasibility program under construction."""

    def __init__(self):
        self._vars: list[VariableHandle] = []
        self._by_name: dict[str, VariableHandle] = {}
        self.psd_constraints: list[PsdConstraint] = []
        self.equality_constraints: list[EqualityConstraint] = []
        self.boxes: list[ScalarBox] = []

    # --- declaration -----------------------------------------------------------
    def _register(self, h: VariableHandle) -> VariableHandle:
        if h.name:
            if h.name in self._by_name:
                raise ValueError(f"variable name {h.name!r} already declared")
            self._by_name[h.name] = h
        self._vars.append(h)
        return h

    def declare_symmetric(self, d: int, name: str = "") -> VariableHandle:
        return self._register(VariableHandle(len(self._vars), "symmetric", d, d, name))

    def declare_rectangular(self, rows: int, cols: int, name: str = "") -> VariableHandle:
        return self._register(VariableHandle(len(self._vars), "rectangular", rows, cols, name))

    def declare_scalar(self, name: str = "") -> VariableHandle:
        return self._register(VariableHandle(len(self._vars), "scalar", 1, 1, name))

    def variable(self, name: str) -> VariableHandle:
        return self._by_name[name]

    @property
    def variables(self) -> tuple[VariableHandle, ...]:
        return tuple(self._vars)

    # --- constraints -----------------------------------------------------------
    def _check_owned(self, expr: AffineMatrixExpression):
        known = {h.vid for h in self._vars}
        missing = expr.variables() - known
        if missing:
            raise ValueError(f"expression references undeclared variables {missing}")

    def add_psd(self, expr, sense: str = ">=", margin: float = 0.0, label: str = ""):
        expr = as_expression(expr)
        if expr.shape[0] != expr.shape[1]:
            raise ValueError("PSD constraint requires a square expression")
        if sense not in (">=", "<="):
            raise ValueError("sense must be '>=' or '<='")
        self._check_owned(expr)
        self.psd_constraints.append(PsdConstraint(expr, sense, float(margin), label))

    def add_equality(self, expr, label: str = ""):
        expr = as_expression(expr)
        self._check_owned(expr)
        self.equality_constraints.append(EqualityConstraint(expr, label))

    def add_trace_box(self, var: VariableHandle, lo: float, hi: float):
        self.boxes.append(ScalarBox(var, float(lo), float(hi), trace=True))

    def add_scalar_box(self, var: VariableHandle, lo: float, hi: float):
        if var.kind != "scalar":
            raise ValueError("scalar box requires a scalar variable")
        self.boxes.append(ScalarBox(var, float(lo), float(hi), trace=False))

    # --- independent evaluation --------------------------------------------------
    def residuals(self, values_by_vid: dict[int, Array]) -> tuple[float, float]:
        """(worst PSD violation, worst equality violation) at the given point."""
        psd = 0.0
        for c in self.psd_constraints:
            E = c.normalized().evaluate(values_by_vid)
            E = 0.5 * (E + E.T)
            lam = float(np.linalg.eigvalsh(E)[0])
            psd = max(psd, -lam)
        eq = 0.0
        for c in self.equality_constraints:
            eq = max(eq, float(np.abs(c.expr.evaluate(values_by_vid)).max()))
        for b in self.boxes:
            val = float(np.trace(values_by_vid[b.var.vid])) if b.trace \
                else float(np.asarray(values_by_vid[b.var.vid]).reshape(()))
            if np.isfinite(b.lo):
                eq = max(eq, max(0.0, b.lo - val))
            if np.isfinite(b.hi):
                eq = max(eq, max(0.0, val - b.hi))
        return psd, eq

    def digest(self) -> str:
        """Deterministic fingerprint of the assembled constraint data."""
        h = hashlib.sha256()
        for v in self._vars:
            h.update(f"{v.vid}:{v.kind}:{v.rows}x{v.cols}".encode())
        for c in self.psd_constraints:
            h.update(f"psd:{c.sense}:{c.margin!r}".encode())
            self._digest_expr(h, c.expr)
        for c in self.equality_constraints:
            h.update(b"eq")
            self._digest_expr(h, c.expr)
        for b in self.boxes:
            h.update(f"box:{b.var.vid}:{b.lo!r}:{b.hi!r}:{b.trace}".encode())
        return h.hexdigest()

    @staticmethod
    def _digest_expr(h, expr: AffineMatrixExpression):
        h.update(expr.constant.tobytes())
        for L, v, R, t in expr.terms:
            h.update(f"t{v.vid}:{int(t)}".encode())
            h.update(L.tobytes())
            h.update(R.tobytes())

    # --- solving ---------------------------------------------------------------
    def solve(self, tol: float = DEFAULT_TOL, solvers=DEFAULT_SOLVERS,
              verbose: bool = False, interior_cap: float = 1e-2,
              solver_opts: dict | None = None,
              minimize: list[tuple[AffineMatrixExpression, float]] | None = None
              ) -> Solution:
        """Solve the feasibility program and independently verify the answer.

        Internally the program is posed as a strict-feasibility problem:
        every PSD cone is shifted by a common slack t in [0, interior_cap]
        and t is maximized.  This leaves the feasible set unchanged (t = 0)
        but gives interior-point backends a well-posed objective, which
        matters because pure feasibility SDPs with thin interiors stall.
        Set ``interior_cap=0`` for a plain feasibility solve.

        With ``minimize`` (a list of (1x1 affine expression, weight) pairs),
        a second phase minimizes the weighted sum, each term normalized by
        its magnitude at the phase-1 point, while keeping half the achieved
        interior slack, so the returned point stays strictly inside every
        cone.

        A "feasible" status is only reported when re-evaluating every
        constraint at the returned point passes within ``tol``; an
        "infeasible" status requires a solver certificate.  Anything else is
        a numerical failure (reported, never raised).
        """
        import cvxpy as cp

        cvx_vars: dict[int, cp.Variable] = {}
        for v in self._vars:
            if v.kind == "symmetric":
                cvx_vars[v.vid] = cp.Variable((v.rows, v.cols), symmetric=True)
            elif v.kind == "scalar":
                cvx_vars[v.vid] = cp.Variable((1, 1))
            else:
                cvx_vars[v.vid] = cp.Variable((v.rows, v.cols))

        def lower(expr: AffineMatrixExpression):
            out = cp.Constant(expr.constant)
            for L, v, R, t in expr.terms:
                V = cvx_vars[v.vid]
                out = out + L @ (V.T if t else V) @ R
            return out

        boost = bool(interior_cap > 0 and self.psd_constraints)
        slack = cp.Variable() if boost else None
        slack_floor = cp.Parameter(value=0.0) if boost else None
        constraints = []
        if boost:
            constraints += [slack >= slack_floor, slack <= interior_cap]
        for c in self.psd_constraints:
            E = lower(c.normalized())
            E = 0.5 * (E + E.T)
            if boost:
                constraints.append(E >> slack * np.eye(E.shape[0]))
            else:
                constraints.append(E >> 0)
        for c in self.equality_constraints:
            constraints.append(lower(c.expr) == 0)
        for b in self.boxes:
            v = cvx_vars[b.var.vid]
            scal = cp.trace(v) if b.trace else v[0, 0]
            if np.isfinite(b.lo):
                constraints.append(scal >= b.lo)
            if np.isfinite(b.hi):
                constraints.append(scal <= b.hi)

        objective = cp.Maximize(slack) if boost else cp.Minimize(0)
        problem = cp.Problem(objective, constraints)
        opts = solver_opts or {}

        def run(prob, solver):
            if solver == "SCS":
                kw = {"eps": min(tol * 100, 1e-5), "max_iters": 50_000}
                kw.update(opts.get("SCS", {}))
                prob.solve(solver="SCS", verbose=verbose, **kw)
            elif solver == "CLARABEL":
                kw = {"max_iter": 200}
                kw.update(opts.get("CLARABEL", {}))
                prob.solve(solver="CLARABEL", verbose=verbose, **kw)
            else:
                prob.solve(solver=solver, verbose=verbose, **opts.get(solver, {}))

        def extract() -> dict[int, Array] | None:
            vals = {}
            for v in self._vars:
                val = cvx_vars[v.vid].value
                # a variable untouched by constraints is free; take zero
                vals[v.vid] = np.zeros(v.shape) if val is None \
                    else np.asarray(val, dtype=float)
            if any(np.any(~np.isfinite(val)) for val in vals.values()):
                return None
            for v in self._vars:  # exact symmetry for downstream algebra
                if v.kind == "symmetric":
                    vals[v.vid] = 0.5 * (vals[v.vid] + vals[v.vid].T)
            return self._equality_polish(vals)

        def candidate(solver, t0, solver_status, phase2_status) -> Solution | None:
            vals = extract()
            if vals is None:
                return None
            psd_res, eq_res = self.residuals(vals)
            named = {v.name or f"var{v.vid}": vals[v.vid] for v in self._vars}
            return Solution(status="feasible", values=named, psd_residual=psd_res,
                            eq_residual=eq_res, solver=solver,
                            solver_status=solver_status,
                            solve_time=time.perf_counter() - t0,
                            interior_slack=(None if slack is None or slack.value is None
                                            else float(slack.value)),
                            phase2_status=phase2_status)

        best: Solution | None = None
        for solver in solvers:
            t0 = time.perf_counter()
            try:
                run(problem, solver)
            except cp.error.SolverError:
                continue
            status = problem.status
            if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
                return Solution(status="infeasible", solver=solver,
                                solver_status=status,
                                solve_time=time.perf_counter() - t0)
            if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
                continue
            cand = candidate(solver, t0, status, "")
            ok = cand is not None and cand.psd_residual <= tol and cand.eq_residual <= tol
            if ok and boost and minimize and slack.value is not None \
                    and slack.value > 1e-4:
                # refinement is only worth it with a healthy interior; on
                # razor-thin problems phase 2 tends to come back inaccurate
                # phase 2 (opportunistic): trade surplus slack for the
                # secondary objective, each term normalized by its current
                # magnitude; keep the phase-1 point unless the refined one
                # verifies just as cleanly
                point = {self._vars[i].vid: cand.values[self._vars[i].name
                                                        or f"var{self._vars[i].vid}"]
                         for i in range(len(self._vars))}
                slack_floor.value = 0.5 * float(slack.value)
                obj = 0
                for expr, weight in minimize:
                    cur = abs(float(expr.evaluate(point)[0, 0]))
                    obj = obj + (weight / max(cur, 1e-9)) * lower(expr)[0, 0]
                phase2 = cp.Problem(cp.Minimize(obj), constraints)
                try:
                    run(phase2, solver)
                    if phase2.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
                        cand2 = candidate(solver, t0, status, phase2.status)
                        if cand2 is not None and cand2.psd_residual <= tol \
                                and cand2.eq_residual <= tol:
                            return cand2
                except cp.error.SolverError:
                    pass
                finally:
                    slack_floor.value = 0.0
                cand.phase2_status = "discarded"
                return cand
            if ok:
                return cand
            if cand is not None and (best is None or cand.psd_residual + cand.eq_residual
                                     < best.psd_residual + best.eq_residual):
                best = cand
        if best is not None:
            best.status = "numerical-failure"
            return best
        return Solution(status="numerical-failure")

    def _equality_polish(self, vals: dict[int, Array]) -> dict[int, Array]:
        """Minimum-norm correction of the returned point onto the equality
        manifold.  First-order solvers leave O(eps) equality residuals that
        no amount of PSD slack can absorb; the correction is tiny relative
        to the PSD margins, so it never costs feasibility in practice.  The
        corrected point is kept only when it improves both residual groups.
        """
        if not self.equality_constraints:
            return vals
        involved = sorted(set().union(*(c.expr.variables()
                                        for c in self.equality_constraints)))
        if not involved:
            return vals

        def eq_vector(point) -> Array:
            return np.concatenate([c.expr.evaluate(point).ravel()
                                   for c in self.equality_constraints])

        res0 = eq_vector(vals)
        if np.abs(res0).max() < 1e-13:
            return vals
        cols = []
        spans: list[tuple[int, int]] = []
        zero = dict(vals)
        for vid in involved:
            var = self._vars[vid]
            start = len(cols)
            base = eq_vector({**zero, vid: np.zeros(var.shape)})
            for k in range(var.num_components):
                probe = {**zero, vid: _component_basis(var, k)}
                cols.append(eq_vector(probe) - base)
            spans.append((vid, start))
        J = np.column_stack(cols)
        delta, *_ = np.linalg.lstsq(J, -res0, rcond=None)
        new_vals = dict(vals)
        for (vid, start) in spans:
            var = self._vars[vid]
            block = delta[start:start + var.num_components]
            adj = np.zeros(var.shape)
            for k, dk in enumerate(block):
                if dk != 0.0:
                    adj += dk * _component_basis(var, k)
            new_vals[vid] = vals[vid] + adj
        psd0, eq0 = self.residuals(vals)
        psd1, eq1 = self.residuals(new_vals)
        if eq1 <= eq0 and psd1 <= max(psd0, 1e-12):
            return new_vals
        return vals

    # --- export ----------------------------------------------------------------
    def export_triplets(self, path):
        """Write the program in a scalarized symmetric-sparse triplet format.

        One section per constraint; inside a section, ``F 0`` lists the
        constant matrix and ``F <k>`` the coefficient of scalar component k,
        as ``row col value`` lines (upper triangle for square blocks).
        Component k enumerates variables in declaration order: symmetric
        upper triangles row-major, rectangles row-major, scalars singly.
        Intended for external-solver debugging of small programs.
        """
        offsets, total = {}, 0
        for v in self._vars:
            offsets[v.vid] = total
            total += v.num_components

        def write_matrix(fh, tag, M, sym):
            rows, cols = M.shape
            for i in range(rows):
                jstart = i if sym else 0
                for j in range(jstart, cols):
                    if M[i, j] != 0.0:
                        fh.write(f"{tag} {i} {j} {M[i, j]!r}\n")

        with open(path, "w") as fh:
            fh.write(f"variables {total}\n")
            for v in self._vars:
                fh.write(f"var {v.vid} {v.kind} {v.rows} {v.cols} offset {offsets[v.vid]}\n")
            sections = [("psd", c, c.normalized(), True) for c in self.psd_constraints]
            sections += [("eq", c, c.expr, False) for c in self.equality_constraints]
            for idx, (kind, c, expr, sym) in enumerate(sections):
                fh.write(f"[{kind} {idx} dim {expr.shape[0]}x{expr.shape[1]}"
                         f"{' ' + c.label if c.label else ''}]\n")
                zero_point = {v.vid: np.zeros(v.shape) for v in self._vars}
                write_matrix(fh, "F 0", expr.evaluate(zero_point), sym)
                for v in sorted(expr.variables()):
                    var = self._vars[v]
                    for k in range(var.num_components):
                        point = dict(zero_point)
                        point[v] = _component_basis(var, k)
                        coeff = expr.evaluate(point) - expr.evaluate(zero_point)
                        write_matrix(fh, f"F {offsets[v] + k + 1}", coeff, sym)


def _triu_index(d: int, k: int) -> tuple[int, int]:
    """k-th upper-triangular (i, j) pair of a d x d matrix, row-major."""
    for i in range(d):
        row_len = d - i
        if k < row_len:
            return i, i + k
        k -= row_len
    raise IndexError("component index out of range")


def _component_basis(var: VariableHandle, k: int) -> Array:
    """Basis matrix of the k-th free scalar component of ``var``."""
    M = np.zeros(var.shape)
    if var.kind == "symmetric":
        i, j = _triu_index(var.rows, k)
        M[i, j] = 1.0
        M[j, i] = 1.0
    elif var.kind == "scalar":
        M[0, 0] = 1.0
    else:
        M[k // var.cols, k % var.cols] = 1.0
    return M
