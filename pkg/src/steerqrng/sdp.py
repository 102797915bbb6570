"""Dense semidefinite programming for small block problems.

The solver is a self-contained primal-dual path-following interior-point
method (HKM search direction, Mehrotra predictor-corrector) specialised for
the tiny instances that show up in steering certification: a handful of
Hermitian 2x2 blocks and a few dozen equality constraints.  Complex Hermitian
blocks are handled through the real-symmetric embedding
``H -> [[Re H, -Im H], [Im H, Re H]]`` so the core iteration only ever sees
real symmetric matrices.

Problem form (user facing)::

    max / min   sum_k  Tr(C_k X_k)
    subject to  sum_k  Tr(A_jk X_k) = b_j     for each constraint j
                X_k >= 0                      (PSD, Hermitian)

Redundant equality rows are removed by a rank-revealing sweep before the
iteration starts; inconsistent rows are reported as infeasibility.  When the
main iteration cannot classify a failure, an explicit Phase-I feasibility
problem (added scalar slack block) decides between ``infeasible`` and
``numerical-failure``.

Determinism: the solver uses no randomness; a fixed problem always produces
the same iterates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    assert_hermitian,
    from_real_embedding,
    hermitian_part,
    min_eigenvalue,
    real_embedding,
)

__all__ = [
    "SdpProblem",
    "SdpConstraint",
    "SdpSolution",
    "SolverOptions",
    "CertificateReport",
    "solve",
    "check_certificate",
    "dump_problem",
    "load_problem",
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "NUMERICAL_FAILURE",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class SdpConstraint:
    """One equality constraint: sum_k Tr(coeffs[label] X_label) = rhs."""

    coeffs: dict[str, np.ndarray]
    rhs: float
    name: str = ""


@dataclass
class SdpProblem:
    """Block SDP with labelled PSD variables.

    ``blocks`` maps label -> dimension.  ``objective`` maps label -> Hermitian
    coefficient matrix (absent labels contribute nothing).  ``sense`` is
    ``"max"`` or ``"min"``.
    """

    blocks: dict[str, int]
    objective: dict[str, np.ndarray]
    constraints: list[SdpConstraint]
    sense: str = "max"

    def validate(self) -> None:
        if self.sense not in ("max", "min"):
            raise ValueError(f"unknown sense {self.sense!r}")
        for label, dim in self.blocks.items():
            if dim < 1:
                raise ValueError(f"block {label!r} has non-positive dimension")
        for label, mat in self.objective.items():
            self._check_coeff(label, mat, "objective")
        for j, con in enumerate(self.constraints):
            if not np.isfinite(con.rhs):
                raise ValueError(f"constraint {j} has non-finite rhs")
            for label, mat in con.coeffs.items():
                self._check_coeff(label, mat, f"constraint {j}")

    def _check_coeff(self, label: str, mat: np.ndarray, where: str) -> None:
        if label not in self.blocks:
            raise ValueError(f"{where} references unknown block {label!r}")
        dim = self.blocks[label]
        mat = np.asarray(mat)
        if mat.shape != (dim, dim):
            raise ValueError(
                f"{where} coefficient for block {label!r} has shape {mat.shape}, "
                f"expected ({dim}, {dim})"
            )
        assert_hermitian(mat, name=f"{where} coefficient for {label!r}")


@dataclass
class SdpSolution:
    status: str
    primal_blocks: dict[str, np.ndarray]
    primal_value: float
    dual_value: float
    dual_multipliers: np.ndarray
    gap: float
    iterations: int
    message: str = ""
    history: list[dict] = field(default_factory=list)


@dataclass
class SolverOptions:
    max_iterations: int = 200
    gap_target: float = 1e-9
    feasibility_target: float = 1e-9
    gap_acceptable: float = 1e-7
    feasibility_acceptable: float = 5e-8
    step_fraction: float = 0.98
    rank_tolerance: float = 1e-9


@dataclass
class CertificateReport:
    """Independent recomputation of solution quality from raw problem data."""

    constraint_violation: float
    primal_min_eigenvalue: float
    dual_min_eigenvalue: float
    primal_value: float
    dual_value: float
    gap: float
    feasible_primal: bool
    feasible_dual: bool
    gap_ok: bool

    @property
    def ok(self) -> bool:
        return self.feasible_primal and self.feasible_dual and self.gap_ok


# ---------------------------------------------------------------------------
# internal real-symmetric form


def _svec(mat: np.ndarray) -> np.ndarray:
    """Scaled upper-triangle vectorization preserving the trace inner product."""
    d = mat.shape[0]
    out = np.empty(d * (d + 1) // 2)
    idx = 0
    sqrt2 = np.sqrt(2.0)
    for i in range(d):
        out[idx] = mat[i, i]
        idx += 1
        for j in range(i + 1, d):
            out[idx] = sqrt2 * mat[i, j]
            idx += 1
    return out


class _InternalProblem:
    """Real symmetric block problem in canonical min form."""

    def __init__(self, problem: SdpProblem):
        problem.validate()
        self.sense_sign = -1.0 if problem.sense == "max" else 1.0
        self.labels = list(problem.blocks.keys())
        self.embedded: dict[str, bool] = {}
        self.dims: list[int] = []
        for label in self.labels:
            dim = problem.blocks[label]
            mats = [problem.objective.get(label)] + [
                con.coeffs.get(label) for con in problem.constraints
            ]
            is_complex = any(
                m is not None and np.max(np.abs(np.asarray(m).imag)) > 0.0 for m in mats
            )
            self.embedded[label] = is_complex
            self.dims.append(2 * dim if is_complex else dim)

        self.m_orig = len(problem.constraints)
        self.b = np.array([con.rhs for con in problem.constraints], dtype=float)
        # stacked coefficient arrays, one (m, D, D) array per block
        self.A = [np.zeros((self.m_orig, d, d)) for d in self.dims]
        self.C = [np.zeros((d, d)) for d in self.dims]
        for k, label in enumerate(self.labels):
            obj = problem.objective.get(label)
            if obj is not None:
                self.C[k] = self.sense_sign * self._intern(label, obj)
            for j, con in enumerate(problem.constraints):
                coeff = con.coeffs.get(label)
                if coeff is not None:
                    self.A[k][j] = self._intern(label, coeff)

    def _intern(self, label: str, mat: np.ndarray) -> np.ndarray:
        mat = hermitian_part(np.asarray(mat, dtype=complex))
        if self.embedded[label]:
            return 0.5 * real_embedding(mat)
        return mat.real.copy()

    def recover_block(self, k: int, x_int: np.ndarray) -> np.ndarray:
        label = self.labels[k]
        if self.embedded[label]:
            return from_real_embedding(x_int)
        return 0.5 * (x_int + x_int.T)


def _select_rows(rows: np.ndarray, rank_tol: float) -> tuple[list[int], list[int]]:
    """Greedy rank-revealing row selection (largest remaining norm first)."""
    m = rows.shape[0]
    work = rows.astype(float).copy()
    scale = max(1.0, float(np.max(np.abs(rows)))) if rows.size else 1.0
    threshold = rank_tol * scale
    kept: list[int] = []
    alive = list(range(m))
    while alive:
        norms = np.linalg.norm(work[alive], axis=1)
        best = int(np.argmax(norms))
        if norms[best] <= threshold:
            break
        i = alive.pop(best)
        kept.append(i)
        q = work[i] / np.linalg.norm(work[i])
        for j in alive:
            work[j] -= np.dot(work[j], q) * q
    dropped = [i for i in range(m) if i not in kept]
    return kept, dropped


def _max_step(block: np.ndarray, direction: np.ndarray) -> float:
    """Largest alpha with block + alpha*direction PSD (block assumed PD)."""
    chol = np.linalg.cholesky(block)
    inner = np.linalg.solve(chol, direction)
    inner = np.linalg.solve(chol, inner.T)
    lam = float(np.linalg.eigvalsh(0.5 * (inner + inner.T))[0])
    if lam >= -1e-14:
        return 1e8
    return -1.0 / lam


def _try_cholesky(mat: np.ndarray) -> np.ndarray | None:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return None


# ---------------------------------------------------------------------------
# core iteration


def _ipm(
    A: list[np.ndarray],
    b: np.ndarray,
    C: list[np.ndarray],
    options: SolverOptions,
) -> dict:
    """Minimize sum Tr(C_k X_k) over PSD blocks subject to the stacked rows.

    Returns a dict with the best iterate found and its quality numbers.
    All inputs are real symmetric; rows of ``A`` must be linearly independent.
    """
    dims = [c.shape[0] for c in C]
    n_total = sum(dims)
    m = b.size
    scale_b = 1.0 + float(np.max(np.abs(b))) if m else 1.0
    scale_c = 1.0 + max(float(np.max(np.abs(c))) if c.size else 0.0 for c in C)

    xi = 10.0 * max(1.0, float(np.max(np.abs(b))) if m else 1.0)
    eta = 10.0 * max(
        1.0,
        max(float(np.max(np.abs(c))) for c in C),
        max(float(np.max(np.abs(a))) if a.size else 0.0 for a in A),
    )
    X = [xi * np.eye(d) for d in dims]
    S = [eta * np.eye(d) for d in dims]
    y = np.zeros(m)

    best: dict = {"score": np.inf}
    history: list[dict] = []
    stall = 0
    status = NUMERICAL_FAILURE
    message = "max iterations reached"
    it = 0

    for it in range(1, options.max_iterations + 1):
        pres = b - np.array([sum(np.tensordot(A[k][j], X[k]) for k in range(len(X)))
                             for j in range(m)])
        Rd = [C[k] - np.tensordot(A[k], y, axes=(0, 0)) - S[k] for k in range(len(X))]
        mu = sum(np.tensordot(X[k], S[k]) for k in range(len(X))) / n_total
        pobj = sum(np.tensordot(C[k], X[k]) for k in range(len(X)))
        dobj = float(b @ y)
        pinf = float(np.max(np.abs(pres))) / scale_b if m else 0.0
        dinf = max(float(np.max(np.abs(r))) for r in Rd) / scale_c
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj))
        score = max(pinf, dinf, relgap)
        history.append(
            {"mu": float(mu), "pobj": float(pobj), "dobj": dobj,
             "pinf": pinf, "dinf": dinf, "relgap": float(relgap)}
        )
        if score < best["score"]:
            best = {
                "score": score, "X": [x.copy() for x in X], "y": y.copy(),
                "S": [s.copy() for s in S], "pobj": float(pobj), "dobj": dobj,
                "pinf": pinf, "dinf": dinf, "relgap": float(relgap),
            }
            stall = 0
        else:
            stall += 1

        if (
            pinf <= options.feasibility_target
            and dinf <= options.feasibility_target
            and relgap <= options.gap_target
        ):
            status, message = OPTIMAL, "converged to target tolerance"
            break
        if pinf <= options.feasibility_acceptable and pobj < -1e10 * scale_c:
            status, message = UNBOUNDED, "objective diverging with feasible iterate"
            break
        if mu < 1e-17 or stall > 40:
            message = "progress stalled"
            break

        # factorizations for this iterate
        Sinv = []
        broke = False
        for k in range(len(X)):
            chol = _try_cholesky(S[k])
            if chol is None:
                broke = True
                break
            inv = np.linalg.inv(chol)
            Sinv.append(inv.T @ inv)
        if broke or any(_try_cholesky(x) is None for x in X):
            message = "slack or primal block lost positive definiteness"
            break

        W = [np.einsum("ab,jbc,cd->jad", X[k], A[k], Sinv[k]) for k in range(len(X))]
        M = sum(np.einsum("iab,jba->ij", A[k], W[k]) for k in range(len(X)))
        M = 0.5 * (M + M.T)
        jitter = 0.0
        cholM = _try_cholesky(M)
        while cholM is None and jitter < 1e-6:
            jitter = max(jitter * 10.0, 1e-14) * (1.0 + float(np.max(np.abs(M))))
            cholM = _try_cholesky(M + jitter * np.eye(m))
        if cholM is None:
            message = "Schur complement factorization failed"
            break
        Mj = M + jitter * np.eye(m) if jitter else M

        def solve_schur(rhs: np.ndarray) -> np.ndarray:
            sol = np.linalg.solve(Mj, rhs)
            if not np.all(np.isfinite(sol)):
                return sol
            correction = np.linalg.solve(Mj, rhs - Mj @ sol)  # one refinement pass
            if np.all(np.isfinite(correction)):
                sol = sol + correction
            return sol

        def directions(sigma_mu: float, Ecorr: list[np.ndarray] | None):
            G = []
            for k in range(len(X)):
                g = -X[k] - X[k] @ Rd[k] @ Sinv[k]
                if sigma_mu:
                    g = g + sigma_mu * Sinv[k]
                if Ecorr is not None:
                    g = g - Ecorr[k] @ Sinv[k]
                G.append(g)
            rhs = pres - np.array(
                [sum(np.tensordot(A[k][j], G[k]) for k in range(len(X))) for j in range(m)]
            )
            dy = solve_schur(rhs)
            dS = [Rd[k] - np.tensordot(A[k], dy, axes=(0, 0)) for k in range(len(X))]
            dX = []
            for k in range(len(X)):
                adj = np.tensordot(A[k], dy, axes=(0, 0))
                raw = G[k] + X[k] @ adj @ Sinv[k]
                dX.append(0.5 * (raw + raw.T))
            return dX, dy, dS

        dXp, dyp, dSp = directions(0.0, None)
        if not all(np.all(np.isfinite(d)) for d in (*dXp, dyp, *dSp)):
            message = "search direction is not finite"
            break
        alpha_p = min(1.0, min(_max_step(X[k], dXp[k]) for k in range(len(X))))
        alpha_d = min(1.0, min(_max_step(S[k], dSp[k]) for k in range(len(X))))
        mu_aff = sum(
            np.tensordot(X[k] + alpha_p * dXp[k], S[k] + alpha_d * dSp[k])
            for k in range(len(X))
        ) / n_total
        sigma = float(np.clip((max(mu_aff, 0.0) / mu) ** 3, 1e-8, 0.999))

        Ecorr = [dXp[k] @ dSp[k] for k in range(len(X))]
        dX, dy, dS = directions(sigma * mu, Ecorr)
        if not all(np.all(np.isfinite(d)) for d in (*dX, dy, *dS)):
            message = "search direction is not finite"
            break

        gamma = options.step_fraction if mu > 1e-7 else 0.99
        alpha_p = min(1.0, gamma * min(_max_step(X[k], dX[k]) for k in range(len(X))))
        alpha_d = min(1.0, gamma * min(_max_step(S[k], dS[k]) for k in range(len(X))))
        for k in range(len(X)):
            X[k] = 0.5 * ((X[k] + alpha_p * dX[k]) + (X[k] + alpha_p * dX[k]).T)
            S[k] = 0.5 * ((S[k] + alpha_d * dS[k]) + (S[k] + alpha_d * dS[k]).T)
        y = y + alpha_d * dy

    result = dict(best)
    result["status"] = status
    result["message"] = message
    result["iterations"] = it
    result["history"] = history
    if status != OPTIMAL and best["score"] is not np.inf and "pinf" in best:
        if (
            best["pinf"] <= options.feasibility_acceptable
            and best["dinf"] <= options.feasibility_acceptable
            and best["relgap"] <= options.gap_acceptable
        ):
            result["status"] = OPTIMAL
            result["message"] = "converged within acceptable tolerance"
    return result


# ---------------------------------------------------------------------------
# public entry points


def solve(
    problem: SdpProblem,
    options: SolverOptions | None = None,
    *,
    _classify_failure: bool = True,
) -> SdpSolution:
    """Solve a block SDP; never raises on solver trouble, reports a status."""
    options = options or SolverOptions()
    internal = _InternalProblem(problem)
    nblocks = len(internal.labels)
    m = internal.m_orig

    # split blocks into constrained ones and ones no constraint touches
    touched = [bool(np.max(np.abs(internal.A[k])) > 0.0) if m else False
               for k in range(nblocks)]
    free_value = 0.0
    for k in range(nblocks):
        if touched[k]:
            continue
        lam = float(np.linalg.eigvalsh(internal.C[k])[0]) if internal.C[k].size else 0.0
        if lam < -1e-12:
            # min <C, X> over X >= 0 with no constraints: unbounded below
            return _finish(problem, internal, None, UNBOUNDED,
                           f"block {internal.labels[k]!r} is unconstrained with "
                           "indefinite objective", 0, [])

    rows = np.stack(
        [np.concatenate([_svec(internal.A[k][j]) for k in range(nblocks) if touched[k]])
         for j in range(m)]
    ) if m and any(touched) else np.zeros((m, 0))
    kept, dropped = (_select_rows(rows, options.rank_tolerance) if m else ([], []))

    # consistency of redundant rows
    if dropped:
        basis = rows[kept].T if kept else np.zeros((rows.shape[1], 0))
        for i in dropped:
            if kept:
                coeff, *_ = np.linalg.lstsq(basis, rows[i], rcond=None)
                predicted = float(coeff @ internal.b[kept])
            else:
                predicted = 0.0
            if abs(internal.b[i] - predicted) > 1e-7 * (1.0 + np.max(np.abs(internal.b))):
                return _finish(
                    problem, internal, None, INFEASIBLE,
                    f"constraint {i} is inconsistent with the others", 0, [])

    active = [k for k in range(nblocks) if touched[k]]
    if not active:
        # nothing to optimize: X = 0 everywhere is optimal
        sol = {"X": [], "y": np.zeros(0), "pobj": free_value, "dobj": free_value,
               "relgap": 0.0, "status": OPTIMAL, "message": "trivial problem",
               "iterations": 0, "history": []}
        return _finish(problem, internal, sol, OPTIMAL, "trivial problem", 0, [],
                       active=active, kept=kept)

    A_red = [internal.A[k][kept] for k in active]
    b_red = internal.b[kept]
    C_red = [internal.C[k] for k in active]

    result = _ipm(A_red, b_red, C_red, options)
    status = result["status"]
    message = result["message"]

    if status != OPTIMAL and status != UNBOUNDED and _classify_failure:
        feasible = _phase1_feasible(A_red, b_red, [c.shape[0] for c in C_red], options)
        if feasible is False:
            status, message = INFEASIBLE, "Phase-I slack stays positive"
        elif feasible is True:
            status = NUMERICAL_FAILURE
            message = f"feasible but not converged: {message}"

    return _finish(problem, internal, result, status, message,
                   result.get("iterations", 0), result.get("history", []),
                   active=active, kept=kept)


def _phase1_feasible(
    A: list[np.ndarray], b: np.ndarray, dims: list[int], options: SolverOptions
) -> bool | None:
    """Explicit Phase I: min t subject to A(X) + t*(b - A(I)) = b, X, t >= 0."""
    x0 = [np.eye(d) for d in dims]
    r0 = b - np.array([sum(np.tensordot(A[k][j], x0[k]) for k in range(len(A)))
                       for j in range(b.size)])
    A_slack = r0.reshape(-1, 1, 1)
    A_phase = A + [A_slack]
    C_phase = [np.zeros((d, d)) for d in dims] + [np.array([[1.0]])]
    opts = SolverOptions(
        max_iterations=options.max_iterations,
        gap_target=1e-9, feasibility_target=1e-9,
        gap_acceptable=1e-6, feasibility_acceptable=1e-7,
    )
    result = _ipm(A_phase, b, C_phase, opts)
    if result["status"] != OPTIMAL:
        return None
    slack = result["pobj"]
    return bool(slack <= 1e-6 * (1.0 + float(np.max(np.abs(b)))))


def _finish(
    problem: SdpProblem,
    internal: _InternalProblem,
    result: dict | None,
    status: str,
    message: str,
    iterations: int,
    history: list[dict],
    *,
    active: list[int] | None = None,
    kept: list[int] | None = None,
) -> SdpSolution:
    sense_sign = internal.sense_sign
    nblocks = len(internal.labels)
    blocks_out: dict[str, np.ndarray] = {}
    y_user = np.zeros(internal.m_orig)
    pval = dval = np.nan
    gap = np.nan

    if result is not None and "X" in result and active is not None:
        x_internal: dict[int, np.ndarray] = {k: np.zeros((internal.dims[k],) * 2)
                                             for k in range(nblocks)}
        for pos, k in enumerate(active):
            x_internal[k] = result["X"][pos]
        for k, label in enumerate(internal.labels):
            blocks_out[label] = internal.recover_block(k, x_internal[k])
        if kept:
            y_int = np.zeros(internal.m_orig)
            y_int[np.asarray(kept, dtype=int)] = result["y"]
        else:
            y_int = np.zeros(internal.m_orig)
        y_user = sense_sign * y_int
        pval = sense_sign * result["pobj"]
        dval = sense_sign * result["dobj"]
        gap = result.get("relgap", np.nan)
        if problem.sense == "max":
            # user-facing history in max convention
            history = [
                {**h, "pobj": -h["pobj"], "dobj": -h["dobj"]} for h in history
            ]
    else:
        for label, dim in problem.blocks.items():
            is_complex = internal.embedded[label]
            blocks_out[label] = np.zeros((dim, dim), dtype=complex if is_complex else float)

    return SdpSolution(
        status=status,
        primal_blocks=blocks_out,
        primal_value=float(pval),
        dual_value=float(dval),
        dual_multipliers=y_user,
        gap=float(gap),
        iterations=iterations,
        message=message,
        history=history,
    )


def check_certificate(
    problem: SdpProblem,
    solution: SdpSolution,
    *,
    feasibility_tol: float = 1e-7,
    eigenvalue_tol: float = -1e-7,
    gap_tol: float = 1e-6,
) -> CertificateReport:
    """Re-derive solution quality from scratch with plain matrix arithmetic.

    Uses only the raw problem data and the returned blocks/multipliers, no
    solver internals, so it doubles as an independent certificate check.
    """
    problem.validate()
    viol = 0.0
    for con in problem.constraints:
        lhs = 0.0
        for label, coeff in con.coeffs.items():
            lhs += float(np.real(np.trace(np.asarray(coeff).conj().T
                                          @ solution.primal_blocks[label])))
        viol = max(viol, abs(lhs - con.rhs))

    min_eig_primal = min(
        (min_eigenvalue(hermitian_part(np.asarray(x, dtype=complex)))
         for x in solution.primal_blocks.values()),
        default=0.0,
    )

    sign = 1.0 if problem.sense == "max" else -1.0
    slacks = {label: np.zeros((dim, dim), dtype=complex)
              for label, dim in problem.blocks.items()}
    for label, mat in problem.objective.items():
        slacks[label] -= sign * np.asarray(mat, dtype=complex)
    for j, con in enumerate(problem.constraints):
        for label, coeff in con.coeffs.items():
            slacks[label] += sign * solution.dual_multipliers[j] * np.asarray(coeff, dtype=complex)
    min_eig_dual = min(
        (min_eigenvalue(hermitian_part(s)) for s in slacks.values()), default=0.0
    )

    pval = 0.0
    for label, mat in problem.objective.items():
        pval += float(np.real(np.trace(np.asarray(mat).conj().T
                                       @ solution.primal_blocks[label])))
    dval = float(np.array([c.rhs for c in problem.constraints])
                 @ solution.dual_multipliers) if problem.constraints else 0.0
    gap = abs(pval - dval) / (1.0 + abs(pval))

    return CertificateReport(
        constraint_violation=viol,
        primal_min_eigenvalue=min_eig_primal,
        dual_min_eigenvalue=min_eig_dual,
        primal_value=pval,
        dual_value=dval,
        gap=gap,
        feasible_primal=viol <= feasibility_tol and min_eig_primal >= eigenvalue_tol,
        feasible_dual=min_eig_dual >= eigenvalue_tol,
        gap_ok=gap <= gap_tol,
    )


# ---------------------------------------------------------------------------
# plain-text problem files (for offline cross-validation with other solvers)


def _format_matrix(mat: np.ndarray) -> list[str]:
    mat = np.asarray(mat, dtype=complex)
    lines = []
    for row in mat:
        lines.append(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row))
    return lines


def _parse_matrix(lines: list[str], dim: int) -> np.ndarray:
    mat = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        parts = lines[i].split()
        for j in range(dim):
            mat[i, j] = float(parts[2 * j]) + 1.0j * float(parts[2 * j + 1])
    if np.max(np.abs(mat.imag)) == 0.0:
        return mat.real.copy()
    return mat


def dump_problem(problem: SdpProblem, path: str) -> None:
    """Write the problem in a documented plain-text format (``sdp-v1``).

    Layout: a ``format`` line, the sense, one ``block`` line per variable,
    then objective terms and constraints.  Matrices are row-major lines of
    ``re im`` pairs printed with 17 significant digits, so a dump/load round
    trip reproduces every float exactly.
    """
    problem.validate()
    out = ["format sdp-v1", f"sense {problem.sense}", f"blocks {len(problem.blocks)}"]
    for label, dim in problem.blocks.items():
        out.append(f"block {label} {dim}")
    out.append(f"objective_terms {len(problem.objective)}")
    for label, mat in problem.objective.items():
        out.append(f"term {label}")
        out.extend(_format_matrix(mat))
    out.append(f"constraints {len(problem.constraints)}")
    for con in problem.constraints:
        name = con.name or "-"
        out.append(f"constraint {con.rhs!r} {name}")
        out.append(f"terms {len(con.coeffs)}")
        for label, mat in con.coeffs.items():
            out.append(f"term {label}")
            out.extend(_format_matrix(mat))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(out) + "\n")


def load_problem(path: str) -> SdpProblem:
    """Read a problem written by :func:`dump_problem`."""
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    pos = 0

    def take() -> str:
        nonlocal pos
        line = lines[pos]
        pos += 1
        return line

    header = take()
    if header != "format sdp-v1":
        raise ValueError(f"unrecognized SDP file header {header!r}")
    sense = take().split()[1]
    nblocks = int(take().split()[1])
    blocks: dict[str, int] = {}
    for _ in range(nblocks):
        _, label, dim = take().split()
        blocks[label] = int(dim)

    def read_matrix(label: str) -> np.ndarray:
        nonlocal pos
        dim = blocks[label]
        mat = _parse_matrix(lines[pos:pos + dim], dim)
        pos += dim
        return mat

    objective: dict[str, np.ndarray] = {}
    nterms = int(take().split()[1])
    for _ in range(nterms):
        label = take().split()[1]
        objective[label] = read_matrix(label)

    constraints: list[SdpConstraint] = []
    ncons = int(take().split()[1])
    for _ in range(ncons):
        parts = take().split()
        rhs = float(parts[1])
        name = parts[2] if parts[2] != "-" else ""
        coeffs: dict[str, np.ndarray] = {}
        nt = int(take().split()[1])
        for _ in range(nt):
            label = take().split()[1]
            coeffs[label] = read_matrix(label)
        constraints.append(SdpConstraint(coeffs=coeffs, rhs=rhs, name=name))

    return SdpProblem(blocks=blocks, objective=objective,
                      constraints=constraints, sense=sense)
