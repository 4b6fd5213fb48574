"""Linear programming plumbing shared by the norm, quotient and decomposition computations."""

import dataclasses
import itertools
from collections.abc import Sequence
from typing import Optional

import numpy as np
import numpy.typing as npt
from scipy import optimize, sparse

from .exceptions import ErrorDetails, InfeasibleProblemException, SolverException

FloatArray = npt.NDArray[np.float64]

LP_METHOD = "highs-ds"
LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}
VERTEX_ENUMERATION_MAX_VARIABLES = 6


@dataclasses.dataclass(frozen=True)
class LipBall:
    """
    Rows encoding |f(u) - f(v)| <= d(u, v) for all pairs of the selected points.

    The base point is eliminated (f(0) = 0), so column j holds the value at `variables[j]`.
    """

    A_ub: sparse.csr_matrix
    b_ub: FloatArray
    variables: tuple[int, ...]


def lip_ball(dist: FloatArray, base: int, points: Optional[Sequence[int]] = None) -> LipBall:
    selected = list(range(dist.shape[0])) if points is None else sorted(set(points) | {base})
    variables = tuple(p for p in selected if p != base)

    first, second = np.triu_indices(len(selected), k=1)
    sel = np.asarray(selected, dtype=np.int64)
    us, vs = sel[first], sel[second]
    pairs = len(us)
    col_of = np.full(dist.shape[0], -1, dtype=np.int64)
    col_of[list(variables)] = np.arange(len(variables))

    row_ids = np.arange(pairs, dtype=np.int64)
    rows: list[npt.NDArray[np.int64]] = []
    cols: list[npt.NDArray[np.int64]] = []
    vals: list[FloatArray] = []
    for ends, sign in ((us, 1.0), (vs, -1.0)):
        keep = ends != base
        r, c = row_ids[keep], col_of[ends[keep]]
        rows.extend((2 * r, 2 * r + 1))
        cols.extend((c, c))
        vals.extend((np.full(r.size, sign), np.full(r.size, -sign)))
    A_ub = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * pairs, len(variables)),
    )
    b_ub = np.repeat(dist[us, vs], 2).astype(np.float64)
    return LipBall(A_ub=A_ub, b_ub=b_ub, variables=variables)


def maximize(
    c: FloatArray,
    A_ub: Optional[sparse.spmatrix] = None,
    b_ub: Optional[FloatArray] = None,
    A_eq: Optional[sparse.spmatrix] = None,
    b_eq: Optional[FloatArray] = None,
    bounds: Optional[Sequence[tuple[Optional[float], Optional[float]]]] = None,
) -> tuple[float, FloatArray]:
    """Maximise c·x and return (optimum, optimal vertex); failures are raised, never approximated."""
    return _solve(-np.asarray(c, dtype=np.float64), A_ub, b_ub, A_eq, b_eq, bounds, sign=-1.0)


def minimize(
    c: FloatArray,
    A_ub: Optional[sparse.spmatrix] = None,
    b_ub: Optional[FloatArray] = None,
    A_eq: Optional[sparse.spmatrix] = None,
    b_eq: Optional[FloatArray] = None,
    bounds: Optional[Sequence[tuple[Optional[float], Optional[float]]]] = None,
) -> tuple[float, FloatArray]:
    return _solve(np.asarray(c, dtype=np.float64), A_ub, b_ub, A_eq, b_eq, bounds, sign=1.0)


def _solve(
    c: FloatArray,
    A_ub: Optional[sparse.spmatrix],
    b_ub: Optional[FloatArray],
    A_eq: Optional[sparse.spmatrix],
    b_eq: Optional[FloatArray],
    bounds: Optional[Sequence[tuple[Optional[float], Optional[float]]]],
    sign: float,
) -> tuple[float, FloatArray]:
    if c.size == 0:
        return 0.0, np.zeros(0)
    result = optimize.linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds if bounds is not None else (None, None),
        method=LP_METHOD,
        options=LP_OPTIONS,
    )
    if result.status == 2:
        raise InfeasibleProblemException(
            "linear program is infeasible",
            details=ErrorDetails(code="infeasible", message=str(result.message), context={"status": 2}),
        )
    if result.status != 0:
        raise SolverException(
            f"linear program failed: {result.message}",
            details=ErrorDetails(code="solver_failure", message=str(result.message), context={"status": result.status}),
        )
    return sign * float(result.fun), np.asarray(result.x, dtype=np.float64)


def vertex_enumeration_max(c: FloatArray, A_ub: FloatArray, b_ub: FloatArray, tolerance: float = 1e-9) -> float:
    """
    Maximise c·x over the bounded polytope {A_ub x <= b_ub} by visiting every vertex.

    Each vertex is the solution of a nonsingular subsystem of active constraints; only tiny problems qualify.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A_ub, dtype=np.float64)
    b = np.asarray(b_ub, dtype=np.float64)
    k = c.size
    if k == 0:
        return 0.0
    if k > VERTEX_ENUMERATION_MAX_VARIABLES:
        raise ValueError(f"vertex enumeration supports at most {VERTEX_ENUMERATION_MAX_VARIABLES} variables")

    best = -np.inf
    for active in itertools.combinations(range(A.shape[0]), k):
        sub = A[list(active)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, b[list(active)])
        if np.all(A @ x <= b + tolerance):
            best = max(best, float(c @ x))
    if not np.isfinite(best):
        raise SolverException("polytope has no vertex", details=ErrorDetails(code="no_vertex", message="empty"))
    return best
