"""Stationary distribution of the energy-state chain, with a validity certificate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import SolverError

RESIDUAL_TOL = 1e-9
NEGATIVE_TOL = 1e-12
SUM_TOL = 1e-12


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray
    residual: float
    method: str  # "direct" or "power-iteration"


@dataclass(frozen=True)
class Certificate:
    residual: float
    min_entry: float
    sum_error: float
    passed: bool

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (f"{status}: residual={self.residual:.3e} min={self.min_entry:.3e} "
                f"|sum-1|={self.sum_error:.3e}")


def _matrix(model_or_matrix) -> np.ndarray:
    return np.asarray(getattr(model_or_matrix, "matrix", model_or_matrix), dtype=float)


def residual(A: np.ndarray, pi: np.ndarray) -> float:
    return float(np.max(np.abs(A.T @ pi - pi)))


def validate_stationary(model, pi) -> Certificate:
    A = _matrix(model)
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (A.shape[0],):
        raise ValueError(f"pi has shape {pi.shape}, expected ({A.shape[0]},)")
    res = residual(A, pi)
    lo = float(pi.min())
    serr = abs(float(pi.sum()) - 1.0)
    ok = res <= RESIDUAL_TOL and lo >= -NEGATIVE_TOL and serr <= SUM_TOL
    return Certificate(res, lo, serr, ok)


def recurrent_classes(A: np.ndarray) -> list[np.ndarray]:
    """Closed communicating classes of the chain with transition matrix ``A``."""
    adj = A > 0
    ncomp, labels = connected_components(adj, directed=True, connection="strong")
    closed = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        outside = np.ones(A.shape[0], dtype=bool)
        outside[members] = False
        if not adj[np.ix_(members, outside)].any():
            closed.append(members)
    return closed


def _power_iteration(A, tol=1e-14, max_iter=10**6):
    N = A.shape[0]
    pi = np.full(N, 1.0 / N)
    At = A.T
    for _ in range(max_iter):
        nxt = At @ pi
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt, True
        pi = nxt
    return pi, False


def _clean(pi):
    pi = np.where(pi < 0, 0.0, pi)
    return pi / pi.sum()


def solve_stationary(model) -> StationaryDistribution:
    """Solve (A^T - I + 1 1^T) pi = 1, falling back to power iteration.

    A chain with more than one closed class has no unique stationary
    distribution and raises :class:`SolverError`. Transient states are
    allowed; they receive zero mass.
    """
    A = _matrix(model)
    N = A.shape[0]
    closed = recurrent_classes(A)
    if len(closed) > 1:
        raise SolverError(
            f"chain has {len(closed)} closed classes; the stationary distribution is not unique "
            f"(first states of each: {[f's{int(c[0]) + 1}' for c in closed]})"
        )
    diagnostics = []
    try:
        M = A.T - np.eye(N) + np.ones((N, N))
        pi = np.linalg.solve(M, np.ones(N))
        if pi.min() >= -NEGATIVE_TOL:
            pi = _clean(pi)
            res = residual(A, pi)
            if res <= RESIDUAL_TOL:
                return StationaryDistribution(pi, res, "direct")
            diagnostics.append(f"direct solve residual {res:.3e}")
        else:
            diagnostics.append(f"direct solve produced entry {pi.min():.3e}")
    except np.linalg.LinAlgError as exc:
        diagnostics.append(f"direct solve failed: {exc}")
    pi, converged = _power_iteration(A)
    pi = _clean(pi)
    res = residual(A, pi)
    if converged and res <= RESIDUAL_TOL:
        return StationaryDistribution(pi, res, "power-iteration")
    diagnostics.append(f"power iteration {'converged' if converged else 'did not converge'}, residual {res:.3e}")
    raise SolverError("; ".join(diagnostics))
