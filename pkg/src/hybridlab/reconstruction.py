"""Coefficient recovery from the internal measurement F and boundary data.

On the positive-solution branch, F = q u^2 lets the equation be
rewritten as the semilinear Poisson problem  laplacian(u) = -F/u,
which suggests the fixed-point iteration

    u_0   = harmonic extension of g,
    u_k+1 = solve( laplacian(v) = -F / clamp(u_k; tau), v = g on boundary ),

with clamp(s; tau) = sign(s) max(|s|, tau) protecting the division near
nodal sets, followed by the algebraic recovery q = F / max(u^2, tau^2)
projected onto the prior interval [1/K, K].  Where u (hence F)
vanishes, F carries no information about q at all, so clamped and
projected nodes are reported in a mask instead of being repaired: the
recovery is honest about exactly where the data determines the
coefficient.  The iteration map contracts like q/lambda_1 in the
well-posed regime; non-convergence is flagged on the result, never
hidden.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolation
from .fields import (
    PriorBounds,
    ScalarField,
    boundary_values,
    interior_mask,
    norms,
    Norms,
)
from .forward import DiscreteOperator

__all__ = [
    "ReconstructionResult",
    "reconstruct_u",
    "recover_q",
    "reconstruction_error",
    "reconstruct",
    "save_result_manifest",
]


@dataclass(frozen=True)
class ReconstructionResult:
    """Fixed-point output: recovered solution, optional coefficient, and
    the convergence/degeneracy record of the run."""

    u_hat: ScalarField
    q_hat: ScalarField | None
    iterations: int
    final_update_linf: float
    floor_hits: int
    converged: bool
    tol: float
    sign_change: bool = False
    clamp_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.converged and self.final_update_linf > self.tol:
            raise ContractViolation(
                "converged result violates its own update tolerance"
            )
        if self.iterations < 0 or self.floor_hits < 0:
            raise ContractViolation("counts must be nonnegative")


def _clamp(values: np.ndarray, tau: float) -> np.ndarray:
    """sign(s) * max(|s|, tau), with s = 0 sent to +tau."""
    return np.where(values >= 0.0,
                    np.maximum(values, tau),
                    np.minimum(values, -tau))


def _auto_tau(scale: float) -> float:
    return 1e-6 * max(scale, 1.0)


def reconstruct_u(f: ScalarField, g, *, tol: float = 1e-8,
                  max_iter: int = 200, tau: float = 0.0,
                  solver_tol: float = 1e-9) -> ReconstructionResult:
    """Recover u from (F, g) by the clamped fixed-point iteration.

    Stops when the sup-norm update drops below tol or after max_iter
    solves; the result's converged flag distinguishes the two.  A sign
    change of the iterate inside {F > 0} marks departure from the
    positive-solution regime and is flagged, not fatal.
    """
    grid = f.grid
    fvals = f.values.copy()
    neg = fvals < -max(tol, 1e-12)
    if neg.any():
        raise ContractViolation(
            f"measurement has {int(neg.sum())} nodes below -tol; "
            "F = q u^2 must be nonnegative"
        )
    fvals = np.maximum(fvals, 0.0)
    gvec = boundary_values(grid, g)
    g_linf = float(np.max(np.abs(gvec)))
    if g_linf == 0.0 and fvals.max() > 0.0:
        raise ContractViolation(
            "boundary data identically zero with nontrivial F: the "
            "positive-solution ansatz cannot hold"
        )
    if tau <= 0.0:
        tau = _auto_tau(g_linf)
    if max_iter < 1:
        raise ContractViolation(f"max_iter must be >= 1, got {max_iter}")

    op = DiscreteOperator(ScalarField.constant(grid, 0.0))
    rep = op.solve(gvec, solver_tol)
    u = rep.u.values
    positive = fvals > 0.0
    x_prev = u[op.interior]
    sign_change = False
    floor_hits = 0
    update = float("inf")
    iterations = 0
    for _ in range(max_iter):
        clamped = _clamp(u, tau)
        floor_hits = int(np.count_nonzero(np.abs(u) < tau))
        source = ScalarField(grid, -fvals / clamped)
        rep = op.solve(gvec, solver_tol, source=source, x0=x_prev)
        u_next = rep.u.values
        iterations += 1
        if np.any(positive & (u * u_next < 0.0)):
            sign_change = True
        update = float(np.max(np.abs(u_next - u)))
        u = u_next
        x_prev = u[op.interior]
        if update < tol:
            break
    return ReconstructionResult(
        u_hat=ScalarField(grid, u),
        q_hat=None,
        iterations=iterations,
        final_update_linf=update,
        floor_hits=floor_hits,
        converged=update < tol,
        tol=tol,
        sign_change=sign_change,
    )


def recover_q(f: ScalarField, u_hat: ScalarField, bounds: PriorBounds,
              tau: float = 0.0):
    """Algebraic recovery q = F / max(u^2, tau^2), projected onto
    [1/K, K]; returns (q_hat, mask) with the mask marking every node
    where the clamp or the projection fired."""
    if f.grid != u_hat.grid:
        raise ContractViolation("F and u_hat live on different grids")
    if tau <= 0.0:
        tau = _auto_tau(float(np.max(np.abs(u_hat.values))))
    clamped = np.maximum(u_hat.values**2, tau**2)
    raw = f.values / clamped
    lo, hi = 1.0 / bounds.k_bound, bounds.k_bound
    projected = np.clip(raw, lo, hi)
    mask = (u_hat.values**2 < tau**2) | (projected != raw)
    return ScalarField(f.grid, projected), mask


def reconstruction_error(q_hat: ScalarField, q_true: ScalarField,
                         d: float) -> Norms:
    """Norms of q_hat - q_true over the interior margin d; an empty
    interior comes back flagged, not as an error."""
    if q_hat.grid != q_true.grid:
        raise ContractViolation("coefficient fields live on different grids")
    diff = ScalarField(q_hat.grid, q_hat.values - q_true.values)
    return norms(diff, interior_mask(q_hat.grid, d))


def reconstruct(f: ScalarField, g, bounds: PriorBounds, *,
                tol: float = 1e-8, max_iter: int = 200, tau: float = 0.0,
                solver_tol: float = 1e-9) -> ReconstructionResult:
    """Full pipeline: reconstruct u, then recover and attach q_hat."""
    res = reconstruct_u(f, g, tol=tol, max_iter=max_iter, tau=tau,
                        solver_tol=solver_tol)
    q_hat, mask = recover_q(f, res.u_hat, bounds, tau)
    return ReconstructionResult(
        u_hat=res.u_hat,
        q_hat=q_hat,
        iterations=res.iterations,
        final_update_linf=res.final_update_linf,
        floor_hits=res.floor_hits,
        converged=res.converged,
        tol=res.tol,
        sign_change=res.sign_change,
        clamp_mask=mask,
    )


def save_result_manifest(result: ReconstructionResult, path) -> Path:
    """Write the run record {iterations, final_update_linf, floor_hits,
    converged} as JSON."""
    path = Path(path)
    payload = {
        "iterations": result.iterations,
        "final_update_linf": result.final_update_linf,
        "floor_hits": result.floor_hits,
        "converged": result.converged,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
