"""Sparse solvers for the nonsymmetric saddle-point step systems."""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla


class SolverError(Exception):
    pass


@dataclass
class SolverConfig:
    kind: str = "direct_lu"          # or "gmres_ilu"
    rtol: float = 1e-10
    maxiter: int = 2000
    restart: int = 100
    verify: bool = False

    def __post_init__(self):
        if self.kind not in ("direct_lu", "gmres_ilu"):
            raise SolverError(f"unknown solver kind {self.kind!r}")
        if self.rtol <= 0:
            raise SolverError("tolerance must be positive")


def _as_parts(system):
    if sparse.issparse(system):
        raise SolverError("pass a SparseSystem (matrix + rhs), not a bare matrix")
    return system.matrix.tocsc(), system.rhs


def _direct_lu(a, b, symmetric_pattern):
    """Sparse LU with a minimum-degree ordering on A+A^T when the pattern
    allows it (much less fill on these saddle systems than COLAMD), falling
    back to COLAMD if the low-pivot-threshold factorization degrades."""
    if symmetric_pattern:
        try:
            lu = spla.splu(a, permc_spec="MMD_AT_PLUS_A",
                           options=dict(SymmetricMode=True,
                                        DiagPivotThresh=0.01))
            x = lu.solve(b)
            scale = np.linalg.norm(b)
            if np.linalg.norm(a @ x - b) <= 1e-9 * max(scale, 1.0):
                return x
        except RuntimeError:
            pass
    try:
        return spla.splu(a).solve(b)
    except RuntimeError as exc:
        raise SolverError(f"sparse LU factorization failed: {exc}") from exc


def solve(system, config=None):
    """Solve system.matrix x = system.rhs.

    Direct sparse LU by default; restarted GMRES with an incomplete LU
    preconditioner when configured.  Raises SolverError on breakdown or
    non-convergence, with the iteration count and final residual.
    """
    config = config or SolverConfig()
    a, b = _as_parts(system)
    if config.kind == "direct_lu":
        x = _direct_lu(a, b, getattr(system, "symmetric_ordering_ok", True))
    else:
        try:
            ilu = spla.spilu(a, drop_tol=0.0, fill_factor=1.0)
        except RuntimeError as exc:
            raise SolverError(f"incomplete factorization failed: {exc}") from exc
        prec = spla.LinearOperator(a.shape, ilu.solve)
        try:
            x, info = spla.gmres(a, b, rtol=config.rtol, restart=config.restart,
                                 maxiter=config.maxiter, M=prec)
        except TypeError:   # scipy < 1.12 spells the tolerance 'tol'
            x, info = spla.gmres(a, b, tol=config.rtol, restart=config.restart,
                                 maxiter=config.maxiter, M=prec)
        if info != 0:
            res = np.linalg.norm(a @ x - b)
            raise SolverError(
                f"gmres did not converge (info={info}) after "
                f"{config.maxiter} iterations, residual {res:.3e}")
    if config.verify:
        res = np.linalg.norm(a @ x - b)
        ref = np.linalg.norm(b)
        if res > max(config.rtol, 1e-9) * max(ref, 1.0):
            raise SolverError(f"residual check failed: |Ax-b| = {res:.3e}, "
                              f"|b| = {ref:.3e}")
    return x
