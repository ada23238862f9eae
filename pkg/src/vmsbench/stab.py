"""Per-cell stabilization coefficients for the current time step.

Two recipes: the transient Fourier-analysis design used by the residual-based
and pressure-stabilized methods,

    tau_m(K) = (4/dt^2 + 32 nu^2/(h_K/2)^4 + 4 U_K/(h_K/2)^2)^(-1/2)
    tau_c(K) = (h_K/2)^2 / (8 tau_m(K)),   U_K = ||uhat||_{L2(K)}^2 / |K|,

with constants gamma=2, d=2, c1=4, c2=2, k=2 folded in, and the mesh-size
recipe tau_m = tau_c = C0*h_K (C0 = 0.1) used by the one-level projection
method.
"""

from dataclasses import dataclass

import numpy as np

from . import fespace

GAMMA = 2
DIM = 2
C1 = 4.0
C2 = 2.0
DEGREE_K = 2
C0_ONELEVEL = 0.1


class ConfigurationError(Exception):
    pass


@dataclass
class StabCoeffs:
    tau_m: np.ndarray
    tau_c: np.ndarray

    def zeros_like(self):
        return StabCoeffs(np.zeros_like(self.tau_m), np.zeros_like(self.tau_c))


def compute_tau(mesh, dt, nu, uhat_space=None, uhat=None):
    """Transient stabilization coefficients from the extrapolated velocity.

    With ``uhat`` omitted the local speed is zero.  ``dt`` must be positive;
    ``nu`` nonnegative.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if nu < 0:
        raise ConfigurationError(f"nu must be nonnegative, got {nu}")
    h_half = mesh.diameters / DEGREE_K
    if uhat is None:
        u_k = np.zeros(mesh.ncells)
    else:
        vals = fespace.field_values(uhat_space, uhat)      # (nc, nq, 2)
        w = uhat_space.quad.weights
        # integral of |uhat|^2 over K divided by |K| = det/2
        u_k = 2.0 * np.einsum('q,cq->c', w, (vals ** 2).sum(axis=2))
    inv2 = (GAMMA / dt) ** 2 \
        + DIM * C1 ** 2 * nu ** 2 / h_half ** 4 \
        + C2 ** 2 * u_k / h_half ** 2
    tau_m = inv2 ** -0.5
    tau_c = h_half ** 2 / (DIM * C1 * tau_m)
    return StabCoeffs(tau_m, tau_c)


def compute_tau_lps_onelevel(mesh):
    """Time-independent coefficients tau_m = tau_c = 0.1*h_K."""
    tau = C0_ONELEVEL * mesh.diameters
    return StabCoeffs(tau.copy(), tau.copy())
