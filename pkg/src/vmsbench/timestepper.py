"""Semi-implicit BDF2 time loop with extrapolated convection.

The convection field is extrapolated as uhat = 2 u^n - u^{n-1}; the start uses
u^{-1} = u^0, which reduces the first step to semi-implicit Euler with an
effective step of (2/3) dt.  Only the residual-based method consumes pressure
history, so only it pays for a steady Stokes solve at t=0.
"""

import numpy as np

from . import assembly, diagnostics, fespace, linsolve, stab


class TimestepperError(Exception):
    pass


class FlowState:
    """Velocity/pressure history at levels n-1, n (and the last computed
    n+1), plus the extrapolated convection field."""

    def __init__(self, u_n, p_n):
        self.u_nm1 = u_n.copy()
        self.u_n = u_n
        self.u_np1 = None
        self.p_nm1 = p_n.copy()
        self.p_n = p_n
        self.p_np1 = None
        self.t_n = 0.0
        self.step = 0

    @property
    def uhat(self):
        return 2.0 * self.u_n - self.u_nm1

    def shift(self, u_new, p_new, dt):
        self.u_nm1 = self.u_n
        self.u_n = u_new
        self.u_np1 = u_new
        self.p_nm1 = self.p_n
        self.p_n = p_new
        self.p_np1 = p_new
        self.t_n += dt
        self.step += 1


def discrete_time_derivative(u_np1, u_n, u_nm1, dt):
    """(3 u^{n+1} - 4 u^n + u^{n-1}) / (2 dt)."""
    if dt <= 0:
        raise TimestepperError("dt must be positive")
    return (3.0 * u_np1 - 4.0 * u_n + u_nm1) / (2.0 * dt)


class Stepper:
    """Owns the spaces, assembler and solver of one simulation."""

    def __init__(self, method, mesh, dt, nu, solver=None, forcing=None,
                 tau_dt=None, first_step="paper"):
        if dt <= 0:
            raise TimestepperError("dt must be positive")
        if first_step not in ("paper", "bdf1"):
            raise TimestepperError(f"unknown first_step mode {first_step!r}")
        self.method = method
        self.mesh = mesh
        self.dt = dt
        self.nu = nu
        # 'paper': plain BDF2 formula with u^{-1} = u^0, i.e. an implicit
        # Euler step of effective length (2/3) dt labeled t = dt;
        # 'bdf1': full-dt backward Euler start (verification aid, keeps the
        # global error second order)
        self.first_step = first_step
        # tau_dt freezes the dt fed into the stabilization coefficients
        # (verification aid: the tau formulas carry an O(dt) dependence that
        # otherwise masks the integrator's order)
        self.tau_dt = tau_dt if tau_dt is not None else dt
        fam_u, fam_p = method.families()
        self.space_u = fespace.build_space(mesh, fam_u, components=2)
        self.space_p = fespace.build_space(mesh, fam_p, components=1)
        self.asm = assembly.Assembler(self.space_u, self.space_p)
        self.solver = solver or linsolve.SolverConfig()
        self.forcing = forcing
        self._tau_fixed = stab.compute_tau_lps_onelevel(mesh) \
            if method.kind == "lps1" else None

    def tau(self, uhat):
        if self._tau_fixed is not None:
            return self._tau_fixed
        return stab.compute_tau(self.mesh, self.tau_dt, self.nu, self.space_u,
                                uhat)

    def initialize(self, u0_func):
        """Interpolate the initial velocity and set up the pressure history.

        For the residual-based method the starting pressure solves the steady
        Stokes problem driven by the convective term of u^0; other methods
        never read pressure history and start from zero.
        """
        u0 = fespace.interpolate_function(self.space_u, u0_func)
        for d, _ in self.space_u.constrained_dofs:
            u0[d] = 0.0
        if self.method.kind == "rbvms":
            tau = self.tau(u0)
            sys = self.asm.assemble_stokes_init(self.method, u0, self.nu, tau)
            try:
                x = linsolve.solve(sys, self.solver)
            except linsolve.SolverError as exc:
                raise TimestepperError(f"pressure initialization failed: {exc}") from exc
            p0 = x[self.asm.n_u:self.asm.n_u + self.asm.n_p]
        else:
            p0 = np.zeros(self.space_p.ndof_scalar)
        return FlowState(u0, p0)

    def advance_step(self, state):
        """One BDF2 step: extrapolate, assemble, solve, shift history."""
        dt, nu = self.dt, self.nu
        uhat = state.uhat
        if state.step == 0 and self.first_step == "bdf1":
            alpha = 1.0 / dt
            beta = state.u_n / dt
        else:
            alpha = 1.5 / dt
            beta = (4.0 * state.u_n - state.u_nm1) / (2.0 * dt)
        tau = self.tau(uhat)
        f_qp = None
        if self.forcing is not None:
            f_qp = self.asm.forcing_at_quadrature(self.forcing, state.t_n + dt)
        phat = None
        if self.method.kind == "rbvms":
            scale = 2.0 if self.method.phat_doubled else 1.0
            phat = 2.0 * state.p_n - scale * state.p_nm1
        sys = self.asm.assemble_system(
            self.method, uhat, beta, tau, dt, nu, f_qp=f_qp,
            phat=phat, u_n=state.u_n, u_nm1=state.u_nm1, alpha=alpha)
        try:
            x = linsolve.solve(sys, self.solver)
        except linsolve.SolverError as exc:
            raise TimestepperError(
                f"solve failed at step {state.step} (t={state.t_n:g}): {exc}") from exc
        u_new = x[:self.asm.n_u]
        p_new = x[self.asm.n_u:self.asm.n_u + self.asm.n_p]
        state.shift(u_new, p_new, dt)
        return state


def run(config, initial_velocity, qoi_sink=None, snapshot_sink=None):
    """Drive round(T/dt) BDF2 steps, emitting one QoiRecord per step.

    ``config`` provides method_kind(), mesh(), dt, T, nu, u_inf, delta0,
    snapshot instants (in units of delta0/u_inf) and a solver config.
    Snapshots fire at the step closest to each requested instant.
    """
    method = config.method_kind()
    mesh = config.mesh()
    stepper = Stepper(method, mesh, config.dt, config.nu,
                      solver=config.solver_config())
    state = stepper.initialize(initial_velocity)
    sampler = diagnostics.LineSampler(stepper.space_u)
    nsteps = int(round(config.T / config.dt))
    t_unit = config.delta0 / config.u_inf
    snap_steps = {}
    for tbar in config.snapshots:
        k = int(round(tbar * t_unit / config.dt))
        if 1 <= k <= nsteps:
            snap_steps[k] = tbar
    records = []
    for _ in range(nsteps):
        stepper.advance_step(state)
        rec = diagnostics.qoi_record(stepper.space_u, state.u_n, state.t_n,
                                     config.u_inf, config.delta0, sampler)
        records.append(rec)
        if qoi_sink is not None:
            qoi_sink(rec)
        if snapshot_sink is not None and state.step in snap_steps:
            snapshot_sink(snap_steps[state.step], stepper.space_u, state.u_n)
    return records
