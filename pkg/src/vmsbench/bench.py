"""Benchmark harness: configuration, mixing-layer setup, Taylor-Green
verification, CSV/VTK output and the command-line entry point.

Configs are flat ``key=value`` text (file and/or command line), e.g.::

    vmsbench method=rbvms fe=iss level=6 dt=1.25e-2

Outputs land in ``<outdir>/qoi.csv``, ``<outdir>/snap_<tbar>.vtk`` and
``<outdir>/config.echo``.  ``--sweep cfg1 cfg2 ...`` runs independent configs
concurrently (worker count capped by the VMSBENCH_THREADS variable).
"""

import argparse
import concurrent.futures
import csv
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import diagnostics, fespace, linsolve, mesh as meshmod, timestepper
from .assembly import MethodKind, method_families

DEFAULT_SNAPSHOTS = (10.0, 20.0, 30.0, 40.0, 100.0, 155.0, 165.0, 180.0, 200.0)

CSV_HEADER = ("t", "t_bar", "delta_rel", "e_kin", "enstrophy", "palinstrophy")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    method: str = "supg"
    fe: str = "eo"
    level: int = 5
    dt: float = 3.125e-3
    T: float = 7.15
    nu: float = 1.0 / 280000.0
    delta0: float = 1.0 / 28.0
    u_inf: float = 1.0
    c_n: float = 1.0e-3
    snapshots: tuple = DEFAULT_SNAPSHOTS
    outdir: str = "out"
    solver: str = "direct_lu"

    @property
    def reynolds(self):
        return self.u_inf * self.delta0 / self.nu

    @property
    def t_bar(self):
        return self.delta0 / self.u_inf

    def method_kind(self):
        return MethodKind(self.method, self.fe)

    def mesh(self):
        return meshmod.build_uniform(self.level)

    def solver_config(self):
        return linsolve.SolverConfig(kind=self.solver)

    def items(self):
        snaps = ",".join(f"{s:g}" for s in self.snapshots)
        return [("method", self.method), ("fe", self.fe),
                ("level", self.level), ("dt", repr(self.dt)),
                ("T", repr(self.T)), ("nu", repr(self.nu)),
                ("delta0", repr(self.delta0)), ("u_inf", repr(self.u_inf)),
                ("c_n", repr(self.c_n)), ("snapshots", snaps),
                ("outdir", self.outdir), ("solver", self.solver)]


_PARSERS = {
    "method": str, "fe": str, "outdir": str, "solver": str,
    "level": int,
    "dt": float, "T": float, "nu": float, "delta0": float, "u_inf": float,
    "c_n": float,
    "snapshots": lambda s: tuple(float(x) for x in s.split(",") if x),
}


def parse_config(path=None, overrides=()):
    """Build a validated RunConfig from a key=value file and override tokens."""
    pairs = []
    if path is not None:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    pairs.append(line)
    pairs.extend(overrides)
    values = {}
    for tok in pairs:
        if "=" not in tok:
            raise ConfigError(f"expected key=value, got {tok!r}")
        key, _, raw = tok.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = _PARSERS[key](raw.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg):
    try:
        method_families(cfg.method, cfg.fe)
        cfg.method_kind()
    except Exception as exc:
        raise ConfigError(str(exc)) from exc
    if not 0 <= cfg.level <= meshmod.MAX_LEVEL:
        raise ConfigError(f"level {cfg.level} outside [0, {meshmod.MAX_LEVEL}]")
    if cfg.dt <= 0 or cfg.T < 0:
        raise ConfigError("dt must be positive and T nonnegative")
    if cfg.nu < 0:
        raise ConfigError("nu must be nonnegative")
    if cfg.solver not in ("direct_lu", "gmres_ilu"):
        raise ConfigError(f"unknown solver {cfg.solver!r}")


# ---------------------------------------------------------------------------
# Kelvin-Helmholtz setup

def kh_initial_velocity(x, y, delta0=1.0 / 28.0, u_inf=1.0, c_n=1.0e-3):
    """Perturbed mixing-layer profile.

    Base flow (u_inf*tanh((2y-1)/delta0), 0) plus c_n*u_inf*(d_y psi, -d_x psi)
    with the stream function
    psi = exp(-((y-0.5)/delta0)^2) * (cos(8 pi x) + cos(20 pi y)).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    env = np.exp(-(((y - 0.5) / delta0) ** 2))
    denv = -2.0 * (y - 0.5) / delta0 ** 2 * env
    cx = np.cos(8.0 * np.pi * x)
    cy = np.cos(20.0 * np.pi * y)
    psi_y = denv * (cx + cy) + env * (-20.0 * np.pi * np.sin(20.0 * np.pi * y))
    psi_x = env * (-8.0 * np.pi * np.sin(8.0 * np.pi * x))
    u1 = u_inf * np.tanh((2.0 * y - 1.0) / delta0) + c_n * u_inf * psi_y
    u2 = -c_n * u_inf * psi_x
    return u1, u2


# ---------------------------------------------------------------------------
# output

def write_qoi_csv(records, path, delta0=1.0 / 28.0, u_inf=1.0):
    """CSV with one row per record, full double precision (17 digits)."""
    t_unit = delta0 / u_inf
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            row = (r.t, r.t / t_unit, r.delta_rel, r.e_kin, r.enstrophy,
                   r.palinstrophy)
            writer.writerow([f"{v:.17g}" for v in row])
    return path


def read_qoi_csv(path):
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            t, _, d, e, ens, pal = (float(v) for v in row)
            records.append(diagnostics.QoiRecord(t, d, e, ens, pal))
    return records


def write_vtk_snapshot(space_u, u, path):
    """Legacy ASCII VTK unstructured grid with point-data vorticity (P1
    projection) and velocity.  The periodic seam is written un-glued so
    viewers render the full square."""
    mesh = space_u.mesh
    p1 = fespace.build_space(mesh, "P1", components=1)
    vort = diagnostics.vorticity_p1(space_u, u, p1)
    # raw-vertex values through the glued numbering
    gv = p1.cell_dofs  # (nc, 3) glued ids per cell vertex
    vert_gid = np.zeros(mesh.nverts, dtype=np.int64)
    vert_gid[mesh.cells.ravel()] = gv.ravel()
    nds = space_u.ndof_scalar
    u1 = u[:nds][vert_gid]
    u2 = u[nds:2 * nds][vert_gid]
    w = vort[vert_gid]
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write("vmsbench snapshot\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.nverts} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        fh.write(f"CELLS {mesh.ncells} {4 * mesh.ncells}\n")
        for tri in mesh.cells:
            fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")
        fh.write(f"CELL_TYPES {mesh.ncells}\n")
        fh.write("5\n" * mesh.ncells)
        fh.write(f"POINT_DATA {mesh.nverts}\n")
        fh.write("SCALARS vorticity double 1\n")
        fh.write("LOOKUP_TABLE default\n")
        for v in w:
            fh.write(f"{v:.17g}\n")
        fh.write("VECTORS velocity double\n")
        for a, b in zip(u1, u2):
            fh.write(f"{a:.17g} {b:.17g} 0\n")
    return path


def write_config_echo(cfg, path):
    with open(path, "w") as fh:
        for key, val in cfg.items():
            fh.write(f"{key}={val}\n")
    return path


# ---------------------------------------------------------------------------
# drivers

def run_benchmark(cfg):
    """Run the mixing-layer benchmark of one config; returns the output dir."""
    os.makedirs(cfg.outdir, exist_ok=True)
    write_config_echo(cfg, os.path.join(cfg.outdir, "config.echo"))

    def u0(x, y):
        return kh_initial_velocity(x, y, cfg.delta0, cfg.u_inf, cfg.c_n)

    def snapshot_sink(tbar, space_u, u):
        write_vtk_snapshot(space_u, u,
                           os.path.join(cfg.outdir, f"snap_{tbar:g}.vtk"))

    records = timestepper.run(cfg, u0, snapshot_sink=snapshot_sink)
    write_qoi_csv(records, os.path.join(cfg.outdir, "qoi.csv"),
                  cfg.delta0, cfg.u_inf)
    return cfg.outdir


# ---------------------------------------------------------------------------
# Taylor-Green verification

def taylor_green_velocity(x, y, t=0.0, nu=0.01):
    decay = np.exp(-8.0 * np.pi ** 2 * nu * t)
    u1 = np.sin(2.0 * np.pi * x) * np.cos(2.0 * np.pi * y) * decay
    u2 = -np.cos(2.0 * np.pi * x) * np.sin(2.0 * np.pi * y) * decay
    return u1, u2


def taylor_green_pressure(x, y, t=0.0, nu=0.01):
    decay = np.exp(-16.0 * np.pi ** 2 * nu * t)
    return 0.25 * (np.cos(4.0 * np.pi * x) + np.cos(4.0 * np.pi * y)) * decay


def _tg_l2_error(space_u, u, t, nu):
    w = space_u.quad.weights
    mesh = space_u.mesh
    v0 = mesh.cell_verts[:, 0]
    a1 = mesh.cell_verts[:, 1] - v0
    a2 = mesh.cell_verts[:, 2] - v0
    q = space_u.quad.points
    xq = v0[:, None, :] + q[None, :, 0, None] * a1[:, None, :] \
        + q[None, :, 1, None] * a2[:, None, :]
    e1, e2 = taylor_green_velocity(xq[..., 0], xq[..., 1], t, nu)
    vals = fespace.field_values(space_u, u)
    diff2 = (vals[..., 0] - e1) ** 2 + (vals[..., 1] - e2) ** 2
    W = mesh.det[:, None] * w[None, :]
    return float(np.sqrt(np.einsum('cq,cq->', W, diff2)))


def _tg_stepper(method, fe, level, dt, nu, tau_dt=None):
    """Stepper plus state started from the closed-form vortex.  Verification
    runs start with a full-dt backward Euler step: the benchmark's literal
    first-step reduction (effective step (2/3) dt) is first-order and would
    mask the orders being measured."""
    m = MethodKind(method, fe)
    msh = meshmod.build_uniform(level)
    stepper = timestepper.Stepper(m, msh, dt, nu, tau_dt=tau_dt,
                                  first_step="bdf1")
    state = stepper.initialize(lambda x, y: taylor_green_velocity(x, y, 0.0, nu))
    return stepper, state


def _tg_single(method, fe, level, dt, nu, T, tau_dt=None):
    stepper, state = _tg_stepper(method, fe, level, dt, nu, tau_dt)
    err0 = _tg_l2_error(stepper.space_u, state.u_n, 0.0, nu)
    for _ in range(int(round(T / dt))):
        stepper.advance_step(state)
    err = _tg_l2_error(stepper.space_u, state.u_n, state.t_n, nu)
    if err > 10.0 * max(err0, 1e-3):
        raise timestepper.TimestepperError(
            f"verification failure: error {err:.3e} diverged from {err0:.3e}")
    return err


def _field_l2_diff(space_u, u_a, u_b):
    vals = fespace.field_values(space_u, u_a - u_b)
    w = space_u.quad.weights
    W = space_u.mesh.det[:, None] * w[None, :]
    return float(np.sqrt(np.einsum('cq,cq->', W, (vals ** 2).sum(axis=2))))


def run_taylor_green(level=5, dt=1e-3, nu=0.01, T=0.1, method="supg",
                     fe="iss", temporal_dts=(4e-3, 2e-3, 1e-3)):
    """Closed-form vortex verification.

    Reports the final L2 velocity error at (level, dt), spatial orders over
    levels level-2..level against the exact solution, and a Richardson
    temporal order from solution differences under dt halving.  For the
    temporal estimate the stabilization coefficients are frozen at the
    smallest dt of the sweep (their explicit first-order dt dependence is a
    modeling term, not integrator error) so the BDF2 order is observable.
    """
    levels = [level - 2, level - 1, level]
    errs_h = [_tg_single(method, fe, lv, dt, nu, T) for lv in levels]
    orders_h = [float(np.log2(errs_h[i] / errs_h[i + 1])) for i in range(2)]
    tau_dt = temporal_dts[-1]
    sols = []
    space_u = None
    for d in temporal_dts:
        stepper, state = _tg_stepper(method, fe, level, d, nu, tau_dt=tau_dt)
        for _ in range(int(round(T / d))):
            stepper.advance_step(state)
        sols.append(state.u_n)
        space_u = stepper.space_u
    d01 = _field_l2_diff(space_u, sols[0], sols[1])
    d12 = _field_l2_diff(space_u, sols[1], sols[2])
    order_t = float(np.log2(d01 / d12))
    return {
        "error": errs_h[-1],
        "levels": levels, "spatial_errors": errs_h, "spatial_orders": orders_h,
        "dts": list(temporal_dts), "temporal_differences": [d01, d12],
        "temporal_order": order_t,
    }


# ---------------------------------------------------------------------------
# CLI

def _run_config_file(path):
    cfg = parse_config(path)
    return run_benchmark(cfg)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="vmsbench",
        description="Stabilized FE mixing-layer benchmark. Settings are "
                    "key=value tokens; known keys: " + ", ".join(_PARSERS))
    parser.add_argument("overrides", nargs="*", metavar="key=value",
                        help="config overrides, e.g. method=rbvms level=6")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--sweep", nargs="+", metavar="FILE",
                        help="run these config files concurrently and exit")
    args = parser.parse_args(argv)
    if args.sweep:
        workers = int(os.environ.get("VMSBENCH_THREADS", os.cpu_count() or 1))
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            for out in ex.map(_run_config_file, args.sweep):
                print(f"wrote {out}")
        return 0
    try:
        cfg = parse_config(args.config, args.overrides)
    except (ConfigError, OSError) as exc:
        parser.error(str(exc))
    out = run_benchmark(cfg)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
