"""Reproducible experiments, each returning thresholded metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from . import elements as el
from . import mesh as msh
from . import operators as op
from .errors import InvalidParameterError

DAY = 86400.0
EARTH_RADIUS = 6.37122e6
GRAVITY = 9.8

# relative tolerance shared by all conservation metrics
CONSERVATION_TOL = 1e-10
MASS_RESIDUAL_TOL = 1e-11


@dataclass
class ScenarioResult:
    """Named metrics with their pass thresholds.

    ``thresholds`` maps a metric to ``("<", value)`` or
    ``("within", (target, tolerance))``.
    """

    name: str
    metrics: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)  # (t, State)
    series: list = field(default_factory=list)  # rows of (t, energy, mass, max|eta|)
    ops: object = field(default=None, repr=False)
    params: dict = field(default_factory=dict)

    def check(self, metric) -> bool:
        kind, ref = self.thresholds[metric]
        v = self.metrics[metric]
        if not np.isfinite(v):
            return False
        if kind == "<":
            return v < ref
        if kind == "within":
            target, tol = ref
            return abs(v - target) <= tol
        raise InvalidParameterError(f"unknown threshold kind {kind!r}")

    def failures(self) -> list:
        return [k for k in self.thresholds if not self.check(k)]

    @property
    def passed(self) -> bool:
        return all(np.isfinite(v) for v in self.metrics.values()) and not self.failures()


def _conservation(res: ScenarioResult, traj: dyn.Trajectory):
    res.metrics["energy_drift"] = traj.energy_drift
    res.metrics["mass_drift"] = traj.mass_drift
    res.metrics["mass_residual"] = traj.max_mass_residual
    res.thresholds["energy_drift"] = ("<", CONSERVATION_TOL)
    res.thresholds["mass_drift"] = ("<", CONSERVATION_TOL)
    res.thresholds["mass_residual"] = ("<", MASS_RESIDUAL_TOL)
    res.series = traj.rows()


def _rel_change(x, x0):
    n0 = np.linalg.norm(x0)
    d = np.linalg.norm(x - x0)
    return 0.0 if n0 == 0 and d == 0 else float(d / n0) if n0 > 0 else float(d)


# --------------------------------------------------------------------------
# f-plane / f-sphere steady states


def fplane_mesh(choice: str, resolution=None, seed: int = 0) -> msh.Mesh:
    if choice == "plane":
        return msh.build_square(resolution or 8, 1.0, 1.0, jitter=0.2, seed=seed)
    if choice in ("sphere", "f-sphere"):
        return msh.build_icosahedral_sphere(2 if resolution is None else resolution, 1.0)
    if choice == "periodic":
        return msh.build_periodic_square(resolution or 8, 1.0, 1.0)
    raise InvalidParameterError(f"unknown mesh choice {choice!r}")


def run_fplane_steady(
    mesh_choice: str = "plane",
    seed: int = 0,
    nsteps: int = 100,
    dt: float = 0.1,
    mesh: msh.Mesh | None = None,
    zero: bool = False,
    solver: str = "monolithic",
) -> ScenarioResult:
    """Random balanced states with c^2 = f = 1 must not move."""
    mesh = mesh if mesh is not None else fplane_mesh(mesh_choice)
    cfg = dyn.ModelConfig(c2=1.0, f_coeffs=1.0, dt=dt, solver=solver)
    ops = op.assemble(mesh, cfg)
    rng = np.random.default_rng(seed)
    psi = np.zeros(ops.dim_E) if zero else rng.standard_normal(ops.dim_E)
    psi[ops.dm_E.boundary_dofs] = 0.0
    s0 = dyn.geostrophic_init(psi, ops, cfg)
    x0 = s0.vector()
    worst = [0.0]

    def watch(s):
        worst[0] = max(worst[0], _rel_change(s.vector(), x0))

    s1, traj = dyn.integrate(s0, ops, cfg, nsteps, callback=watch)
    res = ScenarioResult("fplane-steady", ops=ops, params={"mesh": mesh_choice, "seed": seed, "nsteps": nsteps})
    res.snapshots = [(0.0, s0), (s1.t, s1)]
    res.metrics["steadiness_error"] = worst[0]
    res.thresholds["steadiness_error"] = ("<", 1e-12)
    _conservation(res, traj)
    return res


# --------------------------------------------------------------------------
# Kelvin wave in a circular basin


def kelvin_initial_state(ops: op.OperatorSet, amplitude=0.1, mode=1, c=1.0, f=10.0) -> dyn.State:
    """Boundary-trapped Kelvin profile eta = A exp((r-1)/Rd) cos(m theta).

    The azimuthal velocity u_theta = c eta is in geostrophic balance across
    the coast; the radial velocity is zero.
    """
    rd = c / f
    mesh = ops.mesh

    def eta_fn(p):
        r = np.hypot(p[:, 0], p[:, 1])
        th = np.arctan2(p[:, 1], p[:, 0])
        return amplitude * np.exp((r - 1.0) / rd) * np.cos(mode * th)

    def u_fn(p):
        r = np.maximum(np.hypot(p[:, 0], p[:, 1]), 1e-300)
        ut = c * eta_fn(p)
        return np.column_stack([-ut * p[:, 1] / r, ut * p[:, 0] / r, np.zeros(len(p))])

    u = el.project_pi_s(u_fn, mesh)
    u[ops.dm_S.boundary_dofs] = 0.0
    eta = el.project_pi_v(eta_fn, mesh)
    return dyn.State(u, eta, 0.0)


def run_kelvin(
    ro: float = 0.1,
    fr: float = 1.0,
    t_end: float = 10.0,
    dt: float = 0.01,
    amplitude: float = 0.1,
    mode: int = 1,
    mesh: msh.Mesh | None = None,
    zero: bool = False,
    snapshot_every: float = 2.5,
    solver: str = "monolithic",
) -> ScenarioResult:
    """Coastal Kelvin wave; checks conservation and absence of radiation."""
    mesh = mesh if mesh is not None else msh.build_disk()
    f, c = 1.0 / ro, 1.0 / fr
    cfg = dyn.ModelConfig(c2=c * c, f_coeffs=f, dt=dt, solver=solver)
    ops = op.assemble(mesh, cfg)
    s0 = dyn.zero_state(ops) if zero else kelvin_initial_state(ops, amplitude, mode, c, f)
    nsteps = int(round(t_end / dt))
    centroid_r = np.hypot(*mesh.centroids[:, :2].T)
    interior = centroid_r < 0.5
    cell_mean = lambda s: s.eta[ops.dm_V.cell_dofs].mean(axis=1)
    ref = np.max(np.abs(cell_mean(s0)))
    worst = [0.0]

    def watch(s):
        if interior.any():
            worst[0] = max(worst[0], float(np.max(np.abs(cell_mean(s)[interior]))))

    times = np.arange(snapshot_every, t_end + 0.5 * dt, snapshot_every) if snapshot_every else ()
    _, traj = dyn.integrate(s0, ops, cfg, nsteps, callback=watch, snapshot_times=times)
    res = ScenarioResult("kelvin", ops=ops, params={"ro": ro, "fr": fr, "t_end": t_end, "dt": dt})
    res.metrics["radiation_ratio"] = float(worst[0] / ref) if ref > 0 else 0.0
    res.thresholds["radiation_ratio"] = ("<", 0.1)
    _conservation(res, traj)
    res.snapshots = [(0.0, s0)] + traj.snapshots
    return res


# --------------------------------------------------------------------------
# Rossby waves on a beta-channel


ROSSBY_GAMMA = 2 * np.pi / (1 + 8 * np.pi**2)
ROSSBY_T = (1 + 8 * np.pi**2) / 2  # half a period: the wave travels half the domain
ROSSBY_DT = ROSSBY_T / 5000


def rossby_psi(t: float):
    return lambda p: np.sin(2 * np.pi * p[:, 1]) * np.sin(2 * np.pi * p[:, 0] + ROSSBY_GAMMA * t)


def rossby_run(n: int, ro: float = 1e-3, dt: float = ROSSBY_DT, t_end: float = ROSSBY_T, solver="monolithic"):
    """One channel run; returns (l2 error, linf error, trajectory)."""
    mesh = msh.build_channel(n, n, 1.0, 1.0)
    f_e = el.project_pi_e(lambda p: 1.0 / ro + p[:, 1], mesh)
    cfg = dyn.ModelConfig(c2=1.0 / ro**2, f_coeffs=f_e, dt=dt, solver=solver)
    ops = op.assemble(mesh, cfg)
    psi = el.project_pi_e(rossby_psi(0.0), mesh)
    s0 = dyn.geostrophic_init(psi, ops, cfg)
    nsteps = int(round(t_end / dt))
    s1, traj = dyn.integrate(s0, ops, cfg, nsteps)
    exact = el.project_pi_v(lambda p: ro * rossby_psi(s1.t)(p), mesh)
    d = s1.eta - exact
    l2 = float(np.sqrt(d @ (ops.M_V @ d)))
    linf = float(np.max(np.abs(d)))
    return l2, linf, traj


def convergence_slope(h, err) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def pre_saturation(sizes, errs, min_rate: float = 2.0) -> int:
    """Number of leading sizes before the error stops decreasing at rate >= min_rate."""
    k = 1
    for i in range(1, len(sizes)):
        rate = np.log(errs[i - 1] / errs[i]) / np.log(sizes[i] / sizes[i - 1])
        if rate < min_rate:
            break
        k = i + 1
    return k


def run_rossby_convergence(
    sizes=(8, 16, 32),
    ro: float = 1e-3,
    dt: float = ROSSBY_DT,
    t_end: float = ROSSBY_T,
    solver: str = "monolithic",
) -> ScenarioResult:
    """Error of eta against the projected asymptotic Rossby solution."""
    sizes = sorted(int(s) for s in sizes)
    if len(sizes) < 2:
        raise InvalidParameterError("need at least two mesh sizes")
    res = ScenarioResult("rossby", params={"sizes": sizes, "ro": ro, "dt": dt, "t_end": t_end})
    l2s, linfs, drift_e, drift_m, resid = [], [], 0.0, 0.0, 0.0
    for n in sizes:
        l2, linf, traj = rossby_run(n, ro, dt, t_end, solver)
        l2s.append(l2)
        linfs.append(linf)
        res.metrics[f"l2_error_n{n}"] = l2
        res.metrics[f"linf_error_n{n}"] = linf
        drift_e = max(drift_e, traj.energy_drift)
        drift_m = max(drift_m, traj.mass_drift)
        resid = max(resid, traj.max_mass_residual)
    k = max(pre_saturation(sizes, l2s), 2)
    h = 1.0 / np.asarray(sizes[:k], dtype=float)
    res.metrics["convergence_slope"] = convergence_slope(h, l2s[:k])
    res.metrics["convergence_slope_linf"] = convergence_slope(h, linfs[:k])
    res.metrics["pre_saturation_sizes"] = float(k)
    res.metrics["error_floor"] = float(min(l2s))
    # the asymptotic solution itself is only accurate to O(Ro^2)
    res.metrics["error_floor_over_ro2"] = float(min(l2s) / ro**2)
    res.thresholds["error_floor_over_ro2"] = ("<", 10.0)
    res.thresholds["convergence_slope"] = ("within", (3.0, 0.3))
    res.thresholds["convergence_slope_linf"] = ("within", (3.0, 0.3))
    res.metrics["energy_drift"] = drift_e
    res.metrics["mass_drift"] = drift_m
    res.metrics["mass_residual"] = resid
    res.thresholds["energy_drift"] = ("<", CONSERVATION_TOL)
    res.thresholds["mass_drift"] = ("<", CONSERVATION_TOL)
    res.thresholds["mass_residual"] = ("<", MASS_RESIDUAL_TOL)
    return res


def rossby_plateau_exponent(ros=(0.1, 0.03), n: int = 16, dt: float = ROSSBY_DT, t_end: float = ROSSBY_T) -> float:
    """Exponent p in err ~ Ro^p on a mesh fine enough to be saturated."""
    errs = [rossby_run(n, ro, dt, t_end)[0] for ro in ros]
    return float(np.polyfit(np.log(ros), np.log(errs), 1)[0])


# --------------------------------------------------------------------------
# beta-tube


BETA_TUBE_TIMES = (0.79957, 19.9892, 39.9784, 59.9686, 79.9568)


def run_beta_tube(
    ro: float = 1e-3,
    dt: float = ROSSBY_DT,
    t_end: float = 79.9568,
    n_around: int = 24,
    n_axial: int = 8,
    f_constant: bool = False,
    mesh: msh.Mesh | None = None,
    solver: str = "monolithic",
) -> ScenarioResult:
    """Rossby waves on a cylinder with f = (1 + Ro z)/Ro."""
    mesh = mesh if mesh is not None else msh.build_cylinder(n_around, n_axial, 1.0, 2.0)
    if f_constant:
        f_e = 1.0 / ro
    else:
        f_e = el.project_pi_e(lambda p: (1.0 + ro * p[:, 2]) / ro, mesh)
    cfg = dyn.ModelConfig(c2=1.0 / ro**2, f_coeffs=f_e, dt=dt, solver=solver)
    ops = op.assemble(mesh, cfg)
    psi = el.project_pi_e(lambda p: np.sin(np.pi * (p[:, 2] + 1.0)) * np.sin(np.arctan2(p[:, 1], p[:, 0])), mesh)
    psi[ops.dm_E.boundary_dofs] = 0.0
    s0 = dyn.geostrophic_init(psi, ops, cfg)
    x0 = s0.vector()
    ratio, worst = [0.0], [0.0]

    def watch(s):
        dv = op.divergence(s.u, ops)
        xi = op.vorticity(s.u, ops)
        nd = np.sqrt(dv @ (ops.M_V @ dv))
        nx = np.sqrt(xi @ (ops.M_E @ xi))
        ratio[0] = max(ratio[0], nd / nx if nx > 0 else 0.0)
        worst[0] = max(worst[0], _rel_change(s.vector(), x0))

    nsteps = int(round(t_end / dt))
    _, traj = dyn.integrate(s0, ops, cfg, nsteps, callback=watch, snapshot_times=[t for t in BETA_TUBE_TIMES if t <= t_end + dt])
    res = ScenarioResult("beta-tube", ops=ops, params={"ro": ro, "dt": dt, "t_end": t_end, "f_constant": f_constant})
    res.metrics["imbalance_ratio"] = float(ratio[0])
    res.thresholds["imbalance_ratio"] = ("<", 10 * ro)
    if f_constant:
        # round-off in the balance grows like eps * f * t
        res.metrics["steadiness_error"] = worst[0]
        res.thresholds["steadiness_error"] = ("<", 1e-12 * max(1.0, t_end / ro))
    _conservation(res, traj)
    res.snapshots = [(0.0, s0)] + traj.snapshots
    return res


# --------------------------------------------------------------------------
# solid rotation on the sphere


def solid_rotation_state(ops: op.OperatorSet, radius, u0, omega, c2, zero=False) -> dyn.State:
    """psi = -u0 z / R, f = 2 Omega z / R, eta = Pi^V(f psi / (2 c^2)).

    Points of the flat cells are mapped radially at constant z, so both
    fields are linear in z and exact in E.
    """
    mesh = ops.mesh
    if zero:
        return dyn.zero_state(ops)
    psi = el.project_pi_e(lambda p: -u0 * p[:, 2] / radius, mesh)
    u = op.curl(psi, ops)
    eta = el.project_pi_v(lambda p: (2 * omega * p[:, 2] / radius) * (-u0 * p[:, 2] / radius) / (2 * c2), mesh)
    return dyn.State(u, eta, 0.0)


def run_solid_rotation(
    level: int = 3,
    depth: float = 1e4,
    days: float = 10.0,
    dt: float = 3600.0,
    radius: float = EARTH_RADIUS,
    zero: bool = False,
    solver: str = "monolithic",
) -> ScenarioResult:
    """Steady zonal flow on the sphere; measures normalized eta drift."""
    mesh = msh.build_icosahedral_sphere(level, radius)
    omega = 1.0 / DAY
    u0 = 2 * np.pi * radius / (12 * DAY)
    c2 = GRAVITY * depth
    f_e = el.project_pi_e(lambda p: 2 * omega * p[:, 2] / radius, mesh)
    cfg = dyn.ModelConfig(c2=c2, f_coeffs=f_e, dt=dt, solver=solver)
    ops = op.assemble(mesh, cfg)
    s0 = solid_rotation_state(ops, radius, u0, omega, c2, zero)
    nsteps = int(round(days * DAY / dt))
    s1, traj = dyn.integrate(s0, ops, cfg, nsteps)
    ref = np.max(np.abs(s0.eta))
    dev = np.max(np.abs(s1.eta - s0.eta))
    res = ScenarioResult("solid-rotation", ops=ops, params={"level": level, "depth": depth, "days": days, "dt": dt})
    res.metrics["steadiness_error"] = float(dev / ref) if ref > 0 else float(dev)
    res.metrics["velocity_change"] = _rel_change(s1.u, s0.u)
    res.thresholds["steadiness_error"] = ("<", 1e-11)
    _conservation(res, traj)
    res.snapshots = [(0.0, s0), (s1.t, s1)]
    return res


SCENARIOS = {
    "fplane-steady": run_fplane_steady,
    "kelvin": run_kelvin,
    "rossby": run_rossby_convergence,
    "beta-tube": run_beta_tube,
    "solid-rotation": run_solid_rotation,
}
