"""Property suites shared by the command line and the test-suite.

Each suite returns a :class:`ScenarioResult` so callers can report metrics
and thresholds uniformly.
"""

from __future__ import annotations

import numpy as np

from . import dynamics as dyn
from . import elements as el
from . import operators as op
from .errors import InvalidParameterError
from .mesh import GeometryKind, Mesh
from .scenarios import MASS_RESIDUAL_TOL, ScenarioResult

COMMUTING_TOL = 1e-10
STEADY_TOL = 1e-12
ENERGY_STEP_TOL = 1e-11


class FourierField:
    """Random trigonometric fields on an lx x ly box.

    Wavenumbers are multiples of 2 pi / L, so fields are periodic whenever
    the mesh is.
    """

    def __init__(self, rng, lx=1.0, ly=1.0, modes=4, kmax=2):
        self.kx = 2 * np.pi / lx * rng.integers(-kmax, kmax + 1, size=(2, modes))
        self.ky = 2 * np.pi / ly * rng.integers(-kmax, kmax + 1, size=(2, modes))
        self.amp = rng.standard_normal((2, modes))
        self.phase = rng.uniform(0, 2 * np.pi, size=(2, modes))

    def _arg(self, comp, x):
        return x[:, :1] * self.kx[comp] + x[:, 1:2] * self.ky[comp] + self.phase[comp]

    def scalar(self, x, comp=0):
        return np.sin(self._arg(comp, x)) @ self.amp[comp]

    def grad(self, x, comp=0):
        c = np.cos(self._arg(comp, x)) * self.amp[comp]
        return c @ self.kx[comp], c @ self.ky[comp]

    def vector(self, x):
        out = np.zeros((len(x), 3))
        out[:, 0] = self.scalar(x, 0)
        out[:, 1] = self.scalar(x, 1)
        return out

    def div(self, x):
        return self.grad(x, 0)[0] + self.grad(x, 1)[1]

    def curl(self, x):
        gx, gy = self.grad(x, 0)
        out = np.zeros((len(x), 3))
        out[:, 0], out[:, 1] = -gy, gx
        return out


def _box(mesh: Mesh):
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    if mesh.periods:
        p = np.array(mesh.periods)
        lx = max(abs(p[:, 0]).max(), 1e-300)
        ly = max(abs(p[:, 1]).max(), 1e-300) if len(p) > 1 else hi[1] - lo[1]
        return lx, ly
    return hi[0] - lo[0], hi[1] - lo[1]


def commuting_residuals(mesh: Mesh, field: FourierField, ops=None, pair="bdfm1", degree=20, edge_points=12):
    """(div residual, curl residual), each relative in the max norm.

    div: div(Pi^S u) - Pi^V(div u).  curl: curl(Pi^E psi) - Pi^S(curl psi).
    The quadrature must resolve the fields, else its error dominates.
    """
    E, S, V = el.resolve_pair(pair)
    if S != el.SpaceKind.VELOCITY_BDFM1:
        raise InvalidParameterError("commuting suite implemented for the bdfm1 pair")
    ops = ops or op.assemble(mesh, pair=pair)
    us = el.project_pi_s(field.vector, mesh, degree, edge_points)
    a = op.divergence(us, ops)
    b = el.project_pi_v(field.div, mesh, degree=degree)
    r_div = np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)
    pe = el.project_pi_e(field.scalar, mesh, degree, edge_points)
    c = op.curl(pe, ops)
    d = el.project_pi_s(field.curl, mesh, degree, edge_points)
    r_curl = np.max(np.abs(c - d)) / max(np.max(np.abs(d)), 1e-300)
    return float(r_div), float(r_curl)


def suite_commuting(mesh: Mesh, samples: int = 100, seed: int = 0) -> ScenarioResult:
    """Commuting-diagram residuals over random smooth fields (planar meshes)."""
    if mesh.kind == GeometryKind.SPHERE or np.ptp(mesh.vertices[:, 2]) > 0:
        raise InvalidParameterError("commuting suite needs a planar mesh")
    rng = np.random.default_rng(seed)
    ops = op.assemble(mesh)
    lx, ly = _box(mesh)
    worst_div = worst_curl = 0.0
    for _ in range(samples):
        rd, rc = commuting_residuals(mesh, FourierField(rng, lx, ly), ops)
        worst_div, worst_curl = max(worst_div, rd), max(worst_curl, rc)
    res = ScenarioResult("commuting", params={"samples": samples, "seed": seed})
    res.metrics = {"div_residual": worst_div, "curl_residual": worst_curl}
    res.thresholds = {k: ("<", COMMUTING_TOL) for k in res.metrics}
    return res


def random_state(ops, rng) -> dyn.State:
    u = np.zeros(ops.dim_S)
    u[ops.free_S] = rng.standard_normal(len(ops.free_S))
    return dyn.State(u, rng.standard_normal(ops.dim_V), 0.0)


def suite_conservation(
    mesh: Mesh, samples: int = 20, nsteps: int = 1000, dt: float = 0.05, seed: int = 0, solver="monolithic"
) -> ScenarioResult:
    """Energy and per-cell mass conservation from random initial states."""
    rng = np.random.default_rng(seed)
    cfg = dyn.ModelConfig(c2=1.0, f_coeffs=1.0, dt=dt, solver=solver)
    ops = op.assemble(mesh, cfg)
    e_step = mass = resid = 0.0
    for _ in range(samples):
        s0 = random_state(ops, rng)
        _, traj = dyn.integrate(s0, ops, cfg, nsteps, check_mass=True)
        e_step = max(e_step, traj.max_energy_step)
        mass = max(mass, traj.mass_drift)
        resid = max(resid, traj.max_mass_residual)
    res = ScenarioResult("conservation", ops=ops, params={"samples": samples, "nsteps": nsteps, "seed": seed})
    res.metrics = {"energy_step_error": e_step, "mass_drift": mass, "mass_residual": resid}
    res.thresholds = {
        "energy_step_error": ("<", ENERGY_STEP_TOL),
        "mass_drift": ("<", 1e-10),
        "mass_residual": ("<", MASS_RESIDUAL_TOL),
    }
    return res


def suite_steady(mesh: Mesh, nsteps: int = 100, dt: float = 0.1, seed: int = 0, solver="monolithic") -> ScenarioResult:
    """A random balanced state on an f-plane must stay fixed."""
    from .scenarios import run_fplane_steady

    res = run_fplane_steady(mesh_choice="custom", seed=seed, nsteps=nsteps, dt=dt, mesh=mesh, solver=solver)
    res.name = "steady"
    return res


def suite_census(mesh: Mesh, pair="bdfm1") -> ScenarioResult:
    """dim(S) - 2 dim(V) and dim(E) + dim(V) - dim(S) - chi, both expected 0."""
    c = el.dof_census(mesh, pair)
    res = ScenarioResult("census", params=dict(c))
    res.metrics = {
        "S_minus_2V": float(abs(c["S_minus_2V"])),
        "euler_defect": float(abs(c["E_plus_V_minus_S_minus_chi"])),
    }
    res.thresholds = {k: ("<", 0.5) for k in res.metrics}
    return res


SUITES = {
    "commuting": suite_commuting,
    "conservation": suite_conservation,
    "steady": suite_steady,
    "census": suite_census,
}
