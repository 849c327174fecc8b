"""Implicit-midpoint time stepping of the linear rotating shallow-water system.

The midpoint rule for

    M_S u_t = -C_f u + c^2 B^T eta,     M_V eta_t = -B u

is one linear solve per step.  Two solvers are provided: a monolithic sparse
LU of the coupled system, and a hybridized solver that breaks normal
continuity, re-imposes it with edge multipliers and condenses onto them.
"""

from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import elements as el
from . import operators as op
from .errors import InvalidParameterError, InvariantViolation, SolverFailure


class SolverKind(enum.Enum):
    MONOLITHIC = "monolithic"
    HYBRIDIZED = "hybridized"


@dataclass(frozen=True)
class ModelConfig:
    """Physical and numerical parameters.

    Attributes:
        c2: Squared gravity wave speed (gH).
        f_coeffs: Coriolis parameter, scalar or coefficients in E.
        dt: Time step.
        solver: Monolithic or hybridized linear solve.
    """

    c2: float = 1.0
    f_coeffs: object = 1.0
    dt: float = 0.01
    solver: SolverKind = SolverKind.MONOLITHIC

    def __post_init__(self):
        if not self.c2 > 0:
            raise InvalidParameterError("c2 must be positive")
        if not self.dt != 0 or not np.isfinite(self.dt):
            raise InvalidParameterError("dt must be nonzero and finite")
        if isinstance(self.solver, str):
            object.__setattr__(self, "solver", SolverKind(self.solver))


@dataclass(frozen=True)
class State:
    u: np.ndarray
    eta: np.ndarray
    t: float = 0.0

    def vector(self):
        return np.concatenate([self.u, self.eta])

    def norm(self):
        return float(np.linalg.norm(self.vector()))


def zero_state(ops: op.OperatorSet, t: float = 0.0) -> State:
    return State(np.zeros(ops.dim_S), np.zeros(ops.dim_V), t)


def energy(state: State, ops: op.OperatorSet, config: ModelConfig) -> float:
    """0.5 (u^T M_S u + c^2 eta^T M_V eta)."""
    u, eta = state.u, state.eta
    return 0.5 * float(u @ (ops.M_S @ u) + config.c2 * eta @ (ops.M_V @ eta))


def cell_mass(state: State, ops: op.OperatorSet) -> np.ndarray:
    """Integral of eta over each cell."""
    return (ops.M_V @ state.eta)[ops.dm_V.cell_dofs].sum(axis=1)


def total_mass(state: State, ops: op.OperatorSet) -> float:
    return float(ops.one_V @ (ops.M_V @ state.eta))


_FLUX_TABLES = weakref.WeakKeyDictionary()


def _flux_table(ops: op.OperatorSet, npts: int):
    """(nf, 3, ldim) outward flux of each local basis function through each edge."""
    cache = _FLUX_TABLES.setdefault(ops, {})
    if npts not in cache:
        S = ops.pair[1]
        fr = el.frames(ops.mesh)
        s, ws = el.edge_rule(npts)
        tab = np.zeros((ops.mesh.n_face, 3, ops.dm_S.local_dim))
        for i in range(3):
            L = np.zeros((npts, 3))
            L[:, el.EDGE_START[i]] = 1 - s
            L[:, el.EDGE_END[i]] = s
            un = np.einsum("cqjd,cd->cqj", el.basis_values(S, fr, L), fr.outward[:, i])
            tab[:, i] = np.einsum("q,cqj->cj", ws, un) * fr.length[:, i][:, None]
        cache[npts] = tab
    return cache[npts]


def cell_flux(u, ops: op.OperatorSet, npts: int = 3):
    """Outward normal flux of u through each cell boundary.

    Returns ``(net, absolute)`` per cell, evaluated by Gauss quadrature on
    the edges (independently of the divergence matrix).
    """
    flux = np.einsum("cij,cj->ci", _flux_table(ops, npts), el.gather(ops.dm_S, u))
    return flux.sum(axis=1), np.abs(flux).sum(axis=1)


def mass_balance_residual(s0: State, s1: State, ops: op.OperatorSet, dt: float) -> float:
    """Max per-cell |d/dt int eta + flux(u*)|, relative to the flux/mass scale."""
    m0, m1 = cell_mass(s0, ops), cell_mass(s1, ops)
    net, ab = cell_flux(0.5 * (s0.u + s1.u), ops)
    res = (m1 - m0) / dt + net
    scale = max(np.max(np.abs(m0) + np.abs(m1)) / abs(dt), np.max(ab))
    if scale == 0:
        return float(np.max(np.abs(res)))
    return float(np.max(np.abs(res)) / scale)


# --------------------------------------------------------------------------
# balanced initialization


def balanced_eta(u, ops: op.OperatorSet, config: ModelConfig, psi=None) -> np.ndarray:
    """Elevation in discrete geostrophic balance with u.

    Solves M_S v + c^2 B^T eta = 0, B v = -B M_S^{-1} C_f u.  The free
    constant is fixed by int eta = int f psi / c^2 when psi is given, else
    mean zero.
    """
    eta = op.mixed_poisson_solve(-(ops.C_f @ u), ops) / config.c2
    if psi is not None:
        target = integrate_product_E(ops.f_coeffs, psi, ops) / config.c2
        eta = eta + (target / ops.mesh.total_area) * ops.one_V
    return eta


def integrate_product_E(a, b, ops: op.OperatorSet) -> float:
    """Integral of the product of two fields in E."""
    E = ops.pair[0]
    fr = el.frames(ops.mesh)
    q = el.triangle_rule(8)
    vE = el.basis_values(E, fr, q.points)
    fa = np.einsum("cqj,cj->cq", vE, el.gather(ops.dm_E, a))
    fb = np.einsum("cqj,cj->cq", vE, el.gather(ops.dm_E, b))
    w = q.weights[None, :] * (2 * fr.area)[:, None]
    return float(np.sum(w * fa * fb))


def geostrophic_init(psi, ops: op.OperatorSet, config: ModelConfig, t: float = 0.0) -> State:
    """Balanced state from a streamfunction psi in E.

    ``u = k x grad psi`` exactly; on bounded meshes psi must be constant on
    the boundary.
    """
    psi = np.asarray(psi, dtype=float)
    u = op.curl(psi, ops)
    bnd = ops.dm_S.boundary_dofs
    if len(bnd):
        leak = np.max(np.abs(u[bnd]))
        if leak > 1e-10 * max(np.max(np.abs(u)), 1e-300):
            raise InvalidParameterError("streamfunction is not constant on the boundary")
        u[bnd] = 0.0
    eta = balanced_eta(u, ops, config, psi=psi)
    return State(u, eta, t)


# --------------------------------------------------------------------------
# monolithic midpoint stepper


class MonolithicStepper:
    """Factorized midpoint system on the free velocity DOFs and eta.

    The elevation unknown is scaled to c * eta so the coupling blocks are
    +-(dt/2) c B and the system is well balanced for large c.
    """

    def __init__(self, ops: op.OperatorSet, config: ModelConfig):
        self.ops = ops
        self.dt = dt = float(config.dt)
        self.c = c = float(np.sqrt(config.c2))
        M, C, B, Mv = ops.Ms0, ops.C0, ops.B0, ops.M_V
        h = 0.5 * dt
        self.lhs = sp.bmat([[M + h * C, -h * c * B.T], [h * c * B, Mv]], format="csc")
        self.rhs = sp.bmat([[M - h * C, h * c * B.T], [-h * c * B, Mv]], format="csr")
        try:
            self.lu = spla.splu(self.lhs)
        except RuntimeError as exc:
            raise SolverFailure(f"midpoint factorization failed: {exc}", residual=np.inf) from exc
        self.ns = len(ops.free_S)

    def __call__(self, state: State) -> State:
        ops = self.ops
        x0 = np.concatenate([state.u[ops.free_S], self.c * state.eta])
        b = self.rhs @ x0
        x1 = self.lu.solve(b)
        r = b - self.lhs @ x1
        x1 += self.lu.solve(r)  # one step of iterative refinement
        nb = np.linalg.norm(b)
        if nb > 0:
            res = np.linalg.norm(self.lhs @ x1 - b) / nb
            if not res < 1e-9:
                raise SolverFailure(f"midpoint solve residual {res:.3e}", residual=res)
        return State(ops.extend_S(x1[: self.ns]), x1[self.ns:] / self.c, state.t + self.dt)


# --------------------------------------------------------------------------
# hybridized stepper


@dataclass
class TraceSystem:
    """Condensed multiplier system for the hybridized midpoint step.

    Unknowns per cell are the broken velocity (local orientation) and the
    elevation; continuity of each shared normal DOF is imposed by one
    multiplier.  ``A_inv`` holds the inverted per-cell blocks and
    ``condensed`` the multiplier matrix C A^{-1} C^T.
    """

    ops: op.OperatorSet
    dt: float
    c2: float
    A_inv: np.ndarray
    rhs_blocks: np.ndarray
    pinned: np.ndarray  # (nf, nloc) bool, boundary normal DOFs
    con: sp.csr_matrix  # (n_mult, nf * nloc)
    condensed: sp.csc_matrix
    lu: object = field(repr=False)

    @property
    def n_multipliers(self):
        return self.con.shape[0]

    @property
    def is_symmetric(self):
        d = self.condensed - self.condensed.T
        return abs(d).max() <= 1e-12 * abs(self.condensed).max()


def build_trace_system(ops: op.OperatorSet, config: ModelConfig) -> TraceSystem:
    dt, c2 = float(config.dt), float(config.c2)
    h = 0.5 * dt
    loc = ops.local
    Ms, C, B, Mv = loc["M_S"], loc["C_f"], loc["B_div"], loc["M_V"]
    nf, ns = Ms.shape[:2]
    nv = Mv.shape[1]
    n = ns + nv
    A = np.zeros((nf, n, n))
    R = np.zeros((nf, n, n))
    A[:, :ns, :ns] = Ms + h * C
    A[:, :ns, ns:] = -h * c2 * B.transpose(0, 2, 1)
    A[:, ns:, :ns] = h * c2 * B
    A[:, ns:, ns:] = c2 * Mv
    R[:, :ns, :ns] = Ms - h * C
    R[:, :ns, ns:] = h * c2 * B.transpose(0, 2, 1)
    R[:, ns:, :ns] = -h * c2 * B
    R[:, ns:, ns:] = c2 * Mv

    dm = ops.dm_S
    bset = np.zeros(dm.ndofs, dtype=bool)
    bset[dm.boundary_dofs] = True
    pinned = np.zeros((nf, n), dtype=bool)
    pinned[:, :ns] = bset[dm.cell_dofs]
    # strong u.n = 0: identity rows/cols for pinned DOFs
    cidx, lidx = np.nonzero(pinned)
    A[cidx, lidx, :] = 0.0
    A[cidx, :, lidx] = 0.0
    A[cidx, lidx, lidx] = 1.0
    R[cidx, lidx, :] = 0.0
    try:
        A_inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure("singular element block", residual=np.inf) from exc

    # one multiplier per global velocity DOF shared by two cells
    flat = dm.cell_dofs.ravel()
    sign = dm.signs.ravel()
    col = (np.arange(nf)[:, None] * n + np.arange(ns)[None, :]).ravel()
    order = np.argsort(flat, kind="stable")
    fs = flat[order]
    first = np.r_[True, fs[1:] != fs[:-1]]
    counts = np.diff(np.r_[np.nonzero(first)[0], len(fs)])
    starts = np.nonzero(first)[0][counts == 2]
    shared = ~bset[fs[starts]]
    starts = starts[shared]
    m = len(starts)
    a, b = order[starts], order[starts + 1]
    rows = np.repeat(np.arange(m), 2)
    cols = np.column_stack([col[a], col[b]]).ravel()
    vals = np.column_stack([sign[a], -sign[b]]).ravel()
    con = sp.csr_matrix((vals, (rows, cols)), shape=(m, nf * n))

    Ainv_bd = sp.block_diag(list(A_inv), format="csr")
    S = (con @ Ainv_bd @ con.T).tocsc()
    try:
        lu = spla.splu(S)
    except RuntimeError as exc:
        raise SolverFailure(f"trace factorization failed: {exc}", residual=np.inf) from exc
    return TraceSystem(ops, dt, c2, A_inv, R, pinned, con, S, lu)


def step_hybridized(state: State, trace: TraceSystem) -> State:
    """One midpoint step via the condensed multiplier system."""
    ops = trace.ops
    nf = ops.mesh.n_face
    uloc = el.gather(ops.dm_S, state.u)
    eloc = state.eta[ops.dm_V.cell_dofs]
    x0 = np.concatenate([uloc, eloc], axis=1)
    r = np.einsum("cij,cj->ci", trace.rhs_blocks, x0)
    y = np.einsum("cij,cj->ci", trace.A_inv, r)  # A^{-1} r
    g = trace.con @ y.ravel()
    lam = trace.lu.solve(g)
    res = np.linalg.norm(trace.condensed @ lam - g) / max(np.linalg.norm(g), 1e-300)
    if np.linalg.norm(g) > 0 and not res < 1e-9:
        raise SolverFailure(f"trace solve residual {res:.3e}", residual=res)
    corr = (trace.con.T @ lam).reshape(nf, -1)
    x1 = y - np.einsum("cij,cj->ci", trace.A_inv, corr)
    ns = uloc.shape[1]
    u1 = el.scatter_average(ops.dm_S, x1[:, :ns] * ops.dm_S.signs)
    eta1 = np.empty(ops.dim_V)
    eta1[ops.dm_V.cell_dofs] = x1[:, ns:]
    return State(u1, eta1, state.t + trace.dt)


def normal_jump(x_loc_u, ops: op.OperatorSet) -> float:
    """Max mismatch of shared normal DOFs for broken local coefficients."""
    dm = ops.dm_S
    g = x_loc_u * dm.signs
    lo = np.full(dm.ndofs, np.inf)
    hi = np.full(dm.ndofs, -np.inf)
    np.minimum.at(lo, dm.cell_dofs.ravel(), g.ravel())
    np.maximum.at(hi, dm.cell_dofs.ravel(), g.ravel())
    return float(np.max(hi - lo))


# --------------------------------------------------------------------------
# public stepping API

_STEPPERS = weakref.WeakKeyDictionary()


def stepper(ops: op.OperatorSet, config: ModelConfig):
    """Cached step function for (ops, dt, c2, solver)."""
    cache = _STEPPERS.setdefault(ops, {})
    key = (float(config.dt), float(config.c2), config.solver)
    if key not in cache:
        if config.solver is SolverKind.HYBRIDIZED:
            trace = build_trace_system(ops, config)
            cache[key] = lambda s, _t=trace: step_hybridized(s, _t)
        else:
            cache[key] = MonolithicStepper(ops, config)
    return cache[key]


def step(state: State, ops: op.OperatorSet, config: ModelConfig) -> State:
    """Advance one implicit-midpoint step."""
    return stepper(ops, config)(state)


@dataclass
class Trajectory:
    """Per-step diagnostics of an integration."""

    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    max_eta: list = field(default_factory=list)
    max_energy_step: float = 0.0  # max relative energy change in one step
    max_mass_residual: float = 0.0  # max relative per-cell flux-balance residual
    mass_scale: float = 0.0  # integral of |eta(0)|, floor for the mass drift scale
    snapshots: list = field(default_factory=list)

    def record(self, state, ops, config):
        self.times.append(state.t)
        self.energy.append(energy(state, ops, config))
        self.mass.append(total_mass(state, ops))
        self.max_eta.append(float(np.max(np.abs(state.eta))) if len(state.eta) else 0.0)

    @property
    def energy_drift(self):
        e = np.asarray(self.energy)
        if e[0] == 0:
            return float(np.max(np.abs(e)))
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))

    @property
    def mass_drift(self):
        m = np.asarray(self.mass)
        scale = max(abs(m[0]), self.mass_scale)
        if scale == 0:
            return float(np.max(np.abs(m - m[0])))
        return float(np.max(np.abs(m - m[0])) / scale)

    def rows(self):
        return list(zip(self.times, self.energy, self.mass, self.max_eta))


def integrate(
    state: State,
    ops: op.OperatorSet,
    config: ModelConfig,
    nsteps: int,
    check_mass: bool = True,
    snapshot_times=(),
    callback=None,
):
    """Run ``nsteps`` steps, returning the final state and a Trajectory."""
    if nsteps < 0:
        raise InvalidParameterError("nsteps must be >= 0")
    advance = stepper(ops, config)
    traj = Trajectory()
    traj.mass_scale = float(ops.one_V @ (ops.M_V @ np.abs(state.eta)))
    traj.record(state, ops, config)
    pending = sorted(snapshot_times)
    e_prev = traj.energy[-1]
    for _ in range(nsteps):
        new = advance(state)
        if check_mass:
            traj.max_mass_residual = max(traj.max_mass_residual, mass_balance_residual(state, new, ops, config.dt))
        traj.record(new, ops, config)
        e_new = traj.energy[-1]
        if e_prev > 0:
            traj.max_energy_step = max(traj.max_energy_step, abs(e_new - e_prev) / e_prev)
        e_prev = e_new
        while pending and new.t >= pending[0] - 0.5 * abs(config.dt):
            traj.snapshots.append((pending.pop(0), new))
        if callback is not None:
            callback(new)
        state = new
    return state, traj


def with_dt(config: ModelConfig, dt: float) -> ModelConfig:
    return replace(config, dt=dt)


def check_equivalence(state: State, ops: op.OperatorSet, config: ModelConfig, tol: float = 1e-10) -> float:
    """Relative difference of one hybridized and one monolithic step."""
    a = step(state, ops, replace(config, solver=SolverKind.MONOLITHIC))
    b = step(state, ops, replace(config, solver=SolverKind.HYBRIDIZED))
    d = np.linalg.norm(a.vector() - b.vector()) / max(np.linalg.norm(a.vector()), 1e-300)
    if d > tol:
        raise InvariantViolation(f"hybridized and monolithic steps differ by {d:.3e}")
    return float(d)
