"""Global sparse operators and the derived discrete operators.

Matrices follow the weak form

    M_S u_t + C_f u - c^2 B_div^T eta = 0,     M_V eta_t + B_div u = 0,

with ``C_f[i, j] = int f w_i . (k x u_j)`` and ``B_div[a, j] = int alpha_a div u_j``.
All matrices are assembled over the full DOF sets; on meshes with a boundary
the velocity normal DOFs of boundary edges are removed by restricting to
``OperatorSet.free_S``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.io
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import elements as el
from .errors import InvalidParameterError, InvariantViolation, SolverFailure
from .mesh import Mesh

RESIDUAL_TOL = 1e-11


def _scatter(rows: el.DofMap, cols: el.DofMap, local, shape):
    """Sum signed local matrices (nf, nr, nc) into a CSR matrix."""
    vals = local * rows.signs[:, :, None] * cols.signs[:, None, :]
    r = np.broadcast_to(rows.cell_dofs[:, :, None], vals.shape)
    c = np.broadcast_to(cols.cell_dofs[:, None, :], vals.shape)
    A = sp.coo_matrix((vals.ravel(), (r.ravel(), c.ravel())), shape=shape).tocsr()
    A.sum_duplicates()
    return A


def _check_residual(A, x, b, what):
    nb = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b) / (nb if nb > 0 else 1.0)
    if not np.isfinite(res) or res > 1e-8:
        raise SolverFailure(f"{what}: relative residual {res:.3e}", residual=res)
    return res


class PinnedSolver:
    """Direct solver for a symmetric system singular only along ``null``.

    One DOF (where the null vector is largest) is pinned to zero, the reduced
    system is factorized once, and solutions are shifted so that
    ``weight @ x == 0``.
    """

    def __init__(self, A, null=None, weight=None):
        A = sp.csc_matrix(A)
        n = A.shape[0]
        self.n = n
        self.null = null
        self.weight = weight
        if null is None:
            self.keep = np.arange(n)
        else:
            pin = int(np.argmax(np.abs(null)))
            self.keep = np.delete(np.arange(n), pin)
        self.A = A
        try:
            self.lu = spla.splu(A[self.keep][:, self.keep].tocsc())
        except RuntimeError as exc:
            raise SolverFailure(f"factorization failed: {exc}", residual=np.inf) from exc

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if self.null is not None:
            # remove the inconsistent component of b
            nn = self.null @ self.null
            b = b - (self.null @ b) / nn * self.null
        x = np.zeros(self.n)
        x[self.keep] = self.lu.solve(b[self.keep])
        if self.null is not None and self.weight is not None:
            x -= (self.weight @ x) / (self.weight @ self.null) * self.null
        return x


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Assembled operators for one mesh, element pair and Coriolis field."""

    mesh: Mesh
    pair: tuple
    dm_E: el.DofMap
    dm_S: el.DofMap
    dm_V: el.DofMap
    f_coeffs: np.ndarray
    M_S: sp.csr_matrix
    M_V: sp.csr_matrix
    M_E: sp.csr_matrix
    B_div: sp.csr_matrix
    C_f: sp.csr_matrix
    W_curl: sp.csr_matrix
    K_E: sp.csr_matrix
    G_grad: sp.csr_matrix
    curl: sp.csr_matrix  # exact map E -> S, u = curl @ psi
    free_S: np.ndarray
    free_E: np.ndarray
    one_E: np.ndarray = field(repr=False)
    one_V: np.ndarray = field(repr=False)
    local: dict = field(repr=False, default_factory=dict)  # per-cell blocks, local orientation

    @property
    def dim_E(self):
        return self.dm_E.ndofs

    @property
    def dim_S(self):
        return self.dm_S.ndofs

    @property
    def dim_V(self):
        return self.dm_V.ndofs

    def matrices(self):
        names = ["M_S", "M_V", "M_E", "B_div", "C_f", "W_curl", "K_E", "G_grad", "curl"]
        return {k: getattr(self, k) for k in names}

    # restrictions to the free velocity DOFs -------------------------------

    @cached_property
    def Ms0(self):
        f = self.free_S
        return self.M_S[f][:, f].tocsc()

    @cached_property
    def B0(self):
        return self.B_div[:, self.free_S].tocsr()

    @cached_property
    def C0(self):
        f = self.free_S
        return self.C_f[f][:, f].tocsr()

    def extend_S(self, u0):
        u = np.zeros(self.dim_S)
        u[self.free_S] = u0
        return u

    # cached factorizations --------------------------------------------------

    @cached_property
    def ms_lu(self):
        return spla.splu(self.Ms0)

    @cached_property
    def me_lu(self):
        return spla.splu(self.M_E.tocsc())

    @cached_property
    def mv_lu(self):
        return spla.splu(self.M_V.tocsc())

    @cached_property
    def poisson_E(self):
        """Pinned solver for K_E on the free E DOFs (mean-zero if closed)."""
        fe = self.free_E
        K = self.K_E[fe][:, fe]
        if self.mesh.is_closed:
            w = self.M_E @ self.one_E
            return PinnedSolver(K, null=self.one_E[fe], weight=w[fe])
        return PinnedSolver(K)

    @cached_property
    def mixed_poisson(self):
        """Pinned saddle solver [[M_S, B^T], [B, 0]] on free velocity DOFs."""
        ns = len(self.free_S)
        A = sp.bmat([[self.Ms0, self.B0.T], [self.B0, None]], format="csc")
        null = np.concatenate([np.zeros(ns), self.one_V])
        weight = np.concatenate([np.zeros(ns), self.M_V @ self.one_V])
        return PinnedSolver(A, null=null, weight=weight)

    def solve_mass_S(self, b):
        """M_S^{-1} b restricted to free DOFs; returns a full-length vector."""
        b0 = np.asarray(b)[self.free_S]
        x0 = self.ms_lu.solve(b0)
        _check_residual(self.Ms0, x0, b0, "velocity mass solve")
        return self.extend_S(x0)

    def mean_V(self, eta):
        return (self.one_V @ (self.M_V @ eta)) / (self.one_V @ (self.M_V @ self.one_V))

    def mean_E(self, psi):
        return (self.one_E @ (self.M_E @ psi)) / (self.one_E @ (self.M_E @ self.one_E))


def constant_in(dm: el.DofMap, value: float = 1.0) -> np.ndarray:
    """Coefficients of a constant function in a scalar space."""
    v = np.full(dm.ndofs, float(value))
    if dm.space is el.SpaceKind.STREAM_E:
        v[-dm.cell_dofs.shape[0]:] = 0.0  # bubble coefficients
    return v


def assemble(mesh: Mesh, config=None, pair="bdfm1", f=None) -> OperatorSet:
    """Assemble the operator set.

    Args:
        mesh: The triangulation.
        config: Optional object with an ``f_coeffs`` attribute (Coriolis
            field as coefficients in the streamfunction space).
        pair: "bdfm1" (default) or "rt0".
        f: Coriolis field overriding ``config``: a scalar or coefficients in E.
    """
    E, S, V = el.resolve_pair(pair)
    fr = el.frames(mesh)
    dm_E, dm_S, dm_V = el.dofmap(E, mesh), el.dofmap(S, mesh), el.dofmap(V, mesh)
    nE, nS, nV = dm_E.ndofs, dm_S.ndofs, dm_V.ndofs

    if f is None and config is not None:
        f = config.f_coeffs
    if f is None:
        f = 0.0
    if np.ndim(f) == 0:
        f_coeffs = constant_in(dm_E, float(f))
    else:
        f_coeffs = np.asarray(f, dtype=float)
        if f_coeffs.shape != (nE,):
            raise InvalidParameterError(f"Coriolis coefficients must have length {nE}")

    q = el.triangle_rule(6)
    w = q.weights[None, :] * (2 * fr.area)[:, None]  # (nf, nq)
    vS = el.basis_values(S, fr, q.points)  # (nf, nq, 9, 3)
    dS = el.basis_derivatives(S, fr, q.points)  # (nf, nq, 9)
    vV = el.basis_values(V, fr, q.points)
    vE = el.basis_values(E, fr, q.points)
    gE = el.basis_derivatives(E, fr, q.points)  # (nf, nq, 7, 3)
    cE = np.cross(fr.normal[:, None, None, :], gE)
    perpS = np.cross(fr.normal[:, None, None, :], vS)

    f_q = np.einsum("cqj,cj->cq", vE, el.gather(dm_E, f_coeffs))

    lM_S = np.einsum("cq,cqid,cqjd->cij", w, vS, vS)
    lM_V = np.einsum("cq,cqi,cqj->cij", w, vV, vV)
    lB = np.einsum("cq,cqi,cqj->cij", w, vV, dS)
    Cl = np.einsum("cq,cqid,cqjd->cij", w * f_q, vS, perpS)
    lC = 0.5 * (Cl - Cl.transpose(0, 2, 1))
    M_S = _scatter(dm_S, dm_S, lM_S, (nS, nS))
    M_V = _scatter(dm_V, dm_V, lM_V, (nV, nV))
    M_E = _scatter(dm_E, dm_E, np.einsum("cq,cqi,cqj->cij", w, vE, vE), (nE, nE))
    K_E = _scatter(dm_E, dm_E, np.einsum("cq,cqid,cqjd->cij", w, gE, gE), (nE, nE))
    B = _scatter(dm_V, dm_S, lB, (nV, nS))
    C = _scatter(dm_S, dm_S, lC, (nS, nS))
    W = _scatter(dm_E, dm_S, np.einsum("cq,cqid,cqjd->cij", w, cE, vS), (nE, nS))
    G = _scatter(dm_E, dm_S, np.einsum("cq,cqid,cqjd->cij", w, gE, vS), (nE, nS))
    curl = curl_matrix(mesh, pair)

    free_S = np.setdiff1d(np.arange(nS), dm_S.boundary_dofs)
    free_E = np.setdiff1d(np.arange(nE), dm_E.boundary_dofs)
    return OperatorSet(
        mesh=mesh,
        pair=(E, S, V),
        dm_E=dm_E,
        dm_S=dm_S,
        dm_V=dm_V,
        f_coeffs=f_coeffs,
        M_S=M_S,
        M_V=M_V,
        M_E=M_E,
        B_div=B,
        C_f=C,
        W_curl=W,
        K_E=K_E,
        G_grad=G,
        curl=curl,
        free_S=free_S,
        free_E=free_E,
        one_E=constant_in(dm_E),
        one_V=constant_in(dm_V),
        local={"M_S": lM_S, "M_V": lM_V, "B_div": lB, "C_f": lC},
    )


def curl_matrix(mesh: Mesh, pair="bdfm1") -> sp.csr_matrix:
    """Exact coefficient map psi in E -> k x grad psi in S.

    Applies the local velocity functionals to the curl of each E basis
    function and inverts the local interpolation matrix.
    """
    E, S, _ = el.resolve_pair(pair)
    fr = el.frames(mesh)
    dm_E, dm_S = el.dofmap(E, mesh), el.dofmap(S, mesh)
    pts = el._node_points(S)
    cv = el.curl_values(E, fr, pts)  # (nf, npts, nE, 3)
    F = el.apply_functionals(S, fr, cv)  # (nf, nS, nE)
    N = el.interpolation_matrix(S, fr)
    loc = np.linalg.solve(N, F)
    mult = np.bincount(dm_S.cell_dofs.ravel(), minlength=dm_S.ndofs).astype(float)
    vals = loc * (dm_S.signs / mult[dm_S.cell_dofs])[:, :, None]
    r = np.broadcast_to(dm_S.cell_dofs[:, :, None], vals.shape)
    c = np.broadcast_to(dm_E.cell_dofs[:, None, :], vals.shape)
    A = sp.coo_matrix((vals.ravel(), (r.ravel(), c.ravel())), shape=(dm_S.ndofs, dm_E.ndofs)).tocsr()
    A.sum_duplicates()
    A.data[np.abs(A.data) < 1e-14 * np.abs(A.data).max()] = 0.0
    A.eliminate_zeros()
    return A


# --------------------------------------------------------------------------
# derived operators


def discrete_gradient(phi, ops: OperatorSet) -> np.ndarray:
    """D phi = M_S^{-1}(-B_div^T phi) on the free velocity DOFs."""
    return ops.solve_mass_S(-(ops.B_div.T @ np.asarray(phi)))


def divergence(u, ops: OperatorSet) -> np.ndarray:
    """L2 projection of div u onto V (exact, since div S is contained in V)."""
    b = ops.B_div @ np.asarray(u)
    x = ops.mv_lu.solve(b)
    _check_residual(ops.M_V, x, b, "pressure mass solve")
    return x


def vorticity(u, ops: OperatorSet) -> np.ndarray:
    """xi = M_E^{-1}(-W_curl u)."""
    b = -(ops.W_curl @ np.asarray(u))
    x = ops.me_lu.solve(b)
    _check_residual(ops.M_E, x, b, "streamfunction mass solve")
    return x


def curl(psi, ops: OperatorSet) -> np.ndarray:
    """Coefficients of k x grad psi in S."""
    return ops.curl @ np.asarray(psi)


@dataclass(frozen=True)
class HelmholtzParts:
    psi: np.ndarray
    phi: np.ndarray
    harmonic: np.ndarray


def solve_streamfunction(u, ops: OperatorSet) -> np.ndarray:
    """Mean-zero psi with k x grad psi the M_S-projection of u onto curl E."""
    b = (ops.W_curl @ np.asarray(u))[ops.free_E]
    psi = np.zeros(ops.dim_E)
    psi[ops.free_E] = ops.poisson_E.solve(b)
    return psi


def mixed_poisson_solve(r, ops: OperatorSet) -> np.ndarray:
    """Mean-zero phi solving (B M_S^{-1} B^T) phi = -B M_S^{-1} r.

    ``r`` is a covector on S (full length).
    """
    ns = len(ops.free_S)
    rhs = np.concatenate([-np.asarray(r)[ops.free_S], np.zeros(ops.dim_V)])
    x = ops.mixed_poisson.solve(rhs)
    return x[ns:]


def solve_potential(u, ops: OperatorSet) -> np.ndarray:
    """Mean-zero phi with D phi the M_S-projection of u onto D(V)."""
    return mixed_poisson_solve(ops.M_S @ np.asarray(u), ops)


def helmholtz_decompose(u, ops: OperatorSet, tol: float = 1e-9) -> HelmholtzParts:
    """Split u = curl psi + D phi + h with M_S-orthogonal parts."""
    u = np.asarray(u, dtype=float)
    psi = solve_streamfunction(u, ops)
    phi = solve_potential(u, ops)
    h = u - curl(psi, ops) - discrete_gradient(phi, ops)
    if ops.mesh.euler_characteristic == 2 and ops.mesh.is_closed:
        nu = np.sqrt(max(u @ (ops.M_S @ u), 0.0))
        nh = np.sqrt(max(h @ (ops.M_S @ h), 0.0))
        if nh > tol * max(nu, 1.0):
            raise InvariantViolation(f"harmonic part {nh:.3e} on a sphere")
    return HelmholtzParts(psi, phi, h)


def projection_PE(phi, ops: OperatorSet) -> np.ndarray:
    """P^E phi: int grad gamma . grad(P^E phi) = int grad gamma . D phi."""
    phi = np.asarray(phi, dtype=float)
    phi = phi - ops.mean_V(phi) * ops.one_V
    b = (ops.G_grad @ discrete_gradient(phi, ops))[ops.free_E]
    out = np.zeros(ops.dim_E)
    out[ops.free_E] = ops.poisson_E.solve(b)
    return out


def projection_PV(psi, ops: OperatorSet) -> np.ndarray:
    """P^V psi: int D alpha . D(P^V psi) = int D alpha . grad psi."""
    psi = np.asarray(psi, dtype=float)
    psi = psi - ops.mean_E(psi) * ops.one_E
    return mixed_poisson_solve(ops.G_grad.T @ psi, ops)


def _dense_inv_apply(lu, B):
    return lu.solve(np.asarray(B.toarray() if sp.issparse(B) else B))


def inf_sup_estimate(ops: OperatorSet, norm: str = "l2") -> float:
    """Discrete inf-sup constant of B_div on mean-zero V.

    ``norm="l2"`` measures velocities in the M_S norm, ``"hdiv"`` in the
    H(div) norm M_S + B^T M_V^{-1} B.  Dense; intended for small meshes.
    """
    B0 = ops.B0.toarray()
    Mv = ops.M_V.toarray()
    if norm == "l2":
        X = ops.ms_lu.solve(B0.T)
    elif norm == "hdiv":
        Mvi_B = np.linalg.solve(Mv, B0)
        H = ops.Ms0.toarray() + B0.T @ Mvi_B
        X = np.linalg.solve(H, B0.T)
    else:
        raise InvalidParameterError(f"unknown norm {norm!r}")
    A = B0 @ X
    A = 0.5 * (A + A.T)
    try:
        lam = sla.eigh(A, Mv, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"eigensolver failed: {exc}", residual=np.inf) from exc
    # the constant pressure mode is always in the kernel
    lam = np.sort(lam)[1:]
    if lam[0] <= 0:
        return 0.0
    return float(np.sqrt(lam[0]))


def dump_matrices(ops: OperatorSet, directory) -> list:
    """Write every operator in Matrix Market format; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, A in ops.matrices().items():
        p = os.path.join(directory, f"{name}.mtx")
        scipy.io.mmwrite(p, sp.coo_matrix(A))
        paths.append(p)
    return paths
