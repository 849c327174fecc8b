"""Spectral verification: mode census, projection kernels, frequencies."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import elements as el
from . import operators as op
from .errors import SolverFailure
from .mesh import Mesh


def generator_blocks(ops: op.OperatorSet, c2: float):
    """(N, J) with N x_t = J x, N SPD and J skew, on free DOFs.

    x = (u, eta); the eta rows are scaled by c^2 so that N is the energy
    inner product.
    """
    N = sp.block_diag([ops.Ms0, c2 * ops.M_V], format="csr")
    J = sp.bmat([[-ops.C0, c2 * ops.B0.T], [-c2 * ops.B0, None]], format="csr")
    return N, J


@dataclass(frozen=True)
class ModeCensus:
    zero_modes: int
    ig_modes: int
    spectrum: np.ndarray  # sorted |omega|
    frequencies: np.ndarray  # signed omega, sorted
    expected_zero: int
    tol_zero: float
    max_real_part: float  # relative, from a general eigensolve
    pairing_error: float  # relative mismatch of +omega / -omega pairs

    @property
    def n_modes(self):
        return len(self.spectrum)

    @property
    def nonzero_modes(self):
        return self.n_modes - self.zero_modes


def boundary_components(mesh: Mesh) -> int:
    """Number of connected components of the mesh boundary."""
    be = mesh.boundary_edges
    if len(be) == 0:
        return 0
    from scipy.sparse.csgraph import connected_components

    ends = mesh.edges[be]
    verts, inv = np.unique(ends.ravel(), return_inverse=True)
    inv = inv.reshape(-1, 2)
    g = sp.coo_matrix((np.ones(len(inv)), (inv[:, 0], inv[:, 1])), shape=(len(verts),) * 2)
    return int(connected_components(g, directed=False)[0])


def expected_steady_modes(ops: op.OperatorSet) -> int:
    """Count of geostrophic steady modes on an f-plane.

    Closed: nonconstant psi (dim E - 1) plus the constant elevation.
    Bounded: psi vanishing on the boundary, one extra boundary constant per
    additional boundary component, plus the constant elevation.
    """
    if ops.mesh.is_closed:
        return ops.dim_E
    return len(ops.free_E) + boundary_components(ops.mesh)


def generator_spectrum(ops: op.OperatorSet, config, check_real: bool = True) -> ModeCensus:
    """Dense eigenvalues i omega of the semi-discrete generator."""
    c2 = float(config.c2)
    N, J = generator_blocks(ops, c2)
    Nd, Jd = N.toarray(), J.toarray()
    try:
        L = np.linalg.cholesky(Nd)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure("mass matrix not positive definite", residual=np.inf) from exc
    Li = sla.solve_triangular(L, np.eye(len(L)), lower=True)
    K = Li @ Jd @ Li.T
    K = 0.5 * (K - K.T)
    omega = np.sort(sla.eigvalsh(1j * K).real)
    scale = max(np.max(np.abs(omega)), 1e-300)

    fvals = np.abs(ops.f_coeffs[: ops.mesh.n_vert + ops.mesh.n_edge]) if len(ops.f_coeffs) else np.zeros(1)
    fmax = float(np.max(fvals)) if fvals.size else 0.0
    fmin = float(np.min(fvals)) if fvals.size else 0.0
    tol = 1e-8 * fmax if fmax > 0 else 1e-8 * scale
    absw = np.abs(omega)
    zero = int(np.sum(absw < tol))
    ig = int(np.sum(absw >= fmin * (1 - 1e-8))) if fmin > 0 else int(np.sum(absw >= tol))
    pairing = float(np.max(np.abs(omega + omega[::-1])) / scale)

    max_re = 0.0
    if check_real:
        lam = sla.eigvals(Jd, Nd)
        max_re = float(np.max(np.abs(lam.real)) / scale)
    return ModeCensus(
        zero_modes=zero,
        ig_modes=ig,
        spectrum=np.sort(absw),
        frequencies=omega,
        expected_zero=expected_steady_modes(ops),
        tol_zero=tol,
        max_real_part=max_re,
        pairing_error=pairing,
    )


def skew_defect(ops: op.OperatorSet, c2: float, rng=None, samples: int = 5) -> float:
    """max |x^T J x| / (x^T N x) over random x."""
    rng = np.random.default_rng(rng)
    N, J = generator_blocks(ops, c2)
    worst = 0.0
    for _ in range(samples):
        x = rng.standard_normal(N.shape[0])
        worst = max(worst, abs(x @ (J @ x)) / (x @ (N @ x)))
    return worst


def mixed_laplacian_eigenvalues(ops: op.OperatorSet) -> np.ndarray:
    """Eigenvalues of B M_S^{-1} B^T relative to M_V (dense)."""
    B0 = ops.B0.toarray()
    A = B0 @ ops.ms_lu.solve(B0.T)
    return np.sort(sla.eigh(0.5 * (A + A.T), ops.M_V.toarray(), eigvals_only=True))


def nearest_frequencies(ops: op.OperatorSet, config, target: float, k: int = 12) -> np.ndarray:
    """Frequencies |omega| nearest ``target`` by complex shift-invert."""
    c2 = float(config.c2)
    N, J = generator_blocks(ops, c2)
    sigma = 1j * target
    lu = spla.splu((J - sigma * N).astype(complex).tocsc())
    Nc = N.astype(complex)
    opinv = spla.LinearOperator(N.shape, matvec=lambda x: lu.solve(Nc @ x), dtype=complex)
    try:
        mu = spla.eigs(opinv, k=k, which="LM", return_eigenvectors=False, tol=1e-12)
    except spla.ArpackError as exc:
        raise SolverFailure(f"eigensolver failed: {exc}", residual=np.inf) from exc
    lam = sigma + 1.0 / mu
    return np.sort(np.abs(lam.imag))


def smallest_gravity_frequency(ops: op.OperatorSet, config, target: float) -> float:
    """Smallest |omega| near ``target`` excluding the inertial (k = 0) modes."""
    fmax = float(np.max(np.abs(ops.f_coeffs)))
    w = nearest_frequencies(ops, config, target)
    w = w[w > fmax * (1 + 1e-6) + 1e-12]
    return float(w.min())


# --------------------------------------------------------------------------
# projection kernels


def _mean_zero_basis(M, one):
    """Orthonormal basis of {x : one^T M x = 0}."""
    w = M @ one
    return sla.null_space(w[None, :])


def projection_matrices(ops: op.OperatorSet):
    """Dense matrices of P^E (E x V) and P^V (V x E)."""
    PE = np.column_stack([op.projection_PE(e, ops) for e in np.eye(ops.dim_V)])
    PV = np.column_stack([op.projection_PV(e, ops) for e in np.eye(ops.dim_E)])
    return PE, PV


def kernel_dim(A, rtol: float = 1e-8) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return A.shape[1]
    return int(np.sum(s < rtol * s[0])) + max(A.shape[1] - len(s), 0)


def double_projection_kernels(ops: op.OperatorSet, rtol: float = 1e-8):
    """Kernel dimensions of P^V P^E on mean-zero V and P^E P^V on mean-zero E."""
    PE, PV = projection_matrices(ops)
    ZV = _mean_zero_basis(ops.M_V, ops.one_V)
    ZE = _mean_zero_basis(ops.M_E, ops.one_E)
    return kernel_dim(PV @ PE @ ZV, rtol), kernel_dim(PE @ PV @ ZE, rtol)


def smallest_double_projection_sv(ops: op.OperatorSet) -> float:
    PE, PV = projection_matrices(ops)
    ZV = _mean_zero_basis(ops.M_V, ops.one_V)
    return float(np.linalg.svd(PV @ PE @ ZV, compute_uv=False).min())


def spurious_branch_probe(pair, meshes) -> list:
    """Dimension and kernel report for an element pair over a mesh family.

    ``meshes`` is an iterable of (label, Mesh).  ``pair="bdm1"`` reports
    dimension counts only.
    """
    rows = []
    for label, mesh in meshes:
        census = el.dof_census(mesh, pair)
        row = {
            "pair": pair if isinstance(pair, str) else "custom",
            "mesh": label,
            "dim_E": census["dim_E"],
            "dim_S": census["dim_S"],
            "dim_V": census["dim_V"],
            "dimV_minus_dimE": census["dim_V"] - census["dim_E"],
            "kernel_PVPE": None,
            "kernel_PEPV": None,
        }
        if isinstance(pair, str) and pair.lower() == "bdm1":
            d = census["dim_V"] - census["dim_E"]
            row["verdict"] = "spurious Rossby regime" if d < 0 else ("spurious IG regime" if d > 0 else "balanced count")
            row["S_equals_3V"] = census["dim_S"] == 3 * census["dim_V"]
        else:
            ops = op.assemble(mesh, pair=pair, f=1.0)
            kv, ke = double_projection_kernels(ops)
            row["kernel_PVPE"], row["kernel_PEPV"] = kv, ke
            if kv == 0 and ke == 0:
                row["verdict"] = "no spurious branches"
            elif kv > 0:
                row["verdict"] = "spurious inertia-gravity branch"
            else:
                row["verdict"] = "spurious Rossby branch"
        rows.append(row)
    return rows


def write_report(rows, path) -> None:
    """CSV with one row per (pair, mesh, quantity)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair", "mesh", "quantity", "value"])
        for r in rows:
            for k, v in r.items():
                if k in ("pair", "mesh"):
                    continue
                w.writerow([r["pair"], r["mesh"], k, v])
