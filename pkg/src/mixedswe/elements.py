"""Finite element spaces on flat triangles.

Spaces of the BDFM1-P1DG pair:

* ``STREAM_E``       continuous P2 enriched with the cubic bubble (7 local DOFs)
* ``VELOCITY_BDFM1`` BDM1 (two normal DOFs per edge) plus three interior
  quadratic fields with zero normal trace (9 local DOFs)
* ``PRESSURE_P1DG``  discontinuous P1 (3 local DOFs)

and of the RT0-P0 comparison pair (``STREAM_P1``, ``VELOCITY_RT0``,
``PRESSURE_P0``).

Basis functions are written directly in physical coordinates on each affine
cell (barycentric coordinates times constant tangent-plane vectors), which
spans the same space as Piola-mapping a reference basis.  Local vector DOFs
are oriented by the cell's counter-clockwise traversal; ``DofMap.signs``
converts them to the global edge orientation.
"""

from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import InvalidParameterError, InvariantViolation
from .mesh import EDGE_END, EDGE_START, GeometryKind, Mesh


class SpaceKind(enum.Enum):
    STREAM_E = "E"
    STREAM_P1 = "P1"
    VELOCITY_BDFM1 = "BDFM1"
    PRESSURE_P1DG = "P1DG"
    VELOCITY_RT0 = "RT0"
    PRESSURE_P0 = "P0"


LOCAL_DIM = {
    SpaceKind.STREAM_E: 7,
    SpaceKind.STREAM_P1: 3,
    SpaceKind.VELOCITY_BDFM1: 9,
    SpaceKind.PRESSURE_P1DG: 3,
    SpaceKind.VELOCITY_RT0: 3,
    SpaceKind.PRESSURE_P0: 1,
}
VECTOR_SPACES = frozenset({SpaceKind.VELOCITY_BDFM1, SpaceKind.VELOCITY_RT0})

# (streamfunction, velocity, pressure)
PAIRS = {
    "bdfm1": (SpaceKind.STREAM_E, SpaceKind.VELOCITY_BDFM1, SpaceKind.PRESSURE_P1DG),
    "rt0": (SpaceKind.STREAM_P1, SpaceKind.VELOCITY_RT0, SpaceKind.PRESSURE_P0),
}


def resolve_pair(pair):
    if isinstance(pair, str):
        try:
            return PAIRS[pair.lower()]
        except KeyError:
            raise InvalidParameterError(f"unknown element pair {pair!r}") from None
    return tuple(pair)


# --------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class Quadrature:
    points: np.ndarray  # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,), sum = 1/2 (reference area)
    degree: int


def _orbits(spec):
    pts, wts = [], []
    for w, a, b in spec:
        if b is None:  # (a, a, 1 - 2a)
            c = 1 - 2 * a
            for p in {(a, a, c), (a, c, a), (c, a, a)}:
                pts.append(p)
                wts.append(w)
        else:
            c = 1 - a - b
            for p in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
                pts.append(p)
                wts.append(w)
    return np.array(pts), 0.5 * np.array(wts)


# Dunavant symmetric 12-point rule, exact to degree 6
_DUNAVANT6 = _orbits(
    [
        (0.116786275726379, 0.249286745170910, None),
        (0.050844906370207, 0.063089014491502, None),
        (0.082851075618374, 0.053145049844817, 0.310352451033784),
    ]
)


def triangle_rule(degree: int = 6) -> Quadrature:
    """Quadrature on the reference triangle exact for polynomials of ``degree``.

    Degree <= 6 uses the symmetric 12-point rule; higher degrees use a
    collapsed (Duffy) tensor Gauss rule.
    """
    if degree < 0:
        raise InvalidParameterError("quadrature degree must be >= 0")
    if degree <= 6:
        return Quadrature(*_DUNAVANT6, degree=6)
    n = (degree + 3) // 2
    x, w = roots_legendre(n)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    xi = u.ravel()
    eta = (v * (1 - u)).ravel()
    wt = (wu * wv * (1 - u)).ravel()
    pts = np.column_stack([1 - xi - eta, xi, eta])
    return Quadrature(pts, wt, degree)


def edge_rule(npts: int):
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = roots_legendre(npts)
    return 0.5 * (x + 1), 0.5 * w


# --------------------------------------------------------------------------
# per-cell frames


@dataclass(frozen=True)
class Frames:
    """Vectorised affine geometry of every cell of a mesh."""

    X: np.ndarray  # (nf, 3, 3) vertex coordinates
    area: np.ndarray  # (nf,)
    normal: np.ndarray  # (nf, 3) unit cell normal k
    tangent: np.ndarray  # (nf, 3, 3) unit tangent of local edge i (ccw)
    length: np.ndarray  # (nf, 3)
    outward: np.ndarray  # (nf, 3, 3) outward unit normal of local edge i
    grad_lambda: np.ndarray  # (nf, 3, 3) gradient of barycentric i

    def points(self, bary):
        """Physical coordinates (nf, nq, 3) of barycentric points (nq, 3)."""
        return np.einsum("qm,cmd->cqd", bary, self.X)


_FRAMES = weakref.WeakKeyDictionary()


def frames(mesh: Mesh) -> Frames:
    try:
        return _FRAMES[mesh]
    except KeyError:
        pass
    X = mesh.cell_coords
    cr = np.cross(X[:, 1] - X[:, 0], X[:, 2] - X[:, 0])
    two_area = np.linalg.norm(cr, axis=1)
    if np.any(two_area <= 0):
        raise InvariantViolation("degenerate cell")
    k = cr / two_area[:, None]
    evec = X[:, EDGE_END] - X[:, EDGE_START]
    length = np.linalg.norm(evec, axis=2)
    t = evec / length[..., None]
    n = np.cross(t, k[:, None, :])
    grad = -n * (length / two_area[:, None])[..., None]
    fr = Frames(X, 0.5 * two_area, k, t, length, n, grad)
    _FRAMES[mesh] = fr
    return fr


# --------------------------------------------------------------------------
# DOF maps


@dataclass(frozen=True)
class DofMap:
    """Local-to-global DOF numbering of one space on one mesh."""

    space: SpaceKind
    cell_dofs: np.ndarray  # (nf, ldim)
    signs: np.ndarray  # (nf, ldim) orientation factors (+1/-1)
    ndofs: int
    boundary_dofs: np.ndarray  # DOFs fixed by u.n = 0 or living on the boundary

    @property
    def local_dim(self) -> int:
        return self.cell_dofs.shape[1]


def dofmap(space: SpaceKind, mesh: Mesh) -> DofMap:
    nf, nv, ne = mesh.n_face, mesh.n_vert, mesh.n_edge
    ce = mesh.cell_edges
    sg = mesh.cell_edge_signs.astype(float)
    bedges = mesh.boundary_edges
    if space is SpaceKind.STREAM_E:
        dofs = np.hstack([mesh.cells, nv + ce, (nv + ne + np.arange(nf))[:, None]])
        signs = np.ones(dofs.shape)
        bnd = np.concatenate([mesh.boundary_vertices, nv + bedges])
        n = nv + ne + nf
    elif space is SpaceKind.STREAM_P1:
        dofs = mesh.cells.copy()
        signs = np.ones(dofs.shape)
        bnd = mesh.boundary_vertices
        n = nv
    elif space is SpaceKind.PRESSURE_P1DG:
        dofs = 3 * np.arange(nf)[:, None] + np.arange(3)
        signs = np.ones(dofs.shape)
        bnd = np.array([], dtype=np.int64)
        n = 3 * nf
    elif space is SpaceKind.PRESSURE_P0:
        dofs = np.arange(nf)[:, None]
        signs = np.ones(dofs.shape)
        bnd = np.array([], dtype=np.int64)
        n = nf
    elif space is SpaceKind.VELOCITY_BDFM1:
        dofs = np.empty((nf, 9), dtype=np.int64)
        flip = (sg < 0).astype(np.int64)
        dofs[:, 0:6:2] = 2 * ce + flip  # node at the local start vertex
        dofs[:, 1:6:2] = 2 * ce + 1 - flip  # node at the local end vertex
        dofs[:, 6:] = 2 * ne + 3 * np.arange(nf)[:, None] + np.arange(3)
        signs = np.hstack([np.repeat(sg, 2, axis=1), sg])
        bnd = np.sort(np.concatenate([2 * bedges, 2 * bedges + 1]))
        n = 2 * ne + 3 * nf
    elif space is SpaceKind.VELOCITY_RT0:
        dofs = ce.copy()
        signs = sg.copy()
        bnd = bedges.copy()
        n = ne
    else:  # pragma: no cover
        raise InvalidParameterError(f"unsupported space {space}")
    return DofMap(space, dofs.astype(np.int64), signs, int(n), np.asarray(bnd, dtype=np.int64))


# --------------------------------------------------------------------------
# basis evaluation

# vertex carrying BDFM1 normal DOF 2i+s
_NODE_VERTEX = np.array([EDGE_START[0], EDGE_END[0], EDGE_START[1], EDGE_END[1], EDGE_START[2], EDGE_END[2]])
_NODE_EDGE = np.repeat(np.arange(3), 2)


def _bdm_vectors(fr: Frames):
    """Constant vectors a with phi_{i,v} = lambda_v a (nf, 6, 3)."""
    i = _NODE_EDGE
    v = _NODE_VERTEX
    j = 3 - i - v  # the other edge through v
    tj = fr.tangent[:, j]
    ni = fr.outward[:, i]
    return tj / np.einsum("cld,cld->cl", tj, ni)[..., None]


def _dlambda_e(L):
    """Derivatives of the E basis w.r.t. barycentrics, (nq, 7, 3)."""
    nq = len(L)
    d = np.zeros((nq, 7, 3))
    for k in range(3):
        d[:, k, k] = 4 * L[:, k] - 1
    for i in range(3):
        a, b = EDGE_START[i], EDGE_END[i]
        d[:, 3 + i, a] = 4 * L[:, b]
        d[:, 3 + i, b] = 4 * L[:, a]
    d[:, 6, 0] = 27 * L[:, 1] * L[:, 2]
    d[:, 6, 1] = 27 * L[:, 0] * L[:, 2]
    d[:, 6, 2] = 27 * L[:, 0] * L[:, 1]
    return d


def basis_values(space: SpaceKind, fr: Frames, L) -> np.ndarray:
    """Basis values at barycentric points L (nq, 3).

    Returns (nf, nq, ldim) for scalar spaces and (nf, nq, ldim, 3) for
    vector spaces, in local orientation.
    """
    L = np.atleast_2d(L)
    nf = len(fr.area)
    if space is SpaceKind.STREAM_E:
        vals = np.empty((len(L), 7))
        vals[:, :3] = L * (2 * L - 1)
        for i in range(3):
            vals[:, 3 + i] = 4 * L[:, EDGE_START[i]] * L[:, EDGE_END[i]]
        vals[:, 6] = 27 * L.prod(axis=1)
        return np.broadcast_to(vals, (nf,) + vals.shape)
    if space in (SpaceKind.STREAM_P1, SpaceKind.PRESSURE_P1DG):
        return np.broadcast_to(L, (nf,) + L.shape)
    if space is SpaceKind.PRESSURE_P0:
        return np.ones((nf, len(L), 1))
    if space is SpaceKind.VELOCITY_BDFM1:
        a = _bdm_vectors(fr)
        out = np.empty((nf, len(L), 9, 3))
        out[:, :, :6] = L[None, :, _NODE_VERTEX, None] * a[:, None]
        bub = 4 * L[:, EDGE_START] * L[:, EDGE_END]  # (nq, 3)
        out[:, :, 6:] = bub[None, :, :, None] * fr.tangent[:, None]
        return out
    if space is SpaceKind.VELOCITY_RT0:
        x = fr.points(L)
        return (x[:, :, None, :] - fr.X[:, None, :, :]) / (2 * fr.area)[:, None, None, None]
    raise InvalidParameterError(f"unsupported space {space}")


def basis_derivatives(space: SpaceKind, fr: Frames, L) -> np.ndarray:
    """Gradients (nf, nq, ldim, 3) of scalar bases or divergences
    (nf, nq, ldim) of vector bases."""
    L = np.atleast_2d(L)
    nf = len(fr.area)
    if space is SpaceKind.STREAM_E:
        return np.einsum("qjm,cmd->cqjd", _dlambda_e(L), fr.grad_lambda)
    if space in (SpaceKind.STREAM_P1, SpaceKind.PRESSURE_P1DG):
        return np.broadcast_to(fr.grad_lambda[:, None], (nf, len(L), 3, 3))
    if space is SpaceKind.PRESSURE_P0:
        return np.zeros((nf, len(L), 1, 3))
    if space is SpaceKind.VELOCITY_BDFM1:
        a = _bdm_vectors(fr)
        out = np.empty((nf, len(L), 9))
        gl = fr.grad_lambda
        out[:, :, :6] = np.einsum("cld,cld->cl", gl[:, _NODE_VERTEX], a)[:, None, :]
        ta = np.einsum("cid,cid->ci", fr.tangent, gl[:, EDGE_START])  # t_i . grad la
        tb = np.einsum("cid,cid->ci", fr.tangent, gl[:, EDGE_END])
        out[:, :, 6:] = 4 * (L[None, :, EDGE_END] * ta[:, None] + L[None, :, EDGE_START] * tb[:, None])
        return out
    if space is SpaceKind.VELOCITY_RT0:
        return np.broadcast_to((1.0 / fr.area)[:, None, None], (nf, len(L), 3)).copy()
    raise InvalidParameterError(f"unsupported space {space}")


def curl_values(space: SpaceKind, fr: Frames, L) -> np.ndarray:
    """k x grad of a scalar basis, (nf, nq, ldim, 3)."""
    g = basis_derivatives(space, fr, L)
    return np.cross(fr.normal[:, None, None, :], g)


# --------------------------------------------------------------------------
# reference tabulation


@dataclass(frozen=True)
class ElementTabulation:
    space: SpaceKind
    quad_points: np.ndarray  # barycentric (nq, 3)
    quad_weights: np.ndarray  # (nq,), sum 1/2
    basis_values: np.ndarray  # (nq, ldim) or (nq, ldim, 2)
    basis_derivatives: np.ndarray  # gradients (nq, ldim, 2) or divergences (nq, ldim)


def reference_mesh() -> Mesh:
    X = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    return Mesh.from_cells(X, [[0, 1, 2]], GeometryKind.PLANE_WITH_BOUNDARY)


def tabulate(space: SpaceKind, degree: int = 6) -> ElementTabulation:
    """Tabulate a space on the reference triangle (0,0), (1,0), (0,1)."""
    if degree < 6:
        raise InvalidParameterError("tabulation requires quadrature degree >= 6")
    q = triangle_rule(degree)
    fr = frames(reference_mesh())
    vals = np.asarray(basis_values(space, fr, q.points))[0]
    ders = np.asarray(basis_derivatives(space, fr, q.points))[0]
    if space in VECTOR_SPACES:
        vals = vals[..., :2]
    else:
        ders = ders[..., :2]
    return ElementTabulation(space, q.points, q.weights, vals, ders)


# --------------------------------------------------------------------------
# local DOF functionals (nodal interpolation)


def _node_points(space):
    """Barycentric evaluation points used by the nodal functionals."""
    if space is SpaceKind.VELOCITY_BDFM1:
        pts = np.eye(3)[_NODE_VERTEX]
        mids = np.zeros((3, 3))
        for i in range(3):
            mids[i, EDGE_START[i]] = mids[i, EDGE_END[i]] = 0.5
        return np.vstack([pts, mids])
    if space is SpaceKind.VELOCITY_RT0:
        mids = np.zeros((3, 3))
        for i in range(3):
            mids[i, EDGE_START[i]] = mids[i, EDGE_END[i]] = 0.5
        return mids
    raise InvalidParameterError(f"no nodal functionals for {space}")


def apply_functionals(space, fr: Frames, values):
    """Apply the local nodal functionals to vector values at the node points.

    ``values`` has shape (nf, npts, ..., 3).  BDFM1: outward normal component
    at the six edge nodes and ccw tangential component at the three edge
    midpoints.  RT0: outward flux through each edge (normal * length).
    """
    if space is SpaceKind.VELOCITY_BDFM1:
        n = fr.outward[:, _NODE_EDGE]  # (nf, 6, 3)
        t = fr.tangent
        extra = values.ndim - 3
        sh = (slice(None), slice(None)) + (None,) * extra + (slice(None),)
        nrm = np.sum(values[:, :6] * n[sh], axis=-1)
        tan = np.sum(values[:, 6:] * t[sh], axis=-1)
        return np.concatenate([nrm, tan], axis=1)
    if space is SpaceKind.VELOCITY_RT0:
        extra = values.ndim - 3
        sh = (slice(None), slice(None)) + (None,) * extra + (slice(None),)
        return np.sum(values * fr.outward[sh], axis=-1) * fr.length[(slice(None), slice(None)) + (None,) * extra]
    raise InvalidParameterError(f"no nodal functionals for {space}")


def interpolation_matrix(space, fr: Frames):
    """Local matrices N[c, i, j] = functional_i(basis_j), (nf, ldim, ldim)."""
    pts = _node_points(space)
    vals = basis_values(space, fr, pts)  # (nf, npts, ldim, 3)
    return apply_functionals(space, fr, vals)


# --------------------------------------------------------------------------
# global gathers


def scatter_average(dm: DofMap, local) -> np.ndarray:
    """Combine per-cell coefficients (already in global orientation) into a
    global vector, averaging DOFs shared between cells."""
    acc = np.zeros(dm.ndofs)
    cnt = np.zeros(dm.ndofs)
    np.add.at(acc, dm.cell_dofs.ravel(), np.asarray(local).ravel())
    np.add.at(cnt, dm.cell_dofs.ravel(), 1.0)
    return acc / np.maximum(cnt, 1.0)


def gather(dm: DofMap, coeffs) -> np.ndarray:
    """Per-cell coefficients in local orientation, (nf, ldim)."""
    return np.asarray(coeffs)[dm.cell_dofs] * dm.signs


# --------------------------------------------------------------------------
# projections of analytic fields


def _eval_scalar(fn, x):
    shp = x.shape[:-1]
    return np.asarray(fn(x.reshape(-1, 3)), dtype=float).reshape(shp)


def _eval_vector(fn, x):
    shp = x.shape[:-1]
    return np.asarray(fn(x.reshape(-1, 3)), dtype=float).reshape(shp + (3,))


def project_pi_v(phi, mesh: Mesh, space=SpaceKind.PRESSURE_P1DG, degree: int = 14) -> np.ndarray:
    """Cell-wise L2 projection of a scalar function onto P1DG (or P0)."""
    fr = frames(mesh)
    q = triangle_rule(degree)
    w = q.weights[None, :] * (2 * fr.area)[:, None]
    vals = np.asarray(basis_values(space, fr, q.points))
    f = _eval_scalar(phi, fr.points(q.points))
    M = np.einsum("cq,cqi,cqj->cij", w, vals, vals)
    rhs = np.einsum("cq,cqi,cq->ci", w, vals, f)
    loc = np.linalg.solve(M, rhs[..., None])[..., 0]
    return loc.reshape(-1)


def project_pi_e(psi, mesh: Mesh, degree: int = 14, edge_points: int = 8) -> np.ndarray:
    """Projection onto E fixing vertex values, edge means and cell means."""
    fr = frames(mesh)
    dm = dofmap(SpaceKind.STREAM_E, mesh)
    nf = mesh.n_face
    q = triangle_rule(degree)
    s, ws = edge_rule(edge_points)
    w = q.weights[None, :] * (2 * fr.area)[:, None]

    V = np.zeros((nf, 7, 7))
    r = np.zeros((nf, 7))
    # vertex values
    V[:, :3] = np.asarray(basis_values(SpaceKind.STREAM_E, fr, np.eye(3)))
    r[:, :3] = _eval_scalar(psi, fr.X)
    # edge integrals
    for i in range(3):
        L = np.zeros((len(s), 3))
        L[:, EDGE_START[i]] = 1 - s
        L[:, EDGE_END[i]] = s
        bv = np.asarray(basis_values(SpaceKind.STREAM_E, fr, L))  # (nf, ns, 7)
        le = fr.length[:, i][:, None]
        V[:, 3 + i] = np.einsum("q,cqj->cj", ws, bv) * le
        r[:, 3 + i] = (_eval_scalar(psi, fr.points(L)) @ ws) * le[:, 0]
    # cell integral
    bv = np.asarray(basis_values(SpaceKind.STREAM_E, fr, q.points))
    V[:, 6] = np.einsum("cq,cqj->cj", w, bv)
    r[:, 6] = np.einsum("cq,cq->c", w, _eval_scalar(psi, fr.points(q.points)))
    loc = _solve_local(V, r)
    return scatter_average(dm, loc)


def _solve_local(A, b):
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        raise InvariantViolation("singular local projection system (degenerate cell)") from None


def pi_s_system(fr: Frames, L_cell, w_cell, s, ws):
    """Local moment matrices of the BDFM1 projection.

    Rows: 6 edge moments against P1(e), 2 moments against grad P1(K),
    1 moment against k x (x - x_c).
    """
    nf = len(fr.area)
    sp = SpaceKind.VELOCITY_BDFM1
    V = np.zeros((nf, 9, 9))
    for i in range(3):
        L = np.zeros((len(s), 3))
        L[:, EDGE_START[i]] = 1 - s
        L[:, EDGE_END[i]] = s
        bv = basis_values(sp, fr, L)  # (nf, ns, 9, 3)
        un = np.einsum("cqjd,cd->cqj", bv, fr.outward[:, i])
        le = fr.length[:, i][:, None]
        V[:, 2 * i] = np.einsum("q,q,cqj->cj", ws, 1 - s, un) * le
        V[:, 2 * i + 1] = np.einsum("q,q,cqj->cj", ws, s, un) * le
    bv = basis_values(sp, fr, L_cell)
    V[:, 6:8] = np.einsum("cq,cmd,cqjd->cmj", w_cell, fr.grad_lambda[:, 1:], bv)
    cb = _rotated_position(fr, L_cell)
    V[:, 8] = np.einsum("cq,cqd,cqjd->cj", w_cell, cb, bv)
    return V


def _rotated_position(fr, L):
    """k x (x - x_c): its moment sees only edge and cell means of a streamfunction."""
    r = fr.points(L) - fr.X.mean(axis=1)[:, None, :]
    return np.cross(fr.normal[:, None, :], r)


def project_pi_s(u, mesh: Mesh, degree: int = 14, edge_points: int = 8) -> np.ndarray:
    """Commuting BDFM1 projection of a vector field u(x) -> (n, 3).

    Per cell, matches the P1 moments of the normal trace on each edge, the
    moments against gradients of P1 and against k x (x - x_c).  Components
    of u normal to a cell are ignored.
    """
    fr = frames(mesh)
    dm = dofmap(SpaceKind.VELOCITY_BDFM1, mesh)
    q6 = triangle_rule(6)
    w6 = q6.weights[None, :] * (2 * fr.area)[:, None]
    s6, ws6 = edge_rule(4)
    V = pi_s_system(fr, q6.points, w6, s6, ws6)

    q = triangle_rule(degree)
    w = q.weights[None, :] * (2 * fr.area)[:, None]
    s, ws = edge_rule(edge_points)
    r = np.zeros((mesh.n_face, 9))
    for i in range(3):
        L = np.zeros((len(s), 3))
        L[:, EDGE_START[i]] = 1 - s
        L[:, EDGE_END[i]] = s
        un = np.einsum("cqd,cd->cq", _eval_vector(u, fr.points(L)), fr.outward[:, i])
        le = fr.length[:, i]
        r[:, 2 * i] = (un * (1 - s)) @ ws * le
        r[:, 2 * i + 1] = (un * s) @ ws * le
    uq = _eval_vector(u, fr.points(q.points))
    r[:, 6:8] = np.einsum("cq,cmd,cqd->cm", w, fr.grad_lambda[:, 1:], uq)
    r[:, 8] = np.einsum("cq,cqd,cqd->c", w, _rotated_position(fr, q.points), uq)
    loc = _solve_local(V, r)
    return scatter_average(dm, loc * dm.signs)


def dof_census(mesh: Mesh, pair="bdfm1") -> dict:
    """Global dimensions of an element pair on a mesh.

    ``pair`` is "bdfm1", "rt0" or "bdm1" (counting only: BDM1 velocity with
    P0 pressure and continuous P2 streamfunction).
    """
    chi = mesh.euler_characteristic
    nv, ne, nf = mesh.n_vert, mesh.n_edge, mesh.n_face
    if isinstance(pair, str) and pair.lower() == "bdm1":
        dim_e, dim_s, dim_v = nv + ne, 2 * ne, nf
    else:
        E, S, V = resolve_pair(pair)
        dim_e = dofmap(E, mesh).ndofs
        dim_s = dofmap(S, mesh).ndofs
        dim_v = dofmap(V, mesh).ndofs
    return {
        "n_vert": nv,
        "n_edge": ne,
        "n_face": nf,
        "euler": chi,
        "dim_E": dim_e,
        "dim_S": dim_s,
        "dim_V": dim_v,
        "S_minus_2V": dim_s - 2 * dim_v,
        "E_plus_V_minus_S_minus_chi": dim_e + dim_v - dim_s - chi,
    }
