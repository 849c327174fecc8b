"""Oriented triangulations of the periodic plane, bounded planar regions,
cylinders and the icosahedral sphere.

Every cell is a flat triangle.  Cells keep their own (unwrapped) vertex
coordinates in ``cell_coords`` so that periodic meshes can alias vertices
while each cell still sees an undistorted triangle.
"""

from __future__ import annotations

import enum
import io
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay

from .errors import InvalidParameterError, InvariantViolation, MeshParseError

__all__ = [
    "GeometryKind",
    "Mesh",
    "CellGeometry",
    "build_periodic_square",
    "build_channel",
    "build_square",
    "build_disk",
    "build_cylinder",
    "build_icosahedral_sphere",
    "cell_geometry",
    "piola",
    "load_mesh",
    "load_gmsh",
    "dump_mesh",
]


class GeometryKind(enum.Enum):
    PERIODIC_PLANE = "periodic-plane"
    PLANE_WITH_BOUNDARY = "plane-with-boundary"
    CYLINDER = "cylinder"
    SPHERE = "sphere"


# Expected Euler characteristic; bounded planar regions vary (disk 1, channel 0).
EULER = {
    GeometryKind.PERIODIC_PLANE: 0,
    GeometryKind.CYLINDER: 0,
    GeometryKind.SPHERE: 2,
}
CLOSED_KINDS = frozenset({GeometryKind.PERIODIC_PLANE, GeometryKind.SPHERE})

# local edge i is opposite local vertex i and runs START[i] -> END[i]
EDGE_START = np.array([1, 2, 0])
EDGE_END = np.array([2, 0, 1])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Oriented triangulation.

    Attributes:
        vertices: (n_vert, 3) canonical vertex positions.
        cells: (n_face, 3) vertex indices, counter-clockwise about the
            cell normal.
        cell_coords: (n_face, 3, 3) per-cell vertex coordinates (unwrapped
            across periodic seams).
        edges: (n_edge, 2) vertex indices, global direction low -> high.
        cell_edges: (n_face, 3) edge index of local edge i (opposite vertex i).
        cell_edge_signs: (n_face, 3) +1 when the cell's counter-clockwise
            traversal agrees with the global edge direction, else -1.
        edge_cells: (n_edge, 2) incident cells, -1 where absent.
        kind: geometry classification.
        periods: translation vectors of periodic identifications.
    """

    vertices: np.ndarray
    cells: np.ndarray
    cell_coords: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    cell_edge_signs: np.ndarray
    edge_cells: np.ndarray
    kind: GeometryKind
    periods: tuple = field(default=())

    @property
    def n_vert(self) -> int:
        return len(self.vertices)

    @property
    def n_edge(self) -> int:
        return len(self.edges)

    @property
    def n_face(self) -> int:
        return len(self.cells)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vert - self.n_edge + self.n_face

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_cells[:, 1] < 0)

    @property
    def is_closed(self) -> bool:
        return len(self.boundary_edges) == 0

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.edges[self.boundary_edges])

    @cached_property
    def areas(self) -> np.ndarray:
        X = self.cell_coords
        cr = np.cross(X[:, 1] - X[:, 0], X[:, 2] - X[:, 0])
        return 0.5 * np.linalg.norm(cr, axis=1)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.cell_coords.mean(axis=1)

    def checksum(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for a in (self.cells, self.cell_coords, self.edges):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]

    @classmethod
    def from_cells(cls, cell_coords, cells, kind, periods=(), orient=True):
        """Build connectivity and orientation data from per-cell vertices.

        Args:
            cell_coords: (n_face, 3, 3) coordinates of each cell's vertices.
            cells: (n_face, 3) canonical vertex index of each cell vertex.
            kind: GeometryKind.
            periods: periodic translation vectors (empty if none).
            orient: reorder cell vertices so that every cell is positively
                oriented for its geometry kind.
        """
        X = np.array(cell_coords, dtype=float)
        cells = np.array(cells, dtype=np.int64)
        if X.ndim != 3 or X.shape[1:] != (3, 3) or cells.shape != X.shape[:2]:
            raise InvalidParameterError("cell_coords must be (n,3,3) and cells (n,3)")
        if orient:
            flip = _orientation(X, kind) < 0
            X[flip] = X[flip][:, [0, 2, 1]]
            cells[flip] = cells[flip][:, [0, 2, 1]]

        # canonical position: the occurrence with the smallest coordinate sum
        flat = X.reshape(-1, 3)
        order = np.lexsort((flat.sum(axis=1), cells.ravel()))
        ids_sorted = cells.ravel()[order]
        keep = np.ones(len(order), dtype=bool)
        keep[1:] = ids_sorted[1:] != ids_sorted[:-1]
        vertices = np.zeros((int(cells.max()) + 1, 3))
        vertices[ids_sorted[keep]] = flat[order[keep]]

        a = cells[:, EDGE_START]
        b = cells[:, EDGE_END]
        if np.any(a == b):
            raise InvariantViolation("an edge joins a vertex to itself")
        sign = np.where(a < b, 1, -1)
        keys = [np.minimum(a, b).ravel(), np.maximum(a, b).ravel()]
        if periods:
            # parallel edges between the same vertex pair differ by a period
            d = (X[:, EDGE_END] - X[:, EDGE_START]) * sign[..., None]
            scale = np.abs(d).max()
            q = np.rint(d.reshape(-1, 3) / scale * 1e6).astype(np.int64)
            keys += [q[:, 0], q[:, 1], q[:, 2]]
        keys = np.column_stack(keys)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        edges = uniq[:, :2].copy()
        cell_edges = inverse.reshape(-1, 3)

        counts = np.bincount(inverse, minlength=len(edges))
        if np.any(counts > 2):
            raise InvariantViolation("non-manifold mesh: an edge has more than 2 cells")
        order = np.argsort(inverse, kind="stable")
        edge_cells = -np.ones((len(edges), 2), dtype=np.int64)
        first = np.ones(len(order), dtype=bool)
        first[1:] = inverse[order][1:] != inverse[order][:-1]
        slot = np.where(first, 0, 1)
        edge_cells[inverse[order], slot] = order // 3

        mesh = cls(
            vertices=vertices,
            cells=cells,
            cell_coords=X,
            edges=edges,
            cell_edges=cell_edges,
            cell_edge_signs=sign.astype(np.int8),
            edge_cells=edge_cells,
            kind=kind,
            periods=tuple(tuple(float(c) for c in p) for p in periods),
        )
        validate(mesh)
        return mesh


def _orientation(X, kind):
    cr = np.cross(X[:, 1] - X[:, 0], X[:, 2] - X[:, 0])
    if kind is GeometryKind.SPHERE:
        return np.einsum("ij,ij->i", cr, X.mean(axis=1))
    if kind is GeometryKind.CYLINDER:
        radial = X.mean(axis=1).copy()
        radial[:, 2] = 0.0
        return np.einsum("ij,ij->i", cr, radial)
    return cr[:, 2]


def validate(mesh: Mesh) -> None:
    """Check the mesh invariants, raising InvariantViolation on failure."""
    if np.any(mesh.areas <= 1e-14 * max(mesh.areas.max(), 1e-300)):
        raise InvariantViolation("degenerate (zero-area) cell")
    if np.any(_orientation(mesh.cell_coords, mesh.kind) <= 0):
        raise InvariantViolation("cell with non-positive orientation")
    interior = mesh.edge_cells[:, 1] >= 0
    ec = mesh.edge_cells[interior]
    # signs of the two incident cells must be opposite
    s = np.zeros(ec.shape, dtype=int)
    for k in range(2):
        loc = np.argmax(mesh.cell_edges[ec[:, k]] == np.flatnonzero(interior)[:, None], axis=1)
        s[:, k] = mesh.cell_edge_signs[ec[:, k], loc]
    if np.any(s[:, 0] != -s[:, 1]):
        raise InvariantViolation("inconsistent edge orientation between neighbouring cells")
    if mesh.kind in CLOSED_KINDS:
        if not mesh.is_closed:
            raise InvariantViolation(f"{mesh.kind.value} mesh has boundary edges")
        if 2 * mesh.n_edge != 3 * mesh.n_face:
            raise InvariantViolation("closed mesh violates 2 N_edge = 3 N_face")
    if mesh.kind in EULER and mesh.euler_characteristic != EULER[mesh.kind]:
        raise InvariantViolation(
            f"Euler characteristic {mesh.euler_characteristic} != {EULER[mesh.kind]} "
            f"for {mesh.kind.value}"
        )


# --------------------------------------------------------------------------
# builders


def build_periodic_square(n: int, lx: float = 1.0, ly: float = 1.0) -> Mesh:
    """Doubly periodic n x n square grid, each square split into 2 triangles."""
    if n < 2:
        raise InvalidParameterError("periodic square needs n >= 2")
    return _structured(n, n, lx, ly, periodic_x=True, periodic_y=True)


def build_channel(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> Mesh:
    """Rectangle periodic in x with solid walls at y = 0 and y = ly."""
    if nx < 2 or ny < 1:
        raise InvalidParameterError("channel needs nx >= 2 and ny >= 1")
    return _structured(nx, ny, lx, ly, periodic_x=True, periodic_y=False)


def build_square(n: int, lx: float = 1.0, ly: float = 1.0, jitter: float = 0.0, seed=None) -> Mesh:
    """Bounded rectangle; interior vertices optionally jittered by a
    fraction of the grid spacing to make the mesh irregular."""
    if n < 1:
        raise InvalidParameterError("square needs n >= 1")
    if not 0.0 <= jitter < 0.5:
        raise InvalidParameterError("jitter must lie in [0, 0.5)")
    mesh = _structured(n, n, lx, ly, periodic_x=False, periodic_y=False, alternate=True)
    if jitter == 0.0:
        return mesh
    rng = np.random.default_rng(seed)
    v = mesh.vertices.copy()
    inner = np.ones(len(v), dtype=bool)
    inner[mesh.boundary_vertices] = False
    v[inner, :2] += jitter * rng.uniform(-1, 1, size=(inner.sum(), 2)) * [lx / n, ly / n]
    return Mesh.from_cells(v[mesh.cells], mesh.cells, mesh.kind)


def _structured(nx, ny, lx, ly, periodic_x, periodic_y, alternate=False):
    mx = nx if periodic_x else nx + 1
    my = ny if periodic_y else ny + 1

    def vid(i, j):
        return (i % nx if periodic_x else i) + mx * (j % ny if periodic_y else j)

    coords, ids = [], []
    for j in range(ny):
        for i in range(nx):
            c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            if alternate and (i + j) % 2:
                tris = [(0, 1, 3), (1, 2, 3)]
            else:
                tris = [(0, 1, 2), (0, 2, 3)]
            for t in tris:
                coords.append([[c[k][0] * lx / nx, c[k][1] * ly / ny, 0.0] for k in t])
                ids.append([vid(*c[k]) for k in t])
    periods = []
    if periodic_x:
        periods.append((lx, 0.0, 0.0))
    if periodic_y:
        periods.append((0.0, ly, 0.0))
    kind = (
        GeometryKind.PERIODIC_PLANE
        if periodic_x and periodic_y
        else GeometryKind.PLANE_WITH_BOUNDARY
    )
    return Mesh.from_cells(np.array(coords), np.array(ids), kind, periods=periods)


def build_disk(n_rings: int = 15, radius: float = 1.0, grading: float = 1.2) -> Mesh:
    """Unstructured disk mesh refined towards the boundary.

    Points are laid on concentric rings whose spacing shrinks towards the
    rim (``grading`` = 0 gives uniform rings), then Delaunay triangulated.
    """
    if n_rings < 2:
        raise InvalidParameterError("disk needs at least 2 rings")
    s = np.linspace(0.0, 1.0, n_rings + 1)
    r = np.tanh(grading * s) / np.tanh(grading) if grading > 0 else s
    pts = [np.zeros(2)]
    golden = np.pi * (3.0 - np.sqrt(5.0))
    for k in range(1, n_rings + 1):
        dr = r[k] - r[k - 1]
        m = max(6, int(round(2 * np.pi * r[k] / dr)))
        th = golden * k + 2 * np.pi * np.arange(m) / m
        pts.append(np.column_stack([r[k] * np.cos(th), r[k] * np.sin(th)]))
    pts = np.vstack(pts) * radius
    tri = Delaunay(pts).simplices
    xyz = np.column_stack([pts, np.zeros(len(pts))])
    return Mesh.from_cells(xyz[tri], tri, GeometryKind.PLANE_WITH_BOUNDARY)


def build_cylinder(n_around: int, n_axial: int, radius: float = 1.0, height: float = 2.0) -> Mesh:
    """Open cylinder of the given radius, axis along z, z in [-h/2, h/2]."""
    if n_around < 3 or n_axial < 1:
        raise InvalidParameterError("cylinder needs n_around >= 3 and n_axial >= 1")
    if radius <= 0 or height <= 0:
        raise InvalidParameterError("cylinder radius and height must be positive")
    th = 2 * np.pi * np.arange(n_around) / n_around
    z = np.linspace(-height / 2, height / 2, n_axial + 1)
    V = np.array([[radius * np.cos(t), radius * np.sin(t), zz] for zz in z for t in th])

    def vid(j, k):
        return j % n_around + n_around * k

    ids = []
    for k in range(n_axial):
        for j in range(n_around):
            c = [vid(j, k), vid(j + 1, k), vid(j + 1, k + 1), vid(j, k + 1)]
            ids += [[c[0], c[1], c[2]], [c[0], c[2], c[3]]]
    ids = np.array(ids)
    return Mesh.from_cells(V[ids], ids, GeometryKind.CYLINDER)


_GOLD = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        [-1, _GOLD, 0], [1, _GOLD, 0], [-1, -_GOLD, 0], [1, -_GOLD, 0],
        [0, -1, _GOLD], [0, 1, _GOLD], [0, -1, -_GOLD], [0, 1, -_GOLD],
        [_GOLD, 0, -1], [_GOLD, 0, 1], [-_GOLD, 0, -1], [-_GOLD, 0, 1],
    ]
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
)


def icosahedral_subdivisions(level: int) -> int:
    """Segments per icosahedron edge: 1 at level 0, 2**(level-1) above."""
    if level < 0:
        raise InvalidParameterError("icosahedral level must be >= 0")
    return 1 if level == 0 else 2 ** (level - 1)


def build_icosahedral_sphere(level: int, radius: float = 1.0) -> Mesh:
    """Icosahedral mesh with vertices projected radially onto the sphere.

    Each icosahedron face is split into s**2 flat triangles with
    s = icosahedral_subdivisions(level), so level 4 gives 8 segments per
    edge and 1280 cells.
    """
    s = icosahedral_subdivisions(level)
    if radius <= 0:
        raise InvalidParameterError("radius must be positive")
    base = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1)[:, None]
    pts, tris = [], []
    for A, B, C in base[_ICO_FACES]:
        index = {}
        for i in range(s + 1):
            for j in range(s + 1 - i):
                index[i, j] = len(pts)
                pts.append(A + (B - A) * i / s + (C - A) * j / s)
        for i in range(s):
            for j in range(s - i):
                tris.append([index[i, j], index[i + 1, j], index[i, j + 1]])
                if i + j < s - 1:
                    tris.append([index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]])
    pts = np.array(pts)
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    _, first, inverse = np.unique(
        np.round(pts, 9), axis=0, return_index=True, return_inverse=True
    )
    inverse = inverse.reshape(-1)
    # renumber in order of first appearance for stable, readable indices
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    ids = rank[inverse][np.array(tris)]
    V = np.zeros((len(order), 3))
    V[rank[inverse]] = pts
    V *= radius
    return Mesh.from_cells(V[ids], ids, GeometryKind.SPHERE)


# --------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class CellGeometry:
    """Affine map data of one flat cell."""

    jacobian: np.ndarray  # (3, 2): reference -> tangent plane
    det_factor: float  # sqrt(det J^T J)
    piola_factor: np.ndarray  # J / det_factor


def cell_geometry(mesh: Mesh, cell: int) -> CellGeometry:
    if not 0 <= cell < mesh.n_face:
        raise InvalidParameterError(f"cell index {cell} out of range")
    X = mesh.cell_coords[cell]
    J = np.column_stack([X[1] - X[0], X[2] - X[0]])
    det = float(np.sqrt(np.linalg.det(J.T @ J)))
    if det <= 0.0:
        raise InvariantViolation(f"degenerate cell {cell}")
    return CellGeometry(jacobian=J, det_factor=det, piola_factor=J / det)


def piola(geom: CellGeometry, vhat) -> np.ndarray:
    """Contravariant Piola map of reference vectors (..., 2) to physical (..., 3)."""
    return np.asarray(vhat) @ geom.piola_factor.T


# --------------------------------------------------------------------------
# file formats


def load_mesh(data, kind=None) -> Mesh:
    """Parse the native ASCII mesh format.

    Format::

        mesh v1
        counts N_vert N_face
        x y z            (N_vert lines)
        i j k            (N_face lines, 0-based)
        periodic         (optional)
        va vb            (vertex vb is identified with va)
    """
    if isinstance(data, bytes):
        data = data.decode()
    lines = [(n + 1, ln.split("#")[0].strip()) for n, ln in enumerate(io.StringIO(data))]
    lines = [(n, ln) for n, ln in lines if ln]
    it = iter(lines)

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise MeshParseError(f"unexpected end of file while reading {what}") from None

    n, ln = take("header")
    if ln.split() != ["mesh", "v1"]:
        raise MeshParseError("expected header 'mesh v1'", n)
    n, ln = take("counts")
    tok = ln.split()
    if len(tok) != 3 or tok[0] != "counts":
        raise MeshParseError("expected 'counts N_vert N_face'", n)
    try:
        nv, nf = int(tok[1]), int(tok[2])
    except ValueError:
        raise MeshParseError("counts must be integers", n) from None
    coords = np.empty((nv, 3))
    for k in range(nv):
        n, ln = take("vertices")
        try:
            coords[k] = [float(t) for t in ln.split()]
        except ValueError:
            raise MeshParseError("vertex line must hold 3 floats", n) from None
    cells = np.empty((nf, 3), dtype=np.int64)
    for k in range(nf):
        n, ln = take("cells")
        try:
            cells[k] = [int(t) for t in ln.split()]
        except ValueError:
            raise MeshParseError("cell line must hold 3 integers", n) from None
        if np.any(cells[k] < 0) or np.any(cells[k] >= nv):
            raise MeshParseError(f"cell references vertex outside 0..{nv - 1}", n)
    pairs = []
    rest = list(it)
    if rest:
        n, ln = rest[0]
        if ln != "periodic":
            raise MeshParseError(f"unexpected content {ln!r}", n)
        for n, ln in rest[1:]:
            try:
                a, b = (int(t) for t in ln.split())
            except ValueError:
                raise MeshParseError("periodic line must hold 2 integers", n) from None
            if not (0 <= a < nv and 0 <= b < nv):
                raise MeshParseError("periodic pair references unknown vertex", n)
            pairs.append((a, b))
    return _assemble_loaded(coords, cells, pairs, kind)


def _assemble_loaded(coords, cells, pairs, kind):
    nv = len(coords)
    used = np.unique(cells)
    if len(used) != nv:
        warnings.warn(f"{nv - len(used)} unreferenced vertices dropped")
    periods = ()
    if pairs:
        p = np.array(pairs)
        g = sps.coo_matrix((np.ones(len(p)), (p[:, 0], p[:, 1])), shape=(nv, nv))
        _, labels = connected_components(g, directed=False)
        shifts = coords[p[:, 1]] - coords[p[:, 0]]
        periods = _lattice(shifts)
    else:
        labels = np.arange(nv)
    # compact numbering over referenced vertices
    lab = labels[cells]
    _, inv = np.unique(lab, return_inverse=True)
    ids = inv.reshape(cells.shape)
    X = coords[cells]
    planar = np.allclose(coords[:, 2], 0.0)
    if kind is None:
        if planar:
            kind = GeometryKind.PLANE_WITH_BOUNDARY
            if pairs and _is_closed(X, ids, periods):
                kind = GeometryKind.PERIODIC_PLANE
        else:
            kind = GeometryKind.CYLINDER
            if _is_closed(X, ids, periods):
                kind = GeometryKind.SPHERE
    elif isinstance(kind, str):
        kind = GeometryKind(kind)
    return Mesh.from_cells(X, ids, kind, periods=periods)


def _is_closed(X, ids, periods):
    a = ids[:, EDGE_START]
    b = ids[:, EDGE_END]
    keys = [np.minimum(a, b).ravel(), np.maximum(a, b).ravel()]
    if periods:
        sign = np.where(a < b, 1, -1)
        d = (X[:, EDGE_END] - X[:, EDGE_START]) * sign[..., None]
        q = np.rint(d.reshape(-1, 3) / np.abs(d).max() * 1e6).astype(np.int64)
        keys += [q[:, 0], q[:, 1], q[:, 2]]
    _, counts = np.unique(np.column_stack(keys), axis=0, return_counts=True)
    return bool(np.all(counts == 2))


def _lattice(shifts):
    """Reduce identification shifts to a set of independent periods."""
    periods = []
    for s in shifts[np.argsort(np.linalg.norm(shifts, axis=1))]:
        if np.linalg.norm(s) == 0:
            continue
        if periods:
            P = np.array(periods).T
            coef, *_ = np.linalg.lstsq(P, s, rcond=None)
            if np.linalg.norm(P @ coef - s) < 1e-9 * np.linalg.norm(s):
                continue
        periods.append(s)
    return tuple(tuple(p) for p in periods)


def load_gmsh(data, kind=None) -> Mesh:
    """Read the triangles of a Gmsh MSH 2.2 ASCII file.

    Only element type 2 (3-node triangle) is used; other element types are
    skipped with a warning.
    """
    if isinstance(data, bytes):
        data = data.decode()
    lines = data.splitlines()
    i = 0
    nodes, tris = {}, []
    skipped = {}
    while i < len(lines):
        tag = lines[i].strip()
        if tag == "$MeshFormat":
            version = lines[i + 1].split()[0]
            if not version.startswith("2"):
                raise MeshParseError(f"unsupported MSH version {version}", i + 2)
            i += 2
        elif tag == "$Nodes":
            try:
                count = int(lines[i + 1])
                for k in range(count):
                    tok = lines[i + 2 + k].split()
                    nodes[int(tok[0])] = [float(t) for t in tok[1:4]]
            except (ValueError, IndexError):
                raise MeshParseError("malformed $Nodes section", i + 2 + k) from None
            i += count + 2
        elif tag == "$Elements":
            try:
                count = int(lines[i + 1])
                for k in range(count):
                    tok = [int(t) for t in lines[i + 2 + k].split()]
                    etype, ntags = tok[1], tok[2]
                    if etype == 2:
                        tris.append((tok[3 + ntags: 6 + ntags], i + 3 + k))
                    else:
                        skipped[etype] = skipped.get(etype, 0) + 1
            except (ValueError, IndexError):
                raise MeshParseError("malformed $Elements section", i + 2 + k) from None
            i += count + 2
        else:
            i += 1
    for etype, cnt in sorted(skipped.items()):
        warnings.warn(f"ignored {cnt} gmsh elements of type {etype}")
    if not tris:
        raise MeshParseError("no triangle elements found")
    ids = sorted(nodes)
    pos = {t: k for k, t in enumerate(ids)}
    cells = []
    for tri, lineno in tris:
        try:
            cells.append([pos[t] for t in tri])
        except KeyError:
            raise MeshParseError("element references unknown node", lineno) from None
    coords = np.array([nodes[t] for t in ids])
    return _assemble_loaded(coords, np.array(cells), [], kind)


def dump_mesh(mesh: Mesh) -> str:
    """Serialise a mesh to the native ASCII format (inverse of load_mesh)."""
    flat = mesh.cell_coords.reshape(-1, 3)
    ids = mesh.cells.ravel()
    if mesh.periods:
        key = np.column_stack([ids, np.round(flat, 10)])
        uniq, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
        inv = inv.reshape(-1)
        coords = flat[first]
        canon = {}
        pairs = []
        for k, vid in enumerate(uniq[:, 0].astype(int)):
            if vid in canon:
                pairs.append((canon[vid], k))
            else:
                canon[vid] = k
        cells = inv.reshape(-1, 3)
    else:
        coords = mesh.vertices
        cells = mesh.cells
        pairs = []
    out = io.StringIO()
    out.write("mesh v1\n")
    out.write(f"counts {len(coords)} {len(cells)}\n")
    for x in coords:
        out.write(f"{x[0]:.17g} {x[1]:.17g} {x[2]:.17g}\n")
    for c in cells:
        out.write(f"{c[0]} {c[1]} {c[2]}\n")
    if pairs:
        out.write("periodic\n")
        for a, b in pairs:
            out.write(f"{a} {b}\n")
    return out.getvalue()
