import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedswe import elements as el
from mixedswe import mesh as msh
from mixedswe.elements import SpaceKind
from mixedswe.errors import InvalidParameterError
from mixedswe.mesh import EDGE_END, EDGE_START

from oracles import census_closed_form, monomial_integral

S_BDFM = SpaceKind.VELOCITY_BDFM1


def edge_points(i, s):
    L = np.zeros((len(s), 3))
    L[:, EDGE_START[i]] = 1 - s
    L[:, EDGE_END[i]] = s
    return L


def evaluate(space, mesh, coeffs, L):
    fr = el.frames(mesh)
    dm = el.dofmap(space, mesh)
    vals = np.asarray(el.basis_values(space, fr, L))
    loc = el.gather(dm, coeffs)
    if vals.ndim == 4:
        return np.einsum("cqjd,cj->cqd", vals, loc)
    return np.einsum("cqj,cj->cq", vals, loc)


# --------------------------------------------------------------------------
# quadrature


@settings(max_examples=40, deadline=None)
@given(degree=st.sampled_from([6, 9, 14, 20]), data=st.data())
def test_triangle_rule_exact(degree, data):
    a = data.draw(st.integers(0, degree))
    b = data.draw(st.integers(0, degree - a))
    q = el.triangle_rule(degree)
    x, y = q.points[:, 1], q.points[:, 2]
    assert np.isclose(q.weights @ (x**a * y**b), monomial_integral(a, b), rtol=1e-12, atol=1e-15)


def test_triangle_rule_weights():
    for d in (0, 6, 10):
        q = el.triangle_rule(d)
        assert np.isclose(q.weights.sum(), 0.5)
        assert np.allclose(q.points.sum(axis=1), 1.0)
        assert np.all(q.points >= 0)
    with pytest.raises(InvalidParameterError):
        el.triangle_rule(-1)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_edge_rule_exact(n):
    s, w = el.edge_rule(n)
    for p in range(2 * n):
        assert np.isclose(w @ s**p, 1.0 / (p + 1))


# --------------------------------------------------------------------------
# bases


def test_stream_basis_is_nodal():
    fr = el.frames(el.reference_mesh())
    nodes = np.vstack([np.eye(3), [[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]]])
    vals = np.asarray(el.basis_values(SpaceKind.STREAM_E, fr, nodes))[0]
    assert np.allclose(vals[:, :6], np.eye(6))
    assert np.allclose(vals[:, 6], 0.0)
    centre = np.asarray(el.basis_values(SpaceKind.STREAM_E, fr, [[1 / 3] * 3]))[0, 0]
    assert np.isclose(centre[6], 1.0)
    assert np.isclose(centre[:6].sum(), 1.0)


def test_bdfm1_functionals_invertible():
    m = msh.build_square(3, jitter=0.2, seed=4)
    N = el.interpolation_matrix(S_BDFM, el.frames(m))
    assert np.allclose(N[:, :6, :6], np.eye(6))
    assert np.all(np.linalg.cond(N) < 1e3)


def test_rt0_functionals_identity():
    m = msh.build_square(3, jitter=0.2, seed=4)
    N = el.interpolation_matrix(SpaceKind.VELOCITY_RT0, el.frames(m))
    assert np.allclose(N, np.eye(3))


@pytest.mark.parametrize("space", [S_BDFM, SpaceKind.VELOCITY_RT0])
def test_divergence_matches_finite_difference(space):
    m = msh.build_square(2, jitter=0.2, seed=2)
    fr = el.frames(m)
    L0 = np.array([[0.2, 0.3, 0.5]])
    h = 1e-6
    div = np.asarray(el.basis_derivatives(space, fr, L0))[:, 0]
    fd = 0.0
    for d in range(2):
        # barycentric shift moving x_d by h
        dL = fr.grad_lambda[:, :, d] * h
        up = np.asarray(el.basis_values(space, fr, L0 + dL[0]))[0, 0, :, d]
        dn = np.asarray(el.basis_values(space, fr, L0 - dL[0]))[0, 0, :, d]
        fd = fd + (up - dn) / (2 * h)
    assert np.allclose(div[0], fd, atol=1e-6)


def test_bdfm1_normal_trace_linear_and_continuous(jittered):
    m = jittered
    rng = np.random.default_rng(0)
    dm = el.dofmap(S_BDFM, m)
    u = rng.standard_normal(dm.ndofs)
    fr = el.frames(m)
    s = np.array([0.1, 0.3, 0.5, 0.7, 0.9])  # symmetric under reversal
    for e in np.flatnonzero(m.edge_cells[:, 1] >= 0):
        vals = []
        for c in m.edge_cells[e]:
            i = int(np.flatnonzero(m.cell_edges[c] == e)[0])
            L = edge_points(i, s)
            pts = fr.points(L)[c]
            un = evaluate(S_BDFM, m, u, L)[c] @ fr.outward[c, i]
            order = np.argsort(pts[:, 0] + 1e-3 * pts[:, 1])
            vals.append(un[order])
        assert np.allclose(vals[0], -vals[1], atol=1e-12)
    # linear along the edge: second difference vanishes on a uniform stencil
    L = edge_points(0, np.array([0.0, 0.5, 1.0]))
    un = np.einsum("cqd,cd->cq", evaluate(S_BDFM, m, u, L), fr.outward[:, 0])
    assert np.allclose(un[:, 0] - 2 * un[:, 1] + un[:, 2], 0.0, atol=1e-12)


def test_stream_space_continuous(jittered):
    m = jittered
    rng = np.random.default_rng(1)
    psi = rng.standard_normal(el.dofmap(SpaceKind.STREAM_E, m).ndofs)
    fr = el.frames(m)
    s = np.linspace(0, 1, 5)
    for e in np.flatnonzero(m.edge_cells[:, 1] >= 0):
        got = []
        for c in m.edge_cells[e]:
            i = int(np.flatnonzero(m.cell_edges[c] == e)[0])
            L = edge_points(i, s)
            pts = fr.points(L)[c]
            v = evaluate(SpaceKind.STREAM_E, m, psi, L)[c]
            got.append(v[np.argsort(pts[:, 0] + 1e-3 * pts[:, 1])])
        assert np.allclose(got[0], got[1], atol=1e-12)


# --------------------------------------------------------------------------
# projections


def test_pi_v_reproduces_p1(jittered):
    coeffs = el.project_pi_v(lambda x: 1 + 2 * x[:, 0] - 3 * x[:, 1], jittered)
    q = np.array([[0.2, 0.3, 0.5]])
    fr = el.frames(jittered)
    x = fr.points(q)[:, 0]
    got = evaluate(SpaceKind.PRESSURE_P1DG, jittered, coeffs, q)[:, 0]
    assert np.allclose(got, 1 + 2 * x[:, 0] - 3 * x[:, 1])


def test_pi_e_reproduces_quadratics(jittered):
    f = lambda x: 1 + x[:, 0] - x[:, 1] ** 2 + 3 * x[:, 0] * x[:, 1]  # noqa: E731
    psi = el.project_pi_e(f, jittered)
    q = el.triangle_rule(6).points
    x = el.frames(jittered).points(q).reshape(-1, 3)
    assert np.allclose(evaluate(SpaceKind.STREAM_E, jittered, psi, q).ravel(), f(x))


def test_pi_s_reproduces_linear_fields(jittered):
    def lin(x):
        return np.column_stack([1 + x[:, 0] - 2 * x[:, 1], 3 * x[:, 0] + x[:, 1], 0 * x[:, 0]])

    q = el.triangle_rule(6).points
    x = el.frames(jittered).points(q).reshape(-1, 3)
    u = el.project_pi_s(lin, jittered)
    got = evaluate(S_BDFM, jittered, u, q).reshape(-1, 3)
    assert np.allclose(got, lin(x), atol=1e-11)


def test_pi_s_misses_quadratic_normal_traces(jittered):
    # (y^2, 0) has quadratic normal traces, which the space cannot hold
    def f(x):
        return np.column_stack([x[:, 1] ** 2, 0 * x[:, 0], 0 * x[:, 0]])

    q = el.triangle_rule(6).points
    x = el.frames(jittered).points(q).reshape(-1, 3)
    u = el.project_pi_s(f, jittered)
    assert np.abs(evaluate(S_BDFM, jittered, u, q).reshape(-1, 3) - f(x)).max() > 1e-4


# --------------------------------------------------------------------------
# dimension census


@settings(max_examples=7, deadline=None)
@given(n=st.integers(2, 8))
def test_census_periodic_matches_closed_form(n):
    m = msh.build_periodic_square(n)
    c = el.dof_census(m)
    ref = census_closed_form(m.n_vert, m.n_edge, m.n_face)
    assert {k: c[k] for k in ref} == ref
    assert c["S_minus_2V"] == 0
    assert c["E_plus_V_minus_S_minus_chi"] == 0


def test_census_frozen_values():
    # closed-form oracle evaluated on the vertex/edge/face counts
    c = el.dof_census(msh.build_icosahedral_sphere(0))
    assert (c["dim_E"], c["dim_S"], c["dim_V"]) == (62, 120, 60)
    c = el.dof_census(msh.build_periodic_square(2))
    assert (c["dim_E"], c["dim_S"], c["dim_V"]) == (24, 48, 24)
    c = el.dof_census(msh.build_periodic_square(2), "rt0")
    assert (c["dim_E"], c["dim_S"], c["dim_V"]) == (4, 12, 8)


def test_census_cylinder_counts_boundary_edges():
    m = msh.build_cylinder(8, 3)
    c = el.dof_census(m)
    # open surface: 2 N_edge = 3 N_face + N_boundary_edge
    assert c["S_minus_2V"] == len(m.boundary_edges)
    assert c["E_plus_V_minus_S_minus_chi"] == 0


def test_census_bdm1_counts():
    m = msh.build_periodic_square(4)
    c = el.dof_census(m, "bdm1")
    assert c["dim_S"] == 3 * c["dim_V"]
    assert c["dim_V"] - c["dim_E"] < 0


def test_dofmap_boundary_and_signs():
    m = msh.build_square(3)
    dm = el.dofmap(S_BDFM, m)
    assert set(np.unique(dm.signs)) <= {-1, 1}
    # two normal DOFs per boundary edge
    assert len(dm.boundary_dofs) == 2 * len(m.boundary_edges)
    assert dm.ndofs == 2 * m.n_edge + 3 * m.n_face


def test_tabulation_shapes():
    t = el.tabulate(S_BDFM)
    assert t.basis_values.shape == (12, 9, 2)
    assert t.basis_derivatives.shape == (12, 9)
    with pytest.raises(InvalidParameterError):
        el.tabulate(S_BDFM, 4)
    with pytest.raises(InvalidParameterError):
        el.resolve_pair("nedelec")
