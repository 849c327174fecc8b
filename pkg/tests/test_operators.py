import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedswe import analysis as an
from mixedswe import mesh as msh
from mixedswe import operators as op
from mixedswe.errors import InvalidParameterError, InvariantViolation


@pytest.fixture(scope="module")
def ops4(periodic4):
    return op.assemble(periodic4, f=1.0)


@pytest.fixture(scope="module")
def ops_box(jittered):
    return op.assemble(jittered, f=2.0)


def sym_defect(A):
    return abs(A - A.T).max() / abs(A).max()


@pytest.mark.parametrize("name", ["M_S", "M_V", "M_E", "K_E"])
def test_symmetric(ops4, name):
    assert sym_defect(getattr(ops4, name)) < 1e-14


def test_mass_matrices_positive(ops_box):
    for name in ("M_S", "M_V", "M_E"):
        ev = np.linalg.eigvalsh(getattr(ops_box, name).toarray())
        assert ev.min() > 0


def test_coriolis_antisymmetric(ops4, ops_box):
    for o in (ops4, ops_box):
        C = o.C_f
        assert abs(C + C.T).max() < 1e-15 * abs(C).max()
    zero = op.assemble(msh.build_periodic_square(2), f=0.0)
    assert zero.C_f.count_nonzero() == 0


def test_div_curl_vanishes(ops4, ops_box):
    for o in (ops4, ops_box):
        assert abs(o.B_div @ o.curl).max() < 1e-12


def test_weak_curl_and_laplacian_factor_through_curl(ops4, ops_box):
    for o in (ops4, ops_box):
        W = o.curl.T @ o.M_S
        assert abs(W - o.W_curl).max() < 1e-12 * abs(o.W_curl).max()
        K = o.curl.T @ o.M_S @ o.curl
        assert abs(K - o.K_E).max() < 1e-12 * abs(o.K_E).max()


def test_gradient_of_constant(ops4):
    assert abs(ops4.G_grad.T @ ops4.one_E).max() < 1e-13
    assert abs(ops4.K_E @ ops4.one_E).max() < 1e-13
    assert abs(ops4.curl @ ops4.one_E).max() < 1e-13


def test_divergence_of_discrete_gradient_is_laplacian(ops4, rng):
    phi = rng.standard_normal(ops4.dim_V)
    phi -= ops4.mean_V(phi) * ops4.one_V
    lap = op.divergence(op.discrete_gradient(phi, ops4), ops4)
    back = op.mixed_poisson_solve(ops4.M_S @ op.discrete_gradient(phi, ops4), ops4)
    assert np.allclose(back, phi, atol=1e-10)
    assert lap @ (ops4.M_V @ phi) < 0


def test_mixed_laplacian_converges_to_continuum():
    # smallest nonzero eigenvalue of -Laplacian on the unit torus is 4 pi^2
    errs = []
    for n in (4, 8):
        ev = an.mixed_laplacian_eigenvalues(op.assemble(msh.build_periodic_square(n)))
        errs.append(abs(ev[1] / (4 * np.pi**2) - 1))
        assert abs(ev[0]) < 1e-10
    assert errs[1] < errs[0] / 4
    assert errs[1] < 1e-3


def test_helmholtz_periodic(ops4, rng):
    u = ops4.extend_S(rng.standard_normal(len(ops4.free_S)))
    parts = op.helmholtz_decompose(u, ops4)
    c = op.curl(parts.psi, ops4)
    g = op.discrete_gradient(parts.phi, ops4)
    h = parts.harmonic
    M = ops4.M_S
    scale = u @ M @ u
    assert abs(c @ M @ g) < 1e-11 * scale
    assert abs(c @ M @ h) < 1e-11 * scale
    assert abs(g @ M @ h) < 1e-11 * scale
    assert np.allclose(c + g + h, u)
    # torus: two harmonic directions, so h is not zero in general
    assert h @ M @ h > 1e-6 * scale


def test_helmholtz_sphere_has_no_harmonic_part(rng):
    ops = op.assemble(msh.build_icosahedral_sphere(2))
    u = rng.standard_normal(ops.dim_S)
    parts = op.helmholtz_decompose(u, ops)
    assert np.sqrt(parts.harmonic @ ops.M_S @ parts.harmonic) < 1e-9 * np.sqrt(u @ ops.M_S @ u)


def test_helmholtz_rejects_harmonic_on_sphere(monkeypatch, rng):
    ops = op.assemble(msh.build_icosahedral_sphere(0))
    u = rng.standard_normal(ops.dim_S)
    monkeypatch.setattr(op, "solve_streamfunction", lambda u, o: np.zeros(o.dim_E))
    with pytest.raises(InvariantViolation):
        op.helmholtz_decompose(u, ops)


def test_inf_sup_mesh_independent():
    vals = [op.inf_sup_estimate(op.assemble(msh.build_periodic_square(n))) for n in (2, 4, 6)]
    # sqrt of the smallest mixed-Laplacian eigenvalue, near 2 pi on the unit torus
    assert np.allclose(vals, 2 * np.pi, rtol=0.03)
    hdiv = op.inf_sup_estimate(op.assemble(msh.build_periodic_square(4)), norm="hdiv")
    assert 0.5 < hdiv < 1.0
    with pytest.raises(InvalidParameterError):
        op.inf_sup_estimate(op.assemble(msh.build_periodic_square(2)), norm="h1")


@settings(max_examples=20, deadline=None)
@given(n=st.integers(3, 12), seed=st.integers(0, 1000))
def test_pinned_solver_graph_laplacian(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 2.0, n)
    i = np.arange(n)
    A = sp.coo_matrix((w, (i, (i + 1) % n)), shape=(n, n))
    A = A + A.T
    L = sp.diags(np.asarray(A.sum(axis=1)).ravel()) - A
    one = np.ones(n)
    weight = rng.uniform(0.1, 1.0, n)
    b = rng.standard_normal(n)
    x = op.PinnedSolver(L, null=one, weight=weight).solve(b)
    assert np.allclose(L @ x, b - b.mean(), atol=1e-9)
    assert abs(weight @ x) < 1e-9


def test_assemble_checks_coriolis_length(periodic2):
    with pytest.raises(InvalidParameterError):
        op.assemble(periodic2, f=np.ones(3))


def test_rt0_pair(periodic4):
    o = op.assemble(periodic4, pair="rt0", f=1.0)
    assert o.M_S.shape == (periodic4.n_edge,) * 2
    assert abs(o.B_div @ o.curl).max() < 1e-12
    assert abs(o.C_f + o.C_f.T).max() < 1e-14


def test_dump_matrices(tmp_path, periodic2):
    o = op.assemble(periodic2, f=1.0)
    paths = op.dump_matrices(o, tmp_path)
    assert len(paths) == len(o.matrices())
    A = scipy.io.mmread(str(tmp_path / "M_S.mtx"))
    assert abs(sp.csr_matrix(A) - o.M_S).max() < 1e-14
