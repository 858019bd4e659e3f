import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fracvolterra.errors import BadMeshParams, ParameterError
from fracvolterra.mesh import build_geometric_tail_mesh, build_graded_mesh, default_grading, mesh_from_dict, Mesh
from fracvolterra.solver import product_weights


def hat_weights_oracle(t, n, alpha):
    """w_j = int_0^{t_n} hat_j(s) (t_n - s)^(alpha-1) ds by QUADPACK, algebraic weight on the last cell."""
    tn = t[n]
    w = np.zeros(n + 1)
    for i in range(n):
        a, b = t[i], t[i + 1]
        h = b - a
        left = lambda s: (b - s) / h
        right = lambda s: (s - a) / h
        if i == n - 1:
            # (b - s)^(alpha-1) handled by the 'alg' weight (s-a)^0 (b-s)^(alpha-1)
            w[i] += integrate.quad(left, a, b, weight="alg", wvar=(0.0, alpha - 1.0), epsabs=0, epsrel=1e-13)[0]
            w[i + 1] += integrate.quad(right, a, b, weight="alg", wvar=(0.0, alpha - 1.0), epsabs=0, epsrel=1e-13)[0]
        else:
            k = lambda s: (tn - s) ** (alpha - 1.0)
            w[i] += integrate.quad(lambda s: left(s) * k(s), a, b, epsabs=0, epsrel=1e-13)[0]
            w[i + 1] += integrate.quad(lambda s: right(s) * k(s), a, b, epsabs=0, epsrel=1e-13)[0]
    return w


# -- meshes ----------------------------------------------------------------

def test_uniform_mesh():
    np.testing.assert_array_equal(build_graded_mesh(1.0, 2, 1.0).nodes, [0.0, 0.5, 1.0])


def test_quadratic_mesh():
    np.testing.assert_array_equal(build_graded_mesh(1.0, 2, 2.0).nodes, [0.0, 0.25, 1.0])


def test_default_grading_mesh():
    r = default_grading(0.5)
    assert r == 4.0
    m = build_graded_mesh(10.0, 4, r)
    np.testing.assert_allclose(m.nodes, [0, 10 / 256, 10 / 16, 10 * 81 / 256, 10], rtol=1e-15)


@pytest.mark.parametrize("T,N,r", [(0.0, 4, 1.0), (1.0, 1, 1.0), (1.0, 4, 0.5), (1.0, 2.5, 1.0)])
def test_bad_mesh_params(T, N, r):
    with pytest.raises(BadMeshParams):
        build_graded_mesh(T, N, r)


def test_mesh_must_start_at_zero():
    with pytest.raises(BadMeshParams):
        Mesh(np.array([0.1, 0.5]), 1.0)


def test_geometric_tail_mesh_density():
    m = build_geometric_tail_mesh(1e4, 0.5)
    t = m.nodes
    assert t[0] == 0.0 and t[-1] == 1e4 and np.all(np.diff(t) > 0)
    for k in range(4):
        inside = np.count_nonzero((t > 10.0 ** k) & (t <= 10.0 ** (k + 1)))
        assert inside >= 2048
    assert mesh_from_dict(m.to_dict()).nodes.tobytes() == t.tobytes()


def test_geometric_tail_cap():
    m = build_geometric_tail_mesh(1e4, 0.5, max_nodes=3000)
    assert m.nodes.size <= 3000


# -- product weights --------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.8, 0.99])
@pytest.mark.parametrize("mesh", [build_graded_mesh(2.0, 16, 3.0), build_graded_mesh(1.0, 10, 1.0)])
def test_weights_match_independent_quadrature(alpha, mesh):
    for n in (1, 2, 7, mesh.N):
        np.testing.assert_allclose(product_weights(mesh, alpha, n), hat_weights_oracle(mesh.nodes, n, alpha),
                                   rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
def test_constant_reproduced(alpha):
    m = build_graded_mesh(7.0, 200, 2.0 / alpha)
    for n in (1, 50, 200):
        assert product_weights(m, alpha, n).sum() == pytest.approx(m.nodes[n] ** alpha / alpha, rel=1e-13)


def test_alpha_one_uniform_is_trapezoid():
    m = build_graded_mesh(1.0, 8, 1.0)
    w = product_weights(m, 1.0, 8)
    expected = np.full(9, 1 / 8)
    expected[[0, -1]] = 1 / 16
    np.testing.assert_allclose(w, expected, rtol=1e-14)


def test_beta_integral_half_order():
    # int_0^1 s / sqrt(1-s) ds = B(2, 1/2) = 4/3
    m = build_graded_mesh(1.0, 64, 4.0)
    w = product_weights(m, 0.5, 64)
    assert np.dot(w, m.nodes) == pytest.approx(4.0 / 3.0, rel=1e-13)


@settings(max_examples=40)
@given(st.floats(0.05, 1.0), st.lists(st.floats(1e-3, 1.0), min_size=2, max_size=40),
       st.floats(-5, 5), st.floats(-5, 5))
def test_linear_functions_exact_on_random_meshes(alpha, steps, a, b):
    t = np.concatenate(([0.0], np.cumsum(steps)))
    m = Mesh(t, 1.0, "custom")
    n = m.N
    w = product_weights(m, alpha, n)
    tn = t[n]
    exact = a * tn ** alpha / alpha + b * tn ** (alpha + 1) / (alpha * (alpha + 1))
    scale = abs(a) * tn ** alpha / alpha + abs(b) * tn ** (alpha + 1) / (alpha * (alpha + 1)) + 1e-300
    assert abs(np.dot(w, a + b * t) - exact) <= 1e-13 * scale


def test_row_index_checked():
    m = build_graded_mesh(1.0, 4, 1.0)
    with pytest.raises(ParameterError):
        product_weights(m, 0.5, 0)
    with pytest.raises(ParameterError):
        product_weights(m, 0.5, 5)


def test_weight_matrix_cached_and_packed():
    m = build_graded_mesh(3.0, 12, 2.0)
    W = m.weights(0.4)
    assert W is m.weights(0.4)
    for n in (0, 5, 12):
        s = n * (n + 1) // 2
        row = W[s:s + n + 1]
        if n:
            np.testing.assert_array_equal(row, product_weights(m, 0.4, n))
        else:
            assert row[0] == 0.0
