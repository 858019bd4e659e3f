import numpy as np
import pytest

from fracvolterra import kernels
from fracvolterra.mesh import build_geometric_tail_mesh, build_graded_mesh
from fracvolterra.problems import CoefficientSpec, make_sharpness, make_sublinear_cooling
from fracvolterra.solver import solve_step

HAVE_C = "cython" in kernels.available_backends()
needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled extension not built")
PY = kernels.get_backend("python")


def test_python_backend_always_available():
    assert "python" in kernels.available_backends()
    assert PY.BACKEND == "python"


def test_environment_forces_python(monkeypatch):
    monkeypatch.setenv("FRACVOLTERRA_PURE", "1")
    assert kernels.get_backend().BACKEND == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@needs_c
@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9, 1.0])
def test_weight_matrix_parity(alpha):
    C = kernels.get_backend("cython")
    t = build_geometric_tail_mesh(100.0, alpha, nodes_per_decade=100, graded_nodes=60).nodes
    wp = PY.weight_matrix(t, alpha)
    wc = np.asarray(C.weight_matrix(t, alpha))
    np.testing.assert_allclose(wc, wp, rtol=1e-13, atol=1e-300)


@needs_c
def test_matvec_and_eval_parity():
    C = kernels.get_backend("cython")
    rng = np.random.default_rng(7)
    t = np.concatenate(([0.0], np.cumsum(rng.uniform(0.01, 1.0, 300))))
    W = PY.weight_matrix(t, 0.6)
    f = rng.normal(size=t.size)
    np.testing.assert_allclose(np.asarray(C.packed_matvec(W, f)), PY.packed_matvec(W, f), rtol=1e-12, atol=1e-13)
    coefs = rng.uniform(0.1, 1.0, (2, t.size))
    exps = np.array([0.3, 1.0])
    x = rng.uniform(-1, 3, t.size)
    np.testing.assert_allclose(np.asarray(C.eval_f(coefs, exps, x)), PY.eval_f(coefs, exps, x), rtol=1e-15)


@needs_c
def test_march_parity():
    p = make_sublinear_cooling(1.0, 0.5, 0.2, CoefficientSpec.shifted_power(1.0))
    m = build_graded_mesh(10.0, 400, 4.0)
    a = solve_step(p, m, backend="python")
    b = solve_step(p, m, backend="cython")
    np.testing.assert_allclose(b.values, a.values, rtol=1e-12)
    assert a.backend == "python" and b.backend == "cython"


@needs_c
def test_march_parity_with_cached_weights():
    p = make_sharpness(1.0, 0.5, 0.2, 6.0, 0.1)
    m = build_geometric_tail_mesh(100.0, 0.5, nodes_per_decade=200, graded_nodes=100)
    a = solve_step(p, m, backend="python")
    m.weights(0.5, "cython")
    b = solve_step(p, m, backend="cython")
    np.testing.assert_allclose(b.values, a.values, rtol=1e-12)
