import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from fracvolterra import solver
from fracvolterra.errors import MaxIterationsExceeded, ParameterError, PositivityViolation, StepDivergence
from fracvolterra.mesh import build_graded_mesh, default_grading
from fracvolterra.problems import (
    CoefficientSpec,
    ProblemSpec,
    make_constant,
    make_custom,
    make_linear_relaxation,
    make_logistic,
    make_sublinear_cooling,
)
from fracvolterra.solver import (
    ContractionConfig,
    observed_order,
    richardson_order,
    solve_picard,
    solve_step,
    uniqueness_probe,
)

DECAY = CoefficientSpec.shifted_power(1.0)
COOLING = make_sublinear_cooling(1.0, 0.5, 0.2, DECAY)
STEP_TOL = 1e-10 * 10  # relative step tolerance, times ten


def max_rel_err(path):
    ex = path.problem.exact(path.t)
    return float(np.max(np.abs(path.values - ex) / np.abs(ex)))


# -- marching --------------------------------------------------------------

def test_constant_forcing_accuracy():
    p = make_constant(1.0, 2.0, 0.5)
    path = solve_step(p, build_graded_mesh(10.0, 4096, 4.0))
    assert max_rel_err(path) < 1e-3
    assert path.values[0] == 1.0


def test_zero_forcing_stays_at_x0():
    p = make_constant(2.5, 0.0, 0.4)
    path = solve_step(p, build_graded_mesh(3.0, 50, 2.0))
    assert np.all(path.values == 2.5)
    assert np.all(path.residuals == 0.0)


def test_relaxation_accuracy_moderate_mesh():
    p = make_linear_relaxation(1.0, 1.0, 0.5)
    path = solve_step(p, build_graded_mesh(5.0, 1024, 4.0))
    assert max_rel_err(path) < 1e-4


def test_relaxation_integer_order():
    p = make_linear_relaxation(1.0, 1.0, 1.0)
    path = solve_step(p, build_graded_mesh(2.0, 2000, 1.0))
    # trapezoidal rule on x' = -x: O(h^2)
    assert np.max(np.abs(path.values - np.exp(-path.t))) < 1e-6


def test_residuals_below_tolerance():
    path = solve_step(COOLING, build_graded_mesh(10.0, 500, 4.0))
    assert np.all(path.residuals <= 1e-10 * np.maximum(1.0, np.abs(path.values)))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_divergence_reports_node():
    # alpha=1, h=0.5: w_11 = 0.25 and b = 2, so x = 2 + x^2 has no real root
    p = make_custom(1.0, 1.0, [(lambda t: np.full_like(t, 4.0), 2.0)])
    for backend in ("python", None):
        with pytest.raises(StepDivergence) as info:
            solve_step(p, build_graded_mesh(1.0, 2, 1.0), backend=backend)
        assert info.value.node == 1


def test_positivity_guard():
    with pytest.raises(PositivityViolation) as info:
        solver._check_positivity(COOLING, np.array([1.0, 1.0, 0.9]))
    assert info.value.node == 2


@settings(max_examples=15)
@given(st.floats(0.1, 0.9), st.floats(0.05, 0.95), st.floats(0.1, 5.0), st.floats(0.0, 3.0))
def test_positivity_for_nonnegative_data(alpha, lam_frac, x0, c):
    p = make_sublinear_cooling(x0, alpha, alpha * lam_frac, CoefficientSpec.shifted_power(0.5, c))
    path = solve_step(p, build_graded_mesh(20.0, 120, default_grading(alpha)))
    assert path.values.min() >= x0 - 1e-10


def test_csv_export(tmp_path):
    path = solve_step(COOLING, build_graded_mesh(1.0, 8, 2.0))
    out = tmp_path / "p.csv"
    path.to_csv(out)
    rows = out.read_text().splitlines()
    assert rows[0] == "t,x,residual" and len(rows) == 10
    back = np.loadtxt(out, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back[:, 1], path.values)


# -- conventions -----------------------------------------------------------

def test_integr_ivp_equals_rescaled_main():
    mesh = build_graded_mesh(10.0, 300, 4.0)
    ivp = ProblemSpec.from_dict({**COOLING.to_dict(), "convention": "integr_ivp"})
    H = COOLING.H
    scaled = make_custom(1.0, 0.5, [(lambda t: H(t) / gamma(0.5), 0.2)])
    a = solve_step(ivp, mesh)
    b = solve_step(scaled, mesh)
    assert a.convention == "integr_ivp" and b.convention == "main"
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12, atol=0)


# -- convergence orders -----------------------------------------------------

def test_constant_forcing_uniform_mesh_is_exact():
    # piecewise-linear interpolation of a constant is exact, so the error sits at rounding
    for alpha in (0.3, 0.5, 0.8):
        p = make_constant(1.0, 2.0, alpha)
        errs = [np.max(np.abs(solve_step(p, build_graded_mesh(10.0, N, 1.0)).values - p.exact(
            build_graded_mesh(10.0, N, 1.0).nodes))) for N in (64, 128, 256)]
        orders = observed_order(errs, floor=1e-12)
        assert np.all(orders >= 1 + alpha - 0.1)


@pytest.mark.parametrize("alpha", [0.5, 0.8])
def test_relaxation_uniform_mesh_order(alpha):
    # the t^alpha start limits uniform meshes to order min(2 alpha, 1 + alpha)
    p = make_linear_relaxation(1.0, 1.0, alpha)
    errs = []
    for N in (128, 256, 512):
        path = solve_step(p, build_graded_mesh(2.0, N, 1.0))
        errs.append(np.max(np.abs(path.values - p.exact(path.t))))
    assert observed_order(errs)[-1] >= min(2 * alpha, 1 + alpha) - 0.1


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_relaxation_graded_mesh_richardson_order(alpha):
    p = make_linear_relaxation(1.0, 1.0, alpha)
    r = default_grading(alpha)
    paths = [solve_step(p, build_graded_mesh(10.0, N, r)) for N in (256, 512, 1024)]
    assert richardson_order(*paths) >= 1.9


def test_observed_order_helpers():
    np.testing.assert_allclose(observed_order([1.0, 0.25, 0.0625]), [2.0, 2.0])
    assert math.isinf(observed_order([1e-16, 1e-16], floor=1e-12)[0])
    mesh = build_graded_mesh(1.0, 4, 1.0)
    path = solve_step(COOLING, mesh)
    with pytest.raises(ParameterError):
        richardson_order(path, path, path)


# -- Picard ----------------------------------------------------------------

def test_contraction_config_defaults():
    for alpha in (0.2, 0.5, 0.9):
        cfg = ContractionConfig.default(alpha)
        assert 1 < cfg.p < min(1 / alpha, 1 / (1 - alpha))
        assert 1 / cfg.p + 1 / cfg.q == pytest.approx(1.0)
        assert cfg.L > cfg.C ** cfg.q
        assert cfg.coefficient < 1


def test_contraction_config_half_order_constant():
    cfg = ContractionConfig(0.5, 1.5, 100.0)
    # q = 3, C = 1.5^(1/3 - 1/2) Gamma(1/4)
    assert cfg.C == pytest.approx(1.5 ** (-1 / 6) * gamma(0.25), rel=1e-14)


@pytest.mark.parametrize("kw", [dict(p=1.0, L=100.0), dict(p=2.0, L=100.0), dict(p=1.5, L=1.0)])
def test_contraction_config_rejects(kw):
    with pytest.raises(ParameterError):
        ContractionConfig(0.5, **kw)


def test_picard_zero_forcing_one_sweep():
    path = solve_picard(make_constant(1.0, 0.0, 0.5), build_graded_mesh(5.0, 64, 4.0))
    assert path.info["sweeps"] == 1
    assert np.all(path.values == 1.0)


def test_picard_constant_forcing_exact_after_first_update():
    p = make_constant(1.0, 2.0, 0.5)
    mesh = build_graded_mesh(5.0, 256, 4.0)
    path = solve_picard(p, mesh)
    assert path.info["sweeps"] == 2
    assert path.info["final_plain_distance"] == 0.0
    step = solve_step(p, mesh)
    np.testing.assert_allclose(path.values, step.values, rtol=1e-14)


def test_picard_matches_marching_cooling():
    mesh = build_graded_mesh(10.0, 1000, 4.0)
    a = solve_step(COOLING, mesh)
    b = solve_picard(COOLING, mesh)
    assert np.max(np.abs(a.values - b.values)) < 1e-8


@pytest.mark.parametrize("problem", [
    make_linear_relaxation(1.0, 1.0, 0.5),
    make_constant(1.0, -0.7, 0.3),
    make_logistic(1.0, 0.5, 0.2, 0.1, DECAY, CoefficientSpec.constant(0.5), 0.5),
])
def test_mode_equivalence(problem):
    mesh = build_graded_mesh(5.0, 400, default_grading(problem.alpha))
    a = solve_step(problem, mesh)
    b = solve_picard(problem, mesh)
    assert np.max(np.abs(a.values - b.values) / np.maximum(1.0, np.abs(a.values))) < STEP_TOL


def test_picard_iteration_cap():
    with pytest.raises(MaxIterationsExceeded):
        solve_picard(COOLING, build_graded_mesh(10.0, 100, 4.0), ContractionConfig.default(0.5, max_iterations=2))


def test_picard_rejects_wrong_alpha():
    with pytest.raises(ParameterError):
        solve_picard(COOLING, build_graded_mesh(1.0, 10, 2.0), ContractionConfig.default(0.3))


def test_uniqueness_probe():
    mesh = build_graded_mesh(10.0, 300, 4.0)
    assert uniqueness_probe(COOLING, mesh, 0.0) == 0.0
    assert uniqueness_probe(COOLING, mesh, 0.5) < 1e-8
    with pytest.raises(ParameterError):
        uniqueness_probe(make_constant(1.0, 1.0, 0.5), mesh, 0.5)


def test_log_weight_finite_on_long_horizon():
    from fracvolterra.mesh import build_geometric_tail_mesh
    from fracvolterra.problems import make_sharpness

    p = make_sharpness(1.0, 0.5, 0.2, 6.0, 0.1)
    mesh = build_geometric_tail_mesh(1e4, 0.5, nodes_per_decade=64, graded_nodes=64)
    lw = solver.log_contraction_weight(p, mesh, ContractionConfig.default(0.5))
    assert np.all(np.isfinite(lw)) and lw[-1] > 709  # exp would overflow
    assert np.all(np.diff(lw) > 0)
