import numpy as np
import pytest

from activepenalty.model1d import (VARIANTS, ModelProblem, NotConverged, model_convergence_sweep,
                                   solve_model_bvp)

ETAS = [1e-4, 1e-5, 1e-6, 1e-7]


def test_problem_validation():
    with pytest.raises(ValueError):
        ModelProblem(0.0)
    with pytest.raises(ValueError):
        ModelProblem(1e-4, "matched-k7")
    with pytest.raises(ValueError):
        ModelProblem(1e-4, L=1.5)
    with pytest.raises(ValueError):
        ModelProblem(1e-4, resolution=0.2)


def test_k0_slope_half_down_to_1e8():
    t = model_convergence_sweep("matched-k0", ETAS + [1e-8])
    assert t.column("slope")[0] == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize("variant,slope", [("matched-k1", 1.0), ("matched-k2-minus", 1.5)])
def test_matched_slopes(variant, slope):
    t = model_convergence_sweep(variant, ETAS)
    assert t.column("slope")[0] == pytest.approx(slope, abs=0.1)


def test_exponential_plus_constant():
    sol = solve_model_bvp(ModelProblem(1e-7, "matched-k2-plus-exponential"))
    assert 1.5 <= sol.error / 1e-7 <= 2.2


def test_exponential_minus_constant():
    sol = solve_model_bvp(ModelProblem(1e-7, "matched-k2-minus-exponential"))
    assert 8.0 <= sol.error / 1e-7 ** 1.5 <= 14.0


@pytest.mark.parametrize("variant", sorted(VARIANTS))
def test_residual_small(variant):
    sol = solve_model_bvp(ModelProblem(1e-5, variant))
    assert sol.residual <= 1e-8
    assert sol.iterations < 50


def test_unpenalised_limit_is_linear():
    # large eta: the solid barely acts, u stays close to the harmonic profile
    sol = solve_model_bvp(ModelProblem(1e2, "matched-k0"))
    x, u = sol.x, sol.u
    assert u[0] == 1.0 and u[-1] == 0.0
    assert np.max(np.abs(u - (1.0 - (x + 1.0) / 3.0))) <= 0.05


@pytest.mark.parametrize("variant", ["matched-k0", "matched-k1", "matched-k2-minus"])
def test_mesh_refinement_changes_error_little(variant):
    a = solve_model_bvp(ModelProblem(1e-5, variant)).error
    b = solve_model_bvp(ModelProblem(1e-5, variant, resolution=0.05)).error
    assert abs(a - b) <= 0.05 * b


def test_sweep_table_shape():
    t = model_convergence_sweep("matched-k1", [1e-5, 1e-4])
    assert t.columns == ["eta", "error", "slope"]
    assert list(t.column("eta")) == [1e-5, 1e-4]
    assert t.provenance["variant"] == "matched-k1"


def test_not_converged_reported():
    with pytest.raises(NotConverged):
        solve_model_bvp(ModelProblem(1e-4, "matched-k1"), tol=0.0, max_iter=1)
