import numpy as np
import pytest

import floqtriplet as ft
from floqtriplet.variational import VariationalConfig, _Workspace

from conftest import CIRCULAR_DEFAULT, random_mode


def test_objective_at_exact_eigenstate_is_ebar():
    h = ft.builtin_model("static", {"levels": (0.0, 1.0), "omega": 0.7})
    ground = ft.FloquetMode.from_block([1.0, 0.0], 0, 2)
    excited = ft.FloquetMode.from_block([0.0, 1.0], 0, 2)
    assert abs(ft.objective(ground, h)) <= 1e-12
    assert abs(ft.objective(excited, h) - 1.0) <= 1e-12


def test_objective_scaling_rule():
    h = ft.builtin_model("static", {"levels": (0.0, 1.0), "omega": 0.7})
    cfg = VariationalConfig()
    mode = ft.FloquetMode.from_block([0.0, 1.0], 0, 2)
    doubled = ft.FloquetMode(2.0 * mode.coeffs)
    f1 = ft.objective(mode, h, cfg)
    f2 = ft.objective(doubled, h, cfg)
    # quadratic-form scaling of the energy term plus mu_norm * (4-1)^2
    assert abs(f2 - (4.0 * f1 + cfg.mu_norm * 9.0)) <= 1e-10


def test_objective_dominates_ground_on_random_modes(spectra):
    h = ft.builtin_model("two_level_circular")
    spec = spectra["two_level_circular"]
    m = spec.metadata["truncation"]
    rng = np.random.default_rng(31)
    ebar0 = spec[0].avg_energy
    for _ in range(100):
        mode = random_mode(rng, m, h.dim)
        assert ft.objective(mode, h) >= ebar0 - 1e-9


@pytest.mark.parametrize(
    "name", ["static", "two_level_circular", "two_level_linear", "driven_ring"]
)
def test_gradient_matches_finite_differences(name):
    h = ft.builtin_model(name)
    m = max(2, h.max_harmonic + 1)
    cfg = VariationalConfig()
    ws = _Workspace(h, m, cfg)
    rng = np.random.default_rng(37)
    step = 1e-6
    for _ in range(20):
        x = random_mode(rng, m, h.dim).flat()
        y = np.concatenate([x.real, x.imag])
        _, grad = ws.real_objective(y, cfg.mu_res_init)
        probes = rng.integers(0, y.size, size=6)
        for idx in probes:
            yp, ym = y.copy(), y.copy()
            yp[idx] += step
            ym[idx] -= step
            fp, _ = ws.real_objective(yp, cfg.mu_res_init)
            fm, _ = ws.real_objective(ym, cfg.mu_res_init)
            fd = (fp - fm) / (2.0 * step)
            scale = max(1.0, abs(fd), abs(grad[idx]))
            assert abs(fd - grad[idx]) <= 1e-5 * scale


def test_minimize_ground_static():
    h = ft.builtin_model("static", {"levels": (0.0, 1.0), "omega": 0.7})
    result = ft.minimize_ground(h, 2)
    assert result.converged
    assert abs(result.quasi_energy) <= 1e-9
    assert abs(result.avg_energy) <= 1e-9


def test_minimize_ground_circular(ground_results, spectra):
    result = ground_results["two_level_circular"]
    spec = spectra["two_level_circular"]
    assert result.converged
    assert abs(result.avg_energy - CIRCULAR_DEFAULT["ebar"]["plus"]) <= 1e-6
    overlap, _ = ft.replica_overlap(result.mode, spec[0].mode)
    assert overlap >= 1.0 - 1e-5


def test_minimize_ground_lands_in_resolved_degenerate_state():
    h = ft.builtin_model("static", {"levels": (0.0, 1.0), "omega": 0.5})
    result = ft.minimize_ground(h, 2)
    assert result.converged
    assert abs(result.avg_energy) <= 1e-9  # ebar = 0, not 0.5


@pytest.mark.parametrize(
    "name", ["static", "two_level_circular", "two_level_linear", "driven_ring"]
)
def test_variational_spectral_agreement(name, ground_results, spectra):
    result = ground_results[name]
    spec = spectra[name]
    assert result.converged
    assert abs(result.avg_energy - spec[0].avg_energy) <= 1e-6
    overlap, _ = ft.replica_overlap(result.mode, spec[0].mode)
    assert overlap >= 1.0 - 1e-5
    assert abs(result.avg_energy - ft.average_energy_functional(result.mode, ft.builtin_model(name))) <= 1e-12


def test_minimize_excited_static_ladder():
    h = ft.builtin_model("static", {"levels": (0.0, 1.0), "omega": 0.7})
    ground = ft.minimize_ground(h, 2)
    excited = ft.minimize_excited(h, 2, found=[ground.mode])
    assert excited.converged
    assert abs(excited.quasi_energy - 0.3) <= 1e-8
    assert abs(excited.avg_energy - 1.0) <= 1e-8


def test_minimize_excited_degenerate_pair():
    h = ft.builtin_model("static", {"levels": (0.0, 1.0), "omega": 0.5})
    ground = ft.minimize_ground(h, 2)
    excited = ft.minimize_excited(h, 2, found=[ground.mode])
    assert excited.converged
    assert abs(excited.quasi_energy) <= 1e-8
    assert abs(excited.avg_energy - 1.0) <= 1e-8


def test_minimize_excited_circular(ground_results):
    h = ft.builtin_model("two_level_circular")
    ground = ground_results["two_level_circular"]
    excited = ft.minimize_excited(h, ground.mode.truncation, found=[ground.mode])
    assert excited.converged
    assert abs(excited.avg_energy - (-CIRCULAR_DEFAULT["ebar"]["plus"])) <= 1e-6


def test_nonconvergence_is_flagged_with_trace():
    h = ft.builtin_model("two_level_circular")
    cfg = VariationalConfig(
        max_iterations=1, restarts=1, mu_res_init=1e3, mu_res_max=1e4
    )
    result = ft.minimize_ground(h, 4, cfg)
    assert not result.converged
    assert result.trace  # the iteration history is preserved
    assert result.residual > cfg.residual_tol


def test_stationarity_implies_functional_equivalence(ground_results, spectra):
    for name, result in ground_results.items():
        h = ft.builtin_model(name)
        spec = spectra[name]
        a = ft.assembled_average_energy(spec, h)
        x = result.mode.flat()
        ebar_op = float(np.real(np.vdot(x, a @ x)))
        assert abs(ebar_op - result.avg_energy) <= 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        VariationalConfig(mu_norm=-1.0)
    with pytest.raises(ValueError):
        VariationalConfig(max_iterations=0)
    with pytest.raises(ValueError):
        VariationalConfig(residual_tol=0.0)


def test_results_record_seed_and_trace(ground_results):
    result = ground_results["two_level_circular"]
    assert result.trace
    payload = result.to_json_dict()
    assert "trace" in payload and "seed" in payload
