import numpy as np
import pytest

import floqtriplet as ft

BUILTIN_NAMES = ("static", "two_level_circular", "two_level_linear", "driven_ring")


def circular_reference(delta: float, v: float, omega: float) -> dict:
    """Closed-form rotating-frame solution of the circularly driven level pair.

    In the frame rotating with the drive the Hamiltonian is static with
    splitting Omega = sqrt((delta-omega)^2 + v^2); transforming back gives the
    quasi-energies (omega -+ Omega)/2 and the average energies
    -+(Omega/2 + omega(delta-omega)/(2 Omega)), with the minus-sign average
    energy belonging to the (omega + Omega)/2 quasi-energy.
    """
    big_omega = np.sqrt((delta - omega) ** 2 + v**2)
    eps_plus = np.mod((omega + big_omega) / 2.0, omega)
    eps_minus = np.mod((omega - big_omega) / 2.0, omega)
    ebar_plus = big_omega / 2.0 + omega * (delta - omega) / (2.0 * big_omega)
    return {
        "omega_rabi": big_omega,
        "eps": {"plus": eps_plus, "minus": eps_minus},
        "ebar": {"plus": ebar_plus, "minus": -ebar_plus},
        # ladder ordered as the solver reports: by average energy ascending
        "pairs": [(eps_plus, ebar_plus), (eps_minus, -ebar_plus)],
    }


CIRCULAR_DEFAULT = circular_reference(1.0, 0.4, 1.5)


@pytest.fixture(scope="session")
def models():
    return {name: ft.builtin_model(name) for name in BUILTIN_NAMES}


@pytest.fixture(scope="session")
def spectra(models):
    return {name: ft.solve_spectrum(h, "auto") for name, h in models.items()}


@pytest.fixture(scope="session")
def oracle_spectra(models, spectra):
    out = {}
    for name, h in models.items():
        truncation = spectra[name].metadata["truncation"]
        out[name] = ft.oracle_spectrum(h, truncation)
    return out


@pytest.fixture(scope="session")
def ground_results(models, spectra):
    out = {}
    for name, h in models.items():
        truncation = spectra[name].metadata["truncation"]
        out[name] = ft.minimize_ground(h, truncation)
    return out


def random_mode(rng: np.random.Generator, truncation: int, dim: int) -> ft.FloquetMode:
    coeffs = rng.normal(size=(2 * truncation + 1, dim)) + 1j * rng.normal(
        size=(2 * truncation + 1, dim)
    )
    return ft.FloquetMode(coeffs).normalized()
