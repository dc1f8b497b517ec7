"""Time-periodic Hamiltonians represented by a finite Fourier series.

A Hamiltonian with period T = 2*pi/omega is stored through its harmonic
components

    H(t) = sum_m  H_m * exp(+i m omega t),

with hbar = 1 and all energies in the same unit as omega.  Hermiticity of
H(t) at every t is equivalent to H_{-m} = H_m^dagger for every stored
harmonic; constructors complete missing partners so the pair condition
holds exactly.  The e^{+i m omega t} sign convention is fixed here once and
shared by every module in the package (see `sambe` for the matching mode
convention).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """Raised for unknown model names or out-of-domain parameters."""


def _as_matrix(a, dim: int) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"harmonic matrix has shape {m.shape}, expected {(dim, dim)}")
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class FourierHamiltonian:
    """H(t) = sum_m H_m e^{+i m omega t} on a dim-dimensional Hilbert space.

    Parameters
    ----------
    dim : int
        Dimension d of the instantaneous Hilbert space.
    omega : float
        Drive angular frequency (> 0); the period is T = 2*pi/omega.
    harmonics : dict[int, ndarray]
        Map from harmonic index m to the d x d matrix H_m.  If only one of
        the pair (m, -m) is given, the partner is filled in as the conjugate
        transpose, which enforces H(t)^dagger = H(t) exactly.  Matrices that
        are exactly zero are dropped.
    """

    dim: int
    omega: float
    harmonics: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "omega", float(self.omega))
        completed: dict[int, np.ndarray] = {}
        for m, mat in self.harmonics.items():
            completed[int(m)] = _as_matrix(mat, self.dim)
        for m in list(completed):
            if -m not in completed:
                partner = completed[m].conj().T.copy()
                partner.setflags(write=False)
                completed[-m] = partner
        for m in list(completed):
            if not completed[m].any():
                del completed[m]
        object.__setattr__(self, "harmonics", completed)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def max_harmonic(self) -> int:
        return max((abs(m) for m in self.harmonics), default=0)

    def eval_at_time(self, t: float) -> np.ndarray:
        """Return H(t) = sum_m H_m e^{+i m omega t}."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for m, mat in self.harmonics.items():
            out += mat * np.exp(1j * m * self.omega * t)
        return out

    def to_json_dict(self) -> dict:
        entries = []
        for m in sorted(self.harmonics):
            mat = self.harmonics[m]
            # adding 0.0 canonicalizes signed zeros so the JSON (and the
            # model hash built from it) does not depend on how a matrix
            # was produced
            entries.append(
                {"m": m, "re": (mat.real + 0.0).tolist(), "im": (mat.imag + 0.0).tolist()}
            )
        return {"dim": self.dim, "omega": self.omega, "harmonics": entries}


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple[str, ...] = ()


def validate(h: FourierHamiltonian) -> ValidationReport:
    """Check the physical constraints of a Fourier Hamiltonian.

    Returns a report rather than raising, so that deliberately broken
    inputs can be inspected.  A passing report certifies
    H(t)^dagger = H(t) for all t, omega > 0 and consistent matrix shapes.
    """
    violations: list[str] = []
    if h.dim < 1:
        violations.append("dim(nonpositive)")
    if not (h.omega > 0.0):
        violations.append("omega(nonpositive)")
    for m, mat in sorted(h.harmonics.items()):
        if mat.shape != (h.dim, h.dim):
            violations.append(f"shape(m={m})")
    for m in sorted(k for k in h.harmonics if k >= 0):
        partner = h.harmonics.get(-m)
        if partner is None:
            violations.append(f"hermiticity(m={m})")
        elif not np.array_equal(partner, h.harmonics[m].conj().T):
            violations.append(f"hermiticity(m={m})")
    for m in sorted(k for k in h.harmonics if k < 0):
        if -m not in h.harmonics:
            violations.append(f"hermiticity(m={-m})")
    return ValidationReport(passed=not violations, violations=tuple(violations))


def require_valid(h: FourierHamiltonian) -> FourierHamiltonian:
    """Raise ModelError unless `h` passes validation."""
    report = validate(h)
    if not report.passed:
        raise ModelError(f"invalid Hamiltonian: {', '.join(report.violations)}")
    return h


def eval_at_time(h: FourierHamiltonian, t: float) -> np.ndarray:
    return h.eval_at_time(t)


def combine(h: FourierHamiltonian, v: FourierHamiltonian, weight: float = 1.0) -> FourierHamiltonian:
    """Return h + weight * v as a new FourierHamiltonian."""
    if v.dim != h.dim:
        raise ModelError(f"dimension mismatch: {h.dim} vs {v.dim}")
    if v.omega != h.omega:
        raise ModelError(f"drive frequency mismatch: {h.omega} vs {v.omega}")
    harmonics: dict[int, np.ndarray] = {m: mat.copy() for m, mat in h.harmonics.items()}
    for m, mat in v.harmonics.items():
        if m in harmonics:
            harmonics[m] = harmonics[m] + weight * mat
        else:
            harmonics[m] = weight * mat
    return FourierHamiltonian(dim=h.dim, omega=h.omega, harmonics=harmonics)


# --- built-in benchmark models -------------------------------------------

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

MODEL_DEFAULTS: dict[str, dict] = {
    "static": {"levels": (0.0, 1.0), "omega": 0.7},
    "two_level_circular": {"delta": 1.0, "v": 0.4, "omega": 1.5},
    "two_level_linear": {"delta": 1.0, "v": 0.4, "omega": 1.5},
    "driven_ring": {"sites": 6, "hopping": 1.0, "v": 0.5, "omega": 2.3},
}


@dataclass(frozen=True)
class ModelSpec:
    """A named built-in model plus its parameter map."""

    name: str
    params: dict = field(default_factory=dict)

    def resolve(self) -> FourierHamiltonian:
        return builtin_model(self.name, self.params)


def _check_omega(params: dict) -> float:
    omega = float(params["omega"])
    if omega <= 0.0:
        raise ModelError(f"omega must be > 0, got {omega}")
    return omega


def _static(params: dict) -> FourierHamiltonian:
    levels = [float(x) for x in np.atleast_1d(params["levels"])]
    if not levels:
        raise ModelError("static model needs at least one level")
    omega = _check_omega(params)
    h0 = np.diag(np.asarray(levels, dtype=complex))
    return FourierHamiltonian(dim=len(levels), omega=omega, harmonics={0: h0})


def _two_level_circular(params: dict) -> FourierHamiltonian:
    delta, v = float(params["delta"]), float(params["v"])
    omega = _check_omega(params)
    # (V/2)(sx cos wt + sy sin wt) collects to (V/4)(sx - i sy) e^{+i w t} + h.c.
    h1 = (v / 4.0) * (SIGMA_X - 1j * SIGMA_Y)
    return FourierHamiltonian(
        dim=2, omega=omega, harmonics={0: (delta / 2.0) * SIGMA_Z, 1: h1}
    )


def _two_level_linear(params: dict) -> FourierHamiltonian:
    delta, v = float(params["delta"]), float(params["v"])
    omega = _check_omega(params)
    return FourierHamiltonian(
        dim=2,
        omega=omega,
        harmonics={0: (delta / 2.0) * SIGMA_Z, 1: (v / 2.0) * SIGMA_X, -1: (v / 2.0) * SIGMA_X},
    )


def _driven_ring(params: dict) -> FourierHamiltonian:
    sites = int(params["sites"])
    if sites < 3:
        raise ModelError(f"driven_ring needs sites >= 3, got {sites}")
    hopping, v = float(params["hopping"]), float(params["v"])
    omega = _check_omega(params)
    h0 = np.zeros((sites, sites), dtype=complex)
    for i in range(sites):
        h0[i, (i + 1) % sites] = -hopping
        h0[(i + 1) % sites, i] = -hopping
    # on-site potential with a spatial cosine profile, modulated as cos(w t)
    profile = np.diag(np.cos(2.0 * np.pi * np.arange(sites) / sites)).astype(complex)
    h1 = (v / 2.0) * profile
    return FourierHamiltonian(dim=sites, omega=omega, harmonics={0: h0, 1: h1, -1: h1})


_BUILDERS = {
    "static": _static,
    "two_level_circular": _two_level_circular,
    "two_level_linear": _two_level_linear,
    "driven_ring": _driven_ring,
}


def builtin_model(name: str, params: dict | None = None) -> FourierHamiltonian:
    """Resolve a named benchmark model to its FourierHamiltonian.

    Unknown names or parameters outside the documented domain raise
    ModelError.  Omitted parameters take the defaults in MODEL_DEFAULTS.
    """
    if name not in _BUILDERS:
        raise ModelError(
            f"unknown model {name!r}; known: {', '.join(sorted(_BUILDERS))}"
        )
    merged = dict(MODEL_DEFAULTS[name])
    for key, value in (params or {}).items():
        if key not in merged:
            raise ModelError(f"model {name!r} has no parameter {key!r}")
        merged[key] = value
    return _BUILDERS[name](merged)


# --- JSON model schema (consumed by the CLI) ------------------------------

def from_json_dict(payload: dict) -> FourierHamiltonian:
    """Build a model from either schema: explicit harmonics or builtin+params."""
    if "builtin" in payload:
        return builtin_model(payload["builtin"], payload.get("params") or {})
    try:
        dim = int(payload["dim"])
        omega = float(payload["omega"])
        entries = payload["harmonics"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model JSON: {exc}") from exc
    harmonics: dict[int, np.ndarray] = {}
    for entry in entries:
        m = int(entry["m"])
        mat = np.asarray(entry["re"], dtype=float) + 1j * np.asarray(entry["im"], dtype=float)
        harmonics[m] = mat
    return FourierHamiltonian(dim=dim, omega=omega, harmonics=harmonics)


def load_model(path: str) -> FourierHamiltonian:
    with open(path, "r", encoding="utf-8") as fh:
        return from_json_dict(json.load(fh))


def model_hash(h: FourierHamiltonian) -> str:
    """Stable content hash of the model, recorded in spectrum metadata."""
    canonical = json.dumps(h.to_json_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
