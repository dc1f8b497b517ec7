"""Independent validation by direct time propagation over one period.

The one-period propagator U(T) (monodromy operator) is built from
midpoint-exponential steps

    U <- exp(-i H(t_mid) dt) U,

each factor unitary because H(t_mid) is Hermitian; a final polar
correction strips the accumulated factor roundoff (a few 1e-12 over 4096
steps) so the result is unitary to working precision.  The
eigenphases of U(T) give the quasi-energies folded into [0, omega), the
eigenvectors are the Floquet modes at t = 0, and average energies come from
explicit Simpson averages of <Psi(t)|H(t)|Psi(t)> along the propagated
trajectories.  Degenerate eigenphases are resolved by diagonalizing the
time-averaged-energy matrix inside the degenerate subspace, the direct
time-domain mirror of the extended-space construction in `sambe` - which
is exactly what makes this an independent check.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .model import FourierHamiltonian, require_valid
from .sambe import (
    FloquetMode,
    Spectrum,
    EigenTriplet,
    _circular_clusters,
    fold_reported,
)


class PropagationError(RuntimeError):
    """Raised when unitarity or periodicity drifts beyond tolerance."""


@dataclass(frozen=True)
class PropagationConfig:
    steps_per_period: int = 4096
    order: int = 2  # midpoint-exponential scheme marker
    unitarity_tol: float = 1e-12
    richardson: bool = False

    def __post_init__(self):
        if self.steps_per_period < 64:
            raise ValueError("steps_per_period must be >= 64")
        if self.unitarity_tol <= 0:
            raise ValueError("unitarity tolerance must be > 0")


@dataclass(frozen=True, eq=False)
class MonodromyResult:
    """U(T) with its eigenphase decomposition.

    eigenphases theta_n in [0, 2*pi) satisfy U(T) v_n = e^{-i theta_n} v_n,
    so the folded quasi-energies are theta_n / T in [0, omega).
    """

    u_matrix: np.ndarray
    eigenphases: np.ndarray
    eigenvectors: np.ndarray
    unitarity_defect: float
    step_error_estimate: float | None = None

    def quasi_energies(self, period: float) -> np.ndarray:
        return self.eigenphases / period


def _step_propagators(h: FourierHamiltonian, steps: int) -> np.ndarray:
    """Exact-unitary midpoint factors exp(-i H(t_mid) dt) for each step."""
    dt = h.period / steps
    mids = (np.arange(steps) + 0.5) * dt
    out = np.empty((steps, h.dim, h.dim), dtype=complex)
    for j, tm in enumerate(mids):
        lam, q = np.linalg.eigh(h.eval_at_time(tm))
        out[j] = (q * np.exp(-1j * lam * dt)) @ q.conj().T
    return out


def _monodromy_matrix(h: FourierHamiltonian, steps: int) -> np.ndarray:
    u = np.eye(h.dim, dtype=complex)
    for factor in _step_propagators(h, steps):
        u = factor @ u
    # one Newton-Schulz polar step removes the accumulated factor roundoff
    return u @ (3.0 * np.eye(h.dim) - u.conj().T @ u) / 2.0


def propagate_period(
    h: FourierHamiltonian, config: PropagationConfig = PropagationConfig()
) -> MonodromyResult:
    """Monodromy operator U(T) and its eigenphase decomposition.

    Eigenvectors within degenerate eigenphase clusters are orthonormalized,
    since a generic eigensolver leaves that basis arbitrary.  With
    config.richardson, the largest eigenphase shift against a half-step
    solve is reported as a step error estimate.
    """
    require_valid(h)
    u = _monodromy_matrix(h, config.steps_per_period)
    defect = float(np.linalg.norm(u.conj().T @ u - np.eye(h.dim)))
    if defect > config.unitarity_tol:
        raise PropagationError(
            f"unitarity drift {defect:.3e} exceeds {config.unitarity_tol:.1e} "
            f"(steps={config.steps_per_period}, dim={h.dim})"
        )
    ev, vecs = np.linalg.eig(u)
    theta = np.mod(-np.angle(ev), 2.0 * np.pi)
    order = np.argsort(theta, kind="stable")
    theta, vecs = theta[order], vecs[:, order]
    # orthonormalize within eigenphase clusters (wrap-aware on the circle)
    clusters = _circular_clusters(theta, 2.0 * np.pi, 1e-7)
    for cluster in clusters:
        cluster = np.sort(cluster)
        q, _ = np.linalg.qr(vecs[:, cluster])
        vecs[:, cluster] = q
    estimate = None
    if config.richardson:
        coarse = _monodromy_matrix(h, config.steps_per_period // 2)
        ev_c = np.linalg.eigvals(coarse)
        theta_c = np.sort(np.mod(-np.angle(ev_c), 2.0 * np.pi))
        estimate = float(np.max(np.abs(np.sort(theta) - theta_c))) / h.period
    return MonodromyResult(
        u_matrix=u,
        eigenphases=theta,
        eigenvectors=vecs,
        unitarity_defect=defect,
        step_error_estimate=estimate,
    )


def propagate_trajectory(
    h: FourierHamiltonian,
    initial: np.ndarray,
    config: PropagationConfig = PropagationConfig(),
) -> np.ndarray:
    """Samples Psi(t_j), j = 0..N, on the uniform step grid over one period."""
    require_valid(h)
    steps = config.steps_per_period
    factors = _step_propagators(h, steps)
    samples = np.empty((steps + 1, h.dim), dtype=complex)
    samples[0] = np.asarray(initial, dtype=complex)
    cur = samples[0]
    for j in range(steps):
        cur = factors[j] @ cur
        samples[j + 1] = cur
    return samples


def mode_from_propagation(
    h: FourierHamiltonian,
    initial: np.ndarray,
    eigenphase: float,
    truncation: int,
    config: PropagationConfig = PropagationConfig(),
    tail_tol: float = 1e-6,
) -> tuple[FloquetMode, float]:
    """Floquet mode from a propagated monodromy eigenvector.

    The trajectory Psi(t) is rephased to Phi(t) = e^{+i eps t} Psi(t) with
    eps = eigenphase / T in [0, omega), then discrete-Fourier-transformed
    into coefficients phi^(m), |m| <= truncation.  Returns the normalized
    mode and the tail weight left beyond the truncation; a tail above
    tail_tol emits a truncation warning (the mode is degraded, the
    eigenphase is not).
    """
    period = h.period
    eps = fold_reported(eigenphase / period, h.omega)
    samples = propagate_trajectory(h, initial, config)
    n = config.steps_per_period
    tgrid = np.arange(n) * (period / n)
    phi_samples = samples[:n] * np.exp(1j * eps * tgrid)[:, None]
    # Phi(t_j) = sum_m phi^(m) e^{+2 pi i m j / N}  =>  forward FFT / N
    coeffs_all = np.fft.fft(phi_samples, axis=0) / n
    ms = np.arange(-truncation, truncation + 1)
    coeffs = coeffs_all[np.mod(ms, n)]
    total = float(np.sum(np.abs(coeffs_all) ** 2))
    kept = float(np.sum(np.abs(coeffs) ** 2))
    tail = total - kept
    if tail > tail_tol:
        warnings.warn(
            f"Fourier tail weight {tail:.3e} beyond |m| <= {truncation}; "
            f"increase the truncation",
            RuntimeWarning,
            stacklevel=2,
        )
    return FloquetMode(coeffs).normalized(), tail


def time_averaged_energy(
    h: FourierHamiltonian,
    trajectory: np.ndarray,
    config: PropagationConfig = PropagationConfig(),
    periodicity_tol: float = 1e-6,
) -> float:
    """Simpson average (1/T) int <Psi(t)|H(t)|Psi(t)> dt over one period.

    The trajectory must hold N+1 samples on the uniform grid including both
    endpoints; the integrand is checked to be periodic at the endpoints.
    For a strictly periodic integrand the one-period average equals the
    infinite-time average.
    """
    trajectory = np.asarray(trajectory)
    n = trajectory.shape[0] - 1
    tgrid = np.linspace(0.0, h.period, n + 1)
    values = np.empty(n + 1)
    for j, t in enumerate(tgrid):
        values[j] = float(np.real(np.vdot(trajectory[j], h.eval_at_time(t) @ trajectory[j])))
    if abs(values[-1] - values[0]) > periodicity_tol * max(1.0, abs(values[0])):
        raise PropagationError(
            f"integrand is not periodic at the endpoints: "
            f"{values[0]:.6e} vs {values[-1]:.6e}"
        )
    return float(simpson(values, x=tgrid) / h.period)


def _cross_energy_matrix(
    h: FourierHamiltonian, trajectories: list[np.ndarray]
) -> np.ndarray:
    """Simpson matrix (1/T) int <Psi_i(t)|H(t)|Psi_j(t)> dt, Hermitized."""
    k = len(trajectories)
    n = trajectories[0].shape[0] - 1
    tgrid = np.linspace(0.0, h.period, n + 1)
    stack = np.stack(trajectories)  # (k, N+1, d)
    hpsi = np.empty_like(stack)
    for j, t in enumerate(tgrid):
        ht = h.eval_at_time(t)
        hpsi[:, j, :] = stack[:, j, :] @ ht.T
    integrand = np.einsum("int,jnt->ijn", stack.conj(), hpsi)
    out = simpson(integrand, x=tgrid, axis=-1) / h.period
    return 0.5 * (out + out.conj().T)


def oracle_spectrum(
    h: FourierHamiltonian,
    truncation: int,
    config: PropagationConfig = PropagationConfig(),
    tol_deg: float | None = None,
) -> Spectrum:
    """Eigentriplet spectrum from the monodromy route alone.

    Quasi-energies come from the eigenphases of U(T); degenerate eigenphase
    clusters are resolved by diagonalizing the explicit time-averaged
    energy matrix within the cluster.  Trajectory phases carry the replica
    information, so no Brillouin-zone bookkeeping is needed here.
    """
    require_valid(h)
    if tol_deg is None:
        tol_deg = 1e-8 * h.omega
    mono = propagate_period(h, config)
    eps = mono.quasi_energies(h.period)
    clusters = _circular_clusters(eps, h.omega, tol_deg)
    triplets: list[EigenTriplet] = []
    for gid, cluster in enumerate(sorted(clusters, key=lambda c: eps[np.sort(c)[0]])):
        cluster = np.sort(cluster)
        trajectories = [
            propagate_trajectory(h, mono.eigenvectors[:, i], config) for i in cluster
        ]
        block = _cross_energy_matrix(h, trajectories)
        ebars, rotation = np.linalg.eigh(block)
        eps_group = fold_reported(eps[cluster[0]], h.omega)
        theta_group = float(mono.eigenphases[cluster[0]])
        for a in range(cluster.size):
            vec0 = mono.eigenvectors[:, cluster] @ rotation[:, a]
            mode, tail = mode_from_propagation(
                h, vec0, theta_group, truncation, config
            )
            triplets.append(
                EigenTriplet(
                    mode=mode,
                    quasi_energy=eps_group,
                    avg_energy=float(ebars[a]),
                    quasi_energy_raw=eps_group,
                    residual=tail,
                    group_id=gid,
                    group_size=cluster.size,
                )
            )
    triplets.sort(key=lambda t: (t.avg_energy, t.quasi_energy))
    metadata = {
        "truncation": truncation,
        "tol_deg": tol_deg,
        "solver": "monodromy",
        "dim": h.dim,
        "omega": h.omega,
        "steps_per_period": config.steps_per_period,
        "unitarity_defect": mono.unitarity_defect,
    }
    return Spectrum(triplets=triplets, metadata=metadata)
