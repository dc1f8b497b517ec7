"""Extended-space (Sambe) diagonalization and average-energy resolution.

Mode convention
---------------
A T-periodic mode is stored by its Fourier coefficients over a truncated
harmonic range,

    Phi(t) = sum_{m=-M}^{M} phi^(m) * exp(+i m omega t),

matching the e^{+i m omega t} sign fixed in `model`.  With this choice the
extended-space operator H(t) - i d/dt becomes the Hermitian block matrix

    S[(m), (m')] = H_{m-m'} + m * omega * delta_{m m'} * I_d,

and the two quadratic forms used throughout are

    eps[Phi]     = sum_{m,m'} <phi^(m)| H_{m-m'} |phi^(m')>
                   + sum_m m * omega * ||phi^(m)||^2        (= x^H S x)
    ebar_cal[Phi] = sum_{m,m'} <phi^(m)| H_{m-m'} |phi^(m')>  (= x^H T x)

so ebar_cal[Phi] = eps[Phi] - sum_m m*omega*||phi^(m)||^2 holds exactly.
Shifting all harmonic indices by k multiplies the mode by e^{+i k omega t}:
it adds exactly k*omega to eps and leaves ebar_cal unchanged (replica
freedom).

Pipeline
--------
Each eigenvalue of S belongs to a replica ladder lam + k*omega of a single
physical state.  `select_representatives` folds eigenvalues to one
Brillouin zone [0, omega), clusters them, and keeps, per physical state,
the ladder rung whose Fourier-weight centroid sum_m m*||phi^(m)||^2 is
nearest zero (least truncation contamination).  Degenerate quasi-energies
are then resolved by diagonalizing the average-energy block

    Hbar[i, j] = sum_{m,m'} <phi_i^(m)| H_{m-m'} |phi_j^(m')>,

which equals the one-period average (1/T) int <Phi_i(t)|H(t)|Phi_j(t)> dt.
The result is the eigentriplet spectrum (mode, quasi-energy, average
energy), ordered by average energy.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .model import FourierHamiltonian, model_hash, require_valid


class TruncationError(RuntimeError):
    """Raised when the harmonic cutoff M is too small for the model."""


class SolverError(RuntimeError):
    """Raised when the dense eigensolver fails or leaves large residuals."""


def fold(value: float | np.ndarray, omega: float):
    """Fold an energy into the quasi-energy Brillouin zone [0, omega)."""
    return np.mod(value, omega)


def fold_reported(value: float, omega: float, seam_tol: float = 1e-12) -> float:
    """Fold with the zone seam snapped: values within seam_tol * omega below
    omega report as 0.0, so floating-point noise around an integer multiple
    of omega cannot flip a state across the Brillouin-zone boundary."""
    f = float(np.mod(value, omega))
    if omega - f <= seam_tol * omega:
        return 0.0
    return f


def wrap_distance(a, b, omega: float):
    """Distance between folded quasi-energies on the Brillouin circle."""
    diff = np.abs(np.mod(a - b, omega))
    return np.minimum(diff, omega - diff)


# --- Floquet modes ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FloquetMode:
    """Fourier coefficients phi^(m), m = -M..M, stored as rows of coeffs.

    coeffs has shape (2M+1, d); row index i corresponds to m = i - M.
    The Floquet-space inner product is the plain vector inner product of
    the stacked coefficients, realizing (1/T) int <Phi(t)|Phi'(t)> dt.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] % 2 != 1:
            raise ValueError(f"coeffs must be (2M+1, d), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def truncation(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def harmonic_indices(self) -> np.ndarray:
        return np.arange(-self.truncation, self.truncation + 1)

    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "FloquetMode":
        return FloquetMode(self.coeffs / self.norm())

    def inner(self, other: "FloquetMode") -> complex:
        return complex(np.vdot(self.flat(), other.flat()))

    def centroid(self) -> float:
        """Fourier-weight centroid sum_m m * ||phi^(m)||^2 (normalized)."""
        weights = np.sum(np.abs(self.coeffs) ** 2, axis=1)
        total = weights.sum()
        return float(np.dot(self.harmonic_indices, weights) / total)

    def shift(self, k: int) -> tuple["FloquetMode", float]:
        """Shift harmonic indices by k (multiply by e^{+i k omega t}).

        Returns the shifted mode and the squared weight lost past the
        truncation edge.
        """
        nb = self.coeffs.shape[0]
        out = np.zeros_like(self.coeffs)
        if k >= 0:
            out[k:] = self.coeffs[: nb - k]
            dropped = self.coeffs[nb - k :]
        else:
            out[: nb + k] = self.coeffs[-k:]
            dropped = self.coeffs[: -k]
        lost = float(np.sum(np.abs(dropped) ** 2))
        return FloquetMode(out), lost

    def at_time(self, t: float, omega: float) -> np.ndarray:
        """Synthesize Phi(t) = sum_m phi^(m) e^{+i m omega t}."""
        phases = np.exp(1j * self.harmonic_indices * omega * t)
        return phases @ self.coeffs

    @staticmethod
    def from_flat(x: np.ndarray, dim: int) -> "FloquetMode":
        return FloquetMode(np.asarray(x, dtype=complex).reshape(-1, dim))

    @staticmethod
    def from_block(vector: np.ndarray, m: int, truncation: int) -> "FloquetMode":
        """Mode with a single nonzero harmonic block at index m."""
        vector = np.asarray(vector, dtype=complex)
        coeffs = np.zeros((2 * truncation + 1, vector.size), dtype=complex)
        coeffs[m + truncation] = vector
        return FloquetMode(coeffs)


def replica_overlap(a: FloquetMode, b: FloquetMode) -> tuple[float, int]:
    """max_k |<<shift_k(a)|b>>| over all harmonic shifts, with the argmax."""
    nb = a.coeffs.shape[0]
    best, best_k = 0.0, 0
    for k in range(-(nb - 1), nb):
        shifted, _ = a.shift(k)
        val = abs(np.vdot(shifted.flat(), b.flat()))
        if val > best:
            best, best_k = val, k
    return best, best_k


# --- extended-space matrices ----------------------------------------------

def build_sambe(h: FourierHamiltonian, truncation: int) -> np.ndarray:
    """Hermitian Floquet matrix of size (2M+1)*d for H(t) - i d/dt.

    Block (m, m') = H_{m-m'} + m*omega*delta_{mm'}*I.  M below the largest
    stored harmonic index would silently drop physics and is rejected.
    """
    require_valid(h)
    if truncation < h.max_harmonic:
        raise TruncationError(
            f"truncation M={truncation} is below the largest harmonic index "
            f"{h.max_harmonic} of the model"
        )
    nb = 2 * truncation + 1
    size = nb * h.dim
    s = np.zeros((size, size), dtype=complex)
    for k, mat in h.harmonics.items():
        s += np.kron(np.eye(nb, k=-k), mat)
    block_energies = np.arange(-truncation, truncation + 1) * h.omega
    s += np.kron(np.diag(block_energies), np.eye(h.dim))
    return s


def build_energy_matrix(h: FourierHamiltonian, truncation: int) -> np.ndarray:
    """Block-Toeplitz matrix of the one-period averaged energy form.

    x^H T x equals (1/T) int_0^T <Phi(t)|H(t)|Phi(t)> dt for the mode with
    stacked coefficients x; it is the Sambe matrix without the m*omega
    diagonal.
    """
    require_valid(h)
    if truncation < h.max_harmonic:
        raise TruncationError(
            f"truncation M={truncation} is below the largest harmonic index "
            f"{h.max_harmonic} of the model"
        )
    nb = 2 * truncation + 1
    size = nb * h.dim
    t = np.zeros((size, size), dtype=complex)
    for k, mat in h.harmonics.items():
        t += np.kron(np.eye(nb, k=-k), mat)
    return t


def diagonalize(s: np.ndarray, residual_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum of a Hermitian matrix with a residual certificate.

    Returns (eigenvalues ascending, eigenvectors as columns).  Residuals
    ||S v - lam v|| are checked against residual_tol * ||S||.
    """
    s = np.asarray(s)
    herm_defect = np.linalg.norm(s - s.conj().T)
    if herm_defect > 1e-12 * max(1.0, np.linalg.norm(s)):
        raise SolverError(f"matrix is not Hermitian (defect {herm_defect:.3e})")
    try:
        vals, vecs = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:
        raise SolverError(
            f"eigensolver failed: {exc}; size={s.shape[0]}, "
            f"norm={np.linalg.norm(s):.3e}"
        ) from exc
    scale = max(np.abs(vals).max(), 1.0)
    residuals = np.linalg.norm(s @ vecs - vecs * vals, axis=0)
    worst = float(residuals.max())
    if worst > residual_tol * scale:
        raise SolverError(
            f"eigensolver residual {worst:.3e} exceeds {residual_tol:.1e} * "
            f"{scale:.3e}; matrix size {s.shape[0]}"
        )
    return vals, vecs


# --- representative selection ---------------------------------------------

@dataclass(frozen=True, eq=False)
class Representative:
    """One physical state per Brillouin zone, before degeneracy resolution.

    quasi_energy is folded into [0, omega); quasi_energy_raw is the actual
    Sambe eigenvalue of the stored mode (quasi_energy + k*omega for the
    selected ladder rung).
    """

    mode: FloquetMode
    quasi_energy: float
    quasi_energy_raw: float
    residual: float


def _circular_clusters(folded: np.ndarray, omega: float, tol: float) -> list[np.ndarray]:
    """Transitive clustering of folded quasi-energies, wrap-aware."""
    order = np.argsort(folded, kind="stable")
    values = folded[order]
    clusters: list[list[int]] = [[int(order[0])]]
    for prev, idx in zip(values[:-1], order[1:]):
        if folded[idx] - prev <= tol:
            clusters[-1].append(int(idx))
        else:
            clusters.append([int(idx)])
    if len(clusters) > 1:
        gap = (omega - values[-1]) + values[0]
        if gap <= tol:
            clusters[0] = clusters.pop() + clusters[0]
    return [np.asarray(c) for c in clusters]


def select_representatives(
    eigvals: np.ndarray,
    eigvecs: np.ndarray,
    h: FourierHamiltonian,
    truncation: int,
    tol_deg: float | None = None,
) -> list[Representative]:
    """Pick exactly d physical states from the raw Sambe spectrum.

    Raw eigenvalues are folded into [0, omega) and clustered (wrap-aware)
    into physical quasi-energy families.  Within each family the raw
    eigenvalues stack into ladder rungs separated by omega; the rung whose
    mean Fourier-weight centroid is nearest zero is kept, so degenerate
    members come from one consistent replica.  Too few detected families
    means the truncation is eating states; that raises TruncationError with
    the advice to increase M.
    """
    omega, d = h.omega, h.dim
    if tol_deg is None:
        tol_deg = 1e-8 * omega
    nb = 2 * truncation + 1
    s = build_sambe(h, truncation)

    centroids = np.array(
        [
            FloquetMode.from_flat(eigvecs[:, j], d).centroid()
            for j in range(eigvals.size)
        ]
    )
    folded = fold(eigvals, omega)
    clusters = _circular_clusters(folded, omega, tol_deg)

    min_rungs = max(2, nb // 3)
    reps: list[Representative] = []
    for cluster in clusters:
        idx = cluster[np.argsort(eigvals[cluster], kind="stable")]
        vals = eigvals[idx]
        # ladder rungs are omega apart; split at gaps past the half-way mark
        breaks = np.where(np.diff(vals) > omega / 2)[0]
        rungs = np.split(idx, breaks + 1)
        if len(rungs) < min_rungs:
            continue  # truncation-contaminated corner states, not a family
        # degenerate families' ladders may overlap only partially within the
        # truncation window; only rungs carrying the full multiplicity hold
        # one consistent replica of every member family
        max_mult = max(len(r) for r in rungs)
        full_rungs = [r for r in rungs if len(r) == max_mult]
        def rung_key(r):
            c = float(np.mean(centroids[r]))
            lam = float(np.mean(eigvals[r]))
            return (round(abs(c), 9), abs(lam), lam)
        chosen = min(full_rungs, key=rung_key)
        lam_anchor = float(np.mean(eigvals[chosen]))
        for j in chosen:
            x = eigvecs[:, j]
            res = float(np.linalg.norm(s @ x - eigvals[j] * x))
            mode = FloquetMode.from_flat(x, d).normalized()
            reps.append(
                Representative(
                    mode=mode,
                    quasi_energy=fold_reported(lam_anchor, omega),
                    quasi_energy_raw=float(eigvals[j]),
                    residual=res,
                )
            )
    if len(reps) != d:
        raise TruncationError(
            f"found {len(reps)} replica families, expected {d}: "
            f"truncation M={truncation} is too small, increase M"
        )
    reps.sort(key=lambda r: (r.quasi_energy, r.quasi_energy_raw))
    return reps


# --- degeneracy grouping and resolution ------------------------------------

@dataclass(frozen=True, eq=False)
class DegenerateGroup:
    """Representatives sharing a quasi-energy, plus their energy block.

    Member modes are replica-aligned: all carry the same raw Sambe
    eigenvalue (within tolerance), so the block below is the matrix of the
    physical average-energy operator restricted to the degenerate subspace.
    """

    members: tuple[Representative, ...]
    quasi_energy: float
    block: np.ndarray

    @property
    def size(self) -> int:
        return len(self.members)


def group_degeneracies(
    reps: list[Representative],
    h: FourierHamiltonian,
    tol_deg: float | None = None,
) -> list[DegenerateGroup]:
    """Cluster representatives with |eps_i - eps_j| <= tol_deg (wrapped).

    The Brillouin-zone boundary is treated as wrapped, so eps near 0 and
    near omega may form one group.  Members of a group are shifted to a
    common replica (same raw eigenvalue) before the average-energy block is
    evaluated; singleton groups are allowed.
    """
    omega = h.omega
    if tol_deg is None:
        tol_deg = 1e-8 * omega
    if not reps:
        return []
    folded = np.array([r.quasi_energy for r in reps])
    clusters = _circular_clusters(folded, omega, tol_deg)
    groups: list[DegenerateGroup] = []
    for cluster in clusters:
        members = [reps[int(i)] for i in np.sort(cluster)]
        anchor = members[0]
        aligned: list[Representative] = [anchor]
        for member in members[1:]:
            k = int(np.round((member.quasi_energy_raw - anchor.quasi_energy_raw) / omega))
            if k != 0:
                shifted, lost = member.mode.shift(-k)
                if lost > 1e-6:
                    raise TruncationError(
                        f"replica alignment by k={-k} loses weight {lost:.2e}; "
                        f"increase M"
                    )
                member = replace(
                    member,
                    mode=shifted.normalized(),
                    quasi_energy_raw=member.quasi_energy_raw - k * omega,
                )
            aligned.append(member)
        block = average_energy_block([m.mode for m in aligned], h)
        groups.append(
            DegenerateGroup(
                members=tuple(aligned),
                quasi_energy=anchor.quasi_energy,
                block=block,
            )
        )
    groups.sort(key=lambda g: g.quasi_energy)
    return groups


def average_energy_block(modes: list[FloquetMode], h: FourierHamiltonian) -> np.ndarray:
    """k x k Hermitian block Hbar_ij = sum_{m,m'} <phi_i^(m)|H_{m-m'}|phi_j^(m')>.

    Equals (1/T) int_0^T <Phi_i(t)|H(t)|Phi_j(t)> dt for modes inside the
    truncation; the modes are assumed orthonormal in the Floquet inner
    product.
    """
    if not modes:
        return np.zeros((0, 0), dtype=complex)
    t = build_energy_matrix(h, modes[0].truncation)
    basis = np.column_stack([m.flat() for m in modes])
    block = basis.conj().T @ t @ basis
    return 0.5 * (block + block.conj().T)


# --- eigentriplets and spectra ---------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenTriplet:
    """(mode, quasi-energy, average energy) with solver provenance.

    quasi_energy is the group-shared folded value in [0, omega);
    quasi_energy_raw is the Sambe eigenvalue of the stored mode (they
    differ by an integer multiple of omega).  group_id indexes the
    degenerate group the state was resolved in; ebar_degenerate flags a
    residual average-energy degeneracy inside that group.
    """

    mode: FloquetMode
    quasi_energy: float
    avg_energy: float
    quasi_energy_raw: float
    residual: float
    group_id: int
    group_size: int
    ebar_degenerate: bool = False


@dataclass(eq=False)
class Spectrum:
    """Eigentriplets ordered by average energy, plus run metadata."""

    triplets: list[EigenTriplet]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.triplets)

    def __iter__(self):
        return iter(self.triplets)

    def __getitem__(self, i) -> EigenTriplet:
        return self.triplets[i]

    @property
    def quasi_energies(self) -> np.ndarray:
        return np.array([t.quasi_energy for t in self.triplets])

    @property
    def avg_energies(self) -> np.ndarray:
        return np.array([t.avg_energy for t in self.triplets])

    @property
    def modes(self) -> list[FloquetMode]:
        return [t.mode for t in self.triplets]

    def to_json_dict(self) -> dict:
        states = []
        for t in self.triplets:
            states.append(
                {
                    "quasi_energy": t.quasi_energy,
                    "avg_energy": t.avg_energy,
                    "quasi_energy_raw": t.quasi_energy_raw,
                    "residual": t.residual,
                    "group_id": t.group_id,
                    "group_size": t.group_size,
                    "ebar_degenerate": t.ebar_degenerate,
                    "coeffs_re": t.mode.coeffs.real.tolist(),
                    "coeffs_im": t.mode.coeffs.imag.tolist(),
                }
            )
        return {"states": states, "metadata": self.metadata}

    @staticmethod
    def from_json_dict(payload: dict) -> "Spectrum":
        triplets = []
        for st in payload["states"]:
            coeffs = np.asarray(st["coeffs_re"], dtype=float) + 1j * np.asarray(
                st["coeffs_im"], dtype=float
            )
            triplets.append(
                EigenTriplet(
                    mode=FloquetMode(coeffs),
                    quasi_energy=st["quasi_energy"],
                    avg_energy=st["avg_energy"],
                    quasi_energy_raw=st["quasi_energy_raw"],
                    residual=st["residual"],
                    group_id=st["group_id"],
                    group_size=st["group_size"],
                    ebar_degenerate=st["ebar_degenerate"],
                )
            )
        return Spectrum(triplets=triplets, metadata=dict(payload["metadata"]))


def _largest_coeff_index(mode: FloquetMode) -> int:
    return int(np.argmax(np.abs(mode.flat())))


def resolve_degeneracies(
    groups: list[DegenerateGroup],
    h: FourierHamiltonian,
    metadata: dict | None = None,
    ebar_tie_tol: float = 1e-10,
) -> Spectrum:
    """Diagonalize each group's average-energy block into eigentriplets.

    Members are rotated into the eigenbasis of the block; the rotated
    states remain quasi-energy eigenstates because the members share one
    raw eigenvalue.  Triplets are ordered by average energy ascending, with
    ties broken by quasi-energy and then by the index of the
    largest-magnitude coefficient (reproducibility; residual average-energy
    degeneracies are flagged, not interpreted).
    """
    if not groups:
        return Spectrum(triplets=[], metadata=metadata or {})
    truncation = groups[0].members[0].mode.truncation
    s = build_sambe(h, truncation)
    triplets: list[EigenTriplet] = []
    for gid, group in enumerate(groups):
        ebars, rotation = np.linalg.eigh(group.block)
        basis = np.column_stack([m.mode.flat() for m in group.members])
        rotated = basis @ rotation
        scale = max(1.0, float(np.abs(ebars).max()) if ebars.size else 1.0)
        tied = np.zeros(group.size, dtype=bool)
        for a in range(group.size - 1):
            if abs(ebars[a + 1] - ebars[a]) <= ebar_tie_tol * scale:
                tied[a] = tied[a + 1] = True
        lam = float(np.mean([m.quasi_energy_raw for m in group.members]))
        for a in range(group.size):
            x = rotated[:, a]
            x = x / np.linalg.norm(x)
            res = float(np.linalg.norm(s @ x - lam * x))
            triplets.append(
                EigenTriplet(
                    mode=FloquetMode.from_flat(x, h.dim),
                    quasi_energy=group.quasi_energy,
                    avg_energy=float(ebars[a]),
                    quasi_energy_raw=lam,
                    residual=res,
                    group_id=gid,
                    group_size=group.size,
                    ebar_degenerate=bool(tied[a]),
                )
            )
    triplets.sort(
        key=lambda t: (t.avg_energy, t.quasi_energy, _largest_coeff_index(t.mode))
    )
    meta = dict(metadata or {})
    meta.setdefault("residual_max", max(t.residual for t in triplets))
    return Spectrum(triplets=triplets, metadata=meta)


# --- functionals ------------------------------------------------------------

def _check_normalized(mode: FloquetMode, tol: float = 1e-8):
    n = mode.norm()
    if abs(n - 1.0) > tol:
        raise ValueError(f"mode is not normalized: ||Phi|| = {n}")


def quasi_energy_functional(mode: FloquetMode, h: FourierHamiltonian) -> float:
    """eps[Phi] = <<Phi| H - i d/dt |Phi>> for a normalized mode.

    On an eigenstate this equals its quasi-energy up to the Brillouin-zone
    shift k*omega of the stored replica.
    """
    _check_normalized(mode)
    s = build_sambe(h, mode.truncation)
    x = mode.flat()
    return float(np.real(np.vdot(x, s @ x)))


def average_energy_functional(mode: FloquetMode, h: FourierHamiltonian) -> float:
    """ebar_cal[Phi] = (1/T) int <Phi(t)|H(t)|Phi(t)> dt for a normalized mode.

    Replica-invariant: harmonic-index shifts leave the value unchanged.
    """
    _check_normalized(mode)
    t = build_energy_matrix(h, mode.truncation)
    x = mode.flat()
    return float(np.real(np.vdot(x, t @ x)))


# --- assembled operators (Ritz bound, block-structure checks) --------------

def assembled_average_energy(
    spectrum: Spectrum, h: FourierHamiltonian, tail_tol: float = 1e-12
) -> np.ndarray:
    """The operator sum_n Hbar_n on the truncated Floquet space.

    Assembled from the resolved spectrum: every triplet contributes its
    replica ladder  sum_k ebar |shift_k Phi><shift_k Phi|, keeping shifts
    whose truncation loss is below tail_tol.  Its expectation value on any
    normalized mode realizes the average-energy functional of the Ritz
    bound; its lowest eigenvalue is the ground average energy.
    """
    if not spectrum.triplets:
        raise ValueError("empty spectrum")
    truncation = spectrum[0].mode.truncation
    nb = 2 * truncation + 1
    size = nb * h.dim
    columns, weights = [], []
    for t in spectrum:
        for k in range(-(nb - 1), nb):
            shifted, lost = t.mode.shift(k)
            if lost <= tail_tol:
                columns.append(shifted.normalized().flat())
                weights.append(t.avg_energy)
    basis = np.column_stack(columns)
    a = (basis * np.asarray(weights)) @ basis.conj().T
    return 0.5 * (a + a.conj().T)


def average_energy_matrix(
    spectrum: Spectrum, h: FourierHamiltonian, projected: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Average-energy matrix over the d resolved states, plus phase matrix.

    Returns (hbar, phases) where hbar[i, j] = <<Phi_i| H |Phi_j>> and
    phases = diag(e^{-i eps_i T}).  With projected=True, entries between
    distinct quasi-energy groups are zeroed, which makes hbar block-diagonal
    and commuting with the phase matrix by construction; projected=False
    gives the uncontracted matrix for contrast.
    """
    modes = spectrum.modes
    hbar = average_energy_block(modes, h)
    if projected:
        gids = np.array([t.group_id for t in spectrum])
        mask = gids[:, None] == gids[None, :]
        hbar = np.where(mask, hbar, 0.0)
    phases = np.diag(np.exp(-1j * spectrum.quasi_energies * h.period))
    return hbar, phases


# --- end-to-end solve -------------------------------------------------------

def solve_at_truncation(
    h: FourierHamiltonian, truncation: int, tol_deg: float | None = None
) -> Spectrum:
    """Solve the eigentriplet spectrum at a fixed harmonic cutoff."""
    require_valid(h)
    if tol_deg is None:
        tol_deg = 1e-8 * h.omega
    s = build_sambe(h, truncation)
    vals, vecs = diagonalize(s)
    reps = select_representatives(vals, vecs, h, truncation, tol_deg)
    groups = group_degeneracies(reps, h, tol_deg)
    metadata = {
        "truncation": truncation,
        "tol_deg": tol_deg,
        "solver": "sambe-eigh",
        "dim": h.dim,
        "omega": h.omega,
        "model_hash": model_hash(h),
    }
    return resolve_degeneracies(groups, h, metadata)


def certify_truncation(
    h: FourierHamiltonian,
    start: int | None = None,
    quasi_tol: float = 1e-9,
    max_truncation: int = 64,
) -> int:
    """Smallest certified cutoff: double M until quasi-energies settle.

    Returns the first M = 2*M_prev at which every folded quasi-energy moved
    less than quasi_tol from the M_prev solve (wrap-aware, matched after
    sorting).  The harmonic cutoff is the one approximation in the whole
    construction, so it is certified rather than guessed.
    """
    require_valid(h)
    m = max(1, h.max_harmonic) if start is None else max(start, h.max_harmonic, 1)
    prev: np.ndarray | None = None
    while m <= max_truncation:
        try:
            eps = np.sort(solve_at_truncation(h, m).quasi_energies)
        except TruncationError:
            eps = None
        if eps is not None and prev is not None:
            drift = wrap_distance(eps, prev, h.omega).max()
            if drift < quasi_tol:
                return m
        prev = eps
        m *= 2
    raise TruncationError(
        f"quasi-energies did not settle below {quasi_tol} up to M={max_truncation}"
    )


def solve_spectrum(
    h: FourierHamiltonian,
    truncation: int | str = "auto",
    tol_deg: float | None = None,
    timestamp: bool = False,
) -> Spectrum:
    """Full pipeline: certify M (if 'auto'), diagonalize, fold, resolve."""
    if truncation == "auto":
        m = certify_truncation(h)
        auto = True
    else:
        m = int(truncation)
        auto = False
    spectrum = solve_at_truncation(h, m, tol_deg)
    spectrum.metadata["truncation_auto"] = auto
    if timestamp:
        spectrum.metadata["timestamp"] = datetime.datetime.now().isoformat()
    return spectrum


def spectrum_to_json(spectrum: Spectrum) -> str:
    return json.dumps(spectrum.to_json_dict(), indent=1)


def spectrum_from_json(text: str) -> Spectrum:
    return Spectrum.from_json_dict(json.loads(text))
