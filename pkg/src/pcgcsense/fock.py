"""Truncated multimode Fock-space states and operators.

Every state tracks the probability mass discarded by its truncation, so the
accuracy of downstream quantities can always be bounded.  Basis ordering is
lexicographic with the last mode varying fastest (C-order raveling), which
fixes CSV output and test vectors once and for all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    IndexOutOfTruncation,
    InvalidState,
    TruncationTooSevere,
)

NORM_TOL = 1e-12
HERM_TOL = 1e-12
TRACE_TOL = 1e-10
EIG_NEG_TOL = 1e-10

#: default discarded-mass target of the automatic cutoff selector
AUTO_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class FockTruncation:
    """Per-mode inclusive photon-number cutoffs of a truncated Fock space."""

    cutoffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.cutoffs) == 0:
            raise DomainError("at least one mode is required")
        if any(int(c) != c or c < 0 for c in self.cutoffs):
            raise IndexOutOfTruncation(f"cutoffs must be nonnegative integers: {self.cutoffs}")
        object.__setattr__(self, "cutoffs", tuple(int(c) for c in self.cutoffs))

    @property
    def mode_count(self) -> int:
        return len(self.cutoffs)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, n_vec: Sequence[int]) -> int:
        """Basis index of the occupation vector ``n_vec``."""
        n = tuple(int(v) for v in n_vec)
        if len(n) != self.mode_count:
            raise DimensionMismatch(f"expected {self.mode_count} occupations, got {len(n)}")
        if any(v < 0 or v > c for v, c in zip(n, self.cutoffs)):
            raise IndexOutOfTruncation(f"occupation {n} exceeds cutoffs {self.cutoffs}")
        return int(np.ravel_multi_index(n, self.dims))

    def occupations(self) -> np.ndarray:
        """(dim, mode_count) array of occupation vectors in basis order."""
        return _occupations(self.cutoffs)


@lru_cache(maxsize=None)
def _occupations(cutoffs: tuple[int, ...]) -> np.ndarray:
    dims = tuple(c + 1 for c in cutoffs)
    grids = np.indices(dims).reshape(len(dims), -1).T
    grids.setflags(write=False)
    return grids


@dataclass(frozen=True)
class StateVector:
    """Pure state on a truncation plus the probability mass cut away."""

    truncation: FockTruncation
    amplitudes: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.truncation.dim,):
            raise DimensionMismatch(
                f"amplitude vector of length {amps.shape} does not match dim {self.truncation.dim}"
            )
        if self.tail_mass < 0:
            raise InvalidState(f"negative tail mass {self.tail_mass}")
        total = float(np.vdot(amps, amps).real) + self.tail_mass
        if abs(total - 1.0) > NORM_TOL:
            raise InvalidState(f"norm^2 + tail_mass = {total} deviates from 1 beyond {NORM_TOL}")

    def to_density(self) -> "DensityOperator":
        """Rank-one density operator |psi><psi| with the tail as trace defect."""
        return DensityOperator(
            self.truncation,
            np.outer(self.amplitudes, self.amplitudes.conj()),
            trace_defect=self.tail_mass,
        )


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian PSD matrix on a truncation plus the trace it is missing."""

    truncation: FockTruncation
    matrix: np.ndarray
    trace_defect: float = 0.0

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        d = self.truncation.dim
        if mat.shape != (d, d):
            raise DimensionMismatch(f"matrix shape {mat.shape} does not match dim {d}")
        herm_dev = float(np.max(np.abs(mat - mat.conj().T))) if d else 0.0
        if herm_dev > HERM_TOL:
            raise InvalidState(f"hermiticity deviation {herm_dev} exceeds {HERM_TOL}")
        total = float(np.trace(mat).real) + self.trace_defect
        if abs(total - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace + defect = {total} deviates from 1 beyond {TRACE_TOL}")

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues, clipped at the roundoff floor; raises on real negativity."""
        lam = np.linalg.eigvalsh(self.matrix)
        return clip_spectrum(lam)

    def validate(self) -> None:
        """Run the expensive PSD check in addition to the constructor checks."""
        self.eigenvalues()


def clip_spectrum(lam: np.ndarray, neg_tol: float = EIG_NEG_TOL) -> np.ndarray:
    """Zero out eigenvalues in [-neg_tol, 0); anything lower is an error."""
    lam = np.asarray(lam, dtype=float)
    if lam.size and lam.min() < -neg_tol:
        raise InvalidState(f"eigenvalue {lam.min()} below -{neg_tol}; state is not PSD")
    return np.clip(lam, 0.0, None)


def hermitize(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Symmetrized matrix (A + A^dag)/2 and the size of the correction."""
    sym = 0.5 * (matrix + matrix.conj().T)
    correction = float(np.max(np.abs(matrix - sym))) if matrix.size else 0.0
    return sym, correction


def geometric_cutoff(mean: float, tol: float = AUTO_TAIL_TOL) -> int:
    """Smallest cutoff with geometric (thermal) tail mass below ``tol``."""
    if mean <= 0:
        return 0
    ratio = mean / (mean + 1.0)
    n = int(math.ceil(math.log(tol) / math.log(ratio))) - 1
    return max(n, 0)


def poisson_cutoff(mean: float, tol: float = AUTO_TAIL_TOL) -> int:
    """Smallest cutoff with Poisson tail mass below ``tol``."""
    if mean <= 0:
        return 0
    term = math.exp(-mean)
    cdf = term
    n = 0
    while 1.0 - cdf > tol:
        n += 1
        term *= mean / n
        cdf += term
        if n > 100000:
            raise TruncationTooSevere(f"no Poisson cutoff below tail {tol} for mean {mean}")
    return n


def number_state(n_vec: Sequence[int], trunc: FockTruncation) -> StateVector:
    """Multimode number state |n_1 ... n_M>."""
    idx = trunc.index(n_vec)
    amps = np.zeros(trunc.dim, dtype=complex)
    amps[idx] = 1.0
    return StateVector(trunc, amps, 0.0)


def coherent_state(alpha: complex, cutoff: int | None = None, *, tail_tol: float = 1e-6) -> StateVector:
    """Single-mode coherent state; errors if the cutoff discards > tail_tol."""
    mean = abs(alpha) ** 2
    if cutoff is None:
        cutoff = poisson_cutoff(mean)
    trunc = FockTruncation((int(cutoff),))
    amps = np.empty(trunc.dim, dtype=complex)
    amps[0] = math.exp(-mean / 2.0)
    for n in range(1, trunc.dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    tail = max(1.0 - float(np.vdot(amps, amps).real), 0.0)
    if tail > tail_tol:
        raise TruncationTooSevere(f"coherent tail {tail} above {tail_tol} at cutoff {cutoff}")
    return StateVector(trunc, amps, tail)


def thermal_state(n_bar: float, cutoff: int | None = None, *, defect_tol: float = 1e-9) -> DensityOperator:
    """Single-mode thermal state of mean photon number ``n_bar``."""
    if n_bar < 0:
        raise DomainError(f"thermal brightness must be >= 0, got {n_bar}")
    if cutoff is None:
        cutoff = geometric_cutoff(n_bar)
    trunc = FockTruncation((int(cutoff),))
    n = np.arange(trunc.dim)
    probs = (n_bar ** n) / (n_bar + 1.0) ** (n + 1) if n_bar > 0 else (n == 0).astype(float)
    defect = max(1.0 - float(probs.sum()), 0.0)
    if defect > defect_tol:
        raise TruncationTooSevere(f"thermal defect {defect} above {defect_tol} at cutoff {cutoff}")
    return DensityOperator(trunc, np.diag(probs.astype(complex)), defect)


def tmsv_state(n_s: float, cutoff: int | None = None, *, tail_tol: float = 1e-12) -> StateVector:
    """Two-mode squeezed vacuum on (ancilla, signal) with signal brightness ``n_s``.

    Schmidt coefficients are the square roots of the geometric distribution
    with mean ``n_s``, so the reduced state of either mode is thermal(n_s).
    """
    if n_s < 0:
        raise DomainError(f"signal brightness must be >= 0, got {n_s}")
    if cutoff is None:
        cutoff = geometric_cutoff(n_s, tail_tol)
    trunc = FockTruncation((int(cutoff), int(cutoff)))
    n = np.arange(cutoff + 1)
    weights = (n_s ** n) / (n_s + 1.0) ** (n + 1) if n_s > 0 else (n == 0).astype(float)
    tail = max(1.0 - float(weights.sum()), 0.0)
    if tail > tail_tol:
        raise TruncationTooSevere(f"TMSV tail {tail} above {tail_tol} at cutoff {cutoff}")
    amps = np.zeros(trunc.dim, dtype=complex)
    diag_idx = n * (cutoff + 1) + n
    amps[diag_idx] = np.sqrt(weights)
    return StateVector(trunc, amps, tail)


def phase_shift_unitary(phi_vec: Sequence[float], trunc: FockTruncation) -> np.ndarray:
    """Diagonal of the multimode phase-shift unitary exp(-i sum phi_m n_m)."""
    phi = np.asarray(phi_vec, dtype=float)
    if phi.shape != (trunc.mode_count,):
        raise DimensionMismatch(f"expected {trunc.mode_count} phases, got {phi.shape}")
    return np.exp(-1j * trunc.occupations() @ phi)


def partial_trace(rho: DensityOperator, keep_modes: Iterable[int]) -> DensityOperator:
    """Trace out every mode not listed in ``keep_modes`` (order preserved ascending)."""
    keep = tuple(sorted(set(int(m) for m in keep_modes)))
    mc = rho.truncation.mode_count
    if not keep:
        raise DomainError("keep_modes must be nonempty")
    if any(m < 0 or m >= mc for m in keep):
        raise DimensionMismatch(f"keep_modes {keep} out of range for {mc} modes")
    drop = [m for m in range(mc) if m not in keep]
    dims = rho.truncation.dims
    tensor = rho.matrix.reshape(dims + dims)
    remaining = mc
    for m in sorted(drop, reverse=True):
        tensor = np.trace(tensor, axis1=m, axis2=m + remaining)
        remaining -= 1
    out_trunc = FockTruncation(tuple(rho.truncation.cutoffs[m] for m in keep))
    matrix, _ = hermitize(tensor.reshape(out_trunc.dim, out_trunc.dim))
    return DensityOperator(out_trunc, matrix, rho.trace_defect)


def mean_photon_number(rho: DensityOperator, mode: int = 0) -> float:
    """Mean occupation of one mode, computed from the diagonal marginal."""
    mc = rho.truncation.mode_count
    if mode < 0 or mode >= mc:
        raise DimensionMismatch(f"mode {mode} out of range for {mc} modes")
    probs = np.real(np.diag(rho.matrix))
    return float(probs @ rho.truncation.occupations()[:, mode])


def annihilation_matrix(cutoff: int) -> np.ndarray:
    """Single-mode annihilation operator on a cutoff-truncated space."""
    a = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    n = np.arange(1, cutoff + 1)
    a[n - 1, n] = np.sqrt(n)
    return a
