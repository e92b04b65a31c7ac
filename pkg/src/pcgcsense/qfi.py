"""Brute-force Fisher-information oracles on truncated Fock representations.

Two independent routes to the quantum Fisher information matrix are provided:
the symmetric-logarithmic-derivative construction (``qfim_sld``) and a second
derivative of the Uhlmann fidelity (``qfi_from_fidelity``).  Both rely only on
dense Hermitian eigendecompositions; no sparsity or rank structure is assumed.
Classical Fisher information comes from the same stencil applied to the
Bhattacharyya overlap of probability distributions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateSupport,
    DimensionMismatch,
    DomainError,
    NonConvergent,
)
from .fock import DensityOperator, clip_spectrum, hermitize

#: relative step for first-derivative central differences
FD_REL_STEP = 1e-4
#: relative step for second-derivative overlap stencils; larger than the
#: first-derivative step so 1 - F stays above the cancellation noise floor
FD2_REL_STEP = 1e-3
SLD_EIG_TOL = 1e-12
SLD_CONV_TOL = 1e-5
OVERLAP_CONV_TOL = 1e-4
_CONV_ABS_FLOOR = 1e-9


@dataclass(frozen=True)
class QFIMatrix:
    """Symmetric positive-semidefinite K x K Fisher information matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"information matrix must be square, got {m.shape}")
        asym = float(np.max(np.abs(m - m.T)))
        if asym > 1e-9:
            raise DomainError(f"information matrix asymmetry {asym} exceeds 1e-9")
        m = 0.5 * (m + m.T)
        lam_min = float(np.linalg.eigvalsh(m).min())
        if lam_min < -1e-8:
            raise DomainError(f"information matrix eigenvalue {lam_min} below -1e-8")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def theta_dim(self) -> int:
        return self.entries.shape[0]

    def scalar(self) -> float:
        """The single entry of a one-parameter information matrix."""
        if self.theta_dim != 1:
            raise DimensionMismatch("scalar() requires a one-parameter matrix")
        return float(self.entries[0, 0])


@dataclass(frozen=True)
class StateFamily:
    """Deterministic map from a parameter vector to a DensityOperator."""

    evaluator: Callable[[np.ndarray], DensityOperator]
    theta_dim: int
    fd_steps: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.theta_dim not in (1, 2):
            raise DomainError(f"theta_dim must be 1 or 2, got {self.theta_dim}")
        if self.fd_steps is not None and len(self.fd_steps) != self.theta_dim:
            raise DimensionMismatch("fd_steps length must equal theta_dim")


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, DensityOperator):
        return state.matrix
    return np.asarray(state, dtype=complex)


def default_fd_steps(theta: np.ndarray, rel: float = FD_REL_STEP) -> np.ndarray:
    return rel * np.maximum(np.abs(theta), 1.0)


def sld(rho, drho, eig_tol: float = SLD_EIG_TOL) -> np.ndarray:
    """Hermitian L with drho = (rho L + L rho)/2 on the retained support.

    In the eigenbasis of rho, L_jk = 2 (drho)_jk / (lam_j + lam_k) wherever
    lam_j + lam_k exceeds ``eig_tol`` relative to the largest eigenvalue;
    entries below that support are zeroed.  If the zeroed part of drho
    carries significant weight the equation has no solution there and
    DegenerateSupport is raised.
    """
    rho_m, _ = hermitize(_as_matrix(rho))
    drho_m, _ = hermitize(_as_matrix(drho))
    lam, vecs = np.linalg.eigh(rho_m)
    lam = clip_spectrum(lam)
    l_tilde = _sld_in_eigenbasis(lam, vecs, drho_m, eig_tol)
    out = vecs @ l_tilde @ vecs.conj().T
    return hermitize(out)[0]


def _sld_in_eigenbasis(lam, vecs, drho_m, eig_tol) -> np.ndarray:
    d_tilde = hermitize(vecs.conj().T @ drho_m @ vecs)[0]
    lam_max = float(lam.max()) if lam.size else 0.0
    denom = lam[:, None] + lam[None, :]
    keep = denom > eig_tol * max(lam_max, np.finfo(float).tiny)
    dropped = float(np.linalg.norm(d_tilde[~keep]))
    total = float(np.linalg.norm(d_tilde))
    if dropped > 1e-6 * max(total, 1.0):
        raise DegenerateSupport(
            f"derivative weight {dropped} outside the retained support (norm {total})"
        )
    l_tilde = np.zeros_like(d_tilde)
    l_tilde[keep] = 2.0 * d_tilde[keep] / denom[keep]
    return l_tilde


def _qfim_from_derivs(lam, vecs, derivs, eig_tol) -> np.ndarray:
    k = len(derivs)
    slds = [_sld_in_eigenbasis(lam, vecs, d, eig_tol) for d in derivs]
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            val = float(np.sum(lam[:, None] * (slds[i] * slds[j].conj()).real))
            out[i, j] = out[j, i] = val
    return out


def _family_derivatives(family: StateFamily, theta: np.ndarray, steps: np.ndarray):
    """Richardson-extrapolated central differences at two resolutions."""
    coarse, fine = [], []
    shape = None
    for i in range(family.theta_dim):
        stencil = {}
        for mult in (1.0, 0.5, 0.25):
            h = steps[i] * mult
            up, dn = theta.copy(), theta.copy()
            up[i] += h
            dn[i] -= h
            mp = family.evaluator(up).matrix
            mm = family.evaluator(dn).matrix
            if shape is None:
                shape = mp.shape
            if mp.shape != shape or mm.shape != shape:
                raise DimensionMismatch("family evaluator changed truncation across the stencil")
            stencil[mult] = (mp - mm) / (2.0 * h)
        coarse.append(hermitize((4.0 * stencil[0.5] - stencil[1.0]) / 3.0)[0])
        fine.append(hermitize((4.0 * stencil[0.25] - stencil[0.5]) / 3.0)[0])
    return coarse, fine


def qfim_sld(
    family: StateFamily,
    theta: Sequence[float],
    *,
    eig_tol: float = SLD_EIG_TOL,
    conv_tol: float = SLD_CONV_TOL,
) -> QFIMatrix:
    """QFIM from finite-difference state derivatives and SLD operators.

    The matrix is computed at two finite-difference resolutions; if halving
    the step moves any entry by more than ``conv_tol`` relative to the matrix
    scale the computation is declared NonConvergent.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.shape != (family.theta_dim,):
        raise DimensionMismatch(f"theta shape {th.shape} does not match K={family.theta_dim}")
    rho0 = family.evaluator(th)
    lam, vecs = np.linalg.eigh(hermitize(rho0.matrix)[0])
    lam = clip_spectrum(lam)
    steps = np.asarray(family.fd_steps, dtype=float) if family.fd_steps else default_fd_steps(th)
    coarse, fine = _family_derivatives(family, th, steps)
    k_coarse = _qfim_from_derivs(lam, vecs, coarse, eig_tol)
    k_fine = _qfim_from_derivs(lam, vecs, fine, eig_tol)
    scale = max(float(np.max(np.abs(k_fine))), float(np.max(np.abs(k_coarse))))
    drift = float(np.max(np.abs(k_fine - k_coarse)))
    if drift > conv_tol * scale + _CONV_ABS_FLOOR:
        raise NonConvergent(
            f"QFIM moved by {drift} (scale {scale}) under step halving; tolerance {conv_tol}"
        )
    return QFIMatrix(k_fine)


def uhlmann_fidelity(rho, sigma) -> float:
    """Tr sqrt(sqrt(rho) sigma sqrt(rho)) via Hermitian eigendecompositions."""
    if isinstance(rho, DensityOperator) and isinstance(sigma, DensityOperator):
        if rho.truncation != sigma.truncation:
            raise DimensionMismatch("fidelity requires both states on the same truncation")
    rho_m = _as_matrix(rho)
    sig_m = _as_matrix(sigma)
    if rho_m.shape != sig_m.shape:
        raise DimensionMismatch(f"shape mismatch {rho_m.shape} vs {sig_m.shape}")
    lam, vecs = np.linalg.eigh(hermitize(rho_m)[0])
    lam = clip_spectrum(lam)
    sqrt_rho = (vecs * np.sqrt(lam)) @ vecs.conj().T
    inner = hermitize(sqrt_rho @ sig_m @ sqrt_rho)[0]
    w = clip_spectrum(np.linalg.eigvalsh(inner))
    return float(np.sum(np.sqrt(w)))


def fidelity_from_factors(a: np.ndarray, b: np.ndarray) -> float:
    """Uhlmann fidelity of rho = A A^dag and sigma = B B^dag.

    Equal to the nuclear norm of A^dag B: write A = sqrt(rho) U with U a
    partial isometry, likewise B, and use the unitary invariance of singular
    values.  Lets fidelities of wide Kraus-branch factorizations be computed
    without forming the density matrices.
    """
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"factors live on different spaces: {a.shape} vs {b.shape}")
    overlap = a.conj().T @ b
    return float(np.linalg.svd(overlap, compute_uv=False).sum())


def _neg4_hessian(
    overlap: Callable[[np.ndarray], float],
    theta_dim: int,
    steps: np.ndarray,
    conv_tol: float,
    label: str,
) -> np.ndarray:
    """-4 times the Hessian in the primed argument of a symmetric overlap.

    ``overlap(offset)`` must return F(theta, theta + offset); the value at
    offset 0 anchors the stencil.  One Richardson extrapolation is applied
    and step halving must agree within ``conv_tol``.
    """
    f0 = overlap(np.zeros(theta_dim))

    def second(i, j, h_i, h_j):
        if i == j:
            e = np.zeros(theta_dim)
            e[i] = h_i
            return (overlap(e) + overlap(-e) - 2.0 * f0) / h_i ** 2
        acc = 0.0
        for si in (1.0, -1.0):
            for sj in (1.0, -1.0):
                e = np.zeros(theta_dim)
                e[i] = si * h_i
                e[j] = sj * h_j
                acc += si * sj * overlap(e)
        return acc / (4.0 * h_i * h_j)

    def hessian(mult):
        out = np.zeros((theta_dim, theta_dim))
        for i in range(theta_dim):
            for j in range(i, theta_dim):
                out[i, j] = out[j, i] = second(i, j, steps[i] * mult, steps[j] * mult)
        return out

    coarse = -4.0 * hessian(1.0)
    fine = -4.0 * hessian(0.5)
    scale = max(float(np.max(np.abs(fine))), float(np.max(np.abs(coarse))))
    drift = float(np.max(np.abs(fine - coarse)))
    if drift > conv_tol * scale + _CONV_ABS_FLOOR:
        raise NonConvergent(
            f"{label} moved by {drift} (scale {scale}) under step halving; tolerance {conv_tol}"
        )
    return (4.0 * fine - coarse) / 3.0


def qfi_from_fidelity(
    family: StateFamily,
    theta: Sequence[float],
    step: float | Sequence[float] | None = None,
    *,
    conv_tol: float = OVERLAP_CONV_TOL,
) -> QFIMatrix:
    """QFIM as -4 times the Hessian of the Uhlmann fidelity at theta' = theta."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.shape != (family.theta_dim,):
        raise DimensionMismatch(f"theta shape {th.shape} does not match K={family.theta_dim}")
    steps = _overlap_steps(th, step)
    rho0 = family.evaluator(th)

    def overlap(offset):
        return uhlmann_fidelity(rho0, family.evaluator(th + offset))

    return QFIMatrix(_neg4_hessian(overlap, family.theta_dim, steps, conv_tol, "fidelity QFIM"))


def _overlap_steps(theta: np.ndarray, step) -> np.ndarray:
    if step is None:
        return default_fd_steps(theta, FD2_REL_STEP)
    arr = np.atleast_1d(np.asarray(step, dtype=float))
    if arr.shape == (1,) and theta.shape[0] > 1:
        arr = np.repeat(arr, theta.shape[0])
    if arr.shape != theta.shape:
        raise DimensionMismatch("step must be scalar or match theta")
    if np.any(arr <= 0):
        raise DomainError("steps must be positive")
    return arr


def _dist_to_vector(dist, keys: list | None):
    if isinstance(dist, Mapping):
        if keys is None:
            raise DomainError("internal: key order required for mapping distributions")
        return np.array([float(dist.get(k, 0.0)) for k in keys])
    return np.asarray(dist, dtype=float)


def classical_fim(
    dist_family: Callable[[np.ndarray], Mapping | np.ndarray],
    theta: Sequence[float],
    step: float | Sequence[float] | None = None,
    *,
    theta_dim: int | None = None,
    conv_tol: float = OVERLAP_CONV_TOL,
) -> QFIMatrix:
    """Classical FIM as -4 times the Hessian of the Bhattacharyya overlap.

    ``dist_family`` maps a parameter vector to a probability vector or a
    mapping from outcomes to probabilities; each evaluation must be
    normalized to 1 within 1e-10.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    k = theta_dim if theta_dim is not None else th.shape[0]
    if th.shape != (k,):
        raise DimensionMismatch(f"theta shape {th.shape} does not match K={k}")
    steps = _overlap_steps(th, step)

    base = dist_family(th)
    keys = sorted(base.keys()) if isinstance(base, Mapping) else None

    def checked_vector(dist):
        vec = _dist_to_vector(dist, keys)
        if np.any(vec < -1e-12):
            raise DomainError(f"negative probability {vec.min()} in distribution")
        total = float(vec.sum())
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"distribution sums to {total}, not normalized within 1e-10")
        return np.clip(vec, 0.0, None)

    p0 = checked_vector(base)
    sqrt_p0 = np.sqrt(p0)

    def overlap(offset):
        dist = dist_family(th + offset)
        if isinstance(dist, Mapping):
            extra = set(dist) - set(keys)
            if extra and sum(abs(float(dist[e])) for e in extra) > 1e-10:
                raise DomainError("distribution support escaped the base support")
        q = checked_vector(dist)
        if q.shape != p0.shape:
            raise DimensionMismatch("distribution length changed across the stencil")
        return float(sqrt_p0 @ np.sqrt(q))

    return QFIMatrix(_neg4_hessian(overlap, k, steps, conv_tol, "classical FIM"))


def psd_order(a, b, tol: float = 1e-9) -> bool:
    """True iff a - b is positive semidefinite down to -tol."""
    am = a.entries if isinstance(a, QFIMatrix) else np.atleast_2d(np.asarray(a, dtype=float))
    bm = b.entries if isinstance(b, QFIMatrix) else np.atleast_2d(np.asarray(b, dtype=float))
    if am.shape != bm.shape:
        raise DimensionMismatch(f"shape mismatch {am.shape} vs {bm.shape}")
    diff = am - bm
    asym = float(np.max(np.abs(diff - diff.T)))
    if asym > 1e-9:
        raise DomainError(f"difference asymmetric by {asym}")
    return float(np.linalg.eigvalsh(0.5 * (diff + diff.T)).min()) >= -tol
