"""Universal QFIM upper bound for attenuator-amplifier cascades and the
closed-form information values of the three sensing scenarios.

The bound splits exactly into per-photon and per-mode pieces,
``bound = Kpp * N + Kpm * M``; ``qfim_upper_bound`` is assembled from that
split so the identity holds entrywise in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ADD_NOISE, NPS_LOSS, PS_LOSS, CascadeParams, ScenarioId
from .errors import DomainError, InvalidState, SingularBound, SingularInformation
from .qfi import QFIMatrix

DOMINANCE_SLACK = 1e-9


@dataclass(frozen=True)
class ResourceBudget:
    """Total signal energy N spread over M modes."""

    n: float
    m: float

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"total signal energy must be >= 0, got {self.n}")
        if self.m <= 0:
            raise DomainError(f"mode count must be positive, got {self.m}")

    @property
    def n_s(self) -> float:
        """Per-mode signal brightness N/M."""
        return self.n / self.m


@dataclass(frozen=True)
class ScenarioQfis:
    """The three curves of a sensing scenario at one parameter point.

    ``classical_label`` records what the classical entry means: for the
    no-passive-signature scenario it is only an upper bound on classical
    probes (``classical_ub``), never an achieved value.
    """

    bound: float
    tmsv: float
    classical: float
    classical_label: str = "classical"

    def __post_init__(self):
        if self.bound < self.tmsv - DOMINANCE_SLACK:
            raise InvalidState(f"bound {self.bound} below TMSV value {self.tmsv}")
        if self.bound < self.classical - DOMINANCE_SLACK:
            raise InvalidState(f"bound {self.bound} below classical value {self.classical}")


def pp_pm_split(cascade: CascadeParams, budget: ResourceBudget | None = None) -> tuple[QFIMatrix, QFIMatrix]:
    """Per-photon and per-mode contributions of the cascade bound.

    The budget only fixes which singular limits are tolerated; the split
    itself is budget-independent.  A vanishing derivative vector switches its
    term off, which covers the pure-loss (G = 1) and fixed-eta limits; with a
    nonvanishing derivative those points are singular and raise.
    """
    k = cascade.theta_dim
    eta, gain = cascade.eta, cascade.gain
    loss_term = np.zeros((k, k))
    gain_term = np.zeros((k, k))
    if np.any(cascade.d_eta != 0.0):
        if not (0.0 < eta < 1.0):
            raise SingularBound(f"loss term diverges at eta = {eta} with nonzero derivative")
        loss_term = np.outer(cascade.d_eta, cascade.d_eta) / (eta * (1.0 - eta))
    if np.any(cascade.d_gain != 0.0):
        if gain <= 1.0:
            raise SingularBound(f"gain term diverges at G = {gain} with nonzero derivative")
        gain_term = np.outer(cascade.d_gain, cascade.d_gain) / (gain * (gain - 1.0))
    return QFIMatrix(loss_term + eta * gain_term), QFIMatrix(gain_term)


def qfim_upper_bound(cascade: CascadeParams, budget: ResourceBudget) -> QFIMatrix:
    """Probe-independent QFIM upper bound N/(eta(1-eta)) deta deta^T + ...."""
    kpp, kpm = pp_pm_split(cascade, budget)
    return QFIMatrix(budget.n * kpp.entries + budget.m * kpm.entries)


def qcrb(info) -> np.ndarray:
    """Covariance lower bound: the inverse of an information matrix."""
    mat = info.entries if isinstance(info, QFIMatrix) else np.atleast_2d(np.asarray(info, dtype=float))
    lam_min = float(np.linalg.eigvalsh(mat).min())
    if lam_min <= 1e-12:
        raise SingularInformation(f"information matrix eigenvalue {lam_min} too small to invert")
    inv = np.linalg.inv(mat)
    return 0.5 * (inv + inv.T)


def _check_loss_domain(kappa: float, n_b: float) -> None:
    if not (0.0 < kappa < 1.0):
        raise DomainError(f"transmittance must be strictly inside (0, 1), got {kappa}")
    if n_b < 0:
        raise DomainError(f"background brightness must be >= 0, got {n_b}")


def closed_form_nps(kappa: float, n_b: float, budget: ResourceBudget) -> ScenarioQfis:
    """No-passive-signature transmittance sensing: bound, TMSV, classical cap."""
    _check_loss_domain(kappa, n_b)
    n, n_s = budget.n, budget.n_s
    depth = n_b + 1.0 - kappa
    bound = n / (kappa * depth)
    tmsv = (
        n * (n_b + 1.0 + n_s * depth)
        / (kappa * depth * (n_b + 1.0 + n_s * (2.0 * n_b + 1.0 - kappa)))
    )
    classical = n / (kappa * (2.0 * n_b + 1.0))
    return ScenarioQfis(bound=bound, tmsv=tmsv, classical=classical, classical_label="classical_ub")


def closed_form_ps(kappa: float, n_b: float, budget: ResourceBudget) -> ScenarioQfis:
    """Passive-signature transmittance sensing: bound, TMSV, coherent-state QFI."""
    _check_loss_domain(kappa, n_b)
    n, m, n_s = budget.n, budget.m, budget.n_s
    g = (1.0 - kappa) * n_b + 1.0
    bound = (
        n * ((1.0 + kappa ** 2) * n_b + 1.0) / (kappa * (1.0 - kappa) * g ** 2)
        + m * n_b / ((1.0 - kappa) * g)
    )
    d = (1.0 - kappa) * (n_s + n_b + 2.0 * n_s * n_b) + 1.0
    tmsv = (
        n * ((1.0 - kappa) * n_s + 2.0 * kappa * n_b + 1.0) / (kappa * (1.0 - kappa) * d)
        + m * n_b / ((1.0 - kappa) * d)
    )
    coherent = (
        n / (kappa * (2.0 * (1.0 - kappa) * n_b + 1.0))
        + m * n_b / ((1.0 - kappa) * g)
    )
    return ScenarioQfis(bound=bound, tmsv=tmsv, classical=coherent, classical_label="coherent")


def closed_form_addnoise(gamma: float, budget: ResourceBudget) -> ScenarioQfis:
    """Additive-noise level sensing: bound, TMSV, photon-counting classical QFI."""
    if gamma <= 0:
        raise DomainError(f"noise level must be > 0, got {gamma}")
    n, m, n_s = budget.n, budget.m, budget.n_s
    bound = 2.0 * n / (gamma * (gamma + 1.0) ** 2) + m / (gamma * (gamma + 1.0))
    classical = m / (gamma * (gamma + 1.0))
    tmsv = (2.0 * n + m) / (gamma * ((2.0 * n_s + 1.0) * gamma + 1.0))
    return ScenarioQfis(bound=bound, tmsv=tmsv, classical=classical, classical_label="classical")


def scenario_qfis(scenario: ScenarioId, theta: float, budget: ResourceBudget) -> ScenarioQfis:
    """Dispatch to the scenario's closed forms at a scalar parameter value."""
    if scenario.kind == NPS_LOSS:
        return closed_form_nps(theta, scenario.n_b, budget)
    if scenario.kind == PS_LOSS:
        return closed_form_ps(theta, scenario.n_b, budget)
    if scenario.kind == ADD_NOISE:
        return closed_form_addnoise(theta, budget)
    raise DomainError(f"unknown scenario kind {scenario.kind!r}")
