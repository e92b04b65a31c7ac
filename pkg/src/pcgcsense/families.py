"""Probe constructions and scenario state families for the Fock oracle.

A family evaluator must return states on one fixed truncation across a whole
finite-difference stencil, so the amplifier photon-addition range is frozen
at the center parameter point and reused for every evaluation.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .channels import (
    ScenarioId,
    _amplifier_a_max,
    apply_cascade,
    scenario_cascade,
)
from .errors import DomainError
from .fock import (
    DensityOperator,
    FockTruncation,
    StateVector,
    coherent_state,
    geometric_cutoff,
    number_state,
    poisson_cutoff,
    tmsv_state,
)
from .qfi import StateFamily

PROBE_KINDS = ("tmsv", "coherent", "vacuum", "fock")


def tmsv_probe(
    n_s: float, m: int = 1, cutoff: int | None = None, tail_tol: float = 1e-12
) -> tuple[DensityOperator, tuple[int, ...]]:
    """m iid two-mode squeezed vacua on modes (A_1..A_m, S_1..S_m).

    Returns the probe state and the indices of the signal modes.
    """
    if m < 1:
        raise DomainError(f"mode count must be >= 1, got {m}")
    pair = tmsv_state(n_s, cutoff, tail_tol=tail_tol)
    c = pair.truncation.cutoffs[0]
    dim = c + 1
    amps = pair.amplitudes
    for _ in range(m - 1):
        amps = np.multiply.outer(amps, pair.amplitudes)
    # axes currently (a_1, s_1, a_2, s_2, ...); regroup ancillas before signals
    amps = amps.reshape((dim,) * (2 * m))
    order = tuple(range(0, 2 * m, 2)) + tuple(range(1, 2 * m, 2))
    amps = np.ascontiguousarray(amps.transpose(order)).reshape(-1)
    trunc = FockTruncation((c,) * (2 * m))
    tail = max(1.0 - float(np.vdot(amps, amps).real), 0.0)
    psi = StateVector(trunc, amps, tail)
    return psi.to_density(), tuple(range(m, 2 * m))


def coherent_probe(
    n_total: float, m: int = 1, cutoff: int | None = None, tail_tol: float = 1e-12
) -> tuple[DensityOperator, tuple[int, ...]]:
    """m-mode coherent probe of total energy ``n_total`` split evenly."""
    if m < 1:
        raise DomainError(f"mode count must be >= 1, got {m}")
    alpha = math.sqrt(n_total / m)
    if cutoff is None:
        cutoff = poisson_cutoff(alpha ** 2, tail_tol)
    single = coherent_state(alpha, cutoff)
    amps = single.amplitudes
    for _ in range(m - 1):
        amps = np.multiply.outer(amps, single.amplitudes)
    trunc = FockTruncation((cutoff,) * m)
    amps = amps.reshape(-1)
    tail = max(1.0 - float(np.vdot(amps, amps).real), 0.0)
    psi = StateVector(trunc, amps, tail)
    return psi.to_density(), tuple(range(m))


def vacuum_probe(m: int = 1) -> tuple[DensityOperator, tuple[int, ...]]:
    trunc = FockTruncation((0,) * m)
    return number_state((0,) * m, trunc).to_density(), tuple(range(m))


def fock_probe(n_vec: Sequence[int]) -> tuple[DensityOperator, tuple[int, ...]]:
    n = tuple(int(v) for v in n_vec)
    trunc = FockTruncation(n)
    return number_state(n, trunc).to_density(), tuple(range(len(n)))


def auto_probe_cutoff(kind: str, n_s: float, tail_tol: float = 1e-12) -> int:
    """Cutoff selector used when the caller does not override it."""
    if kind == "tmsv":
        return geometric_cutoff(n_s, tail_tol)
    if kind == "coherent":
        return poisson_cutoff(n_s, tail_tol)
    return 0


def scenario_family(
    scenario: ScenarioId,
    theta0: Sequence[float] | float,
    probe: DensityOperator,
    signal_modes: Sequence[int],
    tail_tol: float = 1e-10,
    fd_steps: Sequence[float] | None = None,
) -> StateFamily:
    """State family of the scenario channel applied to a fixed probe.

    The amplifier truncation is frozen at ``theta0`` (with a factor-2 safety
    margin on the completeness tolerance) so every stencil evaluation lives
    on the same output truncation.
    """
    th0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    modes = tuple(int(m) for m in signal_modes)
    center = scenario_cascade(scenario, th0)
    if center.gain == 1.0:
        a_max = 0
    else:
        t2 = (center.gain - 1.0) / center.gain
        worst_cut = max(probe.truncation.cutoffs[m] for m in modes)
        a_max = _amplifier_a_max(t2, worst_cut, 0.5 * tail_tol / len(modes))

    def evaluator(theta: np.ndarray) -> DensityOperator:
        casc = scenario_cascade(scenario, theta)
        return apply_cascade(casc.eta, casc.gain, probe, modes, tail_tol, a_max)

    steps = tuple(float(s) for s in fd_steps) if fd_steps is not None else None
    return StateFamily(evaluator=evaluator, theta_dim=th0.shape[0], fd_steps=steps)
