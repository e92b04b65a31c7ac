"""Number-diagonal-signal probes, phase randomization, and the loss-pattern
machinery of the attenuator stage.

The loss-pattern and conditional-residual distributions carry the binomial
factors C(n_m, l_m); without them the pattern distribution would not sum
to one, and they reproduce the attenuator Kraus statistics exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    SupportExceedsN0,
    ZeroProbabilityCondition,
)
from .fock import FockTruncation, StateVector

DIST_TOL = 1e-12
#: generated spec supports stop once this little mass remains
SUPPORT_TAIL = 1e-14


def _canonical_dist(photon_dist: Mapping) -> dict[tuple[int, ...], float]:
    items = {}
    width = None
    for key, p in photon_dist.items():
        n = (int(key),) if isinstance(key, (int, np.integer)) else tuple(int(v) for v in key)
        if width is None:
            width = len(n)
        elif len(n) != width:
            raise DimensionMismatch(f"occupation {n} has mixed mode count")
        if any(v < 0 for v in n):
            raise DomainError(f"negative occupation in {n}")
        p = float(p)
        if p < 0:
            raise DomainError(f"negative probability {p} at {n}")
        if p > 0:
            items[n] = items.get(n, 0.0) + p
    if not items:
        raise DomainError("photon distribution has empty support")
    return dict(sorted(items.items()))


@dataclass(frozen=True)
class ProbeSpec:
    """Signal photon-number distribution with its mode count and mean energy."""

    photon_dist: dict[tuple[int, ...], float]
    m: int = field(init=False)
    n: float = field(init=False)

    def __post_init__(self):
        dist = _canonical_dist(self.photon_dist)
        total = sum(dist.values())
        if abs(total - 1.0) > DIST_TOL:
            raise DomainError(f"photon distribution sums to {total}, off by more than {DIST_TOL}")
        object.__setattr__(self, "photon_dist", dist)
        object.__setattr__(self, "m", len(next(iter(dist))))
        object.__setattr__(self, "n", float(sum(p * sum(k) for k, p in dist.items())))


def geometric_probe_spec(mean: float) -> ProbeSpec:
    """Single-mode spec with geometric photon statistics of the given mean.

    The support is truncated once the remaining tail is below SUPPORT_TAIL.
    """
    if mean < 0:
        raise DomainError(f"mean must be >= 0, got {mean}")
    if mean == 0:
        return ProbeSpec({(0,): 1.0})
    ratio = mean / (mean + 1.0)
    dist = {}
    p = 1.0 / (mean + 1.0)
    covered = 0.0
    n = 0
    while 1.0 - covered > SUPPORT_TAIL:
        dist[(n,)] = p
        covered += p
        p *= ratio
        n += 1
    return ProbeSpec(dist)


@dataclass(frozen=True)
class NdsProbe:
    """Ancilla-entangled purification of a ProbeSpec with orthonormal tags.

    The state lives on (ancilla, signal_1, ..., signal_M); ``support`` lists
    the occupation vectors in ancilla-index order.
    """

    state: StateVector
    source: ProbeSpec
    support: tuple[tuple[int, ...], ...]

    @property
    def signal_modes(self) -> tuple[int, ...]:
        return tuple(range(1, self.source.m + 1))


def nds_probe(spec: ProbeSpec) -> NdsProbe:
    """sum_n sqrt(p_n) |chi_n>|n> with one orthonormal ancilla ket per support point."""
    support = tuple(sorted(spec.photon_dist))
    sig_cuts = tuple(max(n[i] for n in support) for i in range(spec.m))
    trunc = FockTruncation((len(support) - 1,) + sig_cuts)
    amps = np.zeros(trunc.dim, dtype=complex)
    for idx, n in enumerate(support):
        amps[trunc.index((idx,) + n)] = math.sqrt(spec.photon_dist[n])
    tail = max(1.0 - float(np.vdot(amps, amps).real), 0.0)
    return NdsProbe(StateVector(trunc, amps, tail), spec, support)


def nds_state_pair(
    r_dist: Mapping, s_dist: Mapping
) -> tuple[StateVector, StateVector, FockTruncation]:
    """Two NDS states for distinct distributions sharing one ancilla basis."""
    r = _canonical_dist(r_dist)
    s = _canonical_dist(s_dist)
    if len(next(iter(r))) != len(next(iter(s))):
        raise DimensionMismatch("distributions have different mode counts")
    union = tuple(sorted(set(r) | set(s)))
    m = len(union[0])
    sig_cuts = tuple(max(n[i] for n in union) for i in range(m))
    trunc = FockTruncation((len(union) - 1,) + sig_cuts)

    def build(dist):
        amps = np.zeros(trunc.dim, dtype=complex)
        for idx, n in enumerate(union):
            p = dist.get(n, 0.0)
            if p:
                amps[trunc.index((idx,) + n)] = math.sqrt(p)
        tail = max(1.0 - float(np.vdot(amps, amps).real), 0.0)
        return StateVector(trunc, amps, tail)

    return build(r), build(s), trunc


def augment_probe(psi: StateVector, n0: int, signal_modes: Sequence[int] | None = None) -> StateVector:
    """Prepend a reference register in a uniform superposition of phase shifts.

    Each reference basis state |r> tags the modulated probe U(r)|psi> with
    U(r) = exp(-i 2 pi (r . N_hat)/(N0 + 1)); averaging over r kills every
    number-basis off-diagonal of the reduced signal state.
    """
    if n0 < 0:
        raise DomainError(f"N0 must be >= 0, got {n0}")
    trunc = psi.truncation
    mc = trunc.mode_count
    modes = tuple(range(mc)) if signal_modes is None else tuple(int(m) for m in signal_modes)
    if any(m < 0 or m >= mc for m in modes) or len(set(modes)) != len(modes):
        raise DimensionMismatch(f"invalid signal modes {modes}")
    occ = trunc.occupations()
    sig_occ = occ[:, list(modes)]
    occupied = np.abs(psi.amplitudes) > 0
    if np.any(sig_occ[occupied] > n0):
        raise SupportExceedsN0(f"probe occupies signal levels above N0 = {n0}")

    m_s = len(modes)
    ref_trunc = FockTruncation((n0,) * m_s)
    r_occ = ref_trunc.occupations()
    phases = np.exp(-2j * np.pi / (n0 + 1.0) * (r_occ @ sig_occ.T))
    amps = (phases * psi.amplitudes[None, :]) / math.sqrt(ref_trunc.dim)
    out_trunc = FockTruncation(ref_trunc.cutoffs + trunc.cutoffs)
    return StateVector(out_trunc, amps.reshape(-1), psi.tail_mass)


def _pattern_weight(n: tuple[int, ...], l: tuple[int, ...], eta: float) -> float:
    w = 1.0
    for n_m, l_m in zip(n, l):
        w *= math.comb(n_m, l_m) * eta ** (n_m - l_m) * (1.0 - eta) ** l_m
    return w


def loss_pattern_dist(spec: ProbeSpec, eta: float) -> dict[tuple[int, ...], float]:
    """Distribution of photons lost per mode in the attenuator stage."""
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"transmittance must be in (0, 1], got {eta}")
    out: dict[tuple[int, ...], float] = {}
    for n, p in spec.photon_dist.items():
        for l in itertools.product(*(range(v + 1) for v in n)):
            out[l] = out.get(l, 0.0) + p * _pattern_weight(n, l, eta)
    return dict(sorted(out.items()))


def conditional_residual_dist(
    spec: ProbeSpec, eta: float, l_vec: Sequence[int]
) -> dict[tuple[int, ...], float]:
    """Distribution of surviving photons per mode given the loss pattern."""
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"transmittance must be in (0, 1], got {eta}")
    l = tuple(int(v) for v in l_vec)
    if len(l) != spec.m or any(v < 0 for v in l):
        raise DimensionMismatch(f"loss pattern {l} invalid for {spec.m} modes")
    terms: dict[tuple[int, ...], float] = {}
    total = 0.0
    for n, p in spec.photon_dist.items():
        if all(nv >= lv for nv, lv in zip(n, l)):
            k = tuple(nv - lv for nv, lv in zip(n, l))
            w = p * _pattern_weight(n, l, eta)
            terms[k] = terms.get(k, 0.0) + w
            total += w
    if total <= 0.0:
        raise ZeroProbabilityCondition(f"loss pattern {l} has zero probability")
    return {k: w / total for k, w in sorted(terms.items())}


def joint_pattern_dist(
    spec: ProbeSpec, eta: float
) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
    """Joint distribution of (loss pattern, residual pattern)."""
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"transmittance must be in (0, 1], got {eta}")
    out: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = {}
    for n, p in spec.photon_dist.items():
        for l in itertools.product(*(range(v + 1) for v in n)):
            k = tuple(nv - lv for nv, lv in zip(n, l))
            out[(l, k)] = out.get((l, k), 0.0) + p * _pattern_weight(n, l, eta)
    return dict(sorted(out.items()))


def bhattacharyya(p, q) -> float:
    """Classical fidelity sum sqrt(p q) of two normalized distributions."""
    if isinstance(p, Mapping) and isinstance(q, Mapping):
        for dist in (p, q):
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-10:
                raise DomainError(f"distribution sums to {total}")
        return float(sum(math.sqrt(p[k] * q[k]) for k in p.keys() & q.keys()))
    pv = np.asarray(p, dtype=float)
    qv = np.asarray(q, dtype=float)
    if pv.shape != qv.shape:
        raise DimensionMismatch(f"shape mismatch {pv.shape} vs {qv.shape}")
    for vec in (pv, qv):
        if abs(float(vec.sum()) - 1.0) > 1e-10:
            raise DomainError(f"distribution sums to {vec.sum()}")
    return float(np.sum(np.sqrt(np.clip(pv, 0.0, None) * np.clip(qv, 0.0, None))))


def nu_coefficient(gain: float, gain_prime: float) -> float:
    """Overlap decay factor of two quantum-limited amplifiers.

    Equals sech(tau' - tau) under G = cosh^2 tau, so it is symmetric and
    reaches 1 only at equal gains.
    """
    if gain < 1.0 or gain_prime < 1.0:
        raise DomainError(f"gains must be >= 1, got {gain}, {gain_prime}")
    return 1.0 / (
        math.sqrt(gain * gain_prime) - math.sqrt((gain - 1.0) * (gain_prime - 1.0))
    )


def amp_output_fidelity(
    r_dist: Mapping, s_dist: Mapping, gain: float, gain_prime: float, m: int
) -> float:
    """Closed-form fidelity of amplifier outputs fed with shared-basis NDS states.

    F = sum_n sqrt(r_n s_n) nu^(n + M) over M-mode occupations n with total
    photon number n.
    """
    nu = nu_coefficient(gain, gain_prime)
    r = _canonical_dist(r_dist)
    s = _canonical_dist(s_dist)
    acc = 0.0
    for n in r.keys() & s.keys():
        if len(n) != m:
            raise DimensionMismatch(f"occupation {n} is not {m}-mode")
        acc += math.sqrt(r[n] * s[n]) * nu ** (sum(n) + m)
    return acc


def conditional_output_fidelity(
    spec: ProbeSpec,
    l_vec: Sequence[int],
    eta: float,
    eta_prime: float,
    gain: float,
    gain_prime: float,
    m: int,
) -> float:
    """Fidelity of the two conditional cascade outputs sharing a loss pattern."""
    if m != spec.m:
        raise DimensionMismatch(f"spec has {spec.m} modes, not {m}")
    p = conditional_residual_dist(spec, eta, l_vec)
    q = conditional_residual_dist(spec, eta_prime, l_vec)
    return amp_output_fidelity(p, q, gain, gain_prime, m)
