"""Kraus realizations of the quantum-limited attenuator and amplifier.

The attenuator keeps its input truncation (photon number can only drop); the
amplifier grows the output cutoff by the largest retained photon-addition
index, chosen so the completeness defect stays below a tolerance.  Both
families shift photon number by a fixed amount per Kraus operator, so the
constructed channels commute with multimode phase shifts exactly, which the
``check_phase_covariance`` probe verifies numerically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    InvalidState,
    TraceLossExceeded,
    TruncationTooSevere,
)
from .fock import DensityOperator, FockTruncation, StateVector, annihilation_matrix, hermitize, phase_shift_unitary

NPS_LOSS = "NPS_LOSS"
PS_LOSS = "PS_LOSS"
ADD_NOISE = "ADD_NOISE"

_LOSS_KINDS = (NPS_LOSS, PS_LOSS)
_ALL_KINDS = (NPS_LOSS, PS_LOSS, ADD_NOISE)

#: default completeness-defect budget for amplifier truncation
AMP_TAIL_TOL = 1e-10
_A_MAX_CAP = 5000


@dataclass(frozen=True)
class KrausChannel:
    """Finite Kraus decomposition mapping one truncation into another."""

    operators: tuple[np.ndarray, ...]
    input_trunc: FockTruncation
    output_trunc: FockTruncation
    completeness_defect: float

    def __post_init__(self):
        din, dout = self.input_trunc.dim, self.output_trunc.dim
        for k in self.operators:
            if k.shape != (dout, din):
                raise DimensionMismatch(f"Kraus operator shape {k.shape}, expected {(dout, din)}")


def _completeness_defect(operators: Sequence[np.ndarray], din: int) -> float:
    acc = -np.eye(din, dtype=complex)
    for k in operators:
        acc += k.conj().T @ k
    acc, _ = hermitize(acc)
    if din == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(acc))))


def _single_mode_channel(ops: list[np.ndarray], cut_in: int, cut_out: int) -> KrausChannel:
    tin = FockTruncation((cut_in,))
    tout = FockTruncation((cut_out,))
    return KrausChannel(tuple(ops), tin, tout, _completeness_defect(ops, tin.dim))


def identity_channel(trunc: FockTruncation) -> KrausChannel:
    return KrausChannel((np.eye(trunc.dim, dtype=complex),), trunc, trunc, 0.0)


def tensor(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Product channel acting independently on the modes of ``a`` then ``b``."""
    ops = tuple(np.kron(ka, kb) for ka, kb in itertools.product(a.operators, b.operators))
    tin = FockTruncation(a.input_trunc.cutoffs + b.input_trunc.cutoffs)
    tout = FockTruncation(a.output_trunc.cutoffs + b.output_trunc.cutoffs)
    return KrausChannel(ops, tin, tout, _completeness_defect(ops, tin.dim))


def _attenuator_ops(eta: float, cutoff: int) -> list[np.ndarray]:
    dim = cutoff + 1
    ops = []
    for loss in range(dim):
        if eta == 1.0 and loss > 0:
            break
        k = np.zeros((dim, dim), dtype=complex)
        for n in range(loss, dim):
            k[n - loss, n] = math.sqrt(math.comb(n, loss) * eta ** (n - loss) * (1.0 - eta) ** loss)
        ops.append(k)
    return ops


def attenuator_kraus(eta: float, input_trunc: FockTruncation) -> KrausChannel:
    """Quantum-limited attenuator of transmittance ``eta`` on every mode."""
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"attenuator transmittance must be in (0, 1], got {eta}")
    per_mode = [
        _single_mode_channel(_attenuator_ops(eta, c), c, c) for c in input_trunc.cutoffs
    ]
    chan = per_mode[0]
    for nxt in per_mode[1:]:
        chan = tensor(chan, nxt)
    return chan


def _amplifier_a_max(t2: float, cutoff: int, tol: float) -> int:
    # defect(k) = 1 - sech^{2(k+1)} * sum_{a<=A} C(k+a, a) t2^a, largest at k = cutoff
    s2 = 1.0 - t2
    k = np.arange(cutoff + 1, dtype=float)
    term = np.ones(cutoff + 1)
    partial = np.ones(cutoff + 1)
    prefac = s2 ** (k + 1.0)
    a = 0
    while True:
        defect = np.max(1.0 - prefac * partial)
        if defect < tol:
            return a
        a += 1
        if a > _A_MAX_CAP:
            raise TruncationTooSevere(
                f"amplifier tail still {defect} above {tol} after {_A_MAX_CAP} photon additions"
            )
        term = term * t2 * (k + a) / a
        partial = partial + term


def _amplifier_ops(gain: float, cutoff: int, a_max: int) -> list[np.ndarray]:
    t2 = (gain - 1.0) / gain
    s = math.sqrt(1.0 / gain)
    t = math.sqrt(t2)
    dim_in = cutoff + 1
    dim_out = cutoff + a_max + 1
    ops = []
    for a in range(a_max + 1):
        if gain == 1.0 and a > 0:
            break
        k = np.zeros((dim_out, dim_in), dtype=complex)
        for n in range(dim_in):
            k[n + a, n] = (t ** a) * math.sqrt(math.comb(n + a, a)) * s ** (n + 1)
        ops.append(k)
    return ops


def amplifier_kraus(
    gain: float,
    input_trunc: FockTruncation,
    tail_tol: float = AMP_TAIL_TOL,
    a_max: int | None = None,
) -> KrausChannel:
    """Quantum-limited amplifier of gain ``gain`` on every mode.

    Photon-addition indices are retained until the completeness defect on the
    input truncation falls below ``tail_tol`` (split evenly across modes); the
    output cutoff grows by the retained maximum.  ``a_max`` overrides the
    automatic choice, which callers use to keep truncations fixed across a
    finite-difference neighborhood.
    """
    if gain < 1.0:
        raise DomainError(f"amplifier gain must be >= 1, got {gain}")
    if tail_tol <= 0:
        raise DomainError(f"tail_tol must be positive, got {tail_tol}")
    modes = input_trunc.mode_count
    t2 = (gain - 1.0) / gain
    per_mode = []
    for c in input_trunc.cutoffs:
        if gain == 1.0:
            amax_c = 0
        elif a_max is not None:
            amax_c = int(a_max)
        else:
            amax_c = _amplifier_a_max(t2, c, tail_tol / modes)
        per_mode.append(_single_mode_channel(_amplifier_ops(gain, c, amax_c), c, c + amax_c))
    chan = per_mode[0]
    for nxt in per_mode[1:]:
        chan = tensor(chan, nxt)
    return chan


def compose(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Channel equal to ``first`` followed by ``second``."""
    if first.output_trunc != second.input_trunc:
        raise DimensionMismatch(
            f"cannot compose: first outputs {first.output_trunc.cutoffs}, "
            f"second expects {second.input_trunc.cutoffs}"
        )
    ops = tuple(s @ f for s in second.operators for f in first.operators)
    return KrausChannel(
        ops, first.input_trunc, second.output_trunc, _completeness_defect(ops, first.input_trunc.dim)
    )


def displacement_channel(alpha: complex, trunc: FockTruncation) -> KrausChannel:
    """Truncated single-mode displacement; a known non-phase-covariant fixture."""
    if trunc.mode_count != 1:
        raise DimensionMismatch("displacement fixture is single mode")
    a = annihilation_matrix(trunc.cutoffs[0])
    h = -1j * (alpha * a.conj().T - np.conj(alpha) * a)
    h, _ = hermitize(h)
    lam, v = np.linalg.eigh(h)
    u = (v * np.exp(1j * lam)) @ v.conj().T
    return KrausChannel((u,), trunc, trunc, _completeness_defect([u], trunc.dim))


def _permute_to_front(mc: int, modes: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    rest = tuple(m for m in range(mc) if m not in modes)
    return modes + rest, rest


def apply(
    channel: KrausChannel,
    rho: DensityOperator,
    modes: Sequence[int] | None = None,
    *,
    trace_tol: float = 1e-9,
    herm_tol: float = 1e-10,
) -> DensityOperator:
    """Channel output sum_j K_j rho K_j^dag on the given modes (all by default).

    The result is symmetrized; a symmetrization correction above ``herm_tol``
    or a trace drop above ``trace_tol`` is an error rather than a silent fix.
    """
    trunc = rho.truncation
    mc = trunc.mode_count
    modes = tuple(range(mc)) if modes is None else tuple(int(m) for m in modes)
    if len(set(modes)) != len(modes):
        raise DimensionMismatch(f"duplicate modes {modes}")
    acted = tuple(trunc.cutoffs[m] for m in modes)
    if acted != channel.input_trunc.cutoffs:
        raise DimensionMismatch(
            f"channel expects cutoffs {channel.input_trunc.cutoffs} but modes {modes} have {acted}"
        )
    out_cutoffs = list(trunc.cutoffs)
    for i, m in enumerate(modes):
        out_cutoffs[m] = channel.output_trunc.cutoffs[i]
    out_trunc = FockTruncation(tuple(out_cutoffs))

    dims = trunc.dims
    din = channel.input_trunc.dim
    dout = channel.output_trunc.dim
    d_rest = trunc.dim // din
    perm, rest = _permute_to_front(mc, modes)

    tens = rho.matrix.reshape(dims + dims)
    tens = tens.transpose(perm + tuple(p + mc for p in perm))
    tens = np.ascontiguousarray(tens).reshape(din, d_rest, din, d_rest)

    n_ops = len(channel.operators)
    kstack = np.concatenate(channel.operators, axis=0)
    y = kstack @ tens.reshape(din, d_rest * din * d_rest)
    y = y.reshape(n_ops, dout, d_rest, din, d_rest)
    y = np.ascontiguousarray(y.transpose(1, 2, 4, 0, 3)).reshape(dout * d_rest * d_rest, n_ops * din)
    w = np.ascontiguousarray(
        np.conj(kstack.reshape(n_ops, dout, din)).transpose(0, 2, 1)
    ).reshape(n_ops * din, dout)
    z = (y @ w).reshape(dout, d_rest, d_rest, dout).transpose(0, 1, 3, 2)

    acted_dims = channel.output_trunc.dims
    rest_dims = tuple(dims[m] for m in rest)
    z = z.reshape(acted_dims + rest_dims + acted_dims + rest_dims)
    inv = tuple(int(i) for i in np.argsort(perm))
    z = z.transpose(inv + tuple(i + mc for i in inv))
    matrix = z.reshape(out_trunc.dim, out_trunc.dim)

    matrix, correction = hermitize(matrix)
    if correction > herm_tol:
        raise InvalidState(f"hermiticity correction {correction} exceeds {herm_tol}")
    tr_in = float(np.trace(rho.matrix).real)
    tr_out = float(np.trace(matrix).real)
    if tr_in - tr_out > trace_tol:
        raise TraceLossExceeded(f"channel dropped trace by {tr_in - tr_out} > {trace_tol}")
    return DensityOperator(out_trunc, matrix, 1.0 - tr_out)


def kraus_branch_vectors(
    channel: KrausChannel, psi: StateVector, modes: Sequence[int] | None = None
) -> tuple[np.ndarray, FockTruncation]:
    """Columns (I (x) K_j) |psi> for every Kraus branch, and their truncation.

    The output density operator equals V V^dag for the returned matrix V,
    which keeps fidelity computations on large amplifier outputs tractable.
    """
    trunc = psi.truncation
    mc = trunc.mode_count
    modes = tuple(range(mc)) if modes is None else tuple(int(m) for m in modes)
    acted = tuple(trunc.cutoffs[m] for m in modes)
    if acted != channel.input_trunc.cutoffs:
        raise DimensionMismatch(
            f"channel expects cutoffs {channel.input_trunc.cutoffs} but modes {modes} have {acted}"
        )
    out_cutoffs = list(trunc.cutoffs)
    for i, m in enumerate(modes):
        out_cutoffs[m] = channel.output_trunc.cutoffs[i]
    out_trunc = FockTruncation(tuple(out_cutoffs))

    dims = trunc.dims
    din = channel.input_trunc.dim
    dout = channel.output_trunc.dim
    d_rest = trunc.dim // din
    perm, rest = _permute_to_front(mc, modes)

    vec = psi.amplitudes.reshape(dims).transpose(perm)
    vec = np.ascontiguousarray(vec).reshape(din, d_rest)
    n_ops = len(channel.operators)
    kstack = np.concatenate(channel.operators, axis=0)
    branches = (kstack @ vec).reshape(n_ops, dout, d_rest)

    acted_dims = channel.output_trunc.dims
    rest_dims = tuple(dims[m] for m in rest)
    branches = branches.reshape((n_ops,) + acted_dims + rest_dims)
    inv = tuple(int(i) for i in np.argsort(perm))
    branches = branches.transpose((0,) + tuple(i + 1 for i in inv))
    return branches.reshape(n_ops, out_trunc.dim).T.copy(), out_trunc


@dataclass(frozen=True)
class ScenarioId:
    """Which channel family is being sensed, plus its fixed hyperparameters."""

    kind: str
    n_b: float | None = None

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise DomainError(f"unknown scenario kind {self.kind!r}")
        if self.kind in _LOSS_KINDS:
            if self.n_b is None or self.n_b < 0:
                raise DomainError(f"{self.kind} requires a background brightness n_b >= 0")
        elif self.n_b is not None:
            raise DomainError("additive-noise scenario takes no background brightness")

    @classmethod
    def nps(cls, n_b: float) -> "ScenarioId":
        return cls(NPS_LOSS, float(n_b))

    @classmethod
    def ps(cls, n_b: float) -> "ScenarioId":
        return cls(PS_LOSS, float(n_b))

    @classmethod
    def add_noise(cls) -> "ScenarioId":
        return cls(ADD_NOISE)


@dataclass(frozen=True)
class CascadeParams:
    """Attenuator-amplifier decomposition (eta, G) and its parameter derivatives."""

    eta: float
    gain: float
    d_eta: np.ndarray
    d_gain: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        for name in ("d_eta", "d_gain", "theta"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        k = self.theta.shape[0]
        if k < 1 or k > 2:
            raise DomainError(f"parameter count must be 1 or 2, got {k}")
        if self.d_eta.shape != (k,) or self.d_gain.shape != (k,):
            raise DimensionMismatch("derivative vectors must match the parameter count")
        if not (0.0 < self.eta <= 1.0):
            raise DomainError(f"eta must be in (0, 1], got {self.eta}")
        if self.gain < 1.0:
            raise DomainError(f"gain must be >= 1, got {self.gain}")

    @property
    def theta_dim(self) -> int:
        return self.theta.shape[0]


def scenario_cascade(scenario: ScenarioId, theta: Sequence[float]) -> CascadeParams:
    """Cascade parameters (eta, G) and closed-form derivatives at ``theta``.

    Loss scenarios accept ``theta = (kappa,)`` with the background brightness
    taken from the scenario, or ``theta = (kappa, n_b)`` for joint sensing.
    The additive-noise scenario accepts ``theta = (gamma,)``.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    k = th.shape[0]
    if scenario.kind == ADD_NOISE:
        if k != 1:
            raise DomainError("additive-noise scenario is single parameter")
        gamma = th[0]
        if gamma <= 0:
            raise DomainError(f"noise level must be > 0, got {gamma}")
        eta = 1.0 / (gamma + 1.0)
        return CascadeParams(
            eta=eta,
            gain=gamma + 1.0,
            d_eta=np.array([-1.0 / (gamma + 1.0) ** 2]),
            d_gain=np.array([1.0]),
            theta=th,
        )

    if k not in (1, 2):
        raise DomainError("loss scenarios take theta = (kappa,) or (kappa, n_b)")
    kappa = th[0]
    n_b = th[1] if k == 2 else float(scenario.n_b)
    if not (0.0 < kappa < 1.0):
        raise DomainError(f"transmittance must be strictly inside (0, 1), got {kappa}")
    if n_b < 0:
        raise DomainError(f"background brightness must be >= 0, got {n_b}")

    if scenario.kind == NPS_LOSS:
        gain = n_b + 1.0
        eta = kappa / gain
        d_eta_k = 1.0 / gain
        d_gain_k = 0.0
        d_eta_nb = -kappa / gain ** 2
        d_gain_nb = 1.0
    else:  # PS_LOSS
        gain = (1.0 - kappa) * n_b + 1.0
        eta = kappa / gain
        d_eta_k = (gain + kappa * n_b) / gain ** 2
        d_gain_k = -n_b
        d_eta_nb = -kappa * (1.0 - kappa) / gain ** 2
        d_gain_nb = 1.0 - kappa

    if k == 1:
        d_eta = np.array([d_eta_k])
        d_gain = np.array([d_gain_k])
    else:
        d_eta = np.array([d_eta_k, d_eta_nb])
        d_gain = np.array([d_gain_k, d_gain_nb])
    return CascadeParams(eta=eta, gain=gain, d_eta=d_eta, d_gain=d_gain, theta=th)


def cascade_from_functions(
    eta_fn: Callable[[np.ndarray], float],
    gain_fn: Callable[[np.ndarray], float],
    theta: Sequence[float],
    rel_step: float = 1e-6,
) -> CascadeParams:
    """Finite-difference fallback for user-supplied cascade families."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    k = th.shape[0]
    d_eta = np.zeros(k)
    d_gain = np.zeros(k)
    for i in range(k):
        h = rel_step * max(abs(th[i]), 1.0)
        up, dn = th.copy(), th.copy()
        up[i] += h
        dn[i] -= h
        d_eta[i] = (eta_fn(up) - eta_fn(dn)) / (2.0 * h)
        d_gain[i] = (gain_fn(up) - gain_fn(dn)) / (2.0 * h)
    return CascadeParams(eta=float(eta_fn(th)), gain=float(gain_fn(th)), d_eta=d_eta, d_gain=d_gain, theta=th)


def cascade_channel(
    eta: float,
    gain: float,
    input_trunc: FockTruncation,
    tail_tol: float = AMP_TAIL_TOL,
    a_max: int | None = None,
) -> KrausChannel:
    """Composed attenuator-then-amplifier channel on the full truncation."""
    att = attenuator_kraus(eta, input_trunc)
    amp = amplifier_kraus(gain, att.output_trunc, tail_tol, a_max)
    return compose(att, amp)


def apply_cascade(
    eta: float,
    gain: float,
    rho: DensityOperator,
    modes: Sequence[int],
    tail_tol: float = AMP_TAIL_TOL,
    a_max: int | None = None,
) -> DensityOperator:
    """Apply the iid single-mode cascade to each listed mode of ``rho``.

    Sequential per-mode application avoids materializing the product channel,
    whose Kraus count is multiplicative.
    """
    out = rho
    for m in modes:
        cut = out.truncation.cutoffs[m]
        att = attenuator_kraus(eta, FockTruncation((cut,)))
        out = apply(att, out, (m,))
    for m in modes:
        cut = out.truncation.cutoffs[m]
        amp = amplifier_kraus(gain, FockTruncation((cut,)), tail_tol, a_max)
        out = apply(amp, out, (m,))
    return out


_PHI_BASE = (0.9, 2.3, 4.7, 5.9)


def default_phase_grid(mode_count: int) -> tuple[tuple[float, ...], ...]:
    """Fixed multimode phase vectors used by the covariance check."""
    two_pi = 2.0 * math.pi
    return tuple(
        tuple((base + 0.37 * m) % two_pi for m in range(mode_count)) for base in _PHI_BASE
    )


def check_phase_covariance(
    channel: KrausChannel,
    sample_states: Sequence[DensityOperator],
    phi_grid: Sequence[Sequence[float]] | None = None,
) -> float:
    """Largest trace-norm deviation of C(U rho U^dag) from U C(rho) U^dag.

    Returns the deviation; the caller decides what tolerance to hold it to.
    """
    if phi_grid is None:
        phi_grid = default_phase_grid(channel.input_trunc.mode_count)
    deviation = 0.0
    for rho in sample_states:
        base = apply(channel, rho)
        for phi in phi_grid:
            u_in = phase_shift_unitary(phi, channel.input_trunc)
            u_out = phase_shift_unitary(phi, channel.output_trunc)
            shifted = DensityOperator(
                rho.truncation,
                u_in[:, None] * rho.matrix * u_in.conj()[None, :],
                rho.trace_defect,
            )
            lhs = apply(channel, shifted).matrix
            rhs = u_out[:, None] * base.matrix * u_out.conj()[None, :]
            diff, _ = hermitize(lhs - rhs)
            deviation = max(deviation, float(np.sum(np.abs(np.linalg.eigvalsh(diff)))))
    return deviation
