"""Exact statevector simulation and probe-qubit readout.

Sampling uses numpy's PCG64 bit generator (64-bit state, seeded through
``SeedSequence``). Outcomes are drawn by inverting the cumulative Born
distribution with ``Generator.random()`` doubles, which numpy generates
identically on every platform, so a (state, shots, seed) triple always gives
the same counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import model, numkit
from .circuit import Circuit, Gate, GateKind, MeasureBasis, build_protocol, uniform_steps

NORM_TOL = 1e-12
DEFAULT_SHOTS = 8192
# phases this close to -pi are reported as +pi
BRANCH_CUT_TOL = 1e-12

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PhaseUndefinedError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = numkit.as_vector(self.amplitudes)
        if amps.shape != (2 ** self.n_qubits,):
            raise ValueError(f"{self.n_qubits} qubits need {2 ** self.n_qubits} amplitudes, got {amps.shape[0]}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm = {norm!r})")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> StateVector:
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def product(cls, *factors) -> StateVector:
        """Tensor product, first factor is qubit 0 (most significant)."""
        amps = np.ones(1, dtype=complex)
        for f in factors:
            amps = np.kron(amps, numkit.as_vector(f))
        return cls(int(round(math.log2(amps.shape[0]))), amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = numkit.as_matrix(self.entries)
        if rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if numkit.frobenius(rho - rho.conj().T) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"density matrix trace is {tr!r}")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class ShotResult:
    counts: dict
    shots: int
    seed: int | None

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")


@dataclass(frozen=True)
class PhaseRecord:
    """One sweep point. ``overlap_*`` is the reference <psi0|M(phi)|psi0> from the model."""

    phi: float
    overlap_re: float
    overlap_im: float
    sigma_x: float
    sigma_y: float
    phase_arg: float
    phase_unwrapped: float
    shots: int | str = "exact"
    counts: dict | None = field(default=None, compare=False, repr=False)

    FIELDS = (
        "phi", "overlap_re", "overlap_im", "sigma_x", "sigma_y",
        "phase_arg", "phase_unwrapped", "shots",
    )

    def row(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


# --- gate application -----------------------------------------------------

def _apply_matrix(amps: np.ndarray, n: int, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    k = len(targets)
    psi = amps.reshape([2] * n)
    psi = np.tensordot(u.reshape([2] * (2 * k)), psi, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the acted-on axes first; move them back
    psi = np.moveaxis(psi, list(range(k)), list(targets))
    return psi.reshape(-1)


def apply_gate(s: StateVector, g: Gate) -> StateVector:
    if g.kind is GateKind.MEASURE:
        raise ValueError("MEASURE is not a unitary gate; use run() and sample_counts()")
    for t in g.targets:
        if t >= s.n_qubits:
            raise ValueError(f"target {t} out of range for {s.n_qubits} qubits")
    return StateVector(s.n_qubits, _apply_matrix(s.amplitudes, s.n_qubits, g.matrix(), g.targets))


def run(c: Circuit, initial: StateVector | None = None, shots: int | None = None,
        seed: int | None = None) -> tuple[StateVector, ShotResult | None]:
    """Apply the unitary part of ``c``; sample the measured qubits if ``shots`` is given.

    Measurements are deferred: the returned state is the pre-measurement state.
    """
    s = initial if initial is not None else StateVector.zero(c.n_qubits)
    if s.n_qubits != c.n_qubits:
        raise ValueError(f"circuit has {c.n_qubits} qubits, state has {s.n_qubits}")
    for g in c.unitary_gates:
        s = apply_gate(s, g)
    result = None
    if shots is not None and c.measurements:
        qubits = [g.targets[0] for g in sorted(c.measurements, key=lambda g: g.clbit)]
        result = sample_counts(s, qubits, shots, seed)
    return s, result


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Matrix of the unitary part of ``c`` (measurements dropped)."""
    dim = 2 ** c.n_qubits
    cols = []
    for j in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[j] = 1.0
        for g in c.unitary_gates:
            amps = _apply_matrix(amps, c.n_qubits, g.matrix(), g.targets)
        cols.append(amps)
    return np.column_stack(cols)


def phase_invariant_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|tr(u^H v)| / dim; equals 1 exactly when u and v agree up to a global phase."""
    return float(abs(np.trace(u.conj().T @ v)) / u.shape[0])


# --- reduced states and expectations --------------------------------------

def reduce_probe(s: StateVector, probe_qubit: int = 0) -> DensityMatrix:
    if s.n_qubits != 2:
        raise ValueError(f"reduce_probe needs a 2-qubit state, got {s.n_qubits}")
    psi = s.amplitudes.reshape(2, 2)
    if probe_qubit == 1:
        psi = psi.T
    elif probe_qubit != 0:
        raise ValueError(f"probe qubit must be 0 or 1, got {probe_qubit}")
    rho = psi @ psi.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def pauli_expectation(rho: DensityMatrix, axis: str) -> float:
    r = rho.entries
    if r.shape != (2, 2):
        raise ValueError("pauli_expectation needs a single-qubit density matrix")
    return float(np.trace(r @ PAULI[axis.upper()]).real)


def depolarize(rho: DensityMatrix, p: float) -> DensityMatrix:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability must lie in [0, 1], got {p}")
    d = rho.dim
    return DensityMatrix((1.0 - p) * rho.entries + p * np.eye(d) / d)


def wrap_phase(x: float) -> float:
    """Reduce to (-pi, pi], sending values at the branch cut to +pi."""
    y = math.remainder(x, 2.0 * math.pi)
    if y <= -math.pi + BRANCH_CUT_TOL:
        y = math.pi
    return y + 0.0  # drop the sign of zero


def extract_phase(sigma_x: float, sigma_y: float) -> tuple[float, float]:
    """Return (arg(sx + i sy), arccos(sx)).

    The second value is the monotone accumulation measure; for a real overlap
    cos(phi/2) it equals phi/2 on [0, 2pi].
    """
    if sigma_x == 0.0 and sigma_y == 0.0:
        raise PhaseUndefinedError("phase is undefined for <sx> = <sy> = 0")
    if sigma_x * sigma_x + sigma_y * sigma_y > 1.0 + 1e-9:
        raise ValueError(f"(<sx>, <sy>) = ({sigma_x}, {sigma_y}) lies outside the Bloch disc")
    arg = wrap_phase(math.atan2(sigma_y, sigma_x))
    unwrapped = math.acos(min(1.0, max(-1.0, sigma_x)))
    return arg, unwrapped


def clip_to_disc(sigma_x: float, sigma_y: float) -> float:
    """Shrink a sampled <sy> so (<sx>, <sy>) is a physical qubit state.

    X and Y are estimated from separate circuits, so the pair can leave the
    Bloch disc. <sx> is left untouched; only <sy> is clipped.
    """
    bound = math.sqrt(max(0.0, 1.0 - sigma_x * sigma_x))
    return min(bound, max(-bound, sigma_y))


# --- sampling -------------------------------------------------------------

def _stream_key(stream) -> list[int]:
    return [int(stream)] if np.isscalar(stream) else [int(s) for s in stream]


def make_rng(seed: int | None, stream=0) -> np.random.Generator:
    """PCG64 generator keyed on (seed, *stream); ``seed=None`` draws fresh OS entropy."""
    if seed is None:
        return np.random.Generator(np.random.PCG64())
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *_stream_key(stream)])))


def marginal_probabilities(s: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Born probabilities of the listed qubits; outcome index has qubits[0] as its top bit."""
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < s.n_qubits for q in qubits):
        raise ValueError(f"bad measured qubits {qubits}")
    probs = s.probabilities().reshape([2] * s.n_qubits)
    rest = tuple(q for q in range(s.n_qubits) if q not in qubits)
    marg = probs.sum(axis=rest) if rest else probs
    # sum() keeps remaining axes in ascending order; reorder to match ``qubits``
    order = sorted(qubits)
    marg = np.transpose(marg, [order.index(q) for q in qubits]).reshape(-1)
    return marg / marg.sum()


def _bitstrings(k: int) -> list[str]:
    return [format(i, f"0{k}b") for i in range(2 ** k)]


def sample_from(probs: np.ndarray, n_bits: int, shots: int, seed: int | None,
                stream=0) -> ShotResult:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    draws = make_rng(seed, stream).random(shots)
    idx = np.searchsorted(cdf, draws, side="right")
    tally = np.bincount(idx, minlength=len(probs))
    labels = _bitstrings(n_bits)
    counts = {labels[i]: int(n) for i, n in enumerate(tally) if n}
    return ShotResult(counts, shots, seed)


def sample_counts(s: StateVector, measured_qubits: Sequence[int], shots: int,
                  seed: int | None = None, stream=0) -> ShotResult:
    probs = marginal_probabilities(s, measured_qubits)
    return sample_from(probs, len(list(measured_qubits)), shots, seed, stream)


def estimate_expectation(r: ShotResult) -> float:
    if any(len(k) != 1 for k in r.counts):
        raise ValueError("estimate_expectation needs single-bit outcomes")
    return (r.counts.get("0", 0) - r.counts.get("1", 0)) / r.shots


# --- full protocol --------------------------------------------------------

def probe_signal(s: StateVector, noise_p: float = 0.0) -> tuple[float, float]:
    """(P0, P1) of the probe after the basis change, with optional depolarizing noise."""
    p0, p1 = marginal_probabilities(s, [0])
    if noise_p:
        p0, p1 = (1 - noise_p) * p0 + noise_p / 2, (1 - noise_p) * p1 + noise_p / 2
    return float(p0), float(p1)


def measure_phase(phi_total: float, n_steps: int = 1, shots: int | None = None,
                  seed: int | None = None, noise_p: float = 0.0,
                  psi0=(1.0, 0.0), stream=()) -> PhaseRecord:
    """Run the X- and Y-basis protocol circuits and combine them into one record.

    ``shots=None`` is exact mode: expectations come straight from the final
    probabilities. Otherwise each basis is sampled with its own stream of the
    same seed, keyed ``(*stream, 0)`` for X and ``(*stream, 1)`` for Y.
    """
    if not 0.0 <= noise_p <= 1.0:
        raise ValueError(f"noise_p must lie in [0, 1], got {noise_p}")
    steps = uniform_steps(phi_total, n_steps)
    initial = StateVector.product([1.0, 0.0], psi0)
    sigma = {}
    counts = {}
    for basis_id, basis in enumerate((MeasureBasis.X, MeasureBasis.Y)):
        final, _ = run(build_protocol(steps, basis), initial)
        p0, p1 = probe_signal(final, noise_p)
        if shots is None:
            sigma[basis] = p0 - p1
        else:
            res = sample_from(np.array([p0, p1]), 1, shots, seed, (*_stream_key(stream), basis_id))
            counts[basis.value] = res.counts
            sigma[basis] = estimate_expectation(res)
    sx, sy = sigma[MeasureBasis.X], sigma[MeasureBasis.Y]
    if shots is not None:
        sy = clip_to_disc(sx, sy)
    ref = model.overlap(phi_total, psi0)
    arg, unwrapped = extract_phase(sx, sy)
    return PhaseRecord(
        phi=float(phi_total),
        overlap_re=ref.real,
        overlap_im=ref.imag,
        sigma_x=sx,
        sigma_y=sy,
        phase_arg=arg,
        phase_unwrapped=unwrapped,
        shots="exact" if shots is None else int(shots),
        counts=counts or None,
    )
