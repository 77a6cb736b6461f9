"""Gate-level circuits for the probe/system interferometer.

Qubit 0 is the probe, qubit 1 the system. State vectors are indexed with the
probe as the most significant bit, so ``|p s>`` sits at index ``2 * p + s``.

The transpiled basis is ``{u3, cx}`` plus ``measure``; ``cx`` is carried as a
CONTROLLED_U gate whose payload is X and whose label is ``"cx"``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import model, numkit

TWO_PI = 2.0 * math.pi
UNITARY_TOL = 1e-10
# payloads this close to +-I are treated as (controlled) global phases
_IDENTITY_TOL = 1e-12

_SQ = 1.0 / math.sqrt(2.0)
H_MATRIX = np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex)
X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)
SDG_MATRIX = np.array([[1, 0], [0, -1j]], dtype=complex)


class GateKind(enum.Enum):
    H = "h"
    X = "x"
    S_DAG = "sdg"
    U3 = "u3"
    CONTROLLED_U = "cu"
    MEASURE = "measure"


class MeasureBasis(enum.Enum):
    X = "X"
    Y = "Y"


class UnsupportedGateError(ValueError):
    pass


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class Gate:
    kind: GateKind
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    payload: np.ndarray | None = field(default=None, repr=False)
    label: str = ""
    clbit: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated target in {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ValueError(f"negative target in {self.targets}")
        arity = 2 if self.kind is GateKind.CONTROLLED_U else 1
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind.name} takes {arity} target(s), got {self.targets}")
        if self.kind is GateKind.U3 and len(self.params) != 3:
            raise ValueError("U3 needs (theta, phi, lambda)")
        if self.kind is GateKind.CONTROLLED_U:
            if self.payload is None:
                raise ValueError("CONTROLLED_U needs a payload")
            u = numkit.as_matrix(self.payload)
            if u.shape != (2, 2) or not numkit.is_unitary(u, UNITARY_TOL):
                raise ValueError("CONTROLLED_U payload must be a 2x2 unitary")
            u = u.copy()
            u.setflags(write=False)
            object.__setattr__(self, "payload", u)
        if self.kind is GateKind.MEASURE and (self.clbit is None or self.clbit < 0):
            raise ValueError("MEASURE needs a classical bit index")

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        same_payload = (self.payload is None and other.payload is None) or (
            self.payload is not None
            and other.payload is not None
            and np.array_equal(self.payload, other.payload)
        )
        return (
            self.kind is other.kind
            and self.targets == other.targets
            and self.params == other.params
            and self.label == other.label
            and self.clbit == other.clbit
            and same_payload
        )

    __hash__ = None

    @property
    def is_cx(self) -> bool:
        return self.kind is GateKind.CONTROLLED_U and self.label == "cx"

    def matrix(self) -> np.ndarray:
        """Unitary acting on ``targets`` (control first for CONTROLLED_U)."""
        k = self.kind
        if k is GateKind.H:
            return H_MATRIX
        if k is GateKind.X:
            return X_MATRIX
        if k is GateKind.S_DAG:
            return SDG_MATRIX
        if k is GateKind.U3:
            return u3_matrix(*self.params)
        if k is GateKind.CONTROLLED_U:
            out = np.eye(4, dtype=complex)
            out[2:, 2:] = self.payload
            return out
        raise UnsupportedGateError("MEASURE has no unitary")


def h(q: int) -> Gate:
    return Gate(GateKind.H, (q,))


def x(q: int) -> Gate:
    return Gate(GateKind.X, (q,))


def sdg(q: int) -> Gate:
    return Gate(GateKind.S_DAG, (q,))


def u3(q: int, theta: float, phi: float, lam: float) -> Gate:
    return Gate(GateKind.U3, (q,), (float(theta), float(phi), float(lam)))


def ry(q: int, theta: float) -> Gate:
    return u3(q, theta, 0.0, 0.0)


def controlled(control: int, target: int, u, label: str = "") -> Gate:
    return Gate(GateKind.CONTROLLED_U, (control, target), payload=u, label=label)


def cx(control: int, target: int) -> Gate:
    return controlled(control, target, X_MATRIX, "cx")


def measure(q: int, clbit: int) -> Gate:
    return Gate(GateKind.MEASURE, (q,), clbit=clbit)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    n_clbits: int = 0
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1 or self.n_clbits < 0:
            raise ValueError("need n_qubits >= 1 and n_clbits >= 0")
        measured = set()
        for g in self.gates:
            for t in g.targets:
                if t >= self.n_qubits:
                    raise ValueError(f"target {t} out of range for {self.n_qubits} qubits")
                if t in measured:
                    raise ValueError(f"gate {g.kind.name} follows a measurement on qubit {t}")
            if g.kind is GateKind.MEASURE:
                if g.clbit >= self.n_clbits:
                    raise ValueError(f"clbit {g.clbit} out of range for {self.n_clbits} bits")
                measured.add(g.targets[0])

    def __len__(self):
        return len(self.gates)

    @property
    def unitary_gates(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.kind is not GateKind.MEASURE)

    @property
    def measurements(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.kind is GateKind.MEASURE)


# --- protocol builders ----------------------------------------------------

PROBE, SYSTEM = 0, 1


def validate_steps(steps: Sequence[float]) -> list[float]:
    steps = [float(s) for s in steps]
    if not steps:
        raise ValueError("step list is empty")
    prev = 0.0
    for s in steps:
        if not (0.0 < s <= TWO_PI):
            raise ValueError(f"step angle {s!r} outside (0, 2pi]")
        if s <= prev:
            raise ValueError(f"step angles must be strictly increasing ({prev!r} -> {s!r})")
        prev = s
    return steps


def uniform_steps(phi_total: float, n_steps: int) -> list[float]:
    """Cumulative angles ``phi_total * k / n_steps`` for k = 1..n_steps."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    out = [phi_total * k / n_steps for k in range(1, n_steps + 1)]
    out[-1] = phi_total
    return out


def increments(steps: Sequence[float]) -> list[np.ndarray]:
    """evolution(next) evolution(prev)^-1 for each consecutive pair, starting at 0."""
    steps = validate_steps(steps)
    out, prev = [], 0.0
    for s in steps:
        out.append(model.evolution(s - prev))
        prev = s
    return out


def build_protocol(steps: Sequence[float], basis: MeasureBasis | str | None = MeasureBasis.X) -> Circuit:
    """Hadamard-test circuit accumulating the transport in ``steps``.

    With ``basis=None`` the readout is omitted and the circuit stops at the
    entangled probe/system state.
    """
    gates = [h(PROBE)]
    for k, u in enumerate(increments(steps)):
        gates.append(controlled(PROBE, SYSTEM, u, f"M{k}"))
    if basis is None:
        return Circuit(2, 0, gates)
    basis = MeasureBasis(basis)
    if basis is MeasureBasis.Y:
        gates.append(sdg(PROBE))
    gates.append(h(PROBE))
    gates.append(measure(PROBE, 0))
    return Circuit(2, 1, gates)


# --- transpiler -----------------------------------------------------------

def _zyz(u: np.ndarray) -> tuple[float, float, float, float]:
    """Return (alpha, beta, gamma, delta) with u = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)."""
    det = np.linalg.det(u)
    alpha = float(np.angle(det)) / 2.0
    v = u * np.exp(-1j * alpha)  # now in SU(2)
    gamma = 2.0 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[0, 0]) > 1e-12 and abs(v[1, 0]) > 1e-12:
        bpd = 2.0 * float(np.angle(v[1, 1]))
        bmd = 2.0 * float(np.angle(v[1, 0]))
    elif abs(v[1, 0]) <= 1e-12:
        bpd, bmd = 2.0 * float(np.angle(v[1, 1])), 0.0
    else:
        bpd, bmd = 0.0, 2.0 * float(np.angle(v[1, 0]))
    return alpha, (bpd + bmd) / 2.0, gamma, (bpd - bmd) / 2.0


def _rz(q: int, angle: float) -> Gate:
    # equal to Rz(angle) up to a global phase e^{i angle/2}
    return u3(q, 0.0, 0.0, angle)


def _controlled_real_rotation(u: np.ndarray) -> float | None:
    """Angle delta if ``u`` is the real rotation [[cos d/2, -sin d/2], [sin d/2, cos d/2]]."""
    if np.abs(u.imag).max() > _IDENTITY_TOL:
        return None
    c, s = u[0, 0].real, u[1, 0].real
    if abs(u[1, 1].real - c) > _IDENTITY_TOL or abs(u[0, 1].real + s) > _IDENTITY_TOL:
        return None
    return 2.0 * math.atan2(s, c)


def _transpile_controlled(g: Gate) -> list[Gate]:
    ctl, tgt = g.targets
    u = g.payload
    if g.is_cx:
        return [g]
    if numkit.frobenius(u - np.eye(2)) <= _IDENTITY_TOL:
        return []
    if numkit.frobenius(u + np.eye(2)) <= _IDENTITY_TOL:
        # controlled(-I) = Z on the control
        return [u3(ctl, 0.0, 0.0, math.pi)]
    delta = _controlled_real_rotation(u)
    if delta is not None:
        return [ry(tgt, delta / 2), cx(ctl, tgt), ry(tgt, -delta / 2), cx(ctl, tgt)]
    # general case: u = e^{ia} A X B X C with ABC = I
    alpha, beta, gamma, dlt = _zyz(u)
    # Rz built from u3 carries a phase e^{i angle/2}; these cancel in A.B.C
    # except on the control branch, where they are folded into the phase gate.
    out = [
        _rz(tgt, (dlt - beta) / 2),
        cx(ctl, tgt),
        _rz(tgt, -(dlt + beta) / 2),
        ry(tgt, -gamma / 2),
        cx(ctl, tgt),
        ry(tgt, gamma / 2),
        _rz(tgt, beta),
    ]
    # u3-Rz phases: e^{i[(d-b)/4 - (d+b)/4 + b/2]} = 1, so only alpha remains
    if abs(alpha) > 1e-15:
        out.append(_rz(ctl, alpha))
    return out


def transpile(c: Circuit) -> Circuit:
    """Rewrite ``c`` into u3/cx/measure gates, equal up to a global phase."""
    out: list[Gate] = []
    for g in c.gates:
        k = g.kind
        if k is GateKind.H:
            out.append(u3(g.targets[0], math.pi / 2, 0.0, math.pi))
        elif k is GateKind.X:
            out.append(u3(g.targets[0], math.pi, 0.0, math.pi))
        elif k is GateKind.S_DAG:
            out.append(u3(g.targets[0], 0.0, 0.0, -math.pi / 2))
        elif k is GateKind.U3 or k is GateKind.MEASURE:
            out.append(g)
        elif k is GateKind.CONTROLLED_U:
            out.extend(_transpile_controlled(g))
        else:  # pragma: no cover - enum is closed
            raise UnsupportedGateError(f"cannot transpile {k}")
    return Circuit(c.n_qubits, c.n_clbits, out)


def is_transpiled(c: Circuit) -> bool:
    return all(g.kind in (GateKind.U3, GateKind.MEASURE) or g.is_cx for g in c.gates)


# --- OpenQASM 2.0 ---------------------------------------------------------

QASM_HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def format_angle(x: float) -> str:
    """Shortest round-trip decimal (at most 17 significant digits); integers without '.0'."""
    x = float(x)
    if x == 0.0:
        return "0"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def to_qasm(c: Circuit) -> str:
    if not is_transpiled(c):
        bad = next(g for g in c.gates if not (g.kind in (GateKind.U3, GateKind.MEASURE) or g.is_cx))
        raise UnsupportedGateError(f"{bad.kind.name} is not in the u3/cx basis; transpile first")
    lines = [f"qreg q[{c.n_qubits}];", f"creg c[{c.n_clbits}];"]
    for g in c.gates:
        if g.kind is GateKind.U3:
            args = ",".join(format_angle(p) for p in g.params)
            lines.append(f"u3({args}) q[{g.targets[0]}];")
        elif g.kind is GateKind.MEASURE:
            lines.append(f"measure q[{g.targets[0]}] -> c[{g.clbit}];")
        else:
            lines.append(f"cx q[{g.targets[0]}],q[{g.targets[1]}];")
    return QASM_HEADER + "\n".join(lines) + "\n"
