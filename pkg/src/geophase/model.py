"""Longuet-Higgins conical-intersection model and its vibronic generalization.

The two-state model is

    H(K, phi) = K * I + K * [[cos phi, sin phi], [sin phi, -cos phi]]

whose real eigenvectors ``[cos(phi/2), sin(phi/2)]`` and
``[-sin(phi/2), cos(phi/2)]`` change sign after one loop ``phi -> phi + 2 pi``.
Angles are never reduced modulo 2 pi in this module; the sign change lives in
the unwrapped branch and callers rely on seeing it.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import numkit

ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    K: float = 1.0
    phi: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not self.K >= 0:
            raise ValueError(f"K must be non-negative, got {self.K}")
        for name in ("phi", "alpha", "beta", "b"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class VibronicSystem:
    """First-order vibronic coupling: one m x m Hermitian matrix per normal mode."""

    m: int
    couplings: tuple
    mode_labels: tuple = field(default=())

    def __post_init__(self):
        mats = tuple(numkit.check_hermitian(c) for c in self.couplings)
        for k, c in enumerate(mats):
            if c.shape != (self.m, self.m):
                raise ValueError(f"coupling {k} has shape {c.shape}, expected ({self.m}, {self.m})")
        labels = tuple(self.mode_labels) or tuple(f"Q{k + 1}" for k in range(len(mats)))
        if len(labels) != len(mats):
            raise ValueError("need one label per coupling matrix")
        object.__setattr__(self, "couplings", mats)
        object.__setattr__(self, "mode_labels", labels)

    @property
    def n_modes(self) -> int:
        return len(self.couplings)


def traceless_part(p: ModelParams) -> np.ndarray:
    c, s = math.cos(p.phi), math.sin(p.phi)
    return p.K * np.array([[c, s], [s, -c]], dtype=complex)


def hamiltonian(p: ModelParams) -> np.ndarray:
    return p.K * np.eye(2, dtype=complex) + traceless_part(p)


def eigenbranches(phi: float) -> tuple[np.ndarray, np.ndarray]:
    """The two real eigenvectors at angle ``phi``, exactly as written, no re-phasing.

    The first belongs to ``+K`` of the traceless part, the second to ``-K``.
    """
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)


def cone_energies(p: ModelParams, x: float, y: float) -> tuple[float, float]:
    """Upper and lower sheets of the double cone, +-sqrt((alpha x + beta y)^2 + (b y)^2)."""
    r = math.hypot(p.alpha * x + p.beta * y, p.b * y)
    return r, -r


def evolution(phi: float) -> np.ndarray:
    """Transport operator taking the phi = 0 eigenbasis to the branches at ``phi``."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def evolution_step(phi: float, delta_phi: float) -> np.ndarray:
    return evolution(phi + delta_phi)


def outer_product_operator(inputs: Sequence, outputs: Sequence) -> np.ndarray:
    """sum_k |outputs[k]><inputs[k]| for an orthonormal set of inputs."""
    if len(inputs) != len(outputs):
        raise ValueError(f"{len(inputs)} inputs but {len(outputs)} outputs")
    if not inputs:
        raise ValueError("need at least one input/output pair")
    ins = np.column_stack([numkit.as_vector(v) for v in inputs])
    outs = np.column_stack([numkit.as_vector(v) for v in outputs])
    gram = ins.conj().T @ ins
    if numkit.frobenius(gram - np.eye(len(inputs))) > ORTHONORMAL_TOL:
        raise ValueError("inputs are not orthonormal")
    return outs @ ins.conj().T


def overlap(phi: float, psi0) -> complex:
    """<psi0| evolution(phi) |psi0>, the quantity the probe qubit reads out."""
    psi0 = numkit.as_vector(psi0)
    return complex(np.vdot(psi0, evolution(phi) @ psi0))


def vibronic_secular(sys: VibronicSystem, q: Sequence[float]) -> np.ndarray:
    q = list(q)
    if len(q) != sys.n_modes:
        raise ValueError(f"got {len(q)} coordinates for {sys.n_modes} modes")
    out = np.zeros((sys.m, sys.m), dtype=complex)
    for qk, vk in zip(q, sys.couplings):
        out = out + qk * vk
    return out


def split_levels(sys: VibronicSystem, q: Sequence[float]) -> list[float]:
    return [float(x) for x in numkit.eig_hermitian(vibronic_secular(sys, q)).values]


def e_otimes_e() -> VibronicSystem:
    """Linear E x e coupling; with q = (K cos phi, K sin phi) it reproduces traceless_part."""
    return VibronicSystem(
        m=2,
        couplings=(np.array([[1, 0], [0, -1]]), np.array([[0, 1], [1, 0]])),
        mode_labels=("Qx", "Qy"),
    )


# --- model file -----------------------------------------------------------

class ModelFileError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


def _parse_entry(tok: str, lineno: int) -> complex:
    parts = tok.split(",")
    if len(parts) != 2:
        raise ModelFileError(f"expected 're,im', got {tok!r}", lineno)
    try:
        re, im = float(parts[0]), float(parts[1])
    except ValueError:
        raise ModelFileError(f"bad number in {tok!r}", lineno) from None
    if not (math.isfinite(re) and math.isfinite(im)):
        raise ModelFileError(f"non-finite entry {tok!r}", lineno)
    return complex(re, im)


def parse_vibronic(text: str) -> VibronicSystem:
    """Parse the plain-text vibronic model format.

    Grammar (blank lines and ``#`` comments ignored)::

        m <int>
        <label>                      # one block per normal mode
        re,im re,im ... (m entries)  # m rows
        ...
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if not lines:
        raise ModelFileError("empty model file")

    lineno, head = lines[0]
    tokens = head.split()
    if len(tokens) != 2 or tokens[0] != "m":
        raise ModelFileError(f"expected 'm <int>', got {head!r}", lineno)
    try:
        m = int(tokens[1])
    except ValueError:
        raise ModelFileError(f"bad degeneracy order {tokens[1]!r}", lineno) from None
    if m < 1:
        raise ModelFileError("degeneracy order must be >= 1", lineno)

    labels, mats = [], []
    i = 1
    while i < len(lines):
        label_line, label = lines[i]
        if "," in label:
            raise ModelFileError(f"expected a mode label, got matrix row {label!r}", label_line)
        rows = lines[i + 1:i + 1 + m]
        if len(rows) < m:
            raise ModelFileError(f"mode {label!r} has {len(rows)} rows, expected {m}", label_line)
        mat = np.empty((m, m), dtype=complex)
        for r, (row_line, row) in enumerate(rows):
            toks = row.split()
            if len(toks) != m:
                raise ModelFileError(f"expected {m} entries, got {len(toks)}", row_line)
            mat[r] = [_parse_entry(t, row_line) for t in toks]
        try:
            numkit.check_hermitian(mat)
        except numkit.NotHermitianError as exc:
            raise ModelFileError(f"mode {label!r}: {exc}", label_line) from None
        labels.append(label)
        mats.append(mat)
        i += 1 + m
    if not mats:
        raise ModelFileError("no modes defined", lineno)
    return VibronicSystem(m=m, couplings=tuple(mats), mode_labels=tuple(labels))


def load_vibronic(path: str | os.PathLike) -> VibronicSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_vibronic(fh.read())


def format_vibronic(sys: VibronicSystem) -> str:
    out = [f"m {sys.m}"]
    for label, mat in zip(sys.mode_labels, sys.couplings):
        out.append(label)
        for row in mat:
            out.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    return "\n".join(out) + "\n"
