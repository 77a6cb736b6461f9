"""Geometric-phase oracles independent of the circuit protocol.

A :class:`Branch` is any smooth map phi -> unit 2-vector. From it we get the
Berry connection A(phi) = (1/i) <chi|d chi/d phi> by central differences, and
the discrete Pancharatnam phase of the closed loop phi in [0, 2 pi).

Sign convention: for a fine loop the Pancharatnam phase tends to
``-(integral of A) mod 2 pi`` plus pi for every sign change the branch
picks up on the way round.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import model
from .engine import wrap_phase

NORM_TOL = 1e-10
MIN_OVERLAP = 1e-9


class BranchError(ValueError):
    pass


@dataclass(frozen=True)
class Branch:
    evaluator: Callable[[float], np.ndarray]
    label: str = "branch"
    gauge: Callable[[float], float] | None = None

    def __call__(self, phi: float) -> np.ndarray:
        v = np.asarray(self.evaluator(phi), dtype=complex)
        if v.shape != (2,):
            raise BranchError(f"{self.label}: expected a 2-vector, got shape {v.shape}")
        return v

    def checked(self, phi: float) -> np.ndarray:
        v = self(phi)
        n = np.linalg.norm(v)
        if abs(n - 1.0) > NORM_TOL:
            raise BranchError(f"{self.label}: norm {n!r} at phi={phi!r}")
        return v


def eigenbranch(which: int = 0) -> Branch:
    """One of the two real model eigenvectors, multivalued over a 2 pi loop."""
    if which not in (0, 1):
        raise ValueError("which must be 0 or 1")
    return Branch(lambda phi: model.eigenbranches(phi)[which], label=f"eigenbranch[{which}]")


def constant_branch(v=(1.0, 0.0)) -> Branch:
    vec = np.asarray(v, dtype=complex)
    return Branch(lambda phi: vec, label="constant")


def connection(b: Branch, phi: float, h: float = 1e-5) -> float:
    """Berry connection (1/i) <chi(phi)|chi'(phi)> by central differences."""
    if not 1e-8 <= h <= 1e-3:
        raise ValueError(f"step h={h!r} outside [1e-8, 1e-3]")
    here = b.checked(phi)
    fwd, back = b.checked(phi + h), b.checked(phi - h)
    deriv = (fwd - back) / (2.0 * h)
    a = np.vdot(here, deriv) / 1j
    if abs(a.imag) > 10.0 * h:
        raise BranchError(f"{b.label}: connection has imaginary residue {a.imag:.3e} at phi={phi!r}")
    return float(a.real)


def gauge_transform(b: Branch, f: Callable[[float], float]) -> Branch:
    """phi -> exp(i f(phi)) chi(phi). The connection shifts by f'(phi)."""
    base = b.evaluator
    prev = b.gauge

    def evaluator(phi):
        return cmath.exp(1j * f(phi)) * np.asarray(base(phi), dtype=complex)

    gauge = f if prev is None else (lambda phi: prev(phi) + f(phi))
    return Branch(evaluator, label=f"{b.label}+gauge", gauge=gauge)


def loop_overlaps(b: Branch, n_steps: int, phi_end: float = 2.0 * math.pi,
                  closed: bool = True) -> list[complex]:
    if n_steps < 3:
        raise ValueError("need at least 3 steps")
    grid = [phi_end * k / n_steps for k in range(n_steps)]
    if not closed:
        grid.append(phi_end)
    states = [b.checked(p) for p in grid]
    pairs = list(zip(states, states[1:]))
    if closed:
        # close on the value at phi_0 itself, not on chi(2 pi)
        pairs.append((states[-1], states[0]))
    out = []
    for k, (u, v) in enumerate(pairs):
        o = complex(np.vdot(u, v))
        if abs(o) < MIN_OVERLAP:
            raise BranchError(f"{b.label}: overlap {k} has magnitude {abs(o):.3e}; refine the loop")
        out.append(o)
    return out


def pancharatnam_phase(b: Branch, n_steps: int) -> float:
    """-arg of the closed-loop overlap product, in (-pi, pi] with pi preferred."""
    prod = complex(1.0)
    for o in loop_overlaps(b, n_steps):
        prod *= o / abs(o)
    return wrap_phase(-cmath.phase(prod))


def open_path_phase(b: Branch, n_steps: int, phi_end: float) -> float:
    """Same product over [0, phi_end] without closing; gauge dependent."""
    prod = complex(1.0)
    for o in loop_overlaps(b, n_steps, phi_end, closed=False):
        prod *= o / abs(o)
    return wrap_phase(-cmath.phase(prod))


def holonomy_check(phi_total: float, tol: float = 1e-12) -> int:
    """Sign of <0|evolution(phi_total)|0>: -1 after a full loop, 0 where the states are orthogonal."""
    val = model.evolution(phi_total)[0, 0].real
    if abs(val) <= tol:
        return 0
    return 1 if val > 0 else -1
