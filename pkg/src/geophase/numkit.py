"""Small dense complex linear algebra.

Matrices and vectors are plain ``numpy`` complex arrays. Everything here is
sized for the handful of qubits and the m x m secular matrices used by the
rest of the package (m <= 16), so there is no sparse path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100
# eigenvector tie-breaking when two components have equal magnitude
_TIE_TOL = 1e-12


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with eigenvectors stored as the columns of ``vectors``."""

    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        # allows ``vals, vecs = eig_hermitian(a)``
        yield self.values
        yield self.vectors

    def vector(self, i: int) -> np.ndarray:
        return self.vectors[:, i]

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return (v * self.values) @ v.conj().T


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_vector(v) -> np.ndarray:
    x = np.asarray(v, dtype=complex)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def inner(u, v) -> complex:
    """<u|v>, conjugating the first argument."""
    return complex(np.vdot(as_vector(u), as_vector(v)))


def outer(u, v) -> np.ndarray:
    """|u><v|."""
    return np.outer(as_vector(u), as_vector(v).conj())


def frobenius(a) -> float:
    return float(np.linalg.norm(a))


def is_unitary(u, tol: float = 1e-10) -> bool:
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        return False
    return frobenius(u.conj().T @ u - np.eye(u.shape[0])) <= tol


def check_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``a`` as a square complex matrix, raising if it is not Hermitian.

    The tolerance is applied to ``||a - a^H||_F`` relative to ``max(1, ||a||_F)``.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"matrix is not square: {a.shape}")
    err = frobenius(a - a.conj().T)
    if err > tol * max(1.0, frobenius(a)):
        raise NotHermitianError(f"matrix is not Hermitian (||A - A^H|| = {err:.3e})")
    return a


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude component is real and non-negative.

    Ties (within 1e-12) go to the lowest index.
    """
    mags = np.abs(v)
    top = mags.max()
    if top == 0.0:
        return v
    k = int(np.flatnonzero(mags >= top - _TIE_TOL)[0])
    return v * (abs(v[k]) / v[k])


def _finish(values, vectors) -> EigenDecomposition:
    order = np.argsort(values, kind="stable")
    values = np.asarray(values, dtype=float)[order]
    vectors = np.array(vectors, dtype=complex)[:, order]
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        vectors[:, j] = fix_phase(col / np.linalg.norm(col))
    return EigenDecomposition(values, vectors)


def eig_hermitian_2x2(a) -> EigenDecomposition:
    """Closed-form eigenpairs of a 2x2 Hermitian matrix."""
    a = check_hermitian(a)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {a.shape}")
    scale = float(np.abs(a).max())
    if scale == 0.0:
        return _finish([0.0, 0.0], np.eye(2, dtype=complex))
    # work at unit scale so tiny or huge entries do not under/overflow
    p, d = a[0, 0].real / scale, a[1, 1].real / scale
    b = a[0, 1] / scale
    mean = 0.5 * (p + d)
    half = 0.5 * (p - d)
    r = float(np.hypot(half, abs(b)))
    lo, hi = mean - r, mean + r

    if b == 0.0:
        # already diagonal; keep the standard basis
        return _finish([p * scale, d * scale], np.eye(2, dtype=complex))

    cols = []
    for lam in (lo, hi):
        # both null-space candidates of (a - lam I); keep the longer one
        u = np.array([b, lam - p], dtype=complex)
        w = np.array([lam - d, np.conj(b)], dtype=complex)
        cols.append(u if np.linalg.norm(u) >= np.linalg.norm(w) else w)
    return _finish([lo * scale, hi * scale], np.column_stack(cols))


def _off_norm(a: np.ndarray) -> float:
    return frobenius(a - np.diag(np.diag(a)))


def eig_hermitian(a, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """Full spectrum of a Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation first removes the phase of the pivot ``a[p, q]`` with a
    diagonal unitary, then applies the real symmetric Jacobi rotation that
    zeroes it. Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol * ||A||_F``.
    """
    a = check_hermitian(a)
    n = a.shape[0]
    work = 0.5 * (a + a.conj().T)
    vecs = np.eye(n, dtype=complex)
    scale = frobenius(work)
    if n == 1 or scale == 0.0:
        return _finish(np.diag(work).real, vecs)

    threshold = tol * scale
    for _ in range(max_sweeps):
        if _off_norm(work) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = (work[q, q].real - work[p, p].real) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                work[:, idx] = work[:, idx] @ rot
                work[idx, :] = rot.conj().T @ work[idx, :]
                work[p, q] = work[q, p] = 0.0
                work[p, p] = work[p, p].real
                work[q, q] = work[q, q].real
                vecs[:, idx] = vecs[:, idx] @ rot
    else:
        if _off_norm(work) > threshold:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {_off_norm(work):.3e}, target {threshold:.3e})"
            )
    return _finish(np.diag(work).real, vecs)
