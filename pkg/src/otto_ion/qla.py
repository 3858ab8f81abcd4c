"""Small dense complex linear algebra (dimensions 2 and 4).

Matrices are plain ``numpy`` arrays of dtype ``complex128`` in row-major
order. Joint two-qubit indices follow ``index = dB * a + b`` with subsystem A
(the ion's internal states) as the slow index.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-14
PHASE_FIX_TOL = 1e-12
DEGENERACY_TOL = 1e-10


class LinalgError(ValueError):
    """Invalid input to, or failure of, a linear-algebra routine."""


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues and matching eigenvectors (as columns)."""

    values: np.ndarray
    vectors: np.ndarray

    def vector(self, i: int) -> np.ndarray:
        return self.vectors[:, i]


def as_matrix(a) -> np.ndarray:
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise LinalgError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def check_density_matrix(rho, tol: float = TRACE_TOL) -> np.ndarray:
    """Return ``rho`` as an array after checking trace, Hermiticity and positivity.

    Raises:
        LinalgError: if any density-matrix invariant is violated.
    """
    m = as_matrix(rho)
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise LinalgError(f"trace {tr} differs from 1 by more than {tol}")
    if not is_hermitian(m):
        raise LinalgError("density matrix is not Hermitian")
    lowest = np.linalg.eigvalsh(m)[0]
    if lowest < -POSITIVITY_TOL:
        raise LinalgError(f"density matrix has negative eigenvalue {lowest}")
    return m


def kron(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    n, m = a.shape[0], b.shape[0]
    out = np.empty((n * m, n * m), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = a[i, j] * b
    return out


def partial_trace(rho, dims: tuple[int, int], keep: str = "A") -> np.ndarray:
    """Reduced state of a bipartite operator.

    Args:
        rho: operator on ``C^dA (x) C^dB``.
        dims: ``(dA, dB)``.
        keep: ``"A"`` to trace out B, ``"B"`` to trace out A.
    """
    m = as_matrix(rho)
    d_a, d_b = dims
    if d_a < 1 or d_b < 1 or m.shape[0] != d_a * d_b:
        raise LinalgError(f"dimension {m.shape[0]} does not factor as {d_a}x{d_b}")
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ibjb->ij", t)
    if keep == "B":
        return np.einsum("aiaj->ij", t)
    raise LinalgError(f"keep must be 'A' or 'B', got {keep!r}")


def _jacobi(a: list[list[complex]], n: int) -> tuple[list[list[complex]], list[list[complex]]]:
    # Cyclic complex Jacobi. Each rotation first removes the phase of a[p][q],
    # then applies a real Givens rotation; J = diag-phase * rotation.
    v = [[1.0 + 0j if i == j else 0j for j in range(n)] for i in range(n)]
    scale = math.sqrt(sum(abs(x) ** 2 for row in a for x in row)) or 1.0
    target = JACOBI_OFF_TOL * scale
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(sum(abs(a[i][j]) ** 2 for i in range(n) for j in range(n) if i != j))
        if off <= target:
            return a, v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                r = abs(apq)
                if r == 0.0:
                    continue
                phase = apq / r  # e^{i phi}
                app = a[p][p].real
                aqq = a[q][q].real
                theta = (aqq - app) / (2.0 * r)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ph = phase.conjugate()
                j00, j01, j10, j11 = c, s, -s * ph, c * ph
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = akp * j00 + akq * j10
                    a[k][q] = akp * j01 + akq * j11
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = vkp * j00 + vkq * j10
                    v[k][q] = vkp * j01 + vkq * j11
                c00, c01, c10, c11 = j00, j01, j10.conjugate(), j11.conjugate()
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c00 * apk + c10 * aqk
                    a[q][k] = c01 * apk + c11 * aqk
                a[p][q] = 0j
                a[q][p] = 0j
                a[p][p] = complex(a[p][p].real, 0.0)
                a[q][q] = complex(a[q][q].real, 0.0)
    raise LinalgError(f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def _phase_fixed(vec: list[complex]) -> list[complex]:
    for x in vec:
        if abs(x) > PHASE_FIX_TOL:
            w = abs(x) / x
            return [y * w for y in vec]
    return vec


def hermitian_eigen(h) -> EigenDecomposition:
    """Eigendecomposition of a small Hermitian matrix by cyclic Jacobi rotations.

    Eigenvalues come back ascending. Each eigenvector is rescaled so that its
    first component with magnitude above ``PHASE_FIX_TOL`` is real and
    positive; vectors sharing an eigenvalue are ordered lexicographically by
    their (re, im) components.

    Raises:
        LinalgError: for non-Hermitian input or if the iteration cap is hit.
    """
    m = as_matrix(h)
    if not is_hermitian(m):
        raise LinalgError("hermitian_eigen requires a Hermitian matrix")
    n = m.shape[0]
    m = 0.5 * (m + dagger(m))
    a, v = _jacobi([[complex(x) for x in row] for row in m.tolist()], n)
    values = [a[i][i].real for i in range(n)]
    vecs = [_phase_fixed([v[k][i] for k in range(n)]) for i in range(n)]
    # renormalise: rotations keep unit norm up to rounding
    vecs = [[x / math.sqrt(sum(abs(y) ** 2 for y in vec)) for x in vec] for vec in vecs]

    order = sorted(range(n), key=lambda i: values[i])
    # group near-degenerate values, then order each group lexicographically
    spread = max(1.0, max(abs(x) for x in values))
    groups: list[list[int]] = []
    for i in order:
        if groups and values[i] - values[groups[-1][0]] <= DEGENERACY_TOL * spread:
            groups[-1].append(i)
        else:
            groups.append([i])
    final: list[int] = []
    for grp in groups:
        final.extend(sorted(grp, key=lambda i: [c for x in vecs[i] for c in (x.real, x.imag)]))

    vals = np.array([values[i] for i in final])
    mat = np.array([vecs[i] for i in final], dtype=np.complex128).T
    return EigenDecomposition(vals, mat)


def spectral_sum(weights, vectors: np.ndarray) -> np.ndarray:
    """Return ``sum_i w_i |v_i><v_i|`` for column vectors ``vectors[:, i]``."""
    w = np.asarray(weights, dtype=float)
    return (vectors * w) @ dagger(vectors)
