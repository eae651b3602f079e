"""Eigendecomposition, degenerate subspaces, and the analytic dark bases."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import HermitianOperator

_ORTHONORMALITY_TOL = 1e-10


def _entries(h) -> np.ndarray:
    if isinstance(h, HermitianOperator):
        return h.entries
    return np.asarray(h, dtype=complex)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def eigendecompose(h) -> EigenSystem:
    m = _entries(h)
    values, vectors = np.linalg.eigh(m)
    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigenSystem(values=values, vectors=vectors)


def default_tolerance(values: np.ndarray) -> float:
    """Degeneracy window: 1e-9 times the spectral range, floored at 1e-9."""
    spread = float(values[-1] - values[0]) if len(values) else 0.0
    return 1e-9 * max(spread, 1.0)


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal columns spanning one (near-)degenerate eigenspace.

    ``energy`` is None for purely analytic constructions that do not refer
    to a concrete operator instance.
    """

    vectors: np.ndarray
    energy: float | None = None
    tolerance: float = 0.0

    def __post_init__(self) -> None:
        v = np.asarray(self.vectors, dtype=complex)
        if v.ndim != 2 or v.shape[1] == 0:
            raise ValueError("vectors must be a nonempty column matrix")
        gram = v.conj().T @ v
        if np.max(np.abs(gram - np.eye(v.shape[1]))) > _ORTHONORMALITY_TOL:
            raise ValueError("basis columns are not orthonormal")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]


def align_to(vectors: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Rotate an orthonormal frame to best match a target frame.

    Solves the orthogonal Procrustes problem over unitaries acting inside
    the span of ``vectors``; both frames must have the same column count.
    """
    vectors = np.asarray(vectors, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if vectors.shape != target.shape:
        raise ValueError("frame shapes differ")
    m = vectors.conj().T @ target
    u, _, vh = np.linalg.svd(m)
    return vectors @ (u @ vh)


def degenerate_subspace(
    h,
    energy: float,
    tol: float | None = None,
    align_with: SubspaceBasis | None = None,
) -> SubspaceBasis:
    """All eigenvectors with eigenvalue within ``tol`` of ``energy``.

    Raises if the window is empty.  With ``align_with`` the returned frame is
    gauge-fixed by orthogonal Procrustes against the given basis (same
    dimension required).
    """
    system = eigendecompose(h)
    if tol is None:
        tol = default_tolerance(system.values)
    elif not tol > 0:
        raise ValueError("tol must be positive")
    sel = np.abs(system.values - energy) <= tol
    if not np.any(sel):
        nearest = float(system.values[np.argmin(np.abs(system.values - energy))])
        raise ValueError(
            f"no eigenvalue within {tol:.3e} of {energy} (nearest {nearest})"
        )
    vectors = system.vectors[:, sel]
    if align_with is not None:
        if align_with.vectors.shape[1] != vectors.shape[1]:
            raise ValueError("alignment basis dimension mismatch")
        vectors = align_to(vectors, align_with.vectors)
    return SubspaceBasis(vectors=vectors, energy=float(energy), tolerance=float(tol))


def projector_distance(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """Spectral-norm distance between the two subspace projectors."""
    pa = a.vectors @ a.vectors.conj().T
    pb = b.vectors @ b.vectors.conj().T
    return float(np.linalg.norm(pa - pb, 2))


def _unit(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def analytic_z_subspace(j1: complex, j2: complex) -> SubspaceBasis:
    """Dark pair of the single-triple block, independent of the bias.

    Column 0 is the coupling-weighted one-pair dark state, column 1 the
    empty register.
    """
    w2 = abs(j1) ** 2 + abs(j2) ** 2
    if w2 == 0.0:
        raise ValueError("both couplings vanish; dark state undefined")
    lam1 = (np.conj(j2) * _unit(8, 0b010) - np.conj(j1) * _unit(8, 0b001))
    lam1 /= np.sqrt(w2)
    lam2 = _unit(8, 0b000)
    return SubspaceBasis(vectors=np.stack([lam1, lam2], axis=1))


def analytic_x_subspace(j1: complex, j2: complex, j3: complex) -> SubspaceBasis:
    """Dark pair of the two-logical-box block (not including the vacuum)."""
    w2 = abs(j1) ** 2 + abs(j2) ** 2
    if w2 == 0.0:
        raise ValueError("both logical couplings vanish; dark pair undefined")
    a = _unit(16, 0b0100)
    b = _unit(16, 0b0010)
    d = _unit(16, 0b0001)
    lam1 = (np.conj(j2) * a - np.conj(j1) * b) / np.sqrt(w2)
    lam2 = np.conj(j3) / w2 * (j1 * a + j2 * b) - d
    lam2 /= np.linalg.norm(lam2)
    return SubspaceBasis(vectors=np.stack([lam1, lam2], axis=1))


def analytic_x_corner_limit(j1: complex, j2: complex, j3: complex) -> SubspaceBasis:
    """Dark-pair frame limit along a ray into the double switch-off corner.

    As the first two couplings shrink along a fixed direction, the second
    frame vector loses its lone-pair component and tends to the bright
    combination rotated by the phase of the third coupling.  Only the
    direction of (j1, j2) matters here.
    """
    w2 = abs(j1) ** 2 + abs(j2) ** 2
    if w2 == 0.0:
        raise ValueError("coupling direction undefined")
    if j3 == 0:
        raise ValueError("third coupling must not vanish")
    w = math.sqrt(w2)
    lam1 = np.zeros(16, dtype=complex)
    lam1[0b0100] = np.conj(j2) / w
    lam1[0b0010] = -np.conj(j1) / w
    lam2 = np.zeros(16, dtype=complex)
    gauge = np.conj(j3) / abs(j3)
    lam2[0b0100] = gauge * j1 / w
    lam2[0b0010] = gauge * j2 / w
    return SubspaceBasis(vectors=np.column_stack([lam1, lam2]))


def analytic_cz_subspace(j_a: complex, j_b: complex) -> SubspaceBasis:
    """Computational quadruple of the coupled-triple block.

    Columns in logical order 00, 01, 10, 11.  Only the 10 state depends on
    the joint amplitudes.
    """
    w2 = abs(j_a) ** 2 + abs(j_b) ** 2
    if w2 == 0.0:
        raise ValueError("both joint amplitudes vanish; 10 state undefined")
    lam00 = _unit(64, 0b000101)
    lam01 = _unit(64, 0b010101)
    lam10 = (np.conj(j_b) * _unit(64, 0b100101) - np.conj(j_a) * _unit(64, 0b010110))
    lam10 /= np.sqrt(w2)
    lam11 = _unit(64, 0b110101)
    return SubspaceBasis(vectors=np.stack([lam00, lam01, lam10, lam11], axis=1))
