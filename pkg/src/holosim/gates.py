"""Logical gates: extraction from transported frames and universality tools."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .junction import JunctionParams, phase_shift

_UNITARY_TOL = 1e-8
_LABELS = ("U_Z", "U_X", "U_CZ", "COMPOSED")


@dataclass(frozen=True)
class LogicalGate:
    """A unitary on the logical space with its construction label.

    ``angles`` records the rotation parameters the gate was built from;
    composed or extracted gates leave it empty.
    """

    matrix: np.ndarray
    label: str = "COMPOSED"
    angles: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("gate must be a square matrix")
        if np.abs(m.conj().T @ m - np.eye(m.shape[0])).max() > 1e-12:
            raise ValueError("gate matrix is not unitary")
        if self.label not in _LABELS:
            raise ValueError(f"unknown gate label {self.label!r}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def determinant(self) -> complex:
        return complex(np.linalg.det(self.matrix))


def _matrix_of(gate) -> np.ndarray:
    return np.asarray(getattr(gate, "matrix", gate), dtype=complex)


def ideal_gate(label: str, angle: float) -> LogicalGate:
    """Reference gates in the logical basis.

    "z": diag(1, e^{i angle}); "x": cosine/sine mixing with i off-diagonals;
    "cz": phase on the |10> component only.
    """
    key = label.lower().removeprefix("u_")
    if key == "z":
        matrix = np.array([[1.0, 0.0], [0.0, cmath.exp(1j * angle)]])
        return LogicalGate(matrix, "U_Z", (angle,))
    if key == "x":
        c, s = math.cos(angle), math.sin(angle)
        matrix = np.array([[c, 1j * s], [1j * s, c]])
        return LogicalGate(matrix, "U_X", (angle,))
    if key == "cz":
        matrix = np.eye(4, dtype=complex)
        matrix[2, 2] = cmath.exp(1j * angle)
        return LogicalGate(matrix, "U_CZ", (angle,))
    raise ValueError(f"unknown gate label {label!r}")


@dataclass(frozen=True)
class Encoding:
    """Unitary change of basis from transported frame columns to logical states."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.matrix, dtype=complex)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("encoding must be a square matrix")
        if np.abs(q.conj().T @ q - np.eye(q.shape[0])).max() > 1e-6:
            raise ValueError("encoding matrix is not unitary")
        q = q.copy()
        q.flags.writeable = False
        object.__setattr__(self, "matrix", q)

    @classmethod
    def single_box(cls) -> "Encoding":
        """Z block: logical (|0>, |1>) = (empty box, transferred pair)."""
        return cls(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex))

    @classmethod
    def two_box(cls, junction3: JunctionParams) -> "Encoding":
        """X block: dark-pair frame with the fixed gauge of the third junction.

        The second frame column carries a constant phase set by the phase
        shift of the always-on junction; absorbing it makes the extracted
        gate land exactly on the conjugated-rotation form.
        """
        beta = phase_shift(junction3.gamma, junction3.phi)
        gauge = cmath.exp(1j * (0.25 * math.pi - 0.5 * beta))
        return cls(np.diag([1.0, gauge]).astype(complex))

    @classmethod
    def coupled_pair(cls) -> "Encoding":
        """CZ block: frame columns already match (|00>, |01>, |10>, |11>)."""
        return cls(np.eye(4, dtype=complex))


def strip_global_phase(unitary: np.ndarray) -> np.ndarray:
    """Normalize the overall phase so the dominant diagonal entry is real positive."""
    u = _matrix_of(unitary)
    diag = np.abs(np.diag(u))
    if float(diag.max()) > 1e-6:
        pivot = u[int(diag.argmax()), int(diag.argmax())]
    else:
        flat = int(np.abs(u).argmax())
        pivot = u.ravel()[flat]
    return u * (abs(pivot) / pivot)


def extract_logical(result, encoding: Encoding, label: str = "COMPOSED") -> LogicalGate:
    """Logical gate from a holonomy or evolution result, global phase stripped."""
    u = np.asarray(result.unitary, dtype=complex)
    q = encoding.matrix
    if u.shape != q.shape:
        raise ValueError(
            f"encoding dimension {q.shape[0]} does not match the gate {u.shape[0]}"
        )
    return LogicalGate(strip_global_phase(q.conj().T @ u @ q), label)


def compose(gates: Sequence) -> LogicalGate:
    """Product of gates with the first listed acting first."""
    if not len(gates):
        raise ValueError("nothing to compose")
    matrices = [_matrix_of(g) for g in gates]
    result = np.eye(matrices[0].shape[0], dtype=complex)
    for m in matrices:
        result = m @ result
    return LogicalGate(result, "COMPOSED")


def phase_distance(u, v) -> float:
    """Frobenius distance between unitaries minimized over a global phase."""
    a = _matrix_of(u)
    b = _matrix_of(v)
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    m = a.shape[0]
    return math.sqrt(max(0.0, 2.0 * m - 2.0 * abs(np.trace(a.conj().T @ b))))


def euler_decompose(target) -> tuple[float, float, float, float]:
    """Angles (a, b, c, delta) with target = e^{i delta} Z(a) X(b) Z(c).

    The Z(c) factor acts first.  b lies in [0, pi/2]; degenerate cases put
    the free phase into a and set c to zero.
    """
    u = _matrix_of(target)
    if u.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if np.abs(u.conj().T @ u - np.eye(2)).max() > _UNITARY_TOL:
        raise ValueError("matrix is not unitary")
    b = math.atan2(abs(u[0, 1]), abs(u[0, 0]))
    if abs(u[0, 0]) < 1e-12:
        # mixing angle at pi/2: delta and c only appear summed, put it in delta
        c = 0.0
        delta = cmath.phase(u[0, 1]) - 0.5 * math.pi
        a = cmath.phase(u[1, 0]) - delta - 0.5 * math.pi
    elif abs(u[0, 1]) < 1e-12:
        delta = cmath.phase(u[0, 0])
        a = cmath.phase(u[1, 1]) - delta
        c = 0.0
    else:
        delta = cmath.phase(u[0, 0])
        a = cmath.phase(u[1, 0]) - delta - 0.5 * math.pi
        c = cmath.phase(u[0, 1]) - delta - 0.5 * math.pi
    rebuilt = cmath.exp(1j * delta) * compose(
        [ideal_gate("z", c), ideal_gate("x", b), ideal_gate("z", a)]
    ).matrix
    if np.abs(rebuilt - u).max() > 1e-10:
        raise RuntimeError("decomposition failed to reproduce the input")
    return a, b, c, delta
