"""Charge-box network blocks: basis bookkeeping and Hamiltonian assembly.

A block is a small register of charge boxes, each coupled to a shared lead
box through a tunable junction.  Basis states are bit strings over the
declared box order (first box is the most significant bit).  Every block
Hamiltonian decomposes as ``H = sum_k c_k G_k`` with constant Hermitian
generators ``G_k`` and real control coefficients ``c_k``; the generator
stacks are what the numerical kernels consume.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .junction import HALF_PI, JunctionParams

HERMITICITY_TOL = 1e-13
_GAMMA_SWITCH_TOL = 1e-12


class BlockKind(enum.Enum):
    PROTOTYPE = "prototype"
    Z_BLOCK = "z"
    X_BLOCK = "x"
    CZ_BLOCK = "cz"


@dataclass(frozen=True)
class ChargeState:
    """One basis state: pair occupations over the declared box order."""

    occupations: tuple[int, ...]
    boxes: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.occupations) != len(self.boxes):
            raise ValueError("occupation/box length mismatch")
        if any(n not in (0, 1) for n in self.occupations):
            raise ValueError("occupations must be 0 or 1")

    @property
    def index(self) -> int:
        i = 0
        for n in self.occupations:
            i = (i << 1) | n
        return i

    @classmethod
    def from_index(cls, index: int, boxes: Sequence[str]) -> "ChargeState":
        nb = len(boxes)
        if not 0 <= index < (1 << nb):
            raise ValueError(f"index {index} out of range for {nb} boxes")
        occ = tuple((index >> (nb - 1 - p)) & 1 for p in range(nb))
        return cls(occ, tuple(boxes))


@dataclass(frozen=True)
class JunctionLink:
    """A junction moving one pair from ``source`` box to ``target`` box."""

    label: str
    source: str
    target: str
    params: JunctionParams


@dataclass(frozen=True)
class BlockLayout:
    kind: BlockKind
    boxes: tuple[str, ...]
    junctions: tuple[JunctionLink, ...]

    def __post_init__(self) -> None:
        if len(set(self.boxes)) != len(self.boxes):
            raise ValueError("duplicate box labels")
        labels = [j.label for j in self.junctions]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate junction labels")
        for link in self.junctions:
            if link.source not in self.boxes or link.target not in self.boxes:
                raise ValueError(f"junction {link.label} references unknown box")
        required = _SWITCH_OFF_REQUIRED.get(self.kind, ())
        have = {j.label: j for j in self.junctions}
        expected = _EXPECTED_LABELS.get(self.kind)
        if expected is not None and tuple(sorted(have)) != tuple(sorted(expected)):
            raise ValueError(
                f"{self.kind.value} block needs junctions {sorted(expected)}, "
                f"got {sorted(have)}"
            )
        for label in required:
            gamma = have[label].params.gamma
            if abs(gamma - 1.0) > _GAMMA_SWITCH_TOL:
                raise ValueError(
                    f"junction {label} must be fully switchable (gamma == 1), "
                    f"got gamma = {gamma}"
                )

    @property
    def dimension(self) -> int:
        return 1 << len(self.boxes)

    def junction(self, label: str) -> JunctionLink:
        for link in self.junctions:
            if link.label == label:
                return link
        raise KeyError(label)

    @property
    def junction_labels(self) -> tuple[str, ...]:
        return tuple(j.label for j in self.junctions)


_EXPECTED_LABELS = {
    BlockKind.Z_BLOCK: ("J1", "J2"),
    BlockKind.X_BLOCK: ("J1", "J2", "J3"),
    BlockKind.CZ_BLOCK: ("J1", "J2", "J1p", "J2p"),
}

_SWITCH_OFF_REQUIRED = {
    BlockKind.Z_BLOCK: ("J1",),
    BlockKind.X_BLOCK: ("J1", "J2"),
    BlockKind.CZ_BLOCK: ("J1", "J1p"),
}


def z_layout(j1: JunctionParams, j2: JunctionParams) -> BlockLayout:
    return BlockLayout(
        BlockKind.Z_BLOCK,
        ("0", "1", "2"),
        (
            JunctionLink("J1", "0", "1", j1),
            JunctionLink("J2", "0", "2", j2),
        ),
    )


def x_layout(
    j1: JunctionParams, j2: JunctionParams, j3: JunctionParams
) -> BlockLayout:
    return BlockLayout(
        BlockKind.X_BLOCK,
        ("0", "1", "2", "3"),
        (
            JunctionLink("J1", "0", "1", j1),
            JunctionLink("J2", "0", "2", j2),
            JunctionLink("J3", "0", "3", j3),
        ),
    )


def cz_layout(
    j1: JunctionParams,
    j2: JunctionParams,
    j1p: JunctionParams,
    j2p: JunctionParams,
) -> BlockLayout:
    """Two coupled triples; primed junctions share the primed lead box."""
    return BlockLayout(
        BlockKind.CZ_BLOCK,
        ("1", "1p", "0", "0p", "2", "2p"),
        (
            JunctionLink("J1", "0", "1", j1),
            JunctionLink("J2", "0", "2", j2),
            JunctionLink("J1p", "0p", "1p", j1p),
            JunctionLink("J2p", "0p", "2p", j2p),
        ),
    )


@dataclass(frozen=True)
class ControlSettings:
    """Instantaneous control values: junction fluxes plus the gate bias.

    ``h`` is the bias splitting of the lead box.  When the raw gate charge
    ``n_g`` is supplied alongside the charging scale ``e_c`` they must agree
    with ``h = e_c * (2 n_g - 1)``.
    """

    phis: Mapping[str, float]
    h: float
    n_g: float | None = None
    e_c: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "phis", dict(self.phis))
        if not math.isfinite(self.h):
            raise ValueError("h must be finite")
        for label, phi in self.phis.items():
            if abs(phi) > HALF_PI + 1e-12:
                raise ValueError(f"flux {label} out of range: {phi}")
        if self.e_c is not None and not self.e_c > 0:
            raise ValueError("e_c must be positive")
        if self.n_g is not None:
            if self.e_c is None:
                raise ValueError("n_g given without e_c")
            implied = self.e_c * (2.0 * self.n_g - 1.0)
            if abs(self.h - implied) > 1e-12 * max(1.0, abs(self.h)):
                raise ValueError(
                    f"h = {self.h} inconsistent with e_c*(2*n_g - 1) = {implied}"
                )


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix over a block's charge basis."""

    entries: np.ndarray
    boxes: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        scale = max(1.0, float(np.max(np.abs(entries))) if entries.size else 1.0)
        deviation = float(np.max(np.abs(entries - entries.conj().T)))
        if deviation > HERMITICITY_TOL * scale:
            raise ValueError(f"matrix is not Hermitian (deviation {deviation:.3e})")
        entries = 0.5 * (entries + entries.conj().T)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def occupation_diagonal(layout: BlockLayout, box: str) -> np.ndarray:
    """Occupation of one box over all basis indices (0/1 vector)."""
    nb = len(layout.boxes)
    pos = layout.boxes.index(box)
    return (np.arange(1 << nb) >> (nb - 1 - pos)) & 1


def pair_number_diagonal(layout: BlockLayout, boxes: Sequence[str] | None = None) -> np.ndarray:
    """Total pair number over the given boxes (all boxes by default)."""
    use = layout.boxes if boxes is None else tuple(boxes)
    total = np.zeros(layout.dimension, dtype=int)
    for box in use:
        total += occupation_diagonal(layout, box)
    return total


def conserved_charges(layout: BlockLayout) -> tuple[np.ndarray, ...]:
    """Diagonal pair counts commuting with every block Hamiltonian.

    The coupled-pair block moves one pair on each chain at a time, so the
    two chain counts are conserved separately; the single-line blocks
    conserve the total count.
    """
    if layout.kind is BlockKind.CZ_BLOCK:
        return (
            pair_number_diagonal(layout, ("1", "0", "2")),
            pair_number_diagonal(layout, ("1p", "0p", "2p")),
        )
    return (pair_number_diagonal(layout),)


def _transfer(n_boxes: int, source: int, target: int) -> np.ndarray:
    """Matrix moving one pair from box position ``source`` to ``target``."""
    dim = 1 << n_boxes
    sbit = 1 << (n_boxes - 1 - source)
    tbit = 1 << (n_boxes - 1 - target)
    t = np.zeros((dim, dim))
    for i in range(dim):
        if (i & sbit) and not (i & tbit):
            t[i - sbit + tbit, i] = 1.0
    return t


def _coupling_channels(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # H gets -(1/2)(J T + J* T^dag); split J into real and imaginary parts
    td = t.conj().T
    g_re = -0.5 * (t + td)
    g_im = -0.5j * (t - td)
    return g_re.astype(complex), g_im.astype(complex)


@lru_cache(maxsize=None)
def block_generators(layout: BlockLayout) -> tuple[np.ndarray, tuple[str, ...]]:
    """Generator stack ``G`` and channel labels with ``H = sum_k c_k G_k``.

    Coupling channels come in (real, imaginary) pairs per junction for the
    single-triple blocks and per joint amplitude for the coupled-triple
    block; the last channel is always the bias.
    """
    nb = len(layout.boxes)
    pos = {b: p for p, b in enumerate(layout.boxes)}
    stack: list[np.ndarray] = []
    labels: list[str] = []
    if layout.kind in (BlockKind.Z_BLOCK, BlockKind.X_BLOCK):
        for link in layout.junctions:
            t = _transfer(nb, pos[link.source], pos[link.target])
            g_re, g_im = _coupling_channels(t)
            stack.extend((g_re, g_im))
            labels.extend((f"{link.label}.re", f"{link.label}.im"))
        sz0 = 1.0 - 2.0 * occupation_diagonal(layout, "0")
        stack.append(np.diag(-0.5 * sz0).astype(complex))
        labels.append("bias")
    elif layout.kind is BlockKind.CZ_BLOCK:
        t_a = _transfer(nb, pos["0"], pos["1"]) @ _transfer(nb, pos["1p"], pos["0p"])
        t_b = _transfer(nb, pos["0"], pos["2"]) @ _transfer(nb, pos["2p"], pos["0p"])
        for name, t in (("Ja", t_a), ("Jb", t_b)):
            g_re, g_im = _coupling_channels(t)
            stack.extend((g_re, g_im))
            labels.extend((f"{name}.re", f"{name}.im"))
        n0 = occupation_diagonal(layout, "0")
        n0p = occupation_diagonal(layout, "0p")
        stack.append(np.diag((n0 - n0p).astype(float)).astype(complex))
        labels.append("bias")
    else:
        raise ValueError(f"no generator stack for {layout.kind}")
    g = np.stack(stack)
    g.flags.writeable = False
    return g, tuple(labels)


def _coupling_values(params: JunctionParams, phis: np.ndarray) -> np.ndarray:
    """Vectorized effective coupling of one junction over a flux array."""
    phis = np.asarray(phis, dtype=float)
    if np.any(np.abs(phis) > HALF_PI + 1e-12):
        raise ValueError("flux angle out of range")
    g = params.gamma
    c = np.cos(phis)
    a = np.sqrt((1.0 - g) ** 2 / 4.0 + g * c * c)
    alpha = np.arctan2((1.0 - g) * np.sin(phis), (1.0 + g) * c)
    return 2.0 * params.e_j * a * np.exp(-1j * alpha)


def joint_tunneling_amplitudes(
    j1: complex, j1p: complex, j2: complex, j2p: complex, e_c: float
) -> tuple[complex, complex]:
    """Second-order joint amplitudes of the coupled triples.

    Each pairs an unprimed coupling with the conjugate of its primed partner,
    scaled by the charging energy of the shared intermediate state.
    """
    if not e_c > 0:
        raise ValueError("e_c must be positive")
    j_a = 4.0 * j1 * np.conj(j1p) / e_c
    j_b = 4.0 * j2 * np.conj(j2p) / e_c
    return complex(j_a), complex(j_b)


def path_coefficients(
    layout: BlockLayout,
    phi_arrays: Mapping[str, np.ndarray],
    h: float,
    e_c: float | None = None,
) -> np.ndarray:
    """Real coefficient rows for the generator stack along a flux path."""
    missing = [l for l in layout.junction_labels if l not in phi_arrays]
    if missing:
        raise ValueError(f"missing fluxes for junctions {missing}")
    arrays = {l: np.atleast_1d(np.asarray(phi_arrays[l], dtype=float))
              for l in layout.junction_labels}
    n = len(next(iter(arrays.values())))
    if any(a.shape != (n,) for a in arrays.values()):
        raise ValueError("flux arrays must share one length")
    couplings = {l: _coupling_values(layout.junction(l).params, arrays[l])
                 for l in layout.junction_labels}
    if layout.kind in (BlockKind.Z_BLOCK, BlockKind.X_BLOCK):
        cols: list[np.ndarray] = []
        for label in layout.junction_labels:
            j = couplings[label]
            cols.extend((j.real, j.imag))
    elif layout.kind is BlockKind.CZ_BLOCK:
        if e_c is None:
            raise ValueError("coupled-triple block requires e_c")
        if not e_c > 0:
            raise ValueError("e_c must be positive")
        j_a = 4.0 * couplings["J1"] * np.conj(couplings["J1p"]) / e_c
        j_b = 4.0 * couplings["J2"] * np.conj(couplings["J2p"]) / e_c
        cols = [j_a.real, j_a.imag, j_b.real, j_b.imag]
    else:
        raise ValueError(f"no coefficients for {layout.kind}")
    cols.append(np.full(n, float(h)))
    return np.column_stack(cols)


def control_coefficients(layout: BlockLayout, controls: ControlSettings) -> np.ndarray:
    """Coefficient vector for a single control setting."""
    phi_arrays = {l: np.array([controls.phis[l]]) if l in controls.phis else None
                  for l in layout.junction_labels}
    missing = [l for l, v in phi_arrays.items() if v is None]
    if missing:
        raise ValueError(f"controls missing fluxes for junctions {missing}")
    return path_coefficients(layout, phi_arrays, controls.h, controls.e_c)[0]


def block_hamiltonian(layout: BlockLayout, controls: ControlSettings) -> HermitianOperator:
    """Dense block Hamiltonian at one control setting."""
    g, _ = block_generators(layout)
    c = control_coefficients(layout, controls)
    entries = np.einsum("k,kij->ij", c, g)
    return HermitianOperator(entries=entries, boxes=layout.boxes)


def _require_kind(layout: BlockLayout, kind: BlockKind) -> None:
    if layout.kind is not kind:
        raise ValueError(f"expected a {kind.value} block layout, got {layout.kind.value}")


def z_block_hamiltonian(layout: BlockLayout, controls: ControlSettings) -> HermitianOperator:
    """Single-triple Hamiltonian with two tunable couplings and lead bias."""
    _require_kind(layout, BlockKind.Z_BLOCK)
    return block_hamiltonian(layout, controls)


def x_block_hamiltonian(layout: BlockLayout, controls: ControlSettings) -> HermitianOperator:
    """Single-quad Hamiltonian with three tunable couplings and lead bias."""
    _require_kind(layout, BlockKind.X_BLOCK)
    return block_hamiltonian(layout, controls)


def cz_block_hamiltonian(layout: BlockLayout, controls: ControlSettings) -> HermitianOperator:
    """Coupled-triple Hamiltonian in the joint-tunneling approximation."""
    _require_kind(layout, BlockKind.CZ_BLOCK)
    return block_hamiltonian(layout, controls)


def prototype_hamiltonian(epsilon: float, omegas: Sequence[complex]) -> HermitianOperator:
    """Star Hamiltonian: one bright level coupled to N otherwise-flat levels.

    Row 0 is the bright level at energy ``epsilon``; row i couples to it with
    amplitude ``-omegas[i-1]/2``.
    """
    omegas = [complex(o) for o in omegas]
    if not omegas:
        raise ValueError("need at least one coupling")
    n = len(omegas)
    h = np.zeros((n + 1, n + 1), dtype=complex)
    h[0, 0] = epsilon
    for i, om in enumerate(omegas, start=1):
        h[i, 0] = -0.5 * om
        h[0, i] = -0.5 * np.conj(om)
    return HermitianOperator(entries=h)
