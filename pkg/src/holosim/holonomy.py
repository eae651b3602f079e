"""Geometric transport around control loops.

The discrete Wilson product projects a starting frame through the
degenerate-window eigenprojectors of every loop sample and compares against
the analytic frame at the far end.  Loop endpoints where the analytic dark
frame is singular (all defining couplings switched off) are excluded; the
gauge is read at the first and last regular samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.integrate import quad

from . import _kernels
from .junction import HALF_PI, JunctionParams, amplitude, phase_shift
from .network import (
    BlockKind,
    BlockLayout,
    ControlSettings,
    block_generators,
    block_hamiltonian,
    path_coefficients,
)
from .spectrum import (
    SubspaceBasis,
    analytic_cz_subspace,
    analytic_x_subspace,
    analytic_z_subspace,
    default_tolerance,
    eigendecompose,
)

_QUAD_TOL = 1e-12
_QUAD_LIMIT = 200
# fractional weight a transported column may lose before we call it a crossing
_RANK_LOSS_LIMIT = 0.2


class TransportError(RuntimeError):
    """Transport became ill-defined (degeneracy crossing or rank loss)."""


@dataclass(frozen=True)
class LoopSegment:
    """Straight piece of a control loop over the listed junction fluxes.

    ``space`` selects the interpolation variable: "flux" moves linearly in
    the flux angles, "amplitude" linearly in their cosines (useful for rays
    through a switch-off corner).  Sample points cover [start, end) so that
    chained segments never duplicate a point.
    """

    labels: tuple[str, ...]
    start: tuple[float, ...]
    end: tuple[float, ...]
    samples: int
    space: str = "flux"

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("segment needs at least one flux label")
        if len(self.start) != len(self.labels) or len(self.end) != len(self.labels):
            raise ValueError("start/end must match the label count")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.space not in ("flux", "amplitude"):
            raise ValueError(f"unknown interpolation space {self.space!r}")
        for value in (*self.start, *self.end):
            if abs(value) > HALF_PI + 1e-12:
                raise ValueError(f"flux angle out of range: {value}")
        if self.space == "amplitude":
            for a, b in zip(self.start, self.end):
                if a != b and (a < 0 or b < 0):
                    raise ValueError(
                        "amplitude-space interpolation needs nonnegative angles"
                    )

    def interpolate(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)[:, None]
        start = np.asarray(self.start)
        end = np.asarray(self.end)
        if self.space == "flux":
            return start + t * (end - start)
        out = np.empty((t.shape[0], len(self.labels)))
        for col, (a, b) in enumerate(zip(start, end)):
            if a == b:
                out[:, col] = a
            else:
                u = math.cos(a) + t[:, 0] * (math.cos(b) - math.cos(a))
                out[:, col] = np.arccos(np.clip(u, 0.0, 1.0))
        return out


@dataclass(frozen=True)
class ParameterLoop:
    """Piecewise path through flux space at fixed bias (and charging scale)."""

    segments: tuple[LoopSegment, ...]
    h: float = 0.0
    e_c: float | None = None

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("loop needs at least one segment")
        labels = self.segments[0].labels
        for seg in self.segments:
            if seg.labels != labels:
                raise ValueError("all segments must use the same flux labels")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if any(abs(a - b) > 1e-12 for a, b in zip(prev.end, nxt.start)):
                raise ValueError("segments do not chain continuously")

    @property
    def labels(self) -> tuple[str, ...]:
        return self.segments[0].labels

    @property
    def closed(self) -> bool:
        first = self.segments[0].start
        last = self.segments[-1].end
        return all(abs(a - b) <= 1e-12 for a, b in zip(first, last))

    @property
    def sample_count(self) -> int:
        return sum(seg.samples for seg in self.segments) + 1

    def reversed(self) -> "ParameterLoop":
        """Same path traversed the opposite way."""
        segments = tuple(
            LoopSegment(seg.labels, seg.end, seg.start, seg.samples, seg.space)
            for seg in reversed(self.segments)
        )
        return ParameterLoop(segments, h=self.h, e_c=self.e_c)

    def sample_fluxes(self) -> np.ndarray:
        """All segment samples in order plus the final endpoint row."""
        rows = [
            seg.interpolate(np.arange(seg.samples) / seg.samples)
            for seg in self.segments
        ]
        rows.append(self.segments[-1].interpolate(np.array([1.0])))
        return np.concatenate(rows, axis=0)

    def fluxes_at(self, p: np.ndarray) -> np.ndarray:
        """Exact flux values at loop fractions ``p`` in [0, 1].

        Segments share the parameter interval equally regardless of their
        sample counts.
        """
        p = np.asarray(p, dtype=float)
        if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
            raise ValueError("loop fraction out of [0, 1]")
        n_seg = len(self.segments)
        scaled = np.clip(p, 0.0, 1.0) * n_seg
        index = np.minimum(scaled.astype(int), n_seg - 1)
        local = scaled - index
        out = np.empty((len(p), len(self.labels)))
        for k, seg in enumerate(self.segments):
            mask = index == k
            if np.any(mask):
                out[mask] = seg.interpolate(local[mask])
        return out


def standard_loop(
    kind: str,
    corners: tuple[float, ...],
    samples: int,
    h: float = 0.0,
    e_c: float | None = None,
) -> ParameterLoop:
    """Canonical closed loops used by the gate pipelines.

    Z_RECT / CZ_RECT: rectangle over (phi1, phi2) from the switch-off point
    phi1 = pi/2, corners = (phi1_star, phi2_star).  X_PATH: dogleg through
    the double switch-off corner phi1 = phi2 = pi/2, corners = (phi_star,
    phi3); the third flux stays fixed.  ``samples`` is per segment.
    """
    if samples < 16:
        raise ValueError("need at least 16 samples per segment")
    if kind in ("Z_RECT", "CZ_RECT"):
        if len(corners) != 2:
            raise ValueError(f"{kind} takes corners (phi1_star, phi2_star)")
        p1, p2 = corners
        for value in (p1, p2):
            if not 0.0 <= value <= HALF_PI + 1e-12:
                raise ValueError(f"corner angle out of [0, pi/2]: {value}")
        if kind == "Z_RECT":
            labels = ("J1", "J2")
            pad: tuple[float, ...] = ()
        else:
            labels = ("J1", "J2", "J1p", "J2p")
            pad = (0.0, 0.0)
        corners_path = [
            ((HALF_PI, 0.0) + pad, (p1, 0.0) + pad),
            ((p1, 0.0) + pad, (p1, p2) + pad),
            ((p1, p2) + pad, (HALF_PI, p2) + pad),
            ((HALF_PI, p2) + pad, (HALF_PI, 0.0) + pad),
        ]
        segs = tuple(
            LoopSegment(labels, a, b, samples, space="flux") for a, b in corners_path
        )
        return ParameterLoop(segs, h=h, e_c=e_c)
    if kind == "X_PATH":
        if len(corners) != 2:
            raise ValueError("X_PATH takes corners (phi_star, phi3)")
        phi_star, phi3 = corners
        if not 0.0 < phi_star < HALF_PI:
            raise ValueError(f"phi_star must lie strictly inside (0, pi/2): {phi_star}")
        if abs(phi3) > HALF_PI + 1e-12:
            raise ValueError(f"phi3 out of range: {phi3}")
        labels = ("J1", "J2", "J3")
        corner = (HALF_PI, HALF_PI, phi3)
        out_ray = (0.0, phi_star, phi3)
        elbow = (phi_star, phi_star, phi3)
        in_ray = (phi_star, 0.0, phi3)
        segs = (
            LoopSegment(labels, corner, out_ray, samples, space="amplitude"),
            LoopSegment(labels, out_ray, elbow, samples, space="flux"),
            LoopSegment(labels, elbow, in_ray, samples, space="flux"),
            LoopSegment(labels, in_ray, corner, samples, space="amplitude"),
        )
        return ParameterLoop(segs, h=h, e_c=e_c)
    raise ValueError(f"unknown standard loop kind {kind!r}")


def dark_energy(layout: BlockLayout, h: float) -> float:
    """Energy of the computational subspace at bias ``h``."""
    if layout.kind is BlockKind.CZ_BLOCK:
        return -float(h)
    return -0.5 * float(h)


def _couplings_from_coefficients(
    layout: BlockLayout, coeffs: np.ndarray
) -> tuple[np.ndarray, ...]:
    cols = coeffs.shape[1] - 1
    return tuple(
        coeffs[:, 2 * i] + 1j * coeffs[:, 2 * i + 1] for i in range(cols // 2)
    )


def _analytic_basis(layout: BlockLayout, couplings_row: tuple[complex, ...]) -> SubspaceBasis:
    if layout.kind is BlockKind.Z_BLOCK:
        return analytic_z_subspace(couplings_row[0], couplings_row[1])
    if layout.kind is BlockKind.X_BLOCK:
        return analytic_x_subspace(*couplings_row[:3])
    if layout.kind is BlockKind.CZ_BLOCK:
        return analytic_cz_subspace(couplings_row[0], couplings_row[1])
    raise ValueError(f"no analytic dark basis for {layout.kind}")


def _defining_weight(layout: BlockLayout, couplings: tuple[np.ndarray, ...]) -> np.ndarray:
    # weight whose vanishing makes the analytic frame singular
    return np.abs(couplings[0]) ** 2 + np.abs(couplings[1]) ** 2


def _polar_unitary(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(m)
    return u @ vh, s


@dataclass(frozen=True)
class HolonomyResult:
    """Loop holonomy in the gauge of the endpoint analytic frames."""

    unitary: np.ndarray
    subspace_dim: int
    gauge_anchor: SubspaceBasis
    discretization_error_estimate: float
    metadata: dict = field(default_factory=dict)


def loop_holonomy(
    layout: BlockLayout, loop: ParameterLoop, energy_selector: float
) -> HolonomyResult:
    """Discrete Wilson product of the loop over the selected energy window.

    The result is expressed in the gauge of the starting analytic basis; for
    loops entering a switch-off corner the gauge is read at the adjacent
    regular samples.  Raises TransportError when the window rank drops below
    the transported frame or a column loses substantial weight.
    """
    if not loop.closed:
        raise ValueError("holonomy needs a closed loop")
    fluxes = loop.sample_fluxes()
    phi_arrays = {label: fluxes[:, i] for i, label in enumerate(loop.labels)}
    coeffs = path_coefficients(layout, phi_arrays, loop.h, loop.e_c)
    couplings = _couplings_from_coefficients(layout, coeffs)
    weight = _defining_weight(layout, couplings)
    regular = np.flatnonzero(weight >= 1e-12 * float(np.max(weight)))
    if len(regular) == 0:
        raise ValueError("analytic frame undefined everywhere on the loop")
    i0, i1 = int(regular[0]), int(regular[-1])

    def frame(i: int) -> SubspaceBasis:
        return _analytic_basis(layout, tuple(c[i] for c in couplings))

    anchor_start = frame(i0)
    anchor_end = frame(i1)
    g, _ = block_generators(layout)
    probe = np.unique(np.linspace(i0, i1, 7).astype(int))
    spreads = []
    for i in probe:
        w = np.linalg.eigvalsh(np.einsum("k,kij->ij", coeffs[i], g))
        spreads.append(w)
    tol = default_tolerance(np.sort(np.concatenate(spreads)))
    energy = float(energy_selector)

    psi, counts, min_gap = _kernels.wilson_transport(
        g, coeffs[i0 : i1 + 1], energy, tol, anchor_start.vectors
    )
    m = anchor_start.dimension
    if int(counts.min()) < m:
        raise TransportError(
            "degenerate window rank fell below the transported frame "
            f"({int(counts.min())} < {m}); degeneracy crossing on the loop"
        )
    column_weight = np.linalg.norm(psi, axis=0)
    if float(column_weight.min()) < 1.0 - _RANK_LOSS_LIMIT:
        raise TransportError(
            f"transported column lost {1 - float(column_weight.min()):.3f} of its "
            "weight; the computational subspace changed along the loop"
        )
    raw = anchor_end.vectors.conj().T @ psi
    unitary, singulars = _polar_unitary(raw)
    if float(singulars.min()) < 1.0 - _RANK_LOSS_LIMIT:
        raise TransportError("holonomy estimate lost rank; loop sampling too coarse")
    deficit = float(1.0 - singulars.min())
    metadata = {
        "samples": int(fluxes.shape[0]),
        "transport_range": [i0, i1],
        "window_counts": [int(counts.min()), int(counts.max())],
        "window_tolerance": tol,
        "energy": energy,
        "min_outside_gap": float(min_gap),
        "gauge": "analytic frames at the first and last regular samples",
        "sign_convention": (
            "the canonical rectangle traversal accumulates the negative of "
            "berry_phase_z on the dark state"
        ),
    }
    return HolonomyResult(
        unitary=unitary,
        subspace_dim=m,
        gauge_anchor=anchor_start,
        discretization_error_estimate=deficit,
        metadata=metadata,
    )


@dataclass(frozen=True)
class ConnectionEstimate:
    """Central-difference connection sample: anti-Hermitian part plus residual."""

    matrix: np.ndarray
    hermitian_residual: float
    step: float


def wilczek_zee_connection(
    layout: BlockLayout,
    controls: ControlSettings,
    direction: Mapping[str, float],
    energy_selector: float,
    step: float = 1e-5,
) -> ConnectionEstimate:
    """Finite-difference estimate of the non-Abelian connection.

    ``direction`` gives the flux-space tangent components per junction
    label.  The estimate is taken in the natural gauge: the numeric window
    at each shifted point is rotated onto the analytic dark frame there, so
    frame phases carried by the coupling formulas show up as imaginary
    parts.  A large Hermitian residual signals a bad step size or a
    singular frame.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    labels = layout.junction_labels
    if not any(direction.get(l, 0.0) != 0.0 for l in labels):
        raise ValueError("direction has no component along any junction flux")
    unknown = set(direction) - set(labels)
    if unknown:
        raise ValueError(f"direction references unknown junctions {sorted(unknown)}")

    coeffs = path_coefficients(
        layout,
        {l: np.array([controls.phis[l]]) for l in labels},
        controls.h,
        controls.e_c,
    )
    couplings = _couplings_from_coefficients(layout, coeffs)
    center = _analytic_basis(layout, tuple(c[0] for c in couplings))
    energy = float(energy_selector)

    def shifted_frame(sign: float) -> np.ndarray:
        phis = dict(controls.phis)
        for l in labels:
            phis[l] = phis[l] + sign * 0.5 * step * direction.get(l, 0.0)
        shifted = ControlSettings(phis=phis, h=controls.h, e_c=controls.e_c)
        row = path_coefficients(layout, {l: np.array([phis[l]]) for l in labels},
                                controls.h, controls.e_c)
        target = _analytic_basis(
            layout, tuple(c[0] for c in _couplings_from_coefficients(layout, row))
        )
        h_op = block_hamiltonian(layout, shifted)
        system = eigendecompose(h_op)
        tol = default_tolerance(system.values)
        sel = np.abs(system.values - energy) <= tol
        if int(np.count_nonzero(sel)) < center.dimension:
            raise TransportError("degenerate window lost rank at the shifted point")
        basis = system.vectors[:, sel]
        overlap = basis.conj().T @ target.vectors
        rot, singulars = _polar_unitary(overlap)
        if float(singulars.min()) < 0.5:
            raise TransportError("shifted subspace no longer matches the frame")
        return basis @ rot

    plus = shifted_frame(+1.0)
    minus = shifted_frame(-1.0)
    estimate = center.vectors.conj().T @ ((plus - minus) / step)
    anti = 0.5 * (estimate - estimate.conj().T)
    residual = float(np.linalg.norm(0.5 * (estimate + estimate.conj().T), 2))
    return ConnectionEstimate(matrix=anti, hermitian_residual=residual, step=step)


def berry_phase_z(gamma2: float, phi1_star: float, phi2_star: float) -> float:
    """Closed-form dark-state phase for the rectangle loop (literal value).

    Strictly negative for gamma2 < 1 and phi1_star < pi/2; the simulated
    canonical traversal accumulates the opposite sign (see
    canonical_loop_phase_z).  Vanishes identically for gamma2 == 1.
    """
    if not gamma2 > 0:
        raise ValueError("gamma2 must be positive")
    for value in (phi1_star, phi2_star):
        if not 0.0 <= value <= HALF_PI + 1e-12:
            raise ValueError(f"corner angle out of [0, pi/2]: {value}")
    if gamma2 == 1.0:
        return 0.0
    c2 = math.cos(phi1_star) ** 2

    def integrand(p: float) -> float:
        a2 = amplitude(gamma2, p) ** 2
        return 1.0 / (c2 + a2) - 1.0 / a2

    value, error = quad(
        integrand,
        0.0,
        phi2_star,
        epsabs=_QUAD_TOL,
        epsrel=1e-11,
        limit=_QUAD_LIMIT,
    )
    if error > 1e-10:
        raise TransportError(f"quadrature did not converge (error {error:.2e})")
    return (1.0 - gamma2**2) / 4.0 * value


def canonical_loop_phase_z(gamma2: float, phi1_star: float, phi2_star: float) -> float:
    """Dark-state phase accumulated by the canonical rectangle traversal.

    The traversal used by standard_loop winds opposite to the orientation
    implicit in the closed-form quadrature, so the holonomy phase is the
    negative of berry_phase_z.
    """
    return -berry_phase_z(gamma2, phi1_star, phi2_star)


def berry_phase_cz(
    junction1: JunctionParams,
    junction1p: JunctionParams,
    junction2: JunctionParams,
    junction2p: JunctionParams,
    e_c: float,
    phi1_star: float,
    phi2_star: float,
) -> float:
    """Closed-form phase of the doubly occupied branch on the coupled rectangle.

    Same quadrature as berry_phase_z with the pair-mediated couplings in
    place of the single-junction ones; the primed fluxes stay at zero, so
    only the second unprimed junction contributes a frame-phase derivative.
    Literal orientation; the canonical traversal gives the opposite sign.
    """
    if not e_c > 0:
        raise ValueError("e_c must be positive")
    for value in (phi1_star, phi2_star):
        if not 0.0 <= value <= HALF_PI + 1e-12:
            raise ValueError(f"corner angle out of [0, pi/2]: {value}")
    gamma2 = junction2.gamma
    if gamma2 == 1.0:
        return 0.0
    scale1 = junction1.e_j * junction1p.e_j * amplitude(junction1p.gamma, 0.0)
    scale2 = junction2.e_j * junction2p.e_j * amplitude(junction2p.gamma, 0.0)
    a2 = (scale1 * amplitude(junction1.gamma, phi1_star)) ** 2

    def integrand(p: float) -> float:
        amp2 = amplitude(gamma2, p) ** 2
        b2 = scale2**2 * amp2
        alpha_rate = (1.0 - gamma2**2) / (4.0 * amp2)
        return a2 / (a2 + b2) * alpha_rate

    value, error = quad(
        integrand,
        0.0,
        phi2_star,
        epsabs=_QUAD_TOL,
        epsrel=1e-11,
        limit=_QUAD_LIMIT,
    )
    if error > 1e-10:
        raise TransportError(f"quadrature did not converge (error {error:.2e})")
    return -value


def canonical_loop_phase_cz(
    junction1: JunctionParams,
    junction1p: JunctionParams,
    junction2: JunctionParams,
    junction2p: JunctionParams,
    e_c: float,
    phi1_star: float,
    phi2_star: float,
) -> float:
    """Phase on the doubly occupied branch for the canonical traversal."""
    return -berry_phase_cz(
        junction1, junction1p, junction2, junction2p, e_c, phi1_star, phi2_star
    )


def rotation_angle_x(phi_star: float, junction3: JunctionParams) -> tuple[float, float]:
    """Rotation angle and frame phase of the dogleg two-box gate.

    Returns (phi, phi_prime) with the extracted logical gate equal to
    U_Z(phi_prime)^dag U_X(phi) U_Z(phi_prime).  Needs an asymmetric third
    junction; a fully switchable one leaves the frame phase undefined.
    """
    if abs(junction3.gamma - 1.0) <= 1e-12:
        raise ValueError("third junction must have gamma != 1")
    if not 0.0 <= phi_star <= HALF_PI + 1e-12:
        raise ValueError(f"phi_star out of [0, pi/2]: {phi_star}")
    a3sq = amplitude(junction3.gamma, junction3.phi) ** 2
    phi_prime = 0.5 * phase_shift(junction3.gamma, junction3.phi) - 0.25 * math.pi
    cs = math.cos(phi_star)
    if cs < 1e-15 or phi_star == 0.0:
        return 0.0, phi_prime

    def integrand(x: float) -> float:
        r2 = x * x + cs * cs
        return cs / (r2 * math.sqrt(1.0 + r2 / a3sq))

    value, error = quad(
        integrand, cs, 1.0, epsabs=_QUAD_TOL, epsrel=1e-11, limit=_QUAD_LIMIT
    )
    if error > 1e-10:
        raise TransportError(f"quadrature did not converge (error {error:.2e})")
    return 2.0 * value, phi_prime
