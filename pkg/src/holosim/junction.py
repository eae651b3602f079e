"""Flux-tunable split junction: effective coupling magnitude and phase.

A junction made of two parallel branches with energy ratio ``gamma`` and a
threading flux ``phi`` acts like a single junction with a reduced, generally
complex coupling.  The magnitude can be switched all the way to zero only for
``gamma == 1``; an asymmetric junction always keeps a residual coupling and a
flux-dependent phase.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

HALF_PI = math.pi / 2

# slack for |phi| <= pi/2 so round-tripped endpoint values stay legal
_PHI_SLACK = 1e-12


def _check_domain(gamma: float, phi: float) -> None:
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if abs(phi) > HALF_PI + _PHI_SLACK:
        raise ValueError(f"flux angle must satisfy |phi| <= pi/2, got {phi}")


def amplitude(gamma: float, phi: float) -> float:
    """Dimensionless coupling magnitude of the split junction.

    Equals ``(1+gamma)/2`` at zero flux and ``|1-gamma|/2`` at ``phi = pi/2``;
    it vanishes there only for a symmetric junction (``gamma == 1``).
    """
    _check_domain(gamma, phi)
    c = math.cos(phi)
    return math.sqrt((1.0 - gamma) ** 2 / 4.0 + gamma * c * c)


def phase_shift(gamma: float, phi: float) -> float:
    """Phase picked up by the effective coupling, in (-pi/2, pi/2] times sign.

    Identically zero for a symmetric junction.  Odd in ``phi`` and continuous
    on the allowed flux interval.
    """
    _check_domain(gamma, phi)
    return math.atan2((1.0 - gamma) * math.sin(phi), (1.0 + gamma) * math.cos(phi))


@dataclass(frozen=True)
class JunctionParams:
    """Static parameters of one tunable junction.

    e_j: bare Josephson energy scale (positive).
    gamma: branch asymmetry ratio (positive; 1 means fully switchable).
    phi: flux angle, |phi| <= pi/2.
    """

    e_j: float
    gamma: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not self.e_j > 0:
            raise ValueError(f"e_j must be positive, got {self.e_j}")
        _check_domain(self.gamma, self.phi)


def effective_coupling(params: JunctionParams) -> complex:
    """Complex coupling 2*e_j*amplitude*exp(-i*phase_shift) of the junction."""
    a = amplitude(params.gamma, params.phi)
    al = phase_shift(params.gamma, params.phi)
    return 2.0 * params.e_j * a * cmath.exp(-1j * al)


def coupling_at(params: JunctionParams, phi: float) -> complex:
    """Effective coupling of the same junction at a different flux angle."""
    _check_domain(params.gamma, phi)
    a = amplitude(params.gamma, phi)
    al = phase_shift(params.gamma, phi)
    return 2.0 * params.e_j * a * cmath.exp(-1j * al)
