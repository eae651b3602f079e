"""Error budget for driven charge-qubit gates.

All quantities share one energy unit with hbar = 1 and k_B = 1; times are
inverse energies in the same unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def lz_probability(gap: float, rate: float) -> float:
    """Leakage probability of a single passage at adiabaticity rate ``rate``."""
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    if not rate > 0:
        raise ValueError("rate must be positive")
    return min(1.0, math.exp(-math.pi * gap / rate))


def quasiparticle_rate(
    pair_gap: float, charging_energy: float, temperature: float, prefactor: float = 1.0
) -> float:
    """Thermal quasiparticle tunneling rate onto a biased box.

    The process costs one broken pair plus the charging energy, so the rate
    is suppressed by exp(-(2 pair_gap + charging_energy) / temperature).
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    if pair_gap < 0 or charging_energy < 0:
        raise ValueError("energies must be nonnegative")
    return prefactor * math.exp(-(2.0 * pair_gap + charging_energy) / temperature)


def phase_error(level_splitting: float, operation_time: float) -> float:
    """Relative phase accumulated by a residual splitting over one operation."""
    if operation_time < 0:
        raise ValueError("operation_time must be nonnegative")
    return level_splitting * operation_time


def fidelity(leakage_probability: float, phase_wobble: float) -> float:
    """Gate fidelity from leakage and an uncontrolled relative phase."""
    if not 0.0 <= leakage_probability <= 1.0:
        raise ValueError("leakage probability outside [0, 1]")
    dephasing = 1.0 - math.sin(0.5 * phase_wobble) ** 4
    return math.sqrt((1.0 - leakage_probability) * dephasing)


@dataclass(frozen=True)
class OperationWindow:
    """Admissible operation times: slow enough to be adiabatic, fast enough
    to beat the residual splitting."""

    shortest: float
    longest: float

    @property
    def open(self) -> bool:
        return self.shortest < self.longest


def adiabatic_window(gap: float, level_splitting: float) -> OperationWindow:
    if not gap > 0:
        raise ValueError("gap must be positive")
    if level_splitting < 0:
        raise ValueError("level splitting must be nonnegative")
    longest = math.inf if level_splitting == 0 else 1.0 / level_splitting
    return OperationWindow(shortest=1.0 / gap, longest=longest)


@dataclass(frozen=True)
class ErrorBudget:
    """Operating point of a holonomic gate in shared energy units."""

    gap: float
    rate: float
    operation_time: float
    level_splitting: float
    pair_gap: float
    charging_energy: float
    temperature: float
    qp_prefactor: float = 1.0

    def __post_init__(self) -> None:
        if not self.gap > 0:
            raise ValueError("gap must be positive")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if self.operation_time < 0:
            raise ValueError("operation_time must be nonnegative")


@dataclass(frozen=True)
class BudgetReport:
    leakage: float
    phase_wobble: float
    fidelity: float
    qp_rate: float
    qp_loss: float
    window: OperationWindow
    fast_drive: bool


def evaluate_budget(budget: ErrorBudget) -> BudgetReport:
    """Combine leakage, dephasing and quasiparticle channels into one report.

    Fidelity multiplies the leakage and dephasing factors; quasiparticle
    poisoning is reported separately since its exponential suppression makes
    it negligible at realistic temperatures.
    """
    leakage = lz_probability(budget.gap, budget.rate)
    wobble = phase_error(budget.level_splitting, budget.operation_time)
    qp = quasiparticle_rate(
        budget.pair_gap,
        budget.charging_energy,
        budget.temperature,
        budget.qp_prefactor,
    )
    return BudgetReport(
        leakage=leakage,
        phase_wobble=wobble,
        fidelity=fidelity(leakage, wobble),
        qp_rate=qp,
        qp_loss=qp * budget.operation_time,
        window=adiabatic_window(budget.gap, budget.level_splitting),
        fast_drive=budget.operation_time * budget.gap < 1.0,
    )


def example_budget() -> ErrorBudget:
    """Conservative operating point for a charge-qubit register.

    Energies in inverse picoseconds: a 1/(80 ps) gap driven at a third of
    the gap for three gap times, a residual splitting of a tenth of the gap,
    a superconducting pair-breaking scale five times the gap, and a
    temperature of a tenth of the gap.
    """
    gap = 1.0 / 80.0
    return ErrorBudget(
        gap=gap,
        rate=gap / 3.0,
        operation_time=3.0 / gap,
        level_splitting=gap / 10.0,
        pair_gap=5.0 * gap,
        charging_energy=4.0 * gap,
        temperature=gap / 10.0,
    )
