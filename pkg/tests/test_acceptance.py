"""Acceptance battery: one test per stated criterion, one line printed each.

Rates are quoted as fractions of the relevant spectral gap; angles are in
radians.  The loop corners are phi* = pi/3 throughout.
"""

import cmath
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from holosim import (
    ControlSettings,
    Encoding,
    JunctionParams,
    adaptive_profile,
    adiabatic_gate,
    block_hamiltonian,
    calibrate_schedule,
    canonical_loop_phase_cz,
    canonical_loop_phase_z,
    compose,
    cz_layout,
    dark_energy,
    euler_decompose,
    extract_logical,
    fidelity,
    geometric_phase,
    ideal_gate,
    landau_zener_scan,
    loop_holonomy,
    path_coefficients,
    phase_distance,
    rotation_angle_x,
    standard_loop,
    strip_global_phase,
    survey_loop,
    x_layout,
    z_layout,
)
from holosim.analysis import evaluate_budget, example_budget

THIRD = math.pi / 3
J_FULL = JunctionParams(1.0, 1.0, 0.0)
J3_X = JunctionParams(1.0, 0.5, math.pi / 4)


def z_block(gamma2, samples=2500):
    layout = z_layout(J_FULL, JunctionParams(1.0, gamma2, 0.0))
    return layout, standard_loop("Z_RECT", (THIRD, THIRD), samples, h=0.4)


def wilson_relative_phase(layout, loop, h=0.4):
    result = loop_holonomy(layout, loop, dark_energy(layout, h))
    assert np.abs(
        result.unitary.conj().T @ result.unitary - np.eye(result.subspace_dim)
    ).max() < 1e-10
    angles = np.angle(np.diag(result.unitary))
    return result, angles


def couplings_of(layout, phis, h, e_c=None):
    arrays = {label: np.array([v]) for label, v in phis.items()}
    row = path_coefficients(layout, arrays, h, e_c)[0]
    n = (len(row) - 1) // 2
    return tuple(row[2 * i] + 1j * row[2 * i + 1] for i in range(n))


def random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def report(line):
    print(line, flush=True)


def test_criterion_1_cross_method_z_phases():
    started = time.monotonic()
    worst = 0.0
    for gamma2 in (0.4, 0.6, 0.8):
        layout, loop = z_block(gamma2)
        quadrature = canonical_loop_phase_z(gamma2, THIRD, THIRD)
        _, angles = wilson_relative_phase(layout, loop)
        wilson = angles[0] - angles[1]
        _, drive_loop = z_block(gamma2, samples=64)
        profile = adaptive_profile(layout, drive_loop)
        gap = survey_loop(layout, drive_loop, profile=profile).gap
        schedule = calibrate_schedule(
            layout, drive_loop, eta=gap / 300, profile=profile
        )
        gate = adiabatic_gate(layout, drive_loop, schedule)
        diag = np.angle(np.diag(gate.unitary))
        dynamic = diag[0] - diag[1]
        for a, b in ((quadrature, wilson), (quadrature, dynamic), (wilson, dynamic)):
            assert abs(a - b) < 1e-3
            worst = max(worst, abs(a - b))
    elapsed = time.monotonic() - started
    assert elapsed < 120.0
    report(
        f"criterion 1 PASS: quadrature/wilson/dynamics pairwise within "
        f"{worst:.2e} rad (< 1e-3), {elapsed:.0f}s"
    )


def test_criterion_2_flat_coupling_identity():
    layout, loop = z_block(1.0)
    quadrature = canonical_loop_phase_z(1.0, THIRD, THIRD)
    assert quadrature == 0.0
    result, _ = wilson_relative_phase(layout, loop)
    wilson_dev = np.abs(strip_global_phase(result.unitary) - np.eye(2)).max()
    assert wilson_dev < 1e-6
    _, drive_loop = z_block(1.0, samples=64)
    gap = survey_loop(layout, drive_loop).gap
    schedule = calibrate_schedule(layout, drive_loop, eta=gap / 3)
    echoed = geometric_phase(layout, drive_loop, schedule)
    dynamic_dev = np.abs(
        strip_global_phase(np.diag([cmath.exp(1j * echoed), 1.0])) - np.eye(2)
    ).max()
    assert abs(echoed) < 1e-6
    report(
        f"criterion 2 PASS: gamma2=1 identity; quadrature {quadrature:.1e}, "
        f"wilson dev {wilson_dev:.1e}, echoed dynamics dev {dynamic_dev:.1e} (< 1e-6)"
    )


def test_criterion_3_degeneracy_preservation():
    rng = np.random.default_rng(11)
    worst_energy = 0.0
    worst_residual = 0.0
    from holosim.spectrum import (
        analytic_cz_subspace,
        analytic_x_subspace,
        analytic_z_subspace,
    )

    for _ in range(50):
        e = rng.uniform(0.5, 1.5, size=5)
        g = rng.uniform(0.1, 1.0, size=2)
        f = rng.uniform(-1.4, 1.4, size=4)
        h = rng.uniform(0.2, 1.0)
        e_c = rng.uniform(2.0, 8.0)

        z_lay = z_layout(JunctionParams(e[0], 1.0, 0.0), JunctionParams(e[1], g[0], 0.0))
        z_phis = {"J1": f[0], "J2": f[1]}
        x_lay = x_layout(
            JunctionParams(e[0], 1.0, 0.0),
            JunctionParams(e[1], 1.0, 0.0),
            JunctionParams(e[2], g[1], f[2]),
        )
        x_phis = {"J1": f[0], "J2": f[1], "J3": f[2]}
        cz_lay = cz_layout(
            JunctionParams(e[0], 1.0, 0.0),
            JunctionParams(e[1], g[0], 0.0),
            JunctionParams(e[2], 1.0, 0.0),
            JunctionParams(e[3], g[1], 0.0),
        )
        cz_phis = {"J1": f[0], "J2": f[1], "J1p": f[2], "J2p": f[3]}

        cases = (
            (z_lay, z_phis, None, -0.5 * h, analytic_z_subspace),
            (x_lay, x_phis, None, -0.5 * h, analytic_x_subspace),
            (cz_lay, cz_phis, e_c, -h, analytic_cz_subspace),
        )
        for layout, phis, charging, energy, basis_fn in cases:
            operator = block_hamiltonian(
                layout, ControlSettings(phis=phis, h=h, e_c=charging)
            ).entries
            couplings = couplings_of(layout, phis, h, charging)
            vectors = basis_fn(*couplings).vectors
            values = np.linalg.eigvalsh(operator)
            spread = float(values[-1] - values[0])
            rayleigh = np.real(np.diag(vectors.conj().T @ operator @ vectors))
            worst_energy = max(
                worst_energy, float(np.abs(rayleigh - energy).max()) / spread
            )
            residual = operator @ vectors - energy * vectors
            worst_residual = max(worst_residual, float(np.abs(residual).max()))
    assert worst_energy < 1e-10
    assert worst_residual < 1e-11
    report(
        f"criterion 3 PASS: 50 random settings per block; energy offset "
        f"{worst_energy:.1e} of spread (< 1e-10), residual {worst_residual:.1e} (< 1e-11)"
    )


def test_criterion_4_cz_selectivity():
    layout = cz_layout(
        J_FULL, JunctionParams(1.0, 0.6, 0.0), J_FULL, JunctionParams(1.25, 0.6, 0.0)
    )
    loop = standard_loop("CZ_RECT", (THIRD, THIRD), 2500, h=0.4, e_c=4.0)
    expected = canonical_loop_phase_cz(
        J_FULL, J_FULL, JunctionParams(1.0, 0.6, 0.0), JunctionParams(1.25, 0.6, 0.0),
        4.0, THIRD, THIRD,
    )
    _, angles = wilson_relative_phase(layout, loop)
    spectators = angles[[0, 1, 3]]
    spectator_spread = float(np.ptp(spectators))
    assert spectator_spread < 1e-5
    wilson_phase = angles[2] - spectators.mean()
    assert abs(wilson_phase - expected) < 1e-3

    fast_loop = standard_loop("CZ_RECT", (THIRD, THIRD), 64, h=0.4, e_c=4.0)
    schedule = calibrate_schedule(layout, fast_loop, eta=0.4 / 6, tolerance=1e-4)
    gate = adiabatic_gate(layout, fast_loop, schedule)
    rel_angles = np.angle(np.diag(gate.unitary) / gate.unitary[0, 0])
    dyn_spread = float(np.ptp(rel_angles[[0, 1, 3]]))
    assert dyn_spread < 1e-5
    echoed = geometric_phase(layout, fast_loop, schedule, column=2)
    assert abs(echoed - expected) < 1e-3
    report(
        f"criterion 4 PASS: spectator spread {max(spectator_spread, dyn_spread):.1e} "
        f"(< 1e-5); 10-state phase off by {max(abs(wilson_phase - expected), abs(echoed - expected)):.1e} (< 1e-3)"
    )


def test_criterion_5_x_conjugation_identity():
    layout = x_layout(J_FULL, J_FULL, J3_X)
    loop = standard_loop("X_PATH", (THIRD, math.pi / 4), 2500, h=0.4)
    result, _ = wilson_relative_phase(layout, loop)
    phi, phi_prime = rotation_angle_x(THIRD, J3_X)
    target = compose(
        [
            ideal_gate("z", phi_prime),
            ideal_gate("x", phi),
            ideal_gate("z", -phi_prime),
        ]
    )
    distance = phase_distance(extract_logical(result, Encoding.two_box(J3_X)), target)
    assert distance < 1e-3
    report(
        f"criterion 5 PASS: conjugated-rotation distance {distance:.1e} (< 1e-3) "
        f"at gamma3=0.5, phi3=pi/4, phi*=pi/3"
    )


def test_criterion_6_landau_zener_scaling():
    started = time.monotonic()
    layout = z_layout(J_FULL, JunctionParams(1.0, 0.6, 0.0))
    loop = standard_loop("Z_RECT", (THIRD, THIRD), 64, h=0.4)
    scan = landau_zener_scan(layout, loop)
    assert scan.etas[0] == pytest.approx(scan.gap / 3)
    assert scan.etas[-1] == pytest.approx(scan.gap / 30)
    assert scan.slope < 0
    assert scan.r_squared > 0.95
    assert scan.leakages[0] <= 1e-4
    elapsed = time.monotonic() - started
    assert elapsed < 300.0
    report(
        f"criterion 6 PASS: slope {scan.slope:.3f} (< 0), R^2 {scan.r_squared:.4f} "
        f"(> 0.95) over {int(scan.fitted.sum())} fitted rows, leakage at gap/3 "
        f"{scan.leakages[0]:.2e} (<= 1e-4), {elapsed:.0f}s"
    )


def test_criterion_7_fidelity_formula():
    assert fidelity(0.0, 0.0) == 1.0
    grid = np.linspace(0.0, 1.0, 100)
    values = [fidelity(p, 0.4) for p in grid]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))
    wobbles = np.linspace(0.0, math.pi, 100)
    values = [fidelity(0.1, w) for w in wobbles]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))
    formula = evaluate_budget(example_budget()).fidelity
    assert formula == pytest.approx(0.9997, abs=1e-4)
    # 0.998 circulates as the figure for this operating point; the formula
    # value is kept, the gap is a known discrepancy and is not papered over
    assert abs(formula - 0.998) > 1e-3
    report(
        f"criterion 7 PASS: fidelity(0,0)=1, monotone on 100-point grids, "
        f"example budget {formula:.6f} = 0.9997 +/- 1e-4 "
        f"(reference figure 0.998 recorded as a known discrepancy)"
    )


def test_criterion_8_universality_composition():
    rng = np.random.default_rng(2026)
    worst = 0.0
    for _ in range(100):
        u = random_unitary(rng)
        a, b, c, delta = euler_decompose(u)
        rebuilt = cmath.exp(1j * delta) * compose(
            [ideal_gate("z", c), ideal_gate("x", b), ideal_gate("z", a)]
        ).matrix
        worst = max(worst, float(np.abs(rebuilt - u).max()))
    assert worst < 1e-8
    report(
        f"criterion 8 PASS: 100 random unitaries rebuilt from U_Z/U_X products, "
        f"max residual {worst:.1e} (< 1e-8)"
    )


def test_criterion_8_hadamard_reconstruction():
    hadamard = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    a, b, c, delta = euler_decompose(hadamard)
    rebuilt = cmath.exp(1j * delta) * compose(
        [ideal_gate("z", c), ideal_gate("x", b), ideal_gate("z", a)]
    ).matrix
    residual = float(np.abs(rebuilt - hadamard).max())
    assert residual < 1e-10
    assert b == pytest.approx(math.pi / 4)
    report(
        f"criterion 8 PASS (named): Hadamard = Z({a:.4f}) X({b:.4f}) Z({c:.4f}) "
        f"up to phase {delta:.4f}, residual {residual:.1e}"
    )


def test_criterion_9_numerical_hygiene():
    drifts = []
    z_lay = z_layout(J_FULL, JunctionParams(1.0, 0.6, 0.0))
    z_loop = standard_loop("Z_RECT", (THIRD, THIRD), 64, h=0.4)
    x_lay = x_layout(J_FULL, J_FULL, J3_X)
    x_loop = standard_loop("X_PATH", (THIRD, math.pi / 4), 64, h=0.4)
    cz_lay = cz_layout(
        J_FULL, JunctionParams(1.0, 0.6, 0.0), J_FULL, JunctionParams(1.25, 0.6, 0.0)
    )
    cz_loop = standard_loop("CZ_RECT", (THIRD, THIRD), 64, h=0.4, e_c=4.0)

    unitarity = 0.0
    for layout, loop, fraction in (
        (z_lay, z_loop, 3.0),
        (x_lay, x_loop, 10.0),
        (cz_lay, cz_loop, 2.0),
    ):
        gap = survey_loop(layout, loop).gap
        schedule = calibrate_schedule(layout, loop, eta=gap / fraction, tolerance=1e-4)
        estimate = adiabatic_gate(layout, loop, schedule)
        drifts.append(estimate.norm_drift)
        holonomy = loop_holonomy(layout, loop, dark_energy(layout, 0.4))
        unitarity = max(
            unitarity,
            float(
                np.abs(
                    holonomy.unitary.conj().T @ holonomy.unitary
                    - np.eye(holonomy.subspace_dim)
                ).max()
            ),
        )
    assert max(drifts) < 1e-12
    assert unitarity < 1e-10

    schedule = calibrate_schedule(z_lay, z_loop, eta=0.279583 / 3, tolerance=1e-5)
    coarse = adiabatic_gate(z_lay, z_loop, schedule)
    fine = adiabatic_gate(
        z_lay, z_loop, replace(schedule, time_steps=2 * schedule.time_steps)
    )
    halving = float(np.abs(coarse.unitary - fine.unitary).max())
    assert halving < 1e-8
    report(
        f"criterion 9 PASS: norm drift {max(drifts):.1e} (< 1e-12), holonomy "
        f"unitarity {unitarity:.1e} (< 1e-10), step-halving change {halving:.1e} (< 1e-8)"
    )
