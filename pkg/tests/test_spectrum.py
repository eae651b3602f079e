import math

import numpy as np
import pytest

from holosim.junction import JunctionParams
from holosim.network import (
    ControlSettings,
    block_hamiltonian,
    cz_layout,
    path_coefficients,
    x_layout,
    z_layout,
)
from holosim.spectrum import (
    SubspaceBasis,
    analytic_cz_subspace,
    analytic_x_corner_limit,
    analytic_x_subspace,
    analytic_z_subspace,
    default_tolerance,
    degenerate_subspace,
    eigendecompose,
    projector_distance,
)

J_FULL = JunctionParams(1.0, 1.0, 0.0)


def couplings_at(layout, phis, h=0.4, e_c=None):
    arrays = {l: np.array([v]) for l, v in phis.items()}
    row = path_coefficients(layout, arrays, h, e_c)[0]
    n = (len(row) - 1) // 2
    return tuple(row[2 * i] + 1j * row[2 * i + 1] for i in range(n))


def test_eigendecompose_sorted_and_consistent():
    layout = z_layout(J_FULL, JunctionParams(1.0, 0.6, 0.0))
    h = block_hamiltonian(
        layout, ControlSettings(phis={"J1": 0.3, "J2": 0.9}, h=0.4)
    )
    system = eigendecompose(h)
    assert np.all(np.diff(system.values) >= 0)
    residual = h.entries @ system.vectors - system.vectors * system.values
    assert np.abs(residual).max() < 1e-13


def test_default_tolerance_scales_with_spread():
    assert default_tolerance(np.array([0.0, 2.0])) == pytest.approx(2e-9)
    assert default_tolerance(np.array([0.0, 1e-3])) == pytest.approx(1e-9)


def test_subspace_basis_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        SubspaceBasis(vectors=np.ones((4, 2), dtype=complex))


def test_degenerate_subspace_window():
    layout = z_layout(J_FULL, JunctionParams(1.0, 0.6, 0.0))
    h = block_hamiltonian(
        layout, ControlSettings(phis={"J1": 0.5, "J2": 0.5}, h=0.4)
    )
    basis = degenerate_subspace(h, -0.2)
    assert basis.dimension == 2
    with pytest.raises(ValueError):
        degenerate_subspace(h, 99.0)
    with pytest.raises(ValueError):
        degenerate_subspace(h, -0.2, tol=-1.0)


def test_analytic_z_matches_numeric_subspace():
    layout = z_layout(J_FULL, JunctionParams(1.0, 0.6, 0.0))
    phis = {"J1": 0.7, "J2": 0.2}
    h = block_hamiltonian(layout, ControlSettings(phis=phis, h=0.4))
    numeric = degenerate_subspace(h, -0.2)
    analytic = analytic_z_subspace(*couplings_at(layout, phis))
    assert projector_distance(numeric, analytic) < 1e-10


def test_analytic_x_matches_numeric_subspace():
    layout = x_layout(J_FULL, J_FULL, JunctionParams(1.0, 0.5, math.pi / 4))
    phis = {"J1": 0.4, "J2": 0.8, "J3": math.pi / 4}
    h = block_hamiltonian(layout, ControlSettings(phis=phis, h=0.4))
    analytic = analytic_x_subspace(*couplings_at(layout, phis))
    # the dark pair is two of the three states at the dark energy; the empty
    # register completes the window
    numeric = degenerate_subspace(h, -0.2)
    p_num = numeric.vectors @ numeric.vectors.conj().T
    v = analytic.vectors
    assert np.abs(p_num @ v - v).max() < 1e-10


def test_analytic_cz_matches_numeric_subspace():
    layout = cz_layout(
        J_FULL,
        JunctionParams(1.0, 0.6, 0.0),
        J_FULL,
        JunctionParams(1.25, 0.6, 0.0),
    )
    phis = {"J1": 0.6, "J2": 0.3, "J1p": 0.0, "J2p": 0.0}
    h = block_hamiltonian(layout, ControlSettings(phis=phis, h=0.4, e_c=4.0))
    analytic = analytic_cz_subspace(*couplings_at(layout, phis, e_c=4.0))
    numeric = degenerate_subspace(h, -0.4)
    p_num = numeric.vectors @ numeric.vectors.conj().T
    v = analytic.vectors
    assert np.abs(p_num @ v - v).max() < 1e-10


def test_analytic_bases_are_eigenvectors():
    layout = z_layout(J_FULL, JunctionParams(1.0, 0.6, 0.0))
    phis = {"J1": 0.9, "J2": 0.1}
    h = block_hamiltonian(layout, ControlSettings(phis=phis, h=0.4)).entries
    basis = analytic_z_subspace(*couplings_at(layout, phis))
    residual = h @ basis.vectors - (-0.2) * basis.vectors
    assert np.abs(residual).max() < 1e-12


def test_analytic_z_singular_at_double_switch_off():
    with pytest.raises(ValueError):
        analytic_z_subspace(0.0, 0.0)
    with pytest.raises(ValueError):
        analytic_cz_subspace(0.0, 0.0)


def test_corner_limit_continues_the_interior_frame():
    """Shrinking both couplings along a ray converges to the corner frame."""
    j3 = 0.9 * np.exp(-0.3j)
    direction = np.array([0.6, 0.8])
    limit = analytic_x_corner_limit(direction[0], direction[1], j3)
    for eps in (1e-3, 1e-5):
        interior = analytic_x_subspace(eps * direction[0], eps * direction[1], j3)
        # same span and, column by column, same gauge in the limit
        assert projector_distance(interior, limit) < 2 * eps
        overlap = limit.vectors.conj().T @ interior.vectors
        assert np.abs(overlap - np.eye(2)).max() < 2 * eps
    with pytest.raises(ValueError):
        analytic_x_corner_limit(0.0, 0.0, j3)
    with pytest.raises(ValueError):
        analytic_x_corner_limit(0.6, 0.8, 0.0)


def test_projector_distance_gauge_invariant():
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2)))
    a = SubspaceBasis(vectors=q)
    phase = np.exp(1j * rng.uniform(0, 2 * math.pi, size=2))
    b = SubspaceBasis(vectors=q * phase)
    assert projector_distance(a, b) < 1e-12
