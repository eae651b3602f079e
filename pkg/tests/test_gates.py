import cmath
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holosim import (
    Encoding,
    JunctionParams,
    LogicalGate,
    compose,
    euler_decompose,
    extract_logical,
    ideal_gate,
    phase_distance,
    strip_global_phase,
)
from holosim.junction import phase_shift

angles = st.floats(-math.pi, math.pi, allow_nan=False)


def random_unitary(rng, n=2):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_ideal_z_matrix():
    g = ideal_gate("z", 0.7)
    assert g.label == "U_Z"
    assert g.angles == (0.7,)
    assert g.matrix[0, 0] == 1.0
    assert g.matrix[1, 1] == pytest.approx(cmath.exp(0.7j))
    assert g.matrix[0, 1] == 0.0


def test_ideal_x_matrix():
    g = ideal_gate("x", 0.3)
    c, s = math.cos(0.3), math.sin(0.3)
    assert np.allclose(g.matrix, [[c, 1j * s], [1j * s, c]])


def test_ideal_cz_phases_third_slot_only():
    g = ideal_gate("cz", 1.1)
    diag = np.diag(g.matrix)
    assert diag[2] == pytest.approx(cmath.exp(1.1j))
    assert np.allclose(np.delete(diag, 2), 1.0)
    assert np.abs(g.matrix - np.diag(diag)).max() == 0.0


def test_ideal_gate_label_aliases():
    assert np.allclose(ideal_gate("U_Z", 0.2).matrix, ideal_gate("z", 0.2).matrix)
    with pytest.raises(ValueError):
        ideal_gate("y", 0.1)


@given(angles, angles)
def test_z_gates_compose_additively(a, b):
    combined = compose([ideal_gate("z", a), ideal_gate("z", b)])
    assert phase_distance(combined, ideal_gate("z", a + b)) < 1e-7


@given(angles, angles)
def test_x_gates_compose_additively(a, b):
    combined = compose([ideal_gate("x", a), ideal_gate("x", b)])
    assert phase_distance(combined, ideal_gate("x", a + b)) < 1e-7


def test_logical_gate_rejects_bad_input():
    with pytest.raises(ValueError):
        LogicalGate(np.ones((2, 3)))
    with pytest.raises(ValueError):
        LogicalGate(np.array([[1.0, 0.0], [0.0, 2.0]]))
    with pytest.raises(ValueError):
        LogicalGate(np.eye(2), label="U_H")


def test_logical_gate_matrix_is_frozen():
    g = ideal_gate("z", 0.5)
    with pytest.raises(ValueError):
        g.matrix[0, 0] = 0.0


def test_determinant_of_z():
    g = ideal_gate("z", 0.9)
    assert g.determinant == pytest.approx(cmath.exp(0.9j))


def test_encodings_are_unitary():
    for enc in (
        Encoding.single_box(),
        Encoding.two_box(JunctionParams(1.0, 0.5, math.pi / 4)),
        Encoding.coupled_pair(),
    ):
        q = enc.matrix
        assert np.abs(q.conj().T @ q - np.eye(q.shape[0])).max() < 1e-12


def test_encoding_rejects_nonunitary():
    with pytest.raises(ValueError):
        Encoding(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_single_box_swaps_columns():
    assert np.allclose(Encoding.single_box().matrix, [[0, 1], [1, 0]])


def test_two_box_gauge_tracks_third_junction():
    j3 = JunctionParams(1.0, 0.5, math.pi / 4)
    beta = phase_shift(0.5, math.pi / 4)
    enc = Encoding.two_box(j3)
    assert enc.matrix[0, 0] == 1.0
    assert enc.matrix[1, 1] == pytest.approx(cmath.exp(1j * (math.pi / 4 - beta / 2)))


def test_strip_global_phase_pivots_on_dominant_diagonal():
    u = cmath.exp(0.4j) * np.eye(2)
    assert np.allclose(strip_global_phase(u), np.eye(2))


def test_strip_global_phase_offdiagonal_fallback():
    u = cmath.exp(0.4j) * np.array([[0.0, 1.0], [1.0, 0.0]])
    stripped = strip_global_phase(u)
    assert stripped[0, 1] == pytest.approx(1.0)


def test_extract_logical_undoes_encoding():
    enc = Encoding.single_box()
    target = ideal_gate("z", 0.8).matrix
    raw = cmath.exp(0.3j) * (enc.matrix @ target @ enc.matrix.conj().T)
    got = extract_logical(SimpleNamespace(unitary=raw), enc)
    assert phase_distance(got, ideal_gate("z", 0.8)) < 1e-7


def test_extract_logical_checks_dimensions():
    with pytest.raises(ValueError):
        extract_logical(SimpleNamespace(unitary=np.eye(4)), Encoding.single_box())


def test_compose_order_first_acts_first():
    x = ideal_gate("x", 0.4)
    z = ideal_gate("z", 1.2)
    assert np.allclose(compose([x, z]).matrix, z.matrix @ x.matrix)
    with pytest.raises(ValueError):
        compose([])


@given(angles)
def test_phase_distance_ignores_global_phase(theta):
    u = ideal_gate("x", 0.3).matrix
    assert phase_distance(u, cmath.exp(1j * theta) * u) < 1e-7


def test_phase_distance_shape_mismatch():
    with pytest.raises(ValueError):
        phase_distance(np.eye(2), np.eye(4))


def test_phase_distance_detects_difference():
    d = phase_distance(ideal_gate("z", 0.0), ideal_gate("z", math.pi))
    assert d == pytest.approx(2.0)


def test_euler_identity():
    a, b, c, delta = euler_decompose(np.eye(2))
    assert b == 0.0
    assert abs(a % (2 * math.pi)) < 1e-12
    assert c == 0.0
    assert delta == 0.0


def test_euler_pure_x():
    a, b, c, delta = euler_decompose(ideal_gate("x", 0.3))
    assert b == pytest.approx(0.3)
    rebuilt = cmath.exp(1j * delta) * compose(
        [ideal_gate("z", c), ideal_gate("x", b), ideal_gate("z", a)]
    ).matrix
    assert np.abs(rebuilt - ideal_gate("x", 0.3).matrix).max() < 1e-12


def test_euler_hadamard():
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    a, b, c, delta = euler_decompose(h)
    assert b == pytest.approx(math.pi / 4)
    assert a == pytest.approx(-math.pi / 2)
    assert c == pytest.approx(-math.pi / 2)
    assert delta == pytest.approx(0.0)


def test_euler_antidiagonal_branch():
    u = ideal_gate("x", math.pi / 2).matrix
    a, b, c, delta = euler_decompose(u)
    assert b == pytest.approx(math.pi / 2)
    assert c == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_euler_reconstructs_random_unitaries(seed):
    u = random_unitary(np.random.default_rng(seed))
    a, b, c, delta = euler_decompose(u)
    assert 0.0 <= b <= math.pi / 2 + 1e-12
    rebuilt = cmath.exp(1j * delta) * compose(
        [ideal_gate("z", c), ideal_gate("x", b), ideal_gate("z", a)]
    ).matrix
    assert np.abs(rebuilt - u).max() < 1e-10


def test_euler_rejects_bad_matrices():
    with pytest.raises(ValueError):
        euler_decompose(np.eye(3))
    with pytest.raises(ValueError):
        euler_decompose(np.array([[1.0, 0.1], [0.0, 1.0]]))
