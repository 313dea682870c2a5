import numpy as np
import pytest

from localrange.circuits import (
    CircuitEnsemble,
    GateSpec,
    LocalUnitaryParams,
    apply_single_qubit,
    assemble,
    embed_local,
    euler_zyz,
    gate_matrix,
    local_unitary,
    rotation,
    sample_circuit,
    su4_generators,
)
from localrange.haar import haar_random_unitary
from localrange.linalg import PAULI, BipartitePartition, kron, pauli_word_matrix


def is_unitary(u):
    return np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-10)


class TestGateSpec:
    def test_kinds(self):
        GateSpec("RX", 0)  # case-insensitive
        with pytest.raises(ValueError):
            GateSpec("hadamard", 0)

    def test_cz_needs_control(self):
        with pytest.raises(ValueError):
            GateSpec("cz", 1)


def test_rotation_convention():
    # R_P(theta) = exp(-i theta P / 2); at theta=pi this is -iP
    for axis in "xyz":
        assert np.allclose(rotation(axis, np.pi), -1j * PAULI[axis.upper()])
    assert np.allclose(rotation("y", 0), np.eye(2))


def test_rotation_composition():
    a, b = 0.3, 1.1
    assert np.allclose(rotation("x", a) @ rotation("x", b), rotation("x", a + b))


def test_euler_zyz_covers_su2():
    rng = np.random.default_rng(0)
    u = haar_random_unitary(2, rng)
    # any 2x2 unitary equals a global phase times some ZYZ product
    phase = np.sqrt(np.linalg.det(u))
    su = u / phase
    # decompose: theta from |su[0,0]|, phases from the off-diagonal structure
    theta = 2 * np.arccos(np.clip(abs(su[0, 0]), 0, 1))
    phi = -np.angle(su[0, 0]) + np.angle(su[1, 0])
    alpha = -np.angle(su[0, 0]) - np.angle(su[1, 0]) + np.pi
    rebuilt = euler_zyz(phi, theta, alpha)
    assert np.allclose(np.abs(rebuilt), np.abs(su), atol=1e-9)


def test_gate_matrix_cz():
    g = GateSpec("cz", 1, control=0)
    assert np.allclose(gate_matrix(g, 2), np.diag([1, 1, 1, -1]))
    # symmetric in control/target
    assert np.allclose(gate_matrix(GateSpec("cz", 0, control=1), 2), np.diag([1, 1, 1, -1]))


def test_gate_matrix_rotation_placement():
    g = GateSpec("rz", 1, angle=np.pi)
    expected = kron(np.eye(2), rotation("z", np.pi))
    assert np.allclose(gate_matrix(g, 2), expected)


def test_gate_matrix_errors():
    with pytest.raises(ValueError):
        gate_matrix(GateSpec("rx", 5), 2)
    with pytest.raises(ValueError):
        gate_matrix(GateSpec("rx", 0), 2)  # unbound angle


def test_apply_single_qubit_matches_kron():
    rng = np.random.default_rng(1)
    u = haar_random_unitary(8, rng)
    g = haar_random_unitary(2, rng)
    for q, words in ((0, (g, np.eye(4))), (2, (np.eye(4), g))):
        expected = np.kron(words[0], words[1]) @ u
        assert np.allclose(apply_single_qubit(u, g, q, 3), expected)


class TestSampleCircuit:
    def test_identity(self):
        ens = CircuitEnsemble("identity", 3)
        assert np.allclose(sample_circuit(ens, np.random.default_rng(0)), np.eye(8))

    @pytest.mark.parametrize("kind", ["one_design_layer", "hardware_efficient", "haar"])
    def test_unitarity(self, kind):
        ens = CircuitEnsemble(kind, 3, layers=4 if kind == "hardware_efficient" else None)
        u = sample_circuit(ens, np.random.default_rng(2))
        assert u.shape == (8, 8)
        assert is_unitary(u)

    def test_default_layers(self):
        assert CircuitEnsemble("hardware_efficient", 4).effective_layers == 40
        assert CircuitEnsemble("hardware_efficient", 4, layers=7).effective_layers == 7

    def test_zero_layers_is_initial_wall(self):
        ens = CircuitEnsemble("hardware_efficient", 2, layers=0)
        u = sample_circuit(ens, np.random.default_rng(3))
        ry = rotation("y", np.pi / 4)
        assert np.allclose(u, np.kron(ry, ry))

    def test_deterministic_given_rng_state(self):
        ens = CircuitEnsemble("hardware_efficient", 3, layers=5)
        a = sample_circuit(ens, np.random.default_rng(7))
        b = sample_circuit(ens, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            CircuitEnsemble("clifford", 3)


def test_one_design_layer_first_moment():
    # E[V A V+] should approach tr(A)/d I for the per-qubit random-axis layer
    rng = np.random.default_rng(11)
    ens = CircuitEnsemble("one_design_layer", 2)
    a = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
    acc = np.zeros((4, 4), dtype=complex)
    n_samples = 10_000
    for _ in range(n_samples):
        v = sample_circuit(ens, rng)
        acc += v @ a @ v.conj().T
    acc /= n_samples
    assert np.max(np.abs(acc - np.eye(4) / 4)) < 0.02


def test_hardware_efficient_frame_potential():
    # second frame potential E|tr(U+W)|^4 approaches the 2-design value 2
    rng = np.random.default_rng(13)
    ens = CircuitEnsemble("hardware_efficient", 4, layers=40)
    pairs = 2000
    us = [sample_circuit(ens, rng) for _ in range(2 * pairs)]
    vals = [abs(np.trace(us[2 * i].conj().T @ us[2 * i + 1])) ** 4 for i in range(pairs)]
    est = np.mean(vals)
    assert abs(est - 2.0) < 0.4  # within 20% of the Haar value


class TestLocalUnitary:
    def test_m1(self):
        p = LocalUnitaryParams((0.1, 0.2, 0.3))
        assert p.m == 1
        assert np.allclose(local_unitary(p), euler_zyz(0.1, 0.2, 0.3))

    def test_m1_half_turn_about_y(self):
        u = local_unitary(LocalUnitaryParams((0.0, np.pi, 0.0)))
        assert np.allclose(u, np.array([[0, -1], [1, 0]], dtype=complex))

    def test_m1_zero_is_identity(self):
        assert np.allclose(local_unitary(LocalUnitaryParams((0.0, 0.0, 0.0))), np.eye(2))

    def test_m2_unitary(self):
        rng = np.random.default_rng(4)
        p = LocalUnitaryParams(tuple(rng.normal(size=15)))
        assert p.m == 2
        assert is_unitary(local_unitary(p))

    def test_bad_length(self):
        with pytest.raises(ValueError):
            LocalUnitaryParams((0.1, 0.2))


def test_su4_generators():
    gens = su4_generators()
    assert len(gens) == 15
    assert np.allclose(gens[0], pauli_word_matrix("IX"))
    assert np.allclose(gens[-1], pauli_word_matrix("ZZ"))
    for g in gens:
        assert abs(np.trace(g)) < 1e-12


class TestEmbedLocal:
    def test_leading_site(self):
        part = BipartitePartition(3, (0,))
        assert np.allclose(embed_local(PAULI["X"], part), pauli_word_matrix("XII"))

    def test_interior_site(self):
        part = BipartitePartition(3, (1,))
        assert np.allclose(embed_local(PAULI["Y"], part), pauli_word_matrix("IYI"))

    def test_two_site_noncontiguous(self):
        part = BipartitePartition(3, (0, 2))
        ua = kron(PAULI["X"], PAULI["Z"])
        assert np.allclose(embed_local(ua, part), pauli_word_matrix("XIZ"))

    def test_dimension_check(self):
        with pytest.raises(Exception):
            embed_local(np.eye(4), BipartitePartition(3, (0,)))


def test_assemble_order():
    part = BipartitePartition(2, (0,))
    v1 = pauli_word_matrix("IX")
    v2 = pauli_word_matrix("ZI")
    out = assemble(v1, PAULI["Y"], v2, part)
    assert np.allclose(out, v2 @ pauli_word_matrix("YI") @ v1)
