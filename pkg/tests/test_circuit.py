"""Feedback circuit: gate algebra, measurement sweep, and Trotter limit."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from skinsim.circuit import (
    CircuitConfig,
    CircuitError,
    apply_module,
    circuit_entropy,
    down_spin_weights,
    estimate_from_shots,
    measure_all,
    neel_register,
    run_circuit_shot,
    skin_pattern,
    xxyy_gate,
)
from skinsim.state import SlaterState, entanglement_entropy, neel_state


def basis_index(L, pattern):
    """Basis index of a product state; pattern[l-1] in {-1 (down), +1 (up)}."""
    idx = 0
    for q, s in enumerate(pattern, start=1):
        if s < 0:
            idx |= 1 << (L - q)
    return idx


@pytest.mark.parametrize("bad", [
    {"L": 3}, {"L": 0}, {"L": 4, "p": 1.5}, {"L": 4, "n_modules": -1},
])
def test_invalid_config(bad):
    with pytest.raises(CircuitError):
        CircuitConfig(**bad)


def test_neel_register_is_alternating_product_state():
    L = 6
    psi = neel_register(L)
    assert np.sum(np.abs(psi) ** 2) == pytest.approx(1.0)
    idx = basis_index(L, [+1, -1, +1, -1, +1, -1])
    assert psi[idx] == 1.0


def test_zero_modules_returns_neel_outcome():
    config = CircuitConfig(L=6, n_modules=0)
    out = run_circuit_shot(config, np.random.default_rng(0))
    assert out.tolist() == [+1, -1, +1, -1, +1, -1]


def test_trivial_module_is_identity():
    config = CircuitConfig(L=6, delta_t=0.0, p=0.0)
    psi = neel_register(6)
    out = apply_module(psi.copy(), config, np.random.default_rng(0))
    np.testing.assert_allclose(out, psi, atol=1e-12)


def test_xxyy_gate_unitary_and_periodic():
    g = xxyy_gate(0.3)
    np.testing.assert_allclose(g @ g.conj().T, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(xxyy_gate(math.pi), np.eye(4), atol=1e-12)
    # delta_t = pi/4 is a full swap of the one-down block up to phase
    g = xxyy_gate(math.pi / 4)
    assert abs(g[1, 2]) == pytest.approx(1.0)
    assert abs(g[1, 1]) < 1e-12


def test_unmeasured_circuit_preserves_norm_and_weight():
    config = CircuitConfig(L=8, p=0.0, W=1.3)
    rng = np.random.default_rng(1)
    psi = neel_register(8)
    w0 = down_spin_weights(psi, 8)
    for _ in range(50):
        psi = apply_module(psi, config, rng)
    assert np.sum(np.abs(psi) ** 2) == pytest.approx(1.0)
    np.testing.assert_allclose(down_spin_weights(psi, 8), w0, atol=1e-10)


def test_down_count_conserved_per_shot():
    config = CircuitConfig(L=8, n_modules=6)
    rng = np.random.default_rng(7)
    for _ in range(20):
        out = run_circuit_shot(config, rng)
        assert int(np.sum(out == -1)) == 4


def test_feedback_moves_lone_down_spin_left():
    """With p=1 and no gates, a down spin measured at l hops to l-1."""
    L = 6
    config = CircuitConfig(L=L, delta_t=0.0, p=1.0)
    psi = np.zeros(2**L, dtype=complex)
    psi[basis_index(L, [+1, +1, +1, -1, +1, +1])] = 1.0  # down at qubit 4
    psi = apply_module(psi, config, np.random.default_rng(0))
    # swept ascending: measured down at 4 -> moved to 3; then measured down
    # at... qubit 5,6 are up.  One module moves it exactly one site left.
    assert abs(psi[basis_index(L, [+1, +1, -1, +1, +1, +1])]) == pytest.approx(1.0)


def test_feedback_stops_at_left_edge():
    L = 4
    config = CircuitConfig(L=L, delta_t=0.0, p=1.0)
    psi = np.zeros(2**L, dtype=complex)
    psi[basis_index(L, [-1, +1, +1, +1])] = 1.0
    rng = np.random.default_rng(0)
    for _ in range(3):
        psi = apply_module(psi, config, rng)
    assert abs(psi[basis_index(L, [-1, +1, +1, +1])]) == pytest.approx(1.0)


def test_measure_all_deterministic_on_product_state():
    L = 4
    pattern = [-1, +1, -1, +1]
    psi = np.zeros(2**L, dtype=complex)
    psi[basis_index(L, pattern)] = 1.0
    out = measure_all(psi, L, np.random.default_rng(0))
    assert out.tolist() == pattern


def test_skin_pattern():
    assert skin_pattern(6).tolist() == [-1, -1, -1, 1, 1, 1]


def test_estimate_from_shots():
    shots = [[-1, -1, 1, 1], [-1, 1, -1, 1], [-1, -1, 1, 1]]
    n_l, fs = estimate_from_shots(shots)
    np.testing.assert_allclose(n_l, [-1.0, -1 / 3, 1 / 3, 1.0])
    assert fs == pytest.approx(2 / 3)
    with pytest.raises(CircuitError):
        estimate_from_shots(np.zeros((0, 4)))


def test_circuit_entropy_product_and_bell():
    psi = neel_register(4)
    assert circuit_entropy(psi, 2) == pytest.approx(0.0, abs=1e-12)
    bell = np.zeros(4, dtype=complex)
    bell[[0, 3]] = 1 / math.sqrt(2)
    assert circuit_entropy(bell, 1) == pytest.approx(math.log(2))
    assert circuit_entropy(bell, 0) == 0.0
    with pytest.raises(CircuitError):
        circuit_entropy(np.zeros(2**16, dtype=complex), 8)
    with pytest.raises(CircuitError):
        circuit_entropy(bell, 3)


def test_unmeasured_module_is_trotterized_hopping():
    """p=0, W=0: one module equals the two-layer Trotter factorization of the
    hopping chain, exp(-i 2 delta_t h_odd) exp(-i 2 delta_t h_even) applied to
    single-particle modes.  Checked via a lone down spin's wavefunction."""
    L = 8
    delta_t = 0.23
    config = CircuitConfig(L=L, delta_t=delta_t, p=0.0)
    rng = np.random.default_rng(0)
    # XX+YY on a bond acts as hopping amplitude 2 in the one-down subspace
    h_odd = np.zeros((L, L))
    h_even = np.zeros((L, L))
    for l in range(1, L):
        h = h_odd if l % 2 == 1 else h_even
        h[l - 1, l] = h[l, l - 1] = 2.0
    u_layer = expm(-1j * delta_t * h_even) @ expm(-1j * delta_t * h_odd)
    for start in (0, 3):
        psi = np.zeros(2**L, dtype=complex)
        psi[1 << (L - 1 - start)] = 1.0  # down on qubit start+1
        psi = apply_module(psi, config, rng)
        # read off the one-down amplitudes
        amp = np.array([psi[1 << (L - 1 - q)] for q in range(L)])
        expected = u_layer[:, start]
        np.testing.assert_allclose(amp, expected, atol=1e-10)


def test_unmeasured_entropy_matches_gaussian_engine():
    """p=0, W=0 circuit evolution of the Neel state equals the same layered
    single-particle evolution of a Slater state (entropy at every cut)."""
    L = 10
    delta_t = 0.4
    n_modules = 7
    config = CircuitConfig(L=L, delta_t=delta_t, p=0.0)
    rng = np.random.default_rng(0)
    psi = neel_register(L)
    for _ in range(n_modules):
        psi = apply_module(psi, config, rng)

    h_odd = np.zeros((L, L))
    h_even = np.zeros((L, L))
    for l in range(1, L):
        h = h_odd if l % 2 == 1 else h_even
        h[l - 1, l] = h[l, l - 1] = 2.0
    u_module = expm(-1j * delta_t * h_even) @ expm(-1j * delta_t * h_odd)
    slater = neel_state(L)
    U = slater.U
    for _ in range(n_modules):
        U = u_module @ U
    gauss = SlaterState(np.linalg.qr(U)[0])
    for cut in (1, 3, 5, 8):
        assert circuit_entropy(psi, cut) == pytest.approx(
            entanglement_entropy(gauss, range(1, cut + 1)), abs=1e-8)


def test_disorder_phases_match_quasiperiodic_potential():
    """W != 0, p=0: the phase layer implements the quasiperiodic onsite term.
    One module equals hopping layers followed by exp(-i delta_t V) on modes."""
    L = 6
    delta_t = 0.3
    W = 1.7
    config = CircuitConfig(L=L, delta_t=delta_t, p=0.0, W=W)
    psi = np.zeros(2**L, dtype=complex)
    psi[1 << (L - 3)] = 1.0  # down on qubit 3
    psi = apply_module(psi, config, np.random.default_rng(0))
    amp = np.array([psi[1 << (L - 1 - q)] for q in range(L)])

    h_odd = np.zeros((L, L))
    h_even = np.zeros((L, L))
    for l in range(1, L):
        h = h_odd if l % 2 == 1 else h_even
        h[l - 1, l] = h[l, l - 1] = 2.0
    alpha = config.alpha
    v = W * np.cos(2 * np.pi * alpha * np.arange(1, L + 1))
    # global phase: up spins acquire exp(-i delta_t W cos) each site; relative
    # single-particle phase per occupied site is exp(+2i delta_t v_l) times
    # the product over all sites of exp(-i delta_t v_l)
    u = np.diag(np.exp(2j * delta_t * v)) @ expm(-1j * delta_t * h_even) @ expm(-1j * delta_t * h_odd)
    expected = np.exp(-1j * delta_t * np.sum(v)) * u[:, 2]
    np.testing.assert_allclose(amp, expected, atol=1e-10)
