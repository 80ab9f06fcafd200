"""Construction of the single-particle matrices."""

import math

import numpy as np
import pytest

from skinsim.model import (
    GOLDEN_INVERSE,
    ModelError,
    ModelSpec,
    build_effective_hamiltonian,
    build_hamiltonian,
    build_jump_modes,
    onsite_potential,
)


def test_clean_obc_hamiltonian_is_tridiagonal():
    h = build_hamiltonian(ModelSpec(L=4))
    expected = np.diag(np.ones(3), 1) + np.diag(np.ones(3), -1)
    np.testing.assert_array_equal(h, expected)


def test_pbc_adds_wraparound_bond():
    h = build_hamiltonian(ModelSpec(L=4, bc="pbc"))
    assert h[0, 3] == 1.0 and h[3, 0] == 1.0
    h_obc = build_hamiltonian(ModelSpec(L=4))
    h_obc[0, 3] = h_obc[3, 0] = 1.0
    np.testing.assert_array_equal(h, h_obc)


def test_quasiperiodic_potential_first_site():
    # independent evaluation of W cos(2 pi alpha l) at l = 1, W = 2
    expected = 2.0 * math.cos(2.0 * math.pi * GOLDEN_INVERSE)
    assert abs(expected - (-1.4747)) < 1e-4
    h = build_hamiltonian(ModelSpec(L=4, W=2.0, disorder="quasiperiodic"))
    assert h[0, 0] == pytest.approx(expected, abs=1e-12)


def test_no_disorder_means_zero_potential():
    assert np.all(onsite_potential(ModelSpec(L=9)) == 0.0)


def test_uniform_disorder_reproducible_and_bounded():
    spec = ModelSpec(L=50, W=3.0, disorder="uniform", disorder_seed=123)
    v1 = onsite_potential(spec)
    v2 = onsite_potential(spec)
    np.testing.assert_array_equal(v1, v2)
    assert np.all(np.abs(v1) <= 1.5)
    v3 = onsite_potential(ModelSpec(L=50, W=3.0, disorder="uniform", disorder_seed=124))
    assert not np.array_equal(v1, v3)


def test_trajectory_disorder_keying():
    spec = ModelSpec(L=8, W=1.0, disorder="uniform", disorder_seed=5)
    assert spec.with_trajectory_disorder(0).disorder_seed == 5
    assert spec.with_trajectory_disorder(3).disorder_seed == 5 ^ 3
    qp = ModelSpec(L=8, W=1.0, disorder="quasiperiodic")
    assert qp.with_trajectory_disorder(3) == qp


@pytest.mark.parametrize(
    "kwargs",
    [
        {"L": 1},
        {"L": 4, "gamma": -0.1},
        {"L": 4, "W": -1.0},
        {"L": 4, "disorder": "speckle"},
        {"L": 4, "bc": "twisted"},
        {"L": 4, "W": 1.0},  # W without a disorder kind
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ModelError):
        ModelSpec(**kwargs)


def test_bond_counts():
    assert len(build_jump_modes(ModelSpec(L=4))) == 3
    modes = build_jump_modes(ModelSpec(L=4, bc="pbc"))
    assert len(modes) == 4
    # wraparound mode lives on sites {4, 1}
    assert modes[3][3] == pytest.approx(1 / math.sqrt(2))
    assert modes[3][0] == pytest.approx(-1j / math.sqrt(2))
    assert np.count_nonzero(modes[3]) == 2


def test_jump_modes_unit_norm():
    for spec in (ModelSpec(L=7), ModelSpec(L=7, bc="pbc")):
        for d in build_jump_modes(spec):
            assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-15)
            assert np.count_nonzero(d) == 2


def test_heff_reduces_to_h_without_monitoring():
    spec = ModelSpec(L=6, gamma=0.0)
    np.testing.assert_array_equal(
        build_effective_hamiltonian(spec), build_hamiltonian(spec)
    )


def test_heff_two_site_anti_hermitian_part():
    # L=2, single bond, gamma=0.5: i(h_eff - h_eff^dag)/2 = 0.25 * projector
    h_eff = build_effective_hamiltonian(ModelSpec(L=2, gamma=0.5))
    anti = 1j * (h_eff - h_eff.conj().T) / 2.0
    eig = np.sort(np.linalg.eigvalsh(anti))
    np.testing.assert_allclose(eig, [0.0, 0.25], atol=1e-14)


def test_hamiltonian_exactly_hermitian():
    for spec in (
        ModelSpec(L=11, W=2.0, disorder="quasiperiodic", bc="pbc"),
        ModelSpec(L=11, W=2.0, disorder="uniform", disorder_seed=7),
    ):
        h = build_hamiltonian(spec)
        assert np.max(np.abs(h - h.conj().T)) == 0.0


@pytest.mark.parametrize("bc", ["obc", "pbc"])
def test_heff_dissipative(bc):
    spec = ModelSpec(L=10, W=1.5, disorder="quasiperiodic", bc=bc)
    lam = np.linalg.eigvals(build_effective_hamiltonian(spec))
    assert np.max(lam.imag) <= 1e-10


def test_clean_pbc_commutes_with_shift():
    L = 12
    h = build_hamiltonian(ModelSpec(L=L, bc="pbc"))
    shift = np.roll(np.eye(L), 1, axis=0)
    assert np.max(np.abs(h @ shift - shift @ h)) < 1e-12
