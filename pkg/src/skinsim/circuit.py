"""Qubit-circuit realization: bricklayer XX+YY gates with measurement feedback.

Qubits are labeled 1..L; qubit 1 is the most significant bit of the basis
index, so a left block of qubits is the leading axis of the reshaped
statevector.  |0> = up = empty, |1> = down = occupied.  Every gate, the
optional disorder phases, the mid-circuit measurements and the SWAP+CZ
feedback commute with the total down-spin number, which is therefore exact
per shot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

STATEVECTOR_LIMIT = 14


class CircuitError(ValueError):
    """Invalid register or configuration."""


@dataclass(frozen=True)
class CircuitConfig:
    """Circuit parameters: gate angle, measurement probability, disorder."""

    L: int
    delta_t: float = 0.5
    p: float = 0.7
    n_modules: int = 1
    W: float = 0.0
    alpha: float = (math.sqrt(5.0) - 1.0) / 2.0

    def __post_init__(self):
        if self.L < 2 or self.L % 2 != 0:
            raise CircuitError(f"L must be even and >= 2, got {self.L}")
        if not 0.0 <= self.p <= 1.0:
            raise CircuitError(f"p must be in [0, 1], got {self.p}")
        if self.n_modules < 0:
            raise CircuitError("n_modules must be >= 0")


def neel_register(L: int) -> np.ndarray:
    """|up down up down ...>: sigma^x on the even qubits of |up...up>."""
    idx = 0
    for q in range(2, L + 1, 2):
        idx |= 1 << (L - q)  # qubit q -> bit L-q (qubit 1 is the MSB)
    psi = np.zeros(2**L, dtype=complex)
    psi[idx] = 1.0
    return psi


def _apply_pair(psi: np.ndarray, L: int, l: int, gate: np.ndarray) -> np.ndarray:
    """Apply a 4x4 gate on adjacent qubits (l, l+1), 1-based."""
    left = 2 ** (l - 1)
    right = 2 ** (L - l - 1)
    out = psi.reshape(left, 4, right)
    return np.einsum("ab,ibj->iaj", gate, out).reshape(-1)


def xxyy_gate(delta_t: float) -> np.ndarray:
    """exp(-i delta_t (XX + YY)) on two qubits; hopping in the |01>,|10> block."""
    c = math.cos(2.0 * delta_t)
    s = math.sin(2.0 * delta_t)
    g = np.eye(4, dtype=complex)
    g[1, 1] = g[2, 2] = c
    g[1, 2] = g[2, 1] = -1j * s
    return g


_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
_CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def _down_probability(psi: np.ndarray, L: int, q: int) -> float:
    """Probability of measuring qubit q (1-based) down (|1>)."""
    bit = L - q
    view = psi.reshape(2 ** (L - bit - 1), 2, 2**bit)
    return float(np.sum(np.abs(view[:, 1, :]) ** 2))


def _project(psi: np.ndarray, L: int, q: int, down: bool) -> np.ndarray:
    bit = L - q
    view = psi.reshape(2 ** (L - bit - 1), 2, 2**bit).copy()
    view[:, 0 if down else 1, :] = 0.0
    out = view.reshape(-1)
    return out / np.linalg.norm(out)


def apply_module(psi: np.ndarray, config: CircuitConfig,
                 rng: np.random.Generator) -> np.ndarray:
    """One module: odd bonds, even bonds, disorder phases, measurement sweep.

    The measurement sweep runs in ascending qubit order; the decision uniform
    is always drawn, the outcome uniform only when a measurement happens.
    A down outcome triggers SWAP then CZ on (l, l-1); qubit 1 has no left
    neighbor and receives no feedback.
    """
    L = config.L
    if psi.size != 2**L:
        raise CircuitError(f"register has {psi.size} amplitudes; expected 2^{L}")
    gate = xxyy_gate(config.delta_t)
    for l in range(1, L, 2):
        psi = _apply_pair(psi, L, l, gate)
    for l in range(2, L, 2):
        psi = _apply_pair(psi, L, l, gate)
    if config.W != 0.0:
        psi = psi.copy()
        for l in range(1, L + 1):
            angle = config.delta_t * config.W * math.cos(2.0 * math.pi * config.alpha * l)
            bit = L - l
            view = psi.reshape(2 ** (L - bit - 1), 2, 2**bit)
            view[:, 0, :] *= np.exp(-1j * angle)  # up: sigma^z = +1
            view[:, 1, :] *= np.exp(+1j * angle)
    for l in range(1, L + 1):
        if rng.random() >= config.p:
            continue
        p_down = _down_probability(psi, L, l)
        down = rng.random() < p_down
        psi = _project(psi, L, l, down)
        if down and l > 1:
            psi = _apply_pair(psi, L, l - 1, _SWAP)
            psi = _apply_pair(psi, L, l - 1, _CZ)
    return psi / np.linalg.norm(psi)


def measure_all(psi: np.ndarray, L: int, rng: np.random.Generator) -> np.ndarray:
    """Projective sigma^z measurement of every qubit, ascending order.

    Returns nu_l in {-1 (down/occupied), +1 (up/empty)} for l = 1..L.
    """
    outcomes = np.empty(L, dtype=int)
    for l in range(1, L + 1):
        down = rng.random() < _down_probability(psi, L, l)
        psi = _project(psi, L, l, down)
        outcomes[l - 1] = -1 if down else +1
    return outcomes


def run_circuit_shot(config: CircuitConfig, rng: np.random.Generator) -> np.ndarray:
    """One run: Neel preparation, n_modules modules, final measurement."""
    psi = neel_register(config.L)
    for _ in range(config.n_modules):
        psi = apply_module(psi, config, rng)
    return measure_all(psi, config.L, rng)


def skin_pattern(L: int) -> np.ndarray:
    """Ideal skin outcome: down on qubits 1..L/2, then up."""
    return np.concatenate([-np.ones(L // 2, dtype=int), np.ones(L - L // 2, dtype=int)])


def estimate_from_shots(records) -> tuple[np.ndarray, float]:
    """(mean spin distribution n_l = mean nu_l, skin-pattern match frequency)."""
    records = np.asarray(records, dtype=int)
    if records.ndim != 2 or records.shape[0] < 1:
        raise CircuitError("need at least one shot record")
    n_l = records.mean(axis=0)
    target = skin_pattern(records.shape[1])
    fs = float(np.mean(np.all(records == target, axis=1)))
    return n_l, fs


def circuit_entropy(psi: np.ndarray, cut: int) -> float:
    """Von Neumann entropy (natural log) of qubits 1..cut."""
    L = int(round(math.log2(psi.size)))
    if L > STATEVECTOR_LIMIT:
        raise CircuitError(f"L={L} exceeds statevector limit {STATEVECTOR_LIMIT}")
    if not 0 <= cut <= L:
        raise CircuitError(f"cut must be in 0..{L}")
    if cut in (0, L):
        return 0.0
    m = psi.reshape(2**cut, 2 ** (L - cut))
    s = np.linalg.svd(m, compute_uv=False)
    nu = np.clip(s**2, 0.0, 1.0)
    nu = nu[nu > 0]
    return float(-np.sum(nu * np.log(nu)))


def down_spin_weights(psi: np.ndarray, L: int) -> np.ndarray:
    """Probability mass per total down-spin number (Hamming weight)."""
    weights = np.zeros(L + 1)
    counts = np.array([bin(i).count("1") for i in range(psi.size)])
    np.add.at(weights, counts, np.abs(psi) ** 2)
    return weights
