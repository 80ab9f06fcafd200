"""Single-particle matrices for the monitored chain.

Sites are labeled 1..L throughout the public API (the quasiperiodic phase is
cos(2*pi*alpha*l) with l starting at 1); internally arrays are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

GOLDEN_INVERSE = (math.sqrt(5.0) - 1.0) / 2.0

DISORDER_KINDS = ("none", "quasiperiodic", "uniform")
BOUNDARY_KINDS = ("obc", "pbc")


class ModelError(ValueError):
    """Invalid model specification."""


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of the monitored fermion chain.

    Attributes
    ----------
    L : chain length (>= 2)
    J : hopping strength (energy units)
    W : disorder amplitude (>= 0)
    alpha : quasiperiodicity parameter of the potential W*cos(2*pi*alpha*l)
    theta : feedback phase applied on site l+1 after a jump on bond l
    gamma : monitoring rate (>= 0)
    bc : "obc" or "pbc"
    disorder : "none", "quasiperiodic" or "uniform"
    disorder_seed : seed for the uniform onsite disorder realization
    """

    L: int
    J: float = 1.0
    W: float = 0.0
    alpha: float = GOLDEN_INVERSE
    theta: float = math.pi
    gamma: float = 0.5
    bc: str = "obc"
    disorder: str = "none"
    disorder_seed: int = 0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ModelError(f"L must be an integer >= 2, got {self.L!r}")
        if self.gamma < 0:
            raise ModelError(f"gamma must be >= 0, got {self.gamma}")
        if self.W < 0:
            raise ModelError(f"W must be >= 0, got {self.W}")
        if self.bc not in BOUNDARY_KINDS:
            raise ModelError(f"bc must be one of {BOUNDARY_KINDS}, got {self.bc!r}")
        if self.disorder not in DISORDER_KINDS:
            raise ModelError(
                f"disorder must be one of {DISORDER_KINDS}, got {self.disorder!r}"
            )
        if self.disorder == "none" and self.W != 0.0:
            # W is only meaningful together with a disorder kind
            raise ModelError("W != 0 requires disorder 'quasiperiodic' or 'uniform'")

    @property
    def n_bonds(self) -> int:
        """Number of monitored bonds: L-1 under OBC, L under PBC."""
        return self.L if self.bc == "pbc" else self.L - 1

    def with_trajectory_disorder(self, trajectory_index: int) -> "ModelSpec":
        """Spec with the per-trajectory uniform-disorder realization selected.

        Uniform disorder is resampled per trajectory; the realization is keyed
        by disorder_seed XOR trajectory index.  No-op for other kinds.
        """
        if self.disorder != "uniform":
            return self
        return replace(self, disorder_seed=self.disorder_seed ^ trajectory_index)


def onsite_potential(spec: ModelSpec) -> np.ndarray:
    """Onsite potential vector, length L (real)."""
    if spec.disorder == "none":
        return np.zeros(spec.L)
    if spec.disorder == "quasiperiodic":
        sites = np.arange(1, spec.L + 1)
        return spec.W * np.cos(2.0 * math.pi * spec.alpha * sites)
    # uniform: i.i.d. on [-W/2, W/2], bit-reproducible from the seed
    rng = np.random.Generator(np.random.Philox(key=np.uint64(spec.disorder_seed)))
    return rng.uniform(-spec.W / 2.0, spec.W / 2.0, size=spec.L)


def build_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """L x L Hermitian hopping matrix with the onsite potential on the diagonal."""
    L = spec.L
    h = np.zeros((L, L), dtype=complex)
    idx = np.arange(L - 1)
    h[idx, idx + 1] = spec.J
    h[idx + 1, idx] = spec.J
    if spec.bc == "pbc":
        h[L - 1, 0] = spec.J
        h[0, L - 1] = spec.J
    h[np.diag_indices(L)] = onsite_potential(spec)
    return h


def build_jump_modes(spec: ModelSpec) -> list[np.ndarray]:
    """Unit vectors d_l of the bond jump modes.

    [d_l]_i = (delta_{i,l} - i delta_{i,l+1}) / sqrt(2), one mode per bond
    l = 1..L-1 (OBC) or l = 1..L with wraparound (PBC).
    """
    L = spec.L
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    modes = []
    for l in range(spec.n_bonds):
        d = np.zeros(L, dtype=complex)
        d[l] = inv_sqrt2
        d[(l + 1) % L] = -1j * inv_sqrt2
        modes.append(d)
    return modes


def build_effective_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """h_eff = h - i (gamma/2) sum_l d_l d_l^dagger.

    The feedback phase cancels in L^dagger L, so only the bond modes enter.
    Every eigenvalue has non-positive imaginary part.
    """
    h = build_hamiltonian(spec)
    r = np.zeros_like(h)
    for d in build_jump_modes(spec):
        r += np.outer(d, d.conj())
    return h - 0.5j * spec.gamma * r


@dataclass(frozen=True)
class SingleParticleMatrices:
    """Bundle of the model matrices consumed by the engine."""

    h: np.ndarray
    d_modes: tuple
    h_eff: np.ndarray
    spec: ModelSpec = field(compare=False)


@lru_cache(maxsize=64)
def build_matrices(spec: ModelSpec) -> SingleParticleMatrices:
    """Build (and cache) all single-particle matrices for a spec."""
    return SingleParticleMatrices(
        h=build_hamiltonian(spec),
        d_modes=tuple(build_jump_modes(spec)),
        h_eff=build_effective_hamiltonian(spec),
        spec=spec,
    )
