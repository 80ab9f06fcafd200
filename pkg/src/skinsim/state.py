"""Slater-determinant states and correlation-matrix observables.

A pure Gaussian state of N fermions on L sites is stored as an L x N complex
matrix U with orthonormal columns; column n is the n-th occupied orbital.
All equal-time observables reduce to the two-point correlation matrix
C_ij = <c_i^dagger c_j> = sum_n conj(U_in) U_jn.

Site labels in the public API are 1-based, matching the lattice convention
used by the model module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-10


class StateError(ValueError):
    """Invalid state construction or observable request."""


@dataclass
class SlaterState:
    """N-fermion Slater determinant on L sites; U has orthonormal columns."""

    U: np.ndarray

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=complex)
        if self.U.ndim != 2:
            raise StateError("U must be a 2d array (L x N)")
        if self.N > self.L:
            raise StateError(f"N={self.N} exceeds L={self.L}")

    @property
    def L(self) -> int:
        return self.U.shape[0]

    @property
    def N(self) -> int:
        return self.U.shape[1]

    def orthonormality_defect(self) -> float:
        g = self.U.conj().T @ self.U
        return float(np.max(np.abs(g - np.eye(self.N))))


def correlation_matrix(state: SlaterState) -> np.ndarray:
    """C_ij = <c_i^dagger c_j>; Hermitian, eigenvalues in [0, 1], trace N."""
    return state.U.conj() @ state.U.T


def fock_state(L: int, occupied_sites) -> SlaterState:
    """Product Fock state with the given 1-based sites occupied."""
    occ = sorted(set(int(s) for s in occupied_sites))
    if occ and (occ[0] < 1 or occ[-1] > L):
        raise StateError(f"occupied sites must lie in 1..{L}")
    U = np.zeros((L, len(occ)), dtype=complex)
    for n, site in enumerate(occ):
        U[site - 1, n] = 1.0
    return SlaterState(U)


def neel_state(L: int) -> SlaterState:
    """Half-filled Neel state with the even sites occupied (requires even L)."""
    if L % 2 != 0:
        raise StateError(f"Neel state requires even L, got {L}")
    return fock_state(L, range(2, L + 1, 2))


def skin_state(L: int, N: int | None = None) -> SlaterState:
    """Ideal many-body skin state: the leftmost N sites occupied."""
    if N is None:
        N = L // 2
    return fock_state(L, range(1, N + 1))


def ground_state(h: np.ndarray, N: int) -> SlaterState:
    """Fill the N lowest eigenvectors of the Hermitian matrix h."""
    h = np.asarray(h)
    if N > h.shape[0]:
        raise StateError(f"N={N} exceeds L={h.shape[0]}")
    _, vecs = np.linalg.eigh(h)
    return SlaterState(vecs[:, :N])


def random_fock_state(L: int, N: int, rng: np.random.Generator) -> SlaterState:
    """Fock state with N sites occupied uniformly at random."""
    if N > L:
        raise StateError(f"N={N} exceeds L={L}")
    sites = rng.choice(L, size=N, replace=False) + 1
    return fock_state(L, sites)


def _binary_entropy(nu: np.ndarray) -> float:
    """sum of -nu ln nu - (1-nu) ln(1-nu) with endpoint contributions = 0."""
    nu = np.clip(np.real(nu), 0.0, 1.0)
    out = 0.0
    for x in (nu, 1.0 - nu):
        mask = x > 0.0
        out -= float(np.sum(x[mask] * np.log(x[mask])))
    return out


def entanglement_entropy(state: SlaterState, subsystem) -> float:
    """Von Neumann entropy (natural log) of a site subsystem.

    Uses the eigenvalues of the restricted correlation matrix; eigenvalues
    are clipped to [0, 1] before evaluation so rounding outside the interval
    contributes exactly zero.
    """
    sites = np.asarray(sorted(set(int(s) for s in subsystem)), dtype=int)
    if sites.size == 0:
        return 0.0
    if sites[0] < 1 or sites[-1] > state.L:
        raise StateError(f"subsystem must be a subset of 1..{state.L}")
    idx = sites - 1
    # C restricted to the subsystem, via the orbitals to avoid forming full C
    V = state.U[idx, :]
    CA = V.conj() @ V.T
    return _binary_entropy(np.linalg.eigvalsh(CA))


def half_chain_entropy(state: SlaterState) -> float:
    """S_{L/2}: entropy of the left half chain."""
    return entanglement_entropy(state, range(1, state.L // 2 + 1))


def mutual_information(state: SlaterState, A, B) -> float:
    """I_AB = S_A + S_B - S_{A u B} for disjoint site sets A and B."""
    A = set(int(s) for s in A)
    B = set(int(s) for s in B)
    if A & B:
        raise StateError(f"subsystems overlap on sites {sorted(A & B)}")
    return (
        entanglement_entropy(state, A)
        + entanglement_entropy(state, B)
        - entanglement_entropy(state, A | B)
    )


def density(state: SlaterState) -> np.ndarray:
    """Site occupations <n_l>, length L, each in [0, 1]."""
    return np.einsum("ln,ln->l", state.U.conj(), state.U).real


def momentum_grid(L: int) -> np.ndarray:
    """k = 2 pi m / L for m = -L/2 .. L/2 - 1."""
    m = np.arange(-(L // 2), L - L // 2)
    return 2.0 * np.pi * m / L


def momentum_density(state: SlaterState) -> np.ndarray:
    """n_k for k on momentum_grid(L), with c_k = L^{-1/2} sum_l e^{-ikl} c_l.

    Meaningful under PBC; sum_k n_k = N.
    """
    L = state.L
    ks = momentum_grid(L)
    sites = np.arange(1, L + 1)
    # n_k = (1/L) sum_n |sum_l e^{-ikl} U_ln|^2
    phases = np.exp(-1j * np.outer(ks, sites))  # (L_k, L)
    amps = phases @ state.U  # (L_k, N)
    return np.sum(np.abs(amps) ** 2, axis=1) / L


def density_correlation(state: SlaterState, i: int, j: int) -> float:
    """Connected correlation <n_i><n_j> - <n_i n_j> = |C_ij|^2 for i != j."""
    if i == j:
        raise StateError("density_correlation requires i != j")
    cij = np.vdot(state.U[i - 1, :], state.U[j - 1, :])  # conj(U_i) . U_j = C_ij
    return float(np.abs(cij) ** 2)


def density_correlation_profile(state: SlaterState) -> np.ndarray:
    """C(l) = |C_{L/2, L/2+l}|^2 for l = 1 .. L/2, the published profile."""
    L = state.L
    i = L // 2
    row = state.U[i - 1, :].conj() @ state.U[i : 2 * (L // 2), :].T
    return np.abs(row) ** 2


def overlap(a: SlaterState, b: SlaterState) -> complex:
    """Many-body overlap <a|b> = det(U_a^dagger U_b)."""
    if a.L != b.L or a.N != b.N:
        raise StateError("overlap requires equal L and N")
    return complex(np.linalg.det(a.U.conj().T @ b.U))


def overlap_squared(a: SlaterState, b: SlaterState) -> float:
    """|<a|b>|^2 through a log-magnitude determinant (stable at large N)."""
    if a.L != b.L or a.N != b.N:
        raise StateError("overlap requires equal L and N")
    sign, logabs = np.linalg.slogdet(a.U.conj().T @ b.U)
    if sign == 0:
        return 0.0
    return float(np.exp(2.0 * logabs))


def f_skin(state: SlaterState) -> float:
    """Squared overlap with the ideal left-packed skin state (top N x N block)."""
    sign, logabs = np.linalg.slogdet(state.U[: state.N, :])
    if sign == 0:
        return 0.0
    return float(np.exp(2.0 * logabs))


def f_return(state: SlaterState, initial: SlaterState) -> float:
    """Return probability |<initial|state>|^2."""
    return overlap_squared(initial, state)
