"""Independent brute-force oracles used only by the tests.

Everything here works on the full 2^L Fock space with dense numpy arrays and
is written independently of the package's Gaussian machinery: basis states
are bitmasks with bit (i-1) = site i, ordered by creation operators acting in
ascending site order.
"""

from __future__ import annotations

import numpy as np


def parity_below(mask: int, site0: int) -> int:
    return -1 if bin(mask & ((1 << site0) - 1)).count("1") % 2 else 1


def annihilation_matrix(L: int, site: int) -> np.ndarray:
    """c_site (1-based) on the full 2^L space."""
    dim = 1 << L
    out = np.zeros((dim, dim))
    b = site - 1
    for m in range(dim):
        if (m >> b) & 1:
            out[m & ~(1 << b), m] = parity_below(m, b)
    return out


def quadratic_many_body(A: np.ndarray) -> np.ndarray:
    """sum_ij A_ij c_i^dag c_j on the full Fock space."""
    L = A.shape[0]
    cs = [annihilation_matrix(L, i + 1) for i in range(L)]
    out = np.zeros((1 << L, 1 << L), dtype=complex)
    for i in range(L):
        for j in range(L):
            if A[i, j] != 0:
                out += A[i, j] * (cs[i].T @ cs[j])
    return out


def number_diag(L: int, site: int) -> np.ndarray:
    """Diagonal of n_site over the 2^L basis."""
    b = site - 1
    return np.array([(m >> b) & 1 for m in range(1 << L)], dtype=float)


def jump_operator(L: int, l: int, theta: float) -> np.ndarray:
    """L_l = exp(i theta n_{l+1}) d_l^dag d_l on the full Fock space."""
    d = np.zeros(L, dtype=complex)
    d[l - 1] = 1 / np.sqrt(2)
    d[l % L] = -1j / np.sqrt(2)
    nd = quadratic_many_body(np.outer(d, d.conj()))
    phase_site = l % L + 1  # site l+1 with PBC wraparound
    phase = np.exp(1j * theta * number_diag(L, phase_site))
    return phase[:, None] * nd


def slater_to_statevector(U: np.ndarray) -> np.ndarray:
    """Amplitudes of prod_n (sum_i U_in c_i^dag) |0> over the 2^L basis."""
    L, N = U.shape
    psi = np.zeros(1 << L, dtype=complex)
    for m in range(1 << L):
        sites = [i for i in range(L) if (m >> i) & 1]
        if len(sites) != N:
            continue
        psi[m] = np.linalg.det(U[sites, :])
    return psi


def statevector_density(psi: np.ndarray, L: int) -> np.ndarray:
    probs = np.abs(psi) ** 2
    return np.array([probs @ number_diag(L, i + 1) for i in range(L)])


def statevector_pair_density(psi: np.ndarray, L: int, i: int, j: int) -> float:
    probs = np.abs(psi) ** 2
    return float(probs @ (number_diag(L, i) * number_diag(L, j)))


def statevector_correlation(psi: np.ndarray, L: int, i: int, j: int) -> complex:
    """<c_i^dag c_j> (1-based sites)."""
    ci = annihilation_matrix(L, i)
    cj = annihilation_matrix(L, j)
    return complex(psi.conj() @ (ci.T @ cj) @ psi)


def reduced_density_matrix(psi: np.ndarray, L: int, sites) -> np.ndarray:
    """rho_A for an arbitrary 1-based site subset, tracing fermion modes.

    Valid for number-conserving states: matrix elements are grouped by the
    environment configuration, with Jordan-Wigner-type reordering signs from
    moving subsystem modes in front of environment modes.
    """
    sites = sorted(int(s) - 1 for s in sites)
    rest = [i for i in range(L) if i not in sites]
    dA, dB = 1 << len(sites), 1 << len(rest)
    rho = np.zeros((dA, dA), dtype=complex)
    amp = np.zeros((dA, dB), dtype=complex)
    for m in range(1 << L):
        if psi[m] == 0:
            continue
        a = sum(((m >> s) & 1) << k for k, s in enumerate(sites))
        b = sum(((m >> r) & 1) << k for k, r in enumerate(rest))
        # sign of reordering c^dag string into (subsystem block)(rest block)
        sign = 1
        seen_rest = 0
        for i in range(L - 1, -1, -1):
            if not (m >> i) & 1:
                continue
            if i in sites:
                if seen_rest % 2:
                    sign = -sign
            else:
                seen_rest += 1
        amp[a, b] = sign * psi[m]
    rho = amp @ amp.conj().T
    return rho


def statevector_entropy(psi: np.ndarray, L: int, sites) -> float:
    rho = reduced_density_matrix(psi, L, sites)
    nu = np.clip(np.linalg.eigvalsh(rho), 0.0, 1.0)
    nu = nu[nu > 1e-14]
    return float(-np.sum(nu * np.log(nu)))


class FockTrajectory:
    """Statevector quantum-jump integrator mirroring the engine's RNG usage.

    Per step: draw one uniform per channel (ascending) against the pre-step
    jump expectations, evolve by exp(-i H_eff dt) with renormalization, then
    apply the fired jumps in ascending order.
    """

    def __init__(self, L, h_eff, theta, gamma, n_bonds, dt):
        from scipy.linalg import expm

        self.L = L
        self.gamma = gamma
        self.dt = dt
        self.h_eff_mb = quadratic_many_body(h_eff)
        self.K = expm(-1j * self.h_eff_mb * dt)
        self.jumps = [jump_operator(L, l, theta) for l in range(1, n_bonds + 1)]
        self.ntot = [J.conj().T @ J for J in self.jumps]

    def step(self, psi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        fired = []
        for m, NN in enumerate(self.ntot):
            prob = self.gamma * self.dt * float(np.real(psi.conj() @ NN @ psi))
            if rng.random() < prob:
                fired.append(m)
        psi = self.K @ psi
        psi = psi / np.linalg.norm(psi)
        for m in fired:
            psi = self.jumps[m] @ psi
            nrm = np.linalg.norm(psi)
            if nrm < 1e-12:
                raise RuntimeError(f"zero-amplitude oracle jump on channel {m + 1}")
            psi = psi / nrm
        return psi


def lindblad_rhs(rho, h_eff_mb, jump_mbs, gamma):
    """drho/dt = -i H_eff rho + i rho H_eff^dag + gamma sum L rho L^dag."""
    out = -1j * (h_eff_mb @ rho) + 1j * (rho @ h_eff_mb.conj().T)
    for J in jump_mbs:
        out += gamma * (J @ rho @ J.conj().T)
    return out
