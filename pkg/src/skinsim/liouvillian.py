"""Exact Lindbladian for small chains, restricted to one particle-number sector.

The Hamiltonian and every jump operator conserve particle number, so the
N-particle diagonal block of the density matrix is closed under

    drho/dt = -i H_eff rho + i rho H_eff^dag + gamma sum_m L_m rho L_m^dag.

Fock states are bitmasks (bit i-1 = site i occupied), ordered ascending; this
fixes the vectorization layout.  Vectorization is column-stacking, so
vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from skinsim.model import ModelSpec, build_matrices

SECTOR_DIM_LIMIT = 260  # D <= C(10,5) = 252 at half filling


class LiouvillianError(RuntimeError):
    """Oversize sector or degenerate steady state."""


def sector_basis(L: int, N: int) -> np.ndarray:
    """All N-particle bitmasks on L sites, ascending."""
    masks = [sum(1 << i for i in sites) for sites in combinations(range(L), N)]
    return np.array(sorted(masks), dtype=np.int64)


def _parity_below(mask: int, site: int) -> int:
    """(-1)^(number of occupied sites below `site`)."""
    return -1 if bin(mask & ((1 << site) - 1)).count("1") % 2 else 1


def quadratic_operator(kernel: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Sector matrix of sum_ij kernel_ij c_i^dag c_j."""
    index = {int(m): a for a, m in enumerate(basis)}
    D = len(basis)
    L = kernel.shape[0]
    out = np.zeros((D, D), dtype=complex)
    nz = np.argwhere(np.abs(kernel) > 0)
    for b, mask in enumerate(basis):
        mask = int(mask)
        for i, j in nz:
            i, j = int(i), int(j)
            if not (mask >> j) & 1:
                continue
            sign = _parity_below(mask, j)
            m2 = mask & ~(1 << j)
            if (m2 >> i) & 1:
                continue
            sign *= _parity_below(m2, i)
            out[index[m2 | (1 << i)], b] += sign * kernel[i, j]
    return out


def number_operator_diagonals(basis: np.ndarray, L: int) -> np.ndarray:
    """occ[a, l] = occupation of site l+1 in basis state a."""
    occ = np.zeros((len(basis), L))
    for a, mask in enumerate(basis):
        for l in range(L):
            occ[a, l] = (int(mask) >> l) & 1
    return occ


@dataclass
class LiouvillianSector:
    """Dense superoperator on the N-particle coherence block."""

    spec: ModelSpec
    N: int
    basis: np.ndarray
    h_eff_mb: np.ndarray
    jump_ops: list
    M: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    # eigendecomposition cache (computed on demand, reused by consumers);
    # _vals caches the values-only path used by `spectrum`
    _eig: tuple | None = None
    _vals: np.ndarray | None = None

    def eig(self):
        if self._eig is None:
            vals, vecs = np.linalg.eig(self.M)
            self._eig = (vals, vecs)
        return self._eig


def build_sector(spec: ModelSpec, N: int) -> LiouvillianSector:
    """Assemble the dense sector superoperator; rejects oversize sectors."""
    D = comb(spec.L, N)
    if D > SECTOR_DIM_LIMIT:
        raise LiouvillianError(
            f"sector dimension D = C({spec.L},{N}) = {D} exceeds the dense "
            f"limit {SECTOR_DIM_LIMIT} (superoperator would be {D*D} x {D*D})"
        )
    mats = build_matrices(spec)
    basis = sector_basis(spec.L, N)
    occ = number_operator_diagonals(basis, spec.L)

    h_eff_mb = quadratic_operator(mats.h_eff, basis)
    jump_ops = []
    for l, d in enumerate(mats.d_modes):
        nd = quadratic_operator(np.outer(d, d.conj()), basis)
        phase_site = (l + 1) % spec.L  # 0-based site l+1
        phase = np.exp(1j * spec.theta * occ[:, phase_site])
        jump_ops.append(phase[:, None] * nd)

    eye = np.eye(D)
    M = -1j * np.kron(eye, h_eff_mb) + 1j * np.kron(h_eff_mb.conj(), eye)
    for Lm in jump_ops:
        M += spec.gamma * np.kron(Lm.conj(), Lm)
    return LiouvillianSector(spec=spec, N=N, basis=basis, h_eff_mb=h_eff_mb,
                             jump_ops=jump_ops, M=M)


def spectrum(sector: LiouvillianSector) -> np.ndarray:
    """All D^2 eigenvalues of the sector superoperator.

    Computed without eigenvectors (several times cheaper for the larger
    sectors) unless a full eigendecomposition is already cached.
    """
    if sector._eig is not None:
        return sector._eig[0]
    if sector._vals is None:
        sector._vals = np.linalg.eigvals(sector.M)
    return sector._vals


def steady_state(sector: LiouvillianSector, residual_tol: float = 1e-8) -> np.ndarray:
    """Normalized steady-state density matrix.

    Solves M vec(rho) = 0 with the trace pinned to one as a bordered
    least-squares system -- no eigendecomposition needed.  Assumes the
    steady state is unique (check via `spectrum` when in doubt); a large
    residual flags a defective or degenerate kernel.
    """
    D = sector.dim
    trace_row = np.eye(D, dtype=complex).reshape(1, D * D, order="F")
    A = np.vstack([sector.M, trace_row])
    b = np.zeros(D * D + 1, dtype=complex)
    b[-1] = 1.0
    v, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = np.linalg.norm(sector.M @ v)
    if residual > residual_tol * max(np.linalg.norm(v), 1.0):
        raise LiouvillianError(
            f"steady-state solve left residual {residual:.3e}; "
            "kernel may be degenerate"
        )
    rho = v.reshape((D, D), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def neel_density_matrix(sector: LiouvillianSector) -> np.ndarray:
    """Projector onto the Neel Fock state (even sites occupied)."""
    L = sector.spec.L
    mask = sum(1 << (site - 1) for site in range(2, L + 1, 2))
    a = int(np.searchsorted(sector.basis, mask))
    if a >= sector.dim or sector.basis[a] != mask:
        raise LiouvillianError("Neel state is outside this sector")
    rho = np.zeros((sector.dim, sector.dim), dtype=complex)
    rho[a, a] = 1.0
    return rho


def evolve_density(sector: LiouvillianSector, rho0: np.ndarray, times,
                   cond_limit: float = 1e10):
    """rho(t) on a time grid via the eigendecomposition expansion.

    Falls back to exponential-integrator stepping when the eigenbasis is
    ill-conditioned; the fallback is reported in the returned flag.

    Returns (list of density matrices, used_fallback).
    """
    times = np.asarray(times, dtype=float)
    D = sector.dim
    v0 = np.asarray(rho0, dtype=complex).reshape(D * D, order="F")
    vals, vecs = sector.eig()
    used_fallback = False
    try:
        cond = np.linalg.cond(vecs)
    except np.linalg.LinAlgError:
        cond = np.inf
    if np.isfinite(cond) and cond < cond_limit:
        coeff = np.linalg.solve(vecs, v0)
        rhos = []
        for t in times:
            vt = vecs @ (coeff * np.exp(vals * t))
            rhos.append(vt.reshape((D, D), order="F"))
    else:
        used_fallback = True
        from scipy.sparse.linalg import expm_multiply

        rhos = []
        v = v0.copy()
        t_prev = 0.0
        for t in times:
            if t > t_prev:
                v = expm_multiply(sector.M * (t - t_prev), v)
                t_prev = t
            rhos.append(v.reshape((D, D), order="F"))
    return rhos, used_fallback


def site_densities(sector: LiouvillianSector, rho: np.ndarray) -> np.ndarray:
    """<n_l> = Tr(rho n_l) for l = 1..L."""
    occ = number_operator_diagonals(sector.basis, sector.spec.L)
    return np.real(np.diag(rho)) @ occ


def pair_density(sector: LiouvillianSector, rho: np.ndarray, i: int, j: int) -> float:
    """<n_i n_j> (1-based sites)."""
    occ = number_operator_diagonals(sector.basis, sector.spec.L)
    return float(np.real(np.diag(rho)) @ (occ[:, i - 1] * occ[:, j - 1]))
