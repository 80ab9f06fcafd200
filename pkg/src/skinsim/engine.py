"""Quantum-jump integration of the monitored chain.

One finite time step of size dt consists of

1. non-Hermitian evolution  U <- qr(exp(-i h_eff dt) U),
2. for each bond channel l (ascending) one Bernoulli draw with probability
   gamma * dt * <d_l^dagger d_l> evaluated on the *pre-step* state,
3. application of the fired jumps L_l = exp(i theta n_{l+1}) d_l^dagger d_l
   to the evolved state, in ascending channel order, each followed by a
   re-orthonormalizing QR.

Trajectories are deterministic functions of (seed, trajectory_index): each
trajectory owns a counter-based Philox stream keyed by both, and channels
consume exactly one uniform variate per step in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from skinsim.model import ModelSpec, build_matrices
from skinsim.state import (
    SlaterState,
    density,
    density_correlation_profile,
    f_return,
    f_skin,
    half_chain_entropy,
    momentum_density,
    neel_state,
    random_fock_state,
    ground_state,
)

OBSERVABLE_NAMES = (
    "entropy",
    "density",
    "f_skin",
    "f_r",
    "correlation",
    "velocity",
    "momentum",
)

DEFAULT_OBSERVABLES = ("entropy", "density", "f_skin", "f_r")

RANK_TOL = 1e-12
AMPLITUDE_TOL = 1e-12
MAX_GAMMA_DT = 0.5


class EngineError(RuntimeError):
    """Numerical failure during trajectory integration."""

    def __init__(self, message, t=None, trajectory_index=None):
        if t is not None:
            message = f"{message} (t={t:g})"
        if trajectory_index is not None:
            message = f"{message} [trajectory {trajectory_index}]"
        super().__init__(message)
        self.t = t
        self.trajectory_index = trajectory_index


@dataclass(frozen=True)
class EngineConfig:
    """Integration parameters.

    record_every is the number of dt-steps between observable snapshots;
    None picks ~100 evenly spaced records over [0, t_max].
    """

    t_max: float
    dt: float = 0.05
    record_every: int | None = None
    seed: int = 0
    observables: tuple = DEFAULT_OBSERVABLES

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_max < 0:
            raise ValueError(f"t_max must be >= 0, got {self.t_max}")
        unknown = set(self.observables) - set(OBSERVABLE_NAMES)
        if unknown:
            raise ValueError(f"unknown observables: {sorted(unknown)}")
        object.__setattr__(self, "observables", tuple(self.observables))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def record_stride(self) -> int:
        if self.record_every is not None:
            if self.record_every < 1:
                raise ValueError("record_every must be >= 1")
            return self.record_every
        return max(1, self.n_steps // 100)


@dataclass
class TrajectoryRecord:
    """Observable snapshot at one recorded time."""

    t: float
    jump_count: int
    values: dict = field(default_factory=dict)


def trajectory_rng(seed: int, trajectory_index: int) -> np.random.Generator:
    """Independent counter-based stream for one trajectory."""
    key = np.array([np.uint64(seed), np.uint64(trajectory_index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def make_propagator(h_eff: np.ndarray, dt: float) -> np.ndarray:
    """K = exp(-i h_eff dt); a contraction thanks to dissipativity."""
    K = expm(-1j * np.asarray(h_eff) * dt)
    if not np.all(np.isfinite(K)):
        raise EngineError("matrix exponential did not converge")
    return K


def nonhermitian_step(state: SlaterState, K: np.ndarray) -> SlaterState:
    """One no-click step: QR re-orthonormalization of K @ U."""
    Q, R = np.linalg.qr(K @ state.U)
    rdiag = np.abs(np.diag(R))
    if rdiag.min() <= RANK_TOL * max(rdiag.max(), 1.0):
        raise EngineError("rank-deficient state after non-Hermitian step")
    return SlaterState(Q)


def _mode_overlaps(U: np.ndarray, n_bonds: int) -> np.ndarray:
    """g[l, n] = <d_{l+1} | column n of U> for every bond, vectorized.

    Exploits the two-site support of the modes:
    g_l = (U[l, :] + i U[l+1, :]) / sqrt(2)  (conjugated mode amplitudes).
    """
    L = U.shape[0]
    rows_a = U[:n_bonds, :]
    rows_b = U[np.arange(1, n_bonds + 1) % L, :]
    return (rows_a + 1j * rows_b) / math.sqrt(2.0)


def jump_expectations(state: SlaterState, d_modes) -> np.ndarray:
    """<d_l^dagger d_l> per channel: squared norm of the orbital overlaps."""
    g = _mode_overlaps(state.U, len(d_modes))
    return np.einsum("ln,ln->l", g.conj(), g).real


def sample_jumps(state: SlaterState, spec: ModelSpec, dt: float,
                 rng: np.random.Generator) -> list[int]:
    """Channels (1-based bond labels) that fire in this step.

    One uniform variate is always consumed per channel, in ascending order,
    so the stream position is independent of the outcomes.
    """
    d_modes = build_matrices(spec).d_modes
    expect = jump_expectations(state, d_modes)
    probs = np.clip(spec.gamma * dt * expect, 0.0, 1.0)
    draws = rng.random(len(d_modes))
    return [m + 1 for m in range(len(d_modes)) if draws[m] < probs[m]]


def _jump_transform(V: np.ndarray, spec: ModelSpec, l: int) -> np.ndarray:
    """Column elimination + feedback phase for one jump, on the ray matrix.

    Works on any (not necessarily orthonormal) column representation of the
    Slater state, so several jumps can be chained and re-orthonormalized by a
    single QR.  Column pivoting on the largest orbital overlap keeps the
    elimination stable when the first overlap happens to vanish.

    Returns None when the state has no amplitude in the d_l mode (within
    AMPLITUDE_TOL), i.e. L_l annihilates it.  A drawn jump in that situation
    carries probability mass at most gamma*dt*tol^2 — it can only arise from
    an earlier jump in the same step or from a vanishing pre-step occupation —
    so the caller drops it rather than producing a zero state.
    """
    if not 1 <= l <= spec.n_bonds:
        raise EngineError(f"jump channel {l} outside 1..{spec.n_bonds}")
    site_a, site_b = l - 1, l % spec.L  # 0-based sites l, l+1
    g = (V[site_a, :] + 1j * V[site_b, :]) / math.sqrt(2.0)
    pivot = int(np.argmax(np.abs(g)))
    if np.abs(g[pivot]) <= AMPLITUDE_TOL:
        return None
    V = V - np.outer(V[:, pivot], g / g[pivot])
    V[:, pivot] = 0.0
    V[site_a, pivot] = 1.0 / math.sqrt(2.0)
    V[site_b, pivot] = -1j / math.sqrt(2.0)
    V[site_b, :] *= np.exp(1j * spec.theta)  # feedback phase on site l+1
    return V


def _orthonormalize(V: np.ndarray, context: str) -> SlaterState:
    Q, R = np.linalg.qr(V)
    rdiag = np.abs(np.diag(R))
    if rdiag.min() <= RANK_TOL * max(rdiag.max(), 1.0):
        raise EngineError(f"rank-deficient state after {context}")
    return SlaterState(Q)


def apply_jump(state: SlaterState, spec: ModelSpec, l: int) -> SlaterState:
    """Apply L_l = exp(i theta n_{l+1}) d_l^dagger d_l and renormalize."""
    V = _jump_transform(state.U, spec, l)
    if V is None:
        raise EngineError(f"zero-amplitude jump on channel {l}")
    return _orthonormalize(V, f"jump on channel {l}")


def measure(state: SlaterState, spec: ModelSpec, observables,
            initial: SlaterState | None = None) -> dict:
    """Evaluate the configured observables on one state."""
    values = {}
    for name in observables:
        if name == "entropy":
            values["entropy"] = half_chain_entropy(state)
        elif name == "density":
            values["density"] = density(state)
        elif name == "f_skin":
            values["f_skin"] = f_skin(state)
        elif name == "f_r":
            if initial is None:
                raise EngineError("f_r requires the initial state")
            values["f_r"] = f_return(state, initial)
        elif name == "correlation":
            values["correlation"] = density_correlation_profile(state)
        elif name == "velocity":
            from skinsim.analysis import velocity_expectation

            values["velocity"] = velocity_expectation(state, spec)
        elif name == "momentum":
            values["momentum"] = momentum_density(state)
    return values


def initial_state(kind, spec: ModelSpec, rng: np.random.Generator) -> SlaterState:
    """Resolve an initial-state request: a SlaterState or a named recipe."""
    if isinstance(kind, SlaterState):
        return kind
    if kind == "neel":
        return neel_state(spec.L)
    if kind == "ground":
        return ground_state(build_matrices(spec).h, spec.L // 2)
    if kind == "random_fock":
        return random_fock_state(spec.L, spec.L // 2, rng)
    raise EngineError(f"unknown initial state {kind!r}")


def run_trajectory(spec: ModelSpec, config: EngineConfig, initial="neel",
                   trajectory_index: int = 0) -> list[TrajectoryRecord]:
    """Integrate one trajectory; deterministic in (seed, trajectory_index).

    The uniform-disorder realization, the initial random Fock state (when
    requested) and all jump draws derive from the per-trajectory stream.
    """
    spec = spec.with_trajectory_disorder(trajectory_index)
    if spec.gamma * config.dt > MAX_GAMMA_DT:
        raise EngineError(
            f"gamma*dt = {spec.gamma * config.dt:g} exceeds {MAX_GAMMA_DT}; reduce dt",
            t=0.0, trajectory_index=trajectory_index,
        )
    rng = trajectory_rng(config.seed, trajectory_index)
    psi0 = initial_state(initial, spec, rng)
    psi = psi0

    matrices = build_matrices(spec)
    K = make_propagator(matrices.h_eff, config.dt)
    stride = config.record_stride
    n_steps = config.n_steps

    n_bonds = spec.n_bonds
    gamma_dt = spec.gamma * config.dt

    records = [TrajectoryRecord(0.0, 0, measure(psi, spec, config.observables, psi0))]
    jump_count = 0
    for step in range(1, n_steps + 1):
        t = step * config.dt
        try:
            # probabilities from the pre-step state, one uniform per channel
            g = _mode_overlaps(psi.U, n_bonds)
            probs = np.clip(gamma_dt * np.einsum("ln,ln->l", g.conj(), g).real, 0.0, 1.0)
            draws = rng.random(n_bonds)
            V = K @ psi.U
            for m in np.nonzero(draws < probs)[0]:
                Vj = _jump_transform(V, spec, int(m) + 1)
                if Vj is None:
                    continue
                V = Vj
                jump_count += 1
            psi = _orthonormalize(V, "step")
        except EngineError as err:
            raise EngineError(str(err), t=t, trajectory_index=trajectory_index) from err
        if step % stride == 0 or step == n_steps:
            records.append(
                TrajectoryRecord(t, jump_count, measure(psi, spec, config.observables, psi0))
            )
    return records


@dataclass
class EnsembleSeries:
    """Trajectory-averaged observable series with standard errors."""

    times: np.ndarray
    t_over_L: np.ndarray
    mean: dict
    se: dict
    n_trajectories: int


def _trajectory_arrays(records: list[TrajectoryRecord]) -> dict:
    """Stack one trajectory's records into {name: (T,) or (T, L) arrays}."""
    out = {}
    for name in records[0].values:
        out[name] = np.array([r.values[name] for r in records])
    out["jump_count"] = np.array([float(r.jump_count) for r in records])
    return out


def _run_one(args):
    spec, config, initial, index = args
    return _trajectory_arrays(run_trajectory(spec, config, initial, index))


def run_ensemble(spec: ModelSpec, config: EngineConfig, initial="neel",
                 n_traj: int = 1, workers: int = 1) -> EnsembleSeries:
    """Trajectory ensemble with a worker-count-independent reduction.

    Accumulation happens in trajectory-index order whatever the worker count,
    so the output is bit-identical for any `workers`.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    tasks = [(spec, config, initial, i) for i in range(n_traj)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_run_one, tasks, chunksize=max(1, n_traj // (4 * workers)))
            return _reduce(spec, config, results, n_traj)
    return _reduce(spec, config, map(_run_one, tasks), n_traj)


def _reduce(spec, config, results, n_traj) -> EnsembleSeries:
    acc = None
    acc_sq = None
    times = None
    for arrays in results:
        if acc is None:
            acc = {k: np.array(v) for k, v in arrays.items()}
            acc_sq = {k: np.array(v) ** 2 for k, v in arrays.items()}
        else:
            for k, v in arrays.items():
                acc[k] += v
                acc_sq[k] += v**2
    stride = config.record_stride
    n_steps = config.n_steps
    steps = [0] + [s for s in range(stride, n_steps + 1, stride)]
    if n_steps > 0 and steps[-1] != n_steps:
        steps.append(n_steps)
    times = np.array(steps, dtype=float) * config.dt
    mean = {k: v / n_traj for k, v in acc.items()}
    se = {}
    for k in acc:
        if n_traj > 1:
            var = (acc_sq[k] - n_traj * mean[k] ** 2) / (n_traj - 1)
            se[k] = np.sqrt(np.clip(var, 0.0, None) / n_traj)
        else:
            se[k] = np.zeros_like(np.real(mean[k]))
    return EnsembleSeries(
        times=times,
        t_over_L=times / spec.L,
        mean=mean,
        se=se,
        n_trajectories=n_traj,
    )
