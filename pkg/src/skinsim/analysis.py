"""Derived diagnostics: velocity, transition estimation, scaling fits, sweeps.

The mean position is x = (2/L) sum_l l <n_l> and the velocity is its exact
conditional time derivative under the jump unraveling.  All many-body
expectation values reduce to Wick contractions of the correlation matrix,
so the velocity is an equal-time functional of the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from skinsim.model import ModelSpec, build_matrices
from skinsim.state import SlaterState, correlation_matrix, momentum_grid


class AnalysisError(ValueError):
    """Invalid analysis request."""


def density_rate(state: SlaterState, spec: ModelSpec) -> np.ndarray:
    """d<n_l>/dt per site, conditioned on the current trajectory state.

    Drift part: i<H_eff^dag n_l> - i<n_l H_eff> with the three-term Wick
    expansion of <c_i^dag c_j n_l>.  Jump part per channel m with mode d_m:
    gamma * (a_m <n_l> + a_m |[d_m]_l|^2 - |(d_m^T C)_l|^2), a_m = <d_m^dag d_m>.
    The trajectory average of this quantity obeys the master equation.
    """
    mats = build_matrices(spec)
    C = correlation_matrix(state)
    n = np.real(np.diag(C))
    A = mats.h_eff
    B = A.conj().T

    # <B n_l> = C_ll * sum(B*C) - sum_i C_il (B C^T)_il + sum_i B_il C_il
    sB = np.sum(B * C)
    YB = B @ C.T
    expect_B_nl = n * sB - np.einsum("il,il->l", C, YB) + np.einsum("il,il->l", B, C)
    # <n_l A> = C_ll * sum(A*C) + sum_j A_lj C_lj - sum_i C_il (A C^T)_il
    sA = np.sum(A * C)
    YA = A @ C.T
    expect_nl_A = n * sA + np.einsum("lj,lj->l", A, C) - np.einsum("il,il->l", C, YA)

    rate = 1j * (expect_B_nl - expect_nl_A)

    gamma = spec.gamma
    if gamma > 0:
        for d in mats.d_modes:
            p = d @ C  # p_l = <d_m^dag c_l>
            a = float(np.real(d @ C @ d.conj()))
            rate += gamma * (a * n + a * np.abs(d) ** 2 - np.abs(p) ** 2)
    return np.real(rate)


def velocity_expectation(state: SlaterState, spec: ModelSpec) -> float:
    """Average velocity per particle, v = (2/L) sum_l l d<n_l>/dt."""
    sites = np.arange(1, spec.L + 1)
    return float(2.0 / spec.L * sites @ density_rate(state, spec))


@dataclass
class VelocityFit:
    """Linear fit v(t) = v0 + slope * t over the pre-transition window."""

    v0: float
    slope: float
    v0_from_slope: float
    r2: float


def fit_velocity_slope(times, v, t_window=None, L=None) -> VelocityFit:
    """Least-squares line through v(t); v0 from the intercept.

    The linear law v(t) = (1 - 2|v0| t / L) v0 ties the slope to 2 v0^2 / L,
    giving an independent estimate v0_from_slope when L is supplied.
    """
    times = np.asarray(times, dtype=float)
    v = np.asarray(v, dtype=float)
    if t_window is not None:
        lo, hi = t_window
        mask = (times >= lo) & (times <= hi)
        times, v = times[mask], v[mask]
    if times.size < 4:
        raise AnalysisError(f"velocity fit needs >= 4 points, got {times.size}")
    slope, v0 = np.polyfit(times, v, 1)
    resid = v - (v0 + slope * times)
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    v0_from_slope = math.nan
    if L is not None and slope > 0:
        v0_from_slope = math.copysign(math.sqrt(slope * L / 2.0), v0)
    return VelocityFit(v0=float(v0), slope=float(slope),
                       v0_from_slope=v0_from_slope, r2=r2)


def estimate_v0_from_pbc(n_k: np.ndarray) -> float:
    """v0 = (2/L) sum_k n_k v_k with the group velocity v_k = -2 sin k."""
    n_k = np.asarray(n_k, dtype=float)
    ks = momentum_grid(n_k.size)
    return float(2.0 / n_k.size * np.sum(n_k * (-2.0 * np.sin(ks))))


def predict_tc(v0: float) -> float:
    """Rescaled transition time t_c / L = 1 / (2 |v0|)."""
    if abs(v0) < 1e-12:
        raise AnalysisError("v0 = 0: no transport, no transition")
    return 1.0 / (2.0 * abs(v0))


def detect_transition(t_over_L, f_skin_series, threshold: float = 0.5):
    """First crossing of f_skin = 0.5 on the monotone-smoothed series.

    Returns the linearly interpolated t/L, or None if the series never
    reaches the threshold (area-law-from-start regime).
    """
    x = np.asarray(t_over_L, dtype=float)
    y = np.maximum.accumulate(np.asarray(f_skin_series, dtype=float))
    above = np.nonzero(y >= threshold)[0]
    if above.size == 0:
        return None
    j = int(above[0])
    if j == 0:
        return float(x[0])
    x0, x1, y0, y1 = x[j - 1], x[j], y[j - 1], y[j]
    if y1 == y0:
        return float(x1)
    return float(x0 + (threshold - y0) * (x1 - x0) / (y1 - y0))


def max_entropy(t_over_L, series) -> tuple[float, float]:
    """(max of the trajectory-averaged series, time at the max)."""
    series = np.asarray(series, dtype=float)
    i = int(np.argmax(series))
    return float(series[i]), float(np.asarray(t_over_L)[i])


max_mutual_information = max_entropy


@dataclass
class ScalingFit:
    """S = a ln L + b across system sizes."""

    a: float
    b: float
    r2: float
    L_values: tuple


def fit_log_scaling(L_values, S_values) -> ScalingFit:
    """Least squares of S against ln L; needs >= 3 distinct sizes."""
    L_values = np.asarray(L_values, dtype=float)
    S_values = np.asarray(S_values, dtype=float)
    if L_values.size < 3 or np.unique(L_values).size < 3:
        raise AnalysisError("log-scaling fit needs >= 3 distinct system sizes")
    x = np.log(L_values)
    a, b = np.polyfit(x, S_values, 1)
    resid = S_values - (a * x + b)
    ss_tot = float(np.sum((S_values - S_values.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(a=float(a), b=float(b), r2=r2, L_values=tuple(L_values))


@dataclass
class DecayFit:
    """Power-law vs exponential comparison of a correlation profile."""

    powerlaw_slope: float
    powerlaw_r2: float
    exponential_rate: float
    exponential_r2: float

    @property
    def better(self) -> str:
        return "powerlaw" if self.powerlaw_r2 >= self.exponential_r2 else "exponential"


def classify_decay(distances, values, floor: float = 1e-14) -> DecayFit:
    """Fit log C vs log r (power law) and log C vs r (exponential).

    `distances` is typically the chord distance (L/pi) sin(pi l / L).
    """
    r = np.asarray(distances, dtype=float)
    c = np.asarray(values, dtype=float)
    mask = (c > floor) & (r > 0)
    r, c = r[mask], c[mask]
    if r.size < 4:
        raise AnalysisError("decay classification needs >= 4 positive points")
    logc = np.log(c)

    def fit(x):
        slope, icpt = np.polyfit(x, logc, 1)
        resid = logc - (slope * x + icpt)
        ss = float(np.sum((logc - logc.mean()) ** 2))
        return float(slope), 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0

    pw_slope, pw_r2 = fit(np.log(r))
    ex_rate, ex_r2 = fit(r)
    return DecayFit(powerlaw_slope=pw_slope, powerlaw_r2=pw_r2,
                    exponential_rate=ex_rate, exponential_r2=ex_r2)


def chord_distance(L: int, l) -> np.ndarray:
    """(L/pi) sin(pi l / L), the separation used for correlation profiles."""
    l = np.asarray(l, dtype=float)
    return (L / math.pi) * np.sin(math.pi * l / L)


@dataclass
class PhaseDiagram:
    """S_{L/2}(t/L, W) matrix plus the detected transition curve."""

    W_values: np.ndarray
    t_over_L: np.ndarray
    entropy: np.ndarray  # shape (len(W), len(t))
    transition: np.ndarray  # t_c/L per W (nan when undetected)


def sweep_phase_diagram(base_spec: ModelSpec, config, W_values, n_traj: int,
                        workers: int = 1, disorder: str = "quasiperiodic",
                        point_callback=None) -> PhaseDiagram:
    """Ensemble per W value; rows accumulate in W order (deterministic).

    `point_callback(w, series)` runs after each completed W row so partial
    results can be persisted by the caller.
    """
    from skinsim.engine import run_ensemble

    rows = []
    tcs = []
    t_over_L = None
    for w in W_values:
        spec = replace(base_spec, W=float(w), disorder=disorder if w != 0 else "none")
        series = run_ensemble(spec, config, "neel", n_traj=n_traj, workers=workers)
        t_over_L = series.t_over_L
        rows.append(series.mean["entropy"])
        tc = detect_transition(series.t_over_L, series.mean["f_skin"])
        tcs.append(math.nan if tc is None else tc)
        if point_callback is not None:
            point_callback(float(w), series)
    return PhaseDiagram(
        W_values=np.asarray(W_values, dtype=float),
        t_over_L=t_over_L,
        entropy=np.array(rows),
        transition=np.array(tcs),
    )
