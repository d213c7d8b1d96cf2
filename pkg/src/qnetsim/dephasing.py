"""Monte Carlo model of nuclear-spin dephasing under repeated link attempts.

Each remote-entanglement attempt leaves the electron in a spin level s in
{-1, 0, +1} for a sequence of timed segments; a nuclear spin coupled at
angular frequency ``a_par`` picks up phase a_par * s * dt per segment.
Phases are tracked relative to the s = 0 level (the difference frame), so
a trial whose electron never leaves |0> contributes exactly zero; any
common-mode frame shift is removed again by the mean-phase subtraction in
the fidelity reduction, which is what the frame-shift invariance check
exercises.

Every trial consumes exactly six uniforms in a fixed order - initialisation,
MW branch, optical branch, echo branch, reset branch, reset time - whether
or not the branch is taken. That makes one sample's trajectory a pure
function of its generator, and lets the vectorized ensemble replay the
scalar reference stream bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

__all__ = [
    "DephasingConfig",
    "DephasingCurve",
    "EchoGrid",
    "SingleExponentialReset",
    "TwoTimescaleReset",
    "curve_from_phases",
    "decay_constant",
    "echo_config",
    "no_echo_config",
    "run_ensemble",
    "run_trial",
    "sample_initial_state",
    "sample_reset_time",
    "sweep_echo_grid",
]


@dataclass(frozen=True)
class TwoTimescaleReset:
    """Electron repump time as a mixture of two exponentials.

    The weights are the saturation amplitudes of the two components; a
    draw picks the fast branch with probability wf / (wf + ws) and then
    samples that branch's exponential.
    """

    weight_fast: float = 0.480
    tau_fast: float = 142e-9
    weight_slow: float = 0.503
    tau_slow: float = 905e-9

    def __post_init__(self) -> None:
        for name in ("weight_fast", "tau_fast", "weight_slow", "tau_slow"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def fast_fraction(self) -> float:
        return self.weight_fast / (self.weight_fast + self.weight_slow)

    @property
    def mean(self) -> float:
        f = self.fast_fraction
        return f * self.tau_fast + (1.0 - f) * self.tau_slow

    def time_from_uniforms(self, u_branch, u_time):
        tau = np.where(u_branch < self.fast_fraction, self.tau_fast, self.tau_slow)
        return -tau * np.log1p(-u_time)


@dataclass(frozen=True)
class SingleExponentialReset:
    """Plain exponential repump model with the given mean."""

    mean_time: float = 200e-9

    def __post_init__(self) -> None:
        if self.mean_time <= 0.0:
            raise ValueError("mean_time must be positive")

    @property
    def mean(self) -> float:
        return self.mean_time

    def time_from_uniforms(self, u_branch, u_time):
        # u_branch is consumed by the caller regardless, keeping the
        # per-trial draw layout identical across reset models
        return -self.mean_time * np.log1p(-u_time)


ResetModel = Union[TwoTimescaleReset, SingleExponentialReset]


def sample_reset_time(model: ResetModel, rng: np.random.Generator) -> float:
    """Draw one repump duration (two uniforms: branch, time)."""
    u_branch, u_time = rng.random(2)
    return float(model.time_from_uniforms(u_branch, u_time))


def sample_initial_state(p_init: float, rng: np.random.Generator) -> int:
    """Electron level after initialisation: 0, or -1/+1 with p_init/2 each."""
    if not 0.0 <= p_init <= 1.0:
        raise ValueError(f"p_init={p_init} outside [0, 1]")
    u = rng.random()
    if u < p_init / 2.0:
        return -1
    if u < p_init:
        return 1
    return 0


@dataclass(frozen=True)
class DephasingConfig:
    """Parameters of one attempt sequence.

    ``p_mw`` may be omitted when ``alpha`` (the MW rotation angle) is
    given, in which case p_mw = sin^2(alpha / 2). ``p_echo`` is the echo
    pulse's failure probability: the refocusing flip happens when the
    uniform draw exceeds it. In the echo variant the second free half is
    shortened by the mean repump time so that half plus reset averages to
    t_b / 2.
    """

    a_par: float
    t_a: float
    t_b: float
    p_init: float
    p_opt: float
    reset_model: ResetModel
    n_trials: int
    n_samples: int
    echo_enabled: bool = False
    p_echo: float = 0.0
    p_mw: float | None = None
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.p_mw is None:
            if self.alpha is None:
                raise ValueError("give p_mw or alpha")
            object.__setattr__(self, "p_mw", math.sin(self.alpha / 2.0) ** 2)
        for name in ("p_init", "p_opt", "p_echo", "p_mw"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.t_a < 0.0 or self.t_b < 0.0:
            raise ValueError("segment times must be non-negative")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if self.echo_enabled and self.t_b / 2.0 < self.reset_model.mean:
            raise ValueError("echo variant needs t_b/2 >= mean reset time")


def no_echo_config(n_trials: int = 1_000_000, n_samples: int = 4000) -> DephasingConfig:
    """Bare attempt sequence at the hardware's operating point."""
    return DephasingConfig(
        a_par=2.0 * math.pi * 80.0,
        t_a=6.1e-6,
        t_b=2.4e-6,
        p_init=0.03,
        p_opt=0.01,
        reset_model=TwoTimescaleReset(),
        n_trials=n_trials,
        n_samples=n_samples,
        p_mw=0.5,
    )


def echo_config(n_trials: int = 1_000_000, n_samples: int = 1000) -> DephasingConfig:
    """Attempt sequence with the refocusing pulse and 1% operation errors."""
    return DephasingConfig(
        a_par=2.0 * math.pi * 80.0,
        t_a=5.1e-6,
        t_b=1.3e-6,
        p_init=0.01,
        p_opt=0.01,
        reset_model=SingleExponentialReset(200e-9),
        n_trials=n_trials,
        n_samples=n_samples,
        echo_enabled=True,
        p_echo=0.01,
        p_mw=0.5,
    )


def run_trial(config: DephasingConfig, rng: np.random.Generator) -> float:
    """Phase one attempt adds, in radians. Reference scalar implementation."""
    u_init, u_mw, u_opt, u_echo, u_rb, u_rt = rng.random(6)
    a = config.a_par

    if u_init < config.p_init / 2.0:
        s = -1
    elif u_init < config.p_init:
        s = 1
    else:
        s = 0
    phase = a * config.t_a * s

    # the MW pulse addresses the 0 <-> -1 transition only
    if s != 1 and u_mw < config.p_mw:
        s = -1 - s
    if s == 0 and u_opt < config.p_opt:
        s = -1 if u_opt < config.p_opt / 2.0 else 1

    if config.echo_enabled:
        half = config.t_b / 2.0
        phase += a * half * s
        if s != 1 and u_echo > config.p_echo:
            s = -1 - s
        phase += a * (half - config.reset_model.mean) * s
    else:
        phase += a * config.t_b * s

    if s != 0:
        t_c = float(config.reset_model.time_from_uniforms(u_rb, u_rt))
        phase += a * s * t_c
    return phase


def _phases_from_uniforms(config: DephasingConfig, u: np.ndarray) -> np.ndarray:
    """Vectorized twin of run_trial over u of shape (n, 6)."""
    a = config.a_par
    s = np.where(u[:, 0] < config.p_init / 2.0, -1, 0)
    s = np.where((u[:, 0] >= config.p_init / 2.0) & (u[:, 0] < config.p_init), 1, s)
    phase = a * config.t_a * s

    flip = (s != 1) & (u[:, 1] < config.p_mw)
    s = np.where(flip, -1 - s, s)
    was_zero = s == 0
    s = np.where(was_zero & (u[:, 2] < config.p_opt / 2.0), -1, s)
    s = np.where(
        was_zero & (u[:, 2] >= config.p_opt / 2.0) & (u[:, 2] < config.p_opt), 1, s
    )

    if config.echo_enabled:
        half = config.t_b / 2.0
        phase = phase + a * half * s
        eflip = (s != 1) & (u[:, 3] > config.p_echo)
        s = np.where(eflip, -1 - s, s)
        phase = phase + a * (half - config.reset_model.mean) * s
    else:
        phase = phase + a * config.t_b * s

    t_c = config.reset_model.time_from_uniforms(u[:, 4], u[:, 5])
    return phase + a * s * t_c * (s != 0)


@dataclass(frozen=True)
class DephasingCurve:
    """Mean fidelity after each attempt, with its standard error."""

    fidelity: np.ndarray
    stderr: np.ndarray
    n_samples: int

    @property
    def trials(self) -> np.ndarray:
        return np.arange(1, self.fidelity.size + 1)

    @property
    def mean_cos(self) -> np.ndarray:
        return 2.0 * self.fidelity - 1.0


def curve_from_phases(phases: np.ndarray) -> DephasingCurve:
    """Reduce explicit cumulative phase trajectories, indexed (trial, sample).

    F(n) = mean over samples of 1/2 + 1/2 cos(Phi_nk - mean_k Phi_nk); the
    subtraction makes the result blind to any phase offset shared by all
    samples at a given n.
    """
    if phases.ndim != 2 or phases.shape[1] < 2:
        raise ValueError("phases must be (n_trials, n_samples>=2)")
    centered = phases - phases.mean(axis=1, keepdims=True)
    per_sample = 0.5 + 0.5 * np.cos(centered)
    k = phases.shape[1]
    return DephasingCurve(
        fidelity=per_sample.mean(axis=1),
        stderr=per_sample.std(axis=1, ddof=1) / math.sqrt(k),
        n_samples=k,
    )


_TRIAL_CHUNK = 1 << 17


def run_ensemble(config: DephasingConfig, rng: np.random.Generator) -> DephasingCurve:
    """Fidelity curve over n_trials attempts, averaged over n_samples walkers.

    Each sample runs on its own spawned generator (so samples could be
    farmed out without changing the result) and contributes running sums
    of Phi, e^(i Phi) and e^(2i Phi); those suffice to center on the mean
    phase and to recover both the mean fidelity and its standard error
    without ever materialising the (n_trials x n_samples) trajectory.
    """
    n, k = config.n_trials, config.n_samples
    sum_phi = np.zeros(n)
    sum_cos = np.zeros(n)
    sum_sin = np.zeros(n)
    sum_cos2 = np.zeros(n)
    sum_sin2 = np.zeros(n)

    for child in rng.spawn(k):
        carry = 0.0
        for lo in range(0, n, _TRIAL_CHUNK):
            hi = min(lo + _TRIAL_CHUNK, n)
            u = child.random((hi - lo, 6))
            phi = np.cumsum(_phases_from_uniforms(config, u))
            phi += carry
            carry = phi[-1]
            c = np.cos(phi)
            s = np.sin(phi)
            sum_phi[lo:hi] += phi
            sum_cos[lo:hi] += c
            sum_sin[lo:hi] += s
            sum_cos2[lo:hi] += c * c - s * s
            sum_sin2[lo:hi] += 2.0 * c * s

    mean_phi = sum_phi / k
    cm = np.cos(mean_phi)
    sm = np.sin(mean_phi)
    # sum_k cos(phi - mean) and sum_k cos^2(phi - mean) via angle addition
    mean_centered = (sum_cos * cm + sum_sin * sm) / k
    c2m = cm * cm - sm * sm
    s2m = 2.0 * cm * sm
    sumsq = 0.5 * k + 0.5 * (sum_cos2 * c2m + sum_sin2 * s2m)
    var_cos = np.maximum(sumsq / k - mean_centered**2, 0.0) * (k / (k - 1.0))
    return DephasingCurve(
        fidelity=0.5 + 0.5 * mean_centered,
        stderr=0.5 * np.sqrt(var_cos / k),
        n_samples=k,
    )


def decay_constant(curve: DephasingCurve) -> float:
    """Attempt count at which the sample-averaged coherence crosses 1/e.

    Linearly interpolated between trial indices (coherence is 1 at n = 0);
    returns inf when the curve never crosses within its range.
    """
    c = curve.mean_cos
    threshold = 1.0 / math.e
    below = np.nonzero(c < threshold)[0]
    if below.size == 0:
        return math.inf
    i = int(below[0])
    prev = c[i - 1] if i > 0 else 1.0
    return i + (prev - threshold) / (prev - c[i])


@dataclass(frozen=True)
class EchoGrid:
    """Endpoint fidelity over a (p_init, p_echo) grid."""

    p_init_values: tuple[float, ...]
    p_echo_values: tuple[float, ...]
    fidelity: np.ndarray
    stderr: np.ndarray


def sweep_echo_grid(
    base: DephasingConfig,
    p_init_values: Sequence[float],
    p_echo_values: Sequence[float],
    rng: np.random.Generator,
    n_samples: int = 1000,
) -> EchoGrid:
    """F(n_trials) on the grid, one independent generator per cell."""
    if len(p_init_values) == 0 or len(p_echo_values) == 0:
        raise ValueError("grids must be non-empty")
    shape = (len(p_init_values), len(p_echo_values))
    fid = np.zeros(shape)
    err = np.zeros(shape)
    cells = rng.spawn(shape[0] * shape[1])
    for i, p_init in enumerate(p_init_values):
        for j, p_echo in enumerate(p_echo_values):
            cfg = replace(base, p_init=p_init, p_echo=p_echo, n_samples=n_samples)
            curve = run_ensemble(cfg, cells[i * shape[1] + j])
            fid[i, j] = curve.fidelity[-1]
            err[i, j] = curve.stderr[-1]
    return EchoGrid(tuple(p_init_values), tuple(p_echo_values), fid, err)
