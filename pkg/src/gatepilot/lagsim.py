"""Discrete-time point-mass quadcopter dynamics.

Each commanded axis (vx, vy, vz, yaw rate) tracks its command through a
first-order lag, discretized with the bilinear transform so the recursion
uses the current and previous command samples. Pose integrates the new
velocity with a zero-order hold. Optional clipped-normal perturbations
model velocity noise every step and position drift on a fixed cadence.
"""

import math
from dataclasses import dataclass, field

import numpy as np

TS_DEFAULT = 0.02  # 50 Hz control rate

# response times in the non-randomized setting: (x, y, z, yaw)
DETERMINISTIC_TAUS = (0.4, 0.4, 0.1, 0.1)


@dataclass(frozen=True)
class AxisLag:
    """Bilinear-transform coefficients for one first-order axis."""

    tau: float
    ts: float
    a: float
    b: float


def make_lag(tau, ts):
    """Build the discrete lag for time constant ``tau`` at sample period ``ts``."""
    if tau <= 0.0 or ts <= 0.0:
        raise ValueError(f"tau and ts must be positive, got tau={tau}, ts={ts}")
    den = 2.0 * tau + ts
    return AxisLag(tau=tau, ts=ts, a=ts / den, b=(2.0 * tau - ts) / den)


def make_lags(taus, ts):
    """Per-axis lags for the 4 commanded axes."""
    return tuple(make_lag(tau, ts) for tau in taus)


def step_velocity(lag, v_prev, cmd_prev, cmd_new):
    """One velocity update: a*cmd_new + a*cmd_prev + b*v_prev."""
    return lag.a * cmd_new + lag.a * cmd_prev + lag.b * v_prev


@dataclass
class VehicleState:
    """Pose and rates of the point-mass drone.

    ``prev_cmd`` carries the last applied command because the velocity
    recursion needs two command samples; it is zero at episode start.
    """

    pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0
    vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw_rate: float = 0.0
    prev_cmd: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def copy(self):
        return VehicleState(self.pos.copy(), self.yaw, self.vel.copy(),
                            self.yaw_rate, self.prev_cmd.copy())

    def is_finite(self):
        return bool(
            np.all(np.isfinite(self.pos))
            and math.isfinite(self.yaw)
            and np.all(np.isfinite(self.vel))
            and math.isfinite(self.yaw_rate)
            and np.all(np.isfinite(self.prev_cmd))
        )


def _as_clip_pairs(clip):
    pairs = np.asarray(clip, dtype=float)
    if pairs.shape != (4, 2):
        raise ValueError(f"clip must have shape (4, 2), got {pairs.shape}")
    if np.any(pairs[:, 0] >= pairs[:, 1]):
        raise ValueError("each clip pair needs min < max")
    return pairs


@dataclass(frozen=True)
class NoiseConfig:
    """Clipped-normal perturbation settings for velocity and position.

    Sigmas and clip pairs are per axis in (x, y, z, yaw) order; position
    entries are meters except the yaw axis (radians).
    """

    vel_sigma: np.ndarray
    vel_clip: np.ndarray
    pos_sigma: np.ndarray
    pos_clip: np.ndarray
    drift_interval_steps: int = 25

    def __post_init__(self):
        object.__setattr__(self, "vel_sigma", np.asarray(self.vel_sigma, dtype=float))
        object.__setattr__(self, "pos_sigma", np.asarray(self.pos_sigma, dtype=float))
        object.__setattr__(self, "vel_clip", _as_clip_pairs(self.vel_clip))
        object.__setattr__(self, "pos_clip", _as_clip_pairs(self.pos_clip))
        if self.vel_sigma.shape != (4,) or self.pos_sigma.shape != (4,):
            raise ValueError("sigmas must be 4-vectors (x, y, z, yaw)")
        if np.any(self.vel_sigma < 0.0) or np.any(self.pos_sigma < 0.0):
            raise ValueError("sigmas must be >= 0")
        if self.drift_interval_steps < 1:
            raise ValueError("drift_interval_steps must be >= 1")


def default_noise():
    """Default perturbation magnitudes (small relative to the command limits)."""
    return NoiseConfig(
        vel_sigma=np.full(4, 0.05),
        vel_clip=np.array([[-0.10, 0.10]] * 4),
        pos_sigma=np.array([0.05, 0.05, 0.05, 0.02]),
        pos_clip=np.array([[-0.15, 0.15]] * 3 + [[-0.06, 0.06]]),
        drift_interval_steps=25,
    )


@dataclass(frozen=True)
class StochasticConfig:
    """Per-episode randomization of the axis time constants."""

    tau_xy_bounds: tuple = (0.35, 0.45)
    tau_zyaw_bounds: tuple = (0.08, 0.13)
    enabled: bool = False
    fixed_taus: tuple = DETERMINISTIC_TAUS

    def __post_init__(self):
        for lo, hi in (self.tau_xy_bounds, self.tau_zyaw_bounds):
            if not (0.0 < lo < hi):
                raise ValueError(f"tau bounds need 0 < lo < hi, got ({lo}, {hi})")
        if len(self.fixed_taus) != 4 or min(self.fixed_taus) <= 0.0:
            raise ValueError("fixed_taus must be 4 positive values")


def sample_time_constants(cfg, rng):
    """Draw (tau_x, tau_y, tau_z, tau_yaw); fixed values when disabled."""
    if not cfg.enabled:
        return cfg.fixed_taus
    lo, hi = cfg.tau_xy_bounds
    lo2, hi2 = cfg.tau_zyaw_bounds
    return (
        float(rng.uniform(lo, hi)),
        float(rng.uniform(lo, hi)),
        float(rng.uniform(lo2, hi2)),
        float(rng.uniform(lo2, hi2)),
    )


def apply_velocity_noise(vel4, cfg, rng):
    """Add an independent clipped-normal sample to each of the 4 rate axes."""
    noise = rng.normal(0.0, cfg.vel_sigma)
    np.clip(noise, cfg.vel_clip[:, 0], cfg.vel_clip[:, 1], out=noise)
    return vel4 + noise


def apply_position_drift(state, cfg, step_index, rng):
    """Kick x, y, z, yaw by clipped-normal samples on the drift cadence.

    Off-cycle steps return the state unchanged. ``step_index`` counts from 1
    so the first drift lands ``drift_interval_steps`` into the episode.
    """
    if step_index % cfg.drift_interval_steps != 0:
        return state
    noise = rng.normal(0.0, cfg.pos_sigma)
    np.clip(noise, cfg.pos_clip[:, 0], cfg.pos_clip[:, 1], out=noise)
    return VehicleState(
        pos=state.pos + noise[:3],
        yaw=state.yaw + noise[3],
        vel=state.vel.copy(),
        yaw_rate=state.yaw_rate,
        prev_cmd=state.prev_cmd.copy(),
    )


def _wrap_pi(angle):
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def sim_step(state, cmd, lags, noise, step_index, rng, wrap_yaw=False):
    """Advance the vehicle one control tick.

    Order: lag each rate axis toward its command, perturb the rates
    (stochastic mode), integrate pose with the new rates, then apply the
    scheduled position drift. ``noise=None`` runs the deterministic path
    and touches no random state.
    """
    cmd = np.asarray(cmd, dtype=float)
    if cmd.shape != (4,):
        raise ValueError(f"command must be a 4-vector, got shape {cmd.shape}")
    if not (state.is_finite() and np.all(np.isfinite(cmd))):
        raise ValueError("non-finite state or command")

    rates = np.empty(4)
    rates[0] = step_velocity(lags[0], state.vel[0], state.prev_cmd[0], cmd[0])
    rates[1] = step_velocity(lags[1], state.vel[1], state.prev_cmd[1], cmd[1])
    rates[2] = step_velocity(lags[2], state.vel[2], state.prev_cmd[2], cmd[2])
    rates[3] = step_velocity(lags[3], state.yaw_rate, state.prev_cmd[3], cmd[3])

    if noise is not None:
        rates = apply_velocity_noise(rates, noise, rng)

    ts = lags[0].ts
    yaw = state.yaw + rates[3] * ts
    if wrap_yaw:
        yaw = _wrap_pi(yaw)
    new_state = VehicleState(
        pos=state.pos + rates[:3] * ts,
        yaw=yaw,
        vel=rates[:3].copy(),
        yaw_rate=float(rates[3]),
        prev_cmd=cmd.copy(),
    )

    if noise is not None:
        new_state = apply_position_drift(new_state, noise, step_index, rng)
    return new_state
