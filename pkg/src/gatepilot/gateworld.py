"""Gate-flight episode environment.

A point-mass drone spawns behind a square racing gate and must cross the
opening. The environment owns the geometry (world box, gate frame, drone
interference box), the shaped reward, observation framing, and the
reset/step lifecycle. Dynamics come from lagsim.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import lagsim

VEL_LIMITS = np.array([2.0, 2.0, 1.0, math.pi / 2.0])

# start-state box used by reset(), well behind the gate and inside bounds
START_X = (-9.0, -4.0)
START_Y = (-2.0, 2.0)
START_Z = (-1.0, 1.5)
START_YAW = (-math.pi / 4.0, math.pi / 4.0)


@dataclass(frozen=True)
class WorldSpec:
    """Axis-aligned flight volume and rate limits."""

    x_bounds: tuple = (-10.0, 2.0)
    y_bounds: tuple = (-3.0, 3.0)
    z_bounds: tuple = (-1.5, 2.5)
    vel_limits: tuple = (2.0, 2.0, 1.0, math.pi / 2.0)
    timeout_steps: int = 2000

    def __post_init__(self):
        for lo, hi in (self.x_bounds, self.y_bounds, self.z_bounds):
            if lo >= hi:
                raise ValueError(f"bounds need lo < hi, got ({lo}, {hi})")
        if self.timeout_steps <= 0:
            raise ValueError("timeout_steps must be positive")

    def contains(self, pos):
        """Whether a point is inside the world box (boundary counts as in)."""
        return bool(
            self.x_bounds[0] <= pos[0] <= self.x_bounds[1]
            and self.y_bounds[0] <= pos[1] <= self.y_bounds[1]
            and self.z_bounds[0] <= pos[2] <= self.z_bounds[1]
        )


@dataclass(frozen=True)
class GateSpec:
    """Square gate centered at the origin with its normal along +X.

    ``outer_dims`` are full extents; the opening shrinks the Y-Z cross
    section by the wall thickness on every side.
    """

    outer_dims: tuple = (0.15, 1.8, 1.22)
    wall_thickness: float = 0.12

    def __post_init__(self):
        if min(self.outer_dims) <= 0.0 or self.wall_thickness <= 0.0:
            raise ValueError("gate dimensions must be positive")
        if self.wall_thickness >= min(self.outer_dims[1], self.outer_dims[2]) / 2.0:
            raise ValueError("wall thickness leaves no opening")

    @property
    def x_half(self):
        return self.outer_dims[0] / 2.0

    @property
    def opening_y_half(self):
        return self.outer_dims[1] / 2.0 - self.wall_thickness

    @property
    def opening_z_half(self):
        return self.outer_dims[2] / 2.0 - self.wall_thickness


@dataclass(frozen=True)
class DroneBox:
    """Interference box of the drone, centered on its position."""

    half_extents: tuple = (0.3, 0.3, 0.1)

    def __post_init__(self):
        if min(self.half_extents) <= 0.0:
            raise ValueError("half extents must be positive")


class Outcome(enum.Enum):
    RUNNING = "Running"
    SUCCESS = "Success"
    GATE_CRASH = "GateCrash"
    GROUND_CRASH = "GroundCrash"
    OUT_OF_BOUNDS = "OutOfBounds"
    TIMEOUT = "Timeout"


TERMINAL_OUTCOMES = frozenset(
    {Outcome.SUCCESS, Outcome.GATE_CRASH, Outcome.GROUND_CRASH, Outcome.OUT_OF_BOUNDS}
)


@dataclass(frozen=True)
class GatePose:
    """Placement of the gate in the world: origin plus yaw about +Z."""

    origin: tuple = (0.0, 0.0, 0.0)
    yaw: float = 0.0


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    outcome: Outcome


def scale_action(action, limits=VEL_LIMITS):
    """Map a normalized [-1, 1] action onto the physical rate limits.

    Components within 1e-9 of the box are clipped quietly; anything
    further out is rejected so a broken policy fails loudly.
    """
    a = np.asarray(action, dtype=float)
    if a.shape != (4,):
        raise ValueError(f"action must be a 4-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite action")
    if np.any(np.abs(a) > 1.0 + 1e-9):
        raise ValueError(f"action outside [-1, 1]: {a}")
    return np.clip(a, -1.0, 1.0) * limits


def classify(state, world, gate, drone, step):
    """Outcome of a state: gate plane first, then ground, bounds, timeout."""
    x, y, z = state.pos
    hx, hy, hz = drone.half_extents
    if abs(x) <= gate.x_half + hx:
        fits = (abs(y) + hy <= gate.opening_y_half
                and abs(z) + hz <= gate.opening_z_half)
        return Outcome.SUCCESS if fits else Outcome.GATE_CRASH
    if z < world.z_bounds[0]:
        return Outcome.GROUND_CRASH
    if not world.contains(state.pos):
        return Outcome.OUT_OF_BOUNDS
    if step >= world.timeout_steps:
        return Outcome.TIMEOUT
    return Outcome.RUNNING


def dense_reward(state):
    """Per-step shaping: yaw alignment plus an approach/retreat term."""
    x, y, z = state.pos
    r = 3e-4 * (math.pi / 4.0 - abs(state.yaw))
    if x < 0.0 and state.vel[0] > 0.0:
        r += 4e-2 * (1.0 - (x * x + y * y + z * z) / 15.0)
    elif x > 0.0:
        r -= 5e-2
    else:
        r -= 1e-2
    return r


def final_reward(outcome, state, world):
    """Terminal bonus/penalty for the step that ends the episode.

    The ground and boundary penalties are independent clauses, so a
    ground crash outside the world box collects both.
    """
    if outcome is Outcome.SUCCESS:
        _, y, z = state.pos
        r = 100.0 + 200.0 * 100.0 ** -(y * y + z * z)
        if abs(state.yaw) < math.pi / 6.0:
            r += 100.0 * (1.0 - 3.0 * abs(state.yaw) / math.pi)
        return r
    if outcome is Outcome.GATE_CRASH:
        return -20.0
    if outcome is Outcome.GROUND_CRASH:
        r = -20.0
        if not world.contains(state.pos):
            r -= 5.0
        return r
    if outcome is Outcome.OUT_OF_BOUNDS:
        return -5.0
    return 0.0


def observe(state, gate_pose=None):
    """8-vector observation in the gate frame.

    Position and yaw are taken relative to the gate pose and velocities
    rotated by the inverse gate yaw; with the canonical gate (origin,
    normal +X) this is the raw state.
    """
    if gate_pose is None or (gate_pose.yaw == 0.0 and gate_pose.origin == (0.0, 0.0, 0.0)):
        return np.array([
            state.pos[0], state.pos[1], state.pos[2], state.yaw,
            state.vel[0], state.vel[1], state.vel[2], state.yaw_rate,
        ])
    c = math.cos(-gate_pose.yaw)
    s = math.sin(-gate_pose.yaw)
    dx = state.pos[0] - gate_pose.origin[0]
    dy = state.pos[1] - gate_pose.origin[1]
    dz = state.pos[2] - gate_pose.origin[2]
    return np.array([
        c * dx - s * dy,
        s * dx + c * dy,
        dz,
        state.yaw - gate_pose.yaw,
        c * state.vel[0] - s * state.vel[1],
        s * state.vel[0] + c * state.vel[1],
        state.vel[2],
        state.yaw_rate,
    ])


# per-component scales applied when normalized observations are requested
OBS_SCALES = np.array([10.0, 3.0, 2.5, math.pi, 2.0, 2.0, 1.0, math.pi / 2.0])


@dataclass
class EnvConfig:
    """Everything that parameterizes an episode."""

    world: WorldSpec = field(default_factory=WorldSpec)
    gate: GateSpec = field(default_factory=GateSpec)
    drone: DroneBox = field(default_factory=DroneBox)
    ts: float = lagsim.TS_DEFAULT
    stochastic: bool = False
    tau_sampling: lagsim.StochasticConfig = None
    noise: lagsim.NoiseConfig = None
    wrap_yaw: bool = False
    normalize_obs: bool = False

    def __post_init__(self):
        if self.tau_sampling is None:
            self.tau_sampling = lagsim.StochasticConfig(enabled=self.stochastic)
        if self.stochastic and self.noise is None:
            self.noise = lagsim.default_noise()


class GateEnv:
    """Episodic environment with gym-style reset/step.

    All randomness (start state, episode time constants, perturbations)
    flows through one numpy Generator owned by the instance, so a seed
    pins the whole episode stream.
    """

    def __init__(self, config=None, seed=None, rng=None):
        self.config = config if config is not None else EnvConfig()
        if rng is not None:
            self.rng = rng
        else:
            self.rng = np.random.default_rng(seed)
        self.state = None
        self.steps = 0
        self.outcome = None
        self.taus = None
        self._lags = None
        self._done = True

    def reset(self, seed=None):
        """Start a fresh episode; returns the initial observation."""
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        rng = self.rng
        pos = np.array([
            rng.uniform(*START_X),
            rng.uniform(*START_Y),
            rng.uniform(*START_Z),
        ])
        yaw = float(rng.uniform(*START_YAW))
        self.state = lagsim.VehicleState(pos=pos, yaw=yaw)
        self.taus = lagsim.sample_time_constants(self.config.tau_sampling, rng)
        self._lags = lagsim.make_lags(self.taus, self.config.ts)
        self.steps = 0
        self.outcome = Outcome.RUNNING
        self._done = False
        return self._observe()

    def step(self, action):
        """Advance one tick. Raises if the episode already ended."""
        if self.state is None:
            raise RuntimeError("step() before reset()")
        if self._done:
            raise RuntimeError("step() on a finished episode; call reset()")
        cfg = self.config
        cmd = scale_action(action, np.asarray(cfg.world.vel_limits))
        self.steps += 1
        noise = cfg.noise if cfg.stochastic else None
        self.state = lagsim.sim_step(
            self.state, cmd, self._lags, noise, self.steps, self.rng,
            wrap_yaw=cfg.wrap_yaw,
        )
        self.outcome = classify(self.state, cfg.world, cfg.gate, cfg.drone, self.steps)
        reward = dense_reward(self.state) + final_reward(self.outcome, self.state, cfg.world)
        terminated = self.outcome in TERMINAL_OUTCOMES
        truncated = self.outcome is Outcome.TIMEOUT
        self._done = terminated or truncated
        return StepResult(self._observe(), reward, terminated, truncated, self.outcome)

    def _observe(self):
        obs = observe(self.state)
        if self.config.normalize_obs:
            obs = obs / OBS_SCALES
        return obs
