"""Flat key=value run configuration.

One namespace-dotted key per line (`td3.gamma = 0.99`), `#` comments,
blank lines ignored. Unknown keys are rejected rather than silently
ignored, missing keys take the defaults below, and the fully resolved
table can be dumped back out in a canonical sorted form so every run
directory records exactly what it ran with.
"""

import zlib

import numpy as np

from . import gateworld, lagsim, td3core

DEFAULTS = {
    "seed": 0,
    "train.total_steps": 2_500_000,
    "train.checkpoint_every": 100_000,
    "train.log_every_episodes": 50,
    "env.stochastic": False,
    "env.ts": 0.02,
    "env.timeout_steps": 2000,
    "env.wrap_yaw": False,
    "env.normalize_obs": False,
    "env.tau_x": 0.4,
    "env.tau_y": 0.4,
    "env.tau_z": 0.1,
    "env.tau_yaw": 0.1,
    "env.tau_xy_lo": 0.35,
    "env.tau_xy_hi": 0.45,
    "env.tau_zyaw_lo": 0.08,
    "env.tau_zyaw_hi": 0.13,
    "noise.vel_sigma": 0.05,
    "noise.vel_clip": 0.10,
    "noise.pos_sigma_xyz": 0.05,
    "noise.pos_sigma_yaw": 0.02,
    "noise.pos_clip_xyz": 0.15,
    "noise.pos_clip_yaw": 0.06,
    "noise.drift_interval": 25,
    "td3.actor_lr": 1e-5,
    "td3.critic_lr": 2e-5,
    "td3.rho": 0.999,
    "td3.target_noise_sigma": 0.2,
    "td3.target_noise_clip": 0.5,
    "td3.gamma": 0.99,
    "td3.batch_size": 100,
    "td3.policy_delay": 2,
    "td3.buffer_capacity": 1_000_000,
    "td3.learning_starts": 100,
    "td3.ou_theta": 0.2,
    "td3.ou_sigma": 0.15,
    "td3.warmup_random_steps": 0,
    "td3.glorot_biases": False,
    "eval.episodes": 10,
    "baseline.kp": 0.8,
    "baseline.kd": 0.2,
}


def _coerce(key, text):
    default = DEFAULTS[key]
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "1"):
            return True
        if low in ("false", "0"):
            return False
        raise ValueError(f"{key}: expected true/false, got {text!r}")
    if isinstance(default, int):
        try:
            return int(text)
        except ValueError:
            # allow scientific notation for large counts, e.g. 2.5e6
            f = float(text)
            if f != int(f):
                raise ValueError(f"{key}: expected an integer, got {text!r}") from None
            return int(f)
    return float(text)


def parse_file(path):
    """Read raw key -> string pairs from a config file."""
    pairs = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = line.split("=", 1)
            pairs[key.strip()] = val.strip()
    return pairs


def resolve(path=None, overrides=None):
    """Defaults, then file, then overrides; rejects unknown keys."""
    cfg = dict(DEFAULTS)
    if path is not None:
        for key, text in parse_file(path).items():
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            cfg[key] = _coerce(key, text)
    if overrides:
        for key, val in overrides.items():
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            cfg[key] = val
    return cfg


def _fmt(val):
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    return str(val)


def dump(cfg):
    """Canonical text form: sorted keys, one per line."""
    return "".join(f"{k} = {_fmt(cfg[k])}\n" for k in sorted(cfg))


def config_hash(cfg):
    """Stable 32-bit hash of the resolved config."""
    return zlib.crc32(dump(cfg).encode()) & 0xFFFFFFFF


def env_config(cfg, stochastic=None):
    """Build a gateworld.EnvConfig from a resolved table."""
    if stochastic is None:
        stochastic = cfg["env.stochastic"]
    vc = cfg["noise.vel_clip"]
    pc = cfg["noise.pos_clip_xyz"]
    pcy = cfg["noise.pos_clip_yaw"]
    noise = lagsim.NoiseConfig(
        vel_sigma=np.full(4, cfg["noise.vel_sigma"]),
        vel_clip=np.array([[-vc, vc]] * 4),
        pos_sigma=np.array([cfg["noise.pos_sigma_xyz"]] * 3
                           + [cfg["noise.pos_sigma_yaw"]]),
        pos_clip=np.array([[-pc, pc]] * 3 + [[-pcy, pcy]]),
        drift_interval_steps=cfg["noise.drift_interval"],
    )
    tau_sampling = lagsim.StochasticConfig(
        tau_xy_bounds=(cfg["env.tau_xy_lo"], cfg["env.tau_xy_hi"]),
        tau_zyaw_bounds=(cfg["env.tau_zyaw_lo"], cfg["env.tau_zyaw_hi"]),
        enabled=stochastic,
        fixed_taus=(cfg["env.tau_x"], cfg["env.tau_y"],
                    cfg["env.tau_z"], cfg["env.tau_yaw"]),
    )
    world = gateworld.WorldSpec(timeout_steps=cfg["env.timeout_steps"])
    return gateworld.EnvConfig(
        world=world,
        ts=cfg["env.ts"],
        stochastic=stochastic,
        tau_sampling=tau_sampling,
        noise=noise if stochastic else None,
        wrap_yaw=cfg["env.wrap_yaw"],
        normalize_obs=cfg["env.normalize_obs"],
    )


def td3_config(cfg):
    """Build a td3core.Td3Config from a resolved table."""
    return td3core.Td3Config(
        actor_lr=cfg["td3.actor_lr"],
        critic_lr=cfg["td3.critic_lr"],
        rho=cfg["td3.rho"],
        target_noise_sigma=cfg["td3.target_noise_sigma"],
        target_noise_clip=cfg["td3.target_noise_clip"],
        gamma=cfg["td3.gamma"],
        batch_size=cfg["td3.batch_size"],
        policy_delay=cfg["td3.policy_delay"],
        buffer_capacity=cfg["td3.buffer_capacity"],
        learning_starts=cfg["td3.learning_starts"],
        ou_theta=cfg["td3.ou_theta"],
        ou_sigma=cfg["td3.ou_sigma"],
        warmup_random_steps=cfg["td3.warmup_random_steps"],
        glorot_biases=cfg["td3.glorot_biases"],
    )
