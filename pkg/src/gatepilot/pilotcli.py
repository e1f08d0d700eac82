"""Command-line front end: train, evaluate, replay, baseline, physics checks.

Every command resolves one flat config (defaults <- file <- flags),
echoes it where relevant, and drives the library modules. File outputs
are plain CSV plus the binary checkpoint format, all deterministic for
a fixed (seed, config) pair.
"""

import argparse
import csv
import logging
import math
import os
import sys

import numpy as np

from . import checkpoint, gateworld, lagsim, netcore, runconfig, td3core

log = logging.getLogger("gatepilot")

METRICS_FIELDS = ("episode", "env_steps", "return", "outcome", "steps")
TRAJ_FIELDS = ("step", "t", "x", "y", "z", "yaw", "vx", "vy", "vz", "yaw_rate",
               "cmd_vx", "cmd_vy", "cmd_vz", "cmd_yaw_rate", "reward", "outcome")
SUMMARY_FIELDS = ("source", "episodes", "success_rate", "mean_return",
                  "std_return", "mean_steps", "seed", "stochastic")

_LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "quiet": logging.CRITICAL,
}


def _setup_logging():
    name = os.environ.get("GATEPILOT_LOG", "info").lower()
    level = _LOG_LEVELS.get(name)
    if level is None:
        print(f"warning: unknown GATEPILOT_LOG value {name!r}, using info",
              file=sys.stderr)
        level = logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")


def _f(x):
    """Float formatting for CSV: shortest exact round-trip form."""
    return repr(float(x))


def _resolved(args, **extra):
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "stochastic", False):
        overrides["env.stochastic"] = True
    overrides.update(extra)
    return runconfig.resolve(getattr(args, "config", None), overrides)


def _make_env(cfg):
    return gateworld.GateEnv(runconfig.env_config(cfg), seed=cfg["seed"])


def _load_actor(path):
    data = checkpoint.load_checkpoint(path)
    if "actor" not in data.nets:
        raise checkpoint.HeaderError(f"{path}: checkpoint has no actor network")
    return data


def _write_summary(path, source, summary, cfg):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        w.writerow([source, summary["episodes"], _f(summary["success_rate"]),
                    _f(summary["mean_return"]), _f(summary["std_return"]),
                    _f(summary["mean_steps"]), cfg["seed"],
                    "true" if cfg["env.stochastic"] else "false"])


def _print_summary(summary):
    log.info("episodes=%d success_rate=%.2f mean_return=%.2f std=%.2f mean_steps=%.1f",
             summary["episodes"], summary["success_rate"], summary["mean_return"],
             summary["std_return"], summary["mean_steps"])


class _RunHooks(td3core.TrainHooks):
    """Streams metrics rows and drops periodic checkpoints during training."""

    def __init__(self, writer, fh, out_dir, every, cfg_hash, log_every):
        self.writer = writer
        self.fh = fh
        self.out_dir = out_dir
        self.every = every
        self.cfg_hash = cfg_hash
        self.log_every = log_every
        self.last_path = None

    def on_episode(self, rec):
        self.writer.writerow([rec.episode, rec.env_steps, _f(rec.ret),
                              rec.outcome.value, rec.steps])
        self.fh.flush()
        if self.log_every and rec.episode % self.log_every == 0:
            log.info("episode %d steps %d return %.2f %s",
                     rec.episode, rec.env_steps, rec.ret, rec.outcome.value)

    def on_env_step(self, step, trainer):
        if self.every and step % self.every == 0:
            path = os.path.join(self.out_dir, f"ckpt-{step:09d}.bin")
            checkpoint.save_trainer(path, trainer, self.cfg_hash)
            self.last_path = path
            log.info("checkpoint at %d steps -> %s", step, path)


def cmd_train(args):
    extra = {}
    if args.steps is not None:
        extra["train.total_steps"] = args.steps
    cfg = _resolved(args, **extra)
    out_dir = args.out or f"runs/seed{cfg['seed']}"
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.txt"), "w") as f:
        f.write(runconfig.dump(cfg))
    cfg_hash = runconfig.config_hash(cfg)

    env = _make_env(cfg)
    trainer = td3core.Trainer(env, runconfig.td3_config(cfg), seed=cfg["seed"])
    total = cfg["train.total_steps"]
    log.info("training %d steps, seed %d -> %s", total, cfg["seed"], out_dir)

    metrics_path = os.path.join(out_dir, "metrics.csv")
    with open(metrics_path, "w", newline="") as mf:
        writer = csv.writer(mf, lineterminator="\n")
        writer.writerow(METRICS_FIELDS)
        hooks = _RunHooks(writer, mf, out_dir, cfg["train.checkpoint_every"],
                          cfg_hash, cfg["train.log_every_episodes"])
        try:
            trainer.train(total, hooks)
        except RuntimeError as e:
            log.error("training aborted: %s", e)
            if hooks.last_path:
                log.error("last good checkpoint: %s", hooks.last_path)
            return 3
    final = os.path.join(out_dir, "final.bin")
    checkpoint.save_trainer(final, trainer, cfg_hash)
    log.info("done: %d episodes, final checkpoint %s", trainer.episodes, final)
    return 0


def cmd_eval(args):
    extra = {}
    if args.episodes is not None:
        extra["eval.episodes"] = args.episodes
    cfg = _resolved(args, **extra)
    data = _load_actor(args.checkpoint)
    env = _make_env(cfg)
    _, summary = td3core.evaluate(data.nets["actor"], env, cfg["eval.episodes"])
    _print_summary(summary)
    _write_summary(args.out or "eval-summary.csv", args.checkpoint, summary, cfg)
    return 0


def cmd_rollout(args):
    cfg = _resolved(args)
    data = _load_actor(args.checkpoint)
    actor = data.nets["actor"]
    env = _make_env(cfg)
    limits = np.asarray(env.config.world.vel_limits)
    ts = cfg["env.ts"]

    obs = env.reset()
    rows = []
    total = 0.0
    step = 0
    while True:
        action = td3core.greedy_action(actor, obs)
        cmd = gateworld.scale_action(action, limits)
        res = env.step(action)
        step += 1
        total += res.reward
        s = env.state
        rows.append([step, _f(step * ts),
                     _f(s.pos[0]), _f(s.pos[1]), _f(s.pos[2]), _f(s.yaw),
                     _f(s.vel[0]), _f(s.vel[1]), _f(s.vel[2]), _f(s.yaw_rate),
                     _f(cmd[0]), _f(cmd[1]), _f(cmd[2]), _f(cmd[3]),
                     _f(res.reward), res.outcome.value])
        obs = res.obs
        if res.terminated or res.truncated:
            break
    out = args.out or "trajectory.csv"
    with open(out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRAJ_FIELDS)
        w.writerows(rows)
    log.info("rollout: %d steps return %.2f %s -> %s",
             step, total, env.outcome.value, out)
    return 0


def pd_action(obs, kp, kd, limits):
    """Proportional-on-position, derivative-on-velocity command toward the
    gate center, squeezed back into normalized action space."""
    err = -np.array([obs[0], obs[1], obs[2], obs[3]])
    vel = np.array([obs[4], obs[5], obs[6], obs[7]])
    cmd = kp * err - kd * vel
    return np.clip(cmd / limits, -1.0, 1.0)


def cmd_baseline(args):
    extra = {}
    if args.episodes is not None:
        extra["eval.episodes"] = args.episodes
    cfg = _resolved(args, **extra)
    env = _make_env(cfg)
    limits = np.asarray(env.config.world.vel_limits)
    kp, kd = cfg["baseline.kp"], cfg["baseline.kd"]

    episodes = cfg["eval.episodes"]
    rets, steps_list, succ = [], [], 0
    for _ in range(episodes):
        obs = env.reset()
        total = 0.0
        steps = 0
        while True:
            res = env.step(pd_action(obs, kp, kd, limits))
            obs = res.obs
            total += res.reward
            steps += 1
            if res.terminated or res.truncated:
                break
        rets.append(total)
        steps_list.append(steps)
        if res.outcome is gateworld.Outcome.SUCCESS:
            succ += 1
    rets = np.array(rets)
    summary = {
        "episodes": episodes,
        "success_rate": succ / episodes,
        "mean_return": float(rets.mean()),
        "std_return": float(rets.std()),
        "mean_steps": float(np.mean(steps_list)),
    }
    _print_summary(summary)
    if args.out:
        _write_summary(args.out, f"pd(kp={kp},kd={kd})", summary, cfg)
    return 0


def _check(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return ok


def cmd_physics_check(args):
    """First-order lag sanity checks against the continuous step response."""
    ok = True
    # discretization error grows with (Ts/tau)^2, hence the looser z bound
    for tau, dev_tol in ((0.4, 1e-3), (0.1, 2e-3)):
        lag = lagsim.make_lag(tau, 0.02)
        n = max(400, int(50 * tau / 0.02))
        v = np.empty(n + 1)
        v[0] = 0.0
        for k in range(n):
            v[k + 1] = lagsim.step_velocity(lag, v[k], 1.0, 1.0)
        k20 = round(tau / 0.02)
        ok &= _check(f"tau={tau} 63.2% at t=tau", abs(v[k20] - 0.632) < 0.01,
                     f"v={v[k20]:.5f}")
        ok &= _check(f"tau={tau} settles to 1", abs(v[n] - 1.0) < 1e-6,
                     f"v={v[n]:.9f}")
        t = np.arange(n + 1) * 0.02
        span = t <= 5 * tau
        dev = np.max(np.abs(v[span] - (1.0 - np.exp(-t[span] / tau))))
        ok &= _check(f"tau={tau} tracks 1-exp(-t/tau) over 5 tau", dev < dev_tol,
                     f"max dev={dev:.2e}")
    lag = lagsim.make_lag(0.4, 0.02)
    drift = abs(lagsim.step_velocity(lag, 1.0, 1.0, 1.0) - 1.0)
    ok &= _check("unity command is a fixed point", drift < 1e-12,
                 f"drift={drift:.1e}")
    return 0 if ok else 1


def main(argv=None):
    _setup_logging()
    p = argparse.ArgumentParser(
        prog="gatepilot",
        description="Train and fly a neural velocity controller through a racing gate.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, checkpoint_required=False):
        sp.add_argument("--config", help="path to a key=value config file")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--stochastic", action="store_true",
                        help="randomized lags plus velocity/position noise")
        if checkpoint_required:
            sp.add_argument("--checkpoint", required=True,
                            help="checkpoint file to load")

    sp = sub.add_parser("train", help="run the full training loop")
    common(sp)
    sp.add_argument("--steps", type=int, help="total environment steps")
    sp.add_argument("--out", help="run directory (default runs/seed<N>)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="score a checkpoint over noise-free rollouts")
    common(sp, checkpoint_required=True)
    sp.add_argument("--episodes", type=int, help="number of evaluation episodes")
    sp.add_argument("--out", help="summary CSV path (default eval-summary.csv)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("rollout", help="replay one episode to a trajectory CSV")
    common(sp, checkpoint_required=True)
    sp.add_argument("--out", help="trajectory CSV path (default trajectory.csv)")
    sp.set_defaults(func=cmd_rollout)

    sp = sub.add_parser("baseline", help="score the scripted PD controller")
    common(sp)
    sp.add_argument("--episodes", type=int, help="number of episodes")
    sp.add_argument("--out", help="summary CSV path (not written by default)")
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("physics-check", help="verify the lag model against "
                        "its continuous-time response")
    sp.set_defaults(func=cmd_physics_check)

    args = p.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, checkpoint.CheckpointError) as e:
        log.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
