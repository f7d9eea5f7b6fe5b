"""Command-line entry points.

Subcommands mirror the experiment pipeline: plan a demonstration,
train a policy against it, evaluate the result, replay the raw plan,
compare training arms, and sanity-check gradients.

Exit codes: 0 on success, 1 when the domain itself fails (a planning
budget runs out, training diverges), 2 for configuration and file
problems.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np
import yaml

from .. import __version__
from ..env import EnvConfig, VecTaskEnv, env_config_hash, load_env_config
from ..errors import (CheckpointError, ConfigError, NumericError,
                      PlanningFailure, SolverError)
from ..planner import (extract_demo, plan, read_demo, read_plan, refine,
                       write_demo, write_plan)
from ..ppo import PpoConfig, PpoTrainer, load_policy_bundle
from ..sim import BatchParams, WorldParams, engine, load_scene, scene_hash
from .compare import compare_runs, format_comparison, write_comparison_csv
from .evaluate import evaluate_policy, evaluate_replay
from .gradcheck import run_gradcheck
from .report import read_report
from .runconfig import RunConfig, file_sha256, load_run_config


def _load_world(path):
    return load_scene(path) if path else WorldParams()


def _load_env_cfg(path):
    return load_env_config(path) if path else EnvConfig()


def _load_ppo_cfg(path):
    if not path:
        return PpoConfig()
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid config: {e}")
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    try:
        return PpoConfig.from_dict(raw)
    except TypeError as e:
        raise ConfigError(f"{path}: {e}")


def _home_configuration(world, env_cfg):
    """Initial planner state: arms at the task home, box resting flat
    at the nominal start, heights taken from the planner smoothing."""
    home = VecTaskEnv._solve_home(world, env_cfg)
    z = engine.resting_height(0.0, BatchParams(world, 1), 0,
                              s=world.smoothing_planner)
    x, _ = env_cfg.nominal_start
    return np.concatenate([home, [x, float(z), 0.0]])


# ---------------------------------------------------------------------------
# subcommands


def cmd_plan(args):
    world = _load_world(args.scene)
    env_cfg = _load_env_cfg(args.env)
    initial = _home_configuration(world, env_cfg)
    goal = np.asarray(args.goal if args.goal is not None
                      else env_cfg.goal.q_u, dtype=np.float64)
    raw = plan(initial, goal, world, seed=args.seed,
               max_nodes=args.max_nodes, max_seconds=args.max_seconds)
    refined = refine(raw, world, seed=args.seed)
    demo = extract_demo(refined)
    write_plan(args.out + ".plan", refined)
    write_demo(args.out + ".demo", demo)
    final = refined.q_u[-1]
    print(f"plan: {len(raw)} rows raw, {len(refined)} at control rate, "
          f"final box pose ({final[0]:.4f}, {final[1]:.4f}, {final[2]:.4f})")
    print(f"wrote {args.out}.plan and {args.out}.demo")
    return 0


def _write_runmeta(path, rc, world, env_cfg, ppo_cfg):
    meta = {
        "version": __version__,
        "run": rc.to_dict(),
        "input_hashes": rc.input_hashes(),
        "scene_hash": scene_hash(world),
        "env_hash": env_config_hash(env_cfg),
        "ppo": ppo_cfg.to_dict(),
    }
    with open(path, "w") as fh:
        yaml.safe_dump(meta, fh, sort_keys=True)


def cmd_train(args):
    rc = load_run_config(args.run_config)
    world = _load_world(rc.scene)
    env_cfg = _load_env_cfg(rc.env)
    ppo_cfg = replace(_load_ppo_cfg(rc.ppo), style_mix=rc.style_mix)
    demo_joints = read_demo(rc.demo).q_a if rc.demo is not None else None

    os.makedirs(rc.out_dir, exist_ok=True)
    # the env seed is offset so trainer and environment never share
    # a random stream root
    env = VecTaskEnv(world, env_cfg, batch=ppo_cfg.num_envs,
                     seed=rc.seed + 1000, randomize=True)
    if args.resume:
        trainer = PpoTrainer.restore(args.resume, env,
                                     demo_joints=demo_joints,
                                     deterministic_time=rc.deterministic)
        if trainer.cfg.style_mix != rc.style_mix:
            raise ConfigError(
                f"checkpoint was trained with style_mix "
                f"{trainer.cfg.style_mix}, run config says {rc.style_mix}")
    else:
        trainer = PpoTrainer(env, ppo_cfg, seed=rc.seed,
                             demo_joints=demo_joints,
                             deterministic_time=rc.deterministic)

    total = rc.iterations if rc.iterations is not None \
        else ppo_cfg.max_iterations
    remaining = total - trainer.iteration
    if remaining <= 0:
        print(f"nothing to do: checkpoint already at iteration "
              f"{trainer.iteration} of {total}")
        return 0

    _write_runmeta(os.path.join(rc.out_dir, "runmeta.yaml"),
                   rc, world, env_cfg, trainer.cfg)
    trainer.train(iterations=remaining,
                  csv_path=os.path.join(rc.out_dir, "train.csv"),
                  checkpoint_prefix=os.path.join(rc.out_dir, "ckpt"),
                  log_every=args.log_every,
                  csv_append=bool(args.resume))
    print(f"trained to iteration {trainer.iteration}, "
          f"outputs in {rc.out_dir}")
    return 0


def _policy_for_env(checkpoint, env_batch_dims):
    policy, norm, meta = load_policy_bundle(checkpoint)
    obs_dim, act_dim = env_batch_dims
    if meta.get("obs_dim") != obs_dim or meta.get("act_dim") != act_dim:
        raise CheckpointError(
            f"{checkpoint}: checkpoint dims "
            f"({meta.get('obs_dim')}, {meta.get('act_dim')}) do not match "
            f"the environment ({obs_dim}, {act_dim})")
    return policy, norm, meta


def cmd_eval(args):
    world = _load_world(args.scene)
    env_cfg = _load_env_cfg(args.env)
    policy, norm, _ = _policy_for_env(
        args.checkpoint, (VecTaskEnv.OBS_DIM, VecTaskEnv.ACT_DIM))
    meta = {
        "kind": "policy-eval",
        "checkpoint": os.path.basename(args.checkpoint),
        "checkpoint_sha256": file_sha256(args.checkpoint),
        "scene_hash": scene_hash(world),
        "env_hash": env_config_hash(env_cfg),
        "seed": args.seed,
        "rollouts": args.rollouts,
        "randomize": int(not args.no_randomize),
    }
    report = evaluate_policy(policy, norm, world, env_cfg,
                             n=args.rollouts, seed=args.seed,
                             randomize=not args.no_randomize, meta=meta)
    report.write(args.out)
    agg = report.aggregates()
    rate = agg.get("success_rate", float("nan"))
    print(f"evaluated {args.rollouts} rollouts: success rate {rate:.3f}, "
          f"report in {args.out}")
    return 0


def cmd_replay(args):
    world = _load_world(args.scene)
    env_cfg = _load_env_cfg(args.env)
    plan_t = read_plan(args.plan)
    meta = {
        "kind": "plan-replay",
        "plan": os.path.basename(args.plan),
        "plan_sha256": file_sha256(args.plan),
        "scene_hash": scene_hash(world),
        "env_hash": env_config_hash(env_cfg),
        "seed": args.seed,
        "rollouts": args.rollouts,
        "randomize": int(args.randomize),
    }
    report = evaluate_replay(plan_t, world, env_cfg,
                             n=args.rollouts, seed=args.seed,
                             randomize=args.randomize,
                             hold_to=args.hold_to, meta=meta)
    report.write(args.out)
    agg = report.aggregates()
    rate = agg.get("success_rate", float("nan"))
    print(f"replayed {len(plan_t)} commands over {args.rollouts} "
          f"rollout(s): success rate {rate:.3f}, report in {args.out}")
    return 0


def _group_csvs(paths):
    out = []
    for p in paths:
        out.append(os.path.join(p, "train.csv") if os.path.isdir(p) else p)
    return out


def cmd_compare(args):
    result = compare_runs(_group_csvs(args.a), _group_csvs(args.b),
                          labels=tuple(args.labels))
    print(format_comparison(result))
    if args.out:
        write_comparison_csv(result, args.out)
        print(f"comparison table in {args.out}")
    return 0


def cmd_gradcheck(args):
    res = run_gradcheck(count=args.count, seed=args.seed,
                        max_dim=args.max_dim, rel_tol=args.tol)
    print(f"checked {res.checked} networks in {res.elapsed:.2f} s: "
          f"{res.failures} failure(s), worst rel err {res.max_rel_err:.3e}")
    if not res.ok:
        for shape, err, ok in res.cases:
            if not ok:
                print(f"  FAIL {'x'.join(map(str, shape))}: "
                      f"rel err {err:.3e}")
    return 0 if res.ok else 1


def cmd_check_report(args):
    report = read_report(args.report)
    agg = report.aggregates()
    print(f"{args.report}: {len(report.rows)} rows, aggregates verified")
    for name in sorted(agg):
        print(f"  {name}: {agg[name]:.6f}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="pivotlift",
        description="plan-guided reinforcement learning for planar "
                    "pivot-and-lift manipulation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="grow a contact plan and export it")
    sp.add_argument("--scene", help="scene parameter file (default built-in)")
    sp.add_argument("--env", help="environment config file")
    sp.add_argument("--goal", nargs=3, type=float,
                    metavar=("X", "Z", "THETA"),
                    help="box pose goal (default from env config)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-nodes", type=int, default=20000)
    sp.add_argument("--max-seconds", type=float, default=None)
    sp.add_argument("--out", required=True,
                    help="output prefix, writes <out>.plan and <out>.demo")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("train", help="train a policy from a run config")
    sp.add_argument("run_config", help="run configuration file")
    sp.add_argument("--resume", help="checkpoint to continue from")
    sp.add_argument("--log-every", type=int, default=0,
                    help="print progress every N iterations")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a trained policy")
    sp.add_argument("checkpoint")
    sp.add_argument("--scene")
    sp.add_argument("--env")
    sp.add_argument("-n", "--rollouts", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-randomize", action="store_true",
                    help="evaluate on the nominal scene only")
    sp.add_argument("--out", required=True, help="report CSV path")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("replay", help="execute a plan open loop")
    sp.add_argument("plan")
    sp.add_argument("--scene")
    sp.add_argument("--env")
    sp.add_argument("-n", "--rollouts", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--randomize", action="store_true",
                    help="apply domain randomization during replay")
    sp.add_argument("--hold-to", type=int, default=None,
                    help="hold the final command until this many steps")
    sp.add_argument("--out", required=True, help="report CSV path")
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("compare", help="compare two groups of training runs")
    sp.add_argument("--a", nargs="+", required=True,
                    help="run directories or train CSVs, first group")
    sp.add_argument("--b", nargs="+", required=True,
                    help="run directories or train CSVs, second group")
    sp.add_argument("--labels", nargs=2, default=("a", "b"),
                    metavar=("LA", "LB"))
    sp.add_argument("--out", help="write the aligned table as CSV")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("gradcheck",
                        help="verify gradients of random small networks")
    sp.add_argument("--count", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-dim", type=int, default=16)
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("check-report",
                        help="re-verify a report file's aggregates")
    sp.add_argument("report")
    sp.set_defaults(func=cmd_check_report)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PlanningFailure as e:
        best = f" (best distance {e.best_distance:.4f})" \
            if e.best_distance is not None else ""
        print(f"planning failed: {e}{best}", file=sys.stderr)
        return 1
    except (NumericError, SolverError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
