"""Operator command line.

Subcommands:
    dataset-gen  write the bundled grammar corpora for both environments
    augment      rotate180/recolor a gridbuild dataset
    translate    instruction file -> subtask rows, per-line diagnostics
    train        PPO run(s) from a config file: checkpoint + CSV logs
    eval         score the scripted oracle or a checkpoint on a dataset
    report       pivot a curriculum log into probability/success CSVs
    replay       re-execute recorded episodes and verify their outcomes
    repl         interactive loop: type instructions, watch the agent run

Artifacts are deterministic for a given (config, seeds): no timestamps,
sorted JSON keys, fixed float formatting.  Exit codes: 0 success, 1 user
error (bad flags, config, or input files), 2 internal error (crashes,
replay divergence).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import gridbuild as gb
from . import techlite as tl
from .blocks import Block
from .codecs import (classify_figure, normalize_blocks, parse_coords,
                     recolor_blocks, rotate180_blocks)
from .config import ConfigError, RunConfig, load_config, validate
from .curriculum import CurriculumSampler, UniformSampler
from .datasets import (Sample, decode_row, encode_row, expected_final,
                       generate_corpora, load_dataset, plan_blocks, write_jsonl)
from .grammar import GrammarError, augment_recolor, augment_rotate180, translate
from .metrics import class_breakdown, f1_score, success_report
from .taskman import (Achieve, ManagedEnv, PlaceBlock, RemoveBlock,
                      RewardConfig, TaskPlan)
from .train import (OBS_DIMS, N_ACTIONS, TrainTask, load_checkpoint,
                    run_episode, save_checkpoint, train)
from .agents import run_oracle


class UserError(Exception):
    """Operator mistake: report and exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserError(message)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _write_csv(path, rows, fieldnames) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row.get(k, "")) for k in fieldnames])


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _print_diagnostics(name, diagnostics) -> None:
    for lineno, message in diagnostics:
        print(f"{name}:{lineno}: {message}", file=sys.stderr)


def _load_samples(path, env: str | None = None):
    """Dataset rows for one env; diagnostics go to stderr, never swallowed."""
    try:
        samples, diagnostics = load_dataset(path)
    except OSError as exc:
        raise UserError(str(exc)) from None
    _print_diagnostics(path, diagnostics)
    if env is not None:
        kept = [s for s in samples if s.env == env]
        for s in samples:
            if s.env != env:
                print(f"{path}: row {s.id}: env {s.env!r} skipped", file=sys.stderr)
        return kept
    return samples


def _grid_blocks(grid) -> list:
    return [Block(int(x), int(y), int(z), int(grid[x, y, z]))
            for x, y, z in np.argwhere(grid > 0)]


def _env_factory(sample: Sample, reward: RewardConfig, mode: str,
                 focus: int | None = None):
    if sample.env == "gridbuild":
        def build(seed: int) -> ManagedEnv:
            return ManagedEnv(gb.GridBuild(), sample.plan, reward, mode=mode,
                              initial_blocks=sample.initial, focus=focus)
    else:
        def build(seed: int) -> ManagedEnv:
            return ManagedEnv(tl.Techlite(), sample.plan, reward, focus=focus)
    return build


def _episode_seed(seed: int, k: int) -> int:
    return int(np.random.default_rng((seed, 5, k)).integers(2 ** 31))


# -- dataset-gen ---------------------------------------------------------


def _cmd_dataset_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    corpora = generate_corpora(
        args.seed, gridbuild_train=args.gridbuild_train,
        gridbuild_test=args.gridbuild_test, techlite_train=args.techlite_train,
        techlite_test=args.techlite_test)
    for stem, rows in corpora.items():
        path = os.path.join(args.out, stem + ".jsonl")
        write_jsonl(path, rows)
        print(f"wrote {path} ({len(rows)} rows)")
    return 0


# -- augment ---------------------------------------------------------------


def _parse_color_map(text: str) -> dict:
    mapping = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            src, dst = part.split(":")
            mapping[int(src)] = int(dst)
        except ValueError:
            raise UserError(f"--map: expected 'src:dst[,..]', got {text!r}") from None
    return mapping


def _cmd_augment(args) -> int:
    samples = _load_samples(args.infile, env="gridbuild")
    if args.op == "recolor":
        if args.map:
            mapping = _parse_color_map(args.map)
        else:
            rng = np.random.default_rng((args.seed, 19))
            perm = rng.permutation(np.arange(1, 7))
            mapping = {c: int(perm[c - 1]) for c in range(1, 7)}
    rows, skipped = [], 0
    for sample in samples:
        blocks = plan_blocks(sample.plan)
        src = {"instruction": sample.instruction, "blocks": blocks}
        if args.op == "rotate180":
            out = augment_rotate180(src)
            if out.get("unaligned"):
                # text with no direction words to swap cannot stay aligned
                # with the rotated figure; emitting it would poison the file
                print(f"{args.infile}: row {sample.id}: unaligned rotation "
                      "skipped", file=sys.stderr)
                skipped += 1
                continue
            initial = tuple(rotate180_blocks(list(sample.initial)))
            suffix = "rot"
        else:
            out = augment_recolor(src, mapping)
            initial = tuple(recolor_blocks(list(sample.initial), mapping))
            suffix = "rec"
        new_blocks = out["blocks"]
        if all(b.color for b in new_blocks):
            # store pure figures in canonical position, same as dataset-gen
            new_blocks = normalize_blocks(new_blocks)
        subtasks = [PlaceBlock(b) if b.color else RemoveBlock(b.x, b.y, b.z)
                    for b in new_blocks]
        new = Sample(id=f"{sample.id}-{suffix}", env="gridbuild",
                     instruction=out["instruction"],
                     plan=TaskPlan(subtasks, source_id=f"{sample.id}-{suffix}"),
                     initial=initial, format="coords")
        rows.append(encode_row(new))
    write_jsonl(args.out, rows)
    print(f"wrote {args.out} ({len(rows)} rows, {skipped} skipped)")
    return 0


# -- translate ---------------------------------------------------------------


def _cmd_translate(args) -> int:
    try:
        with open(args.infile, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UserError(str(exc)) from None
    rows, failures = [], 0
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except ValueError as exc:
            print(f"{args.infile}:{lineno}: {exc}", file=sys.stderr)
            failures += 1
            continue
        if isinstance(payload, str):
            payload = {"instruction": payload}
        if not isinstance(payload, dict) or "instruction" not in payload:
            print(f"{args.infile}:{lineno}: no instruction field", file=sys.stderr)
            failures += 1
            continue
        rid = str(payload.get("id", f"row-{lineno:03d}"))
        try:
            plan = translate(payload["instruction"], args.env)
        except GrammarError as exc:
            print(f"{args.infile}:{lineno}: {exc}", file=sys.stderr)
            failures += 1
            continue
        initial = ()
        if payload.get("initial"):
            initial = tuple(parse_coords(payload["initial"]))
        sample = Sample(id=rid, env=args.env, instruction=payload["instruction"],
                        plan=plan, initial=initial,
                        format="ach" if args.env == "techlite" else "coords")
        rows.append(encode_row(sample))
    write_jsonl(args.out, rows)
    print(f"wrote {args.out} ({len(rows)} rows, {failures} failed)")
    return 0


# -- train ---------------------------------------------------------------


def _train_tasks(samples, cfg: RunConfig) -> list:
    """Task families for the sampler.

    Gridbuild trains per-subtask episodes: earlier plan steps are pre-built
    and the episode owns one block. Techlite trains the deduplicated
    single-achievement families named by the dataset.
    """
    tasks = []
    if cfg.env == "gridbuild":
        for sample in samples:
            for k in range(len(sample.plan.subtasks)):
                tasks.append(TrainTask(
                    id=f"{sample.id}:{k}",
                    build=_env_factory(sample, cfg.reward, cfg.mode, focus=k)))
    else:
        seen = []
        for sample in samples:
            for sub in sample.plan.subtasks:
                if sub.achievement not in seen:
                    seen.append(sub.achievement)
        for name in seen:
            plan = TaskPlan([Achieve(name, 1)], source_id=name)
            sample = Sample(id=name, env="techlite", instruction=name,
                            plan=plan, format="ach")
            tasks.append(TrainTask(
                id=name, build=_env_factory(sample, cfg.reward, cfg.mode)))
    if not tasks:
        raise UserError("dataset produced no training tasks")
    return tasks


def _run_config(args) -> RunConfig:
    try:
        cfg = load_config(args.config)
        for name in ("sampler", "dataset", "out", "total_steps"):
            value = getattr(args, name, None)
            if value is not None:
                setattr(cfg, "out_dir" if name == "out" else name, value)
        validate(cfg)
    except (ConfigError, OSError) as exc:
        raise UserError(str(exc)) from None
    if not cfg.dataset:
        raise UserError("[run] dataset: required for this command")
    return cfg


def _cmd_train(args) -> int:
    cfg = _run_config(args)
    samples = _load_samples(cfg.dataset, env=cfg.env)
    tasks = _train_tasks(samples, cfg)
    task_ids = [t.id for t in tasks]
    for seed in cfg.seeds:
        sampler_cls = CurriculumSampler if cfg.sampler == "curriculum" else UniformSampler
        sampler = sampler_cls(task_ids, cfg.curriculum)
        result = train(cfg.ppo, cfg.env, tasks, sampler,
                       total_steps=cfg.total_steps, seed=seed)
        seed_dir = os.path.join(cfg.out_dir, f"seed-{seed}")
        os.makedirs(seed_dir, exist_ok=True)
        meta = {
            "ppo": dataclasses.asdict(cfg.ppo),
            "obs_dim": OBS_DIMS[cfg.env],
            "n_actions": N_ACTIONS[cfg.env],
            "env": cfg.env,
            "mode": cfg.mode,
            "sampler": cfg.sampler,
            "seed": seed,
        }
        save_checkpoint(os.path.join(seed_dir, "checkpoint.npz"), result.agent, meta)
        train_fields = ["update", "env_steps", "episodes", "mean_reward",
                        "mean_success"]
        extra = sorted({k for row in result.train_rows for k in row}
                       - set(train_fields))
        _write_csv(os.path.join(seed_dir, "train_log.csv"), result.train_rows,
                   train_fields + extra)
        _write_csv(os.path.join(seed_dir, "curriculum_log.csv"),
                   result.curriculum_rows,
                   ["update", "env_steps", "task", "r", "delta", "p"])
        last = result.train_rows[-1] if result.train_rows else {}
        print(f"seed {seed}: {result.env_steps} steps, {result.updates} updates, "
              f"mean_success {last.get('mean_success', 0.0):.3f} -> {seed_dir}")
    return 0


# -- eval ---------------------------------------------------------------


def _record_episode(record_dir, sample: Sample, cfg: RunConfig, tag: int,
                    ep_seed: int, actions, outcome: dict) -> None:
    payload = {
        "row": encode_row(sample),
        "mode": cfg.mode,
        "reward": dataclasses.asdict(cfg.reward),
        "seed": ep_seed,
        "actions": list(map(int, actions)),
        "outcome": outcome,
    }
    path = os.path.join(record_dir, f"{sample.id}-s{tag}.json")
    _write_json(path, payload)


def _eval_gridbuild(samples, cfg: RunConfig, agent, args) -> dict:
    per_row, results = [], []
    total_bonus = 0.0
    for i, sample in enumerate(samples):
        target = expected_final(sample)
        if not target:
            print(f"row {sample.id}: empty target grid, skipped", file=sys.stderr)
            continue
        build = _env_factory(sample, cfg.reward, cfg.mode)
        scores, wins = [], 0
        for seed in cfg.seeds:
            ep_seed = _episode_seed(seed, i)
            menv = build(ep_seed)
            if agent is None:
                out = run_oracle(menv, ep_seed)
            else:
                out = run_episode(agent, menv, "gridbuild", ep_seed,
                                  greedy=args.greedy)
            report = f1_score(_grid_blocks(menv.env.grid), target)
            scores.append(report.f1)
            wins += int(out["success"])
            total_bonus += out["bonus"]
            if args.record:
                _record_episode(args.record, sample, cfg, seed, ep_seed,
                                out["actions"],
                                {"success": bool(out["success"]),
                                 "completed": int(out["completed"]),
                                 "bonus": float(out["bonus"]),
                                 "f1": report.f1})
        f1 = float(np.mean(scores))
        classes = sorted(classify_figure(target))
        per_row.append({"id": sample.id, "f1": f1,
                        "success": wins / len(cfg.seeds),
                        "subtasks": len(sample.plan.subtasks),
                        "classes": " ".join(classes)})
        results.append({"f1": f1, "classes": classes})
    total = float(np.mean([r["f1"] for r in per_row])) if per_row else 0.0
    return {
        "env": "gridbuild",
        "n": len(per_row),
        "total_f1": total,
        "by_class": class_breakdown(results),
        "total_bonus": total_bonus,
        "per_row": per_row,
    }


def _eval_techlite(samples, cfg: RunConfig, agent, args) -> dict:
    episodes, per_row = [], []
    for i, sample in enumerate(samples):
        labels = [s.achievement for s in sample.plan.subtasks]
        build = _env_factory(sample, cfg.reward, cfg.mode)
        wins = 0
        for seed in cfg.seeds:
            ep_seed = _episode_seed(seed, i)
            menv = build(ep_seed)
            if agent is None:
                out = run_oracle(menv, ep_seed)
            else:
                out = run_episode(agent, menv, "techlite", ep_seed,
                                  greedy=args.greedy)
            episodes.append({"subtasks": labels, "completed": out["completed"]})
            wins += int(out["success"])
            if args.record:
                _record_episode(args.record, sample, cfg, seed, ep_seed,
                                out["actions"],
                                {"success": bool(out["success"]),
                                 "completed": int(out["completed"]),
                                 "bonus": float(out["bonus"])})
        per_row.append({"id": sample.id, "success": wins / len(cfg.seeds),
                        "subtasks": len(labels)})
    report = success_report(episodes)
    return {
        "env": "techlite",
        "n": report.n,
        "total_success": report.total,
        "per_subtask": report.per_subtask,
        "per_row": per_row,
    }


def _cmd_eval(args) -> int:
    cfg = _run_config(args)
    samples = _load_samples(cfg.dataset, env=cfg.env)
    if not samples:
        raise UserError(f"{cfg.dataset}: no usable {cfg.env} rows")
    agent = None
    if args.checkpoint:
        try:
            agent, meta = load_checkpoint(args.checkpoint)
        except OSError as exc:
            raise UserError(str(exc)) from None
        if meta.get("env", cfg.env) != cfg.env:
            raise UserError(
                f"checkpoint was trained on {meta['env']}, config says {cfg.env}")
    if args.record:
        os.makedirs(args.record, exist_ok=True)
    os.makedirs(cfg.out_dir, exist_ok=True)
    if cfg.env == "gridbuild":
        summary = _eval_gridbuild(samples, cfg, agent, args)
        fields = ["id", "f1", "success", "subtasks", "classes"]
        print(f"total f1 {summary['total_f1']:.4f} over {summary['n']} rows")
    else:
        summary = _eval_techlite(samples, cfg, agent, args)
        fields = ["id", "success", "subtasks"]
        print(f"total success {summary['total_success']:.4f} over {summary['n']} rows")
    per_row = summary.pop("per_row")
    _write_csv(os.path.join(cfg.out_dir, "eval_rows.csv"), per_row, fields)
    _write_json(os.path.join(cfg.out_dir, "eval_summary.json"), summary)
    return 0


# -- report ---------------------------------------------------------------


def _cmd_report(args) -> int:
    src = os.path.join(args.run, "curriculum_log.csv")
    try:
        with open(src, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UserError(str(exc)) from None
    if not rows:
        raise UserError(f"{src}: empty log")
    out_dir = args.out or args.run
    os.makedirs(out_dir, exist_ok=True)
    tasks = sorted({r["task"] for r in rows})
    by_update: dict = {}
    for r in rows:
        key = (int(r["update"]), int(r["env_steps"]))
        by_update.setdefault(key, {})[r["task"]] = r
    for name, column in (("probs.csv", "p"), ("success.csv", "r")):
        out_rows = []
        for (update, env_steps), cells in sorted(by_update.items()):
            row = {"update": update, "env_steps": env_steps}
            for task in tasks:
                row[task] = float(cells[task][column]) if task in cells else ""
            out_rows.append(row)
        _write_csv(os.path.join(out_dir, name), out_rows,
                   ["update", "env_steps"] + tasks)
        print(f"wrote {os.path.join(out_dir, name)}")
    return 0


# -- replay ---------------------------------------------------------------


def _cmd_replay(args) -> int:
    diverged = 0
    for path in args.files:
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
            sample = decode_row(payload["row"])
            reward = RewardConfig(**payload.get("reward", {}))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UserError(f"{path}: {exc}") from None
        build = _env_factory(sample, reward, payload.get("mode", "flying"))
        menv = build(payload["seed"])
        menv.reset(payload["seed"])
        for action in payload["actions"]:
            if menv.done:
                break
            menv.step(int(action))
        got = {"success": bool(menv.success), "completed": int(menv.idx),
               "bonus": float(menv.bonus_paid)}
        want = payload["outcome"]
        same = (got["success"] == bool(want["success"])
                and got["completed"] == int(want["completed"])
                and abs(got["bonus"] - float(want["bonus"])) < 1e-9)
        if same:
            print(f"{path}: ok ({got['completed']} subtasks, "
                  f"bonus {got['bonus']:.3f})")
        else:
            print(f"{path}: DIVERGED recorded={want} replayed={got}",
                  file=sys.stderr)
            diverged += 1
    if diverged:
        print(f"{diverged} replay(s) diverged", file=sys.stderr)
        return 2
    return 0


# -- repl ---------------------------------------------------------------


def _cmd_repl(args) -> int:
    agent = None
    if args.checkpoint:
        agent, meta = load_checkpoint(args.checkpoint)
        if meta.get("env", args.env) != args.env:
            raise UserError(
                f"checkpoint was trained on {meta['env']}, --env says {args.env}")
    reward = RewardConfig()
    interactive = sys.stdin.isatty()
    episode = 0
    if interactive:
        print(f"{args.env} repl; type an instruction, or 'quit' to leave")
    while True:
        if interactive:
            print("> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        if line in ("quit", "exit"):
            break
        try:
            plan = translate(line, args.env)
        except GrammarError as exc:
            print(f"parse error: {exc}")
            continue
        subtask_names = [type(s).__name__ for s in plan.subtasks]
        print(f"plan: {len(plan.subtasks)} subtask(s): {', '.join(subtask_names)}")
        sample = Sample(id=f"repl-{episode:03d}", env=args.env, instruction=line,
                        plan=plan,
                        format="ach" if args.env == "techlite" else "coords")
        build = _env_factory(sample, reward, args.mode)
        ep_seed = _episode_seed(args.seed, episode)
        episode += 1
        menv = build(ep_seed)
        if agent is None:
            out = run_oracle(menv, ep_seed)
        else:
            out = run_episode(agent, menv, args.env, ep_seed, greedy=False)
        status = "success" if out["success"] else "failed"
        line_out = (f"{status}: {out['completed']}/{len(plan.subtasks)} subtasks, "
                    f"bonus {out['bonus']:.2f}")
        if args.env == "gridbuild":
            target = expected_final(sample)
            if target:
                line_out += f", f1 {f1_score(_grid_blocks(menv.env.grid), target).f1:.3f}"
        print(line_out)
    return 0


# -- entry ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="instructrl", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset-gen", help="write the bundled corpora")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gridbuild-train", type=int, default=109)
    p.add_argument("--gridbuild-test", type=int, default=41)
    p.add_argument("--techlite-train", type=int, default=60)
    p.add_argument("--techlite-test", type=int, default=20)
    p.set_defaults(func=_cmd_dataset_gen)

    p = sub.add_parser("augment", help="rotate180/recolor a gridbuild dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--op", choices=("rotate180", "recolor"), required=True)
    p.add_argument("--map", help="recolor map like '1:3,3:1'")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("translate", help="instructions -> subtask rows")
    p.add_argument("--env", choices=("gridbuild", "techlite"), required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("train", help="PPO training per config file")
    p.add_argument("--config", required=True)
    p.add_argument("--sampler", choices=("uniform", "curriculum"))
    p.add_argument("--dataset")
    p.add_argument("--total-steps", type=int, dest="total_steps")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score oracle or checkpoint on a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--out")
    p.add_argument("--greedy", action="store_true",
                   help="argmax actions instead of sampling")
    p.add_argument("--record", help="directory for replayable episode files")
    p.set_defaults(func=_cmd_eval, sampler=None, total_steps=None)

    p = sub.add_parser("report", help="curriculum log -> probability/success CSVs")
    p.add_argument("--run", required=True, help="seed dir from train")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("replay", help="re-execute recorded episodes")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("repl", help="interactive instruction loop")
    p.add_argument("--env", choices=("gridbuild", "techlite"), required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--mode", choices=("flying", "walking"), default="flying")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_repl)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 -- last-resort boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
