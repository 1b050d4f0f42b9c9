"""Command-line entry point.

Subcommands: gen, solve, eval, oracle, sft-export, theory, render, diag.
Flags mirror an optional JSON config file (--config); explicit flags win.
Runs given --out write their outputs plus a manifest.json (resolved config,
seeds, tool version, output checksums) sufficient to reproduce the run.

Exit codes: 0 success, 1 usage error, 2 runtime error.  Errors are emitted
as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, datagen, harness, oracle, sliding, sokoban, theory
from .core import Budget, DEFAULT_DEPTHS, DepthSet, format_actions


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_range(text: str, kind=int) -> tuple:
    """"lo:hi" inclusive range, or a single value meaning lo == hi."""
    parts = text.split(":")
    if len(parts) == 1:
        value = kind(parts[0])
        return value, value
    if len(parts) == 2:
        lo, hi = kind(parts[0]), kind(parts[1])
        if lo > hi:
            raise UsageError(f"empty range {text!r}")
        return lo, hi
    raise UsageError(f"cannot parse range {text!r}")


def _parse_grid(text: str) -> list[float]:
    """"start:stop:step" inclusive float grid, or comma-separated values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise UsageError("grid step must be positive")
        grid = []
        value = start
        while value <= stop + 1e-12:
            grid.append(round(value, 12))
            value += step
        return grid
    return [float(p) for p in text.split(",") if p]


def _parse_depths(text: str) -> DepthSet:
    return DepthSet(tuple(int(p) for p in text.split(",") if p))


def _merge_config(args: argparse.Namespace, parser_defaults: dict) -> None:
    """Fill arguments still at their defaults from the JSON config file."""
    if not getattr(args, "config", None):
        return
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(config, dict):
        raise UsageError("config file must hold a JSON object")
    for key, value in config.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise UsageError(f"config key {key!r} is not a known flag")
        if getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)


def _instance_from_obj(obj: dict):
    task = obj.get("task")
    if task == "sliding":
        return sliding.from_json(json.dumps(obj))
    if task == "sokoban":
        return sokoban.from_json(json.dumps(obj))
    raise UsageError(f"unknown task {task!r} in instance line")


def _load_instances(path: str) -> list:
    instances = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read instances {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            instances.append(_instance_from_obj(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise UsageError(f"{path}:{line_no}: bad instance: {exc}") from exc
    if not instances:
        raise UsageError(f"no instances in {path}")
    return instances


def _resolve_budget_arg(text: str):
    if text in harness.BUDGET_PRESETS:
        return text
    try:
        return Budget(K=int(text))
    except ValueError:
        raise UsageError(
            f"budget must be 'loose', 'tight', or an integer, got {text!r}"
        ) from None


class _Run:
    """Collects outputs and writes the manifest at the end."""

    def __init__(self, out_dir: Optional[str], subcommand: str,
                 config: dict):
        self.dir = Path(out_dir) if out_dir else None
        self.subcommand = subcommand
        self.config = config
        self.outputs: dict[str, str] = {}
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write_text(self, name: str, text: str) -> Optional[Path]:
        if not self.dir:
            return None
        path = self.dir / name
        path.write_text(text)
        self.outputs[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def write_bytes(self, name: str, blob: bytes) -> Optional[Path]:
        if not self.dir:
            return None
        path = self.dir / name
        path.write_bytes(blob)
        self.outputs[name] = hashlib.sha256(blob).hexdigest()
        return path

    def note_file(self, path: Path) -> None:
        blob = path.read_bytes()
        self.outputs[str(path.relative_to(self.dir))] = (
            hashlib.sha256(blob).hexdigest())

    def finish(self) -> None:
        if not self.dir:
            return
        manifest = {
            "tool": "commitgym",
            "version": __version__,
            "subcommand": self.subcommand,
            "config": self.config,
            "outputs": dict(sorted(self.outputs.items())),
        }
        (self.dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _public_config(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit_table(rows: list[dict], fmt: str, out) -> None:
    if fmt == "csv":
        if not rows:
            return
        writer = csv.DictWriter(out, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    else:
        for row in rows:
            out.write(json.dumps(row) + "\n")


def _cmd_gen(args) -> int:
    rng_base = args.seed
    lines = []
    if args.task == "sliding":
        lo, hi = _parse_range(args.depth)
        for i in range(args.count):
            depth = lo + (i % (hi - lo + 1))
            instance = sliding.generate(args.n, depth, seed=rng_base + i)
            lines.append(sliding.to_json(instance))
    elif args.task == "sokoban":
        lo, hi = _parse_range(args.pulls)
        for i in range(args.count):
            instance = sokoban.generate(args.width, args.height, args.boxes,
                                        seed=rng_base + i, pulls=(lo, hi))
            lines.append(sokoban.to_json(instance))
    else:
        raise UsageError(f"unknown task {args.task!r}")
    text = "".join(line + "\n" for line in lines)
    run = _Run(args.out, "gen", _public_config(args))
    path = run.write_text("instances.jsonl", text)
    run.finish()
    if path:
        print(str(path))
    else:
        sys.stdout.write(text)
    return 0


def _cmd_solve(args) -> int:
    payloads = []
    if args.state:
        payloads.append(json.loads(args.state))
    if args.inp:
        for line in Path(args.inp).read_text().splitlines():
            if line.strip():
                payloads.append(json.loads(line))
    if not payloads:
        raise UsageError("solve needs --state or --in")
    rows = []
    for obj in payloads:
        if "seed" in obj:
            instance = _instance_from_obj(obj)
            state, instance_id = instance.state, instance.instance_id
        else:
            state, instance_id = datagen.state_from_obj(obj), ""
        try:
            solution = oracle.optimal_solution(state)
            rows.append({
                "instance_id": instance_id,
                "task": obj["task"],
                "d": len(solution),
                "actions": "".join(format_actions(solution)),
            })
        except Exception as exc:
            from .core import Unsolvable
            if not isinstance(exc, Unsolvable):
                raise
            rows.append({
                "instance_id": instance_id,
                "task": obj["task"],
                "d": None,
                "actions": None,
            })
    if args.format == "csv":
        _emit_table(rows, "csv", sys.stdout)
    else:
        for row in rows:
            print(json.dumps(row))
    return 0


def _cmd_eval(args) -> int:
    instances = _load_instances(args.inp)
    spec = harness.parse_policy_spec(args.policy, seed=args.seed,
                                     timeout=args.timeout)
    budget = _resolve_budget_arg(args.budget)
    depth_set = _parse_depths(args.depths)
    transcripts = harness.run_batch(spec, instances, budget,
                                    workers=args.workers,
                                    depth_set=depth_set)
    summary = harness.summarize(transcripts, instances, spec, budget,
                                depth_set=depth_set)
    run = _Run(args.out, "eval", _public_config(args))
    run.write_text("summary.json", summary.to_json() + "\n")
    if args.transcripts:
        dump = "".join(
            json.dumps(harness.transcript_to_obj(t)) + "\n"
            for t in transcripts)
        run.write_text("transcripts.jsonl", dump)
    run.finish()
    print(summary.to_json())
    return 0


def _cmd_oracle(args) -> int:
    instances = _load_instances(args.inp)
    budget = _resolve_budget_arg(args.budget)
    resolved = {
        task: Budget(K=harness.resolve_budget(budget, task))
        for task in {i.task for i in instances}
    }
    result = oracle.oracle_distribution(instances, resolved,
                                        depths=_parse_depths(args.depths))
    result.pop("transcripts")
    run = _Run(args.out, "oracle", _public_config(args))
    run.write_text("histogram.json", json.dumps(result) + "\n")
    run.finish()
    if args.format == "csv":
        rows = [{"h": h, "freq": f}
                for h, f in zip(result["h"], result["freq"])]
        _emit_table(rows, "csv", sys.stdout)
    else:
        print(json.dumps(result))
    return 0


def _cmd_sft_export(args) -> int:
    instances = _load_instances(args.inp)
    samples = []
    for instance in instances:
        expert = oracle.optimal_solution(instance.state)
        samples.extend(datagen.expand_counterfactual(
            expert, instance.state, depths=_parse_depths(args.depths),
            instance_id=instance.instance_id))
    run = _Run(args.out, "sft-export", _public_config(args))
    if not run.dir:
        raise UsageError("sft-export needs --out")
    path = run.dir / "sft.jsonl"
    count = datagen.export_jsonl(samples, path, render=args.render)
    run.note_file(path)
    if args.render:
        for image in sorted((run.dir / "sft_images").glob("*.ppm")):
            run.note_file(image)
    run.finish()
    print(json.dumps({"samples": count, "path": str(path)}))
    return 0


def _cmd_theory(args) -> int:
    rows: list[dict] = []
    if args.phase_scan:
        grid = _parse_grid(args.alpha)
        h_grid = theory.default_h_grid(max_exponent=args.h_max_exp)
        for row in theory.phase_scan(grid, c=args.c, T=args.T,
                                     h_grid=h_grid, check=args.check):
            rows.append({
                "alpha": row.alpha, "c": row.c, "T": row.T,
                "argmax_h": row.argmax_h, "interior": row.interior,
                "hstar": row.hstar, "matches_prediction": row.matches_prediction,
                "log_success": row.log_success,
            })
    elif args.dominance:
        states = tuple(
            tuple(float(x) for x in pair.split(","))
            for pair in args.states.split(";") if pair)
        visits = tuple(int(v) for v in args.visits.split(",") if v)
        model = theory.StateModel(states=states, visit_sequence=visits,
                                  p0=args.p0)
        result = theory.dominance_check(model,
                                        depths=_parse_depths(args.depths))
        rows.append({
            "adaptive_logp": result.adaptive_logp,
            "best_fixed_logp": result.best_fixed_logp,
            "best_fixed_h": result.best_fixed_h,
            "strict": result.strict,
            "gap": result.gap,
        })
    else:
        raise UsageError("theory needs --phase-scan or --dominance")
    run = _Run(args.out, "theory", _public_config(args))
    buffer = io.StringIO()
    _emit_table(rows, args.format, buffer)
    name = "phase_scan" if args.phase_scan else "dominance"
    run.write_text(f"{name}.{args.format}", buffer.getvalue())
    run.finish()
    sys.stdout.write(buffer.getvalue())
    return 0


def _cmd_render(args) -> int:
    targets = []
    if args.state:
        targets.append(("state", datagen.state_from_obj(json.loads(args.state))))
    if args.inp:
        for instance in _load_instances(args.inp):
            targets.append((instance.instance_id, instance.state))
    if not targets:
        raise UsageError("render needs --state or --in")
    run = _Run(args.out, "render", _public_config(args))
    if not run.dir:
        raise UsageError("render needs --out")
    for name, state in targets:
        run.write_bytes(f"{name or 'state'}.ppm", datagen.render_state(state))
    run.finish()
    print(json.dumps({"rendered": len(targets), "dir": str(run.dir)}))
    return 0


def _cmd_diag(args) -> int:
    try:
        lines = Path(args.transcripts).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {args.transcripts}: {exc}") from exc
    rows = []
    episodes = []
    for line in lines:
        if line.strip():
            episodes.append(json.loads(line))
    for split in ("all", "solved", "unsolved"):
        if args.split != "all" and split != args.split:
            continue
        if split == "all":
            selected = episodes
        else:
            want = split == "solved"
            selected = [e for e in episodes if e["solved"] == want]
        wasted, backward, ppa = [], [], []
        for episode in selected:
            deltas = []
            for decision in episode["decisions"]:
                if decision.get("deltas") is None:
                    raise UsageError(
                        "transcripts lack per-step deltas; re-run eval "
                        "without disabling progress tracking")
                deltas.extend(decision["deltas"])
            wasted.append(sum(1 for d in deltas if d == 0))
            backward.append(sum(1 for d in deltas if d < 0))
            if deltas:
                ppa.append(sum(deltas) / len(deltas))
        def mean(xs):
            return sum(xs) / len(xs) if xs else 0.0
        rows.append({
            "split": split,
            "episodes": len(selected),
            "wasted_per_episode": mean(wasted),
            "backward_per_episode": mean(backward),
            "progress_per_action": mean(ppa),
        })
    _emit_table(rows, args.format, sys.stdout)
    return 0


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="commitgym",
                     description="Puzzle gym, exact solvers, and "
                                 "budget-metered policy evaluation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override")
        p.add_argument("--out", help="output directory (writes manifest)")

    p = sub.add_parser("gen", help="generate solver-verified instances")
    common(p)
    p.add_argument("--task", required=True, choices=["sliding", "sokoban"])
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=3, help="sliding board size")
    p.add_argument("--depth", default="10",
                   help="sliding optimal depth, value or lo:hi")
    p.add_argument("--width", type=int, default=7)
    p.add_argument("--height", type=int, default=7)
    p.add_argument("--boxes", type=int, default=2)
    p.add_argument("--pulls", default="4:24",
                   help="sokoban scramble pulls, value or lo:hi")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="print optimal actions and distance")
    common(p)
    p.add_argument("--in", dest="inp", help="instance JSONL file")
    p.add_argument("--state", help="single state/instance JSON")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("eval", help="evaluate a policy over a pool")
    common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--policy", required=True,
                   help="fixed:H | random | oracle | external:<command>")
    p.add_argument("--budget", default="loose",
                   help="loose | tight | integer K")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=60.0,
                   help="external policy decision timeout (s)")
    p.add_argument("--depths", default="1,2,4,8")
    p.add_argument("--transcripts", action="store_true",
                   help="also dump per-episode transcripts.jsonl")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("oracle", help="oracle depth histogram over a pool")
    common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--budget", default="loose")
    p.add_argument("--depths", default="1,2,4,8")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("sft-export", help="expand expert paths to JSONL")
    common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--depths", default="1,2,4,8")
    p.add_argument("--render", action="store_true",
                   help="also write one PPM per sample")
    p.set_defaults(func=_cmd_sft_export)

    p = sub.add_parser("theory", help="phase scan and dominance tables")
    common(p)
    p.add_argument("--phase-scan", action="store_true")
    p.add_argument("--dominance", action="store_true")
    p.add_argument("--alpha", default="0.25:1.5:0.25",
                   help="grid start:stop:step or comma list")
    p.add_argument("--c", type=float, default=0.01)
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--h-max-exp", dest="h_max_exp", type=int, default=8,
                   help="h grid spans 1..10^this")
    p.add_argument("--no-check", dest="check", action="store_false",
                   help="report mismatching rows instead of raising")
    p.add_argument("--states", default="0.001,0.5;0.34,0.5",
                   help="semicolon-separated c,alpha pairs")
    p.add_argument("--visits", default="0,1,0,1,0,1,0,1")
    p.add_argument("--p0", type=float, default=1.0)
    p.add_argument("--depths", default="1,2,4,8")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("render", help="write PPM rasters of states")
    common(p)
    p.add_argument("--in", dest="inp", help="instance JSONL file")
    p.add_argument("--state", help="single state JSON")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("diag", help="recompute diagnostics from transcripts")
    common(p)
    p.add_argument("--transcripts", required=True,
                   help="transcripts.jsonl from eval --transcripts")
    p.add_argument("--split", choices=["all", "solved", "unsolved"],
                   default="all")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=_cmd_diag)

    defaults = {}
    for action_group in sub.choices.values():
        for action in action_group._actions:
            if action.dest not in ("help",):
                defaults[action.dest] = action.default
    return parser, defaults


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser, defaults = build_parser()
    try:
        args = parser.parse_args(argv)
        _merge_config(args, defaults)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(json.dumps(
            {"error": "usage", "message": str(exc)}) + "\n")
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as exc:
        sys.stderr.write(json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
