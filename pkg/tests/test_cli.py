"""End-to-end command-line behavior: subcommands, manifests, exit codes."""

import hashlib
import json
import sys
from pathlib import Path

import pytest

from commitgym import cli, datagen, sliding, sokoban
from commitgym.datagen import state_to_obj

from _oracles import sft_sample_count

CLIENTS = Path(__file__).parent / "clients"


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_pool(path, instances):
    if isinstance(instances[0], sliding.SlidingInstance):
        lines = [sliding.to_json(i) for i in instances]
    else:
        lines = [sokoban.to_json(i) for i in instances]
    path.write_text("".join(line + "\n" for line in lines))
    return path


def sliding_pool_file(tmp_path, spec):
    pool = [sliding.generate(3, d, seed=s) for d, s in spec]
    return write_pool(tmp_path / "pool.jsonl", pool), pool


# ------------------------------------------------------------------- gen

def test_gen_writes_instances_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        ["gen", "--task", "sliding", "--count", "3", "--depth", "4:6",
         "--seed", "5", "--out", str(out)], capsys)
    assert code == 0
    assert stdout.strip() == str(out / "instances.jsonl")
    lines = (out / "instances.jsonl").read_text().splitlines()
    assert len(lines) == 3
    depths = [sliding.from_json(line).depth for line in lines]
    assert depths == [4, 5, 6]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tool"] == "commitgym"
    assert manifest["subcommand"] == "gen"
    assert manifest["config"]["task"] == "sliding"
    assert manifest["config"]["seed"] == 5
    blob = (out / "instances.jsonl").read_bytes()
    assert manifest["outputs"]["instances.jsonl"] == (
        hashlib.sha256(blob).hexdigest())


def test_gen_streams_to_stdout_without_out(capsys):
    code, stdout, _ = run_cli(
        ["gen", "--task", "sliding", "--count", "2", "--depth", "3"], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert len(lines) == 2
    for line in lines:
        assert sliding.from_json(line).depth == 3


def test_gen_sokoban_instances_are_solvable(capsys):
    code, stdout, _ = run_cli(
        ["gen", "--task", "sokoban", "--count", "2", "--width", "5",
         "--height", "5", "--boxes", "1", "--pulls", "4:10",
         "--seed", "3"], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert len(lines) == 2
    for line in lines:
        instance = sokoban.from_json(line)
        assert sokoban.solve(instance.state) is not None


@pytest.mark.parametrize("depth", ["9:4", "1:2:3"])
def test_gen_rejects_bad_ranges(depth, capsys):
    code, _, stderr = run_cli(
        ["gen", "--task", "sliding", "--depth", depth], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


def test_gen_infeasible_board_is_a_runtime_error(capsys):
    code, _, stderr = run_cli(
        ["gen", "--task", "sokoban", "--width", "3", "--height", "3",
         "--boxes", "5", "--count", "1"], capsys)
    assert code == 2
    assert json.loads(stderr)["error"] == "GenerationExhausted"


# ----------------------------------------------------------------- solve

def test_solve_instance_and_raw_state(capsys):
    inst = sliding.generate(3, 4, seed=0)
    code, stdout, _ = run_cli(
        ["solve", "--state", sliding.to_json(inst)], capsys)
    assert code == 0
    row = json.loads(stdout)
    assert row["instance_id"] == inst.instance_id
    assert row["task"] == "sliding"
    assert row["d"] == 4
    assert len(row["actions"]) == 4

    code, stdout, _ = run_cli(
        ["solve", "--state", json.dumps(state_to_obj(inst.state))], capsys)
    assert code == 0
    row = json.loads(stdout)
    assert row["instance_id"] == ""
    assert row["d"] == 4


def test_solve_reports_unsolvable_as_null(capsys):
    dead = sokoban.from_ascii("#####\n#$ .#\n#  @#\n#####")
    code, stdout, _ = run_cli(
        ["solve", "--state", json.dumps(state_to_obj(dead))], capsys)
    assert code == 0
    row = json.loads(stdout)
    assert row["d"] is None
    assert row["actions"] is None


def test_solve_reads_files_and_emits_csv(tmp_path, capsys):
    path, pool = sliding_pool_file(tmp_path, [(3, 1), (5, 2)])
    code, stdout, _ = run_cli(
        ["solve", "--in", str(path), "--format", "csv"], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert lines[0] == "instance_id,task,d,actions"
    assert len(lines) == 3
    assert lines[1].startswith(pool[0].instance_id)
    assert lines[1].split(",")[2] == "3"


def test_solve_requires_input(capsys):
    code, _, stderr = run_cli(["solve"], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


# ------------------------------------------------------------------ eval

def test_eval_writes_summary_and_transcripts(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(4, 1), (6, 2), (8, 3)])
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        ["eval", "--in", str(path), "--policy", "fixed:2", "--budget", "4",
         "--out", str(out), "--transcripts"], capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["solve_rate"] == 1.0
    assert summary["episodes"] == 3
    assert summary["policy"] == "fixed:2"
    assert summary["budget"] == {"sliding": 4}
    assert (out / "summary.json").read_text() == stdout
    transcripts = (out / "transcripts.jsonl").read_text().splitlines()
    assert len(transcripts) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"summary.json", "transcripts.jsonl"}


def test_eval_external_policy_via_cli(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(4, 0)])
    policy = f"external:{sys.executable} {CLIENTS / 'fixed_h1.py'}"
    code, stdout, _ = run_cli(
        ["eval", "--in", str(path), "--policy", policy, "--budget", "2"],
        capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["solve_rate"] == 0.0
    assert summary["protocol_errors"] == 0
    assert summary["mean_actions"] == 2.0


def test_eval_worker_flag_keeps_output_stable(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(4, 1), (7, 2), (9, 3), (11, 4)])
    base = ["eval", "--in", str(path), "--policy", "random", "--seed", "5",
            "--budget", "tight"]
    code1, out1, _ = run_cli(base + ["--workers", "1"], capsys)
    code2, out2, _ = run_cli(base + ["--workers", "2"], capsys)
    assert code1 == code2 == 0
    assert json.loads(out1) == json.loads(out2)


def test_eval_missing_pool_is_a_usage_error(capsys):
    code, _, stderr = run_cli(
        ["eval", "--in", "/nonexistent.jsonl", "--policy", "oracle"], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


# ---------------------------------------------------------------- oracle

def test_oracle_histogram_cli(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(7, 1), (7, 2), (7, 3)])
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        ["oracle", "--in", str(path), "--budget", "loose",
         "--out", str(out)], capsys)
    assert code == 0
    result = json.loads(stdout)
    assert result["h"] == [1, 2, 4, 8]
    assert result["solve_rate"] == 1.0
    assert result["mean_actions"] == 7.0
    assert abs(sum(result["freq"]) - 1.0) < 1e-12
    # Optimal distance 7 decomposes as one decision each at 4, 2, 1.
    assert result["freq"] == [1 / 3, 1 / 3, 1 / 3, 0.0]
    assert "transcripts" not in result
    on_disk = json.loads((out / "histogram.json").read_text())
    assert on_disk == result


def test_oracle_csv_format(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(4, 1)])
    code, stdout, _ = run_cli(
        ["oracle", "--in", str(path), "--format", "csv"], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert lines[0] == "h,freq"
    assert len(lines) == 5


# ------------------------------------------------------------ sft-export

def test_sft_export_counts_and_manifest(tmp_path, capsys):
    path, pool = sliding_pool_file(tmp_path, [(4, 1)])
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        ["sft-export", "--in", str(path), "--out", str(out)], capsys)
    assert code == 0
    reply = json.loads(stdout)
    expected = sft_sample_count(4, (1, 2, 4, 8))
    assert reply["samples"] == expected
    lines = (out / "sft.jsonl").read_text().splitlines()
    assert len(lines) == expected
    first = json.loads(lines[0])
    assert list(first) == ["task", "instance_id", "t", "h", "actions",
                           "state"]
    assert first["instance_id"] == pool[0].instance_id
    manifest = json.loads((out / "manifest.json").read_text())
    assert "sft.jsonl" in manifest["outputs"]


def test_sft_export_render_writes_images(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(3, 2)])
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        ["sft-export", "--in", str(path), "--out", str(out), "--render"],
        capsys)
    assert code == 0
    count = json.loads(stdout)["samples"]
    images = sorted((out / "sft_images").glob("*.ppm"))
    assert len(images) == count
    manifest = json.loads((out / "manifest.json").read_text())
    assert sum(1 for name in manifest["outputs"]
               if name.startswith("sft_images/")) == count


def test_sft_export_requires_out(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(3, 2)])
    code, _, stderr = run_cli(["sft-export", "--in", str(path)], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


# ---------------------------------------------------------------- theory

def test_theory_phase_scan_cli(tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        ["theory", "--phase-scan", "--alpha", "0.5,1.0", "--c", "0.01",
         "--T", "100", "--out", str(out)], capsys)
    assert code == 0
    rows = [json.loads(line) for line in stdout.splitlines()]
    assert len(rows) == 2
    interior, boundary = rows
    assert interior["alpha"] == 0.5
    assert interior["interior"] is True
    assert interior["matches_prediction"] is True
    assert abs(interior["hstar"] - 5117) / 5117 < 1e-2
    assert boundary["alpha"] == 1.0
    assert boundary["interior"] is False
    assert boundary["argmax_h"] == 1
    saved = (out / "phase_scan.json").read_text()
    assert saved == stdout


def test_theory_dominance_cli(capsys):
    code, stdout, _ = run_cli(["theory", "--dominance"], capsys)
    assert code == 0
    row = json.loads(stdout)
    assert row["strict"] is True
    assert row["gap"] > 0
    assert row["adaptive_logp"] > row["best_fixed_logp"]
    assert row["best_fixed_h"] in (1, 2, 4, 8)


def test_theory_requires_a_mode(capsys):
    code, _, stderr = run_cli(["theory"], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


# ---------------------------------------------------------------- render

def test_render_single_state(tmp_path, capsys):
    inst = sliding.generate(3, 4, seed=2)
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        ["render", "--state", json.dumps(state_to_obj(inst.state)),
         "--out", str(out)], capsys)
    assert code == 0
    assert json.loads(stdout) == {"rendered": 1, "dir": str(out)}
    blob = (out / "state.ppm").read_bytes()
    assert blob == datagen.render_state(inst.state)


def test_render_pool_names_files_by_instance(tmp_path, capsys):
    path, pool = sliding_pool_file(tmp_path, [(3, 1), (4, 2)])
    out = tmp_path / "run"
    code, _, _ = run_cli(
        ["render", "--in", str(path), "--out", str(out)], capsys)
    assert code == 0
    for instance in pool:
        assert (out / f"{instance.instance_id}.ppm").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["outputs"]) == 2


def test_render_requires_out(capsys):
    inst = sliding.generate(3, 4, seed=2)
    code, _, stderr = run_cli(
        ["render", "--state", json.dumps(state_to_obj(inst.state))], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


# ------------------------------------------------------------------ diag

def test_diag_recomputes_eval_diagnostics(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(4, 1), (6, 2), (12, 3)])
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        ["eval", "--in", str(path), "--policy", "fixed:2", "--budget", "4",
         "--out", str(out), "--transcripts"], capsys)
    assert code == 0
    summary = json.loads(stdout)
    code, stdout, _ = run_cli(
        ["diag", "--transcripts", str(out / "transcripts.jsonl")], capsys)
    assert code == 0
    rows = {row["split"]: row
            for row in map(json.loads, stdout.splitlines())}
    assert set(rows) == {"all", "solved", "unsolved"}
    for split, recorded in (("all", summary["diagnostics"]),
                            ("solved", summary["diagnostics_solved"]),
                            ("unsolved", summary["diagnostics_unsolved"])):
        assert rows[split]["episodes"] == recorded["episodes"]
        for key in ("wasted_per_episode", "backward_per_episode",
                    "progress_per_action"):
            assert rows[split][key] == recorded[key]


def test_diag_split_filter(tmp_path, capsys):
    path, _ = sliding_pool_file(tmp_path, [(4, 1)])
    out = tmp_path / "run"
    run_cli(["eval", "--in", str(path), "--policy", "oracle",
             "--out", str(out), "--transcripts"], capsys)
    code, stdout, _ = run_cli(
        ["diag", "--transcripts", str(out / "transcripts.jsonl"),
         "--split", "solved"], capsys)
    assert code == 0
    rows = stdout.splitlines()
    assert len(rows) == 1
    assert json.loads(rows[0])["split"] == "solved"


def test_diag_rejects_transcripts_without_deltas(tmp_path, capsys):
    bare = {"instance_id": "x", "task": "sliding", "solved": True,
            "decisions": [{"h": 1, "actions": ["U"], "executed": 1,
                           "d_before": 1, "d_after": 0, "deltas": None}]}
    path = tmp_path / "transcripts.jsonl"
    path.write_text(json.dumps(bare) + "\n")
    code, _, stderr = run_cli(["diag", "--transcripts", str(path)], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


# -------------------------------------------------------- config and exit

def test_config_file_fills_defaults_and_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"count": 2, "depth": "3", "seed": 9}))
    code, stdout, _ = run_cli(
        ["gen", "--task", "sliding", "--config", str(cfg)], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert len(lines) == 2
    assert all(sliding.from_json(line).depth == 3 for line in lines)
    assert sliding.from_json(lines[0]).seed == 9

    code, stdout, _ = run_cli(
        ["gen", "--task", "sliding", "--config", str(cfg), "--count", "1"],
        capsys)
    assert code == 0
    assert len(stdout.splitlines()) == 1


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, stderr = run_cli(
        ["gen", "--task", "sliding", "--config", str(cfg)], capsys)
    assert code == 1
    message = json.loads(stderr)
    assert message["error"] == "usage"
    assert "bogus" in message["message"]


def test_missing_subcommand_is_a_usage_error(capsys):
    code, _, stderr = run_cli([], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


def test_bad_choice_is_a_usage_error(capsys):
    code, _, stderr = run_cli(["gen", "--task", "chess"], capsys)
    assert code == 1
    assert json.loads(stderr)["error"] == "usage"


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.strip()
