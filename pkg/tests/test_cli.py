import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from flowsched.cli import main

from conftest import DATA


@pytest.fixture()
def toy_file(tmp_path):
    path = tmp_path / "toy.sm"
    shutil.copy(DATA / "toy.sm", path)
    return path


class TestValidateCommand:
    def test_valid_file_exits_zero(self, toy_file, capsys):
        assert main(["validate", str(toy_file)]) == 0
        assert "ok:" in capsys.readouterr().out

    def test_broken_file_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.sm"
        bad.write_text((DATA / "toy.sm").read_text().replace("  4      1     5       3", "  4      1     5       9"))
        assert main(["validate", str(bad)]) == 1
        assert "exceeding capacity" in capsys.readouterr().out


class TestScheduleCommand:
    def test_rule_schedule(self, toy_file, capsys):
        assert main(["schedule", str(toy_file), "--rule", "spt"]) == 0
        out = capsys.readouterr().out
        assert "makespan" in out and "order 0," in out

    def test_list_schedule_matches_published_makespan(self, toy_file, tmp_path, capsys):
        lst = tmp_path / "list.txt"
        lst.write_text("\n".join("01245367"))
        # order (source, A, B, D, E, C, F, sink)
        lst.write_text("0\n1\n2\n4\n5\n3\n6\n7\n")
        assert main(["schedule", str(toy_file), "--list", str(lst), "--low", "1", "--high", "1"]) == 0
        assert "makespan 15" in capsys.readouterr().out

    def test_scenario_seed_is_reproducible(self, toy_file, capsys):
        main(["schedule", str(toy_file), "--rule", "grpw", "--scenario-seed", "5"])
        first = capsys.readouterr().out
        main(["schedule", str(toy_file), "--rule", "grpw", "--scenario-seed", "5"])
        assert capsys.readouterr().out == first


class TestExportObsCommand:
    def test_initial_observation(self, toy_file, tmp_path):
        out = tmp_path / "obs.json"
        assert main(["export-obs", str(toy_file), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["nodes"]) == 10
        assert doc["mask"].count(True) == 2

    def test_after_actions(self, toy_file, tmp_path):
        out = tmp_path / "obs.json"
        assert main(["export-obs", str(toy_file), "--after-actions", "1,2", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["mask"] == [False, False, False, True, True, True, False, False]


class TestGenSplitBench:
    def test_gen_split_bench_pipeline(self, tmp_path, capsys):
        data = tmp_path / "set"
        assert main(["gen", "--out", str(data), "--count", "6", "--min-tasks", "6", "--max-tasks", "9", "--seed", "3"]) == 0
        files = sorted(data.glob("*.sm"))
        assert len(files) == 6

        manifest_path = tmp_path / "manifest.json"
        assert main(["split", str(data), "--out", str(manifest_path), "--ukn-configs", "0"]) == 0
        manifest = json.loads(manifest_path.read_text())
        assert sorted(manifest["train"] + manifest["usn"] + manifest["ukn"]) == [f.name for f in files]

        out_dir = tmp_path / "bench"
        assert main([
            "bench", "--dataset", str(data), "--methods", "spt,grpw",
            "--scenarios", "5", "--seed", "1", "--out-dir", str(out_dir),
        ]) == 0
        assert (out_dir / "records.csv").exists()
        agg = (out_dir / "aggregate.csv").read_text()
        assert agg.startswith("method,mean_makespan,mean_gap,coverage")
        assert "100.0" in agg

    def test_scenarios_csv(self, toy_file, tmp_path):
        out = tmp_path / "scen.csv"
        assert main(["scenarios", str(toy_file), "--scenarios", "3", "--seed", "9", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "scenario,seed,task,duration"
        assert len(lines) == 1 + 3 * 8


class TestServeStdio:
    def test_episode_over_stdio_subprocess(self, toy_file):
        requests = [{"cmd": "reset", "instance": "toy.sm", "seed": 0}] + [
            {"cmd": "step", "task": t} for t in (1, 2, 4, 5, 3, 6, 7)
        ] + [{"cmd": "close"}]
        payload = "".join(json.dumps(r) + "\n" for r in requests)
        proc = subprocess.run(
            [sys.executable, "-m", "flowsched.cli", "serve", "--instances", str(toy_file.parent),
             "--low", "1", "--high", "1"],
            input=payload,
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert proc.returncode == 0, proc.stderr
        replies = [json.loads(line) for line in proc.stdout.splitlines()]
        assert len(replies) == 9
        assert replies[-2]["done"] is True
        assert replies[-2]["reward"] == -1.875
        assert replies[-1]["closed"] is True
