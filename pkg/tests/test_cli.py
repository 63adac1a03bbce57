"""End-to-end CLI fixtures: exit codes, report schema, output stability."""

import json

import pytest

from stlmon.cli import builtin_spec_path, run

SPEC_SRC = """\
signal speed : real
rule speed_limit: G[0, inf] (speed < 900)
"""

COMPLIANT = "time,speed\n0,850\n1,870\n2,860\n"
BREACHING = "time,speed\n0,850\n1,950\n2,860\n"


@pytest.fixture
def workspace(tmp_path):
    spec = tmp_path / "rules.stl"
    spec.write_text(SPEC_SRC)
    ok = tmp_path / "ok.csv"
    ok.write_text(COMPLIANT)
    bad = tmp_path / "bad.csv"
    bad.write_text(BREACHING)
    return tmp_path


def fill_dir(path, rhos):
    """Directory of single-signal traces whose speed-limit rho is as given."""
    path.mkdir(exist_ok=True)
    for i, rho in enumerate(rhos):
        v = 900 - rho
        (path / f"t{i:03d}.csv").write_text(f"time,speed\n0,{v}\n1,{v}\n")
    return path


class TestCheck:
    def test_compliant_trace_exits_zero(self, workspace, capsys):
        code = run(["check", str(workspace / "rules.stl"), str(workspace / "ok.csv")])
        out = capsys.readouterr().out
        assert code == 0
        assert "Satisfied" in out
        assert "rho=30" in out

    def test_violation_exits_one(self, workspace, capsys):
        code = run(["check", str(workspace / "rules.stl"), str(workspace / "bad.csv")])
        out = capsys.readouterr().out
        assert code == 1
        assert "Violated" in out
        assert "rho=-50" in out

    def test_missing_trace_exits_two(self, workspace, capsys):
        code = run(["check", str(workspace / "rules.stl"), str(workspace / "nope.csv")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_bad_spec_exits_two(self, workspace, capsys):
        bad_spec = workspace / "broken.stl"
        bad_spec.write_text("rule r: velocity < 1\n")
        code = run(["check", str(bad_spec), str(workspace / "ok.csv")])
        assert code == 2
        assert "unknown signal" in capsys.readouterr().err

    def test_json_format(self, workspace, capsys):
        code = run(["check", str(workspace / "rules.stl"), str(workspace / "ok.csv"),
                    "--format", "json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload == [
            {"trace": "ok", "rule": "speed_limit", "rho": 30.0, "verdict": "Satisfied"}
        ]

    def test_profile_out_writes_node_series(self, workspace, capsys, tmp_path):
        prof_dir = tmp_path / "profiles"
        code = run(["check", str(workspace / "rules.stl"), str(workspace / "ok.csv"),
                    "--profile-out", str(prof_dir)])
        assert code == 0
        csv_file = prof_dir / "ok__speed_limit.csv"
        lines = csv_file.read_text().splitlines()
        assert lines[0] == "time,root,root.child"
        assert lines[1] == "0,30,50"


class TestReport:
    def test_json_schema_and_values(self, workspace, capsys, tmp_path):
        fill_dir(tmp_path / "fleet", [1.5, -0.5, 2.0])
        code = run(["report", str(workspace / "rules.stl"), str(tmp_path / "fleet")])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        entry = payload["speed_limit"]
        assert entry["n"] == 3
        assert entry["trv"] == 3.0
        assert entry["lrv"] == -0.5
        assert round(entry["satisfaction_pct"], 1) == 66.7
        assert entry["rho"] == [1.5, -0.5, 2.0]

    def test_empty_directory_exits_two(self, workspace, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert run(["report", str(workspace / "rules.stl"), str(empty)]) == 2

    def test_unreadable_trace_fails_fast_naming_file(self, workspace, tmp_path, capsys):
        fleet = fill_dir(tmp_path / "fleet", [1.0])
        (fleet / "corrupt.csv").write_text("time,speed\n0,850\n")  # single row
        code = run(["report", str(workspace / "rules.stl"), str(fleet)])
        assert code == 2
        assert "corrupt.csv" in capsys.readouterr().err

    def test_byte_identical_output(self, workspace, tmp_path, capsys):
        fill_dir(tmp_path / "fleet", [3.0, -1.0, 0.25])
        args = ["report", str(workspace / "rules.stl"), str(tmp_path / "fleet")]
        run(args)
        first = capsys.readouterr().out
        run(args)
        assert capsys.readouterr().out == first

    def test_concatenated_directories_merge(self, workspace, tmp_path, capsys):
        a = fill_dir(tmp_path / "a", [1.0, 2.0])
        b = fill_dir(tmp_path / "b", [-3.0, 0.5, 4.0])
        both = tmp_path / "both"
        both.mkdir()
        for i, src in enumerate(sorted(a.iterdir()) + sorted(b.iterdir())):
            (both / f"u{i:03d}.csv").write_text(src.read_text())

        def fetch(d):
            run(["report", str(workspace / "rules.stl"), str(d)])
            return json.loads(capsys.readouterr().out)["speed_limit"]

        ra, rb, rall = fetch(a), fetch(b), fetch(both)
        assert rall["trv"] == pytest.approx(ra["trv"] + rb["trv"], abs=1e-12)
        assert rall["lrv"] == min(ra["lrv"], rb["lrv"])
        assert rall["n"] == ra["n"] + rb["n"]

    def test_table_format_rows(self, workspace, tmp_path, capsys):
        fill_dir(tmp_path / "fleet", [1.5, -0.5, 2.0])
        run(["report", str(workspace / "rules.stl"), str(tmp_path / "fleet"),
             "--format", "table"])
        out = capsys.readouterr().out
        assert "Satisfaction Percentage" in out
        assert "TRV" in out and "LRV" in out
        assert "66.7%" in out


class TestCompare:
    def test_identical_directories(self, workspace, tmp_path, capsys):
        fill_dir(tmp_path / "fleet", [1.0, -1.0, 2.0])
        code = run(["compare", str(workspace / "rules.stl"),
                    str(tmp_path / "fleet"), str(tmp_path / "fleet")])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)["speed_limit"]
        assert payload["satisfaction_change_pct"] == 0.0
        assert payload["p_value"] > 0.9
        assert payload["significant"] is False

    def test_separated_fleets_flagged_significant(self, workspace, tmp_path, capsys):
        fill_dir(tmp_path / "pre", [-(1 + 0.01 * i) for i in range(30)])
        fill_dir(tmp_path / "post", [1 + 0.01 * i for i in range(30)])
        code = run(["compare", str(workspace / "rules.stl"),
                    str(tmp_path / "pre"), str(tmp_path / "post")])
        assert code == 0  # analysis, not a gate
        payload = json.loads(capsys.readouterr().out)["speed_limit"]
        assert payload["significant"] is True
        assert payload["p_value"] < 0.05
        assert payload["satisfaction_change_pct"] == "n/a"  # pre satisfied nothing

    def test_table_shows_rounded_change(self, workspace, tmp_path, capsys):
        fill_dir(tmp_path / "pre", [1.0] * 3 + [-1.0] * 7)
        fill_dir(tmp_path / "post", [2.0] * 10)
        run(["compare", str(workspace / "rules.stl"),
             str(tmp_path / "pre"), str(tmp_path / "post"), "--format", "table"])
        out = capsys.readouterr().out
        assert "+233%" in out  # 30% -> 100% satisfaction
        assert "Pre-Analysis" in out and "Post-Analysis" in out

    def test_bad_alpha_exits_two(self, workspace, tmp_path):
        fill_dir(tmp_path / "fleet", [1.0])
        assert run(["compare", str(workspace / "rules.stl"), str(tmp_path / "fleet"),
                    str(tmp_path / "fleet"), "--alpha", "1.5"]) == 2


class TestSimulate:
    def test_preset_writes_traces_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "fleet"
        code = run(["simulate", "--preset", "--policy", "pre", "--n", "3",
                    "--seed", "7", "--out", str(out)])
        assert code == 0
        files = sorted(p.name for p in out.iterdir())
        assert files == [
            "manifest.txt", "trace_000007.csv", "trace_000008.csv", "trace_000009.csv",
        ]
        manifest = (out / "manifest.txt").read_text()
        assert "policy = pre" in manifest
        assert "base_seed = 7" in manifest
        assert "angular_menu" in manifest

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["simulate", "--preset", "--policy", "post", "--n", "2",
                        "--seed", "3", "--out", str(out)]) == 0
        for name in ("trace_000003.csv", "trace_000004.csv", "manifest.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_zero_episodes_is_usage_error(self, tmp_path, capsys):
        code = run(["simulate", "--preset", "--policy", "pre", "--n", "0",
                    "--out", str(tmp_path / "x")])
        assert code == 2

    def test_config_file_simulation(self, tmp_path, capsys):
        from stlmon import builtin_presets
        from stlmon.sim import format_config

        cfg, pre, post = builtin_presets()
        cfg_file = tmp_path / "scenario.cfg"
        cfg_file.write_text(format_config(cfg, {"pre": pre, "post": post}))
        out = tmp_path / "fleet"
        code = run(["simulate", "--config", str(cfg_file), "--policy", "post",
                    "--n", "2", "--seed", "0", "--out", str(out)])
        assert code == 0
        # identical to the preset path given identical parameters
        preset_out = tmp_path / "fleet2"
        run(["simulate", "--preset", "--policy", "post", "--n", "2",
             "--seed", "0", "--out", str(preset_out)])
        assert (out / "trace_000000.csv").read_bytes() == (
            preset_out / "trace_000000.csv"
        ).read_bytes()

    def test_invalid_config_exits_two(self, tmp_path, capsys):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("dt = -1\n")
        code = run(["simulate", "--config", str(cfg_file), "--policy", "pre",
                    "--n", "1", "--out", str(tmp_path / "x")])
        assert code == 2

    def test_simulated_fleet_loads_under_builtin_spec(self, tmp_path, capsys):
        out = tmp_path / "fleet"
        run(["simulate", "--preset", "--policy", "post", "--n", "2",
             "--seed", "1", "--out", str(out)])
        capsys.readouterr()
        code = run(["report", "builtin:turtlebot", str(out)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"no_sharp_turns", "timed_completion", "dont_linger"}


class TestBuiltinSpecs:
    def test_builtin_paths_parse(self):
        from stlmon import parse_spec

        for name in ("mario", "turtlebot"):
            spec = parse_spec(builtin_spec_path(name).read_text(encoding="utf-8"))
            assert len(spec.rules) == 3

    def test_unknown_builtin(self, workspace, capsys):
        code = run(["check", "builtin:nope", str(workspace / "ok.csv")])
        assert code == 2
