"""Command-line front door for the regulator workflow.

Subcommands:

  check     evaluate every rule on individual traces; exit 0/1/2
  report    aggregate a trace directory into per-rule fleet metrics
  compare   statistically compare two trace directories (pre vs post)
  simulate  generate a synthetic trace fleet with the bundled simulator

Exit codes: 0 success (no violations for `check`), 1 violations found
(`check` only), 2 usage or input error. All ordering is deterministic:
rules in specification order, traces in lexicographic file-name order.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

from .formula import Specification, format_number
from .metrics import CompareReport, FleetReport, compare_fleets, fleet_report
from .parser import ParseError, parse_spec
from .robustness import Verdict, evaluate_specification, robustness_profile
from .sim import ConfigError, builtin_presets, format_config, parse_config_text, simulate_fleet
from .traces import Trace, TraceError, load_trace_csv, load_trace_json, write_trace_csv

BUILTIN_PREFIX = "builtin:"


class CliError(Exception):
    """Input problem that should terminate with exit code 2."""


def builtin_spec_path(name: str) -> Path:
    """Path of a bundled specification file ('mario' or 'turtlebot')."""
    path = resources.files("stlmon") / "specs" / f"{name}.stl"
    if not path.is_file():
        raise CliError(f"no builtin specification '{name}'")
    return Path(str(path))


def _load_spec(spec_arg: str) -> Specification:
    if spec_arg.startswith(BUILTIN_PREFIX):
        path = builtin_spec_path(spec_arg[len(BUILTIN_PREFIX):])
    else:
        path = Path(spec_arg)
    try:
        source = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read specification {path}: {exc}") from None
    except UnicodeDecodeError as exc:
        raise CliError(f"specification {path} is not UTF-8: {exc}") from None
    try:
        return parse_spec(source)
    except ParseError as exc:
        raise CliError(f"{path}: {exc}") from None


def _load_trace(path: Path, spec: Specification) -> Trace:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read trace {path}: {exc}") from None
    try:
        if path.suffix == ".json":
            return load_trace_json(data, spec)
        return load_trace_csv(data, spec, trace_id=path.stem)
    except TraceError as exc:
        raise CliError(f"{path}: {exc}") from None


def _load_trace_dir(directory: str, spec: Specification) -> list[tuple[str, Trace]]:
    root = Path(directory)
    if not root.is_dir():
        raise CliError(f"not a directory: {directory}")
    paths = sorted(p for p in root.iterdir() if p.suffix in (".csv", ".json"))
    if not paths:
        raise CliError(f"no .csv or .json traces in {directory}")
    return [(p.name, _load_trace(p, spec)) for p in paths]


def _fleet_reports(spec: Specification, traces: list[tuple[str, Trace]]) -> list[FleetReport]:
    per_rule: dict[str, list] = {rule.name: [] for rule in spec.rules}
    for _, trace in traces:
        try:
            for result in evaluate_specification(spec, trace):
                per_rule[result.rule_name].append(result)
        except Exception as exc:
            raise CliError(f"trace '{trace.id}': {exc}") from None
    return [fleet_report(name, results) for name, results in per_rule.items()]


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _display_pct(value: float) -> str:
    if math.isinf(value):
        return "n/a"
    rounded = int(math.floor(value + 0.5)) if value >= 0 else -int(math.floor(-value + 0.5))
    return f"{'+' if rounded >= 0 else ''}{rounded}%"


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _cmd_check(args) -> int:
    spec = _load_spec(args.spec)
    if not spec.rules:
        raise CliError("specification has no rules")
    rows = []
    for trace_arg in args.traces:
        trace = _load_trace(Path(trace_arg), spec)
        try:
            results = evaluate_specification(spec, trace)
        except Exception as exc:
            raise CliError(f"trace '{trace.id}': {exc}") from None
        for result in results:
            rows.append((trace.id, result))
        if args.profile_out:
            _write_profiles(args.profile_out, spec, trace)

    if args.format == "json":
        payload = [
            {
                "trace": trace_id,
                "rule": r.rule_name,
                "rho": r.rho,
                "verdict": r.verdict.value,
            }
            for trace_id, r in rows
        ]
        sys.stdout.write(_json_dump(payload))
    else:
        width = max(len(t) for t, _ in rows)
        rule_width = max(len(r.rule_name) for _, r in rows)
        for trace_id, r in rows:
            sys.stdout.write(
                f"{trace_id:<{width}}  {r.rule_name:<{rule_width}}  "
                f"rho={r.rho:.6g}  {r.verdict.value}\n"
            )
    violated = any(r.verdict is Verdict.VIOLATED for _, r in rows)
    return 1 if violated else 0


def _write_profiles(out_dir: str, spec: Specification, trace: Trace) -> None:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    for rule in spec.rules:
        profile = robustness_profile(rule.formula, trace, rule.name)
        paths = sorted(profile.series)
        lines = [",".join(["time"] + paths)]
        for i in range(len(trace)):
            cells = [format_number(float(trace.times[i]))]
            cells += [format_number(float(profile.series[p][i])) for p in paths]
            lines.append(",".join(cells))
        (root / f"{trace.id}__{rule.name}.csv").write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _report_payload(reports: list[FleetReport]) -> dict:
    return {
        r.rule_name: {
            "n": r.n_traces,
            "satisfaction_pct": r.satisfaction_pct,
            "trv": r.trv,
            "lrv": r.lrv,
            "rho": list(r.rho_values),
        }
        for r in reports
    }


def _report_table(reports: list[FleetReport]) -> str:
    lines = []
    for r in reports:
        lines.append(f"Rule: {r.rule_name} (n={r.n_traces})")
        lines.append(f"  Satisfaction Percentage    {r.satisfaction_pct:.1f}%")
        lines.append(f"  TRV (average performance)  {r.trv:.6g}")
        lines.append(f"  LRV (worst violation)      {r.lrv:.6g}")
        lines.append("")
    return "\n".join(lines)


def _cmd_report(args) -> int:
    spec = _load_spec(args.spec)
    if not spec.rules:
        raise CliError("specification has no rules")
    traces = _load_trace_dir(args.trace_dir, spec)
    reports = _fleet_reports(spec, traces)
    if args.format == "json":
        _emit(_json_dump(_report_payload(reports)), args.out)
    else:
        _emit(_report_table(reports), args.out)
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _compare_payload(pre: FleetReport, post: FleetReport, cmp: CompareReport) -> dict:
    def side(r: FleetReport) -> dict:
        return {
            "n": r.n_traces,
            "satisfaction_pct": r.satisfaction_pct,
            "trv": r.trv,
            "lrv": r.lrv,
        }

    change = cmp.satisfaction_change_pct
    return {
        "pre": side(pre),
        "post": side(post),
        "u_statistic": cmp.u_statistic,
        "p_value": cmp.p_value,
        "method": cmp.method,
        "alpha": cmp.alpha,
        "significant": cmp.significant,
        "satisfaction_change_pct": "n/a" if math.isinf(change) else change,
    }


def _compare_table(rows: list[tuple[FleetReport, FleetReport, CompareReport]]) -> str:
    lines = []
    for pre, post, cmp in rows:
        lines.append(f"Rule: {cmp.rule_name}")
        lines.append(f"{'':26}{'Pre-Analysis':>14}{'Post-Analysis':>15}")
        lines.append(
            f"  Satisfaction Percentage {pre.satisfaction_pct:>13.1f}% {post.satisfaction_pct:>13.1f}%"
        )
        lines.append(f"  TRV {pre.trv:>34.6g} {post.trv:>14.6g}")
        lines.append(f"  LRV {pre.lrv:>34.6g} {post.lrv:>14.6g}")
        sig = "yes" if cmp.significant else "no"
        lines.append(
            f"  Mann-Whitney U={cmp.u_statistic:.6g}, p={cmp.p_value:.3g} "
            f"({cmp.method}), significant at alpha={cmp.alpha:g}: {sig}"
        )
        lines.append(f"  Satisfaction change: {_display_pct(cmp.satisfaction_change_pct)}")
        lines.append("")
    return "\n".join(lines)


def _cmd_compare(args) -> int:
    if not 0 < args.alpha < 1:
        raise CliError("alpha must be in (0, 1)")
    spec = _load_spec(args.spec)
    if not spec.rules:
        raise CliError("specification has no rules")
    pre_reports = _fleet_reports(spec, _load_trace_dir(args.dir_pre, spec))
    post_reports = _fleet_reports(spec, _load_trace_dir(args.dir_post, spec))
    rows = []
    for pre, post in zip(pre_reports, post_reports):
        rows.append((pre, post, compare_fleets(pre.rule_name, pre, post, args.alpha)))
    if args.format == "json":
        payload = {cmp.rule_name: _compare_payload(pre, post, cmp) for pre, post, cmp in rows}
        _emit(_json_dump(payload), args.out)
    else:
        _emit(_compare_table(rows), args.out)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    if args.preset:
        cfg, pre, post = builtin_presets()
        policies = {"pre": pre, "post": post}
    else:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from None
        try:
            cfg, policies = parse_config_text(text)
        except ConfigError as exc:
            raise CliError(f"{args.config}: {exc}") from None
    if args.policy not in policies:
        raise CliError(f"config defines no policy '{args.policy}'")
    params = policies[args.policy]

    try:
        episodes = simulate_fleet(cfg, params, args.n, args.seed)
    except ConfigError as exc:
        raise CliError(str(exc)) from None

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for ep in episodes:
        name = f"trace_{ep.seed:06d}.csv"
        (out_dir / name).write_text(write_trace_csv(ep.trace), encoding="utf-8")
        names.append(name)

    manifest = [
        "# fleet manifest",
        f"policy = {args.policy}",
        f"n = {args.n}",
        f"base_seed = {args.seed}",
        f"seeds = {args.seed}..{args.seed + args.n - 1}",
        "time_unit = timesteps",
        "",
        "# scenario and policy parameters",
        format_config(cfg, {args.policy: params}).rstrip("\n"),
        "",
        "# episodes: file,outcome,steps,goal_x,goal_y",
    ]
    for ep, name in zip(episodes, names):
        manifest.append(
            f"{name},{ep.outcome},{ep.steps},"
            f"{format_number(ep.goal[0])},{format_number(ep.goal[1])}"
        )
    (out_dir / "manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    sys.stdout.write(f"wrote {len(names)} traces to {out_dir}\n")
    return 0


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stlmon",
        description="Offline robustness monitoring and fleet compliance reporting "
        "for rollout traces. Specification arguments accept a path or "
        "'builtin:mario' / 'builtin:turtlebot'.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="evaluate rules on individual traces")
    p_check.add_argument("spec", help="specification file (.stl)")
    p_check.add_argument("traces", nargs="+", help="trace files (.csv or .json)")
    p_check.add_argument("--format", choices=("table", "json"), default="table")
    p_check.add_argument(
        "--profile-out", metavar="DIR", help="also write per-node robustness profile CSVs"
    )

    p_report = sub.add_parser("report", help="fleet metrics over a trace directory")
    p_report.add_argument("spec")
    p_report.add_argument("trace_dir")
    p_report.add_argument("--format", choices=("table", "json"), default="json")
    p_report.add_argument("--out", metavar="FILE", help="write to file instead of stdout")

    p_compare = sub.add_parser("compare", help="compare two trace directories")
    p_compare.add_argument("spec")
    p_compare.add_argument("dir_pre")
    p_compare.add_argument("dir_post")
    p_compare.add_argument("--alpha", type=float, default=0.05)
    p_compare.add_argument("--format", choices=("table", "json"), default="json")
    p_compare.add_argument("--out", metavar="FILE")

    p_sim = sub.add_parser("simulate", help="generate a synthetic trace fleet")
    source = p_sim.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", action="store_true", help="use the shipped scenario")
    source.add_argument("--config", metavar="FILE", help="scenario/policy config file")
    p_sim.add_argument("--policy", choices=("pre", "post"), required=True)
    p_sim.add_argument("--n", type=int, required=True, help="number of episodes (>= 1)")
    p_sim.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p_sim.add_argument("--out", required=True, metavar="DIR")
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "simulate" and args.n < 1:
        sys.stderr.write("error: --n must be >= 1\n")
        return 2
    handlers = {
        "check": _cmd_check,
        "report": _cmd_report,
        "compare": _cmd_compare,
        "simulate": _cmd_simulate,
    }
    try:
        return handlers[args.command](args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())
