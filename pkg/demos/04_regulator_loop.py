"""The full regulator loop at desk scale, end to end.

1. Fleets roll out from two black-box policies (the bundled simulator
   stands in for the pre- and post-retraining controllers).
2. Every trace is checked against the navigation rule set.
3. Per-rule fleet metrics and a significance test quantify whether the
   revised policy actually complies better.

The same loop is available from the command line:

    stlmon simulate --preset --policy pre  --n 100 --seed 7 --out fleets/pre
    stlmon simulate --preset --policy post --n 100 --seed 7 --out fleets/post
    stlmon compare builtin:turtlebot fleets/pre fleets/post --format table
"""

from collections import Counter

from stlmon import (
    builtin_presets,
    compare_fleets,
    evaluate_specification,
    fleet_report,
    parse_spec,
    simulate_fleet,
)
from stlmon.cli import builtin_spec_path


def main():
    spec = parse_spec(builtin_spec_path("turtlebot").read_text(encoding="utf-8"))
    cfg, pre_params, post_params = builtin_presets()

    print("Simulating 100 episodes per policy (seed 7)...")
    fleets = {
        "pre": simulate_fleet(cfg, pre_params, 100, 7),
        "post": simulate_fleet(cfg, post_params, 100, 7),
    }
    for name, fleet in fleets.items():
        outcomes = Counter(ep.outcome for ep in fleet)
        print(f"  {name:4s} outcomes: {dict(outcomes)}")

    reports = {}
    for name, fleet in fleets.items():
        per_rule = {rule.name: [] for rule in spec.rules}
        for ep in fleet:
            for result in evaluate_specification(spec, ep.trace):
                per_rule[result.rule_name].append(result)
        reports[name] = {rn: fleet_report(rn, rs) for rn, rs in per_rule.items()}

    print()
    for rule in spec.rules:
        pre = reports["pre"][rule.name]
        post = reports["post"][rule.name]
        cmp = compare_fleets(rule.name, pre, post, alpha=0.05)
        print(f"Rule: {rule.name}")
        print(f"{'':28}{'Pre-Analysis':>14}{'Post-Analysis':>15}")
        print(f"  Satisfaction Percentage {pre.satisfaction_pct:>13.1f}% {post.satisfaction_pct:>13.1f}%")
        print(f"  TRV {pre.trv:>36.2f} {post.trv:>14.2f}")
        print(f"  LRV {pre.lrv:>36.3f} {post.lrv:>14.3f}")
        stars = "significant" if cmp.significant else "not significant"
        print(f"  Mann-Whitney p = {cmp.p_value:.3g}  ({stars} at alpha=0.05)")
        print()

    print("All three rules should show higher satisfaction, higher TRV and a")
    print("significant p-value for the post policy: the loop closed, the")
    print("designer's revision measurably improved compliance.")


if __name__ == "__main__":
    main()
