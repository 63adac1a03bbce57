"""Engine semantics: spec'd examples, oracle equivalence, dualities,
soundness against the boolean monitor, and the windowed-extremum kernel."""

import random

import numpy as np
import pytest

from stlmon import (
    And,
    Atom,
    CmpOp,
    Compare,
    Constant,
    EvalError,
    Eventually,
    Globally,
    Interval,
    Not,
    Or,
    SignalRef,
    UNBOUNDED,
    Until,
    Verdict,
    boolean_monitor,
    load_trace_csv,
    load_trace_json,
    parse_spec,
    robustness,
    robustness_profile,
    windowed_extremum,
)
from reference import (
    deque_windowed,
    naive_bool,
    naive_rho,
    naive_windowed,
    random_formula,
    random_pair,
    random_trace,
)

SPEC = parse_spec("signal speed : real\nsignal x : real\nsignal a : real\nsignal b : real\n")


def trace_of(**signals):
    n = len(next(iter(signals.values())))
    payload = {"id": "t", "dt": 1, "signals": signals}
    import json

    return load_trace_json(json.dumps(payload), SPEC)


def x_gt(c):
    return Atom(Compare(SignalRef("x"), CmpOp.GT, Constant(c)))


class TestSpecExamples:
    def test_globally_speed_limit(self):
        trace = trace_of(speed=[850, 870, 860])
        f = Globally(Interval(0, UNBOUNDED), Atom(Compare(SignalRef("speed"), CmpOp.LT, Constant(900))))
        r = robustness(f, trace)
        assert r.rho == 30.0
        assert r.verdict is Verdict.SATISFIED

    def test_eventually_violated(self):
        trace = trace_of(x=[-1, -2, -3])
        f = Eventually(Interval(0, 2), x_gt(0))
        r = robustness(f, trace)
        assert r.rho == -1.0
        assert r.verdict is Verdict.VIOLATED

    def test_negation(self):
        trace = trace_of(x=[-1, -2, -3])
        r = robustness(Not(x_gt(0)), trace)
        assert r.rho == 1.0
        assert r.verdict is Verdict.SATISFIED

    def test_until_expansion_example(self):
        trace = trace_of(a=[1, 1, -1], b=[-1, 2, 3])
        f = Until(
            Interval(0, 2),
            Atom(Compare(SignalRef("a"), CmpOp.GT, Constant(0))),
            Atom(Compare(SignalRef("b"), CmpOp.GT, Constant(0))),
        )
        assert robustness(f, trace).rho == 1.0

    def test_exactly_satisfied_verdict(self):
        trace = trace_of(x=[0, 0])
        r = robustness(Globally(Interval(0, UNBOUNDED), Atom(Compare(SignalRef("x"), CmpOp.GE, Constant(0)))), trace)
        assert r.rho == 0.0
        assert r.verdict is Verdict.EXACTLY_SATISFIED


class TestProfile:
    def test_atom_series_pointwise(self):
        trace = trace_of(speed=[850, 950, 860])
        f = Atom(Compare(SignalRef("speed"), CmpOp.LT, Constant(900)))
        profile = robustness_profile(f, trace)
        assert list(profile.root) == [50.0, -50.0, 40.0]

    def test_zero_width_window_is_identity(self):
        trace = trace_of(x=[1, -2, 3, -4])
        atom_series = robustness_profile(x_gt(0), trace).root
        g_series = robustness_profile(Globally(Interval(0, 0), x_gt(0)), trace).root
        np.testing.assert_array_equal(atom_series, g_series)

    def test_root_matches_robustness(self):
        rng = random.Random(11)
        for _ in range(100):
            f, trace = random_pair(rng, max_depth=3, max_len=20)
            profile = robustness_profile(f, trace)
            assert profile.root[0] == robustness(f, trace).rho

    def test_every_node_has_full_series(self):
        trace = trace_of(x=[1, 2, 3, 4])
        f = And(Globally(Interval(0, 2), x_gt(0)), Not(x_gt(5)))
        profile = robustness_profile(f, trace)
        assert set(profile.series) == {
            "root", "root.lhs", "root.lhs.child", "root.rhs", "root.rhs.child",
        }
        assert all(len(s) == 4 for s in profile.series.values())


class TestBooleanMonitor:
    def test_strictness_respected_at_boundary(self):
        trace = trace_of(speed=[850, 900])
        strict = parse_spec("signal speed : real\nrule r: G[0, inf] (speed < 900)\n")
        non_strict = parse_spec("signal speed : real\nrule r: G[0, inf] (speed <= 900)\n")
        assert boolean_monitor(strict.rules[0].formula, trace) is False
        assert boolean_monitor(non_strict.rules[0].formula, trace) is True

    def test_satisfied_case(self):
        trace = trace_of(speed=[850, 870])
        f = parse_spec("signal speed : real\nrule r: G[0, inf] (speed < 900)\n").rules[0].formula
        assert boolean_monitor(f, trace) is True

    def test_eventually_all_false(self):
        spec = parse_spec("signal goal_reached : bool\nrule r: F[0, 800] (goal_reached)\n")
        trace = load_trace_csv("time,goal_reached\n0,false\n1,false\n2,false\n", spec)
        assert boolean_monitor(spec.rules[0].formula, trace) is False

    def test_matches_naive_boolean_semantics(self):
        rng = random.Random(12)
        for _ in range(300):
            f, trace = random_pair(rng, max_depth=4, max_len=25)
            assert boolean_monitor(f, trace) == naive_bool(f, trace)


class TestWindowedExtremum:
    def test_spec_examples(self):
        assert list(windowed_extremum([3, 1, 2], 1, "min")) == [1, 1, 2]
        assert list(windowed_extremum([3, 1, 2], 0, "max")) == [3, 1, 2]
        assert list(windowed_extremum([5], 10, "min")) == [5]

    def test_matches_both_references_randomly(self):
        rng = random.Random(13)
        for _ in range(300):
            n = rng.randrange(1, 60)
            width = rng.randrange(0, 70)
            series = [rng.uniform(-100, 100) for _ in range(n)]
            mode = rng.choice(("min", "max"))
            ours = list(windowed_extremum(series, width, mode))
            assert ours == naive_windowed(series, width, mode)
            assert ours == deque_windowed(series, width, mode)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            windowed_extremum([], 1, "min")
        with pytest.raises(ValueError):
            windowed_extremum([1.0], -1, "min")
        with pytest.raises(ValueError):
            windowed_extremum([1.0], 1, "median")


class TestOracleEquivalence:
    def test_exact_agreement_with_direct_definition(self):
        rng = random.Random(14)
        for i in range(400):
            f, trace = random_pair(rng, max_depth=4, max_len=50)
            assert robustness(f, trace).rho == naive_rho(f, trace), f"case {i}"

    def test_until_against_expansion_on_short_traces(self):
        rng = random.Random(15)
        for _ in range(300):
            trace = random_trace(rng, max_len=10)
            lo = rng.randrange(0, 4)
            f = Until(
                Interval(lo, lo + rng.randrange(0, 6)),
                random_formula(rng, 1),
                random_formula(rng, 1),
            )
            assert robustness(f, trace).rho == naive_rho(f, trace)


class TestDualities:
    def test_negation_duality(self):
        rng = random.Random(16)
        for _ in range(300):
            f, trace = random_pair(rng, max_depth=3, max_len=25)
            assert robustness(Not(f), trace).rho == -robustness(f, trace).rho

    def test_globally_eventually_duality(self):
        rng = random.Random(17)
        for _ in range(300):
            f, trace = random_pair(rng, max_depth=2, max_len=25)
            iv = Interval(
                float(rng.randrange(0, 4)),
                UNBOUNDED if rng.random() < 0.3 else float(rng.randrange(4, 10)),
            )
            lhs = robustness(Globally(iv, f), trace).rho
            rhs = -robustness(Eventually(iv, Not(f)), trace).rho
            assert lhs == rhs


class TestSoundness:
    def test_sign_agrees_with_boolean_monitor(self):
        rng = random.Random(18)
        checked = 0
        for _ in range(500):
            f, trace = random_pair(rng, max_depth=4, max_len=30)
            rho = robustness(f, trace).rho
            if abs(rho) <= 1e-9:
                continue
            checked += 1
            assert (rho > 0) == boolean_monitor(f, trace)
        assert checked > 400  # ties are rare with continuous data


class TestAtomMonotonicity:
    def test_raising_threshold_raises_rho_boundedly(self):
        # ρ responds to the threshold of a positively-occurring atom with
        # slope in [0, 1]: +δ on c raises ρ by at most δ, never lowers it.
        rng = random.Random(19)
        for _ in range(200):
            trace = random_trace(rng, max_len=25)
            delta = rng.uniform(0.01, 5.0)

            def build(c):
                f = Atom(Compare(SignalRef("x"), CmpOp.LT, Constant(c)))
                layers = rng.randrange(0, 4)
                state = rng.getstate()
                for _ in range(layers):
                    kind = rng.randrange(4)
                    other = random_formula(rng, 1)
                    if kind == 0:
                        f = And(f, other)
                    elif kind == 1:
                        f = Or(other, f)
                    elif kind == 2:
                        f = Globally(Interval(0, float(rng.randrange(0, 8))), f)
                    else:
                        f = Eventually(Interval(0, float(rng.randrange(0, 8))), f)
                return f, state

            c = rng.uniform(-5, 5)
            state_before = rng.getstate()
            low, _ = build(c)
            rng.setstate(state_before)
            high, _ = build(c + delta)
            rho_low = robustness(low, trace).rho
            rho_high = robustness(high, trace).rho
            assert rho_low <= rho_high <= rho_low + delta + 1e-12


class TestIntervalConversion:
    def test_non_sample_aligned_bound_is_hard_error(self):
        trace = load_trace_json('{"id":"t","dt":0.1,"signals":{"x":[0,1,2]}}', SPEC)
        f = Globally(Interval(0.0, 0.25), x_gt(0))  # 2.5 samples at dt=0.1
        with pytest.raises(EvalError, match="not a whole number of samples"):
            robustness(f, trace)

    def test_aligned_bounds_accepted(self):
        trace = load_trace_json('{"id":"t","dt":0.1,"signals":{"x":[1,2,3]}}', SPEC)
        f = Globally(Interval(0.0, 0.2), x_gt(0))
        assert robustness(f, trace).rho == 1.0

    def test_missing_signal_names_rule_and_signal(self):
        trace = trace_of(x=[1, 2])
        f = Globally(Interval(0, UNBOUNDED), Atom(Compare(SignalRef("speed"), CmpOp.LT, Constant(1))))
        with pytest.raises(EvalError, match="missing from trace"):
            robustness(f, trace, rule_name="speed_limit")
        with pytest.raises(EvalError, match="speed_limit"):
            robustness(f, trace, rule_name="speed_limit")

    def test_bool_atom_missing_channel(self):
        trace = trace_of(x=[1, 2])
        spec = parse_spec("signal ok : bool\nrule guard: G[0, inf] (ok)\n")
        with pytest.raises(EvalError, match="guard.*'ok' missing"):
            robustness(spec.rules[0].formula, trace, rule_name="guard")


class TestTruncation:
    def test_overhanging_window_clips(self):
        trace = trace_of(x=[5, 1, 3])
        f = Globally(Interval(0, 100), x_gt(0))  # window far past the end
        assert robustness(f, trace).rho == 1.0

    def test_empty_window_degenerates_to_last_sample(self):
        trace = trace_of(x=[5, 1, 3])
        profile = robustness_profile(Eventually(Interval(10, 12), x_gt(0)), trace)
        # every start is past the end, so each entry is the last sample's value
        assert list(profile.root) == [3.0, 3.0, 3.0]

    def test_unbounded_globally_is_suffix_min(self):
        trace = trace_of(x=[5, 1, 3])
        profile = robustness_profile(Globally(Interval(0, UNBOUNDED), x_gt(0)), trace)
        assert list(profile.root) == [1.0, 1.0, 3.0]


class TestUnboundedUntil:
    def test_engine_matches_reference_on_unbounded_until(self):
        # the parser forbids unbounded U, but the AST admits it and the
        # engine must apply the same truncation rule
        rng = random.Random(31)
        for _ in range(100):
            trace = random_trace(rng, max_len=12)
            f = Until(
                Interval(float(rng.randrange(0, 3)), UNBOUNDED),
                random_formula(rng, 1),
                random_formula(rng, 1),
            )
            assert robustness(f, trace).rho == naive_rho(f, trace)
