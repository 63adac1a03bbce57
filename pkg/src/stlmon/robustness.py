"""Quantitative robustness and boolean monitoring of formulas over traces.

Robustness follows the usual min/max quantitative semantics: comparison
atoms score their signed margin, enum/bool atoms score +-1, negation
flips sign, `and`/`or` take min/max, and the temporal operators take the
window extremum of their child series.

Truncation: windows are clipped to the end of the trace, and a window
that starts past the end degenerates to the final sample. This keeps
every robustness value finite on finite episodes.

Bounded G/F are computed in O(n) total per node via `windowed_extremum`.
Evaluation is pure per (formula, trace) pair; traces and formulas are
immutable, so many evaluations may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .formula import (
    And,
    Atom,
    BoolIs,
    CmpOp,
    Compare,
    EnumEq,
    Formula,
    Globally,
    Interval,
    Not,
    Or,
    Predicate,
    Specification,
    Until,
    _BinaryFormula,
    _TemporalUnary,
)
from .traces import EvalError, SignalKind, Trace, eval_expr

# An interval bound must land on a sample index to within this tolerance
# (in index units); anything else is rejected rather than silently rounded.
INDEX_TOL = 1e-6


class Verdict(Enum):
    SATISFIED = "Satisfied"
    EXACTLY_SATISFIED = "ExactlySatisfied"
    VIOLATED = "Violated"

    @staticmethod
    def from_rho(rho: float) -> "Verdict":
        if rho > 0:
            return Verdict.SATISFIED
        if rho < 0:
            return Verdict.VIOLATED
        return Verdict.EXACTLY_SATISFIED


@dataclass(frozen=True)
class RobustnessResult:
    rule_name: str
    rho: float
    verdict: Verdict


@dataclass(frozen=True, eq=False)
class RobustnessProfile:
    """Per-node robustness series keyed by path from the root formula.

    The root is "root"; children append ".child", ".lhs" or ".rhs". The
    root series at index 0 is the published per-trace robustness.
    """

    series: dict[str, np.ndarray]

    @property
    def root(self) -> np.ndarray:
        return self.series["root"]


def windowed_extremum(series, width: int, mode: str) -> np.ndarray:
    """Forward-looking sliding extremum: out[t] = extremum of
    series[t .. min(t+width, n-1)].

    O(n) total via the two-pass block prefix/suffix sweep (each element
    is touched a constant number of times). Selection only, so results
    are bit-identical to a naive scan.
    """
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    s = np.asarray(series, dtype=np.float64)
    n = len(s)
    if n == 0:
        raise ValueError("series is empty")
    if width < 0:
        raise ValueError("width must be >= 0")
    w = min(int(width), n - 1)
    if w == 0:
        return s.copy()
    op = np.minimum if mode == "min" else np.maximum
    fill = np.inf if mode == "min" else -np.inf
    block = w + 1
    # Pad so every window end index t+w exists and the array splits into
    # whole blocks; the fill value never wins an extremum because every
    # window contains at least one real sample.
    pad = (-(n + w) % block) + w
    padded = np.concatenate([s, np.full(pad, fill)])
    tiles = padded.reshape(-1, block)
    prefix = op.accumulate(tiles, axis=1).ravel()
    suffix = op.accumulate(tiles[:, ::-1], axis=1)[:, ::-1].ravel()
    return op(suffix[:n], prefix[np.arange(w, n + w)])


def _bound_to_index(bound: float, dt: float) -> int:
    exact = bound / dt
    index = round(exact)
    if abs(index - exact) > INDEX_TOL:
        raise EvalError(
            f"interval bound {bound} is not a whole number of samples at dt={dt}"
        )
    return int(index)


def _offsets(interval: Interval, dt: float) -> tuple[int, int | None]:
    lo = _bound_to_index(interval.lo, dt)
    hi = None if interval.unbounded else _bound_to_index(interval.hi, dt)
    return lo, hi


def _shifted_window(child: np.ndarray, lo: int, hi: int | None, mode: str) -> np.ndarray:
    n = len(child)
    width = (n - 1) if hi is None else (hi - lo)
    base = windowed_extremum(child, width, mode)
    idx = np.minimum(np.arange(n) + lo, n - 1)
    return base[idx]


def _until_series(lhs: np.ndarray, rhs: np.ndarray, lo: int, hi: int | None) -> np.ndarray:
    n = len(lhs)
    out = np.empty(n)
    for t in range(n):
        start = min(t + lo, n - 1)
        end = n - 1 if hi is None else min(t + hi, n - 1)
        held = np.minimum.accumulate(lhs[t : end + 1])
        out[t] = np.max(np.minimum(rhs[start : end + 1], held[start - t : end - t + 1]))
    return out


def _atom_series(pred: Predicate, trace: Trace, boolean: bool, rule_name: str) -> np.ndarray:
    if isinstance(pred, Compare):
        lhs = eval_expr(pred.lhs, trace).values
        rhs = eval_expr(pred.rhs, trace).values
        if not boolean:
            if pred.op in (CmpOp.LT, CmpOp.LE):
                return rhs - lhs
            return lhs - rhs
        if pred.op is CmpOp.LT:
            hold = lhs < rhs
        elif pred.op is CmpOp.LE:
            hold = lhs <= rhs
        elif pred.op is CmpOp.GT:
            hold = lhs > rhs
        else:
            hold = lhs >= rhs
        return np.where(hold, 1.0, -1.0)
    if isinstance(pred, EnumEq):
        series = _channel(trace, pred.signal, SignalKind.ENUM, rule_name)
        if pred.variant not in series.variants:
            raise EvalError(
                f"rule '{rule_name}': variant '{pred.variant}' not in trace channel "
                f"'{pred.signal}'"
            )
        hold = series.values == series.variants.index(pred.variant)
        if pred.negated:
            hold = ~hold
        return np.where(hold, 1.0, -1.0)
    if isinstance(pred, BoolIs):
        series = _channel(trace, pred.signal, SignalKind.BOOL, rule_name)
        hold = series.values if pred.expected else ~series.values
        return np.where(hold, 1.0, -1.0)
    raise EvalError(f"unknown predicate node {type(pred).__name__}")


def _channel(trace: Trace, name: str, kind: SignalKind, rule_name: str):
    series = trace.channels.get(name)
    if series is None:
        raise EvalError(f"rule '{rule_name}': signal '{name}' missing from trace '{trace.id}'")
    if series.kind is not kind:
        raise EvalError(
            f"rule '{rule_name}': signal '{name}' has kind {series.kind.value}, "
            f"expected {kind.value}"
        )
    return series


def _expr_signals(expr) -> set[str]:
    from .formula import Abs, Deriv, SignalRef, _BinaryExpr

    if isinstance(expr, (SignalRef, Deriv)):
        return {expr.name}
    if isinstance(expr, Abs):
        return _expr_signals(expr.child)
    if isinstance(expr, _BinaryExpr):
        return _expr_signals(expr.lhs) | _expr_signals(expr.rhs)
    return set()


def _check_against_trace(f: Formula, trace: Trace, rule_name: str) -> None:
    """Fail fast, naming signal and rule, before any evaluation starts."""
    if isinstance(f, Atom):
        pred = f.predicate
        if isinstance(pred, Compare):
            for name in sorted(_expr_signals(pred.lhs) | _expr_signals(pred.rhs)):
                _channel(trace, name, SignalKind.REAL, rule_name)
        elif isinstance(pred, EnumEq):
            _channel(trace, pred.signal, SignalKind.ENUM, rule_name)
        elif isinstance(pred, BoolIs):
            _channel(trace, pred.signal, SignalKind.BOOL, rule_name)
        return
    if isinstance(f, Until):
        _check_against_trace(f.lhs, trace, rule_name)
        _check_against_trace(f.rhs, trace, rule_name)
        return
    for child in f.children():
        _check_against_trace(child, trace, rule_name)


def _series(
    f: Formula,
    trace: Trace,
    boolean: bool,
    rule_name: str,
    profile: dict[str, np.ndarray] | None,
    path: str,
) -> np.ndarray:
    if isinstance(f, Atom):
        out = _atom_series(f.predicate, trace, boolean, rule_name)
    elif isinstance(f, Not):
        out = -_series(f.child, trace, boolean, rule_name, profile, path + ".child")
    elif isinstance(f, _BinaryFormula):
        lhs = _series(f.lhs, trace, boolean, rule_name, profile, path + ".lhs")
        rhs = _series(f.rhs, trace, boolean, rule_name, profile, path + ".rhs")
        if isinstance(f, And):
            out = np.minimum(lhs, rhs)
        elif isinstance(f, Or):
            out = np.maximum(lhs, rhs)
        else:
            out = np.maximum(-lhs, rhs)
    elif isinstance(f, _TemporalUnary):
        child = _series(f.child, trace, boolean, rule_name, profile, path + ".child")
        lo, hi = _offsets(f.interval, trace.dt)
        mode = "min" if isinstance(f, Globally) else "max"
        out = _shifted_window(child, lo, hi, mode)
    elif isinstance(f, Until):
        lhs = _series(f.lhs, trace, boolean, rule_name, profile, path + ".lhs")
        rhs = _series(f.rhs, trace, boolean, rule_name, profile, path + ".rhs")
        lo, hi = _offsets(f.interval, trace.dt)
        out = _until_series(lhs, rhs, lo, hi)
    else:
        raise EvalError(f"unknown formula node {type(f).__name__}")
    if profile is not None:
        profile[path] = out
    return out


def robustness(f: Formula, trace: Trace, rule_name: str = "rule") -> RobustnessResult:
    """Robustness of the formula at t=0, with the sign-based verdict."""
    _check_against_trace(f, trace, rule_name)
    rho = float(_series(f, trace, False, rule_name, None, "root")[0])
    return RobustnessResult(rule_name, rho, Verdict.from_rho(rho))


def robustness_profile(f: Formula, trace: Trace, rule_name: str = "rule") -> RobustnessProfile:
    """Like `robustness` but retains every node's full robustness series."""
    _check_against_trace(f, trace, rule_name)
    profile: dict[str, np.ndarray] = {}
    _series(f, trace, False, rule_name, profile, "root")
    for arr in profile.values():
        arr.flags.writeable = False
    return RobustnessProfile(profile)


def boolean_monitor(f: Formula, trace: Trace, rule_name: str = "rule") -> bool:
    """Classical boolean semantics at t=0 under the same truncation rule.

    Atoms use their comparison directly, so strict vs non-strict bounds
    are respected even where the quantitative margin is zero.
    """
    _check_against_trace(f, trace, rule_name)
    return bool(_series(f, trace, True, rule_name, None, "root")[0] > 0)


def evaluate_specification(spec: Specification, trace: Trace) -> list[RobustnessResult]:
    """Evaluate every rule of a specification against one trace."""
    return [robustness(rule.formula, trace, rule.name) for rule in spec.rules]
