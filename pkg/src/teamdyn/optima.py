"""Closed-form optimal compositions and beneficial ranges for two types.

All functions treat ``n_A`` as fixed and ask how many type-B members a team
should hold. The closed forms cover ``alpha = 1`` with ``beta`` in {0, 1};
anything else is left to :func:`teamdyn.oracle.minimize_univariate` or to
simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from teamdyn.model import (
    AgentTypeSpec,
    ModelParams,
    TeamModelError,
    disutility,
    losses_to_moments,
)
from teamdyn.oracle import minimize_univariate


class DegenerateParametersError(TeamModelError):
    pass


@dataclass(frozen=True)
class OptimumResult:
    optimal_count: float
    valid: bool = True
    clamped: bool = False
    raw: Optional[float] = None  # unclamped closed-form value, when there is one


@dataclass(frozen=True)
class BeneficialRange:
    """Interval of ``n_B`` on which adding a type-B member lowers disagreement.

    ``direct_roots`` are the roots of the exact derivative numerator;
    ``printed_roots`` come from the quadratic with ``(1 - beta)`` factored
    out of every noise term, kept only for comparison.
    """

    lower: float
    upper: float
    empty: bool
    direct_roots: tuple[float, ...] = ()
    printed_roots: tuple[float, ...] = ()

    def contains(self, n_b: float) -> bool:
        return not self.empty and self.lower <= n_b <= self.upper


def default_search_max(n_a: float) -> float:
    return max(100.0 * n_a, 1000.0)


def _two(types: Sequence[AgentTypeSpec]) -> tuple[AgentTypeSpec, AgentTypeSpec]:
    if len(types) != 2:
        raise TeamModelError(f"expected exactly 2 types, got {len(types)}")
    losses_to_moments(types)
    return types[0], types[1]


def _require_noiseless(a: AgentTypeSpec, b: AgentTypeSpec) -> None:
    if a.noise_var != 0 or b.noise_var != 0:
        raise TeamModelError("closed form assumes noiseless types (noise_var = 0)")


def _require_lambda(lam: float) -> None:
    if not (0.0 <= lam < 1.0):
        raise TeamModelError(f"lambda must lie in [0, 1), got {lam!r}")


def accuracy_optimal_count(
    n_a: float, types: Sequence[AgentTypeSpec], alpha: float
) -> OptimumResult:
    """Count of type B that minimizes team MSE at fixed ``n_a``."""
    a, b = _two(types)
    if n_a <= 0:
        raise TeamModelError("n_a must be > 0")
    if alpha <= 0:
        raise TeamModelError("alpha must be > 0")
    denom = b.loss + b.noise_var
    if denom == 0:
        raise DegenerateParametersError("degenerate perfect type: optimum is unbounded")
    ratio = (a.loss + a.noise_var) / denom
    value = n_a * ratio ** (1.0 / alpha)
    return OptimumResult(value, valid=True, clamped=False, raw=value)


def _scan_check(
    n_a: float, types: Sequence[AgentTypeSpec], params: ModelParams, n_b: float, steps: int = 2000
) -> bool:
    """True when ``n_b`` is no worse than every point of a coarse scan."""
    at_root = disutility((n_a, n_b), types, params)
    hi = default_search_max(n_a)
    scan = min(disutility((n_a, x), types, params) for x in np.linspace(0.0, hi, steps + 1))
    return at_root <= scan + 1e-12 * abs(at_root)


def _clamped(raw: float, valid: bool = True) -> OptimumResult:
    if raw < 0:
        return OptimumResult(0.0, valid=valid, clamped=True, raw=raw)
    return OptimumResult(raw, valid=valid, clamped=False, raw=raw)


def utility_optimal_count_beta0(
    n_a: float, types: Sequence[AgentTypeSpec], lam: float
) -> OptimumResult:
    """Disutility-minimizing count of type B for ``alpha = 1, beta = 0``."""
    a, b = _two(types)
    _require_noiseless(a, b)
    _require_lambda(lam)
    if n_a <= 0:
        raise TeamModelError("n_a must be > 0")
    s = a.loss + b.loss
    num = lam * s * n_a**2 - (1.0 - lam) * a.loss * n_a
    den = -lam * s * n_a - (1.0 - lam) * b.loss
    if den == 0:
        raise DegenerateParametersError("degenerate parameters: zero denominator")
    return _clamped(num / den)


def utility_optimal_count_beta1(
    n_a: float, types: Sequence[AgentTypeSpec], lam: float
) -> OptimumResult:
    """Disutility-minimizing count of type B for ``alpha = 1, beta = 1``.

    The closed form is a stationary point that need not be the global
    minimizer; ``valid`` is False when a coarse scan over
    ``[0, default_search_max(n_a)]`` finds a lower disutility.
    """
    a, b = _two(types)
    _require_noiseless(a, b)
    _require_lambda(lam)
    if n_a <= 0:
        raise TeamModelError("n_a must be > 0")
    s = a.loss + b.loss
    num = lam * s - (1.0 - lam) * a.loss
    den = lam * s - (1.0 - lam) * b.loss
    if den == 0:
        raise DegenerateParametersError("degenerate parameters: zero denominator")
    result = _clamped(n_a * num / den)
    params = ModelParams(lam=lam, alpha=1.0, beta=1.0)
    valid = _scan_check(n_a, types, params, result.optimal_count)
    return OptimumResult(result.optimal_count, valid, result.clamped, result.raw)


def disagreement_threshold_noiseless(n_a: float, beta: float) -> float:
    """Count of type B beyond which adding B lowers noiseless disagreement.

    ``math.inf`` when ``beta == 0``: adding the other type never helps.
    """
    if n_a <= 0:
        raise TeamModelError("n_a must be > 0")
    if beta == 0:
        return math.inf
    return n_a / beta


def _slope_numerator(
    n_b: np.ndarray | float, n_a: float, types: Sequence[AgentTypeSpec], beta: float
):
    """Numerator of d(disagreement)/d(n_B); same sign as the derivative."""
    a, b = types
    k = a.loss + b.loss + a.noise_var + b.noise_var
    return (
        2.0 * n_a * (n_a - beta * n_b) * k
        - 2.0 * a.noise_var * (1.0 + beta) * n_a * (n_a - 1.0)
        + 2.0 * b.noise_var * ((1.0 - beta) * n_b**2 + n_b * (2.0 * n_a + beta) - n_a)
    )


def _real_roots(qa: float, qb: float, qc: float) -> tuple[float, ...]:
    roots = np.roots([qa, qb, qc])
    return tuple(sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-12 * max(1.0, abs(r))))


def _bisect_sign_change(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Locate the sign change of ``f`` in ``[lo, hi]``; ``f(lo)`` and ``f(hi)`` differ in sign."""
    f_lo = f(lo) < 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if (f(mid) < 0) == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def disagreement_beneficial_range(
    n_a: float,
    types: Sequence[AgentTypeSpec],
    beta: float,
    step: float = 1e-3,
    tol: float = 1e-8,
) -> BeneficialRange:
    """Range of ``n_B`` where the disagreement derivative in ``n_B`` is negative.

    Found by scanning the derivative's sign on ``(0, 10 n_a]`` and bisecting
    each sign change. If the derivative is still negative at the end of the
    scan the bracket is doubled until it turns.
    """
    a, b = _two(types)
    if n_a <= 0:
        raise TeamModelError("n_a must be > 0")
    if b.noise_var == 0:
        raise TeamModelError("noiseless type B: use disagreement_threshold_noiseless")
    if not (0.0 <= beta < 1.0):
        raise TeamModelError(f"beta must lie in [0, 1), got {beta!r}")

    def g(x: float) -> float:
        return float(_slope_numerator(x, n_a, (a, b), beta))

    hi = 10.0 * n_a
    grid = np.arange(1, int(math.floor(hi / step)) + 1) * step
    neg = _slope_numerator(grid, n_a, (a, b), beta) < 0

    k = a.loss + b.loss + a.noise_var + b.noise_var
    direct = _real_roots(
        2.0 * b.noise_var * (1.0 - beta),
        -2.0 * beta * n_a * k + 2.0 * b.noise_var * (2.0 * n_a + beta),
        2.0 * n_a**2 * k
        - 2.0 * a.noise_var * (1.0 + beta) * n_a * (n_a - 1.0)
        - 2.0 * b.noise_var * n_a,
    )
    printed = _real_roots(
        2.0 * b.noise_var * (1.0 - beta),
        -2.0 * beta * n_a * k + 2.0 * b.noise_var * (1.0 - beta) * (2.0 * n_a + beta),
        2.0 * n_a**2 * k
        - 2.0 * a.noise_var * (1.0 + beta) * n_a * (n_a - 1.0)
        - 2.0 * b.noise_var * (1.0 - beta) * n_a,
    )

    if not neg.any():
        return BeneficialRange(math.nan, math.nan, True, direct, printed)

    first = int(np.argmax(neg))
    if first == 0:
        lower = 0.0
    else:
        lower = _bisect_sign_change(g, float(grid[first - 1]), float(grid[first]), tol)
    # first nonnegative point after the negative run
    after = np.flatnonzero(~neg[first:])
    if after.size:
        j = first + int(after[0])
        upper = _bisect_sign_change(g, float(grid[j - 1]), float(grid[j]), tol)
    else:
        left = float(grid[-1])
        right = 2.0 * left
        while g(right) < 0:
            left, right = right, 2.0 * right
            if right > 1e300:
                raise TeamModelError("disagreement derivative never turns nonnegative")
        upper = _bisect_sign_change(g, left, right, max(tol, 4.0 * math.ulp(right)))
    return BeneficialRange(lower, upper, False, direct, printed)


def _walk(
    counts: tuple[int, ...], k: int, types: Sequence[AgentTypeSpec], params: ModelParams
) -> tuple[int, ...]:
    """Add members of type ``k`` while each addition strictly lowers disutility."""
    current = disutility(counts, types, params)
    while True:
        nxt = counts[:k] + (counts[k] + 1,) + counts[k + 1 :]
        value = disutility(nxt, types, params)
        if not value < current:
            return counts
        counts, current = nxt, value


def _stationary_other(
    n_fixed: float, fixed: AgentTypeSpec, other: AgentTypeSpec, lam: float, beta: int
) -> float:
    """Closed-form count of ``other`` at fixed ``n_fixed`` (no clamping)."""
    s = fixed.loss + other.loss
    if beta == 0:
        num = lam * s * n_fixed**2 - (1.0 - lam) * fixed.loss * n_fixed
        den = -lam * s * n_fixed - (1.0 - lam) * other.loss
    else:
        num = n_fixed * (lam * s - (1.0 - lam) * fixed.loss)
        den = lam * s - (1.0 - lam) * other.loss
    if den == 0:
        raise DegenerateParametersError("degenerate parameters: zero denominator")
    return num / den


def predict_convergence(
    initial: Sequence[int], types: Sequence[AgentTypeSpec], lam: float, beta: int
) -> tuple[int, int]:
    """Terminal composition of noiseless growth at ``alpha = 1``, ``beta`` in {0, 1}.

    The closed-form stationary counts decide which type grows; the integer
    stopping point along that axis is then found by evaluating the
    disutility step by step.
    """
    a, b = _two(types)
    _require_noiseless(a, b)
    _require_lambda(lam)
    if beta not in (0, 1):
        raise TeamModelError(f"beta must be 0 or 1, got {beta!r}")
    n_a, n_b = (int(n) for n in initial)
    if n_a != initial[0] or n_b != initial[1] or n_a < 0 or n_b < 0 or n_a + n_b == 0:
        raise TeamModelError(f"initial must be a nonempty integer composition, got {initial!r}")
    if beta == 1 and not lam * (a.loss + b.loss) < (1.0 - lam) * min(a.loss, b.loss):
        # the stationary point is then a maximum and one type grows without bound
        raise DegenerateParametersError(
            "beta = 1 needs lambda * (L_A + L_B) < (1 - lambda) * min(L_A, L_B)"
        )
    params = ModelParams(lam=lam, alpha=1.0, beta=float(beta))
    counts = (n_a, n_b)
    # integer stopping points can leave the other axis marginally improvable,
    # so the case selection is repeated until neither axis moves
    while True:
        if counts[0] > 0 and counts[1] < _stationary_other(counts[0], a, b, lam, beta):
            moved = _walk(counts, 1, types, params)
        elif counts[1] > 0 and counts[0] < _stationary_other(counts[1], b, a, lam, beta):
            moved = _walk(counts, 0, types, params)
        else:
            return counts
        if moved == counts:
            return counts
        counts = moved


@dataclass(frozen=True)
class GenericObjective:
    """Disagreement and loss as functions of ``n_B`` at a fixed ``n_A``.

    ``delta_fn`` is the size-normalized disagreement before the ``lambda``
    weighting, which is applied by :func:`generic_optimum`.
    """

    delta_fn: Callable[[float], float]
    loss_fn: Callable[[float], float]
    lo: float
    hi: float


@dataclass(frozen=True)
class ConditionReport:
    delta_increasing: bool
    delta_concave: bool
    loss_down_then_up: bool
    loss_initially_convex: bool
    first_violation: dict

    @property
    def all_pass(self) -> bool:
        return (
            self.delta_increasing
            and self.delta_concave
            and self.loss_down_then_up
            and self.loss_initially_convex
        )


def _sample(fn: Callable[[float], float], xs: np.ndarray) -> np.ndarray:
    values = np.array([fn(float(x)) for x in xs])
    if not np.all(np.isfinite(values)):
        bad = float(xs[int(np.argmin(np.isfinite(values)))])
        raise ValueError(f"non-finite objective value at n_B={bad}")
    return values


def generic_condition_check(
    obj: GenericObjective, n_points: int = 512, rtol: float = 1e-12
) -> ConditionReport:
    """Numerically test the shape conditions under which affinity causes under-growth.

    Differences are compared against ``rtol`` times the largest magnitude of
    the sampled function.
    """
    if n_points < 3:
        raise ValueError("need at least 3 sample points")
    xs = np.linspace(obj.lo, obj.hi, n_points)
    d = _sample(obj.delta_fn, xs)
    ell = _sample(obj.loss_fn, xs)
    violations: dict = {}

    tol_d = rtol * max(1.0, float(np.max(np.abs(d))))
    dd1, dd2 = np.diff(d), np.diff(d, 2)
    bad = np.flatnonzero(dd1 < -tol_d)
    increasing = bad.size == 0
    if not increasing:
        violations["delta_increasing"] = float(xs[bad[0]])
    bad = np.flatnonzero(dd2 > tol_d)
    concave = bad.size == 0
    if not concave:
        violations["delta_concave"] = float(xs[bad[0] + 1])

    tol_l = rtol * max(1.0, float(np.max(np.abs(ell))))
    ld1, ld2 = np.diff(ell), np.diff(ell, 2)
    sign = np.where(ld1 < -tol_l, -1, np.where(ld1 > tol_l, 1, 0))
    down_up = False
    turn = 0
    if sign[0] != -1:
        violations["loss_down_then_up"] = float(xs[0])
    else:
        nonneg = np.flatnonzero(sign != -1)
        if nonneg.size == 0:
            violations["loss_down_then_up"] = float(xs[-1])
        else:
            turn = int(nonneg[0])
            tail = sign[turn:]
            back = np.flatnonzero(tail == -1)
            if back.size:
                violations["loss_down_then_up"] = float(xs[turn + back[0]])
            elif not (tail == 1).any():
                violations["loss_down_then_up"] = float(xs[turn])
            else:
                down_up = True
    # convexity is required only while the loss is still decreasing
    stop = turn if down_up else len(ld2)
    bad = np.flatnonzero(ld2[: max(stop - 1, 0)] < -tol_l)
    convex = bad.size == 0
    if not convex:
        violations["loss_initially_convex"] = float(xs[bad[0] + 1])
    return ConditionReport(increasing, concave, down_up, convex, violations)


@dataclass(frozen=True)
class GenericOptimum:
    optimal_count: float
    accuracy_optimum: float
    strictly_below: bool


def generic_optimum(
    obj: GenericObjective,
    lam: float,
    coarse_steps: int = 10_000,
    refine_tol: float = 1e-9,
) -> GenericOptimum:
    """Minimize ``lam * delta + (1 - lam) * loss`` over the objective's domain.

    ``strictly_below`` records whether the result undercuts the loss-only
    minimizer; under the shape conditions with ``lam > 0`` it should.
    """
    if not (0.0 <= lam <= 1.0):
        raise TeamModelError(f"lambda must lie in [0, 1], got {lam!r}")

    def total(x: float) -> float:
        return lam * obj.delta_fn(x) + (1.0 - lam) * obj.loss_fn(x)

    x_star, _ = minimize_univariate(total, obj.lo, obj.hi, coarse_steps, refine_tol)
    x_acc, _ = minimize_univariate(obj.loss_fn, obj.lo, obj.hi, coarse_steps, refine_tol)
    return GenericOptimum(x_star, x_acc, x_star < x_acc)
