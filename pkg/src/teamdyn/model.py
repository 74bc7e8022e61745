"""Closed-form team quantities: aggregation weights, MSE, disagreement, disutility.

Every quantity depends on the team only through its per-type counts, so
compositions are plain sequences of nonnegative reals ``(n_A, n_B, ...)``.
Counts may be fractional here; integrality is a concern of the growth
dynamics only.

Cross-type second moments ``M_g = E[theta^g(x)^2]`` are recovered from the
type losses by :func:`losses_to_moments` and drive both the N-type MSE

    MSE = sum_g (1 - w_g)^2 M_g + sum_g w_g^2 sigma_g^2

and the N-type pairwise disagreement. For two types both reduce exactly to
the familiar two-type decompositions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

FEASIBILITY_TOL = 1e-12


class TeamModelError(ValueError):
    """Base class for invalid model inputs."""


class EmptyTeamError(TeamModelError):
    def __init__(self) -> None:
        super().__init__("empty team")


class InfeasibleLossesError(TeamModelError):
    pass


class BoundaryDerivativeError(TeamModelError):
    def __init__(self) -> None:
        super().__init__("derivative undefined at boundary")


@dataclass(frozen=True)
class AgentTypeSpec:
    """Noiseless squared-error loss of a type and its prediction-noise variance."""

    loss: float
    noise_var: float = 0.0

    def __post_init__(self) -> None:
        for name in ("loss", "noise_var"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise TeamModelError(f"{name} must be finite and >= 0, got {value!r}")

    def scaled(self, c: float) -> "AgentTypeSpec":
        return AgentTypeSpec(self.loss * c, self.noise_var * c)


@dataclass(frozen=True)
class ModelParams:
    """Affinity weight ``lam``, aggregation exponent ``alpha``, size exponent ``beta``."""

    lam: float = 0.0
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.lam <= 1.0):
            raise TeamModelError(f"lambda must lie in [0, 1], got {self.lam!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise TeamModelError(f"alpha must be finite and >= 0, got {self.alpha!r}")
        if not (0.0 <= self.beta <= 1.0):
            raise TeamModelError(f"beta must lie in [0, 1], got {self.beta!r}")


def _check_counts(counts: Sequence[float]) -> None:
    if any(n < 0 or not math.isfinite(n) for n in counts):
        raise TeamModelError(f"counts must be finite and >= 0, got {tuple(counts)!r}")
    if not any(n > 0 for n in counts):
        raise EmptyTeamError()


def _check_arity(counts: Sequence[float], types: Sequence[AgentTypeSpec]) -> None:
    if len(counts) != len(types):
        raise TeamModelError(f"{len(counts)} counts given for {len(types)} types")


def _powers(counts: Sequence[float], alpha: float) -> list[float]:
    """``(n_g / max n)^alpha``: proportional to ``n_g^alpha`` without under- or overflow."""
    top = max(counts)
    # 0**0 is taken as 0 so an absent type never receives weight, even at alpha = 0
    return [(n / top) ** alpha if n > 0 else 0.0 for n in counts]


def aggregation_weights(counts: Sequence[float], alpha: float) -> tuple[float, ...]:
    """Tullock-style weights ``n_g^alpha / sum_h n_h^alpha``."""
    _check_counts(counts)
    if alpha < 0:
        raise TeamModelError(f"alpha must be >= 0, got {alpha!r}")
    p = _powers(counts, alpha)
    total = math.fsum(p)
    return tuple(x / total for x in p)


def losses_to_moments(types: Sequence[AgentTypeSpec]) -> tuple[float, ...]:
    """Solve ``L^g = sum_{h != g} M_h`` for the per-type second moments.

    Raises InfeasibleLossesError when the losses cannot come from any
    linear ground truth with disjoint type features (some ``M_g < 0``).
    """
    t = len(types)
    if t < 2:
        raise TeamModelError("at least 2 types are required")
    total = math.fsum(spec.loss for spec in types)
    moments = []
    for spec in types:
        m = total / (t - 1) - spec.loss
        if m < -FEASIBILITY_TOL:
            raise InfeasibleLossesError(
                f"infeasible losses: implied second moment {m:.6g} < 0 "
                f"for losses {tuple(s.loss for s in types)!r}"
            )
        moments.append(max(m, 0.0))
    return tuple(moments)


def team_mse(counts: Sequence[float], types: Sequence[AgentTypeSpec], alpha: float) -> float:
    _check_arity(counts, types)
    _check_counts(counts)
    moments = losses_to_moments(types)
    p = _powers(counts, alpha)
    total = math.fsum(p)
    terms = []
    for g, spec in enumerate(types):
        # 1 - w_g formed from the other types' powers to avoid cancellation
        rest = math.fsum(p[h] for h in range(len(p)) if h != g) / total
        w = p[g] / total
        terms.append(rest * rest * moments[g])
        terms.append(w * w * spec.noise_var)
    return math.fsum(terms)


def _pair_sum(counts: Sequence[float], types: Sequence[AgentTypeSpec]) -> float:
    """Expected disagreement summed over ordered pairs of distinct agents."""
    moments = losses_to_moments(types)
    terms = []
    for g in range(len(types)):
        ng, sg = counts[g], types[g].noise_var
        for h in range(g + 1, len(types)):
            nh, sh = counts[h], types[h].noise_var
            terms.append(2.0 * ng * nh * (moments[g] + moments[h] + sg + sh))
        terms.append(2.0 * ng * (ng - 1.0) * sg)
    return math.fsum(terms)


def team_disagreement(
    counts: Sequence[float], types: Sequence[AgentTypeSpec], beta: float
) -> float:
    """Pairwise disagreement normalized by ``(sum n)^(1 + beta)``."""
    _check_arity(counts, types)
    _check_counts(counts)
    size = math.fsum(counts)
    return _pair_sum(counts, types) / size ** (1.0 + beta)


def disutility(
    counts: Sequence[float], types: Sequence[AgentTypeSpec], params: ModelParams
) -> float:
    d = team_disagreement(counts, types, params.beta)
    m = team_mse(counts, types, params.alpha)
    return params.lam * d + (1.0 - params.lam) * m


def mse_partial(
    counts: Sequence[float], types: Sequence[AgentTypeSpec], alpha: float, type_index: int
) -> float:
    """Analytic derivative of :func:`team_mse` with respect to one count."""
    _check_arity(counts, types)
    _check_counts(counts)
    k = type_index
    nk = counts[k]
    top = max(counts)
    # derivative of (n_k / top)^alpha, times top so it pairs with the scaled powers
    if nk == 0:
        if alpha < 1:
            raise BoundaryDerivativeError()
        dpk = alpha if alpha == 1 else 0.0
    else:
        dpk = alpha * (nk / top) ** (alpha - 1.0)
    moments = losses_to_moments(types)
    p = _powers(counts, alpha)
    total = math.fsum(p)
    w = [x / total for x in p]
    # dMSE/dw_g
    c = [2.0 * (w[g] * types[g].noise_var - (1.0 - w[g]) * moments[g]) for g in range(len(w))]
    mean_c = math.fsum(wg * cg for wg, cg in zip(w, c))
    return dpk / (top * total) * (c[k] - mean_c)


def disagreement_partial(
    counts: Sequence[float], types: Sequence[AgentTypeSpec], beta: float, type_index: int
) -> float:
    """Analytic derivative of :func:`team_disagreement` with respect to one count."""
    _check_arity(counts, types)
    _check_counts(counts)
    k = type_index
    moments = losses_to_moments(types)
    size = math.fsum(counts)
    pair = _pair_sum(counts, types)
    sk = types[k].noise_var
    dpair = [2.0 * (2.0 * counts[k] - 1.0) * sk]
    for h in range(len(types)):
        if h != k:
            dpair.append(
                2.0 * counts[h] * (moments[k] + moments[h] + sk + types[h].noise_var)
            )
    num = math.fsum(dpair) * size - (1.0 + beta) * pair
    return num / size ** (2.0 + beta)


def disutility_partial(
    counts: Sequence[float], types: Sequence[AgentTypeSpec], params: ModelParams, type_index: int
) -> float:
    dd = disagreement_partial(counts, types, params.beta, type_index)
    dm = mse_partial(counts, types, params.alpha, type_index)
    return params.lam * dd + (1.0 - params.lam) * dm
