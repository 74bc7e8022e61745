"""Ground truth for the closed forms: synthetic linear worlds and brute force.

A :class:`SyntheticWorld` realizes a set of type losses as an explicit
linear outcome ``f*(x) = sum_g theta^g . x`` over standard Gaussian features
split into disjoint per-type blocks. Monte Carlo estimators on such a world
never touch the closed forms in :mod:`teamdyn.model` apart from reading the
target moments used to size the coefficient blocks.

Sampling is sharded into fixed-size chunks, each seeded from
``(seed, chunk_index)``; per-sample values are merged with ``math.fsum`` so
the estimate is independent of how chunks are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from teamdyn.model import AgentTypeSpec, EmptyTeamError, TeamModelError, losses_to_moments

CHUNK = 1 << 14


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std_error: float
    n_samples: int

    def z_score(self, target: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.mean == target else math.copysign(math.inf, self.mean - target)
        return (self.mean - target) / self.std_error


@dataclass(frozen=True)
class SyntheticWorld:
    feature_dims: tuple[int, ...]
    coefficient_blocks: tuple[np.ndarray, ...]
    noise_vars: tuple[float, ...]
    seed: int

    @property
    def n_types(self) -> int:
        return len(self.feature_dims)

    @property
    def n_features(self) -> int:
        return sum(self.feature_dims)

    def block_slices(self) -> list[slice]:
        edges = np.cumsum((0,) + self.feature_dims)
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def type_signals(self, x: np.ndarray) -> np.ndarray:
        """``theta^g . x`` for every type; shape ``(n_types, n_samples)``."""
        return np.stack(
            [x[:, s] @ theta for s, theta in zip(self.block_slices(), self.coefficient_blocks)]
        )


def build_world(
    dims: Sequence[int], types: Sequence[AgentTypeSpec], seed: int = 0
) -> SyntheticWorld:
    if len(dims) != len(types):
        raise TeamModelError(f"{len(dims)} feature blocks given for {len(types)} types")
    if any(int(d) < 1 for d in dims):
        raise TeamModelError(f"feature block sizes must be >= 1, got {tuple(dims)!r}")
    moments = losses_to_moments(types)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    blocks = []
    for d, m in zip(dims, moments):
        direction = rng.standard_normal(int(d))
        direction /= np.linalg.norm(direction)
        blocks.append(direction * math.sqrt(m))
    return SyntheticWorld(
        feature_dims=tuple(int(d) for d in dims),
        coefficient_blocks=tuple(blocks),
        noise_vars=tuple(spec.noise_var for spec in types),
        seed=seed,
    )


def _chunk_sizes(n_samples: int) -> list[int]:
    full, rest = divmod(n_samples, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _estimate(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> EstimateWithError:
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    sizes = _chunk_sizes(n_samples)

    def run(i: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        return sampler(rng, sizes[i])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    values = np.concatenate(parts)
    mean = math.fsum(values) / n_samples
    var = math.fsum((values - mean) ** 2) / (n_samples - 1)
    return EstimateWithError(mean, math.sqrt(var / n_samples), n_samples)


def empirical_type_loss(
    world: SyntheticWorld, type_index: int, n_samples: int, seed: int, threads: int = 1
) -> EstimateWithError:
    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        x = rng.standard_normal((size, world.n_features))
        signals = world.type_signals(x)
        residual = signals.sum(axis=0) - signals[type_index]
        return residual**2

    return _estimate(sampler, n_samples, seed, threads)


def _weights(counts: Sequence[float], alpha: float) -> np.ndarray:
    p = np.array([n**alpha if n > 0 else 0.0 for n in counts])
    if p.sum() == 0:
        raise EmptyTeamError()
    return p / p.sum()


def empirical_team_mse(
    world: SyntheticWorld,
    counts: Sequence[float],
    alpha: float,
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> EstimateWithError:
    """Sampled squared error of the weighted team forecast.

    One noisy prediction per type per sample: the team aggregate weights the
    type forecasts, not individual agents.
    """
    if len(counts) != world.n_types:
        raise TeamModelError("composition does not match the world's types")
    w = _weights(counts, alpha)
    sd = np.sqrt(np.asarray(world.noise_vars))

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        x = rng.standard_normal((size, world.n_features))
        signals = world.type_signals(x)
        truth = signals.sum(axis=0)
        noisy = signals + sd[:, None] * rng.standard_normal(signals.shape)
        return (w @ noisy - truth) ** 2

    return _estimate(sampler, n_samples, seed, threads)


def empirical_disagreement(
    world: SyntheticWorld,
    counts: Sequence[int],
    beta: float,
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> EstimateWithError:
    """Sampled pairwise disagreement with independent noise per agent."""
    if len(counts) != world.n_types:
        raise TeamModelError("composition does not match the world's types")
    if any(int(n) != n or n < 0 for n in counts):
        raise TeamModelError("disagreement sampling needs integer counts")
    size_total = int(sum(counts))
    if size_total < 1:
        raise EmptyTeamError()
    agent_type = np.repeat(np.arange(world.n_types), [int(n) for n in counts])
    sd = np.sqrt(np.asarray(world.noise_vars))[agent_type]
    norm = size_total ** (1.0 + beta)

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        x = rng.standard_normal((size, world.n_features))
        signals = world.type_signals(x)
        preds = signals[agent_type] + sd[:, None] * rng.standard_normal((size_total, size))
        # sum over ordered pairs of (v_i - v_j)^2 equals 2 n sum_i (v_i - mean)^2
        centered = preds - preds.mean(axis=0)
        return 2.0 * size_total * (centered**2).sum(axis=0) / norm

    return _estimate(sampler, n_samples, seed, threads)


def minimize_univariate(
    f: Callable,
    lo: float,
    hi: float,
    coarse_steps: int = 10_000,
    refine_tol: float = 1e-9,
    vectorized: bool = False,
) -> tuple[float, float]:
    """Global grid scan over ``[lo, hi]`` followed by bounded refinement.

    The best grid cell's neighbours bracket the refinement. Ties on the grid
    go to the leftmost point, and the refined point replaces the grid point
    only when strictly better, so a constant ``f`` returns ``lo``.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    grid = np.linspace(lo, hi, coarse_steps + 1)
    if vectorized:
        values = np.asarray(f(grid), dtype=float)
    else:
        values = np.array([f(float(x)) for x in grid])
    if not np.all(np.isfinite(values)):
        raise ValueError("objective is not finite on the scan grid")
    i = int(np.argmin(values))
    best_x, best_f = float(grid[i]), float(values[i])
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, coarse_steps)])

    def scalar(x: float) -> float:
        v = f(np.array([x]))[0] if vectorized else f(x)
        return float(v)

    res = minimize_scalar(
        scalar, bounds=(a, b), method="bounded", options={"xatol": refine_tol}
    )
    if not math.isfinite(res.fun):
        raise ValueError("objective is not finite during refinement")
    if res.fun < best_f:
        best_x, best_f = float(res.x), float(res.fun)
    return best_x, best_f


def finite_difference(f: Callable[[float], float], x: float, h: float = 1e-5) -> float:
    if h <= 0:
        raise ValueError("h must be > 0")
    up, down = f(x + h), f(x - h)
    if not (math.isfinite(up) and math.isfinite(down)):
        raise ValueError(f"non-finite values at x={x} +/- {h}")
    return (up - down) / (2.0 * h)
