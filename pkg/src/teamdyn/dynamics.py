"""Sequential team growth, corrupted gain assessments, and composition fields.

A candidate of type ``k`` joins iff the (perceived) change in disutility
from adding them is strictly negative. Gains are computed from the closed
forms in :mod:`teamdyn.model`; with an identity assessment the gain is
exactly ``disutility(next) - disutility(current)``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from teamdyn.model import AgentTypeSpec, ModelParams, TeamModelError, disutility

_disutility = lru_cache(maxsize=1 << 18)(disutility)


@dataclass(frozen=True)
class AssessmentModel:
    """How a team misjudges the disutility change of an addition.

    ``utility_gain_bias`` shifts the whole perceived change;
    ``accuracy_gain_bias`` shifts only the MSE change before it is weighted
    by ``1 - lambda``; ``noise_std`` adds a zero-mean Gaussian draw keyed by
    ``seed`` and the caller's draw key.
    """

    utility_gain_bias: float = 0.0
    accuracy_gain_bias: float = 0.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.noise_std) and self.noise_std >= 0):
            raise TeamModelError(f"noise_std must be >= 0, got {self.noise_std!r}")
        if not (0 <= self.seed < 2**64):
            raise TeamModelError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    def noise_free(self) -> "AssessmentModel":
        return AssessmentModel(self.utility_gain_bias, self.accuracy_gain_bias, 0.0, self.seed)

    def draw(self, key: Sequence[int]) -> float:
        if self.noise_std == 0:
            return 0.0
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, *key]))
        return self.noise_std * float(rng.standard_normal())


IDENTITY = AssessmentModel()


@dataclass(frozen=True)
class ArrivalPolicy:
    kind: str = "alternating"  # alternating | fixed-sequence | seeded-uniform-random
    sequence: Optional[tuple[int, ...]] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in ("alternating", "fixed-sequence", "seeded-uniform-random"):
            raise TeamModelError(f"unknown arrival policy {self.kind!r}")
        if self.kind == "fixed-sequence" and not self.sequence:
            raise TeamModelError("fixed-sequence policy needs a nonempty sequence")

    def arrivals(self, n_types: int) -> Iterator[int]:
        if self.kind == "alternating":
            t = 0
            while True:
                yield t % n_types
                t += 1
        elif self.kind == "fixed-sequence":
            seq = self.sequence or ()
            if any(not 0 <= s < n_types for s in seq):
                raise TeamModelError(f"sequence refers to types outside 0..{n_types - 1}")
            t = 0
            while True:
                yield seq[t % len(seq)]
                t += 1
        else:
            rng = np.random.default_rng(self.seed if self.seed is not None else 0)
            while True:
                yield int(rng.integers(n_types))


def _plus(counts: tuple[int, ...], k: int) -> tuple[int, ...]:
    return counts[:k] + (counts[k] + 1,) + counts[k + 1 :]


def gain(
    counts: Sequence[int],
    type_index: int,
    types: Sequence[AgentTypeSpec],
    params: ModelParams,
    assess: AssessmentModel = IDENTITY,
    key: Sequence[int] = (),
) -> float:
    """Perceived change in disutility from adding one member of ``type_index``.

    Negative means the addition looks beneficial.
    """
    counts = tuple(counts)
    types = tuple(types)
    delta = _disutility(_plus(counts, type_index), types, params) - _disutility(
        counts, types, params
    )
    if assess.accuracy_gain_bias:
        delta += (1.0 - params.lam) * assess.accuracy_gain_bias
    if assess.utility_gain_bias:
        delta += assess.utility_gain_bias
    if assess.noise_std:
        delta += assess.draw((*key, type_index))
    return delta


def step(
    counts: Sequence[int],
    arrival_type: int,
    types: Sequence[AgentTypeSpec],
    params: ModelParams,
    assess: AssessmentModel = IDENTITY,
    key: Sequence[int] = (),
) -> tuple[bool, tuple[int, ...]]:
    counts = tuple(counts)
    if gain(counts, arrival_type, types, params, assess, key) < 0:
        return True, _plus(counts, arrival_type)
    return False, counts


def is_stable(
    counts: Sequence[int],
    types: Sequence[AgentTypeSpec],
    params: ModelParams,
    assess: AssessmentModel = IDENTITY,
) -> bool:
    quiet = assess.noise_free()
    return all(gain(counts, k, types, params, quiet) >= 0 for k in range(len(types)))


@dataclass
class Trajectory:
    states: list[tuple[int, ...]]
    arrivals: list[int] = field(default_factory=list)
    accepted_flags: list[bool] = field(default_factory=list)
    terminated_reason: str = "step-limit"

    @property
    def terminal(self) -> tuple[int, ...]:
        return self.states[-1]

    def records(self) -> Iterator[tuple[int, int, bool, tuple[int, ...]]]:
        """``(step, arrival, accepted, counts_after)`` per arrival."""
        counts = self.states[0]
        for t, (k, ok) in enumerate(zip(self.arrivals, self.accepted_flags), start=1):
            if ok:
                counts = _plus(counts, k)
            yield t, k, ok, counts


def run_dynamics(
    initial: Sequence[int],
    policy: ArrivalPolicy,
    types: Sequence[AgentTypeSpec],
    params: ModelParams,
    assess: AssessmentModel = IDENTITY,
    step_limit: int = 10_000,
) -> Trajectory:
    """Present arrivals one at a time until the state is stable or ``step_limit`` arrivals.

    Stability is judged on the state alone: every single-type addition has a
    nonnegative gain under the noise-free part of ``assess``.
    """
    counts = tuple(int(n) for n in initial)
    if len(counts) != len(types):
        raise TeamModelError(f"{len(counts)} counts given for {len(types)} types")
    if any(n < 0 for n in counts) or sum(counts) == 0:
        raise TeamModelError(f"initial composition must be nonempty, got {counts!r}")
    if step_limit < 1:
        raise TeamModelError("step_limit must be >= 1")
    types = tuple(types)
    traj = Trajectory(states=[counts])
    arrivals = policy.arrivals(len(types))
    for t in range(step_limit):
        if is_stable(counts, types, params, assess):
            traj.terminated_reason = "stable"
            return traj
        k = next(arrivals)
        ok, counts = step(counts, k, types, params, assess, key=(t,))
        traj.arrivals.append(k)
        traj.accepted_flags.append(ok)
        if ok:
            traj.states.append(counts)
    if is_stable(counts, types, params, assess):
        traj.terminated_reason = "stable"
    return traj


class CellClass(enum.Enum):
    STAY = "STAY"
    ADD_A = "ADD_A"
    ADD_B = "ADD_B"
    ADD_EITHER = "ADD_EITHER"

    @classmethod
    def from_gains(cls, gain_a: float, gain_b: float) -> "CellClass":
        if gain_a < 0 and gain_b < 0:
            return cls.ADD_EITHER
        if gain_a < 0:
            return cls.ADD_A
        if gain_b < 0:
            return cls.ADD_B
        return cls.STAY


@dataclass(frozen=True)
class FieldGrid:
    """Gains and classes for every ``(n_a, n_b)`` in ``[1, n_max_a] x [1, n_max_b]``.

    Array index ``[i, j]`` holds the cell ``n_a = i + 1, n_b = j + 1``.
    """

    n_max_a: int
    n_max_b: int
    gain_a: np.ndarray
    gain_b: np.ndarray
    classes: tuple[tuple[CellClass, ...], ...]

    def cell(self, n_a: int, n_b: int) -> CellClass:
        return self.classes[n_a - 1][n_b - 1]

    def records(self) -> Iterator[tuple[int, int, float, float, CellClass]]:
        for i in range(self.n_max_a):
            for j in range(self.n_max_b):
                yield (
                    i + 1,
                    j + 1,
                    float(self.gain_a[i, j]),
                    float(self.gain_b[i, j]),
                    self.classes[i][j],
                )

    def counts(self) -> dict[CellClass, int]:
        out = {c: 0 for c in CellClass}
        for row in self.classes:
            for c in row:
                out[c] += 1
        return out


def vector_field(
    n_max_a: int,
    n_max_b: int,
    types: Sequence[AgentTypeSpec],
    params: ModelParams,
    assess: AssessmentModel = IDENTITY,
    threads: int = 1,
) -> FieldGrid:
    """Classify every cell of a two-type grid by the signs of its two gains.

    Noise draws are keyed by the cell coordinates, so results do not depend
    on ``threads``.
    """
    if n_max_a < 1 or n_max_b < 1:
        raise TeamModelError("grid bounds must be >= 1")
    if len(types) != 2:
        raise TeamModelError("vector_field needs exactly 2 types; see three_type_field")
    types = tuple(types)

    def row(i: int) -> list[tuple[float, float]]:
        n_a = i + 1
        return [
            (
                gain((n_a, n_b), 0, types, params, assess, key=(n_a, n_b)),
                gain((n_a, n_b), 1, types, params, assess, key=(n_a, n_b)),
            )
            for n_b in range(1, n_max_b + 1)
        ]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(n_max_a)))
    else:
        rows = [row(i) for i in range(n_max_a)]
    ga = np.array([[g[0] for g in r] for r in rows])
    gb = np.array([[g[1] for g in r] for r in rows])
    classes = tuple(tuple(CellClass.from_gains(a, b) for a, b in r) for r in rows)
    return FieldGrid(n_max_a, n_max_b, ga, gb, classes)


class StartClass(enum.Enum):
    REACHES_ACCURACY_OPTIMAL = "ReachesAccuracyOptimal"
    STUCK_PARTWAY = "StuckPartway"
    MOVES_AWAY = "MovesAway"
    STATIONARY = "Stationary"


def accuracy_ratio(types: Sequence[AgentTypeSpec], alpha: float) -> float:
    """Slope ``n_B / n_A`` of the accuracy-optimal ray."""
    a, b = types
    return ((a.loss + a.noise_var) / (b.loss + b.noise_var)) ** (1.0 / alpha)


def classify_start(
    initial: Sequence[int],
    types: Sequence[AgentTypeSpec],
    params: ModelParams,
    band: float = 1.0,
    step_limit: int = 500,
) -> StartClass:
    """Where noiseless growth from ``initial`` ends up relative to the accuracy-optimal ray.

    Terminal within ``band`` of the ray (along either axis) counts as
    reaching it. Otherwise progress is measured by the angular distance of
    the composition to the ray.
    """
    if len(types) != 2:
        raise TeamModelError("classify_start needs exactly 2 types")
    traj = run_dynamics(initial, ArrivalPolicy(), types, params, IDENTITY, step_limit)
    n_a, n_b = traj.terminal
    r = accuracy_ratio(types, params.alpha)
    if abs(n_b - r * n_a) <= band or abs(n_a - n_b / r) <= band:
        return StartClass.REACHES_ACCURACY_OPTIMAL
    start = tuple(int(n) for n in initial)
    if traj.terminal == start:
        return StartClass.STATIONARY
    target = math.atan2(r, 1.0)
    before = abs(math.atan2(start[1], start[0]) - target)
    after = abs(math.atan2(n_b, n_a) - target)
    return StartClass.STUCK_PARTWAY if after < before else StartClass.MOVES_AWAY


def classify_field(
    n_max_a: int,
    n_max_b: int,
    types: Sequence[AgentTypeSpec],
    params: ModelParams,
    band: float = 1.0,
    step_limit: int = 500,
) -> dict[tuple[int, int], StartClass]:
    return {
        (a, b): classify_start((a, b), types, params, band, step_limit)
        for a in range(1, n_max_a + 1)
        for b in range(1, n_max_b + 1)
    }


@dataclass(frozen=True)
class ThreeTypeField:
    """Gains for every cell of ``[1, n1] x [1, n2] x [1, n3]``; last axis is the added type."""

    n_max: tuple[int, int, int]
    gains: np.ndarray

    @property
    def beneficial(self) -> np.ndarray:
        return self.gains < 0

    def cell(self, counts: Sequence[int]) -> frozenset[int]:
        idx = tuple(n - 1 for n in counts)
        return frozenset(int(k) for k in np.flatnonzero(self.gains[idx] < 0))


def three_type_field(
    n_max: Sequence[int],
    types: Sequence[AgentTypeSpec],
    params: ModelParams,
    assess: AssessmentModel = IDENTITY,
) -> ThreeTypeField:
    if len(n_max) != 3 or len(types) != 3:
        raise TeamModelError("three_type_field needs 3 grid bounds and 3 types")
    if any(n < 1 for n in n_max):
        raise TeamModelError("grid bounds must be >= 1")
    types = tuple(types)
    n1, n2, n3 = (int(n) for n in n_max)
    gains = np.empty((n1, n2, n3, 3))
    for a in range(n1):
        for b in range(n2):
            for c in range(n3):
                counts = (a + 1, b + 1, c + 1)
                for k in range(3):
                    gains[a, b, c, k] = gain(counts, k, types, params, assess, key=counts)
    return ThreeTypeField((n1, n2, n3), gains)
