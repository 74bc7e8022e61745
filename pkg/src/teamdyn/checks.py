"""Monte Carlo verification of the closed-form MSE and disagreement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from teamdyn.model import AgentTypeSpec, team_disagreement, team_mse
from teamdyn.oracle import build_world, empirical_disagreement, empirical_team_mse

Z_LIMIT = 4.0
NOISE = 0.2**2  # prediction-noise standard deviation 0.2


@dataclass(frozen=True)
class McCase:
    name: str
    types: tuple[AgentTypeSpec, ...]
    counts: tuple[int, ...]
    alpha: float
    beta: float
    dims: Optional[tuple[int, ...]] = None


def _t(*specs: tuple[float, float]) -> tuple[AgentTypeSpec, ...]:
    return tuple(AgentTypeSpec(loss, var) for loss, var in specs)


def default_suite() -> list[McCase]:
    s = NOISE
    return [
        McCase("two-avg", _t((0.1, 0), (0.05, 0)), (1, 1), 1.0, 0.0),
        McCase("two-sqrt-noisyB", _t((0.1, 0), (0.05, s)), (3, 2), 0.5, 0.2),
        McCase("two-a2-noisyA", _t((0.1, s), (0.05, 0)), (2, 5), 2.0, 1.0),
        McCase("two-a5-noisy", _t((0.1, s), (0.05, s)), (4, 1), 5.0, 0.0),
        McCase("two-homogeneous-noisy", _t((0.1, s), (0.05, 0)), (2, 0), 1.0, 0.0),
        McCase("two-a2-b02", _t((0.2, 0), (0.1, 0)), (6, 3), 2.0, 0.2),
        McCase("three-symmetric", _t((0.1, 0), (0.1, 0), (0.1, 0)), (1, 1, 1), 1.0, 0.0),
        McCase("three-sqrt-b1", _t((0.12, 0), (0.1, s), (0.08, 0)), (2, 1, 3), 0.5, 1.0),
        McCase("three-a2-noisy", _t((0.12, s), (0.1, s), (0.08, s)), (3, 2, 2), 2.0, 0.2),
        McCase("three-a5", _t((0.12, 0), (0.1, 0), (0.08, 0)), (1, 4, 2), 5.0, 0.0),
        McCase("three-absent-C", _t((0.1, s), (0.1, 0), (0.1, 0)), (2, 2, 0), 1.0, 1.0),
        McCase("three-a5-noisyC", _t((0.15, 0), (0.1, 0), (0.09, s)), (5, 1, 1), 5.0, 0.2),
    ]


@dataclass(frozen=True)
class McRow:
    case: str
    quantity: str
    closed_form: float
    mc_mean: float
    std_error: float
    z: float

    @property
    def passed(self) -> bool:
        return abs(self.z) <= Z_LIMIT

    def as_record(self) -> dict:
        return {
            "case": self.case,
            "quantity": self.quantity,
            "closed_form": self.closed_form,
            "mc_mean": self.mc_mean,
            "std_error": self.std_error,
            "z": self.z,
            "pass": self.passed,
        }


def run_mc_check(
    cases: Sequence[McCase], samples: int = 100_000, seed: int = 0, threads: int = 1
) -> Iterator[McRow]:
    for i, case in enumerate(cases):
        dims = case.dims or (4,) * len(case.types)
        world = build_world(dims, case.types, seed=seed + i)
        mse = team_mse(case.counts, case.types, case.alpha)
        est = empirical_team_mse(world, case.counts, case.alpha, samples, seed + 1000 + i, threads)
        yield McRow(case.name, "mse", mse, est.mean, est.std_error, est.z_score(mse))
        dis = team_disagreement(case.counts, case.types, case.beta)
        est = empirical_disagreement(world, case.counts, case.beta, samples, seed + 2000 + i, threads)
        yield McRow(case.name, "disagreement", dis, est.mean, est.std_error, est.z_score(dis))
