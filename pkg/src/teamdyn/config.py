"""Strict JSON experiment configuration.

Unknown keys are rejected by name and every numeric range is checked before
any computation starts. Example::

    {"lambda": 0.025, "alpha": 5, "beta": 0.1,
     "types": [{"loss": 0.1}, {"loss": 0.1}],
     "grid": {"n_max_a": 60, "n_max_b": 60}}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Any, Optional

from teamdyn.dynamics import ArrivalPolicy, AssessmentModel
from teamdyn.model import AgentTypeSpec, InfeasibleLossesError, ModelParams, losses_to_moments

FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    n_max_a: int
    n_max_b: int


@dataclass(frozen=True)
class DynamicsConfig:
    initial: tuple[int, ...]
    policy: ArrivalPolicy = ArrivalPolicy()
    step_limit: int = 10_000


@dataclass(frozen=True)
class MonteCarloConfig:
    samples: int = 100_000
    seed: int = 0
    dims: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class SweepConfig:
    lam: tuple[float, ...]
    alpha: tuple[float, ...]
    beta: tuple[float, ...]


@dataclass(frozen=True)
class OutputConfig:
    format: str = "csv"
    path: Optional[str] = None


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    types: tuple[AgentTypeSpec, ...]
    assessment: AssessmentModel = AssessmentModel()
    grid: Optional[GridConfig] = None
    dynamics: Optional[DynamicsConfig] = None
    mc: MonteCarloConfig = MonteCarloConfig()
    output: OutputConfig = OutputConfig()
    eval_counts: Optional[tuple[float, ...]] = None
    optima_n_a: Optional[float] = None
    sweep: Optional[SweepConfig] = None

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Replace every seed in the configuration."""
        _check_seed("--seed", seed)
        dyn = self.dynamics
        if dyn is not None and dyn.policy.kind == "seeded-uniform-random":
            dyn = replace(dyn, policy=replace(dyn.policy, seed=seed))
        return replace(
            self,
            assessment=replace(self.assessment, seed=seed),
            mc=replace(self.mc, seed=seed),
            dynamics=dyn,
        )

    def section(self, name: str) -> Any:
        value = {
            "grid": self.grid,
            "dynamics": self.dynamics,
            "eval": self.eval_counts,
            "optima": self.optima_n_a,
            "sweep": self.sweep,
        }[name]
        if value is None:
            raise ConfigError(f'missing required section "{name}"')
        return value


def _keys(obj: Any, where: str, allowed: set[str], required: tuple[str, ...] = ()) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f'unknown key "{key}" in {where}')
    for key in required:
        if key not in obj:
            raise ConfigError(f'{where}: missing required key "{key}"')
    return obj


def _num(obj: dict, key: str, where: str, default: float, lo: float = -math.inf,
         hi: float = math.inf) -> float:
    value = obj.get(key, default)
    name = f"{where}.{key}" if where else key
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f'"{name}" must be a finite number')
    if not lo <= value <= hi:
        raise ConfigError(f'"{name}" = {value!r} is outside [{lo:g}, {hi:g}]')
    return float(value)


def _int(value: Any, name: str, lo: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'"{name}" must be an integer')
    if value < lo:
        raise ConfigError(f'"{name}" must be >= {lo}')
    return value


def _check_seed(name: str, value: Any) -> int:
    value = _int(value, name)
    if value >= 2**64:
        raise ConfigError(f'"{name}" must fit in 64 bits')
    return value


def _int_list(value: Any, name: str, lo: int = 0) -> tuple[int, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f'"{name}" must be a nonempty list of integers')
    return tuple(_int(v, f"{name}[{i}]", lo) for i, v in enumerate(value))


def _num_list(value: Any, name: str, lo: float, hi: float) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f'"{name}" must be a nonempty list of numbers')
    return tuple(_checked(v, f"{name}[{i}]", lo, hi) for i, v in enumerate(value))


def _checked(value: Any, name: str, lo: float, hi: float) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f'"{name}" must be a finite number')
    if not lo <= value <= hi:
        raise ConfigError(f'"{name}" = {value!r} is outside [{lo:g}, {hi:g}]')
    return float(value)


def _policy(raw: Any) -> ArrivalPolicy:
    if isinstance(raw, str):
        raw = {"kind": raw}
    obj = _keys(raw, "dynamics.policy", {"kind", "sequence", "seed"}, ("kind",))
    kind = obj["kind"]
    if kind not in ("alternating", "fixed-sequence", "seeded-uniform-random"):
        raise ConfigError(f'"dynamics.policy.kind" must be one of alternating, '
                          f'fixed-sequence, seeded-uniform-random; got {kind!r}')
    seq = _int_list(obj["sequence"], "dynamics.policy.sequence") if "sequence" in obj else None
    if kind == "fixed-sequence" and seq is None:
        raise ConfigError('"dynamics.policy.sequence" is required for fixed-sequence')
    seed = _check_seed("dynamics.policy.seed", obj["seed"]) if "seed" in obj else None
    return ArrivalPolicy(kind, seq, seed)


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    top = _keys(raw, "config", {
        "lambda", "alpha", "beta", "types", "assessment", "grid", "dynamics",
        "mc", "output", "eval", "optima", "sweep",
    })
    params = ModelParams(
        lam=_num(top, "lambda", "", 0.0, 0.0, 1.0),
        alpha=_num(top, "alpha", "", 1.0, 0.0),
        beta=_num(top, "beta", "", 0.0, 0.0, 1.0),
    )

    raw_types = top.get("types")
    if not isinstance(raw_types, list) or len(raw_types) < 2:
        raise ConfigError('"types": at least 2 types are required')
    types = []
    for i, t in enumerate(raw_types):
        where = f"types[{i}]"
        obj = _keys(t, where, {"loss", "noise_var"}, ("loss",))
        types.append(AgentTypeSpec(
            loss=_num(obj, "loss", where, 0.0, 0.0),
            noise_var=_num(obj, "noise_var", where, 0.0, 0.0),
        ))
    try:
        losses_to_moments(types)
    except InfeasibleLossesError as exc:
        raise ConfigError(f'"types": {exc}') from None
    n_types = len(types)

    assessment = AssessmentModel()
    if "assessment" in top:
        obj = _keys(top["assessment"], "assessment",
                    {"utility_gain_bias", "accuracy_gain_bias", "noise_std", "seed"})
        assessment = AssessmentModel(
            utility_gain_bias=_num(obj, "utility_gain_bias", "assessment", 0.0),
            accuracy_gain_bias=_num(obj, "accuracy_gain_bias", "assessment", 0.0),
            noise_std=_num(obj, "noise_std", "assessment", 0.0, 0.0),
            seed=_check_seed("assessment.seed", obj.get("seed", 0)),
        )

    grid = None
    if "grid" in top:
        obj = _keys(top["grid"], "grid", {"n_max_a", "n_max_b"}, ("n_max_a", "n_max_b"))
        grid = GridConfig(_int(obj["n_max_a"], "grid.n_max_a", 1),
                          _int(obj["n_max_b"], "grid.n_max_b", 1))

    dynamics = None
    if "dynamics" in top:
        obj = _keys(top["dynamics"], "dynamics", {"initial", "policy", "step_limit"}, ("initial",))
        initial = _int_list(obj["initial"], "dynamics.initial")
        if len(initial) != n_types:
            raise ConfigError(f'"dynamics.initial" needs {n_types} counts, got {len(initial)}')
        if sum(initial) == 0:
            raise ConfigError('"dynamics.initial": empty team')
        policy = _policy(obj.get("policy", "alternating"))
        if policy.sequence and any(s >= n_types for s in policy.sequence):
            raise ConfigError('"dynamics.policy.sequence" refers to an unknown type')
        dynamics = DynamicsConfig(initial, policy,
                                  _int(obj.get("step_limit", 10_000), "dynamics.step_limit", 1))

    mc = MonteCarloConfig()
    if "mc" in top:
        obj = _keys(top["mc"], "mc", {"samples", "seed", "dims"})
        dims = _int_list(obj["dims"], "mc.dims", 1) if "dims" in obj else None
        if dims is not None and len(dims) != n_types:
            raise ConfigError(f'"mc.dims" needs {n_types} entries, got {len(dims)}')
        mc = MonteCarloConfig(_int(obj.get("samples", 100_000), "mc.samples", 2),
                              _check_seed("mc.seed", obj.get("seed", 0)), dims)

    output = OutputConfig()
    if "output" in top:
        obj = _keys(top["output"], "output", {"format", "path"})
        fmt = obj.get("format", "csv")
        if fmt not in FORMATS:
            raise ConfigError(f'"output.format" must be one of csv, json, svg; got {fmt!r}')
        path = obj.get("path")
        if path is not None and not isinstance(path, str):
            raise ConfigError('"output.path" must be a string')
        output = OutputConfig(fmt, path)

    eval_counts = None
    if "eval" in top:
        obj = _keys(top["eval"], "eval", {"counts"}, ("counts",))
        counts = obj["counts"]
        if not isinstance(counts, list) or len(counts) != n_types:
            raise ConfigError(f'"eval.counts" needs {n_types} counts')
        eval_counts = tuple(_checked(c, f"eval.counts[{i}]", 0.0, math.inf)
                            for i, c in enumerate(counts))
        if not any(c > 0 for c in eval_counts):
            raise ConfigError('"eval.counts": empty team')

    optima_n_a = None
    if "optima" in top:
        obj = _keys(top["optima"], "optima", {"n_a"}, ("n_a",))
        optima_n_a = _num(obj, "n_a", "optima", 0.0, 0.0)
        if optima_n_a <= 0:
            raise ConfigError('"optima.n_a" must be > 0')

    sweep = None
    if "sweep" in top:
        obj = _keys(top["sweep"], "sweep", {"lambda", "alpha", "beta"})
        sweep = SweepConfig(
            lam=_num_list(obj.get("lambda", [params.lam]), "sweep.lambda", 0.0, 1.0),
            alpha=_num_list(obj.get("alpha", [params.alpha]), "sweep.alpha", 0.0, math.inf),
            beta=_num_list(obj.get("beta", [params.beta]), "sweep.beta", 0.0, 1.0),
        )

    return ExperimentConfig(
        params=params,
        types=tuple(types),
        assessment=assessment,
        grid=grid,
        dynamics=dynamics,
        mc=mc,
        output=output,
        eval_counts=eval_counts,
        optima_n_a=optima_n_a,
        sweep=sweep,
    )
