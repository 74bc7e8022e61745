"""Command-line entry point: ``teamdyn <command> --config cfg.json``.

Commands: eval, optima, dynamics, field, sweep, mc-check. Exit status is 0
on success, 1 for invalid input, 2 for runtime or check failures.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Iterable, Iterator

from teamdyn.checks import McCase, default_suite, run_mc_check
from teamdyn.config import ConfigError, ExperimentConfig, parse_config
from teamdyn.dynamics import run_dynamics, vector_field
from teamdyn.export import FIELD_COLUMNS, field_records, render_field_svg, write_csv, write_json
from teamdyn.model import (
    ModelParams,
    TeamModelError,
    disutility,
    team_disagreement,
    team_mse,
)
from teamdyn.optima import (
    accuracy_optimal_count,
    default_search_max,
    disagreement_threshold_noiseless,
    utility_optimal_count_beta0,
    utility_optimal_count_beta1,
)
from teamdyn.oracle import minimize_univariate

EXIT_OK, EXIT_INVALID, EXIT_FAILURE = 0, 1, 2
COMMANDS = ("eval", "optima", "dynamics", "field", "sweep", "mc-check")
SWEEP_BATCH = 64


class CheckFailed(RuntimeError):
    pass


def _count_columns(n: int) -> list[str]:
    letters = "abcdefghijklmnopqrstuvwxyz"
    return [f"n_{letters[i]}" if n <= len(letters) else f"n_{i}" for i in range(n)]


def _eval(cfg: ExperimentConfig, threads: int):
    counts = cfg.section("eval")
    names = _count_columns(len(cfg.types))
    rec = dict(zip(names, counts))
    rec["mse"] = team_mse(counts, cfg.types, cfg.params.alpha)
    rec["disagreement"] = team_disagreement(counts, cfg.types, cfg.params.beta)
    rec["disutility"] = disutility(counts, cfg.types, cfg.params)
    return [rec], names + ["mse", "disagreement", "disutility"]


def _optima(cfg: ExperimentConfig, threads: int):
    n_a = cfg.section("optima")
    types = cfg.types
    if len(types) != 2:
        raise ConfigError('"optima" needs exactly 2 types')
    hi = default_search_max(n_a)
    rows = []

    def add(name: str, value: float, valid: bool, objective, vectorized: bool = False) -> None:
        oracle = minimize_univariate(objective, 0.0, hi, vectorized=vectorized)[0]
        rows.append({
            "quantity": name,
            "value": value,
            "valid": valid,
            "oracle": oracle,
            "delta": abs(value - oracle),
        })

    alpha = cfg.params.alpha
    res = accuracy_optimal_count(n_a, types, alpha)
    add("accuracy_optimal", res.optimal_count, res.valid,
        lambda x: team_mse((n_a, x), types, alpha))
    noiseless = all(t.noise_var == 0 for t in types)
    lam = cfg.params.lam
    if noiseless and lam < 1:
        for beta, solver in ((0, utility_optimal_count_beta0), (1, utility_optimal_count_beta1)):
            params = ModelParams(lam, 1.0, float(beta))
            try:
                res = solver(n_a, types, lam)
            except TeamModelError:
                continue
            add(f"utility_optimal_beta{beta}", res.optimal_count, res.valid,
                lambda x, p=params: disutility((n_a, x), types, p))
    threshold = disagreement_threshold_noiseless(n_a, cfg.params.beta)
    rows.append({
        "quantity": "disagreement_threshold",
        "value": threshold if math.isfinite(threshold) else None,
        "valid": True,
        "oracle": None,
        "delta": None,
    })
    return rows, ["quantity", "value", "valid", "oracle", "delta"]


def _dynamics(cfg: ExperimentConfig, threads: int):
    dyn = cfg.section("dynamics")
    traj = run_dynamics(dyn.initial, dyn.policy, cfg.types, cfg.params, cfg.assessment,
                        dyn.step_limit)
    names = _count_columns(len(cfg.types))

    def records() -> Iterator[dict]:
        yield {"step": 0, "arrival": None, "accepted": None, **dict(zip(names, traj.states[0]))}
        for t, k, ok, counts in traj.records():
            yield {"step": t, "arrival": k, "accepted": ok, **dict(zip(names, counts))}

    return records(), ["step", "arrival", "accepted"] + names


def _field(cfg: ExperimentConfig, threads: int):
    grid = cfg.section("grid")
    if len(cfg.types) != 2:
        raise ConfigError('"field" supports exactly 2 types')
    fg = vector_field(grid.n_max_a, grid.n_max_b, cfg.types, cfg.params, cfg.assessment, threads)
    return fg, list(FIELD_COLUMNS)


def _sweep(cfg: ExperimentConfig, threads: int):
    sweep = cfg.section("sweep")
    if cfg.grid is None and cfg.dynamics is None:
        raise ConfigError('"sweep" needs a "grid" or a "dynamics" section')
    if cfg.grid is not None and len(cfg.types) != 2:
        raise ConfigError('"sweep" with a grid supports exactly 2 types')
    names = _count_columns(len(cfg.types))
    columns = ["lambda", "alpha", "beta"]
    if cfg.grid is not None:
        columns += ["stay", "add_a", "add_b", "add_either"]
    if cfg.dynamics is not None:
        columns += [f"terminal_{n}" for n in names] + ["reason"]

    def point(values: tuple[float, float, float]) -> dict:
        lam, alpha, beta = values
        params = ModelParams(lam, alpha, beta)
        rec: dict = {"lambda": lam, "alpha": alpha, "beta": beta}
        if cfg.grid is not None:
            fg = vector_field(cfg.grid.n_max_a, cfg.grid.n_max_b, cfg.types, params, cfg.assessment)
            for cls, n in fg.counts().items():
                rec[cls.value.lower()] = n
        if cfg.dynamics is not None:
            dyn = cfg.dynamics
            traj = run_dynamics(dyn.initial, dyn.policy, cfg.types, params, cfg.assessment,
                                dyn.step_limit)
            rec.update({f"terminal_{n}": c for n, c in zip(names, traj.terminal)})
            rec["reason"] = traj.terminated_reason
        return rec

    def records() -> Iterator[dict]:
        product = itertools.product(sweep.lam, sweep.alpha, sweep.beta)
        with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
            while batch := list(itertools.islice(product, SWEEP_BATCH)):
                yield from pool.map(point, batch)

    return records(), columns


def _mc_check(cfg: ExperimentConfig, threads: int):
    cases = default_suite()
    if cfg.eval_counts is not None:
        counts = tuple(int(c) for c in cfg.eval_counts)
        if counts != cfg.eval_counts:
            raise ConfigError('"eval.counts" must be integers for mc-check')
        cases.append(McCase("config", cfg.types, counts, cfg.params.alpha, cfg.params.beta,
                            cfg.mc.dims))
    rows = list(run_mc_check(cases, cfg.mc.samples, cfg.mc.seed, threads))
    failed = [f"{r.case}/{r.quantity}" for r in rows if not r.passed]
    columns = ["case", "quantity", "closed_form", "mc_mean", "std_error", "z", "pass"]
    return [r.as_record() for r in rows], columns, failed


@contextmanager
def _open_out(path: str | None):
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        yield fh


def _emit(records: Iterable[dict], columns: list[str], fmt: str, path: str | None) -> None:
    if fmt == "svg":
        raise ConfigError('format "svg" is only available for the field command')
    with _open_out(path) as out:
        if fmt == "csv":
            write_csv(records, columns, out)
        else:
            write_json(records, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teamdyn",
        description="Team growth dynamics under accuracy and affinity trade-offs.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON experiment configuration")
    parser.add_argument("--out", help="output path (default: config output.path or stdout)")
    parser.add_argument("--format", choices=("csv", "json", "svg"))
    parser.add_argument("--seed", type=int, help="override every seed in the config")
    parser.add_argument("--threads", type=int, help="worker threads (env TEAMDYN_THREADS)")
    return parser


def _threads(arg: int | None) -> int:
    if arg is not None:
        value = arg
    else:
        env = os.environ.get("TEAMDYN_THREADS", "1")
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"TEAMDYN_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise ConfigError("--threads must be >= 1")
    return value


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = _threads(args.threads)
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        fmt = args.format or cfg.output.format
        path = args.out or cfg.output.path

        if args.command == "field":
            fg, columns = _field(cfg, threads)
            if fmt == "svg":
                with _open_out(path) as out:
                    out.write(render_field_svg(fg))
            else:
                _emit(field_records(fg), columns, fmt, path)
            return EXIT_OK
        if args.command == "mc-check":
            records, columns, failed = _mc_check(cfg, threads)
            _emit(records, columns, fmt, path)
            if failed:
                raise CheckFailed("mc-check failed: " + ", ".join(failed))
            return EXIT_OK
        handler = {"eval": _eval, "optima": _optima, "dynamics": _dynamics, "sweep": _sweep}
        records, columns = handler[args.command](cfg, threads)
        _emit(records, columns, fmt, path)
        return EXIT_OK
    except (ConfigError, TeamModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CheckFailed, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
