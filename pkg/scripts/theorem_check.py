"""Closed-form optima against brute-force minimization over a lambda sweep.

Prints one line per lambda with both theorem values, the oracle values and
the relative gaps, for the two-type noiseless case at alpha = 1.
"""

import argparse

import numpy as np

from teamdyn.model import AgentTypeSpec, ModelParams, disutility
from teamdyn.optima import (
    DegenerateParametersError,
    default_search_max,
    utility_optimal_count_beta0,
    utility_optimal_count_beta1,
)
from teamdyn.oracle import minimize_univariate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-a", type=float, default=10.0)
    parser.add_argument("--loss-a", type=float, default=0.1)
    parser.add_argument("--loss-b", type=float, default=0.05)
    parser.add_argument("--lams", type=float, nargs="+",
                        default=list(np.round(np.linspace(0.0, 0.2, 11), 4)))
    args = parser.parse_args()

    types = (AgentTypeSpec(args.loss_a), AgentTypeSpec(args.loss_b))
    hi = default_search_max(args.n_a)
    print(f"{'lambda':>7} {'beta':>4} {'closed':>12} {'oracle':>12} {'rel gap':>9} flags")
    for lam in args.lams:
        for beta, solver in ((0, utility_optimal_count_beta0), (1, utility_optimal_count_beta1)):
            params = ModelParams(lam, 1.0, float(beta))
            try:
                res = solver(args.n_a, types, lam)
            except DegenerateParametersError as exc:
                print(f"{lam:7.4f} {beta:4d} {'-':>12} {'-':>12} {'-':>9} {exc}")
                continue
            x, _ = minimize_univariate(lambda v: disutility((args.n_a, v), types, params), 0.0, hi)
            gap = abs(x - res.optimal_count) / max(res.optimal_count, 1e-12)
            flags = ("clamped " if res.clamped else "") + ("" if res.valid else "invalid")
            print(f"{lam:7.4f} {beta:4d} {res.optimal_count:12.6f} {x:12.6f} {gap:9.2e} {flags}")


if __name__ == "__main__":
    main()
