"""Three-type growth field: which additions help at each composition.

Writes one CSV row per cell with the three gains and prints, for each face
n_C = const, how often each type's addition is beneficial.
"""

import argparse
import csv
from pathlib import Path

from teamdyn.dynamics import three_type_field
from teamdyn.model import AgentTypeSpec, ModelParams


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/three")
    parser.add_argument("--n-max", type=int, default=20)
    parser.add_argument("--lam", type=float, default=0.025)
    parser.add_argument("--alpha", type=float, default=5.0)
    parser.add_argument("--beta", type=float, default=0.1)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    types = (AgentTypeSpec(0.1),) * 3
    params = ModelParams(args.lam, args.alpha, args.beta)
    n = args.n_max
    field = three_type_field((n, n, n), types, params)

    with open(out / "field3.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_a", "n_b", "n_c", "gain_a", "gain_b", "gain_c"])
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    w.writerow([a + 1, b + 1, c + 1, *map(repr, field.gains[a, b, c].tolist())])

    helpful = field.beneficial
    for c in (0, n // 2, n - 1):
        share = helpful[:, :, c, :].mean(axis=(0, 1))
        print(f"n_c={c + 1:3d}: share beneficial A {share[0]:.3f}  B {share[1]:.3f}  C {share[2]:.3f}")


if __name__ == "__main__":
    main()
