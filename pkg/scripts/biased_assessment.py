"""Fields under over-, un- and under-estimated gains.

For each utility-gain bias the field is written as CSV and SVG, and the
number of compositions where adding either type looks beneficial is printed
alongside the class of cell (40, 40).
"""

import argparse
from pathlib import Path

from teamdyn.dynamics import AssessmentModel, CellClass, vector_field
from teamdyn.export import FIELD_COLUMNS, field_records, render_field_svg, write_csv
from teamdyn.model import AgentTypeSpec, ModelParams


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/biased")
    parser.add_argument("--n-max", type=int, default=60)
    parser.add_argument("--biases", type=float, nargs="+", default=[-0.12, 0.0, 0.12])
    parser.add_argument("--accuracy", action="store_true",
                        help="bias the accuracy gain instead of the utility gain")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    types = (AgentTypeSpec(0.1), AgentTypeSpec(0.1))
    params = ModelParams(0.025, 5.0, 0.2)

    for bias in args.biases:
        if args.accuracy:
            assess = AssessmentModel(accuracy_gain_bias=bias)
        else:
            assess = AssessmentModel(utility_gain_bias=bias)
        grid = vector_field(args.n_max, args.n_max, types, params, assess)
        stem = f"bias_{bias:+.4g}"
        with open(out / f"{stem}.csv", "w", newline="") as fh:
            write_csv(field_records(grid), FIELD_COLUMNS, fh)
        (out / f"{stem}.svg").write_text(render_field_svg(grid))
        probe = grid.cell(40, 40).value if args.n_max >= 40 else "-"
        print(f"bias {bias:+.4g}: ADD_EITHER {grid.counts()[CellClass.ADD_EITHER]:5d}, "
              f"cell (40,40) {probe}")


if __name__ == "__main__":
    main()
