"""Growth field and start classification for the preview parameters.

Writes field.csv, field.svg and starts.csv to the output directory and prints
how many starts fall into each behaviour class.
"""

import argparse
import csv
from collections import Counter
from pathlib import Path

from teamdyn.dynamics import classify_field, vector_field
from teamdyn.export import FIELD_COLUMNS, field_records, render_field_svg, write_csv
from teamdyn.model import AgentTypeSpec, ModelParams


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/preview")
    parser.add_argument("--n-max", type=int, default=60)
    parser.add_argument("--lam", type=float, default=0.025)
    parser.add_argument("--alpha", type=float, default=5.0)
    parser.add_argument("--beta", type=float, default=0.1)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    types = (AgentTypeSpec(0.1), AgentTypeSpec(0.1))
    params = ModelParams(args.lam, args.alpha, args.beta)

    grid = vector_field(args.n_max, args.n_max, types, params)
    with open(out / "field.csv", "w", newline="") as fh:
        write_csv(field_records(grid), FIELD_COLUMNS, fh)
    (out / "field.svg").write_text(render_field_svg(grid))

    starts = classify_field(args.n_max, args.n_max, types, params)
    with open(out / "starts.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_a", "n_b", "start_class"])
        for (a, b), cls in sorted(starts.items()):
            w.writerow([a, b, cls.value])

    print("cell classes:", {k.value: v for k, v in grid.counts().items()})
    print("start classes:", dict(Counter(c.value for c in starts.values())))


if __name__ == "__main__":
    main()
