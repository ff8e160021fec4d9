"""Best accuracy of proposed_lm against ensemble size on the label-noise-only fixture."""
import argparse

import numpy as np

from _common import FIXTURE, seeded
from dualnoise.cli import run_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=FIXTURE)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--x-rate", type=float, default=0.0)
    args = ap.parse_args()

    for M in args.sizes:
        recs = [run_config(seeded(args.config, s, "proposed_lm", noise__x_rate=args.x_rate, train__M=M))
                for s in args.seeds]
        print(f"M={M}: best {100 * np.mean([r.best_val_acc for r in recs]):.2f}"
              f"  last {100 * np.mean([r.last_val_acc for r in recs]):.2f}")


if __name__ == "__main__":
    main()
