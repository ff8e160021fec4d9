"""Last-epoch accuracy of proposed_lm over a range of L-Con thresholds."""
import argparse

import numpy as np

from _common import FIXTURE, seeded
from dualnoise.cli import run_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=FIXTURE)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--eps1", type=float, nargs="+", default=[0.02, 0.05, 0.1, 0.2, 0.3])
    args = ap.parse_args()

    for eps1 in args.eps1:
        recs = [run_config(seeded(args.config, s, "proposed_lm", filter__eps1=eps1)) for s in args.seeds]
        filtered = np.mean([r.epochs[-1].n_filtered for r in recs])
        print(f"eps1={eps1:<5} best {100 * np.mean([r.best_val_acc for r in recs]):.2f}"
              f"  last {100 * np.mean([r.last_val_acc for r in recs]):.2f}  filtered/epoch {filtered:.0f}")


if __name__ == "__main__":
    main()
