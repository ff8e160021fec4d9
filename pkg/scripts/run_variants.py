"""Best / last validation accuracy of every variant on the dual-noise fixture.

    python3 scripts/run_variants.py --seeds 0 1 2
"""
import argparse

import numpy as np

from _common import FIXTURE, seeded
from dualnoise.cli import run_config
from dualnoise.config import VARIANTS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=FIXTURE)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--variants", nargs="+", default=list(VARIANTS), choices=VARIANTS)
    args = ap.parse_args()

    print(f"{'variant':<12} {'best':>7} {'last':>7}   (mean over seeds {args.seeds})")
    for variant in args.variants:
        recs = [run_config(seeded(args.config, s, variant)) for s in args.seeds]
        best = np.mean([r.best_val_acc for r in recs])
        last = np.mean([r.last_val_acc for r in recs])
        print(f"{variant:<12} {100 * best:7.2f} {100 * last:7.2f}")


if __name__ == "__main__":
    main()
