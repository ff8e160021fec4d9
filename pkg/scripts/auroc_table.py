"""Noise-detection AUROC of L-Con and M-Con after warm-up and at the last epoch."""
import argparse

import numpy as np

from _common import FIXTURE, seeded
from dualnoise.cli import run_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=FIXTURE)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()

    rows = []
    for s in args.seeds:
        cfg = seeded(args.config, s, "proposed_lm")
        rec = run_config(cfg)
        warm = rec.epochs[cfg.train.warmup_epochs - 1]
        last = rec.epochs[-1]
        rows.append((warm.auroc_l, warm.auroc_m, last.auroc_l, last.auroc_m,
                     last.mean_lcon_clean - last.mean_lcon_noisy))
        print(f"seed {s}: " + "  ".join(f"{v:.4f}" for v in rows[-1]))
    m = np.nanmean(rows, axis=0)
    print("columns: warm-up L/y, warm-up M/x, last L/y, last M/x, last L-Con gap")
    print("mean:   " + "  ".join(f"{v:.4f}" for v in m))


if __name__ == "__main__":
    main()
