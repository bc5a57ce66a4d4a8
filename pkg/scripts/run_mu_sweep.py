"""Sweep mu on a synthetic dataset and write the (mu, kl, cosine, accuracy) CSV.

    python3 scripts/run_mu_sweep.py --out mu_sweep.csv
"""

import argparse
import sys

from emocircle.circle import CircleConfig
from emocircle.data import synth_generate
from emocircle.experiments import sweep_csv, sweep_mu
from emocircle.losses import LossConfig
from emocircle.model import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--features", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--learning-rate", type=float, default=1e-2)
    ap.add_argument("--angle-difference", choices=("raw", "wrapped"), default="wrapped")
    ap.add_argument("--grid", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    ap.add_argument("--out")
    args = ap.parse_args()

    data = synth_generate(args.n, args.features, seed=args.seed)
    cfg = TrainConfig(learning_rate=args.learning_rate, seed=args.seed,
                      loss=LossConfig(angle_difference=args.angle_difference))
    grid = [float(v) for v in args.grid.split(",")]
    text = sweep_csv(sweep_mu(data, cfg, CircleConfig(), grid))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
