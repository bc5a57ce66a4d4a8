"""Five loss variants on a synthetic dataset, with the average rank of each.

    python3 scripts/run_ablation.py --mu 0.7
"""

import argparse

from emocircle.circle import CircleConfig
from emocircle.data import synth_generate
from emocircle.experiments import ablate, ablation_csv
from emocircle.losses import LossConfig
from emocircle.metrics import average_rank
from emocircle.model import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--features", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mu", type=float, default=0.7)
    ap.add_argument("--learning-rate", type=float, default=1e-2)
    ap.add_argument("--angle-difference", choices=("raw", "wrapped"), default="wrapped")
    args = ap.parse_args()

    data = synth_generate(args.n, args.features, seed=args.seed)
    cfg = TrainConfig(learning_rate=args.learning_rate, seed=args.seed,
                      loss=LossConfig(mu=args.mu, angle_difference=args.angle_difference))
    rows = ablate(data, cfg, CircleConfig())
    print(ablation_csv(rows), end="")
    ranks = average_rank(dict(rows))
    print("\n# average rank over the six distribution measures")
    for label, rank in ranks.items():
        print(f"# {label:14s} {rank:.2f}")


if __name__ == "__main__":
    main()
