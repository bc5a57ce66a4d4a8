"""Held-out accuracy and KL of the synthetic learnability run, per seed and angle mode.

    python3 scripts/check_learnability.py --seeds 5 --modes raw,wrapped
"""

import argparse
import time

from emocircle.circle import CircleConfig
from emocircle.data import synth_generate
from emocircle.experiments import run
from emocircle.losses import LossConfig
from emocircle.model import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--features", type=int, default=16)
    ap.add_argument("--noise", type=float, default=0.05)
    ap.add_argument("--data-seed", type=int, default=0)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--mu", type=float, default=0.7)
    ap.add_argument("--learning-rate", type=float, default=1e-2)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--modes", default="raw,wrapped")
    args = ap.parse_args()

    data = synth_generate(args.n, args.features, noise=args.noise, seed=args.data_seed)
    circle = CircleConfig()
    print("mode,seed,accuracy,kl,passed")
    for mode in args.modes.split(","):
        loss = LossConfig(mu=args.mu, angle_difference=mode)
        start = time.perf_counter()
        good = 0
        for seed in range(args.seeds):
            cfg = TrainConfig(learning_rate=args.learning_rate, epochs=args.epochs,
                              seed=seed, loss=loss)
            r = run(data, cfg, circle).report
            ok = r.top1_accuracy >= 0.85 and r.kl_div <= 0.5
            good += ok
            print(f"{mode},{seed},{r.top1_accuracy:.4f},{r.kl_div:.4f},{ok}")
        print(f"# {mode}: {good}/{args.seeds} seeds pass in {time.perf_counter() - start:.1f} s")


if __name__ == "__main__":
    main()
