"""Preliminary collision rate of each family relative to the driver family.

Sweeps node counts for both coding rates and prints one CSV row per point.
"""
import argparse

import numpy as np

from lrfhss.campaign import DEFAULT_SEED, derive_seed
from lrfhss.channel import preliminary_collision_rate
from lrfhss.families import FAMILY_NAMES, build_named_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--level", choices=("payload", "slot"), default="payload")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = ap.parse_args()

    nodes = [int(round(v)) for v in np.logspace(1, 4, 13)]
    families = {n: build_named_family(n) for n in FAMILY_NAMES}
    print("family,cr,nodes,rate,relative_rate")
    for cr in (1, 2):
        rates = {}
        for name, fam in families.items():
            for n in nodes:
                rates[name, n] = float(np.mean([
                    preliminary_collision_rate(
                        n, fam, np.random.default_rng(derive_seed(args.seed, name, cr, n, r)),
                        level=args.level, coding_rate=cr)
                    for r in range(args.reps)]))
        for name in families:
            for n in nodes:
                ref = rates["driver", n]
                rel = rates[name, n] / ref if ref else float("nan")
                print(f"{name},{cr},{n},{rates[name, n]:.6f},{rel:.4f}")


if __name__ == "__main__":
    main()
