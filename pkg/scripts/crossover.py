"""Li-Fan 2l versus driver under early decode/drop with header handling.

Runs the campaign for 100 and 1000 demodulators and both coding rates,
then prints where li-fan-2l starts leading for good and the leader table.
Takes several minutes on one core.
"""
import argparse

from lrfhss.campaign import (DEFAULT_SEED, crossover_point, lead_ranges, lead_table,
                             mean_metrics, run_campaign)
from lrfhss.channel import CodingRate, SimulationConfig
from lrfhss.families import build_named_family
from lrfhss.gateway import StrategyConfig

NODES = (list(range(100, 1000, 50)) + list(range(1000, 3000, 100))
         + list(range(3000, 8001, 250)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    families = {n: build_named_family(n) for n in ("driver", "li-fan-2l")}
    strategies = [StrategyConfig(True, True, True, 4, d) for d in (100, 1000)]
    rows = run_campaign(SimulationConfig(), families, strategies, NODES, args.reps,
                        args.seed, [1, 2], workers=args.workers)
    means = mean_metrics(rows)
    for s in strategies:
        for cr in CodingRate:
            n = crossover_point(means, "driver", "li-fan-2l", cr, s, NODES)
            print(f"{s.demodulators_text} demodulators CR{int(cr)}: crossover at N={n}")
    print()
    print(lead_table(lead_ranges(means)), end="")


if __name__ == "__main__":
    main()
