"""Correlation summary for every named family at length 31.

    python scripts/correlation_summary.py [--embedded]
"""
import argparse

from lrfhss.correlation import family_report, summary_csv
from lrfhss.families import FAMILY_NAMES, build_named_family, embed_in_grids


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--embedded", action="store_true",
                    help="also report driver and hash after grid embedding")
    args = ap.parse_args()

    reports = [family_report(build_named_family(n)) for n in FAMILY_NAMES]
    print(summary_csv(reports), end="")
    if args.embedded:
        print("\n# grid-embedded")
        embedded = [family_report(embed_in_grids(build_named_family(n))) for n in ("driver", "hash")]
        print(summary_csv(embedded), end="")


if __name__ == "__main__":
    main()
