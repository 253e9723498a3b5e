"""Batch command line: correlate, simulate, collision-rate, report.

Every output file starts with a ``#`` line holding the resolved settings and
seed, so a CSV alone is enough to rerun the experiment that made it.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import campaign
from .channel import CodingRate, SimulationConfig, preliminary_collision_rate
from .correlation import family_report, summary_csv, sweep_csv
from .families import (FAMILY_NAMES, ConstructionError, build_named_family, embed_in_grids)
from .gateway import StrategyConfig

SUBCOMMANDS = ("correlate", "simulate", "collision-rate", "report")
SWEEP_MAX_LENGTH = 86


class UsageError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    subcommand: str
    families: List[str] = field(default_factory=list)
    coding_rates: List[int] = field(default_factory=lambda: [1, 2])
    demodulators: List[Optional[int]] = field(default_factory=lambda: [100, 1000])
    nodes: List[int] = field(default_factory=list)
    repetitions: int = 10
    seed: int = campaign.DEFAULT_SEED
    early_decode: bool = False
    early_drop: bool = False
    early_header_drop: bool = False
    header_tolerance: int = 0
    baseline: bool = False
    level: str = "payload"
    max_length: int = SWEEP_MAX_LENGTH
    embed_grids: bool = False
    workers: int = 1
    out: str = "results"
    campaign_csv: Optional[str] = None

    def validate(self) -> None:
        for name in self.families:
            if name not in FAMILY_NAMES:
                raise UsageError(f"unknown family {name!r}; valid names: {', '.join(FAMILY_NAMES)}")
        if any(n <= 0 for n in self.nodes):
            raise UsageError("node counts must be positive")
        if list(self.nodes) != sorted(set(self.nodes)):
            raise UsageError("node counts must be strictly ascending")
        if self.repetitions < 1:
            raise UsageError("--reps must be at least 1")
        if self.header_tolerance < 0:
            raise UsageError("--header-tolerance must be non-negative")
        if any(d is not None and d < 1 for d in self.demodulators):
            raise UsageError("demodulator counts must be positive or 'inf'")
        if self.level not in ("slot", "payload"):
            raise UsageError("--level must be 'slot' or 'payload'")
        if not 2 <= self.max_length:
            raise UsageError("--max-length must be at least 2")

    def header_line(self) -> str:
        return "# lrfhss " + json.dumps(asdict(self), sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# parsing helpers

def parse_nodes(text: str) -> List[int]:
    """``10,100,1000`` | ``start:stop:step`` | ``start:stop:lin[:count]`` | ``start:stop:log[:count]``."""
    text = str(text).strip()
    if ":" not in text:
        try:
            return [int(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad node list {text!r}") from None
    parts = text.split(":")
    try:
        start, stop = int(parts[0]), int(parts[1])
        if len(parts) == 3 and parts[2] not in ("lin", "log"):
            step = int(parts[2])
            if step <= 0:
                raise UsageError("node step must be positive")
            return list(range(start, stop + 1, step))
        if len(parts) not in (3, 4):
            raise UsageError(f"bad node range {text!r}")
        count = int(parts[3]) if len(parts) == 4 else 10
    except ValueError:
        raise UsageError(f"bad node range {text!r}") from None
    if start <= 0 or stop < start or count < 1:
        raise UsageError(f"bad node range {text!r}")
    if parts[2] == "lin":
        values = np.linspace(start, stop, count)
    else:
        values = np.geomspace(start, stop, count)
    return sorted({int(round(v)) for v in values})


def parse_demods(text: str) -> List[Optional[int]]:
    out = []
    for tok in str(text).split(","):
        tok = tok.strip().lower()
        if tok in ("inf", "unlimited", "none"):
            out.append(None)
        else:
            try:
                out.append(int(tok))
            except ValueError:
                raise UsageError(f"bad demodulator count {tok!r}") from None
    return out


def parse_cr(text: str) -> List[int]:
    text = str(text).strip().lower()
    if text == "both":
        return [1, 2]
    try:
        return [int(CodingRate.parse(text))]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_families(text: str) -> List[str]:
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"bad boolean {text!r}")


def read_config_file(path: str) -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys may use - or _."""
    settings = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        settings[key.replace("-", "_")] = value
    return settings


# option name -> (converter, ExperimentSpec field)
_CONVERTERS = {
    "families": (parse_families, "families"),
    "cr": (parse_cr, "coding_rates"),
    "demods": (parse_demods, "demodulators"),
    "nodes": (parse_nodes, "nodes"),
    "reps": (int, "repetitions"),
    "seed": (int, "seed"),
    "early_decode": (_bool, "early_decode"),
    "early_drop": (_bool, "early_drop"),
    "header_drop": (_bool, "early_header_drop"),
    "header_tolerance": (int, "header_tolerance"),
    "baseline": (_bool, "baseline"),
    "level": (str, "level"),
    "max_length": (int, "max_length"),
    "embed_grids": (_bool, "embed_grids"),
    "workers": (int, "workers"),
    "out": (str, "out"),
}

_DEFAULT_FAMILIES = {
    "correlate": list(FAMILY_NAMES),
    "collision-rate": list(FAMILY_NAMES),
    "simulate": ["li-fan-2l", "driver"],
    "report": [],
}
_DEFAULT_NODES = {
    "simulate": "10:10000:log:13",
    "collision-rate": "10:10000:log:13",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrfhss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, sweep: bool):
        p.add_argument("--config", help="key=value settings file; flags override it")
        p.add_argument("--families", help=f"comma list from: {', '.join(FAMILY_NAMES)}")
        p.add_argument("--seed", help=f"master seed (default {campaign.DEFAULT_SEED})")
        p.add_argument("--out", help="output directory (default ./results)")
        if sweep:
            p.add_argument("--cr", help="1, 2 or both (default both)")
            p.add_argument("--nodes", help="list, start:stop:step or start:stop:lin|log[:count]")
            p.add_argument("--reps", help="repetitions per cell (default 10)")
            p.add_argument("--workers", help="worker processes (default 1)")

    p = sub.add_parser("correlate", help="family correlation summary and length sweep")
    common(p, sweep=False)
    p.add_argument("--max-length", help=f"longest sweep length (default {SWEEP_MAX_LENGTH})")
    p.add_argument("--embed-grids", action="store_const", const="1",
                   help="place member i of grid-based families on grid i mod 8 first")

    p = sub.add_parser("simulate", help="Monte-Carlo gateway campaign")
    common(p, sweep=True)
    p.add_argument("--demods", help="comma list of pool sizes, 'inf' for unlimited")
    p.add_argument("--early-decode", action="store_const", const="1")
    p.add_argument("--early-drop", action="store_const", const="1")
    p.add_argument("--header-drop", action="store_const", const="1")
    p.add_argument("--header-tolerance", help="slots a header replica may lose (0 or 4)")
    p.add_argument("--baseline", action="store_const", const="1",
                   help="also run the all-off strategy on the same schedules")

    p = sub.add_parser("collision-rate", help="preliminary collision rates relative to driver")
    common(p, sweep=True)
    p.add_argument("--level", help="payload (default) or slot")

    p = sub.add_parser("report", help="re-summarise an existing campaign CSV")
    p.add_argument("campaign_csv", help="CSV written by 'simulate'")
    p.add_argument("--out", help="output directory (default: the CSV's directory)")
    return parser


def resolve_spec(argv: Optional[Sequence[str]] = None) -> ExperimentSpec:
    args = build_parser().parse_args(argv)
    spec = ExperimentSpec(args.subcommand)
    raw: Dict[str, str] = {}
    if getattr(args, "config", None):
        raw.update(read_config_file(args.config))
    for key in _CONVERTERS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    raw.setdefault("nodes", _DEFAULT_NODES.get(spec.subcommand, ""))
    for key, value in raw.items():
        if key not in _CONVERTERS:
            raise UsageError(f"unknown setting {key!r}")
        conv, attr = _CONVERTERS[key]
        try:
            setattr(spec, attr, conv(value))
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {exc}") from None
    if "families" not in raw:
        spec.families = list(_DEFAULT_FAMILIES[spec.subcommand])
    if spec.subcommand == "report":
        spec.campaign_csv = args.campaign_csv
        if "out" not in raw:
            spec.out = str(Path(args.campaign_csv).parent)
    spec.validate()
    return spec


# --------------------------------------------------------------------------
# subcommands

def _write(path: Path, spec: ExperimentSpec, body: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(spec.header_line() + body, encoding="utf-8")
    return path


def _family(name: str, length: int = 31, embed: bool = False):
    fam = build_named_family(name, length)
    return embed_in_grids(fam) if embed and fam.grid_based else fam


def sweep_families(name: str, max_length: int, embed: bool = False):
    """(length, family) pairs for the length sweep.

    Driver and hash sequences are prefixes of one long build; Li-Fan families
    are re-chunked at every length; Lempel-Greenberger stops at its period.
    """
    if name in ("driver", "hash"):
        full = _family(name, max_length, embed)
        for length in range(2, max_length + 1):
            yield length, full.truncated(length)
    elif name.startswith("lem-green"):
        full = _family(name, 31, embed)
        for length in range(2, min(31, max_length) + 1):
            yield length, full.truncated(length)
    else:
        for length in range(2, max_length + 1):
            yield length, _family(name, length, embed)


def cmd_correlate(spec: ExperimentSpec) -> List[Path]:
    out = Path(spec.out)
    reports = [family_report(_family(n, 31, spec.embed_grids)) for n in spec.families]
    summary = summary_csv(reports)
    sweep = [family_report(fam) for n in spec.families
             for _, fam in sweep_families(n, spec.max_length, spec.embed_grids)]
    sys.stdout.write(summary)
    return [_write(out / "correlation_summary.csv", spec, summary),
            _write(out / "correlation_sweep.csv", spec, sweep_csv(sweep))]


def _strategies(spec: ExperimentSpec) -> List[StrategyConfig]:
    out = []
    for demods in spec.demodulators:
        out.append(StrategyConfig(spec.early_decode, spec.early_drop, spec.early_header_drop,
                                  spec.header_tolerance, demods))
        if spec.baseline:
            base = StrategyConfig(demodulator_count=demods,
                                  header_tolerance_slots=spec.header_tolerance)
            if base != out[-1]:
                out.append(base)
    return out


def _summaries(rows, spec: ExperimentSpec, out: Path) -> List[Path]:
    means = campaign.mean_metrics(rows)
    table = campaign.lead_table(campaign.lead_ranges(means))
    sys.stdout.write(table)
    lines = ["family,cr,demodulators,strategy,nodes," + ",".join(campaign.METRIC_NAMES)]
    for (fam, cr, strat, nodes), vals in sorted(
            means.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].demodulators_text,
                                           kv[0][2].label, kv[0][3])):
        lines.append(f"{fam},{int(cr)},{strat.demodulators_text},{strat.label},{nodes},"
                     + ",".join(f"{vals[m]:.3f}" for m in campaign.METRIC_NAMES))
    return [_write(out / "campaign_means.csv", spec, "\n".join(lines) + "\n"),
            _write(out / "leaders.txt", spec, table)]


def cmd_simulate(spec: ExperimentSpec) -> List[Path]:
    base = SimulationConfig()
    for cr in spec.coding_rates:  # infeasible geometry fails before any run
        base.with_(coding_rate=cr)
    families = {n: build_named_family(n) for n in spec.families}
    rows = campaign.run_campaign(base, families, _strategies(spec), spec.nodes,
                                 spec.repetitions, spec.seed, spec.coding_rates, spec.workers)
    out = Path(spec.out)
    paths = [_write(out / "campaign.csv", spec, campaign.campaign_csv(rows))]
    return paths + _summaries(rows, spec, out)


def cmd_collision_rate(spec: ExperimentSpec) -> List[Path]:
    if "driver" not in spec.families:
        raise UsageError("collision-rate normalises by the driver family; include 'driver'")
    families = {n: build_named_family(n) for n in spec.families}
    lines = ["family,cr,nodes,rate,relative_rate"]
    for cr in spec.coding_rates:
        rates = {}
        for name, fam in families.items():
            for n in spec.nodes:
                vals = [preliminary_collision_rate(
                            n, fam,
                            np.random.default_rng(campaign.derive_seed(spec.seed, name, cr, n, rep)),
                            level=spec.level, coding_rate=cr)
                        for rep in range(spec.repetitions)]
                rates[name, n] = float(np.mean(vals))
        for name in spec.families:
            for n in spec.nodes:
                ref = rates["driver", n]
                rel = rates[name, n] / ref if ref > 0 else (1.0 if rates[name, n] == 0 else float("inf"))
                lines.append(f"{name},{cr},{n},{rates[name, n]:.6f},{rel:.6f}")
    body = "\n".join(lines) + "\n"
    sys.stdout.write(body)
    return [_write(Path(spec.out) / "collision_rate.csv", spec, body)]


def cmd_report(spec: ExperimentSpec) -> List[Path]:
    try:
        text = Path(spec.campaign_csv).read_text(encoding="utf-8")
        rows = campaign.parse_campaign_csv(text)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read campaign CSV: {exc}") from None
    if not rows:
        raise UsageError("campaign CSV holds no rows")
    return _summaries(rows, spec, Path(spec.out))


COMMANDS = {
    "correlate": cmd_correlate,
    "simulate": cmd_simulate,
    "collision-rate": cmd_collision_rate,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        spec = resolve_spec(argv)
        paths = COMMANDS[spec.subcommand](spec)
    except (UsageError, ConstructionError, ValueError) as exc:
        print(f"lrfhss: error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
