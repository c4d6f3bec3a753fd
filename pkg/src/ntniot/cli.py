"""Command-line entry point: ``ntniot {simulate,coverage,offload,preset,channel-table}``.

Every subcommand writes comma-separated values with a header row. The destination is
``--output`` if given, else ``$NTNIOT_OUTPUT_DIR/<name>.csv`` if that variable is set,
else standard output.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

from .channel import channel_table
from .config import Config, load_config
from .model import ConfigurationError, PlatformKind, TechId, make_platform
from .offload import OffloadMode
from .presets import PRESETS, coverage_rows, offload_rows, platform_rows, run_preset, simulate_rows
from .sim import Topology

OUTPUT_ENV = "NTNIOT_OUTPUT_DIR"


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _choices(enum, text: str) -> list[str]:
    allowed = [e.value for e in enum]
    out = [x.strip() for x in text.split(",") if x.strip()]
    bad = [x for x in out if x not in allowed]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"invalid value(s) {bad or text!r}; choose from {', '.join(allowed)}")
    return out


def _techs(text: str) -> list[str]:
    return _choices(TechId, text)


def _topologies(text: str) -> list[str]:
    return _choices(Topology, text)


def _platforms(text: str) -> list[str]:
    return _choices(PlatformKind, text)


def _modes(text: str) -> list[str]:
    return _choices(OffloadMode, text)


def _ints(text: str) -> list[int]:
    return [int(x) for x in _floats(text)]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ntniot", description="NTN-IoT uplink simulator and planner")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--output", help="output CSV path")
    common.add_argument("--seed", type=int, default=None, help="master seed (default from config, else 0)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo goodput / success probability")
    s.add_argument("--tech", type=_techs, default=None, help="comma list of lora, loraplus, nbiot, sigfox")
    s.add_argument("--topology", type=_topologies, default=["id-u"], help="comma list of id-tg, id-u, id-h, id-l, id-h-l")
    s.add_argument("--devices", type=_ints, default=None, help="fixed device count(s), comma list")
    s.add_argument("--radius", type=_floats, default=None, help="AoI radius sweep [km], comma list")
    s.add_argument("--id-density", type=float, default=None)
    s.add_argument("--tg-density", type=float, default=None)
    s.add_argument("--drops", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)

    c = sub.add_parser("coverage", parents=[common], help="maximum range or platform counts")
    c.add_argument("--tech", type=_techs, default=["lora", "nbiot"])
    c.add_argument("--platform", type=_platforms, default=["tg", "uav", "hap", "leo"])
    c.add_argument("--aoi-radius", type=_floats, default=None, help="emit platform counts for these AoI radii [km]")

    o = sub.add_parser("offload", parents=[common], help="LEO offloading success probability")
    o.add_argument("--preset", choices=["fig5a", "fig5b"], default=None)
    o.add_argument("--rho-tg", type=_floats, default=None, help="TG density sweep [TG/km^2]")
    o.add_argument("--rho-id", type=_floats, default=None, help="ID density sweep [ID/km^2]")
    o.add_argument("--sf-min", type=_ints, default=[7, 9, 11])
    o.add_argument("--mode", type=_modes, default=["standalone", "offload"])
    o.add_argument("--radius", type=float, default=None)
    o.add_argument("--drops", type=int, default=None)

    p = sub.add_parser("preset", parents=[common], help="run a figure or table preset")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--drops", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)

    t = sub.add_parser("channel-table", parents=[common], help="deterministic link budget vs distance")
    t.add_argument("--tech", type=_techs, default=["lora"])
    t.add_argument("--platform", type=_platforms, default=["leo"])
    t.add_argument("--distances", type=_floats, default=[0.0, 1.0, 10.0, 100.0, 1000.0])
    return ap


def _write(rows: list[dict], args, name: str) -> None:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    text = buf.getvalue()
    if args.output:
        Path(args.output).write_text(text)
    elif os.environ.get(OUTPUT_ENV):
        d = Path(os.environ[OUTPUT_ENV])
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{name}.csv").write_text(text)
    else:
        sys.stdout.write(text)


def _simulate(args, cfg: Config, seed: int) -> list[dict]:
    techs = args.tech or [cfg.tech.value if cfg.tech else "lora"]
    base = cfg.scenario
    if args.id_density is not None:
        base = base.with_(id_density=args.id_density)
    if args.tg_density is not None:
        base = base.with_(tg_density=args.tg_density)
    if args.devices and args.radius:
        raise ConfigurationError("--devices and --radius sweeps are mutually exclusive")
    if args.devices:
        sweep, values = "n_devices", args.devices
    elif args.radius:
        sweep, values = "aoi_radius_km", args.radius
    else:
        sweep, values = "", [None]
    drops = args.drops if args.drops is not None else cfg.run.drops
    workers = args.workers if args.workers is not None else cfg.run.workers
    profiles = {t: cfg.profile(t) for t in techs} if cfg.profile_overrides else None
    return simulate_rows(base, techs, args.topology, sweep, values, drops, seed, cfg.sim, workers, profiles)


def _offload(args, cfg: Config, seed: int) -> list[dict]:
    if args.preset:
        p = PRESETS[args.preset]
        base, sweep, values, drops = p.scenario, p.sweep, p.values, p.drops
    else:
        base, drops = cfg.scenario, cfg.run.drops
        if args.rho_tg and args.rho_id:
            raise ConfigurationError("sweep either --rho-tg or --rho-id, not both")
        if args.rho_tg:
            sweep, values = "tg_density", args.rho_tg
        elif args.rho_id:
            sweep, values = "id_density", args.rho_id
        else:
            sweep, values = "", [0.0]
    if args.radius is not None:
        base = base.with_(aoi_radius_km=args.radius)
    if args.drops is not None:
        drops = args.drops
    for s in args.sf_min:
        if s not in (7, 8, 9, 10, 11, 12):
            raise ConfigurationError(f"sf_min must be in 7..12, got {s}")
    return offload_rows(base, sweep, values, args.sf_min, drops, seed, cfg.offload, args.mode)


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 after --help
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.run.seed
        profiles = {t: cfg.profile(t) for t in TechId} if cfg.profile_overrides else None
        if args.command == "simulate":
            rows, name = _simulate(args, cfg, seed), "simulate"
        elif args.command == "coverage":
            if args.aoi_radius:
                rows = platform_rows(args.tech, args.platform, args.aoi_radius, cfg.sim.channel, profiles)
            else:
                rows = coverage_rows(args.tech, args.platform, cfg.sim.channel, profiles)
            name = "coverage"
        elif args.command == "offload":
            rows, name = _offload(args, cfg, seed), "offload"
        elif args.command == "preset":
            workers = args.workers if args.workers is not None else cfg.run.workers
            rows = run_preset(args.name, seed, args.drops, cfg.sim, cfg.offload, workers)
            name = args.name
        else:
            rows = []
            for kind in args.platform:
                for tech in args.tech:
                    prof = cfg.profile(tech)
                    for r in channel_table(prof, make_platform(kind), args.distances, cfg.sim.channel):
                        rows.append({"platform": kind, "tech": tech, **r})
            name = "channel-table"
        _write(rows, args, name)
    except (ConfigurationError, ValueError) as exc:
        print(f"ntniot: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
