"""Command-line client for the simulator.

Thin layer over the harness: every flag mirrors a flat config key, with
subcommands for drop runs, trajectory runs, outage sweeps, blockage CDFs,
map dumps and serving the HTTP API.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import (
    ConfigError,
    SimConfig,
    _coerce,
    config_from_flat,
    flat_schema,
    load_config_file,
    validate_config,
)
from . import harness

_SCHEMA = flat_schema()


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key-value config file")
    group = parser.add_argument_group("config overrides (flat config keys)")
    for key, (_attr, _field, ftype) in sorted(_SCHEMA.items()):
        type_name = ftype if isinstance(ftype, str) else ftype.__name__
        group.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}", metavar="V",
                           help=f"({type_name})")


def _build_config(args: argparse.Namespace) -> SimConfig:
    base = SimConfig()
    if args.config:
        base = load_config_file(args.config, base)
    overrides = {}
    for key, (_a, _f, ftype) in _SCHEMA.items():
        raw = getattr(args, f"cfg_{key}", None)
        if raw is not None:
            overrides[key] = _coerce(key, ftype, raw)
    return validate_config(config_from_flat(overrides, base))


def _cmd_drop(args) -> int:
    cfg = _build_config(args)
    results = harness.run_drop_sweep(cfg)
    files = harness.export_drop_results(results, args.out, cfg)
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def _cmd_track(args) -> int:
    cfg = _build_config(args)
    snapshots = harness.run_track(cfg, iid_sf=args.iid_sf)
    files = harness.export_track_results(snapshots, args.out, cfg)
    print(f"{len(snapshots)} snapshots; wrote {len(files)} files to {args.out}")
    return 0


def _cmd_outage(args) -> int:
    cfg = _build_config(args)
    dist = (args.dist_min, args.dist_max)
    reports = []
    if args.blockage in ("off", "both"):
        reports.append(harness.monte_carlo_outage(cfg, args.runs, dist, with_blockage=False))
    if args.blockage in ("on", "both"):
        reports.append(harness.monte_carlo_outage(cfg, args.runs, dist, with_blockage=True))
    harness.export_outage(reports, args.out, cfg)
    for r in reports:
        tag = "with blockage" if r.with_blockage else "no blockage"
        print(f"{tag}: outage {100*r.outage_fraction:.1f}% at {r.threshold_db} dB, "
              f"5% SNR {r.snr_percentiles[5]:.1f} dB ({r.n_runs} runs)")
    return 0


def _cmd_blockage_cdf(args) -> int:
    cfg = _build_config(args)
    if not cfg.blockage.enabled:
        cfg = dataclasses.replace(cfg, blockage=dataclasses.replace(cfg.blockage, enabled=True))
    losses, cdf = harness.blockage_cdf(cfg, args.samples, args.kind, args.hpbw)
    harness.export_blockage_cdf(losses, cdf, args.out, cfg, args.kind,
                                dump_trace=args.dump_trace)
    import numpy as np

    p10 = float(np.mean(losses > 10.0))
    p15 = float(np.mean(losses > 15.0))
    print(f"{args.kind}: P(loss>10 dB) = {100*p10:.1f}%, P(loss>15 dB) = {100*p15:.1f}%")
    return 0


def _cmd_maps(args) -> int:
    cfg = _build_config(args)
    files = harness.export_maps(args.out, cfg)
    print(f"wrote {files} to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwavesim",
        description="Measurement-based mmWave channel simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("drop", help="independent drop-mode runs with CSV exports")
    p.add_argument("--out", default="out", help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_drop)

    p = sub.add_parser("track", help="spatially consistent run along the configured track")
    p.add_argument("--out", default="out")
    p.add_argument("--iid-sf", action="store_true",
                   help="replace the correlated SF map with i.i.d. draws")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("outage", help="Monte Carlo SNR outage over a distance range")
    p.add_argument("--out", default="out")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--dist-min", type=float, default=harness.DEFAULT_DISTANCE_RANGE_M[0])
    p.add_argument("--dist-max", type=float, default=harness.DEFAULT_DISTANCE_RANGE_M[1])
    p.add_argument("--blockage", choices=("off", "on", "both"), default="both")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_outage)

    p = sub.add_parser("blockage-cdf", help="sampled human-blockage shadowing loss CDF")
    p.add_argument("--out", default="out")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--kind", choices=("omni-los", "omni-nlos", "dir"), default="omni-nlos")
    p.add_argument("--hpbw", type=float, default=None,
                   help="beamwidth for --kind dir (default: configured RX azimuth HPBW)")
    p.add_argument("--dump-trace", action="store_true",
                   help="also write a sample (t_s, state, loss_db) trace")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_blockage_cdf)

    p = sub.add_parser("maps", help="dump correlated SF (and LOS) maps")
    p.add_argument("--out", default="out")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_maps)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
