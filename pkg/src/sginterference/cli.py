"""Command-line entry point.

Exit status is 0 on success.  On failure a single JSON line
``{"error": <type>, "message": <text>}`` goes to stderr and the status is 1
(2 for usage errors, from argparse).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from . import analytic
from .analytic import TierSpec, ZoneSpec
from .config import KM2, ExperimentConfig
from .experiments import EXPERIMENTS, verify_csv

ANALYTIC_QUANTITIES = ("q", "mgf", "pdf", "cdf", "median", "mean", "gradient", "zone-radius",
                       "infer-density", "estimate")


def _add_run_flags(p):
    p.add_argument("--config", type=Path, help="INI experiment config (defaults if omitted)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--drops", type=int, help="override n_drops")
    p.add_argument("--out", type=Path, help="CSV destination (stdout if omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sginterference", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _add_run_flags(sub.add_parser(name))

    a = sub.add_parser("analytic", help="evaluate one closed form")
    a.add_argument("quantity", choices=ANALYTIC_QUANTITIES)
    a.add_argument("--r", type=float, default=0.0, help="normalized serving range")
    a.add_argument("--R", type=float, default=math.inf, help="normalized zone radius")
    a.add_argument("--alpha", type=float, default=4.0)
    a.add_argument("--density-km2", type=float, action="append",
                   help="active density per tier (repeat per tier)")
    a.add_argument("--power", type=float, action="append", help="transmit power per tier, W")
    a.add_argument("--pathloss-constant", type=float, default=1e-4)
    a.add_argument("--agg", type=float, help="aggregate density, overrides tiers")
    a.add_argument("--s", type=float, default=1.0, help="mgf argument")
    a.add_argument("--x", type=float, default=1.0, help="power argument for pdf/cdf, W")
    a.add_argument("--phi", type=float, help="absolute gradient threshold")
    a.add_argument("--relative", type=float, default=analytic.DEFAULT_RELATIVE_GRADIENT)
    a.add_argument("--measured", type=float, default=0.0, help="measured power, W")
    a.add_argument("--d", type=float, default=0.0, help="normalized measurement range")

    v = sub.add_parser("verify", help="re-check a result CSV's provenance")
    v.add_argument("csv", type=Path)
    v.add_argument("--config", type=Path, help="also require this config")
    return parser


def _tiers(args) -> list[TierSpec]:
    dens = args.density_km2 or [5.0]
    power = args.power or [40.0] * len(dens)
    if len(power) != len(dens):
        raise ValueError("give one --power per --density-km2")
    return [TierSpec(lam * KM2, p, args.pathloss_constant) for lam, p in zip(dens, power)]


def _analytic(args) -> float:
    tiers = _tiers(args)
    agg = args.agg if args.agg is not None else analytic.aggregate_density(tiers)
    zone = ZoneSpec(args.r, args.R)
    q = args.quantity
    if q == "q":
        return analytic.q_factor(zone, args.alpha)
    if q == "mgf":
        return analytic.mgf(args.s, zone, tiers, args.alpha)
    if q == "pdf":
        return analytic.interference_pdf(args.x, zone, agg)
    if q == "cdf":
        return analytic.interference_cdf(args.x, zone, agg)
    if q == "median":
        return analytic.median_interference(zone, agg)
    if q == "mean":
        return analytic.mean_interference_truncated(zone, agg)
    if q == "gradient":
        return analytic.median_gradient(zone, agg)
    if q == "zone-radius":
        return analytic.solve_observation_radius(args.r, agg, args.phi, relative=args.relative)
    zone_d = ZoneSpec(args.d, analytic.solve_observation_radius(args.d, relative=args.relative))
    if q == "infer-density":
        beta = tiers[0].beta if len(tiers) == 1 and args.agg is None else None
        lam = analytic.infer_density(args.measured, zone_d, beta)
        return lam / KM2 if beta is not None else lam
    zone_r = ZoneSpec(args.r, analytic.solve_observation_radius(args.r, relative=args.relative))
    return analytic.estimate_interference_at(args.measured, zone_r, zone_d)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in EXPERIMENTS:
            cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(
                experiment_id=args.command)
            if args.seed is not None:
                cfg = dataclasses.replace(cfg, seed=args.seed)
            if args.drops is not None:
                cfg = dataclasses.replace(cfg, n_drops=args.drops)
            table = EXPERIMENTS[args.command](cfg, workers=args.workers)
            _emit(table.to_csv(), args.out)
        elif args.command == "analytic":
            print(f"{args.quantity},{float(_analytic(args))!r}")
        elif args.command == "verify":
            cfg = ExperimentConfig.load(args.config) if args.config else None
            header = verify_csv(args.csv.read_text(), cfg)
            print(f"ok,{header.get('experiment', '')},{header['body_sha256']}")
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
