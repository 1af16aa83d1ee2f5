"""Command-line driver for the simulation experiments.

Subcommands
-----------
covgen   Emit a one-ring covariance matrix as CSV of re/im parts.
genie    Genie-aided detector error probabilities (empirical + analytic).
roc      ROC sweep for the ml / shrinkage plug-in detectors.
frames   Frame-protocol walk with a single injected covariance change.

Exit codes: 0 success, 2 configuration error, 3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from .channel import OneRingParams, one_ring_covariance
from .exceptions import ConfigurationError, NumericalDomainError
from .harness import (
    ExperimentConfig,
    emit_frame_log,
    emit_results,
    run_genie_experiment,
    run_roc_experiment,
    simulate_frames,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--trials", type=int, default=None, help="override config trials")
    parser.add_argument("--out", type=Path, default=None, help="override config output path")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covchange",
        description="Covariance-change detection experiments for multi-antenna links",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    covgen = sub.add_parser("covgen", help="emit a one-ring covariance matrix as CSV")
    covgen.add_argument("--antennas", type=int, default=32)
    covgen.add_argument("--aod-deg", type=float, default=70.0)
    covgen.add_argument("--spread-deg", type=float, default=20.0)
    covgen.add_argument("--wavelength-m", type=float, default=3.76e-3)
    covgen.add_argument("--spacing-factor", type=float, default=2.0)
    covgen.add_argument("--quadrature-points", type=int, default=2048)
    covgen.add_argument("--delta-aod-deg", type=float, default=0.0,
                        help="offset applied to the angle of departure")
    covgen.add_argument("--out", type=Path, required=True)

    genie = sub.add_parser("genie", help="genie-aided detector error probabilities")
    _add_common_flags(genie)

    roc = sub.add_parser("roc", help="ROC sweep for plug-in detectors")
    _add_common_flags(roc)

    frames = sub.add_parser("frames", help="frame-protocol simulation")
    _add_common_flags(frames)
    frames.add_argument("--num-frames", type=int, required=True)
    frames.add_argument("--change-frame", type=int, required=True)
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json_file(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.out is not None:
        cfg = replace(cfg, output_path=str(args.out))
    if cfg.output_path is None:
        raise ConfigurationError("no output path: set output_path in the config or pass --out")
    return cfg


def _cmd_covgen(args: argparse.Namespace) -> int:
    ring = OneRingParams(
        aod_rad=math.radians(args.aod_deg + args.delta_aod_deg),
        spread_rad=math.radians(args.spread_deg),
        wavelength_m=args.wavelength_m,
        spacing_factor=args.spacing_factor,
        quadrature_points=args.quadrature_points,
    )
    cov = one_ring_covariance(ring, args.antennas)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("m1,m2,re,im\n")
        for i in range(cov.shape[0]):
            for j in range(cov.shape[1]):
                fh.write(f"{i},{j},{float(cov[i, j].real)!r},{float(cov[i, j].imag)!r}\n")
    print(f"wrote {args.antennas}x{args.antennas} covariance to {args.out}")
    return EXIT_OK


def _cmd_genie(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    rows = run_genie_experiment(cfg, threads=args.threads)
    out = emit_results(rows, cfg.output_path, config=cfg)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def _cmd_roc(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    rows = run_roc_experiment(cfg, threads=args.threads)
    out = emit_results(rows, cfg.output_path, config=cfg)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def _cmd_frames(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    records = simulate_frames(
        cfg, args.num_frames, args.change_frame, threads=args.threads
    )
    out = emit_frame_log(records, cfg.output_path)
    detections = sum(1 for r in records if r.hypothesis == "H1")
    print(f"wrote {len(records)} frames ({detections} detections) to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "covgen": _cmd_covgen,
        "genie": _cmd_genie,
        "roc": _cmd_roc,
        "frames": _cmd_frames,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDomainError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
