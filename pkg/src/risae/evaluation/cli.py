"""Command-line entry point: ``risae run <config> [overrides]``."""

from __future__ import annotations

import argparse
import logging
import sys

from threadpoolctl import threadpool_limits

from ..errors import CheckpointMismatch, ConfigError, RisaeError
from .config import MODES, bundled_config, load_config

EXIT_CONFIG = 2
EXIT_CHECKPOINT = 3
EXIT_RUNTIME = 4


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risae", description="RIS-assisted autoencoder link simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment mode from a YAML config")
    r.add_argument("config", help="config path, or 'desk' / 'full' for the bundled ones")
    r.add_argument("--seed", type=int)
    r.add_argument("--snr-grid", type=_floats, help="comma-separated SNR points in dB")
    r.add_argument("--psr", type=_floats, help="comma-separated PSR values in dB")
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--out-dir")
    r.add_argument("--threads", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    # imported late so `--help` stays fast
    from .runner import run_experiment

    try:
        path = args.config
        if path in ("desk", "full"):
            path = bundled_config(path)
        cfg = load_config(path).with_overrides(
            seed=args.seed, snr_grid=args.snr_grid, psr=args.psr, mode=args.mode,
            out_dir=args.out_dir, threads=args.threads)
        with threadpool_limits(limits=cfg["run"]["threads"]):
            out = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointMismatch as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (RisaeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
