"""Command-line entry point: ``nbmimo <subcommand> --config FILE [--seed N] [--out PATH]``.

Worker processes are taken from the NBMIMO_WORKERS environment variable.
"""

import argparse
import sys

from . import harness
from .errors import ConfigurationError

SUBCOMMANDS = {
    "detect-ber": "uncoded-ber",
    "coded-ber": "coded-ber",
    "exit": "exit",
    "design-code": "design-code",
    "csi-ber": "csi-ber",
    "complexity": "complexity",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nbmimo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, scenario in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {scenario} scenario")
        p.add_argument("--config", required=True, help="flat key = value configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = harness.load_config(args.config, seed=args.seed)
        cfg = harness.with_scenario(cfg, SUBCOMMANDS[args.command])
    except (ConfigurationError, OSError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    _, text, ok = harness.run(cfg)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 3


if __name__ == "__main__":
    raise SystemExit(main())
