"""``mhgrad <experiment> [options]`` command-line entry point."""

from __future__ import annotations

import argparse
import sys

from mhgrad.errors import InvalidInputError, OracleConsistencyError
from mhgrad.harness import output
from mhgrad.harness.config import (
    ConfigError,
    Experiment,
    build_config,
    parse_value,
    read_config_file,
)
from mhgrad.harness.experiments import run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mhgrad",
        description="Pathwise / Malliavin / hybrid gradient estimator experiments.",
    )
    p.add_argument("experiment", choices=[e.value for e in Experiment])
    p.add_argument("--config", metavar="PATH", help="key=value config file; flags override it")
    p.add_argument("--samples", metavar="N", help="Monte Carlo samples per replicate")
    p.add_argument("--replicates", metavar="R")
    p.add_argument("--trials", metavar="T", help="trials per batch size (batch-mse)")
    p.add_argument("--ref-samples", metavar="N", help="samples for the reference weight (batch-mse)")
    p.add_argument("--theta", metavar="X")
    p.add_argument("--alpha", metavar="X", help="coupling for single-point experiments")
    p.add_argument("--alpha-grid", metavar="a:b:step")
    p.add_argument("--batch-sizes", metavar="LIST")
    p.add_argument("--loss", choices=["hinge", "clipquad", "quad"])
    p.add_argument("--ridge", metavar="X")
    p.add_argument("--seed", metavar="U64")
    p.add_argument("--moneyness", metavar="LIST", help="K/s0 grid (greeks)")
    p.add_argument("--n-nodes", metavar="N", help="quadrature nodes for the oracle")
    weight = p.add_mutually_exclusive_group()
    weight.add_argument("--normalized", action="store_const", const="true", dest="normalized_weight",
                        help="use the 1/sqrt(1+alpha^2) normalized weight")
    weight.add_argument("--raw", action="store_const", const="false", dest="normalized_weight",
                        help="use the raw (unbiased) weight")
    p.add_argument("--split-batch", action="store_const", const="true",
                   help="estimate the weight on one half of the batch and apply it to the other")
    p.add_argument("--out", metavar="PATH", help="output CSV ('-' for stdout)")
    p.add_argument("--workers", metavar="N")
    p.add_argument("--no-timestamp", action="store_const", const="false", dest="timestamp")
    return p


_FLAG_KEYS = ("samples", "replicates", "trials", "ref_samples", "theta", "alpha", "alpha_grid",
              "batch_sizes", "loss", "ridge", "seed", "moneyness", "n_nodes", "normalized_weight",
              "split_batch", "out", "workers", "timestamp")


def config_from_args(args):
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {"experiment": Experiment(args.experiment)}
    for key in _FLAG_KEYS:
        text = getattr(args, key)
        if text is not None:
            k, v = parse_value(key, text)
            overrides[k] = v
    return build_config(file_values, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, InvalidInputError) as e:
        print(f"mhgrad: invalid config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = run(cfg)
    except OracleConsistencyError as e:
        print(f"mhgrad: internal consistency error: {e}", file=sys.stderr)
        return EXIT_ORACLE
    except InvalidInputError as e:
        print(f"mhgrad: invalid config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.out_path or f"{cfg.experiment.value}.csv"
    try:
        output.write(table, out, timestamp=cfg.timestamp)
    except OSError as e:
        print(f"mhgrad: cannot write {out}: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
