"""Command-line entry point.

``ojasde run CONFIG`` runs a config document; the other subcommands run one
experiment kind from its built-in defaults, optionally merged with
``--config``. Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import ConfigError, NumericalError
from .config import load_config, parse_document
from .experiments import run_experiment
from .report import emit_report

SUBCOMMANDS = {
    "identities": "identities",
    "weak-error": "weak_error",
    "unstable-demo": "unstable_demo",
    "invariant-measure": "invariant_measure",
    "langevin": "langevin",
    "fp-convergence": "fp_convergence",
    "sga-vs-ode": "sga_vs_ode",
}


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="64-bit seed (default 0)")
    p.add_argument("--n-mc", type=int, default=None)
    p.add_argument("--eta", type=float, nargs="+", default=None)
    p.add_argument("--dt", type=float, nargs="+", default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--grid-m", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--n-samples", type=int, default=None)
    p.add_argument("--n-points", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", default=None, help="report path (stdout summary only if omitted)")
    p.add_argument("--format", choices=("json", "csv"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ojasde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a config document")
    run.add_argument("config")
    _add_overrides(run)
    for name, exp in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {exp} experiment")
        p.add_argument("--config", default=None, help="config document merged under the flags")
        _add_overrides(p)
    return parser


def _overrides(args) -> dict:
    keys = ("seed", "n_mc", "eta", "dt", "T", "grid_m", "sigma", "n_samples", "n_points",
            "workers", "output", "format")
    return {k: getattr(args, k) for k in keys if getattr(args, k) is not None}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config, _overrides(args))
        else:
            exp = SUBCOMMANDS[args.command]
            doc = parse_document(args.config) if args.config else {}
            if doc.get("experiment", exp) != exp:
                raise ConfigError(f"config is for {doc['experiment']!r}, not {exp!r}")
            doc["experiment"] = exp
            cfg = load_config(doc, _overrides(args))
        report = run_experiment(cfg)
        if cfg.output:
            path = emit_report(report, cfg.output, cfg.format)
            print(f"wrote {path}")
        d = report.to_dict()
        print(json.dumps({k: d[k] for k in ("experiment", "fit", "summary")}, sort_keys=True, indent=2))
        return 0
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
