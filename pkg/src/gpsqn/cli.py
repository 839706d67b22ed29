"""Command-line entry point.

One subcommand per experiment. Options resolve in three layers: function
defaults, then the JSON config file (either flat keys or a section named
after the subcommand), then explicit command-line flags. The resolved
configuration is echoed into each experiment's summary.json.
"""

from __future__ import annotations

import argparse
import inspect
import json
import sys
from pathlib import Path

from . import experiments

_RUNNERS = {
    "gp-demo": experiments.gp_demo,
    "run-1d": experiments.run_1d,
    "run-lgss": experiments.run_lgss,
    "run-nltoy": experiments.run_nltoy,
    "armijo-check": experiments.armijo_check,
}

# which shared flags each subcommand understands
_FLAGS = {
    "gp-demo": ("seed", "mode"),
    "run-1d": ("seed", "iters", "mode"),
    "run-lgss": ("seed", "runs", "iters", "mode", "workers"),
    "run-nltoy": ("seed", "runs", "iters", "particles", "mode", "workers"),
    "armijo-check": ("seed",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpsqn",
        description=(
            "Stochastic quasi-Newton experiments: Gaussian-process curvature "
            "learning, noisy test-function runs, state-space identification "
            "studies and the Armijo-bound check. Each subcommand writes CSV "
            "files with documented headers, a summary.json echoing the "
            "resolved configuration, and PNG figures, into --out."
        ),
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in experiments.EXPERIMENTS:
        p = sub.add_parser(name, help=_RUNNERS[name].__doc__.splitlines()[0].lower())
        p.add_argument("--config", type=Path, default=None,
                       help="JSON config file (flat keys or a section per subcommand)")
        p.add_argument("--out", type=Path, default=None,
                       help=f"output directory (default: out/{name})")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        if "runs" in _FLAGS[name]:
            p.add_argument("--runs", type=int, default=None,
                           help="number of Monte Carlo replicates")
        if "iters" in _FLAGS[name]:
            p.add_argument("--iters", type=int, default=None,
                           help="optimizer iteration budget")
        if "particles" in _FLAGS[name]:
            p.add_argument("--particles", type=int, default=None,
                           help="particle count for the filter")
        if "mode" in _FLAGS[name]:
            p.add_argument("--mode", choices=("full", "simplified"), default=None,
                           help="measurement model for the curvature GP")
        if "workers" in _FLAGS[name]:
            p.add_argument("--workers", type=int, default=None,
                           help="process-pool size for replicates")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering, write only CSV/JSON")
    return parser


def _load_config(path: Path | None, experiment: str) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise SystemExit(f"config {path} must hold a JSON object")
    section = raw.get(experiment, raw)
    if not isinstance(section, dict):
        raise SystemExit(f"config section {experiment!r} must be a JSON object")
    return dict(section)


_FLAG_TO_KWARG = {
    "seed": "seed",
    "runs": "runs",
    "iters": "iters",
    "particles": "particles",
    "mode": "mode",
    "workers": "workers",
}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    runner = _RUNNERS[ns.experiment]
    allowed = set(inspect.signature(runner).parameters) - {"out_dir"}

    kwargs = _load_config(ns.config, ns.experiment)
    kwargs.pop(ns.experiment, None)
    unknown = set(kwargs) - allowed
    if unknown:
        raise SystemExit(
            f"unknown config keys for {ns.experiment}: {', '.join(sorted(unknown))}"
        )
    for flag, kwarg in _FLAG_TO_KWARG.items():
        value = getattr(ns, flag, None)
        if value is not None:
            kwargs[kwarg] = value
    if ns.no_figures:
        kwargs["render_figures"] = False

    out_dir = ns.out if ns.out is not None else Path("out") / ns.experiment
    summary = runner(out_dir, **kwargs)

    headline = {
        k: v
        for k, v in summary.items()
        if k not in ("config", "cases", "events") and not isinstance(v, (list, dict))
    }
    print(f"{ns.experiment}: outputs in {out_dir}")
    for key, value in headline.items():
        print(f"  {key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
