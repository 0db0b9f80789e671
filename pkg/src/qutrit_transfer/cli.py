"""Command-line entry point.

Exit status: 0 on success, 1 on runtime or validation failure, 2 on a bad
command line or configuration.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import replace

from . import __version__
from .config import ConfigError, load_config, render_default_config
from .experiments import WORKERS_ENV, run_sweep
from .io import emit_svg, render_csv
from .protocol import run_transfer
from .validation import CHECKS, run_validation

SWEEP_COMMANDS = {
    "sweep-detuning": "detuning",
    "sweep-states": "state_grid",
    "sweep-coupling": "coupling_inhomogeneity",
    "converge": "convergence",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(None, message)


def build_parser():
    parser = _Parser(prog="qutrit-transfer",
                     description="Qutrit state transfer through two lossy resonators.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        help="override one configuration key (repeatable)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    sub.add_parser("transfer", parents=[common], help="run one transfer and print a summary")
    for name, kind in SWEEP_COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=f"{kind.replace('_', ' ')} sweep to CSV")
        p.add_argument("-o", "--output", metavar="PATH", help="CSV path (default stdout)")
        p.add_argument("--svg", metavar="PATH", help="also write an SVG plot")
        p.add_argument("--workers", type=int, metavar="N",
                       help=f"worker processes (the {WORKERS_ENV} variable takes precedence)")
        p.add_argument("--timing", action="store_true",
                       help="add wall-clock time to the CSV metadata")
    p = sub.add_parser("validate", parents=[common], help="run the physics self-checks")
    p.add_argument("--only", metavar="NAME", action="append",
                   help="restrict to the named check (repeatable)")
    p.add_argument("--workers", type=int, metavar="N")
    sub.add_parser("default-config", help="print the annotated default configuration")
    return parser


def _overrides(pairs):
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(None, f"--set expects KEY=VALUE, got {pair!r}")
        out[key.strip()] = value
    return out


def _transfer(cfg, out):
    est = cfg.estimator()
    res = run_transfer(cfg.initial_state(), est.device_params(), est.decoherence_rates(),
                       est.simulation_config(), est.schedule())
    s = res.schedule
    mhz = 1e3 / (2 * math.pi)
    print(f"fidelity        {res.fidelity:.9f}", file=out)
    print(f"lambda1/2pi     {s.lambda1 * mhz:.6f} MHz", file=out)
    print(f"lambda2/2pi     {s.lambda2 * mhz:.6f} MHz", file=out)
    print(f"t1              {s.t1:.6f} ns", file=out)
    print(f"t2              {s.t2:.6f} ns", file=out)
    print(f"total time      {s.total_time:.6f} ns", file=out)
    print(f"Q_a             {res.q_a:.6g}", file=out)
    print(f"Q_b             {res.q_b:.6g}", file=out)
    print(f"peak <n_a>      {res.peak_n_a:.6e}", file=out)
    print(f"peak <n_b>      {res.peak_n_b:.6e}", file=out)
    print(f"max |dTr|       {res.max_trace_error:.3e}", file=out)
    print(f"min eigenvalue  {res.worst_eigenvalue:.3e}", file=out)
    return 0


def _sweep(cfg, args, out):
    spec = cfg.sweep_spec(SWEEP_COMMANDS[args.command])
    if args.workers is not None:
        spec = replace(spec, workers=args.workers or None)
    start = time.perf_counter()
    result = run_sweep(spec)
    extra = {"config": dict(cfg.as_items())}
    if args.timing:
        extra["wall_clock_s"] = round(time.perf_counter() - start, 3)
    text = render_csv(result, extra)
    target = args.output or cfg.output_csv
    if target:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    svg = args.svg or cfg.output_svg
    if svg:
        emit_svg(result, svg)
    s = result.summary
    print(f"{result.kind}: {len(result.rows)} rows, F min {s['min']:.6f} "
          f"mean {s['mean']:.6f} max {s['max']:.6f}", file=sys.stderr)
    return 0


def _validate(args, out):
    kwargs = {}
    if args.workers is not None:
        kwargs["workers"] = args.workers or None
    results = run_validation(args.only, **kwargs)
    for r in results:
        print(r.line(), file=out)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=out)
    return 1 if failed else 0


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.command == "default-config":
            out.write(render_default_config())
            return 0
        if args.command == "validate" and args.only:
            unknown = [n for n in args.only if n not in CHECKS]
            if unknown:
                raise ConfigError(None, f"unknown check {unknown[0]!r}; "
                                        f"choose from {', '.join(CHECKS)}")
        cfg = load_config(args.config, _overrides(args.set))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        if args.command == "transfer":
            return _transfer(cfg, out)
        if args.command == "validate":
            return _validate(args, out)
        return _sweep(cfg, args, out)
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
