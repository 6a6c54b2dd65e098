"""Command line entry point: ``carflow {validate,kernel,symmetry,suite,report}``.

Exit codes: 0 pass, 1 check failure, 2 config error, 3 resource cap.
"""
import argparse
import dataclasses
import json
import sys
from pathlib import Path

from carflow.config import ConfigError, load_config
from carflow.errors import CapExceeded, CarflowError
from carflow.lattice import kernel_basis, symmetry_check
from carflow.suite import Report, emit_report, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3


def _vector(text):
    try:
        return tuple(int(c) for c in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="carflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True,
                           help="config path, or the name of a bundled fixture")
        p.add_argument("--format", choices=("json", "text"), default="text")
        p.add_argument("--out", type=Path, help="write output here instead of stdout")

    common(sub.add_parser("validate", help="parse and validate a config"))
    p = sub.add_parser("kernel", help="print the windowed kernel basis of V_x*")
    common(p)
    p.add_argument("--x", type=_vector, required=True, help="cone element, e.g. 1,0")
    common(sub.add_parser("symmetry", help="search a witness z with A = -(A^c) + z"))
    p = sub.add_parser("suite", help="run the configured checks")
    common(p)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--timings", action="store_true",
                   help="record wall-time per check (reports are then not byte-stable)")
    p = sub.add_parser("report", help="re-emit a saved JSON report")
    common(p, config=False)
    p.add_argument("path", type=Path)
    return parser


def _write(data, out):
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        out.write_bytes(data)


def _dump(obj, fmt):
    if fmt == "json":
        return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode()
    return ("\n".join(f"{k}: {v}" for k, v in obj.items()) + "\n").encode()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            report = Report.from_dict(json.loads(args.path.read_text()))
            _write(emit_report(report, args.format), args.out)
            return report.exit_code
        config = load_config(args.config)
        if args.command == "suite":
            overrides = {}
            if args.seed is not None:
                overrides["seed"] = args.seed
            if args.tolerance is not None:
                if not args.tolerance > 0:
                    raise ConfigError("tolerance must be positive", "--tolerance")
                overrides["tolerance"] = args.tolerance
            config = dataclasses.replace(config, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "validate":
            module = config.module()
            _write(_dump({"valid": True, "name": config.name, "dimension": config.dimension,
                          "module": repr(module)}, args.format), args.out)
            return EXIT_PASS
        if args.command == "kernel":
            pts = kernel_basis(config.module(), args.x, config.window)
            _write(_dump({"x": list(args.x), "dimension": len(pts),
                          "points": [list(p) for p in pts]}, args.format), args.out)
            return EXIT_PASS
        if args.command == "symmetry":
            window = config.verification_window or config.search_box
            res = symmetry_check(config.module(), config.search_box, window)
            _write(_dump({"witness": None if res.witness is None else list(res.witness),
                          "verdict": res.verdict}, args.format), args.out)
            return EXIT_PASS
        report = run_suite(config, timings=args.timings)
        _write(emit_report(report, args.format), args.out)
        return report.exit_code
    except CapExceeded as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except CarflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
