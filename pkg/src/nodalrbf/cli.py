"""``nodalrbf`` command-line entry point.

Every subcommand takes an optional ``--config FILE`` of ``key=value`` lines
followed by ``key=value`` overrides, and writes CSV to ``output`` (``-`` is
standard output). Exit codes: 0 success, 1 usage or configuration error,
2 numerical failure.
"""

import argparse
import csv
import io
import sys

import numpy as np

from .config import ExperimentConfig, load_config, parse_assignments
from .errors import ConfigError, NotPositiveDefiniteError, UnsupportedConfigurationError
from .experiments import (SWEEP_AXES, basis_dump, interpolation_dump, run_config, run_sweep,
                          variable_velocity_run)
from .kernels import make_kernel

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(v):
    """Deterministic text for a CSV cell: ``repr`` for floats."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path in ("", "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _values(text, cast):
    try:
        vals = [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse value list {text!r}") from None
    if not vals:
        raise UsageError("value list is empty")
    return vals


def _int_value(v):
    f = float(v)
    if not f.is_integer():
        raise ValueError(v)
    return int(f)


def _config(args, base=None):
    return load_config(args.config, args.overrides, base=base)


def cmd_solve(args):
    cfg = _config(args)
    run = run_config(cfg)
    rows = [("step", t, e, "", "", "") for t, e in zip(run.times, run.e_max)]
    lo, avg, hi = run.summary()
    rows.append(("summary", run.times[-1], run.e_max[-1], lo, avg, hi))
    write_csv(cfg.output, ["kind", "t", "e_max", "min", "avg", "max"], rows)
    if run.diverged:
        print(f"error: {run.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args)
    cast = {"kernel_q": _int_value, "ghost_count": _int_value, "n_nodes": _int_value,
            "ratio": _int_value}.get(args.axis, float)
    rows = run_sweep(cfg, args.axis, _values(args.values, cast))
    write_csv(cfg.output, [args.axis, "e_min", "e_avg", "e_max", "status"],
              [(r.value, r.e_min, r.e_avg, r.e_max, r.status) for r in rows])
    return EXIT_OK if all(r.status == "ok" for r in rows) else EXIT_NUMERIC


VARIABLE_DEFAULTS = ExperimentConfig(domain_a=-4.0, domain_b=4.0, gamma=0.5, right="open")


def cmd_variable_velocity(args):
    cfg = _config(args, base=VARIABLE_DEFAULTS)
    qs = _values(args.q, _int_value) if args.q else [cfg.kernel_q]
    alphas = _values(args.alpha, float) if args.alpha else [cfg.alpha]
    rows = []
    for q in qs:
        for a in alphas:
            point = cfg.with_values(kernel_q=q, alpha=a)
            try:
                res = variable_velocity_run(point)
                rows.append((res.kernel_q, res.alpha, res.e_final, res.t_final, res.status))
            except (NotPositiveDefiniteError, np.linalg.LinAlgError) as exc:
                rows.append((q, a, float("nan"), float("nan"), f"error: {exc}"))
    write_csv(cfg.output, ["kernel_q", "alpha", "e_final", "t_final", "status"], rows)
    return EXIT_OK if all(r[-1] == "ok" for r in rows) else EXIT_NUMERIC


def cmd_basis(args):
    cfg = _config(args)
    write_csv(cfg.output, ["kind", "j", "x", "value"], basis_dump(cfg))
    return EXIT_OK


def cmd_interpolate(args):
    cfg = _config(args)
    write_csv(cfg.output, ["x", "f", "rbf", "nrbf"], interpolation_dump(cfg))
    return EXIT_OK


def cmd_kernel_dump(args):
    cfg = _config(args)
    if cfg.kernel_family == "gaussian":
        raise ConfigError("kernel_family", "the Gaussian kernel has no polynomial form")
    kern = make_kernel(cfg.kernel_family, cfg.kernel_p, cfg.kernel_q)
    rows = [(k, float(c), str(c)) for k, c in enumerate(kern.poly.coeffs)]
    write_csv(cfg.output, ["degree", "coefficient", "exact"], rows)
    return EXIT_OK


def cmd_acceptance(args):
    from .acceptance import run_all

    results = run_all(only=args.only)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def build_parser():
    p = _Parser(prog="nodalrbf", description="Nodal RBF advection experiments; every subcommand writes CSV.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="key=value configuration file")
        sp.set_defaults(func=func)
        return sp

    add("solve", cmd_solve, "single run; per-step e_max plus a summary row")
    sp = add("sweep", cmd_sweep, "one run per axis value; min/avg/max e_max per row")
    sp.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sp.add_argument("--values", required=True, help="comma-separated axis values")
    sp = add("variable-velocity", cmd_variable_velocity,
             "damped-velocity runs compared at the right boundary")
    sp.add_argument("--q", help="comma-separated kernel smoothness levels")
    sp.add_argument("--alpha", help="comma-separated widths in node spacings")
    add("basis", cmd_basis, "nodal basis samples and coefficient magnitudes")
    add("interpolate", cmd_interpolate, "RBF and NRBF interpolants on a fine grid")
    add("kernel-dump", cmd_kernel_dump, "kernel polynomial coefficients")
    sp = sub.add_parser("acceptance", help="run the acceptance criteria")
    sp.add_argument("--only", type=int, action="append", help="criterion number (repeatable)")
    sp.set_defaults(func=cmd_acceptance, config=None)

    for name, sp in sub.choices.items():
        if name != "acceptance":
            sp.add_argument("overrides", nargs="*", metavar="key=value")
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "overrides", None):
            parse_assignments(args.overrides)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, UnsupportedConfigurationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NotPositiveDefiniteError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # reader went away (e.g. piped into head)
        sys.stdout = None
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
