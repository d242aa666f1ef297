"""Command-line front end.

Usage:
    boundary-darboux check   --config run.cfg
    boundary-darboux profile --config run.cfg [--out DIR]
    boundary-darboux chart   --config run.cfg [--out DIR]
    boundary-darboux verify  --config run.cfg [--out DIR]
    boundary-darboux levels  --config run.cfg [--out DIR]

Exit codes: 0 success, 1 usage/parse/IO error, 2 hypotheses fail at the
origin, 3 the chart ran but failed certification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, with_output_dir
from .errors import ConfigError, DarbouxError, ExpressionError, HypothesisError
from .expr import parse_expression
from .morse import check_hypotheses
from .normal_form import check_tolerances, hat_grid, run_pipeline, verify

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_HYPOTHESIS = 2
EXIT_CERTIFICATION = 3

LEVEL_COUNT = 10
POLYLINE_POINTS = 65

log = logging.getLogger("boundary_darboux")


# -- output helpers ---------------------------------------------------------------


def _fmt(value) -> str:
    return "%.17g" % float(value)


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _output_dir(config: RunConfig) -> Path:
    out = config.output_dir
    if not out.is_dir():
        raise ConfigError(f"output directory {out} does not exist")
    return out


def _emit(config: RunConfig, name: str, fmt: str, text: str) -> None:
    if fmt not in config.formats:
        return
    path = _output_dir(config) / name
    write_atomic(path, text)
    print(f"wrote {path}")


def _pipeline(config: RunConfig):
    return run_pipeline(
        parse_expression(config.f_expr),
        parse_expression(config.omega_expr),
        eps_max=config.eps_max,
        profile_points=config.profile_points,
        tol=config.tolerances,
        radius=config.chart_radius,
        p_scale=config.fault_p_scale,
    )


# -- subcommands ----------------------------------------------------------------------


def cmd_check(config: RunConfig) -> int:
    report = check_hypotheses(parse_expression(config.f_expr), parse_expression(config.omega_expr))
    status = "admissible" if report.admissible else f"NOT admissible ({report.failure})"
    print(f"f     = {config.f_expr}")
    print(f"omega = {config.omega_expr}")
    print(f"f_x(0,0) = {report.fx0:.6g}  f_y(0,0) = {report.fy0:.6g}  f_xx(0,0) = {report.fxx0:.6g}")
    print(f"omega(0,0) = {report.omega0:.6g}  flip_f = {report.flip_f}  flip_y = {report.flip_y}")
    print(f"status: {status}")
    if report.message:
        print(f"reason: {report.message}")
    print(json_text(report.to_dict()), end="")
    return EXIT_OK if report.admissible else EXIT_HYPOTHESIS


def cmd_profile(config: RunConfig) -> int:
    _output_dir(config)
    pl = _pipeline(config)
    prof = pl.profile
    a_tilde = prof.a_tilde(prof.eps_grid)
    alpha_inv = np.cbrt(0.75 * prof.a_values) ** 2
    rows = zip(prof.eps_grid, prof.a_values, a_tilde, alpha_inv)
    _emit(config, "profile.csv", "csv", csv_text(["eps", "A", "A_tilde", "alpha_inv"], rows))
    limit = 4.0 / 3.0 * prof.omega0
    print(f"eps range [0, {prof.eps_max:.6g}] with {prof.eps_grid.size} points")
    print(
        f"small-eps ratio A/eps^(3/2) = {prof.small_eps_ratio:.10g} at eps = {prof.eps_grid[1]:.3g}; "
        f"limit 4/3 omega_hat(0,0) = {limit:.10g} ({'ok' if prof.small_eps_ok else 'off by more than 5%'})"
    )
    return EXIT_OK


def chart_rows(pl, grid):
    chart = pl.chart
    problem = pl.problem
    xh, yh, _, _ = hat_grid(chart, grid)
    xn, yn = problem.inverse(xh, yh)
    p, q = chart.report_flip(*chart.evaluate_hat(xh, yh))
    x, y = problem.from_normalized(xn, yn)
    f = problem.f_input.evaluate(x, y)
    return zip(x, y, p, q, f, chart.alpha_of_s(p, q))


def cmd_chart(config: RunConfig) -> int:
    _output_dir(config)
    pl = _pipeline(config)
    rows = list(chart_rows(pl, config.grid))
    _emit(config, "chart.csv", "csv", csv_text(["x", "y", "p", "q", "f", "alpha_of_s"], rows))
    print(f"chart on {len(rows)} points, f = alpha({pl.chart.s_form}), flips {pl.chart.flips}")
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    _output_dir(config)
    try:
        pl = _pipeline(config)
        tols = check_tolerances(config.tolerances, config.check_tols)
        report = verify(pl.chart, config.grid, config.tolerances, tols)
    except (HypothesisError, ExpressionError, ConfigError):
        raise
    except DarbouxError as exc:
        print(f"error: chart construction failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    data = report.to_dict()
    _emit(config, "report.json", "json", json_text(data))
    for name, check in report.checks.items():
        flag = "pass" if check.passed else "FAIL"
        print(f"{name:<11} max_err={check.max_err:.3e}  tol={check.tol:.1e}  {flag}")
    print(f"boundary probe: min q on the first row above y=0 = {report.boundary_probe_min_q:.3e}")
    if report.overall_pass:
        print("overall: pass")
        return EXIT_OK
    print(f"overall: FAIL ({', '.join(report.failed())})")
    return EXIT_CERTIFICATION


def level_rows(pl):
    """Polylines of 10 f-levels, the boundary and the bisector, in the input frame."""
    problem = pl.problem
    chart = pl.chart
    lc = chart.level_chart
    rows = []

    def add(curve_id, xh, yh):
        xn, yn = problem.inverse(xh, yh)
        x, y = problem.from_normalized(xn, yn)
        rows.extend((curve_id, a, b) for a, b in zip(x, y))

    top = float(pl.alpha_fn.alpha(0.9 * pl.alpha_fn.beta_max))
    t = np.linspace(-1.0, 1.0, POLYLINE_POINTS)
    for k, c in enumerate(np.linspace(0.0, top, LEVEL_COUNT)):
        if c == 0.0:
            add(f"level_{k}", np.zeros(1), np.zeros(1))
            continue
        xh = np.sqrt(c) * t
        add(f"level_{k}", xh, np.maximum(c - xh * xh, 0.0))
    r = problem.radius
    add("boundary", r * t, np.zeros_like(t))
    zs = np.linspace(0.0, chart.eps_max, POLYLINE_POINTS)
    s = np.array([lc.bisector(z) for z in zs])
    add("bisector", s, zs - s * s)
    return rows


def cmd_levels(config: RunConfig) -> int:
    _output_dir(config)
    pl = _pipeline(config)
    rows = level_rows(pl)
    _emit(config, "levels.csv", "csv", csv_text(["curve_id", "x", "y"], rows))
    print(f"{LEVEL_COUNT} level sets, boundary and bisector ({len(rows)} points)")
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "profile": cmd_profile,
    "chart": cmd_chart,
    "verify": cmd_verify,
    "levels": cmd_levels,
}


def _parse_set(values):
    out = {}
    for item in values or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="run configuration file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (overrides output_dir)")
    common.add_argument("--set", action="append", default=argparse.SUPPRESS, metavar="KEY=VALUE",
                        help="override a configuration key; repeatable")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="boundary-darboux",
        description="Normal-form chart omega = dp^dq, f = alpha(p^2 + q) at a boundary critical point.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    helps = {
        "check": "check the hypotheses at the origin",
        "profile": "tabulate the area invariant A_f",
        "chart": "dump the chart (p, q) on the verification grid",
        "verify": "certify the chart and write report.json",
        "levels": "emit level-set, boundary and bisector polylines",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    verbose = getattr(args, "verbose", False)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a command is required", file=sys.stderr)
        return EXIT_USAGE
    config_path = getattr(args, "config", None)
    if config_path is None:
        print("error: --config is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = load_config(config_path, _parse_set(getattr(args, "set", None)))
        if getattr(args, "out", None) is not None:
            config = with_output_dir(config, args.out)
        return COMMANDS[args.command](config)
    except HypothesisError as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ConfigError, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DarbouxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
