"""Command line interface: ``kerrdyn {spectrum,evolve,converge,sweep,shorttime-check}``.

Exit codes: 0 success, 2 configuration error, 3 truncation failure,
4 numerical failure.  A JSON run report goes to stderr (and to
``--report`` when given) for every run, successful or not.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import runner
from .config import PRESETS, RunConfig, resolve
from .errors import ConfigError, KerrDynError
from .fockspace import FockBasis

log = logging.getLogger("kerrdyn")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML file with RunConfig keys")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key (repeatable)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="figure parameter preset")
    common.add_argument("--cache-dir", help="directory for binary eigensystem caches")
    common.add_argument("--report", help="also write the JSON run report here")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="kerrdyn", description="Exact-diagonalization dynamics of two coupled Kerr oscillators.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="truncated eigenvalue table")
    ev = sub.add_parser("evolve", parents=[common], help="time series of all observables")
    ev.add_argument("--plot-columns", help="comma-separated columns for the SVG")
    cv = sub.add_parser("converge", parents=[common], help="truncation convergence ladder")
    cv.add_argument("--m-list", default="12,16,20,24")
    cv.add_argument("--probe-times", help="comma-separated probe times (default t_max*{1/6,1/3,2/3,1})")
    sw = sub.add_parser("sweep", parents=[common], help="evolutions across one parameter")
    sw.add_argument("--axis", choices=runner.SWEEP_AXES)
    sw.add_argument("--values", help="comma-separated sweep values")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--plot-columns", help="comma-separated columns for the SVG")
    st = sub.add_parser("shorttime-check", parents=[common], help="O(t^3) error-ratio report")
    st.add_argument("--quantity", choices=runner.SHORTTIME_QUANTITIES, default="population")
    st.add_argument("--times", default=",".join(str(t) for t in runner.DEFAULT_SHORT_TIMES))
    st.add_argument("--mode", type=int, choices=(1, 2), default=1)
    return p


def _emit(cfg: RunConfig, text: str, report: runner.RunReport) -> None:
    if cfg.csv_path:
        runner.write_text(cfg.csv_path, text)
        report.outputs.append(cfg.csv_path)
    else:
        sys.stdout.write(text)


def _plot_columns(args, default):
    if getattr(args, "plot_columns", None):
        cols = [c.strip() for c in args.plot_columns.split(",") if c.strip()]
    else:
        cols = list(PRESETS[args.preset].columns) if args.preset else list(default)
    bad = [c for c in cols if c not in runner.EVOLVE_COLUMNS or c == "t"]
    if bad:
        raise ConfigError(f"unknown plot columns: {', '.join(bad)}")
    return cols


def cmd_spectrum(args, cfg, report):
    params = cfg.model_params()
    eig = runner.get_eigensystem(params, FockBasis(cfg.m_cut), args.cache_dir)
    report.eigen_residual = eig.residual
    report.orthonormality_defect = eig.orthonormality_defect
    extra = [("dim", eig.dim), ("eigen_residual", eig.residual)]
    rows = [(i, e) for i, e in enumerate(eig.energies)]
    _emit(cfg, runner.render_csv(runner.header_lines("spectrum", cfg, extra), ("index", "energy"), rows),
          report)


def cmd_evolve(args, cfg, report):
    res = runner.run_evolution(cfg, cache_dir=args.cache_dir)
    runner.fill_report(report, cfg, res)
    _emit(cfg, runner.evolve_csv(cfg, res), report)
    if cfg.svg_path:
        from .plotting import plot_evolution

        cols = _plot_columns(args, ("E12",))
        plot_evolution(res.times, {c: res.column(c) for c in cols}, cfg.svg_path,
                       title=f"kerrdyn evolve {args.preset or ''}")
        report.outputs.append(cfg.svg_path)


def cmd_converge(args, cfg, report):
    probes = _floats(args.probe_times) if args.probe_times else None
    out = runner.run_converge(cfg, _ints(args.m_list), probes, cache_dir=args.cache_dir)
    report.extra["converged_m_cut"] = out["converged_m_cut"]
    report.extra["ladder"] = [
        {k: e[k] for k in ("m_cut", "delta", "truncation_weight", "max_edge_weight", "converged")}
        for e in out["ladder"]
    ]
    _emit(cfg, runner.converge_csv(cfg, out), report)


def cmd_sweep(args, cfg, report):
    axis, values = args.axis, _floats(args.values) if args.values else None
    if args.preset:
        axis = axis or PRESETS[args.preset].sweep_axis
        values = values if values is not None else list(PRESETS[args.preset].sweep_values)
    if axis is None or not values:
        raise ConfigError("sweep needs --axis and --values (or a preset)")
    results = runner.run_sweep(cfg, axis, values, jobs=args.jobs, cache_dir=args.cache_dir)
    rows, failures, curves = [], [], []
    for value, res in results:
        if isinstance(res, Exception):
            failures.append({"value": value, "error": f"{type(res).__name__}: {res}",
                             "exit_code": runner.exit_code_for(res)})
            continue
        rows.extend([value, *r] for r in res.table)
        curves.append((f"{axis}={value:g}", {c: res.column(c) for c in runner.EVOLVE_COLUMNS}))
        report.max_edge_weight = max(report.max_edge_weight or 0.0, res.max_edge_weight)
    report.edge_converged = (report.max_edge_weight or 0.0) <= cfg.edge_weight_threshold
    report.extra["sweep"] = {"axis": axis, "values": values, "failures": failures}
    extra = [("sweep_axis", axis), ("sweep_values", ",".join(runner.fmt(v) for v in values)),
             ("failed_values", ",".join(runner.fmt(f["value"]) for f in failures))]
    text = runner.render_csv(runner.header_lines("sweep", cfg, extra),
                             (axis, *runner.EVOLVE_COLUMNS), rows)
    _emit(cfg, text, report)
    if cfg.svg_path and curves:
        from .plotting import plot_sweep

        times = np.linspace(0.0, cfg.t_max, cfg.n_points)
        plot_sweep(times, curves, _plot_columns(args, ("E12",)), cfg.svg_path,
                   title=f"kerrdyn sweep over {axis}")
        report.outputs.append(cfg.svg_path)
    if failures:
        report.status = "partial"
        report.exit_code = failures[0]["exit_code"]
        report.message = f"{len(failures)} sweep point(s) failed"


def cmd_shorttime(args, cfg, report):
    times = _floats(args.times)
    rows = runner.run_shorttime(cfg, args.quantity, times, args.mode)
    ok = runner.ratios_ok(rows)
    report.extra.update(quantity=args.quantity, mode=args.mode,
                        ratios=[r[2] for r in rows], ratios_ok=ok)
    _emit(cfg, runner.shorttime_csv(cfg, args.quantity, args.mode, rows), report)
    if not ok:
        report.status = "error"
        report.exit_code = 4
        report.message = "error ratios outside the third-order window"


COMMANDS = {
    "spectrum": cmd_spectrum, "evolve": cmd_evolve, "converge": cmd_converge,
    "sweep": cmd_sweep, "shorttime-check": cmd_shorttime,
}


def _json_default(x):
    if isinstance(x, complex):
        return runner.fmt(x)
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return str(x)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="kerrdyn: %(levelname)s: %(message)s")
    report = runner.RunReport(command=args.command)
    clock = runner.timed()
    try:
        cfg = resolve(args.preset, args.config, args.overrides)
        params = cfg.model_params()
        report.params = {**dict(cfg.items()), **params.as_dict()}
        report.normal_modes = runner.derived_info(params)
        COMMANDS[args.command](args, cfg, report)
    except KerrDynError as exc:
        report.fail(exc, runner.exit_code_for(exc))
    report.wall_time = clock()
    text = json.dumps(report.__dict__, default=_json_default, sort_keys=True)
    sys.stderr.write(text + "\n")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if report.exit_code:
        log.error("%s", report.message)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
