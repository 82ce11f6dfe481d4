"""Command line interface: ``levyband {estimate,band,bandwidth,coverage,figures}``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .bandwidth import SelectionConfig, select_bandwidth
from .bootstrap import compute_band
from .errors import LevyBandError, ParameterError
from .estimator import (
    DEFAULT_N_U,
    EstimatorConfig,
    default_intervals,
    default_sigma2,
    interval_grid,
    parse_intervals,
    parse_sigma2,
    spectral_estimate,
)
from .harness import (
    FIGURE_KINDS,
    band_series,
    emit_figure_data,
    load_config,
    overlay_series,
    profile_series,
    run_coverage_experiment,
    stream_rngs,
)
from .kernel import parse_kernel
from .levy_models import parse_model, simulate_increments, true_density


def _common(p: argparse.ArgumentParser, h_default="auto"):
    p.add_argument("--model", required=True, help="e.g. bcn:sigma=1,v=0.5,lambda=10 or gamma:c=0.2,lambda=1")
    p.add_argument("--n", type=int, default=50_000, help="number of increments")
    p.add_argument("--delta", type=float, default=0.01, help="time span between observations")
    p.add_argument("--h", default=h_default, help="bandwidth, or 'auto' for the selection rule")
    p.add_argument("--interval", default=None, help="a:b[,c:d] (default depends on the model); write "
                   "--interval=-0.75:-0.25,0.25:0.75 when the first bound is negative")
    p.add_argument("--kernel", default="flattop:b=1,c=0.05")
    p.add_argument("--sigma2", default="auto", help="zero | trv | fixed=V | auto")
    p.add_argument("--nu", type=int, default=DEFAULT_N_U, help="frequency nodes (odd)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path (a PNG is written next to it)")
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")


def _selection_args(p):
    p.add_argument("--M", type=float, default=2.0)
    p.add_argument("--J", type=int, default=20)
    p.add_argument("--kappa", type=float, default=20.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levyband", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="spectral estimate of the Levy density")
    _common(p)
    _selection_args(p)

    p = sub.add_parser("band", help="estimate plus a bootstrap uniform confidence band")
    _common(p)
    _selection_args(p)
    p.add_argument("--tau", type=float, default=0.10)
    p.add_argument("--boot", choices=["mb", "eb"], default="mb")
    p.add_argument("--B", type=int, default=1500)

    p = sub.add_parser("bandwidth", help="adjacent-distance profile and the selected bandwidth")
    _common(p)
    _selection_args(p)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study from a config file")
    p.add_argument("--config", required=True, help="key = value experiment file")
    p.add_argument("--out", default=None, help="report CSV path (a PNG is written next to it)")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: LEVYBAND_WORKERS or 1)")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("figures", help="long-format figure data (series_id, x, value)")
    _common(p, h_default="0.1")
    _selection_args(p)
    p.add_argument("--figure", choices=FIGURE_KINDS, required=True)
    p.add_argument("--seeds", type=int, default=25, help="number of samples to overlay")
    p.add_argument("--estimator", choices=["spectral", "direct"], default="spectral")
    p.add_argument("--tau", type=float, default=0.10)
    p.add_argument("--B", type=int, default=1500)
    return ap


def _setup(args):
    model = parse_model(args.model)
    intervals = parse_intervals(args.interval) if args.interval else default_intervals(model)
    x = interval_grid(intervals)
    s2 = parse_sigma2(args.sigma2)
    kernel = parse_kernel(args.kernel)
    sel = SelectionConfig(args.M, args.J, args.kappa)
    return model, intervals, x, (s2 if s2 is not None else default_sigma2(model)), kernel, sel


def _resolve_h(args, sample, est_cfg, kernel, sel):
    if str(args.h).lower() == "auto":
        return select_bandwidth(sample, sel, est_cfg, kernel).h
    try:
        return float(args.h)
    except ValueError:
        raise ParameterError(f"--h must be a number or 'auto', got {args.h!r}") from None


def _write_rows(path, header, rows):
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    finally:
        if path:
            fh.close()


def _png(args):
    if args.out is None or args.no_plot:
        return None
    return str(Path(args.out).with_suffix(".png"))


def _sample(args, model):
    rngs = stream_rngs(args.seed, 0, 0)
    return simulate_increments(model, args.n, args.delta, rngs["simulate"]), rngs


def cmd_estimate(args):
    model, _, x, s2, kernel, sel = _setup(args)
    sample, _ = _sample(args, model)
    base = EstimatorConfig(1.0, x, args.nu, s2)
    h = _resolve_h(args, sample, base, kernel, sel)
    est = spectral_estimate(sample, base.with_h(h), kernel)
    truth = true_density(model, x)
    _write_rows(args.out, ["x", "rho_hat", "rho_true"], zip(x, est.rho_hat, truth))
    print(f"h = {h:.6g}, sigma2_hat = {est.sigma2:.6g}", file=sys.stderr)
    if png := _png(args):
        from .plotting import plot_estimate
        plot_estimate(x, est.rho_hat, truth, png, f"{model.label()}  h={h:.4g}")


def cmd_band(args):
    model, _, x, s2, kernel, sel = _setup(args)
    sample, rngs = _sample(args, model)
    base = EstimatorConfig(1.0, x, args.nu, s2)
    h = _resolve_h(args, sample, base, kernel, sel)
    res = compute_band(sample, base.with_h(h), kernel, args.B, (args.boot,), rngs)
    band = res.band(args.tau, args.boot)
    truth = true_density(model, x)
    _write_rows(args.out, ["x", "rho_hat", "lower", "upper", "rho_true"],
                zip(x, band.rho_hat, band.lower, band.upper, truth))
    print(f"h = {h:.6g}, c_hat = {band.c_hat:.6g}, covers truth: {band.contains(truth)}",
          file=sys.stderr)
    if png := _png(args):
        from .plotting import plot_band
        plot_band(band, truth, png, f"{model.label()}  h={h:.4g}")


def cmd_bandwidth(args):
    model, _, x, s2, kernel, sel = _setup(args)
    sample, _ = _sample(args, model)
    res = select_bandwidth(sample, sel, EstimatorConfig(1.0, x, args.nu, s2), kernel)
    rows = [(h, d, int(j == res.index))
            for j, (h, d) in enumerate(zip(res.candidates, res.distances)) if j >= 1]
    _write_rows(args.out, ["h", "d", "selected"], rows)
    print(f"selected h = {res.h:.6g} (j = {res.index + 1}, kappa = {res.kappa:g})", file=sys.stderr)
    if png := _png(args):
        from .plotting import plot_profile
        plot_profile([r[0] for r in rows], [r[1] for r in rows], res.h, png, model.label())


def cmd_coverage(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    report = run_coverage_experiment(cfg, args.workers)
    text = report.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    invalid = sum(not o.valid for o in report.outcomes)
    print(f"{len(report.outcomes)} repetitions, {invalid} invalid, {report.runtime:.1f} s",
          file=sys.stderr)
    if png := _png(args):
        from .plotting import plot_coverage
        plot_coverage(report, png)


def cmd_figures(args):
    model, _, x, s2, kernel, sel = _setup(args)
    seeds = range(args.seed, args.seed + args.seeds)
    if args.figure == "estimates-overlay":
        h = float(args.h)
        series = overlay_series(model, args.n, args.delta, h, seeds, args.estimator, x, s2, kernel)
    elif args.figure == "bandwidth-profile":
        series = profile_series(model, args.n, args.delta, seeds, sel, x, s2, kernel)
    else:
        sample, rngs = _sample(args, model)
        base = EstimatorConfig(1.0, x, args.nu, s2)
        h = _resolve_h(args, sample, base, kernel, sel)
        res = compute_band(sample, base.with_h(h), kernel, args.B, ("mb",), rngs)
        series = band_series(res.band(args.tau, "mb"), true_density(model, x))
    text = emit_figure_data(args.figure, series, args.out)
    if args.out is None:
        sys.stdout.write(text)
    if png := _png(args):
        from .plotting import plot_series
        plot_series(args.figure, series, png, f"{args.figure}: {model.label()}")


COMMANDS = {
    "estimate": cmd_estimate,
    "band": cmd_band,
    "bandwidth": cmd_bandwidth,
    "coverage": cmd_coverage,
    "figures": cmd_figures,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (LevyBandError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
