"""Monte Carlo coverage experiments, seed streams and figure data export."""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bandwidth import SelectionConfig, distance_profile, select_bandwidth
from .bootstrap import ConfidenceBand, compute_band, sup_statistic
from .errors import LevyBandError, ParameterError
from .estimator import (
    DEFAULT_N_U,
    POINTS_PER_INTERVAL,
    EstimatorConfig,
    Sigma2Mode,
    default_intervals,
    default_sigma2,
    direct_kernel_estimate,
    interval_grid,
    parse_intervals,
    parse_sigma2,
    spectral_estimate,
)
from .kernel import DEFAULT_KERNEL, KernelSpec, parse_kernel
from .levy_models import IncrementSample, LevyModel, parse_model, simulate_increments, true_density

STREAMS = ("simulate", "mb", "eb")
WORKERS_ENV = "LEVYBAND_WORKERS"

REPORT_COLUMNS = ["model", "n", "delta", "tau", "method", "h_mode", "coverage",
                  "coverage_se", "mean_width", "invalid_count", "seed"]


# -- seeds -------------------------------------------------------------------

def stream_rngs(seed: int, *path: int) -> dict[str, np.random.Generator]:
    """Named generators for one position in the seed tree.

    ``path`` identifies the node below the master seed (for example
    ``(design, repetition)``); each name in STREAMS gets its own child.
    """
    if int(seed) != seed or seed < 0:
        raise ParameterError("seed must be a nonnegative integer")
    out = {}
    for i, name in enumerate(STREAMS):
        ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path) + (i,))
        out[name] = np.random.Generator(np.random.PCG64(ss))
    return out


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        k = int(raw)
    except ValueError:
        raise ParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, k)


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One coverage study: a model, several (n, delta) designs, levels and methods.

    ``h=None`` selects the bandwidth with the adjacent-distance rule, either
    in every repetition (default) or once per design from the first
    repetition's sample (``select_once=True``).
    """

    model: LevyModel
    designs: tuple = ((50_000, 0.01),)
    intervals: tuple | None = None
    taus: tuple = (0.10,)
    methods: tuple = ("mb",)
    B: int = 500
    R: int = 100
    h: float | None = None
    select_once: bool = False
    sigma2: Sigma2Mode | None = None
    kernel: KernelSpec = DEFAULT_KERNEL
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    n_u: int = DEFAULT_N_U
    points: int = POINTS_PER_INTERVAL
    seed: int = 0

    def __post_init__(self):
        if self.R < 1:
            raise ParameterError("R must be >= 1")
        if self.B < 100:
            raise ParameterError("B must be >= 100")
        if not self.designs:
            raise ParameterError("at least one (n, delta) design is required")
        for n, d in self.designs:
            if int(n) != n or n < 1 or not d > 0:
                raise ParameterError(f"bad design (n={n}, delta={d})")
        for t in self.taus:
            if not 0 < t < 1:
                raise ParameterError("tau values must lie in (0, 1)")
        for m in self.methods:
            if m not in ("mb", "eb"):
                raise ParameterError(f"unknown bootstrap method {m!r}")
        if self.h is not None and not self.h > 0:
            raise ParameterError("fixed h must be > 0")
        object.__setattr__(self, "designs", tuple((int(n), float(d)) for n, d in self.designs))
        ivs = self.intervals if self.intervals is not None else default_intervals(self.model)
        ivs = tuple((float(a), float(b)) for a, b in ivs)
        interval_grid(ivs, 3)  # validates: nonempty, away from 0
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def x_grid(self) -> np.ndarray:
        return interval_grid(self.intervals, self.points)

    @property
    def sigma2_mode(self) -> Sigma2Mode:
        return self.sigma2 if self.sigma2 is not None else default_sigma2(self.model)

    @property
    def h_mode(self) -> str:
        if self.h is not None:
            return f"fixed={self.h:g}"
        return "auto-once" if self.select_once else "auto"

    def estimator_config(self, h: float = 1.0) -> EstimatorConfig:
        return EstimatorConfig(h, self.x_grid, self.n_u, self.sigma2_mode)


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def parse_config_text(text: str) -> ExperimentConfig:
    """Build an ExperimentConfig from ``key = value`` lines (``#`` starts a comment).

    Recognised keys: model, designs (``n:delta,...``), n and delta (lists,
    crossed), interval, tau, method, B, R, h (number or ``auto``),
    bandwidth_mode (``per-rep`` or ``once``), sigma2, kernel, M, J, kappa,
    nu, points, seed.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ParameterError(f"line {lineno}: expected key = value")
        key = key.strip().lower()
        if key in raw:
            raise ParameterError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    known = {"model", "designs", "n", "delta", "interval", "tau", "method", "b", "r", "h",
             "bandwidth_mode", "sigma2", "kernel", "m", "j", "kappa", "nu", "points", "seed"}
    unknown = set(raw) - known
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    if "model" not in raw:
        raise ParameterError("config must set model")
    model = parse_model(raw["model"])
    try:
        if "designs" in raw:
            if "n" in raw or "delta" in raw:
                raise ParameterError("use either designs or n/delta, not both")
            designs = []
            for item in _split_list(raw["designs"]):
                n, sep, d = item.partition(":")
                if not sep:
                    raise ParameterError(f"design {item!r} is not of the form n:delta")
                designs.append((int(float(n)), float(d)))
        else:
            ns = [int(float(v)) for v in _split_list(raw.get("n", "50000"))]
            ds = [float(v) for v in _split_list(raw.get("delta", "0.01"))]
            designs = [(n, d) for n in ns for d in ds]
        kw = dict(
            model=model,
            designs=tuple(designs),
            intervals=tuple(parse_intervals(raw["interval"])) if "interval" in raw else None,
            taus=tuple(float(v) for v in _split_list(raw.get("tau", "0.1"))),
            methods=tuple(v.lower() for v in _split_list(raw.get("method", "mb"))),
            B=int(raw.get("b", 500)),
            R=int(raw.get("r", 100)),
            seed=int(raw.get("seed", 0)),
            n_u=int(raw.get("nu", DEFAULT_N_U)),
            points=int(raw.get("points", POINTS_PER_INTERVAL)),
        )
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"bad numeric value in config: {exc}") from None
    h = raw.get("h", "auto").lower()
    kw["h"] = None if h == "auto" else float(h)
    mode = raw.get("bandwidth_mode", "per-rep").lower()
    if mode not in ("per-rep", "once"):
        raise ParameterError("bandwidth_mode must be per-rep or once")
    kw["select_once"] = mode == "once"
    if "sigma2" in raw:
        kw["sigma2"] = parse_sigma2(raw["sigma2"])
    if "kernel" in raw:
        kw["kernel"] = parse_kernel(raw["kernel"])
    kw["selection"] = SelectionConfig(float(raw.get("m", 2)), int(raw.get("j", 20)),
                                      float(raw.get("kappa", 20)))
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())


# -- one repetition ----------------------------------------------------------

@dataclass
class RepetitionOutcome:
    design: int
    rep: int
    valid: bool
    error: str = ""
    h: float = math.nan
    covered: dict = field(default_factory=dict)     # (method, tau) -> bool
    width: dict = field(default_factory=dict)       # (method, tau) -> mean width
    sup_width: dict = field(default_factory=dict)   # (method, tau) -> max width
    c_hat: dict = field(default_factory=dict)       # (method, tau) -> critical value


def mean_width(band: ConfidenceBand, intervals: Sequence[tuple[float, float]] | None = None) -> float:
    """(1/|I|) * integral over I of (upper - lower), trapezoid per interval.

    Without ``intervals`` the grid is split wherever the spacing jumps to
    more than twice its median, which recovers the interval structure of
    :func:`interval_grid` grids.
    """
    x = np.asarray(band.x, dtype=float)
    width = np.asarray(band.upper - band.lower, dtype=float)
    if x.size < 2:
        raise ParameterError("band grid needs at least two points")
    if intervals is None:
        dx = np.diff(x)
        breaks = np.flatnonzero((dx <= 0) | (dx > 2 * np.median(dx))) + 1
        segments = np.split(np.arange(x.size), breaks)
    else:
        segments = [np.flatnonzero((x >= a) & (x <= b)) for a, b in intervals]
    total_len = 0.0
    total = 0.0
    for idx in segments:
        if idx.size < 2:
            continue
        total += float(np.trapezoid(width[idx], x[idx]))
        total_len += float(x[idx[-1]] - x[idx[0]])
    if total_len <= 0:
        raise ParameterError("band grid spans no interval")
    return total / total_len


def _choose_h(cfg: ExperimentConfig, sample: IncrementSample) -> float:
    if cfg.h is not None:
        return cfg.h
    return select_bandwidth(sample, cfg.selection, cfg.estimator_config(), cfg.kernel).h


def run_repetition(cfg: ExperimentConfig, design: int, rep: int, h: float | None = None) -> RepetitionOutcome:
    n, delta = cfg.designs[design]
    rngs = stream_rngs(cfg.seed, design, rep)
    out = RepetitionOutcome(design, rep, valid=False)
    try:
        sample = simulate_increments(cfg.model, n, delta, rngs["simulate"])
        out.h = h if h is not None else _choose_h(cfg, sample)
        res = compute_band(sample, cfg.estimator_config(out.h), cfg.kernel, cfg.B,
                           cfg.methods, rngs)
    except LevyBandError as exc:
        out.error = f"{type(exc).__name__}: {exc}"
        return out
    rho = true_density(cfg.model, res.estimate.x)
    stat = sup_statistic(res.estimate, res.s_hat, rho)
    for method in cfg.methods:
        for tau in cfg.taus:
            band = res.band(tau, method)
            inside = band.contains(rho)
            if inside != (stat <= band.c_hat):
                raise RuntimeError(
                    f"coverage mismatch in design {design} rep {rep}: band says {inside}, "
                    f"sup statistic {stat!r} vs critical value {band.c_hat!r}"
                )
            key = (method, tau)
            out.covered[key] = inside
            out.width[key] = mean_width(band, cfg.intervals)
            out.sup_width[key] = band.sup_width
            out.c_hat[key] = band.c_hat
    out.valid = True
    return out


def _run_task(args):
    cfg, design, rep, h = args
    return run_repetition(cfg, design, rep, h)


# -- aggregation -------------------------------------------------------------

@dataclass
class CoverageRow:
    model: str
    n: int
    delta: float
    tau: float
    method: str
    h_mode: str
    coverage: float
    coverage_se: float
    mean_width: float
    invalid_count: int
    seed: int

    def as_list(self) -> list[str]:
        def f(v):
            return repr(float(v)) if isinstance(v, float) else str(v)
        return [f(getattr(self, c)) for c in REPORT_COLUMNS]


@dataclass
class CoverageReport:
    config: ExperimentConfig
    rows: list[CoverageRow]
    outcomes: list[RepetitionOutcome]
    runtime: float = 0.0

    def row(self, tau: float, method: str = "mb", design: int = 0) -> CoverageRow:
        n, d = self.config.designs[design]
        for r in self.rows:
            if r.n == n and r.delta == d and r.method == method and math.isclose(r.tau, tau):
                return r
        raise KeyError((tau, method, design))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow(r.as_list())
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def aggregate(cfg: ExperimentConfig, outcomes: Sequence[RepetitionOutcome]) -> list[CoverageRow]:
    rows = []
    for d, (n, delta) in enumerate(cfg.designs):
        mine = [o for o in outcomes if o.design == d]
        valid = [o for o in mine if o.valid]
        invalid = len(mine) - len(valid)
        for tau in cfg.taus:
            for method in cfg.methods:
                key = (method, tau)
                if valid:
                    p = float(np.mean([o.covered[key] for o in valid]))
                    se = math.sqrt(p * (1 - p) / len(valid))
                    w = float(np.mean([o.width[key] for o in valid]))
                else:
                    p = se = w = math.nan
                rows.append(CoverageRow(cfg.model.label(), n, delta, tau, method, cfg.h_mode,
                                        p, se, w, invalid, cfg.seed))
    return rows


def run_coverage_experiment(cfg: ExperimentConfig, workers: int | None = None) -> CoverageReport:
    """Simulate, (optionally) select h, build bands and score coverage for every design.

    Repetitions are distributed over ``workers`` processes (default from
    the LEVYBAND_WORKERS environment variable, else 1).  Each repetition
    draws only from its own seed streams, so the report does not depend on
    the worker count.
    """
    t0 = time.perf_counter()
    workers = worker_count() if workers is None else max(1, int(workers))
    fixed_h: dict[int, float | None] = {}
    pre: list[RepetitionOutcome] = []
    for d in range(len(cfg.designs)):
        fixed_h[d] = None
        if cfg.h is None and cfg.select_once:
            n, delta = cfg.designs[d]
            sample = simulate_increments(cfg.model, n, delta, stream_rngs(cfg.seed, d, 0)["simulate"])
            try:
                fixed_h[d] = _choose_h(cfg, sample)
            except LevyBandError as exc:
                # selection failed on the pilot sample: every repetition is invalid
                pre += [RepetitionOutcome(d, r, False, f"{type(exc).__name__}: {exc}")
                        for r in range(cfg.R)]
    failed = {o.design for o in pre}
    tasks = [(cfg, d, r, fixed_h[d]) for d in range(len(cfg.designs)) if d not in failed
             for r in range(cfg.R)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        outcomes = [_run_task(t) for t in tasks]
    outcomes = sorted(pre + outcomes, key=lambda o: (o.design, o.rep))
    return CoverageReport(cfg, aggregate(cfg, outcomes), outcomes, time.perf_counter() - t0)


# -- figure data -------------------------------------------------------------

FIGURE_KINDS = ("estimates-overlay", "bandwidth-profile", "band-plot")


def emit_figure_data(kind: str, series: Mapping[str, tuple], path=None) -> str:
    """Write ``series_id, x, value`` rows (long format) for every series.

    ``series`` maps a series id to a pair of equal-length arrays (x, value).
    An empty mapping produces a header-only CSV.
    """
    if kind not in FIGURE_KINDS:
        raise ParameterError(f"unknown figure kind {kind!r}; expected one of {FIGURE_KINDS}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series_id", "x", "value"])
    for sid, (xs, vals) in series.items():
        xs = np.asarray(xs, dtype=float)
        vals = np.asarray(vals, dtype=float)
        if xs.shape != vals.shape:
            raise ParameterError(f"series {sid!r}: x and value lengths differ")
        for a, b in zip(xs.tolist(), vals.tolist()):
            w.writerow([sid, repr(a), repr(b)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def overlay_series(model: LevyModel, n: int, delta: float, h: float, seeds: Iterable[int],
                   estimator: str = "spectral", x_grid=None, sigma2: Sigma2Mode | None = None,
                   kernel: KernelSpec = DEFAULT_KERNEL) -> dict:
    """Estimates from several independent samples plus the true density."""
    if estimator not in ("spectral", "direct"):
        raise ParameterError("estimator must be spectral or direct")
    x = interval_grid(default_intervals(model)) if x_grid is None else np.asarray(x_grid, float)
    mode = sigma2 if sigma2 is not None else default_sigma2(model)
    series = {}
    for s in seeds:
        sample = simulate_increments(model, n, delta, stream_rngs(s, 0, 0)["simulate"])
        if estimator == "direct":
            vals = direct_kernel_estimate(sample, h, x)
        else:
            vals = spectral_estimate(sample, EstimatorConfig(h, x, sigma2=mode), kernel).rho_hat
        series[f"seed{s}"] = (x, vals)
    series["truth"] = (x, true_density(model, x))
    return series


def profile_series(model: LevyModel, n: int, delta: float, seeds: Iterable[int],
                   selection: SelectionConfig = SelectionConfig(), x_grid=None,
                   sigma2: Sigma2Mode | None = None, kernel: KernelSpec = DEFAULT_KERNEL) -> dict:
    """Adjacent-distance profiles (h_j, d_j) for several samples."""
    x = interval_grid(default_intervals(model)) if x_grid is None else np.asarray(x_grid, float)
    mode = sigma2 if sigma2 is not None else default_sigma2(model)
    cfg = EstimatorConfig(1.0, x, sigma2=mode)
    series = {}
    for s in seeds:
        sample = simulate_increments(model, n, delta, stream_rngs(s, 0, 0)["simulate"])
        prof = distance_profile(sample, selection.candidates(delta), cfg, kernel)
        series[f"seed{s}"] = (np.array([p[0] for p in prof]), np.array([p[1] for p in prof]))
    return series


def band_series(band: ConfidenceBand, truth=None) -> dict:
    out = {"rho_hat": (band.x, band.rho_hat), "lower": (band.x, band.lower),
           "upper": (band.x, band.upper)}
    if truth is not None:
        out["truth"] = (band.x, np.asarray(truth, dtype=float))
    return out


def single_band(model: LevyModel, n: int, delta: float, h: float | None, tau: float,
                seed: int, method: str = "mb", B: int = 500,
                sigma2: Sigma2Mode | None = None, kernel: KernelSpec = DEFAULT_KERNEL,
                intervals=None, n_u: int = DEFAULT_N_U,
                selection: SelectionConfig = SelectionConfig()):
    """One simulated sample with its band; h=None runs the selection rule."""
    cfg = ExperimentConfig(model, ((n, delta),), intervals, (tau,), (method,), B, 1, h,
                           sigma2=sigma2, kernel=kernel, selection=selection, n_u=n_u, seed=seed)
    rngs = stream_rngs(seed, 0, 0)
    sample = simulate_increments(model, n, delta, rngs["simulate"])
    h_used = _choose_h(cfg, sample)
    res = compute_band(sample, cfg.estimator_config(h_used), kernel, B, (method,), rngs)
    return res.band(tau, method), res, sample


__all__ = [
    "ExperimentConfig", "CoverageReport", "CoverageRow", "RepetitionOutcome", "REPORT_COLUMNS",
    "STREAMS", "stream_rngs", "worker_count", "parse_config_text", "load_config",
    "run_repetition", "run_coverage_experiment", "aggregate", "mean_width",
    "emit_figure_data", "overlay_series", "profile_series", "band_series", "single_band",
    "FIGURE_KINDS",
]
