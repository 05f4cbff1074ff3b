"""Monte Carlo verification harness for the distributional claims.

Replications are generated from per-index PCG64 streams derived from
(master_seed, replication), so a report is bit-identical no matter how many
worker processes share the replication range.  Estimation error is always
centered at the across-replication mean, never at the truth, so bias never
masquerades as variance.

The bias-rate check measures the norm of (Monte Carlo mean - truth) on an
h grid; it subtracts the estimated Monte Carlo noise floor from the squared
norm and fits the log-log slope by inverse-variance weighted least squares,
reporting per-point noise bars so a noise-dominated point is visible instead
of silently corrupting the slope.  It runs the uncentered unbiased-divisor
estimator on these mean-zero processes, which makes every lag estimate
exactly unbiased and isolates the kernel-weighting bias being measured.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolationError, KernelSpecError
from .estimator import (
    Bandwidth,
    BandwidthSelection,
    CurveSample,
    estimate_lrcov,
    plugin_bandwidth,
)
from .fpca import (
    align_sign,
    eigendecompose,
    eigenfunction_deviation_msd,
    eigenvalue_clt_params,
)
from .grid import Curve, Grid, Surface
from .kernels import KernelSpec, kernel_value, make_kernel
from .normal import normal_cdf
from .simulate import DgpSpec, TruthSet, generate, replication_rng, truth

__all__ = [
    "BandwidthRule",
    "ExperimentSpec",
    "ProjectionStats",
    "EigenLevelStats",
    "McReport",
    "BiasRatePoint",
    "BiasRateReport",
    "run_experiment",
    "predicted_projection_variance",
    "bias_rate_check",
    "mse_curve",
    "ks_distance",
    "sample_moments",
]

WORKER_ENV_VAR = "LRCOV_THREADS"


@dataclass(frozen=True)
class BandwidthRule:
    """How an experiment turns a sample into a bandwidth.

    ``fixed``: always ``value``.  ``power``: coef * N^power.  ``plugin``: the
    data-driven rule, with pilot bandwidth N^(1/(1+2q)) unless overridden.
    """

    kind: str
    value: float = math.nan
    coef: float = 1.0
    power: float = math.nan
    pilot_h: float | None = None
    m_trunc: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "fixed":
            if not (math.isfinite(self.value) and self.value > 0):
                raise ConfigError(f"fixed bandwidth must be positive, got {self.value}")
        elif self.kind == "power":
            if not (math.isfinite(self.coef) and self.coef > 0):
                raise ConfigError(f"power-rule coefficient must be positive, got {self.coef}")
            if not (math.isfinite(self.power) and 0 < self.power < 1):
                raise ConfigError(f"power-rule exponent must lie in (0, 1), got {self.power}")
        elif self.kind != "plugin":
            raise ConfigError(f"unknown bandwidth rule kind {self.kind!r}")

    @staticmethod
    def parse(text) -> "BandwidthRule":
        """Accepts a bare number, 'fixed:H', 'power:COEF,EXP', or 'plugin[:PILOT]'."""
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            return BandwidthRule("fixed", value=float(text))
        if not isinstance(text, str):
            raise ConfigError(f"cannot parse bandwidth rule from {text!r}")
        s = text.strip()
        try:
            return BandwidthRule("fixed", value=float(s))
        except ValueError:
            pass
        kind, _, rest = s.partition(":")
        kind = kind.strip().lower()
        try:
            if kind == "fixed":
                return BandwidthRule("fixed", value=float(rest))
            if kind == "power":
                coef_s, _, power_s = rest.partition(",")
                return BandwidthRule("power", coef=float(coef_s), power=float(power_s))
            if kind == "plugin":
                pilot = float(rest) if rest else None
                return BandwidthRule("plugin", pilot_h=pilot)
        except ValueError as exc:
            raise ConfigError(f"cannot parse bandwidth rule {text!r}: {exc}") from None
        raise ConfigError(f"unknown bandwidth rule {text!r}")

    def resolve(
        self, sample: CurveSample, kernel: KernelSpec
    ) -> tuple[Bandwidth, BandwidthSelection | None]:
        if self.kind == "fixed":
            return Bandwidth(self.value), None
        if self.kind == "power":
            return Bandwidth(self.coef * float(sample.n_obs) ** self.power), None
        q = kernel.char_exponent
        if not math.isfinite(q):
            raise KernelSpecError(f"{kernel.name} has no plug-in bandwidth rule")
        pilot = self.pilot_h
        if pilot is None:
            pilot = float(sample.n_obs) ** (1.0 / (1.0 + 2.0 * q))
        sel = plugin_bandwidth(sample, kernel, pilot, self.m_trunc)
        return sel.bandwidth, sel


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """One Monte Carlo experiment: process, estimator settings, and what to record."""

    dgp: DgpSpec
    kernel: KernelSpec
    n_obs: int
    grid: Grid
    h_rule: BandwidthRule
    replications: int
    projections: tuple = ()  # Surfaces to integrate the centered error against
    eigen_levels: tuple = ()  # 1-based eigenvalue levels to track
    master_seed: int = 0
    workers: int = 1
    drift: float | None = None  # None: use N/h^(1+2q)

    def __post_init__(self) -> None:
        if self.n_obs < 2:
            raise ConfigError(f"need n_obs >= 2, got {self.n_obs}")
        if self.replications < 2:
            raise ConfigError(f"need at least 2 replications, got {self.replications}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        for f in self.projections:
            if f.grid.n_points != self.grid.n_points:
                raise ConfigError("projection surface grid does not match experiment grid")
        levels = tuple(int(l) for l in self.eigen_levels)
        if any(l < 1 for l in levels):
            raise ConfigError(f"eigen levels are 1-based, got {levels}")
        object.__setattr__(self, "projections", tuple(self.projections))
        object.__setattr__(self, "eigen_levels", levels)

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentSpec":
        if not isinstance(raw, dict):
            raise ConfigError(f"experiment spec must be an object, got {type(raw).__name__}")
        allowed = {
            "dgp", "kernel", "flat_width", "n_obs", "grid_points", "h",
            "replications", "projections", "eigen_levels", "master_seed",
            "workers", "drift",
        }
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        for key in ("dgp", "kernel", "n_obs", "grid_points", "h", "replications"):
            if key not in raw:
                raise ConfigError(f"experiment spec requires {key!r}")
        try:
            kernel = make_kernel(raw["kernel"], raw.get("flat_width", 0.5))
        except KernelSpecError as exc:
            raise ConfigError(str(exc)) from None
        grid = Grid(int(raw["grid_points"]))
        projections = []
        for p in raw.get("projections", ["ones"]):
            if p == "ones":
                projections.append(Surface(grid, np.ones((grid.n_points,) * 2)))
            else:
                projections.append(Surface(grid, np.asarray(p, dtype=float)))
        return ExperimentSpec(
            dgp=DgpSpec.from_dict(raw["dgp"]),
            kernel=kernel,
            n_obs=int(raw["n_obs"]),
            grid=grid,
            h_rule=BandwidthRule.parse(raw["h"]),
            replications=int(raw["replications"]),
            projections=tuple(projections),
            eigen_levels=tuple(raw.get("eigen_levels", ())),
            master_seed=int(raw.get("master_seed", 0)),
            workers=int(raw.get("workers", 1)),
            drift=raw.get("drift"),
        )


@dataclass(frozen=True)
class ProjectionStats:
    index: int
    mean: float
    variance: float
    skewness: float
    ex_kurtosis: float
    ks_distance: float
    predicted_variance: float


@dataclass(frozen=True)
class EigenLevelStats:
    level: int
    error_mean: float
    error_sd: float
    predicted_sd: float
    predicted_mean_shift: float
    deviation_mean: float
    predicted_deviation: float
    deviation_tail_bound: float


@dataclass(frozen=True, eq=False)
class McReport:
    replications: int
    workers: int
    runtime_seconds: float
    h_mean: float
    h_min: float
    h_max: float
    projection_stats: tuple
    eigen_stats: tuple
    eigen_error_correlation: np.ndarray | None
    # raw per-replication draws, for quantile plots; not serialized
    projection_samples: np.ndarray = None
    eigen_error_samples: np.ndarray = None

    def to_dict(self) -> dict:
        corr = None
        if self.eigen_error_correlation is not None:
            corr = [[float(v) for v in row] for row in self.eigen_error_correlation]
        return {
            "replications": int(self.replications),
            "workers": int(self.workers),
            "runtime_seconds": float(self.runtime_seconds),
            "h": {"mean": float(self.h_mean), "min": float(self.h_min), "max": float(self.h_max)},
            "projections": [
                {
                    "index": int(p.index),
                    "mean": float(p.mean),
                    "variance": float(p.variance),
                    "skewness": float(p.skewness),
                    "ex_kurtosis": float(p.ex_kurtosis),
                    "ks_distance": float(p.ks_distance),
                    "predicted_variance": float(p.predicted_variance),
                }
                for p in self.projection_stats
            ],
            "eigen_levels": [
                {
                    "level": int(e.level),
                    "error_mean": float(e.error_mean),
                    "error_sd": float(e.error_sd),
                    "predicted_sd": float(e.predicted_sd),
                    "predicted_mean_shift": float(e.predicted_mean_shift),
                    "deviation_mean": float(e.deviation_mean),
                    "predicted_deviation": float(e.predicted_deviation),
                    "deviation_tail_bound": float(e.deviation_tail_bound),
                }
                for e in self.eigen_stats
            ],
            "eigen_error_correlation": corr,
        }


def sample_moments(values: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, variance (ddof=1), skewness, excess kurtosis."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n < 2:
        raise ContractViolationError("need at least two values for moments")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d**2))
    if m2 == 0.0:
        raise ContractViolationError("degenerate sample: zero variance")
    skew = float(np.mean(d**3)) / m2**1.5
    kurt = float(np.mean(d**4)) / m2**2 - 3.0
    var = float(np.var(x, ddof=1))
    return mean, var, skew, kurt


def ks_distance(values: np.ndarray, loc: float | None = None, scale: float | None = None) -> float:
    """Kolmogorov-Smirnov distance to a normal law (fitted by moments if not given)."""
    x = np.sort(np.asarray(values, dtype=float))
    n = len(x)
    if n < 8:
        raise ContractViolationError(f"need at least 8 values for a distribution distance, got {n}")
    if loc is None:
        loc = float(np.mean(x))
    if scale is None:
        scale = float(np.std(x, ddof=1))
    if not (scale > 0 and math.isfinite(scale)):
        raise ContractViolationError("degenerate sample: zero or non-finite scale")
    f = normal_cdf((x - loc) / scale)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def predicted_projection_variance(c: Surface, kernel: KernelSpec, f: Surface) -> float:
    """Limiting variance of the scaled estimation error integrated against ``f``.

    Contracts the limiting covariance tensor with f on both sides using two
    matrix products; the dense four-index tensor is never formed.
    """
    if c.grid.n_points != f.grid.n_points:
        raise ContractViolationError("surface grids do not match")
    g = c.grid.n_points
    cv, fv = c.values, f.values
    first = (float(np.sum(cv * fv)) / g**2) ** 2
    second = float(np.sum((cv @ fv @ cv) * fv)) / g**4
    return kernel.square_integral * (first + second)


def _effective_workers(requested: int, replications: int) -> int:
    cap = os.environ.get(WORKER_ENV_VAR)
    workers = requested
    if cap is not None:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{WORKER_ENV_VAR} must be an integer, got {cap!r}") from None
    return max(1, min(workers, replications))


def _replicate_range(spec: ExperimentSpec, reps: range) -> list:
    """Per-replication raw results; everything truth-dependent happens in the parent."""
    n, grid, kernel = spec.n_obs, spec.grid, spec.kernel
    n_levels = max(spec.eigen_levels) if spec.eigen_levels else 0
    out = []
    for r in reps:
        sample = generate(spec.dgp, n, grid, replication_rng(spec.master_seed, r))
        bw, _ = spec.h_rule.resolve(sample, kernel)
        est = estimate_lrcov(sample, kernel, bw)
        projs = np.array(
            [float(np.sum(est.surface.values * f.values)) for f in spec.projections]
        ) / grid.n_points**2
        lams = np.zeros(0)
        vhats = np.zeros((0, grid.n_points))
        if n_levels:
            eig = eigendecompose(est.surface)
            lams = eig.eigenvalues[:n_levels].copy()
            vhats = np.vstack([eig.eigenfunctions[k].values for k in range(n_levels)])
        out.append((r, bw.h, projs, lams, vhats))
    return out


def run_experiment(spec: ExperimentSpec) -> McReport:
    """Run the replications, center at the Monte Carlo mean, compare to theory."""
    t0 = time.perf_counter()
    workers = _effective_workers(spec.workers, spec.replications)
    chunks = [
        range(k, spec.replications, workers) for k in range(workers)
    ]
    if workers == 1:
        results = _replicate_range(spec, range(spec.replications))
    else:
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_replicate_range, [spec] * workers, chunks):
                results.extend(part)
    results.sort(key=lambda item: item[0])

    n = spec.n_obs
    h_arr = np.array([h for _, h, _, _, _ in results])
    scale = np.sqrt(n / h_arr)
    truth_set = truth(spec.dgp, spec.grid, spec.kernel)

    projection_stats = []
    a = np.vstack([p for _, _, p, _, _ in results])  # (R, n_proj)
    centered = (a - a.mean(axis=0)) * scale[:, None] if a.size else a
    if spec.projections:
        for j, f in enumerate(spec.projections):
            mean, var, skew, kurt = sample_moments(centered[:, j])
            projection_stats.append(
                ProjectionStats(
                    index=j,
                    mean=mean,
                    variance=var,
                    skewness=skew,
                    ex_kurtosis=kurt,
                    ks_distance=ks_distance(centered[:, j]),
                    predicted_variance=predicted_projection_variance(
                        truth_set.c, spec.kernel, f
                    ),
                )
            )

    eigen_stats = []
    corr = None
    errs = np.zeros((len(results), 0))
    if spec.eigen_levels:
        q = spec.kernel.char_exponent
        h_rep = float(np.mean(h_arr))
        drift = spec.drift
        if drift is None:
            drift = n / h_rep ** (1.0 + 2.0 * q) if math.isfinite(q) else 0.0
        errs = np.empty((len(results), len(spec.eigen_levels)))
        devs = np.empty_like(errs)


        for i, (_, h, _, lams, vhats) in enumerate(results):
            for j, level in enumerate(spec.eigen_levels):
                lam_true = float(truth_set.eigen.eigenvalues[level - 1])
                v_true = truth_set.eigen.eigenfunctions[level - 1]
                errs[i, j] = math.sqrt(n / h) * (lams[level - 1] - lam_true)
                aligned = align_sign(Curve(spec.grid, vhats[level - 1]), v_true)
                diff = aligned.values - v_true.values
                devs[i, j] = (n / h) * float(np.mean(diff**2))
        for j, level in enumerate(spec.eigen_levels):
            limit = eigenvalue_clt_params(
                truth_set.eigen, spec.kernel, truth_set.bias, drift, level
            )
            msd = eigenfunction_deviation_msd(truth_set.eigen, spec.kernel, level)
            mean, var, _, _ = sample_moments(errs[:, j])
            eigen_stats.append(
                EigenLevelStats(
                    level=level,
                    error_mean=mean,
                    error_sd=math.sqrt(var),
                    predicted_sd=limit.sd,
                    predicted_mean_shift=limit.mean_shift,
                    deviation_mean=float(np.mean(devs[:, j])),
                    predicted_deviation=msd.value,
                    deviation_tail_bound=msd.tail_bound,
                )
            )
        if len(spec.eigen_levels) > 1:
            corr = np.corrcoef(errs.T)

    return McReport(
        replications=spec.replications,
        workers=workers,
        runtime_seconds=time.perf_counter() - t0,
        h_mean=float(np.mean(h_arr)),
        h_min=float(np.min(h_arr)),
        h_max=float(np.max(h_arr)),
        projection_stats=tuple(projection_stats),
        eigen_stats=tuple(eigen_stats),
        eigen_error_correlation=corr,
        projection_samples=centered,
        eigen_error_samples=errs,
    )


@dataclass(frozen=True)
class BiasRatePoint:
    h: float
    err_raw: float
    err_debiased: float
    noise_sd: float
    signal: bool


@dataclass(frozen=True, eq=False)
class BiasRateReport:
    points: tuple
    slope: float | None
    slope_unweighted: float | None
    constant_ratio: float | None  # exp(intercept) relative to the true bias norm
    sign_agreement: bool
    no_bias_detected: bool

    def to_dict(self) -> dict:
        return {
            "points": [
                {
                    "h": float(p.h),
                    "err_raw": float(p.err_raw),
                    "err_debiased": float(p.err_debiased),
                    "noise_sd": float(p.noise_sd),
                    "signal": bool(p.signal),
                }
                for p in self.points
            ],
            "slope": None if self.slope is None else float(self.slope),
            "slope_unweighted": None
            if self.slope_unweighted is None
            else float(self.slope_unweighted),
            "constant_ratio": None
            if self.constant_ratio is None
            else float(self.constant_ratio),
            "sign_agreement": bool(self.sign_agreement),
            "no_bias_detected": bool(self.no_bias_detected),
        }


def _wls_line(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    """Weighted least squares fit y = intercept + slope * x."""
    sw = np.sum(w)
    xb = np.sum(w * x) / sw
    yb = np.sum(w * y) / sw
    sxx = np.sum(w * (x - xb) ** 2)
    slope = float(np.sum(w * (x - xb) * (y - yb)) / sxx)
    return slope, float(yb - slope * xb)


def bias_rate_check(
    dgp: DgpSpec,
    kernel: KernelSpec,
    n_obs: int,
    h_values,
    replications: int,
    grid: Grid,
    master_seed: int = 0,
) -> BiasRateReport:
    """Measure how fast the mean estimation error shrinks as h grows.

    For each h the Monte Carlo mean surface is compared to the exact truth;
    the squared error norm is debiased by the noise floor of the mean, and the
    log-log slope across h comes from an inverse-variance weighted fit.
    """
    h_list = sorted(float(h) for h in h_values)
    if len(h_list) < 3:
        raise ContractViolationError(f"need at least 3 bandwidths, got {len(h_list)}")
    if any(h <= 0 for h in h_list):
        raise ContractViolationError("bandwidths must be positive")
    if replications < 2:
        raise ContractViolationError("need at least 2 replications")
    truth_set = truth(dgp, grid, kernel)
    if truth_set.bias is None:
        raise KernelSpecError(f"{kernel.name} has no power-law bias to measure")
    g = grid.n_points
    c_true = truth_set.c.values
    f_true = truth_set.bias.surface.values
    f_norm = math.sqrt(float(np.sum(f_true**2)) / g**2)
    max_lag = min(n_obs - 1, int(math.floor(kernel.support_radius * max(h_list))))
    weights = [
        np.array([kernel_value(kernel, i / h) for i in range(max_lag + 1)]) for h in h_list
    ]
    sums = [np.zeros((g, g)) for _ in h_list]
    sq_sums = [np.zeros((g, g)) for _ in h_list]
    for r in range(replications):
        rng = replication_rng(master_seed, r)
        y = generate(dgp, n_obs, grid, rng).values
        # uncentered, unbiased divisor: each lag surface has exact expectation
        terms = []
        for i in range(max_lag + 1):
            cross = y[: n_obs - i].T @ y[i:] / (n_obs - i)
            terms.append((cross + cross.T) / 2.0 if i == 0 else cross + cross.T)
        terms = np.array(terms)
        for k in range(len(h_list)):
            est = np.tensordot(weights[k], terms, axes=1)
            sums[k] += est
            sq_sums[k] += est**2
    points = []
    for k, h in enumerate(h_list):
        mean = sums[k] / replications
        dev = mean - c_true
        err_raw_sq = float(np.sum(dev**2)) / g**2
        var_field = (sq_sums[k] - replications * mean**2) / (replications - 1)
        noise_floor = float(np.sum(var_field)) / g**2 / replications
        err_deb_sq = err_raw_sq - noise_floor
        points.append(
            (
                h,
                math.sqrt(err_raw_sq),
                math.copysign(math.sqrt(abs(err_deb_sq)), err_deb_sq),
                math.sqrt(max(noise_floor, 0.0)),
                err_raw_sq >= 9.0 * noise_floor,
                err_deb_sq,
                noise_floor,
            )
        )
    usable = [p for p in points if p[5] > 0.0]
    slope = slope_unweighted = constant_ratio = None
    if len(usable) >= 2:
        x = np.log([p[0] for p in usable])
        y_log = 0.5 * np.log([p[5] for p in usable])
        sd_sq = np.array([4.0 * p[5] * p[6] + 2.0 * p[6] ** 2 for p in usable])
        sigma_ln = np.sqrt(sd_sq) / (2.0 * np.array([p[5] for p in usable]))
        w = 1.0 / np.maximum(sigma_ln, 1e-12) ** 2
        slope, intercept = _wls_line(x, y_log, w)
        slope_unweighted, _ = _wls_line(x, y_log, np.ones_like(w))
        constant_ratio = math.exp(intercept) / f_norm if f_norm > 0 else None
    # sign of the bias at the strongest-signal bandwidth
    mean_dev = sums[0] / replications - c_true
    sign_agreement = float(np.sum(mean_dev * f_true)) > 0.0
    report_points = tuple(
        BiasRatePoint(h=p[0], err_raw=p[1], err_debiased=p[2], noise_sd=p[3], signal=p[4])
        for p in points
    )
    return BiasRateReport(
        points=report_points,
        slope=slope,
        slope_unweighted=slope_unweighted,
        constant_ratio=constant_ratio,
        sign_agreement=sign_agreement,
        no_bias_detected=not any(p.signal for p in report_points),
    )


def mse_curve(
    dgp: DgpSpec,
    kernel: KernelSpec,
    n_obs: int,
    h_values,
    replications: int,
    grid: Grid,
    master_seed: int = 0,
) -> list:
    """Monte Carlo mean squared error norm of the estimate at each bandwidth.

    One sample per replication is shared across the whole h grid (the lag
    surfaces are computed once and reweighted), so the curve is smooth in h
    and ratios between grid points are stable.
    """
    h_list = [float(h) for h in h_values]
    if any(h <= 0 for h in h_list):
        raise ContractViolationError("bandwidths must be positive")
    truth_set = truth(dgp, grid, kernel)
    g = grid.n_points
    c_true = truth_set.c.values
    max_lag = min(n_obs - 1, int(math.floor(kernel.support_radius * max(h_list))))
    weights = [
        np.array([kernel_value(kernel, i / h) for i in range(max_lag + 1)]) for h in h_list
    ]
    acc = np.zeros(len(h_list))
    for r in range(replications):
        rng = replication_rng(master_seed, r)
        y = generate(dgp, n_obs, grid, rng).values
        y = y - y.mean(axis=0)
        terms = []
        for i in range(max_lag + 1):
            cross = y[: n_obs - i].T @ y[i:] / n_obs
            terms.append((cross + cross.T) / 2.0 if i == 0 else cross + cross.T)
        terms = np.array(terms)
        for k in range(len(h_list)):
            dev = np.tensordot(weights[k], terms, axes=1) - c_true
            acc[k] += float(np.sum(dev**2)) / g**2
    return [(h, float(acc[k] / replications)) for k, h in enumerate(h_list)]
