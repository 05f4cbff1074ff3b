"""Kernel lag-window estimation of the long-run covariance kernel.

The central object is the weighted sum over lags of empirical autocovariance
surfaces, with weights K(i/h) from a lag-window kernel.  Around it sit the
spectral-density variant, the asymptotic bias/variance formulas, bandwidth
selection, and the PSD projection used before spectral decompositions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Union

import numpy as np

from .errors import ContractViolationError, DimensionError, KernelSpecError
from .grid import Grid, Quartic, Surface, l2_norm_surface, surface_integral
from .kernels import KernelSpec, kernel_value

__all__ = [
    "CurveSample",
    "Bandwidth",
    "AutocovSet",
    "LrcovEstimate",
    "SpectralDensityEstimate",
    "BiasKernel",
    "BandwidthSelection",
    "autocov",
    "compute_autocov_set",
    "estimate_lrcov",
    "estimate_lrcov_naive",
    "estimate_spectral_density",
    "bias_kernel",
    "asymptotic_covariance_L",
    "gamma1_norm_sq",
    "amse",
    "optimal_bandwidth",
    "plugin_bandwidth",
    "project_psd",
]


@dataclass(frozen=True, eq=False)
class CurveSample:
    """N observed curves over a common grid, one row per time point."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.grid.n_points:
            raise DimensionError(f"sample must be (N, {self.grid.n_points}), got {arr.shape}")
        if arr.shape[0] < 2:
            raise ContractViolationError("need at least two observed curves")
        if not np.all(np.isfinite(arr)):
            raise DimensionError("sample contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Bandwidth:
    """Smoothing bandwidth; the number of lags entering the window scales with h."""

    h: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and self.h > 0):
            raise ContractViolationError(f"bandwidth must be positive and finite, got {self.h}")
        object.__setattr__(self, "h", float(self.h))


BandwidthLike = Union[Bandwidth, float, int]


def _as_h(bandwidth: BandwidthLike) -> float:
    h = bandwidth.h if isinstance(bandwidth, Bandwidth) else float(bandwidth)
    if not (math.isfinite(h) and h > 0):
        raise ContractViolationError(f"bandwidth must be positive and finite, got {h}")
    if h < 1.0:
        warnings.warn(f"bandwidth {h} < 1 keeps only the lag-0 term", stacklevel=3)
    return h


@dataclass(frozen=True, eq=False)
class AutocovSet:
    """Autocovariance surfaces for lags 0..max_lag; negative lags by transposition."""

    grid: Grid
    surfaces: tuple  # Surface for lag 0, 1, ..., max_lag
    n_obs: int
    centered: bool
    unbiased: bool

    @property
    def max_lag(self) -> int:
        return len(self.surfaces) - 1

    def surface(self, lag: int) -> Surface:
        a = abs(int(lag))
        if a >= self.n_obs:
            return Surface(self.grid, np.zeros((self.grid.n_points,) * 2))
        if a > self.max_lag:
            raise ContractViolationError(f"lag {lag} beyond stored range {self.max_lag}")
        s = self.surfaces[a]
        return s if lag >= 0 else s.transpose()


@dataclass(frozen=True, eq=False)
class LrcovEstimate:
    surface: Surface
    kernel: KernelSpec
    bandwidth: Bandwidth
    n_obs: int
    psd_projected: bool = False


@dataclass(frozen=True, eq=False)
class SpectralDensityEstimate:
    omega: float
    real_part: Surface
    imag_part: Surface


@dataclass(frozen=True, eq=False)
class BiasKernel:
    """Lag-weighted autocovariance sum entering the leading bias term."""

    surface: Surface
    char_exponent: float
    max_lag: int


@dataclass(frozen=True)
class BandwidthSelection:
    """Result of a bandwidth rule, with the diagnostics the rule exposes."""

    bandwidth: Bandwidth
    c0: float
    fallback: bool
    f_norm: float
    c_integral: float
    clamped: bool = False
    pilot_h: float | None = None
    m_trunc: int | None = None


def _observation_matrix(sample: CurveSample, centered: bool) -> np.ndarray:
    y = sample.values
    return y - y.mean(axis=0) if centered else y


def _divisor(n: int, lag: int, unbiased: bool) -> float:
    return float(n - lag) if unbiased else float(n)


def _window_lags(kernel: KernelSpec, h: float, n: int) -> int:
    return min(n - 1, int(math.floor(kernel.support_radius * h)))


def autocov(sample: CurveSample, lag: int, centered: bool = True, unbiased: bool = False) -> Surface:
    """Empirical autocovariance surface at a single lag.

    Entry (t, s) pairs the earlier curve at t with the later curve at s, so
    reversing the lag sign transposes the surface.  Lags at or beyond the
    sample length return the zero surface.
    """
    n = sample.n_obs
    a = abs(int(lag))
    if a >= n:
        return Surface(sample.grid, np.zeros((sample.grid.n_points,) * 2))
    y = _observation_matrix(sample, centered)
    cross = y[: n - a].T @ y[a:] / _divisor(n, a, unbiased)
    if lag < 0:
        cross = cross.T
    return Surface(sample.grid, cross)


def compute_autocov_set(
    sample: CurveSample, max_lag: int, centered: bool = True, unbiased: bool = False
) -> AutocovSet:
    if not 0 <= max_lag < sample.n_obs:
        raise ContractViolationError(f"max_lag must lie in [0, N), got {max_lag}")
    surfaces = tuple(autocov(sample, i, centered, unbiased) for i in range(max_lag + 1))
    return AutocovSet(sample.grid, surfaces, sample.n_obs, centered, unbiased)


def estimate_lrcov(
    sample: CurveSample,
    kernel: KernelSpec,
    bandwidth: BandwidthLike,
    unbiased: bool = False,
    centered: bool = True,
) -> LrcovEstimate:
    """Lag-window estimate of the long-run covariance surface.

    Accumulates K(i/h)-weighted autocovariances lag by lag; each lag costs one
    G x (N-i) by (N-i) x G product, and opposite lags enter as mutual
    transposes, so the result is exactly symmetric.
    """
    h = _as_h(bandwidth)
    n = sample.n_obs
    q = kernel.char_exponent
    if math.isfinite(q) and h**q > n:
        warnings.warn(
            f"h^{q:g} = {h**q:.3g} exceeds N = {n}; the leading bias approximation degrades",
            stacklevel=2,
        )
    y = _observation_matrix(sample, centered)
    lag0 = y.T @ y
    acc = (lag0 + lag0.T) / (2.0 * _divisor(n, 0, unbiased))
    for i in range(1, _window_lags(kernel, h, n) + 1):
        w = kernel_value(kernel, i / h)
        if w == 0.0:
            continue
        cross = y[: n - i].T @ y[i:]
        acc += (w / _divisor(n, i, unbiased)) * (cross + cross.T)
    return LrcovEstimate(Surface(sample.grid, acc), kernel, Bandwidth(h), n)


def estimate_lrcov_naive(
    sample: CurveSample,
    kernel: KernelSpec,
    bandwidth: BandwidthLike,
    unbiased: bool = False,
    centered: bool = True,
) -> LrcovEstimate:
    """Reference implementation: explicit sum over every lag and time index.

    Quadratic in N; kept as the oracle the fast accumulation is tested against.
    """
    h = _as_h(bandwidth)
    n = sample.n_obs
    g = sample.grid.n_points
    y = _observation_matrix(sample, centered)
    total = np.zeros((g, g))
    for lag in range(-(n - 1), n):
        w = kernel_value(kernel, lag / h)
        gam = np.zeros((g, g))
        if lag >= 0:
            for j in range(n - lag):
                gam += np.outer(y[j], y[j + lag])
        else:
            for j in range(-lag, n):
                gam += np.outer(y[j], y[j + lag])
        total += w * gam / _divisor(n, abs(lag), unbiased)
    return LrcovEstimate(Surface(sample.grid, total), kernel, Bandwidth(h), n)


def estimate_spectral_density(
    sample: CurveSample,
    kernel: KernelSpec,
    bandwidth: BandwidthLike,
    omega: float,
    unbiased: bool = False,
    centered: bool = True,
) -> SpectralDensityEstimate:
    """Smoothed spectral density surface at a single frequency.

    Real part weights lags by cos(omega i), imaginary part by -sin(omega i);
    at omega = 0 the real part is the long-run estimate divided by 2 pi.
    """
    omega = float(omega)
    if not 0.0 <= omega < 2.0 * math.pi:
        raise ContractViolationError(f"frequency must lie in [0, 2*pi), got {omega}")
    h = _as_h(bandwidth)
    n = sample.n_obs
    y = _observation_matrix(sample, centered)
    lag0 = y.T @ y
    real = (lag0 + lag0.T) / (2.0 * _divisor(n, 0, unbiased))
    imag = np.zeros_like(real)
    for i in range(1, _window_lags(kernel, h, n) + 1):
        w = kernel_value(kernel, i / h)
        if w == 0.0:
            continue
        cross = y[: n - i].T @ y[i:] / _divisor(n, i, unbiased)
        real += w * math.cos(omega * i) * (cross + cross.T)
        imag -= w * math.sin(omega * i) * (cross - cross.T)
    two_pi = 2.0 * math.pi
    return SpectralDensityEstimate(
        omega, Surface(sample.grid, real / two_pi), Surface(sample.grid, imag / two_pi)
    )


GammaSource = Union[AutocovSet, Mapping[int, Surface]]


def _gamma_at(gammas: GammaSource, lag: int) -> Surface | None:
    if isinstance(gammas, AutocovSet):
        return gammas.surface(lag)
    got = gammas.get(lag)
    if got is None:
        got = gammas.get(-lag)
        got = got.transpose() if got is not None else None
    return got


def bias_kernel(gammas: GammaSource, kernel: KernelSpec, max_lag: int) -> BiasKernel:
    """Leading-bias surface: flatness coefficient times |lag|^q-weighted autocovariances.

    ``gammas`` is either an AutocovSet or a mapping lag -> surface (and lags
    absent from a mapping count as zero, which is exact for finite-order
    truths).  Refused for the flat-top kernel, whose bias decays faster than
    any power.
    """
    q = kernel.char_exponent
    if not math.isfinite(q):
        raise KernelSpecError(f"{kernel.name} admits no power-law bias expansion")
    if max_lag < 0:
        raise ContractViolationError(f"max_lag must be >= 0, got {max_lag}")
    if isinstance(gammas, AutocovSet):
        grid = gammas.grid
    else:
        try:
            grid = next(iter(gammas.values())).grid
        except StopIteration:
            raise ContractViolationError("empty autocovariance mapping") from None
    g = grid.n_points
    acc = np.zeros((g, g))
    for lag in range(1, max_lag + 1):
        gam = _gamma_at(gammas, lag)
        if gam is None:
            continue
        acc += float(lag) ** q * (gam.values + gam.values.T)
    return BiasKernel(Surface(grid, kernel.char_coefficient * acc), q, max_lag)


def asymptotic_covariance_L(c: Surface, kernel: KernelSpec) -> Quartic:
    """Dense limiting covariance tensor of the scaled estimation error.

    Materializes G^4 entries, so it is refused beyond G = 64; the harness
    contracts the same quantity against test functions without ever building it.
    """
    g = c.grid.n_points
    if g > 64:
        raise ContractViolationError(f"refusing to materialize a {g}^4 tensor; contract it instead")
    v = c.values
    tensor = np.einsum("ts,uv->tsuv", v, v) + np.einsum("tu,sv->tsuv", v, v)
    return Quartic(c.grid, kernel.square_integral * tensor)


def gamma1_norm_sq(c: Surface, kernel: KernelSpec) -> float:
    """Variance constant of the estimate integrated against the unit surface."""
    return 2.0 * surface_integral(c) ** 2 * kernel.square_integral


def amse(
    c: Surface, bias: BiasKernel, kernel: KernelSpec, bandwidth: BandwidthLike, n_obs: int
) -> float:
    """Asymptotic mean squared error proxy: variance term plus squared bias term."""
    q = kernel.char_exponent
    if not math.isfinite(q):
        raise KernelSpecError(f"{kernel.name} admits no power-law AMSE")
    if bias.char_exponent != q:
        raise ContractViolationError(
            f"bias surface built for exponent {bias.char_exponent}, kernel has {q}"
        )
    if n_obs < 2:
        raise ContractViolationError(f"need n_obs >= 2, got {n_obs}")
    h = bandwidth.h if isinstance(bandwidth, Bandwidth) else float(bandwidth)
    if not (math.isfinite(h) and h > 0):
        raise ContractViolationError(f"bandwidth must be positive and finite, got {h}")
    return (h / n_obs) * gamma1_norm_sq(c, kernel) + h ** (-2.0 * q) * l2_norm_surface(bias.surface) ** 2


def optimal_bandwidth(
    c: Surface, bias: BiasKernel, kernel: KernelSpec, n_obs: int
) -> BandwidthSelection:
    """Closed-form minimizer of the AMSE proxy in h.

    Falls back to the rate-only rule h = N^(1/(1+2q)) (flagged) when the bias
    surface vanishes or the variance constant is degenerate.
    """
    q = kernel.char_exponent
    if not math.isfinite(q):
        raise KernelSpecError(f"{kernel.name} admits no power-law bandwidth rule")
    if bias.char_exponent != q:
        raise ContractViolationError(
            f"bias surface built for exponent {bias.char_exponent}, kernel has {q}"
        )
    if n_obs < 2:
        raise ContractViolationError(f"need n_obs >= 2, got {n_obs}")
    power = 1.0 / (1.0 + 2.0 * q)
    f_norm = l2_norm_surface(bias.surface)
    c_int = surface_integral(c)
    denom = c_int**2 * kernel.square_integral
    if f_norm == 0.0 or denom <= 0.0:
        warnings.warn("degenerate bias or variance constant; using rate-only bandwidth")
        return BandwidthSelection(
            Bandwidth(float(n_obs) ** power), math.nan, True, f_norm, c_int
        )
    c0 = (q * f_norm**2) ** power * denom ** (-power)
    return BandwidthSelection(Bandwidth(c0 * float(n_obs) ** power), c0, False, f_norm, c_int)


def plugin_bandwidth(
    sample: CurveSample,
    kernel: KernelSpec,
    pilot_h: BandwidthLike,
    m_trunc: int | None = None,
) -> BandwidthSelection:
    """Data-driven bandwidth: pilot estimates feed the closed-form rule.

    The pilot long-run surface and the lag-truncated bias surface are both
    estimated at ``pilot_h``; the resulting h is clamped to [1, N/2].
    ``m_trunc`` defaults to floor(pilot_h), capped at sqrt(N).
    """
    n = sample.n_obs
    ph = _as_h(pilot_h)
    if m_trunc is None:
        m_trunc = min(int(math.floor(ph)), int(math.floor(math.sqrt(n))))
    if not 0 <= m_trunc < n:
        raise ContractViolationError(f"lag truncation {m_trunc} out of range [0, N)")
    if float(np.max(np.abs(_observation_matrix(sample, True)))) == 0.0:
        raise ContractViolationError("zero-variance sample: every curve is constant over time")
    pilot = estimate_lrcov(sample, kernel, ph)
    gammas = compute_autocov_set(sample, m_trunc)
    f_hat = bias_kernel(gammas, kernel, m_trunc)
    sel = optimal_bandwidth(pilot.surface, f_hat, kernel, n)
    h = sel.bandwidth.h
    lo, hi = 1.0, n / 2.0
    clamped = not lo <= h <= hi
    h = min(max(h, lo), hi)
    return replace(
        sel, bandwidth=Bandwidth(h), clamped=clamped, pilot_h=ph, m_trunc=int(m_trunc)
    )


def project_psd(est: LrcovEstimate) -> LrcovEstimate:
    """Nearest positive-semidefinite surface in the L2 sense (eigenvalue clipping)."""
    s = est.surface
    if not s.is_symmetric():
        raise ContractViolationError("PSD projection requires a symmetric surface")
    sym = 0.5 * (s.values + s.values.T)
    w, v = np.linalg.eigh(sym)
    clipped = np.maximum(w, 0.0)
    out = (v * clipped) @ v.T
    out = 0.5 * (out + out.T)
    return replace(est, surface=Surface(s.grid, out), psd_projected=True)
