"""Spectral decomposition of covariance surfaces and eigen-inference limits.

Discretization convention: a surface S acts as the integral operator with the
midpoint rule, so the matrix actually decomposed is S/G; matrix eigenvectors
are rescaled by sqrt(G) to make the returned eigenfunctions unit-norm under
the same quadrature.  Inference refuses to touch eigenvalues whose spacing
falls below a relative separation floor instead of returning garbage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractViolationError, DimensionError, SeparationError
from .estimator import Bandwidth, BandwidthLike, BiasKernel
from .grid import Curve, Grid, Surface, inner_product
from .kernels import KernelSpec
from .normal import normal_quantile

__all__ = [
    "SEPARATION_RTOL",
    "EigenSystem",
    "EigenvalueLimit",
    "DeviationMsd",
    "ConfidenceInterval",
    "eigendecompose",
    "align_sign",
    "eigenvalue_clt_params",
    "eigenfunction_deviation_msd",
    "eigenvalue_ci",
]

# Smallest eigenvalue gap, relative to the leading eigenvalue, that level-wise
# inference will accept.
SEPARATION_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues (descending) and unit-norm eigenfunctions of a symmetric surface."""

    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: tuple
    source: Surface | None = None

    def __post_init__(self) -> None:
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or len(lam) != len(self.eigenfunctions):
            raise DimensionError("eigenvalue/eigenfunction count mismatch")
        if np.any(np.diff(lam) > 1e-12 * max(1.0, float(np.max(np.abs(lam), initial=0.0)))):
            raise ContractViolationError("eigenvalues must be sorted in descending order")
        for f in self.eigenfunctions:
            if f.grid.n_points != self.grid.n_points:
                raise DimensionError("eigenfunction grid mismatch")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenfunctions", tuple(self.eigenfunctions))

    @property
    def count(self) -> int:
        return len(self.eigenvalues)


class EigenvalueLimit(NamedTuple):
    """Limiting distribution parameters of a scaled eigenvalue error."""

    sd: float
    mean_shift: float


class DeviationMsd(NamedTuple):
    """Limiting mean squared eigenfunction deviation plus truncation remainder."""

    value: float
    tail_bound: float


class ConfidenceInterval(NamedTuple):
    lower: float
    upper: float


def eigendecompose(s: Surface) -> EigenSystem:
    """Eigendecompose a symmetric surface as a midpoint-rule integral operator.

    Eigenfunction signs are fixed by making each one's largest-magnitude
    coordinate positive, so the decomposition is deterministic.
    """
    if not s.is_symmetric():
        raise ContractViolationError("eigendecomposition requires a symmetric surface")
    g = s.grid.n_points
    sym = 0.5 * (s.values + s.values.T)
    w, v = np.linalg.eigh(sym / g)
    order = np.argsort(w)[::-1]
    w = w[order]
    v = v[:, order] * math.sqrt(g)
    funcs = []
    for k in range(g):
        col = v[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            col = -col
        funcs.append(Curve(s.grid, col))
    return EigenSystem(s.grid, w, tuple(funcs), source=s)


def align_sign(estimate: Curve, reference: Curve) -> Curve:
    """Flip ``estimate`` so it correlates non-negatively with ``reference``.

    An exactly orthogonal pair (inner product zero) is left unflipped.
    """
    s = -1.0 if inner_product(estimate, reference) < 0.0 else 1.0
    return Curve(estimate.grid, s * estimate.values)


def _require_separation(eigenvalues: np.ndarray, level: int) -> None:
    if not 1 <= level <= len(eigenvalues):
        raise ContractViolationError(f"eigenvalue level {level} outside 1..{len(eigenvalues)}")
    tol = SEPARATION_RTOL * max(abs(float(eigenvalues[0])), 1e-300)
    for k in range(level):
        here = float(eigenvalues[k])
        below = float(eigenvalues[k + 1]) if k + 1 < len(eigenvalues) else 0.0
        if here - below < tol:
            raise SeparationError(
                f"eigenvalues {k + 1} and {k + 2} separated by {here - below:.3g} "
                f"(< {tol:.3g}); level-{level} inference refused"
            )


def eigenvalue_clt_params(
    truth: EigenSystem,
    kernel: KernelSpec,
    bias: BiasKernel | None,
    drift: float,
    level: int,
) -> EigenvalueLimit:
    """Limit parameters for the scaled error of the level-th eigenvalue.

    ``drift`` is the limit of N/h^(1+2q); the limiting mean is drift times the
    bias surface contracted against the level's eigenfunction on both sides.
    """
    _require_separation(truth.eigenvalues, level)
    lam = float(truth.eigenvalues[level - 1])
    sd = lam * math.sqrt(2.0 * kernel.square_integral)
    mean_shift = 0.0
    if bias is not None and drift != 0.0:
        v = truth.eigenfunctions[level - 1].values
        g = truth.grid.n_points
        mean_shift = drift * float(v @ bias.surface.values @ v) / g**2
    return EigenvalueLimit(sd, mean_shift)


def eigenfunction_deviation_msd(
    truth: EigenSystem,
    kernel: KernelSpec,
    level: int,
    k_terms: int | None = None,
) -> DeviationMsd:
    """Limiting mean of the scaled squared deviation of a sign-aligned eigenfunction.

    Sums lambda_k / (lambda_level - lambda_k)^2 over the other levels up to
    ``k_terms`` (default: every available level); whatever is left of the
    available spectrum goes into the reported tail bound.  Scale-invariant in
    the spectrum: the level prefactor cancels the degree -1 of the sum.
    """
    lam = truth.eigenvalues
    if k_terms is None:
        k_terms = len(lam)
    if not 1 <= level <= len(lam):
        raise ContractViolationError(f"eigenvalue level {level} outside 1..{len(lam)}")
    if k_terms < level:
        raise ContractViolationError(f"k_terms = {k_terms} must cover the level {level}")
    _require_separation(lam, level)
    lam_l = float(lam[level - 1])
    tol = SEPARATION_RTOL * max(abs(float(lam[0])), 1e-300)
    head = 0.0
    tail = 0.0
    for k in range(len(lam)):
        if k == level - 1:
            continue
        gap = lam_l - float(lam[k])
        if k < k_terms and abs(gap) < tol:
            raise SeparationError(
                f"eigenvalues {level} and {k + 1} nearly coincide; deviation limit undefined"
            )
        term = float(lam[k]) / gap**2 if abs(gap) >= tol else 0.0
        if k < k_terms:
            head += term
        else:
            tail += term
    factor = lam_l * kernel.square_integral
    return DeviationMsd(factor * head, factor * tail)


def eigenvalue_ci(
    eigen: EigenSystem,
    kernel: KernelSpec,
    n_obs: int,
    bandwidth: BandwidthLike,
    level: int,
    conf: float = 0.95,
) -> ConfidenceInterval:
    """Two-sided interval for one eigenvalue of the long-run surface.

    Width scales as sqrt(h/N) times the estimated eigenvalue; refused when the
    estimate is not positive or the spectrum is insufficiently separated.
    """
    if not 0.0 < conf < 1.0:
        raise ContractViolationError(f"confidence level must lie in (0, 1), got {conf}")
    if n_obs < 2:
        raise ContractViolationError(f"need n_obs >= 2, got {n_obs}")
    h = bandwidth.h if isinstance(bandwidth, Bandwidth) else float(bandwidth)
    if not (math.isfinite(h) and h > 0):
        raise ContractViolationError(f"bandwidth must be positive and finite, got {h}")
    _require_separation(eigen.eigenvalues, level)
    lam = float(eigen.eigenvalues[level - 1])
    if lam <= 0.0:
        raise ContractViolationError(
            f"eigenvalue {level} is {lam:.3g} <= 0; interval undefined (project to PSD first?)"
        )
    z = normal_quantile(0.5 * (1.0 + conf))
    half = z * math.sqrt(h / n_obs) * lam * math.sqrt(2.0 * kernel.square_integral)
    return ConfidenceInterval(lam - half, lam + half)
