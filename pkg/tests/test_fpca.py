import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lrcov import (
    Bandwidth,
    BiasKernel,
    ContractViolationError,
    Curve,
    EigenSystem,
    Grid,
    SeparationError,
    Surface,
    align_sign,
    apply_operator,
    eigendecompose,
    eigenfunction_deviation_msd,
    eigenvalue_ci,
    eigenvalue_clt_params,
    fourier_basis,
    inner_product,
    make_kernel,
)

BARTLETT = make_kernel("bartlett")


def spectrum_surface(grid, eigenvalues):
    """Sum of lambda_r phi_r phi_r^T over the first fourier modes."""
    basis = fourier_basis(grid, len(eigenvalues))
    vals = np.zeros((grid.n_points, grid.n_points))
    for lam, phi in zip(eigenvalues, basis):
        vals += lam * np.outer(phi.values, phi.values)
    return Surface(grid, vals)


def system(eigenvalues, grid=None):
    """EigenSystem with an exact spectrum over fourier eigenfunctions."""
    g = grid or Grid(32)
    basis = fourier_basis(g, len(eigenvalues))
    return EigenSystem(g, np.asarray(eigenvalues, dtype=float), tuple(basis))


def test_eigendecompose_rank_one():
    g = Grid(64)
    phi = np.sqrt(2.0) * np.sin(2.0 * np.pi * g.points)
    es = eigendecompose(Surface(g, 2.0 * np.outer(phi, phi)))
    assert es.eigenvalues[0] == pytest.approx(2.0, rel=1e-10)
    assert np.max(np.abs(es.eigenvalues[1:])) <= 1e-10
    v = es.eigenfunctions[0].values
    sign = 1.0 if v @ phi > 0 else -1.0
    assert np.max(np.abs(sign * v - phi)) <= 1e-8


def test_eigendecompose_constant_surface():
    g = Grid(8)
    es = eigendecompose(Surface(g, np.ones((8, 8))))
    assert es.eigenvalues[0] == pytest.approx(1.0, rel=1e-12)
    assert np.max(np.abs(es.eigenvalues[1:])) <= 1e-12
    assert_allclose(np.abs(es.eigenfunctions[0].values), np.ones(8), rtol=1e-10)


def test_eigendecompose_three_mode_spectrum():
    g = Grid(64)
    es = eigendecompose(spectrum_surface(g, (3.0, 2.0, 1.0)))
    assert_allclose(es.eigenvalues[:3], [3.0, 2.0, 1.0], atol=1e-6)
    assert np.max(np.abs(es.eigenvalues[3:])) <= 1e-6


def test_eigendecompose_rejects_asymmetric():
    g = Grid(3)
    with pytest.raises(ContractViolationError):
        eigendecompose(Surface(g, np.arange(9.0).reshape(3, 3)))


def test_eigendecompose_reconstruction():
    rng = np.random.default_rng(20)
    g = Grid(12)
    m = rng.normal(size=(12, 12))
    s = Surface(g, m + m.T)
    es = eigendecompose(s)
    rebuilt = np.zeros((12, 12))
    for lam, f in zip(es.eigenvalues, es.eigenfunctions):
        rebuilt += lam * np.outer(f.values, f.values)
    scale = np.max(np.abs(s.values))
    assert np.max(np.abs(rebuilt - s.values)) <= 1e-6 * scale


def test_eigendecompose_scale_equivariance():
    rng = np.random.default_rng(21)
    g = Grid(10)
    m = rng.normal(size=(10, 10))
    s = Surface(g, m + m.T)
    base = eigendecompose(s)
    scaled = eigendecompose(Surface(g, 7.5 * s.values))
    assert_allclose(scaled.eigenvalues, 7.5 * base.eigenvalues, rtol=1e-10, atol=1e-12)


def test_eigendecompose_orthonormal():
    rng = np.random.default_rng(22)
    g = Grid(16)
    m = rng.normal(size=(16, 16))
    es = eigendecompose(Surface(g, m + m.T))
    for j in range(es.count):
        for k in range(j, es.count):
            want = 1.0 if j == k else 0.0
            ip = inner_product(es.eigenfunctions[j], es.eigenfunctions[k])
            assert abs(ip - want) <= 1e-8


def test_eigendecompose_operator_identity():
    rng = np.random.default_rng(23)
    g = Grid(16)
    m = rng.normal(size=(16, 16))
    s = Surface(g, m + m.T)
    es = eigendecompose(s)
    tol = 1e-6 * max(abs(es.eigenvalues[0]), 1.0)
    for lam, f in zip(es.eigenvalues, es.eigenfunctions):
        image = apply_operator(s, f)
        assert np.max(np.abs(image.values - lam * f.values)) <= tol


def test_eigendecompose_deterministic_sign():
    rng = np.random.default_rng(24)
    g = Grid(9)
    m = rng.normal(size=(9, 9))
    es = eigendecompose(Surface(g, m + m.T))
    for f in es.eigenfunctions:
        assert f.values[np.argmax(np.abs(f.values))] > 0


def test_align_sign():
    g = Grid(4)
    ref = Curve(g, np.array([1.0, 1.0, 1.0, 1.0]))
    flipped = align_sign(Curve(g, np.array([-1.0, -1.0, -1.0, -1.0])), ref)
    assert_allclose(flipped.values, ref.values)
    kept = align_sign(Curve(g, np.array([2.0, 0.0, 0.0, 0.0])), ref)
    assert kept.values[0] == 2.0
    # orthogonal estimate: tie broken toward no flip
    orth = align_sign(Curve(g, np.array([1.0, -1.0, 1.0, -1.0])), ref)
    assert orth.values[0] == 1.0


def test_align_sign_nonnegative_correlation():
    rng = np.random.default_rng(25)
    g = Grid(6)
    for _ in range(50):
        a = Curve(g, rng.normal(size=6))
        b = Curve(g, rng.normal(size=6))
        assert inner_product(align_sign(a, b), b) >= 0.0


def test_clt_params_no_drift_no_shift():
    es = system((3.0, 2.0, 1.0))
    out = eigenvalue_clt_params(es, BARTLETT, None, 0.7, level=1)
    assert out.mean_shift == 0.0
    f = BiasKernel(spectrum_surface(es.grid, (1.0,)), 1.0, 1)
    out = eigenvalue_clt_params(es, BARTLETT, f, 0.0, level=1)
    assert out.mean_shift == 0.0


def test_clt_params_unit_eigenvalue_sd():
    es = system((1.0, 0.5))
    out = eigenvalue_clt_params(es, BARTLETT, None, 0.0, level=1)
    assert out.sd == pytest.approx(math.sqrt(4.0 / 3.0), rel=1e-12)


def test_clt_params_sd_scales_with_eigenvalue():
    a = eigenvalue_clt_params(system((2.0, 1.0)), BARTLETT, None, 0.0, 1)
    b = eigenvalue_clt_params(system((6.0, 3.0)), BARTLETT, None, 0.0, 1)
    assert b.sd == pytest.approx(3.0 * a.sd, rel=1e-12)


def test_clt_params_shift_contracts_bias_surface():
    # when the bias surface shares the eigenfunctions, the quadratic form
    # picks out that level's coefficient exactly
    es = system((3.0, 2.0, 1.0))
    f = BiasKernel(spectrum_surface(es.grid, (3.0, 2.0, 1.0)), 1.0, 1)
    for level, lam in ((1, 3.0), (2, 2.0), (3, 1.0)):
        out = eigenvalue_clt_params(es, BARTLETT, f, 0.5, level)
        assert out.mean_shift == pytest.approx(0.5 * lam, rel=1e-10)


def test_clt_params_refuses_tied_levels():
    es = system((2.0, 2.0, 1.0))
    with pytest.raises(SeparationError):
        eigenvalue_clt_params(es, BARTLETT, None, 0.0, level=1)


def test_deviation_msd_reference_spectrum():
    # (3, 2, 1), first level: 3 * (2/3) * (2/1 + 1/4) = 4.5
    out = eigenfunction_deviation_msd(system((3.0, 2.0, 1.0)), BARTLETT, level=1)
    assert out.value == pytest.approx(4.5, rel=1e-12)
    assert out.tail_bound == 0.0


def test_deviation_msd_rank_one_is_zero():
    out = eigenfunction_deviation_msd(system((2.0, 0.0)), BARTLETT, level=1)
    assert out.value == 0.0


def test_deviation_msd_scale_invariant():
    a = eigenfunction_deviation_msd(system((3.0, 2.0, 1.0)), BARTLETT, level=1)
    b = eigenfunction_deviation_msd(system((6.0, 4.0, 2.0)), BARTLETT, level=1)
    c = eigenfunction_deviation_msd(system((6.75, 4.5, 2.25)), BARTLETT, level=1)
    assert b.value == pytest.approx(a.value, rel=1e-12)
    assert c.value == pytest.approx(a.value, rel=1e-12)


def test_deviation_msd_truncation_tail():
    es = system((3.0, 2.0, 1.0))
    full = eigenfunction_deviation_msd(es, BARTLETT, level=1)
    cut = eigenfunction_deviation_msd(es, BARTLETT, level=1, k_terms=2)
    assert cut.value == pytest.approx(4.0, rel=1e-12)
    assert cut.value + cut.tail_bound == pytest.approx(full.value, rel=1e-12)
    with pytest.raises(ContractViolationError):
        eigenfunction_deviation_msd(es, BARTLETT, level=2, k_terms=1)


def test_deviation_msd_refuses_repeated_eigenvalues():
    with pytest.raises(SeparationError):
        eigenfunction_deviation_msd(system((3.0, 2.0, 2.0)), BARTLETT, level=2)
    with pytest.raises(SeparationError):
        eigenfunction_deviation_msd(system((3.0, 3.0, 1.0)), BARTLETT, level=1)


def test_eigenvalue_ci_reference_case():
    es = system((1.0, 0.25), grid=Grid(16))
    ci = eigenvalue_ci(es, BARTLETT, n_obs=900, bandwidth=9.0, level=1)
    half = (ci.upper - ci.lower) / 2.0
    assert half == pytest.approx(0.22634, abs=2e-4)
    assert (ci.upper + ci.lower) / 2.0 == pytest.approx(1.0, abs=1e-12)
    # frozen quantile: Phi^{-1}(0.975)
    z = half / (0.1 * math.sqrt(4.0 / 3.0))
    assert z == pytest.approx(1.959963984540054, abs=1e-6)


def test_eigenvalue_ci_width_shrinks():
    es = system((1.0, 0.25))
    widths = []
    for n in (100, 1000, 10000, 100000):
        ci = eigenvalue_ci(es, BARTLETT, n_obs=n, bandwidth=5.0, level=1)
        widths.append(ci.upper - ci.lower)
    assert all(b < a for a, b in zip(widths, widths[1:]))
    assert widths[-1] < 0.05 * widths[0]


def test_eigenvalue_ci_accepts_bandwidth_object():
    es = system((1.0, 0.25))
    a = eigenvalue_ci(es, BARTLETT, 900, Bandwidth(9.0), 1)
    b = eigenvalue_ci(es, BARTLETT, 900, 9.0, 1)
    assert a == b


def test_eigenvalue_ci_refusals():
    es = system((1.0, 0.25))
    with pytest.raises(ContractViolationError):
        eigenvalue_ci(es, BARTLETT, 900, 9.0, 1, conf=1.0)
    with pytest.raises(ContractViolationError):
        eigenvalue_ci(es, BARTLETT, 1, 9.0, 1)
    with pytest.raises(ContractViolationError):
        eigenvalue_ci(es, BARTLETT, 900, 0.0, 1)
    with pytest.raises(SeparationError):
        eigenvalue_ci(system((1.0, 1.0)), BARTLETT, 900, 9.0, 1)
    negative = system((-0.5, -1.0))
    with pytest.raises(ContractViolationError):
        eigenvalue_ci(negative, BARTLETT, 900, 9.0, 1)


def test_eigenvalue_ci_level_two():
    es = system((2.0, 1.0, 0.5))
    ci = eigenvalue_ci(es, BARTLETT, 400, 4.0, level=2)
    half = 1.959963984540054 * math.sqrt(4.0 / 400.0) * 1.0 * math.sqrt(4.0 / 3.0)
    assert (ci.upper - ci.lower) / 2.0 == pytest.approx(half, rel=1e-9)
