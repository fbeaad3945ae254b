import numpy as np
import pytest
from numpy.testing import assert_allclose

from feesetting.errors import AccuracyError, RangeError
from feesetting.numerics import WG, WGK, XGK, bisect_increasing, golden_section_max, integrate, integrate_batch


def test_rule_weights_integrate_constants():
    assert_allclose(WGK.sum(), 2.0, rtol=1e-15)
    assert_allclose(WG.sum(), 2.0, rtol=1e-15)
    # the Kronrod rule is exact for polynomials up to degree 22 on [-1, 1]
    assert_allclose(WGK @ XGK**22, 2.0 / 23.0, rtol=1e-13)
    assert_allclose(WG @ XGK**12, 2.0 / 13.0, rtol=1e-13)


@pytest.mark.parametrize(
    "f, a, b, exact",
    [
        (np.sin, 0.0, np.pi, 2.0),
        (np.exp, -1.0, 2.0, np.exp(2) - np.exp(-1)),
        (lambda x: 1.0 / (1.0 + x**2), -5.0, 5.0, 2 * np.arctan(5.0)),
        (np.sqrt, 0.0, 1.0, 2.0 / 3.0),
    ],
)
def test_integrate_known_integrals(f, a, b, exact):
    est = integrate(f, a, b, tol=1e-11)
    assert abs(est.value - exact) < 1e-10
    assert est.error < 1e-10


def test_undeclared_jump_still_converges():
    est = integrate(lambda x: np.where(x < 0.3, 1.0, 2.0), 0.0, 1.0, tol=1e-9)
    assert abs(est.value - 1.7) < 1e-9


def test_declared_breakpoint_is_exact_quickly():
    est = integrate(lambda x: np.abs(x - 0.37), 0.0, 1.0, tol=1e-13, breakpoints=[0.37])
    assert_allclose(est.value, (0.37**2 + 0.63**2) / 2, atol=1e-14)


def test_batch_matches_individual_runs():
    k = np.array([1.0, 2.0, 5.0])
    vals, errs = integrate_batch(lambda x, i: np.cos(k[i] * x), 0.0, np.array([1.0, 2.0, 3.0]), tol=1e-12)
    exact = np.sin(k * np.array([1.0, 2.0, 3.0])) / k
    assert_allclose(vals, exact, atol=1e-12)
    assert np.all(errs <= 1e-12)


def test_empty_and_reversed_intervals_are_zero():
    vals, _ = integrate_batch(lambda x, i: np.ones_like(x), np.array([1.0, 0.0]), np.array([1.0, -1.0]))
    assert_allclose(vals, 0.0)


def test_per_item_breakpoints_with_nan_padding():
    s = np.array([0.2, 0.8])
    bp = np.array([[0.2, np.nan], [0.8, np.nan]])
    vals, _ = integrate_batch(lambda x, i: np.maximum(x - s[i], 0.0), 0.0, 1.0, tol=1e-14, breakpoints=bp)
    assert_allclose(vals, (1 - s) ** 2 / 2, atol=1e-14)


def test_depth_limit_raises():
    with pytest.raises(AccuracyError):
        integrate(lambda x: np.sin(1.0 / x), 1e-3, 1.0, tol=1e-14, max_depth=3)


def test_bisection_inverts_monotone_map():
    t = np.linspace(0.0, 8.0, 9)
    x = bisect_increasing(lambda x: x**3, t, 0.0, 2.0)
    assert_allclose(x, np.cbrt(t), atol=1e-10)


def test_bisection_range_error():
    with pytest.raises(RangeError):
        bisect_increasing(lambda x: x, [3.0], 0.0, 1.0)


def test_golden_section():
    x, val = golden_section_max(lambda t: t * (1 - t) ** 2 / 2, 0.0, 1.0)
    assert_allclose(x, 1 / 3, atol=1e-7)
    assert_allclose(val, 2 / 27, rtol=1e-13)


def test_noisy_integrand_fails_cleanly():
    rng = np.random.default_rng(0)
    with pytest.raises(AccuracyError):
        integrate(lambda x: 1.0 + 1e-6 * rng.standard_normal(x.shape), 0.0, 1.0, tol=1e-14)
