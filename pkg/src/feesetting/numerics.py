"""Numerical kernels: batched adaptive quadrature, bisection, golden-section search.

The quadrature routine integrates many independent one-dimensional problems at
once.  Every panel is evaluated with the 15-point Kronrod rule and its embedded
7-point Gauss rule; the absolute difference of the two is the panel's error
estimate.  Refinement is global per problem: a problem is finished once the sum
of its panel errors drops below its tolerance, otherwise every panel whose
error exceeds its length-proportional share of the budget is bisected.  This
converges even across jump discontinuities that were not declared as
breakpoints, at the price of more panels.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import AccuracyError, RangeError

# Kronrod abscissae on [-1, 1] (non-negative half, QUADPACK qk15 ordering).
_XGK_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

XGK = np.concatenate([-_XGK_HALF[:-1], _XGK_HALF[::-1]])
WGK = np.concatenate([_WGK_HALF[:-1], _WGK_HALF[::-1]])
# Gauss nodes are the odd-indexed entries of the half table; -x_i sits at
# index i of XGK and +x_i at index 14 - i.
WG = np.zeros(15)
for _w, _i in zip(_WG_HALF, (1, 3, 5, 7)):
    WG[_i] = _w
    WG[14 - _i] = _w

DEFAULT_MAX_DEPTH = 60
ROUNDOFF = 50 * np.finfo(float).eps
WIDTH_FLOOR = 512 * np.finfo(float).eps
MAX_PANELS = 2**18


class Estimate(NamedTuple):
    """A numerical estimate with its error bar (quadrature discrepancy or MC standard error)."""

    value: float
    error: float


def integrate_batch(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a,
    b,
    tol=1e-8,
    breakpoints=None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``m`` problems ``int_{a_i}^{b_i} f(x, i) dx`` simultaneously.

    Args:
        f: vectorised integrand; called with flat arrays ``x`` and ``idx`` of equal
            length where ``idx`` names the problem each abscissa belongs to.  It may
            return ``(values, noise)`` where ``noise`` bounds the absolute error of
            each value; panels whose rule discrepancy is explained by it are not split.
        a, b: lower and upper limits, scalars or arrays of shape ``(m,)``.  Problems
            with ``b <= a`` (or non-finite limits) integrate to zero.
        tol: absolute tolerance per problem (scalar or ``(m,)``).
        breakpoints: optional 1-D array shared by all problems, or 2-D ``(m, k)``
            array of per-problem points (NaN entries ignored).  Points outside
            ``(a_i, b_i)`` are ignored.
        max_depth: bisection depth after which :class:`AccuracyError` is raised.

    A problem stops early, with its honest error estimate, once every remaining
    panel is at the rounding or noise floor; callers compare the returned error
    with ``tol`` if they need to know.

    Returns:
        ``(values, errors)`` arrays of shape ``(m,)``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m = max(a.size, b.size, np.size(tol))
    if breakpoints is not None and np.ndim(breakpoints) == 2:
        m = max(m, np.shape(breakpoints)[0])
    a = np.broadcast_to(a, (m,)).copy()
    b = np.broadcast_to(b, (m,)).copy()
    tol = np.broadcast_to(np.asarray(tol, dtype=float), (m,)).copy()
    budget = max(MAX_PANELS, 256 * m)

    valid = np.isfinite(a) & np.isfinite(b) & (b > a)
    a_v = np.where(valid, a, 0.0)
    b_v = np.where(valid, b, 0.0)

    # initial partition: limits plus breakpoints clipped into each interval
    if breakpoints is None:
        bp = np.empty((m, 0))
    else:
        bp = np.asarray(breakpoints, dtype=float)
        bp = np.broadcast_to(bp, (m, bp.shape[-1])) if bp.ndim == 1 else bp
    bp = np.where(np.isfinite(bp), bp, a_v[:, None])
    bp = np.clip(bp, a_v[:, None], b_v[:, None])
    pts = np.sort(np.concatenate([a_v[:, None], bp, b_v[:, None]], axis=1), axis=1)
    lo = pts[:, :-1].ravel()
    hi = pts[:, 1:].ravel()
    item = np.repeat(np.arange(m), pts.shape[1] - 1)
    keep = (hi > lo) & valid[item]
    lo, hi, item = lo[keep], hi[keep], item[keep]
    depth = np.zeros(lo.size, dtype=int)

    length = np.where(valid, b_v - a_v, 1.0)
    values = np.zeros(m)
    errors = np.zeros(m)

    # panels already evaluated but belonging to unfinished problems
    p_lo = np.empty(0)
    p_hi = np.empty(0)
    p_item = np.empty(0, dtype=int)
    p_depth = np.empty(0, dtype=int)
    p_k = np.empty(0)
    p_err = np.empty(0)
    p_floor = np.empty(0)

    while lo.size or p_lo.size:
        if lo.size:
            center = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            x = center[:, None] + half[:, None] * XGK[None, :]
            res = f(x.ravel(), np.repeat(item, 15))
            noise = None
            if isinstance(res, tuple):
                res, noise = res
                noise = np.asarray(noise, dtype=float).reshape(x.shape)
            fx = np.asarray(res, dtype=float).reshape(x.shape)
            k = half * (fx @ WGK)
            g = half * (fx @ WG)
            err = np.abs(k - g)
            # K - G cannot resolve below this: rounding in f itself plus the effect
            # of representing the abscissae to one ulp; such panels are not split
            with np.errstate(divide="ignore", invalid="ignore"):
                slope = np.nan_to_num(np.abs(np.diff(fx, axis=1)) / np.diff(x, axis=1), nan=np.inf).max(axis=1)
            scale = np.maximum(np.abs(lo), np.abs(hi))
            floor = ROUNDOFF * half * (np.abs(fx) @ WGK + 2.0 * slope * scale)
            if noise is not None:
                floor = floor + half * (noise @ np.abs(WGK - WG))
            bad = ~np.isfinite(k)
            if bad.any():
                raise AccuracyError("integrand returned non-finite values")
            p_lo = np.concatenate([p_lo, lo])
            p_hi = np.concatenate([p_hi, hi])
            p_item = np.concatenate([p_item, item])
            p_depth = np.concatenate([p_depth, depth])
            p_k = np.concatenate([p_k, k])
            p_err = np.concatenate([p_err, err])
            p_floor = np.concatenate([p_floor, floor])

        tot_err = np.bincount(p_item, weights=p_err, minlength=m)
        # panels at roundoff level or a few hundred ulps wide are not refined;
        # an item left with only such panels is as accurate as it can get
        refinable = (p_err > p_floor) & ((p_hi - p_lo) > WIDTH_FLOOR * np.maximum(np.abs(p_lo), np.abs(p_hi)))
        stuck = np.bincount(p_item, weights=refinable, minlength=m) == 0
        done_item = (tot_err <= tol) | stuck
        done = done_item[p_item]
        if done.any():
            values += np.bincount(p_item[done], weights=p_k[done], minlength=m)
            errors += np.bincount(p_item[done], weights=p_err[done], minlength=m)
        p_lo, p_hi, p_item = p_lo[~done], p_hi[~done], p_item[~done]
        p_depth, p_k, p_err = p_depth[~done], p_k[~done], p_err[~done]
        p_floor, refinable = p_floor[~done], refinable[~done]
        if not p_lo.size:
            break

        share = tol[p_item] * (p_hi - p_lo) / length[p_item]
        split = (p_err > share) & refinable
        # guarantee progress: always split each unfinished problem's worst refinable panel
        worst = np.zeros(m, dtype=int) - 1
        order = np.argsort(np.where(refinable, p_err, -1.0))
        worst[p_item[order]] = order
        split[worst[worst >= 0]] = True
        if p_lo.size + split.sum() > budget:
            raise AccuracyError(
                f"adaptive quadrature needs more than {budget} panels; the integrand may be too noisy"
            )
        if (p_depth[split] >= max_depth).any():
            raise AccuracyError(
                f"adaptive quadrature exceeded depth {max_depth} before reaching tolerance"
            )
        mid = 0.5 * (p_lo[split] + p_hi[split])
        lo = np.concatenate([p_lo[split], mid])
        hi = np.concatenate([mid, p_hi[split]])
        item = np.concatenate([p_item[split], p_item[split]])
        depth = np.concatenate([p_depth[split] + 1, p_depth[split] + 1])
        p_lo, p_hi, p_item = p_lo[~split], p_hi[~split], p_item[~split]
        p_depth, p_k, p_err = p_depth[~split], p_k[~split], p_err[~split]
        p_floor = p_floor[~split]

    return values, errors


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-8,
    breakpoints: Sequence[float] | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Estimate:
    """Adaptive Gauss-Kronrod integral of a vectorised scalar function over ``[a, b]``."""
    vals, errs = integrate_batch(
        lambda x, idx: f(x),
        a,
        b,
        tol=tol,
        breakpoints=None if breakpoints is None else np.asarray(breakpoints, dtype=float),
        max_depth=max_depth,
    )
    return Estimate(float(vals[0]), float(errs[0]))


def bisect_increasing(
    fun: Callable[[np.ndarray], np.ndarray],
    targets,
    lo,
    hi,
    tol: float = 1e-10,
    max_iter: int = 200,
    check_range: bool = True,
) -> np.ndarray:
    """Solve ``fun(x) = t`` for a nondecreasing ``fun`` on ``[lo, hi]``, elementwise.

    Raises:
        RangeError: if ``check_range`` and some target lies outside ``[fun(lo), fun(hi)]``.
    """
    t = np.asarray(targets, dtype=float)
    shape = t.shape
    t = t.ravel()
    a = np.broadcast_to(np.asarray(lo, dtype=float), t.shape).copy()
    b = np.broadcast_to(np.asarray(hi, dtype=float), t.shape).copy()
    if check_range and t.size:
        fa, fb = fun(a), fun(b)
        outside = (t < fa - 1e-12 * np.maximum(1.0, np.abs(fa))) | (
            t > fb + 1e-12 * np.maximum(1.0, np.abs(fb))
        )
        if outside.any():
            bad = t[outside][0]
            raise RangeError(f"target {bad!r} outside the range [{fa.min()!r}, {fb.max()!r}]")
    for _ in range(max_iter):
        if not t.size or np.max(b - a) <= tol:
            break
        mid = 0.5 * (a + b)
        below = fun(mid) < t
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return (0.5 * (a + b)).reshape(shape)


def golden_section_max(
    fun: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200
) -> tuple[float, float]:
    """Maximise a unimodal scalar function on ``[lo, hi]``; returns ``(argmax, max)``."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    cands = [(fun(x), x), (fc, c), (fd, d)]
    best = max(cands)
    return best[1], best[0]
