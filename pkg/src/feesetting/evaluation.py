"""Expected revenue and surplus of the fee-setting mechanism and its benchmarks.

Three expectations are computed, each by adaptive quadrature or by seeded Monte
Carlo:

* fee revenue ``E_c[w(P(c)) (1 - F(P(c)))]`` at the seller's equilibrium,
* Myerson revenue ``E[(phi_B(v) - phi_S(c))^+]``,
* efficient surplus ``E[(v - c)^+]``.

Quadrature errors are the rule discrepancies reported by the integrator; Monte
Carlo errors are sample standard errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dist import Distribution
from .errors import ConfigurationError, DomainError, PreconditionError
from .mech import Affine, FeeSchedule, SellerStrategy, equilibrium_strategy
from .numerics import Estimate, integrate_batch

# substream ids for Monte Carlo seed derivation
STREAM_REVENUE = 1
STREAM_MYERSON = 2
STREAM_SURPLUS = 3
STREAM_CLOSED_FORM = 4


@dataclass(frozen=True)
class Quadrature:
    abs_tol: float = 1e-8

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ConfigurationError(f"abs_tol must be positive, got {self.abs_tol!r}")

    @property
    def label(self) -> str:
        return "quad"


@dataclass(frozen=True)
class MonteCarlo:
    """Seeded Monte Carlo; the budget may be split over ``n_tasks`` independent substreams."""

    n_samples: int = 10**6
    seed: int = 0
    n_tasks: int = 1

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1000:
            raise ConfigurationError(f"n_samples must be an integer >= 1000, got {self.n_samples!r}")
        if self.n_tasks < 1:
            raise ConfigurationError("n_tasks must be positive")

    @property
    def label(self) -> str:
        return "mc"

    def generators(self, stream: int, cell: int = 0):
        """One generator per task, each derived from ``(seed, stream, cell, task)``."""
        sizes = np.full(self.n_tasks, self.n_samples // self.n_tasks)
        sizes[: self.n_samples % self.n_tasks] += 1
        for task, size in enumerate(sizes):
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(stream, cell, task))
            yield np.random.default_rng(ss), int(size)

    def mean(self, draw, stream: int, cell: int = 0) -> Estimate:
        """Sample mean and standard error of ``draw(rng, size)`` over all tasks."""
        x = np.concatenate([np.asarray(draw(rng, n), dtype=float) for rng, n in self.generators(stream, cell)])
        return Estimate(float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size)))


EvalMethod = Quadrature | MonteCarlo


# ---------------------------------------------------------------------------
# fee revenue


def _revenue_integrand(buyer, seller, w, strategy):
    def f(c):
        P = np.asarray(strategy(c), dtype=float)
        fin = np.isfinite(P)
        Pf = np.where(fin, P, 0.0)
        return np.where(fin, np.asarray(w(Pf)) * np.asarray(buyer.sf(Pf)), 0.0)

    return f


def expected_fee_revenue(
    buyer: Distribution,
    seller: Distribution,
    w: FeeSchedule,
    strategy: SellerStrategy | None = None,
    method: EvalMethod = Quadrature(),
) -> Estimate:
    """Intermediary's expected revenue at the seller's equilibrium under ``w``."""
    if strategy is None and isinstance(w, Affine):
        vals, errs = affine_revenue_grid(buyer, seller, [w.alpha], [w.beta], method)
        return Estimate(float(vals[0, 0]), float(errs[0, 0]))
    if strategy is None:
        strategy = equilibrium_strategy(buyer, seller, w)
    h = _revenue_integrand(buyer, seller, w, strategy)
    if isinstance(method, MonteCarlo):
        def draw(rng, n):
            c = seller.sample(rng, n)
            v = buyer.sample(rng, n)
            P = np.asarray(strategy(c), dtype=float)
            trade = np.isfinite(P) & (v >= P)
            return np.where(trade, np.asarray(w(np.where(trade, P, 0.0))), 0.0)

        return method.mean(draw, STREAM_REVENUE)
    a, b = seller.integration_bounds()
    bp = np.concatenate([seller.breakpoints(), strategy.breakpoints()])
    vals, errs = integrate_batch(lambda c, idx: h(c) * seller.pdf(c), a, b, method.abs_tol, bp)
    return Estimate(float(vals[0]), float(errs[0]))


def affine_revenue_grid(
    buyer: Distribution, seller: Distribution, alphas, betas, method: EvalMethod = Quadrature()
) -> tuple[np.ndarray, np.ndarray]:
    """Fee revenue of ``Affine(alpha, beta)`` for every pair on the ``alphas x betas`` grid.

    Returns:
        ``(values, errors)`` of shape ``(len(alphas), len(betas))``.  Cell ``k`` in
        row-major order uses Monte Carlo substream ``k``.
    """
    A, B = np.meshgrid(np.asarray(alphas, dtype=float), np.asarray(betas, dtype=float), indexing="ij")
    a_flat, b_flat = A.ravel(), B.ravel()
    if np.any(a_flat < 0):
        raise DomainError("affine revenue needs alpha >= 0")
    if not buyer.is_regular(side="buyer"):
        raise PreconditionError(f"buyer {buyer.spec} is not regular")
    b_lo = buyer.lo if np.isfinite(buyer.lo) else buyer.grid_bounds()[0]

    def price(c, alpha, beta):
        pos = alpha > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(pos, (c + beta) / np.where(pos, alpha, 1.0), 0.0)
        p = np.asarray(buyer.inverse_virtual_value(t, clamp=True), dtype=float)
        return np.where(pos, p, np.where(c + beta < 0, b_lo, np.inf))

    def revenue_given_c(c, alpha, beta):
        P = price(c, alpha, beta)
        fin = np.isfinite(P)
        Pf = np.where(fin, P, b_lo)
        return np.where(fin, ((1.0 - alpha) * Pf + beta) * np.asarray(buyer.sf(Pf)), 0.0)

    if isinstance(method, MonteCarlo):
        vals = np.empty(a_flat.size)
        errs = np.empty(a_flat.size)
        for k, (al, be) in enumerate(zip(a_flat, b_flat)):
            def draw(rng, n, al=al, be=be):
                c = seller.sample(rng, n)
                v = buyer.sample(rng, n)
                P = price(c, al, be)
                trade = np.isfinite(P) & (v >= P)
                return np.where(trade, (1.0 - al) * np.where(trade, P, 0.0) + be, 0.0)

            vals[k], errs[k] = method.mean(draw, STREAM_REVENUE, cell=k)
        return vals.reshape(A.shape), errs.reshape(A.shape)

    phi_lo, phi_hi = buyer.virtual_value_range()
    with np.errstate(invalid="ignore"):
        kinks = np.column_stack([
            np.where(a_flat > 0, a_flat * phi_lo - b_flat, -b_flat),
            np.where(a_flat > 0, a_flat * phi_hi - b_flat, np.nan),
        ])
    sb = seller.breakpoints()
    if sb.size:
        kinks = np.column_stack([kinks, np.broadcast_to(sb, (a_flat.size, sb.size))])
    s_lo, s_hi = seller.integration_bounds()

    def integrand(c, idx):
        return revenue_given_c(c, a_flat[idx], b_flat[idx]) * seller.pdf(c)

    vals, errs = integrate_batch(integrand, s_lo, s_hi, method.abs_tol, kinks)
    return vals.reshape(A.shape), errs.reshape(A.shape)


def rev_apx_uniform_closed_form(
    alpha: float, beta: float, seller: Distribution, method: EvalMethod = Quadrature()
) -> Estimate:
    """Fee revenue of ``Affine(alpha, beta)`` against a uniform[0, 1] buyer.

    Given ``c``, the posted price is ``(c + beta + alpha) / (2 alpha)`` and the
    intermediary earns ``((1-alpha)(c+alpha) + beta(1+alpha)) (alpha - c - beta) / (4 alpha^2)``
    whenever ``c < alpha - beta``.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    s_lo, s_hi = seller.integration_bounds()
    if s_lo < -(alpha + beta):
        raise PreconditionError("seller support reaches costs whose price falls below the buyer support")

    def h(c):
        r = ((1 - alpha) * (c + alpha) + beta * (1 + alpha)) * (alpha - c - beta) / (4 * alpha**2)
        return np.where(c < alpha - beta, r, 0.0)

    if isinstance(method, MonteCarlo):
        return method.mean(lambda rng, n: h(seller.sample(rng, n)), STREAM_CLOSED_FORM)
    top = min(s_hi, alpha - beta)
    if top <= s_lo:
        return Estimate(0.0, 0.0)
    vals, errs = integrate_batch(lambda c, idx: h(c) * seller.pdf(c), s_lo, top, method.abs_tol, seller.breakpoints())
    return Estimate(float(vals[0]), float(errs[0]))


# ---------------------------------------------------------------------------
# benchmarks


def _nested(outer_lo, outer_hi, outer_bp, inner, tol):
    """``int g(c) I(c) dc`` with ``I`` computed by a batched inner quadrature.

    ``inner(c, tol)`` returns ``(values, errors)`` for an array of outer nodes.
    """
    worst = [0.0]

    def f(c, idx):
        v, e = inner(c, tol / 4)
        if e.size:
            worst[0] = max(worst[0], float(e.max()))
        return v, e

    vals, errs = integrate_batch(f, outer_lo, outer_hi, tol / 2, outer_bp)
    return Estimate(float(vals[0]), float(errs[0]) + worst[0])


def expected_myerson_revenue(buyer: Distribution, seller: Distribution, method: EvalMethod = Quadrature()) -> Estimate:
    """Expected positive virtual surplus, the optimal intermediary revenue for regular priors.

    For a non-regular pair this is still the virtual-surplus value; no ironing is done.
    """
    if isinstance(method, MonteCarlo):
        def draw(rng, n):
            c = seller.sample(rng, n)
            v = buyer.sample(rng, n)
            with np.errstate(all="ignore"):
                d = buyer._phi_b(v) - seller._phi_s(c)
            return np.where(d > 0, d, 0.0)

        return method.mean(draw, STREAM_MYERSON)

    b_lo, b_hi = buyer.integration_bounds()
    s_lo, s_hi = seller.integration_bounds()
    regular_b = buyer.is_regular(side="buyer")
    phi_lo, phi_hi = buyer.virtual_value_range()
    bp = list(seller.breakpoints())
    top = s_hi
    if regular_b and seller.is_regular(side="seller"):
        # trade region ends where phi_S reaches the top of phi_B; the threshold
        # clamps to the buyer's lower end where phi_S drops below phi_B(lo)
        cuts = np.asarray(seller.inverse_virtual_cost(np.array([phi_lo, phi_hi]), clamp=True))
        top = float(cuts[1]) if phi_hi < seller.virtual_cost_range()[1] else s_hi
        bp.append(float(cuts[0]))
    bb = buyer.breakpoints()

    def inner(c, tol):
        with np.errstate(all="ignore"):
            s = seller._phi_s(c)
        if regular_b:
            tau = np.asarray(buyer.inverse_virtual_value(s, clamp=True), dtype=float)
            lo = np.where(np.isfinite(tau), np.maximum(tau, b_lo), b_hi)
        else:
            lo = np.full(c.shape, b_lo)

        def g(v, idx):
            with np.errstate(all="ignore"):
                d = buyer._phi_b(v) - s[idx]
            return np.where(d > 0, d, 0.0) * buyer.pdf(v)

        vals, errs = integrate_batch(g, lo, b_hi, tol, bb if bb.size else None)
        return vals * seller.pdf(c), errs * seller.pdf(c)

    return _nested(s_lo, top, np.asarray(bp) if bp else None, inner, method.abs_tol)


def expected_max_surplus(buyer: Distribution, seller: Distribution, method: EvalMethod = Quadrature()) -> Estimate:
    """Expected gains from trade ``E[(v - c)^+]``."""
    if isinstance(method, MonteCarlo):
        def draw(rng, n):
            c = seller.sample(rng, n)
            v = buyer.sample(rng, n)
            return np.maximum(v - c, 0.0)

        return method.mean(draw, STREAM_SURPLUS)

    b_lo, b_hi = buyer.integration_bounds()
    s_lo, s_hi = seller.integration_bounds()
    top = min(s_hi, b_hi)
    if top <= s_lo:
        return Estimate(0.0, 0.0)
    bp = np.concatenate([seller.breakpoints(), [b_lo]])
    bb = buyer.breakpoints()

    def inner(c, tol):
        lo = np.maximum(c, b_lo)

        def g(v, idx):
            return (v - c[idx]) * buyer.pdf(v)

        vals, errs = integrate_batch(g, lo, b_hi, tol, bb if bb.size else None)
        pdf = seller.pdf(c)
        return vals * pdf, errs * pdf

    return _nested(s_lo, top, bp, inner, method.abs_tol)


# ---------------------------------------------------------------------------
# reports


def _ratio(num: Estimate, den: Estimate) -> tuple[float, float]:
    if den.value <= 0:
        return np.inf, np.inf
    r = num.value / den.value
    rel = (num.error / abs(num.value) if num.value else 0.0) + den.error / den.value
    return r, abs(r) * rel


@dataclass
class EvalReport:
    rev_apx: Estimate
    opt_rev: Estimate
    opt_surplus: Estimate
    ratio_rev: float
    ratio_surplus: float
    method: EvalMethod
    buyer: str = ""
    seller: str = ""
    schedule: str = ""
    ratio_rev_error: float = 0.0
    ratio_surplus_error: float = 0.0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "buyer": self.buyer,
            "seller": self.seller,
            "schedule": self.schedule,
            "method": self.method.label,
            "rev_apx": self.rev_apx.value,
            "rev_apx_err": self.rev_apx.error,
            "opt_rev": self.opt_rev.value,
            "opt_rev_err": self.opt_rev.error,
            "opt_surplus": self.opt_surplus.value,
            "opt_surplus_err": self.opt_surplus.error,
            "ratio_rev": self.ratio_rev,
            "ratio_surplus": self.ratio_surplus,
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        d = {k: (_fmt_float(v) if isinstance(v, float) else v) for k, v in self.to_dict().items()}
        return json.dumps(d)

    def csv_row(self) -> list[str]:
        return [
            self.buyer,
            self.seller,
            self.schedule,
            self.method.label,
            *(_g9(x) for x in (
                self.rev_apx.value, self.rev_apx.error,
                self.opt_rev.value, self.opt_rev.error,
                self.opt_surplus.value, self.opt_surplus.error,
                self.ratio_rev, self.ratio_surplus,
            )),
        ]


CSV_HEADER = [
    "buyer", "seller", "schedule", "method",
    "rev_apx", "err", "opt_rev", "err", "opt_surplus", "err",
    "ratio_rev", "ratio_surplus",
]


def _g9(x: float) -> str:
    """Nine significant digits; infinities as ``inf``."""
    return format(float(x), ".9g")


def _fmt_float(x: float):
    # JSON has no inf; keep those as strings
    return float(_g9(x)) if np.isfinite(x) else _g9(x)


def ratio_report(
    buyer: Distribution,
    seller: Distribution,
    w: FeeSchedule,
    method: EvalMethod = Quadrature(),
    strategy: SellerStrategy | None = None,
) -> EvalReport:
    """Fee revenue, both benchmarks and the two approximation ratios for one fixture."""
    rev = expected_fee_revenue(buyer, seller, w, strategy, method)
    opt = expected_myerson_revenue(buyer, seller, method)
    surplus = expected_max_surplus(buyer, seller, method)
    flags = []
    if not (buyer.is_regular(side="buyer") and seller.is_regular(side="seller")):
        flags.append("regularity unverified")
    if seller.lo < 0:
        flags.append("negative-cost seller")
    if rev.value <= 0:
        flags.append("no revenue: ratios infinite")
    r_rev, e_rev = _ratio(opt, rev)
    r_sur, e_sur = _ratio(surplus, rev)
    return EvalReport(
        rev, opt, surplus, r_rev, r_sur, method,
        buyer=buyer.spec, seller=seller.spec, schedule=w.label,
        ratio_rev_error=e_rev, ratio_surplus_error=e_sur, flags=flags,
    )
