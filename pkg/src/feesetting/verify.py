"""Numerical checks of the approximation and inapproximability results.

Each check evaluates a fixture and compares an observed quantity with its
bound.  The margin is ``max(1e-6, 10 * combined numerical error)`` so the same
checks accept quadrature and Monte Carlo runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dist import (
    Distribution,
    GeneralizedPareto,
    ReverseGeneralizedPareto,
    TabulatedDistribution,
    Uniform,
    WorstCaseSeller,
    max_of_iid,
)
from .errors import PreconditionError
from .evaluation import (
    EvalMethod,
    Quadrature,
    _g9,
    affine_revenue_grid,
    expected_fee_revenue,
    expected_max_surplus,
    expected_myerson_revenue,
    ratio_report,
)
from .mech import (
    Affine,
    Constant,
    ln13_affine_schedule,
    mhr_constant_schedule,
    optimal_fee_schedule,
    thm1_schedule,
)

MIN_MARGIN = 1e-6


def margin_for(*errors: float) -> float:
    return max(MIN_MARGIN, 10.0 * float(sum(errors)))


@dataclass
class TheoremCheck:
    """Outcome of one check; ``sense='le'`` means observed <= bound + margin, ``'ge'`` the reverse."""

    name: str
    bound: float
    observed: float
    margin: float
    passed: bool
    fixtures: str
    sense: str = "le"
    skipped: bool = False
    detail: str = ""

    @classmethod
    def compare(cls, name, bound, observed, margin, fixtures, sense="le", detail="") -> "TheoremCheck":
        if sense == "le":
            ok = observed <= bound + margin
        else:
            ok = observed >= bound - margin
        return cls(name, float(bound), float(observed), float(margin), bool(ok), fixtures, sense, False, detail)

    @classmethod
    def skip(cls, name, fixtures, why) -> "TheoremCheck":
        return cls(name, np.nan, np.nan, 0.0, True, fixtures, skipped=True, detail=why)

    def to_json(self) -> str:
        d = {
            "name": self.name,
            "bound": _g9(self.bound),
            "observed": _g9(self.observed),
            "margin": _g9(self.margin),
            "pass": self.passed,
            "fixtures": self.fixtures,
        }
        for k in ("bound", "observed", "margin"):
            d[k] = float(d[k]) if np.isfinite(float(d[k])) else d[k]
        if self.skipped:
            d["skipped"] = True
        if self.detail:
            d["detail"] = self.detail
        return json.dumps(d)

    def csv_row(self) -> list[str]:
        return [self.name, _g9(self.bound), _g9(self.observed), _g9(self.margin),
                "pass" if self.passed else "fail", self.fixtures]

    def summary(self) -> str:
        if self.skipped:
            return f"SKIP {self.name} [{self.fixtures}]: {self.detail}"
        rel = "<=" if self.sense == "le" else ">="
        return (f"{'PASS' if self.passed else 'FAIL'} {self.name} [{self.fixtures}]: "
                f"observed {_g9(self.observed)} {rel} bound {_g9(self.bound)} (margin {_g9(self.margin)})")


CHECK_CSV_HEADER = ["name", "bound", "observed", "margin", "pass", "fixtures"]


def _fx(*dists: Distribution) -> str:
    return " / ".join(d.spec for d in dists)


def theorem3_bounds(alpha: float) -> tuple[float, float]:
    """Revenue and surplus factors ``alpha^(1/(alpha-1))`` and ``alpha^((alpha+1)/(alpha-1))``."""
    if abs(alpha - 1.0) < 1e-9:
        return float(np.e), float(np.e**2)
    return alpha ** (1.0 / (alpha - 1.0)), alpha ** ((alpha + 1.0) / (alpha - 1.0))


# ---------------------------------------------------------------------------


def check_main1(buyer: GeneralizedPareto, seller: Distribution, method: EvalMethod = Quadrature()) -> list[TheoremCheck]:
    """Revenue and surplus ratios of the ``w(P) = P - phi_B(P)`` schedule against their bounds."""
    fx = _fx(buyer, seller)
    if not isinstance(buyer, GeneralizedPareto):
        raise PreconditionError(f"buyer {buyer.spec} is not generalized Pareto")
    alpha, beta = buyer.affine_coefficients
    if beta <= 0:
        why = f"beta = {beta!r} <= 0"
        return [TheoremCheck.skip("main1_rev", fx, why), TheoremCheck.skip("main1_surplus", fx, why)]
    rep = ratio_report(buyer, seller, thm1_schedule(buyer), method)
    b_rev, b_sur = theorem3_bounds(alpha)
    # alpha^(alpha/(alpha-1)) is what the conditional argument proves; a seller massed
    # near one cost attains it, so the stated revenue factor can be exceeded
    provable = float(np.e) if abs(alpha - 1.0) < 1e-9 else alpha ** (alpha / (alpha - 1.0))
    return [
        TheoremCheck.compare("main1_rev", b_rev, rep.ratio_rev, margin_for(rep.ratio_rev_error), fx,
                             detail=f"provable factor {_g9(provable)}"),
        TheoremCheck.compare("main1_surplus", b_sur, rep.ratio_surplus, margin_for(rep.ratio_surplus_error), fx),
    ]


def solve_y(seller: Distribution) -> float:
    """``min(phi_S^{-1}(1), c_hi)``; the upper cost end when ``phi_S`` never reaches 1."""
    if not seller.is_regular(side="seller"):
        raise PreconditionError(f"seller {seller.spec} is not regular")
    _, top = seller.virtual_cost_range()
    if top < 1.0:
        return seller.integration_bounds()[1]
    return float(seller.inverse_virtual_cost(1.0, clamp=True))


def check_unif_3approx(seller: Distribution, method: EvalMethod = Quadrature()) -> TheoremCheck:
    """Best of ``Affine(2, 1)`` and the flat fee ``(1 - y)/2`` earns at least a third of the optimum."""
    buyer = Uniform(0.0, 1.0)
    y = solve_y(seller)
    r1 = expected_fee_revenue(buyer, seller, Affine(2.0, 1.0), method=method)
    r2 = expected_fee_revenue(buyer, seller, Constant((1.0 - y) / 2.0), method=method)
    opt = expected_myerson_revenue(buyer, seller, method)
    best = r1 if r1.value >= r2.value else r2
    return TheoremCheck.compare(
        "unif3", opt.value / 3.0, best.value, margin_for(best.error, opt.error / 3.0),
        _fx(buyer, seller), sense="ge", detail=f"y={_g9(y)} rev21={_g9(r1.value)} rev_flat={_g9(r2.value)}",
    )


def check_mhr(buyer: Distribution, seller: Distribution, method: EvalMethod = Quadrature()) -> TheoremCheck:
    """Flat fee at the monopoly price of ``v - c`` is an ``e^2`` approximation to the surplus."""
    fx = _fx(buyer, seller)
    try:
        w = mhr_constant_schedule(buyer, seller)
    except PreconditionError as exc:
        return TheoremCheck.skip("mhr", fx, str(exc))
    rev = expected_fee_revenue(buyer, seller, w, method=method)
    surplus = expected_max_surplus(buyer, seller, method)
    if rev.value <= 0:
        return TheoremCheck("mhr", np.e**2, np.inf, MIN_MARGIN, False, fx, detail="zero revenue")
    ratio = surplus.value / rev.value
    err = ratio * (surplus.error / surplus.value + rev.error / rev.value)
    return TheoremCheck.compare("mhr", np.e**2, ratio, margin_for(err), fx, detail=f"eta={_g9(w.k)} rev={_g9(rev.value)}")


def check_prior_independent_exact8(seller: Distribution, method: EvalMethod = Quadrature()) -> list[TheoremCheck]:
    """Uniform buyer: surplus is exactly 8x the revenue of ``Affine(2, 1)``, and ``2a^2/(a-1)``x along ``a - b = 1``."""
    lo, hi = seller.integration_bounds()
    if lo < 0 or hi > 1:
        raise PreconditionError(f"seller {seller.spec} is not supported in [0, 1]")
    buyer = Uniform(0.0, 1.0)
    fx = _fx(buyer, seller)
    surplus = expected_max_surplus(buyer, seller, method)
    rev = expected_fee_revenue(buyer, seller, Affine(2.0, 1.0), method=method)
    out = [TheoremCheck.compare(
        "exact8", 0.0, abs(surplus.value - 8.0 * rev.value), margin_for(surplus.error, 8.0 * rev.error), fx,
        detail=f"surplus={_g9(surplus.value)} rev={_g9(rev.value)}",
    )]
    for a in (1.5, 3.0):
        r = expected_fee_revenue(buyer, seller, Affine(a, a - 1.0), method=method)
        target = 2.0 * a * a / (a - 1.0)
        ratio = surplus.value / r.value
        err = ratio * (surplus.error / surplus.value + r.error / r.value)
        out.append(TheoremCheck.compare(
            f"exact8_alpha{_g9(a)}", 0.0, abs(ratio - target), margin_for(err), fx,
            detail=f"ratio={_g9(ratio)} target={_g9(target)}",
        ))
    return out


# ---------------------------------------------------------------------------
# proper schedules and the worst-case family


@dataclass
class ProperSearchResult:
    best_alpha: float
    best_beta: float
    best_revenue: float
    surplus_gap: float
    revenue_gap: float
    grid_alpha: float = np.nan
    grid_beta: float = np.nan
    grid_revenue: float = np.nan
    opt_surplus: float = np.nan
    opt_rev: float = np.nan
    max_grid_excess: float = np.nan
    flags: list[str] = field(default_factory=list)


def best_proper_schedule(
    buyer: Distribution,
    seller: Distribution,
    grid_steps: tuple[int, int] = (101, 201),
    method: EvalMethod = Quadrature(),
    refine_to: float = 1e-4,
) -> ProperSearchResult:
    """Revenue-maximising affine schedule with ``0 <= alpha <= 1`` and ``beta >= 0``.

    A grid over ``alpha in [0, 1]`` and ``beta in [0, sup v]`` is followed by a
    compass search whose steps halve down to ``refine_to``.
    """
    if not buyer.is_regular(side="buyer"):
        raise PreconditionError(f"buyer {buyer.spec} is not regular")
    beta_max = buyer.grid_bounds()[1]
    alphas = np.linspace(0.0, 1.0, grid_steps[0])
    betas = np.linspace(0.0, beta_max, grid_steps[1])
    rev, _ = affine_revenue_grid(buyer, seller, alphas, betas, method)
    i, j = np.unravel_index(int(np.argmax(rev)), rev.shape)
    ga, gb, gr = float(alphas[i]), float(betas[j]), float(rev[i, j])
    surplus = expected_max_surplus(buyer, seller, method)
    opt = expected_myerson_revenue(buyer, seller, method)
    excess = float(rev.max() - opt.value)
    if gr <= 0:
        return ProperSearchResult(ga, gb, 0.0, np.inf, np.inf, ga, gb, gr, surplus.value, opt.value,
                                  excess, ["no proper schedule earns revenue: gaps infinite"])

    a, b, r = ga, gb, gr
    da, db = alphas[1] - alphas[0], betas[1] - betas[0]
    while da > refine_to or db > refine_to:
        cand = np.array([[a + da, b], [a - da, b], [a, b + db], [a, b - db]])
        cand[:, 0] = np.clip(cand[:, 0], 0.0, 1.0)
        cand[:, 1] = np.clip(cand[:, 1], 0.0, beta_max)
        vals = np.array([
            affine_revenue_grid(buyer, seller, [ca], [cb], method)[0][0, 0] for ca, cb in cand
        ])
        k = int(np.argmax(vals))
        if vals[k] > r:
            a, b, r = float(cand[k, 0]), float(cand[k, 1]), float(vals[k])
            excess = max(excess, r - opt.value)
        else:
            da, db = da / 2.0, db / 2.0
    return ProperSearchResult(a, b, r, surplus.value / r, opt.value / r, ga, gb, gr, surplus.value, opt.value, excess)


@dataclass
class GDeltaRow:
    delta: float
    max_surplus: float
    closed_form_surplus: float
    best_proper_revenue: float
    surplus_gap: float
    revenue_gap: float
    best_alpha: float
    best_beta: float


def gdelta_experiment(
    deltas, method: EvalMethod = Quadrature(), grid_steps: tuple[int, int] = (101, 201)
) -> tuple[list[GDeltaRow], list[TheoremCheck]]:
    """Best proper schedule against ``WorstCaseSeller(delta)`` for each delta, with the three checks.

    The checks are: surplus matches its closed form, the surplus gap grows strictly
    as delta shrinks, and the revenue gap is at least an eighth of the surplus gap.
    """
    buyer = Uniform(0.0, 1.0)
    rows: list[GDeltaRow] = []
    checks: list[TheoremCheck] = []
    for d in deltas:
        seller = WorstCaseSeller(d)
        res = best_proper_schedule(buyer, seller, grid_steps, method)
        closed = seller.max_surplus_uniform_buyer()
        rows.append(GDeltaRow(float(d), res.opt_surplus, closed, res.best_revenue,
                              res.surplus_gap, res.revenue_gap, res.best_alpha, res.best_beta))
        checks.append(TheoremCheck.compare(
            "gdelta_surplus", 0.0, abs(res.opt_surplus - closed), 1e-5, seller.spec,
            detail=f"computed={_g9(res.opt_surplus)} closed_form={_g9(closed)}",
        ))
        checks.append(TheoremCheck.compare(
            "gdelta_rg_vs_sg", res.surplus_gap / 8.0, res.revenue_gap, margin_for(1e-8), seller.spec, sense="ge",
        ))
    order = sorted(rows, key=lambda r: -r.delta)
    growth = [b.surplus_gap - a.surplus_gap for a, b in zip(order, order[1:])]
    checks.append(TheoremCheck.compare(
        "gdelta_sg_growth", 0.0, min(growth) if growth else np.inf, 0.0,
        ",".join(_g9(r.delta) for r in order), sense="ge",
        detail="SG: " + " < ".join(_g9(r.surplus_gap) for r in order),
    ))
    if growth and min(growth) <= 0:
        checks[-1].passed = False
    return rows, checks


# ---------------------------------------------------------------------------
# optimal schedules and multiple buyers


def check_optimal_fee(buyer: Distribution, seller: Distribution, method: EvalMethod = Quadrature()) -> TheoremCheck:
    """The tabulated optimal schedule earns the Myerson revenue."""
    fx = _fx(buyer, seller)
    try:
        w = optimal_fee_schedule(buyer, seller)
    except PreconditionError as exc:
        return TheoremCheck.skip("optfee", fx, str(exc))
    rev = expected_fee_revenue(buyer, seller, w, w.strategy, method)
    opt = expected_myerson_revenue(buyer, seller, method)
    return TheoremCheck.compare(
        "optfee", 0.0, abs(rev.value - opt.value), margin_for(rev.error, opt.error), fx,
        detail=f"rev={_g9(rev.value)} opt={_g9(opt.value)}",
    )


def check_ln13(
    buyer: Distribution, xi: float, lam: float, mu: float, method: EvalMethod = Quadrature()
) -> TheoremCheck:
    """The affine schedule built from a reverse generalized Pareto seller earns the Myerson revenue."""
    seller = ReverseGeneralizedPareto(mu, lam, xi)
    fx = _fx(buyer, seller)
    if not buyer.is_regular(side="buyer"):
        return TheoremCheck.skip("ln13", fx, f"buyer {buyer.spec} is not regular")
    w = ln13_affine_schedule(xi, lam, mu)
    rev = expected_fee_revenue(buyer, seller, w, method=method)
    opt = expected_myerson_revenue(buyer, seller, method)
    return TheoremCheck.compare(
        "ln13", 0.0, abs(rev.value - opt.value), margin_for(rev.error, opt.error), fx,
        detail=f"schedule={w.label} rev={_g9(rev.value)} opt={_g9(opt.value)}",
    )


def check_max_iid_mhr(
    buyer: Distribution, n_list=(1, 2, 3, 5, 10), seller: Distribution | None = None,
    method: EvalMethod = Quadrature(),
) -> list[TheoremCheck]:
    """MHR survives taking the maximum of i.i.d. buyers; optionally run the MHR check on the largest pool."""
    if not buyer.is_mhr():
        raise PreconditionError(f"buyer {buyer.spec} is not MHR")
    out = []
    for n in n_list:
        eff = max_of_iid(buyer, n)
        ok = eff.is_mhr()
        detail = ""
        if not ok:
            x = eff.interior_grid(1000)
            h = np.asarray(eff.pdf(x)) / np.asarray(eff.sf(x))
            k = int(np.argmin(np.diff(h)))
            detail = f"hazard decreases after x={_g9(x[k])}"
        out.append(TheoremCheck(f"maxiid_mhr_n{n}", 0.0, 0.0 if ok else 1.0, 0.0, ok, eff.spec, detail=detail))
    if seller is not None:
        chk = check_mhr(max_of_iid(buyer, max(n_list)), seller, method)
        chk.name = "maxiid_mhr_ratio"
        out.append(chk)
    return out


# ---------------------------------------------------------------------------
# randomized fixtures


def random_regular_sellers(rng: np.random.Generator, k: int) -> list[Distribution]:
    """``k`` seller-regular laws on subsets of ``[0, 1]`` drawn from several parametric families."""
    out: list[Distribution] = []
    while len(out) < k:
        family = rng.integers(3)
        if family == 0:
            a, b = np.sort(rng.uniform(0.0, 1.0, 2))
            if b - a < 0.05:
                continue
            d: Distribution = Uniform(a, b)
        elif family == 1:
            xi = rng.uniform(0.1, 3.0)
            top = rng.uniform(0.3, 1.0)
            width = rng.uniform(0.2, 1.0) * top
            d = ReverseGeneralizedPareto(-top, 1.0 / (xi * width), xi)
        else:
            d = WorstCaseSeller(float(np.exp(rng.uniform(np.log(0.005), np.log(0.5)))))
        if d.is_regular(side="seller"):
            out.append(d)
    return out


def random_tabulated_seller(rng: np.random.Generator, n_nodes: int = 12) -> TabulatedDistribution:
    """Piecewise-linear CDF with random nodes and masses on a random subinterval of ``[0, 1]``."""
    a, b = np.sort(rng.uniform(0.0, 1.0, 2))
    a, b = a * 0.5, 0.5 + b * 0.5
    x = np.sort(np.concatenate([[a, b], rng.uniform(a, b, n_nodes - 2)]))
    x = np.unique(x)
    mass = rng.dirichlet(np.ones(x.size - 1))
    F = np.concatenate([[0.0], np.cumsum(mass)])
    F[-1] = 1.0
    return TabulatedDistribution(x, F)
