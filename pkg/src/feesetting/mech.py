"""Fee schedules, seller equilibrium strategies and the benchmark exchanges.

In the fee-setting mechanism the seller with cost ``c`` posts a price ``P(c)``,
the buyer takes it iff ``v >= P(c)``, and the intermediary keeps ``w(P)``.  The
seller's best response is characterised by the first-order condition

    phi_B(P) = P - (P - w(P) - c) / (1 - w'(P)),

which for an affine ``w`` collapses to ``P(c) = phi_B^{-1}((c + beta) / alpha)``.
A price of ``+inf`` means that cost type never trades.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .dist import Distribution, GeneralizedPareto, diff_distribution
from .errors import (
    ConsistencyError,
    DomainError,
    EquilibriumNotFound,
    FeeSettingError,
    PreconditionError,
)
from .numerics import golden_section_max, integrate, integrate_batch

MONOTONE_SLACK = 1e-9


def _num(x: float) -> str:
    return format(float(x), ".9g")


def _out(x, scalar: bool):
    return float(x) if scalar else x


# ---------------------------------------------------------------------------
# fee schedules


class FeeSchedule(ABC):
    """Intermediary's fee ``w(P)`` as a function of the posted price."""

    @abstractmethod
    def __call__(self, P): ...

    @abstractmethod
    def derivative(self, P): ...

    @property
    @abstractmethod
    def label(self) -> str:
        """Text form under the schedule grammar (``affine:a,b``, ``constant:k``...)."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r})"


class Affine(FeeSchedule):
    """``w(P) = (1 - alpha) P + beta``."""

    def __init__(self, alpha: float, beta: float) -> None:
        if not (np.isfinite(alpha) and np.isfinite(beta)):
            raise DomainError("affine coefficients must be finite")
        self.alpha, self.beta = float(alpha), float(beta)

    def __call__(self, P):
        P = np.asarray(P, dtype=float)
        return _out((1.0 - self.alpha) * P + self.beta, P.ndim == 0)

    def derivative(self, P):
        P = np.asarray(P, dtype=float)
        return _out(np.full(P.shape, 1.0 - self.alpha), P.ndim == 0)

    def is_proper(self) -> bool:
        return 0.0 <= self.alpha <= 1.0 and self.beta >= 0.0

    @property
    def label(self) -> str:
        return f"affine:{_num(self.alpha)},{_num(self.beta)}"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Affine):
            return NotImplemented
        return (self.alpha, self.beta) == (other.alpha, other.beta)

    def __hash__(self) -> int:
        return hash((self.alpha, self.beta))


class Constant(Affine):
    """Flat fee ``w(P) = k``; equal to ``Affine(1, k)`` but reported as a constant."""

    def __init__(self, k: float) -> None:
        super().__init__(1.0, k)

    @property
    def k(self) -> float:
        return self.beta

    @property
    def label(self) -> str:
        return f"constant:{_num(self.k)}"


class General(FeeSchedule):
    """Tabulated schedule, linear between nodes and linearly extrapolated outside.

    Args:
        price_grid: strictly increasing prices.
        fee_values: finite fees at those prices.
        strategy: equilibrium strategy known to be induced by this schedule, if any.
    """

    def __init__(self, price_grid, fee_values, strategy: "SellerStrategy | None" = None) -> None:
        x = np.asarray(price_grid, dtype=float)
        y = np.asarray(fee_values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise DomainError("price_grid and fee_values must be 1-D arrays of equal length >= 2")
        if not np.all(np.diff(x) > 0):
            raise DomainError("price_grid must be strictly increasing")
        if not np.all(np.isfinite(y)):
            raise DomainError("fee_values must be finite")
        self.price_grid, self.fee_values = x, y
        self.strategy = strategy
        self._h = 1e-5 * (x[-1] - x[0])

    def __call__(self, P):
        P = np.asarray(P, dtype=float)
        x, y = self.price_grid, self.fee_values
        out = np.interp(P, x, y)
        left = (y[1] - y[0]) / (x[1] - x[0])
        right = (y[-1] - y[-2]) / (x[-1] - x[-2])
        with np.errstate(invalid="ignore"):
            out = np.where(P < x[0], y[0] + left * (P - x[0]), out)
            out = np.where(P > x[-1], y[-1] + right * (P - x[-1]), out)
        return _out(out, P.ndim == 0)

    def derivative(self, P):
        P = np.asarray(P, dtype=float)
        d = (np.asarray(self(P + self._h)) - np.asarray(self(P - self._h))) / (2 * self._h)
        return _out(d, P.ndim == 0)

    @property
    def label(self) -> str:
        return f"general:<{self.price_grid.size} nodes>"


# ---------------------------------------------------------------------------
# seller strategies


class SellerStrategy(ABC):
    """Price map ``P(c)``; ``+inf`` marks cost types that never trade."""

    @abstractmethod
    def __call__(self, c): ...

    def breakpoints(self) -> np.ndarray:
        """Costs where ``P`` has a kink or jumps (including to ``+inf``)."""
        return np.empty(0)

    def is_monotone(self, costs) -> bool:
        p = np.asarray(self(np.asarray(costs, dtype=float)))
        with np.errstate(invalid="ignore"):
            d = np.diff(p)
        return bool(np.all((d >= -MONOTONE_SLACK) | np.isposinf(p[1:])))


class ClosedFormAffine(SellerStrategy):
    """``P(c) = phi_B^{-1}((c + beta) / alpha)`` for an affine schedule with ``alpha > 0``.

    Targets below the range of ``phi_B`` post the lowest value; targets above
    it never trade.
    """

    def __init__(self, buyer: Distribution, alpha: float, beta: float) -> None:
        if not alpha > 0:
            raise DomainError(f"closed-form strategy needs alpha > 0, got {alpha!r}")
        self.buyer, self.alpha, self.beta = buyer, float(alpha), float(beta)

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        return self.buyer.inverse_virtual_value((c + self.beta) / self.alpha, clamp=True)

    def breakpoints(self) -> np.ndarray:
        pts = np.array(self.buyer.virtual_value_range()) * self.alpha - self.beta
        return pts[np.isfinite(pts)]


class ZeroAlphaStrategy(SellerStrategy):
    """Best response when ``alpha = 0``: the fee eats the whole price plus ``beta``.

    The seller nets ``-beta`` per sale, so it sells at the lowest value when
    ``c + beta < 0`` and otherwise stays out.
    """

    def __init__(self, buyer: Distribution, beta: float) -> None:
        self.buyer, self.beta = buyer, float(beta)

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        lo = self.buyer.lo if np.isfinite(self.buyer.lo) else self.buyer.grid_bounds()[0]
        return _out(np.where(c + self.beta < 0, lo, np.inf), c.ndim == 0)

    def breakpoints(self) -> np.ndarray:
        return np.array([-self.beta])


class TabulatedStrategy(SellerStrategy):
    """Strategy interpolated linearly between equilibrium prices on a cost grid."""

    def __init__(self, cost_grid, price_values, multiple_roots=None) -> None:
        self.cost_grid = np.asarray(cost_grid, dtype=float)
        self.price_values = np.asarray(price_values, dtype=float)
        if self.cost_grid.shape != self.price_values.shape or self.cost_grid.size < 2:
            raise DomainError("cost_grid and price_values must have equal length >= 2")
        if multiple_roots is None:
            multiple_roots = np.zeros(self.cost_grid.size, dtype=bool)
        self.multiple_roots = np.asarray(multiple_roots, dtype=bool)

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        x, y = self.cost_grid, self.price_values
        finite = np.isfinite(y)
        i = np.clip(np.searchsorted(x, c, side="right") - 1, 0, x.size - 2)
        t = np.clip((c - x[i]) / (x[i + 1] - x[i]), 0.0, 1.0)
        ya, yb = np.where(finite[i], y[i], 0.0), np.where(finite[i + 1], y[i + 1], 0.0)
        out = ya + t * (yb - ya)
        # a cell touching a never-trade node is never-trade once past its finite end
        out = np.where(finite[i] & finite[i + 1], out, np.where(finite[i] & (t == 0), ya, np.inf))
        return _out(out, c.ndim == 0)

    def breakpoints(self) -> np.ndarray:
        return self.cost_grid[1:-1]


class MatchingStrategy(SellerStrategy):
    """``P(c) = phi_B^{-1}(phi_S(c))``: the seller's price that matches Myerson's critical value."""

    def __init__(self, buyer: Distribution, seller: Distribution) -> None:
        self.buyer, self.seller = buyer, seller

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        s = self.seller._phi_s(c)
        return self.buyer.inverse_virtual_value(s, clamp=True)

    def inverse(self, v):
        """``P^{-1}(v) = phi_S^{-1}(phi_B(v))`` clamped to the seller's support."""
        v = np.asarray(v, dtype=float)
        with np.errstate(all="ignore"):
            t = self.buyer._phi_b(v)
        t = np.where(np.isnan(t), -np.inf, t)
        return self.seller.inverse_virtual_cost(t, clamp=True)

    def breakpoints(self) -> np.ndarray:
        rng = np.array(self.buyer.virtual_value_range())
        pts = self.seller.inverse_virtual_cost(rng[np.isfinite(rng)], clamp=True)
        s_lo, s_hi = self.seller.integration_bounds()
        pts = np.asarray(pts)
        return pts[(pts > s_lo) & (pts < s_hi)]


# ---------------------------------------------------------------------------
# equilibria


def bne_affine(buyer: Distribution, alpha: float, beta: float) -> ClosedFormAffine:
    """Unique equilibrium strategy of the seller under ``w(P) = (1-alpha) P + beta``."""
    if not buyer.is_regular(side="buyer"):
        raise PreconditionError(f"buyer {buyer.spec} is not regular")
    return ClosedFormAffine(buyer, alpha, beta)


def equilibrium_strategy(buyer: Distribution, seller: Distribution, w: FeeSchedule) -> SellerStrategy:
    """Seller strategy used to evaluate ``w``: closed form when available, else the general solver."""
    if isinstance(w, Affine):
        if w.alpha > 0:
            return bne_affine(buyer, w.alpha, w.beta)
        if w.alpha == 0:
            return ZeroAlphaStrategy(buyer, w.beta)
        raise DomainError(f"no equilibrium for negative alpha {w.alpha!r}")
    if isinstance(w, General) and w.strategy is not None:
        return w.strategy
    lo, hi = seller.grid_bounds()
    return bne_general(buyer, w, np.linspace(lo, hi, 1025))


def bne_general(buyer: Distribution, w: FeeSchedule, cost_grid, n_scan: int = 512) -> TabulatedStrategy:
    """Solve the seller's first-order condition for each cost on ``cost_grid``.

    The residual is scanned on ``n_scan`` prices across the buyer's support and
    the first sign change is refined by bisection.  A residual that is positive
    everywhere means the lowest price is optimal; negative everywhere means the
    seller never trades.

    Raises:
        EquilibriumNotFound: the residual is undefined on the scan.
        ConsistencyError: the tabulated strategy is not monotone.
    """
    if not buyer.is_regular(side="buyer"):
        raise PreconditionError(f"buyer {buyer.spec} is not regular")
    c = np.asarray(cost_grid, dtype=float)
    lo, hi = buyer.grid_bounds()
    P = np.linspace(lo, hi, n_scan)

    def residual(p, cc):
        with np.errstate(all="ignore"):
            return buyer._phi_b(p) - p + (p - w(p) - cc) / (1.0 - w.derivative(p))

    r = residual(P[None, :], c[:, None])
    if np.any(np.isnan(r)):
        bad = c[np.isnan(r).any(axis=1)][0]
        raise EquilibriumNotFound(f"equilibrium residual undefined at cost {bad!r}")
    sign = r >= 0
    change = sign[:, 1:] & ~sign[:, :-1]
    n_changes = change.sum(axis=1)
    out = np.empty(c.size)
    all_pos = sign.all(axis=1)
    out[all_pos] = lo
    none = ~all_pos & (n_changes == 0)
    out[none] = np.inf
    todo = ~all_pos & (n_changes > 0)
    if todo.any():
        j = np.argmax(change[todo], axis=1)
        a, b, ct = P[j], P[j + 1], c[todo]
        for _ in range(200):
            if np.max(b - a) <= 1e-14 * max(1.0, abs(hi)):
                break
            m = 0.5 * (a + b)
            neg = residual(m, ct) < 0
            a, b = np.where(neg, m, a), np.where(neg, b, m)
        out[todo] = 0.5 * (a + b)
    strategy = TabulatedStrategy(c, out, multiple_roots=n_changes > 1)
    if not strategy.is_monotone(c):
        raise ConsistencyError("tabulated equilibrium strategy is not monotone")
    return strategy


# ---------------------------------------------------------------------------
# schedules derived from the priors


def thm1_schedule(buyer: Distribution) -> Affine:
    """``w(P) = P - phi_B(P)`` for a buyer with affine virtual value.

    An exponential buyer (``alpha = 1``) gets the flat fee ``1/lam``.
    """
    if not isinstance(buyer, GeneralizedPareto):
        raise PreconditionError(f"buyer {buyer.spec} has no affine virtual value")
    alpha, beta = buyer.affine_coefficients
    return Constant(beta) if alpha == 1.0 else Affine(alpha, beta)


def ln13_affine_schedule(xi: float, lam: float, mu: float) -> Affine:
    """Affine schedule that makes the seller price at ``phi_B^{-1}(phi_S(c))``.

    For a reverse generalized Pareto seller ``phi_S(c) = (1+xi) c + (1/lam + xi*mu)``;
    choosing ``alpha = 1/(1+xi)`` and ``beta = (1/lam + xi*mu)/(1+xi)`` turns the
    affine best response into exactly that price.
    """
    if not lam > 0:
        raise DomainError(f"rate must be positive, got {lam!r}")
    if not xi >= 0:
        raise DomainError(f"shape must be nonnegative, got {xi!r}")
    return Affine(1.0 / (1.0 + xi), (1.0 / lam + xi * mu) / (1.0 + xi))


def mhr_constant_schedule(buyer: Distribution, seller: Distribution, resolution: int = 4096) -> Constant:
    """Flat fee at the monopoly price of the ``v - c`` law, over nonnegative fees."""
    if not buyer.is_mhr():
        raise PreconditionError(f"buyer {buyer.spec} is not MHR")
    d = diff_distribution(buyer, seller, resolution)
    if not d.is_mhr():
        raise PreconditionError(f"v - c law for {buyer.spec} / {seller.spec} is not MHR")
    eta, _ = d.monopoly_price(lower=0.0)
    # the table only brackets eta; polish on the exact tail P(v - c > t)
    h = float(d.grid[1] - d.grid[0])
    eta, _ = golden_section_max(lambda t: t * _diff_sf(buyer, seller, t), max(0.0, eta - 4 * h), eta + 4 * h)
    return Constant(eta)


def _diff_sf(buyer: Distribution, seller: Distribution, t: float, tol: float = 1e-14) -> float:
    """``P(v - c > t) = int sf_B(t + c) dG(c)``."""
    lo, hi = seller.integration_bounds()
    bp = np.concatenate([[buyer.lo - t, buyer.hi - t], seller.breakpoints()])
    bp = bp[np.isfinite(bp)]
    est = integrate(lambda c: np.asarray(buyer.sf(t + c)) * seller.pdf(c), lo, hi, tol, bp)
    return est.value


def optimal_fee_schedule(
    buyer: Distribution, seller: Distribution, price_grid=None, n_grid: int = 2001, tol: float = 1e-10
) -> General:
    """Revenue-optimal schedule ``w(P) = P - E[M^{-1}(v) | v >= P]`` with ``M = phi_B^{-1} o phi_S``.

    The conditional expectation is computed as ``int_0^1 M^{-1}(isf(s * sf(P))) ds``.
    The returned schedule carries ``MatchingStrategy`` as its equilibrium.
    """
    if not buyer.is_regular(side="buyer"):
        raise PreconditionError(f"buyer {buyer.spec} is not regular")
    if not seller.is_regular(side="seller"):
        raise PreconditionError(f"seller {seller.spec} is not regular")
    match = MatchingStrategy(buyer, seller)
    costs = seller.interior_grid(1000)
    p = np.asarray(match(costs))
    fin = p[np.isfinite(p)]
    if fin.size > 1 and not np.all(np.diff(fin) > 0):
        raise PreconditionError("phi_B^{-1}(phi_S(c)) is not strictly increasing on the seller support")

    if price_grid is None:
        b_lo, b_hi = buyer.grid_bounds()
        s_lo, s_hi = seller.grid_bounds()
        p_lo = max(b_lo, float(match(s_lo)))
        p_hi = min(b_hi, float(match(s_hi)))
        if not p_hi > p_lo:
            raise PreconditionError("no price range on which trade occurs")
        price_grid = np.linspace(p_lo, p_hi, n_grid)
    P = np.asarray(price_grid, dtype=float)
    # at sf(P) = 0 the integrand degenerates to the limit M^{-1}(P)
    sfP = np.asarray(buyer.sf(P))

    # M^{-1} saturates where v crosses M(c_lo) and M(c_hi); split the s-integral there
    s_lo, s_hi = seller.integration_bounds()
    kinks_v = np.array([float(match(s_lo)), float(match(s_hi))])
    with np.errstate(invalid="ignore", divide="ignore"):
        kinks_s = np.asarray(buyer.sf(np.where(np.isfinite(kinks_v), kinks_v, np.inf)))[None, :] / sfP[:, None]

    def integrand(s, idx):
        v = np.asarray(buyer.isf(np.clip(s * sfP[idx], 0.0, 1.0)))
        return np.asarray(match.inverse(v))

    vals, _ = integrate_batch(integrand, 0.0, 1.0, tol=tol, breakpoints=kinks_s)
    return General(P, P - vals, strategy=match)


# ---------------------------------------------------------------------------
# ex-post outcomes


@dataclass(frozen=True)
class TradeOutcome:
    traded: bool
    price: float = 0.0
    buyer_payment: float = 0.0
    seller_receipt: float = 0.0
    broker_fee: float = 0.0
    flag: str | None = None


def run_fee_mechanism(w: FeeSchedule, strategy: SellerStrategy, v: float, c: float) -> TradeOutcome:
    """Seller posts ``P(c)``; trade iff ``v >= P``; the intermediary keeps ``w(P)``."""
    try:
        P = float(strategy(c))
    except FeeSettingError as exc:
        return TradeOutcome(False, flag=f"strategy failed at c={c!r}: {exc}")
    if not (np.isfinite(P) and v >= P):
        return TradeOutcome(False)
    fee = float(w(P))
    return TradeOutcome(True, P, P, P - fee, fee)


def myerson_outcome(buyer: Distribution, seller: Distribution, v: float, c: float) -> TradeOutcome:
    """Virtual-surplus maximising exchange with critical-value payments."""
    if not buyer.is_regular(side="buyer"):
        raise PreconditionError(f"buyer {buyer.spec} is not regular")
    if not seller.is_regular(side="seller"):
        raise PreconditionError(f"seller {seller.spec} is not regular")
    phi_b = buyer.virtual_value(v)
    phi_s = seller.virtual_cost(c)
    if phi_b < phi_s:
        return TradeOutcome(False)
    tau_b = float(buyer.inverse_virtual_value(phi_s, clamp=True))
    tau_s = float(seller.inverse_virtual_cost(phi_b, clamp=True))
    return TradeOutcome(True, tau_b, tau_b, tau_s, tau_b - tau_s)


def vcg_outcome(v: float, c: float) -> TradeOutcome:
    """Efficient trade; the buyer pays ``c``, the seller receives ``v``."""
    if v < c:
        return TradeOutcome(False)
    return TradeOutcome(True, c, c, v, c - v)
