"""Value and cost distributions.

Every distribution exposes vectorised density, CDF and quantile queries plus the
derived quantities the mechanisms need: hazard rate, cumulative hazard, the
buyer's virtual value ``v - (1-F)/f`` and the seller's virtual cost ``c + G/g``.
Scalar input gives a float back; array input gives an array of the same shape.

Subclasses implement ``_cdf``, ``_pdf`` and ``_quantile`` on the support and may
override the survival function and Mills ratios when a closed form is more
accurate than ``1 - F`` or ``(1-F)/f``.
"""

from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, ConsistencyError, DomainError, PreconditionError, RangeError, SingularityError
from .numerics import bisect_increasing, golden_section_max, integrate_batch

GRID_TAIL = 1e-8
INTEGRATION_TAIL = 1e-15
REGULARITY_SLACK = 1e-9


class Support(NamedTuple):
    lo: float
    hi: float


def _num(x: float) -> str:
    """Shortest round-tripping text for a parameter, without a trailing ``.0``."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _out(x: np.ndarray, scalar: bool):
    return float(x) if scalar else x


class Distribution(ABC):
    """Continuous law on an interval ``[lo, hi]`` (``hi`` may be infinite)."""

    def __init__(self) -> None:
        self._regularity_cache: dict[tuple[str, int], bool] = {}

    # -- to implement -------------------------------------------------------
    @property
    @abstractmethod
    def lo(self) -> float: ...

    @property
    @abstractmethod
    def hi(self) -> float: ...

    @property
    @abstractmethod
    def spec(self) -> str:
        """Text form under the ``name:params`` grammar used by the CLI."""

    @abstractmethod
    def _cdf(self, x: np.ndarray) -> np.ndarray:
        """CDF for ``x`` inside the support."""

    @abstractmethod
    def _pdf(self, x: np.ndarray) -> np.ndarray:
        """Density for ``x`` inside the support."""

    @abstractmethod
    def _quantile(self, p: np.ndarray) -> np.ndarray:
        """Inverse CDF for ``p`` in ``[0, 1]``."""

    def _sf(self, x: np.ndarray) -> np.ndarray:
        return 1.0 - self._cdf(x)

    def _isf(self, q: np.ndarray) -> np.ndarray:
        return self._quantile(1.0 - q)

    def _mills(self, x: np.ndarray) -> np.ndarray:
        """``(1-F)/f`` on the support; inf where the density vanishes."""
        with np.errstate(divide="ignore", invalid="ignore"):
            sf, f = self._sf(x), self._pdf(x)
            r = sf / f
        r = np.where((f == 0) & (sf == 0), 0.0, r)
        return np.where((f == 0) & (sf > 0), np.inf, r)

    def _rmills(self, x: np.ndarray) -> np.ndarray:
        """``F/f`` on the support; inf where the density vanishes."""
        with np.errstate(divide="ignore", invalid="ignore"):
            F, f = self._cdf(x), self._pdf(x)
            r = F / f
        r = np.where((f == 0) & (F == 0), 0.0, r)
        return np.where((f == 0) & (F > 0), np.inf, r)

    def breakpoints(self) -> np.ndarray:
        """Interior points where the density is not smooth."""
        return np.empty(0)

    # -- support helpers ----------------------------------------------------
    @property
    def support(self) -> Support:
        return Support(self.lo, self.hi)

    def _inside(self, x: np.ndarray) -> np.ndarray:
        return (x >= self.lo) & (x <= self.hi)

    def grid_bounds(self) -> tuple[float, float]:
        """Finite bounds for grid work; infinite ends are cut at the 1e-8 tail quantile."""
        lo = self.lo if np.isfinite(self.lo) else float(self._quantile(np.array(GRID_TAIL)))
        hi = self.hi if np.isfinite(self.hi) else float(self._isf(np.array(GRID_TAIL)))
        return lo, hi

    def integration_bounds(self) -> tuple[float, float]:
        """Finite bounds for quadrature; infinite ends are cut where the tail mass is 1e-15."""
        lo = self.lo if np.isfinite(self.lo) else float(self._quantile(np.array(INTEGRATION_TAIL)))
        hi = self.hi if np.isfinite(self.hi) else float(self._isf(np.array(INTEGRATION_TAIL)))
        return lo, hi

    def interior_grid(self, n_grid: int) -> np.ndarray:
        lo, hi = self.grid_bounds()
        return np.linspace(lo, hi, n_grid + 2)[1:-1]

    # -- public queries -----------------------------------------------------
    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = self._inside(x)
        xs = np.where(inside, x, self.lo if np.isfinite(self.lo) else self.hi)
        return _out(np.where(inside, self._pdf(xs), 0.0), x.ndim == 0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = self._inside(x)
        xs = np.where(inside, x, self.lo if np.isfinite(self.lo) else self.hi)
        out = np.where(x < self.lo, 0.0, np.where(x > self.hi, 1.0, self._cdf(xs)))
        return _out(np.clip(out, 0.0, 1.0), x.ndim == 0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        inside = self._inside(x)
        xs = np.where(inside, x, self.lo if np.isfinite(self.lo) else self.hi)
        out = np.where(x < self.lo, 1.0, np.where(x > self.hi, 0.0, self._sf(xs)))
        return _out(np.clip(out, 0.0, 1.0), x.ndim == 0)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(~((p >= 0) & (p <= 1))):
            raise DomainError("quantile level must lie in [0, 1]")
        out = np.where(p == 0, self.lo, np.where(p == 1, self.hi, self._quantile(p)))
        return _out(np.clip(out, self.lo, self.hi), p.ndim == 0)

    def isf(self, q):
        """Inverse survival function, accurate for small upper-tail mass ``q``."""
        q = np.asarray(q, dtype=float)
        if np.any(~((q >= 0) & (q <= 1))):
            raise DomainError("tail level must lie in [0, 1]")
        out = np.where(q == 1, self.lo, np.where(q == 0, self.hi, self._isf(q)))
        return _out(np.clip(out, self.lo, self.hi), q.ndim == 0)

    def hazard(self, x):
        x = np.asarray(x, dtype=float)
        sf = np.atleast_1d(self.sf(x))
        if np.any(sf <= 0):
            raise SingularityError("hazard rate is undefined where F = 1")
        return _out(np.asarray(self.pdf(x)) / np.asarray(self.sf(x)), x.ndim == 0)

    def cumulative_hazard(self, x):
        x = np.asarray(x, dtype=float)
        sf = np.asarray(self.sf(x))
        if np.any(sf <= 0):
            raise SingularityError("cumulative hazard is undefined where F = 1")
        return _out(-np.log(sf), x.ndim == 0)

    def _phi_b(self, v: np.ndarray) -> np.ndarray:
        """Virtual value without error checks; non-finite where undefined."""
        v = np.asarray(v, dtype=float)
        inside = self._inside(v)
        vs = np.where(inside, v, self.lo if np.isfinite(self.lo) else self.hi)
        return np.where(inside, vs - self._mills(vs), np.nan)

    def _phi_s(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        inside = self._inside(c)
        cs = np.where(inside, c, self.lo if np.isfinite(self.lo) else self.hi)
        return np.where(inside, cs + self._rmills(cs), np.nan)

    def virtual_value(self, v):
        v = np.asarray(v, dtype=float)
        out = self._phi_b(v)
        if not np.all(np.isfinite(out)):
            raise SingularityError("virtual value is undefined where the density is zero")
        return _out(out, v.ndim == 0)

    def virtual_cost(self, c):
        c = np.asarray(c, dtype=float)
        out = self._phi_s(c)
        if not np.all(np.isfinite(out)):
            raise SingularityError("virtual cost is undefined where the density is zero")
        return _out(out, c.ndim == 0)

    # -- inverses -----------------------------------------------------------
    def _phi_range(self, phi, lo: float, hi: float) -> tuple[float, float]:
        with np.errstate(all="ignore"):
            a = float(phi(np.array([lo]))[0])
            b = float(phi(np.array([hi]))[0])
        if not np.isfinite(a):
            a = -np.inf
        return a, b

    def virtual_value_range(self) -> tuple[float, float]:
        """Limits of the virtual value at the ends of the support (integration-truncated if unbounded)."""
        lo, hi = self.integration_bounds()
        return self._phi_range(self._phi_b, lo, hi)

    def virtual_cost_range(self) -> tuple[float, float]:
        lo, hi = self.integration_bounds()
        return self._phi_range(self._phi_s, lo, hi)

    def _upper_bracket(self, phi, target_max: float) -> float:
        """Upper end for bisection; grows an unbounded support until ``phi`` passes the target."""
        lo, hi = self.grid_bounds()
        if np.isfinite(self.hi):
            return self.hi
        for _ in range(200):
            with np.errstate(all="ignore"):
                val = float(phi(np.array([hi]))[0])
            if not np.isfinite(val) or val >= target_max:
                break
            hi = lo + 2.0 * (hi - lo)
        return hi

    def _invert(self, phi, t, clamp_low: float, clamp_high: float, clamp: bool) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        lo = self.lo if np.isfinite(self.lo) else self.grid_bounds()[0]
        finite_t = flat[np.isfinite(flat)]
        hi = self._upper_bracket(phi, float(finite_t.max()) if finite_t.size else 0.0)
        a, b = self._phi_range(phi, lo, hi)
        below = flat < a
        above = ~(flat <= b)
        if (below.any() or above.any()) and not clamp:
            bad = flat[below | above][0]
            raise RangeError(f"virtual target {bad!r} outside the range [{a!r}, {b!r}]")
        mid = ~(below | above)
        out = np.empty_like(flat)
        out[below] = clamp_low
        out[above] = clamp_high
        if mid.any():
            def f(x):
                with np.errstate(all="ignore"):
                    y = phi(x)
                return np.where(np.isfinite(y), y, -np.inf)

            out[mid] = bisect_increasing(f, flat[mid], lo, hi, check_range=False)
        return out.reshape(t.shape)

    def _require_regular(self, side: str) -> None:
        if not self.is_regular(side=side):
            raise PreconditionError(f"{self.spec} is not {side}-regular")

    def inverse_virtual_value(self, t, clamp: bool = False):
        """Solve ``phi_B(v) = t`` by bisection.

        Args:
            t: target virtual value(s).
            clamp: if true, targets below the range map to ``lo`` and targets
                above it map to ``+inf`` (a price nobody pays) instead of raising.
        """
        self._require_regular("buyer")
        t = np.asarray(t, dtype=float)
        return _out(self._invert(self._phi_b, t, self.lo, np.inf, clamp), t.ndim == 0)

    def inverse_virtual_cost(self, t, clamp: bool = False):
        """Solve ``phi_S(c) = t`` by bisection; ``clamp`` saturates at the support ends."""
        self._require_regular("seller")
        t = np.asarray(t, dtype=float)
        return _out(self._invert(self._phi_s, t, self.lo, self.hi, clamp), t.ndim == 0)

    # -- predicates ---------------------------------------------------------
    def is_regular(self, n_grid: int = 1000, side: str = "buyer") -> bool:
        """Grid check that the virtual value (``side='buyer'``) or cost is nondecreasing."""
        if n_grid < 2:
            raise ConfigurationError("n_grid must be at least 2")
        if side not in ("buyer", "seller"):
            raise ValueError(f"unknown side {side!r}")
        key = (side, n_grid)
        if key not in self._regularity_cache:
            x = self.interior_grid(n_grid)
            with np.errstate(all="ignore"):
                phi = self._phi_b(x) if side == "buyer" else self._phi_s(x)
            phi = phi[np.isfinite(phi)]
            d = np.diff(phi)
            slack = REGULARITY_SLACK * np.maximum(1.0, np.abs(phi[1:]))
            self._regularity_cache[key] = bool(np.all(d >= -slack))
        return self._regularity_cache[key]

    def is_mhr(self, n_grid: int = 1000) -> bool:
        """Grid check that the hazard rate is nondecreasing."""
        if n_grid < 2:
            raise ConfigurationError("n_grid must be at least 2")
        x = self.interior_grid(n_grid)
        sf = np.asarray(self.sf(x))
        x = x[sf > 0]
        h = np.asarray(self.pdf(x)) / np.asarray(self.sf(x))
        d = np.diff(h)
        return bool(np.all(d >= -REGULARITY_SLACK * np.maximum(1.0, np.abs(h[1:]))))

    # -- derived scalars ----------------------------------------------------
    def monopoly_price(self, lower: float | None = None, n_scan: int = 10_000) -> tuple[float, float]:
        """Maximiser of ``t (1 - F(t))`` by grid scan plus golden-section refinement.

        Args:
            lower: smallest admissible price (defaults to the support's lower end).
        """
        lo, hi = self.grid_bounds()
        if lower is not None:
            lo = max(lo, lower)
        if hi <= lo:
            return lo, float(lo * self.sf(lo))
        t = np.linspace(lo, hi, n_scan)
        r = t * np.asarray(self.sf(t))
        i = int(np.argmax(r))
        a, b = t[max(i - 1, 0)], t[min(i + 1, n_scan - 1)]
        x, val = golden_section_max(lambda s: s * self.sf(s), a, b)
        if val < r[i]:
            x, val = float(t[i]), float(r[i])
        return float(x), float(val)

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform draw(s) using ``rng``."""
        return self.quantile(rng.random(size))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec!r})"


class GeneralizedPareto(Distribution):
    """Generalized Pareto law with location ``mu``, rate ``lam`` and shape ``xi >= 0``.

    ``1 - F(x) = (1 - xi*lam*(x - mu))**(1/xi)`` on ``[mu, mu + 1/(xi*lam)]``
    and ``exp(-lam*(x - mu))`` on ``[mu, inf)`` when ``xi = 0``.  The virtual value
    is affine, ``(1+xi) v - (1/lam + xi*mu)``.
    """

    def __init__(self, mu: float, lam: float, xi: float) -> None:
        super().__init__()
        if not lam > 0:
            raise DomainError(f"rate must be positive, got {lam!r}")
        if not xi >= 0:
            raise DomainError(f"shape must be nonnegative, got {xi!r}")
        self.mu, self.lam, self.xi = float(mu), float(lam), float(xi)

    @property
    def lo(self) -> float:
        return self.mu

    @property
    def hi(self) -> float:
        return self.mu + 1.0 / (self.xi * self.lam) if self.xi > 0 else np.inf

    @property
    def spec(self) -> str:
        return f"gpd:{_num(self.mu)},{_num(self.lam)},{_num(self.xi)}"

    @property
    def affine_coefficients(self) -> tuple[float, float]:
        """``(alpha, beta)`` with ``phi_B(v) = alpha*v - beta``."""
        return 1.0 + self.xi, 1.0 / self.lam + self.xi * self.mu

    def _log_sf(self, x):
        if self.xi == 0:
            return -self.lam * (x - self.mu)
        with np.errstate(divide="ignore"):
            return np.log1p(-np.minimum(self.xi * self.lam * (x - self.mu), 1.0)) / self.xi

    def _sf(self, x):
        return np.exp(self._log_sf(x))

    def _cdf(self, x):
        return -np.expm1(self._log_sf(x))

    def _pdf(self, x):
        if self.xi == 0:
            return self.lam * np.exp(-self.lam * (x - self.mu))
        z = np.maximum(1.0 - self.xi * self.lam * (x - self.mu), 0.0)
        with np.errstate(divide="ignore"):
            return self.lam * z ** (1.0 / self.xi - 1.0)

    def _quantile(self, p):
        if self.xi == 0:
            return self.mu - np.log1p(-p) / self.lam
        return self.mu - np.expm1(self.xi * np.log1p(-p)) / (self.xi * self.lam)

    def _isf(self, q):
        with np.errstate(divide="ignore"):
            if self.xi == 0:
                return self.mu - np.log(q) / self.lam
            return self.mu - np.expm1(self.xi * np.log(q)) / (self.xi * self.lam)

    def _mills(self, x):
        return np.maximum(1.0 - self.xi * self.lam * (x - self.mu), 0.0) / self.lam

    def virtual_value_range(self) -> tuple[float, float]:
        alpha, beta = self.affine_coefficients
        return alpha * self.lo - beta, alpha * self.hi - beta

    def inverse_virtual_value(self, t, clamp: bool = False):
        t = np.asarray(t, dtype=float)
        alpha, beta = self.affine_coefficients
        a, b = alpha * self.lo - beta, alpha * self.hi - beta
        below, above = t < a, ~(t <= b)
        if (below.any() or above.any()) and not clamp:
            bad = t[below | above].ravel()[0]
            raise RangeError(f"virtual target {bad!r} outside the range [{a!r}, {b!r}]")
        with np.errstate(invalid="ignore"):
            out = np.where(below, self.lo, np.where(above, np.inf, (t + beta) / alpha))
        return _out(out, t.ndim == 0)


class Uniform(GeneralizedPareto):
    def __init__(self, lo: float, hi: float) -> None:
        if not hi > lo:
            raise DomainError(f"uniform needs lo < hi, got [{lo!r}, {hi!r}]")
        super().__init__(lo, 1.0 / (hi - lo), 1.0)
        self._a, self._b = float(lo), float(hi)

    @property
    def hi(self) -> float:
        return self._b

    @property
    def spec(self) -> str:
        return f"uniform:{_num(self._a)},{_num(self._b)}"

    def _cdf(self, x):
        return (x - self._a) / (self._b - self._a)

    def _sf(self, x):
        return (self._b - x) / (self._b - self._a)

    def _pdf(self, x):
        return np.full_like(np.asarray(x, dtype=float), 1.0 / (self._b - self._a))

    def _quantile(self, p):
        return self._a + p * (self._b - self._a)

    def _isf(self, q):
        return self._b - q * (self._b - self._a)

    def _mills(self, x):
        return self._b - x

    def _rmills(self, x):
        return x - self._a


class Exponential(GeneralizedPareto):
    def __init__(self, lam: float) -> None:
        super().__init__(0.0, lam, 0.0)

    @property
    def spec(self) -> str:
        return f"exp:{_num(self.lam)}"


class Power(GeneralizedPareto):
    """``F(v) = 1 - (1 - v/vbar)**a`` on ``[0, vbar]``, i.e. GPD(0, a/vbar, 1/a)."""

    def __init__(self, a: float, vbar: float) -> None:
        if not a >= 1:
            raise DomainError(f"power exponent must be >= 1, got {a!r}")
        if not vbar > 0:
            raise DomainError(f"upper end must be positive, got {vbar!r}")
        super().__init__(0.0, a / vbar, 1.0 / a)
        self.a, self.vbar = float(a), float(vbar)

    @property
    def hi(self) -> float:
        return self.vbar

    @property
    def spec(self) -> str:
        return f"power:{_num(self.a)},{_num(self.vbar)}"


class ReverseGeneralizedPareto(Distribution):
    """Cost law whose negation is ``GeneralizedPareto(mu, lam, xi)``.

    The support is ``[-mu - 1/(xi*lam), -mu]`` and the virtual cost is affine,
    ``(1+xi) c + (1/lam + xi*mu)``.  Depending on ``mu`` the support can contain
    negative costs; nothing here rejects that.
    """

    def __init__(self, mu: float, lam: float, xi: float) -> None:
        super().__init__()
        self.base = GeneralizedPareto(mu, lam, xi)
        self.mu, self.lam, self.xi = self.base.mu, self.base.lam, self.base.xi

    @property
    def lo(self) -> float:
        return -self.base.hi

    @property
    def hi(self) -> float:
        return -self.base.lo

    @property
    def spec(self) -> str:
        return f"rgpd:{_num(self.mu)},{_num(self.lam)},{_num(self.xi)}"

    @property
    def affine_coefficients(self) -> tuple[float, float]:
        """``(a, b)`` with ``phi_S(c) = a*c + b``."""
        return 1.0 + self.xi, 1.0 / self.lam + self.xi * self.mu

    def _cdf(self, x):
        return self.base._sf(-x)

    def _sf(self, x):
        return self.base._cdf(-x)

    def _pdf(self, x):
        return self.base._pdf(-x)

    def _quantile(self, p):
        return -self.base._isf(p)

    def _isf(self, q):
        return -self.base._quantile(q)

    def _rmills(self, x):
        return self.base._mills(-x)

    def inverse_virtual_cost(self, t, clamp: bool = False):
        t = np.asarray(t, dtype=float)
        a, b = self.affine_coefficients
        lo = self.lo if np.isfinite(self.lo) else -np.inf
        r_lo, r_hi = a * lo + b, a * self.hi + b
        below, above = t < r_lo, t > r_hi
        if (below.any() or above.any()) and not clamp:
            bad = t[below | above].ravel()[0]
            raise RangeError(f"virtual target {bad!r} outside the range [{r_lo!r}, {r_hi!r}]")
        out = np.clip((t - b) / a, self.lo, self.hi)
        return _out(out, t.ndim == 0)


class WorstCaseSeller(Distribution):
    """The seller family ``G(x) = (d/(1-d)) (1/(1-x)**2 - 1)`` on ``[0, 1 - sqrt(d)]``.

    Its mass piles up near the upper end as ``d`` shrinks, which is what defeats
    every proper affine schedule against a uniform buyer.
    """

    def __init__(self, delta: float) -> None:
        super().__init__()
        if not 0 < delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
        self.delta = float(delta)
        self._k = self.delta / (1.0 - self.delta)

    @property
    def lo(self) -> float:
        return 0.0

    @property
    def hi(self) -> float:
        return 1.0 - np.sqrt(self.delta)

    @property
    def spec(self) -> str:
        return f"gdelta:{_num(self.delta)}"

    def _cdf(self, x):
        return self._k * (1.0 / (1.0 - x) ** 2 - 1.0)

    def _pdf(self, x):
        return 2.0 * self._k / (1.0 - x) ** 3

    def _quantile(self, p):
        return 1.0 - 1.0 / np.sqrt(1.0 + p / self._k)

    def _rmills(self, x):
        return ((1.0 - x) - (1.0 - x) ** 3) / 2.0

    def max_surplus_uniform_buyer(self) -> float:
        """Closed-form ``E[(v - c)+]`` against a uniform[0, 1] buyer."""
        return self.delta / (2.0 * (1.0 - self.delta)) * np.log(1.0 / self.delta)


class TabulatedDistribution(Distribution):
    """Law with a piecewise-linear CDF through ``(grid[i], cdf_values[i])``.

    Args:
        grid: strictly increasing nodes.
        cdf_values: nondecreasing CDF values, 0 at the first node and 1 at the last.
        cdf_noise: absolute accuracy of ``cdf_values``; widens the MHR slack.
        source: path the table was read from, used in ``spec``.
    """

    def __init__(self, grid, cdf_values, cdf_noise: float = 0.0, source: str | None = None) -> None:
        super().__init__()
        x = np.asarray(grid, dtype=float)
        F = np.asarray(cdf_values, dtype=float)
        if x.ndim != 1 or x.shape != F.shape or x.size < 2:
            raise DomainError("grid and cdf_values must be 1-D arrays of equal length >= 2")
        if not np.all(np.isfinite(x)) or not np.all(np.diff(x) > 0):
            raise DomainError("grid must be finite and strictly increasing")
        if np.any(np.diff(F) < 0) or F[0] != 0 or F[-1] != 1:
            raise DomainError("cdf_values must be nondecreasing from 0 to 1")
        self.grid, self.cdf_values = x, F
        self._slope = np.diff(F) / np.diff(x)
        self.cdf_noise = float(cdf_noise)
        self.source = source

    @classmethod
    def from_csv(cls, path: str) -> "TabulatedDistribution":
        """Read a table with header ``x,cdf``."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or set(rows[0]) != {"x", "cdf"}:
            raise DomainError(f"{path}: expected a CSV table with header x,cdf")
        return cls([float(r["x"]) for r in rows], [float(r["cdf"]) for r in rows], source=path)

    @property
    def lo(self) -> float:
        return float(self.grid[0])

    @property
    def hi(self) -> float:
        return float(self.grid[-1])

    @property
    def spec(self) -> str:
        return f"table:{self.source}" if self.source else f"table:<{self.grid.size} nodes>"

    def breakpoints(self) -> np.ndarray:
        return self.grid[1:-1]

    def _segment(self, x):
        return np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, self.grid.size - 2)

    def _cdf(self, x):
        return np.interp(x, self.grid, self.cdf_values)

    def _pdf(self, x):
        return self._slope[self._segment(x)]

    def _quantile(self, p):
        F = self.cdf_values
        i = np.clip(np.searchsorted(F, p, side="left"), 1, F.size - 1)
        dF = F[i] - F[i - 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(dF > 0, (p - F[i - 1]) / dF, 0.0)
        return self.grid[i - 1] + frac * (self.grid[i] - self.grid[i - 1])

    def is_mhr(self, n_grid: int = 1000) -> bool:
        """Convexity of the piecewise cumulative hazard, checked through its chord slopes.

        A piecewise-linear CDF has a hazard that jumps at every node, so the
        pointwise grid test would depend on where the grid falls.  ``n_grid`` is
        accepted for interface compatibility.
        """
        sf = 1.0 - self.cdf_values
        keep = sf > 0
        x, s = self.grid[keep], sf[keep]
        if x.size < 3:
            return True
        H = -np.log(s)
        h = np.diff(x)
        slope = np.diff(H) / h
        noise = max(self.cdf_noise, 4 * np.finfo(float).eps)
        slack = REGULARITY_SLACK + 8.0 * noise / (s[1:] * h)
        return bool(np.all(np.diff(slope) >= -(slack[1:] + slack[:-1])))


class MaxOfIID(Distribution):
    """Law of the maximum of ``n`` independent draws from ``base`` (CDF ``F**n``)."""

    def __init__(self, base: Distribution, n: int) -> None:
        super().__init__()
        if int(n) != n or n < 1:
            raise DomainError(f"n must be a positive integer, got {n!r}")
        self.base, self.n = base, int(n)

    @property
    def lo(self) -> float:
        return self.base.lo

    @property
    def hi(self) -> float:
        return self.base.hi

    @property
    def spec(self) -> str:
        return f"max({self.base.spec},{self.n})"

    def breakpoints(self) -> np.ndarray:
        return self.base.breakpoints()

    def _cdf(self, x):
        return self.base._cdf(x) ** self.n

    def _sf(self, x):
        with np.errstate(divide="ignore"):
            return -np.expm1(self.n * np.log1p(-self.base._sf(x)))

    def _pdf(self, x):
        return self.n * self.base._cdf(x) ** (self.n - 1) * self.base._pdf(x)

    def _quantile(self, p):
        return self.base._quantile(p ** (1.0 / self.n))

    def _isf(self, q):
        return self.base._isf(-np.expm1(np.log1p(-q) / self.n))

    def tabulate(self, resolution: int = 4096) -> TabulatedDistribution:
        lo, hi = self.grid_bounds()
        x = np.linspace(lo, hi, resolution)
        F = np.asarray(self.cdf(x))
        F[0], F[-1] = 0.0, 1.0
        return TabulatedDistribution(x, np.maximum.accumulate(F))


def max_of_iid(F: Distribution, n: int) -> MaxOfIID:
    """Effective single buyer standing for ``n`` i.i.d. buyers drawn from ``F``."""
    return MaxOfIID(F, n)


def diff_distribution(
    F: Distribution, G: Distribution, resolution: int = 4096, tol: float = 1e-12
) -> TabulatedDistribution:
    """Law of ``v - c`` for independent ``v ~ F`` and ``c ~ G``, tabulated on a uniform grid.

    The CDF at each node ``t`` is ``int F(t + c) dG(c)``, computed by adaptive
    quadrature over the seller's support with the kinks of the integrand declared.
    """
    if int(resolution) != resolution or resolution < 16:
        raise ConfigurationError(f"resolution must be an integer >= 16, got {resolution!r}")
    f_lo, f_hi = F.grid_bounds()
    g_lo, g_hi = G.grid_bounds()
    t = np.linspace(f_lo - g_hi, f_hi - g_lo, int(resolution))
    # kinks in c: where t + c crosses the ends of F's support, plus G's own nodes
    kinks = np.column_stack([f_lo - t, f_hi - t])
    gb = G.breakpoints()
    if gb.size:
        kinks = np.column_stack([kinks, np.broadcast_to(gb, (t.size, gb.size))])
    fb = F.breakpoints()
    if fb.size:
        kinks = np.column_stack([kinks, fb[None, :] - t[:, None]])

    def integrand(c, idx):
        return F.cdf(t[idx] + c) * G.pdf(c)

    vals, errs = integrate_batch(integrand, g_lo, g_hi, tol=tol, breakpoints=kinks)
    total = float(G.cdf(g_hi) - G.cdf(g_lo))
    cdf = vals / total
    if abs(cdf[-1] - 1.0) > 1e-6:
        raise ConsistencyError(f"difference law has total mass {cdf[-1]!r}")
    cdf = np.clip(np.maximum.accumulate(cdf), 0.0, 1.0)
    cdf[0], cdf[-1] = 0.0, 1.0
    return TabulatedDistribution(t, cdf, cdf_noise=max(float(errs.max()), tol) / total)
