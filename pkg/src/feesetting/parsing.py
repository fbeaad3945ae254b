"""Text specs for distributions and fee schedules.

Distributions: ``uniform:lo,hi``, ``exp:lambda``, ``power:a,vbar``,
``gpd:mu,lambda,xi``, ``rgpd:mu,lambda,xi``, ``gdelta:delta``, ``table:<path>``
(CSV with header ``x,cdf``).

Schedules: ``affine:alpha,beta``, ``constant:k``, ``thm1``, ``mhr``, ``optimal``,
``ln13:xi,lambda,mu``.
"""

from __future__ import annotations

from .dist import (
    Distribution,
    Exponential,
    GeneralizedPareto,
    Power,
    ReverseGeneralizedPareto,
    TabulatedDistribution,
    Uniform,
    WorstCaseSeller,
)
from .errors import ConfigurationError
from .mech import (
    Affine,
    Constant,
    FeeSchedule,
    SellerStrategy,
    ln13_affine_schedule,
    mhr_constant_schedule,
    optimal_fee_schedule,
    thm1_schedule,
)

_DISTS = {
    "uniform": (2, Uniform),
    "exp": (1, Exponential),
    "power": (2, Power),
    "gpd": (3, GeneralizedPareto),
    "rgpd": (3, ReverseGeneralizedPareto),
    "gdelta": (1, WorstCaseSeller),
}


def _split(spec: str) -> tuple[str, list[str]]:
    name, _, rest = spec.strip().partition(":")
    return name.strip().lower(), ([a.strip() for a in rest.split(",")] if rest else [])


def _floats(name: str, args: list[str], arity: int, spec: str) -> list[float]:
    if len(args) != arity:
        raise ConfigurationError(f"{spec!r}: {name} takes {arity} parameter(s), got {len(args)}")
    try:
        return [float(a) for a in args]
    except ValueError:
        raise ConfigurationError(f"{spec!r}: parameters must be numbers") from None


def parse_distribution(spec: str) -> Distribution:
    name, args = _split(spec)
    if name == "table":
        path = spec.strip().partition(":")[2]
        if not path:
            raise ConfigurationError(f"{spec!r}: table needs a file path")
        try:
            return TabulatedDistribution.from_csv(path)
        except OSError as exc:
            raise ConfigurationError(f"{spec!r}: {exc}") from None
    if name not in _DISTS:
        raise ConfigurationError(f"unknown distribution {name!r} in {spec!r}")
    arity, cls = _DISTS[name]
    return cls(*_floats(name, args, arity, spec))


def parse_schedule(
    spec: str, buyer: Distribution, seller: Distribution
) -> tuple[FeeSchedule, SellerStrategy | None]:
    """Resolve a schedule spec against the priors; returns the schedule and any strategy it carries."""
    name, args = _split(spec)
    if name == "affine":
        return Affine(*_floats(name, args, 2, spec)), None
    if name == "constant":
        return Constant(*_floats(name, args, 1, spec)), None
    if name == "ln13":
        xi, lam, mu = _floats(name, args, 3, spec)
        return ln13_affine_schedule(xi, lam, mu), None
    if args:
        raise ConfigurationError(f"{spec!r}: {name} takes no parameters")
    if name == "thm1":
        return thm1_schedule(buyer), None
    if name == "mhr":
        return mhr_constant_schedule(buyer, seller), None
    if name == "optimal":
        w = optimal_fee_schedule(buyer, seller)
        return w, w.strategy
    raise ConfigurationError(f"unknown schedule {name!r} in {spec!r}")


def parse_float_list(text: str, what: str) -> list[float]:
    try:
        out = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigurationError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not out:
        raise ConfigurationError(f"{what}: empty list")
    return out


def parse_range(text: str, what: str) -> tuple[float, float]:
    vals = parse_float_list(text, what)
    if len(vals) != 2 or not vals[0] <= vals[1]:
        raise ConfigurationError(f"{what}: expected lo,hi with lo <= hi, got {text!r}")
    return vals[0], vals[1]
