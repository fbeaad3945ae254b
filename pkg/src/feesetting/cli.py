"""Command-line front end.

Subcommands: ``eval``, ``sweep``, ``verify`` and ``worstcase``.  Options may also
come from an INI-style file given with ``--config``; a ``[DEFAULT]`` section and
a section named after the subcommand are read, and command-line flags win.

Exit status: 0 success, 1 a theorem check failed, 2 usage or configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys

import numpy as np

from .dist import ReverseGeneralizedPareto, Uniform
from .errors import ConfigurationError, DomainError, FeeSettingError, PreconditionError
from .evaluation import (
    CSV_HEADER,
    MonteCarlo,
    Quadrature,
    _g9,
    affine_revenue_grid,
    expected_max_surplus,
    expected_myerson_revenue,
    ratio_report,
    EvalReport,
)
from .mech import Affine
from .numerics import Estimate
from .parsing import parse_distribution, parse_float_list, parse_range, parse_schedule
from .verify import (
    CHECK_CSV_HEADER,
    check_ln13,
    check_main1,
    check_max_iid_mhr,
    check_mhr,
    check_optimal_fee,
    check_prior_independent_exact8,
    check_unif_3approx,
    gdelta_experiment,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "buyer": "uniform:0,1",
    "seller": "uniform:0,1",
    "schedule": "thm1",
    "method": "quad",
    "tol": "1e-8",
    "samples": "1000000",
    "seed": "0",
    "out": None,
    "deltas": "0.1,0.01,0.001",
    "n_list": "1,2,3,5,10",
    "alpha_range": "0,2",
    "beta_range": "0,1",
    "steps": "11",
}

THEOREMS = ("main1", "unif3", "mhr", "exact8", "optfee", "ln13", "maxiid", "gdelta")
GDELTA_HEADER = ["delta", "max_surplus", "closed_form_surplus", "best_proper_revenue", "sg", "rg", "best_alpha", "best_beta"]


class UsageError(ConfigurationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="feesetting", description="Fee-setting intermediation: evaluation and theorem checks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, schedule=False, sweep=False, deltas=False):
        sp.add_argument("--config", help="INI file with [DEFAULT] and per-command sections")
        sp.add_argument("--buyer", help="buyer value distribution spec")
        sp.add_argument("--seller", help="seller cost distribution spec")
        if schedule:
            sp.add_argument("--schedule", help="fee schedule spec")
        sp.add_argument("--method", choices=("quad", "mc"))
        sp.add_argument("--tol", help="quadrature absolute tolerance")
        sp.add_argument("--samples", help="Monte Carlo sample count")
        sp.add_argument("--seed", help="Monte Carlo seed")
        sp.add_argument("--out", help="output path; .json/.jsonl writes JSON lines, anything else CSV (appended)")
        if sweep:
            sp.add_argument("--alpha-range", dest="alpha_range", help="lo,hi")
            sp.add_argument("--beta-range", dest="beta_range", help="lo,hi")
            sp.add_argument("--steps", help="grid points per axis (>= 2)")
        if deltas:
            sp.add_argument("--deltas", help="comma-separated worst-case seller parameters")

    common(sub.add_parser("eval", help="evaluate one schedule"), schedule=True)
    common(sub.add_parser("sweep", help="fee revenue over an (alpha, beta) grid"), sweep=True)
    v = sub.add_parser("verify", help="run a theorem check")
    v.add_argument("theorem", help="one of: " + ", ".join(THEOREMS))
    common(v, deltas=True)
    v.add_argument("--n-list", dest="n_list", help="pool sizes for maxiid")
    common(sub.add_parser("worstcase", help="best proper schedule against the worst-case sellers"), deltas=True)
    return p


def resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file and the flags, in increasing priority."""
    conf = dict(DEFAULTS)
    if getattr(args, "config", None):
        cp = configparser.ConfigParser()
        if not cp.read(args.config):
            raise UsageError(f"cannot read config file {args.config!r}")
        section = cp[args.command] if cp.has_section(args.command) else cp.defaults()
        for k, val in section.items():
            conf[k.replace("-", "_")] = val
    for k, val in vars(args).items():
        if val is not None:
            conf[k] = val
    return conf


def make_method(conf: dict):
    try:
        if conf["method"] == "mc":
            return MonteCarlo(int(conf["samples"]), int(conf["seed"]))
        if conf["method"] == "quad":
            return Quadrature(float(conf["tol"]))
    except ValueError:
        raise UsageError("tol, samples and seed must be numbers") from None
    raise UsageError(f"unknown method {conf['method']!r}")


def _is_json(path: str | None) -> bool:
    return bool(path) and path.endswith((".json", ".jsonl"))


def _append_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(header)
        w.writerows(rows)


def _append_lines(path: str, lines: list[str]) -> None:
    with open(path, "a") as fh:
        for line in lines:
            fh.write(line + "\n")


def _priors(conf):
    return parse_distribution(conf["buyer"]), parse_distribution(conf["seller"])


# ---------------------------------------------------------------------------


def cmd_eval(conf: dict) -> int:
    buyer, seller = _priors(conf)
    method = make_method(conf)
    w, strategy = parse_schedule(conf["schedule"], buyer, seller)
    rep = ratio_report(buyer, seller, w, method, strategy)
    flags = f" [{'; '.join(rep.flags)}]" if rep.flags else ""
    print(
        f"{rep.buyer} | {rep.seller} | {rep.schedule} | {method.label}: "
        f"rev_apx {_g9(rep.rev_apx.value)} opt_rev {_g9(rep.opt_rev.value)} "
        f"opt_surplus {_g9(rep.opt_surplus.value)} ratio_rev {_g9(rep.ratio_rev)} "
        f"ratio_surplus {_g9(rep.ratio_surplus)}{flags}"
    )
    if conf["out"]:
        if _is_json(conf["out"]):
            _append_lines(conf["out"], [rep.to_json()])
        else:
            _append_csv(conf["out"], CSV_HEADER, [rep.csv_row()])
    return EXIT_OK


def cmd_sweep(conf: dict) -> int:
    buyer, seller = _priors(conf)
    method = make_method(conf)
    try:
        steps = int(conf["steps"])
    except ValueError:
        raise UsageError("steps must be an integer") from None
    if steps < 2:
        raise UsageError("steps must be at least 2")
    a_lo, a_hi = parse_range(conf["alpha_range"], "alpha-range")
    b_lo, b_hi = parse_range(conf["beta_range"], "beta-range")
    alphas, betas = np.linspace(a_lo, a_hi, steps), np.linspace(b_lo, b_hi, steps)
    vals, errs = affine_revenue_grid(buyer, seller, alphas, betas, method)
    opt = expected_myerson_revenue(buyer, seller, method)
    surplus = expected_max_surplus(buyer, seller, method)
    reports = []
    for i, a in enumerate(alphas):
        for j, b in enumerate(betas):
            rev = Estimate(float(vals[i, j]), float(errs[i, j]))
            r_rev = opt.value / rev.value if rev.value > 0 else np.inf
            r_sur = surplus.value / rev.value if rev.value > 0 else np.inf
            reports.append(EvalReport(rev, opt, surplus, r_rev, r_sur, method,
                                      buyer=buyer.spec, seller=seller.spec, schedule=Affine(a, b).label))
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    print(f"{steps}x{steps} cells; max rev_apx {_g9(vals[i, j])} at alpha {_g9(alphas[i])} beta {_g9(betas[j])}")
    if conf["out"]:
        if _is_json(conf["out"]):
            _append_lines(conf["out"], [r.to_json() for r in reports])
        else:
            _append_csv(conf["out"], CSV_HEADER, [r.csv_row() for r in reports])
    return EXIT_OK


def _emit_checks(checks, conf) -> int:
    for c in checks:
        print(c.summary())
    if conf["out"]:
        if _is_json(conf["out"]):
            _append_lines(conf["out"], [c.to_json() for c in checks])
        else:
            _append_csv(conf["out"], CHECK_CSV_HEADER, [c.csv_row() for c in checks])
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def _print_gdelta(rows) -> None:
    print(" ".join(GDELTA_HEADER))
    for r in rows:
        print(" ".join(_g9(x) for x in _row_values(r)))


def cmd_verify(conf: dict) -> int:
    name = conf["theorem"]
    if name not in THEOREMS:
        raise UsageError(f"unknown theorem {name!r}; choose from {', '.join(THEOREMS)}")
    method = make_method(conf)
    if name == "gdelta":
        rows, checks = gdelta_experiment(parse_float_list(conf["deltas"], "deltas"), method)
        _print_gdelta(rows)
        return _emit_checks(checks, conf)
    buyer, seller = _priors(conf)
    if name == "main1":
        checks = check_main1(buyer, seller, method)
    elif name == "unif3":
        checks = [check_unif_3approx(seller, method)]
    elif name == "mhr":
        checks = [check_mhr(buyer, seller, method)]
    elif name == "exact8":
        checks = check_prior_independent_exact8(seller, method)
    elif name == "optfee":
        checks = [check_optimal_fee(buyer, seller, method)]
    elif name == "ln13":
        if isinstance(seller, ReverseGeneralizedPareto):
            xi, lam, mu = seller.xi, seller.lam, seller.mu
        elif isinstance(seller, Uniform):
            xi, lam, mu = 1.0, seller.lam, -seller.hi
        else:
            raise UsageError("ln13 needs an rgpd or uniform seller")
        checks = [check_ln13(buyer, xi, lam, mu, method)]
    else:
        n_list = [int(x) for x in parse_float_list(conf["n_list"], "n-list")]
        checks = check_max_iid_mhr(buyer, n_list, seller, method)
    return _emit_checks(checks, conf)


def cmd_worstcase(conf: dict) -> int:
    method = make_method(conf)
    rows, checks = gdelta_experiment(parse_float_list(conf["deltas"], "deltas"), method)
    _print_gdelta(rows)
    if conf["out"]:
        if _is_json(conf["out"]):
            _append_lines(conf["out"], [json.dumps({k: float(_g9(v)) if np.isfinite(v) else _g9(v)
                                                    for k, v in zip(GDELTA_HEADER, _row_values(r))}) for r in rows])
        else:
            _append_csv(conf["out"], GDELTA_HEADER, [[_g9(x) for x in _row_values(r)] for r in rows])
    for c in checks:
        print(c.summary())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def _row_values(r):
    return (r.delta, r.max_surplus, r.closed_form_surplus, r.best_proper_revenue,
            r.surplus_gap, r.revenue_gap, r.best_alpha, r.best_beta)


COMMANDS = {"eval": cmd_eval, "sweep": cmd_sweep, "verify": cmd_verify, "worstcase": cmd_worstcase}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        conf = resolve(args)
        return COMMANDS[args.command](conf)
    except (ConfigurationError, DomainError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FeeSettingError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
