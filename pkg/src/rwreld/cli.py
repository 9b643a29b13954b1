"""Command-line front end: experiment orchestration, CSV/JSON/SVG emission.

Subcommands
    env sample | env check-good
    exact hit-prob | exact exit-time | exact laplace
    mc tau | mc lemmas | mc prop12 | mc sinai
    rate discrete | rate continuous
    verify bessel
    plot

Every run writes its tables as schema-versioned CSV plus a manifest.json
(config echo, version, timestamps, per-file sha256, warnings), also on
failure, with the failure cause.  Exit status: 0 success, 2 validation
error, 3 numerical/convergence error.  Property verdicts always land in a
CSV, never only in the exit code.  Randomized commands take --seed; a
generated seed is recorded in the manifest.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import envmodel as em
from . import mcsim, ratediscrete, specialcont
from .chainexact import (
    expected_exit_time_bound,
    expected_exit_time_exact,
    hit_prob_before,
    quenched_laplace,
)
from .csvio import RunManifest, write_csv
from .errors import RwreError, ValidationError
from .svgplot import emit_plot

VERDICT_SCHEMA = "rwreld.verdicts/1"
VERDICT_COLUMNS = ["check", "value", "bound_low", "bound_high", "passed"]


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def parse_dist(text: str) -> em.EnvDistribution:
    """two-point:P | uniform:EPS0 | constant:P | explicit:v1,v2@w1,w2"""
    try:
        kind, _, arg = text.partition(":")
        if kind in ("two-point", "two_point"):
            return em.EnvDistribution.two_point(float(arg))
        if kind == "uniform":
            return em.EnvDistribution.uniform(float(arg))
        if kind == "constant":
            return em.EnvDistribution.constant(float(arg))
        if kind == "explicit":
            vals, _, weights = arg.partition("@")
            v = [float(t) for t in vals.split(",")]
            w = [float(t) for t in weights.split(",")] if weights \
                else [1.0] * len(v)
            return em.EnvDistribution.explicit(v, w)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad distribution spec {text!r}: {exc}")
    raise ValidationError(f"unknown distribution kind in {text!r}")


def parse_scale(text: str) -> float:
    """Scale n: a float, or eK for exp(K) (e.g. e20)."""
    if text.startswith("e") and not text[1:].startswith("-"):
        try:
            return math.exp(float(text[1:]))
        except ValueError:
            pass
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"bad scale {text!r}")


def parse_grid(text: str) -> np.ndarray:
    """Comma list, or geom:LO:HI:N / lin:LO:HI:N."""
    try:
        if text.startswith("geom:"):
            lo, hi, n = text.split(":")[1:]
            return np.geomspace(float(lo), float(hi), int(n))
        if text.startswith("lin:"):
            lo, hi, n = text.split(":")[1:]
            return np.linspace(float(lo), float(hi), int(n))
        return np.array([float(t) for t in text.split(",") if t])
    except ValueError as exc:
        raise ValidationError(f"bad grid {text!r}: {exc}")


def _load_env(opts) -> em.Environment:
    if opts.env_json:
        return em.Environment.loads(Path(opts.env_json).read_text())
    if opts.dist is None:
        raise ValidationError("need --env-json or --dist with --lo/--hi")
    return em.sample_environment(parse_dist(opts.dist), opts.lo, opts.hi,
                                 opts.seed)


def _fmtf(v) -> str:
    return "" if v is None else repr(float(v))


# ---------------------------------------------------------------------------
# command implementations (each returns a list of warning strings)
# ---------------------------------------------------------------------------

def cmd_env_sample(opts, out: Path, files: list) -> list:
    env = em.sample_environment(parse_dist(opts.dist), opts.lo, opts.hi,
                                opts.seed)
    (out / "environment.json").write_text(env.dumps() + "\n")
    files.append(out / "environment.json")
    rows = [(i, _fmtf(w)) for i, w in zip(range(env.lo, env.hi + 1), env.omega)]
    write_csv(out / "env_sites.csv", "rwreld.env_sites/1",
              ["site", "omega"], rows)
    files.append(out / "env_sites.csv")
    return []


def cmd_env_check_good(opts, out: Path, files: list) -> list:
    dist = parse_dist(opts.dist)
    params = em.good_env_params(dist, opts.eps, parse_scale(opts.n))
    if opts.env_json:
        env = em.Environment.loads(Path(opts.env_json).read_text())
    else:
        env = em.sample_environment(dist, -1, params.check_window_hi,
                                    opts.seed)
    report = em.check_good_environment(env, params)
    doc = {"params": params.to_json(), "report": report.to_json()}
    (out / "good_env_report.json").write_text(json.dumps(doc, indent=2) + "\n")
    files.append(out / "good_env_report.json")
    r = report
    write_csv(out / "good_env.csv", "rwreld.good_env/1",
              ["e1_descent_cone", "e2_drop_window", "e3_descent_tunnel",
               "e4_rise_window", "e5_rise_tunnel", "good", "b_n", "m_n",
               "m_n_bounds_ok", "v_mn_bounds_ok"],
              [(r.e1_descent_cone, r.e2_drop_window, r.e3_descent_tunnel,
                r.e4_rise_window, r.e5_rise_tunnel, r.good, r.b_n, r.m_n,
                r.m_n_bounds_ok, r.v_mn_bounds_ok)])
    files.append(out / "good_env.csv")
    warn = [] if params.eps_prime <= 0.05 else \
        [f"eps' = {params.eps_prime:.4f} above the conservative 1/20 mark"]
    return warn


def cmd_exact_hit_prob(opts, out: Path, files: list) -> list:
    env = _load_env(opts)
    pot = em.potential(env)
    p = hit_prob_before(pot, opts.x, opts.a, opts.b)
    write_csv(out / "exact_hit_prob.csv", "rwreld.exact_hit_prob/1",
              ["x", "a", "b", "prob"],
              [(opts.x, opts.a, opts.b, _fmtf(p))])
    files.append(out / "exact_hit_prob.csv")
    return []


def cmd_exact_exit_time(opts, out: Path, files: list) -> list:
    env = _load_env(opts)
    pot = em.potential(env)
    exact = expected_exit_time_exact(env, opts.x, opts.a, opts.b)
    bound = expected_exit_time_bound(pot, opts.x, opts.a, opts.b)
    write_csv(out / "exact_exit_time.csv", "rwreld.exact_exit_time/1",
              ["x", "a", "b", "exact", "bound"],
              [(opts.x, opts.a, opts.b, _fmtf(exact), _fmtf(bound))])
    files.append(out / "exact_exit_time.csv")
    write_csv(out / "verdicts.csv", VERDICT_SCHEMA, VERDICT_COLUMNS,
              [("bound_dominates_exact", _fmtf(bound), _fmtf(exact), "",
                bound >= exact)])
    files.append(out / "verdicts.csv")
    return []


def cmd_exact_laplace(opts, out: Path, files: list) -> list:
    env = _load_env(opts)
    ev = quenched_laplace(env, opts.r, opts.direction, opts.tol)
    write_csv(out / "exact_laplace.csv", "rwreld.exact_laplace/1",
              ["r", "direction", "phi", "dphi", "d2phi", "bracket_width",
               "depth_used"],
              [(ev.r, opts.direction, _fmtf(ev.phi), _fmtf(ev.dphi),
                _fmtf(ev.d2phi), _fmtf(ev.bracket_width), ev.depth_used)])
    files.append(out / "exact_laplace.csv")
    return []


def cmd_mc_tau(opts, out: Path, files: list) -> list:
    env = _load_env(opts)
    lo = opts.lo_steps if opts.lo_steps else 1
    hi = opts.hi_steps if opts.hi_steps else opts.cap
    part = mcsim.estimate_interval_partition(
        env, lo, hi, opts.target, opts.reps, opts.seed, start=opts.start,
        threads=opts.threads)
    rows = []
    for name, est in (("below", part.below), ("inside", part.inside),
                      ("above", part.above)):
        rows.append((name, lo, hi, _fmtf(est.mean), _fmtf(est.ci_low),
                     _fmtf(est.ci_high), est.replicas))
    write_csv(out / "mc_tau.csv", "rwreld.mc_tau/1",
              ["band", "lo", "hi", "prob", "ci_low", "ci_high", "replicas"],
              rows)
    files.append(out / "mc_tau.csv")
    write_csv(out / "verdicts.csv", VERDICT_SCHEMA, VERDICT_COLUMNS,
              [("partition_sums_to_one", _fmtf(part.total()), "1", "1",
                abs(part.total() - 1.0) < 1e-12)])
    files.append(out / "verdicts.csv")
    return []


def cmd_mc_lemmas(opts, out: Path, files: list) -> list:
    report = mcsim.verify_lemma_chain(parse_dist(opts.dist), opts.eps,
                                      parse_scale(opts.n), opts.env_tries,
                                      opts.walk_reps, opts.seed, opts.threads)
    rows = [(c.name, c.kind, _fmtf(c.value), _fmtf(c.floor), _fmtf(c.ceiling),
             _fmtf(c.ci_low), _fmtf(c.ci_high), c.passed)
            for c in report.checks]
    write_csv(out / "mc_lemmas.csv", "rwreld.mc_lemmas/1",
              ["check", "kind", "value", "floor", "ceiling", "ci_low",
               "ci_high", "passed"], rows)
    files.append(out / "mc_lemmas.csv")
    write_csv(out / "verdicts.csv", VERDICT_SCHEMA, VERDICT_COLUMNS,
              [(c.name, _fmtf(c.value), _fmtf(c.floor), _fmtf(c.ceiling),
                c.passed) for c in report.checks])
    files.append(out / "verdicts.csv")
    sc = report.scan
    return [f"good environment found at try {sc.first_good_try} "
            f"(acceptance {sc.acceptance_rate:.2e})"] if sc else []


def cmd_mc_prop12(opts, out: Path, files: list) -> list:
    dist = parse_dist(opts.dist)
    rs = parse_grid(opts.r_list)
    alpha = opts.alpha
    rows, verdicts, warns = [], [], []
    logs = []
    for j, r in enumerate(rs):
        cap = opts.cap if opts.cap else int(math.ceil(50.0 / r)) * 2
        est, info = mcsim.estimate_annealed_damped_moment(
            dist, alpha, float(r), None, opts.reps, cap,
            mcsim.subseed(opts.seed, j), opts.threads)
        bound = (alpha / math.e) ** alpha * r ** (-alpha)
        rows.append((_fmtf(r), _fmtf(est.mean), _fmtf(est.ci_low),
                     _fmtf(est.ci_high), est.replicas, info["n_capped"],
                     _fmtf(bound)))
        verdicts.append((f"moment_bound_r_{r:g}", _fmtf(est.mean), "",
                         _fmtf(bound), est.mean <= bound))
        logs.append((math.log(1.0 / r), math.log(est.mean)))
        if info["n_capped"]:
            warns.append(f"r={r:g}: {info['n_capped']} capped replicas")
    write_csv(out / "mc_prop12.csv", "rwreld.mc_prop12/1",
              ["r", "estimate", "ci_low", "ci_high", "replicas", "n_capped",
               "bound"], rows)
    files.append(out / "mc_prop12.csv")
    if len(logs) >= 2:
        slope = float(np.polyfit([p[0] for p in logs],
                                 [p[1] for p in logs], 1)[0])
        verdicts.append(("loglog_slope_vs_inverse_r", _fmtf(slope),
                         _fmtf(opts.slope_low), _fmtf(opts.slope_high),
                         opts.slope_low <= slope <= opts.slope_high))
    write_csv(out / "verdicts.csv", VERDICT_SCHEMA, VERDICT_COLUMNS, verdicts)
    files.append(out / "verdicts.csv")
    return warns


def cmd_mc_sinai(opts, out: Path, files: list) -> list:
    dist = parse_dist(opts.dist)
    ns = [int(v) for v in parse_grid(opts.n_list)]
    summaries = mcsim.sinai_scaling_sample(dist, ns, opts.reps, opts.seed,
                                           opts.window_factor, opts.threads)
    rows = [(s.n, s.replicas, s.exhausted, _fmtf(s.quantiles["q05"]),
             _fmtf(s.quantiles["q25"]), _fmtf(s.quantiles["q50"]),
             _fmtf(s.quantiles["q75"]), _fmtf(s.quantiles["q95"]),
             _fmtf(s.iqr), _fmtf(s.median_abs)) for s in summaries]
    write_csv(out / "mc_sinai.csv", "rwreld.mc_sinai/1",
              ["n", "replicas", "exhausted", "q05", "q25", "q50", "q75",
               "q95", "iqr", "median_abs"], rows)
    files.append(out / "mc_sinai.csv")
    verdicts = []
    if len(summaries) >= 2:
        a, b = summaries[0], summaries[-1]
        rel = abs(a.iqr - b.iqr) / max(abs(b.iqr), 1e-300)
        verdicts.append(("iqr_relative_drift", _fmtf(rel), "", "0.5",
                         rel < 0.5))
    for s in summaries:
        verdicts.append((f"median_abs_bounded_n_{s.n}", _fmtf(s.median_abs),
                         "", "10", s.median_abs <= 10.0))
    write_csv(out / "verdicts.csv", VERDICT_SCHEMA, VERDICT_COLUMNS, verdicts)
    files.append(out / "verdicts.csv")
    warns = [f"n={s.n}: {s.exhausted} exhausted walks"
             for s in summaries if s.exhausted]
    return warns


def cmd_rate_discrete(opts, out: Path, files: list) -> list:
    dist = parse_dist(opts.dist)
    rs = sorted(float(r) for r in parse_grid(opts.r_list))
    trend = ratediscrete.curvature_trend(dist, rs, opts.env_samples,
                                         opts.tol, opts.seed)
    rows = [(_fmtf(p.r), _fmtf(p.Lambda), _fmtf(p.dLambda), _fmtf(p.d2Lambda),
             _fmtf(p.f), _fmtf(p.g), _fmtf(p.h), _fmtf(p.mc_err))
            for p in trend.points]
    write_csv(out / "rate_cgf.csv", "rwreld.rate_cgf/1",
              ["r", "Lambda", "dLambda", "d2Lambda", "f", "g", "h", "mc_err"],
              rows)
    files.append(out / "rate_cgf.csv")
    verdicts = [
        ("f_nonnegative", "", "", "", trend.f_nonnegative),
        ("chain_f_le_g_le_h", "", "", "", trend.chain_ok),
        ("f_endpoint_decrease", _fmtf(trend.points[-1].f), "",
         _fmtf(trend.points[0].f), trend.f_endpoint_decrease),
        ("h_loglog_slope", _fmtf(trend.h_loglog_slope), "0.7", "1.3",
         trend.h_slope_near_one),
    ]
    if opts.velocity_list:
        vels = [float(v) for v in parse_grid(opts.velocity_list)]
        table = ratediscrete.rate_function_table(dist, rs, vels,
                                                 opts.env_samples, opts.tol,
                                                 opts.seed)
        write_csv(out / "rate_velocity.csv", "rwreld.rate_velocity/1",
                  ["velocity", "I", "I_second_diff", "r_star"],
                  [(_fmtf(p.velocity), _fmtf(p.I), _fmtf(p.I_second_diff),
                    _fmtf(p.r_star)) for p in table])
        files.append(out / "rate_velocity.csv")
        inc = all(table[i].I <= table[i + 1].I + 1e-12
                  for i in range(len(table) - 1))
        verdicts.append(("I_nondecreasing", "", "", "", inc))
    write_csv(out / "verdicts.csv", VERDICT_SCHEMA, VERDICT_COLUMNS, verdicts)
    files.append(out / "verdicts.csv")
    return []


def cmd_rate_continuous(opts, out: Path, files: list) -> list:
    kappa = opts.kappa
    verdicts = []
    if opts.x_list:
        rows = []
        for x in parse_grid(opts.x_list):
            pt = specialcont.speed_rate_point(kappa, float(x), opts.tol)
            rows.append((_fmtf(pt.kappa), _fmtf(pt.argument),
                         _fmtf(pt.J_kappa), _fmtf(pt.J_B),
                         _fmtf(pt.J_B - pt.J_kappa)))
        write_csv(out / "rate_speed.csv", "rwreld.rate_speed/1",
                  ["kappa", "x", "J_kappa", "J_B", "diff"], rows)
        files.append(out / "rate_speed.csv")
        if kappa > 1.0:
            verdicts.append(("J_below_brownian_benchmark", "", "", "",
                             all(float(r[4]) > 0.0 for r in rows)))
    if opts.lambda_list:
        rows = []
        for lam in parse_grid(opts.lambda_list):
            g = specialcont.laplace_exponent(kappa, float(lam), opts.tol)
            phi, _ = specialcont.bm_exponent_and_defect(kappa, float(lam))
            rows.append((_fmtf(kappa), _fmtf(lam), _fmtf(g), _fmtf(phi),
                         _fmtf(phi - g)))
        write_csv(out / "rate_exponent.csv", "rwreld.rate_exponent/1",
                  ["kappa", "lambda", "Gamma", "phi_v", "margin"], rows)
        files.append(out / "rate_exponent.csv")
        if kappa > 1.0:
            verdicts.append(("exponent_strictly_dominated", "", "", "",
                             all(float(r[4]) > 0.0 for r in rows)))
    if not opts.x_list and not opts.lambda_list:
        raise ValidationError("need --x-list and/or --lambda-list")
    write_csv(out / "verdicts.csv", VERDICT_SCHEMA, VERDICT_COLUMNS, verdicts)
    files.append(out / "verdicts.csv")
    return []


def cmd_verify_bessel(opts, out: Path, files: list) -> list:
    rep = specialcont.verify_bessel_inequalities(parse_grid(opts.nu_list),
                                                 parse_grid(opts.y_list),
                                                 opts.tol)
    rows = [(_fmtf(nu), _fmtf(y), _fmtf(r), _fmtf(up), _fmtf(lo))
            for nu, y, r, up, lo in zip(rep.nu.ravel(), rep.y.ravel(),
                                        rep.ratio.ravel(),
                                        rep.upper_margin.ravel(),
                                        rep.lower_margin.ravel())]
    write_csv(out / "bessel_margins.csv", "rwreld.bessel_margins/1",
              ["nu", "y", "ratio", "upper_margin", "lower_margin"], rows)
    files.append(out / "bessel_margins.csv")
    write_csv(out / "verdicts.csv", VERDICT_SCHEMA, VERDICT_COLUMNS,
              [("upper_margin_positive", _fmtf(rep.min_upper), "0", "",
                rep.min_upper > 0.0),
               ("lower_margin_positive", _fmtf(rep.min_lower), "0", "",
                rep.min_lower > 0.0)])
    files.append(out / "verdicts.csv")
    return []


def cmd_plot(opts, out: Path, files: list) -> list:
    target = out / opts.out_name
    emit_plot(opts.csv, opts.x, opts.y.split(","), target,
              logx=opts.logx, logy=opts.logy, title=opts.title)
    files.append(target)
    return []


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_RANDOMIZED = {"env sample", "env check-good", "exact hit-prob",
               "exact exit-time", "exact laplace", "mc tau", "mc lemmas",
               "mc prop12", "mc sinai", "rate discrete"}

_HANDLERS = {
    "env sample": cmd_env_sample,
    "env check-good": cmd_env_check_good,
    "exact hit-prob": cmd_exact_hit_prob,
    "exact exit-time": cmd_exact_exit_time,
    "exact laplace": cmd_exact_laplace,
    "mc tau": cmd_mc_tau,
    "mc lemmas": cmd_mc_lemmas,
    "mc prop12": cmd_mc_prop12,
    "mc sinai": cmd_mc_sinai,
    "rate discrete": cmd_rate_discrete,
    "rate continuous": cmd_rate_continuous,
    "verify bessel": cmd_verify_bessel,
    "plot": cmd_plot,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):       # argparse exits with 2 already; unify text
        raise ValidationError(message)


def _add_env_source(p):
    p.add_argument("--env-json", default=None)
    p.add_argument("--dist", default=None)
    p.add_argument("--lo", type=int, default=-64)
    p.add_argument("--hi", type=int, default=64)


def build_parser() -> _Parser:
    top = _Parser(prog="rwreld")
    top.add_argument("--config", default=None,
                     help="JSON config file; flags override its values")
    top.add_argument("--out", default=".", help="output directory")
    top.add_argument("--seed", type=int, default=None)
    top.add_argument("--threads", type=int,
                     default=int(os.environ.get("RWRELD_THREADS", "1")))
    sub = top.add_subparsers(dest="command", required=True)

    env = sub.add_parser("env").add_subparsers(dest="sub", required=True)
    p = env.add_parser("sample")
    p.add_argument("--dist", required=True)
    p.add_argument("--lo", type=int, required=True)
    p.add_argument("--hi", type=int, required=True)
    p = env.add_parser("check-good")
    p.add_argument("--dist", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--env-json", default=None)

    exact = sub.add_parser("exact").add_subparsers(dest="sub", required=True)
    p = exact.add_parser("hit-prob")
    _add_env_source(p)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p = exact.add_parser("exit-time")
    _add_env_source(p)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p = exact.add_parser("laplace")
    _add_env_source(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--direction", choices=["right", "left"], default="right")
    p.add_argument("--tol", type=float, default=1e-10)

    mc = sub.add_parser("mc").add_subparsers(dest="sub", required=True)
    p = mc.add_parser("tau")
    _add_env_source(p)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--cap", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--lo-steps", type=int, default=None)
    p.add_argument("--hi-steps", type=int, default=None)
    p = mc.add_parser("lemmas")
    p.add_argument("--dist", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--env-tries", type=int, default=100_000)
    p.add_argument("--walk-reps", type=int, default=400)
    p = mc.add_parser("prop12")
    p.add_argument("--dist", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--r-list", required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--slope-low", type=float, default=0.6)
    p.add_argument("--slope-high", type=float, default=1.1)
    p = mc.add_parser("sinai")
    p.add_argument("--dist", required=True)
    p.add_argument("--n-list", required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--window-factor", type=float, default=20.0)

    rate = sub.add_parser("rate").add_subparsers(dest="sub", required=True)
    p = rate.add_parser("discrete")
    p.add_argument("--dist", required=True)
    p.add_argument("--r-list", required=True)
    p.add_argument("--velocity-list", default=None)
    p.add_argument("--env-samples", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-10)
    p = rate.add_parser("continuous")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--x-list", default=None)
    p.add_argument("--x", dest="x_list", default=None,
                   help="alias for a single-point --x-list")
    p.add_argument("--lambda-list", default=None)
    p.add_argument("--tol", type=float, default=1e-12)

    verify = sub.add_parser("verify").add_subparsers(dest="sub", required=True)
    p = verify.add_parser("bessel")
    p.add_argument("--nu-list", required=True)
    p.add_argument("--y-list", required=True)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("plot")
    p.add_argument("--csv", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True, help="comma-separated y columns")
    p.add_argument("--out-name", default="plot.svg")
    p.add_argument("--logx", action="store_true")
    p.add_argument("--logy", action="store_true")
    p.add_argument("--title", default="")
    return top


def _apply_config(opts: argparse.Namespace, parser_defaults: dict) -> dict:
    """Merge the JSON config under explicit flags; reject unknown keys."""
    if not opts.config:
        return {k: v for k, v in vars(opts).items() if k != "config"}
    doc = json.loads(Path(opts.config).read_text())
    if not isinstance(doc, dict):
        raise ValidationError("config file must hold a JSON object")
    known = set(vars(opts))
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValidationError(f"unknown config keys: {unknown}")
    for key, val in doc.items():
        if getattr(opts, key) == parser_defaults.get(key):
            setattr(opts, key, val)
    return {k: v for k, v in vars(opts).items() if k != "config"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        opts = parser.parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    command = opts.command + ("" if not getattr(opts, "sub", None)
                              else f" {opts.sub}")
    out = Path(opts.out)
    out.mkdir(parents=True, exist_ok=True)

    defaults = {a.dest: a.default for a in parser._actions}
    manifest = RunManifest(command=command, config={}, version=__version__)
    status = 0
    files: list = []
    try:
        config = _apply_config(opts, defaults)
        if command in _RANDOMIZED and opts.seed is None:
            opts.seed = secrets.randbits(48)
            manifest.warnings.append(f"seed generated: {opts.seed}")
        config["seed"] = opts.seed
        manifest.config = {k: v for k, v in sorted(config.items())}
        manifest.master_seed = opts.seed
        warns = _HANDLERS[command](opts, out, files)
        manifest.warnings.extend(warns)
        manifest.finish("ok")
    except ValidationError as exc:
        manifest.finish("validation-error", str(exc))
        print(f"error: {exc}", file=sys.stderr)
        status = 2
    except RwreError as exc:
        manifest.finish("numerical-error", str(exc))
        print(f"error: {exc}", file=sys.stderr)
        status = 3
    for f in files:
        manifest.add_file(f)
    manifest.write(out / "manifest.json")
    return status


if __name__ == "__main__":
    sys.exit(main())
