"""Monte Carlo engine: quenched walks, hitting-time laws, scaling checks.

Replicas are independent tasks driven by counter-based substreams derived
from (master seed, replica index); results are written into preallocated
arrays by replica index and reduced with pairwise summation, so runs are
reproducible bit-for-bit in serial mode and identical up to row order with
identical row contents in threaded mode.  The stepping itself runs in the
compiled kernel when available (rwreld.kernels.BACKEND tells which).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri

from . import kernels
from .chainexact import (
    expected_exit_time_bound,
    hit_prob_before,
    single_excursion_escape_prob,
)
from .envmodel import (
    EnvDistribution,
    Environment,
    GoodEnvParams,
    GoodEnvScan,
    check_good_environment,
    good_env_params,
    locate_right_valley,
    potential,
    scan_good_environments,
)
from .errors import RwreError, ValidationError, WindowExhaustedError
from .rngtools import subseed, subseed_array

DEFAULT_CONFIDENCE = 0.95


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------

@dataclass
class HitSample:
    """One sampled hitting time, or the fact that it exceeded the cap."""

    value: Optional[int]
    capped: bool
    cap: int


@dataclass
class Estimate:
    """Point estimate with a confidence interval.

    kind is "proportion" (Wilson interval) or "mean" (normal interval).
    """

    mean: float
    ci_low: float
    ci_high: float
    replicas: int
    kind: str
    level: float = DEFAULT_CONFIDENCE


def wilson_interval(successes: int, n: int, level: float = DEFAULT_CONFIDENCE
                    ) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValidationError("Wilson interval needs n >= 1")
    z = float(ndtri(0.5 + level / 2.0))
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    # k = 0 / k = n must give exact endpoints (callers test "CI excludes 0")
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def proportion_estimate(successes: int, n: int,
                        level: float = DEFAULT_CONFIDENCE) -> Estimate:
    lo, hi = wilson_interval(successes, n, level)
    return Estimate(mean=successes / n, ci_low=lo, ci_high=hi,
                    replicas=n, kind="proportion", level=level)


def mean_estimate(values: np.ndarray, level: float = DEFAULT_CONFIDENCE
                  ) -> Estimate:
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        raise ValidationError("mean estimate needs >= 2 replicas")
    m = float(np.sum(values) / n)          # pairwise summation
    sd = float(np.std(values, ddof=1))
    z = float(ndtri(0.5 + level / 2.0))
    half = z * sd / math.sqrt(n)
    return Estimate(mean=m, ci_low=m - half, ci_high=m + half,
                    replicas=n, kind="mean", level=level)


# ---------------------------------------------------------------------------
# batch drivers
# ---------------------------------------------------------------------------

def _parallel(worker, n: int, threads: int) -> None:
    """Run worker(i0, i1) over [0, n) split across threads (1 = serial)."""
    if threads <= 1 or n < 2:
        worker(0, n)
        return
    chunk = -(-n // threads)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = [ex.submit(worker, i, min(i + chunk, n))
                   for i in range(0, n, chunk)]
        for f in futures:
            f.result()


def _quenched_batch(env: Environment, start: int, left: Optional[int],
                    right: Optional[int], cap: int, walk_seeds: np.ndarray,
                    threads: int = 1):
    """Run replicas of the walk in a fixed environment window."""
    if cap <= 0:
        raise ValidationError("cap must be >= 1")
    lo, hi = env.lo, env.hi
    if not lo <= start <= hi:
        raise ValidationError(f"start {start} outside window [{lo}, {hi}]")
    use_left = left is not None
    use_right = right is not None
    lval = left if use_left else lo - 10
    rval = right if use_right else hi + 10
    if use_left and (lval < lo - 1 or lval >= start):
        raise ValidationError("left target must satisfy lo-1 <= left < start")
    if use_right and (rval > hi + 1 or rval <= start):
        raise ValidationError("right target must satisfy start < right <= hi+1")
    n = len(walk_seeds)
    out_o = np.zeros(n, dtype=np.int8)
    out_s = np.zeros(n, dtype=np.uint64)
    out_p = np.zeros(n, dtype=np.int64)
    thresh = np.ascontiguousarray(env.omega, dtype=float)
    seeds = np.ascontiguousarray(walk_seeds, dtype=np.uint64)

    def worker(i0, i1):
        kernels.run_hit_quenched(thresh, lo, start, lval, rval,
                                 int(use_left), int(use_right), cap,
                                 seeds, out_o, out_s, out_p, i0, i1)

    _parallel(worker, n, threads)
    return out_o, out_s, out_p


def _lazy_batch(dist: EnvDistribution, env_seeds: np.ndarray,
                walk_seeds: np.ndarray, buf_lo: int, buf_hi: int, start: int,
                left: Optional[int], right: Optional[int], cap: int,
                threads: int = 1):
    """Run replicas, each in a fresh lazily-sampled environment."""
    code, p1, p2, sup, cumw = dist.kernel_args()
    use_left = left is not None
    use_right = right is not None
    lval = left if use_left else buf_lo - 10
    rval = right if use_right else buf_hi + 10
    n = len(env_seeds)
    out_o = np.zeros(n, dtype=np.int8)
    out_s = np.zeros(n, dtype=np.uint64)
    out_p = np.zeros(n, dtype=np.int64)
    es = np.ascontiguousarray(env_seeds, dtype=np.uint64)
    ws = np.ascontiguousarray(walk_seeds, dtype=np.uint64)

    def worker(i0, i1):
        buf = np.full(buf_hi - buf_lo + 1, np.nan)
        kernels.run_hit_lazy(code, p1, p2, sup, cumw, es, ws, buf_lo, buf_hi,
                             start, lval, rval, int(use_left), int(use_right),
                             cap, buf, out_o, out_s, out_p, i0, i1)

    _parallel(worker, n, threads)
    return out_o, out_s, out_p


def _walk_seeds(seed: int, n: int, stream: int) -> np.ndarray:
    return subseed_array(subseed(seed, stream), np.arange(n))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def simulate_hitting_time(env: Environment, start: int, target: int,
                          cap: int, rng_stream: int) -> HitSample:
    """Exact sample of tau_target under the quenched law from `start`.

    The walk may not leave the environment window: exhaustion raises (it is
    an error, never a silent reflection).
    """
    if cap <= 0:
        raise ValidationError("cap must be >= 1")
    left = target if target <= start else None
    right = target if target > start else None
    seeds = np.array([int(rng_stream) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    o, s, _ = _quenched_batch(env, start, left, right, cap, seeds)
    if o[0] == kernels.EXHAUSTED:
        raise WindowExhaustedError(
            f"walk left window [{env.lo}, {env.hi}] after {int(s[0])} steps")
    if o[0] == kernels.CAPPED:
        return HitSample(value=None, capped=True, cap=cap)
    return HitSample(value=int(s[0]), capped=False, cap=cap)


@dataclass
class IntervalPartition:
    """P(tau < lo), P(lo <= tau < hi), P(tau >= hi) on shared replicas."""

    below: Estimate
    inside: Estimate
    above: Estimate

    def total(self) -> float:
        return self.below.mean + self.inside.mean + self.above.mean


def estimate_interval_partition(env: Environment, lo_steps: int, hi_steps: int,
                                target: int, reps: int, seed: int,
                                start: int = 0, threads: int = 1,
                                level: float = DEFAULT_CONFIDENCE
                                ) -> IntervalPartition:
    """Split the law of tau_target at lo and hi on one set of replicas.

    A replica exhausting the window at step s >= hi_steps is classified as
    {tau >= hi} (true whatever the unseen continuation); exhaustion before
    hi_steps is unresolvable and raises.
    """
    if not 0 < lo_steps < hi_steps:
        raise ValidationError("need 0 < lo < hi")
    left = target if target <= start else None
    right = target if target > start else None
    seeds = _walk_seeds(seed, reps, 0x57)
    o, s, _ = _quenched_batch(env, start, left, right, hi_steps, seeds,
                              threads)
    s = s.astype(np.int64)
    bad = (o == kernels.EXHAUSTED) & (s < hi_steps)
    if np.any(bad):
        raise WindowExhaustedError(
            f"{int(bad.sum())} of {reps} replicas left the window before "
            f"hi={hi_steps}; enlarge the environment window",
            count=int(bad.sum()))
    hit = (o == kernels.HIT_LEFT) | (o == kernels.HIT_RIGHT)
    n_below = int(np.sum(hit & (s < lo_steps)))
    n_inside = int(np.sum(hit & (s >= lo_steps) & (s < hi_steps)))
    n_above = reps - n_below - n_inside
    return IntervalPartition(
        below=proportion_estimate(n_below, reps, level),
        inside=proportion_estimate(n_inside, reps, level),
        above=proportion_estimate(n_above, reps, level),
    )


def estimate_quenched_interval_prob(env: Environment, lo_steps: int,
                                    hi_steps: int, target: int, reps: int,
                                    seed: int, start: int = 0,
                                    threads: int = 1,
                                    level: float = DEFAULT_CONFIDENCE
                                    ) -> Estimate:
    """Wilson estimate of P(lo <= tau_target < hi) from `start`."""
    part = estimate_interval_partition(env, lo_steps, hi_steps, target, reps,
                                       seed, start, threads, level)
    return part.inside


def default_moment_window(cap: int, dist: EnvDistribution) -> int:
    """Left window comfortably containing excursions of a cap-step walk."""
    spread = 8.0 * math.sqrt(cap)
    if dist.var_log_rho > 0.0:
        spread = max(spread, 16.0 * math.log(cap) ** 2 / dist.var_log_rho)
    return int(spread) + 64


def estimate_annealed_damped_moment(dist: EnvDistribution, alpha: float,
                                    r: float, env_window: Optional[int],
                                    reps: int, cap: int, seed: int,
                                    threads: int = 1,
                                    level: float = DEFAULT_CONFIDENCE
                                    ) -> tuple[Estimate, dict]:
    """Estimate E[tau_1^alpha e^{-r tau_1}], fresh environment per replica.

    Capped replicas contribute the analytic bound cap^alpha e^{-r cap}
    (negligible by the cap precondition cap >= 50/r) and are counted in the
    returned info dict.
    """
    if alpha <= 0.0 or r <= 0.0:
        raise ValidationError("need alpha > 0 and r > 0")
    if cap < 50.0 / r:
        raise ValidationError(f"cap must be >= 50/r = {50.0 / r:.0f}")
    window = env_window if env_window is not None else \
        default_moment_window(cap, dist)
    env_seeds = _walk_seeds(seed, reps, 0x45)
    walk_seeds = _walk_seeds(seed, reps, 0x57)
    o, s, _ = _lazy_batch(dist, env_seeds, walk_seeds, -window, 1, 0,
                          None, 1, cap, threads)
    if np.any(o == kernels.EXHAUSTED):
        raise WindowExhaustedError(
            f"{int(np.sum(o == kernels.EXHAUSTED))} replicas exhausted the "
            f"{window}-site window", count=int(np.sum(o == kernels.EXHAUSTED)))
    tau = s.astype(float)
    values = tau ** alpha * np.exp(-r * tau)      # capped rows: bound at cap
    n_capped = int(np.sum(o == kernels.CAPPED))
    est = mean_estimate(values, level)
    return est, {"n_capped": n_capped, "window": window, "cap": cap}


# ---------------------------------------------------------------------------
# lemma-chain verification on good environments
# ---------------------------------------------------------------------------

@dataclass
class LemmaCheck:
    name: str
    kind: str                   # "exact" or "mc"
    value: float
    floor: Optional[float] = None
    ceiling: Optional[float] = None
    passed: bool = False
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in
                ("name", "kind", "value", "floor", "ceiling", "passed",
                 "ci_low", "ci_high")}


@dataclass
class LemmaChainReport:
    params: GoodEnvParams
    m_n: int
    b_n: int
    depth: float
    checks: list = field(default_factory=list)
    scan: Optional[GoodEnvScan] = None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "m_n": self.m_n, "b_n": self.b_n, "depth": self.depth,
            "checks": [c.to_json() for c in self.checks],
            "tried": None if self.scan is None else self.scan.tried,
            "acceptance_rate": None if self.scan is None
            else self.scan.acceptance_rate,
            "all_passed": self.all_passed,
        }


def lemma_floor_constants(eps0: float, delta: float) -> dict:
    """Explicit floor/ceiling constants of the lemma chain, from eps0 and delta."""
    ratio = (1.0 - eps0) / eps0
    c7 = (eps0 / (1.0 - eps0)) / (ratio + 1.0 / (1.0 - math.exp(-delta)) + 1.0)
    two_c9 = 1.0 / ((1.0 + 1.0 / (1.0 - math.exp(-delta)) + ratio) * ratio
                    + 1.0)
    c10 = ratio * math.exp(delta)
    return {"C7": c7, "C8": c7 / 2.0, "2C9": two_c9, "C9": two_c9 / 2.0,
            "C10": c10}


def lemma_checks_for_env(env: Environment, params: GoodEnvParams,
                         walk_reps: int, seed: int, threads: int = 1,
                         lemma31_floor: float = 0.05) -> LemmaChainReport:
    """Exact and Monte Carlo verdicts of the hitting-time lemma chain.

    Requires a good environment (precondition error otherwise).  Exact
    quantities come from chain_exact; Monte Carlo events use walk_reps walks
    with Wilson intervals.  Floors are the explicit constants where the
    chain displays them, and the configured positive floor for the
    interval-probability statement.
    """
    report_flags = check_good_environment(env, params)
    if not report_flags.good:
        raise ValidationError("environment is not good at these parameters")
    pot = potential(env)
    valley = locate_right_valley(pot)
    m_n, b_n = valley.m, valley.b
    consts = lemma_floor_constants(env.dist.eps0, params.delta)
    n = params.n
    ep = params.eps_prime
    checks = []

    exact32 = hit_prob_before(pot, 0, -1, m_n)
    checks.append(LemmaCheck("bottom_before_minus1_exact", "exact", exact32,
                             floor=consts["C7"],
                             passed=exact32 >= consts["C7"]))

    exit34 = 1.0 - hit_prob_before(pot, m_n, -1, b_n)
    checks.append(LemmaCheck("leave_left_from_bottom_exact", "exact", exit34,
                             floor=consts["2C9"],
                             passed=exit34 >= consts["2C9"]))

    bound31 = expected_exit_time_bound(pot, 0, -1, m_n)
    ceil31 = n ** (3.0 * ep)
    checks.append(LemmaCheck("exit_bound_to_bottom", "exact", bound31,
                             ceiling=ceil31, passed=bound31 <= ceil31))

    left_esc, right_esc = single_excursion_escape_prob(pot, m_n, -1, b_n)
    esc_ceiling = consts["C10"] * n ** (-(1.0 - 9.0 * ep))
    checks.append(LemmaCheck("excursion_escape_left", "exact", left_esc,
                             ceiling=esc_ceiling,
                             passed=left_esc <= esc_ceiling))
    checks.append(LemmaCheck("excursion_escape_right", "exact", right_esc,
                             ceiling=esc_ceiling,
                             passed=right_esc <= esc_ceiling))

    # Monte Carlo events
    cap34 = max(2, int(n ** (4.0 * ep)))
    seeds34 = _walk_seeds(seed, walk_reps, 0x34)
    o, s, _ = _quenched_batch(env, 0, -1, m_n, cap34, seeds34, threads)
    est34 = proportion_estimate(int(np.sum(o == kernels.HIT_RIGHT)), walk_reps)
    checks.append(LemmaCheck("fast_descent_mc", "mc", est34.mean,
                             floor=consts["C8"],
                             passed=est34.mean >= consts["C8"],
                             ci_low=est34.ci_low, ci_high=est34.ci_high))

    cap35 = max(2, int(n ** (1.0 - 5.0 * ep)))
    seeds35 = _walk_seeds(seed, walk_reps, 0x35)
    o, s, _ = _quenched_batch(env, m_n, -1, None, cap35, seeds35, threads)
    est35 = proportion_estimate(int(np.sum(o == kernels.HIT_LEFT)), walk_reps)
    checks.append(LemmaCheck("timely_exit_mc", "mc", est35.mean,
                             floor=consts["C9"],
                             passed=est35.mean >= consts["C9"],
                             ci_low=est35.ci_low, ci_high=est35.ci_high))

    cap36 = max(2, int(n ** (1.0 - 10.0 * ep)))
    seeds36 = _walk_seeds(seed, walk_reps, 0x36)
    o, s, _ = _quenched_batch(env, m_n, -1, None, cap36, seeds36, threads)
    est36 = proportion_estimate(int(np.sum(o == kernels.CAPPED)), walk_reps)
    floor36 = max(0.0, 1.0 - consts["C10"] * n ** (-ep))
    checks.append(LemmaCheck("slow_escape_mc", "mc", est36.mean,
                             floor=floor36,
                             passed=est36.mean >= floor36,
                             ci_low=est36.ci_low, ci_high=est36.ci_high))

    lo31 = max(1, int(math.ceil(n ** (1.0 - 10.0 * ep))))
    hi31 = int(math.ceil(n))        # tau < n on integers: tau <= ceil(n)-1
    part = estimate_interval_partition(env, lo31, hi31, -1, walk_reps,
                                       subseed(seed, 0x31), start=0,
                                       threads=threads)
    est31 = part.inside
    checks.append(LemmaCheck("interval_prob_mc", "mc", est31.mean,
                             floor=lemma31_floor,
                             passed=(est31.mean >= lemma31_floor
                                     and est31.ci_low > 0.0),
                             ci_low=est31.ci_low, ci_high=est31.ci_high))

    return LemmaChainReport(params=params, m_n=m_n, b_n=b_n,
                            depth=valley.depth, checks=checks)


class GoodEnvSearchError(RwreError):
    """Rejection sampling found no good environment within the try budget."""

    def __init__(self, scan: GoodEnvScan):
        super().__init__(
            f"no good environment in {scan.tried} tries "
            f"(cone {scan.passed_cone}, descent {scan.passed_descent}, "
            f"all {scan.passed_all})")
        self.scan = scan


def verify_lemma_chain(dist: EnvDistribution, eps: float, n: float,
                       env_tries: int, walk_reps: int, seed: int,
                       threads: int = 1) -> LemmaChainReport:
    """Rejection-sample a good environment, then run the lemma chain on it."""
    params = good_env_params(dist, eps, n)
    scan = scan_good_environments(dist, params, env_tries,
                                  subseed(seed, 0x474F))
    if scan.first_good is None:
        raise GoodEnvSearchError(scan)
    report = lemma_checks_for_env(scan.first_good, params, walk_reps,
                                  subseed(seed, 0x4C43), threads)
    report.scan = scan
    return report


def estimate_good_env_probability(dist: EnvDistribution,
                                  params: GoodEnvParams, n_envs: int,
                                  seed: int,
                                  level: float = DEFAULT_CONFIDENCE
                                  ) -> tuple[Estimate, GoodEnvScan]:
    """Wilson estimate of P(good environment) over n_envs fresh samples."""
    scan = scan_good_environments(dist, params, n_envs, seed, want_env=False)
    return proportion_estimate(scan.passed_all, n_envs, level), scan


# ---------------------------------------------------------------------------
# scaling of the walk position
# ---------------------------------------------------------------------------

@dataclass
class SinaiSummary:
    """Quantiles of sigma^2 S_n / (log n)^2 over fresh environments."""

    n: int
    replicas: int
    exhausted: int
    quantiles: dict
    iqr: float
    median_abs: float
    scaled: np.ndarray


def sinai_scaling_sample(dist: EnvDistribution, n_list, env_reps: int,
                         seed: int, window_factor: float = 20.0,
                         threads: int = 1) -> list[SinaiSummary]:
    """Empirical law of the rescaled walk position at each horizon n.

    One walk in one fresh environment per replica; the window is sized to
    +-window_factor*(log n)^2 sites and exhausted walks are counted and
    excluded (never reflected).
    """
    if dist.mean_log_rho != 0.0 or dist.var_log_rho <= 0.0:
        raise ValidationError("scaling study needs a recurrent, "
                              "non-degenerate law")
    sig2 = dist.var_log_rho
    code, p1, p2, sup, cumw = dist.kernel_args()
    out = []
    for j, n in enumerate(n_list):
        n = int(n)
        halfwidth = int(window_factor * math.log(n) ** 2) + 2
        env_seeds = _walk_seeds(subseed(seed, j), env_reps, 0x45)
        walk_seeds = _walk_seeds(subseed(seed, j), env_reps, 0x57)
        exh = np.zeros(env_reps, dtype=np.int8)
        pos = np.zeros(env_reps, dtype=np.int64)

        def worker(i0, i1, _hw=halfwidth, _es=env_seeds, _ws=walk_seeds,
                   _exh=exh, _pos=pos, _n=n):
            buf = np.full(2 * _hw + 1, np.nan)
            kernels.run_position_lazy(code, p1, p2, sup, cumw, _es, _ws,
                                      _hw, _n, buf, _exh, _pos, i0, i1)

        _parallel(worker, env_reps, threads)
        ok = exh == 0
        scaled = sig2 * pos[ok] / math.log(n) ** 2
        qs = np.percentile(scaled, [5, 25, 50, 75, 95])
        out.append(SinaiSummary(
            n=n, replicas=env_reps, exhausted=int(np.sum(~ok)),
            quantiles={"q05": qs[0], "q25": qs[1], "q50": qs[2],
                       "q75": qs[3], "q95": qs[4]},
            iqr=float(qs[3] - qs[1]),
            median_abs=float(np.median(np.abs(scaled))),
            scaled=scaled,
        ))
    return out
