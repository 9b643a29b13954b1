import math

import numpy as np
import pytest

from rwreld import chainexact as ce
from rwreld import envmodel as em
from rwreld import mcsim
from rwreld.errors import ValidationError, WindowExhaustedError


def _const_env(p, lo=-40, hi=40):
    return em.sample_environment(em.EnvDistribution.constant(p), lo, hi, 1)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def test_wilson_basic_properties():
    lo, hi = mcsim.wilson_interval(30, 100)
    assert 0.0 <= lo <= 0.3 <= hi <= 1.0
    assert mcsim.wilson_interval(0, 50)[0] == 0.0
    with pytest.raises(ValidationError):
        mcsim.wilson_interval(1, 0)


def test_wilson_calibration_bernoulli():
    """95% Wilson interval covers p=0.3 in >= 93% of 1000 meta-replicas."""
    rng = np.random.default_rng(2024)
    n, covered = 200, 0
    for _ in range(1000):
        k = rng.binomial(n, 0.3)
        lo, hi = mcsim.wilson_interval(int(k), n)
        covered += lo <= 0.3 <= hi
    assert covered >= 930


def test_proportion_and_mean_estimates():
    est = mcsim.proportion_estimate(10, 100)
    assert est.ci_low <= est.mean <= est.ci_high and est.kind == "proportion"
    est = mcsim.mean_estimate(np.arange(10.0))
    assert est.ci_low <= est.mean <= est.ci_high and est.kind == "mean"
    with pytest.raises(ValidationError):
        mcsim.mean_estimate(np.array([1.0]))


# ---------------------------------------------------------------------------
# hitting-time sampling
# ---------------------------------------------------------------------------

def test_simulate_hitting_time_contracts():
    env = _const_env(0.5)
    s = mcsim.simulate_hitting_time(env, 0, 1, cap=10**6, rng_stream=4)
    assert s.value is not None and s.value >= 1 and not s.capped
    with pytest.raises(ValidationError):
        mcsim.simulate_hitting_time(env, 0, 1, cap=0, rng_stream=4)
    with pytest.raises(ValidationError):
        # target beyond the window edge can never be observed
        mcsim.simulate_hitting_time(env, 0, env.lo - 5, cap=100, rng_stream=4)
    drifty = em.Environment.from_values([0.99, 0.99, 0.99, 0.99], offset=-1,
                                        dist=em.EnvDistribution.uniform(0.005))
    with pytest.raises(WindowExhaustedError):
        # right drift, left target: the walk leaves the window instead
        mcsim.simulate_hitting_time(drifty, 0, -1, cap=10**6, rng_stream=4)


def test_capped_deep_valley():
    vals = np.r_[0.0, np.linspace(-1, -12, 12), np.linspace(-11, 3, 15)]
    om = 1.0 / (1.0 + np.exp(np.diff(vals)))
    env = em.Environment.from_values(np.r_[0.5, 0.5, om], offset=-1)
    capped = 0
    for k in range(50):
        s = mcsim.simulate_hitting_time(env, 12, -1, cap=10, rng_stream=k)
        capped += s.capped
    assert capped >= 45


def test_mean_exit_time_one():
    env = _const_env(0.5)
    seeds = mcsim._walk_seeds(3, 20_000, 0x11)
    o, s, _ = mcsim._quenched_batch(env, 0, -1, 1, 10**6, seeds)
    assert float(np.mean(s)) == pytest.approx(1.0, abs=0.02)


def test_partition_identity_and_interval_prob():
    env = _const_env(0.5)
    part = mcsim.estimate_interval_partition(env, 4, 50, 1, 5000, 99)
    assert part.total() == pytest.approx(1.0, abs=1e-15)
    est = mcsim.estimate_quenched_interval_prob(env, 4, 50, 1, 5000, 99)
    assert est.mean == part.inside.mean
    assert 0.0 < est.mean < 1.0


def test_recurrent_walk_hits_left():
    # window wide enough that a 2e4-step excursion cannot exhaust it
    env = _const_env(0.5, lo=-1200, hi=1200)
    part = mcsim.estimate_interval_partition(env, 1, 20_000, -1, 3000, 12)
    assert part.below.mean + part.inside.mean > 0.98


def test_threaded_matches_serial():
    env = _const_env(0.5)
    a = mcsim.estimate_interval_partition(env, 2, 64, 1, 4000, 7, threads=1)
    b = mcsim.estimate_interval_partition(env, 2, 64, 1, 4000, 7, threads=2)
    assert a.inside.mean == b.inside.mean
    assert a.below.mean == b.below.mean


def test_mc_agrees_with_exact_on_random_environments():
    """Exact hit probability inside the 99.9% Wilson CI of 1e5 replicas,
    for 50 random environments."""
    import rwreld.kernels as kernels
    dist = em.EnvDistribution.uniform(0.1)
    reps = 100_000
    for k in range(50):
        env = em.sample_environment(dist, -8, 8, 40_000 + k)
        pot = em.potential(env)
        p_exact = ce.hit_prob_before(pot, 0, -3, 4)
        seeds = mcsim._walk_seeds(k, reps, 0x22)
        o, s, _ = mcsim._quenched_batch(env, 0, -3, 4, 10**7, seeds,
                                        threads=2)
        hits = int(np.sum(o == kernels.HIT_RIGHT))
        lo, hi = mcsim.wilson_interval(hits, reps, level=0.999)
        assert lo <= p_exact <= hi, (k, hits / reps, p_exact)


def test_exit_time_mc_agrees_with_exact():
    """Exact expectation inside the 99.9% normal CI of 1e5 replicas,
    for 50 random environments."""
    dist = em.EnvDistribution.uniform(0.1)
    z = 3.2905   # 99.9% two-sided normal quantile
    for k in range(50):
        env = em.sample_environment(dist, -6, 6, 123 + k)
        exact = ce.expected_exit_time_exact(env, 0, -3, 3)
        seeds = mcsim._walk_seeds(k, 100_000, 0x33)
        o, s, _ = mcsim._quenched_batch(env, 0, -3, 3, 10**7, seeds,
                                        threads=2)
        m = float(np.mean(s))
        se = float(np.std(s.astype(float), ddof=1)) / math.sqrt(len(s))
        assert abs(m - exact) <= z * se, (k, m, exact)


# ---------------------------------------------------------------------------
# damped moments
# ---------------------------------------------------------------------------

def test_damped_moment_bound_and_determinism():
    dist = em.EnvDistribution.two_point(0.25)
    est1, info1 = mcsim.estimate_annealed_damped_moment(
        dist, 1.0, 0.05, None, 20_000, 2000, 42)
    est2, _ = mcsim.estimate_annealed_damped_moment(
        dist, 1.0, 0.05, None, 20_000, 2000, 42)
    assert est1.mean == est2.mean
    assert est1.mean <= 1.0 / (math.e * 0.05)
    assert info1["n_capped"] >= 0
    with pytest.raises(ValidationError):
        mcsim.estimate_annealed_damped_moment(dist, 1.0, 0.05, None, 100, 10,
                                              1)   # cap < 50/r


def test_damped_moment_homogeneous_control():
    """Constant law: compare against s G'(s) from the closed generating function."""
    dist = em.EnvDistribution.constant(0.5)
    r = 0.02
    est, _ = mcsim.estimate_annealed_damped_moment(dist, 1.0, r, None,
                                                   60_000, 5000, 7,
                                                   threads=2)
    s = math.exp(-r)
    h = 1e-7
    gen = lambda t: (1 - math.sqrt(1 - t * t)) / t
    exact = s * (gen(s + h) - gen(s - h)) / (2 * h)
    assert est.mean == pytest.approx(exact, rel=0.05)


# ---------------------------------------------------------------------------
# lemma chain on a constructed good environment
# ---------------------------------------------------------------------------

def test_lemma_chain_on_staircase(staircase):
    """Core floors hold at a feasible scale; asymptotic items are reported.

    The n^{3e'} exit-time ceiling and the C8/C9 timed-event floors only take
    effect at scales n far beyond anything walkable (their validity needs
    n^{e'} to beat powers of log n), so at the test scale they are expected
    to be reported as failing; the scale-free floors must all pass.
    """
    env, params = staircase
    report = mcsim.lemma_checks_for_env(env, params, walk_reps=400, seed=5,
                                        threads=2)
    names = {c.name for c in report.checks}
    assert {"bottom_before_minus1_exact", "leave_left_from_bottom_exact",
            "exit_bound_to_bottom", "excursion_escape_left",
            "excursion_escape_right", "fast_descent_mc", "timely_exit_mc",
            "slow_escape_mc", "interval_prob_mc"} <= names
    core = {"bottom_before_minus1_exact", "leave_left_from_bottom_exact",
            "excursion_escape_left", "excursion_escape_right",
            "slow_escape_mc", "interval_prob_mc"}
    failed_core = [c.name for c in report.checks
                   if c.name in core and not c.passed]
    assert not failed_core, failed_core
    doc = report.to_json()
    assert doc["m_n"] == report.m_n and doc["b_n"] == report.b_n


def test_lemma_chain_rejects_non_good_env(staircase):
    _, params = staircase
    flat = em.Environment.from_values(
        np.full(params.check_window_hi + 2, 0.5), offset=-1)
    with pytest.raises(ValidationError):
        mcsim.lemma_checks_for_env(flat, params, 10, 1)


def test_verify_lemma_chain_reports_acceptance_on_failure():
    dist = em.EnvDistribution.two_point(0.25)
    with pytest.raises(mcsim.GoodEnvSearchError) as exc:
        mcsim.verify_lemma_chain(dist, 0.1, math.exp(20), env_tries=5000,
                                 walk_reps=10, seed=3)
    scan = exc.value.scan
    assert scan.tried == 5000 and scan.passed_all == 0
    assert scan.passed_cone > 0


# ---------------------------------------------------------------------------
# scaling study
# ---------------------------------------------------------------------------

def test_sinai_scaling_deterministic_and_sane():
    dist = em.EnvDistribution.two_point(0.25)
    a = mcsim.sinai_scaling_sample(dist, [10_000], 300, 11, threads=2)
    b = mcsim.sinai_scaling_sample(dist, [10_000], 300, 11, threads=1)
    assert np.array_equal(a[0].scaled, b[0].scaled)
    assert a[0].exhausted == 0
    assert a[0].iqr > 0 and a[0].median_abs < 10


def test_sinai_requires_recurrent_law():
    with pytest.raises(ValidationError):
        mcsim.sinai_scaling_sample(em.EnvDistribution.constant(0.6), [100],
                                   10, 1)
    with pytest.raises(ValidationError):
        mcsim.sinai_scaling_sample(em.EnvDistribution.constant(0.5), [100],
                                   10, 1)


def test_good_env_probability_estimate():
    dist = em.EnvDistribution.two_point(0.25)
    params = em.good_env_params(dist, 0.1, math.exp(20))
    est, scan = mcsim.estimate_good_env_probability(dist, params, 5000, 77)
    assert est.replicas == 5000
    assert est.mean == scan.passed_all / 5000
