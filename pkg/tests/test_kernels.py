import numpy as np
import pytest

import rwreld._walkcore_py as pyk
from rwreld import envmodel as em
from rwreld import kernels
from rwreld.mcsim import wilson_interval
from rwreld.rngtools import subseed_array

try:
    import rwreld._walkcore as cyk
    HAVE_CY = True
except ImportError:
    cyk = None
    HAVE_CY = False

BACKENDS = [pyk] + ([cyk] if HAVE_CY else [])


def _quenched(mod, thresh, offset, start, left, right, ul, ur, cap, seeds):
    n = len(seeds)
    oc = np.zeros(n, np.int8)
    st = np.zeros(n, np.uint64)
    fp = np.zeros(n, np.int64)
    mod.run_hit_quenched(np.asarray(thresh, float), offset, start, left,
                         right, ul, ur, cap, seeds, oc, st, fp, 0, n)
    return oc, st, fp


def _lazy(mod, dist, env_seeds, walk_seeds, buf_lo, buf_hi, start, left,
          right, ul, ur, cap):
    code, p1, p2, sup, cumw = dist.kernel_args()
    n = len(env_seeds)
    oc = np.zeros(n, np.int8)
    st = np.zeros(n, np.uint64)
    fp = np.zeros(n, np.int64)
    buf = np.full(buf_hi - buf_lo + 1, np.nan)
    mod.run_hit_lazy(code, p1, p2, sup, cumw, env_seeds, walk_seeds, buf_lo,
                     buf_hi, start, left, right, ul, ur, cap, buf, oc, st,
                     fp, 0, n)
    return oc, st, fp, buf


@pytest.mark.skipif(not HAVE_CY, reason="compiled kernel not built")
def test_backends_bit_identical_quenched():
    thresh = np.where(np.random.default_rng(1).random(101) < 0.5, 0.25, 0.75)
    seeds = subseed_array(5, np.arange(200))
    a = _quenched(cyk, thresh, -50, 0, -7, 9, 1, 1, 5000, seeds)
    b = _quenched(pyk, thresh, -50, 0, -7, 9, 1, 1, 5000, seeds)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@pytest.mark.skipif(not HAVE_CY, reason="compiled kernel not built")
@pytest.mark.parametrize("kind", ["two_point", "uniform", "explicit"])
def test_backends_bit_identical_lazy(kind):
    dist = {
        "two_point": em.EnvDistribution.two_point(0.25),
        "uniform": em.EnvDistribution.uniform(0.1),
        "explicit": em.EnvDistribution.explicit([0.2, 0.5, 0.8], [1, 2, 1]),
    }[kind]
    es = subseed_array(6, np.arange(60))
    ws = subseed_array(7, np.arange(60))
    a = _lazy(cyk, dist, es, ws, -200, 200, 0, -10**6, 1, 0, 1, 3000)
    b = _lazy(pyk, dist, es, ws, -200, 200, 0, -10**6, 1, 0, 1, 3000)
    for x, y in zip(a[:3], b[:3]):
        assert np.array_equal(x, y)
    assert np.all(np.isnan(a[3])) and np.all(np.isnan(b[3]))


def test_lazy_matches_quenched_on_sampled_environment():
    """Lazy per-site sampling is the same environment sample_environment gives."""
    dist = em.EnvDistribution.two_point(0.3)
    env_seed = 987
    env = em.sample_environment(dist, -300, 300, env_seed)
    ws = subseed_array(11, np.arange(100))
    es = np.full(100, env_seed, dtype=np.uint64)
    oq = _quenched(kernels, env.omega, -300, 0, -5, 4, 1, 1, 4000, ws)
    ol = _lazy(kernels, dist, es, ws, -300, 300, 0, -5, 4, 1, 1, 4000)
    for x, y in zip(oq, ol[:3]):
        assert np.array_equal(x, y)


def test_cap_and_exhaustion_semantics():
    thresh = np.full(21, 0.5)
    seeds = subseed_array(3, np.arange(50))
    oc, st, _ = _quenched(kernels, thresh, -10, 0, -10**6, 10**6, 0, 0, 7,
                          seeds)
    assert np.all(oc == kernels.CAPPED) and np.all(st == 7)
    # drift right, no right absorber: must exhaust at the window edge
    oc, st, fp = _quenched(kernels, np.full(5, 0.99), -2, 0, -10**6, 10**6,
                           0, 0, 10**6, seeds[:5])
    assert np.all(oc == kernels.EXHAUSTED)
    assert np.all(fp == 3)


def test_one_step_law_wilson():
    env = em.Environment.from_values([0.5, 0.9, 0.5], offset=-1)
    seeds = subseed_array(17, np.arange(100_000))
    oc, st, _ = _quenched(kernels, env.omega, -1, 0, -1, 1, 1, 1, 10**6,
                          seeds)
    one_step = np.sum((oc == kernels.HIT_RIGHT) & (st == 1))
    lo, hi = wilson_interval(int(one_step), 100_000, level=0.999)
    assert lo <= 0.9 <= hi
