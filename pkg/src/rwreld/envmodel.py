"""Site-probability laws, sampled environments, potentials and valleys.

The model: a walk on Z steps right from site i with probability omega_i,
where the omega_i are i.i.d. under a law eta supported inside
[eps0, 1-eps0].  With rho_i = (1-omega_i)/omega_i the potential is

    V(n) = sum_{i=1..n} log rho_i          (n >= 0, V(0) = 0)
    V(n) = -(log rho_0 + ... + log rho_{n+1})   (n < 0)

Deep valleys of V trap the walk; the "good environment" event checked here
asks for a staircase-shaped valley (a short steep descent, a long tunnelled
descent, then a tunnelled ascent) whose geometry pins the hitting time of -1
to a prescribed polynomial range.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .errors import (
    DegenerateValleyError,
    ValidationError,
    WindowCoverageError,
)
from .rngtools import site_uniforms, subseed_array

ENV_JSON_VERSION = 1

# delta values above ~log((1-eps0)/eps0) make the band event empty for every
# law supported in [eps0, 1-eps0]; scan grids stop there.
_DELTA_GRID_POINTS = 4096


def _floor_stable(x: float) -> int:
    """floor() with a last-bit guard so e.g. 0.1*log(e**20) floors to 2."""
    return int(math.floor(x + 1e-12 * max(1.0, abs(x))))


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvDistribution:
    """Law of a single site probability omega_0, with analytic moments.

    kinds: "two_point" ({p, 1-p} with equal weights), "uniform" (on
    [eps0, 1-eps0]), "constant" (degenerate at p, oracle use only) and
    "explicit" (finite support with weights).
    """

    kind: str
    eps0: float
    mean_log_rho: float
    var_log_rho: float
    mean_rho: float
    p: Optional[float] = None
    support: Optional[tuple] = None
    weights: Optional[tuple] = None

    # -- constructors -------------------------------------------------------

    @staticmethod
    def two_point(p: float) -> "EnvDistribution":
        if not 0.0 < p < 1.0:
            raise ValidationError(f"two-point parameter p={p} outside (0,1)")
        lr = math.log((1.0 - p) / p)
        return EnvDistribution(
            kind="two_point",
            eps0=min(p, 1.0 - p),
            mean_log_rho=0.0,           # symmetry: log rho = +-|log((1-p)/p)|
            var_log_rho=lr * lr,
            mean_rho=0.5 * ((1.0 - p) / p + p / (1.0 - p)),
            p=p,
        )

    @staticmethod
    def uniform(eps0: float) -> "EnvDistribution":
        if not 0.0 < eps0 < 0.5:
            raise ValidationError(f"uniform bound eps0={eps0} outside (0, 1/2)")
        width = 1.0 - 2.0 * eps0
        var = quad(lambda w: math.log((1.0 - w) / w) ** 2 / width,
                   eps0, 1.0 - eps0, limit=200)[0]
        mean_rho = math.log((1.0 - eps0) / eps0) / width - 1.0
        return EnvDistribution(
            kind="uniform",
            eps0=eps0,
            mean_log_rho=0.0,           # law of omega symmetric about 1/2
            var_log_rho=var,
            mean_rho=mean_rho,
        )

    @staticmethod
    def constant(p: float) -> "EnvDistribution":
        if not 0.0 < p < 1.0:
            raise ValidationError(f"constant parameter p={p} outside (0,1)")
        return EnvDistribution(
            kind="constant",
            eps0=min(p, 1.0 - p),
            mean_log_rho=math.log((1.0 - p) / p),
            var_log_rho=0.0,
            mean_rho=(1.0 - p) / p,
            p=p,
        )

    @staticmethod
    def explicit(support, weights) -> "EnvDistribution":
        vals = np.asarray(support, dtype=float)
        w = np.asarray(weights, dtype=float)
        if vals.ndim != 1 or vals.size == 0 or vals.size != w.size:
            raise ValidationError("explicit law needs matching support/weights")
        if np.any(vals <= 0.0) or np.any(vals >= 1.0):
            raise ValidationError("explicit support outside (0,1)")
        if np.any(w <= 0.0):
            raise ValidationError("explicit weights must be positive")
        w = w / w.sum()
        lr = np.log((1.0 - vals) / vals)
        mean = float(np.dot(w, lr))
        if abs(mean) < 1e-14 * max(1.0, float(np.max(np.abs(lr)))):
            mean = 0.0
        return EnvDistribution(
            kind="explicit",
            eps0=float(min(vals.min(), 1.0 - vals.max())),
            mean_log_rho=mean,
            var_log_rho=float(np.dot(w, (lr - mean) ** 2)),
            mean_rho=float(np.dot(w, (1.0 - vals) / vals)),
            support=tuple(float(v) for v in vals),
            weights=tuple(float(x) for x in w),
        )

    # -- behaviour ----------------------------------------------------------

    @property
    def degenerate(self) -> bool:
        return self.var_log_rho == 0.0

    def values_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Map Uniform(0,1) variates to site probabilities."""
        u = np.asarray(u)
        if self.kind == "two_point":
            return np.where(u < 0.5, self.p, 1.0 - self.p)
        if self.kind == "uniform":
            return self.eps0 + (1.0 - 2.0 * self.eps0) * u
        if self.kind == "constant":
            return np.full_like(u, self.p, dtype=float)
        cumw = np.cumsum(self.weights)
        idx = np.searchsorted(cumw, u, side="right")
        idx = np.minimum(idx, len(self.support) - 1)
        return np.asarray(self.support, dtype=float)[idx]

    def band_probability(self, delta: float) -> float:
        """eta(-2*delta <= log rho_0 <= -delta), evaluated analytically."""
        if delta <= 0.0:
            return 0.0
        if self.kind == "uniform":
            # log rho <= -d  <=>  omega >= 1/(1+e^-d)
            lo = 1.0 / (1.0 + math.exp(-delta))
            hi = 1.0 / (1.0 + math.exp(-2.0 * delta))
            lo = max(lo, self.eps0)
            hi = min(hi, 1.0 - self.eps0)
            return max(0.0, hi - lo) / (1.0 - 2.0 * self.eps0)
        vals, w = self._atoms()
        lr = np.log((1.0 - vals) / vals)
        mask = (lr >= -2.0 * delta - 1e-15) & (lr <= -delta + 1e-15)
        return float(np.sum(w[mask]))

    def _atoms(self):
        if self.kind == "two_point":
            return np.array([self.p, 1.0 - self.p]), np.array([0.5, 0.5])
        if self.kind == "constant":
            return np.array([self.p]), np.array([1.0])
        if self.kind == "explicit":
            return np.asarray(self.support), np.asarray(self.weights)
        raise ValidationError(f"no atoms for kind {self.kind}")

    def kernel_args(self):
        """(dist_code, par1, par2, support, cumw) for the walk kernels."""
        empty = np.zeros(0)
        if self.kind == "two_point":
            return 0, float(self.p), 0.0, empty, empty
        if self.kind == "uniform":
            return 1, float(self.eps0), 0.0, empty, empty
        if self.kind == "constant":
            return 2, float(self.p), 0.0, empty, empty
        sup = np.asarray(self.support, dtype=float)
        cumw = np.cumsum(np.asarray(self.weights, dtype=float))
        return 3, 0.0, 0.0, sup, cumw

    def to_json(self) -> dict:
        out = {"kind": self.kind, "eps0": self.eps0}
        if self.p is not None:
            out["p"] = self.p
        if self.support is not None:
            out["support"] = list(self.support)
            out["weights"] = list(self.weights)
        return out

    @staticmethod
    def from_json(doc: dict) -> "EnvDistribution":
        kind = doc["kind"]
        if kind == "two_point":
            return EnvDistribution.two_point(doc["p"])
        if kind == "uniform":
            return EnvDistribution.uniform(doc["eps0"])
        if kind == "constant":
            return EnvDistribution.constant(doc["p"])
        if kind == "explicit":
            return EnvDistribution.explicit(doc["support"], doc["weights"])
        raise ValidationError(f"unknown distribution kind {kind!r}")


@dataclass
class RegimeInfo:
    regime: str                 # recurrent | transient_right | transient_left | degenerate
    speed_positive: bool
    degenerate: bool


def classify_regime(dist: EnvDistribution) -> RegimeInfo:
    """Recurrence/transience and positivity of the asymptotic speed.

    Recurrent iff E log rho_0 = 0; the speed is > 0 iff E rho_0 < 1.
    For sigma^2 = 0 with zero mean (simple random walk) the regime is only
    flagged "degenerate": such laws are oracle inputs, not model instances.
    """
    speed_positive = dist.mean_rho < 1.0
    if dist.mean_log_rho == 0.0:
        if dist.degenerate:
            return RegimeInfo("degenerate", speed_positive, True)
        return RegimeInfo("recurrent", speed_positive, False)
    if dist.mean_log_rho < 0.0:
        return RegimeInfo("transient_right", speed_positive, dist.degenerate)
    return RegimeInfo("transient_left", speed_positive, dist.degenerate)


# ---------------------------------------------------------------------------
# environments and potentials
# ---------------------------------------------------------------------------

@dataclass
class Environment:
    """A finite window of site probabilities, with deterministic extension.

    Sampled environments know their seed and use the per-site counter hash,
    so the window can be extended consistently (the value of site i never
    depends on the window that was asked for).  Hand-constructed environments
    (``from_values``) are not extendable.
    """

    offset: int
    omega: np.ndarray
    dist: EnvDistribution
    seed: int
    extendable: bool = True

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.ndim != 1 or self.omega.size == 0:
            raise ValidationError("environment needs at least one site")
        lo_ok = self.omega >= self.dist.eps0 - 1e-12
        hi_ok = self.omega <= 1.0 - self.dist.eps0 + 1e-12
        if not np.all(lo_ok & hi_ok):
            raise ValidationError("site probabilities outside the support band")

    @staticmethod
    def from_values(omega, offset: int, dist: Optional[EnvDistribution] = None
                    ) -> "Environment":
        omega = np.asarray(omega, dtype=float)
        if dist is None:
            eps0 = float(min(omega.min(), 1.0 - omega.max()))
            if eps0 <= 0.0:
                raise ValidationError("site probabilities must lie in (0,1)")
            dist = EnvDistribution.uniform(min(eps0, 0.499))
        return Environment(offset=int(offset), omega=omega, dist=dist,
                           seed=0, extendable=False)

    @property
    def lo(self) -> int:
        return self.offset

    @property
    def hi(self) -> int:
        return self.offset + len(self.omega) - 1

    def omega_at(self, indices) -> np.ndarray:
        """Site probabilities at arbitrary indices (extending if allowed)."""
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        inside = (idx >= self.lo) & (idx <= self.hi)
        if np.all(inside):
            return self.omega[idx - self.lo]
        if not self.extendable:
            raise WindowCoverageError(
                f"window [{self.lo}, {self.hi}] does not cover requested sites "
                f"[{idx.min()}, {idx.max()}] and environment is not extendable")
        out = np.empty(idx.shape, dtype=float)
        out[inside] = self.omega[idx[inside] - self.lo]
        outside = ~inside
        u = site_uniforms(np.uint64(self.seed), idx[outside])
        out[outside] = self.dist.values_from_uniforms(u)
        return out

    def to_json(self) -> dict:
        return {
            "offset": int(self.offset),
            "omega": [float(w) for w in self.omega],
            "dist": self.dist.to_json(),
            "seed": int(self.seed),
            "version": ENV_JSON_VERSION,
        }

    @staticmethod
    def from_json(doc: dict) -> "Environment":
        if doc.get("version") != ENV_JSON_VERSION:
            raise ValidationError(f"unsupported environment version "
                                  f"{doc.get('version')!r}")
        return Environment(offset=int(doc["offset"]),
                           omega=np.asarray(doc["omega"], dtype=float),
                           dist=EnvDistribution.from_json(doc["dist"]),
                           seed=int(doc["seed"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @staticmethod
    def loads(text: str) -> "Environment":
        return Environment.from_json(json.loads(text))


def sample_environment(dist: EnvDistribution, lo: int, hi: int,
                       seed: int) -> Environment:
    """I.i.d. sites on [lo, hi]; deterministic and window-consistent in seed."""
    if lo > hi:
        raise ValidationError(f"empty window [{lo}, {hi}]")
    idx = np.arange(lo, hi + 1, dtype=np.int64)
    u = site_uniforms(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF), idx)
    return Environment(offset=lo, omega=dist.values_from_uniforms(u),
                       dist=dist, seed=int(seed) & 0xFFFFFFFFFFFFFFFF)


@dataclass
class Potential:
    """V on [first_index, last_index]; V(0) = 0 anchors the window."""

    first_index: int
    values: np.ndarray
    omega: np.ndarray          # sites [first_index+1, last_index]
    omega_first: int

    @property
    def last_index(self) -> int:
        return self.first_index + len(self.values) - 1

    def value(self, k: int) -> float:
        if not self.first_index <= k <= self.last_index:
            raise WindowCoverageError(
                f"V({k}) outside computed range "
                f"[{self.first_index}, {self.last_index}]")
        return float(self.values[k - self.first_index])

    def slice(self, a: int, b: int) -> np.ndarray:
        """V(a..b) inclusive."""
        if a < self.first_index or b > self.last_index or a > b:
            raise WindowCoverageError(
                f"V range [{a}, {b}] outside [{self.first_index}, "
                f"{self.last_index}]")
        return self.values[a - self.first_index: b - self.first_index + 1]

    def omega_value(self, i: int) -> float:
        if not self.omega_first <= i <= self.omega_first + len(self.omega) - 1:
            raise WindowCoverageError(f"omega({i}) outside stored window")
        return float(self.omega[i - self.omega_first])


def potential(env: Environment) -> Potential:
    """Potential of an environment window containing the origin."""
    if env.lo > 0 or env.hi < 0:
        raise WindowCoverageError(
            f"window [{env.lo}, {env.hi}] must contain site 0")
    log_rho = np.log((1.0 - env.omega) / env.omega)
    # positive side: V(n) = sum_{i=1..n} log rho_i, available up to hi
    pos = np.concatenate(([0.0], np.cumsum(log_rho[1 - env.lo:])))
    # negative side: V(n) = -(log rho_{n+1} + ... + log rho_0), down to lo-1
    neg_sites = log_rho[:1 - env.lo]          # sites lo..0
    neg = -np.cumsum(neg_sites[::-1])[::-1]   # V(lo-1)..V(-1)
    values = np.concatenate((neg, pos))
    return Potential(first_index=env.lo - 1, values=values,
                     omega=env.omega, omega_first=env.lo)


# ---------------------------------------------------------------------------
# valleys
# ---------------------------------------------------------------------------

@dataclass
class Valley:
    a: int
    m: int
    b: int
    depth: float

    def validate(self, pot: Potential) -> None:
        """Check the defining envelope inequalities (used by tests)."""
        if not self.a < self.m < self.b:
            raise ValidationError("valley needs a < m < b")
        va, vm, vb = (pot.value(self.a), pot.value(self.m), pot.value(self.b))
        left = pot.slice(self.a, self.m)
        right = pot.slice(self.m, self.b)
        if not (np.all(left >= vm - 1e-12) and np.all(left <= va + 1e-12)):
            raise ValidationError("left envelope violated")
        if not (np.all(right >= vm - 1e-12) and np.all(right <= vb + 1e-12)):
            raise ValidationError("right envelope violated")
        want = min(va - vm, vb - vm)
        if abs(self.depth - want) > 1e-12 * max(1.0, abs(want)):
            raise ValidationError("depth inconsistent with walls")


def locate_right_valley(pot: Potential) -> Valley:
    """First valley (0, m, b) to the right of the origin.

    b = first k > 0 with V(k) >= 0, m = first k > 0 attaining
    min_{0<=l<=b} V(l).  Raises when the window shows no such b, or when the
    minimum is attained at the origin only (monotone-up potential).
    """
    if pot.last_index < 1:
        raise WindowCoverageError("window has no sites right of the origin")
    right = pot.slice(1, pot.last_index)
    nonneg = np.nonzero(right >= 0.0)[0]
    if nonneg.size == 0:
        raise WindowCoverageError(
            "no k > 0 with V(k) >= 0 inside the window (window too short)")
    b = int(nonneg[0]) + 1
    seg = pot.slice(0, b)
    vmin = float(seg.min())
    hits = np.nonzero(seg[1:] == vmin)[0]
    if hits.size == 0 or int(hits[0]) + 1 >= b:
        raise DegenerateValleyError(
            "potential minimum on [0, b] attained at the origin only")
    m = int(hits[0]) + 1
    vm = pot.value(m)
    depth = min(pot.value(0) - vm, pot.value(b) - vm)
    return Valley(a=0, m=m, b=b, depth=depth)


# ---------------------------------------------------------------------------
# the good-environment event
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoodEnvParams:
    """Scale-n constants of the staircase event (all derived from eta, eps, n).

    delta maximizes the band probability eta(-2d <= log rho <= -d) (smallest
    maximizer on ties); theta_rate = -log of that probability.  Constants:
    eps_prime = eps*delta, c1 = floor(eps log n), c2 = floor(log n)^2,
    c3 = delta*c1, c4 = (1-10 eps') log n, beta = (1-9 eps')/(1-10 eps'),
    c5 = (eps'/2) log n, c6 = 2 log n.
    """

    n: float
    log_n: float
    eps: float
    delta: float
    theta_rate: float
    band_prob: float
    eps_prime: float
    beta: float
    c1: int
    c2: int
    c3: float
    c4: float
    c5: float
    c6: float
    eps_prime_conservative: bool

    @property
    def check_window_hi(self) -> int:
        """Right edge of the sampling window used for good-env checks."""
        return self.c1 + 3 * self.c2

    def to_json(self) -> dict:
        return {
            "n": self.n, "log_n": self.log_n, "eps": self.eps,
            "delta": self.delta, "theta_rate": self.theta_rate,
            "band_prob": self.band_prob, "eps_prime": self.eps_prime,
            "beta": self.beta, "c1": self.c1, "c2": self.c2, "c3": self.c3,
            "c4": self.c4, "c5": self.c5, "c6": self.c6,
            "eps_prime_conservative": self.eps_prime_conservative,
        }


def scan_delta(dist: EnvDistribution) -> tuple[float, float]:
    """Maximize eta(-2d <= log rho_0 <= -d) over d > 0.

    Discrete laws: the probability is piecewise constant with breakpoints at
    |x| and |x|/2 for x in supp(log rho), so those are scanned exactly.
    Continuous laws: 4096-point grid over (0, log((1-eps0)/eps0)].
    Ties break toward the smallest delta.
    """
    if dist.kind == "uniform":
        dmax = math.log((1.0 - dist.eps0) / dist.eps0)
        grid = np.linspace(dmax / _DELTA_GRID_POINTS, dmax, _DELTA_GRID_POINTS)
        probs = np.array([dist.band_probability(d) for d in grid])
        best = int(np.argmax(probs))   # argmax returns the first maximizer
        return float(grid[best]), float(probs[best])
    vals, _ = dist._atoms()
    lr = np.log((1.0 - vals) / vals)
    cands = sorted({abs(x) for x in lr if x < 0} |
                   {abs(x) / 2.0 for x in lr if x < 0})
    best_d, best_p = 0.0, 0.0
    for d in cands:
        p = dist.band_probability(d)
        if p > best_p + 1e-15:
            best_d, best_p = d, p
    return best_d, best_p


def good_env_params(dist: EnvDistribution, eps: float, n: float
                    ) -> GoodEnvParams:
    """Derive the staircase-event constants for scale n and sharpness eps."""
    if eps <= 0.0:
        raise ValidationError("eps must be positive")
    if n <= math.e:
        raise ValidationError("scale n must exceed e")
    delta, prob = scan_delta(dist)
    if prob <= 0.0:
        raise ValidationError(
            "no delta gives positive probability to the log-rho band")
    eps_prime = eps * delta
    if 10.0 * eps_prime >= 1.0:
        raise ValidationError(
            f"eps' = eps*delta = {eps_prime:.4f} must stay below 1/10")
    log_n = math.log(n)
    c1 = _floor_stable(eps * log_n)
    if c1 < 1:
        raise ValidationError(
            f"eps*log(n) = {eps * log_n:.3f} < 1: descent prefix is empty")
    c2 = _floor_stable(log_n) ** 2
    return GoodEnvParams(
        n=float(n), log_n=log_n, eps=eps, delta=delta,
        theta_rate=-math.log(prob), band_prob=prob,
        eps_prime=eps_prime,
        beta=(1.0 - 9.0 * eps_prime) / (1.0 - 10.0 * eps_prime),
        c1=c1, c2=c2,
        c3=delta * c1,
        c4=(1.0 - 10.0 * eps_prime) * log_n,
        c5=0.5 * eps_prime * log_n,
        c6=2.0 * log_n,
        eps_prime_conservative=eps_prime > 0.05,
    )


@dataclass
class GoodEnvReport:
    """Per-sub-event verdicts plus valley data when the event holds."""

    e1_descent_cone: bool
    e2_drop_window: bool
    e3_descent_tunnel: bool
    e4_rise_window: bool
    e5_rise_tunnel: bool
    good: bool
    b_n: Optional[int] = None
    m_n: Optional[int] = None
    m_n_bounds_ok: Optional[bool] = None
    v_mn_bounds_ok: Optional[bool] = None

    def to_json(self) -> dict:
        return {
            "e1_descent_cone": self.e1_descent_cone,
            "e2_drop_window": self.e2_drop_window,
            "e3_descent_tunnel": self.e3_descent_tunnel,
            "e4_rise_window": self.e4_rise_window,
            "e5_rise_tunnel": self.e5_rise_tunnel,
            "good": self.good,
            "b_n": self.b_n,
            "m_n": self.m_n,
            "m_n_bounds_ok": self.m_n_bounds_ok,
            "v_mn_bounds_ok": self.v_mn_bounds_ok,
        }


def _stage_flags(log_rho_cols: np.ndarray, params: GoodEnvParams, stage: int):
    """Vectorized event flags for a batch of environments.

    log_rho_cols has shape (B, width) holding log rho over consecutive sites:
    stage 1 -> sites 1..c1 (descent cone), stage 2 -> sites c1+1..c1+c2
    (shifted path Vt), stage 3 -> sites c1+c2+1..c1+2c2 (doubly shifted Vh).
    All range conditions use closed intervals.
    """
    path = np.cumsum(log_rho_cols, axis=1)
    if stage == 1:
        i = np.arange(1, params.c1 + 1)
        ok = (path >= -2.0 * params.delta * i) & (path <= -params.delta * i)
        return np.all(ok, axis=1)
    c2 = params.c2
    end = path[:, -1]
    if stage == 2:
        window = (end >= -params.beta * params.c4) & (end <= -params.c4)
    else:
        window = (end >= params.c6) & (end <= 2.0 * params.c6)
    i = np.arange(1, c2 + 1)
    dev = np.abs(path - (i / c2) * end[:, None])
    tunnel = np.all(dev <= params.c5, axis=1)
    return window, tunnel


def check_good_environment(env: Environment, params: GoodEnvParams
                           ) -> GoodEnvReport:
    """Evaluate the five staircase sub-events and, on success, the valley.

    Needs the window to cover [0, c1 + 2*c2 + margin] with margin >= c2
    (the margin locates b_n).  When all five flags hold, also records whether
    m_n and V(m_n) satisfy their scale-n bracketing bounds.
    """
    hi_needed = params.c1 + 3 * params.c2
    if env.lo > 0 or env.hi < hi_needed:
        raise WindowCoverageError(
            f"good-env check needs window [0, {hi_needed}], "
            f"have [{env.lo}, {env.hi}]")
    omega = env.omega_at(np.arange(1, hi_needed + 1))
    log_rho = np.log((1.0 - omega) / omega)
    c1, c2 = params.c1, params.c2
    e1 = bool(_stage_flags(log_rho[None, :c1], params, 1)[0])
    e2w, e3t = _stage_flags(log_rho[None, c1:c1 + c2], params, 2)
    e4w, e5t = _stage_flags(log_rho[None, c1 + c2:c1 + 2 * c2], params, 3)
    e2, e3, e4, e5 = bool(e2w[0]), bool(e3t[0]), bool(e4w[0]), bool(e5t[0])
    good = e1 and e2 and e3 and e4 and e5
    report = GoodEnvReport(e1, e2, e3, e4, e5, good)
    if good:
        pot = potential(env)
        valley = locate_right_valley(pot)
        report.b_n = valley.b
        report.m_n = valley.m
        ln2 = params.log_n ** 2
        report.m_n_bounds_ok = bool(
            (1.0 - params.eps_prime) * ln2 <= valley.m
            <= (1.0 + params.eps_prime) * ln2)
        depth = -pot.value(valley.m)
        report.v_mn_bounds_ok = bool(
            -params.delta + (1.0 - 9.0 * params.eps_prime) * params.log_n
            <= depth <= (1.0 - 6.0 * params.eps_prime) * params.log_n)
    return report


@dataclass
class GoodEnvScan:
    """Outcome of staged rejection sampling for the good-environment event."""

    tried: int
    passed_cone: int
    passed_descent: int
    passed_all: int
    first_good: Optional[Environment]
    first_good_try: Optional[int]

    @property
    def acceptance_rate(self) -> float:
        return self.passed_all / self.tried if self.tried else 0.0


def scan_good_environments(dist: EnvDistribution, params: GoodEnvParams,
                           tries: int, master_seed: int,
                           batch_size: int = 8192,
                           want_env: bool = True) -> GoodEnvScan:
    """Vectorized rejection sampling over `tries` fresh environments.

    Candidates are eliminated stage by stage (cone, then descent window and
    tunnel, then rise window and tunnel); later-stage sites are only sampled
    for survivors, which the per-site counter hash makes consistent with
    sampling the full window directly.
    """
    c1, c2 = params.c1, params.c2
    n_cone = n_desc = n_all = 0
    first_env = None
    first_try = None
    done = 0
    while done < tries:
        b = min(batch_size, tries - done)
        idx = np.arange(done, done + b, dtype=np.int64)
        seeds = subseed_array(master_seed, idx)

        u = site_uniforms(seeds[:, None], np.arange(1, c1 + 1)[None, :])
        w = dist.values_from_uniforms(u)
        cone = _stage_flags(np.log((1.0 - w) / w), params, 1)
        n_cone += int(cone.sum())
        seeds2 = seeds[cone]
        idx2 = idx[cone]
        if seeds2.size:
            u = site_uniforms(seeds2[:, None],
                              np.arange(c1 + 1, c1 + c2 + 1)[None, :])
            w = dist.values_from_uniforms(u)
            win, tun = _stage_flags(np.log((1.0 - w) / w), params, 2)
            desc = win & tun
            n_desc += int(desc.sum())
            seeds3 = seeds2[desc]
            idx3 = idx2[desc]
            if seeds3.size:
                u = site_uniforms(seeds3[:, None],
                                  np.arange(c1 + c2 + 1,
                                            c1 + 2 * c2 + 1)[None, :])
                w = dist.values_from_uniforms(u)
                win, tun = _stage_flags(np.log((1.0 - w) / w), params, 3)
                allok = win & tun
                n_all += int(allok.sum())
                if first_env is None and np.any(allok):
                    k = int(np.nonzero(allok)[0][0])
                    first_try = int(idx3[k])
                    if want_env:
                        first_env = sample_environment(
                            dist, -1, params.check_window_hi,
                            int(seeds3[k]))
        done += b
    return GoodEnvScan(tried=tries, passed_cone=n_cone, passed_descent=n_desc,
                       passed_all=n_all, first_good=first_env,
                       first_good_try=first_try)


def build_staircase_environment(params: GoodEnvParams, dist: EnvDistribution,
                                omega_origin: float = 0.5,
                                margin_slope: float = 1.5) -> Environment:
    """Hand-built environment satisfying every staircase sub-event.

    Sites 1..c1 carry log rho = -1.5*delta (inside the cone), the next c2
    sites descend linearly to the center of the drop window, the next c2
    sites climb linearly to margin_slope*c6 (inside the rise window), and the
    remainder of the window keeps climbing.  Deviations from the chords are
    exactly zero, so the tunnel conditions hold with slack c5.
    """
    c1, c2 = params.c1, params.c2
    steps = [math.log(1.0 / omega_origin - 1.0)]          # site 0 (sets V(-1))
    steps += [-1.5 * params.delta] * c1
    drop = -0.5 * (1.0 + params.beta) * params.c4
    steps += [drop / c2] * c2
    rise = margin_slope * params.c6
    steps += [rise / c2] * (params.check_window_hi - c1 - c2)
    log_rho = np.array(steps)
    omega = 1.0 / (1.0 + np.exp(log_rho))
    lo_band, hi_band = dist.eps0, 1.0 - dist.eps0
    if omega.min() < lo_band or omega.max() > hi_band:
        raise ValidationError("staircase steps leave the support band")
    omega = np.concatenate(([omega_origin], omega))       # site -1 (unused pad)
    return Environment.from_values(omega, offset=-1, dist=dist)
