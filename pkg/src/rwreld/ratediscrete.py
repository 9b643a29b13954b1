"""Annealed cumulant function of hitting times and its curvature criterion.

Lambda(r) = E_env[ log E_walk(e^{r tau_1}) ] for r < 0, averaged over i.i.d.
environments with the certified quenched transform of chain_exact.  The
curvature ratio

    f(r) = Lambda''(r) / Lambda'(r)^3

tends to 0 as r -> 0- exactly when the quenched rate function has exploding
second derivative at zero velocity; f is sandwiched by the computable chain
f <= g <= h, where g moves the expectation outside the ratio and h bounds
1/phi by e/eps0 (valid on -1 < r < 0).  With all three assembled from the
same environment sample the two inequalities hold surely, not just within
Monte Carlo error.

A Legendre-type reconstruction of the velocity rate function is included as
a secondary visualization: I(v) = v * sup_{r<=0} (r/v - Lambda(r)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chainexact import LAPLACE_DEPTH_MAX, laplace_batch
from .envmodel import EnvDistribution
from .errors import ValidationError
from .rngtools import subseed, subseed_array


@dataclass
class CGFPoint:
    """One grid point of the annealed cumulant function and its diagnostics."""

    r: float
    Lambda: float
    dLambda: float
    d2Lambda: float
    f: float
    g: float
    h: float
    mc_err: float               # standard error of Lambda over environments
    env_samples: int


@dataclass
class RatePoint:
    velocity: float
    I: float
    I_second_diff: float
    r_star: float


def _env_seeds(seed: int, n: int) -> np.ndarray:
    return subseed_array(subseed(seed, 0x434746), np.arange(n))


def annealed_cgf(dist: EnvDistribution, r: float, env_samples: int,
                 window: Optional[int] = None, tol: float = 1e-10,
                 seed: int = 0) -> CGFPoint:
    """Annealed cumulant function point at r < 0.

    Averages log phi over env_samples i.i.d. environments; derivatives are
    taken analytically inside each environment and then averaged, so
    dLambda = E[phi'/phi] and d2Lambda = E[phi''/phi - (phi'/phi)^2].
    `window` caps the recursion depth (default: the module-wide cap).
    """
    if r >= 0.0:
        raise ValidationError("annealed cumulant function needs r < 0")
    if env_samples < 100:
        raise ValidationError("need at least 100 environment samples")
    depth_max = window if window is not None else LAPLACE_DEPTH_MAX
    seeds = _env_seeds(seed, env_samples)
    phi, dphi, d2phi, _, _ = laplace_batch(dist, seeds, r, tol,
                                           depth_max=depth_max)
    log_phi = np.log(phi)
    ratio1 = dphi / phi
    ratio2 = d2phi / phi - ratio1 ** 2
    lam = float(np.mean(log_phi))
    dlam = float(np.mean(ratio1))
    d2lam = float(np.mean(ratio2))
    f = d2lam / dlam ** 3
    g = float(np.mean(d2phi / phi)) / dlam ** 3
    h = (math.e / dist.eps0) * float(np.mean(d2phi)) / float(np.mean(dphi)) ** 3
    return CGFPoint(r=r, Lambda=lam, dLambda=dlam, d2Lambda=d2lam,
                    f=f, g=g, h=h,
                    mc_err=float(np.std(log_phi, ddof=1)
                                 / math.sqrt(env_samples)),
                    env_samples=env_samples)


@dataclass
class CurvatureTrend:
    points: list
    f_nonnegative: bool
    chain_ok: bool              # f <= g <= h at every point with -1 < r < 0
    f_endpoint_decrease: bool   # f at the r closest to 0 < f at the most negative r
    h_loglog_slope: float       # d log h / d log|r| over the last three points

    @property
    def h_slope_near_one(self) -> bool:
        return 0.7 <= self.h_loglog_slope <= 1.3


def curvature_trend(dist: EnvDistribution, r_grid: Sequence[float],
                    env_samples: int = 10_000, tol: float = 1e-10,
                    seed: int = 0) -> CurvatureTrend:
    """Curvature table over a strictly negative grid sorted toward 0-.

    The same environment sample backs every grid point, so trend comparisons
    between points see correlated (mostly cancelling) sampling noise.
    """
    rs = list(r_grid)
    if not rs or any(r >= 0.0 for r in rs):
        raise ValidationError("grid must be strictly negative")
    if sorted(rs) != rs:
        raise ValidationError("grid must ascend toward 0-")
    points = [annealed_cgf(dist, r, env_samples, None, tol, seed) for r in rs]
    f_nonneg = all(p.f >= 0.0 for p in points)
    inner = [p for p in points if -1.0 < p.r < 0.0]
    tinyslack = 1e-12
    chain_ok = all(p.f <= p.g + tinyslack and p.g <= p.h + tinyslack
                   for p in inner)
    f_dec = points[-1].f < points[0].f
    tail = points[-3:] if len(points) >= 3 else points
    lx = np.log([abs(p.r) for p in tail])
    ly = np.log([p.h for p in tail])
    slope = float(np.polyfit(lx, ly, 1)[0]) if len(tail) >= 2 else math.nan
    return CurvatureTrend(points=points, f_nonnegative=f_nonneg,
                          chain_ok=chain_ok, f_endpoint_decrease=f_dec,
                          h_loglog_slope=slope)


def _refine_quadratic(rs: np.ndarray, s: np.ndarray, k: int
                      ) -> tuple[float, float]:
    """Parabola through the three points around index k; (argmax, max)."""
    if k == 0 or k == len(rs) - 1:
        return float(rs[k]), float(s[k])
    x0, x1, x2 = rs[k - 1], rs[k], rs[k + 1]
    y0, y1, y2 = s[k - 1], s[k], s[k + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) \
        / denom
    if a >= 0.0:                  # no interior curvature: keep the node
        return float(rs[k]), float(s[k])
    xs = -b / (2.0 * a)
    if not x0 <= xs <= x2:
        return float(rs[k]), float(s[k])
    c = y1 - a * x1 * x1 - b * x1
    return float(xs), float(a * xs * xs + b * xs + c)


def rate_function_table(dist: EnvDistribution, r_grid: Sequence[float],
                        velocity_grid: Sequence[float],
                        env_samples: int = 10_000, tol: float = 1e-10,
                        seed: int = 0) -> list[RatePoint]:
    """Velocity rate function via the discrete Legendre supremum.

    I(v) = v * sup_{r<=0} (r/v - Lambda(r)) over the grid plus the exact
    boundary term r=0 (value 0), with local quadratic refinement around the
    discrete maximizer; convexity diagnostics come as central second
    differences over the velocity grid.
    """
    vels = list(velocity_grid)
    if any(not 0.0 < v <= 1.0 for v in vels):
        raise ValidationError("velocities must lie in (0, 1]")
    points = [annealed_cgf(dist, r, env_samples, None, tol, seed)
              for r in sorted(r_grid)]
    rs = np.array([p.r for p in points])
    lam = np.array([p.Lambda for p in points])
    out = []
    for v in vels:
        s = rs / v - lam
        k = int(np.argmax(s))
        r_star, s_star = _refine_quadratic(rs, s, k)
        if s_star < 0.0:          # r = 0 endpoint dominates: sup is 0 there
            r_star, s_star = 0.0, 0.0
        out.append(RatePoint(velocity=v, I=v * s_star,
                             I_second_diff=math.nan, r_star=r_star))
    for i in range(1, len(out) - 1):
        v0, v1, v2 = out[i - 1].velocity, out[i].velocity, out[i + 1].velocity
        i0, i1, i2 = out[i - 1].I, out[i].I, out[i + 1].I
        h1, h2 = v1 - v0, v2 - v1
        out[i].I_second_diff = 2.0 * (h1 * i2 - (h1 + h2) * i1 + h2 * i0) \
            / (h1 * h2 * (h1 + h2))
    return out
