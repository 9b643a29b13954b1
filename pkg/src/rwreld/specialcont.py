"""Modified-Bessel machinery and rate functions of the continuous model.

The diffusion in a Brownian potential with drift parameter kappa has speed
v = (kappa-1)^+/4 and a hitting-time Laplace exponent expressible through a
ratio of modified Bessel K functions:

    Gamma_kappa(lam) = sqrt(2 lam) * K_{kappa-1}(y) / K_kappa(y),
    y = 4 sqrt(2 lam).

Only ratios are ever needed, so K itself is never formed: the ratio comes
from a Steed-type continued fraction at a base order in [-1/2, 1/2] followed
by the exact three-term recurrence (upward is stable for K).  Rate functions
are Legendre-type suprema of Gamma, maximized by golden section after a
coarse unimodality scan.  The drifted-Brownian benchmark exponent
phi_v(lam) = sqrt(2 lam + v^2) - v and its Riccati defect A(x) support the
comparison and ODE checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceError, ValidationError

_TINY = 1e-300
_GOLDEN_INV = (math.sqrt(5.0) - 1.0) / 2.0
CF_MAX_ITER = 200_000


def drift_speed(kappa: float) -> float:
    """Asymptotic speed (kappa-1)^+/4 of the drifted-potential diffusion."""
    return max(kappa - 1.0, 0.0) / 4.0


# ---------------------------------------------------------------------------
# Bessel-K ratios
# ---------------------------------------------------------------------------

def _cf_rup(mu: np.ndarray, y: np.ndarray, tol: float, max_iter: int
            ) -> np.ndarray:
    """K_{mu+1}(y)/K_mu(y) for base orders mu in [-1/2, 1/2], vectorized.

    Evaluates R = (mu + 1/2 + y - h)/y with h the continued fraction
    h = a1/(b1 + a2/(b2 + ...)), a1 = 1/4 - mu^2, a_i = mu^2 - (i-1/2)^2,
    b_i = 2(y + i), by modified Lentz with per-lane convergence freezing.
    Converges for every y > 0 (slowly as y -> 0).
    """
    mu = np.asarray(mu, dtype=float)
    y = np.asarray(y, dtype=float)
    mu, y = np.broadcast_arrays(mu, y)
    a1 = 0.25 - mu * mu
    f = np.full(mu.shape, _TINY)
    c = f.copy()
    d = np.zeros(mu.shape)
    conv = np.zeros(mu.shape, dtype=bool)
    # Lentz deltas stagnate around 2-3e-13 in double precision; demanding
    # less than that spins forever
    inner = max(0.5 * tol, 1e-13)
    worst = np.inf
    for i in range(1, max_iter + 1):
        ai = a1 if i == 1 else mu * mu - (i - 0.5) ** 2
        bi = 2.0 * (y + i)
        d = bi + ai * d
        d = np.where(d == 0.0, _TINY, d)
        c = bi + ai / c
        c = np.where(c == 0.0, _TINY, c)
        d = 1.0 / d
        delta = np.where(conv, 1.0, c * d)
        f = f * delta
        err = np.abs(delta - 1.0)
        conv |= err < inner
        if conv.all():
            break
        worst = float(err.max())
    else:
        raise ConvergenceError(
            f"Bessel ratio continued fraction not converged after "
            f"{max_iter} terms (worst step {worst:.2e})", achieved=worst)
    return (mu + 0.5 + y - f) / y


def bessel_k_ratio(nu, y, tol: float = 1e-12,
                   max_iter: int = CF_MAX_ITER):
    """K_nu(y)/K_{nu+1}(y) for nu > -1, y > 0 (scalars or arrays).

    Orders reduce to a continued-fraction base in [-1/2, 1/2] and climb back
    with the exact recurrence K_{m+1} = K_{m-1} + (2m/y) K_m; orders in
    (-1, -1/2) take one downward step instead (K symmetry in the order makes
    nu = -1/2 exactly 1).  Relative error is at the requested tol.
    """
    nu_arr = np.asarray(nu, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0.0):
        raise ValidationError("Bessel ratio needs y > 0")
    if np.any(nu_arr <= -1.0):
        raise ValidationError("Bessel ratio implemented for nu > -1")
    nu_b, y_b = np.broadcast_arrays(nu_arr, y_arr)
    out = np.empty(nu_b.shape)

    low = nu_b < -0.5
    if np.any(low):
        # K_nu/K_{nu+1} = R_up(nu+1) - 2(nu+1)/y with base order nu+1 in (0,1/2)
        nl, yl = nu_b[low], y_b[low]
        rup = _cf_rup(nl + 1.0, yl, tol, max_iter)
        out[low] = rup - 2.0 * (nl + 1.0) / yl
    high = ~low
    if np.any(high):
        nh, yh = nu_b[high], y_b[high]
        steps = np.floor(nh + 0.5).astype(int)
        mu = nh - steps
        rup = _cf_rup(mu, yh, tol, max_iter)
        kmax = int(steps.max()) if steps.size else 0
        for k in range(1, kmax + 1):
            act = steps >= k
            rup = np.where(act, 2.0 * (mu + k) / yh + 1.0 / rup, rup)
        out[high] = 1.0 / rup
    if out.shape == ():
        return float(out)
    return out if nu_b.shape == out.shape else out.reshape(nu_b.shape)


def laplace_exponent(kappa: float, lam, tol: float = 1e-12):
    """Gamma_kappa(lam) = sqrt(2 lam) K_{kappa-1}(4 sqrt(2 lam))/K_kappa(...).

    Laplace exponent of unit hitting times of the diffusion; 0 at lam = 0
    exactly, concave and increasing on lam >= 0.
    """
    if kappa <= 0.0:
        raise ValidationError("kappa must be positive")
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0.0):
        raise ValidationError("lam must be >= 0")
    out = np.zeros(lam_arr.shape)
    pos = lam_arr > 0.0
    if np.any(pos):
        lp = lam_arr[pos]
        y = 4.0 * np.sqrt(2.0 * lp)
        out[pos] = np.sqrt(2.0 * lp) * bessel_k_ratio(kappa - 1.0, y, tol)
    if out.shape == ():
        return float(out)
    return out


def bm_exponent_and_defect(kappa: float, x):
    """(phi_v(x), A(x)) for the drifted-Brownian benchmark.

    phi_v(x) = sqrt(2x + v^2) - v is the benchmark Laplace exponent and
    A(x) = x phi_v' - 2 phi_v^2 - kappa phi_v + 4x its defect in the Riccati
    equation satisfied by Gamma_kappa; A(x) < 0 for all x > 0 (checked).
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValidationError("x must be positive")
    v = drift_speed(kappa)
    root = np.sqrt(2.0 * x_arr + v * v)
    phi = root - v
    # conjugate form of (-x - v^2 + v root)/root: cancellation-free
    a = -x_arr * x_arr / (root * (v * root + x_arr + v * v))
    if not np.all(a < 0.0):
        raise ConvergenceError("Riccati defect A(x) failed to be negative")
    if phi.shape == ():
        return float(phi), float(a)
    return phi, a


def riccati_residual(kappa: float, x, h: Optional[float] = None,
                     tol: float = 1e-12):
    """Residual x Gamma' - 2 Gamma^2 - kappa Gamma + 4x of the hitting-time ODE.

    Gamma' is a central difference with step h (default max(1e-6, 1e-6 x)),
    deliberately independent of any Bessel derivative identity.
    """
    x_arr = np.asarray(x, dtype=float)
    hs = np.maximum(1e-6, 1e-6 * x_arr) if h is None \
        else np.full(x_arr.shape, float(h))
    if np.any(x_arr <= hs):
        raise ValidationError("need x > h > 0 for the central difference")
    g = laplace_exponent(kappa, x_arr, tol)
    gp = (laplace_exponent(kappa, x_arr + hs, tol)
          - laplace_exponent(kappa, x_arr - hs, tol)) / (2.0 * hs)
    res = x_arr * gp - 2.0 * g * g - kappa * g + 4.0 * x_arr
    if res.shape == ():
        return float(res)
    return res


# ---------------------------------------------------------------------------
# rate functions
# ---------------------------------------------------------------------------

def _unimodal_argmax(values: np.ndarray) -> bool:
    """True when the sequence rises then falls (one sign change of diffs)."""
    d = np.diff(values)
    scale = max(1.0, float(np.max(np.abs(values))))
    signs = np.sign(np.where(np.abs(d) < 1e-13 * scale, 0.0, d))
    nz = signs[signs != 0.0]
    changes = int(np.sum(np.diff(nz) != 0.0)) if nz.size else 0
    if changes > 1:
        return False
    if nz.size and nz[0] < 0 and np.any(nz > 0):
        return False
    return True


def inverse_speed_rate(kappa: float, u, tol: float = 1e-12,
                       scan_points: int = 33, iters: int = 90):
    """(I(u), argmax lam) with I(u) = sup_{lam >= 0} (Gamma_kappa(lam) - lam u).

    The bracket [0, 4/u^2] follows from Gamma ~ sqrt(2 lam) at large lam
    (maximizer near 1/(2 u^2)); a coarse scan checks unimodality (Gamma is
    concave, so a failure means evaluation trouble) and is widened once
    before giving up.  I >= 0 always since lam = 0 contributes 0.
    """
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr <= 0.0):
        raise ValidationError("u must be positive")
    scalar = np.isscalar(u) or np.asarray(u).shape == ()
    v = drift_speed(kappa)
    if v > 0.0:
        boundary = u_arr >= 1.0 / v
        if boundary.any():
            # concavity gives Gamma(lam) <= lam/v: the supremum sits at 0
            vals = np.zeros_like(u_arr)
            lams = np.zeros_like(u_arr)
            if not boundary.all():
                vi, li = inverse_speed_rate(kappa, u_arr[~boundary], tol,
                                            scan_points, iters)
                vals[~boundary] = vi
                lams[~boundary] = li
            if scalar:
                return float(vals[0]), float(lams[0])
            return vals, lams
    hi = 4.0 / u_arr ** 2
    for attempt in range(2):
        grid = np.linspace(0.0, 1.0, scan_points)[None, :] * hi[:, None]
        vals = laplace_exponent(kappa, grid, tol) - grid * u_arr[:, None]
        if all(_unimodal_argmax(vals[i]) for i in range(len(u_arr))):
            break
        if attempt == 1:
            raise ConvergenceError("objective not unimodal on widened bracket")
        hi = hi * 4.0
    k = np.argmax(vals, axis=1)
    lo_i = np.maximum(k - 1, 0)
    hi_i = np.minimum(k + 1, scan_points - 1)
    a = grid[np.arange(len(u_arr)), lo_i]
    b = grid[np.arange(len(u_arr)), hi_i]
    for _ in range(iters):
        span = b - a
        x1 = b - _GOLDEN_INV * span
        x2 = a + _GOLDEN_INV * span
        f1 = laplace_exponent(kappa, x1, tol) - x1 * u_arr
        f2 = laplace_exponent(kappa, x2, tol) - x2 * u_arr
        take1 = f1 >= f2
        b = np.where(take1, x2, b)
        a = np.where(take1, a, x1)
    lam_star = 0.5 * (a + b)
    val = laplace_exponent(kappa, lam_star, tol) - lam_star * u_arr
    worse = val < 0.0
    lam_star = np.where(worse, 0.0, lam_star)
    val = np.where(worse, 0.0, val)
    if scalar:
        return float(val[0]), float(lam_star[0])
    return val, lam_star


@dataclass
class ContRatePoint:
    """One row of a continuous-model rate table (lam-kind or x-kind)."""

    kappa: float
    v_kappa: float
    argument: float
    Gamma: float
    phi_v: float
    I_kappa: float
    lambda_star: float
    J_kappa: float
    J_B: float


def speed_rate_point(kappa: float, x: float, tol: float = 1e-12
                     ) -> ContRatePoint:
    """Full comparison row at speed argument x > 0.

    J(x) = x I(1/x) against the drifted-Brownian benchmark (x-v)^2/2.
    """
    if x <= 0.0:
        raise ValidationError("x must be positive")
    v = drift_speed(kappa)
    i_val, lam_star = inverse_speed_rate(kappa, 1.0 / x, tol)
    phi, _ = bm_exponent_and_defect(kappa, lam_star) if lam_star > 0 \
        else (0.0, None)
    return ContRatePoint(
        kappa=kappa, v_kappa=v, argument=x,
        Gamma=laplace_exponent(kappa, lam_star, tol),
        phi_v=phi,
        I_kappa=i_val, lambda_star=lam_star,
        J_kappa=x * i_val, J_B=0.5 * (x - v) ** 2,
    )


# ---------------------------------------------------------------------------
# inequality certificates
# ---------------------------------------------------------------------------

@dataclass
class BesselMarginReport:
    """Margins of the two-sided ratio bounds over a (nu, y) grid."""

    nu: np.ndarray
    y: np.ndarray
    ratio: np.ndarray
    upper_margin: np.ndarray     # bound - ratio, must be > 0
    lower_margin: np.ndarray     # ratio - bound, must be > 0
    min_upper: float
    min_upper_at: tuple
    min_lower: float
    min_lower_at: tuple

    @property
    def all_positive(self) -> bool:
        return bool(self.min_upper > 0.0 and self.min_lower > 0.0)


def verify_bessel_inequalities(nu_grid: Sequence[float],
                               y_grid: Sequence[float],
                               tol: float = 1e-12) -> BesselMarginReport:
    """Certify the two-sided bounds on K_nu/K_{nu+1} over a grid.

    Upper: ratio < (sqrt(y^2 + nu^2) - nu)/y for nu > 0, y > 0.
    Lower: ratio > (1/y)[ y^2/(sqrt(y^2+(nu+1)^2) - (nu+1)) - 2(nu+1) ].
    """
    nu = np.asarray(list(nu_grid), dtype=float)
    ys = np.asarray(list(y_grid), dtype=float)
    if np.any(nu <= 0.0) or np.any(ys <= 0.0):
        raise ValidationError("grids must be strictly positive")
    nn, yy = np.meshgrid(nu, ys, indexing="ij")
    ratio = bessel_k_ratio(nn, yy, tol)
    upper = (np.sqrt(yy * yy + nn * nn) - nn) / yy - ratio
    np1 = nn + 1.0
    lower_bound = (yy * yy / (np.sqrt(yy * yy + np1 * np1) - np1)
                   - 2.0 * np1) / yy
    lower = ratio - lower_bound
    iu = np.unravel_index(int(np.argmin(upper)), upper.shape)
    il = np.unravel_index(int(np.argmin(lower)), lower.shape)
    return BesselMarginReport(
        nu=nn, y=yy, ratio=ratio, upper_margin=upper, lower_margin=lower,
        min_upper=float(upper[iu]), min_upper_at=(float(nn[iu]), float(yy[iu])),
        min_lower=float(lower[il]), min_lower_at=(float(nn[il]), float(yy[il])),
    )


@dataclass
class AsymptoticReport:
    kappa: float
    lam: float
    hankel_residual: float       # Gamma - sqrt(2 lam) + (kappa - 1/2)/4
    benchmark_residual: float    # Gamma - phi_v + 1/8


def asymptotic_checks(kappa: float, lam_large: float,
                      tol: float = 1e-12) -> AsymptoticReport:
    """Large-argument residuals of the exponent (both should be O(1/sqrt(lam)))."""
    if lam_large < 1e3:
        raise ValidationError("asymptotic checks need lam >= 1e3")
    g = laplace_exponent(kappa, lam_large, tol)
    v = drift_speed(kappa)
    phi = math.sqrt(2.0 * lam_large + v * v) - v
    return AsymptoticReport(
        kappa=kappa, lam=lam_large,
        hankel_residual=g - math.sqrt(2.0 * lam_large) + (kappa - 0.5) / 4.0,
        benchmark_residual=g - phi + 0.125,
    )
