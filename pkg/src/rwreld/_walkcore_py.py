"""Pure-Python fallback for the compiled walk kernels.

Same API and bit-identical trajectories as rwreld._walkcore (both consume one
SplitMix64 counter uniform per step).  Step uniforms are pre-generated in
vectorized chunks to keep the interpreter loop tolerable; it is still orders
of magnitude slower than the extension; see ``python -m rwreld.benchmark``.
"""

from __future__ import annotations

import math

import numpy as np

from .rngtools import site_uniforms, step_uniforms

BACKEND = "python"

HIT_LEFT = 0
HIT_RIGHT = 1
CAPPED = 2
EXHAUSTED = 3

_CHUNK = 4096


def _sample_site(dist_code, par1, par2, support, cumw, env_seed, site):
    u = float(site_uniforms(env_seed, site))
    if dist_code == 0:
        return par1 if u < 0.5 else 1.0 - par1
    if dist_code == 1:
        return par1 + (1.0 - 2.0 * par1) * u
    if dist_code == 2:
        return par1
    k = int(np.searchsorted(cumw, u, side="right"))
    if k >= len(support):
        k = len(support) - 1
    return support[k]


def _walk_loop(lookup, lo, hi, start, left, right, use_left, use_right,
               cap, walk_seed):
    pos = start
    t = 0
    chunk = None
    chunk_base = 0
    while t < cap:
        if chunk is None or t - chunk_base >= len(chunk):
            chunk_base = t
            chunk = step_uniforms(walk_seed, t, min(_CHUNK, cap - t))
        u = chunk[t - chunk_base]
        t += 1
        pos += 1 if u < lookup(pos) else -1
        if use_left and pos == left:
            return HIT_LEFT, t, pos
        if use_right and pos == right:
            return HIT_RIGHT, t, pos
        if pos < lo or pos > hi:
            return EXHAUSTED, t, pos
    return CAPPED, cap, pos


def run_hit_quenched(thresh, offset, start, left, right, use_left, use_right,
                     cap, walk_seeds, out_outcome, out_steps, out_pos, i0, i1):
    thresh = np.asarray(thresh)
    lo = offset
    hi = offset + len(thresh) - 1

    def lookup(pos):
        return thresh[pos - lo]

    for i in range(i0, i1):
        o, s, p = _walk_loop(lookup, lo, hi, start, left, right,
                             use_left, use_right, int(cap), int(walk_seeds[i]))
        out_outcome[i] = o
        out_steps[i] = s
        out_pos[i] = p


def run_hit_lazy(dist_code, par1, par2, support, cumw, env_seeds, walk_seeds,
                 buf_lo, buf_hi, start, left, right, use_left, use_right,
                 cap, env_buf, out_outcome, out_steps, out_pos, i0, i1):
    for i in range(i0, i1):
        env_seed = int(env_seeds[i])
        vis = [start, start]

        def lookup(pos, _seed=env_seed, _vis=vis):
            th = env_buf[pos - buf_lo]
            if math.isnan(th):
                th = _sample_site(dist_code, par1, par2, support, cumw, _seed, pos)
                env_buf[pos - buf_lo] = th
            _vis[0] = min(_vis[0], pos)
            _vis[1] = max(_vis[1], pos)
            return th

        o, s, p = _walk_loop(lookup, buf_lo, buf_hi, start, left, right,
                             use_left, use_right, int(cap), int(walk_seeds[i]))
        out_outcome[i] = o
        out_steps[i] = s
        out_pos[i] = p
        a = max(vis[0], buf_lo) - buf_lo
        b = min(vis[1], buf_hi) - buf_lo
        env_buf[a:b + 1] = np.nan


def run_position_lazy(dist_code, par1, par2, support, cumw, env_seeds,
                      walk_seeds, halfwidth, n_steps, env_buf,
                      out_exhausted, out_pos, i0, i1):
    for i in range(i0, i1):
        env_seed = int(env_seeds[i])
        walk_seed = int(walk_seeds[i])
        pos = 0
        vlo = vhi = 0
        exhausted = 0
        t = 0
        chunk = None
        chunk_base = 0
        n_steps_i = int(n_steps)
        while t < n_steps_i:
            th = env_buf[pos + halfwidth]
            if math.isnan(th):
                th = _sample_site(dist_code, par1, par2, support, cumw,
                                  env_seed, pos)
                env_buf[pos + halfwidth] = th
            if chunk is None or t - chunk_base >= len(chunk):
                chunk_base = t
                chunk = step_uniforms(walk_seed, t, min(_CHUNK, n_steps_i - t))
            u = chunk[t - chunk_base]
            t += 1
            pos += 1 if u < th else -1
            vlo = min(vlo, pos)
            vhi = max(vhi, pos)
            if pos < -halfwidth or pos > halfwidth:
                exhausted = 1
                break
        out_exhausted[i] = exhausted
        out_pos[i] = pos
        a = max(vlo, -halfwidth) + halfwidth
        b = min(vhi, halfwidth) + halfwidth
        env_buf[a:b + 1] = np.nan
