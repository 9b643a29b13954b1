# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled walk-stepping kernels.

Single ±1 steps dominate the runtime of every Monte Carlo experiment here
(budgets reach ~1e10 steps), so the inner loops live in C.  Randomness is the
same counter-based SplitMix64 construction as rwreld.rngtools, which makes the
pure-Python fallback (rwreld._walkcore_py) bit-identical and lets environments
be sampled lazily per site without any stream bookkeeping.
"""

from libc.stdint cimport uint64_t, int64_t
from libc.math cimport isnan, NAN

BACKEND = "cython"

cdef enum:
    OUT_HIT_LEFT = 0
    OUT_HIT_RIGHT = 1
    OUT_CAPPED = 2
    OUT_EXHAUSTED = 3

HIT_LEFT = OUT_HIT_LEFT
HIT_RIGHT = OUT_HIT_RIGHT
CAPPED = OUT_CAPPED
EXHAUSTED = OUT_EXHAUSTED

DEF GOLDEN = 0x9E3779B97F4A7C15
DEF MIX1 = 0xBF58476D1CE4E5B9
DEF MIX2 = 0x94D049BB133111EB
DEF TAG_ENV = 0x454E56
DEF TAG_WALK = 0x574C4B
DEF INV53 = 1.1102230246251565e-16  # 2**-53


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * (<uint64_t> MIX1)
    z = (z ^ (z >> 27)) * (<uint64_t> MIX2)
    return z ^ (z >> 31)


cdef inline double _site_uniform(uint64_t seed, long site) nogil:
    cdef uint64_t k = <uint64_t> (<int64_t> site)
    cdef uint64_t z = _mix64(seed + (k + <uint64_t> TAG_ENV) * (<uint64_t> GOLDEN))
    return <double> (z >> 11) * INV53


cdef inline double _step_uniform(uint64_t seed, uint64_t step) nogil:
    cdef uint64_t z = _mix64(seed + (step + <uint64_t> TAG_WALK) * (<uint64_t> GOLDEN))
    return <double> (z >> 11) * INV53


cdef inline double _sample_site(int dist_code, double par1, double par2,
                                const double* support, const double* cumw,
                                int n_atoms, uint64_t env_seed, long site) nogil:
    cdef double u = _site_uniform(env_seed, site)
    cdef int k
    if dist_code == 0:      # two-point {p, 1-p}, equal weights
        return par1 if u < 0.5 else 1.0 - par1
    elif dist_code == 1:    # uniform on [eps0, 1-eps0]
        return par1 + (1.0 - 2.0 * par1) * u
    elif dist_code == 2:    # constant p
        return par1
    else:                   # explicit finite support
        for k in range(n_atoms - 1):
            if u < cumw[k]:
                return support[k]
        return support[n_atoms - 1]


cdef inline int _walk_loop(const double* thresh, long lo, long hi, long start,
                           long left, long right, int use_left, int use_right,
                           uint64_t cap, uint64_t walk_seed,
                           uint64_t* steps_out, long* pos_out) nogil:
    """Walk until an absorbing site, the step cap, or window exhaustion."""
    cdef long pos = start
    cdef uint64_t t = 0
    cdef double u
    while t < cap:
        u = _step_uniform(walk_seed, t)
        t += 1
        if u < thresh[pos - lo]:
            pos += 1
        else:
            pos -= 1
        if use_left and pos == left:
            steps_out[0] = t
            pos_out[0] = pos
            return OUT_HIT_LEFT
        if use_right and pos == right:
            steps_out[0] = t
            pos_out[0] = pos
            return OUT_HIT_RIGHT
        if pos < lo or pos > hi:
            steps_out[0] = t
            pos_out[0] = pos
            return OUT_EXHAUSTED
    steps_out[0] = cap
    pos_out[0] = pos
    return OUT_CAPPED


def run_hit_quenched(double[::1] thresh, long offset, long start,
                     long left, long right, int use_left, int use_right,
                     unsigned long long cap,
                     unsigned long long[::1] walk_seeds,
                     signed char[::1] out_outcome,
                     unsigned long long[::1] out_steps,
                     long[::1] out_pos,
                     Py_ssize_t i0, Py_ssize_t i1):
    """Fill replicas [i0, i1) of the output arrays for a fixed environment."""
    cdef long lo = offset
    cdef long hi = offset + thresh.shape[0] - 1
    cdef Py_ssize_t i
    cdef uint64_t st
    cdef long fp
    with nogil:
        for i in range(i0, i1):
            out_outcome[i] = <signed char> _walk_loop(
                &thresh[0], lo, hi, start, left, right, use_left, use_right,
                <uint64_t> cap, <uint64_t> walk_seeds[i], &st, &fp)
            out_steps[i] = st
            out_pos[i] = fp


cdef inline int _walk_loop_lazy(int dist_code, double par1, double par2,
                                const double* support, const double* cumw, int n_atoms,
                                uint64_t env_seed, double* env_buf, long lo, long hi,
                                long start, long left, long right,
                                int use_left, int use_right,
                                uint64_t cap, uint64_t walk_seed,
                                uint64_t* steps_out, long* pos_out,
                                long* vis_lo, long* vis_hi) nogil:
    """Same loop with the environment sampled on first visit of each site."""
    cdef long pos = start
    cdef uint64_t t = 0
    cdef double th, u
    vis_lo[0] = start
    vis_hi[0] = start
    while t < cap:
        th = env_buf[pos - lo]
        if isnan(th):
            th = _sample_site(dist_code, par1, par2, support, cumw, n_atoms,
                              env_seed, pos)
            env_buf[pos - lo] = th
        u = _step_uniform(walk_seed, t)
        t += 1
        if u < th:
            pos += 1
        else:
            pos -= 1
        if pos < vis_lo[0]:
            vis_lo[0] = pos
        elif pos > vis_hi[0]:
            vis_hi[0] = pos
        if use_left and pos == left:
            steps_out[0] = t
            pos_out[0] = pos
            return OUT_HIT_LEFT
        if use_right and pos == right:
            steps_out[0] = t
            pos_out[0] = pos
            return OUT_HIT_RIGHT
        if pos < lo or pos > hi:
            steps_out[0] = t
            pos_out[0] = pos
            return OUT_EXHAUSTED
    steps_out[0] = cap
    pos_out[0] = pos
    return OUT_CAPPED


def run_hit_lazy(int dist_code, double par1, double par2,
                 double[::1] support, double[::1] cumw,
                 unsigned long long[::1] env_seeds, unsigned long long[::1] walk_seeds,
                 long buf_lo, long buf_hi, long start,
                 long left, long right, int use_left, int use_right,
                 unsigned long long cap,
                 double[::1] env_buf,
                 signed char[::1] out_outcome,
                 unsigned long long[::1] out_steps,
                 long[::1] out_pos,
                 Py_ssize_t i0, Py_ssize_t i1):
    """Fresh lazily-sampled environment per replica (annealed runs).

    ``env_buf`` must cover [buf_lo, buf_hi] and arrive NaN-filled; it is
    restored to NaN on the visited range after each replica.
    """
    cdef int n_atoms = support.shape[0]
    cdef const double* sup = &support[0] if n_atoms > 0 else NULL
    cdef const double* cw = &cumw[0] if n_atoms > 0 else NULL
    cdef Py_ssize_t i
    cdef uint64_t st
    cdef long fp, vlo, vhi, j
    with nogil:
        for i in range(i0, i1):
            out_outcome[i] = <signed char> _walk_loop_lazy(
                dist_code, par1, par2, sup, cw, n_atoms,
                <uint64_t> env_seeds[i], &env_buf[0], buf_lo, buf_hi,
                start, left, right, use_left, use_right,
                <uint64_t> cap, <uint64_t> walk_seeds[i], &st, &fp, &vlo, &vhi)
            out_steps[i] = st
            out_pos[i] = fp
            if vlo < buf_lo:
                vlo = buf_lo
            if vhi > buf_hi:
                vhi = buf_hi
            for j in range(vlo - buf_lo, vhi - buf_lo + 1):
                env_buf[j] = NAN


def run_position_lazy(int dist_code, double par1, double par2,
                      double[::1] support, double[::1] cumw,
                      unsigned long long[::1] env_seeds, unsigned long long[::1] walk_seeds,
                      long halfwidth, unsigned long long n_steps,
                      double[::1] env_buf,
                      signed char[::1] out_exhausted,
                      long[::1] out_pos,
                      Py_ssize_t i0, Py_ssize_t i1):
    """Position after n_steps in a fresh lazy environment (scaling studies)."""
    cdef int n_atoms = support.shape[0]
    cdef const double* sup = &support[0] if n_atoms > 0 else NULL
    cdef const double* cw = &cumw[0] if n_atoms > 0 else NULL
    cdef Py_ssize_t i
    cdef long pos, vlo, vhi, j
    cdef uint64_t t
    cdef double th, u
    cdef uint64_t env_seed, walk_seed
    with nogil:
        for i in range(i0, i1):
            env_seed = <uint64_t> env_seeds[i]
            walk_seed = <uint64_t> walk_seeds[i]
            pos = 0
            vlo = 0
            vhi = 0
            out_exhausted[i] = 0
            t = 0
            while t < n_steps:
                th = env_buf[pos + halfwidth]
                if isnan(th):
                    th = _sample_site(dist_code, par1, par2, sup, cw, n_atoms,
                                      env_seed, pos)
                    env_buf[pos + halfwidth] = th
                u = _step_uniform(walk_seed, t)
                t += 1
                if u < th:
                    pos += 1
                else:
                    pos -= 1
                if pos < vlo:
                    vlo = pos
                elif pos > vhi:
                    vhi = pos
                if pos < -halfwidth or pos > halfwidth:
                    out_exhausted[i] = 1
                    break
            out_pos[i] = pos
            if vlo < -halfwidth:
                vlo = -halfwidth
            if vhi > halfwidth:
                vhi = halfwidth
            for j in range(vlo + halfwidth, vhi + halfwidth + 1):
                env_buf[j] = NAN
