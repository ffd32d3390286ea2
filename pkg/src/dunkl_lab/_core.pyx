# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path kernels for the Dunkl process simulator.

Every routine here has a line-for-line twin in ``_core_py.py``; both must
perform the same floating-point operations in the same order so that the
two backends produce bit-identical samples.
"""

from cython.parallel cimport prange
from libc.math cimport sqrt, log, exp, expm1, cos, sin, fabs
from libc.stdint cimport uint64_t, int64_t

import numpy as np

cdef enum:
    MAXD = 16

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.1102230246251565e-16
cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL

# status codes (mirrored in _core_py)
cdef enum:
    ST_EXIT = 0
    ST_INSTANT = 1
    ST_HORIZON = 2
    ST_JUMPCAP = 3
    ST_WALL = 4
    ST_FIXED = 5
    MAX_HALVINGS = 20

cdef double BRIDGE_CUTOFF = 40.0


cdef struct Rng:
    uint64_t state
    int has_spare
    double spare


cdef struct Params:
    int d
    int npos
    const double* roots
    const double* kk
    const double* a2
    double rate_factor
    double h
    double max_time
    double eps
    long long jump_cap
    uint64_t seed
    const double* x0
    int exact_start
    int domain
    const double* center
    double radius
    const double* normal
    double t_fixed
    int bridge
    double noise_c


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void rng_init(Rng* g, uint64_t seed, uint64_t idx) noexcept nogil:
    g.state = seed ^ mix64(idx + GOLDEN)
    g.has_spare = 0
    g.spare = 0.0


cdef inline double uniform(Rng* g) noexcept nogil:
    g.state = g.state + GOLDEN
    return (<double>(mix64(g.state) >> 11) + 0.5) * INV_2_53


cdef inline double normal(Rng* g) noexcept nogil:
    cdef double u1, u2, rad
    if g.has_spare:
        g.has_spare = 0
        return g.spare
    u1 = uniform(g)
    u2 = uniform(g)
    rad = sqrt(-2.0 * log(u1))
    g.spare = rad * sin(TWO_PI * u2)
    g.has_spare = 1
    return rad * cos(TWO_PI * u2)


cdef inline double gamma_draw(Rng* g, double shape) noexcept nogil:
    # Marsaglia-Tsang, shape >= 1
    cdef double dd = shape - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * dd)
    cdef double z, v, u
    while True:
        z = normal(g)
        v = 1.0 + c * z
        if v <= 0.0:
            continue
        v = v * v * v
        u = uniform(g)
        if log(u) < 0.5 * z * z + dd - dd * v + dd * log(v):
            return dd * v


cdef inline double dot(const double* a, const double* b, int d) noexcept nogil:
    cdef double s = 0.0
    cdef int j
    for j in range(d):
        s = s + a[j] * b[j]
    return s


cdef double domain_gap(const Params* P, const double* y) noexcept nogil:
    # positive inside D, <= 0 outside
    cdef int j, d = P.d
    cdef double s = 0.0, t, g1, g2
    if P.domain == 1:
        for j in range(d):
            s = s + y[j] * y[j]
        return P.radius - sqrt(s)
    if P.domain == 2:
        for j in range(d):
            t = y[j] - P.center[j]
            s = s + t * t
        return P.radius - sqrt(s)
    # half ball, unit normal
    for j in range(d):
        s = s + y[j] * y[j]
    g1 = P.radius - sqrt(s)
    g2 = dot(y, P.normal, d)
    return g1 if g1 < g2 else g2


cdef double sphere_crossing(const Params* P, const double* x, const double* y, const double* c) noexcept nogil:
    # smallest s in [0, 1] with |x + s(y-x) - c| = r, x inside
    cdef int j, d = P.d
    cdef double A = 0.0, B = 0.0, C = 0.0, dj, pj, disc, s
    for j in range(d):
        dj = y[j] - x[j]
        pj = x[j] - c[j]
        A = A + dj * dj
        B = B + pj * dj
        C = C + pj * pj
    C = C - P.radius * P.radius
    disc = B * B - A * C
    if disc < 0.0:
        disc = 0.0
    s = (-B + sqrt(disc)) / A
    if s < 0.0:
        s = 0.0
    if s > 1.0:
        s = 1.0
    return s


cdef void crossing_point(const Params* P, const double* x, const double* y, double* out) noexcept nogil:
    # first point of the segment [x, y] on the boundary of D (x inside, y outside)
    cdef int j, d = P.d
    cdef double zero[MAXD]
    cdef double s, sp, nx, ny
    for j in range(d):
        zero[j] = 0.0
    if P.domain == 2:
        s = sphere_crossing(P, x, y, P.center)
    else:
        s = 1.0
        ny = 0.0
        for j in range(d):
            ny = ny + y[j] * y[j]
        if P.domain == 1 or sqrt(ny) >= P.radius:
            s = sphere_crossing(P, x, y, zero)
        if P.domain == 3:
            ny = dot(y, P.normal, d)
            if ny <= 0.0:
                nx = dot(x, P.normal, d)
                sp = nx / (nx - ny)
                if sp < s:
                    s = sp
    for j in range(d):
        out[j] = x[j] + s * (y[j] - x[j])


cdef void nearest_boundary(const Params* P, const double* y, double* out) noexcept nogil:
    # nearest point of the boundary of D to an interior point y
    cdef int j, d = P.d
    cdef double s = 0.0, nrm, g1, g2
    if P.domain == 2:
        for j in range(d):
            s = s + (y[j] - P.center[j]) * (y[j] - P.center[j])
        nrm = sqrt(s)
        for j in range(d):
            out[j] = P.center[j] + (y[j] - P.center[j]) * (P.radius / nrm)
        return
    for j in range(d):
        s = s + y[j] * y[j]
    nrm = sqrt(s)
    if P.domain == 3:
        g1 = P.radius - nrm
        g2 = dot(y, P.normal, d)
        if g2 < g1:
            for j in range(d):
                out[j] = y[j] - g2 * P.normal[j]
            return
    for j in range(d):
        out[j] = y[j] * (P.radius / nrm)


cdef void exact_start(const Params* P, Rng* g, double t0, double* x) noexcept nogil:
    # X_{t0} from the origin: |X|^2 = 4 t0 Gamma(m/2), direction with density w_k
    cdef int i, j, d = P.d
    cdef double shape = 0.5 * d, bound = 1.0, w, s, nrm, rad
    for i in range(P.npos):
        shape = shape + P.kk[i]
        bound = bound * exp(P.kk[i] * log(P.a2[i]))
    rad = sqrt(4.0 * t0 * gamma_draw(g, shape))
    while True:
        nrm = 0.0
        for j in range(d):
            x[j] = normal(g)
            nrm = nrm + x[j] * x[j]
        nrm = sqrt(nrm)
        if nrm == 0.0:
            continue
        for j in range(d):
            x[j] = x[j] / nrm
        w = 1.0
        for i in range(P.npos):
            s = fabs(dot(P.roots + i * d, x, d))
            w = w * exp(2.0 * P.kk[i] * log(s)) if s > 0.0 else 0.0
        if uniform(g) * bound < w:
            break
    for j in range(d):
        x[j] = rad * x[j]


cdef void run_path(const Params* P, long long idx, double* out_x, double* out_f, long long* out_i) noexcept nogil:
    """One path.  out_f = (tau, overshoot, last_step); out_i = (status, jumps, walls, norm_viol, steps)."""
    cdef Rng g
    cdef int d = P.d, npos = P.npos, i, j, tries, halvings, jumped, aborted
    cdef double x[MAXD]
    cdef double y[MAXD]
    cdef double b[MAXD]
    cdef double s[MAXD]
    cdef double z[MAXD]
    cdef double t = 0.0, hh, cap, bi, sy, gx = 0.0, gy, arg, lam, coef, n0, n1, step, overshoot = 0.0, last = 0.0
    cdef long long nj = 0, walls = 0, viol = 0, steps = 0
    cdef int status = -1
    rng_init(&g, P.seed, <uint64_t>idx)
    for j in range(d):
        x[j] = P.x0[j]
    if P.exact_start:
        t = P.h
        if P.domain == 0 and P.t_fixed < t:
            t = P.t_fixed
        exact_start(P, &g, t, x)
    if P.domain != 0:
        gx = domain_gap(P, x)
        if gx <= 0.0:
            status = ST_INSTANT if not P.exact_start else ST_EXIT
            if P.exact_start:
                overshoot = -gx
    while status < 0:
        if P.domain == 0:
            if t >= P.t_fixed:
                status = ST_FIXED
                break
        elif t >= P.max_time:
            status = ST_HORIZON
            break
        # drift and step control, frozen at the start of the sub-step
        for j in range(d):
            b[j] = 0.0
        for i in range(npos):
            s[i] = dot(P.roots + i * d, x, d)
            coef = 2.0 * P.kk[i] / s[i]
            for j in range(d):
                b[j] = b[j] + coef * P.roots[i * d + j]
        hh = P.h
        for i in range(npos):
            bi = fabs(dot(b, P.roots + i * d, d))
            if bi > 0.0:
                cap = 0.5 * fabs(s[i]) / bi
                if cap < hh:
                    hh = cap
            cap = P.noise_c * s[i] * s[i]
            if cap < hh:
                hh = cap
        if P.domain == 0:
            if P.t_fixed - t < hh:
                hh = P.t_fixed - t
        elif P.max_time - t < hh:
            hh = P.max_time - t
        # continuous increment with wall guard
        tries = 0
        halvings = 0
        aborted = 0
        while True:
            step = sqrt(2.0 * hh)
            for j in range(d):
                z[j] = normal(&g)
            for j in range(d):
                y[j] = x[j] + hh * b[j] + step * z[j]
            jumped = 1  # reused as "ok" flag
            for i in range(npos):
                sy = dot(P.roots + i * d, y, d)
                if fabs(sy) < P.eps or (sy > 0.0) != (s[i] > 0.0):
                    jumped = 0
                    break
            if jumped:
                break
            walls = walls + 1
            tries = tries + 1
            if tries >= 2:
                halvings = halvings + 1
                if halvings > MAX_HALVINGS:
                    aborted = 1
                    break
                hh = 0.5 * hh
        if aborted:
            status = ST_WALL
            break
        steps = steps + 1
        last = 0.0
        for j in range(d):
            last = last + (y[j] - x[j]) * (y[j] - x[j])
        last = sqrt(last)
        # exit by the continuous part
        if P.domain != 0:
            gy = domain_gap(P, y)
            if gy <= 0.0:
                overshoot = -gy
                crossing_point(P, x, y, z)
                for j in range(d):
                    x[j] = z[j]
                t = t + hh
                status = ST_EXIT
                break
            if P.bridge:
                arg = gx * gy / hh
                if arg < BRIDGE_CUTOFF:
                    if uniform(&g) < exp(-arg):
                        nearest_boundary(P, y, z)
                        for j in range(d):
                            x[j] = z[j]
                        t = t + hh
                        status = ST_EXIT
                        break
        # reflection jumps by thinning, intensity frozen at the sub-step start
        jumped = 0
        for i in range(npos):
            lam = P.rate_factor * P.kk[i] / (s[i] * s[i])
            if uniform(&g) < -expm1(-lam * hh):
                sy = dot(P.roots + i * d, y, d)
                coef = 2.0 * sy / P.a2[i]
                n0 = dot(y, y, d)
                for j in range(d):
                    y[j] = y[j] - coef * P.roots[i * d + j]
                n1 = dot(y, y, d)
                if fabs(n1 - n0) > 1e-12 * n0:
                    viol = viol + 1
                nj = nj + 1
                jumped = 1
                break
        for j in range(d):
            x[j] = y[j]
        t = t + hh
        if P.domain != 0:
            gx = domain_gap(P, x)
            if jumped and gx <= 0.0:
                overshoot = 0.0
                status = ST_EXIT
                break
        if nj >= P.jump_cap:
            status = ST_JUMPCAP
            break
    for j in range(d):
        out_x[j] = x[j]
    out_f[0] = t if status != ST_INSTANT else 0.0
    out_f[1] = overshoot
    out_f[2] = last
    out_i[0] = status
    out_i[1] = nj
    out_i[2] = walls
    out_i[3] = viol
    out_i[4] = steps


def simulate_paths(
    double[:, ::1] roots,
    double[::1] kk,
    double rate_factor,
    double h,
    double max_time,
    double eps,
    long long jump_cap,
    unsigned long long seed,
    double[::1] x0,
    int exact,
    int domain,
    double[::1] center,
    double radius,
    double[::1] normal_vec,
    double t_fixed,
    int bridge,
    double noise_c,
    long long first_index,
    long long n_paths,
    int n_threads=1,
):
    """Run ``n_paths`` paths with indices ``first_index ..``; see ``_core_py.simulate_paths``."""
    cdef int d = x0.shape[0]
    cdef int npos = kk.shape[0]
    if d > MAXD or npos > MAXD:
        raise ValueError(f"dimension and number of active roots are limited to {MAXD}")
    a2_arr = np.empty(max(npos, 1))
    cdef double[::1] a2 = a2_arr
    cdef int i, j
    for i in range(npos):
        a2[i] = 0.0
        for j in range(d):
            a2[i] = a2[i] + roots[i, j] * roots[i, j]
    X = np.empty((n_paths, d))
    F = np.empty((n_paths, 3))
    I = np.empty((n_paths, 5), dtype=np.int64)
    cdef double[:, ::1] Xv = X
    cdef double[:, ::1] Fv = F
    cdef long long[:, ::1] Iv = I
    cdef Params P
    P.d = d
    P.npos = npos
    P.roots = &roots[0, 0] if npos > 0 else NULL
    P.kk = &kk[0] if npos > 0 else NULL
    P.a2 = &a2[0]
    P.rate_factor = rate_factor
    P.h = h
    P.max_time = max_time
    P.eps = eps
    P.jump_cap = jump_cap
    P.seed = seed
    P.x0 = &x0[0]
    P.exact_start = exact
    P.domain = domain
    P.center = &center[0]
    P.radius = radius
    P.normal = &normal_vec[0]
    P.t_fixed = t_fixed
    P.bridge = bridge
    P.noise_c = noise_c
    cdef long long p
    if n_paths > 0:
        with nogil:
            for p in prange(n_paths, num_threads=n_threads, schedule="dynamic", chunksize=64):
                run_path(&P, first_index + p, &Xv[p, 0], &Fv[p, 0], &Iv[p, 0])
    return X, F, I


cdef void run_bessel(double m, double r, double h, double max_time, double eps, int bridge, double noise_c,
                     uint64_t seed, long long idx, double* out) noexcept nogil:
    # radial process d rho = (m-1)/rho dt + sqrt(2) dW from 0, exit time from [0, r)
    cdef Rng g
    cdef double t = h, rho, hh, cap, drift, y, step
    cdef int tries, halvings
    rng_init(&g, seed, <uint64_t>idx)
    rho = sqrt(4.0 * h * gamma_draw(&g, 0.5 * m))
    out[1] = 0.0
    while rho < r and t < max_time:
        drift = (m - 1.0) / rho
        hh = h
        cap = 0.5 * rho / drift
        if cap < hh:
            hh = cap
        cap = noise_c * rho * rho
        if cap < hh:
            hh = cap
        tries = 0
        halvings = 0
        while True:
            step = sqrt(2.0 * hh)
            y = rho + hh * drift + step * normal(&g)
            if y >= eps:
                break
            tries = tries + 1
            if tries >= 2:
                halvings = halvings + 1
                if halvings > MAX_HALVINGS:
                    break
                hh = 0.5 * hh
        if y < eps:
            out[1] = 1.0
            break
        t = t + hh
        if y < r and bridge:
            if (r - rho) * (r - y) / hh < BRIDGE_CUTOFF:
                if uniform(&g) < exp(-(r - rho) * (r - y) / hh):
                    y = r
        rho = y
    out[0] = t


def bessel_exit_times(double m, double r, double h, double max_time, double eps, int bridge, double noise_c,
                      unsigned long long seed, long long first_index, long long n_paths, int n_threads=1):
    """Exit times of the ``m``-dimensional Bessel process from ``[0, r)``, started at 0."""
    out = np.empty((n_paths, 2))
    cdef double[:, ::1] ov = out
    cdef long long p
    with nogil:
        for p in prange(n_paths, num_threads=n_threads, schedule="dynamic", chunksize=64):
            run_bessel(m, r, h, max_time, eps, bridge, noise_c, seed, first_index + p, &ov[p, 0])
    return out
