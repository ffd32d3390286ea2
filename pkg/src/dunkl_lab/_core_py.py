"""Pure-Python twin of the compiled path kernels in ``_core.pyx``.

The arithmetic is kept in the same order as the compiled code and uses the
``math`` module (which calls the same libm routines), so both backends
return identical samples for identical inputs.  It is roughly two orders of
magnitude slower and is meant as a fallback and as a reference.
"""

from __future__ import annotations

import math

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
TWO_PI = 6.283185307179586
INV_2_53 = 1.1102230246251565e-16

ST_EXIT, ST_INSTANT, ST_HORIZON, ST_JUMPCAP, ST_WALL, ST_FIXED = range(6)
MAX_HALVINGS = 20
BRIDGE_CUTOFF = 40.0
MAXD = 16


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class Rng:
    __slots__ = ("state", "has_spare", "spare")

    def __init__(self, seed: int, idx: int):
        self.state = (seed & MASK) ^ mix64((idx + GOLDEN) & MASK)
        self.has_spare = False
        self.spare = 0.0

    def uniform(self) -> float:
        self.state = (self.state + GOLDEN) & MASK
        return (float(mix64(self.state) >> 11) + 0.5) * INV_2_53

    def normal(self) -> float:
        if self.has_spare:
            self.has_spare = False
            return self.spare
        u1 = self.uniform()
        u2 = self.uniform()
        rad = math.sqrt(-2.0 * math.log(u1))
        self.spare = rad * math.sin(TWO_PI * u2)
        self.has_spare = True
        return rad * math.cos(TWO_PI * u2)

    def gamma(self, shape: float) -> float:
        dd = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * dd)
        while True:
            z = self.normal()
            v = 1.0 + c * z
            if v <= 0.0:
                continue
            v = v * v * v
            u = self.uniform()
            if math.log(u) < 0.5 * z * z + dd - dd * v + dd * math.log(v):
                return dd * v


def _dot(a, b) -> float:
    s = 0.0
    for aj, bj in zip(a, b):
        s = s + aj * bj
    return s


class _Path:
    """Parameter bundle; mirrors the ``Params`` struct."""

    def __init__(self, roots, kk, rate_factor, h, max_time, eps, jump_cap, seed, x0, exact, domain, center, radius,
                 normal, t_fixed, bridge, noise_c):
        self.d = len(x0)
        self.npos = len(kk)
        self.roots = [list(map(float, r)) for r in roots]
        self.kk = list(map(float, kk))
        self.a2 = []
        for r in self.roots:
            a = 0.0
            for v in r:
                a = a + v * v
            self.a2.append(a)
        self.rate_factor = rate_factor
        self.h = h
        self.max_time = max_time
        self.eps = eps
        self.jump_cap = jump_cap
        self.seed = seed
        self.x0 = list(map(float, x0))
        self.exact = exact
        self.domain = domain
        self.center = list(map(float, center))
        self.radius = radius
        self.normal = list(map(float, normal))
        self.t_fixed = t_fixed
        self.bridge = bridge
        self.noise_c = noise_c

    # geometry ---------------------------------------------------------------
    def gap(self, y) -> float:
        if self.domain == 1:
            s = 0.0
            for v in y:
                s = s + v * v
            return self.radius - math.sqrt(s)
        if self.domain == 2:
            s = 0.0
            for v, c in zip(y, self.center):
                t = v - c
                s = s + t * t
            return self.radius - math.sqrt(s)
        s = 0.0
        for v in y:
            s = s + v * v
        g1 = self.radius - math.sqrt(s)
        g2 = _dot(y, self.normal)
        return g1 if g1 < g2 else g2

    def sphere_crossing(self, x, y, c) -> float:
        A = B = C = 0.0
        for j in range(self.d):
            dj = y[j] - x[j]
            pj = x[j] - c[j]
            A = A + dj * dj
            B = B + pj * dj
            C = C + pj * pj
        C = C - self.radius * self.radius
        disc = B * B - A * C
        if disc < 0.0:
            disc = 0.0
        s = (-B + math.sqrt(disc)) / A
        return min(max(s, 0.0), 1.0)

    def crossing_point(self, x, y):
        if self.domain == 2:
            s = self.sphere_crossing(x, y, self.center)
        else:
            s = 1.0
            ny = 0.0
            for v in y:
                ny = ny + v * v
            if self.domain == 1 or math.sqrt(ny) >= self.radius:
                s = self.sphere_crossing(x, y, [0.0] * self.d)
            if self.domain == 3:
                ny = _dot(y, self.normal)
                if ny <= 0.0:
                    nx = _dot(x, self.normal)
                    sp = nx / (nx - ny)
                    if sp < s:
                        s = sp
        return [x[j] + s * (y[j] - x[j]) for j in range(self.d)]

    def nearest_boundary(self, y):
        if self.domain == 2:
            s = 0.0
            for v, c in zip(y, self.center):
                s = s + (v - c) * (v - c)
            nrm = math.sqrt(s)
            return [c + (v - c) * (self.radius / nrm) for v, c in zip(y, self.center)]
        s = 0.0
        for v in y:
            s = s + v * v
        nrm = math.sqrt(s)
        if self.domain == 3:
            g1 = self.radius - nrm
            g2 = _dot(y, self.normal)
            if g2 < g1:
                return [v - g2 * n for v, n in zip(y, self.normal)]
        return [v * (self.radius / nrm) for v in y]

    def exact_start(self, g: Rng, t0: float):
        d = self.d
        shape = 0.5 * d
        bound = 1.0
        for i in range(self.npos):
            shape = shape + self.kk[i]
            bound = bound * math.exp(self.kk[i] * math.log(self.a2[i]))
        rad = math.sqrt(4.0 * t0 * g.gamma(shape))
        while True:
            x = [0.0] * d
            nrm = 0.0
            for j in range(d):
                x[j] = g.normal()
                nrm = nrm + x[j] * x[j]
            nrm = math.sqrt(nrm)
            if nrm == 0.0:
                continue
            x = [v / nrm for v in x]
            w = 1.0
            for i in range(self.npos):
                s = math.fabs(_dot(self.roots[i], x))
                w = w * math.exp(2.0 * self.kk[i] * math.log(s)) if s > 0.0 else 0.0
            if g.uniform() * bound < w:
                break
        return [rad * v for v in x]

    # one path -----------------------------------------------------------------
    def run(self, idx: int):
        d, npos = self.d, self.npos
        roots, kk = self.roots, self.kk
        g = Rng(self.seed, idx)
        x = list(self.x0)
        t = 0.0
        gx = 0.0
        overshoot = 0.0
        last = 0.0
        nj = walls = viol = steps = 0
        status = -1
        if self.exact:
            t = self.h
            if self.domain == 0 and self.t_fixed < t:
                t = self.t_fixed
            x = self.exact_start(g, t)
        if self.domain != 0:
            gx = self.gap(x)
            if gx <= 0.0:
                status = ST_EXIT if self.exact else ST_INSTANT
                if self.exact:
                    overshoot = -gx
        while status < 0:
            if self.domain == 0:
                if t >= self.t_fixed:
                    status = ST_FIXED
                    break
            elif t >= self.max_time:
                status = ST_HORIZON
                break
            b = [0.0] * d
            s = [0.0] * npos
            for i in range(npos):
                s[i] = _dot(roots[i], x)
                coef = 2.0 * kk[i] / s[i]
                for j in range(d):
                    b[j] = b[j] + coef * roots[i][j]
            hh = self.h
            for i in range(npos):
                bi = math.fabs(_dot(b, roots[i]))
                if bi > 0.0:
                    cap = 0.5 * math.fabs(s[i]) / bi
                    if cap < hh:
                        hh = cap
                cap = self.noise_c * s[i] * s[i]
                if cap < hh:
                    hh = cap
            if self.domain == 0:
                if self.t_fixed - t < hh:
                    hh = self.t_fixed - t
            elif self.max_time - t < hh:
                hh = self.max_time - t
            tries = halvings = 0
            aborted = False
            while True:
                step = math.sqrt(2.0 * hh)
                z = [g.normal() for _ in range(d)]
                y = [x[j] + hh * b[j] + step * z[j] for j in range(d)]
                ok = True
                for i in range(npos):
                    sy = _dot(roots[i], y)
                    if math.fabs(sy) < self.eps or (sy > 0.0) != (s[i] > 0.0):
                        ok = False
                        break
                if ok:
                    break
                walls += 1
                tries += 1
                if tries >= 2:
                    halvings += 1
                    if halvings > MAX_HALVINGS:
                        aborted = True
                        break
                    hh = 0.5 * hh
            if aborted:
                status = ST_WALL
                break
            steps += 1
            last = 0.0
            for j in range(d):
                last = last + (y[j] - x[j]) * (y[j] - x[j])
            last = math.sqrt(last)
            if self.domain != 0:
                gy = self.gap(y)
                if gy <= 0.0:
                    overshoot = -gy
                    x = self.crossing_point(x, y)
                    t = t + hh
                    status = ST_EXIT
                    break
                if self.bridge:
                    arg = gx * gy / hh
                    if arg < BRIDGE_CUTOFF:
                        if g.uniform() < math.exp(-arg):
                            x = self.nearest_boundary(y)
                            t = t + hh
                            status = ST_EXIT
                            break
            jumped = False
            for i in range(npos):
                lam = self.rate_factor * kk[i] / (s[i] * s[i])
                if g.uniform() < -math.expm1(-lam * hh):
                    sy = _dot(roots[i], y)
                    coef = 2.0 * sy / self.a2[i]
                    n0 = _dot(y, y)
                    y = [y[j] - coef * roots[i][j] for j in range(d)]
                    n1 = _dot(y, y)
                    if math.fabs(n1 - n0) > 1e-12 * n0:
                        viol += 1
                    nj += 1
                    jumped = True
                    break
            x = y
            t = t + hh
            if self.domain != 0:
                gx = self.gap(x)
                if jumped and gx <= 0.0:
                    overshoot = 0.0
                    status = ST_EXIT
                    break
            if nj >= self.jump_cap:
                status = ST_JUMPCAP
                break
        tau = t if status != ST_INSTANT else 0.0
        return x, (tau, overshoot, last), (status, nj, walls, viol, steps)


def simulate_paths(roots, kk, rate_factor, h, max_time, eps, jump_cap, seed, x0, exact, domain, center, radius,
                   normal_vec, t_fixed, bridge, noise_c, first_index, n_paths, n_threads=1):
    """Run ``n_paths`` paths with indices ``first_index ..``.

    Returns ``(X, F, I)``: exit (or terminal) points, the float columns
    ``(tau, overshoot, last_step)`` and the integer columns
    ``(status, jumps, wall_events, norm_violations, steps)``.
    ``n_threads`` is accepted for signature compatibility and ignored.
    """
    d = len(x0)
    if d > MAXD or len(kk) > MAXD:
        raise ValueError(f"dimension and number of active roots are limited to {MAXD}")
    path = _Path(np.asarray(roots).reshape(len(kk), d), kk, rate_factor, h, max_time, eps, jump_cap, int(seed), x0,
                 exact, domain, center, radius, normal_vec, t_fixed, bridge, noise_c)
    X = np.empty((n_paths, d))
    F = np.empty((n_paths, 3))
    I = np.empty((n_paths, 5), dtype=np.int64)
    for p in range(n_paths):
        x, f, i = path.run(first_index + p)
        X[p] = x
        F[p] = f
        I[p] = i
    return X, F, I


def _bessel_path(m, r, h, max_time, eps, bridge, noise_c, seed, idx):
    g = Rng(seed, idx)
    t = h
    rho = math.sqrt(4.0 * h * g.gamma(0.5 * m))
    wall = 0.0
    while rho < r and t < max_time:
        drift = (m - 1.0) / rho
        hh = h
        cap = 0.5 * rho / drift
        if cap < hh:
            hh = cap
        cap = noise_c * rho * rho
        if cap < hh:
            hh = cap
        tries = halvings = 0
        while True:
            step = math.sqrt(2.0 * hh)
            y = rho + hh * drift + step * g.normal()
            if y >= eps:
                break
            tries += 1
            if tries >= 2:
                halvings += 1
                if halvings > MAX_HALVINGS:
                    break
                hh = 0.5 * hh
        if y < eps:
            wall = 1.0
            break
        t = t + hh
        if y < r and bridge:
            if (r - rho) * (r - y) / hh < BRIDGE_CUTOFF:
                if g.uniform() < math.exp(-(r - rho) * (r - y) / hh):
                    y = r
        rho = y
    return t, wall


def bessel_exit_times(m, r, h, max_time, eps, bridge, noise_c, seed, first_index, n_paths, n_threads=1):
    """Exit times of the ``m``-dimensional Bessel process from ``[0, r)``, started at 0."""
    out = np.empty((n_paths, 2))
    for p in range(n_paths):
        out[p] = _bessel_path(m, r, h, max_time, eps, bridge, noise_c, int(seed), first_index + p)
    return out
