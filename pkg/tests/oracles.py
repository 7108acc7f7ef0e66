"""Independent reference computations used by the test suite.

Nothing here goes through the package's generator assembly: matrices are
enumerated by hand, transient laws come from uniformization, and the
event systems are simulated directly.
"""

import math

import numpy as np
from scipy.stats import poisson


def mmck_matrix(lam, mu, c, K):
    """Dense M/M/c/K generator (rows = from-state), written out state by state."""
    Q = np.zeros((K + 1, K + 1))
    for n in range(K + 1):
        if n < K:
            Q[n, n + 1] = lam
        if n > 0:
            Q[n, n - 1] = min(n, c) * mu
        Q[n, n] = -Q[n].sum()
    return Q


def stationary(Q):
    """Solve pi Q = 0, sum(pi) = 1 by a bordered least-squares system."""
    n = Q.shape[0]
    A = np.vstack([Q.T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


def uniformization(Q, p0, t, tol=1e-14):
    """p0 exp(Qt) via the uniformized jump chain."""
    p0 = np.asarray(p0, dtype=float)
    Lam = max(float(-np.diag(Q).min()), 1e-12)
    if t == 0:
        return p0.copy()
    P = np.eye(Q.shape[0]) + Q / Lam
    x = Lam * t
    kmax = int(poisson.isf(tol, x)) + 10
    weights = poisson.pmf(np.arange(kmax + 1), x)
    out = np.zeros_like(p0)
    v = p0.copy()
    for k in range(kmax + 1):
        out += weights[k] * v
        v = v @ P
    return out


def taxi_matrix_by_hand(lam_X, lam_T, mu, K_T, cap):
    """Double-ended taxi queue generator on (i, j), index i*(K_T+1)+j."""
    n = (cap + 1) * (K_T + 1)
    Q = np.zeros((n, n))

    def idx(i, j):
        return i * (K_T + 1) + j

    for i in range(cap + 1):
        for j in range(K_T + 1):
            s = idx(i, j)
            if i < cap:
                Q[s, idx(i + 1, j)] += lam_X
            if j < K_T:
                Q[s, idx(i, j + 1)] += lam_T
            if i >= 1 and j >= 1:
                Q[s, idx(i - 1, j - 1)] += mu
            Q[s, s] = -Q[s].sum()
    return Q


def _piecewise(rate):
    """(breakpoints, values) of a constant or a (breaks, values) pair."""
    if isinstance(rate, (int, float)):
        return np.array([-np.inf, np.inf]), np.array([float(rate)])
    bp, vals = rate
    return np.asarray(bp, dtype=float), np.asarray(vals, dtype=float)


def _rate_at(bp, vals, t):
    k = np.clip(np.searchsorted(bp, t, side="right") - 1, 0, vals.size - 1)
    return vals[k]


def simulate_taxi(lam_X, lam_T, mu, K_T, i0, j0, t0, t_end, reps, rng):
    """Passengers waiting at ``t_end`` in ``reps`` independent runs (no passenger cap).

    Rates may be constants or ``(breakpoints, values)`` step functions;
    time variation is handled by thinning against the peak rates.
    """
    bx, vx = _piecewise(lam_X)
    bt, vt = _piecewise(lam_T)
    mx, mt = vx.max(), vt.max()
    R = mx + mt + mu
    t = np.full(reps, float(t0))
    i = np.full(reps, i0, dtype=np.int64)
    j = np.full(reps, j0, dtype=np.int64)
    active = np.ones(reps, dtype=bool)
    while active.any():
        a = np.flatnonzero(active)
        t[a] += rng.exponential(1.0 / R, a.size)
        done = t[a] >= t_end
        active[a[done]] = False
        a = a[~done]
        u = rng.random(a.size) * R
        ta = t[a]
        arr = u < _rate_at(bx, vx, ta)
        taxi = (u >= mx) & (u < mx + _rate_at(bt, vt, ta))
        match = (u >= mx + mt) & (i[a] >= 1) & (j[a] >= 1)
        i[a[arr]] += 1
        room = taxi & (j[a] < K_T)
        j[a[room]] += 1
        i[a[match]] -= 1
        j[a[match]] -= 1
    return i


def simulate_renewal(lam, N, T, m0, t0, horizon, reps, rng):
    """Passengers aboard a Min(N, T) bus at ``horizon`` (Poisson arrivals at ``lam``)."""
    aboard = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        m, age, t = m0, t0, 0.0
        while True:
            gap = rng.exponential(1.0 / lam) if lam > 0 else math.inf
            fire = T - age
            if t + min(gap, fire) >= horizon:
                break
            if fire <= gap:
                t += fire
                m, age = 0, 0.0
                # memorylessness: the pending arrival is redrawn
                continue
            t += gap
            age += gap
            m += 1
            if m >= N:
                m, age = 0, 0.0
        aboard[r] = m
    return aboard


def erlang_density(n, rate, x):
    return math.exp(n * math.log(rate) + (n - 1) * math.log(x) - rate * x - math.lgamma(n)) if x > 0 else 0.0


def sphere(p, opt):
    return float(np.sum((np.asarray(p) - opt) ** 2))
