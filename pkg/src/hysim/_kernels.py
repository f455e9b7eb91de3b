"""JIT-compiled inner loops.

Everything here is private plumbing: scalar, allocation-free stepping kernels
compiled by numba so that ensemble experiments (1e8 steps and up) stay in the
seconds range.  All arithmetic is plain IEEE double precision in a fixed
order, so per-trajectory results are bitwise reproducible regardless of
thread count or scheduling.  The random generator passed in is consumed only
by its own trajectory's kernel call, in a fixed draw order (two exponential
targets at start and after every firing, one uniform per tie-break).
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Run-to-horizon status codes shared with the host side.
STATUS_OK = 0
STATUS_STEP_TOO_COARSE = 1


@njit(cache=True, nogil=True, inline="always")
def _rhs(T1, T2, P, d1, d2, a, b, c, d, e, alpha, beta, gain):
    dT1 = -a * T1 + b - d1 * (c * T1 - d * P - e)
    dT2 = -a * T2 + b - d2 * (c * T2 - d * P - e)
    dP = -alpha * P + beta + gain * (d1 + d2)
    return dT1, dT2, dP


@njit(cache=True, nogil=True, inline="always")
def _rk4_step(T1, T2, P, d1, d2, a, b, c, d, e, alpha, beta, gain, dt):
    k1a, k1b, k1c = _rhs(T1, T2, P, d1, d2, a, b, c, d, e, alpha, beta, gain)
    k2a, k2b, k2c = _rhs(T1 + 0.5 * dt * k1a, T2 + 0.5 * dt * k1b, P + 0.5 * dt * k1c,
                         d1, d2, a, b, c, d, e, alpha, beta, gain)
    k3a, k3b, k3c = _rhs(T1 + 0.5 * dt * k2a, T2 + 0.5 * dt * k2b, P + 0.5 * dt * k2c,
                         d1, d2, a, b, c, d, e, alpha, beta, gain)
    k4a, k4b, k4c = _rhs(T1 + dt * k3a, T2 + dt * k3b, P + dt * k3c,
                         d1, d2, a, b, c, d, e, alpha, beta, gain)
    T1n = T1 + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    T2n = T2 + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    Pn = P + dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
    return T1n, T2n, Pn


@njit(cache=True, nogil=True)
def rk4_n_steps(T1, T2, P, d1, d2, a, b, c, d, e, alpha, beta, gain, dt, n):
    for _ in range(n):
        T1, T2, P = _rk4_step(T1, T2, P, d1, d2, a, b, c, d, e, alpha, beta, gain, dt)
    return T1, T2, P


@njit(cache=True, nogil=True, inline="always")
def _signed_dist(T, delta, t_lo, t_up):
    # distance to the active facet: upper facet while the valve is closed,
    # lower facet while it is open; positive on the far side of the facet
    if delta == 0.0:
        return T - t_up
    return t_lo - T


@njit(cache=True, nogil=True, inline="always")
def _hazard(u, eps):
    if u < -eps:
        return 0.0
    if u >= eps:
        return np.inf
    return 1.0 / (eps - u)


@njit(cache=True, nogil=True)
def run_switching(T1, T2, P, d1, d2,
                  a, b, c, d, e, alpha, beta, gain,
                  t_lo, t_up, eps, dt, n_steps, cap, summed,
                  rng, states, ev_step, ev_axis, ev_u):
    """Advance one trajectory with thickened stochastic switching.

    Per step: one RK4 update, then each switching clock accumulates the
    trapezoid of its hazard over the signed-distance interval it traversed
    (endpoint hazards capped at `cap`; decreasing distance contributes
    nothing).  A clock fires at the sample where its accumulated integral
    first reaches its Exp(1) target; a sample past the band edge (hazard
    sentinel = inf) fires unconditionally.  If both clocks fire on the same
    sample, the axis is chosen with probability h1/(h1+h2) at that sample.
    Firing flips that axis's valve and redraws BOTH targets.  With
    ``summed`` nonzero the two accumulators are merged into one clock with a
    single target and the axis is always chosen proportionally at firing
    (the superposed competing-risks formulation, kept as a cross-check).

    Returns (n_events, status, bad_step).  states must be (n_steps+1, 3);
    ev_step/ev_axis int64 and ev_u float64 of length >= n_steps + 1.
    """
    states[0, 0] = T1
    states[0, 1] = T2
    states[0, 2] = P

    u1 = _signed_dist(T1, d1, t_lo, t_up)
    u2 = _signed_dist(T2, d2, t_lo, t_up)
    h1 = _hazard(u1, eps)
    h2 = _hazard(u2, eps)

    e1 = rng.standard_exponential()
    e2 = rng.standard_exponential()
    if summed != 0:
        # single superposed clock; the second draw is simply unused
        e2 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    n_ev = 0

    for k in range(n_steps):
        pT1 = T1
        pT2 = T2
        T1, T2, P = _rk4_step(T1, T2, P, d1, d2, a, b, c, d, e, alpha, beta, gain, dt)
        states[k + 1, 0] = T1
        states[k + 1, 1] = T2
        states[k + 1, 2] = P

        u1n = _signed_dist(T1, d1, t_lo, t_up)
        u2n = _signed_dist(T2, d2, t_lo, t_up)
        h1n = _hazard(u1n, eps)
        h2n = _hazard(u2n, eps)

        du1 = u1n - u1
        if du1 < 0.0:
            du1 = 0.0
        du2 = u2n - u2
        if du2 < 0.0:
            du2 = 0.0
        c1 = 0.5 * (min(h1, cap) + min(h1n, cap)) * du1
        c2 = 0.5 * (min(h2, cap) + min(h2n, cap)) * du2

        axis = 0
        if summed == 0:
            f1 = h1n == np.inf
            if not f1:
                acc1 += c1
                f1 = acc1 >= e1
            f2 = h2n == np.inf
            if not f2:
                acc2 += c2
                f2 = acc2 >= e2
            if f1 and f2:
                if h1n == np.inf and h2n == np.inf:
                    p1 = 0.5
                elif h1n == np.inf:
                    p1 = 1.0
                elif h2n == np.inf:
                    p1 = 0.0
                else:
                    p1 = h1n / (h1n + h2n)
                axis = 1 if rng.random() < p1 else 2
            elif f1:
                axis = 1
            elif f2:
                axis = 2
        else:
            fired = h1n == np.inf or h2n == np.inf
            if not fired:
                acc1 += c1 + c2
                fired = acc1 >= e1
            if fired:
                if h1n == np.inf and h2n == np.inf:
                    p1 = 0.5
                elif h1n == np.inf:
                    p1 = 1.0
                elif h2n == np.inf:
                    p1 = 0.0
                else:
                    p1 = h1n / (h1n + h2n)
                axis = 1 if rng.random() < p1 else 2

        if axis != 0:
            # a firing position beyond the band edge plus the travel of the
            # step that fired it and the step a tie-loser may have waited is
            # a state the sentinel can never legitimately produce: the step
            # size has outrun the band
            u_fired = u1n if axis == 1 else u2n
            tr = abs(T1 - pT1) if axis == 1 else abs(T2 - pT2)
            if u_fired > eps + 3.0 * tr + 1e-9:
                return n_ev, STATUS_STEP_TOO_COARSE, k + 1
            ev_step[n_ev] = k + 1
            ev_axis[n_ev] = axis
            ev_u[n_ev] = u_fired
            n_ev += 1
            if axis == 1:
                d1 = 1.0 - d1
            else:
                d2 = 1.0 - d2
            e1 = rng.standard_exponential()
            e2 = rng.standard_exponential()
            if summed != 0:
                e2 = 0.0
            acc1 = 0.0
            acc2 = 0.0
            u1n = _signed_dist(T1, d1, t_lo, t_up)
            u2n = _signed_dist(T2, d2, t_lo, t_up)
            h1n = _hazard(u1n, eps)
            h2n = _hazard(u2n, eps)
        else:
            # a sample stuck past the band edge without firing cannot happen
            # (the sentinel fires first); kept as a cheap invariant guard
            tr1 = abs(T1 - pT1)
            tr2 = abs(T2 - pT2)
            if u1n > eps + 3.0 * tr1 + 1e-9 or u2n > eps + 3.0 * tr2 + 1e-9:
                return n_ev, STATUS_STEP_TOO_COARSE, k + 1

        u1 = u1n
        u2 = u2n
        h1 = h1n
        h2 = h2n

    return n_ev, STATUS_OK, n_steps
