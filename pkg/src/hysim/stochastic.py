"""Thickened stochastic switching around the hysteresis facets.

Measurement noise turns each switching surface into a band of half-width eps:
the reported temperature is the true one plus a uniform offset on
[-eps, eps], so a valve may toggle anywhere inside the band.  In terms of the
signed facet distance u (positive past the facet), the probability that the
switch has not yet happened is the survivor

    S(u) = 1                      u < -eps
         = 1 - (u + eps)/(2 eps)  |u| <= eps
         = 0                      u > eps

whose hazard rate in u is h(u) = 0 below the band, 1/(eps - u) inside it and
+inf past it (the sentinel that forces the switch at the first sample beyond
the band).  Executing this as a point process: each axis carries a clock with
an Exp(1) target; per integration step the clock accumulates the trapezoid of
h over the distance interval traversed, and fires at the first sample where
the accumulated integral reaches the target -- which reproduces the uniform
firing law on the band for any crossing speed.  Both clocks are redrawn after
every firing; by memorylessness of the exponential this changes nothing in
law and keeps the executor free of cross-axis state.

Two executions of the same (seed, stream) are bitwise identical, regardless
of thread count: every trajectory consumes only its own generator, in a fixed
draw order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._kernels import STATUS_OK, STATUS_STEP_TOO_COARSE, run_switching
from .dynamics import CANONICAL_COEFFICIENTS, Mode, ReducedCoefficients
from .hybrid import (
    CANONICAL_BOX,
    Box,
    HybridTimeDomain,
    HybridTrajectory,
    SwitchEvent,
    guard_facet,
    label,
)

__all__ = [
    "NoiseModel",
    "RandomSource",
    "SwitchClock",
    "StepSizeError",
    "survivor",
    "hazard",
    "signed_distance",
    "run_stochastic",
    "run_ensemble",
    "resolve_threads",
]

# Cap on a single endpoint hazard inside the per-step trapezoid, as a
# fraction of 1/dt; keeps the accumulator finite right before the sentinel.
HAZARD_CAP_FACTOR = 1e-3


class StepSizeError(RuntimeError):
    """The integration step jumped past a switching band without firing."""


@dataclass(frozen=True)
class NoiseModel:
    """Uniform measurement noise of half-width eps on each temperature."""

    eps: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be positive and finite, got {self.eps!r}")

    def validate_against(self, box: Box) -> None:
        half_gap = 0.5 * (box.t_upper - box.t_lower)
        if self.eps >= half_gap:
            raise ValueError(
                f"eps={self.eps} too large: the switching bands overlap once "
                f"eps reaches half the hysteresis gap ({half_gap})")

    def survivor(self, u):
        return survivor(u, self.eps)

    def hazard(self, u):
        return hazard(u, self.eps)


@dataclass(frozen=True)
class RandomSource:
    """Reproducible variate source: (seed, stream) fixes the whole sequence.

    In ensembles the stream index is the trajectory index, so any subset of
    trajectories can be re-run in isolation with identical results.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence((self.seed, self.stream)))


def survivor(u, eps: float):
    """Probability the switch has not fired by signed facet distance u."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    u_arr = np.asarray(u, dtype=float)
    out = np.clip(1.0 - (u_arr + eps) / (2.0 * eps), 0.0, 1.0)
    return float(out) if np.isscalar(u) or u_arr.ndim == 0 else out


def hazard(u, eps: float):
    """Hazard rate of the switching law in the distance variable.

    0 below the band, 1/(eps-u) inside it, +inf at and past the band edge.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros_like(u_arr)
    band = (u_arr >= -eps) & (u_arr < eps)
    out[band] = 1.0 / (eps - u_arr[band])
    out[u_arr >= eps] = np.inf
    return float(out[0]) if np.isscalar(u) or np.asarray(u).ndim == 0 else out


def signed_distance(x, mode: Mode, axis: int, box: Box = CANONICAL_BOX) -> float:
    """Signed distance of axis `axis` to its active facet (positive = past it)."""
    x = np.asarray(x, dtype=float)
    facet = guard_facet(mode, axis)
    T = float(x[axis - 1])
    return T - box.t_upper if facet.side == 1 else box.t_lower - T


class SwitchClock:
    """Reference implementation of the per-axis switching clock.

    Mirrors the compiled kernel's semantics operation for operation (the
    equivalence is pinned by a test): accumulate the capped hazard trapezoid
    over each traversed distance interval and fire at the sample where the
    accumulated integral reaches the Exp(1) target, or unconditionally at a
    sample past the band edge.
    """

    def __init__(self, eps: float, cap: float, target: float):
        self.eps = eps
        self.cap = cap
        self.target = target
        self.accumulated = 0.0
        self.armed = True

    def advance(self, u_old: float, u_new: float) -> bool:
        """Process one sample step; True means the clock fires at u_new."""
        if not self.armed:
            raise RuntimeError("clock must be reset after firing")
        h_new = hazard(u_new, self.eps)
        if h_new == np.inf:
            self.armed = False
            return True
        h_old = hazard(u_old, self.eps)
        du = max(u_new - u_old, 0.0)
        self.accumulated += 0.5 * (min(h_old, self.cap) + min(h_new, self.cap)) * du
        if self.accumulated >= self.target:
            self.armed = False
            return True
        return False

    def reset(self, target: float) -> None:
        self.target = target
        self.accumulated = 0.0
        self.armed = True


def _validate_start(x0, m0, box, eps):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError(f"state must be finite, got {x0!r}")
    if m0 is None:
        if not (box.t_lower < x0[0] < box.t_upper and box.t_lower < x0[1] < box.t_upper):
            raise ValueError(
                "with the mode defaulted, both temperatures must start strictly "
                f"inside ({box.t_lower}, {box.t_upper}); got {x0[:2]}")
        m0 = Mode(0, 0)
    lo, hi = box.t_lower - eps, box.t_upper + eps
    if not (lo <= x0[0] <= hi and lo <= x0[1] <= hi):
        raise ValueError(f"temperatures must start within the box widened by eps; got {x0[:2]}")
    return x0, m0


def run_stochastic(x0, m0: Mode | None = None, horizon: float = 1e5,
                   eps: float = 0.1, source: RandomSource | int = 0,
                   dt: float = 0.1,
                   coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS,
                   box: Box = CANONICAL_BOX,
                   scheme: str = "independent") -> HybridTrajectory:
    """Execute one trajectory with thickened switching over [0, horizon].

    Stepping is fixed-step RK4 (single steps of the same integrator exposed
    as propagate_rk4); events fire exactly at sample points, so the horizon
    is quantized to a whole number of steps.  scheme selects the primary
    per-axis independent clocks ("independent") or the superposed
    single-clock formulation with proportional axis selection ("summed"),
    which is retained as a statistical cross-check of the primary path.

    Raises StepSizeError when a sample is found stranded past a switching
    band by more than the step's own travel -- the signature of a dt too
    coarse for the configured eps.
    """
    if scheme not in ("independent", "summed"):
        raise ValueError(f"scheme must be 'independent' or 'summed', got {scheme!r}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if horizon <= 0 or not math.isfinite(horizon):
        raise ValueError(f"horizon must be positive and finite, got {horizon!r}")
    noise = NoiseModel(eps)
    noise.validate_against(box)
    x0, m0 = _validate_start(x0, m0, box, eps)
    if isinstance(source, (int, np.integer)):
        source = RandomSource(int(source))

    n_steps = int(math.floor(horizon / dt + 1e-9))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    states = np.empty((n_steps + 1, 3))
    ev_step = np.empty(n_steps + 1, dtype=np.int64)
    ev_axis = np.empty(n_steps + 1, dtype=np.int64)
    ev_u = np.empty(n_steps + 1, dtype=np.float64)
    cap = 1.0 / (dt * HAZARD_CAP_FACTOR)

    n_ev, status, bad_step = run_switching(
        x0[0], x0[1], x0[2], float(m0.delta1), float(m0.delta2),
        coeffs.a, coeffs.b, coeffs.c, coeffs.d, coeffs.e,
        coeffs.alpha, coeffs.beta, coeffs.valve_gain,
        box.t_lower, box.t_upper, eps, dt, n_steps, cap,
        1 if scheme == "summed" else 0,
        source.generator(), states, ev_step, ev_axis, ev_u)

    if status == STATUS_STEP_TOO_COARSE:
        raise StepSizeError(
            f"step dt={dt} jumped a switching band near t={bad_step * dt:.6g} "
            f"(sample {bad_step}); reduce dt or increase eps={eps}")
    assert status == STATUS_OK

    times = np.arange(n_steps + 1) * dt
    ev_step = ev_step[:n_ev]
    ev_axis = ev_axis[:n_ev]
    ev_u = ev_u[:n_ev]

    boundaries = ev_step * dt
    modes = [m0]
    events = []
    mode_cur = m0
    for k in range(n_ev):
        axis = int(ev_axis[k])
        new_mode = label(axis, mode_cur)
        events.append(SwitchEvent(
            time=float(boundaries[k]),
            facet=guard_facet(mode_cur, axis),
            state=states[ev_step[k]].copy(),
            mode_before=mode_cur,
            mode_after=new_mode,
            u_at_fire=float(ev_u[k]),
        ))
        modes.append(new_mode)
        mode_cur = new_mode

    seq = np.concatenate([[0.0], boundaries, [times[-1]]])
    sample_interval = np.searchsorted(ev_step, np.arange(n_steps + 1), side="left")

    return HybridTrajectory(
        domain=HybridTimeDomain(seq),
        modes=tuple(modes),
        events=tuple(events),
        times=times,
        states=states,
        sample_interval=sample_interval,
        dt=dt,
        eps=eps,
        no_more_events=False,
    )


def resolve_threads(threads: int | None, n_tasks: int) -> int:
    """Worker count for ensemble runs, capped by the HYSIM_THREADS env var."""
    if threads is None:
        env = os.environ.get("HYSIM_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"HYSIM_THREADS must be an integer, got {env!r}")
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return max(1, min(threads, n_tasks))


def run_ensemble(x0, m0: Mode | None, horizon: float, eps: float,
                 n_traj: int, master_seed: int, dt: float = 0.1,
                 coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS,
                 box: Box = CANONICAL_BOX, scheme: str = "independent",
                 threads: int | None = None) -> list[HybridTrajectory]:
    """n_traj independent trajectories; trajectory j uses stream (seed, j).

    Results are returned in stream order and are bitwise independent of the
    worker count, since each trajectory owns its generator.  Prefer
    map_ensemble when per-trajectory reductions make holding every
    trajectory in memory unnecessary.
    """
    return map_ensemble(lambda traj, j: traj, x0, m0, horizon, eps, n_traj,
                        master_seed, dt, coeffs, box, scheme, threads)


def map_ensemble(fn, x0, m0: Mode | None, horizon: float, eps: float,
                 n_traj: int, master_seed: int, dt: float = 0.1,
                 coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS,
                 box: Box = CANONICAL_BOX, scheme: str = "independent",
                 threads: int | None = None) -> list:
    """Run the ensemble and reduce each trajectory to fn(traj, index).

    The trajectory is released as soon as fn returns, keeping peak memory at
    (workers x one trajectory) for long-horizon ensembles.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    workers = resolve_threads(threads, n_traj)

    def one(j: int):
        traj = run_stochastic(x0, m0, horizon, eps,
                              RandomSource(master_seed, j), dt, coeffs, box, scheme)
        return fn(traj, j)

    if workers == 1:
        return [one(j) for j in range(n_traj)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(n_traj)))
