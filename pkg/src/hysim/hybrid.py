"""Hybrid execution of the refrigeration model under hysteresis switching.

The continuous state lives in the box [T_lower, T_upper]^2 x R+ (pressure is
unconstrained).  Each axis switches on its own facet pair: while a valve is
closed its guard is the upper facet (the case warms up to it), while open it
is the lower facet.  Crossing the guard flips that valve and leaves the
continuous state untouched.  A trajectory is therefore a sequence of affine
arcs tiled over a non-decreasing switching sequence; zero-length intervals
are legal and are how simultaneous two-axis events are represented (axis 1
first, then axis 2 at the same time instant).

The deterministic executor never integrates: each arc is evaluated through
the closed-form flow, and switching times are located by bisection on that
flow, bracketed per monotone segment (a two-exponential temperature arc has
at most one interior extremum, so segments are found analytically).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    CANONICAL_COEFFICIENTS,
    Mode,
    ReducedCoefficients,
    State,
    _arc_terms,
    propagate_exact,
)

__all__ = [
    "Box",
    "Facet",
    "label",
    "guard_facet",
    "HybridTimeDomain",
    "SwitchEvent",
    "HybridTrajectory",
    "PeriodicCertificate",
    "run_deterministic",
    "detect_period",
    "CANONICAL_BOX",
]

# Coordinate residual below which a bisected event counts as on-facet [degC].
EVENT_COORD_TOL = 1e-10
# Two crossing times closer than this count as one simultaneous instant [s].
SIMULTANEITY_TOL = 1e-9


@dataclass(frozen=True)
class Box:
    """Hysteresis band shared by both temperature axes [degC]."""

    t_lower: float = 0.0
    t_upper: float = 5.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_lower) and math.isfinite(self.t_upper)):
            raise ValueError("box bounds must be finite")
        if self.t_upper <= self.t_lower:
            raise ValueError(f"t_upper must exceed t_lower, got {self!r}")

    def bound(self, side: int) -> float:
        return self.t_upper if side == 1 else self.t_lower


CANONICAL_BOX = Box()


@dataclass(frozen=True)
class Facet:
    """One switching surface: axis 1 or 2, side 0 (lower) or 1 (upper)."""

    axis: int
    side: int

    def __post_init__(self) -> None:
        if self.axis not in (1, 2):
            raise ValueError(f"axis must be 1 or 2, got {self.axis!r}")
        if self.side not in (0, 1):
            raise ValueError(f"side must be 0 or 1, got {self.side!r}")


def label(axis: int, mode: Mode) -> Mode:
    """Mode after the valve on `axis` toggles; the other valve is untouched."""
    if axis == 1:
        return Mode(1 - mode.delta1, mode.delta2)
    if axis == 2:
        return Mode(mode.delta1, 1 - mode.delta2)
    raise ValueError(f"axis must be 1 or 2, got {axis!r}")


def guard_facet(mode: Mode, axis: int) -> Facet:
    """The facet axis `axis` is currently heading for in `mode`."""
    return Facet(axis, 1 if mode.delta(axis) == 0 else 0)


@dataclass(frozen=True)
class HybridTimeDomain:
    """Non-decreasing switching sequence tiling [0, horizon].

    switching_sequence[0] is 0, switching_sequence[-1] the horizon; interval
    i (0-based) is [s[i], s[i+1]] and may have zero length.
    """

    switching_sequence: np.ndarray

    def __post_init__(self) -> None:
        seq = np.asarray(self.switching_sequence, dtype=float)
        object.__setattr__(self, "switching_sequence", seq)
        if seq.ndim != 1 or seq.size < 2:
            raise ValueError("switching sequence needs at least start and end")
        if np.any(np.diff(seq) < 0):
            raise ValueError("switching sequence must be non-decreasing")

    @property
    def n_intervals(self) -> int:
        return self.switching_sequence.size - 1

    def interval(self, i: int) -> tuple[float, float]:
        return (float(self.switching_sequence[i]), float(self.switching_sequence[i + 1]))


@dataclass(frozen=True, eq=False)
class SwitchEvent:
    """One reset: the state is preserved, one valve flips.

    u_at_fire is the signed facet distance at firing for stochastic runs and
    None for deterministic ones.
    """

    time: float
    facet: Facet
    state: np.ndarray
    mode_before: Mode
    mode_after: Mode
    u_at_fire: float | None = None


@dataclass(eq=False)
class HybridTrajectory:
    """Executed trajectory: sampled arcs plus the event/interval bookkeeping.

    times/states hold the global sample grid (spacing dt); sample_interval
    maps each sample to the interval it was produced in.  events has one
    entry per internal boundary of the switching sequence, in order.
    """

    domain: HybridTimeDomain
    modes: tuple[Mode, ...]
    events: tuple[SwitchEvent, ...]
    times: np.ndarray
    states: np.ndarray
    sample_interval: np.ndarray
    dt: float
    eps: float | None = None
    no_more_events: bool = False

    def __post_init__(self) -> None:
        if len(self.modes) != self.domain.n_intervals:
            raise ValueError("one mode per interval required")
        if len(self.events) != self.domain.n_intervals - 1:
            raise ValueError("one event per internal boundary required")

    @property
    def horizon(self) -> float:
        return float(self.domain.switching_sequence[-1])

    def event_times(self) -> np.ndarray:
        return np.array([ev.time for ev in self.events], dtype=float)

    def grid_samples(self, interval: tuple[float, float] | None = None):
        """(times, states) of the uniform sample grid, optionally windowed."""
        if interval is None:
            return self.times, self.states
        t0, t1 = interval
        mask = (self.times >= t0) & (self.times <= t1)
        return self.times[mask], self.states[mask]

    def to_csv(self, path) -> None:
        """Write the spec'd trajectory table.

        Columns t,interval,T1,T2,P,delta1,delta2 (plus fired_axis,u_at_fire
        for stochastic runs); one row per sample, events as repeated-t rows
        with changed delta columns.  Floats carry 17 significant digits so
        the file round-trips bitwise.
        """
        stochastic = self.eps is not None
        cols = "t,interval,T1,T2,P,delta1,delta2"
        if stochastic:
            cols += ",fired_axis,u_at_fire"
        boundaries = self.domain.switching_sequence[1:-1]
        n_int = self.domain.n_intervals

        def fmt_row(t, i, x, m, fired="", u=""):
            base = (f"{t:.17g},{i},{x[0]:.17g},{x[1]:.17g},{x[2]:.17g},"
                    f"{m.delta1},{m.delta2}")
            if stochastic:
                base += f",{fired},{u}"
            return base

        with open(path, "w") as fh:
            fh.write(cols + "\n")
            last_written = (None, None)  # (time, interval) of the last row
            for i in range(n_int):
                mask = self.sample_interval == i
                ts = self.times[mask]
                xs = self.states[mask]
                m = self.modes[i]
                for t, x in zip(ts, xs):
                    fh.write(fmt_row(t, i, x, m) + "\n")
                if ts.size:
                    last_written = (float(ts[-1]), i)
                if i < n_int - 1:
                    ev = self.events[i]
                    tb = float(boundaries[i])
                    if last_written != (tb, i):
                        fh.write(fmt_row(tb, i, ev.state, m) + "\n")
                    if stochastic:
                        fired = str(ev.facet.axis)
                        u = "" if ev.u_at_fire is None else f"{ev.u_at_fire:.17g}"
                        fh.write(fmt_row(tb, i + 1, ev.state, ev.mode_after, fired, u) + "\n")
                    else:
                        fh.write(fmt_row(tb, i + 1, ev.state, ev.mode_after) + "\n")
                    last_written = (tb, i + 1)


@dataclass(frozen=True)
class PeriodicCertificate:
    """Detected recurrence: shifting `shift` switch instants advances time by
    `period` while reproducing the event states to within `error`."""

    period: float
    shift: int
    anchor: State
    error: float

    def to_dict(self) -> dict:
        return {
            "T": self.period,
            "l": self.shift,
            "anchor": {"T1": self.anchor.T1, "T2": self.anchor.T2, "P": self.anchor.P},
            "error": self.error,
        }


# --------------------------------------------------------------------------
# deterministic execution
# --------------------------------------------------------------------------

def _axis_arc(x0, mode, coeffs, axis):
    """(lam, T_star, K, E, resonant, alpha) for one temperature axis."""
    _, _, axes = _arc_terms(x0, mode, coeffs)
    return axes[axis - 1]


def _eval_u(arc, alpha, sign, bound, tau):
    lam, T_star, K, E, resonant = arc
    if resonant:
        T = T_star + K * math.exp(-lam * tau) + E * tau * math.exp(-alpha * tau)
    else:
        T = T_star + K * math.exp(-lam * tau) + E * math.exp(-alpha * tau)
    return sign * (T - bound)


def _next_crossing(x0, mode: Mode, coeffs: ReducedCoefficients, box: Box, axis: int):
    """Earliest time the axis reaches its guard facet, or None if it never does.

    The non-resonant arc T(tau) = T* + K e^(-lam tau) + E e^(-alpha tau) has
    at most one interior extremum, so the time axis splits into at most two
    monotone segments; a sign change of the facet distance on a segment gives
    a rigorous bracket, refined by bisection to EVENT_COORD_TOL in the
    coordinate.
    """
    facet = guard_facet(mode, axis)
    bound = box.bound(facet.side)
    sign = 1.0 if facet.side == 1 else -1.0
    alpha = coeffs.alpha
    arc = _axis_arc(x0, mode, coeffs, axis)
    lam, T_star, K, E, resonant = arc

    u = lambda tau: _eval_u(arc, alpha, sign, bound, tau)
    u0 = u(0.0)
    if u0 >= -EVENT_COORD_TOL:
        # already at or past the guard: immediate switch
        return 0.0

    # monotone segment boundaries
    cuts = [0.0]
    if resonant:
        # resonance cannot occur for valid coefficient sets by construction;
        # fall back to a conservative scan grid for bracketing below
        pass
    elif K != 0.0 and E != 0.0:
        ratio = -(alpha * E) / (lam * K)
        if ratio > 0.0 and lam != alpha:
            tau_ext = math.log(ratio) / (alpha - lam)
            if tau_ext > 0.0 and math.isfinite(tau_ext):
                cuts.append(tau_ext)
    u_inf = sign * (T_star - bound)

    def bisect(lo, hi):
        ulo, uhi = u(lo), u(hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            um = u(mid)
            if abs(um) <= EVENT_COORD_TOL:
                return mid
            if (um < 0.0) == (ulo < 0.0):
                lo, ulo = mid, um
            else:
                hi, uhi = mid, um
            if hi - lo <= 1e-13 * max(1.0, abs(lo)):
                break
        return hi if abs(uhi) < abs(ulo) else lo

    if resonant:
        # geometric scan for the first sign change
        prev_t, prev_u = 0.0, u0
        step = 0.25 / max(alpha, lam)
        t_scan = step
        for _ in range(400):
            cur = u(t_scan)
            if cur >= 0.0:
                return bisect(prev_t, t_scan)
            prev_t, prev_u = t_scan, cur
            t_scan += step
        return None

    segments = list(zip(cuts, cuts[1:] + [math.inf]))
    for seg_lo, seg_hi in segments:
        u_lo = u(seg_lo)
        if u_lo >= 0.0:
            return seg_lo
        if math.isinf(seg_hi):
            if u_inf <= 0.0:
                return None
            # expanding search for a finite bracket on the monotone tail
            width = max(1.0, 0.1 / min(lam, alpha))
            hi = seg_lo + width
            for _ in range(200):
                if u(hi) >= 0.0:
                    return bisect(max(seg_lo, hi - width), hi)
                width *= 2.0
                hi = seg_lo + width
            return None
        if u(seg_hi) >= 0.0:
            return bisect(seg_lo, seg_hi)
    return None


def run_deterministic(x0, m0: Mode | None = None, horizon: float = 5e3,
                      dt: float = 0.1,
                      coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS,
                      box: Box = CANONICAL_BOX) -> HybridTrajectory:
    """Execute the hysteresis system exactly from x0 over [0, horizon].

    With m0 omitted, x0 must be strictly inside the temperature box on both
    axes and the all-closed mode is used.  Samples are taken on the global
    k*dt grid; switching times are located on the closed-form flow, so the
    only inexactness is the EVENT_COORD_TOL residual at events.  Two axes
    crossing within SIMULTANEITY_TOL fire at one instant as two consecutive
    zero-duration intervals, axis 1 first.  If no axis can ever cross in the
    current mode the run ends at the horizon with no_more_events set.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError(f"state must be finite, got {x0!r}")
    if horizon <= 0 or not math.isfinite(horizon):
        raise ValueError(f"horizon must be positive and finite, got {horizon!r}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if m0 is None:
        if not (box.t_lower < x0[0] < box.t_upper and box.t_lower < x0[1] < box.t_upper):
            raise ValueError(
                "with the mode defaulted, both temperatures must start strictly "
                f"inside ({box.t_lower}, {box.t_upper}); got {x0[:2]}")
        m0 = Mode(0, 0)

    modes = [m0]
    boundaries: list[float] = []
    events: list[SwitchEvent] = []
    t_cur, x_cur, mode_cur = 0.0, x0, m0
    no_more = False

    while True:
        tau1 = _next_crossing(x_cur, mode_cur, coeffs, box, 1)
        tau2 = _next_crossing(x_cur, mode_cur, coeffs, box, 2)
        if tau1 is None and tau2 is None:
            no_more = True
            break
        tau_e = min(t for t in (tau1, tau2) if t is not None)
        t_event = t_cur + tau_e
        if t_event >= horizon:
            break
        simultaneous = (tau1 is not None and tau2 is not None
                        and abs(tau1 - tau2) <= SIMULTANEITY_TOL)
        x_e = propagate_exact(x_cur, mode_cur, tau_e, coeffs)
        if simultaneous:
            fire_axes = (1, 2)
        else:
            fire_axes = (1,) if tau_e == tau1 else (2,)
        for axis in fire_axes:
            facet = guard_facet(mode_cur, axis)
            new_mode = label(axis, mode_cur)
            events.append(SwitchEvent(t_event, facet, x_e, mode_cur, new_mode))
            boundaries.append(t_event)
            modes.append(new_mode)
            mode_cur = new_mode
        if len(boundaries) >= 6 and boundaries[-1] == boundaries[-6]:
            raise RuntimeError("switching is not progressing; degenerate configuration")
        t_cur, x_cur = t_event, x_e

    seq = np.concatenate([[0.0], boundaries, [horizon]])
    domain = HybridTimeDomain(seq)

    n_grid = int(math.floor(horizon / dt + 1e-9))
    times = np.arange(n_grid + 1) * dt
    if times[-1] > horizon:
        times = times[:-1]
    if horizon - times[-1] > 1e-9 * max(1.0, horizon):
        times = np.append(times, horizon)

    barr = np.asarray(boundaries)
    sample_interval = np.searchsorted(barr, times, side="left")
    states = np.empty((times.size, 3))
    arc_start_states = [x0] + [ev.state for ev in events]
    arc_start_times = [0.0] + list(boundaries)
    for i in range(domain.n_intervals):
        mask = sample_interval == i
        if not np.any(mask):
            continue
        rel = times[mask] - arc_start_times[i]
        states[mask] = propagate_exact(arc_start_states[i], modes[i], rel, coeffs)

    return HybridTrajectory(
        domain=domain,
        modes=tuple(modes),
        events=tuple(events),
        times=times,
        states=states,
        sample_interval=sample_interval,
        dt=dt,
        eps=None,
        no_more_events=no_more,
    )


# --------------------------------------------------------------------------
# period detection
# --------------------------------------------------------------------------

def _switch_instants(events) -> list[tuple[float, frozenset, np.ndarray]]:
    """Group events sharing a time instant (simultaneous pairs) into compound
    switch instants of (time, facet set, state)."""
    instants = []
    for ev in events:
        if instants and abs(ev.time - instants[-1][0]) <= SIMULTANEITY_TOL:
            t, facets, state = instants[-1]
            instants[-1] = (t, facets | {ev.facet}, state)
        else:
            instants.append((ev.time, frozenset({ev.facet}), ev.state))
    return instants


def detect_period(traj: HybridTrajectory, l_max: int = 4,
                  tol_rec: float = 1e-6) -> PeriodicCertificate | None:
    """Look for a recurring tail in the switch-instant sequence.

    Simultaneous events count as one switch instant, so a synchronized
    two-axis cycle reports shift 2 (one up instant, one down instant per
    period) even though its raw interval shift is 4.  For each candidate
    shift l in 1..l_max the last few instants are compared l apart: matching
    facet sets and states within tol_rec (sup norm) certify the recurrence,
    and the period is the mean time advance over the matched pairs.  The
    anchor is the state at the latest matched instant on a lower facet (the
    valve-closing corner, where the pressure peak sits).  Returns None when
    nothing recurs or fewer than 6 events exist.
    """
    if len(traj.events) < 6:
        return None
    inst = _switch_instants(traj.events)
    n = len(inst)
    for l in range(1, l_max + 1):
        npairs = min(4, n - l)
        if npairs < 2:
            continue
        js = range(n - l - npairs, n - l)
        ok = True
        err = 0.0
        gaps = []
        for j in js:
            t_a, f_a, x_a = inst[j]
            t_b, f_b, x_b = inst[j + l]
            if f_a != f_b:
                ok = False
                break
            d = float(np.max(np.abs(x_a - x_b)))
            if d > tol_rec:
                ok = False
                break
            err = max(err, d)
            gaps.append(t_b - t_a)
        if not ok:
            continue
        matched = sorted({j for j in js} | {j + l for j in js})
        anchor_idx = None
        for j in matched:
            if any(f.side == 0 for f in inst[j][1]):
                anchor_idx = j
        if anchor_idx is None:
            anchor_idx = matched[-1]
        anchor_state = State.from_array(inst[anchor_idx][2])
        return PeriodicCertificate(
            period=float(np.mean(gaps)),
            shift=l,
            anchor=anchor_state,
            error=err,
        )
    return None
