"""Occupancy statistics and synchronization analysis of switching trajectories.

Two reductions of ensembles are provided here.  The intensity map bins the
sampled states of many trajectories on a fixed plane -- (T1, T2) or (T1, P) --
into a counting grid whose per-trajectory mean estimates the expected
occupancy measure of the ensemble; grids over disjoint trajectory sets merge
by plain addition, which makes the estimate embarrassingly parallel.  The
synchronization classifier pairs switching events of the two temperature axes
by mutual nearest neighbors in time and measures how much of the horizon the
pair behaves as the deterministic synchronized cycle: near-simultaneous
switching with the characteristic shared pressure peak at valve closings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import CANONICAL_COEFFICIENTS, Mode, ReducedCoefficients
from .hybrid import CANONICAL_BOX, Box, HybridTrajectory, run_deterministic

__all__ = [
    "IntensityGrid",
    "SyncReport",
    "SweepRow",
    "accumulate_intensity",
    "default_bounds",
    "classify_synchronization",
    "prevalence_sweep",
    "sweep_to_csv",
]

PLANES = ("t1t2", "t1p")

# Canonical-model plot windows: temperatures one band beyond the box,
# pressure from the compressor floor to just above the synchronized peak.
DEFAULT_T_BOUNDS = (-0.5, 5.5)
DEFAULT_P_BOUNDS = (0.0, 16.5)
DEFAULT_BIN_WIDTH = 0.05

# Defaults for the synchronized-episode test: events paired within one
# second qualify when their valve-closing pressures sit near the peak the
# synchronized cycle shows at its simultaneous closings.
DEFAULT_DT_SYNC = 1.0
DEFAULT_P_REF = 15.23
DEFAULT_P_TOL = 0.5


def default_bounds(plane: str) -> tuple[tuple[float, float], tuple[float, float]]:
    """Default (x, y) axis bounds for a named projection plane."""
    if plane == "t1t2":
        return DEFAULT_T_BOUNDS, DEFAULT_T_BOUNDS
    if plane == "t1p":
        return DEFAULT_T_BOUNDS, DEFAULT_P_BOUNDS
    raise ValueError(f"plane must be one of {PLANES}, got {plane!r}")


def _make_edges(lo: float, hi: float, width: float) -> np.ndarray:
    if not (hi > lo):
        raise ValueError(f"need hi > lo, got [{lo}, {hi}]")
    if width <= 0:
        raise ValueError(f"bin width must be positive, got {width}")
    n = int(round((hi - lo) / width))
    if n < 1 or abs(lo + n * width - hi) > 1e-9 * max(1.0, abs(hi)):
        raise ValueError(f"[{lo}, {hi}] is not a whole number of bins of width {width}")
    return lo + width * np.arange(n + 1)


@dataclass
class IntensityGrid:
    """Counting grid over a state-plane projection.

    counts[i, j] is the number of samples landing in x-bin i, y-bin j,
    summed over all accumulated trajectories; estimate() divides by the
    trajectory count.  Samples outside the bounds land in `overflow`.
    """

    plane: str
    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    n_traj: int = 0
    overflow: int = 0

    def __post_init__(self) -> None:
        if self.plane not in PLANES:
            raise ValueError(f"plane must be one of {PLANES}, got {self.plane!r}")
        self.x_edges = np.asarray(self.x_edges, dtype=float)
        self.y_edges = np.asarray(self.y_edges, dtype=float)
        if self.x_edges.ndim != 1 or self.x_edges.size < 2 or np.any(np.diff(self.x_edges) <= 0):
            raise ValueError("x_edges must be a strictly increasing 1-d array")
        if self.y_edges.ndim != 1 or self.y_edges.size < 2 or np.any(np.diff(self.y_edges) <= 0):
            raise ValueError("y_edges must be a strictly increasing 1-d array")
        shape = (self.x_edges.size - 1, self.y_edges.size - 1)
        if self.counts is None:
            self.counts = np.zeros(shape, dtype=np.int64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.shape != shape:
                raise ValueError(f"counts shape {self.counts.shape} != edges shape {shape}")

    @classmethod
    def empty(cls, plane: str, bounds=None, bin_width: float = DEFAULT_BIN_WIDTH) -> "IntensityGrid":
        (xlo, xhi), (ylo, yhi) = bounds if bounds is not None else default_bounds(plane)
        return cls(plane=plane,
                   x_edges=_make_edges(xlo, xhi, bin_width),
                   y_edges=_make_edges(ylo, yhi, bin_width))

    def _project(self, traj: HybridTrajectory) -> tuple[np.ndarray, np.ndarray]:
        if self.plane == "t1t2":
            return traj.states[:, 0], traj.states[:, 1]
        return traj.states[:, 0], traj.states[:, 2]

    def add(self, traj: HybridTrajectory, interval: tuple[float, float] | None = None) -> None:
        """Bin one trajectory's grid samples (optionally a time window) in place.

        Both window endpoints must lie within [0, horizon]; a reversed
        window (t0 > t1) is legal and selects nothing.
        """
        x, y = self._project(traj)
        if interval is not None:
            t0, t1 = interval
            if not (0.0 <= t0 <= traj.horizon and 0.0 <= t1 <= traj.horizon):
                raise ValueError(
                    f"interval {interval} not contained in [0, {traj.horizon}]")
            keep = (traj.times >= t0) & (traj.times <= t1)
            x, y = x[keep], y[keep]
        in_range = ((x >= self.x_edges[0]) & (x <= self.x_edges[-1])
                    & (y >= self.y_edges[0]) & (y <= self.y_edges[-1]))
        hist, _, _ = np.histogram2d(x[in_range], y[in_range],
                                    bins=[self.x_edges, self.y_edges])
        self.counts += hist.astype(np.int64)
        self.overflow += int(x.size - np.count_nonzero(in_range))
        self.n_traj += 1

    def merge(self, other: "IntensityGrid") -> "IntensityGrid":
        """Combine counts from a grid of identical geometry (new grid returned)."""
        if (self.plane != other.plane
                or self.x_edges.shape != other.x_edges.shape
                or self.y_edges.shape != other.y_edges.shape
                or not np.array_equal(self.x_edges, other.x_edges)
                or not np.array_equal(self.y_edges, other.y_edges)):
            raise ValueError("cannot merge grids with different geometry")
        return IntensityGrid(plane=self.plane, x_edges=self.x_edges, y_edges=self.y_edges,
                             counts=self.counts + other.counts,
                             n_traj=self.n_traj + other.n_traj,
                             overflow=self.overflow + other.overflow)

    def estimate(self) -> np.ndarray:
        """Per-trajectory mean occupancy counts (float array, same shape)."""
        if self.n_traj < 1:
            raise ValueError("no trajectories accumulated")
        return self.counts / float(self.n_traj)

    def bin_centers(self) -> tuple[np.ndarray, np.ndarray]:
        return (0.5 * (self.x_edges[:-1] + self.x_edges[1:]),
                0.5 * (self.y_edges[:-1] + self.y_edges[1:]))

    def to_csv(self, path) -> None:
        """Matrix CSV: rows are y bins in descending order, columns x bins
        ascending, with bin centers in the header row and first column."""
        xc, yc = self.bin_centers()
        est = self.estimate()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("y\\x," + ",".join("%.10g" % v for v in xc) + "\n")
            for j in range(yc.size - 1, -1, -1):
                row = est[:, j]
                fh.write("%.10g," % yc[j] + ",".join("%.10g" % v for v in row) + "\n")

    def to_pgm(self, path) -> None:
        """Plain-text PGM (P2) image of the raw counts, linearly scaled to
        0..255; same orientation as the CSV (top row = largest y)."""
        max_count = int(self.counts.max()) if self.counts.size else 0
        ny = self.y_edges.size - 1
        nx = self.x_edges.size - 1
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("P2\n")
            fh.write(f"# max_count={max_count}\n")
            fh.write(f"{nx} {ny}\n255\n")
            for j in range(ny - 1, -1, -1):
                if max_count > 0:
                    vals = np.rint(self.counts[:, j] * (255.0 / max_count)).astype(int)
                else:
                    vals = np.zeros(nx, dtype=int)
                fh.write(" ".join(str(int(v)) for v in vals) + "\n")


def accumulate_intensity(trajectories, plane: str = "t1t2", bounds=None,
                         bin_width: float = DEFAULT_BIN_WIDTH,
                         interval: tuple[float, float] | None = None) -> IntensityGrid:
    """Accumulate an iterable of trajectories into one intensity grid.

    Accepts any iterable, including a generator, so callers can stream
    long-horizon trajectories through without holding the whole ensemble.
    """
    grid = IntensityGrid.empty(plane, bounds, bin_width)
    for traj in trajectories:
        grid.add(traj, interval)
    if grid.n_traj == 0:
        raise ValueError("no trajectories supplied")
    return grid


# ---------------------------------------------------------------------------
# Synchronization classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyncReport:
    """Outcome of the synchronized-switching classification of one trajectory.

    prevalence is the fraction of the horizon covered by synchronized
    episodes; episodes are (start, end) times; peak_pressures collects the
    pressure at every valve-closing event (the marker whose distribution
    separates the synchronized peak from desynchronized switching), and
    peak_histogram is its fixed-bin histogram (counts, edges).
    """

    prevalence: float
    episodes: tuple[tuple[float, float], ...]
    n_pairs: int
    n_qualifying: int
    peak_pressures: np.ndarray
    peak_histogram: tuple[np.ndarray, np.ndarray]


def _nearest(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Index in dst of the nearest value to each src entry (ties -> earlier)."""
    pos = np.searchsorted(dst, src)
    left = np.clip(pos - 1, 0, dst.size - 1)
    right = np.clip(pos, 0, dst.size - 1)
    take_left = np.abs(src - dst[left]) <= np.abs(dst[right] - src)
    return np.where(take_left, left, right)


def classify_synchronization(traj: HybridTrajectory,
                             dt_sync: float = DEFAULT_DT_SYNC,
                             p_ref: float = DEFAULT_P_REF,
                             p_tol: float = DEFAULT_P_TOL) -> SyncReport:
    """Measure how much of a trajectory runs as the synchronized cycle.

    Axis-1 and axis-2 switching events are paired by mutual nearest
    neighbors in time.  A pair qualifies as synchronized when the two
    events lie within dt_sync of each other and every valve-closing member
    has pressure within p_tol of p_ref, the shared peak of the synchronized
    cycle.  Chronological runs of qualifying markers form episodes; an
    unpaired event or a disqualified pair breaks the run.  The last episode
    extends to the horizon when nothing after it breaks the run, so a fully
    synchronized trajectory scores prevalence 1.  The construction is
    symmetric in the two axes.
    """
    if dt_sync <= 0 or p_tol <= 0:
        raise ValueError("dt_sync and p_tol must be positive")
    horizon = traj.horizon
    ev1 = [e for e in traj.events if e.facet.axis == 1]
    ev2 = [e for e in traj.events if e.facet.axis == 2]
    all_pressures = np.array([e.state[2] for e in traj.events
                              if e.facet.side == 0], dtype=float)
    hist_edges = np.arange(0.0, 20.0 + 0.25, 0.25)
    hist = np.histogram(all_pressures, bins=hist_edges)[0]

    if not ev1 or not ev2:
        return SyncReport(prevalence=0.0, episodes=(), n_pairs=0, n_qualifying=0,
                          peak_pressures=all_pressures,
                          peak_histogram=(hist, hist_edges))

    t1 = np.array([e.time for e in ev1])
    t2 = np.array([e.time for e in ev2])
    n1to2 = _nearest(t1, t2)
    n2to1 = _nearest(t2, t1)
    mutual1 = n2to1[n1to2] == np.arange(t1.size)

    # Markers in chronological order: (time, qualifying?) for mutual pairs,
    # (time, False) for every unpaired event of either axis.
    markers: list[tuple[float, bool]] = []
    paired2 = np.zeros(t2.size, dtype=bool)
    for i in range(t1.size):
        if not mutual1[i]:
            markers.append((t1[i], False))
            continue
        j = int(n1to2[i])
        paired2[j] = True
        ok = abs(t1[i] - t2[j]) <= dt_sync
        if ok:
            for ev in (ev1[i], ev2[j]):
                if ev.facet.side == 0 and abs(ev.state[2] - p_ref) > p_tol:
                    ok = False
                    break
        markers.append((0.5 * (t1[i] + t2[j]), ok))
    for j in np.nonzero(~paired2)[0]:
        markers.append((t2[j], False))
    markers.sort(key=lambda m: m[0])

    episodes: list[tuple[float, float]] = []
    run_start = None
    last_ok = None
    for t, ok in markers:
        if ok:
            if run_start is None:
                run_start = t
            last_ok = t
        elif run_start is not None:
            episodes.append((run_start, last_ok))
            run_start = None
    if run_start is not None:
        episodes.append((run_start, horizon))

    total = sum(b - a for a, b in episodes)
    n_pairs = int(np.count_nonzero(mutual1))
    n_qual = sum(ok for _, ok in markers)
    return SyncReport(prevalence=float(total / horizon), episodes=tuple(episodes),
                      n_pairs=n_pairs, n_qualifying=int(n_qual),
                      peak_pressures=all_pressures,
                      peak_histogram=(hist, hist_edges))


# ---------------------------------------------------------------------------
# Prevalence sweep over noise amplitudes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    """One noise amplitude's ensemble prevalence summary."""

    eps: float
    mean_prevalence: float
    stderr: float
    n_traj: int
    horizon: float
    seed: int


def prevalence_sweep(eps_values, x0, m0: Mode | None = None,
                     horizon: float = 1e5, n_traj: int = 10,
                     master_seed: int = 0, dt: float = 0.1,
                     coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS,
                     box: Box = CANONICAL_BOX,
                     dt_sync: float = DEFAULT_DT_SYNC, p_ref: float = DEFAULT_P_REF,
                     p_tol: float = DEFAULT_P_TOL,
                     scheme: str = "independent",
                     threads: int | None = None,
                     include_deterministic: bool = True) -> list[SweepRow]:
    """Synchronization prevalence versus noise amplitude.

    Row eps=0 (when include_deterministic) is the noiseless trajectory from
    the same start, classified by the same rule, with stderr 0 and n_traj 1.
    Each positive eps runs an ensemble whose trajectory j draws from stream
    (master_seed, j); trajectories are classified as they complete and
    released, so memory stays bounded for long horizons.
    """
    from .stochastic import map_ensemble  # local import to avoid cycles

    rows: list[SweepRow] = []
    if include_deterministic:
        det = run_deterministic(x0, m0, horizon=horizon, dt=dt, coeffs=coeffs, box=box)
        rep = classify_synchronization(det, dt_sync, p_ref, p_tol)
        rows.append(SweepRow(eps=0.0, mean_prevalence=rep.prevalence, stderr=0.0,
                             n_traj=1, horizon=horizon, seed=master_seed))

    for eps in sorted(float(e) for e in eps_values):
        if eps <= 0:
            raise ValueError(f"swept eps values must be positive, got {eps}")
        prevs = map_ensemble(
            lambda traj, j: classify_synchronization(traj, dt_sync, p_ref, p_tol).prevalence,
            x0, m0, horizon, eps, n_traj, master_seed, dt, coeffs, box, scheme, threads)
        prevs = np.asarray(prevs, dtype=float)
        stderr = float(prevs.std(ddof=1) / math.sqrt(n_traj)) if n_traj > 1 else 0.0
        rows.append(SweepRow(eps=eps, mean_prevalence=float(prevs.mean()),
                             stderr=stderr, n_traj=n_traj, horizon=horizon,
                             seed=master_seed))
    return rows


def sweep_to_csv(rows, path) -> None:
    """Write sweep rows as CSV with a fixed header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("eps,mean_prevalence,stderr,n_traj,horizon,seed\n")
        for r in rows:
            fh.write("%.17g,%.17g,%.17g,%d,%.17g,%d\n"
                     % (r.eps, r.mean_prevalence, r.stderr, r.n_traj, r.horizon, r.seed))
