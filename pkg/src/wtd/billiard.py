"""Event-driven simulation of the wind-tree billiard.

The table is the plane minus the open rectangles of half-sides ``a/2``,
``b/2`` centred at the lattice points.  A position is stored as an integer
cell plus fractional coordinates relative to the cell corner, so that the
obstacle of every cell occupies ``(1/2 - a/2, 1/2 + a/2) x (1/2 - b/2, 1/2 + b/2)``
in fractional coordinates (the cell grid is shifted by half a period with
respect to the obstacle centres).  The integer cell is the monodromy of the
Z^2 cover.

The direction of motion is ``(sx cos(theta), sy sin(theta))`` with the signs
``sx, sy`` in {+1, -1}; reflections on axis-parallel walls flip exactly one
sign, so ``theta`` never changes and the speed is one by construction.

Hot loops are compiled with numba; the Python-level functions wrap them.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import (
    InsufficientData,
    NumericalDegeneracy,
    OutOfDomain,
    SingularTrajectory,
    Timeout,
)

EPS_CORNER = 1e-12
EPS_MIN = 1e-13
T0 = 1.0
RHO = 1.05
DEFAULT_MAX_EVENTS = 10**10

# event kinds used by the compiled kernels
VERTICAL, HORIZONTAL, CROSSING, CORNER, DEGENERATE = 0, 1, 2, 3, 4
# run status codes
RUN_OK, RUN_CORNER, RUN_DEGENERATE, RUN_BUDGET = 0, 1, 2, 3

# columns of the sample table
SAMPLE_COLUMNS = ("t", "d_now", "d_max", "avg_d", "dm", "dn", "n_cross", "cross_sum")


class Dir(enum.Enum):
    """Velocity sign pattern: first letter is the horizontal sign."""

    PP = (1, 1)
    PM = (1, -1)
    MP = (-1, 1)
    MM = (-1, -1)

    @property
    def sx(self) -> int:
        return self.value[0]

    @property
    def sy(self) -> int:
        return self.value[1]

    @classmethod
    def from_signs(cls, sx: int, sy: int) -> "Dir":
        return cls((int(sx), int(sy)))

    def reversed(self) -> "Dir":
        return Dir.from_signs(-self.sx, -self.sy)


class EventKind(enum.Enum):
    VerticalWall = VERTICAL
    HorizontalWall = HORIZONTAL
    CellCrossing = CROSSING
    Corner = CORNER


@dataclass(frozen=True)
class WindTreeParams:
    a: float
    b: float

    @property
    def box(self) -> tuple[float, float, float, float]:
        """Obstacle bounds ``(xl, xr, yl, yr)`` in fractional cell coordinates."""
        return (0.5 - self.a / 2, 0.5 + self.a / 2, 0.5 - self.b / 2, 0.5 + self.b / 2)


def validate_params(a: float, b: float) -> WindTreeParams:
    """Return the table parameters, raising :class:`OutOfDomain` unless both lie in (0, 1)."""
    for name, v in (("a", a), ("b", b)):
        if not (0.0 < v < 1.0):
            raise OutOfDomain(f"{name}={v!r} is not in the open interval (0, 1)")
    return WindTreeParams(float(a), float(b))


@dataclass(frozen=True)
class BilliardState:
    """Position ``cell + frac`` with direction tag and fixed base angle.

    ``frac`` lies in the closed unit square; a point on a cell edge may be
    stored on either side of it.
    """

    cell: tuple[int, int]
    frac: tuple[float, float]
    dir: Dir
    theta: float
    t: float = 0.0

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.dir.sx * math.cos(self.theta), self.dir.sy * math.sin(self.theta))

    @property
    def position(self) -> tuple[float, float]:
        return (self.cell[0] + self.frac[0], self.cell[1] + self.frac[1])


@dataclass(frozen=True)
class CollisionEvent:
    dt: float
    kind: EventKind
    new_state: BilliardState


@dataclass
class TrajectoryStats:
    """Samples of a run on the geometric time grid.

    ``samples`` has one row per grid time with the columns of
    :data:`SAMPLE_COLUMNS`: time, current distance, running maximum,
    time-averaged distance, cell displacement, number of cell crossings so
    far and the sum over crossings of the sup-norm of the cell displacement.
    """

    samples: np.ndarray
    events: int
    final_state: BilliardState
    final: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.samples[:, SAMPLE_COLUMNS.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def d_now(self) -> np.ndarray:
        return self.column("d_now")

    @property
    def d_max(self) -> np.ndarray:
        return self.column("d_max")

    @property
    def avg_d(self) -> np.ndarray:
        return self.column("avg_d")


# ---------------------------------------------------------------------------
# compiled geometry


@njit(cache=True)
def _normalize(fx, fy, sx, sy):
    """Move a point sitting on a cell edge and heading out into the next cell."""
    dm = 0
    dn = 0
    if fx >= 1.0 and sx > 0:
        fx -= 1.0
        dm = 1
    elif fx <= 0.0 and sx < 0:
        fx += 1.0
        dm = -1
    if fy >= 1.0 and sy > 0:
        fy -= 1.0
        dn = 1
    elif fy <= 0.0 and sy < 0:
        fy += 1.0
        dn = -1
    return fx, fy, dm, dn


@njit(cache=True)
def _event(fx, fy, sx, sy, c, s, xl, xr, yl, yr, reflect, eps_corner, eps_min):
    """Next event from a point of the cell.

    Returns ``(dt, kind, fx', fy', sx', sy', dm, dn)``; ``dm, dn`` is the
    total cell shift, including the normalization of an edge point.
    """
    fx, fy, dm, dn = _normalize(fx, fy, sx, sy)
    tx = (1.0 - fx) / c if sx > 0 else fx / c
    ty = (1.0 - fy) / s if sy > 0 else fy / s
    if abs(tx - ty) < eps_min:
        tcell = min(tx, ty)
        both = True
    else:
        tcell = min(tx, ty)
        both = False
    best = tcell
    kind = CROSSING

    if reflect:
        # vertical sides
        tv = -1.0
        if sx > 0 and fx <= xl:
            tv = (xl - fx) / c
        elif sx < 0 and fx >= xr:
            tv = (fx - xr) / c
        if tv >= 0.0 and tv <= best:
            y = fy + sy * s * tv
            if y >= yl - eps_corner and y <= yr + eps_corner:
                best = tv
                if abs(y - yl) <= eps_corner or abs(y - yr) <= eps_corner:
                    kind = CORNER
                else:
                    kind = VERTICAL
        # horizontal sides
        th = -1.0
        if sy > 0 and fy <= yl:
            th = (yl - fy) / s
        elif sy < 0 and fy >= yr:
            th = (fy - yr) / s
        if th >= 0.0 and th <= best:
            x = fx + sx * c * th
            if x >= xl - eps_corner and x <= xr + eps_corner:
                best = th
                if abs(x - xl) <= eps_corner or abs(x - xr) <= eps_corner:
                    kind = CORNER
                else:
                    kind = HORIZONTAL

    if best < eps_min:
        kind = DEGENERATE

    nfx = fx + sx * c * best
    nfy = fy + sy * s * best
    nsx = sx
    nsy = sy
    if kind == VERTICAL:
        nfx = xl if sx > 0 else xr
        nsx = -sx
    elif kind == HORIZONTAL:
        nfy = yl if sy > 0 else yr
        nsy = -sy
    elif kind == CROSSING:
        if both or tx <= ty:
            if sx > 0:
                nfx = 0.0
                dm += 1
            else:
                nfx = 1.0
                dm -= 1
        if both or ty < tx:
            if sy > 0:
                nfy = 0.0
                dn += 1
            else:
                nfy = 1.0
                dn -= 1
        # keep the coordinate that did not cross inside the cell
        if nfx < 0.0:
            nfx = 0.0
        elif nfx > 1.0:
            nfx = 1.0
        if nfy < 0.0:
            nfy = 0.0
        elif nfy > 1.0:
            nfy = 1.0
    return best, kind, nfx, nfy, nsx, nsy, dm, dn


@njit(cache=True)
def _antider(u, h2):
    # antiderivative of sqrt(u^2 + h2)
    r = math.sqrt(u * u + h2)
    if h2 > 0.0:
        return 0.5 * (u * r + h2 * math.asinh(u / math.sqrt(h2)))
    return 0.5 * u * abs(u)


@njit(cache=True)
def _segment_integral(px, py, vx, vy, tau):
    """Exact integral of |p + v u| for u in [0, tau], |v| = 1."""
    pv = px * vx + py * vy
    h2 = px * px + py * py - pv * pv
    if h2 < 0.0:
        h2 = 0.0
    return _antider(pv + tau, h2) - _antider(pv, h2)


@njit(cache=True)
def _simulate(m, n, fx, fy, sx, sy, theta, xl, xr, yl, yr, reflect, t_max,
              t0, rho, max_events, eps_corner, eps_min, out):
    c = math.cos(theta)
    s = math.sin(theta)
    m0 = m
    n0 = n
    fx0 = fx
    fy0 = fy
    t = 0.0
    integral = 0.0
    dmax = 0.0
    n_cross = 0
    cross_sum = 0.0
    events = 0
    k = 0
    nrows = out.shape[0]
    ts = t0
    status = RUN_OK
    while True:
        if events >= max_events:
            status = RUN_BUDGET
            break
        dt, kind, nfx, nfy, nsx, nsy, dm, dn = _event(
            fx, fy, sx, sy, c, s, xl, xr, yl, yr, reflect, eps_corner, eps_min)
        if kind == CORNER:
            status = RUN_CORNER
            break
        if kind == DEGENERATE:
            status = RUN_DEGENERATE
            break
        fxs, fys, pm, pn = _normalize(fx, fy, sx, sy)
        pre_m = m + pm
        pre_n = n + pn
        vx = sx * c
        vy = sy * s
        px = (pre_m - m0) + (fxs - fx0)
        py = (pre_n - n0) + (fys - fy0)
        t_end = t + dt
        while k < nrows and ts <= t_end and ts <= t_max:
            tau = ts - t
            qx = px + vx * tau
            qy = py + vy * tau
            dq = math.sqrt(qx * qx + qy * qy)
            if dq > dmax:
                dmax = dq
            out[k, 0] = ts
            out[k, 1] = dq
            out[k, 2] = dmax
            out[k, 3] = (integral + _segment_integral(px, py, vx, vy, tau)) / ts
            out[k, 4] = pre_m - m0
            out[k, 5] = pre_n - n0
            out[k, 6] = n_cross
            out[k, 7] = cross_sum
            k += 1
            ts = t0 * rho ** k
        if t_end >= t_max:
            tau = t_max - t
            integral += _segment_integral(px, py, vx, vy, tau)
            m = pre_m
            n = pre_n
            fx = fxs + vx * tau
            fy = fys + vy * tau
            qx = px + vx * tau
            qy = py + vy * tau
            dq = math.sqrt(qx * qx + qy * qy)
            if dq > dmax:
                dmax = dq
            t = t_max
            break
        integral += _segment_integral(px, py, vx, vy, dt)
        m += dm
        n += dn
        fx = nfx
        fy = nfy
        sx = nsx
        sy = nsy
        t = t_end
        events += 1
        qx = (m - m0) + (fx - fx0)
        qy = (n - n0) + (fy - fy0)
        dq = math.sqrt(qx * qx + qy * qy)
        if dq > dmax:
            dmax = dq
        if kind == CROSSING:
            n_cross += 1
            cross_sum += max(abs(m - m0), abs(n - n0))
    return (k, events, status, m, n, fx, fy, sx, sy, t, integral, dmax,
            n_cross, cross_sum)


@njit(cache=True)
def _trace(m, n, fx, fy, sx, sy, theta, xl, xr, yl, yr, reflect, n_events,
           eps_corner, eps_min, rec_i, rec_f):
    """Record every event: ints (kind, sx, sy, m, n), floats (t, fx, fy)."""
    c = math.cos(theta)
    s = math.sin(theta)
    t = 0.0
    for i in range(n_events):
        dt, kind, nfx, nfy, nsx, nsy, dm, dn = _event(
            fx, fy, sx, sy, c, s, xl, xr, yl, yr, reflect, eps_corner, eps_min)
        if kind == CORNER or kind == DEGENERATE:
            rec_i[i, 0] = kind
            return i, kind
        m += dm
        n += dn
        fx = nfx
        fy = nfy
        sx = nsx
        sy = nsy
        t += dt
        rec_i[i, 0] = kind
        rec_i[i, 1] = sx
        rec_i[i, 2] = sy
        rec_i[i, 3] = m
        rec_i[i, 4] = n
        rec_f[i, 0] = t
        rec_f[i, 1] = fx
        rec_f[i, 2] = fy
    return n_events, -1


# ---------------------------------------------------------------------------
# Python API


def _box(params: WindTreeParams):
    return params.box


def next_event(state: BilliardState, params: WindTreeParams, *,
               eps_corner: float = EPS_CORNER, eps_min: float = EPS_MIN,
               reflections: bool = True) -> CollisionEvent:
    """Return the next wall hit or cell crossing from ``state``.

    Raises :class:`SingularTrajectory` when the ray meets an obstacle corner
    and :class:`NumericalDegeneracy` when the event time is below ``eps_min``.
    """
    xl, xr, yl, yr = _box(params)
    c, s = math.cos(state.theta), math.sin(state.theta)
    dt, kind, nfx, nfy, nsx, nsy, dm, dn = _event(
        float(state.frac[0]), float(state.frac[1]), state.dir.sx, state.dir.sy,
        c, s, xl, xr, yl, yr, reflections, eps_corner, eps_min)
    if kind == DEGENERATE:
        raise NumericalDegeneracy(f"event time {dt!r} below {eps_min!r}")
    new = BilliardState(
        cell=(state.cell[0] + dm, state.cell[1] + dn),
        frac=(nfx, nfy),
        dir=Dir.from_signs(nsx, nsy),
        theta=state.theta,
        t=state.t + dt,
    )
    ev = CollisionEvent(dt=dt, kind=EventKind(kind), new_state=new)
    if kind == CORNER:
        raise SingularTrajectory("ray hits an obstacle corner", ev)
    return ev


def n_grid_samples(t_max: float, t0: float = T0, rho: float = RHO) -> int:
    if t_max < t0:
        return 0
    return int(math.floor(math.log(t_max / t0) / math.log(rho) + 1e-9)) + 1


def advance(state: BilliardState, params: WindTreeParams, t_max: float, *,
            t0: float = T0, rho: float = RHO, reflections: bool = True,
            max_events: int = DEFAULT_MAX_EVENTS,
            eps_corner: float = EPS_CORNER, eps_min: float = EPS_MIN) -> TrajectoryStats:
    """Run the flow from ``state`` for time ``t_max``.

    Samples are taken at ``t0 * rho**j <= t_max``.  The time integral of the
    distance to the start is accumulated exactly per flight segment.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    xl, xr, yl, yr = _box(params)
    out = np.zeros((n_grid_samples(t_max, t0, rho) + 1, len(SAMPLE_COLUMNS)))
    res = _simulate(state.cell[0], state.cell[1], float(state.frac[0]), float(state.frac[1]),
                    state.dir.sx, state.dir.sy, float(state.theta), xl, xr, yl, yr,
                    reflections, float(t_max), t0, rho, max_events, eps_corner, eps_min, out)
    (k, events, status, m, n, fx, fy, sx, sy, t, integral, dmax, n_cross, cross_sum) = res
    if status == RUN_CORNER:
        raise SingularTrajectory(f"corner hit after {events} events at t={t:.6g}")
    if status == RUN_DEGENERATE:
        raise NumericalDegeneracy(f"stuck event after {events} events at t={t:.6g}")
    if status == RUN_BUDGET:
        raise Timeout(f"event budget {max_events} exhausted at t={t:.6g}")
    final_state = BilliardState((int(m), int(n)), (fx, fy), Dir.from_signs(sx, sy),
                                state.theta, state.t + t)
    final = {"t": t, "d_max": dmax, "avg_d": integral / t if t > 0 else 0.0,
             "n_cross": int(n_cross), "cross_sum": cross_sum}
    return TrajectoryStats(samples=out[:k].copy(), events=int(events),
                           final_state=final_state, final=final)


def trace_events(state: BilliardState, params: WindTreeParams, n_events: int, *,
                 reflections: bool = True) -> dict:
    """Per-event log of ``n_events`` events (stops early at a corner).

    Returns arrays ``kind, sx, sy, m, n, t, fx, fy`` and ``stopped`` (the
    kind code that stopped the trace, or -1).
    """
    xl, xr, yl, yr = _box(params)
    rec_i = np.zeros((n_events, 5), dtype=np.int64)
    rec_f = np.zeros((n_events, 3))
    done, stop = _trace(state.cell[0], state.cell[1], float(state.frac[0]), float(state.frac[1]),
                        state.dir.sx, state.dir.sy, float(state.theta), xl, xr, yl, yr,
                        reflections, n_events, EPS_CORNER, EPS_MIN, rec_i, rec_f)
    names_i = ("kind", "sx", "sy", "m", "n")
    names_f = ("t", "fx", "fy")
    log = {k: rec_i[:done, j] for j, k in enumerate(names_i)}
    log.update({k: rec_f[:done, j] for j, k in enumerate(names_f)})
    log["stopped"] = int(stop)
    return log


def random_start(params: WindTreeParams, theta: float, rng: np.random.Generator) -> BilliardState:
    """Uniform point of the free part of the base cell with direction PP."""
    xl, xr, yl, yr = params.box
    while True:
        fx, fy = rng.random(2)
        if not (xl <= fx <= xr and yl <= fy <= yr):
            return BilliardState((0, 0), (float(fx), float(fy)), Dir.PP, float(theta))


# ---------------------------------------------------------------------------
# diffusion exponents


@dataclass
class DirectionResult:
    index: int
    theta: float
    max_slope: float
    avg_slope: float
    resampled: int
    events: int
    stats: TrajectoryStats | None = None


@dataclass
class DiffusionEstimate:
    max_exp: float
    max_stderr: float
    avg_exp: float
    avg_stderr: float
    directions: list[DirectionResult]
    singular_resamples: int
    failed: int

    def as_dict(self) -> dict:
        return {
            "max_exp": self.max_exp,
            "max_stderr": self.max_stderr,
            "avg_exp": self.avg_exp,
            "avg_stderr": self.avg_stderr,
            "n_directions": len(self.directions),
            "singular_resamples": self.singular_resamples,
            "failed": self.failed,
            "per_direction": [
                {"index": d.index, "theta": d.theta, "max_slope": d.max_slope,
                 "avg_slope": d.avg_slope, "resampled": d.resampled, "events": d.events}
                for d in self.directions
            ],
        }


def _direction_rng(seed: int, index: int) -> np.random.Generator:
    # counter-based stream per direction index: independent of scheduling
    return np.random.Generator(np.random.Philox(key=seed, counter=[index, 0, 0, 0]))


def _loglog_slope(t: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    sel = (t >= lo) & (t <= hi) & (y > 0)
    if sel.sum() < 3:
        return float("nan")
    return float(np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)[0])


def _run_direction(args) -> DirectionResult | None:
    (index, a, b, t_max, seed, fit_window, reflections, max_resample, keep_stats) = args
    params = WindTreeParams(a, b)
    rng = _direction_rng(seed, index)
    for attempt in range(max_resample + 1):
        theta = float(rng.uniform(0.0, math.pi / 2))
        if not 0.0 < theta < math.pi / 2:
            continue
        state = random_start(params, theta, rng)
        try:
            stats = advance(state, params, t_max, reflections=reflections)
        except (SingularTrajectory, NumericalDegeneracy):
            continue
        lo, hi = fit_window
        return DirectionResult(
            index=index, theta=theta,
            max_slope=_loglog_slope(stats.t, stats.d_max, lo, hi),
            avg_slope=_loglog_slope(stats.t, stats.avg_d, lo, hi),
            resampled=attempt, events=stats.events,
            stats=stats if keep_stats else None,
        )
    return None


def worker_count() -> int:
    env = os.environ.get("WTD_THREADS")
    n = os.cpu_count() or 1
    if env:
        n = max(1, min(n, int(env)))
    return n


def _bootstrap_median_stderr(x: np.ndarray, rng: np.random.Generator, n_boot: int = 200) -> float:
    if len(x) < 2:
        return float("nan")
    idx = rng.integers(0, len(x), size=(n_boot, len(x)))
    return float(np.std(np.median(x[idx], axis=1), ddof=1))


def estimate_diffusion_exponents(params: WindTreeParams, n_directions: int, t_max: float,
                                 seed: int, fit_window: tuple[float, float], *,
                                 reflections: bool = True, workers: int | None = None,
                                 max_resample: int = 10, keep_stats: bool = False,
                                 t0: float = T0) -> DiffusionEstimate:
    """Median log-log slopes of ``d_max`` and ``avg_d`` over seeded directions.

    Directions are uniform on (0, pi/2), starting points uniform in the free
    part of the base cell.  A singular direction is redrawn from the same
    per-index stream.  The standard errors are bootstrap errors of the median.
    """
    lo, hi = fit_window
    if n_directions < 1:
        raise ValueError("n_directions must be >= 1")
    if lo < 10 * t0 or hi > t_max or lo >= hi:
        raise ValueError(f"fit window {fit_window} incompatible with t0={t0}, t_max={t_max}")
    jobs = [(i, params.a, params.b, float(t_max), int(seed), (float(lo), float(hi)),
             reflections, max_resample, keep_stats) for i in range(n_directions)]
    workers = worker_count() if workers is None else workers
    if workers > 1 and n_directions > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_directions)) as ex:
            results = list(ex.map(_run_direction, jobs))
    else:
        results = [_run_direction(j) for j in jobs]
    done = [r for r in results if r is not None and np.isfinite(r.max_slope)
            and np.isfinite(r.avg_slope)]
    failed = n_directions - len(done)
    if len(done) * 2 < n_directions:
        raise InsufficientData(f"only {len(done)} of {n_directions} directions completed")
    max_s = np.array([r.max_slope for r in done])
    avg_s = np.array([r.avg_slope for r in done])
    brng = np.random.Generator(np.random.Philox(key=seed, counter=[2**63, 0, 0, 0]))
    return DiffusionEstimate(
        max_exp=float(np.median(max_s)),
        max_stderr=_bootstrap_median_stderr(max_s, brng),
        avg_exp=float(np.median(avg_s)),
        avg_stderr=_bootstrap_median_stderr(avg_s, brng),
        directions=done,
        singular_resamples=sum(r.resampled for r in done),
        failed=failed,
    )
