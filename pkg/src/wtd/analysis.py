"""Series, exponent fits and consistency checks built on billiard and IET runs.

Cycle sums ``S_n = sum_{k<=n} max_i |<f_i, C_k>|`` grow like ``n^(L+1)`` when
the pairing grows like ``n^L``; the distance averages of the billiard grow
like ``t^L``.  The checks here compare the two sides and the estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import GridMismatch, InsufficientData
from .iet import Cocycle, Iet, PairingBlock, pairing_blocks

MIN_FIT_SAMPLES = 20
N_BOOT = 200
GRID_RATIO = 1.05


class SeriesKind(str, Enum):
    MAX_DISTANCE = "MaxDistance"
    AVG_DISTANCE = "AvgDistance"
    CYCLE_SUM = "CycleSum"
    PAIRING_ABS = "PairingAbs"

    @classmethod
    def parse(cls, text: str) -> "SeriesKind":
        key = text.replace("_", "").replace("-", "").lower()
        for k in cls:
            if k.value.lower() == key:
                return k
        aliases = {"maxd": cls.MAX_DISTANCE, "dmax": cls.MAX_DISTANCE, "avgd": cls.AVG_DISTANCE,
                   "cyclesum": cls.CYCLE_SUM, "pairing": cls.PAIRING_ABS}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown series kind {text!r}")


@dataclass(frozen=True)
class DiffusionSeries:
    """Samples ``(x_i, y_i)`` with strictly increasing abscissae and ``y >= 0``."""

    x: np.ndarray
    y: np.ndarray
    kind: SeriesKind

    def __post_init__(self):
        x = np.asarray(self.x)
        y = np.asarray(self.y)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if len(x) > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("abscissae must be strictly increasing")
        if np.any(y < 0):
            raise ValueError("series values must be nonnegative")
        if self.kind == SeriesKind.CYCLE_SUM and len(y) > 1 and np.any(np.diff(y) < 0):
            raise ValueError("cycle sums must be nondecreasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return len(self.x)

    @classmethod
    def from_stats(cls, stats, kind: SeriesKind | str) -> "DiffusionSeries":
        """Distance series of a billiard run (``TrajectoryStats``)."""
        kind = SeriesKind(kind) if not isinstance(kind, SeriesKind) else kind
        col = {SeriesKind.MAX_DISTANCE: "d_max", SeriesKind.AVG_DISTANCE: "avg_d"}.get(kind)
        if col is None:
            raise ValueError(f"billiard runs give distance series, not {kind.value}")
        return cls(stats.t.copy(), getattr(stats, col).copy(), kind)


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    window: tuple[float, float]
    r2: float
    exponent: float
    n_samples: int
    kind: SeriesKind
    seed: int = 0

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "exponent": self.exponent,
                "stderr": self.stderr, "r2": self.r2, "window": list(self.window),
                "n_samples": self.n_samples, "kind": self.kind.value, "seed": self.seed}


@dataclass
class ExcursionRecord:
    n: np.ndarray  # record positions, strictly increasing
    values: np.ndarray  # running-maximum values, strictly increasing
    beta_hat: float
    beta_stderr: float
    value_slope: float
    value_stderr: float
    sparse: bool
    n_total: int

    @property
    def records(self) -> list[tuple[int, int, int]]:
        return [(m, int(n), int(v)) for m, (n, v) in enumerate(zip(self.n, self.values), 1)]

    def as_dict(self) -> dict:
        return {"n_records": len(self.n), "beta_hat": self.beta_hat,
                "beta_stderr": self.beta_stderr, "beta_defined": self.sparse,
                "value_slope": self.value_slope, "value_stderr": self.value_stderr,
                "n_total": self.n_total}


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[stream, 0, 0, 0]))


# ---------------------------------------------------------------------------
# streaming cycle sums


def _as_blocks(stream, d: int | None = None) -> Iterator[PairingBlock]:
    """Accept pairing blocks, ``return_cycles`` tuples or bare pairing values."""
    buf: list = []
    start = 0
    for item in stream:
        if isinstance(item, PairingBlock):
            if buf:
                yield PairingBlock(start, np.array(buf, dtype=np.int64), np.zeros(0, np.int64))
                start += len(buf)
                buf = []
            yield item
            start = item.start + len(item.pairings)
            continue
        p = item[2] if isinstance(item, tuple) and len(item) == 3 else item
        buf.append(np.atleast_1d(np.asarray(p, dtype=np.int64)))
        if len(buf) >= 1 << 16:
            yield PairingBlock(start, np.array(buf, dtype=np.int64), np.zeros(0, np.int64))
            start += len(buf)
            buf = []
    if buf:
        yield PairingBlock(start, np.array(buf, dtype=np.int64), np.zeros(0, np.int64))


def geometric_grid(n_max: int, ratio: float = GRID_RATIO, start: int = 1) -> np.ndarray:
    """Integers ``start, ..., n_max`` spaced by at least ``ratio`` (and by at least one)."""
    out = []
    g = start
    while g <= n_max:
        out.append(g)
        g = max(g + 1, int(round(g * ratio)))
    if out and out[-1] != n_max:
        out.append(n_max)
    return np.array(out, dtype=np.int64)


def _grid_scan(stream, ratio: float | None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid ``n``, cycle sums and ``|pairing_n|`` at the grid; every ``n`` when ratio is None."""
    ns, sums, absp = [], [], []
    total = 0
    nxt = 1
    last = None
    for bl in _as_blocks(stream):
        if len(bl.pairings) == 0:
            continue
        a = np.abs(bl.pairings).max(axis=1)
        cs = np.cumsum(a) + total
        first = bl.start + 1
        end = bl.start + len(a)
        if ratio is None:
            ns.append(np.arange(first, end + 1, dtype=np.int64))
            sums.append(cs)
            absp.append(a)
        else:
            sel = []
            while nxt <= end:
                sel.append(nxt)
                nxt = max(nxt + 1, int(round(nxt * ratio)))
            if sel:
                idx = np.array(sel, dtype=np.int64) - first
                ns.append(np.array(sel, dtype=np.int64))
                sums.append(cs[idx])
                absp.append(a[idx])
        total = int(cs[-1])
        last = (end, total, int(a[-1]))
    if ratio is not None and last is not None and (not ns or ns[-1][-1] != last[0]):
        ns.append(np.array([last[0]], dtype=np.int64))
        sums.append(np.array([last[1]], dtype=np.int64))
        absp.append(np.array([last[2]], dtype=np.int64))
    if not ns:
        e = np.zeros(0, dtype=np.int64)
        return e, e, e
    return np.concatenate(ns), np.concatenate(sums), np.concatenate(absp)


def cycle_sums(stream, grid_ratio: float | None = GRID_RATIO) -> DiffusionSeries:
    """``S_n`` sampled on a geometric grid of ``n`` (every ``n`` if ``grid_ratio`` is None).

    ``stream`` yields :class:`PairingBlock` objects, ``return_cycles`` tuples or
    bare pairing vectors.  Memory is one block plus the samples.
    """
    n, s, _ = _grid_scan(stream, grid_ratio)
    return DiffusionSeries(n, s, SeriesKind.CYCLE_SUM)


def pairing_abs(stream, grid_ratio: float | None = GRID_RATIO) -> DiffusionSeries:
    """``max_i |<f_i, C_n>|`` on the same grid as :func:`cycle_sums`."""
    n, _, a = _grid_scan(stream, grid_ratio)
    return DiffusionSeries(n, a, SeriesKind.PAIRING_ABS)


def iet_cycle_sums(iet: Iet, x, n: int, cocycle: Cocycle,
                   grid_ratio: float | None = GRID_RATIO) -> DiffusionSeries:
    return cycle_sums(pairing_blocks(iet, x, n, cocycle), grid_ratio)


# ---------------------------------------------------------------------------
# exponent fits


def _linfit(lx: np.ndarray, ly: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_exponent(series: DiffusionSeries, window: tuple[float, float] | None = None,
                 n_boot: int = N_BOOT, seed: int = 0) -> ExponentFit:
    """Least-squares slope of ``log y`` against ``log x`` inside ``window``.

    The default window is the last two decades of the abscissa.  The standard
    error is the bootstrap spread of the slope over resampled points.  For a
    cycle-sum series the exponent is ``slope - 1``; otherwise it is the slope.
    """
    x = np.asarray(series.x, dtype=float)
    y = np.asarray(series.y, dtype=float)
    if len(x) == 0:
        raise InsufficientData("empty series")
    if window is None:
        window = (float(x[-1]) / 100.0, float(x[-1]))
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError(f"bad window {window}")
    sel = (x >= lo) & (x <= hi) & (y > 0)
    m = int(sel.sum())
    if m < MIN_FIT_SAMPLES:
        raise InsufficientData(f"{m} positive samples in window [{lo:g}, {hi:g}], "
                               f"need {MIN_FIT_SAMPLES}")
    lx, ly = np.log(x[sel]), np.log(y[sel])
    if np.ptp(ly) == 0:
        slope, intercept, r2 = 0.0, float(ly[0]), 1.0
        stderr = 0.0
    else:
        slope, intercept, r2 = _linfit(lx, ly)
        rng = _rng(seed)
        idx = rng.integers(0, m, size=(n_boot, m))
        bx, by = lx[idx], ly[idx]
        mx, my = bx.mean(axis=1, keepdims=True), by.mean(axis=1, keepdims=True)
        sxx = ((bx - mx) ** 2).sum(axis=1)
        ok = sxx > 0
        bs = ((bx - mx) * (by - my)).sum(axis=1)[ok] / sxx[ok]
        stderr = float(np.std(bs, ddof=1)) if len(bs) > 1 else float("nan")
    exponent = slope - 1.0 if series.kind == SeriesKind.CYCLE_SUM else slope
    return ExponentFit(slope=slope, intercept=intercept, stderr=stderr, window=(lo, hi),
                       r2=r2, exponent=exponent, n_samples=m, kind=series.kind, seed=seed)


# ---------------------------------------------------------------------------
# sandwich between time averages and cycle sums


@dataclass
class SandwichReport:
    A1_hat: float
    B1_hat: float
    violations: list[int]
    burn_in: float
    n_samples: int
    holdout_violations: int = 0

    def as_dict(self) -> dict:
        return {"A1_hat": self.A1_hat, "B1_hat": self.B1_hat, "violations": self.violations,
                "burn_in": self.burn_in, "n_samples": self.n_samples,
                "holdout_violations": self.holdout_violations}


def _sandwich_constants(avg: np.ndarray, mean: np.ndarray, late: np.ndarray) -> tuple[float, float]:
    both = late & (avg > 0) & (mean > 0)
    if both.any():
        r = np.maximum(avg[both] / mean[both], mean[both] / avg[both])
        A = max(1.0, float(r.max()))
    else:
        A = 1.0
    B = max(0.0, float(np.max(avg - A * mean)), float(np.max(mean / A - avg)))
    return A, B


def sandwich_check(avg: DiffusionSeries, sums: DiffusionSeries, n_at: Sequence[int],
                   burn_in: float | None = None, rtol: float = 1e-12) -> SandwichReport:
    """Fit ``A1 >= 1``, ``B1 >= 0`` with ``mean/A1 - B1 <= avg <= A1*mean + B1``.

    ``avg`` is a time-average series on times ``t_i``; ``n_at[i]`` is the
    number of returns completed by ``t_i`` and ``mean = S_n / n`` comes from
    ``sums``, which must contain every positive ``n_at[i]``.  ``A1`` is the
    largest ratio of the two sides after ``burn_in`` (default: the first tenth
    of the log-time range); ``B1`` absorbs the rest of the run.  A violation
    is a sample where the fitted constants fail, or where either side is not
    finite.  The constants refitted on the first half of the samples are also
    checked on the second half (``holdout_violations``, informational).
    """
    if avg.kind not in (SeriesKind.AVG_DISTANCE, SeriesKind.MAX_DISTANCE):
        raise GridMismatch(f"first series must be a distance average, got {avg.kind.value}")
    if sums.kind != SeriesKind.CYCLE_SUM:
        raise GridMismatch(f"second series must be cycle sums, got {sums.kind.value}")
    n_at = np.asarray(n_at, dtype=np.int64)
    if n_at.shape != avg.x.shape:
        raise GridMismatch("one return count per time sample required")
    if len(n_at) > 1 and np.any(np.diff(n_at) < 0):
        raise GridMismatch("return counts must be nondecreasing in time")
    t = np.asarray(avg.x, dtype=float)
    a = np.asarray(avg.y, dtype=float)
    pos = n_at > 0
    idx = np.searchsorted(sums.x, n_at[pos])
    if np.any(idx >= len(sums.x)) or np.any(sums.x[np.minimum(idx, len(sums.x) - 1)] != n_at[pos]):
        raise GridMismatch("cycle-sum grid does not contain the matched return counts")
    mean = np.zeros_like(a)
    mean[pos] = np.asarray(sums.y, dtype=float)[idx] / n_at[pos]
    if burn_in is None:
        burn_in = float(t[0] * (t[-1] / t[0]) ** 0.1) if len(t) and t[0] > 0 else 0.0
    late = t >= burn_in
    A, B = _sandwich_constants(a, mean, late)
    tol = rtol * np.maximum(1.0, np.abs(a))
    bad = (~np.isfinite(a)) | (~np.isfinite(mean)) | (a > A * mean + B + tol) | (a < mean / A - B - tol)
    half = len(t) // 2
    hold = 0
    if half >= 2:
        A2, B2 = _sandwich_constants(a[:half], mean[:half], late[:half])
        hold = int(np.sum((a[half:] > A2 * mean[half:] + B2) | (a[half:] < mean[half:] / A2 - B2)))
    return SandwichReport(A1_hat=A, B1_hat=B, violations=[int(i) for i in np.flatnonzero(bad)],
                          burn_in=burn_in, n_samples=len(t), holdout_violations=hold)


def billiard_sandwich(stats, burn_in: float | None = None) -> SandwichReport:
    """Sandwich between ``avg_d`` and the run's own cell-crossing cycle sums.

    The crossings of cell boundaries are the returns; the pairing of the
    ``k``-th return is the sup-norm cell displacement from the start.
    """
    n_at = np.asarray(stats.column("n_cross"), dtype=np.int64)
    s_at = np.asarray(stats.column("cross_sum"), dtype=np.int64)
    keep = np.concatenate(([True], np.diff(n_at) > 0)) & (n_at > 0)
    sums = DiffusionSeries(n_at[keep], s_at[keep], SeriesKind.CYCLE_SUM)
    avg = DiffusionSeries.from_stats(stats, SeriesKind.AVG_DISTANCE)
    return sandwich_check(avg, sums, n_at, burn_in=burn_in)


# ---------------------------------------------------------------------------
# excursion records


def excursion_records(stream, min_length: int = 1000) -> ExcursionRecord:
    """Running-maximum records of ``max_i |<f_i, C_n>|`` along the stream.

    ``beta_hat`` is the slope of ``log n_m`` against ``m``; it is only
    meaningful when records are exponentially sparse, which ``sparse`` reports
    (at most ``4 log n_total`` records).  ``value_slope`` is the slope of
    ``log value_m`` against ``log n_m``.
    """
    rn, rv = [], []
    best = 0
    n_total = 0
    for bl in _as_blocks(stream):
        if len(bl.pairings) == 0:
            continue
        a = np.abs(bl.pairings).max(axis=1)
        n_total = bl.start + len(a)
        prev = np.maximum.accumulate(np.concatenate(([best], a[:-1])))
        for i in np.flatnonzero(a > prev):
            rn.append(bl.start + 1 + int(i))
            rv.append(int(a[i]))
        best = max(best, int(a.max()))
    if n_total < min_length:
        raise InsufficientData(f"stream of length {n_total} < {min_length}")
    n = np.array(rn, dtype=np.int64)
    v = np.array(rv, dtype=np.int64)
    sparse = 0 < len(n) <= 4 * math.log(max(n_total, 2))
    beta = beta_se = vs = vs_se = float("nan")
    if len(n) >= 3:
        m = np.arange(1, len(n) + 1, dtype=float)
        beta, beta_se = _slope_with_se(m, np.log(n))
        vs, vs_se = _slope_with_se(np.log(n), np.log(v))
    return ExcursionRecord(n=n, values=v, beta_hat=beta, beta_stderr=beta_se, value_slope=vs,
                           value_stderr=vs_se, sparse=bool(sparse), n_total=n_total)


def _slope_with_se(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if np.ptp(x) == 0:
        return float("nan"), float("nan")
    (slope, intercept), cov = np.polyfit(x, y, 1, cov="unscaled")
    resid = y - (slope * x + intercept)
    dof = len(x) - 2
    if dof <= 0:
        return float(slope), float("nan")
    s2 = float(np.sum(resid ** 2)) / dof
    return float(slope), float(math.sqrt(max(cov[0, 0] * s2, 0.0)))


# ---------------------------------------------------------------------------
# uniform upper bound over base points


@dataclass
class UniformBoundReport:
    lam_hat: float
    epsilon: float
    n_grid: np.ndarray
    max_exponent: np.ndarray  # max over base points of log|pairing_n| / log n
    N0: int | None
    stabilized: bool
    n_basepoints: int
    singular_basepoints: int
    seed: int

    def as_dict(self) -> dict:
        return {"lam_hat": self.lam_hat, "epsilon": self.epsilon, "N0": self.N0,
                "stabilized": self.stabilized, "n_basepoints": self.n_basepoints,
                "singular_basepoints": self.singular_basepoints, "seed": self.seed,
                "n_grid": self.n_grid.tolist(),
                "max_exponent": [None if not np.isfinite(v) else float(v)
                                 for v in self.max_exponent]}


def uniform_upper_check(iet: Iet, cocycle: Cocycle, n_basepoints: int, n_max: int,
                        epsilon: float, lam_hat: float, seed: int = 0,
                        grid_ratio: float = 1.25) -> UniformBoundReport:
    """Empirical threshold ``N0`` after which ``log|pairing_n(x)|/log n <= lam_hat + epsilon``.

    ``x`` ranges over ``n_basepoints`` seeded uniform points; ``n`` over a
    geometric grid from 2 to ``n_max``.  ``stabilized`` is False when the
    bound still fails at the last grid point.
    """
    from .errors import SingularAt

    grid = geometric_grid(n_max, grid_ratio, start=2)
    worst = np.full(len(grid), -np.inf)
    rng = _rng(seed, 1)
    total = float(iet.total)
    singular = 0
    logs = np.log(grid.astype(float))
    for _ in range(n_basepoints):
        x = rng.uniform(0.0, total)
        vals = np.zeros(len(grid))
        try:
            _, _, a = _grid_scan_at(pairing_blocks(iet, x, n_max, cocycle), grid)
        except SingularAt:
            singular += 1
            continue
        with np.errstate(divide="ignore"):
            vals = np.log(a.astype(float)) / logs
        worst = np.maximum(worst, vals)
    bound = lam_hat + epsilon
    ok = worst <= bound
    if ok.all():
        N0 = int(grid[0])
    elif ok[-1]:
        last_bad = int(np.flatnonzero(~ok)[-1])
        N0 = int(grid[last_bad + 1])
    else:
        N0 = None
    return UniformBoundReport(lam_hat=lam_hat, epsilon=epsilon, n_grid=grid, max_exponent=worst,
                              N0=N0, stabilized=N0 is not None, n_basepoints=n_basepoints,
                              singular_basepoints=singular, seed=seed)


def _grid_scan_at(stream, grid: np.ndarray):
    sums = np.zeros(len(grid), dtype=np.int64)
    absp = np.zeros(len(grid), dtype=np.int64)
    total = 0
    j = 0
    for bl in _as_blocks(stream):
        if len(bl.pairings) == 0:
            continue
        a = np.abs(bl.pairings).max(axis=1)
        cs = np.cumsum(a) + total
        end = bl.start + len(a)
        k = j
        while k < len(grid) and grid[k] <= end:
            k += 1
        if k > j:
            idx = grid[j:k] - bl.start - 1
            sums[j:k] = cs[idx]
            absp[j:k] = a[idx]
            j = k
        total = int(cs[-1])
    if j < len(grid):
        raise InsufficientData("stream shorter than the grid")
    return grid, sums, absp


# ---------------------------------------------------------------------------
# lower-bound mechanism


@dataclass
class LowerBoundReport:
    constant: float
    exponent: float
    checked: int
    violations: list[tuple[int, int]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"constant": self.constant, "exponent": self.exponent, "checked": self.checked,
                "violations": [list(v) for v in self.violations]}


def lower_bound_check(pairings: np.ndarray, lam_hat: float, epsilon: float = 0.1,
                      n_starts: int = 1000, seed: int = 0, max_records: int = 200) -> LowerBoundReport:
    """After a record ``v_m`` at ``n_m`` the walk stays far for a while.

    With ``U(j) = C j^(lam_hat + epsilon)`` a uniform bound on the pairing of
    orbit segments of length ``j`` (``C`` fitted on ``n_starts`` seeded
    segment starts), checks for every record and every ``p`` on a geometric
    grid up to ``n_m``::

        S_{n_m + p} - S_{n_m} >= p v_m - sum_{j <= p} U(j)

    ``pairings`` is the full pairing sequence (``(N,)`` or ``(N, d)``).
    """
    P = np.asarray(pairings, dtype=np.int64)
    if P.ndim == 1:
        P = P[:, None]
    N = len(P)
    if N < 10:
        raise InsufficientData("pairing sequence too short")
    a = np.abs(P).max(axis=1)
    S = np.concatenate(([0], np.cumsum(a)))
    Pz = np.concatenate((np.zeros((1, P.shape[1]), dtype=np.int64), P))
    ex = lam_hat + epsilon
    rng = _rng(seed, 2)
    starts = rng.integers(0, N // 2, size=n_starts)
    lens = geometric_grid(N // 2, 1.2)
    seg = np.abs(Pz[starts[:, None] + lens[None, :]] - Pz[starts[:, None]]).max(axis=2)
    C = float(np.max(seg / lens[None, :].astype(float) ** ex))
    rec = excursion_records([PairingBlock(0, P, np.zeros(0, np.int64))], min_length=10)
    ks = np.arange(1, N + 1, dtype=float)
    cumU = np.concatenate(([0.0], np.cumsum(C * ks ** ex)))
    violations = []
    checked = 0
    order = np.linspace(0, len(rec.n) - 1, min(max_records, len(rec.n))).astype(int) if len(rec.n) else []
    for i in order:
        nm, vm = int(rec.n[i]), int(rec.values[i])
        pm = min(nm, N - nm)
        if pm < 1:
            continue
        for p in geometric_grid(pm, 1.25):
            checked += 1
            lhs = S[nm + p] - S[nm]
            if lhs < p * vm - cumU[p] - 1e-9 * max(1.0, abs(cumU[p])):
                violations.append((nm, int(p)))
    return LowerBoundReport(constant=C, exponent=ex, checked=checked, violations=violations)


# ---------------------------------------------------------------------------
# component convention


def component_max_matches(iet: Iet, x, n: int, cocycle: Cocycle,
                          grid_ratio: float | None = GRID_RATIO) -> bool:
    """The d-component pairing series equals the max of the single-component ones."""
    full = pairing_abs(pairing_blocks(iet, x, n, cocycle), grid_ratio)
    parts = [pairing_abs(pairing_blocks(iet, x, n, cocycle.component(i)), grid_ratio)
             for i in range(cocycle.d)]
    if any(not np.array_equal(p.x, full.x) for p in parts):
        return False
    return bool(np.array_equal(full.y, np.max([p.y for p in parts], axis=0)))


def series_to_rows(series: DiffusionSeries) -> Iterable[tuple]:
    return zip(series.x.tolist(), series.y.tolist())
