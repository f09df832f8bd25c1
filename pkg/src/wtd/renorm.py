"""Rauzy-Veech induction, Zorich acceleration and cocycle growth rates.

Convention: at each Rauzy step the last top and last bottom subintervals are
compared; the longer one is the *winner* (top wins on strictly longer),
the shorter one the *loser*.  The winner is cut by the loser and the loser's
label is moved right after the winner in the winner's opposite row.  The
transition matrix ``B = I + E[winner, loser]`` satisfies ``lambda = B lambda'``,
heights transform as ``tau' = B^T tau`` and cycle/cocycle vectors indexed by
letters transform by ``B^T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConnectionEncountered, Degenerate
from .iet import Cocycle, Iet, new_iet

TIE_TOL = 1e-12


@dataclass(frozen=True)
class ZipperedRectangles:
    iet: Iet
    heights: tuple | None = None
    log_scale: float = 0.0

    @property
    def area(self):
        if self.heights is None:
            return None
        return sum(l * h for l, h in zip(self.iet.lengths, self.heights))


def suspension(iet: Iet, heights: Sequence | None = None) -> ZipperedRectangles:
    if heights is not None:
        heights = tuple(heights)
        if len(heights) != iet.k or not all(h > 0 for h in heights):
            raise ValueError("one positive height per letter required")
    return ZipperedRectangles(iet, heights)


class TransitionMatrix:
    """Nonnegative integer matrix over Python integers (no overflow)."""

    def __init__(self, entries):
        self.entries = np.array(entries, dtype=object)

    @classmethod
    def identity(cls, k: int) -> "TransitionMatrix":
        e = np.zeros((k, k), dtype=object)
        for i in range(k):
            e[i, i] = 1
        return cls(e)

    @classmethod
    def elementary(cls, k: int, winner: int, loser: int) -> "TransitionMatrix":
        m = cls.identity(k)
        m.entries[winner, loser] = 1
        return m

    def __matmul__(self, other: "TransitionMatrix") -> "TransitionMatrix":
        return TransitionMatrix(self.entries.dot(other.entries))

    def __eq__(self, other) -> bool:
        if isinstance(other, TransitionMatrix):
            other = other.entries
        return np.array_equal(self.entries, np.array(other, dtype=object))

    def __repr__(self) -> str:
        return f"TransitionMatrix({self.entries.tolist()})"

    def tolist(self) -> list:
        return self.entries.tolist()

    def apply(self, vec: Sequence) -> list:
        return [sum(self.entries[i, j] * vec[j] for j in range(len(vec)))
                for i in range(self.entries.shape[0])]

    def apply_transpose(self, vec: Sequence) -> list:
        return [sum(self.entries[j, i] * vec[j] for j in range(len(vec)))
                for i in range(self.entries.shape[1])]

    def column_sums(self) -> list[int]:
        return [int(sum(self.entries[:, j])) for j in range(self.entries.shape[1])]

    def det(self) -> int:
        return int_det(self.entries.tolist())


def int_det(rows: list[list[int]]) -> int:
    """Exact determinant (Bareiss fraction-free elimination)."""
    a = [list(map(int, r)) for r in rows]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


class _Induction:
    """Mutable induction state shared by the Rauzy, Zorich and Lyapunov loops.

    ``vectors`` are letter-indexed lists updated by ``B^T`` (``v[l] += v[w]``);
    ``columns`` (optional) accumulate the product of the ``B`` matrices.
    """

    def __init__(self, iet: Iet, vectors=(), track_matrix: bool = False, tol: float = TIE_TOL):
        self.alphabet = iet.alphabet
        self.pos = {a: i for i, a in enumerate(iet.alphabet)}
        self.top = [self.pos[a] for a in iet.top]
        self.bot = [self.pos[a] for a in iet.bottom]
        self.lam = list(iet.lengths)
        self.exact = iet.exact
        self.tol = tol
        self.vectors = [list(v) for v in vectors]
        self.columns = None
        if track_matrix:
            k = iet.k
            self.columns = [[1 if i == j else 0 for i in range(k)] for j in range(k)]
        self.steps = 0

    def step_type(self) -> int:
        """+1 if the top row wins, -1 if the bottom row wins."""
        lt = self.lam[self.top[-1]]
        lb = self.lam[self.bot[-1]]
        if self.exact:
            tie = lt == lb
        else:
            tie = abs(lt - lb) <= self.tol * sum(self.lam)
        if tie:
            raise ConnectionEncountered(
                f"equal last lengths {lt!r}, {lb!r} for {self.alphabet[self.top[-1]]!r}/"
                f"{self.alphabet[self.bot[-1]]!r}")
        return 1 if lt > lb else -1

    def _update(self, w: int, l: int, times=1) -> None:
        for v in self.vectors:
            v[l] += times * v[w]
        if self.columns is not None:
            cw = self.columns[w]
            cl = self.columns[l]
            for i in range(len(cl)):
                cl[i] += times * cw[i]

    def step(self) -> tuple[int, int, int]:
        kind = self.step_type()
        if kind > 0:
            w, l = self.top[-1], self.bot[-1]
            row = self.bot
        else:
            w, l = self.bot[-1], self.top[-1]
            row = self.top
        self.lam[w] -= self.lam[l]
        row.pop()
        row.insert(row.index(w) + 1, l)
        self._update(w, l)
        self.steps += 1
        return kind, w, l

    def block(self) -> int:
        """Maximal run of same-type Rauzy steps; returns the number of steps."""
        kind = self.step_type()
        count = 0
        while True:
            if kind > 0:
                w, row = self.top[-1], self.bot
            else:
                w, row = self.bot[-1], self.top
            tail = row[row.index(w) + 1:]
            total_tail = sum(self.lam[i] for i in tail)
            q = self.lam[w] // total_tail - 1
            if q >= 1:
                q = int(q)
                self.lam[w] -= q * total_tail
                for x in tail:
                    self._update(w, x, q)
                count += q * len(tail)
                self.steps += q * len(tail)
            self.step()
            count += 1
            if self.step_type() != kind:
                return count

    def iet(self) -> Iet:
        top = [self.alphabet[i] for i in self.top]
        bot = [self.alphabet[i] for i in self.bot]
        return new_iet(top, bot, self.lam, alphabet=self.alphabet)

    def matrix(self) -> TransitionMatrix:
        cols = self.columns
        k = len(cols)
        return TransitionMatrix([[cols[j][i] for j in range(k)] for i in range(k)])


def rauzy_step(zr: ZipperedRectangles | Iet):
    """One Rauzy-Veech step: ``(zr', B, winner, loser)`` with ``lambda = B lambda'``."""
    if isinstance(zr, Iet):
        zr = ZipperedRectangles(zr)
    vecs = [zr.heights] if zr.heights is not None else []
    ind = _Induction(zr.iet, vecs)
    _, w, l = ind.step()
    heights = tuple(ind.vectors[0]) if vecs else None
    B = TransitionMatrix.elementary(zr.iet.k, w, l)
    return (replace(zr, iet=ind.iet(), heights=heights), B,
            zr.iet.alphabet[w], zr.iet.alphabet[l])


def rauzy_steps(iet: Iet, n: int) -> tuple[Iet, TransitionMatrix]:
    """``n`` Rauzy steps; returns the induced IET and the product ``B_1 ... B_n``."""
    ind = _Induction(iet, track_matrix=True)
    for _ in range(n):
        ind.step()
    return ind.iet(), ind.matrix()


def zorich_step(zr: ZipperedRectangles | Iet):
    """One Zorich block: ``(zr', B, count)``.

    ``B`` is the product of the ``count`` Rauzy matrices of the block.  The
    lengths are rescaled to total one and ``log(previous total / new total)``
    is added to ``log_scale``; heights are scaled inversely, preserving area.
    """
    if isinstance(zr, Iet):
        zr = ZipperedRectangles(zr)
    vecs = [zr.heights] if zr.heights is not None else []
    ind = _Induction(zr.iet, vecs, track_matrix=True)
    before = sum(ind.lam)
    count = ind.block()
    after = sum(ind.lam)
    scale = after / before
    lam = [v / scale for v in ind.lam]
    heights = tuple(h * scale for h in ind.vectors[0]) if vecs else None
    new = new_iet([zr.iet.alphabet[i] for i in ind.top], [zr.iet.alphabet[i] for i in ind.bot],
                  lam, alphabet=zr.iet.alphabet)
    return (ZipperedRectangles(new, heights, zr.log_scale - math.log(scale)),
            ind.matrix(), count)


@dataclass
class LyapunovResult:
    lambda_f: float
    lambda_f_components: list[float]
    lambda_top: float
    ratio: float
    ratio_components: list[float]
    stderr: float
    beta: float
    steps: int
    rauzy_steps: int
    projected: list[bool]
    log_scale: np.ndarray = field(repr=False)
    log_norm_f: np.ndarray = field(repr=False)
    log_norm_top: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "lambda_f": self.lambda_f,
            "lambda_f_components": self.lambda_f_components,
            "lambda_top": self.lambda_top,
            "ratio": self.ratio,
            "ratio_components": self.ratio_components,
            "stderr": self.stderr,
            "beta": self.beta,
            "steps": self.steps,
            "rauzy_steps": self.rauzy_steps,
            "projected": self.projected,
            "log_scale": self.log_scale.tolist(),
        }


def _tail_slope(y: np.ndarray) -> float:
    n = len(y) - 1
    start = n // 2
    x = np.arange(start, n + 1, dtype=float)
    return float(np.polyfit(x, y[start:], 1)[0])


def lyapunov_ratio(zr: ZipperedRectangles | Iet, cocycle: Cocycle, n_steps: int,
                   orth_tol: float = 1e-9, batches: int = 20) -> LyapunovResult:
    """Growth rates of ``f`` and of the return times under Zorich renormalization.

    Propagates ``w_n = B_n^T ... B_1^T f`` (per component) and
    ``h_n = B_n^T ... B_1^T (1, ..., 1)`` with renormalization at every block,
    and fits the slopes of the accumulated log sup-norms over the second half
    of the run.  ``ratio = lambda_f / lambda_top`` for the component-wise max.

    A component with ``<f_i, lambda> = 0`` (relative ``orth_tol``) lies in an
    invariant hyperplane; it is projected back onto it after every block along
    ``h``, since rounding would otherwise feed the top direction.
    """
    if isinstance(zr, ZipperedRectangles):
        iet = zr.iet
    else:
        iet = zr
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    k = iet.k
    fmat = cocycle.matrix(iet.alphabet).astype(float)
    d = cocycle.d
    if not np.any(fmat):
        raise Degenerate("zero cocycle")
    # exact lengths stay exact: a self-similar IET then keeps its periodic path
    total0 = iet.total
    iet = iet.with_lengths([v / total0 for v in iet.lengths])
    lam0 = np.array([float(v) for v in iet.lengths])
    projected = []
    for i in range(d):
        fi = fmat[:, i]
        projected.append(bool(np.any(fi) and abs(fi @ lam0) <= orth_tol * np.abs(fi).sum()))
    vectors = [list(np.ones(k))] + [list(fmat[:, i]) for i in range(d)]
    ind = _Induction(iet, vectors)
    log_scale = np.zeros(n_steps + 1)
    log_top = np.zeros(n_steps + 1)
    log_f = np.zeros((d, n_steps + 1))
    dead = [not np.any(fmat[:, i]) for i in range(d)]
    for n in range(1, n_steps + 1):
        ind.block()
        total = sum(ind.lam)
        ind.lam = [v / total for v in ind.lam]
        log_scale[n] = log_scale[n - 1] - math.log(float(total))
        h = np.array(ind.vectors[0])
        lam = np.array([float(v) for v in ind.lam])
        nh = np.abs(h).max()
        ind.vectors[0] = list(h / nh)
        log_top[n] = log_top[n - 1] + math.log(nh)
        for i in range(d):
            if dead[i]:
                continue
            w = np.array(ind.vectors[i + 1])
            if projected[i]:
                w = w - (w @ lam) / (h @ lam) * h
            nw = np.abs(w).max()
            if nw == 0 or not np.isfinite(nw):
                dead[i] = True
                continue
            ind.vectors[i + 1] = list(w / nw)
            log_f[i, n] = log_f[i, n - 1] + math.log(nw)
    if all(dead):
        raise Degenerate("cocycle vanishes under the renormalization products")
    lam_top = _tail_slope(log_top)
    comps = [(-math.inf if dead[i] else _tail_slope(log_f[i])) for i in range(d)]
    best = int(np.argmax(comps))
    ratios = [c / lam_top for c in comps]
    # batch-means error of the ratio over the second half
    start = n_steps // 2
    df = np.diff(log_f[best, start:])
    dh = np.diff(log_top[start:])
    nb = min(batches, len(df))
    if nb >= 2:
        rb = [a.sum() / b.sum() for a, b in zip(np.array_split(df, nb), np.array_split(dh, nb))]
        stderr = float(np.std(rb, ddof=1) / math.sqrt(nb))
    else:
        stderr = float("nan")
    return LyapunovResult(
        lambda_f=comps[best], lambda_f_components=comps, lambda_top=lam_top,
        ratio=ratios[best], ratio_components=ratios, stderr=stderr,
        beta=float(log_scale[-1] / n_steps), steps=n_steps, rauzy_steps=ind.steps,
        projected=projected, log_scale=log_scale, log_norm_f=log_f[best], log_norm_top=log_top,
    )
