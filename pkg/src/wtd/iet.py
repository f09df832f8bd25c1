"""Interval exchange transformations, orbit coding and return cycles.

An IET is given by an alphabet, the order of the letters in the top and in
the bottom decomposition of ``[0, total)`` and one length per letter.  The
map sends the top subinterval of a letter onto its bottom subinterval by a
translation.  Subintervals are half-open, so the left endpoint ``0`` is a
regular point; the interior top cut points are the singularities.

Lengths are either all exact (``Fraction`` or quadratic ``Quad``) or all
floats.  Exact mode gives bit-exact orbits; float mode feeds the compiled
orbit kernel.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np
from numba import njit

from .errors import NonPositiveLength, OutOfRange, Reducible, SingularAt, SingularPoint
from .qfield import Quad

SINGULAR_TOL = 1e-12


def _as_length(v):
    if isinstance(v, str):
        v = v.strip()
        if "sqrt" in v:
            return Quad.parse(v)
        return Fraction(v) if "/" in v else float(v)
    if isinstance(v, bool):
        raise TypeError("boolean length")
    if isinstance(v, Rational):
        return Fraction(v)
    if isinstance(v, Quad):
        return v
    return float(v)


def _is_exact(v) -> bool:
    return isinstance(v, (Fraction, Quad))


@dataclass(frozen=True)
class Iet:
    alphabet: tuple[str, ...]
    top: tuple[str, ...]
    bottom: tuple[str, ...]
    lengths: tuple  # aligned with ``alphabet``
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def k(self) -> int:
        return len(self.alphabet)

    @property
    def exact(self) -> bool:
        return all(_is_exact(v) for v in self.lengths)

    @property
    def quadratic(self) -> bool:
        return any(isinstance(v, Quad) for v in self.lengths)

    @property
    def total(self):
        return sum(self.lengths, Fraction(0) if self.exact else 0.0)

    def index(self, letter: str) -> int:
        return self._tables["pos"][letter]

    def length(self, letter: str):
        return self.lengths[self.index(letter)]

    @property
    def _tables(self) -> dict:
        c = self._cache
        if not c:
            pos = {a: i for i, a in enumerate(self.alphabet)}
            zero = Fraction(0) if self.exact else 0.0
            top_starts = [zero]
            for a in self.top:
                top_starts.append(top_starts[-1] + self.lengths[pos[a]])
            bot_starts = [zero]
            for a in self.bottom:
                bot_starts.append(bot_starts[-1] + self.lengths[pos[a]])
            start_t = {a: top_starts[i] for i, a in enumerate(self.top)}
            start_b = {a: bot_starts[i] for i, a in enumerate(self.bottom)}
            c["pos"] = pos
            c["top_starts"] = top_starts
            c["bot_starts"] = bot_starts
            c["delta"] = tuple(start_b[a] - start_t[a] for a in self.alphabet)
        return c

    @property
    def top_cuts(self) -> list:
        """Interior cut points of the top decomposition (the singularities)."""
        return self._tables["top_starts"][1:-1]

    @property
    def bottom_cuts(self) -> list:
        return self._tables["bot_starts"][1:-1]

    @property
    def translations(self) -> tuple:
        """Translation of each letter (alphabet order), ``bottom start - top start``."""
        return self._tables["delta"]

    def interval(self, letter: str, side: str = "top"):
        starts = self._tables["top_starts" if side == "top" else "bot_starts"]
        order = self.top if side == "top" else self.bottom
        i = order.index(letter)
        return starts[i], starts[i + 1]

    def _coerce(self, x):
        if self.exact and not _is_exact(x):
            return Fraction(x)
        if not self.exact:
            return float(x)
        return x

    def locate(self, x) -> int:
        """Position in the top order of the subinterval containing ``x``.

        Raises :class:`SingularPoint` on an interior top cut point (within
        :data:`SINGULAR_TOL` times the total length in float mode).
        """
        starts = self._tables["top_starts"]
        if not (0 <= x < starts[-1]):
            raise OutOfRange(f"{x!r} outside [0, {starts[-1]!r})")
        j = bisect_right(starts, x) - 1
        if self.exact:
            if j > 0 and x == starts[j]:
                raise SingularPoint(x)
        else:
            tol = SINGULAR_TOL * starts[-1]
            if (j > 0 and x - starts[j] <= tol) or (j + 1 < self.k and starts[j + 1] - x <= tol):
                raise SingularPoint(x)
        return j

    def letter_at(self, x) -> str:
        return self.top[self.locate(self._coerce(x))]

    def __call__(self, x):
        return apply(self, x)

    def arrays(self):
        """Float arrays for the compiled kernels: top starts, top letter ids, translations."""
        t = self._tables
        starts = np.array([float(v) for v in t["top_starts"]])
        ids = np.array([t["pos"][a] for a in self.top], dtype=np.int64)
        delta = np.array([float(v) for v in t["delta"]])
        return starts, ids, delta

    def with_lengths(self, lengths: Sequence) -> "Iet":
        return new_iet(self.top, self.bottom, lengths, alphabet=self.alphabet)

    def to_float(self) -> "Iet":
        return self.with_lengths([float(v) for v in self.lengths])

    def __str__(self) -> str:
        return f"{' '.join(self.top)}\n{' '.join(self.bottom)}\n{self.lengths}"


def is_irreducible(top: Sequence[str], bottom: Sequence[str]) -> bool:
    return all(set(top[:j]) != set(bottom[:j]) for j in range(1, len(top)))


def new_iet(order_top: Sequence[str], order_bot: Sequence[str], lengths,
            alphabet: Sequence[str] | None = None) -> Iet:
    """Validated IET.

    ``lengths`` is a mapping letter -> length or a sequence aligned with
    ``alphabet`` (default: the top order).  Rationals and ``"p/q"`` strings
    give an exact IET, as do quadratic numbers (``Quad`` or ``"a+b*sqrt(D)"``);
    any float or decimal string switches to float mode.
    """
    top = tuple(str(a) for a in order_top)
    bot = tuple(str(a) for a in order_bot)
    alpha = tuple(str(a) for a in alphabet) if alphabet is not None else top
    if len(set(top)) != len(top) or set(top) != set(bot) or set(top) != set(alpha):
        raise ValueError("top and bottom orders must be permutations of the same alphabet")
    if isinstance(lengths, Mapping):
        vals = [_as_length(lengths[a]) for a in alpha]
    else:
        vals = [_as_length(v) for v in lengths]
    if len(vals) != len(alpha):
        raise ValueError("one length per letter required")
    if not all(_is_exact(v) for v in vals):
        vals = [float(v) for v in vals]
    for a, v in zip(alpha, vals):
        if not v > 0:
            raise NonPositiveLength(f"length of {a!r} is {v!r}")
    if not is_irreducible(top, bot):
        raise Reducible(f"{top} / {bot} is reducible")
    return Iet(alpha, top, bot, tuple(vals))


def apply(iet: Iet, x):
    """Image of ``x``; raises :class:`SingularPoint` at an interior top cut."""
    x = iet._coerce(x)
    j = iet.locate(x)
    y = x + iet.translations[iet.index(iet.top[j])]
    if not iet.exact:
        # rounding may push the image just outside [0, total)
        tot = iet._tables["top_starts"][-1]
        y = min(max(y, 0.0), np.nextafter(tot, 0.0))
    return y


@dataclass(frozen=True)
class CodingWord:
    letters: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return "".join(self.letters) if all(len(a) == 1 for a in self.letters) \
            else " ".join(self.letters)

    def shift(self) -> "CodingWord":
        return CodingWord(self.letters[1:])


def code_orbit(iet: Iet, x, n: int) -> CodingWord:
    """First ``n`` letters of the coding of ``x``.

    Raises :class:`SingularAt` (carrying the prefix) if the orbit meets a
    singularity first.
    """
    x = iet._coerce(x)
    word = []
    for step in range(n):
        try:
            j = iet.locate(x)
        except SingularPoint:
            raise SingularAt(step, word) from None
        a = iet.top[j]
        word.append(a)
        x = apply(iet, x)
    return CodingWord(tuple(word))


@dataclass(frozen=True)
class Cocycle:
    """Integer vector ``f(h_alpha)`` in Z^d for each letter."""

    d: int
    values: Mapping[str, tuple[int, ...]]

    @classmethod
    def from_values(cls, values: Mapping[str, Sequence[int] | int]) -> "Cocycle":
        vals = {}
        for a, v in values.items():
            v = (v,) if isinstance(v, (int, np.integer)) else tuple(v)
            vals[str(a)] = tuple(int(c) for c in v)
        dims = {len(v) for v in vals.values()}
        if len(dims) != 1:
            raise ValueError("all cocycle values must have the same dimension")
        return cls(dims.pop(), vals)

    @classmethod
    def constant(cls, alphabet: Sequence[str], value: int = 1) -> "Cocycle":
        return cls(1, {a: (int(value),) for a in alphabet})

    def matrix(self, alphabet: Sequence[str]) -> np.ndarray:
        """``(k, d)`` integer array in the given letter order."""
        return np.array([self.values[a] for a in alphabet], dtype=np.int64).reshape(len(alphabet), self.d)

    def component(self, i: int) -> "Cocycle":
        return Cocycle(1, {a: (v[i],) for a, v in self.values.items()})

    def sup_norm(self) -> int:
        return max(max(abs(c) for c in v) for v in self.values.values())


@dataclass(frozen=True)
class ReturnCycle:
    """Visit counts of an orbit segment (coordinates of the return cycle)."""

    counts: Mapping[str, int]

    @property
    def n(self) -> int:
        return sum(self.counts.values())

    @property
    def norm1(self) -> int:
        return sum(abs(c) for c in self.counts.values())

    def pair(self, cocycle: Cocycle) -> tuple[int, ...]:
        out = [0] * cocycle.d
        for a, c in self.counts.items():
            for i, fv in enumerate(cocycle.values[a]):
                out[i] += c * fv
        return tuple(out)

    def __add__(self, other: "ReturnCycle") -> "ReturnCycle":
        keys = set(self.counts) | set(other.counts)
        return ReturnCycle({a: self.counts.get(a, 0) + other.counts.get(a, 0) for a in keys})


def return_cycles(iet: Iet, x, n_max: int, cocycle: Cocycle
                  ) -> Iterator[tuple[int, dict[str, int], tuple[int, ...]]]:
    """Yield ``(n, counts, pairing)`` for ``n = 1..n_max``.

    ``counts`` is updated in place between yields; copy it to keep a
    snapshot.  Raises :class:`SingularAt` when the orbit stops.
    """
    x = iet._coerce(x)
    counts = {a: 0 for a in iet.alphabet}
    pairing = [0] * cocycle.d
    for n in range(1, n_max + 1):
        try:
            j = iet.locate(x)
        except SingularPoint:
            raise SingularAt(n - 1) from None
        a = iet.top[j]
        counts[a] += 1
        for i, fv in enumerate(cocycle.values[a]):
            pairing[i] += fv
        yield n, counts, tuple(pairing)
        x = apply(iet, x)


def cycle_of(iet: Iet, x, n: int) -> ReturnCycle:
    """Return cycle ``C_n(x)`` as visit counts."""
    counts = dict.fromkeys(iet.alphabet, 0)
    for a in code_orbit(iet, x, n).letters:
        counts[a] += 1
    return ReturnCycle(counts)


@njit(cache=True)
def _orbit_block(x, starts, ids, delta, fvals, counts, pairing, n, out, tol):
    """Iterate ``n`` steps; returns (steps done, final x, singular flag)."""
    k = ids.shape[0]
    total = starts[k]
    d = pairing.shape[0]
    for i in range(n):
        # linear scan: k is small
        j = k - 1
        while j > 0 and x < starts[j]:
            j -= 1
        if (j > 0 and x - starts[j] <= tol) or (j + 1 < k and starts[j + 1] - x <= tol):
            return i, x, True
        a = ids[j]
        counts[a] += 1
        for c in range(d):
            pairing[c] += fvals[a, c]
            out[i, c] = pairing[c]
        x += delta[a]
        if x < 0.0:
            x = 0.0
        elif x >= total:
            x = total * (1.0 - 1e-16)
    return n, x, False


@dataclass
class PairingBlock:
    """Pairings ``<f, C_n>`` for ``n = start+1 .. start+len(pairings)``."""

    start: int
    pairings: np.ndarray  # (m, d) int64
    counts: np.ndarray  # visit counts after the block, alphabet order


def pairing_blocks(iet: Iet, x, n_max: int, cocycle: Cocycle,
                   block: int = 1 << 20) -> Iterator[PairingBlock]:
    """Stream of pairing blocks along the orbit of ``x`` (float kernel).

    Memory is one block.  Rational IETs are iterated exactly in Python;
    quadratic lengths are rounded to floats for the kernel.  Raises
    :class:`SingularAt` after yielding the part of the orbit that exists.
    """
    if iet.quadratic:
        iet = iet.to_float()
    if iet.exact:
        yield from _pairing_blocks_exact(iet, x, n_max, cocycle, block)
        return
    starts, ids, delta = iet.arrays()
    fvals = cocycle.matrix(iet.alphabet)
    counts = np.zeros(iet.k, dtype=np.int64)
    pairing = np.zeros(cocycle.d, dtype=np.int64)
    tol = SINGULAR_TOL * starts[-1]
    x = float(x)
    if not 0.0 <= x < starts[-1]:
        raise OutOfRange(f"{x!r} outside [0, {starts[-1]!r})")
    done = 0
    while done < n_max:
        m = min(block, n_max - done)
        out = np.empty((m, cocycle.d), dtype=np.int64)
        steps, x, singular = _orbit_block(x, starts, ids, delta, fvals, counts, pairing, m, out, tol)
        if steps:
            yield PairingBlock(done, out[:steps], counts.copy())
        done += steps
        if singular:
            raise SingularAt(done)


def _pairing_blocks_exact(iet, x, n_max, cocycle, block):
    buf = []
    start = 0
    counts = None
    try:
        for n, cnt, pairing in return_cycles(iet, x, n_max, cocycle):
            buf.append(pairing)
            counts = cnt
            if len(buf) == block:
                yield PairingBlock(start, np.array(buf, dtype=np.int64).reshape(-1, cocycle.d),
                                   np.array([counts[a] for a in iet.alphabet], dtype=np.int64))
                start += len(buf)
                buf = []
    except SingularAt as e:
        if buf:
            yield PairingBlock(start, np.array(buf, dtype=np.int64).reshape(-1, cocycle.d),
                               np.array([counts[a] for a in iet.alphabet], dtype=np.int64))
        raise SingularAt(e.step) from None
    if buf:
        yield PairingBlock(start, np.array(buf, dtype=np.int64).reshape(-1, cocycle.d),
                           np.array([counts[a] for a in iet.alphabet], dtype=np.int64))


def hitting_times(iet: Iet, x, depth: int) -> dict[str, int | None]:
    """First ``n < depth`` at which the orbit visits each letter (``None``: not seen)."""
    try:
        word = code_orbit(iet, x, depth).letters
    except SingularAt as e:
        raise SingularAt(e.step, e.word) from None
    hits: dict[str, int | None] = dict.fromkeys(iet.alphabet)
    for n, a in enumerate(word):
        if hits[a] is None:
            hits[a] = n
    return hits


@dataclass(frozen=True)
class NoConnectionUpTo:
    depth: int

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class ConnectionAt:
    step: int
    bottom_cut: object
    top_cut: object

    def __bool__(self) -> bool:
        return False


def keane_check(iet: Iet, depth: int) -> NoConnectionUpTo | ConnectionAt:
    """Look for a connection: a bottom cut point whose orbit meets a top cut.

    Truthy result means no connection was found within ``depth`` iterates.
    """
    tops = iet.top_cuts
    tol = 0 if iet.exact else SINGULAR_TOL * float(iet.total)
    for v in iet.bottom_cuts:
        x = v
        for step in range(depth):
            near = [u for u in tops if abs(x - u) <= tol]
            if near:
                return ConnectionAt(step, v, near[0])
            x = apply(iet, x)
    return NoConnectionUpTo(depth)


def first_return(iet: Iet, x, end) -> tuple[object, int, dict[str, int]]:
    """First return of ``x`` to ``[0, end)``: image, return time, visit counts."""
    x = iet._coerce(x)
    counts = dict.fromkeys(iet.alphabet, 0)
    n = 0
    while True:
        counts[iet.top[iet.locate(x)]] += 1
        x = apply(iet, x)
        n += 1
        if x < end:
            return x, n, counts


# ---------------------------------------------------------------------------
# coding stability of the left endpoint


def _perturbations(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` directions with zero sum and unit sup-norm."""
    u = rng.uniform(-1.0, 1.0, size=(n, k))
    u -= u.mean(axis=1, keepdims=True)
    return u / np.abs(u).max(axis=1, keepdims=True)


def prefix_preserved(iet: Iet, m: int, delta: float, directions: np.ndarray) -> bool:
    ref = code_orbit(iet, 0.0, m).letters
    lam = np.array([float(v) for v in iet.lengths])
    for u in directions:
        other = iet.with_lengths(list(lam + delta * u))
        try:
            if code_orbit(other, 0.0, m).letters != ref:
                return False
        except SingularAt:
            return False
    return True


def coding_stability_radius(iet: Iet, m: int = 50, n_perturb: int = 32, seed: int = 0,
                            max_halvings: int = 60, refine: int = 8) -> tuple[float, np.ndarray]:
    """Largest tested ``delta`` keeping the length-``m`` coding of ``0`` fixed.

    Starts from a tenth of the shortest length and halves until all
    ``n_perturb`` sampled sup-norm perturbations (total length unchanged)
    give the same prefix, then bisects upward ``refine`` times.  Returns
    ``(delta, directions)``; ``delta == 0`` if no radius was found.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    dirs = _perturbations(iet.k, n_perturb, rng)
    hi = 0.1 * min(float(v) for v in iet.lengths)
    lo = 0.0
    for _ in range(max_halvings):
        if prefix_preserved(iet, m, hi, dirs):
            lo = hi
            break
        hi /= 2
    if lo == 0.0:
        return 0.0, dirs
    hi = 2 * lo
    for _ in range(refine):
        mid = 0.5 * (lo + hi)
        if mid < 0.5 * min(float(v) for v in iet.lengths) and prefix_preserved(iet, m, mid, dirs):
            lo = mid
        else:
            hi = mid
    return lo, dirs


# ---------------------------------------------------------------------------
# definition files


def load_definition(path: str | Path) -> tuple[Iet, Cocycle | None]:
    """Read an IET definition (JSON) with optional cocycle."""
    data = json.loads(Path(path).read_text())
    return parse_definition(data)


def parse_definition(data: Mapping) -> tuple[Iet, Cocycle | None]:
    allowed = {"alphabet", "top", "bottom", "lengths", "cocycle", "name", "comment"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown keys in IET definition: {sorted(unknown)}")
    top = data["top"]
    top = top.split() if isinstance(top, str) else top
    bottom = data["bottom"]
    bottom = bottom.split() if isinstance(bottom, str) else bottom
    alphabet = data.get("alphabet", top)
    alphabet = alphabet.split() if isinstance(alphabet, str) else alphabet
    iet = new_iet(top, bottom, data["lengths"], alphabet=alphabet)
    cocycle = None
    if "cocycle" in data:
        c = data["cocycle"]
        cocycle = Cocycle.from_values(c["values"])
        if cocycle.d != int(c.get("d", cocycle.d)):
            raise ValueError("cocycle dimension mismatch")
        if set(cocycle.values) != set(iet.alphabet):
            raise ValueError("cocycle must give one vector per letter")
    return iet, cocycle


def definition_dict(iet: Iet, cocycle: Cocycle | None = None) -> dict:
    def fmt(v):
        if isinstance(v, Fraction):
            return f"{v.numerator}/{v.denominator}"
        return str(v) if isinstance(v, Quad) else repr(float(v))
    out = {"alphabet": list(iet.alphabet), "top": list(iet.top), "bottom": list(iet.bottom),
           "lengths": {a: fmt(v) for a, v in zip(iet.alphabet, iet.lengths)}}
    if cocycle is not None:
        out["cocycle"] = {"d": cocycle.d, "values": {a: list(v) for a, v in cocycle.values.items()}}
    return out
