import csv
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import data_path, random_irreducible
from wtd import billiard
from wtd.analysis import (
    DiffusionSeries,
    SeriesKind,
    billiard_sandwich,
    component_max_matches,
    cycle_sums,
    excursion_records,
    fit_exponent,
    geometric_grid,
    iet_cycle_sums,
    lower_bound_check,
    pairing_abs,
    sandwich_check,
    uniform_upper_check,
)
from wtd.errors import GridMismatch, InsufficientData
from wtd.iet import Cocycle, load_definition, new_iet, pairing_blocks, return_cycles


def test_series_validation():
    with pytest.raises(ValueError):
        DiffusionSeries(np.array([1, 1]), np.array([1, 2]), SeriesKind.CYCLE_SUM)
    with pytest.raises(ValueError):
        DiffusionSeries(np.array([1, 2]), np.array([-1, 2]), SeriesKind.PAIRING_ABS)
    with pytest.raises(ValueError):
        DiffusionSeries(np.array([1, 2]), np.array([3, 2]), SeriesKind.CYCLE_SUM)
    assert SeriesKind.parse("cyclesum") is SeriesKind.CYCLE_SUM
    assert SeriesKind.parse("Max_Distance") is SeriesKind.MAX_DISTANCE


def test_geometric_grid():
    g = geometric_grid(1000, 1.05)
    assert g[0] == 1 and g[-1] == 1000
    assert np.all(np.diff(g) >= 1)
    assert np.all(g[1:-1] >= np.floor(g[:-2] * 1.05 - 0.5))


def test_all_ones_cycle_sums_exact():
    it = new_iet("ABCD", "DCBA", [0.1, 0.2, 0.3, 0.4])
    s = iet_cycle_sums(it, 0.05, 100_000, Cocycle.constant(it.alphabet))
    n = s.x.astype(object)
    assert list(s.y) == list(n * (n + 1) // 2)
    fit = fit_exponent(s, (1e3, 1e5))
    assert fit.exponent == pytest.approx(1.0, abs=1e-3)


def test_fit_on_exact_power_law():
    with open(data_path("fixtures", "n_squared.csv")) as fh:
        rows = list(csv.reader(fh))[1:]
    x = np.array([float(r[0]) for r in rows])
    y = np.array([float(r[1]) for r in rows])
    fit = fit_exponent(DiffusionSeries(x, y, SeriesKind.CYCLE_SUM))
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.exponent == pytest.approx(1.0, abs=1e-12)
    assert fit.stderr == pytest.approx(0.0, abs=1e-9)


def test_fit_needs_samples():
    s = DiffusionSeries(np.arange(1, 11), np.arange(1, 11), SeriesKind.PAIRING_ABS)
    with pytest.raises(InsufficientData):
        fit_exponent(s)


def test_fit_bootstrap_is_seeded():
    rng = np.random.default_rng(0)
    x = np.arange(1, 2001, dtype=float)
    y = x ** 0.7 * np.exp(rng.normal(0, 0.1, x.size))
    s = DiffusionSeries(x, y, SeriesKind.MAX_DISTANCE)
    a, b = fit_exponent(s, seed=3), fit_exponent(s, seed=3)
    assert a.as_dict() == b.as_dict()
    assert a.exponent == pytest.approx(0.7, abs=0.02)
    assert 0 < a.stderr < 0.02


def test_half_rotation_cycle_sums():
    h = new_iet("AB", "BA", [Fraction(1, 2), Fraction(1, 2)])
    f = Cocycle.from_values({"A": 1, "B": -1})
    s = cycle_sums(return_cycles(h, Fraction(1, 4), 10, f), grid_ratio=None)
    assert s.y.tolist() == [1, 1, 2, 2, 3, 3, 4, 4, 5, 5]
    p = pairing_abs(return_cycles(h, Fraction(1, 4), 10, f), grid_ratio=None)
    assert p.y.tolist() == [1, 0] * 5


def test_streaming_matches_eager(rng):
    it = random_irreducible(4, rng)
    f = Cocycle.from_values(dict(zip(it.alphabet, [1, -1, 2, -2])))
    eager = [abs(p[0]) for _, _, p in return_cycles(it, 0.2, 3000, f)]
    s = cycle_sums(pairing_blocks(it, 0.2, 3000, f, block=101), grid_ratio=1.1)
    cs = np.cumsum(eager)
    assert s.y.tolist() == cs[s.x - 1].tolist()
    assert s.x[-1] == 3000


def test_excursion_records():
    it = new_iet("ABCD", "DCBA", [0.1, 0.2, 0.3, 0.4])
    rec = excursion_records(pairing_blocks(it, 0.05, 1000, Cocycle.constant(it.alphabet)))
    assert len(rec.n) == 1000 and not rec.sparse
    assert np.all(np.diff(rec.values) > 0)
    zero = excursion_records(pairing_blocks(it, 0.05, 1000, Cocycle.constant(it.alphabet, 0)))
    assert len(zero.n) == 0
    with pytest.raises(InsufficientData):
        excursion_records(pairing_blocks(it, 0.05, 10, Cocycle.constant(it.alphabet)))


def test_uniform_bound_total_count():
    it = new_iet("ABCD", "DCBA", [0.1, 0.2, 0.3, 0.4])
    rep = uniform_upper_check(it, Cocycle.constant(it.alphabet), 5, 2000, 0.01, 1.0)
    assert rep.stabilized and rep.N0 == 2


def test_uniform_bound_self_similar():
    it, f = load_definition(data_path("iets", "genus2_selfsimilar.json"))
    it = it.to_float()
    rep = uniform_upper_check(it, f, 20, 100_000, 0.15, 0.546, seed=1)
    assert rep.stabilized


def test_lower_bound_mechanism():
    it, f = load_definition(data_path("iets", "genus2_selfsimilar.json"))
    it = it.to_float()
    P = np.concatenate([b.pairings for b in pairing_blocks(it, 0.1234, 200_000, f)])
    rep = lower_bound_check(P, 0.546, 0.1, n_starts=300)
    assert rep.checked > 0 and rep.violations == []


def test_component_max_convention(rng):
    it = random_irreducible(4, rng)
    f = Cocycle.from_values({a: [i - 1, 2 - i] for i, a in enumerate(it.alphabet)})
    assert component_max_matches(it, 0.3, 5000, f)


def test_sandwich_on_power_laws():
    t = geometric_grid(10**5, 1.05).astype(float)
    n_at = t.astype(np.int64)
    avg = DiffusionSeries(t, 3.0 * np.sqrt(t), SeriesKind.AVG_DISTANCE)
    n = np.arange(1, 10**5 + 1, dtype=np.int64)
    sums = DiffusionSeries(n, np.cumsum(np.round(np.sqrt(n)).astype(np.int64)), SeriesKind.CYCLE_SUM)
    rep = sandwich_check(avg, sums, n_at)
    assert rep.violations == [] and math.isfinite(rep.A1_hat) and math.isfinite(rep.B1_hat)
    assert rep.A1_hat == pytest.approx(3.0 * 1.5, rel=0.05)
    with pytest.raises(GridMismatch):
        sandwich_check(avg, sums, n_at[:-1])
    with pytest.raises(GridMismatch):
        sandwich_check(avg, avg, n_at)


def test_billiard_sandwich():
    p = billiard.validate_params(0.5, 0.5)
    st = billiard.random_start(p, 0.6, np.random.default_rng(4))
    rep = billiard_sandwich(billiard.advance(st, p, 1e5))
    assert rep.violations == []
    assert math.isfinite(rep.A1_hat) and math.isfinite(rep.B1_hat)
