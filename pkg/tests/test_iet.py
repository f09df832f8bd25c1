import json
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import data_path, random_irreducible
from wtd.errors import NonPositiveLength, OutOfRange, Reducible, SingularAt, SingularPoint
from wtd.iet import (
    Cocycle,
    ConnectionAt,
    NoConnectionUpTo,
    apply,
    code_orbit,
    coding_stability_radius,
    cycle_of,
    definition_dict,
    hitting_times,
    keane_check,
    load_definition,
    new_iet,
    pairing_blocks,
    parse_definition,
    return_cycles,
)
from wtd.qfield import Quad


def test_rotation_examples():
    r = new_iet("AB", "BA", [0.3, 0.7])
    assert apply(r, 0.0) == pytest.approx(0.7)
    with pytest.raises(SingularPoint):
        apply(r, 0.3)
    with pytest.raises(OutOfRange):
        apply(r, 1.0)


def test_reducible_and_lengths():
    with pytest.raises(Reducible):
        new_iet("AB", "AB", [0.5, 0.5])
    with pytest.raises(NonPositiveLength):
        new_iet("AB", "BA", [0.5, 0.0])
    new_iet("ABCD", "DCBA", [0.1, 0.2, 0.3, 0.4])


def test_reversal_translation():
    r = new_iet("ABCD", "DCBA", [0.1, 0.2, 0.3, 0.4])
    assert apply(r, 0.05) == pytest.approx(0.95)
    exact = new_iet("ABCD", "DCBA", [Fraction(1, 10), Fraction(2, 10), Fraction(3, 10), Fraction(4, 10)])
    assert apply(exact, Fraction(1, 20)) == Fraction(19, 20)
    # translation = sum of lengths after alpha on top minus sum after alpha on bottom
    for a in exact.alphabet:
        after_top = sum(exact.length(b) for b in exact.top[exact.top.index(a) + 1:])
        after_bot = sum(exact.length(b) for b in exact.bottom[exact.bottom.index(a) + 1:])
        assert exact.translations[exact.index(a)] == after_top - after_bot


def test_half_rotation_coding_and_pairing():
    h = new_iet("AB", "BA", [Fraction(1, 2), Fraction(1, 2)])
    assert code_orbit(h, Fraction(1, 4), 6).letters == tuple("ABABAB")
    assert code_orbit(h, 0, 0).letters == ()
    f = Cocycle.from_values({"A": 1, "B": -1})
    pairs = [p[0] for _, _, p in return_cycles(h, Fraction(1, 4), 8, f)]
    assert pairs == [1, 0, 1, 0, 1, 0, 1, 0]
    assert hitting_times(h, Fraction(1, 4), 10) == {"A": 0, "B": 1}


def test_golden_coding_against_high_precision():
    mpmath.mp.dps = 50
    g = (mpmath.sqrt(5) - 1) / 2
    x, word = mpmath.mpf(0), []
    for _ in range(40):
        if x < 1 - g:
            word.append("A")
            x = x + g
        else:
            word.append("B")
            x = x - (1 - g)
    gf = (5 ** 0.5 - 1) / 2
    it = new_iet("AB", "BA", [1 - gf, gf])
    assert "".join(code_orbit(it, 0.0, 40).letters) == "".join(word)
    ht = hitting_times(it, 0.0, 10)
    assert max(ht.values()) <= 2


def test_golden_word_is_sturmian_fibonacci():
    gf = (5 ** 0.5 - 1) / 2
    it = new_iet("AB", "BA", [1 - gf, gf])
    w = "".join(code_orbit(it, 0.0, 200).letters)
    # Fibonacci word via the substitution B -> BA, A -> B, read after the first letter
    f = "B"
    while len(f) < 300:
        f = "".join("BA" if c == "B" else "B" for c in f)
    assert w[1:] == f[: len(w) - 1]


def test_keane_examples(golden):
    h = new_iet("AB", "BA", [Fraction(1, 2), Fraction(1, 2)])
    res = keane_check(h, 10)
    assert isinstance(res, ConnectionAt) and not res
    assert isinstance(keane_check(golden, 10_000), NoConnectionUpTo)
    rng = np.random.default_rng(4)
    for _ in range(5):
        lam = rng.uniform(0.05, 1, 4)
        assert keane_check(new_iet("ABCD", "DCBA", list(lam)), 1000)


def test_bijective_off_cuts(rng):
    it = random_irreducible(5, rng)
    xs = rng.uniform(0, float(it.total), 10_000)
    ys = np.array([apply(it, x) for x in xs])
    assert len(np.unique(ys)) == len(ys)
    assert np.all((ys >= 0) & (ys < float(it.total)))


def test_shift_conjugacy(rng):
    it = random_irreducible(4, rng, exact=True)
    x = Fraction(1, 3) * it.total
    w = code_orbit(it, x, 51).letters
    assert code_orbit(it, apply(it, x), 50).letters == w[1:]


def test_pairing_bound_and_norm(rng):
    it = random_irreducible(4, rng)
    f = Cocycle.from_values({a: [int(v), int(-v)] for a, v in zip(it.alphabet, [3, -1, 2, 0])})
    for n, counts, p in return_cycles(it, 0.0, 2000, f):
        assert sum(counts.values()) == n
        assert max(abs(v) for v in p) <= n * f.sup_norm()


def test_blocks_match_python_stream(rng):
    it = random_irreducible(4, rng)
    f = Cocycle.from_values(dict(zip(it.alphabet, [1, -2, 0, 5])))
    ref = [p[0] for _, _, p in return_cycles(it, 0.1, 5000, f)]
    got = np.concatenate([b.pairings[:, 0] for b in pairing_blocks(it, 0.1, 5000, f, block=777)])
    assert got.tolist() == ref


def test_singular_orbit_reports_step():
    h = new_iet("AB", "BA", [Fraction(1, 2), Fraction(1, 2)])
    with pytest.raises(SingularAt) as e:
        code_orbit(h, Fraction(1, 2), 3)
    assert e.value.step == 0


def test_coding_stability_finds_radius(rng):
    it = random_irreducible(4, rng)
    assert keane_check(it, 1000)
    delta, _ = coding_stability_radius(it, m=50)
    assert delta > 0


def test_definition_roundtrip(tmp_path):
    it, c = load_definition(data_path("iets", "genus2_reversal.json"))
    d = definition_dict(it, c)
    p = tmp_path / "d.json"
    p.write_text(json.dumps(d))
    it2, c2 = load_definition(p)
    assert it2.lengths == it.lengths and c2 == c
    q, _ = load_definition(data_path("iets", "genus2_selfsimilar.json"))
    assert q.exact and isinstance(q.lengths[0], Quad) and q.total == 1
    with pytest.raises(ValueError):
        parse_definition({**d, "extra": 1})


def test_shipped_definitions_validate():
    import jsonschema

    schema = json.loads(data_path("schemas", "iet_definition.schema.json").read_text())
    for p in data_path("iets").iterdir():
        jsonschema.validate(json.loads(p.read_text()), schema)
        load_definition(p)


# property tests

lengths = st.lists(st.integers(1, 10**6), min_size=4, max_size=4)


@settings(max_examples=40, deadline=None)
@given(lengths, st.integers(0, 400), st.integers(0, 400), st.integers(0, 10**6 - 1))
def test_additive_cocycle_law(raw, n, m, xi):
    it = new_iet("ABCD", "DCBA", [Fraction(v, 10**6) for v in raw])
    x = Fraction(xi, 10**6) * it.total
    try:
        cn = cycle_of(it, x, n)
        y = x
        for _ in range(n):
            y = apply(it, y)
        cm = cycle_of(it, y, m)
        cnm = cycle_of(it, x, n + m)
    except (SingularAt, SingularPoint):
        return
    assert cnm == cn + cm
    assert cnm.norm1 == n + m


@settings(max_examples=30, deadline=None)
@given(lengths, st.integers(1, 300))
def test_counts_and_total_cocycle(raw, n):
    it = new_iet("ABCD", "DCBA", [v / 1e6 for v in raw])
    one = Cocycle.constant(it.alphabet)
    try:
        items = list(return_cycles(it, 0.0, n, one))
    except SingularAt:
        return
    assert all(p[0] == k for k, _, p in items)
