from fractions import Fraction
from importlib.resources import files

import numpy as np
import pytest

from wtd.iet import is_irreducible, new_iet

LETTERS = "ABCDEFGH"


def data_path(*parts):
    return files("wtd").joinpath("data", *parts)


def random_irreducible(k, rng, exact=False, denom=10**6):
    """Random irreducible k-IET; exact lengths are rationals with a common large denominator."""
    top = list(LETTERS[:k])
    while True:
        bot = list(rng.permutation(top))
        if is_irreducible(top, bot):
            break
    if exact:
        raw = rng.integers(1, denom, size=k)
        lengths = [Fraction(int(v), denom) for v in raw]
    else:
        lengths = list(rng.uniform(0.05, 1.0, size=k))
    return new_iet(top, bot, lengths)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def golden():
    g = (5 ** 0.5 - 1) / 2
    return new_iet("AB", "BA", [1 - g, g])
