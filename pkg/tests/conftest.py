import random

import pytest

from assgp import words as wd


def naive_reduce(letters):
    """Stack reduction over explicit letters; the test oracle for reduce."""
    out = []
    for l in letters:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return out


def naive_mul(a_letters, b_letters):
    return naive_reduce(list(a_letters) + list(b_letters))


def rand_word(rng: random.Random, ids, max_len: int) -> wd.Word:
    """Random reduced word over the given generator ids."""
    ids = list(ids)
    n = rng.randint(0, max_len)
    out = []
    for _ in range(n):
        choices = [s * (g + 1) for g in ids for s in (1, -1)]
        if out:
            choices = [l for l in choices if l != -out[-1]]
        out.append(rng.choice(choices))
    return wd.reduce(out)


def rand_nonempty_word(rng, ids, max_len):
    while True:
        w = rand_word(rng, ids, max_len)
        if not w.is_identity():
            return w


@pytest.fixture
def rng():
    return random.Random(0xA55)


W = wd.parse_word
