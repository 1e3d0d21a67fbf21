"""Foreign-word cancellation machinery, verified on concrete instances.

Fix an alphabet X, words g ≠ e and h in F(X), and k fresh generators
y_1, ..., y_k outside X.  With f = y_1·...·y_k the special word is

    g0 = f * g * f⁻¹ * h        (pure concatenation, always reduced).

The central phenomenon: in any product w_1·v_1·w_2·...·w_n·v_n·w_{n+1} whose
v_i are copies of g0 or g0⁻¹ and whose w_i all avoid some fresh letter
y_{j0}, either the product keeps a visible y_{j0} (when the v-signs all
agree) or, if the product lands back in F(X), the v's cancel so completely
that the product equals w_1·w_2·...·w_{n+1} with every v_i deleted.

This module makes those statements executable: a constructive same-sign
decomposition, the collapse equality, the η-invariance of factor sequences
through ⟨g0⟩, and a seeded generator of valid instances for bulk checking.
Everything is re-verified against direct reduced multiplication.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .words import (
    E,
    IdSet,
    Word,
    cyclic_member,
    fresh_run,
    is_concatenation,
    junction_cancels,
    letters,
    multiply,
    power,
    split_at,
    supported_in,
    word_key,
)


class CancelError(Exception):
    pass


class TrivialG(CancelError):
    pass


class SignMismatch(CancelError):
    pass


class DecompositionFailed(CancelError):
    """The constructive decomposition failed re-verification (must not happen)."""


class HypothesisViolated(CancelError):
    pass


class PreconditionViolated(CancelError):
    def __init__(self, index: int, why: str):
        super().__init__(f"element {index}: {why}")
        self.index = index
        self.why = why


# ---------------------------------------------------------------------------
# The setting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConjSetting:
    """The data (X, Y, g, h, k) together with f and g0."""

    x_alphabet: IdSet
    y_alphabet: IdSet
    g: Word
    h: Word
    k: int
    fresh_start: int
    f: Word
    g0: Word

    def y_letter_id(self, j: int) -> int:
        """Generator id of y_j (1-based j)."""
        if not 1 <= j <= self.k:
            raise ValueError(f"j must be in 1..{self.k}")
        return self.fresh_start + j - 1

    def f_sub(self, j0: int) -> Word:
        """The tail y_{j0}·...·y_k of f."""
        if not 1 <= j0 <= self.k:
            raise ValueError(f"j0 must be in 1..{self.k}")
        return fresh_run(self.fresh_start + j0 - 1, self.k - j0 + 1)

    def v(self, sign: int) -> Word:
        return self.g0 if sign == 1 else self.g0.inverse()


def make_setting(
    x_alphabet: IdSet,
    g: Word,
    h: Word,
    k: int,
    fresh_start: Optional[int] = None,
) -> ConjSetting:
    """Allocate k fresh letters and build f and g0 = f*g*f⁻¹*h.

    g0 is reduced of length exactly 2k + |g| + |h|; with run compression it
    occupies O(1) segments however large k is.
    """
    if g.is_identity():
        raise TrivialG("g must be non-trivial")
    if k < 1:
        raise ValueError("need at least one fresh letter")
    if not supported_in(g, x_alphabet) or not supported_in(h, x_alphabet):
        raise CancelError("g and h must be words over the base alphabet")
    if fresh_start is None:
        fresh_start = x_alphabet.max_id + 1
    fresh = IdSet.from_range(fresh_start, fresh_start + k - 1)
    if not fresh.isdisjoint(x_alphabet):
        raise CancelError("fresh letters overlap the base alphabet")
    f = fresh_run(fresh_start, k)
    g0 = multiply(multiply(multiply(f, g), f.inverse()), h)
    assert g0.length == 2 * k + g.length + h.length
    return ConjSetting(
        x_alphabet, x_alphabet.union(fresh), g, h, k, fresh_start, f, g0
    )


# ---------------------------------------------------------------------------
# Hypothesis instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypInstance:
    """A product shape w_1·v_1·...·w_n·v_n·w_{n+1} with v_i = g0^{±1}.

    Structural invariants checked at construction: the fresh letter y_{j0}
    appears in no w_i, and signs are ±1.  Whether the product lands in F(X)
    is the business of :func:`check_hypothesis`.
    """

    setting: ConjSetting
    ws: tuple[Word, ...]
    signs: tuple[int, ...]
    j0: int = 1

    def __post_init__(self):
        if len(self.ws) != len(self.signs) + 1:
            raise CancelError("need exactly n+1 separator words for n special factors")
        if any(s not in (1, -1) for s in self.signs):
            raise CancelError("signs must be ±1")
        yid = self.setting.y_letter_id(self.j0)
        for i, w in enumerate(self.ws):
            if yid in letters(w):
                raise CancelError(f"w_{i + 1} contains the reserved fresh letter y_{self.j0}")
            if not supported_in(w, self.setting.y_alphabet):
                raise CancelError(f"w_{i + 1} leaves the ambient alphabet")

    @property
    def n(self) -> int:
        return len(self.signs)


def build_hstar(inst: HypInstance) -> Word:
    """The reduced product of the instance."""
    acc = E
    for w, s in zip(inst.ws, inst.signs):
        acc = multiply(acc, w)
        acc = multiply(acc, inst.setting.v(s))
    return multiply(acc, inst.ws[-1])


def check_hypothesis(inst: HypInstance) -> bool:
    """Condition (iii): does the product land in F(X)?"""
    return supported_in(build_hstar(inst), inst.setting.x_alphabet)


def separator_product(inst: HypInstance) -> Word:
    """w_1·w_2·...·w_{n+1}: the product with every v_i deleted."""
    acc = E
    for w in inst.ws:
        acc = multiply(acc, w)
    return acc


# ---------------------------------------------------------------------------
# Same-sign decomposition
# ---------------------------------------------------------------------------


@dataclass
class Decomposition:
    """w_1·v_1·...·w_N·v_N written as w1p * fp * f_{j0} * a * f⁻¹ * h."""

    w1p: Word
    fp: Word
    a: Word
    prefix_product: Word
    pieces: list[Word]
    start_end_checked: int  # exponent range sampled for the g^l·a·g^k property


def same_sign_decompose(inst: HypInstance, N: int, sample_exp: int = 4) -> Decomposition:
    """Constructive form of the all-positive prefix product.

    Requires signs_1..signs_N = +1.  Produces the pure-concatenation
    factorization and re-verifies: the five junctions are cancellation-free,
    the factors multiply back to the directly reduced prefix product, a ≠ e,
    and sampled words g^l·a·g^k are non-trivial and share g's first and last
    letters.  Failure of any re-check raises :class:`DecompositionFailed`.
    """
    st = inst.setting
    if not 1 <= N <= inst.n:
        raise CancelError(f"N must be in 1..{inst.n}")
    if any(s != 1 for s in inst.signs[:N]):
        raise SignMismatch("decomposition needs an all-positive prefix")

    f, g, h = st.f, st.g, st.h
    f_j0 = st.f_sub(inst.j0)

    # Base case: w_1·f cancels at most the first j0-1 letters of f.
    j = junction_cancels(inst.ws[0], f)
    if j > inst.j0 - 1:
        raise DecompositionFailed("cancellation into f reached the reserved letter")
    w1p, _ = split_at(inst.ws[0], inst.ws[0].length - j)
    fp = fresh_run(st.fresh_start + j, inst.j0 - 1 - j) if inst.j0 - 1 - j >= 1 else E
    a = g
    for t in range(1, N):
        # a ← reduced bracket a·f⁻¹·h·w_{t+1}·f·g; the surrounding pieces of
        # the factorization are unchanged.
        a = multiply(a, f.inverse())
        a = multiply(a, h)
        a = multiply(a, inst.ws[t])
        a = multiply(a, f)
        a = multiply(a, g)

    pieces = [w1p, fp, f_j0, a, f.inverse(), h]
    prefix = E
    for w, s in zip(inst.ws[:N], inst.signs[:N]):
        prefix = multiply(multiply(prefix, w), st.v(s))

    if a.is_identity():
        raise DecompositionFailed("middle factor collapsed to e")
    for left, right in zip(pieces, pieces[1:]):
        if not is_concatenation(left, right):
            raise DecompositionFailed(f"junction {left} | {right} cancels")
    prod = E
    for p in pieces:
        prod = multiply(prod, p)
    if prod != prefix:
        raise DecompositionFailed("factorization does not re-multiply to the prefix")
    if a.first != g.first or a.last != g.last:
        raise DecompositionFailed("middle factor does not share g's boundary letters")
    for l in range(0, sample_exp + 1):
        for r in range(0, sample_exp + 1):
            w = multiply(multiply(power(g, l), a), power(g, r))
            if w.first != g.first or w.last != g.last:
                raise DecompositionFailed(f"g^{l}·a·g^{r} loses g's boundary letters")
            if l > 1 and r > 1 and w.is_identity():
                raise DecompositionFailed(f"g^{l}·a·g^{r} is trivial")
    return Decomposition(w1p, fp, a, prefix, pieces, sample_exp)


@dataclass
class SameSignReport:
    ok: bool
    sign: int
    N: int
    j0: int
    product: Word
    y_j0_present: bool
    decomposition: Optional[Decomposition]

    def describe(self) -> dict:
        return {
            "ok": self.ok,
            "sign": self.sign,
            "N": self.N,
            "j0": self.j0,
            "product": str(self.product),
            "y_j0_present": self.y_j0_present,
        }


def same_sign_not_in_FX(inst: HypInstance, N: Optional[int] = None) -> SameSignReport:
    """All-equal-sign prefixes keep the reserved fresh letter visible.

    Verifies y_{j0} ∈ lett(w_1·v_1·...·w_N·v_N·w_{N+1}); the negative-sign
    case is routed through the re-indexed setting (g⁻¹, e) whose instance is
    all-positive.
    """
    st = inst.setting
    if N is None:
        N = inst.n
    if N < 1:
        raise CancelError("need at least one special factor")
    signs = set(inst.signs[:N])
    if len(signs) != 1:
        raise SignMismatch("prefix signs are not all equal")
    sign = signs.pop()

    prefix = E
    for w, s in zip(inst.ws[:N], inst.signs[:N]):
        prefix = multiply(multiply(prefix, w), st.v(s))
    product = multiply(prefix, inst.ws[N])

    if sign == 1:
        decomp = same_sign_decompose(inst, N)
    else:
        # ĝ0 = f·g⁻¹·f⁻¹ arises from the setting (X, g⁻¹, e, k); the shifted
        # separators ŵ_i = w_i·h⁻¹ stay y_{j0}-free because h ∈ F(X).
        hat_setting = make_setting(st.x_alphabet, st.g.inverse(), E, st.k, st.fresh_start)
        hat_ws = tuple(multiply(w, st.h.inverse()) for w in inst.ws[:N]) + (inst.ws[N],)
        hat = HypInstance(hat_setting, hat_ws, (1,) * N, inst.j0)
        hat_prefix = E
        for w in hat_ws[:N]:
            hat_prefix = multiply(multiply(hat_prefix, w), hat_setting.g0)
        if hat_prefix != prefix:
            raise DecompositionFailed("re-indexed prefix differs from the original")
        decomp = same_sign_decompose(hat, N)

    present = st.y_letter_id(inst.j0) in letters(product)
    return SameSignReport(present, sign, N, inst.j0, product, present, decomp)


# ---------------------------------------------------------------------------
# Collapse and η-invariance
# ---------------------------------------------------------------------------


@dataclass
class CollapseReport:
    ok: bool
    hstar: Word
    wstar: Word

    def describe(self) -> dict:
        return {"ok": self.ok, "hstar": str(self.hstar), "wstar": str(self.wstar)}


def collapse_check(inst: HypInstance) -> CollapseReport:
    """h* equals the separator product once the hypothesis holds."""
    hstar = build_hstar(inst)
    if not supported_in(hstar, inst.setting.x_alphabet):
        raise HypothesisViolated("the product does not land in F(X)")
    wstar = separator_product(inst)
    return CollapseReport(hstar == wstar, hstar, wstar)


@dataclass
class EtaReport:
    ok: bool
    lhs: Word
    rhs: Word
    L: list[int]  # 1-based indices of factors inside ⟨g0⟩ \ {e}
    exponents: list[Optional[int]]
    deltas: list[int]

    def describe(self) -> dict:
        return {
            "ok": self.ok,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "L": self.L,
            "exponents": self.exponents,
            "deltas": self.deltas,
        }


def eta_invariance_check(seq: list[Word], setting: ConjSetting, j0: int = 1) -> EtaReport:
    """∏ a_l = ∏ η(a_l) where η deletes the non-trivial powers of g0.

    Preconditions, checked exactly: the product lies in F(X), and each factor
    contains y_{j0} exactly when it is a non-trivial power of g0.
    """
    yid = setting.y_letter_id(j0)
    exponents: list[Optional[int]] = []
    deltas: list[int] = []
    L: list[int] = []
    for idx, a in enumerate(seq):
        q = cyclic_member(a, setting.g0)
        in_group = q is not None and q != 0
        has_y = yid in letters(a)
        if has_y != in_group:
            raise PreconditionViolated(
                idx, "y_{j0} occurrence does not match membership in ⟨g0⟩ \\ {e}"
            )
        exponents.append(q)
        deltas.append(0 if not in_group else (1 if q > 0 else -1))
        if in_group:
            L.append(idx + 1)

    lhs = E
    for a_ in seq:
        lhs = multiply(lhs, a_)
    if not supported_in(lhs, setting.x_alphabet):
        raise PreconditionViolated(-1, "the full product does not land in F(X)")
    rhs = E
    for a_, q in zip(seq, exponents):
        rhs = multiply(rhs, E if (q is not None and q != 0) else a_)
    return EtaReport(lhs == rhs, lhs, rhs, L, exponents, deltas)


# ---------------------------------------------------------------------------
# Instance generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenParams:
    x_ids: tuple[int, ...] = (0, 1)
    k: int = 2
    n_pairs_max: int = 3
    max_word_len: int = 6
    fresh_prob: float = 0.35
    sample_j0: bool = False
    fresh_start: Optional[int] = None


def _rand_reduced(rng: random.Random, ids: list[int], max_len: int) -> Word:
    n = rng.randint(0, max_len)
    out: list[int] = []
    for _ in range(n):
        l = rng.choice(ids) * rng.choice((1, -1))
        if out and out[-1] == -l:
            continue
        out.append(l)
    from .words import reduce as _reduce

    return _reduce(out)


def _rand_forest(rng: random.Random, n_pairs: int) -> list:
    """Random nesting structure: a forest of (orientation, children) nodes."""

    def grow(budget: list[int]) -> list:
        children = []
        while budget[0] > 0 and rng.random() < 0.6:
            budget[0] -= 1
            orient = rng.choice((1, -1))
            children.append((orient, grow(budget)))
        return children

    budget = [n_pairs]
    forest = grow(budget)
    while budget[0] > 0:  # ensure the full pair count is used
        budget[0] -= 1
        forest.append((rng.choice((1, -1)), grow(budget)))
    return forest


def gen_instances(seed: int, params: GenParams = GenParams()) -> Iterator[HypInstance]:
    """Seeded stream of instances satisfying the full hypothesis.

    The v-signs form balanced nesting; inside every matched pair the direct
    separator words multiply to e (the last one is forced to the inverse of
    its siblings' product), which makes the whole product collapse into the
    top-level separators and hence into F(X).  Separators inside forced
    regions may use the non-reserved fresh letters; top-level separators are
    drawn from F(X).  Every instance is validated before it is yielded.
    """
    rng = random.Random(seed)
    while True:
        yield _gen_one(rng, params)


def _gen_one(rng: random.Random, params: GenParams) -> HypInstance:
    st = _setting_for(rng, params)
    j0 = rng.randint(1, params.k) if params.sample_j0 else 1
    n_pairs = rng.randint(0, params.n_pairs_max)
    forest = _rand_forest(rng, n_pairs)

    signs: list[int] = []
    regions: list[list[int]] = []

    def walk(children) -> list[int]:
        slots = []
        for orient, grandkids in children:
            slots.append(len(signs) + 1)
            signs.append(orient)
            regions.append(walk(grandkids))
            signs.append(-orient)
        slots.append(len(signs) + 1)
        return slots

    top_slots = walk(forest)
    n = len(signs)

    x_ids = [g + 1 for g in params.x_ids]
    mixed_ids = list(x_ids)
    for j in range(1, min(params.k, 4) + 1):
        if j != j0:
            mixed_ids.append(st.y_letter_id(j) + 1)

    ws: list[Word] = [E] * (n + 1)
    for slot in top_slots:
        ws[slot - 1] = _rand_reduced(rng, x_ids, params.max_word_len)
    for slots in regions:
        free, forced = slots[:-1], slots[-1]
        acc = E
        for slot in free:
            pool = mixed_ids if rng.random() < params.fresh_prob else x_ids
            w = _rand_reduced(rng, pool, params.max_word_len)
            ws[slot - 1] = w
            acc = multiply(acc, w)
        ws[forced - 1] = acc.inverse()

    inst = HypInstance(st, tuple(ws), tuple(signs), j0)
    if not check_hypothesis(inst):
        raise AssertionError("generated instance violates the hypothesis")
    return inst


def _setting_for(rng: random.Random, params: GenParams) -> ConjSetting:
    x_alpha = IdSet.from_ids(params.x_ids)
    x_pool = [g + 1 for g in params.x_ids]
    g = _rand_reduced(rng, x_pool, params.max_word_len)
    while g.is_identity():
        g = _rand_reduced(rng, x_pool, max(1, params.max_word_len))
    h = _rand_reduced(rng, x_pool, params.max_word_len)
    return make_setting(x_alpha, g, h, params.k, params.fresh_start)


def gen_same_sign(seed: int, params: GenParams = GenParams()) -> Iterator[HypInstance]:
    """Seeded stream of all-equal-sign instances (free separators).

    These deliberately do not satisfy condition (iii): the point is that the
    reserved fresh letter survives in the product.
    """
    rng = random.Random(seed)
    while True:
        st = _setting_for(rng, params)
        j0 = rng.randint(1, params.k) if params.sample_j0 else 1
        n = rng.randint(1, max(1, 2 * params.n_pairs_max))
        sign = rng.choice((1, -1))
        x_ids = [g + 1 for g in params.x_ids]
        mixed = list(x_ids)
        for j in range(1, min(params.k, 4) + 1):
            if j != j0:
                mixed.append(st.y_letter_id(j) + 1)
        ws = []
        for _ in range(n + 1):
            pool = mixed if rng.random() < params.fresh_prob else x_ids
            ws.append(_rand_reduced(rng, pool, params.max_word_len))
        yield HypInstance(st, tuple(ws), (sign,) * n, j0)
