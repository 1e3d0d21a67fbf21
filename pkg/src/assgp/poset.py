"""Conditions, the extension order, and constructive dense-set witnesses.

A condition is a triple: finite alphabet, depth, and a finite neighbourhood
system of that depth over that alphabet.  Condition q extends p when q's
alphabet and depth dominate p's and every level of q's system restricted to
words over p's alphabet gives back exactly p's level.  The restriction
equality is the expensive half; :func:`is_extension` checks it over a
budgeted enumeration and reports concrete witnesses for any violation.

Witness constructors produce, for each dense-set descriptor, an extending
condition that lands in the set:

* ``A(n)``  — pad with {e} levels up to depth n;
* ``B(S)``  — grow the alphabet by a cyclic fresh-letter enrichment;
* ``C(g)``  — grow the alphabet to cover g, then pad one {e} level, so g is
  exactly excluded from the deepest level;
* ``D(g)``  — adjoin ⟨g0⟩ ∪ ⟨f⟩ for g0 = f·g·f⁻¹ and certify the
  three-factor product g = f⁻¹·g0·f (verified, fallible);
* ``E(n,S,g,h)`` — after B/A preparation, adjoin ⟨g0⟩ for g0 = f·g·f⁻¹·h,
  which places a member of Conj(g)·h in the deepest level.

Fresh-letter counts: with k fresh letters and depth n, a chain of n
conjugations can strip at most n letters off f, so any k > n keeps foreign
words foreign at desk scale; the astronomically safe choice k = 2^(|X|·4^n)
is available as ``paper`` mode and :func:`threshold`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .cancel import ConjSetting, TrivialG, make_setting
from .nbhd import (
    Budget,
    DEFAULT_BUDGET,
    MembershipAnswer,
    Nsys,
    cyclic_alphabet_extension,
    enrich,
    make_base,
    pad_system,
    trivial_system,
    verify_axioms,
)
from .words import E, IdSet, Word, cyclic_member, letters, multiply, power, supported_in


class PosetError(Exception):
    pass


class WitnessFailed(PosetError):
    """A fallible witness strategy could not produce a verified condition."""


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Condition:
    """A poset element: alphabet, depth, and a system over that alphabet."""

    alphabet: IdSet
    depth: int
    system: Nsys

    def __post_init__(self):
        if self.system.alphabet != self.alphabet or self.system.depth != self.depth:
            raise PosetError("condition fields disagree with its system")

    def __repr__(self):
        return f"Condition(|X|={self.alphabet.size}, n={self.depth})"


def initial_condition() -> Condition:
    """⟨{x0}, 1, all-{e}⟩; satisfies the axioms by inspection."""
    alpha = IdSet.of(0)
    return Condition(alpha, 1, trivial_system(alpha, 1))


# ---------------------------------------------------------------------------
# Dense-set descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DescA:
    n: int

    def key(self) -> str:
        return f"A:{self.n}"


@dataclass(frozen=True)
class DescB:
    S: IdSet

    def key(self) -> str:
        return "B:" + ",".join(str(i) for i in self.S)


@dataclass(frozen=True)
class DescC:
    g: Word

    def __post_init__(self):
        if self.g.is_identity():
            raise TrivialG("C descriptors need g != e")

    def key(self) -> str:
        return f"C:{self.g}"


@dataclass(frozen=True)
class DescD:
    g: Word

    def key(self) -> str:
        return f"D:{self.g}"


@dataclass(frozen=True)
class DescAD:
    n: int
    g: Word

    def key(self) -> str:
        return f"AD:{self.n}|{self.g}"


@dataclass(frozen=True)
class DescE:
    n: int
    S: IdSet
    g: Word
    h: Word

    def __post_init__(self):
        if self.g.is_identity():
            raise TrivialG("E descriptors need g != e")

    def key(self) -> str:
        ids = ",".join(str(i) for i in self.S)
        return f"E:{self.n}|{ids}|{self.g}|{self.h}"


DenseDescriptor = "DescA | DescB | DescC | DescD | DescAD | DescE"


# ---------------------------------------------------------------------------
# Extension checking
# ---------------------------------------------------------------------------


@dataclass
class ExtensionReport:
    alphabet_ok: bool
    depth_ok: bool
    containment_mode: str  # "stacked" | "sampled"
    violations: list[tuple[int, str, str]] = field(default_factory=list)
    unknowns: int = 0
    checked: int = 0
    budget_key: tuple = ()
    spot: bool = False

    @property
    def passed(self) -> bool:
        return self.alphabet_ok and self.depth_ok and not self.violations

    def describe(self) -> dict:
        return {
            "alphabet_ok": self.alphabet_ok,
            "depth_ok": self.depth_ok,
            "containment_mode": self.containment_mode,
            "violations": [list(v) for v in self.violations],
            "unknowns": self.unknowns,
            "checked": self.checked,
            "budget": list(self.budget_key),
            "spot": self.spot,
            "passed": self.passed,
        }


def is_extension(q: Condition, p: Condition, budget: Budget = DEFAULT_BUDGET) -> ExtensionReport:
    """Check that q extends p.

    The two structural conditions are exact.  Containment of p's levels is
    structural when q's system is stacked on p's, else sampled.  The
    restriction direction enumerates q's levels within budget, filters words
    supported in p's alphabet, and demands membership in p's level; an exact
    refusal is a violation with a concrete witness word.
    """
    rpt = ExtensionReport(
        alphabet_ok=p.alphabet.issubset(q.alphabet),
        depth_ok=p.depth <= q.depth,
        containment_mode="stacked" if p.system in q.system.ancestors() else "sampled",
        budget_key=budget.key(),
    )
    if not (rpt.alphabet_ok and rpt.depth_ok):
        return rpt

    if rpt.containment_mode == "sampled":
        for i in range(p.depth + 1):
            q_words = q.system.enum_words(i, budget)
            for w, _ in p.system.enumerate(i, budget):
                rpt.checked += 1
                if w in q_words:
                    continue
                ans = q.system.member(i, w, budget)
                if ans.is_no:
                    rpt.violations.append((i, str(w), "level member lost in extension"))
                elif not ans.is_yes:
                    rpt.unknowns += 1

    for i in range(p.depth + 1):
        p_words = p.system.enum_words(i, budget)
        for w, _ in q.system.enumerate(i, budget):
            if not supported_in(w, p.alphabet):
                continue
            rpt.checked += 1
            if w in p_words:
                continue
            ans = p.system.member(i, w, budget)
            if ans.is_no:
                rpt.violations.append((i, str(w), "restriction gains a foreign word"))
            elif not ans.is_yes:
                rpt.unknowns += 1
    return rpt


# ---------------------------------------------------------------------------
# Elementary witnesses
# ---------------------------------------------------------------------------


def pad_levels(p: Condition, n: int) -> Condition:
    """Deepen to depth n with {e} levels (identity when n <= depth)."""
    if n <= p.depth:
        return p
    return Condition(p.alphabet, n, pad_system(p.system, n))


def add_letters(p: Condition, S: IdSet) -> Condition:
    """Grow the alphabet to cover S via the cyclic fresh-letter enrichment."""
    fresh = S.difference(p.alphabet)
    if not fresh:
        return p
    system = cyclic_alphabet_extension(p.system, fresh)
    return Condition(p.alphabet.union(fresh), p.depth, system)


def separate(p: Condition, g: Word) -> Condition:
    """A condition with g in F(X^q) but exactly outside the deepest level."""
    if g.is_identity():
        raise TrivialG("cannot separate the identity")
    q = add_letters(p, letters(g))
    return pad_levels(q, p.depth + 1)


def threshold(size_x: int, n: int) -> int:
    """The fresh-letter count 2^(|X|·4^n) that makes foreign words heavier
    than anything a depth-n system can express over X."""
    if size_x < 1 or n < 1:
        raise ValueError("need size_x >= 1 and n >= 1")
    return 2 ** (size_x * 4**n)


# ---------------------------------------------------------------------------
# Modes and the conjugation witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mode:
    kind: str = "test"  # "test" | "paper"
    k: int = 2

    def __post_init__(self):
        if self.kind not in ("test", "paper"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.kind == "test" and self.k < 2:
            raise ValueError("test mode needs k >= 2")

    def describe(self) -> str:
        return "paper" if self.kind == "paper" else f"test:{self.k}"


def parse_mode(text: str) -> Mode:
    if text == "paper":
        return Mode("paper")
    if text.startswith("test:"):
        return Mode("test", int(text.split(":", 1)[1]))
    raise ValueError(f"mode must be 'paper' or 'test:<k>', got {text!r}")


def safe_k(mode: Mode, p: Condition) -> int:
    """Fresh-letter count for witness steps.

    Paper mode: the threshold guarantee.  Test mode: at least depth+1, since
    depth-many conjugations can strip depth letters off f.
    """
    if mode.kind == "paper":
        return threshold(p.alphabet.size, p.depth)
    return max(mode.k, p.depth + 1)


@dataclass
class ConjExtension:
    condition: Condition
    setting: ConjSetting
    cert: MembershipAnswer
    report: ExtensionReport
    used_k: int
    guaranteed: bool  # k >= threshold, extension backed by the general lemma


def conj_extension(
    p: Condition,
    g: Word,
    h: Word,
    mode: Mode,
    budget: Budget = DEFAULT_BUDGET,
) -> ConjExtension:
    """Adjoin ⟨g0⟩ for g0 = f·g·f⁻¹·h over k fresh letters.

    g0 lands in the deepest level by construction and the certificate is
    attached.  In test mode the extension property is checked over the full
    budgeted enumeration; in paper mode (k at threshold) it is guaranteed and
    only spot-checked with a small budget.
    """
    if g.is_identity():
        raise TrivialG("conjugation witness needs g != e")
    if not supported_in(g, p.alphabet) or not supported_in(h, p.alphabet):
        raise PosetError("g and h must be words over the condition's alphabet")
    k = threshold(p.alphabet.size, p.depth) if mode.kind == "paper" else mode.k
    setting = make_setting(p.alphabet, g, h, k)
    system = enrich(p.system, make_base(cyclic=[setting.g0]), setting.y_alphabet)
    q = Condition(setting.y_alphabet, p.depth, system)
    cert = system.member(q.depth, setting.g0, Budget(nodes=4))
    if not cert.is_yes:
        raise PosetError("g0 failed to certify in its own enrichment")
    guaranteed = k >= threshold(p.alphabet.size, p.depth)
    if mode.kind == "paper":
        report = is_extension(q, p, Budget(leaf_len=4, exp=1, nodes=40))
        report.spot = True
    else:
        report = is_extension(q, p, budget)
    return ConjExtension(q, setting, cert, report, k, guaranteed)


@dataclass
class CycCert:
    """g written as a product of factors, each inside a cyclic subgroup whose
    generator is adjoined at the deepest level of the named condition."""

    target: Word
    factors: tuple[Word, ...]
    gens: tuple[Word, ...]
    exponents: tuple[int, ...]
    level: int

    def describe(self) -> dict:
        return {
            "target": str(self.target),
            "factors": [str(w) for w in self.factors],
            "gens": [str(w) for w in self.gens],
            "exponents": list(self.exponents),
            "level": self.level,
        }


def verify_cyc_cert(cert: CycCert, system: Nsys, budget: Budget = DEFAULT_BUDGET) -> tuple[bool, str]:
    """Re-check a factorization certificate against a system.

    Exact: the factors re-multiply to the target, each factor is the claimed
    power of its generator, and sampled powers of each generator are members
    at the certificate's level (so the whole cyclic subgroup is claimed)."""
    prod = E
    for f in cert.factors:
        prod = multiply(prod, f)
    if prod != cert.target:
        return False, "factors do not multiply to the target"
    for f, c, q in zip(cert.factors, cert.gens, cert.exponents):
        if cyclic_member(f, c) != q:
            return False, f"factor {f} is not {c}^{q}"
        for j in (1, -1, 2):
            ans = system.member(cert.level, power(c, j), budget)
            if not ans.is_yes:
                return False, f"power {c}^{j} not certified at level {cert.level}"
    return True, ""


@dataclass
class CycWitness:
    success: bool
    condition: Optional[Condition]
    cert: Optional[CycCert]
    report: Optional[ExtensionReport]
    reason: str = ""


def cyc_witness(
    p: Condition,
    g: Word,
    mode: Mode,
    budget: Budget = DEFAULT_BUDGET,
    k_override: Optional[int] = None,
) -> CycWitness:
    """Adjoin ⟨g0⟩ ∪ ⟨f⟩ with g0 = f·g·f⁻¹ and certify g = f⁻¹·g0·f.

    Returns success only when the certificate re-verifies and the extension
    report passes at budget; otherwise the failure comes back with the
    report.  Never returns an unverified success.
    """
    if g.is_identity():
        raise TrivialG("cyclic witness needs g != e")
    if not supported_in(g, p.alphabet):
        raise PosetError("g must be a word over the condition's alphabet")
    k = k_override if k_override is not None else safe_k(mode, p)
    setting = make_setting(p.alphabet, g, E, k)
    base = make_base(cyclic=[setting.g0, setting.f])
    system = enrich(p.system, base, setting.y_alphabet)
    q = Condition(setting.y_alphabet, p.depth, system)
    cert = CycCert(
        target=g,
        factors=(setting.f.inverse(), setting.g0, setting.f),
        gens=(setting.f, setting.g0, setting.f),
        exponents=(-1, 1, 1),
        level=q.depth,
    )
    ok, why = verify_cyc_cert(cert, system, budget)
    if not ok:
        return CycWitness(False, None, None, None, f"certificate failed: {why}")
    report = is_extension(q, p, budget)
    if not report.passed:
        return CycWitness(False, None, None, report, "extension report failed")
    return CycWitness(True, q, cert, report, "")


# ---------------------------------------------------------------------------
# Witness dispatch with predicate evaluation
# ---------------------------------------------------------------------------


@dataclass
class WitnessResult:
    descriptor: object
    conditions: list[Condition]  # newly built, shallowest first
    predicate_ok: bool
    certs: dict
    reports: list[ExtensionReport]
    detail: dict = field(default_factory=dict)

    @property
    def final(self) -> Optional[Condition]:
        return self.conditions[-1] if self.conditions else None


def witness(
    p: Condition,
    d,
    mode: Mode = Mode(),
    budget: Budget = DEFAULT_BUDGET,
) -> WitnessResult:
    """Build an extension of p inside the dense set described by d.

    The defining predicate of the set is evaluated directly on the final
    condition, never assumed from the construction.  D-type strategies are
    fallible and raise :class:`WitnessFailed` with the report attached.
    """
    if isinstance(d, DescA):
        q = pad_levels(p, d.n)
        conds = [q] if q is not p else []
        return WitnessResult(d, conds, (q.depth >= d.n), {}, [], {"depth": q.depth})

    if isinstance(d, DescB):
        q = add_letters(p, d.S)
        conds = [q] if q is not p else []
        return WitnessResult(d, conds, d.S.issubset(q.alphabet), {}, [], {})

    if isinstance(d, DescC):
        q = separate(p, d.g)
        ans = q.system.member(q.depth, d.g, budget)
        ok = supported_in(d.g, q.alphabet) and ans.is_no
        return WitnessResult(d, [q], ok, {"excluded_at": q.depth}, [], {})

    if isinstance(d, (DescD, DescAD)):
        conds: list[Condition] = []
        cur = p
        if isinstance(d, DescAD):
            cur = pad_levels(cur, d.n)
            if cur is not p:
                conds.append(cur)
        if d.g.is_identity():
            # e is the empty product; any condition witnesses it
            return WitnessResult(d, conds, True, {"factorization": []}, [], {})
        grown = add_letters(cur, letters(d.g))
        if grown is not cur:
            conds.append(grown)
            cur = grown
        res = cyc_witness(cur, d.g, mode, budget)
        if not res.success:
            raise WitnessFailed(res.reason, res.report)
        conds.append(res.condition)
        ok, _ = verify_cyc_cert(res.cert, res.condition.system, budget)
        if isinstance(d, DescAD):
            ok = ok and res.condition.depth >= d.n
        return WitnessResult(d, conds, ok, {"cyc": res.cert}, [res.report], {})

    if isinstance(d, DescE):
        conds = []
        cur = p
        need = d.S.union(letters(d.g)).union(letters(d.h))
        grown = add_letters(cur, need)
        if grown is not cur:
            conds.append(grown)
            cur = grown
        padded = pad_levels(cur, d.n)
        if padded is not cur:
            conds.append(padded)
            cur = padded
        eff_mode = mode if mode.kind == "paper" else Mode("test", safe_k(mode, cur))
        ext = conj_extension(cur, d.g, d.h, eff_mode, budget)
        conds.append(ext.condition)
        q = ext.condition
        member_ok = ext.cert.is_yes
        witness_word_ok = (
            multiply(
                multiply(multiply(ext.setting.f, d.g), ext.setting.f.inverse()), d.h
            )
            == ext.setting.g0
        )
        ok = d.n <= q.depth and d.S.issubset(q.alphabet) and member_ok and witness_word_ok
        detail = {
            "f": str(ext.setting.f) if ext.used_k <= 64 else f"run of {ext.used_k}",
            "used_k": ext.used_k,
            "guaranteed": ext.guaranteed,
            "threshold_log2_param_n": cur.alphabet.size * 4**d.n,
            "threshold_log2_depth": cur.alphabet.size * 4**cur.depth,
        }
        return WitnessResult(
            d, conds, ok, {"conj": ext, "g0": ext.setting.g0}, [ext.report], detail
        )

    raise PosetError(f"unknown descriptor {d!r}")


def condition_axioms_ok(p: Condition, budget: Budget = DEFAULT_BUDGET) -> bool:
    return verify_axioms(p.system, budget).passed
