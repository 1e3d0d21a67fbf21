import pytest

from assgp import nbhd
from assgp import words as wd
from assgp.nbhd import (
    Budget,
    Conj,
    Leaf,
    cyclic_alphabet_extension,
    enrich,
    enumerate_members,
    eta,
    explicit_system,
    identity_extension,
    letter_bound_check,
    make_base,
    member,
    reduce_rep,
    rep_word,
    trivial_system,
    verify_axioms,
)
from assgp.words import E, IdSet, letters, multiply, power, single

from conftest import W

A = IdSet.of(0)
AB = IdSet.of(0, 1)
a = single(0)
b = single(1)
y = single(24)


class TestTrivial:
    def test_levels_and_identity(self):
        t = trivial_system(A, 1)
        assert t.depth == 1
        for i in (0, 1):
            assert t.member(i, E).is_yes

    def test_depth_three(self):
        t = trivial_system(AB, 3)
        assert [w for w, _ in t.enumerate(2)] == [E]
        assert t.member(3, E).is_yes

    def test_zero_depth_rejected(self):
        with pytest.raises(nbhd.ZeroDepth):
            trivial_system(A, 0)

    def test_non_identity_refuted(self):
        t = trivial_system(A, 1)
        assert t.member(0, a).is_no

    def test_bad_level(self):
        with pytest.raises(nbhd.BadLevel):
            trivial_system(A, 1).member(2, E)


class TestEnrich:
    def test_cyclic_a_enrichment_fixed_point(self):
        # V_1 = <a> and V_0 = <a>: conjugation by a fixes <a>, products stay.
        V = enrich(trivial_system(A, 1), make_base(cyclic=[a]), A)
        for k in (-2, -1, 1, 2, 5):
            assert V.member(1, power(a, k)).is_yes
            assert V.member(0, power(a, k)).is_yes

    def test_identity_base_stays_trivial(self):
        V = identity_extension(trivial_system(A, 1), IdSet.of(24))
        ex = V.exact_levels()
        assert ex is not None
        assert all(set(lv) == {E} for lv in ex)

    def test_foreign_conjugation_enters_lower_level(self):
        # U_1 contains b; adjoining {e} over {a,b,y} pulls y·b·b·y⁻¹ into V_0.
        lv = [{E, b, b.inverse()}, {E, b, b.inverse()}]
        U = explicit_system(AB, lv)
        V = enrich(U, nbhd.IDENTITY_BASE, AB.union(IdSet.of(24)))
        w = multiply(multiply(y, power(b, 2)), y.inverse())
        ans = V.member(0, w)
        assert ans.is_yes
        assert V.verify_rep(0, w, ans.rep) == (True, "")

    def test_asymmetric_base_rejected(self):
        with pytest.raises(nbhd.AsymmetricB):
            make_base(finite=[b])

    def test_ambient_must_contain_alphabet(self):
        with pytest.raises(nbhd.OverlapAlphabet):
            enrich(trivial_system(AB, 1), nbhd.IDENTITY_BASE, A)


class TestCyclicAlphabetExtension:
    def test_fresh_cyclic_level_sets(self):
        V = cyclic_alphabet_extension(trivial_system(A, 1), IdSet.of(24))
        assert V.member(1, power(y, 2)).is_yes
        ans = V.member(0, power(y, 3))
        assert ans.is_yes
        assert V.verify_rep(0, power(y, 3), ans.rep)[0]

    def test_level_one_refutes_a(self):
        V = cyclic_alphabet_extension(trivial_system(A, 1), IdSet.of(24))
        assert V.member(1, a).is_no

    def test_overlap_rejected(self):
        with pytest.raises(nbhd.OverlapAlphabet):
            cyclic_alphabet_extension(trivial_system(A, 1), A)

    def test_unsupported_letters_refuted(self):
        V = cyclic_alphabet_extension(trivial_system(A, 1), IdSet.of(24))
        assert V.member(0, single(7)).is_no


class TestMembership:
    def test_identity_always_yes(self):
        V = cyclic_alphabet_extension(trivial_system(AB, 2), IdSet.of(24))
        for i in range(3):
            assert V.member(i, E).is_yes

    def test_conjugated_square_example(self):
        V = enrich(trivial_system(AB, 1), make_base(cyclic=[b]), AB)
        w = W("a b b a^-1")
        ans = V.member(0, w)
        assert ans.is_yes
        assert rep_word(ans.rep) == w
        assert V.verify_rep(0, w, ans.rep) == (True, "")

    def test_unknown_for_cyclic_refutation(self):
        V = enrich(trivial_system(AB, 1), make_base(cyclic=[b]), AB)
        assert V.member(0, a).verdict == "unknown"

    def test_nesting_shortcut(self):
        # members of deeper levels are members of shallower ones
        V = cyclic_alphabet_extension(trivial_system(A, 3), IdSet.of(24))
        ans1 = V.member(3, y)
        ans0 = V.member(0, y)
        assert ans1.is_yes and ans0.is_yes
        assert V.verify_rep(0, y, ans0.rep)[0]


class TestEnumeration:
    def test_trivial_enumeration(self):
        assert [w for w, _ in trivial_system(A, 1).enumerate(0)] == [E]

    def test_cyclic_enrichment_top_level(self):
        V = enrich(trivial_system(A, 1), make_base(cyclic=[a]), A)
        words = {w for w, _ in V.enumerate(1, Budget(exp=2))}
        assert words == {E, a, a.inverse(), power(a, 2), power(a, -2)}

    def test_fresh_extension_level0_contents(self):
        V = cyclic_alphabet_extension(trivial_system(A, 1), IdSet.of(24))
        got = {w for w, _ in V.enumerate(0, Budget(exp=2, nodes=300))}
        for expect in [
            E,
            y,
            y.inverse(),
            power(y, 2),
            multiply(multiply(a, y), a.inverse()),
            multiply(multiply(a, power(y, 2)), a.inverse()),
        ]:
            assert expect in got

    def test_all_enumerated_certificates_verify(self):
        V = cyclic_alphabet_extension(trivial_system(AB, 2), IdSet.of(24))
        for i in range(3):
            for w, rep in enumerate_members(V, i, Budget(exp=2, nodes=120)):
                assert V.verify_rep(i, w, rep) == (True, "")

    def test_deterministic(self):
        V = cyclic_alphabet_extension(trivial_system(AB, 2), IdSet.of(24))
        V2 = cyclic_alphabet_extension(trivial_system(AB, 2), IdSet.of(24))
        bud = Budget(exp=2, nodes=100)
        assert [str(w) for w, _ in V.enumerate(0, bud)] == [
            str(w) for w, _ in V2.enumerate(0, bud)
        ]

    def test_exact_matches_budgeted_for_finite_base(self):
        lv = [{E, b, b.inverse()}, {E, b, b.inverse()}]
        U = explicit_system(AB, lv)
        V = enrich(U, nbhd.IDENTITY_BASE, AB.union(IdSet.of(24)))
        exact = V.exact_levels()
        assert exact is not None
        for i in (0, 1):
            budgeted = {w for w, _ in V.enumerate(i, Budget(nodes=6000))}
            assert budgeted == set(exact[i])


class TestMonotonicity:
    def test_smaller_base_certificates_carry_over(self):
        U = trivial_system(AB, 2)
        amb = AB.union(IdSet.of(24))
        small = enrich(U, nbhd.IDENTITY_BASE, amb)
        big = enrich(U, make_base(finite=[E, y, y.inverse()]), amb)
        for i in range(3):
            for w, rep in small.enumerate(i, Budget(nodes=80)):
                assert big.verify_rep(i, w, rep) == (True, "")
                assert big.member(i, w, Budget(nodes=200)).is_yes

    def test_fresh_members_supported_in_base_alphabet_are_base_members(self):
        # extension property: V_i ∩ F(X) = U_i, sampled over the enumeration
        U = trivial_system(AB, 2)
        V = cyclic_alphabet_extension(U, IdSet.of(24, 25))
        for i in range(3):
            for w, _ in V.enumerate(i, Budget(exp=2, nodes=200)):
                if wd.supported_in(w, AB):
                    assert U.member(i, w).is_yes, f"level {i}: {w}"


class TestEta:
    def _setting(self):
        f = wd.fresh_run(24, 2)
        g0 = multiply(multiply(f, a), f.inverse())
        return f, g0

    def test_eta_collapses_new_elements(self):
        _, g0 = self._setting()
        B = make_base(cyclic=[g0])
        Bp = nbhd.IDENTITY_BASE
        assert eta(power(g0, 2), B, Bp) == E
        assert eta(a, B, Bp) == a
        assert eta(E, B, Bp) == E

    def test_eta_idempotent(self):
        _, g0 = self._setting()
        B = make_base(cyclic=[g0])
        Bp = nbhd.IDENTITY_BASE
        for w in [E, a, g0, power(g0, -3), multiply(a, b)]:
            once = eta(w, B, Bp)
            assert eta(once, B, Bp) == once

    def test_reduce_rep_leaf(self):
        _, g0 = self._setting()
        U = trivial_system(A, 1)
        V = enrich(U, make_base(cyclic=[g0]), letters(g0).union(A))
        rep = Leaf(1, g0, "extra")
        out, Vp = reduce_rep(rep, V, nbhd.IDENTITY_BASE)
        assert rep_word(out) == E
        assert Vp.verify_rep(1, E, out)[0]

    def test_reduce_rep_conj(self):
        _, g0 = self._setting()
        U = trivial_system(A, 1)
        V = enrich(U, make_base(cyclic=[g0]), letters(g0).union(A))
        rep = Conj(0, a, Leaf(1, g0, "extra"), Leaf(1, g0.inverse(), "extra"))
        w = rep_word(rep)
        assert w == E  # a·g0·g0⁻¹·a⁻¹
        out, Vp = reduce_rep(rep, V, nbhd.IDENTITY_BASE)
        assert rep_word(out) == E
        assert Vp.verify_rep(0, E, out)[0]

    def test_reduce_rep_base_leaf_unchanged(self):
        _, g0 = self._setting()
        lv = [{E, a, a.inverse()}, {E, a, a.inverse()}]
        U = explicit_system(A, lv)
        V = enrich(U, make_base(cyclic=[g0]), letters(g0).union(A))
        inner = U.member(0, a).rep
        rep = Leaf(0, a, "base", inner)
        out, Vp = reduce_rep(rep, V, nbhd.IDENTITY_BASE)
        assert out == rep



class TestLetterBound:
    def test_bound_arithmetic(self):
        assert 2 * 4**2 == 32
        assert 1 * 4**0 == 1

    def test_single_leaf_bound(self):
        rep = Leaf(1, power(y, 5), "extra")
        assert letter_bound_check(rep, 1, 1, 1)

    def test_conj_node_counts_conjugators(self):
        rep = Conj(0, a, Leaf(1, y, "extra"), Leaf(1, E, "extra"))
        # factors: a, y, e, a^-1 -> 1 + 1 + 0 + 1 = 3 <= 1*4
        assert letter_bound_check(rep, 1, 1, 0)

    def test_every_enumerated_certificate_respects_bound(self):
        for base_alpha in (A, AB):
            for n in (1, 2):
                U = trivial_system(base_alpha, n)
                V = cyclic_alphabet_extension(U, IdSet.of(30, 31))
                for i in range(n + 1):
                    for w, rep in V.enumerate(i, Budget(exp=2, nodes=150)):
                        assert letter_bound_check(rep, base_alpha.size, n, i), (
                            f"|X|={base_alpha.size} n={n} i={i} w={w}"
                        )


class TestVerifyAxioms:
    def test_trivial_passes(self):
        assert verify_axioms(trivial_system(A, 2)).passed

    def test_hand_built_symmetry_violation(self):
        bad = explicit_system(A, [{E, a}, {E}])
        rpt = verify_axioms(bad)
        assert not rpt.passed
        sym = [c for c in rpt.checks if c.condition.startswith("(2)") and not c.ok]
        assert sym and "a" in sym[0].witness

    def test_enrichment_of_valid_system_passes(self):
        f = wd.fresh_run(24, 2)
        g0 = multiply(multiply(f, a), f.inverse())
        V = enrich(trivial_system(A, 1), make_base(cyclic=[g0]), letters(g0).union(A))
        assert verify_axioms(V, Budget(exp=2, nodes=120)).passed

    def test_closure_violation_detected_exactly(self):
        # U_1 = {e, b±} but U_0 = {e}: products b·b escape level 0.
        bad = explicit_system(AB, [{E}, {E, b, b.inverse()}])
        rpt = verify_axioms(bad)
        closure = [c for c in rpt.checks if c.condition.startswith("(3)")]
        assert closure and not closure[0].ok


class TestSerialization:
    def test_system_roundtrip(self):
        U = trivial_system(A, 1)
        V = cyclic_alphabet_extension(U, IdSet.of(24))
        W_ = nbhd.PaddedNsys(V, 3)
        layers = nbhd.system_layers(W_)
        rebuilt = nbhd.system_from_layers(layers)
        assert rebuilt.depth == 3
        assert rebuilt.alphabet == W_.alphabet
        assert rebuilt.member(0, power(y, 2)).is_yes

    def test_rep_roundtrip(self):
        V = cyclic_alphabet_extension(trivial_system(A, 1), IdSet.of(24))
        ans = V.member(0, power(y, 3))
        obj = nbhd.rep_to_obj(ans.rep)
        back = nbhd.rep_from_obj(obj)
        assert back == ans.rep
        assert V.verify_rep(0, power(y, 3), back)[0]
