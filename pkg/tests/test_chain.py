import itertools

import pytest

from assgp import chain as ch
from assgp.chain import (
    ChainState,
    FormatError,
    NotYetSeparated,
    Schedule,
    alphabet_stream,
    deserialize,
    new_chain,
    serialize,
    word_stream,
)
from assgp.nbhd import Budget
from assgp.poset import DescA, DescB, DescC, DescE, Mode, TrivialG, is_extension
from assgp.words import E, IdSet, multiply, parse_word, single

BUD = Budget(leaf_len=6, exp=2, nodes=120)
a, b = single(0), single(1)


def small_chain(preset="full", steps=10, seed=0):
    st = new_chain(preset, Mode("test", 2), BUD, seed)
    st.run(steps)
    return st


class TestEnumerations:
    def test_word_stream_starts_small(self):
        ws = [str(w) for w in itertools.islice(word_stream(), 8)]
        assert ws[0] == "a"
        assert "a^-1" in ws and "b" in ws

    def test_word_stream_no_duplicates(self):
        ws = list(itertools.islice(word_stream(), 300))
        assert len(ws) == len(set(ws))

    def test_word_stream_identity_flag(self):
        assert next(word_stream(include_identity=True)) == E

    def test_alphabet_stream_unique_and_fair(self):
        sets = list(itertools.islice(alphabet_stream(), 60))
        keys = [s.intervals for s in sets]
        assert len(keys) == len(set(keys))
        assert IdSet.of(0).intervals in keys
        assert IdSet.of(0, 1).intervals in keys

    def test_schedule_fair_round_robin(self):
        sched = Schedule("full", 0)
        fams = [sched.descriptor(i).key().split(":")[0] for i in range(10)]
        assert fams == ["A", "B", "C", "AD", "E", "A", "B", "C", "AD", "E"]

    def test_schedule_seed_rotates(self):
        s0 = Schedule("full", 0).descriptor(0).key()
        s1 = Schedule("full", 1).descriptor(0).key()
        assert s0 != s1

    def test_bad_preset(self):
        with pytest.raises(ch.ChainError):
            Schedule("nope", 0)

    def test_full_refines_other_presets(self):
        full = Schedule("full", 0)
        for preset in ("t2", "assgp", "simple"):
            sub = Schedule(preset, 0)
            for i in range(6):
                key = sub.descriptor(i).key()
                assert full.first_stage_of(key, 600) is not None, key


class TestChainBuild:
    def test_t2_ten_steps(self):
        st = small_chain("t2", 10)
        assert st.stage == 10
        assert all(e["status"] == "ok" for e in st.step_log)
        assert all(r["passed"] for e in st.step_log for r in e["reports"])

    def test_zero_steps_is_initial(self):
        st = new_chain("t2", Mode("test", 2), BUD, 0)
        assert len(st.chain) == 1 and st.chain[0].depth == 1

    def test_depth_grows_with_A(self):
        st = new_chain("t2", Mode("test", 2), BUD, 0)
        target = DescA(2)
        st._apply_witness(target, BUD, "targeted")
        assert st.chain[-1].depth >= 2

    def test_consecutive_extensions_hold(self):
        st = small_chain("full", 12)
        for p, q in zip(st.chain, st.chain[1:]):
            assert is_extension(q, p, BUD).passed

    def test_depths_monotone(self):
        st = small_chain("full", 15)
        depths = [c.depth for c in st.chain]
        assert depths == sorted(depths)

    def test_predicates_all_hold(self):
        st = small_chain("full", 15)
        assert all(e["predicate_ok"] for e in st.step_log if e["status"] == "ok")


class TestBasisMember:
    def test_identity_always_yes(self):
        st = small_chain("t2", 4)
        for n in (0, 1, 2):
            if any(c.depth >= n for c in st.chain):
                assert st.basis_member(n, E).is_yes

    def test_fresh_chain_refutes(self):
        st = new_chain("t2", Mode("test", 2), BUD, 0)
        assert st.basis_member(1, a).is_no

    def test_e_witness_membership(self):
        st = small_chain("full", 5)
        rec = st.conj_density_witness(a, b, 1)
        assert st.basis_member(1, rec["witness"]).is_yes

    def test_monotone_in_stage(self):
        st = small_chain("full", 5)
        rec = st.conj_density_witness(a, b, 1)
        w = rec["witness"]
        assert st.basis_member(1, w).is_yes
        st.run(8)
        assert st.basis_member(1, w).is_yes

    def test_view(self):
        st = small_chain("t2", 4)
        assert st.basis_view(1).member(E).is_yes


class TestSeparation:
    def test_after_C_stage(self):
        st = small_chain("t2", 6)
        stage, level = st.separation_index(a)
        assert st.chain[stage].system.member(level, a).is_no

    def test_identity_rejected(self):
        st = small_chain("t2", 3)
        with pytest.raises(TrivialG):
            st.separation_index(E)

    def test_not_yet_separated(self):
        st = new_chain("t2", Mode("test", 2), BUD, 0)
        with pytest.raises(NotYetSeparated):
            st.separation_index(single(5))


class TestConjDensity:
    def test_witness_certified(self):
        st = small_chain("full", 5)
        rec = st.conj_density_witness(a, b, 1)
        f = rec["f"]
        expected = multiply(multiply(multiply(f, a), f.inverse()), b.inverse())
        assert expected == rec["witness"]
        assert rec["basis"].is_yes

    def test_cached_deterministic(self):
        st = small_chain("full", 5)
        r1 = st.conj_density_witness(a, b, 1)
        n_chain = len(st.chain)
        r2 = st.conj_density_witness(a, b, 1)
        assert r1["f"] == r2["f"]
        assert len(st.chain) == n_chain  # no new conditions for a cached query

    def test_identity_h(self):
        st = small_chain("full", 5)
        rec = st.conj_density_witness(a, E, 2)
        f = rec["f"]
        assert rec["witness"] == multiply(multiply(f, a), f.inverse())

    def test_trivial_g_rejected(self):
        st = small_chain("full", 3)
        with pytest.raises(TrivialG):
            st.conj_density_witness(E, b, 1)


class TestAssgpCertificate:
    def test_single_letter(self):
        st = small_chain("full", 5)
        cert = st.assgp_certificate(1, a)
        prod = E
        for f in cert.factors:
            prod = multiply(prod, f)
        assert prod == a
        assert len(cert.factors) == 3

    def test_identity_empty(self):
        st = small_chain("full", 3)
        assert st.assgp_certificate(1, E).factors == ()

    def test_length_two_word(self):
        st = small_chain("full", 5)
        g = parse_word("a b^-1")
        cert = st.assgp_certificate(1, g)
        prod = E
        for f in cert.factors:
            prod = multiply(prod, f)
        assert prod == g


class TestGroupAxioms:
    def test_trivial_chain_vacuous_pass(self):
        st = new_chain("t2", Mode("test", 2), BUD, 0)
        rpt = st.check_group_axioms(samples=2)
        assert rpt["passed"]

    def test_built_chain_passes(self):
        st = small_chain("full", 10)
        rpt = st.check_group_axioms(Budget(leaf_len=6, exp=2, nodes=100), samples=3)
        assert rpt["passed"], [e for e in rpt["entries"] if not e["ok"]][:3]
        kinds = {e["kind"] for e in rpt["entries"]}
        assert {"product", "symmetry", "conjugation"} <= kinds


class TestSerialization:
    def test_round_trip_identity(self):
        st = small_chain("full", 10)
        blob = serialize(st)
        st2 = deserialize(blob)
        assert serialize(st2) == blob
        assert len(st2.chain) == len(st.chain)

    def test_deterministic_rebuild(self):
        st1 = small_chain("full", 12, seed=3)
        st2 = small_chain("full", 12, seed=3)
        assert serialize(st1) == serialize(st2)

    def test_seed_changes_bytes(self):
        assert serialize(small_chain("t2", 6, seed=1)) != serialize(
            small_chain("t2", 6, seed=2)
        )

    def test_corrupt_data_raises(self):
        with pytest.raises(FormatError):
            deserialize(b"not json at all {")
        with pytest.raises(FormatError):
            deserialize(b'{"format":"other"}')
        with pytest.raises(FormatError):
            deserialize(b'{"format":"assgp-chain","version":99}')

    def test_certificates_reverify_after_load(self):
        st = small_chain("full", 10)
        st.conj_density_witness(a, b, 1)
        st2 = deserialize(serialize(st))
        assert st2.verify_certificates() == []

    def test_resumed_chain_continues_deterministically(self):
        st = small_chain("full", 8, seed=5)
        resumed = deserialize(serialize(st))
        st.run(4)
        resumed.run(4)
        assert serialize(st) == serialize(resumed)
