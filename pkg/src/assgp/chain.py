"""Decreasing chains of conditions meeting scheduled dense sets.

A chain starts at the one-letter depth-1 condition and repeatedly extends its
last element through the witness constructors, following a fair schedule over
a preset's countable descriptor families:

* ``t2``      — pad / grow-alphabet / separate          (Hausdorff basics)
* ``assgp``   — separate + (pad ∩ cyclic-factorization) + grow-alphabet
* ``simple``  — t2 plus conjugation witnesses
* ``full``    — union of all families

Every family is enumerated by a deterministic diagonal (words ordered by
length then letters, alphabets by max-id then size), and the families are
interleaved round-robin with a seed-dependent rotation, so every descriptor
appears at a finite, reproducible stage.

The union of level n over all chain conditions deep enough is the chain's
n-th identity neighbourhood; ``basis_member`` queries it with certificates.
The topology-level queries (separation, conjugacy density, cyclic-subgroup
factorizations, the group-axiom sample checks) all answer with stage-indexed
certificates that re-verify independently of the chain that produced them.

States serialize to a canonical JSON container: identical configurations
produce byte-identical files.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import nbhd
from .nbhd import (
    Budget,
    Conj,
    DEFAULT_BUDGET,
    Leaf,
    MembershipAnswer,
    invert_rep,
    rep_from_obj,
    rep_to_obj,
    rep_word,
    system_from_layers,
    system_layers,
    transport_rep,
)
from .poset import (
    Condition,
    CycCert,
    DescA,
    DescAD,
    DescB,
    DescC,
    DescD,
    DescE,
    ExtensionReport,
    Mode,
    TrivialG,
    WitnessFailed,
    initial_condition,
    is_extension,
    parse_mode,
    verify_cyc_cert,
    witness,
)
from .words import E, IdSet, Word, letters, multiply, parse_word, single, supported_in

FORMAT_NAME = "assgp-chain"
FORMAT_VERSION = 1

PRESETS = ("t2", "assgp", "simple", "full")


class ChainError(Exception):
    pass


class NotYetSeparated(ChainError):
    """No chain stage excludes the queried word yet; step further."""


class FormatError(ChainError):
    pass


# ---------------------------------------------------------------------------
# Deterministic enumeration of descriptor families
# ---------------------------------------------------------------------------


def _reduced_tuples(length: int, max_id: int) -> Iterator[tuple[int, ...]]:
    """Reduced letter tuples of given length over ids 0..max_id that actually
    use max_id, in lexicographic order (letter order +0, -0, +1, -1, ...)."""
    alphabet = []
    for g in range(max_id + 1):
        alphabet.append(g + 1)
        alphabet.append(-(g + 1))

    def rec(prefix: list[int], used_max: bool):
        if len(prefix) == length:
            if used_max:
                yield tuple(prefix)
            return
        for l in alphabet:
            if prefix and prefix[-1] == -l:
                continue
            if length - len(prefix) == 1 and not used_max and abs(l) - 1 != max_id:
                continue
            prefix.append(l)
            yield from rec(prefix, used_max or abs(l) - 1 == max_id)
            prefix.pop()

    yield from rec([], max_id == 0)


def word_stream(include_identity: bool = False) -> Iterator[Word]:
    """All reduced words, each exactly once, by length + max-id rank."""
    from .words import reduce as _reduce

    if include_identity:
        yield E
    rank = 1
    while True:
        for max_id in range(rank):
            length = rank - max_id
            for tup in _reduced_tuples(length, max_id):
                yield _reduce(tup)
        rank += 1


def alphabet_stream(include_empty: bool = False) -> Iterator[IdSet]:
    """All finite id sets, each once, by max-id + size rank."""
    if include_empty:
        yield IdSet.empty()
    rank = 1
    while True:
        for max_id in range(rank):
            size = rank - max_id
            if size > max_id + 1:
                continue
            for rest in itertools.combinations(range(max_id), size - 1):
                yield IdSet.from_ids(rest + (max_id,))
        rank += 1


class _Indexed:
    """Lazily indexable view of an infinite generator."""

    def __init__(self, gen):
        self._gen = gen
        self._cache: list = []

    def __getitem__(self, i: int):
        while len(self._cache) <= i:
            self._cache.append(next(self._gen))
        return self._cache[i]


def _diagonal_pairs() -> Iterator[tuple[int, int]]:
    for total in itertools.count(0):
        for i in range(total + 1):
            yield i, total - i


def _diagonal_quads() -> Iterator[tuple[int, int, int, int]]:
    for total in itertools.count(0):
        for i in range(total + 1):
            for j in range(total - i + 1):
                for k in range(total - i - j + 1):
                    yield i, j, k, total - i - j - k


class Schedule:
    """Deterministic fair interleaving of a preset's descriptor families."""

    def __init__(self, preset: str, seed: int = 0):
        if preset not in PRESETS:
            raise ChainError(f"unknown preset {preset!r}; pick one of {PRESETS}")
        self.preset = preset
        self.seed = seed
        self.families = {
            "t2": ("A", "B", "C"),
            "assgp": ("C", "AD", "B"),
            "simple": ("A", "B", "C", "E"),
            "full": ("A", "B", "C", "AD", "E"),
        }[preset]
        self._streams = {
            "A": _Indexed(self._a_stream()),
            "B": _Indexed(self._b_stream()),
            "C": _Indexed(self._c_stream()),
            "AD": _Indexed(self._ad_stream()),
            "E": _Indexed(self._e_stream()),
        }

    @staticmethod
    def _a_stream():
        for n in itertools.count(0):
            yield DescA(n)

    @staticmethod
    def _b_stream():
        yield from (DescB(s) for s in alphabet_stream())

    @staticmethod
    def _c_stream():
        yield from (DescC(g) for g in word_stream(include_identity=False))

    @staticmethod
    def _ad_stream():
        ns = _Indexed(Schedule._a_stream())
        gs = _Indexed(word_stream(include_identity=True))
        for i, j in _diagonal_pairs():
            yield DescAD(ns[i].n, gs[j])

    @staticmethod
    def _e_stream():
        gs = _Indexed(word_stream(include_identity=False))
        hs = _Indexed(word_stream(include_identity=True))
        ss = _Indexed(alphabet_stream(include_empty=True))
        for i, j, k, l in _diagonal_quads():
            yield DescE(i, ss[j], gs[k], hs[l])

    def descriptor(self, stage: int):
        fam_count = len(self.families)
        fam = self.families[(stage + self.seed) % fam_count]
        index = stage // fam_count
        # rotation only shifts which family goes first; indexes stay fair
        extra = 1 if (stage % fam_count) < ((self.seed % fam_count)) else 0
        del extra  # index arithmetic below is exact for round-robin
        return self._streams[fam][index]

    def first_stage_of(self, key: str, limit: int = 4000) -> Optional[int]:
        for s in range(limit):
            if self.descriptor(s).key() == key:
                return s
        return None


# ---------------------------------------------------------------------------
# Chain state
# ---------------------------------------------------------------------------


@dataclass
class BasisAnswer:
    verdict: str
    rep: object = None
    stage: Optional[int] = None
    level: Optional[int] = None
    caveat: str = ""

    @property
    def is_yes(self) -> bool:
        return self.verdict == "yes"

    @property
    def is_no(self) -> bool:
        return self.verdict == "no"


class ChainState:
    def __init__(self, preset: str, mode: Mode, budget: Budget, seed: int):
        self.preset = preset
        self.mode = mode
        self.budget = budget
        self.seed = seed
        self.schedule = Schedule(preset, seed)
        self.chain: list[Condition] = [initial_condition()]
        self.stage = 0
        self.certs: dict[str, dict] = {}
        self.step_log: list[dict] = []
        self.retry_queue: list[tuple[str, int]] = []  # (descriptor key, attempts)
        self._retry_descs: dict[str, object] = {}

    # -- construction ---------------------------------------------------------

    def _apply_witness(self, d, budget: Budget, origin: str) -> dict:
        last = self.chain[-1]
        res = witness(last, d, self.mode, budget)
        entry = {
            "descriptor": d.key(),
            "origin": origin,
            "status": "ok",
            "predicate_ok": bool(res.predicate_ok),
            "new_conditions": [],
            "reports": [],
            "detail": {
                k: v for k, v in res.detail.items() if isinstance(v, (int, str, bool))
            },
        }
        prev = last
        for cond in res.conditions:
            rpt = is_extension(cond, prev, budget)
            entry["reports"].append(rpt.describe())
            self.chain.append(cond)
            entry["new_conditions"].append(len(self.chain) - 1)
            prev = cond
        for r in res.reports:
            entry["reports"].append(r.describe())
        self._store_certs(d, res)
        self.step_log.append(entry)
        return entry

    def _store_certs(self, d, res) -> None:
        key = d.key()
        stage_idx = len(self.chain) - 1
        if isinstance(d, (DescD, DescAD)) and "cyc" in res.certs:
            cert: CycCert = res.certs["cyc"]
            self.certs[key] = {"kind": "D", "stage": stage_idx, "cyc": cert.describe()}
        elif isinstance(d, DescD) and "factorization" in res.certs:
            self.certs[key] = {"kind": "D", "stage": stage_idx, "cyc": None}
        elif isinstance(d, DescE):
            ext = res.certs["conj"]
            self.certs[key] = {
                "kind": "E",
                "stage": stage_idx,
                "level": ext.condition.depth,
                "f": str(ext.setting.f),
                "g0": str(ext.setting.g0),
                "rep": rep_to_obj(ext.cert.rep),
            }
        elif isinstance(d, DescC):
            self.certs[key] = {
                "kind": "C",
                "stage": stage_idx,
                "level": self.chain[-1].depth,
            }

    def step(self) -> dict:
        """Consume the next scheduled descriptor (after draining a retry)."""
        if self.retry_queue:
            key, attempts = self.retry_queue.pop(0)
            d = self._retry_descs.pop(key)
            boosted = Budget(
                self.budget.leaf_len, self.budget.exp, self.budget.nodes * (2**attempts)
            )
            try:
                return self._apply_witness(d, boosted, f"retry#{attempts}")
            except WitnessFailed as exc:
                entry = self._failure_entry(d, exc, f"retry#{attempts}")
                if attempts < 3:
                    self.retry_queue.append((key, attempts + 1))
                    self._retry_descs[key] = d
                self.step_log.append(entry)
                return entry
        d = self.schedule.descriptor(self.stage)
        self.stage += 1
        try:
            return self._apply_witness(d, self.budget, "scheduled")
        except WitnessFailed as exc:
            entry = self._failure_entry(d, exc, "scheduled")
            self.retry_queue.append((d.key(), 1))
            self._retry_descs[d.key()] = d
            self.step_log.append(entry)
            return entry

    def _failure_entry(self, d, exc, origin) -> dict:
        return {
            "descriptor": d.key(),
            "origin": origin,
            "status": "failed",
            "reason": str(exc.args[0]) if exc.args else "witness failed",
            "predicate_ok": False,
            "new_conditions": [],
            "reports": [],
            "detail": {},
        }

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()

    # -- queries ---------------------------------------------------------------

    def basis_member(self, n: int, w: Word, budget: Optional[Budget] = None) -> BasisAnswer:
        """Is w in the chain's n-th basic neighbourhood (so far)?

        Yes once any condition deep enough certifies it; the verdict can only
        improve as the chain grows."""
        budget = budget or self.budget
        saw_unknown = False
        for idx in range(len(self.chain) - 1, -1, -1):
            cond = self.chain[idx]
            if cond.depth < n:
                continue
            ans = cond.system.member(n, w, budget)
            if ans.is_yes:
                return BasisAnswer("yes", ans.rep, idx, n)
            if not ans.is_no:
                saw_unknown = True
        return BasisAnswer("unknown" if saw_unknown else "no", None, None, n)

    def basis_view(self, n: int) -> "BasisView":
        return BasisView(self, n)

    def separation_index(self, g: Word, budget: Optional[Budget] = None) -> tuple[int, int]:
        """Find a stage whose deepest level exactly excludes g.

        The stage-local exclusion is exact; the global claim that g stays out
        of the chain's basic neighbourhood additionally rests on the per-step
        extension reports, which the step log records."""
        if g.is_identity():
            raise TrivialG("the identity is never separated")
        budget = budget or self.budget
        for idx, cond in enumerate(self.chain):
            if not supported_in(g, cond.alphabet):
                continue
            if cond.system.member(cond.depth, g, budget).is_no:
                return idx, cond.depth
        raise NotYetSeparated(f"no stage excludes {g} yet")

    def conj_density_witness(
        self, g: Word, h: Word, n: int, budget: Optional[Budget] = None
    ) -> dict:
        """A conjugator f with f·g·f⁻¹·h⁻¹ certified in the n-th neighbourhood,
        so the conjugacy class of g meets U_n·h."""
        if g.is_identity():
            raise TrivialG("conjugacy density needs g != e")
        budget = budget or self.budget
        Z = letters(g).union(letters(h))
        d = DescE(n, Z, g, h.inverse())
        key = d.key()
        if key not in self.certs or "f" not in self.certs[key]:
            self._apply_witness(d, budget, "targeted")
        rec = self.certs[key]
        f = parse_word(rec["f"])
        target = parse_word(rec["g0"])
        expected = multiply(multiply(multiply(f, g), f.inverse()), h.inverse())
        if expected != target:
            raise ChainError("cached conjugacy witness fails re-verification")
        basis = self.basis_member(n, target, budget)
        if not basis.is_yes:
            raise ChainError("conjugacy witness lost its membership certificate")
        return {"f": f, "witness": target, "stage": basis.stage, "basis": basis}

    def assgp_certificate(self, n: int, g: Word, budget: Optional[Budget] = None) -> CycCert:
        """Factor g into members of cyclic subgroups inside the n-th
        neighbourhood; raises WitnessFailed explicitly when the strategy
        cannot produce a verified factorization."""
        budget = budget or self.budget
        if g.is_identity():
            return CycCert(E, (), (), (), n)
        if self.chain[-1].depth < n:
            self._apply_witness(DescA(n), budget, "targeted")
        d = DescAD(n, g)
        self._apply_witness(d, budget, "targeted")
        rec = self.certs[d.key()]
        cyc = rec["cyc"]
        cert = CycCert(
            parse_word(cyc["target"]),
            tuple(parse_word(t) for t in cyc["factors"]),
            tuple(parse_word(t) for t in cyc["gens"]),
            tuple(cyc["exponents"]),
            cyc["level"],
        )
        cond = self.chain[rec["stage"]]
        ok, why = verify_cyc_cert(cert, cond.system, budget)
        if not ok:
            raise WitnessFailed(f"stored factorization failed re-verification: {why}")
        if n < cert.level:
            at_n = CycCert(cert.target, cert.factors, cert.gens, cert.exponents, n)
            ok, why = verify_cyc_cert(at_n, cond.system, budget)
            if not ok:
                raise WitnessFailed(f"factorization does not descend to level {n}: {why}")
        return cert

    # -- group-axiom sampling ----------------------------------------------------

    def check_group_axioms(self, budget: Optional[Budget] = None, samples: int = 4) -> dict:
        """Sampled product/symmetry/conjugation checks on certified members.

        Each check builds the certificate the corresponding closure argument
        predicts (a conjugation node with x = e for products, the mirrored
        tree for inverses, nested conjugation nodes of length-l words for the
        n+l law) and re-verifies it, then cross-checks basis membership is
        not refuted."""
        budget = budget or self.budget
        cond = self.chain[-1]
        sys_ = cond.system
        report = {"entries": [], "violations": 0}

        def note(kind, ok, detail):
            report["entries"].append({"kind": kind, "ok": bool(ok), "detail": detail})
            if not ok:
                report["violations"] += 1

        for n in range(cond.depth):
            pool = sys_.enumerate(n + 1, budget)[: max(2, samples)]
            for (u, urep), (v, vrep) in itertools.product(pool, pool):
                w = multiply(u, v)
                rep = Conj(n, E, urep, vrep)
                ok, why = sys_.verify_rep(n, w, rep)
                if not ok:
                    # systems without conjugation structure (all-{e} levels)
                    # certify directly instead
                    ok = sys_.member(n, w, budget).is_yes
                    why = "" if ok else why
                note("product", ok, f"U_{n + 1}·U_{n + 1} ∋ {u}·{v} at level {n}: {why}")
                basis = self.basis_member(n, w, budget)
                note("product-basis", not basis.is_no, f"{w} at level {n}")

        for n in range(cond.depth + 1):
            for w, rep in sys_.enumerate(n, budget)[: max(2, samples)]:
                inv = invert_rep(rep)
                ok, why = sys_.verify_rep(n, w.inverse(), inv)
                note("symmetry", ok, f"inverse of {w} at level {n}: {why}")

        small_ids = [g for g, _ in zip(cond.alphabet, range(3))]
        gs = [single(i) for i in small_ids] + [
            multiply(single(i), single(j))
            for i in small_ids[:2]
            for j in small_ids[:2]
            if not multiply(single(i), single(j)).is_identity()
        ]
        for g in gs[: samples + 2]:
            l = g.length
            for n in range(max(0, cond.depth - l)):
                m = n + l
                pool = sys_.enumerate(m, budget)[: max(2, samples // 2)]
                for w, wrep in pool:
                    cur = wrep
                    level = m
                    ok = True
                    why = ""
                    from .words import flatten_letters

                    for letter_val in reversed(flatten_letters(g, cap=64)):
                        level -= 1
                        x = Word(((letter_val,),))
                        cur = Conj(level, x, cur, sys_.identity_rep(level + 1))
                    target = multiply(multiply(g, w), g.inverse())
                    ok, why = sys_.verify_rep(n, target, cur)
                    if not ok:
                        ok = sys_.member(n, target, budget).is_yes
                        why = "" if ok else why
                    note(
                        "conjugation",
                        ok,
                        f"{g}·{w}·{g}^-1 from level {m} to {n}: {why}",
                    )
        report["passed"] = report["violations"] == 0
        return report

    # -- serialization -------------------------------------------------------------

    def to_obj(self) -> dict:
        chain_objs = []
        for idx, cond in enumerate(self.chain):
            ancestors = cond.system.ancestors()
            base_idx = None
            cut = len(ancestors)
            for j in range(idx - 1, -1, -1):
                prev = self.chain[j].system
                if prev in ancestors:
                    base_idx = j
                    cut = ancestors.index(prev)
                    break
            layers = [layer.node_obj() for layer in reversed(ancestors[:cut])]
            chain_objs.append({"base": base_idx, "layers": layers})
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "config": {
                "preset": self.preset,
                "mode": self.mode.describe(),
                "budget": list(self.budget.key()),
                "seed": self.seed,
            },
            "stage": self.stage,
            "chain": chain_objs,
            "certs": self.certs,
            "step_log": self.step_log,
            "retry_queue": [[k, a] for k, a in self.retry_queue],
        }

    @staticmethod
    def from_obj(obj: dict) -> "ChainState":
        if not isinstance(obj, dict) or obj.get("format") != FORMAT_NAME:
            raise FormatError("not a chain state file")
        if obj.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported version {obj.get('version')!r}")
        try:
            cfg = obj["config"]
            budget = Budget(*cfg["budget"])
            state = ChainState(cfg["preset"], parse_mode(cfg["mode"]), budget, cfg["seed"])
            state.stage = obj["stage"]
            state.certs = obj["certs"]
            state.step_log = obj["step_log"]
            state.retry_queue = [(k, a) for k, a in obj.get("retry_queue", [])]
            chain: list[Condition] = []
            for entry in obj["chain"]:
                root = None if entry["base"] is None else chain[entry["base"]].system
                system = system_from_layers(entry["layers"], root)
                chain.append(Condition(system.alphabet, system.depth, system))
            if not chain:
                raise FormatError("empty chain")
            state.chain = chain
        except FormatError:
            raise
        except Exception as exc:  # malformed content of a well-framed file
            raise FormatError(f"malformed chain state: {exc}") from exc
        for key, attempts in state.retry_queue:
            state._retry_descs[key] = _descriptor_from_key(key)
        return state

    def verify_certificates(self, budget: Optional[Budget] = None) -> list[str]:
        """Re-check every stored certificate; returns failure descriptions."""
        budget = budget or self.budget
        failures = []
        for key in sorted(self.certs):
            rec = self.certs[key]
            cond = self.chain[rec["stage"]]
            if rec["kind"] == "E":
                rep = rep_from_obj(rec["rep"])
                g0 = parse_word(rec["g0"])
                ok, why = cond.system.verify_rep(rec["level"], g0, rep)
                if not ok:
                    failures.append(f"{key}: {why}")
            elif rec["kind"] == "D" and rec.get("cyc"):
                cyc = rec["cyc"]
                cert = CycCert(
                    parse_word(cyc["target"]),
                    tuple(parse_word(t) for t in cyc["factors"]),
                    tuple(parse_word(t) for t in cyc["gens"]),
                    tuple(cyc["exponents"]),
                    cyc["level"],
                )
                ok, why = verify_cyc_cert(cert, cond.system, budget)
                if not ok:
                    failures.append(f"{key}: {why}")
            elif rec["kind"] == "C":
                pass  # separation re-checked on demand via separation_index
        return failures


def _descriptor_from_key(key: str):
    kind, _, rest = key.partition(":")
    if kind == "A":
        return DescA(int(rest))
    if kind == "B":
        return DescB(IdSet.from_ids(int(t) for t in rest.split(",") if t))
    if kind == "C":
        return DescC(parse_word(rest))
    if kind == "D":
        return DescD(parse_word(rest))
    if kind == "AD":
        n, g = rest.split("|")
        return DescAD(int(n), parse_word(g))
    if kind == "E":
        n, ids, g, h = rest.split("|")
        S = IdSet.from_ids(int(t) for t in ids.split(",") if t)
        return DescE(int(n), S, parse_word(g), parse_word(h))
    raise ChainError(f"bad descriptor key {key!r}")


@dataclass
class BasisView:
    """Read-only view of one basic neighbourhood of the identity."""

    state: ChainState
    n: int

    def member(self, w: Word, budget: Optional[Budget] = None) -> BasisAnswer:
        return self.state.basis_member(self.n, w, budget)


# ---------------------------------------------------------------------------
# Module-level API
# ---------------------------------------------------------------------------


def new_chain(
    preset: str = "full",
    mode: Mode = Mode("test", 2),
    budget: Budget = DEFAULT_BUDGET,
    seed: int = 0,
) -> ChainState:
    return ChainState(preset, mode, budget, seed)


def step(state: ChainState) -> ChainState:
    state.step()
    return state


def serialize(state: ChainState) -> bytes:
    return (
        json.dumps(state.to_obj(), sort_keys=True, separators=(",", ":")) + "\n"
    ).encode()


def deserialize(data: bytes) -> ChainState:
    try:
        obj = json.loads(data.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"not a valid state file: {exc}") from exc
    return ChainState.from_obj(obj)
