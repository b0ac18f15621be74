"""The differential noninterference harness: substitution sampling,
related-pair generation, relatedness probing, and end-to-end verdicts."""

import random

import pytest

from gobsec.parser import parse_program, parse_sectype, pretty_print
from gobsec.prni import (
    Counterexample,
    EmptyInterval,
    NoCounterexample,
    PrniConfig,
    ProbeContext,
    check_related,
    gen_related_pair,
    prni_test,
    sample_subst,
    verdict_to_json,
)
from gobsec.syntax import TOP, Faceted, Prim, PrimLit, TypeVar, canon, subst_term

from conftest import (
    INT,
    STR_FST_LEN,
    STRING,
    STRING_EQ,
    STRING_HASH_EQ,
    STRING_LEN,
)

LEN_CTX = """
type StringLen = Obj(a)[ length : Unit! -> Int! ]
type StrFstLen = Obj(a)[ first : Unit! -> String!, length : Unit! -> Int! ]
tvar X : StrFstLen .. StringLen
var x : String<X>
"""


def _rng(seed=0):
    return random.Random(seed)


class TestSampleSubst:
    def test_candidates_respect_bounds(self):
        delta = {"X": (STR_FST_LEN, STRING_LEN)}
        pool = {"StrFstLen": STR_FST_LEN, "StringLen": STRING_LEN, "StringEq": STRING_EQ}
        seen = set()
        for seed in range(40):
            sigma = sample_subst(delta, pool, _rng(seed))
            seen.add(canon(sigma["X"]))
        assert seen == {canon(STR_FST_LEN), canon(STRING_LEN)}

    def test_empty_environment(self):
        assert sample_subst({}, {}, _rng()) == {}

    def test_singleton_interval(self):
        delta = {"X": (STRING_LEN, STRING_LEN)}
        sigma = sample_subst(delta, {}, _rng())
        assert canon(sigma["X"]) == canon(STRING_LEN)

    def test_empty_interval_raises(self):
        delta = {"X": (TOP, Prim("String"))}
        with pytest.raises(EmptyInterval):
            sample_subst(delta, {}, _rng())

    def test_earlier_choices_substitute_into_later_bounds(self):
        delta = {"X": (STRING_LEN, TOP), "Y": (TypeVar("X"), TOP)}
        for seed in range(10):
            sigma = sample_subst(delta, {}, _rng(seed))
            assert not isinstance(sigma["Y"], TypeVar)


class TestGenRelatedPair:
    def test_public_primitives_are_equal(self):
        v1, v2 = gen_related_pair(Faceted(INT, INT), 6, _rng(1))
        assert v1 == v2

    def test_private_strings_are_independent(self):
        vals = set()
        for seed in range(30):
            v1, v2 = gen_related_pair(Faceted(STRING, TOP), 6, _rng(seed))
            vals.add((v1.value, v2.value))
        assert any(a != b for a, b in vals)

    def test_length_policy_pairs_same_length(self):
        differing = 0
        for seed in range(50):
            v1, v2 = gen_related_pair(Faceted(STRING, STRING_LEN), 6, _rng(seed))
            assert len(v1.value) == len(v2.value)
            differing += v1.value != v2.value
        assert differing > 0

    def test_first_and_length_policy(self):
        for seed in range(50):
            v1, v2 = gen_related_pair(Faceted(STRING, STR_FST_LEN), 6, _rng(seed))
            assert len(v1.value) == len(v2.value)
            assert v1.value[:1] == v2.value[:1]

    def test_equality_policy_pairs_certified(self):
        # Unequal proposals cannot survive probing at an equality policy.
        for seed in range(40):
            v1, v2 = gen_related_pair(Faceted(STRING, STRING_EQ), 6, _rng(seed))
            assert v1 == v2

    def test_hash_policy_pairs_certified(self):
        for seed in range(40):
            v1, v2 = gen_related_pair(Faceted(STRING, STRING_HASH_EQ), 6, _rng(seed))
            assert v1 == v2


class TestCheckRelated:
    def test_equal_public_strings(self):
        ok, _ = check_related(6, PrimLit("abc", "String"), PrimLit("abc", "String"), Faceted(STRING, STRING), ProbeContext(seed=1))
        assert ok

    def test_length_policy_distinguishes_lengths(self):
        ok, path = check_related(
            2, PrimLit("abc", "String"), PrimLit("ab", "String"), Faceted(STRING, STRING_LEN), ProbeContext(seed=1)
        )
        assert not ok
        assert path[0].method == "length"

    def test_length_policy_accepts_same_length(self):
        ok, _ = check_related(
            6, PrimLit("abc", "String"), PrimLit("123", "String"), Faceted(STRING, STRING_LEN), ProbeContext(seed=1)
        )
        assert ok

    def test_first_policy_distinguishes_first_characters(self):
        ok, path = check_related(
            2, PrimLit("abc", "String"), PrimLit("123", "String"), Faceted(STRING, STR_FST_LEN), ProbeContext(seed=1)
        )
        assert not ok
        assert path[0].method == "first"

    def test_zero_steps_relate_everything(self):
        ok, _ = check_related(0, PrimLit(1, "Int"), PrimLit(2, "Int"), Faceted(INT, INT), ProbeContext(seed=1))
        assert ok

    def test_refutation_is_monotone_in_k(self):
        for k in range(2, 7):
            ok, _ = check_related(
                k, PrimLit("abc", "String"), PrimLit("ab", "String"), Faceted(STRING, STRING_LEN), ProbeContext(seed=9)
            )
            assert not ok


class TestPrniTest:
    def cfg(self, pairs=300, seed=42):
        return PrniConfig(pairs=pairs, substs=10, k=6, seed=seed)

    def test_length_observation_is_secure(self):
        p = parse_program(LEN_CTX + "x.length()")
        v = prni_test(p, parse_sectype("Int!"), self.cfg())
        assert isinstance(v, NoCounterexample)

    def test_first_observation_leaks(self):
        p = parse_program(LEN_CTX + "x.first()")
        v = prni_test(p, parse_sectype("String!"), self.cfg(pairs=1000))
        assert isinstance(v, Counterexample)
        # The distinguishing observation is a pair of unequal public strings.
        o1, o2 = v.outputs
        assert o1 != o2

    def test_subject_observations(self):
        p = parse_program(LEN_CTX + "x")
        ok = prni_test(p, parse_sectype("String<StringLen>", p.aliases), self.cfg())
        assert isinstance(ok, NoCounterexample)
        bad = prni_test(
            p,
            parse_sectype("String<Obj(b)[ first : Unit! -> String! ]>", p.aliases),
            self.cfg(pairs=1000),
        )
        assert isinstance(bad, Counterexample)

    def test_top_observation_never_refutes(self):
        p = parse_program(LEN_CTX + "x.first()")
        v = prni_test(p, parse_sectype("Top?"), self.cfg(pairs=100))
        assert isinstance(v, NoCounterexample)

    def test_reflexive_pairs_never_refute(self):
        # With no declared inputs the two runs are identical.
        p = parse_program("expect secure at Int!\n1.+(2)")
        v = prni_test(p, parse_sectype("Int!"), self.cfg(pairs=50))
        assert isinstance(v, NoCounterexample)

    def test_counterexample_replays(self):
        p = parse_program(LEN_CTX + "x.first()")
        v = prni_test(p, parse_sectype("String!"), self.cfg(pairs=1000))
        assert isinstance(v, Counterexample)
        from gobsec.interp import evaluate
        from gobsec.prni import apply_subst_expr

        body = apply_subst_expr(p.body, v.sigma_types)
        out1 = evaluate(subst_term(body, v.gamma1_values))
        out2 = evaluate(subst_term(body, v.gamma2_values))
        assert pretty_print(out1.expr) != pretty_print(out2.expr)

    def test_same_seed_same_verdict_json(self):
        p = parse_program(LEN_CTX + "x.first()")
        a = verdict_to_json(prni_test(p, parse_sectype("String!"), self.cfg(pairs=500, seed=7)))
        b = verdict_to_json(prni_test(p, parse_sectype("String!"), self.cfg(pairs=500, seed=7)))
        assert a == b

    def test_different_seeds_explore_differently(self):
        p = parse_program(LEN_CTX + "x.first()")
        trials = {
            prni_test(p, parse_sectype("String!"), self.cfg(pairs=1000, seed=s)).trial
            for s in range(4)
        }
        assert len(trials) >= 1  # all refute; trial indices may differ

    def test_requires_simple_typing(self):
        from gobsec.typecheck import TypeError_

        p = parse_program("var x : String!\nx.frobnicate()")
        with pytest.raises(TypeError_):
            prni_test(p, parse_sectype("String!"), self.cfg(pairs=10))
