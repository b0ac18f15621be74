"""Algorithmic subtyping: examples, order-theoretic properties, and
agreement with the declarative-search oracle."""

import random

from gobsec.subtyping import declarative_oracle, sub_record, sub_sectype, sub_sig, sub_type
from gobsec.syntax import (
    EMPTY_SIGMA,
    TOP,
    Faceted,
    GenericSig,
    ObjType,
    PrimSig,
    SelfVar,
    TParam,
    TypeVar,
    assume_prim,
    assume_self,
    public,
)

from conftest import (
    BOOL,
    INT,
    STRING,
    STR_FST_LEN,
    STRING_EQ,
    STRING_FST,
    STRING_LEN,
    UNIT_T,
    gsig,
    random_closed_type,
)


class TestSubType:
    def test_string_below_length_policy(self):
        assert sub_type({}, EMPTY_SIGMA, STRING, STRING_LEN)

    def test_variable_through_upper_bound(self):
        delta = {"X": (STR_FST_LEN, STRING_LEN)}
        assert sub_type(delta, EMPTY_SIGMA, TypeVar("X"), STRING_LEN)

    def test_no_object_below_primitive(self):
        assert not sub_type({}, EMPTY_SIGMA, STRING_EQ, STRING)

    def test_variable_through_lower_bound(self):
        delta = {"X": (STR_FST_LEN, STRING_LEN)}
        assert sub_type(delta, EMPTY_SIGMA, STRING, TypeVar("X"))

    def test_self_variables_through_assumptions(self):
        sigma = assume_self(EMPTY_SIGMA, "al", "be")
        assert sub_type({}, sigma, SelfVar("al"), SelfVar("be"))
        assert not sub_type({}, sigma, SelfVar("be"), SelfVar("al"))

    def test_prim_below_self_variable_assumption(self):
        sigma = assume_prim(EMPTY_SIGMA, "String", "be")
        assert sub_type({}, sigma, STRING, SelfVar("be"))

    def test_recursive_width(self):
        lst = ObjType(
            "l",
            (
                ("isEmpty", gsig([public(UNIT_T)], public(BOOL))),
                ("head", gsig([public(UNIT_T)], public(STRING))),
                ("tail", gsig([public(UNIT_T)], Faceted(SelfVar("l"), SelfVar("l")))),
            ),
        )
        dropped = ObjType(
            "k",
            (
                ("isEmpty", gsig([public(UNIT_T)], public(BOOL))),
                ("tail", gsig([public(UNIT_T)], Faceted(SelfVar("k"), SelfVar("k")))),
            ),
        )
        assert sub_type({}, EMPTY_SIGMA, lst, dropped)
        assert not sub_type({}, EMPTY_SIGMA, dropped, lst)

    def test_folded_vs_unfolded_widening(self):
        u1 = ObjType("al", (("m", gsig([public(UNIT_T)], Faceted(SelfVar("al"), SelfVar("al")))),))
        u2 = ObjType("be", (("m", gsig([public(UNIT_T)], public(TOP))),))
        assert sub_type({}, EMPTY_SIGMA, u1, u2)


class TestSubRecord:
    def test_width(self):
        r1 = STR_FST_LEN.methods
        r2 = STRING_LEN.methods
        assert sub_record({}, EMPTY_SIGMA, r1, r2)
        assert not sub_record({}, EMPTY_SIGMA, (), r2)

    def test_depth_covariant_return_facet(self):
        r1 = (("m", gsig([public(UNIT_T)], public(STRING))),)
        r2 = (("m", gsig([public(UNIT_T)], Faceted(STRING, STRING_LEN))),)
        assert sub_record({}, EMPTY_SIGMA, r1, r2)
        assert not sub_record({}, EMPTY_SIGMA, r2, r1)


class TestSubSig:
    def test_bounds_of_supertype_inside_subtype(self):
        wide = GenericSig((TParam("X", STRING, TOP),), (public(STRING),), public(STRING))
        narrow = GenericSig((TParam("X", STR_FST_LEN, STRING_LEN),), (public(STRING),), public(STRING))
        assert sub_sig({}, EMPTY_SIGMA, wide, narrow)
        assert not sub_sig({}, EMPTY_SIGMA, narrow, wide)

    def test_primitive_signature_identity_only(self):
        s = PrimSig(("String",), "Bool")
        assert sub_sig({}, EMPTY_SIGMA, s, s)
        assert not sub_sig({}, EMPTY_SIGMA, s, PrimSig(("Int",), "Bool"))

    def test_primitive_below_generic_only_in_facet_relation(self):
        prim = PrimSig(("String",), "Bool")
        std = gsig([public(STRING)], public(BOOL))
        assert not sub_sig({}, EMPTY_SIGMA, prim, std)
        assert sub_sig({}, EMPTY_SIGMA, prim, std, allow_ig=True)


class TestSubSectype:
    def test_fully_public_below_policy(self):
        assert sub_sectype({}, EMPTY_SIGMA, public(STRING), Faceted(STRING, STRING_LEN))

    def test_policy_not_below_public(self):
        assert not sub_sectype({}, EMPTY_SIGMA, Faceted(STRING, STRING_LEN), public(STRING))

    def test_reflexive(self):
        s = Faceted(STRING, STRING_LEN)
        assert sub_sectype({}, EMPTY_SIGMA, s, s)


class TestProperties:
    def test_reflexivity_on_random_types(self):
        rng = random.Random(5)
        for _ in range(200):
            t = random_closed_type(rng, 2)
            assert sub_type({}, EMPTY_SIGMA, t, t)

    def test_top_is_top(self):
        rng = random.Random(6)
        for _ in range(200):
            t = random_closed_type(rng, 2)
            assert sub_type({}, EMPTY_SIGMA, t, TOP)

    def test_transitivity_sampled(self):
        rng = random.Random(7)
        samples = [random_closed_type(rng, 2) for _ in range(60)]
        related = [
            (a, b) for a in samples for b in samples if sub_type({}, EMPTY_SIGMA, a, b)
        ]
        for a, b in related:
            for b2, c in related:
                if b is b2:
                    assert sub_type({}, EMPTY_SIGMA, a, c)

    def test_termination_on_recursive_mixtures(self):
        from gobsec.algebra import unfold

        lst = ObjType(
            "l",
            (
                ("head", gsig([public(UNIT_T)], public(STRING))),
                ("tail", gsig([public(UNIT_T)], Faceted(SelfVar("l"), SelfVar("l")))),
            ),
        )
        assert sub_type({}, EMPTY_SIGMA, lst, unfold(lst))
        assert sub_type({}, EMPTY_SIGMA, unfold(lst), lst)
        assert sub_type({}, EMPTY_SIGMA, unfold(unfold(lst)), unfold(lst))


class TestOracleSmoke:
    def test_agreement_on_named_policies(self):
        types = [INT, STRING, TOP, STRING_LEN, STRING_FST, STR_FST_LEN, STRING_EQ]
        for a in types:
            for b in types:
                alg = sub_type({}, EMPTY_SIGMA, a, b)
                orc = declarative_oracle({}, EMPTY_SIGMA, a, b)
                assert alg == orc, f"{a} <: {b}: algorithm={alg} oracle={orc}"

    def test_top_always_derivable(self):
        rng = random.Random(9)
        for _ in range(30):
            t = random_closed_type(rng, 1)
            assert declarative_oracle({}, EMPTY_SIGMA, t, TOP)

    def test_variable_reflexivity(self):
        delta = {"X": (STRING, TOP)}
        assert sub_type(delta, EMPTY_SIGMA, TypeVar("X"), TypeVar("X"))
        assert declarative_oracle(delta, EMPTY_SIGMA, TypeVar("X"), TypeVar("X"))
