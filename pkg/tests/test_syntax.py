"""Substitution, alpha-equality, and immutability of the core syntax."""

import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gobsec.syntax import (
    TOP,
    Faceted,
    GenericSig,
    Invoke,
    MethodDef,
    ObjType,
    ObjectLit,
    Prim,
    PrimLit,
    SelfVar,
    TParam,
    TypeVar,
    Var,
    alpha_eq,
    alpha_eq_expr,
    canon,
    free_type_vars,
    public,
    subst_self_var,
    subst_term,
    subst_type_var,
)

from conftest import STRING_LEN, random_closed_type, random_sectype

STRING = Prim("String")


class TestSubstTypeVar:
    def test_direct_replacement(self):
        s = Faceted(STRING, TypeVar("X"))
        assert subst_type_var(s, STRING_LEN, "X") == Faceted(STRING, STRING_LEN)

    def test_other_variable_untouched(self):
        s = Faceted(STRING, TypeVar("Y"))
        assert subst_type_var(s, STRING_LEN, "X") == s

    def test_shadowed_by_signature_binder(self):
        sig = GenericSig(
            (TParam("X", STRING, TOP),),
            (Faceted(STRING, TypeVar("X")),),
            Faceted(STRING, TypeVar("X")),
        )
        # The inner X is bound by the signature; substitution must not touch it.
        assert subst_type_var(sig, STRING_LEN, "X") == sig

    def test_shadowing_matches_naive_substitution_with_shadow_set(self):
        # Independent oracle: a naive recursive substitution carrying an
        # explicit shadow set, written without the production code's
        # capture machinery (replacements here are closed, so capture
        # cannot occur and the two must agree).
        def naive(x, actual, name, shadow):
            if isinstance(x, TypeVar):
                return actual if (x.name == name and name not in shadow) else x
            if isinstance(x, (Prim, SelfVar)):
                return x
            if isinstance(x, ObjType):
                return ObjType(x.self_var, tuple((m, naive(s, actual, name, shadow)) for m, s in x.methods))
            if isinstance(x, Faceted):
                return Faceted(naive(x.safety, actual, name, shadow), naive(x.decl, actual, name, shadow))
            if isinstance(x, GenericSig):
                inner = set(shadow)
                tps = []
                for tp in x.tparams:
                    tps.append(TParam(tp.name, naive(tp.lower, actual, name, inner), naive(tp.upper, actual, name, inner)))
                    inner.add(tp.name)
                return GenericSig(
                    tuple(tps),
                    tuple(naive(a, actual, name, inner) for a in x.args),
                    naive(x.ret, actual, name, inner),
                )
            return x

        rng = random.Random(7)
        for _ in range(300):
            t = random_closed_type(rng, 2)
            holes = rng.choice(["X", "Y"])
            got = subst_type_var(t, STRING_LEN, holes)
            want = naive(t, STRING_LEN, holes, set())
            assert canon(got) == canon(want)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10**9))
    def test_substitution_composition(self, seed):
        # sigma(S[U'/X]) == sigma(S)[sigma(U')/X] when X is not bound by sigma.
        rng = random.Random(seed)
        s = random_sectype(rng, 2, ())
        u_prime = random_closed_type(rng, 1)
        sigma_img = random_closed_type(rng, 1)
        lhs = subst_type_var(subst_type_var(s, u_prime, "X"), sigma_img, "Y")
        rhs = subst_type_var(
            subst_type_var(s, sigma_img, "Y"),
            subst_type_var(u_prime, sigma_img, "Y"),
            "X",
        )
        assert canon(lhs) == canon(rhs)


class TestSubstSelfVar:
    def test_replaces_free_occurrence(self):
        obj = ObjType("o", (("m", GenericSig((), (public(Prim("Unit")),), Faceted(SelfVar("al"), TOP))),))
        sig = GenericSig((), (public(Prim("Unit")),), Faceted(SelfVar("al"), TOP))
        got = subst_self_var(sig, obj, "al")
        assert got == GenericSig((), (public(Prim("Unit")),), Faceted(obj, TOP))

    def test_no_free_occurrence_unchanged(self):
        sig = GenericSig((), (public(STRING),), public(STRING))
        assert subst_self_var(sig, STRING_LEN, "al") == sig

    def test_unfolding_is_equivalent(self):
        from gobsec.algebra import type_equiv, unfold

        t = ObjType("al", (("m", GenericSig((), (public(Prim("Unit")),), Faceted(SelfVar("al"), TOP))),))
        assert type_equiv(t, unfold(t))


class TestSubstTerm:
    def test_variable(self):
        assert subst_term(Var("x"), {"x": PrimLit(3, "Int")}) == PrimLit(3, "Int")

    def test_simultaneous(self):
        obj = ObjectLit("z", public(TOP), ())
        e = Invoke(Var("z"), "m", (), (Var("x"),))
        got = subst_term(e, {"z": obj, "x": PrimLit(1, "Int")})
        assert got == Invoke(obj, "m", (), (PrimLit(1, "Int"),))

    def test_identity_object_one_step(self):
        from gobsec.interp import step

        s = public(ObjType("z", (("id", GenericSig((), (public(Prim("Int")),), public(Prim("Int")))),)))
        obj = ObjectLit("z", s, (MethodDef("id", ("x",), Var("x")),))
        assert step(Invoke(obj, "id", (), (PrimLit(5, "Int"),))) == PrimLit(5, "Int")

    def test_shadowing(self):
        # The object binds x; the outer substitution must not reach inside.
        t = ObjType("t", (("m", GenericSig((), (public(Prim("Int")),), public(Prim("Int")))),))
        inner = ObjectLit("z", public(t), (MethodDef("m", ("x",), Var("x")),))
        got = subst_term(inner, {"x": PrimLit(9, "Int")})
        assert got.impl("m").body == Var("x")


class TestAlpha:
    def test_binder_renaming_preserves_equivalence(self):
        a = ObjType("al", (("m", GenericSig((), (public(Prim("Unit")),), Faceted(SelfVar("al"), SelfVar("al")))),))
        b = ObjType("be", (("m", GenericSig((), (public(Prim("Unit")),), Faceted(SelfVar("be"), SelfVar("be")))),))
        assert alpha_eq(a, b)

    def test_renamed_terms_equal(self):
        s = public(ObjType("z", (("id", GenericSig((), (public(Prim("Int")),), public(Prim("Int")))),)))
        e1 = ObjectLit("z", s, (MethodDef("id", ("x",), Var("x")),))
        e2 = ObjectLit("w", s, (MethodDef("id", ("y",), Var("y")),))
        assert alpha_eq_expr(e1, e2)

    def test_renaming_does_not_change_evaluation(self):
        from gobsec.interp import evaluate

        s = public(ObjType("z", (("id", GenericSig((), (public(Prim("Int")),), public(Prim("Int")))),)))
        e1 = Invoke(ObjectLit("z", s, (MethodDef("id", ("x",), Var("x")),)), "id", (), (PrimLit(5, "Int"),))
        e2 = Invoke(ObjectLit("w", s, (MethodDef("id", ("q",), Var("q")),)), "id", (), (PrimLit(5, "Int"),))
        assert evaluate(e1).expr == evaluate(e2).expr


def test_nodes_are_immutable():
    v = Var("x")
    with pytest.raises(dataclasses.FrozenInstanceError):
        v.name = "y"
    t = Prim("Int")
    with pytest.raises(dataclasses.FrozenInstanceError):
        t.kind = "Bool"


def test_free_type_vars():
    sig = GenericSig(
        (TParam("X", STRING, TOP),),
        (Faceted(STRING, TypeVar("X")),),
        Faceted(STRING, TypeVar("Z")),
    )
    assert free_type_vars(sig) == {"Z"}
