"""Shared fixtures: the standard policy types and a random type generator."""

from __future__ import annotations

import random

import pytest

from gobsec.syntax import (
    TOP,
    Faceted,
    GenericSig,
    ObjType,
    Prim,
    PrimSig,
    SelfVar,
    TParam,
    public,
)

INT, STRING, BOOL, UNIT_T = Prim("Int"), Prim("String"), Prim("Bool"), Prim("Unit")


def gsig(args, ret, tparams=()) -> GenericSig:
    return GenericSig(tuple(tparams), tuple(args), ret)


STRING_LEN = ObjType("a", (("length", gsig([public(UNIT_T)], public(INT))),))
STRING_FST = ObjType("a", (("first", gsig([public(UNIT_T)], public(STRING))),))
STR_FST_LEN = ObjType(
    "a",
    (
        ("first", gsig([public(UNIT_T)], public(STRING))),
        ("length", gsig([public(UNIT_T)], public(INT))),
    ),
)
STRING_EQ = ObjType("a", (("eq", gsig([public(STRING)], public(BOOL))),))
STRING_EQ_BAD = ObjType("a", (("eq", gsig([Faceted(STRING, TOP)], public(BOOL))),))
STRING_EQ_POLY = ObjType("a", (("eq", PrimSig(("String",), "Bool")),))
INT_EQ = ObjType("a", (("eq", gsig([public(INT)], public(BOOL))),))
STRING_HASH_EQ = ObjType("a", (("hash", gsig([public(UNIT_T)], Faceted(INT, INT_EQ))),))


@pytest.fixture
def policies():
    return {
        "StringLen": STRING_LEN,
        "StringFst": STRING_FST,
        "StrFstLen": STR_FST_LEN,
        "StringEq": STRING_EQ,
        "StringEqBad": STRING_EQ_BAD,
        "StringEqPoly": STRING_EQ_POLY,
        "IntEq": INT_EQ,
        "StringHashEq": STRING_HASH_EQ,
    }


# ---------------------------------------------------------------------------
# Random closed types
# ---------------------------------------------------------------------------

_METHODS = ("m", "n", "p")


def random_closed_type(rng: random.Random, depth: int = 2, self_vars: tuple[str, ...] = ()):
    """A random closed type; self variables of enclosing objects may occur
    free inside (bound overall)."""
    roll = rng.random()
    if depth <= 0 or roll < 0.35:
        if self_vars and rng.random() < 0.4:
            return SelfVar(rng.choice(self_vars))
        return rng.choice([INT, STRING, BOOL, TOP])
    binder = f"s{len(self_vars)}"
    inner = self_vars + (binder,)
    n_methods = rng.randint(1, 2)
    names = rng.sample(_METHODS, n_methods)
    methods = []
    for name in sorted(names):
        if rng.random() < 0.25:
            kinds = ["Int", "String", "Bool", "Unit"]
            methods.append((name, PrimSig((rng.choice(kinds),), rng.choice(kinds))))
            continue
        tparams = ()
        if rng.random() < 0.3:
            lo = random_closed_type(rng, depth - 1, inner)
            tparams = (TParam("X", lo, TOP),)
        args = (random_sectype(rng, depth - 1, inner),)
        ret = random_sectype(rng, depth - 1, inner)
        methods.append((name, GenericSig(tparams, args, ret)))
    return ObjType(binder, tuple(methods))


def random_sectype(rng: random.Random, depth: int, self_vars: tuple[str, ...]) -> Faceted:
    t = random_closed_type(rng, depth, self_vars)
    roll = rng.random()
    if roll < 0.5:
        return Faceted(t, t)
    if roll < 0.8:
        return Faceted(t, TOP)
    return Faceted(t, random_closed_type(rng, depth - 1, self_vars))
