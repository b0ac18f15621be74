"""Type-level operations: equivalence, bounds, membership, signatures.

Equivalence of recursive object types is decided coinductively: pairs of
object types under comparison are assumed equal when revisited, and their
signatures are compared after closing each record over its own type. This
identifies a type with its unfolding and is insensitive to binder names.
"""

from __future__ import annotations

from .syntax import (
    TOP,
    DeclType,
    Faceted,
    GenericSig,
    GobsecError,
    MethodSig,
    ObjType,
    Prim,
    PrimSig,
    SelfVar,
    TParam,
    Type,
    TypeVar,
    TypeVarEnv,
    canon,
    is_top,
    subst_self_var,
    subst_type_var,
)


class UnboundTypeVar(GobsecError):
    pass


class CyclicBounds(GobsecError):
    pass


class NoSuchMethod(GobsecError):
    pass


class UnfoldOfVariable(GobsecError):
    pass


class NotClosed(GobsecError):
    pass


# ---------------------------------------------------------------------------
# Primitive interface table
# ---------------------------------------------------------------------------


def _psig(args: tuple[str, ...], ret: str) -> PrimSig:
    return PrimSig(args, ret)


#: Interface of each primitive kind; entries are primitive signatures only.
PRIM_INTERFACES: dict[str, tuple[tuple[str, PrimSig], ...]] = {
    "Int": (
        ("+", _psig(("Int",), "Int")),
        ("-", _psig(("Int",), "Int")),
        ("*", _psig(("Int",), "Int")),
        ("eq", _psig(("Int",), "Bool")),
        ("lt", _psig(("Int",), "Bool")),
        ("gt", _psig(("Int",), "Bool")),
    ),
    "String": (
        ("concat", _psig(("String",), "String")),
        ("first", _psig(("Unit",), "String")),
        ("length", _psig(("Unit",), "Int")),
        ("eq", _psig(("String",), "Bool")),
        ("hash", _psig(("Unit",), "Int")),
    ),
    "Bool": (
        ("and", _psig(("Bool",), "Bool")),
        ("or", _psig(("Bool",), "Bool")),
        ("not", _psig(("Unit",), "Bool")),
        ("eq", _psig(("Bool",), "Bool")),
    ),
    "Unit": (("eq", _psig(("Unit",), "Bool")),),
}


def meths(kind: str) -> tuple[tuple[str, PrimSig], ...]:
    """The record of primitive signatures implemented by primitive kind."""
    try:
        return PRIM_INTERFACES[kind]
    except KeyError:
        raise GobsecError(f"unknown primitive kind {kind!r}") from None


def prim_sig(kind: str, m: str) -> PrimSig | None:
    for name, sig in meths(kind):
        if name == m:
            return sig
    return None


# ---------------------------------------------------------------------------
# Type equivalence (fold/unfold, alpha)
# ---------------------------------------------------------------------------


def type_equiv(t1: DeclType, t2: DeclType) -> bool:
    """Equal infinite unfoldings, up to binder renaming.

    Generic variables and free self variables compare by name; primitives
    by kind. Object types are compared as the bisimulation over their
    self-closed signatures with assume-equal-on-revisit.
    """
    return _equiv(t1, t2, frozenset())


def _equiv(t1, t2, assumed: frozenset) -> bool:
    if t1 is t2:
        return True
    if isinstance(t1, Prim) and isinstance(t2, Prim):
        return t1.kind == t2.kind
    if isinstance(t1, TypeVar) and isinstance(t2, TypeVar):
        return t1.name == t2.name
    if isinstance(t1, SelfVar) and isinstance(t2, SelfVar):
        return t1.name == t2.name
    if isinstance(t1, ObjType) and isinstance(t2, ObjType):
        key = (canon(t1), canon(t2))
        if key in assumed:
            return True
        if set(t1.method_names()) != set(t2.method_names()):
            return False
        assumed = assumed | {key}
        for name, sig1 in t1.methods:
            sig2 = t2.sig(name)
            c1 = subst_self_var(sig1, t1, t1.self_var)
            c2 = subst_self_var(sig2, t2, t2.self_var)
            if not _equiv_sig(c1, c2, assumed):
                return False
        return True
    return False


def _equiv_sig(s1: MethodSig, s2: MethodSig, assumed: frozenset) -> bool:
    if isinstance(s1, PrimSig) or isinstance(s2, PrimSig):
        return s1 == s2
    if len(s1.tparams) != len(s2.tparams) or len(s1.args) != len(s2.args):
        return False
    # Rename both parameter lists to shared canonical names as we go.
    for i in range(len(s1.tparams)):
        tp1, tp2 = s1.tparams[i], s2.tparams[i]
        if not _equiv(tp1.lower, tp2.lower, assumed):
            return False
        if not _equiv(tp1.upper, tp2.upper, assumed):
            return False
        common = f"%eq{i}"
        if tp1.name != common:
            s1 = _rename_tparam(s1, i, common)
        if tp2.name != common:
            s2 = _rename_tparam(s2, i, common)
    for a1, a2 in zip(s1.args, s2.args):
        if not _equiv_sec(a1, a2, assumed):
            return False
    return _equiv_sec(s1.ret, s2.ret, assumed)


def _rename_tparam(sig: GenericSig, i: int, newname: str) -> GenericSig:
    old = sig.tparams[i].name
    v = TypeVar(newname)
    tps = list(sig.tparams)
    tps[i] = TParam(newname, tps[i].lower, tps[i].upper)
    for j in range(i + 1, len(tps)):
        tps[j] = TParam(
            tps[j].name,
            subst_type_var(tps[j].lower, v, old),
            subst_type_var(tps[j].upper, v, old),
        )
    return GenericSig(
        tuple(tps),
        tuple(subst_type_var(a, v, old) for a in sig.args),
        subst_type_var(sig.ret, v, old),
    )


def _equiv_sec(s1, s2, assumed: frozenset) -> bool:
    if isinstance(s1, Faceted) and isinstance(s2, Faceted):
        return _equiv(s1.safety, s2.safety, assumed) and _equiv(s1.decl, s2.decl, assumed)
    return s1 == s2


def sectype_equiv(s1: Faceted, s2: Faceted) -> bool:
    """Pointwise type equivalence of the two facets."""
    return _equiv_sec(s1, s2, frozenset())


# ---------------------------------------------------------------------------
# Unfolding
# ---------------------------------------------------------------------------


def unfold(t: DeclType) -> Type:
    """One-level unfolding: substitute an object type for its own self
    variable in its record. Primitives (and the empty interface) unfold to
    themselves."""
    if isinstance(t, Prim):
        return t
    if isinstance(t, ObjType):
        return ObjType(t.self_var, tuple((m, subst_self_var(s, t, t.self_var)) for m, s in t.methods))
    if isinstance(t, TypeVar):
        raise UnfoldOfVariable(f"cannot unfold generic variable {t.name}")
    raise NotClosed(f"cannot unfold free self variable {t.name}")


def unfold_soft(u: DeclType) -> DeclType:
    """`unfold`, except generic variables pass through unchanged (used by
    the facet-wise well-formedness check)."""
    if isinstance(u, TypeVar):
        return u
    return unfold(u)


# ---------------------------------------------------------------------------
# Bounds, membership, signatures, intervals
# ---------------------------------------------------------------------------


def upper_bound(delta: TypeVarEnv, u: DeclType) -> Type:
    """Chase a variable's upper bounds until a non-variable type."""
    seen: set[str] = set()
    while isinstance(u, TypeVar):
        if u.name in seen:
            raise CyclicBounds(f"cycle through type variable {u.name}")
        if u.name not in delta:
            raise UnboundTypeVar(u.name)
        seen.add(u.name)
        u = delta[u.name][1]
    return u


def has_method(delta: TypeVarEnv, u: DeclType, m: str) -> bool:
    """Method membership; variables are resolved at their upper bound."""
    t = upper_bound(delta, u)
    if isinstance(t, ObjType):
        return any(name == m for name, _ in t.methods)
    if isinstance(t, Prim):
        return prim_sig(t.kind, m) is not None
    raise NotClosed(f"membership on free self variable {t.name}")


def msig(delta: TypeVarEnv, u: DeclType, m: str) -> MethodSig:
    """The closed signature of `m` in `u`: object-type signatures have the
    self variable replaced by the object type itself; primitive kinds use
    the primitive interface table; variables look up in their upper bound.
    """
    t = upper_bound(delta, u)
    if isinstance(t, ObjType):
        sig = t.sig(m)
        if sig is None:
            raise NoSuchMethod(f"{m} not in object type")
        return subst_self_var(sig, t, t.self_var)
    if isinstance(t, Prim):
        sig = prim_sig(t.kind, m)
        if sig is None:
            raise NoSuchMethod(f"{m} not in primitive {t.kind}")
        return sig
    raise NotClosed(f"signature lookup on free self variable {t.name}")


def in_interval(delta: TypeVarEnv, u: DeclType, lo: DeclType, hi: DeclType) -> bool:
    """`lo <: u <: hi` under `delta` with no subtyping assumptions."""
    from . import subtyping

    return subtyping.sub_type(delta, frozenset(), lo, u) and subtyping.sub_type(delta, frozenset(), u, hi)


# ---------------------------------------------------------------------------
# Ad-hoc polymorphism for primitive signatures
# ---------------------------------------------------------------------------


def rdecl(arg: Faceted, ret_kind: str) -> DeclType:
    """Declassification of a primitive-signature result: public when the
    argument is public (its facets coincide), private (`Top`) otherwise."""
    if not isinstance(arg.safety, Prim):
        raise GobsecError("rdecl requires a primitive-safety argument")
    if type_equiv(arg.safety, arg.decl):
        return Prim(ret_kind)
    return TOP


def rdecl_many(args: tuple[Faceted, ...], ret_kind: str) -> DeclType:
    """Pointwise extension: public only if every argument is public."""
    for a in args:
        if is_top(rdecl(a, ret_kind)):
            return TOP
    return Prim(ret_kind)


def soundsig(sig: GenericSig) -> bool:
    """Whether a standard signature may declassify a primitive one:
    every primitive-safety argument is public, or the return
    declassification is the empty interface."""
    if isinstance(sig.ret, Faceted) and is_top(sig.ret.decl):
        return True
    for a in sig.args:
        if isinstance(a, Faceted) and isinstance(a.safety, Prim):
            if not type_equiv(a.safety, a.decl):
                return False
    return True
