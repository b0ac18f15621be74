"""Abstract syntax for GObSec terms, types, and environments.

Terms are variables, primitive literals, object literals, and method
invocations (optionally carrying declassification type arguments).
`Ascribe`, `If`, and `Let` are surface forms: the checker consumes
ascriptions, `If` evaluates natively, and `Let` is lowered to an
immediately-invoked single-method object before evaluation.

Security types are faceted: a safety type (the full implementation
interface) paired with a declassification type (the interface the public
observer may use). Object types are equi-recursive via their self type
variable; declassification positions may additionally mention bounded
generic type variables.

All nodes are frozen; substitution returns new trees and is
capture-avoiding with respect to every binder kind (term parameters and
self names, object-type self variables, signature type parameters).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union


class GobsecError(Exception):
    """Base class for errors raised by the gobsec package."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

PRIM_KINDS = ("Int", "String", "Bool", "Unit")


@dataclass(frozen=True)
class Prim:
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in PRIM_KINDS:
            raise GobsecError(f"unknown primitive kind {self.kind!r}")


@dataclass(frozen=True)
class SelfVar:
    """Occurrence of an object type's self variable."""

    name: str


@dataclass(frozen=True)
class TypeVar:
    """Occurrence of a bounded generic declassification variable."""

    name: str


@dataclass(frozen=True)
class ObjType:
    """Recursive object interface: `Obj(a)[m : sig, ...]`.

    `self_var` is bound in every signature of `methods`. Method names are
    pairwise distinct; order is irrelevant for equivalence.
    """

    self_var: str
    methods: tuple[tuple[str, "MethodSig"], ...]

    def __post_init__(self) -> None:
        names = [m for m, _ in self.methods]
        if len(names) != len(set(names)):
            raise GobsecError(f"duplicate method name in object type: {names}")

    def sig(self, name: str) -> "MethodSig | None":
        for m, s in self.methods:
            if m == name:
                return s
        return None

    def method_names(self) -> tuple[str, ...]:
        return tuple(m for m, _ in self.methods)


Type = Union[Prim, SelfVar, ObjType]
DeclType = Union[Prim, SelfVar, ObjType, TypeVar]

#: The empty object interface; top of the subtyping order.
TOP = ObjType("top", ())


def is_top(u: DeclType) -> bool:
    """Structurally the empty interface (the canonical supertype)."""
    return isinstance(u, ObjType) and not u.methods


# ---------------------------------------------------------------------------
# Method signatures and security types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TParam:
    """One bounded type parameter `X : lower .. upper` of a signature."""

    name: str
    lower: DeclType
    upper: DeclType


@dataclass(frozen=True)
class GenericSig:
    """Standard method signature `<X:A..B, ...> S1 * ... * Sn -> S`.

    Earlier type parameters scope over the bounds of later ones and over
    all argument and return types.
    """

    tparams: tuple[TParam, ...]
    args: tuple["SecType", ...]
    ret: "SecType"


@dataclass(frozen=True)
class PrimSig:
    """Ad-hoc polymorphic primitive signature `P<*> * ... -> P<*>`."""

    arg_kinds: tuple[str, ...]
    ret_kind: str


MethodSig = Union[GenericSig, PrimSig]


@dataclass(frozen=True)
class Faceted:
    """Security type `T<U>`: safety facet plus declassification facet."""

    safety: Type
    decl: DeclType


@dataclass(frozen=True)
class PrimStar:
    """Use-site-resolved primitive security type `P<*>`.

    Only appears when elaborating primitive signatures (never in
    checked-in environments or synthesized types).
    """

    kind: str


SecType = Union[Faceted, PrimStar]


def public(t: Type) -> Faceted:
    """`T!`, the fully public security type T<T>."""
    return Faceted(t, t)


def private(t: Type) -> Faceted:
    """`T?`, the fully private security type T<Top>."""
    return Faceted(t, TOP)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

Span = Union[tuple[int, int], None]


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class PrimLit:
    """Primitive literal; `value` is an int, str, bool, or None (unit)."""

    value: object
    kind: str
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class MethodDef:
    name: str
    params: tuple[str, ...]
    body: "Expr"

    def __post_init__(self) -> None:
        if len(self.params) != len(set(self.params)):
            raise GobsecError(f"duplicate parameter in method {self.name}")


@dataclass(frozen=True)
class ObjectLit:
    """`new { self : S  m(x) => e ... }`; `self_name` binds in every body."""

    self_name: str
    sectype: Faceted
    methods: tuple[MethodDef, ...]
    span: Span = field(default=None, compare=False)

    def __post_init__(self) -> None:
        names = [m.name for m in self.methods]
        if len(names) != len(set(names)):
            raise GobsecError(f"duplicate method in object literal: {names}")

    def impl(self, name: str) -> MethodDef | None:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class Invoke:
    recv: "Expr"
    method: str
    targs: tuple[DeclType, ...]
    args: tuple["Expr", ...]
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class Ascribe:
    expr: "Expr"
    at: Faceted
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    els: "Expr"
    span: Span = field(default=None, compare=False)


@dataclass(frozen=True)
class Let:
    """Surface `let x = e in body`; lowered before evaluation."""

    name: str
    bound: "Expr"
    body: "Expr"
    span: Span = field(default=None, compare=False)


Expr = Union[Var, PrimLit, ObjectLit, Invoke, Ascribe, If, Let]

UNIT = PrimLit(None, "Unit")
TRUE = PrimLit(True, "Bool")
FALSE = PrimLit(False, "Bool")


def is_value(e: Expr) -> bool:
    return isinstance(e, (PrimLit, ObjectLit))


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

#: Bounded type variable environment: name -> (lower, upper), insertion-ordered.
TypeVarEnv = Mapping[str, tuple[DeclType, DeclType]]

#: Term environment: name -> security type, insertion-ordered.
TermEnv = Mapping[str, Faceted]

#: Subtyping assumptions: pairs (left, right-self-var-name) where the left
#: component is ("self", name) or ("prim", kind).
SubAssumptions = frozenset


def assume_self(sigma: SubAssumptions, alpha: str, beta: str) -> SubAssumptions:
    return sigma | {(("self", alpha), beta)}


def assume_prim(sigma: SubAssumptions, kind: str, beta: str) -> SubAssumptions:
    return sigma | {(("prim", kind), beta)}


EMPTY_SIGMA: SubAssumptions = frozenset()


# ---------------------------------------------------------------------------
# Fresh names
# ---------------------------------------------------------------------------

_fresh_counter = itertools.count(1)


def fresh(base: str = "a") -> str:
    """A name no surface program can contain (`%` is not lexable)."""
    return f"{base}%{next(_fresh_counter)}"


# ---------------------------------------------------------------------------
# Free variables
# ---------------------------------------------------------------------------


def free_type_vars(x: object) -> frozenset[str]:
    """Free generic type variables of a type, signature, or security type."""
    out: set[str] = set()
    _ftv(x, frozenset(), out)
    return frozenset(out)


def _ftv(x: object, bound: frozenset[str], out: set[str]) -> None:
    if isinstance(x, TypeVar):
        if x.name not in bound:
            out.add(x.name)
    elif isinstance(x, ObjType):
        for _, sig in x.methods:
            _ftv(sig, bound, out)
    elif isinstance(x, GenericSig):
        inner = bound
        for tp in x.tparams:
            _ftv(tp.lower, inner, out)
            _ftv(tp.upper, inner, out)
            inner = inner | {tp.name}
        for a in x.args:
            _ftv(a, inner, out)
        _ftv(x.ret, inner, out)
    elif isinstance(x, Faceted):
        _ftv(x.safety, bound, out)
        _ftv(x.decl, bound, out)
    # Prim, SelfVar, PrimSig, PrimStar: no generic variables


def free_self_vars(x: object) -> frozenset[str]:
    """Free self type variables of a type, signature, or security type."""
    out: set[str] = set()
    _fsv(x, frozenset(), out)
    return frozenset(out)


def _fsv(x: object, bound: frozenset[str], out: set[str]) -> None:
    if isinstance(x, SelfVar):
        if x.name not in bound:
            out.add(x.name)
    elif isinstance(x, ObjType):
        inner = bound | {x.self_var}
        for _, sig in x.methods:
            _fsv(sig, inner, out)
    elif isinstance(x, GenericSig):
        for tp in x.tparams:
            _fsv(tp.lower, bound, out)
            _fsv(tp.upper, bound, out)
        for a in x.args:
            _fsv(a, bound, out)
        _fsv(x.ret, bound, out)
    elif isinstance(x, Faceted):
        _fsv(x.safety, bound, out)
        _fsv(x.decl, bound, out)


def is_closed_type(x: object) -> bool:
    """No free self variables (generic variables may remain)."""
    return not free_self_vars(x)


# ---------------------------------------------------------------------------
# Substitution: generic type variables
# ---------------------------------------------------------------------------


def subst_type_var(target, actual: DeclType, name: str):
    """Replace free occurrences of generic variable `name` by `actual`.

    `actual` must be closed with respect to self variables. Signature type
    parameters that would capture a free variable of `actual` are renamed.
    Total; returns the same node kind as `target`.
    """
    return _stv(target, actual, name)


def _stv(x, actual: DeclType, name: str):
    if isinstance(x, TypeVar):
        return actual if x.name == name else x
    if isinstance(x, (Prim, SelfVar, PrimSig, PrimStar)):
        return x
    if isinstance(x, ObjType):
        new = tuple((m, _stv(s, actual, name)) for m, s in x.methods)
        return x if new == x.methods else ObjType(x.self_var, new)
    if isinstance(x, Faceted):
        return Faceted(_stv(x.safety, actual, name), _stv(x.decl, actual, name))
    if isinstance(x, GenericSig):
        return _stv_sig(x, actual, name)
    raise GobsecError(f"cannot substitute type variable in {type(x).__name__}")


def _stv_sig(sig: GenericSig, actual: DeclType, name: str) -> GenericSig:
    captured = free_type_vars(actual)
    tparams: list[TParam] = []
    shadowed = False
    rest_args, rest_ret = sig.args, sig.ret
    later: list[TParam] = list(sig.tparams)
    while later:
        tp = later.pop(0)
        lo = tp.lower if shadowed else _stv(tp.lower, actual, name)
        hi = tp.upper if shadowed else _stv(tp.upper, actual, name)
        if tp.name == name:
            # Inner binder shadows the substituted variable from here on.
            tparams.append(TParam(tp.name, lo, hi))
            shadowed = True
            continue
        if not shadowed and tp.name in captured:
            # Rename this parameter to avoid capturing a variable of `actual`.
            newname = fresh(tp.name)
            renamer = TypeVar(newname)
            later = [
                TParam(q.name, _stv(q.lower, renamer, tp.name), _stv(q.upper, renamer, tp.name))
                for q in later
            ]
            rest_args = tuple(_stv(a, renamer, tp.name) for a in rest_args)
            rest_ret = _stv(rest_ret, renamer, tp.name)
            tparams.append(TParam(newname, lo, hi))
            continue
        tparams.append(TParam(tp.name, lo, hi))
    if shadowed:
        return GenericSig(tuple(tparams), rest_args, rest_ret)
    return GenericSig(
        tuple(tparams),
        tuple(_stv(a, actual, name) for a in rest_args),
        _stv(rest_ret, actual, name),
    )


def subst_type_var_expr(e: Expr, actual: DeclType, name: str) -> Expr:
    """Replace a generic variable inside a term's type annotations and
    type-argument lists. Used when applying a type substitution to a program.
    """
    if isinstance(e, (Var, PrimLit)):
        return e
    if isinstance(e, ObjectLit):
        return ObjectLit(
            e.self_name,
            _stv(e.sectype, actual, name),
            tuple(MethodDef(m.name, m.params, subst_type_var_expr(m.body, actual, name)) for m in e.methods),
            e.span,
        )
    if isinstance(e, Invoke):
        return Invoke(
            subst_type_var_expr(e.recv, actual, name),
            e.method,
            tuple(_stv(t, actual, name) for t in e.targs),
            tuple(subst_type_var_expr(a, actual, name) for a in e.args),
            e.span,
        )
    if isinstance(e, Ascribe):
        return Ascribe(subst_type_var_expr(e.expr, actual, name), _stv(e.at, actual, name), e.span)
    if isinstance(e, If):
        return If(
            subst_type_var_expr(e.cond, actual, name),
            subst_type_var_expr(e.then, actual, name),
            subst_type_var_expr(e.els, actual, name),
            e.span,
        )
    if isinstance(e, Let):
        return Let(e.name, subst_type_var_expr(e.bound, actual, name), subst_type_var_expr(e.body, actual, name), e.span)
    raise GobsecError(f"unknown expression {type(e).__name__}")


# ---------------------------------------------------------------------------
# Substitution: self type variables
# ---------------------------------------------------------------------------


def subst_self_var(target, obj: Type, name: str):
    """Replace free occurrences of self variable `name` by `obj`.

    Inner object types binding the same name shadow it; inner binders that
    would capture a free self variable of `obj` are renamed.
    """
    return _ssv(target, obj, name)


def _ssv(x, obj: Type, name: str):
    if isinstance(x, SelfVar):
        return obj if x.name == name else x
    if isinstance(x, (Prim, TypeVar, PrimSig, PrimStar)):
        return x
    if isinstance(x, ObjType):
        if x.self_var == name:
            return x  # shadowed
        if x.self_var in free_self_vars(obj):
            renamed = rename_self_var(x, fresh(x.self_var))
            return _ssv(renamed, obj, name)
        new = tuple((m, _ssv(s, obj, name)) for m, s in x.methods)
        return x if new == x.methods else ObjType(x.self_var, new)
    if isinstance(x, Faceted):
        return Faceted(_ssv(x.safety, obj, name), _ssv(x.decl, obj, name))
    if isinstance(x, GenericSig):
        return GenericSig(
            tuple(TParam(tp.name, _ssv(tp.lower, obj, name), _ssv(tp.upper, obj, name)) for tp in x.tparams),
            tuple(_ssv(a, obj, name) for a in x.args),
            _ssv(x.ret, obj, name),
        )
    raise GobsecError(f"cannot substitute self variable in {type(x).__name__}")


def rename_self_var(o: ObjType, newname: str) -> ObjType:
    """Alpha-rename an object type's binder."""
    body = ObjType(newname, tuple((m, _ssv(s, SelfVar(newname), o.self_var)) for m, s in o.methods))
    return body


# ---------------------------------------------------------------------------
# Substitution: term variables
# ---------------------------------------------------------------------------


def subst_term(e: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """Simultaneous capture-avoiding substitution of terms for variables.

    Intended for closed replacement values (the evaluator's use); binders
    shadow as usual and are renamed if a replacement's free variables would
    be captured.
    """
    if not bindings:
        return e
    return _st(e, dict(bindings))


def free_term_vars(e: Expr) -> frozenset[str]:
    out: set[str] = set()
    _ftermv(e, frozenset(), out)
    return frozenset(out)


def _ftermv(e: Expr, bound: frozenset[str], out: set[str]) -> None:
    if isinstance(e, Var):
        if e.name not in bound:
            out.add(e.name)
    elif isinstance(e, PrimLit):
        pass
    elif isinstance(e, ObjectLit):
        for m in e.methods:
            _ftermv(m.body, bound | {e.self_name} | set(m.params), out)
    elif isinstance(e, Invoke):
        _ftermv(e.recv, bound, out)
        for a in e.args:
            _ftermv(a, bound, out)
    elif isinstance(e, Ascribe):
        _ftermv(e.expr, bound, out)
    elif isinstance(e, If):
        _ftermv(e.cond, bound, out)
        _ftermv(e.then, bound, out)
        _ftermv(e.els, bound, out)
    elif isinstance(e, Let):
        _ftermv(e.bound, bound, out)
        _ftermv(e.body, bound | {e.name}, out)


def _st(e: Expr, binds: dict[str, Expr]) -> Expr:
    if isinstance(e, Var):
        return binds.get(e.name, e)
    if isinstance(e, PrimLit):
        return e
    if isinstance(e, ObjectLit):
        live = {k: v for k, v in binds.items() if k != e.self_name}
        captured = set()
        for v in live.values():
            captured |= free_term_vars(v)
        self_name = e.self_name
        methods = e.methods
        if self_name in captured:
            newself = fresh(self_name)
            methods = tuple(
                MethodDef(m.name, m.params, _st(m.body, {self_name: Var(newself)})) for m in methods
            )
            self_name = newself
        out = []
        for m in methods:
            inner = {k: v for k, v in live.items() if k not in m.params}
            params = m.params
            body = m.body
            clash = [p for p in params if p in captured]
            if clash:
                ren = {p: fresh(p) for p in clash}
                body = _st(body, {p: Var(n) for p, n in ren.items()})
                params = tuple(ren.get(p, p) for p in params)
            out.append(MethodDef(m.name, params, _st(body, inner) if inner else body))
        return ObjectLit(self_name, e.sectype, tuple(out), e.span)
    if isinstance(e, Invoke):
        return Invoke(_st(e.recv, binds), e.method, e.targs, tuple(_st(a, binds) for a in e.args), e.span)
    if isinstance(e, Ascribe):
        return Ascribe(_st(e.expr, binds), e.at, e.span)
    if isinstance(e, If):
        return If(_st(e.cond, binds), _st(e.then, binds), _st(e.els, binds), e.span)
    if isinstance(e, Let):
        live = {k: v for k, v in binds.items() if k != e.name}
        captured = set()
        for v in live.values():
            captured |= free_term_vars(v)
        name, body = e.name, e.body
        if name in captured:
            newname = fresh(name)
            body = _st(body, {name: Var(newname)})
            name = newname
        return Let(name, _st(e.bound, binds), _st(body, live) if live else body, e.span)
    raise GobsecError(f"unknown expression {type(e).__name__}")


# ---------------------------------------------------------------------------
# Canonical (alpha-normal) forms
# ---------------------------------------------------------------------------


def canon(x) -> tuple:
    """Hashable canonical form of a type/signature/security type.

    Bound self variables and signature type parameters are numbered by
    binder depth, so alpha-equivalent trees have equal canonical forms.
    Free self variables and free generic variables keep their names.
    Record entries are sorted by method name.
    """
    return _canon(x, {}, {})


def _canon(x, senv: dict[str, int], genv: dict[str, int]) -> tuple:
    if isinstance(x, Prim):
        return ("prim", x.kind)
    if isinstance(x, SelfVar):
        if x.name in senv:
            return ("sbound", senv[x.name])
        return ("sfree", x.name)
    if isinstance(x, TypeVar):
        if x.name in genv:
            return ("gbound", genv[x.name])
        return ("gfree", x.name)
    if isinstance(x, ObjType):
        inner = dict(senv)
        inner[x.self_var] = len(senv)
        entries = tuple(sorted((m, _canon(s, inner, genv)) for m, s in x.methods))
        return ("obj", entries)
    if isinstance(x, PrimSig):
        return ("psig", x.arg_kinds, x.ret_kind)
    if isinstance(x, GenericSig):
        g = dict(genv)
        tps = []
        for tp in x.tparams:
            tps.append((_canon(tp.lower, senv, g), _canon(tp.upper, senv, g)))
            g[tp.name] = len(genv) + len(tps) - 1
        return (
            "gsig",
            tuple(tps),
            tuple(_canon(a, senv, g) for a in x.args),
            _canon(x.ret, senv, g),
        )
    if isinstance(x, Faceted):
        return ("sec", _canon(x.safety, senv, genv), _canon(x.decl, senv, genv))
    if isinstance(x, PrimStar):
        return ("pstar", x.kind)
    raise GobsecError(f"cannot canonicalize {type(x).__name__}")


def canon_expr(e: Expr) -> tuple:
    """Canonical form of a term, up to renaming of term/self/type binders."""
    return _canon_expr(e, {}, {})


def _canon_expr(e: Expr, tenv: dict[str, int], senv: dict[str, int]) -> tuple:
    if isinstance(e, Var):
        if e.name in tenv:
            return ("bvar", tenv[e.name])
        return ("fvar", e.name)
    if isinstance(e, PrimLit):
        return ("lit", e.kind, e.value)
    if isinstance(e, ObjectLit):
        inner = dict(tenv)
        inner[e.self_name] = len(tenv)
        ms = []
        for m in sorted(e.methods, key=lambda m: m.name):
            env = dict(inner)
            for p in m.params:
                env[p] = len(env)
            ms.append((m.name, len(m.params), _canon_expr(m.body, env, senv)))
        return ("objlit", _canon(e.sectype, senv, {}), tuple(ms))
    if isinstance(e, Invoke):
        return (
            "invoke",
            _canon_expr(e.recv, tenv, senv),
            e.method,
            tuple(_canon(t, senv, {}) for t in e.targs),
            tuple(_canon_expr(a, tenv, senv) for a in e.args),
        )
    if isinstance(e, Ascribe):
        return ("ascribe", _canon_expr(e.expr, tenv, senv), _canon(e.at, senv, {}))
    if isinstance(e, If):
        return (
            "if",
            _canon_expr(e.cond, tenv, senv),
            _canon_expr(e.then, tenv, senv),
            _canon_expr(e.els, tenv, senv),
        )
    if isinstance(e, Let):
        inner = dict(tenv)
        inner[e.name] = len(tenv)
        return ("let", _canon_expr(e.bound, tenv, senv), _canon_expr(e.body, inner, senv))
    raise GobsecError(f"unknown expression {type(e).__name__}")


def alpha_eq(a, b) -> bool:
    """Alpha-equality of types or signatures (no fold/unfold)."""
    return canon(a) == canon(b)


def alpha_eq_expr(a: Expr, b: Expr) -> bool:
    return canon_expr(a) == canon_expr(b)


def canon_delta(delta: TypeVarEnv) -> tuple:
    return tuple((name, canon(lo), canon(hi)) for name, (lo, hi) in delta.items())


def iter_subterms(u: DeclType) -> Iterator[DeclType]:
    """All type subterms (including `u` itself), without opening binders."""
    yield u
    if isinstance(u, ObjType):
        for _, sig in u.methods:
            if isinstance(sig, GenericSig):
                for tp in sig.tparams:
                    yield from iter_subterms(tp.lower)
                    yield from iter_subterms(tp.upper)
                for a in sig.args:
                    if isinstance(a, Faceted):
                        yield from iter_subterms(a.safety)
                        yield from iter_subterms(a.decl)
                if isinstance(sig.ret, Faceted):
                    yield from iter_subterms(sig.ret.safety)
                    yield from iter_subterms(sig.ret.decl)
