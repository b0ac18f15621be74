"""Algorithmic subtyping for declassification types, records, signatures,
and security types, plus a bounded declarative-search oracle used to
cross-check the algorithm.

The algorithm is goal-directed:

* equivalent types are subtypes (covers reflexivity and fold/unfold);
* the empty interface is a top: anything is below it;
* a variable on the left is chased through its upper bound, a variable on
  the right through its lower bound;
* self variables resolve through the assumption set built up when record
  comparison descends under binders;
* primitive kinds sit below object interfaces via their method table;
* object-vs-object compares records under a fresh pair of assumed-related
  self variables, retrying on one-level unfoldings when the direct
  comparison fails (this recovers mixed folded/unfolded spellings).

Termination comes from an in-flight goal set keyed on canonical forms:
a goal that recurs inside its own derivation is assumed to hold
(coinduction), which is exactly what recursive object types need.

Transitivity is not a rule of the algorithm; the oracle implements the
declarative rules including explicit transitivity over a finite candidate
pool and is used by the test suite to validate the algorithm on a small
exhaustive universe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import meths, type_equiv, unfold
from .syntax import (
    EMPTY_SIGMA,
    TOP,
    DeclType,
    Faceted,
    GenericSig,
    GobsecError,
    MethodSig,
    ObjType,
    Prim,
    PrimSig,
    SecType,
    SelfVar,
    SubAssumptions,
    TParam,
    TypeVar,
    TypeVarEnv,
    canon,
    canon_delta,
    is_top,
    iter_subterms,
    rename_self_var,
    subst_type_var,
)


class IllFormedInput(GobsecError):
    pass


class BudgetExceeded(GobsecError):
    """The declarative search ran out of derivation depth undecided."""


@dataclass
class SubGoalCache:
    """Goals currently assumed while their derivation is attempted."""

    in_flight: set = field(default_factory=set)


def _goal_key(delta: TypeVarEnv, sigma: SubAssumptions, u1, u2, tag: str) -> tuple:
    # Only assumptions about self variables free in the goal can influence
    # its derivation; pruning the rest lets a goal that recurs under fresh
    # (irrelevant) assumptions hit the in-flight set and close the
    # coinductive loop.
    from .syntax import free_self_vars

    fsv1 = free_self_vars(u1)
    fsv2 = free_self_vars(u2)
    live = tuple(
        sorted(
            (l, r)
            for (l, r) in sigma
            if r in fsv2 and (l[0] == "prim" or l[1] in fsv1)
        )
    )
    return (tag, canon_delta(delta), live, canon(u1), canon(u2))


# ---------------------------------------------------------------------------
# Algorithmic subtyping
# ---------------------------------------------------------------------------


def sub_type(
    delta: TypeVarEnv,
    sigma: SubAssumptions,
    u1: DeclType,
    u2: DeclType,
    *,
    allow_ig: bool = False,
) -> bool:
    """Decide `delta; sigma |- u1 <: u2`.

    With `allow_ig` the signature comparison additionally accepts a sound
    standard signature above a primitive signature; this variant is what
    the facet-wise well-formedness check uses.
    """
    return _sub(delta, sigma, u1, u2, allow_ig, SubGoalCache(), 0)


def simple_sub_type(t1, t2) -> bool:
    """Single-facet subtyping: like `sub_type` but security types compare
    by their safety facets alone, and signature bounds are ignored. This
    is the order of the simple type system."""
    return _sub({}, EMPTY_SIGMA, t1, t2, False, SubGoalCache(), 0, simple=True)


def _sub(delta, sigma, u1, u2, allow_ig, cache: SubGoalCache, depth: int, simple: bool = False) -> bool:
    if type_equiv(u1, u2):
        return True
    if is_top(u2):
        return True

    tag = ("ig" if allow_ig else "sub") + ("-simple" if simple else "")
    key = _goal_key(delta, sigma, u1, u2, tag)
    if key in cache.in_flight:
        return True
    cache.in_flight.add(key)
    try:
        return _sub_dispatch(delta, sigma, u1, u2, allow_ig, cache, depth, simple)
    finally:
        cache.in_flight.discard(key)


def _sub_dispatch(delta, sigma, u1, u2, allow_ig, cache, depth, simple: bool = False) -> bool:
    # Generic variable on the left: through its upper bound.
    if isinstance(u1, TypeVar):
        if u1.name not in delta:
            raise IllFormedInput(f"unbound type variable {u1.name}")
        if _sub(delta, sigma, delta[u1.name][1], u2, allow_ig, cache, depth, simple):
            return True
    # Generic variable on the right: through its lower bound.
    if isinstance(u2, TypeVar):
        if u2.name not in delta:
            raise IllFormedInput(f"unbound type variable {u2.name}")
        return _sub(delta, sigma, u1, delta[u2.name][0], allow_ig, cache, depth, simple)
    if isinstance(u1, TypeVar):
        return False

    if isinstance(u1, SelfVar):
        return isinstance(u2, SelfVar) and (("self", u1.name), u2.name) in sigma
    if isinstance(u2, SelfVar):
        return isinstance(u1, Prim) and (("prim", u1.kind), u2.name) in sigma

    if isinstance(u1, Prim):
        if isinstance(u2, Prim):
            return False  # distinct kinds; equal kinds were caught by equivalence
        beta = f"%b{depth}"
        r2 = rename_self_var(u2, beta).methods
        sigma2 = sigma | {(("prim", u1.kind), beta)}
        # A primitive interface consists of primitive signatures only, so a
        # standard signature above one is accepted exactly when it is a
        # sound declassification of it.
        return _sub_record(delta, sigma2, meths(u1.kind), r2, True, cache, depth + 1, simple)

    if isinstance(u1, ObjType) and isinstance(u2, ObjType):
        alpha, beta = f"%a{depth}", f"%b{depth}"
        r1 = rename_self_var(u1, alpha).methods
        r2 = rename_self_var(u2, beta).methods
        sigma2 = sigma | {(("self", alpha), beta)}
        if _sub_record(delta, sigma2, r1, r2, allow_ig, cache, depth + 1, simple):
            return True
        # Retry on one-level unfoldings: recovers goals whose left and
        # right mix folded and unfolded spellings of recursive types.
        v1, v2 = unfold(u1), unfold(u2)
        if (canon(v1), canon(v2)) != (canon(u1), canon(u2)):
            return _sub(delta, sigma, v1, v2, allow_ig, cache, depth, simple)
        return False

    # Object type below a primitive kind: no rule.
    return False


def sub_record(
    delta: TypeVarEnv,
    sigma: SubAssumptions,
    r1: tuple[tuple[str, MethodSig], ...],
    r2: tuple[tuple[str, MethodSig], ...],
    *,
    allow_ig: bool = False,
) -> bool:
    """Width and depth subtyping between two method records."""
    return _sub_record(delta, sigma, r1, r2, allow_ig, SubGoalCache(), 0)


def _sub_record(delta, sigma, r1, r2, allow_ig, cache, depth, simple: bool = False) -> bool:
    left = dict(r1)
    for name, sig2 in r2:
        sig1 = left.get(name)
        if sig1 is None:
            return False
        if not _sub_sig(delta, sigma, sig1, sig2, allow_ig, cache, depth, simple):
            return False
    return True


def sub_sig(
    delta: TypeVarEnv,
    sigma: SubAssumptions,
    m1: MethodSig,
    m2: MethodSig,
    *,
    allow_ig: bool = False,
) -> bool:
    """Signature subtyping: bounds of the right inside bounds of the left,
    then contravariant arguments and covariant return; primitive
    signatures are below themselves only (and, under `allow_ig`, below
    sound standard signatures)."""
    return _sub_sig(delta, sigma, m1, m2, allow_ig, SubGoalCache(), 0)


def _sub_sig(delta, sigma, m1, m2, allow_ig, cache, depth, simple: bool = False) -> bool:
    if isinstance(m1, PrimSig) and isinstance(m2, PrimSig):
        return m1 == m2
    if isinstance(m1, PrimSig) and isinstance(m2, GenericSig):
        if not allow_ig:
            return False
        return _ig_ok(delta, sigma, m1, m2, cache, depth, simple)
    if isinstance(m1, GenericSig) and isinstance(m2, PrimSig):
        return False
    return _sub_generic(delta, sigma, m1, m2, allow_ig, cache, depth, simple)


def _rename_params(sig: GenericSig, names: list[str]) -> GenericSig:
    for i, n in enumerate(names):
        old = sig.tparams[i].name
        if old == n:
            continue
        v = TypeVar(n)
        tps = list(sig.tparams)
        tps[i] = TParam(n, tps[i].lower, tps[i].upper)
        for j in range(i + 1, len(tps)):
            tps[j] = TParam(tps[j].name, subst_type_var(tps[j].lower, v, old), subst_type_var(tps[j].upper, v, old))
        sig = GenericSig(
            tuple(tps),
            tuple(subst_type_var(a, v, old) for a in sig.args),
            subst_type_var(sig.ret, v, old),
        )
    return sig


def _sub_generic(delta, sigma, m1: GenericSig, m2: GenericSig, allow_ig, cache, depth, simple: bool = False) -> bool:
    if len(m1.args) != len(m2.args):
        return False
    if simple:
        # Type parameters and their bounds play no role in the simple order.
        for a1, a2 in zip(m1.args, m2.args):
            if not _sub_sectype(delta, sigma, a2, a1, allow_ig, cache, depth, simple):
                return False
        return _sub_sectype(delta, sigma, m1.ret, m2.ret, allow_ig, cache, depth, simple)
    if len(m1.tparams) != len(m2.tparams):
        return False
    names = [f"%X{depth}.{i}" for i in range(len(m1.tparams))]
    m1 = _rename_params(m1, names)
    m2 = _rename_params(m2, names)
    inner = dict(delta)
    for tp1, tp2 in zip(m1.tparams, m2.tparams):
        # Bounds of the supertype must lie inside the bounds of the subtype.
        if not _sub(inner, sigma, tp2.upper, tp1.upper, allow_ig, cache, depth):
            return False
        if not _sub(inner, sigma, tp1.lower, tp2.lower, allow_ig, cache, depth):
            return False
        inner[tp1.name] = (tp2.lower, tp2.upper)
    for a1, a2 in zip(m1.args, m2.args):
        if not _sub_sectype(inner, sigma, a2, a1, allow_ig, cache, depth):
            return False
    return _sub_sectype(inner, sigma, m1.ret, m2.ret, allow_ig, cache, depth)


def _ig_ok(delta, sigma, prim: PrimSig, gen: GenericSig, cache, depth, simple: bool = False) -> bool:
    """A standard signature declassifying a primitive one: contravariant
    argument safety, covariant return safety, and the signature is sound
    (public primitive arguments or private return). The simple order keeps
    the facet comparisons but drops the soundness condition, which speaks
    about declassification only."""
    from .algebra import soundsig

    if len(gen.args) != len(prim.arg_kinds):
        return False
    inner = dict(delta)
    if not simple:
        for tp in gen.tparams:
            inner[tp.name] = (tp.lower, tp.upper)
    for kind, arg in zip(prim.arg_kinds, gen.args):
        if not isinstance(arg, Faceted):
            return False
        if not _sub(inner, sigma, arg.safety, Prim(kind), True, cache, depth, simple):
            return False
    if not isinstance(gen.ret, Faceted):
        return False
    if not _sub(inner, sigma, Prim(prim.ret_kind), gen.ret.safety, True, cache, depth, simple):
        return False
    return True if simple else soundsig(gen)


def sub_sectype(
    delta: TypeVarEnv,
    sigma: SubAssumptions,
    s1: SecType,
    s2: SecType,
    *,
    allow_ig: bool = False,
) -> bool:
    """Pointwise subtyping of the two facets."""
    return _sub_sectype(delta, sigma, s1, s2, allow_ig, SubGoalCache(), 0)


def _sub_sectype(delta, sigma, s1, s2, allow_ig, cache, depth, simple: bool = False) -> bool:
    if isinstance(s1, Faceted) and isinstance(s2, Faceted):
        if simple:
            return _sub(delta, sigma, s1.safety, s2.safety, allow_ig, cache, depth, True)
        return _sub(delta, sigma, s1.safety, s2.safety, allow_ig, cache, depth) and _sub(
            delta, sigma, s1.decl, s2.decl, allow_ig, cache, depth
        )
    return s1 == s2


# ---------------------------------------------------------------------------
# Declarative oracle
# ---------------------------------------------------------------------------


def declarative_oracle(
    delta: TypeVarEnv,
    sigma: SubAssumptions,
    u1: DeclType,
    u2: DeclType,
    budget: int = 8,
    pool: tuple | None = None,
    memo: dict | None = None,
) -> bool:
    """Exhaustive search over the declarative rules up to structural
    derivation depth `budget`.

    Transitivity is handled exactly as reachability through a finite
    candidate pool (subterms, bounds, unfoldings, the primitives, and the
    empty interface), so chains cost no depth. Raises BudgetExceeded when
    the search was truncated by the depth limit without finding a
    derivation (distinct from a definite `False`). A shared `pool`/`memo`
    may be supplied when checking many goals over one universe."""
    if pool is None:
        pool = _candidate_pool(delta, u1, u2)
    if memo is None:
        memo = {}
    ok, truncated = _derive(delta, sigma, u1, u2, budget, pool, memo)
    if ok:
        return True
    if truncated:
        raise BudgetExceeded(f"undecided at budget {budget}")
    return False


def _candidate_pool(delta: TypeVarEnv, u1, u2) -> tuple:
    seen: dict = {}

    def add(t) -> None:
        if isinstance(t, (Prim, ObjType, SelfVar, TypeVar)):
            seen.setdefault(canon(t), t)

    for u in (u1, u2):
        for t in iter_subterms(u):
            add(t)
    for lo, hi in delta.values():
        add(lo)
        add(hi)
    add(TOP)
    add(Prim("Int"))
    add(Prim("String"))
    for t in list(seen.values()):
        if isinstance(t, ObjType) and t.methods:
            add(unfold(t))
    return tuple(seen.values())


def _derive(delta, sigma, u1, u2, budget, pool, memo) -> tuple[bool, bool]:
    """Full declarative derivability: one base rule, or a transitivity
    chain of base steps threading through the candidate pool."""
    key = ("full", canon_delta(delta), tuple(sorted(sigma)), canon(u1), canon(u2))
    hit = memo.get(key)
    if hit is not None:
        done_budget, result, truncated = hit
        if result or not truncated or done_budget >= budget:
            return result, truncated
    if budget <= 0:
        return False, True

    ok, truncated = _derive_base(delta, sigma, u1, u2, budget, pool, memo)
    if not ok:
        # Reachability u1 -> ... -> u2 over base edges through the pool.
        nodes = {canon(u2): u2}
        for t in pool:
            nodes.setdefault(canon(t), t)
        target = canon(u2)
        visited = {canon(u1)}
        frontier = [u1]
        while frontier and not ok:
            a = frontier.pop()
            for ck, b in nodes.items():
                if ck in visited:
                    continue
                step_ok, tr = _derive_base(delta, sigma, a, b, budget, pool, memo)
                truncated |= tr
                if step_ok:
                    if ck == target:
                        ok = True
                        break
                    visited.add(ck)
                    frontier.append(b)
    memo[key] = (budget, ok, truncated if not ok else False)
    return ok, truncated if not ok else False


def _derive_base(delta, sigma, u1, u2, budget, pool, memo) -> tuple[bool, bool]:
    """Derivability by a single non-transitivity rule."""
    key = ("base", canon_delta(delta), tuple(sorted(sigma)), canon(u1), canon(u2))
    hit = memo.get(key)
    if hit is not None:
        done_budget, result, truncated = hit
        if result or not truncated or done_budget >= budget:
            return result, truncated
    truncated = False

    def conclude(res: bool) -> tuple[bool, bool]:
        memo[key] = (budget, res, truncated if not res else False)
        return res, truncated if not res else False

    # Equivalence (includes reflexivity and fold/unfold).
    if type_equiv(u1, u2):
        return conclude(True)
    # Assumptions.
    if isinstance(u1, SelfVar) and isinstance(u2, SelfVar) and (("self", u1.name), u2.name) in sigma:
        return conclude(True)
    if isinstance(u1, Prim) and isinstance(u2, SelfVar) and (("prim", u1.kind), u2.name) in sigma:
        return conclude(True)
    # Variable bounds, exactly as declared.
    if isinstance(u1, TypeVar) and u1.name in delta and type_equiv(delta[u1.name][1], u2):
        return conclude(True)
    if isinstance(u2, TypeVar) and u2.name in delta and type_equiv(delta[u2.name][0], u1):
        return conclude(True)
    # Structural rules.
    if isinstance(u1, ObjType) and isinstance(u2, ObjType):
        if budget <= 0:
            return False, True
        alpha, beta = f"%oa{budget}", f"%ob{budget}"
        r1 = rename_self_var(u1, alpha).methods
        r2 = rename_self_var(u2, beta).methods
        ok, tr = _derive_record(
            delta, sigma | {(("self", alpha), beta)}, r1, r2, budget - 1, pool, memo, ig=False
        )
        truncated |= tr
        if ok:
            return conclude(True)
    if isinstance(u1, Prim) and isinstance(u2, ObjType):
        if budget <= 0:
            return False, True
        beta = f"%ob{budget}"
        r2 = rename_self_var(u2, beta).methods
        ok, tr = _derive_record(
            delta, sigma | {(("prim", u1.kind), beta)}, meths(u1.kind), r2, budget - 1, pool, memo, ig=True
        )
        truncated |= tr
        if ok:
            return conclude(True)
    return conclude(False)


def _derive_record(delta, sigma, r1, r2, budget, pool, memo, ig: bool = False) -> tuple[bool, bool]:
    truncated = False
    left = dict(r1)
    for name, sig2 in r2:
        sig1 = left.get(name)
        if sig1 is None:
            return False, truncated
        ok, tr = _derive_sig(delta, sigma, sig1, sig2, budget, pool, memo, ig)
        truncated |= tr
        if not ok:
            return False, truncated
    return True, truncated


def _derive_sig(delta, sigma, m1, m2, budget, pool, memo, ig: bool = False) -> tuple[bool, bool]:
    if isinstance(m1, PrimSig) and isinstance(m2, GenericSig) and ig:
        from .algebra import soundsig

        if len(m2.args) != len(m1.arg_kinds) or not isinstance(m2.ret, Faceted):
            return False, False
        inner = dict(delta)
        for tp in m2.tparams:
            inner[tp.name] = (tp.lower, tp.upper)
        truncated = False
        for kind, arg in zip(m1.arg_kinds, m2.args):
            if not isinstance(arg, Faceted):
                return False, truncated
            ok, tr = _derive(inner, sigma, arg.safety, Prim(kind), budget, pool, memo)
            truncated |= tr
            if not ok:
                return False, truncated
        ok, tr = _derive(inner, sigma, Prim(m1.ret_kind), m2.ret.safety, budget, pool, memo)
        truncated |= tr
        if not ok:
            return False, truncated
        return soundsig(m2), truncated
    if isinstance(m1, PrimSig) or isinstance(m2, PrimSig):
        return m1 == m2, False
    if len(m1.tparams) != len(m2.tparams) or len(m1.args) != len(m2.args):
        return False, False
    names = [f"%oX{budget}.{i}" for i in range(len(m1.tparams))]
    m1 = _rename_params(m1, names)
    m2 = _rename_params(m2, names)
    truncated = False
    inner = dict(delta)
    for tp1, tp2 in zip(m1.tparams, m2.tparams):
        ok, tr = _derive(inner, sigma, tp2.upper, tp1.upper, budget, pool, memo)
        truncated |= tr
        if not ok:
            return False, truncated
        ok, tr = _derive(inner, sigma, tp1.lower, tp2.lower, budget, pool, memo)
        truncated |= tr
        if not ok:
            return False, truncated
        inner[tp1.name] = (tp2.lower, tp2.upper)
    for a1, a2 in zip(m1.args, m2.args):
        ok, tr = _derive_sectype(inner, sigma, a2, a1, budget, pool, memo)
        truncated |= tr
        if not ok:
            return False, truncated
    ok, tr = _derive_sectype(inner, sigma, m1.ret, m2.ret, budget, pool, memo)
    truncated |= tr
    return ok, truncated


def _derive_sectype(delta, sigma, s1, s2, budget, pool, memo) -> tuple[bool, bool]:
    if isinstance(s1, Faceted) and isinstance(s2, Faceted):
        ok1, tr1 = _derive(delta, sigma, s1.safety, s2.safety, budget, pool, memo)
        if not ok1:
            return False, tr1
        ok2, tr2 = _derive(delta, sigma, s1.decl, s2.decl, budget, pool, memo)
        return ok2, tr1 | tr2
    return s1 == s2, False
