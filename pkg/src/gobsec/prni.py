"""Differential testing of polymorphic relaxed noninterference.

The step-indexed relational interpretation of security types is a proof
device; this module operationalizes it as a sampling semi-decision
procedure. For a program with inputs declared at declassification
policies, the harness

1. samples type substitutions within the bounds of the type variable
   environment (the observer's power),
2. generates pairs of input values related at each variable's policy,
3. runs the program body on both sides, and
4. probes the two results at the observation type, method by method,
   recursively, with the step index bounding observation depth.

A single distinguishable public primitive outcome refutes relatedness and
yields a replayable counterexample (the sampled substitution, both input
substitutions, and the distinguishing observation path). Exhausting the
probe budget without refutation reports no counterexample; the procedure
is complete for refutation on probed paths and conservative otherwise.
Timeouts never distinguish: the property is termination-insensitive.
"""

from __future__ import annotations

import json
import random
import zlib
from dataclasses import dataclass, field

from .algebra import has_method, msig, type_equiv
from .interp import Stuck, Value, evaluate
from .parser import SourceProgram, pretty_print
from .syntax import (
    TOP,
    UNIT,
    DeclType,
    Expr,
    Faceted,
    GenericSig,
    GobsecError,
    Invoke,
    MethodDef,
    ObjType,
    ObjectLit,
    Prim,
    PrimLit,
    PrimSig,
    SelfVar,
    TypeVar,
    TypeVarEnv,
    Var,
    canon,
    fresh,
    is_top,
    public,
    subst_term,
    subst_type_var,
    subst_type_var_expr,
)


class EmptyInterval(GobsecError):
    pass


class NoGenerator(GobsecError):
    pass


# ---------------------------------------------------------------------------
# Deterministic seed splitting
# ---------------------------------------------------------------------------

_MASK = (1 << 64) - 1


def _mix(*parts) -> int:
    """SplitMix64-style combination of integers and short strings; stable
    across runs and platforms so seeded runs are byte-reproducible."""
    h = 0x9E3779B97F4A7C15
    for p in parts:
        v = zlib.crc32(p.encode()) if isinstance(p, str) else int(p) & _MASK
        h = (h ^ v) * 0xBF58476D1CE4E5B9 & _MASK
        h = (h ^ (h >> 27)) * 0x94D049BB133111EB & _MASK
        h ^= h >> 31
    return h


def _rng(seed: int, *path) -> random.Random:
    return random.Random(_mix(seed, *path))


# ---------------------------------------------------------------------------
# Configuration and verdicts
# ---------------------------------------------------------------------------


@dataclass
class PrniConfig:
    pairs: int = 1000
    substs: int = 10
    k: int = 6
    fuel: int = 10_000
    seed: int = 0
    probe_fuel: int = 600  # per probe invocation; divergence still relates
    probe_budget: int = 160  # evaluations per relatedness check
    tsamples: int = 2  # type instantiations probed per polymorphic method
    asamples: int = 3  # argument tuples probed per instantiation


@dataclass(frozen=True)
class Observation:
    """One probe step: invoking `method` distinguished (or led toward
    distinguishing) the two sides."""

    method: str
    targs: tuple[str, ...]
    args1: tuple[str, ...]
    args2: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "targs": list(self.targs),
            "args1": list(self.args1),
            "args2": list(self.args2),
        }


@dataclass
class Counterexample:
    sigma: dict[str, str]
    gamma1: dict[str, str]
    gamma2: dict[str, str]
    observation: list[Observation]
    outputs: tuple[str, str]
    trial: int
    seed: int
    # internal replay data (not serialized)
    sigma_types: dict[str, DeclType] = field(default_factory=dict, repr=False)
    gamma1_values: dict[str, Expr] = field(default_factory=dict, repr=False)
    gamma2_values: dict[str, Expr] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": "counterexample",
            "seed": self.seed,
            "trial": self.trial,
            "witness": {
                "sigma": self.sigma,
                "gamma1": self.gamma1,
                "gamma2": self.gamma2,
                "observation": [o.to_dict() for o in self.observation],
                "outputs": list(self.outputs),
            },
        }


@dataclass
class NoCounterexample:
    pairs_tested: int
    substs_tested: int
    max_k: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "verdict": "no-counterexample",
            "seed": self.seed,
            "trials": self.pairs_tested,
            "substs": self.substs_tested,
            "k": self.max_k,
        }


Verdict = Counterexample | NoCounterexample


def verdict_to_json(v: Verdict) -> str:
    return json.dumps(v.to_dict(), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Type substitution sampling
# ---------------------------------------------------------------------------


def sample_subst(delta: TypeVarEnv, pool: dict[str, DeclType], rng: random.Random) -> dict[str, DeclType]:
    """One substitution in the relational interpretation of `delta`: for
    each variable, a closed type within its bounds, drawn uniformly from
    the bound endpoints and the pool types that fit the interval. Earlier
    choices substitute into later bounds."""
    from .algebra import in_interval

    sigma: dict[str, DeclType] = {}
    for name, (lo, hi) in delta.items():
        for done, actual in sigma.items():
            lo = subst_type_var(lo, actual, done)
            hi = subst_type_var(hi, actual, done)
        cands: list[DeclType] = []
        seen: set = set()
        for c in [lo, hi, *pool.values()]:
            if isinstance(c, TypeVar):
                continue
            key = canon(c)
            if key in seen:
                continue
            seen.add(key)
            if in_interval({}, c, lo, hi):
                cands.append(c)
        if not cands:
            raise EmptyInterval(f"no candidate type lies within the bounds of {name}")
        cands.sort(key=lambda t: str(canon(t)))
        sigma[name] = rng.choice(cands)
    return sigma


def apply_subst_sectype(s: Faceted, sigma: dict[str, DeclType]) -> Faceted:
    for name, t in sigma.items():
        s = subst_type_var(s, t, name)
    return s


def apply_subst_expr(e: Expr, sigma: dict[str, DeclType]) -> Expr:
    for name, t in sigma.items():
        e = subst_type_var_expr(e, t, name)
    return e


# ---------------------------------------------------------------------------
# Known-policy recognition
# ---------------------------------------------------------------------------


def _std(args: list[Faceted], ret: Faceted) -> GenericSig:
    return GenericSig((), tuple(args), ret)


def _policy_variants(entries: dict[str, tuple[tuple[str, ...], str, Faceted | None]]) -> set:
    """Canonical keys for every standard/primitive spelling combination of
    a policy's methods. `entries` maps method -> (arg kinds, ret kind,
    explicit standard return or None for the public one)."""
    import itertools as it

    names = sorted(entries)
    options = []
    for m in names:
        argks, retk, ret_std = entries[m]
        std = _std([public(Prim(k)) for k in argks], ret_std if ret_std is not None else public(Prim(retk)))
        alts = [std]
        if ret_std is None:
            alts.append(PrimSig(argks, retk))
        options.append([(m, sig) for sig in alts])
    keys = set()
    for combo in it.product(*options):
        keys.add(canon(ObjType("a", tuple(combo))))
    return keys


_INT_EQ = ObjType("a", (("eq", _std([public(Prim("Int"))], public(Prim("Bool")))),))
_LEN_KEYS = _policy_variants({"length": (("Unit",), "Int", None)})
_FST_KEYS = _policy_variants({"first": (("Unit",), "String", None)})
_FSTLEN_KEYS = _policy_variants({"first": (("Unit",), "String", None), "length": (("Unit",), "Int", None)})
_EQ_KEYS = {
    kind: _policy_variants({"eq": ((kind,), "Bool", None)}) for kind in ("String", "Int", "Bool")
}
_HASHEQ_KEYS = _policy_variants({"hash": (("Unit",), "Int", Faceted(Prim("Int"), _INT_EQ))})

_ALPHABET = "abc"


def _rand_string(rng: random.Random, n: int | None = None) -> str:
    if n is None:
        n = rng.randint(0, 4)
    return "".join(rng.choice(_ALPHABET) for _ in range(n))


def _rand_lit(kind: str, rng: random.Random) -> PrimLit:
    if kind == "Int":
        return PrimLit(rng.randint(0, 9), "Int")
    if kind == "String":
        return PrimLit(_rand_string(rng), "String")
    if kind == "Bool":
        return PrimLit(rng.random() < 0.5, "Bool")
    return UNIT


# ---------------------------------------------------------------------------
# Related-pair generation
# ---------------------------------------------------------------------------


def _is_list_shaped(t: DeclType) -> bool:
    if not isinstance(t, ObjType) or set(t.method_names()) != {"isEmpty", "head", "tail"}:
        return False
    tail = t.sig("tail")
    if not isinstance(tail, GenericSig) or tail.tparams or len(tail.args) != 1:
        return False
    ret = tail.ret
    if not isinstance(ret, Faceted):
        return False
    tr = ret.safety
    return (isinstance(tr, SelfVar) and tr.name == t.self_var) or type_equiv(tr, t)


def gen_related_pair(s: Faceted, k: int, rng: random.Random, ctx: "ProbeContext | None" = None) -> tuple[Expr, Expr]:
    """A pair of closed values related at the closed security type `s` for
    `k` observation steps.

    Known policies get shaped generators (equal literals for fully public
    primitives, independent ones at the empty interface, equal-length
    strings for length policies, and so on); proposals that only a
    relatedness check can certify are verified and replaced by a reflexive
    pair when the check refutes them. The reflexive fallback applies to
    anything else.
    """
    t, u = s.safety, s.decl
    if isinstance(u, TypeVar):
        raise NoGenerator(f"declassification facet {u.name} is not closed")
    if isinstance(t, Prim):
        return _gen_prim_pair(t.kind, u, k, rng, ctx)
    if isinstance(t, ObjType):
        if _is_list_shaped(t):
            return _gen_list_pair(t, u, k, rng, ctx)
        v = _synth_value(t, rng)
        return v, v
    raise NoGenerator(f"cannot generate values at {pretty_print(s)}")


def _gen_prim_pair(kind: str, u: DeclType, k: int, rng: random.Random, ctx) -> tuple[Expr, Expr]:
    if isinstance(u, Prim):
        v = _rand_lit(kind, rng)
        return v, v  # public: syntactically equal
    if is_top(u):
        return _rand_lit(kind, rng), _rand_lit(kind, rng)
    key = canon(u)
    if kind == "String" and key in _LEN_KEYS:
        n = rng.randint(0, 4)
        return PrimLit(_rand_string(rng, n), "String"), PrimLit(_rand_string(rng, n), "String")
    if kind == "String" and key in _FSTLEN_KEYS:
        n = rng.randint(1, 4)
        c = rng.choice(_ALPHABET)
        return (
            PrimLit(c + _rand_string(rng, n - 1), "String"),
            PrimLit(c + _rand_string(rng, n - 1), "String"),
        )
    if kind == "String" and key in _FST_KEYS:
        c = rng.choice(_ALPHABET)
        return (
            PrimLit(c + _rand_string(rng), "String"),
            PrimLit(c + _rand_string(rng), "String"),
        )
    if key in _EQ_KEYS.get(kind, set()) or (kind == "String" and key in _HASHEQ_KEYS):
        # Comparison policies: equal values iff a coin flip; an unequal
        # proposal survives only if probing cannot tell it apart (it
        # cannot, for equality policies), otherwise fall back to equal.
        v1 = _rand_lit(kind, rng)
        if rng.random() < 0.5:
            return v1, v1
        v2 = _rand_lit(kind, rng)
        return _verified_or_reflexive(v1, v2, Faceted(Prim(kind), u), k, rng, ctx)
    # Unknown primitive policy: reflexive, or mutate one side and keep the
    # mutation only when a probe check certifies it.
    v1 = _rand_lit(kind, rng)
    if rng.random() < 0.5:
        return v1, v1
    v2 = _rand_lit(kind, rng)
    return _verified_or_reflexive(v1, v2, Faceted(Prim(kind), u), k, rng, ctx)


def _verified_or_reflexive(v1, v2, s: Faceted, k: int, rng: random.Random, ctx) -> tuple[Expr, Expr]:
    if v1 == v2:
        return v1, v1
    probe_ctx = ProbeContext(
        fuel=min(ctx.fuel, 600) if ctx else 600,
        pool=ctx.pool if ctx else {},
        seed=rng.getrandbits(63),
        budget=40,
    )
    ok, _ = check_related(min(k, 3), v1, v2, s, probe_ctx)
    if ok:
        return v1, v2
    return v1, v1


def _gen_list_pair(t: ObjType, u: DeclType, k: int, rng: random.Random, ctx) -> tuple[Expr, Expr]:
    n = rng.randint(0, 3)
    head_sig = msig({}, t, "head")
    if isinstance(u, ObjType) and has_method({}, u, "head"):
        elem_s = msig({}, u, "head").ret
    else:
        elem_s = Faceted(head_sig.ret.safety, TOP)
    elems = [gen_related_pair(elem_s, max(k - 1, 1), rng, ctx) for _ in range(n)]
    l1 = _build_list(t, [a for a, _ in elems])
    l2 = _build_list(t, [b for _, b in elems])
    return l1, l2


def _build_list(t: ObjType, elems: list[Expr]) -> Expr:
    z = fresh("z")
    u = fresh("u")
    diverge_head = Invoke(Var(z), "head", (), (UNIT,))
    diverge_tail = Invoke(Var(z), "tail", (), (UNIT,))
    out: Expr = ObjectLit(
        z,
        public(t),
        (
            MethodDef("isEmpty", (u,), PrimLit(True, "Bool")),
            MethodDef("head", (u,), diverge_head),
            MethodDef("tail", (u,), diverge_tail),
        ),
    )
    for h in reversed(elems):
        out = ObjectLit(
            z,
            public(t),
            (
                MethodDef("isEmpty", (u,), PrimLit(False, "Bool")),
                MethodDef("head", (u,), h),
                MethodDef("tail", (u,), out),
            ),
        )
    return out


def _synth_value(t: DeclType, rng: random.Random) -> Expr:
    """A closed value inhabiting safety type `t`: literals for primitives,
    and for object types an object whose methods re-invoke themselves (so
    every observation diverges, which relates to everything)."""
    if isinstance(t, Prim):
        return _rand_lit(t.kind, rng)
    if not isinstance(t, ObjType):
        raise NoGenerator(f"cannot synthesize a value at {pretty_print(t)}")
    z = fresh("z")
    methods = []
    for name, sig in t.methods:
        if isinstance(sig, PrimSig):
            raise NoGenerator(f"object type with primitive-signature method {name} has no object values")
        params = tuple(fresh("x") for _ in sig.args)
        body = Invoke(Var(z), name, tuple(TypeVar(tp.name) for tp in sig.tparams), tuple(Var(p) for p in params))
        methods.append(MethodDef(name, params, body))
    return ObjectLit(z, public(t), tuple(methods))


# ---------------------------------------------------------------------------
# Relatedness checking (bounded, refutation-sound)
# ---------------------------------------------------------------------------


@dataclass
class ProbeContext:
    fuel: int = 10_000
    pool: dict[str, DeclType] = field(default_factory=dict)
    seed: int = 0
    budget: int = 160
    tsamples: int = 2
    asamples: int = 3


def check_related(
    k: int, v1: Expr, v2: Expr, s: Faceted, ctx: ProbeContext, _path: tuple = ()
) -> tuple[bool, list[Observation] | None]:
    """Probe whether `v1` and `v2` are related at `s` for `k` steps.

    Returns (False, observation path) on refutation; (True, None) when no
    probe distinguishes them within the step index and budget. Probes are
    keyed by structural path so a larger `k` replays the shallower probes
    identically (refutations are monotone in `k`).
    """
    if k <= 0 or ctx.budget <= 0:
        return True, None
    t, u = s.safety, s.decl
    if isinstance(u, TypeVar):
        raise GobsecError(f"relatedness at an open type {u.name}")
    if isinstance(t, Prim) and isinstance(u, Prim):
        if u.kind == t.kind and isinstance(v1, PrimLit) and isinstance(v2, PrimLit):
            if v1.kind == v2.kind and v1.value == v2.value:
                return True, None
            return False, []
        return True, None
    if is_top(u):
        return True, None
    if not isinstance(u, ObjType):
        return True, None
    for name, _ in u.methods:
        sig = msig({}, u, name)
        if isinstance(sig, PrimSig):
            ok, path = _probe_prim_method(k, v1, v2, name, sig, ctx, _path)
        else:
            ok, path = _probe_generic_method(k, v1, v2, name, sig, ctx, _path)
        if not ok:
            return False, path
    return True, None


def _outcomes(v1, v2, name, targs, args1, args2, ctx) -> tuple | None:
    ctx.budget -= 1
    r1 = evaluate(Invoke(v1, name, targs, tuple(args1)), ctx.fuel)
    r2 = evaluate(Invoke(v2, name, targs, tuple(args2)), ctx.fuel)
    if isinstance(r1, Value) and isinstance(r2, Value):
        return r1.expr, r2.expr
    # Termination-insensitive: a timeout (or stuck probe, possible only on
    # ill-typed inputs) never distinguishes.
    return None


def _probe_prim_method(k, v1, v2, name, sig: PrimSig, ctx, path) -> tuple[bool, list | None]:
    rng = _rng(ctx.seed, "prim", *[str(p) for p in path], name)
    for i, args in enumerate(_prim_probe_tuples(sig.arg_kinds, v1, v2, rng)):
        if ctx.budget <= 0:
            return True, None
        out = _outcomes(v1, v2, name, (), args, args, ctx)
        if out is None:
            continue
        r1, r2 = out
        # Public arguments: results related at the public return type.
        ok, sub = check_related(
            k - 1, r1, r2, public(Prim(sig.ret_kind)), ctx, path + ((name, i),)
        )
        if not ok:
            step = Observation(name, (), tuple(pretty_print(a) for a in args), tuple(pretty_print(a) for a in args))
            return False, [step] + (sub or [])
    return True, None


def _prim_probe_tuples(kinds: tuple[str, ...], v1, v2, rng) -> list[tuple]:
    per_kind: list[list[PrimLit]] = []
    for kind in kinds:
        cands: list[PrimLit] = []
        for v in (v1, v2):
            if isinstance(v, PrimLit) and v.kind == kind:
                cands.append(PrimLit(v.value, kind))
        base = {
            "Int": [0, 1],
            "String": ["", "a"],
            "Bool": [True, False],
            "Unit": [None],
        }[kind]
        cands.extend(PrimLit(b, kind) for b in base)
        cands.append(_rand_lit(kind, rng))
        seen: set = set()
        uniq = []
        for c in cands:
            if c.value not in seen:
                seen.add(c.value)
                uniq.append(c)
        per_kind.append(uniq[:4])
    if not per_kind:
        return [()]
    first = per_kind[0]
    rest = tuple(col[0] for col in per_kind[1:])
    return [(c,) + rest for c in first]


def _probe_generic_method(k, v1, v2, name, sig: GenericSig, ctx, path) -> tuple[bool, list | None]:
    rng = _rng(ctx.seed, "gen", *[str(p) for p in path], name)
    insts = _sample_instantiations(sig, ctx, rng)
    tried: set = set()
    for ti, targs in enumerate(insts):
        args_types = list(sig.args)
        ret = sig.ret
        for tp, actual in zip(sig.tparams, targs):
            args_types = [subst_type_var(a, actual, tp.name) for a in args_types]
            ret = subst_type_var(ret, actual, tp.name)
        for ai in range(max(1, ctx.asamples)):
            if ctx.budget <= 0:
                return True, None
            arng = _rng(ctx.seed, "args", *[str(p) for p in path], name, ti, ai)
            args1, args2 = [], []
            for j, at in enumerate(args_types):
                a1, a2 = _probe_arg_pair(at, k - 1, arng, ctx, ai + j, (v1, v2))
                args1.append(a1)
                args2.append(a2)
            probe_key = (
                tuple(canon(t) for t in targs),
                tuple(_probe_key(a) for a in args1),
                tuple(_probe_key(a) for a in args2),
            )
            if probe_key in tried:
                continue
            tried.add(probe_key)
            out = _outcomes(v1, v2, name, tuple(targs), args1, args2, ctx)
            if out is None:
                continue
            r1, r2 = out
            ok, sub = check_related(k - 1, r1, r2, ret, ctx, path + ((name, ti, ai),))
            if not ok:
                step = Observation(
                    name,
                    tuple(pretty_print(t) for t in targs),
                    tuple(pretty_print(a) for a in args1),
                    tuple(pretty_print(a) for a in args2),
                )
                return False, [step] + (sub or [])
    return True, None


def _probe_arg_pair(at: Faceted, k: int, rng, ctx, salt: int, receivers: tuple = ()) -> tuple[Expr, Expr]:
    """Related argument pair for a probe. Public primitive positions cycle
    through distinguished candidates, starting with the probed receivers
    themselves: an equality-style method only tells two values apart when
    probed with one of them."""
    if isinstance(at, Faceted) and isinstance(at.safety, Prim) and type_equiv(at.safety, at.decl):
        kind = at.safety.kind
        vals: list = []
        for r in receivers:
            if isinstance(r, PrimLit) and r.kind == kind and r.value not in vals:
                vals.append(r.value)
        base = {
            "Int": [0, 1, 2],
            "String": ["a", "", "b"],
            "Bool": [True, False],
            "Unit": [None],
        }[kind]
        for b in base + [_rand_lit(kind, rng).value]:
            if b not in vals:
                vals.append(b)
        v = PrimLit(vals[salt % len(vals)], kind)
        return v, v
    return gen_related_pair(at, k, rng, ctx)


def _probe_key(a: Expr):
    if isinstance(a, PrimLit):
        return ("lit", a.kind, a.value)
    from .syntax import canon_expr

    return ("expr", canon_expr(a))


def _sample_instantiations(sig: GenericSig, ctx: ProbeContext, rng) -> list[tuple[DeclType, ...]]:
    from .algebra import in_interval

    if not sig.tparams:
        return [()]
    per_param: list[list[DeclType]] = []
    for tp in sig.tparams:
        # Bounds of closed signatures are closed; variables cannot appear.
        cands: list[DeclType] = []
        seen: set = set()
        for c in [tp.lower, tp.upper, *ctx.pool.values()]:
            if isinstance(c, TypeVar):
                continue
            key = canon(c)
            if key in seen:
                continue
            seen.add(key)
            try:
                if in_interval({}, c, tp.lower, tp.upper):
                    cands.append(c)
            except GobsecError:
                continue
        cands.sort(key=lambda t: str(canon(t)))
        per_param.append(cands or [tp.upper])
    out: list[tuple[DeclType, ...]] = []
    count = max(1, ctx.tsamples)
    for i in range(count):
        choice = tuple(col[min(i, len(col) - 1)] if i < 2 else rng.choice(col) for col in per_param)
        if choice not in out:
            out.append(choice)
    return out


# ---------------------------------------------------------------------------
# The differential test
# ---------------------------------------------------------------------------


def default_pool(program: SourceProgram) -> dict[str, DeclType]:
    pool = dict(program.named_closed_types())
    pool.setdefault("Top", TOP)
    for kind in ("Int", "String", "Bool", "Unit"):
        pool.setdefault(kind, Prim(kind))
    return pool


def prni_test(
    program: SourceProgram,
    observe_at: Faceted,
    config: PrniConfig,
    pool: dict[str, DeclType] | None = None,
) -> Verdict:
    """Empirically test the program's noninterference at `observe_at`.

    The body must be simply well-typed under the declared inputs; security
    typing is deliberately not required, since the whole point is to run
    programs the checker rejects and exhibit their leaks.
    """
    from .typecheck import simple_synth

    simple_synth(program.vars, program.body)
    if pool is None:
        pool = default_pool(program)
    delta = dict(program.tvars)
    gamma = dict(program.vars)
    body = program.body
    substs: list[dict[str, DeclType]] = []
    n_substs = max(1, config.substs) if delta else 1
    for i in range(n_substs):
        substs.append(sample_subst(delta, pool, _rng(config.seed, "subst", i)) if delta else {})
    pairs = config.pairs
    if not delta and not gamma:
        pairs = min(pairs, 1)  # a closed program runs deterministically
    for trial in range(pairs):
        sigma = substs[trial % len(substs)]
        sbody = apply_subst_expr(body, sigma)
        sobserve = apply_subst_sectype(observe_at, sigma)
        gamma1: dict[str, Expr] = {}
        gamma2: dict[str, Expr] = {}
        gen_ctx = ProbeContext(
            fuel=config.probe_fuel, pool=pool, seed=_mix(config.seed, "genctx", trial), budget=60
        )
        for xi, (x, xs) in enumerate(gamma.items()):
            sx = apply_subst_sectype(xs, sigma)
            v1, v2 = gen_related_pair(sx, config.k, _rng(config.seed, "pair", trial, xi), gen_ctx)
            gamma1[x] = v1
            gamma2[x] = v2
        e1 = subst_term(sbody, gamma1)
        e2 = subst_term(sbody, gamma2)
        r1 = evaluate(e1, config.fuel)
        r2 = evaluate(e2, config.fuel)
        if isinstance(r1, Stuck) or isinstance(r2, Stuck):
            which = r1 if isinstance(r1, Stuck) else r2
            raise GobsecError(
                f"simply well-typed program got stuck ({which.reason}); this is a bug"
            )
        if not (isinstance(r1, Value) and isinstance(r2, Value)):
            continue  # termination-insensitive
        ctx = ProbeContext(
            fuel=config.probe_fuel,
            pool=pool,
            seed=_mix(config.seed, "check", trial),
            budget=config.probe_budget,
            tsamples=config.tsamples,
            asamples=config.asamples,
        )
        ok, path = check_related(config.k, r1.expr, r2.expr, sobserve, ctx)
        if not ok:
            return Counterexample(
                sigma={x: pretty_print(t) for x, t in sigma.items()},
                gamma1={x: pretty_print(v) for x, v in gamma1.items()},
                gamma2={x: pretty_print(v) for x, v in gamma2.items()},
                observation=path or [],
                outputs=(pretty_print(r1.expr), pretty_print(r2.expr)),
                trial=trial,
                seed=config.seed,
                sigma_types=dict(sigma),
                gamma1_values=dict(gamma1),
                gamma2_values=dict(gamma2),
            )
    return NoCounterexample(
        pairs_tested=config.pairs,
        substs_tested=len(substs),
        max_k=config.k,
        seed=config.seed,
    )
