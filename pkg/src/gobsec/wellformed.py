"""Well-formedness of types, faceted security types, and environments.

The load-bearing check is on faceted types: after one unfolding, the
declassification facet must sit above the safety facet in the subtyping
order extended with sound declassifications of primitive signatures.
A policy violating that check is rejected with a diagnostic naming the
offending method and which publicness principle it breaks.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import meths, soundsig, type_equiv, unfold_soft
from .subtyping import sub_sig, sub_type
from .syntax import (
    EMPTY_SIGMA,
    DeclType,
    Faceted,
    GenericSig,
    ObjType,
    Prim,
    PrimSig,
    PrimStar,
    SecType,
    SelfVar,
    TermEnv,
    TypeVar,
    TypeVarEnv,
    free_type_vars,
)


@dataclass(frozen=True)
class WfIssue:
    severity: str  # "error" | "warning"
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}[{self.code}]: {self.message}"


@dataclass(frozen=True)
class Scope:
    """Names in scope for a bare type: self variables and generic variables."""

    self_vars: frozenset[str] = frozenset()
    type_vars: frozenset[str] = frozenset()

    def with_self(self, name: str) -> "Scope":
        return Scope(self.self_vars | {name}, self.type_vars)

    def with_tvar(self, name: str) -> "Scope":
        return Scope(self.self_vars, self.type_vars | {name})


def scope_of(delta: TypeVarEnv) -> Scope:
    return Scope(frozenset(), frozenset(delta))


def wf_type(scope: Scope, u: DeclType | SecType, issues: list[WfIssue] | None = None) -> bool:
    """Scoping and shape: every variable bound, method names distinct,
    bounds well-formed in the extended scope."""
    sink: list[WfIssue] = [] if issues is None else issues
    before = len(sink)
    _wf_type(scope, u, sink)
    return len(sink) == before


def _wf_type(scope: Scope, u, sink: list[WfIssue]) -> None:
    if isinstance(u, Prim):
        return
    if isinstance(u, SelfVar):
        if u.name not in scope.self_vars:
            sink.append(WfIssue("error", "UnboundSelfVar", f"self type variable {u.name} is not bound"))
        return
    if isinstance(u, TypeVar):
        if u.name not in scope.type_vars:
            sink.append(WfIssue("error", "UnboundTypeVar", f"type variable {u.name} is not bound"))
        return
    if isinstance(u, ObjType):
        inner = scope.with_self(u.self_var)
        for name, sig in u.methods:
            if isinstance(sig, PrimSig):
                continue
            sig_scope = inner
            for tp in sig.tparams:
                _wf_type(sig_scope, tp.lower, sink)
                _wf_type(sig_scope, tp.upper, sink)
                sig_scope = sig_scope.with_tvar(tp.name)
            for a in sig.args:
                _wf_type(sig_scope, a, sink)
            _wf_type(sig_scope, sig.ret, sink)
        return
    if isinstance(u, Faceted):
        _wf_type(scope, u.safety, sink)
        _wf_type(scope, u.decl, sink)
        return
    if isinstance(u, PrimStar):
        return
    sink.append(WfIssue("error", "BadType", f"not a type: {u!r}"))


def wf_sectype(delta: TypeVarEnv, s: SecType, issues: list[WfIssue] | None = None) -> bool:
    """Both facets well-formed and the declassification facet admissible:
    after unfolding, every method it exposes is matched in the safety
    facet by a subtype signature, where a primitive signature may also be
    declassified by an identical primitive signature or a sound standard
    signature."""
    sink: list[WfIssue] = [] if issues is None else issues
    before = len(sink)
    if isinstance(s, PrimStar):
        return True
    if not isinstance(s, Faceted):
        sink.append(WfIssue("error", "BadType", f"not a security type: {s!r}"))
        return False
    scope = scope_of(delta)
    _wf_type(scope, s.safety, sink)
    _wf_type(scope, s.decl, sink)
    if len(sink) > before:
        return False
    if isinstance(s.safety, TypeVar):
        sink.append(WfIssue("error", "BadType", "safety facet cannot be a generic variable"))
        return False
    t = unfold_soft(s.safety)
    u = unfold_soft(s.decl)
    if sub_type(delta, EMPTY_SIGMA, t, u, allow_ig=True):
        return True
    _explain_facets(delta, t, u, sink)
    if len(sink) == before:
        sink.append(WfIssue("error", "FacetMismatch", "declassification facet is not a supertype of the safety facet"))
    return False


def _explain_facets(delta: TypeVarEnv, t, u, sink: list[WfIssue]) -> None:
    """Per-method diagnosis of a failed facet check."""
    if isinstance(u, Prim):
        if isinstance(t, Prim) and t.kind != u.kind:
            sink.append(
                WfIssue(
                    "error",
                    "FacetMismatch",
                    f"declassification facet {u.kind} does not match safety facet {t.kind}",
                )
            )
        elif not isinstance(t, Prim):
            sink.append(WfIssue("error", "FacetMismatch", "object safety facet cannot declassify to a primitive kind"))
        return
    if not isinstance(u, ObjType):
        return
    if isinstance(t, Prim):
        safety_record = dict(meths(t.kind))
    elif isinstance(t, ObjType):
        safety_record = dict(t.methods)
    else:
        return
    for name, usig in u.methods:
        tsig = safety_record.get(name)
        if tsig is None:
            sink.append(
                WfIssue("error", "FacetMismatch", f"declassified method {name} does not exist in the safety facet")
            )
            continue
        if isinstance(tsig, PrimSig) and isinstance(usig, GenericSig):
            if not soundsig(usig):
                which = "P1" if _has_nonpublic_prim_arg(usig) else "P2"
                sink.append(
                    WfIssue(
                        "error",
                        f"IG/{which}",
                        f"method {name}: a standard signature over a primitive must take public "
                        f"primitive arguments or return a private result",
                    )
                )
                continue
        if not sub_sig(delta, EMPTY_SIGMA, tsig, usig, allow_ig=True):
            sink.append(
                WfIssue("error", "FacetMismatch", f"method {name}: declassified signature is not above the safety signature")
            )


def _has_nonpublic_prim_arg(sig: GenericSig) -> bool:
    for a in sig.args:
        if isinstance(a, Faceted) and isinstance(a.safety, Prim) and not type_equiv(a.safety, a.decl):
            return True
    return False


def wf_tvar_env(delta: TypeVarEnv, issues: list[WfIssue] | None = None) -> bool:
    """Each bound well-formed under the preceding entries; the bound
    reference graph acyclic. An empty interval (lower not below upper) is
    only a warning: nothing requires it, it merely makes the variable
    uninstantiable."""
    sink: list[WfIssue] = [] if issues is None else issues
    before = len(sink)
    seen: set[str] = set()
    for name, (lo, hi) in delta.items():
        scope = Scope(frozenset(), frozenset(seen))
        for side, bound in (("lower", lo), ("upper", hi)):
            probe: list[WfIssue] = []
            if not wf_type(scope, bound, probe):
                for p in probe:
                    sink.append(WfIssue("error", "IllFormedBound", f"{side} bound of {name}: {p.message}"))
        seen.add(name)
    # Defensive cycle check for environments built outside the prefix rule.
    for name in delta:
        chain: set[str] = set()
        cur = name
        while True:
            chain.add(cur)
            hi = delta[cur][1]
            if isinstance(hi, TypeVar) and hi.name in delta:
                if hi.name in chain:
                    sink.append(WfIssue("error", "CyclicBounds", f"cycle through type variable {hi.name}"))
                    break
                cur = hi.name
            else:
                break
    if len(sink) > before:
        return False
    for name, (lo, hi) in delta.items():
        if not free_type_vars(lo) and not free_type_vars(hi):
            if not sub_type(delta, EMPTY_SIGMA, lo, hi):
                sink.append(
                    WfIssue("warning", "EmptyInterval", f"interval of {name} is empty: lower bound is not below upper bound")
                )
    return True


def wf_term_env(delta: TypeVarEnv, gamma: TermEnv, issues: list[WfIssue] | None = None) -> bool:
    """Every binding's security type well-formed under `delta`."""
    sink: list[WfIssue] = [] if issues is None else issues
    ok = True
    for name, s in gamma.items():
        probe: list[WfIssue] = []
        if not wf_sectype(delta, s, probe):
            ok = False
            for p in probe:
                sink.append(WfIssue(p.severity, p.code, f"variable {name}: {p.message}"))
        else:
            sink.extend(probe)
    return ok
