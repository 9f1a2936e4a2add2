"""
Formulas in context and their interpretation as subobjects
"""
import itertools
import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from .cat_core import Presheaf, ValidationReport
from .errors import (AmbientMismatch, ArityMismatch, MalformedInput, SubstitutionUndefined, UnknownQuantifier,
                     UnsupportedCarrier)
from .fol_model import (Context, CtxMorphism, SigmaStructure, Signature, Term, Var, check_term, identity_ctx_morphism,
                        interpret_context, interpret_ctx_morphism, interpret_term, prefix_projection, substitute_term,
                        term_vars)
from .settings_manager import guard
from .sub_heyting import (GeneratorSet, SubPresheaf, enumerate_sub, exists_along, forall_along, generators,
                          pullback_sub, sub_bottom, sub_implies, sub_join, sub_leq, sub_meet, sub_top)

logger = logging.getLogger(__name__)


# Basic atoms

@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class RelationAtom:
    rel: str
    args: Tuple[Term, ...]


@dataclass(frozen=True)
class Membership:
    elem: Term
    collection: Term


@dataclass(frozen=True)
class PropVar:
    """A propositional variable, read through a model's valuation"""
    name: str


BasicAtom = Union[Equation, RelationAtom, Membership, PropVar]


def atom_terms(a: BasicAtom) -> Tuple[Term, ...]:
    if isinstance(a, Equation):
        return (a.lhs, a.rhs)
    if isinstance(a, RelationAtom):
        return a.args
    if isinstance(a, Membership):
        return (a.elem, a.collection)
    return ()


def substitute_atom(a: BasicAtom, mapping: Mapping[str, Term]) -> BasicAtom:
    if isinstance(a, Equation):
        return Equation(substitute_term(a.lhs, mapping), substitute_term(a.rhs, mapping))
    if isinstance(a, RelationAtom):
        return RelationAtom(a.rel, tuple(substitute_term(t, mapping) for t in a.args))
    if isinstance(a, Membership):
        return Membership(substitute_term(a.elem, mapping), substitute_term(a.collection, mapping))
    return a


# Formula nodes

@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Basic:
    atom: BasicAtom


@dataclass(frozen=True)
class Conj:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Disj:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Imp:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    child: "Node"


@dataclass(frozen=True)
class Quant:
    """Qf(φ1, …, φn) for f: σ → τ; children live in σ, the node in τ"""
    name: str
    morphism: CtxMorphism
    children: Tuple["Node", ...]


@dataclass(frozen=True)
class Pull:
    """f(φ) for f: σ → τ; φ lives in τ, the node in σ"""
    morphism: CtxMorphism
    child: "Node"


Node = Union[Top, Bot, Basic, Conj, Disj, Imp, Neg, Quant, Pull]


@dataclass(frozen=True)
class Formula:
    context: Context
    body: Node


def depth(node: Node) -> int:
    if isinstance(node, (Top, Bot, Basic)):
        return 0
    if isinstance(node, (Conj, Disj, Imp)):
        return 1 + max(depth(node.left), depth(node.right))
    if isinstance(node, Neg):
        return 1 + depth(node.child)
    if isinstance(node, Pull):
        return 1 + depth(node.child)
    return 1 + max((depth(c) for c in node.children), default=0)


def subformulas(phi: Formula) -> List[Formula]:
    """Every subformula with the context it lives in, root first"""
    out: List[Formula] = []

    def walk(ctx: Context, node: Node):
        out.append(Formula(ctx, node))
        if isinstance(node, (Conj, Disj, Imp)):
            walk(ctx, node.left)
            walk(ctx, node.right)
        elif isinstance(node, Neg):
            walk(ctx, node.child)
        elif isinstance(node, Pull):
            walk(node.morphism.dst, node.child)
        elif isinstance(node, Quant):
            for c in node.children:
                walk(node.morphism.src, c)

    walk(phi.context, phi.body)
    return out


def check_formula(phi: Formula, sig: Optional[Signature] = None) -> None:
    """Context discipline of formula formation; raises on the first violation"""

    def walk(ctx: Context, node: Node):
        if isinstance(node, (Top, Bot)):
            return
        if isinstance(node, Basic):
            _check_atom(sig, ctx, node.atom)
        elif isinstance(node, (Conj, Disj, Imp)):
            walk(ctx, node.left)
            walk(ctx, node.right)
        elif isinstance(node, Neg):
            walk(ctx, node.child)
        elif isinstance(node, Pull):
            if node.morphism.src != ctx:
                raise MalformedInput(f"pullback along {node.morphism!r} used in context {ctx!r}")
            walk(node.morphism.dst, node.child)
        elif isinstance(node, Quant):
            if node.morphism.dst != ctx:
                raise MalformedInput(f"quantifier {node.name} along {node.morphism!r} used in context {ctx!r}")
            for c in node.children:
                walk(node.morphism.src, c)
        else:
            raise MalformedInput(f"unknown formula node {node!r}")

    walk(phi.context, phi.body)


def _check_atom(sig: Optional[Signature], ctx: Context, a: BasicAtom) -> None:
    if isinstance(a, PropVar):
        return
    if sig is None:
        for t in atom_terms(a):
            for v in term_vars(t):
                ctx.index(v)
        return
    for t in atom_terms(a):
        check_term(sig, ctx, t)
    if isinstance(a, Equation) and a.lhs.sort != a.rhs.sort:
        raise MalformedInput(f"equation between sorts {a.lhs.sort} and {a.rhs.sort}")
    if isinstance(a, RelationAtom):
        sorts = sig.relation(a.rel)
        if len(sorts) != len(a.args):
            raise ArityMismatch(f"relation {a.rel} takes {len(sorts)} arguments")
        for s, t in zip(sorts, a.args):
            if t.sort != s:
                raise MalformedInput(f"argument {t} of {a.rel} has sort {t.sort}, expected {s}")
    if isinstance(a, Membership):
        if sig.power_sorts.get(a.collection.sort) != a.elem.sort:
            raise MalformedInput(f"{a.collection.sort} is not the power sort of {a.elem.sort}")


# Semantics adapters

class FolSemantics:
    """Formula semantics over a Σ-structure"""

    def __init__(self, model: SigmaStructure):
        self.model = model

    def context(self, ctx: Context) -> Presheaf:
        return interpret_context(self.model, ctx)

    def ctx_morphism(self, g: CtxMorphism):
        return interpret_ctx_morphism(self.model, g)

    def basic(self, ctx: Context, atom: BasicAtom) -> SubPresheaf:
        return interp_basic(self.model, ctx, atom)


def semantics_of(model: Any):
    if isinstance(model, SigmaStructure):
        return FolSemantics(model)
    provider = getattr(model, "formula_semantics", None)
    if provider is None:
        raise MalformedInput(f"{type(model).__name__} does not interpret formulas")
    return provider()


def interp_basic(m: SigmaStructure, ctx: Context, a: BasicAtom) -> SubPresheaf:
    F = interpret_context(m, ctx)
    if isinstance(a, Equation):
        _check_atom(m.sig, ctx, a)
        lhs, rhs = interpret_term(m, ctx, a.lhs), interpret_term(m, ctx, a.rhs)
        return SubPresheaf(F, {b: {v for v in F.on_obj[b] if lhs(b, v) == rhs(b, v)} for b in m.base.objects})
    if isinstance(a, RelationAtom):
        _check_atom(m.sig, ctx, a)
        sorts = m.sig.relation(a.rel)
        target = Context((f"_{i}", s) for i, s in enumerate(sorts))
        tup = interpret_ctx_morphism(m, CtxMorphism(ctx, target, a.args))
        return pullback_sub(tup, m.relations[a.rel])
    if isinstance(a, Membership):
        if not m.is_set_like():
            raise UnsupportedCarrier("membership atoms need set-like carriers")
        _check_atom(m.sig, ctx, a)
        elem, coll = interpret_term(m, ctx, a.elem), interpret_term(m, ctx, a.collection)
        return SubPresheaf(F, {b: {v for v in F.on_obj[b] if elem(b, v) in coll(b, v)} for b in m.base.objects})
    raise MalformedInput(f"atom {a!r} has no meaning in a first-order structure")


# Quantifiers

Evaluator = Callable[[Any, Sequence[SubPresheaf]], SubPresheaf]


@dataclass(frozen=True)
class QuantifierDef:
    name: str
    arity: int
    morphism: Optional[CtxMorphism]
    evaluator: Evaluator = field(compare=False)

    def __call__(self, model: Any, args: Sequence[SubPresheaf]) -> SubPresheaf:
        if len(args) != self.arity:
            raise ArityMismatch(f"quantifier {self.name} takes {self.arity} arguments, got {len(args)}")
        return self.evaluator(model, args)


QuantifierFactory = Callable[[CtxMorphism, int], QuantifierDef]


def make_forall(g: CtxMorphism) -> QuantifierDef:
    return QuantifierDef("forall", 1, g, lambda m, args: forall_along(semantics_of(m).ctx_morphism(g), args[0]))


def make_exists(g: CtxMorphism) -> QuantifierDef:
    return QuantifierDef("exists", 1, g, lambda m, args: exists_along(semantics_of(m).ctx_morphism(g), args[0]))


def _require_identity(name: str, g: Optional[CtxMorphism]) -> None:
    if g is not None and not g.is_identity():
        raise MalformedInput(f"{name} is only defined along an identity context morphism")


def make_conj_quantifier(g: Optional[CtxMorphism] = None) -> QuantifierDef:
    _require_identity("conj", g)
    return QuantifierDef("conj", 2, g, lambda m, args: sub_meet(args[0], args[1]))


def make_disj_quantifier(g: Optional[CtxMorphism] = None) -> QuantifierDef:
    _require_identity("disj", g)
    return QuantifierDef("disj", 2, g, lambda m, args: sub_join(args[0], args[1]))


def _fixed_arity(make: Callable[[CtxMorphism], QuantifierDef]) -> QuantifierFactory:
    def factory(g: CtxMorphism, arity: int) -> QuantifierDef:
        q = make(g)
        if arity != q.arity:
            raise ArityMismatch(f"quantifier {q.name} takes {q.arity} arguments, got {arity}")
        return q
    return factory


class QuantifierRegistry:
    """Name-keyed quantifier factories plus registered dual pairs; immutable"""

    def __init__(self, factories: Optional[Mapping[str, QuantifierFactory]] = None,
                 duals: Optional[Mapping[str, Tuple[str, FrozenSet[int]]]] = None):
        self._factories = MappingProxyType(dict(factories or {}))
        self._duals = MappingProxyType(dict(duals or {}))

    def names(self) -> List[str]:
        return sorted(self._factories)

    def __contains__(self, name: str) -> bool:
        return name in self._factories

    def resolve(self, name: str, morphism: CtxMorphism, arity: int) -> QuantifierDef:
        factory = self._factories.get(name)
        if factory is None:
            raise UnknownQuantifier(f"no quantifier named {name!r} is registered")
        return factory(morphism, arity)

    def register(self, name: str, factory: QuantifierFactory) -> "QuantifierRegistry":
        return QuantifierRegistry({**self._factories, name: factory}, self._duals)

    def register_dual(self, name: str, dual: str, signs: Iterable[int]) -> "QuantifierRegistry":
        """Declare ``dual`` as the dual of ``name``, negating the 1-based positions ``signs``"""
        return QuantifierRegistry(self._factories, {**self._duals, name: (dual, frozenset(signs))})

    def dual_of(self, name: str) -> Optional[Tuple[str, FrozenSet[int]]]:
        return self._duals.get(name)


def default_registry() -> QuantifierRegistry:
    return (QuantifierRegistry({
        "forall": _fixed_arity(make_forall),
        "exists": _fixed_arity(make_exists),
        "conj": _fixed_arity(make_conj_quantifier),
        "disj": _fixed_arity(make_disj_quantifier),
    })
        .register_dual("forall", "exists", {1})
        .register_dual("exists", "forall", {1})
        .register_dual("conj", "disj", {1, 2})
        .register_dual("disj", "conj", {1, 2}))


# Interpretation

def interpret_formula(m: Any, phi: Formula, registry: Optional[QuantifierRegistry] = None) -> SubPresheaf:
    """⟦M⟧(σ.φ) as a subobject of |M|(σ)"""
    sem = semantics_of(m)
    registry = registry or default_registry()
    return _interpret(sem, m, registry, phi.context, phi.body)


def _interpret(sem, m, registry: QuantifierRegistry, ctx: Context, node: Node) -> SubPresheaf:
    if isinstance(node, Top):
        return sub_top(sem.context(ctx))
    if isinstance(node, Bot):
        return sub_bottom(sem.context(ctx))
    if isinstance(node, Basic):
        return sem.basic(ctx, node.atom)
    if isinstance(node, Conj):
        return sub_meet(_interpret(sem, m, registry, ctx, node.left), _interpret(sem, m, registry, ctx, node.right))
    if isinstance(node, Disj):
        return sub_join(_interpret(sem, m, registry, ctx, node.left), _interpret(sem, m, registry, ctx, node.right))
    if isinstance(node, Imp):
        return sub_implies(_interpret(sem, m, registry, ctx, node.left), _interpret(sem, m, registry, ctx, node.right))
    if isinstance(node, Neg):
        return sub_implies(_interpret(sem, m, registry, ctx, node.child), sub_bottom(sem.context(ctx)))
    if isinstance(node, Pull):
        inner = _interpret(sem, m, registry, node.morphism.dst, node.child)
        return pullback_sub(sem.ctx_morphism(node.morphism), inner)
    if isinstance(node, Quant):
        q = registry.resolve(node.name, node.morphism, len(node.children))
        args = [_interpret(sem, m, registry, node.morphism.src, c) for c in node.children]
        return q(m, args)
    raise MalformedInput(f"unknown formula node {node!r}")


def validates(m: Any, phi: Formula, registry: Optional[QuantifierRegistry] = None) -> bool:
    value = interpret_formula(m, phi, registry)
    return value == sub_top(value.ambient)


def validates_at(m: Any, iota: SubPresheaf, phi: Formula, registry: Optional[QuantifierRegistry] = None) -> bool:
    """M ⊨_ι σ.φ"""
    value = interpret_formula(m, phi, registry)
    if iota.ambient is not value.ambient and iota.ambient != value.ambient:
        raise AmbientMismatch("ι does not live over the interpretation of the context")
    return sub_leq(iota, value)


def validates_via_generators(m: Any, iota: SubPresheaf, phi: Formula, gens: Optional[GeneratorSet] = None,
                             registry: Optional[QuantifierRegistry] = None) -> bool:
    """M ⊨_ι φ decided generator by generator below ι"""
    value = interpret_formula(m, phi, registry)
    gens = gens or generators(value.ambient)
    return all(sub_leq(d, value) for d in gens.below(iota))


def is_sentence(ms: Sequence[Any], phi: Formula, registry: Optional[QuantifierRegistry] = None) -> bool:
    """Sentencehood certified over the supplied family only"""
    for m in ms:
        value = interpret_formula(m, phi, registry)
        if value != sub_top(value.ambient) and not value.is_bottom():
            return False
    return True


def check_isotone(q: QuantifierDef, m: Any) -> ValidationReport:
    """Qf(…a…) ⪯ Qf(…b…) whenever a ⪯ b in one argument"""
    if q.morphism is None:
        raise MalformedInput("isotonicity needs the quantifier's context morphism")
    sem = semantics_of(m)
    subs = enumerate_sub(sem.context(q.morphism.src))
    guard(len(subs) ** (q.arity + 1), "isotonicity argument tuples")
    report = ValidationReport(subject=f"isotonicity of {q.name}")
    for args in itertools.product(subs, repeat=q.arity):
        base = q(m, list(args))
        for i in range(q.arity):
            for bigger in subs:
                if bigger is args[i] or not sub_leq(args[i], bigger):
                    continue
                moved = list(args)
                moved[i] = bigger
                if not sub_leq(base, q(m, moved)):
                    report.add("not-isotone", f"{q.name} decreases in argument {i + 1}",
                               args=list(args), position=i + 1, bigger=bigger)
    return report


# Syntactic substitution

def _fresh(name: str, taken: Set[str]) -> str:
    candidate = name
    while candidate in taken:
        candidate += "'"
    return candidate


def substitute(phi: Formula, g: CtxMorphism) -> Formula:
    """σ.φ(y⃗/t⃗) for g = t⃗: σ → τ and φ living in τ.

    Quantifier nodes along identities or prefix projections are pushed
    through with fresh bound variables; other quantifier nodes have no
    syntactic substitution.
    """
    if g.dst != phi.context:
        raise MalformedInput("substitution target does not match the formula context")
    return Formula(g.src, _substitute(phi.body, phi.context, g.terms, g.src))


def _substitute(node: Node, old: Context, terms: Tuple[Term, ...], new: Context) -> Node:
    mapping = dict(zip(old.names, terms))
    if isinstance(node, (Top, Bot)):
        return node
    if isinstance(node, Basic):
        return Basic(substitute_atom(node.atom, mapping))
    if isinstance(node, Conj):
        return Conj(_substitute(node.left, old, terms, new), _substitute(node.right, old, terms, new))
    if isinstance(node, Disj):
        return Disj(_substitute(node.left, old, terms, new), _substitute(node.right, old, terms, new))
    if isinstance(node, Imp):
        return Imp(_substitute(node.left, old, terms, new), _substitute(node.right, old, terms, new))
    if isinstance(node, Neg):
        return Neg(_substitute(node.child, old, terms, new))
    if isinstance(node, Pull):
        h = node.morphism
        local = dict(zip(h.src.names, terms))
        return Pull(CtxMorphism(new, h.dst, tuple(substitute_term(t, local) for t in h.terms)), node.child)
    if isinstance(node, Quant):
        f = node.morphism
        if f.is_identity():
            return Quant(node.name, identity_ctx_morphism(new),
                         tuple(_substitute(c, f.src, terms, new) for c in node.children))
        if f.is_prefix_projection():
            keep = len(f.dst)
            taken = set(new.names)
            bound = []
            for n, s in f.src.vars[keep:]:
                fresh = _fresh(n, taken)
                taken.add(fresh)
                bound.append((fresh, s))
            inner = new.extend(bound)
            inner_terms = tuple(terms) + tuple(Var(n, s) for n, s in bound)
            return Quant(node.name, prefix_projection(inner, len(new)),
                         tuple(_substitute(c, f.src, inner_terms, inner) for c in node.children))
        raise SubstitutionUndefined(f"no syntactic substitution through {node.name} along {f!r}")
    raise MalformedInput(f"unknown formula node {node!r}")


def check_substitution_lemma(m: Any, g: CtxMorphism, phi: Formula,
                             registry: Optional[QuantifierRegistry] = None) -> bool:
    """⟦σ.g(φ)⟧ = ⟦σ.φ(y⃗/t⃗)⟧"""
    pulled = Formula(g.src, Pull(g.with_dst(phi.context), phi.body))
    return interpret_formula(m, pulled, registry) == interpret_formula(m, substitute(phi, g), registry)


def free_positions(phi: Formula) -> FrozenSet[int]:
    """Positions of the context variables the formula depends on syntactically"""

    def used(ctx: Context, node: Node) -> Set[int]:
        if isinstance(node, (Top, Bot)):
            return set()
        if isinstance(node, Basic):
            return {ctx.index(v) for t in atom_terms(node.atom) for v in term_vars(t)}
        if isinstance(node, (Conj, Disj, Imp)):
            return used(ctx, node.left) | used(ctx, node.right)
        if isinstance(node, Neg):
            return used(ctx, node.child)
        if isinstance(node, Pull):
            h = node.morphism
            inner = used(h.dst, node.child)
            return {h.src.index(v) for j in inner for v in term_vars(h.terms[j])}
        f = node.morphism
        inner = set().union(*(used(f.src, c) for c in node.children)) if node.children else set()
        if f.is_identity() or f.is_prefix_projection():
            return {i for i in inner if i < len(f.dst)}
        return set(range(len(ctx)))

    return frozenset(used(phi.context, phi.body))


def free_variables(phi: Formula) -> List[str]:
    return [phi.context.names[i] for i in sorted(free_positions(phi))]
