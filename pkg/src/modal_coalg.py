"""
Coalgebras for finite set functors, predicate liftings and the modal
quantifiers they induce
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .cat_core import Presheaf, ValidationReport, identity_nat, set_presheaf, sort_elems
from .errors import (ArityMismatch, FunctorNotProductPreserving, MalformedInput, UnknownIdentifier,
                     UnsupportedFunctor)
from .fol_model import EMPTY_CONTEXT, Context, CtxMorphism, identity_ctx_morphism
from .formula_sem import BasicAtom, PropVar, QuantifierDef, QuantifierRegistry, default_registry
from .internal_language import (BaseType, IAnd, IFun, IForall, IImp, IIn, IVar, InternalEnv, InternalFunction,
                                PowerType, eval_internal_term)
from .settings_manager import guard
from .sub_heyting import SubPresheaf

logger = logging.getLogger(__name__)

Subset = FrozenSet[Any]


def _subsets(xs: Sequence[Any]) -> List[Subset]:
    guard(2 ** len(xs), "subsets")
    return [frozenset(c) for r in range(len(xs) + 1) for c in itertools.combinations(xs, r)]


# Functors

class SetFunctor:
    """An endofunctor on finite sets given by element generators.

    ``fmap(mu, y)`` is F(μ) applied to y ∈ F(X) for μ given as a dict.
    ``beta(y)`` is the successor set of y when a transformation F ⇒ P is
    configured.
    """
    name = "functor"
    product_preserving: Optional[bool] = None

    def apply(self, carrier: Sequence[Any]) -> List[Any]:
        raise NotImplementedError

    def fmap(self, mu: Mapping[Any, Any], y: Any) -> Any:
        raise NotImplementedError

    def contains(self, carrier: Sequence[Any], y: Any) -> bool:
        return y in set(self.apply(carrier))

    def beta(self, y: Any) -> Subset:
        raise UnsupportedFunctor(f"{self.name} has no successor extraction")

    def has_beta(self) -> bool:
        return False

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.name}

    def __repr__(self):
        return f"<{type(self).__name__} {self.describe()}>"


class PowersetFunctor(SetFunctor):
    name = "powerset"

    def apply(self, carrier):
        return _subsets(sort_elems(carrier))

    def fmap(self, mu, y):
        return frozenset(mu[x] for x in y)

    def contains(self, carrier, y):
        return isinstance(y, frozenset) and y <= set(carrier)

    def beta(self, y):
        return y

    def has_beta(self):
        return True


class KripkeFunctor(SetFunctor):
    """S ↦ P(S) × P(PV); elements are (successors, labels) pairs"""
    name = "kripke"

    def __init__(self, props: Iterable[str]):
        self.props = tuple(sorted(set(props)))

    def apply(self, carrier):
        succs = _subsets(sort_elems(carrier))
        labels = _subsets(list(self.props))
        guard(len(succs) * len(labels), "Kripke functor elements")
        return [(s, l) for s in succs for l in labels]

    def fmap(self, mu, y):
        return (frozenset(mu[x] for x in y[0]), y[1])

    def contains(self, carrier, y):
        return (isinstance(y, tuple) and len(y) == 2 and isinstance(y[0], frozenset) and isinstance(y[1], frozenset)
                and y[0] <= set(carrier) and y[1] <= set(self.props))

    def beta(self, y):
        return y[0]

    def has_beta(self):
        return True

    def describe(self):
        return {"kind": self.name, "props": list(self.props)}


class ExponentFunctor(SetFunctor):
    """X ↦ X^A; elements are tuples indexed by the labels of A"""
    name = "exponent"
    product_preserving = True

    def __init__(self, labels: Iterable[str]):
        self.labels = tuple(labels)
        if not self.labels:
            raise MalformedInput("the exponent functor needs at least one label")

    def apply(self, carrier):
        xs = sort_elems(carrier)
        guard(len(xs) ** len(self.labels), "exponent functor elements")
        return list(itertools.product(xs, repeat=len(self.labels)))

    def fmap(self, mu, y):
        return tuple(mu[x] for x in y)

    def contains(self, carrier, y):
        return isinstance(y, tuple) and len(y) == len(self.labels) and all(x in set(carrier) for x in y)

    def beta(self, y):
        return frozenset(y)

    def has_beta(self):
        return True

    def describe(self):
        return {"kind": self.name, "labels": list(self.labels)}


class ConstantFunctor(SetFunctor):
    name = "constant"

    def __init__(self, values: Iterable[Any]):
        self.values = tuple(sort_elems(set(values)))
        self.product_preserving = len(self.values) == 1

    def apply(self, carrier):
        return list(self.values)

    def fmap(self, mu, y):
        return y

    def beta(self, y):
        return frozenset()

    def has_beta(self):
        return True

    def describe(self):
        return {"kind": self.name, "values": list(self.values)}


class CustomFunctor(SetFunctor):
    """A functor from caller-supplied tables"""
    name = "custom"

    def __init__(self, label: str, on_obj: Callable[[Sequence[Any]], Iterable[Any]],
                 on_mor: Callable[[Mapping[Any, Any], Any], Any],
                 beta: Optional[Callable[[Any], Subset]] = None):
        self.label = label
        self._on_obj = on_obj
        self._on_mor = on_mor
        self._custom_beta = beta

    def apply(self, carrier):
        return sort_elems(self._on_obj(sort_elems(carrier)))

    def fmap(self, mu, y):
        return self._on_mor(mu, y)

    def beta(self, y):
        if self._custom_beta is None:
            raise UnsupportedFunctor(f"{self.label} has no successor extraction")
        return frozenset(self._custom_beta(y))

    def has_beta(self):
        return self._custom_beta is not None

    def describe(self):
        return {"kind": self.name, "label": self.label}


def check_functor_laws(functor: SetFunctor, max_size: int = 2) -> ValidationReport:
    """Identity and composition laws on all maps between sets of size ≤ max_size"""
    report = ValidationReport(subject=f"functor laws of {functor.name}")
    carriers = [tuple(range(n)) for n in range(max_size + 1)]
    for X in carriers:
        ident = {x: x for x in X}
        for y in functor.apply(X):
            if functor.fmap(ident, y) != y:
                report.add("identity", f"F(id) moves {y!r}", size=len(X), element=y)
    for X, Y, Z in itertools.product(carriers, repeat=3):
        for f in _functions(X, Y):
            for g in _functions(Y, Z):
                gf = {x: g[f[x]] for x in X}
                for y in functor.apply(X):
                    if functor.fmap(gf, y) != functor.fmap(g, functor.fmap(f, y)):
                        report.add("composition", f"F(g∘f) ≠ F(g)∘F(f) at {y!r}",
                                   sizes=[len(X), len(Y), len(Z)], f=f, g=g, element=y)
    return report


def _functions(X: Sequence[Any], Y: Sequence[Any]) -> List[Dict[Any, Any]]:
    guard(len(Y) ** len(X), "functions between carriers")
    return [dict(zip(X, image)) for image in itertools.product(Y, repeat=len(X))]


# Coalgebras

@dataclass(frozen=True, eq=False)
class Coalgebra:
    """(X, α_X) with an optional valuation PV → P(X)"""
    functor: SetFunctor
    carrier: Tuple[Any, ...]
    structure: Mapping[Any, Any]
    valuation: Mapping[str, Subset] = field(default_factory=dict)
    name: str = ""

    def alpha(self, x: Any) -> Any:
        return self.structure[x]

    @cached_property
    def presheaf(self) -> Presheaf:
        return set_presheaf(self.carrier, name=self.name or "X")

    def subobject(self, a: Iterable[Any]) -> SubPresheaf:
        F = self.presheaf
        return SubPresheaf(F, {F.base.objects[0]: a})

    def formula_semantics(self) -> "CoalgebraSemantics":
        return CoalgebraSemantics(self)


def make_coalgebra(functor: SetFunctor, carrier: Iterable[Any], structure: Mapping[Any, Any],
                   valuation: Optional[Mapping[str, Iterable[Any]]] = None, name: str = "") -> Coalgebra:
    c = Coalgebra(functor, tuple(sort_elems(set(carrier))), dict(structure),
                  {p: frozenset(v) for p, v in (valuation or {}).items()}, name)
    report = check_coalgebra(c)
    if not report.ok:
        raise MalformedInput(report.violations[0].message, violations=[v.code for v in report.violations])
    return c


def check_coalgebra(c: Coalgebra) -> ValidationReport:
    report = ValidationReport(subject=c.name or "coalgebra")
    carrier = set(c.carrier)
    for x in c.carrier:
        if x not in c.structure:
            report.add("structure-not-total", f"α is undefined on {x!r}", state=x)
        elif not c.functor.contains(c.carrier, c.structure[x]):
            report.add("structure-codomain", f"α({x!r}) is not an element of F(X)", state=x)
    for x in c.structure:
        if x not in carrier:
            report.add("structure-domain", f"α is defined on {x!r} outside the carrier", state=x)
    for p, a in c.valuation.items():
        if not a <= carrier:
            report.add("valuation-not-subset", f"ν({p}) leaves the carrier", prop=p)
    return report


def alpha_inverse(c: Coalgebra, y: Iterable[Any]) -> Subset:
    """α_X⁻¹(Y) = {x | α_X(x) ∈ Y}"""
    ys = set(y)
    return frozenset(x for x in c.carrier if c.structure[x] in ys)


class CoalgebraSemantics:
    """Formulas over the one-object context category: the only context is
    the empty one and its only morphism is the identity."""

    def __init__(self, c: Coalgebra):
        self.coalgebra = c

    def context(self, ctx: Context) -> Presheaf:
        if len(ctx):
            raise MalformedInput("coalgebra formulas live in the empty context")
        return self.coalgebra.presheaf

    def ctx_morphism(self, g: CtxMorphism):
        if not g.is_identity() or len(g.src):
            raise MalformedInput("coalgebra formulas only pull back along the identity")
        return identity_nat(self.coalgebra.presheaf)

    def basic(self, ctx: Context, atom: BasicAtom) -> SubPresheaf:
        self.context(ctx)
        if not isinstance(atom, PropVar):
            raise MalformedInput(f"atom {atom!r} has no meaning in a coalgebra")
        if atom.name not in self.coalgebra.valuation:
            raise UnknownIdentifier(f"no valuation for {atom.name!r}")
        return self.coalgebra.subobject(self.coalgebra.valuation[atom.name])


# Predicate liftings

LiftingTest = Callable[[SetFunctor, Sequence[Subset], Any], bool]


@dataclass(frozen=True)
class PredicateLifting:
    """λ: Pⁿ ⇒ P∘F^op given by membership: y ∈ λ_X(a⃗) iff ``test(F, a⃗, y)``"""
    name: str
    arity: int
    test: LiftingTest = field(compare=False)

    def component(self, functor: SetFunctor, carrier: Sequence[Any], args: Sequence[Subset]) -> Subset:
        self._check_arity(args)
        return frozenset(y for y in functor.apply(carrier) if self.test(functor, args, y))

    def _check_arity(self, args: Sequence[Any]) -> None:
        if len(args) != self.arity:
            raise ArityMismatch(f"lifting {self.name} takes {self.arity} arguments, got {len(args)}")


def box_lifting() -> PredicateLifting:
    return PredicateLifting("box", 1, lambda F, args, y: F.beta(y) <= args[0])


def diamond_lifting() -> PredicateLifting:
    return PredicateLifting("diamond", 1, lambda F, args, y: bool(F.beta(y) & args[0]))


def const_top_lifting() -> PredicateLifting:
    return PredicateLifting("top", 0, lambda F, args, y: True)


def atomic_lifting(prop: str) -> PredicateLifting:
    """λ_p(y) holds when p labels y"""

    def test(F, args, y):
        if not isinstance(F, KripkeFunctor):
            raise UnsupportedFunctor("atomic liftings need a Kripke functor")
        return prop in y[1]

    return PredicateLifting(f"atom_{prop}", 0, test)


def nabla_lifting(arity: int) -> PredicateLifting:
    """Moss' cover: every argument meets β(y) and β(y) is covered by the arguments"""

    def test(F, args, y):
        succ = F.beta(y)
        return all(succ & a for a in args) and all(any(s in a for a in args) for s in succ)

    return PredicateLifting(f"nabla{arity}", arity, test)


def apply_lifting(l: PredicateLifting, c: Coalgebra, args: Sequence[Iterable[Any]]) -> Subset:
    """[λ]_X(a⃗) = α_X⁻¹(λ_X(a⃗))"""
    subs = [frozenset(a) for a in args]
    l._check_arity(subs)
    carrier = set(c.carrier)
    for a in subs:
        if not a <= carrier:
            raise MalformedInput(f"argument of {l.name} leaves the carrier")
    return frozenset(x for x in c.carrier if l.test(c.functor, subs, c.structure[x]))


def _require_beta(c: Coalgebra) -> None:
    if not c.functor.has_beta():
        raise UnsupportedFunctor(f"{c.functor.name} has no successor extraction")


def eval_box(c: Coalgebra, a: Iterable[Any]) -> Subset:
    _require_beta(c)
    return apply_lifting(box_lifting(), c, [a])


def eval_diamond(c: Coalgebra, a: Iterable[Any]) -> Subset:
    _require_beta(c)
    return apply_lifting(diamond_lifting(), c, [a])


def eval_nabla(c: Coalgebra, args: Iterable[Iterable[Any]]) -> Subset:
    """∇ at the arity of the set of argument subsets; duplicates collapse"""
    _require_beta(c)
    distinct = sort_elems({frozenset(a) for a in args})
    return apply_lifting(nabla_lifting(len(distinct)), c, distinct)


# Coalgebra morphisms

def check_coalgebra_morphism(mu: Mapping[Any, Any], src: Coalgebra, dst: Coalgebra,
                             preserve_valuation: bool = False) -> ValidationReport:
    """F(μ)∘α_X = α_Y∘μ, and ν(p) ⪯ μ⁻¹(ν'(p)) when valuations are compared"""
    report = ValidationReport(subject="coalgebra morphism")
    target = set(dst.carrier)
    for x in src.carrier:
        if x not in mu or mu[x] not in target:
            report.add("not-total", f"μ is not defined into the target on {x!r}", state=x)
            return report
    for x in src.carrier:
        if src.functor.fmap(mu, src.structure[x]) != dst.structure[mu[x]]:
            report.add("square", f"F(μ)∘α and α∘μ differ at {x!r}", state=x)
    if preserve_valuation:
        for p, a in src.valuation.items():
            image = dst.valuation.get(p, frozenset())
            for x in sort_elems(a):
                if mu[x] not in image:
                    report.add("valuation", f"{x!r} satisfies {p} but its image does not", prop=p, state=x)
    return report


def enumerate_coalgebras(functor: SetFunctor, carrier: Iterable[Any],
                         valuation: Optional[Mapping[str, Iterable[Any]]] = None) -> List[Coalgebra]:
    states = sort_elems(set(carrier))
    values = functor.apply(states)
    guard(len(values) ** len(states), "coalgebra structures")
    out = [
        Coalgebra(functor, tuple(states), dict(zip(states, image)),
                  {p: frozenset(v) for p, v in (valuation or {}).items()})
        for image in itertools.product(values, repeat=len(states))
    ]
    logger.debug("enumerated %d coalgebras on %d states", len(out), len(states))
    return out


def enumerate_coalgebra_morphisms(src: Coalgebra, dst: Coalgebra,
                                  preserve_valuation: bool = False) -> List[Dict[Any, Any]]:
    return [mu for mu in _functions(src.carrier, dst.carrier)
            if check_coalgebra_morphism(mu, src, dst, preserve_valuation).ok]


# Products

def product_coalgebras(cs: Sequence[Coalgebra]) -> Tuple[Coalgebra, List[Dict[Any, Any]]]:
    """∏ c_i with α given by the inverse of the canonical map F(∏X_i) → ∏F(X_i)"""
    if not cs:
        raise MalformedInput("the product of coalgebras needs at least one factor")
    functor = cs[0].functor
    if any(c.functor is not functor for c in cs[1:]):
        raise MalformedInput("coalgebras of a product must share their functor")
    carrier = list(itertools.product(*(c.carrier for c in cs)))
    guard(len(carrier), "product states")
    projections = [{x: x[i] for x in carrier} for i in range(len(cs))]

    canonical: Dict[Tuple[Any, ...], Any] = {}
    for y in functor.apply(carrier):
        image = tuple(functor.fmap(p, y) for p in projections)
        if image in canonical:
            raise FunctorNotProductPreserving(
                f"{functor.name} identifies two elements of F(∏X) under the canonical map",
                functor=functor.describe())
        canonical[image] = y
    expected = 1
    for c in cs:
        expected *= len(functor.apply(c.carrier))
    if len(canonical) != expected:
        raise FunctorNotProductPreserving(
            f"{functor.name} does not reach all of ∏F(X_i): {len(canonical)} of {expected}",
            functor=functor.describe())

    structure = {x: canonical[tuple(c.structure[xi] for c, xi in zip(cs, x))] for x in carrier}
    props = set().union(*(c.valuation.keys() for c in cs))
    valuation = {p: frozenset(x for x in carrier if all(xi in c.valuation.get(p, ()) for c, xi in zip(cs, x)))
                 for p in props}
    product = Coalgebra(functor, tuple(sort_elems(carrier)), structure, valuation,
                        " × ".join(c.name or "?" for c in cs))
    return product, projections


def check_product_preservation(functor: SetFunctor, carriers: Sequence[Sequence[Any]]) -> bool:
    """Whether the canonical map F(∏X_i) → ∏F(X_i) is a bijection on these carriers"""
    shapes = [Coalgebra(functor, tuple(X), {}) for X in carriers]
    product = list(itertools.product(*(c.carrier for c in shapes)))
    projections = [{x: x[i] for x in product} for i in range(len(shapes))]
    images = {tuple(functor.fmap(p, y) for p in projections) for y in functor.apply(product)}
    expected = 1
    for X in carriers:
        expected *= len(functor.apply(X))
    return len(images) == len(functor.apply(product)) == expected


# Naturality

def check_lifting_naturality(l: PredicateLifting, functor: SetFunctor, max_size: int = 2) -> ValidationReport:
    """λ-naturality on all maps between sets of size ≤ max_size, then the α⁻¹
    square for [λ] over all morphisms between coalgebras on those sets"""
    report = ValidationReport(subject=f"naturality of {l.name}")
    carriers = [tuple(f"s{i}" for i in range(n)) for n in range(max_size + 1)]
    for X, Y in itertools.product(carriers, repeat=2):
        arg_space = list(itertools.product(_subsets(Y), repeat=l.arity))
        for mu in _functions(X, Y):
            for args in arg_space:
                pulled = [frozenset(x for x in X if mu[x] in a) for a in args]
                for y in functor.apply(X):
                    if l.test(functor, args, functor.fmap(mu, y)) != l.test(functor, pulled, y):
                        report.add("lifting-not-natural",
                                   f"λ square fails for μ={mu} at {y!r}",
                                   mu=mu, args=list(args), element=y, sizes=[len(X), len(Y)])
    if not report.ok:
        return report

    for X, Y in itertools.product(carriers, repeat=2):
        arg_space = list(itertools.product(_subsets(Y), repeat=l.arity))
        values_Y = functor.apply(Y)
        for src in enumerate_coalgebras(functor, X):
            for mu in _functions(X, Y):
                dst = _forced_target(functor, src, mu, Y, values_Y)
                if dst is None:
                    continue
                for args in arg_space:
                    pulled = [frozenset(x for x in X if mu[x] in a) for a in args]
                    lhs = frozenset(x for x in X if mu[x] in apply_lifting(l, dst, args))
                    if lhs != apply_lifting(l, src, pulled):
                        report.add("not-distributing",
                                   f"μ⁻¹∘[λ] ≠ [λ]∘μ⁻¹ for μ={mu}",
                                   mu=mu, args=list(args), src=dict(src.structure), dst=dict(dst.structure))
    return report


def _forced_target(functor: SetFunctor, src: Coalgebra, mu: Mapping[Any, Any], Y: Sequence[Any],
                   values_Y: Sequence[Any]) -> Optional[Coalgebra]:
    """A coalgebra on Y for which μ is a morphism from ``src``, or None when there is none.

    Only the image of μ is forced; the squares never read the other states, so
    they all get the first element of F(Y).
    """
    structure: Dict[Any, Any] = {}
    for x in src.carrier:
        image = functor.fmap(mu, src.structure[x])
        if structure.setdefault(mu[x], image) != image:
            return None
    rest = [y for y in Y if y not in structure]
    if rest and not values_Y:
        return None
    structure.update({y: values_Y[0] for y in rest})
    return Coalgebra(functor, tuple(Y), structure)


def check_lifting_isotone(l: PredicateLifting, c: Coalgebra) -> ValidationReport:
    """[λ] preserves ⊆ in each argument"""
    report = ValidationReport(subject=f"isotonicity of {l.name}")
    subs = _subsets(list(c.carrier))
    guard(len(subs) ** (l.arity + 1), "isotonicity argument tuples")
    for args in itertools.product(subs, repeat=l.arity):
        base = apply_lifting(l, c, args)
        for i in range(l.arity):
            for bigger in subs:
                if not args[i] <= bigger or args[i] == bigger:
                    continue
                moved = list(args)
                moved[i] = bigger
                if not base <= apply_lifting(l, c, moved):
                    report.add("not-isotone", f"{l.name} decreases in argument {i + 1}",
                               args=list(args), position=i + 1, bigger=bigger)
    return report


# Preorder coalgebras

def preorder_formulas():
    """Reflexivity and transitivity of the relation x R y ⇔ y ∈ b(x)"""
    X = BaseType("X")
    x, y, z = IVar("x", X), IVar("y", X), IVar("z", X)
    reflexive = IForall("x", X, IIn(x, IFun("b", x)))
    transitive = IForall("x", X, IForall("y", X, IForall("z", X, IImp(
        IAnd(IIn(y, IFun("b", x)), IIn(z, IFun("b", y))),
        IIn(z, IFun("b", x))))))
    return reflexive, transitive


def check_preorder_coalgebra(c: Coalgebra) -> bool:
    if not isinstance(c.functor, PowersetFunctor):
        raise UnsupportedFunctor("preorder coalgebras are coalgebras for the powerset functor")
    X = BaseType("X")
    env = InternalEnv({"X": c.carrier}, {"b": InternalFunction(X, PowerType(X), c.structure)})
    reflexive, transitive = preorder_formulas()
    return bool(eval_internal_term(env, reflexive)) and bool(eval_internal_term(env, transitive))


# Modal quantifiers

def lifting_quantifier(l: PredicateLifting, g: Optional[CtxMorphism] = None) -> QuantifierDef:
    """[λ] as a quantifier along the identity of the empty context"""
    if g is not None and (not g.is_identity() or len(g.src)):
        raise MalformedInput(f"{l.name} is only defined along the identity of the empty context")

    def evaluate(m, args):
        if not isinstance(m, Coalgebra):
            raise MalformedInput(f"{l.name} interprets over coalgebras only")
        part = m.presheaf.base.objects[0]
        return m.subobject(apply_lifting(l, m, [a.parts[part] for a in args]))

    return QuantifierDef(l.name, l.arity, g, evaluate)


def modal_registry(props: Iterable[str] = (), liftings: Iterable[PredicateLifting] = (),
                   base: Optional[QuantifierRegistry] = None) -> QuantifierRegistry:
    """box, diamond, top, ∇ at every arity, atomic liftings for ``props`` and extra liftings"""
    registry = base or default_registry()

    def fixed(l: PredicateLifting):
        def factory(g, arity):
            if arity != l.arity:
                raise ArityMismatch(f"quantifier {l.name} takes {l.arity} arguments, got {arity}")
            return lifting_quantifier(l, g)
        return factory

    registry = (registry
                .register("box", fixed(box_lifting()))
                .register("diamond", fixed(diamond_lifting()))
                .register("top", fixed(const_top_lifting()))
                .register("nabla", lambda g, arity: lifting_quantifier(nabla_lifting(arity), g))
                .register_dual("box", "diamond", {1})
                .register_dual("diamond", "box", {1}))
    for p in props:
        registry = registry.register(f"atom_{p}", fixed(atomic_lifting(p)))
    for l in liftings:
        registry = registry.register(l.name, fixed(l))
    return registry


def empty_context_identity() -> CtxMorphism:
    return identity_ctx_morphism(EMPTY_CONTEXT)
