"""
Many-sorted first-order structures in a presheaf topos
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .cat_core import (FinCategory, NatTrans, Presheaf, ValidationReport, check_nat_trans, check_presheaf,
                       compose_nat, enumerate_nat_trans, identity_nat, make_presheaf, product_presheaf, same_base, sort_elems)
from .errors import (ArityMismatch, BaseMismatch, MalformedInput, SignatureMismatch, UnboundVariable,
                     UnknownIdentifier, UnknownSort, UnsupportedCarrier)
from .settings_manager import guard
from .sub_heyting import SubPresheaf, check_sub

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Signature:
    sorts: Tuple[str, ...]
    functions: Mapping[str, Tuple[Tuple[str, ...], str]] = field(default_factory=dict)
    relations: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    power_sorts: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        declared = set(self.sorts) | set(self.power_sorts)
        if len(set(self.sorts)) != len(self.sorts):
            raise MalformedInput("duplicate sort names")
        for pa, a in self.power_sorts.items():
            if pa in self.sorts:
                raise MalformedInput(f"power sort {pa} is also declared as a plain sort")
            if a not in self.sorts:
                raise UnknownSort(f"power sort {pa} ranges over undeclared sort {a}")
        for name, (args, result) in self.functions.items():
            for s in tuple(args) + (result,):
                if s not in declared:
                    raise UnknownSort(f"function {name} uses undeclared sort {s}")
        for name, args in self.relations.items():
            for s in args:
                if s not in declared:
                    raise UnknownSort(f"relation {name} uses undeclared sort {s}")
        clash = set(self.functions) & set(self.relations)
        if clash:
            raise MalformedInput(f"names used both as function and relation: {sorted(clash)}")

    def all_sorts(self) -> Tuple[str, ...]:
        return tuple(self.sorts) + tuple(sorted(self.power_sorts))

    def has_sort(self, s: str) -> bool:
        return s in self.sorts or s in self.power_sorts

    def function(self, name: str) -> Tuple[Tuple[str, ...], str]:
        try:
            return self.functions[name]
        except KeyError:
            raise UnknownIdentifier(f"unknown function symbol {name!r}")

    def relation(self, name: str) -> Tuple[str, ...]:
        try:
            return self.relations[name]
        except KeyError:
            raise UnknownIdentifier(f"unknown relation symbol {name!r}")


class Context:
    """An ordered list of typed variables.

    Contexts are compared by their sorts only: variable names are display
    metadata and positions do the binding.
    """

    def __init__(self, variables: Iterable[Tuple[str, str]] = ()):
        self.vars: Tuple[Tuple[str, str], ...] = tuple((str(n), str(s)) for n, s in variables)
        names = [n for n, _ in self.vars]
        if len(set(names)) != len(names):
            raise MalformedInput(f"duplicate variable names in context {names}")

    @property
    def sorts(self) -> Tuple[str, ...]:
        return tuple(s for _, s in self.vars)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.vars)

    def __len__(self):
        return len(self.vars)

    def __eq__(self, other):
        return isinstance(other, Context) and self.sorts == other.sorts

    def __hash__(self):
        return hash(self.sorts)

    def __repr__(self):
        return "[" + ", ".join(f"{n}:{s}" for n, s in self.vars) + "]"

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.vars):
            if n == name:
                return i
        raise UnboundVariable(f"variable {name!r} is not in context {self!r}")

    def extend(self, more: Iterable[Tuple[str, str]]) -> "Context":
        return Context(self.vars + tuple(more))


EMPTY_CONTEXT = Context()


@dataclass(frozen=True)
class Var:
    name: str
    sort: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    fn: str
    args: Tuple["Term", ...]
    sort: str

    def __str__(self):
        if not self.args:
            return self.fn
        return f"{self.fn}({', '.join(map(str, self.args))})"


Term = Union[Var, App]


def app(sig: Signature, fn: str, *args: Term) -> App:
    """Well-sorted application"""
    arg_sorts, result = sig.function(fn)
    if len(arg_sorts) != len(args):
        raise ArityMismatch(f"{fn} takes {len(arg_sorts)} arguments, got {len(args)}")
    for s, t in zip(arg_sorts, args):
        if t.sort != s:
            raise MalformedInput(f"argument {t} of {fn} has sort {t.sort}, expected {s}")
    return App(fn, tuple(args), result)


def check_term(sig: Signature, ctx: Context, t: Term) -> None:
    """Sorts match the signature and every variable is bound by ctx"""
    if isinstance(t, Var):
        i = ctx.index(t.name)
        if ctx.sorts[i] != t.sort:
            raise MalformedInput(f"variable {t.name} has sort {ctx.sorts[i]} in context, used as {t.sort}")
        return
    arg_sorts, result = sig.function(t.fn)
    if len(arg_sorts) != len(t.args):
        raise ArityMismatch(f"{t.fn} takes {len(arg_sorts)} arguments, got {len(t.args)}")
    if result != t.sort:
        raise MalformedInput(f"{t.fn} has result sort {result}, term claims {t.sort}")
    for s, a in zip(arg_sorts, t.args):
        if a.sort != s:
            raise MalformedInput(f"argument {a} of {t.fn} has sort {a.sort}, expected {s}")
        check_term(sig, ctx, a)


def term_vars(t: Term) -> List[str]:
    if isinstance(t, Var):
        return [t.name]
    out: List[str] = []
    for a in t.args:
        for v in term_vars(a):
            if v not in out:
                out.append(v)
    return out


def substitute_term(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return App(t.fn, tuple(substitute_term(a, mapping) for a in t.args), t.sort)


@dataclass(frozen=True)
class CtxMorphism:
    """A tuple of terms over ``src``, one per variable of ``dst``"""
    src: Context
    dst: Context
    terms: Tuple[Term, ...]

    def __post_init__(self):
        if len(self.terms) != len(self.dst):
            raise ArityMismatch(f"context morphism into {self.dst!r} needs {len(self.dst)} terms")
        for t, s in zip(self.terms, self.dst.sorts):
            if t.sort != s:
                raise MalformedInput(f"term {t} has sort {t.sort}, target variable has sort {s}")
        for t in self.terms:
            for v in term_vars(t):
                self.src.index(v)

    def __repr__(self):
        return f"{self.src!r} → {self.dst!r} [{', '.join(map(str, self.terms))}]"

    def with_dst(self, dst: Context) -> "CtxMorphism":
        """The same morphism with the target variables renamed"""
        if dst != self.dst:
            raise MalformedInput("renamed target must have the same sorts")
        return CtxMorphism(self.src, dst, self.terms)

    def with_src(self, src: Context) -> "CtxMorphism":
        """The same morphism with the source variables renamed positionally"""
        if src != self.src:
            raise MalformedInput("renamed source must have the same sorts")
        mapping = {old: Var(new, s) for (old, s), (new, _) in zip(self.src.vars, src.vars)}
        return CtxMorphism(src, self.dst, tuple(substitute_term(t, mapping) for t in self.terms))

    def is_identity(self) -> bool:
        return self.src == self.dst and all(
            isinstance(t, Var) and t.name == n for t, (n, _) in zip(self.terms, self.src.vars))

    def is_prefix_projection(self) -> bool:
        return len(self.dst) <= len(self.src) and all(
            isinstance(t, Var) and t.name == n for t, (n, _) in zip(self.terms, self.src.vars))


def identity_ctx_morphism(ctx: Context) -> CtxMorphism:
    return CtxMorphism(ctx, ctx, tuple(Var(n, s) for n, s in ctx.vars))


def prefix_projection(src: Context, keep: int) -> CtxMorphism:
    """π: [y⃗.z⃗] → [y⃗] keeping the first ``keep`` variables"""
    if keep > len(src):
        raise MalformedInput("cannot keep more variables than the context has")
    dst = Context(src.vars[:keep])
    return CtxMorphism(src, dst, tuple(Var(n, s) for n, s in dst.vars))


def compose_ctx_morphisms(h: CtxMorphism, g: CtxMorphism) -> CtxMorphism:
    """h∘g for g: σ→τ and h: τ→ρ"""
    if g.dst != h.src:
        raise MalformedInput("context morphisms are not composable")
    mapping = {n: t for (n, _), t in zip(h.src.vars, g.terms)}
    return CtxMorphism(g.src, h.dst, tuple(substitute_term(t, mapping) for t in h.terms))


@dataclass(frozen=True)
class SigmaStructure:
    sig: Signature
    base: FinCategory
    carriers: Mapping[str, Presheaf]
    functions: Mapping[str, NatTrans]
    relations: Mapping[str, SubPresheaf]
    name: str = field(default="", compare=False)
    notes: Tuple[str, ...] = field(default=(), compare=False)
    _cache: Dict[Any, Any] = field(default_factory=dict, compare=False, repr=False)

    def carrier(self, sort: str) -> Presheaf:
        try:
            return self.carriers[sort]
        except KeyError:
            raise UnknownSort(f"model {self.name or '?'} has no carrier for sort {sort!r}")

    def arg_presheaf(self, sorts: Sequence[str]) -> Presheaf:
        """Product of the carriers of ``sorts``, shared per sort tuple"""
        key = ("product", tuple(sorts))
        if key not in self._cache:
            self._cache[key] = product_presheaf([self.carrier(s) for s in sorts], self.base)[0]
        return self._cache[key]

    def is_set_like(self) -> bool:
        return self.base.is_set_like()


def power_carrier(F: Presheaf, name: str = "") -> Presheaf:
    """The literal powerset of a set-like carrier"""
    if not F.base.is_set_like():
        raise UnsupportedCarrier("power sorts need set-like carriers")
    obj = F.base.objects[0]
    elems = F.elements(obj)
    guard(2 ** len(elems), "powerset elements")
    subsets = [frozenset(c) for r in range(len(elems) + 1) for c in itertools.combinations(elems, r)]
    return make_presheaf(F.base, {obj: subsets}, name=name or f"P({F.name})")


def make_structure(sig: Signature, base: FinCategory, carriers: Mapping[str, Presheaf],
                   functions: Optional[Mapping[str, Mapping[str, Mapping[Tuple, Any]]]] = None,
                   relations: Optional[Mapping[str, Mapping[str, Iterable[Tuple]]]] = None,
                   name: str = "") -> SigmaStructure:
    """Assemble a structure from per-object tables.

    ``functions[f][obj]`` maps argument tuples to results and
    ``relations[r][obj]`` lists the related tuples. Power sort carriers are
    derived from their element sorts.
    """
    carriers = dict(carriers)
    for pa, a in sig.power_sorts.items():
        if pa not in carriers:
            carriers[pa] = power_carrier(carriers[a], name=pa)
    shell = SigmaStructure(sig, base, carriers, {}, {}, name)
    fns = {}
    for fname, (args, result) in sig.functions.items():
        table = (functions or {}).get(fname)
        if table is None:
            raise MalformedInput(f"function {fname} has no interpretation")
        src = shell.arg_presheaf(args)
        fns[fname] = NatTrans(src, carriers[result], {b: dict(table.get(b, {})) for b in base.objects}, fname)
    rels = {}
    for rname, args in sig.relations.items():
        table = (relations or {}).get(rname, {})
        rels[rname] = SubPresheaf(shell.arg_presheaf(args), {b: set(map(tuple, table.get(b, ()))) for b in base.objects})
    model = SigmaStructure(sig, base, carriers, fns, rels, name, (), shell._cache)
    return model


def check_structure(m: SigmaStructure) -> ValidationReport:
    report = ValidationReport(subject=m.name or "structure")
    for s in m.sig.all_sorts():
        if s not in m.carriers:
            report.add("missing-carrier", f"no carrier for sort {s}", sort=s)
            continue
        F = m.carriers[s]
        if F.base is not m.base and F.base != m.base:
            raise BaseMismatch(f"carrier of {s} lives over another base")
        report.extend(check_presheaf(F))
    if not report.ok:
        return report
    for pa, a in m.sig.power_sorts.items():
        if m.carriers[pa] != power_carrier(m.carriers[a]):
            report.add("power-carrier", f"carrier of {pa} is not the powerset of the carrier of {a}", sort=pa)
    for fname, (args, result) in m.sig.functions.items():
        t = m.functions.get(fname)
        if t is None:
            report.add("missing-function", f"function {fname} is not interpreted", function=fname)
            continue
        if t.src != m.arg_presheaf(args) or t.dst != m.carriers[result]:
            report.add("function-typing", f"{fname} is not a map between the right carriers", function=fname)
            continue
        try:
            report.extend(check_nat_trans(t))
        except MalformedInput as e:
            report.add("function-not-total", f"{fname}: {e.message}", function=fname)
    for rname, args in m.sig.relations.items():
        r = m.relations.get(rname)
        if r is None:
            report.add("missing-relation", f"relation {rname} is not interpreted", relation=rname)
            continue
        if r.ambient != m.arg_presheaf(args):
            report.add("relation-typing", f"{rname} is not a subobject of its argument product", relation=rname)
            continue
        for v in check_sub(r).violations:
            report.add("relation-" + v.code, f"{rname}: {v.message}", relation=rname)
    return report


def interpret_context(m: SigmaStructure, ctx: Context) -> Presheaf:
    """|M|(ctx): the product of the variable carriers"""
    for s in ctx.sorts:
        if not m.sig.has_sort(s):
            raise UnknownSort(f"sort {s!r} is not declared")
    return m.arg_presheaf(ctx.sorts)


def interpret_term(m: SigmaStructure, ctx: Context, t: Term) -> NatTrans:
    """⟦t⟧: |M|(ctx) → M_sort(t)"""
    src = interpret_context(m, ctx)
    fn = _term_evaluator(m, ctx, t)
    return NatTrans(src, m.carrier(t.sort),
                    {b: {v: fn(b, v) for v in src.on_obj[b]} for b in m.base.objects}, str(t))


def _term_evaluator(m: SigmaStructure, ctx: Context, t: Term):
    if isinstance(t, Var):
        i = ctx.index(t.name)
        return lambda b, v: v[i]
    if t.fn not in m.functions:
        raise UnknownIdentifier(f"unknown function symbol {t.fn!r}")
    table = m.functions[t.fn].components
    subs = [_term_evaluator(m, ctx, a) for a in t.args]
    return lambda b, v: table[b][tuple(s(b, v) for s in subs)]


def interpret_ctx_morphism(m: SigmaStructure, g: CtxMorphism) -> NatTrans:
    """|M|(g): |M|(src) → |M|(dst), the tuple of term interpretations"""
    key = ("ctx-morphism", g.src.vars, g.dst.sorts, g.terms)
    if key in m._cache:
        return m._cache[key]
    src = interpret_context(m, g.src)
    dst = interpret_context(m, g.dst)
    fns = [_term_evaluator(m, g.src, t) for t in g.terms]
    t = NatTrans(src, dst, {b: {v: tuple(f(b, v) for f in fns) for v in src.on_obj[b]}
                            for b in m.base.objects}, repr(g))
    m._cache[key] = t
    return t


@dataclass(frozen=True)
class ModelMorphism:
    src: SigmaStructure
    dst: SigmaStructure
    components: Mapping[str, NatTrans]
    name: str = field(default="", compare=False)

    def __call__(self, sort: str, obj: str, x: Any) -> Any:
        return self.components[sort].components[obj][x]


def _require_compatible(a: SigmaStructure, b: SigmaStructure) -> None:
    if a.sig != b.sig:
        raise SignatureMismatch("models have different signatures")
    if a.base is not b.base and a.base != b.base:
        raise BaseMismatch("models live over different bases")


def context_map(mu: ModelMorphism, ctx: Context) -> NatTrans:
    """|μ| at the context ctx"""
    key = ("context-map", id(mu), ctx.sorts)
    cache = mu.src._cache
    if key in cache and cache[key][0] is mu:
        return cache[key][1]
    src = interpret_context(mu.src, ctx)
    dst = interpret_context(mu.dst, ctx)
    comps = [mu.components[s].components for s in ctx.sorts]
    t = NatTrans(src, dst, {b: {v: tuple(c[b][x] for c, x in zip(comps, v)) for v in src.on_obj[b]}
                            for b in mu.src.base.objects})
    cache[key] = (mu, t)
    return t


def check_model_morphism(mu: ModelMorphism) -> ValidationReport:
    _require_compatible(mu.src, mu.dst)
    report = ValidationReport(subject=mu.name or "model morphism")
    M, N = mu.src, mu.dst
    for s in M.sig.all_sorts():
        c = mu.components.get(s)
        if c is None:
            raise MalformedInput(f"model morphism has no component for sort {s}")
        if c.src != M.carriers[s] or c.dst != N.carriers[s]:
            raise MalformedInput(f"component for sort {s} has the wrong endpoints")
        report.extend(check_nat_trans(c))
    if not report.ok:
        return report
    for fname, (args, result) in M.sig.functions.items():
        fm, fn = M.functions[fname].components, N.functions[fname].components
        res = mu.components[result].components
        argc = [mu.components[s].components for s in args]
        for b in M.base.objects:
            for v, y in fm[b].items():
                image = tuple(c[b][x] for c, x in zip(argc, v))
                if res[b][y] != fn[b][image]:
                    report.add("function-square", f"the square of {fname} fails at {v!r}",
                               function=fname, object=b, element=v)
    for rname, args in M.sig.relations.items():
        argc = [mu.components[s].components for s in args]
        target = N.relations[rname].parts
        for b in M.base.objects:
            for v in M.relations[rname].parts[b]:
                image = tuple(c[b][x] for c, x in zip(argc, v))
                if image not in target[b]:
                    report.add("relation-containment", f"{rname}{v!r} is sent outside {rname}",
                               relation=rname, object=b, element=v)
    return report


def _is_model_morphism(components: Mapping[str, NatTrans], M: SigmaStructure, N: SigmaStructure) -> bool:
    for fname, (args, result) in M.sig.functions.items():
        fm, fn = M.functions[fname].components, N.functions[fname].components
        res = components[result].components
        argc = [components[s].components for s in args]
        for b in M.base.objects:
            for v, y in fm[b].items():
                if res[b][y] != fn[b][tuple(c[b][x] for c, x in zip(argc, v))]:
                    return False
    for rname, args in M.sig.relations.items():
        argc = [components[s].components for s in args]
        target = N.relations[rname].parts
        for b in M.base.objects:
            for v in M.relations[rname].parts[b]:
                if tuple(c[b][x] for c, x in zip(argc, v)) not in target[b]:
                    return False
    return True


def identity_model_morphism(m: SigmaStructure) -> ModelMorphism:
    return ModelMorphism(m, m, {s: identity_nat(m.carriers[s]) for s in m.sig.all_sorts()}, "id")


def compose_model_morphisms(nu: ModelMorphism, mu: ModelMorphism) -> ModelMorphism:
    """ν∘μ"""
    return ModelMorphism(mu.src, nu.dst,
                         {s: compose_nat(nu.components[s], mu.components[s]) for s in mu.src.sig.all_sorts()})


def product_models(ms: Sequence[SigmaStructure], sig: Optional[Signature] = None,
                   base: Optional[FinCategory] = None) -> Tuple[SigmaStructure, List[ModelMorphism]]:
    """Componentwise product; the empty family gives the terminal model, flagged in ``notes``"""
    if ms:
        for other in ms[1:]:
            _require_compatible(ms[0], other)
        sig, base = ms[0].sig, ms[0].base
    elif sig is None or base is None:
        raise MalformedInput("the empty product needs a signature and a base")
    if sig.power_sorts:
        raise UnsupportedCarrier("products of structures with power sorts are not supported")
    carriers = {}
    projections = {}
    for s in sig.sorts:
        P, ps = product_presheaf([m.carriers[s] for m in ms], base)
        carriers[s] = P
        projections[s] = ps
    shell = SigmaStructure(sig, base, carriers, {}, {})
    fns = {}
    for fname, (args, result) in sig.functions.items():
        src = shell.arg_presheaf(args)
        tables = [m.functions[fname].components for m in ms]
        fns[fname] = NatTrans(src, carriers[result], {
            b: {v: tuple(tab[b][tuple(a[i] for a in v)] for i, tab in enumerate(tables)) for v in src.on_obj[b]}
            for b in base.objects}, fname)
    rels = {}
    for rname, args in sig.relations.items():
        amb = shell.arg_presheaf(args)
        parts = {}
        for b in base.objects:
            parts[b] = {v for v in amb.on_obj[b]
                        if all(tuple(a[i] for a in v) in m.relations[rname].parts[b] for i, m in enumerate(ms))}
        rels[rname] = SubPresheaf(amb, parts)
    notes: Tuple[str, ...] = ()
    if not ms:
        notes = ("empty family: terminal model",)
        logger.warning("product of an empty family of models; returning the terminal model")
    name = " × ".join(m.name or "?" for m in ms) if ms else "1"
    model = SigmaStructure(sig, base, carriers, fns, rels, name, notes, shell._cache)
    projs = [
        ModelMorphism(model, m, {s: NatTrans(carriers[s], m.carriers[s], projections[s][i].components)
                                 for s in sig.sorts}, f"p{i}")
        for i, m in enumerate(ms)
    ]
    return model, projs


def terminal_model(sig: Signature, base: FinCategory) -> SigmaStructure:
    return product_models([], sig, base)[0]


def enumerate_model_morphisms(a: SigmaStructure, b: SigmaStructure) -> List[ModelMorphism]:
    _require_compatible(a, b)
    sorts = a.sig.all_sorts()
    per_sort = [enumerate_nat_trans(a.carriers[s], b.carriers[s]) for s in sorts]
    space = 1
    for options in per_sort:
        space *= len(options)
    guard(space, "model morphism candidates")
    found = []
    for choice in itertools.product(*per_sort):
        comps = dict(zip(sorts, choice))
        if _is_model_morphism(comps, a, b):
            found.append(ModelMorphism(a, b, comps))
    logger.debug("%d model morphisms out of %d candidates", len(found), space)
    return found


def enumerate_structures(sig: Signature, carriers: Mapping[str, Presheaf], name: str = "") -> List[SigmaStructure]:
    """Every structure with the given set-like carriers"""
    base = same_base(*carriers.values()) if carriers else None
    if base is None or not base.is_set_like():
        raise UnsupportedCarrier("structures are enumerated over set-like carriers only")
    if sig.power_sorts:
        raise UnsupportedCarrier("structures with power sorts are not enumerated")
    obj = base.objects[0]
    shell = SigmaStructure(sig, base, dict(carriers), {}, {})
    fn_options = []
    space = 1
    for fname, (args, result) in sig.functions.items():
        inputs = shell.arg_presheaf(args).elements(obj)
        outputs = carriers[result].elements(obj)
        space *= len(outputs) ** len(inputs)
        fn_options.append([dict(zip(inputs, outs)) for outs in itertools.product(outputs, repeat=len(inputs))])
    rel_options = []
    for rname, args in sig.relations.items():
        tuples = shell.arg_presheaf(args).elements(obj)
        space *= 2 ** len(tuples)
        rel_options.append([set(itertools.compress(tuples, mask))
                            for mask in itertools.product((0, 1), repeat=len(tuples))])
    guard(space, "structures")
    models = []
    for fns in itertools.product(*fn_options):
        for rels in itertools.product(*rel_options):
            models.append(make_structure(
                sig, base, carriers,
                {f: {obj: table} for f, table in zip(sig.functions, fns)},
                {r: {obj: rows} for r, rows in zip(sig.relations, rels)},
                name=f"{name}#{len(models)}" if name else f"#{len(models)}",
            ))
    return models


def submodel_generated(m: SigmaStructure, seeds: Mapping[str, Mapping[str, Iterable[Any]]],
                       relations: Optional[Mapping[str, Mapping[str, Iterable[Tuple]]]] = None,
                       name: str = "") -> Tuple[SigmaStructure, ModelMorphism]:
    """The smallest substructure containing ``seeds`` (sort → object → elements),
    closed under restriction and function application, with the given
    relation tuples (empty by default). Returns it with its inclusion."""
    if m.sig.power_sorts:
        raise UnsupportedCarrier("generated substructures are not supported with power sorts")
    parts = {s: {b: set(seeds.get(s, {}).get(b, ())) for b in m.base.objects} for s in m.sig.sorts}
    changed = True
    while changed:
        changed = False
        for s in m.sig.sorts:
            F = m.carriers[s]
            for f in m.base.morphisms:
                for x in list(parts[s][f.cod]):
                    y = F.on_mor[f.name][x]
                    if y not in parts[s][f.dom]:
                        parts[s][f.dom].add(y)
                        changed = True
        for fname, (args, result) in m.sig.functions.items():
            table = m.functions[fname].components
            for b in m.base.objects:
                for v in itertools.product(*(sort_elems(parts[s][b]) for s in args)):
                    y = table[b][v]
                    if y not in parts[result][b]:
                        parts[result][b].add(y)
                        changed = True
    carriers = {}
    for s in m.sig.sorts:
        F = m.carriers[s]
        carriers[s] = make_presheaf(
            m.base, parts[s],
            {f.name: {x: F.on_mor[f.name][x] for x in parts[s][f.cod]} for f in m.base.morphisms},
            name=f"{F.name}|gen")
    shell = SigmaStructure(m.sig, m.base, carriers, {}, {})
    functions = {}
    for fname, (args, result) in m.sig.functions.items():
        table = m.functions[fname].components
        functions[fname] = {b: {v: table[b][v] for v in shell.arg_presheaf(args).on_obj[b]} for b in m.base.objects}
    sub = make_structure(m.sig, m.base, carriers, functions, relations or {}, name=name or f"{m.name}|gen")
    inclusion = ModelMorphism(sub, m, {
        s: NatTrans(carriers[s], m.carriers[s], {b: {x: x for x in carriers[s].on_obj[b]} for b in m.base.objects})
        for s in m.sig.sorts}, "incl")
    return sub, inclusion
