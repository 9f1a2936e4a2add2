"""
Seeded random instances and the small demo structures the commands and
tests are built around
"""
import itertools
import logging
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .cat_core import (FinCategory, NatTrans, Presheaf, enumerate_nat_trans, graph_presheaf,
                       make_presheaf, set_presheaf, sort_elems, terminal_category)
from .errors import MalformedInput, UnsupportedCarrier
from .fol_model import (App, Context, CtxMorphism, ModelMorphism, SigmaStructure, Signature, Term, Var,
                        make_structure, prefix_projection)
from .formula_sem import (Basic, Bot, Conj, Disj, Equation, Formula, Imp, Neg, Node, Pull, Quant, RelationAtom,
                          Top)
from .oracles import representable
from .sub_heyting import SubPresheaf, join_all, principal_sub, sub_bottom
from .ultra_filt import Filter, make_principal

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240607


def rng_for(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def _pick(rng: np.random.Generator, xs: Sequence[Any]) -> Any:
    return xs[int(rng.integers(len(xs)))]


# Demo structures

def bit_signature() -> Signature:
    """One sort s, a constant c, the unary function f and a unary relation r"""
    return Signature(("s",), {"c": ((), "s"), "f": (("s",), "s")}, {"r": ("s",)})


def relational_signature() -> Signature:
    """One sort s with a unary relation r and a binary relation e"""
    return Signature(("s",), {}, {"r": ("s",), "e": ("s", "s")})


def unary_signature() -> Signature:
    return Signature(("s",), {}, {"r": ("s",)})


def bit_model(r: Sequence[int] = (0,), c: int = 0, size: int = 2, name: str = "bit",
              base: Optional[FinCategory] = None) -> SigmaStructure:
    """Carrier {0, …, size-1} with f the successor modulo size (the bit flip for size 2)"""
    base = base or terminal_category()
    obj = base.objects[0]
    carrier = set_presheaf(range(size), base, name="s")
    return make_structure(
        bit_signature(), base, {"s": carrier},
        {"c": {obj: {(): c}}, "f": {obj: {(x,): (x + 1) % size for x in range(size)}}},
        {"r": {obj: [(x,) for x in r]}},
        name=name,
    )


def set_model(elements: Sequence[Any], r: Sequence[Any] = (), name: str = "") -> SigmaStructure:
    """A plain set with a unary relation"""
    base = terminal_category()
    obj = base.objects[0]
    return make_structure(unary_signature(), base, {"s": set_presheaf(elements, base, name="s")},
                          relations={"r": {obj: [(x,) for x in r]}}, name=name)


def single_edge_graph(name: str = "edge") -> Presheaf:
    """v0 --e--> v1"""
    return graph_presheaf(["v0", "v1"], {"e": ("v0", "v1")}, name=name)


def graph_edge_model(graph: Optional[Presheaf] = None, r_vertices: Sequence[Any] = ("v0",),
                     r_edges: Sequence[Any] = (), name: str = "edge") -> SigmaStructure:
    """A graph as the carrier of s with r the subgraph spanned by the given vertices and edges"""
    graph = graph or single_edge_graph()
    return make_structure(unary_signature(), graph.base, {"s": graph},
                          relations={"r": {"V": [(v,) for v in r_vertices], "E": [(e,) for e in r_edges]}},
                          name=name)


def two_point_fiber() -> Tuple[SigmaStructure, CtxMorphism]:
    """{0, 1} with the projection (x, y) → (x), whose fibres have two points"""
    src = Context([("x", "s"), ("y", "s")])
    return set_model([0, 1], name="two"), prefix_projection(src, 1)


def non_epi_inclusion() -> ModelMorphism:
    """{0} ⊂ {0, 1} as a morphism of plain sets"""
    small, big = set_model([0], name="one"), set_model([0, 1], name="two")
    obj = small.base.objects[0]
    comp = NatTrans(small.carriers["s"], big.carriers["s"], {obj: {0: 0}}, "incl")
    return ModelMorphism(small, big, {"s": comp}, "incl")


# Random presheaves and subobjects

def coproduct_presheaf(parts: Sequence[Presheaf], name: str = "") -> Presheaf:
    """Disjoint union; elements are tagged (k, x)"""
    base = parts[0].base
    on_obj = {b: [(k, x) for k, P in enumerate(parts) for x in P.elements(b)] for b in base.objects}
    on_mor = {m.name: {(k, x): (k, P.on_mor[m.name][x]) for k, P in enumerate(parts) for x in P.elements(m.cod)}
              for m in base.morphisms}
    return make_presheaf(base, on_obj, on_mor, name=name)


def random_graph(rng: np.random.Generator, max_size: int = 3, name: str = "") -> Presheaf:
    """A directed multigraph with at least one vertex and one edge"""
    vertices = [f"v{i}" for i in range(int(rng.integers(1, max_size + 1)))]
    edges = {f"e{i}": (_pick(rng, vertices), _pick(rng, vertices)) for i in range(int(rng.integers(1, max_size + 1)))}
    return graph_presheaf(vertices, edges, name=name)


def random_presheaf(rng: np.random.Generator, base: FinCategory, max_size: int = 3, name: str = "") -> Presheaf:
    """A presheaf, nonempty at every object.

    Sets and graphs are drawn directly; any other base gets a coproduct of
    representables together with one terminal component.
    """
    if base.is_set_like():
        return set_presheaf(range(int(rng.integers(1, max_size + 1))), base, name=name)
    if base.name == "graph":
        return random_graph(rng, max_size, name)
    terminal = make_presheaf(base, {b: [0] for b in base.objects},
                             {m.name: {0: 0} for m in base.morphisms}, name="1")
    parts = [terminal] + [representable(base, _pick(rng, base.objects))
                          for _ in range(int(rng.integers(0, max_size)))]
    return coproduct_presheaf(parts, name=name)


def random_sub(rng: np.random.Generator, F: Presheaf) -> SubPresheaf:
    """Join of the subobjects generated by a random set of elements"""
    elems = F.all_elements()
    if not elems:
        return sub_bottom(F)
    keep = rng.random(len(elems)) < 0.4
    return join_all(F, [principal_sub(F, b, x) for (b, x), k in zip(elems, keep) if k])


def random_nat_trans(rng: np.random.Generator, F: Presheaf, G: Presheaf) -> Optional[NatTrans]:
    options = enumerate_nat_trans(F, G)
    return _pick(rng, options) if options else None


# Random structures

def random_structure(rng: np.random.Generator, sig: Signature, base: FinCategory, max_size: int = 3,
                     name: str = "", attempts: int = 20) -> SigmaStructure:
    """Carriers, operations and relations drawn at random; operations are
    picked among the natural transformations of their profile"""
    if sig.power_sorts:
        raise UnsupportedCarrier("random structures are drawn without power sorts")
    for _ in range(attempts):
        carriers = {s: random_presheaf(rng, base, max_size, name=s) for s in sig.sorts}
        shell = SigmaStructure(sig, base, carriers, {}, {})
        functions: Dict[str, Dict[str, Dict[Tuple, Any]]] = {}
        for fname, (args, result) in sig.functions.items():
            t = random_nat_trans(rng, shell.arg_presheaf(args), carriers[result])
            if t is None:
                break
            functions[fname] = {b: dict(t.components[b]) for b in base.objects}
        else:
            relations = {}
            for rname, args in sig.relations.items():
                a = random_sub(rng, shell.arg_presheaf(args))
                relations[rname] = {b: sort_elems(a.parts[b]) for b in base.objects}
            return make_structure(sig, base, carriers, functions, relations, name=name)
    raise MalformedInput(f"no structure found after {attempts} attempts")


def random_family(rng: np.random.Generator, sig: Signature, base: FinCategory, size: int,
                  max_size: int = 3) -> Dict[int, SigmaStructure]:
    return {i: random_structure(rng, sig, base, max_size, name=f"M{i}") for i in range(size)}


def ultrafilters(I: Sequence[Any]) -> List[Filter]:
    return [make_principal(I, [i]) for i in I]


def principal_filters(I: Sequence[Any]) -> List[Filter]:
    """Every proper principal filter on ``I``, ultrafilters first"""
    I = list(I)
    return [make_principal(I, J) for r in range(1, len(I) + 1) for J in itertools.combinations(I, r)]


def random_filter(rng: np.random.Generator, I: Sequence[Any]) -> Filter:
    """A proper filter, principal at a random nonempty subset"""
    I = list(I)
    while True:
        J = [i for i, keep in zip(I, rng.random(len(I)) < 0.5) if keep]
        if J:
            return make_principal(I, J)


# Random terms and formulas

def random_term(rng: np.random.Generator, sig: Signature, ctx: Context, sort: str, depth: int = 1) -> Optional[Term]:
    """A term of ``sort`` over ``ctx``; None when the signature has none"""
    variables = [Var(n, s) for n, s in ctx.vars if s == sort]
    makers = [(fn, args) for fn, (args, result) in sorted(sig.functions.items()) if result == sort]
    if variables and (depth == 0 or not makers or rng.random() < 0.6):
        return _pick(rng, variables)
    rng.shuffle(makers)
    for fn, args in makers:
        if depth == 0 and args:
            continue
        subterms = [random_term(rng, sig, ctx, s, depth - 1) for s in args]
        if all(t is not None for t in subterms):
            return App(fn, tuple(subterms), sort)
    return _pick(rng, variables) if variables else None


def _random_atom(rng: np.random.Generator, sig: Signature, ctx: Context) -> Node:
    options = []
    for rname, sorts in sorted(sig.relations.items()):
        args = [random_term(rng, sig, ctx, s) for s in sorts]
        if all(a is not None for a in args):
            options.append(Basic(RelationAtom(rname, tuple(args))))
    for s in sig.sorts:
        lhs, rhs = random_term(rng, sig, ctx, s), random_term(rng, sig, ctx, s)
        if lhs is not None and rhs is not None:
            options.append(Basic(Equation(lhs, rhs)))
    if not options:
        return Top() if rng.random() < 0.5 else Bot()
    return _pick(rng, options)


def _fresh_name(ctx: Context) -> str:
    k = len(ctx)
    while f"v{k}" in ctx.names:
        k += 1
    return f"v{k}"


def random_ctx_morphism(rng: np.random.Generator, sig: Signature, src: Context,
                        max_vars: int = 2) -> Optional[CtxMorphism]:
    """A tuple of random terms over ``src`` into a context of fresh variables"""
    sorts = [_pick(rng, list(sig.sorts)) for _ in range(int(rng.integers(1, max_vars + 1)))]
    terms = [random_term(rng, sig, src, s) for s in sorts]
    if any(t is None for t in terms):
        return None
    dst = Context((f"w{k}", s) for k, s in enumerate(sorts))
    return CtxMorphism(src, dst, tuple(terms))


def random_node(rng: np.random.Generator, sig: Signature, ctx: Context, depth: int,
                quantifiers: bool = True, pullbacks: bool = True) -> Node:
    if depth <= 0:
        roll = rng.random()
        if roll < 0.1:
            return Top()
        if roll < 0.2:
            return Bot()
        return _random_atom(rng, sig, ctx)
    kinds = ["atom", "conj", "disj", "imp", "neg"]
    if quantifiers:
        kinds += ["forall", "exists"]
    if pullbacks:
        kinds.append("pull")
    kind = _pick(rng, kinds)
    sub = int(rng.integers(0, depth))

    def child(c: Context = ctx, d: int = sub) -> Node:
        return random_node(rng, sig, c, d, quantifiers, pullbacks)

    if kind == "atom":
        return _random_atom(rng, sig, ctx)
    if kind == "conj":
        return Conj(child(), child())
    if kind == "disj":
        return Disj(child(), child())
    if kind == "imp":
        return Imp(child(), child())
    if kind == "neg":
        return Neg(child())
    if kind in ("forall", "exists"):
        inner = ctx.extend([(_fresh_name(ctx), _pick(rng, list(sig.sorts)))])
        return Quant(kind, prefix_projection(inner, len(ctx)), (child(inner),))
    g = random_ctx_morphism(rng, sig, ctx)
    if g is None:
        return child()
    return Pull(g, child(g.dst))


def random_formula(rng: np.random.Generator, sig: Signature, ctx: Optional[Context] = None, max_depth: int = 3,
                   quantifiers: bool = True, pullbacks: bool = True) -> Formula:
    """A formula of depth at most ``max_depth``"""
    ctx = ctx if ctx is not None else Context()
    d = int(rng.integers(0, max_depth + 1))
    return Formula(ctx, random_node(rng, sig, ctx, d, quantifiers, pullbacks))


def random_context(rng: np.random.Generator, sig: Signature, max_vars: int = 2) -> Context:
    return Context((f"x{k}", _pick(rng, list(sig.sorts))) for k in range(int(rng.integers(0, max_vars + 1))))


# Corpora

def los_corpus(seed: Optional[int] = None, count: int = 20, base: Optional[FinCategory] = None,
               sig: Optional[Signature] = None, index_sizes: Sequence[int] = (2, 3),
               max_size: int = 2, ultra_only: bool = True
               ) -> Iterator[Tuple[Mapping[int, SigmaStructure], Filter, Formula]]:
    """Families over |I| ∈ ``index_sizes``, each paired with every ultrafilter (every proper
    principal filter unless ``ultra_only``) and a random formula"""
    rng = rng_for(seed)
    base = base or terminal_category()
    sig = sig or bit_signature()
    produced = 0
    while produced < count:
        n = _pick(rng, list(index_sizes))
        family = random_family(rng, sig, base, n, max_size)
        ctx = random_context(rng, sig, 1)
        filters = ultrafilters if ultra_only else principal_filters
        for F in filters(list(range(n))):
            if produced >= count:
                break
            yield family, F, random_formula(rng, sig, ctx)
            produced += 1
    logger.debug("generated %d Łoś instances", produced)


def substitution_corpus(seed: Optional[int] = None, count: int = 50, base: Optional[FinCategory] = None,
                        sig: Optional[Signature] = None, max_size: int = 2
                        ) -> Iterator[Tuple[SigmaStructure, CtxMorphism, Formula]]:
    """(model, context morphism g: σ→τ, formula over τ) triples"""
    rng = rng_for(seed)
    base = base or terminal_category()
    sig = sig or bit_signature()
    produced = 0
    while produced < count:
        m = random_structure(rng, sig, base, max_size, name=f"S{produced}")
        src = random_context(rng, sig, 2)
        g = random_ctx_morphism(rng, sig, src)
        if g is None:
            continue
        yield m, g, random_formula(rng, sig, g.dst)
        produced += 1

