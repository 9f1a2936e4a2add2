"""
Machine checks for the hypotheses and the conclusion of Łoś's theorem on
finite families of structures
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .cat_core import Presheaf, ValidationReport, set_presheaf
from .errors import ArityMismatch, HypothesesNotMet, MalformedInput, NotASentence, UnsupportedCarrier
from .fol_model import (Context, CtxMorphism, ModelMorphism, SigmaStructure, compose_model_morphisms,
                        context_map, enumerate_model_morphisms, enumerate_structures, interpret_ctx_morphism,
                        submodel_generated, terminal_model)
from .formula_sem import (Basic, BasicAtom, Disj, Formula, Imp, Neg, Pull, Quant, QuantifierDef,
                          QuantifierRegistry, RelationAtom, check_formula, default_registry, interp_basic,
                          interpret_formula, is_sentence, semantics_of, subformulas, validates)
from .settings_manager import guard
from .sub_heyting import (GeneratorSet, SubPresheaf, check_covered, check_supgen_condition, cover_split,
                          enumerate_sub, generators, meet_all, pullback_sub, sub_join, sub_leq, sub_negate,
                          sub_top, validate_generator_set)
from .ultra_filt import Filter, FilteredProductResult, check_filter, filtered_product_models

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"

GeneratorOverrides = Mapping[Tuple[str, ...], GeneratorSet]


@dataclass
class ConditionReport:
    """Verdict of one condition; a fail always carries the counterexample found"""
    condition: str
    verdict: str = PASS
    reason: str = ""
    counterexample: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    children: List["ConditionReport"] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict != FAIL

    def fail(self, reason: str, **counterexample: Any) -> "ConditionReport":
        if self.verdict != FAIL:
            self.verdict = FAIL
            self.reason = reason
            self.counterexample = counterexample
        return self

    def skip(self, reason: str) -> "ConditionReport":
        if self.verdict == PASS:
            self.verdict = SKIPPED
            self.reason = reason
        return self

    def add(self, child: "ConditionReport") -> "ConditionReport":
        self.children.append(child)
        if child.verdict == FAIL:
            self.fail(f"{child.condition} failed", failed=child.condition)
        elif child.verdict == PASS and self.verdict == SKIPPED:
            self.verdict = PASS
            self.reason = ""
        return child

    def find(self, condition: str) -> Optional["ConditionReport"]:
        if self.condition == condition:
            return self
        for c in self.children:
            hit = c.find(condition)
            if hit is not None:
                return hit
        return None


def from_validation(condition: str, report: ValidationReport) -> ConditionReport:
    out = ConditionReport(condition, details={"subject": report.subject})
    if not report.ok:
        first = report.violations[0]
        out.fail(first.message, code=first.code, **first.payload)
        out.details["violations"] = report.codes()
    return out


def context_generators(m: Any, ctx: Context, overrides: Optional[GeneratorOverrides] = None) -> GeneratorSet:
    """l at |M|(ctx), from the overrides when one is given for the context's sorts"""
    if overrides and ctx.sorts in overrides:
        return overrides[ctx.sorts]
    F = semantics_of(m).context(ctx)
    cache = getattr(m, "_cache", None)
    if cache is None:
        return generators(F)
    key = ("generators", ctx.sorts)
    if key not in cache:
        cache[key] = generators(F)
    return cache[key]


# Instances

@dataclass
class LosInstance:
    """An indexed family of structures, a filter on the index set and a formula"""
    family: Mapping[Any, SigmaStructure]
    filter: Filter
    formula: Formula
    registry: QuantifierRegistry = field(default_factory=default_registry)
    generator_sets: GeneratorOverrides = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        report = check_filter(self.filter)
        if not report.ok:
            raise MalformedInput(report.violations[0].message)
        if set(self.family) != self.filter.indices:
            raise MalformedInput("the family must be indexed by the filter's index set")
        models = self.models
        if not models:
            raise MalformedInput("a Łoś instance needs a nonempty family")
        check_formula(self.formula, models[0].sig)
        self._values: Dict[Tuple, Tuple[SubPresheaf, SubPresheaf, List[SubPresheaf]]] = {}

    @property
    def models(self) -> List[SigmaStructure]:
        return [self.family[i] for i in self.filter.index_set]

    @cached_property
    def filtered(self) -> FilteredProductResult:
        return filtered_product_models(self.family, self.filter)

    @property
    def product(self) -> SigmaStructure:
        """∏_I M"""
        return self.filtered.source(self.filter.indices)

    @property
    def projections(self) -> List[ModelMorphism]:
        return self.filtered.source_projections(self.filter.indices)

    @property
    def coprojection(self) -> ModelMorphism:
        """μ_I: ∏_I M → ∏_F M"""
        return self.filtered.coprojection(self.filter.indices)

    def gens(self, ctx: Context) -> GeneratorSet:
        return context_generators(self.product, ctx, self.generator_sets)

    def nodes(self) -> List[Formula]:
        """Distinct subformulas, root first"""
        seen = set()
        out = []
        for psi in subformulas(self.formula):
            key = (psi.context.vars, psi.body)
            if key not in seen:
                seen.add(key)
                out.append(psi)
        return out

    def values(self, psi: Formula) -> Tuple[SubPresheaf, SubPresheaf, List[SubPresheaf]]:
        """⟦ψ⟧ pulled back to ∏_I M along μ_I and along each p_{I,i}, plus ⟦ψ⟧ in ∏_I M"""
        key = (psi.context.vars, psi.body)
        if key not in self._values:
            ctx = psi.context
            in_product = interpret_formula(self.product, psi, self.registry)
            via_filter = pullback_sub(context_map(self.coprojection, ctx),
                                      interpret_formula(self.filtered.product, psi, self.registry))
            via_models = [pullback_sub(context_map(p, ctx), interpret_formula(m, psi, self.registry))
                          for p, m in zip(self.projections, self.models)]
            self._values[key] = (in_product, via_filter, via_models)
        return self._values[key]

    def holding_set(self, delta: SubPresheaf, pulled: Sequence[SubPresheaf]) -> FrozenSet[Any]:
        return frozenset(i for i, a in zip(self.filter.index_set, pulled) if sub_leq(delta, a))


# Individual conditions

def check_projection_condition(inst: LosInstance, ctx: Optional[Context] = None,
                               iotas: Optional[Sequence[SubPresheaf]] = None) -> ConditionReport:
    """↓ι_I = ⋂_i ↓p_{I,i}*(ι_i) for ι_I = ∧_i p_{I,i}*(ι_i)"""
    ctx = ctx if ctx is not None else inst.formula.context
    report = ConditionReport("projection")
    P = inst.product
    ambient = semantics_of(P).context(ctx)
    maps = [context_map(p, ctx) for p in inst.projections]
    gens = inst.gens(ctx)
    if iotas is not None:
        if len(iotas) != len(inst.models):
            raise MalformedInput("one ι per model of the family is needed")
        tuples = [tuple(iotas)]
    else:
        options = []
        for m in inst.models:
            local = semantics_of(m).context(ctx)
            options.append([sub_top(local)] + list(context_generators(m, ctx)))
        count = 1
        for o in options:
            count *= len(o)
        guard(count, "projection condition tuples")
        tuples = list(itertools.product(*options))
    for tup in tuples:
        pulled = [pullback_sub(t, iota) for t, iota in zip(maps, tup)]
        iota_I = meet_all(ambient, pulled)
        for delta in gens:
            if sub_leq(delta, iota_I) != all(sub_leq(delta, a) for a in pulled):
                return report.fail("a generator separates ↓ι_I from the intersection",
                                   delta=delta, iotas=list(tup), iota_I=iota_I)
        if iotas is not None:
            report.details["iota_I"] = iota_I
    report.details["tuples"] = len(tuples)
    return report


def _atom_formula(ctx: Context, bc: BasicAtom) -> Formula:
    return Formula(ctx, Basic(bc))


def finiteness_candidates(m: SigmaStructure, ctx: Context, bc: BasicAtom, delta: SubPresheaf,
                          candidate_bound: int = 1) -> List[Tuple[str, SigmaStructure]]:
    """Witness candidates: the structure generated by δ with bc imposed on δ, the
    terminal structure, then every structure with carriers up to the bound"""
    out: List[Tuple[str, SigmaStructure]] = []
    try:
        seeds: Dict[str, Dict[str, set]] = {}
        for b in m.base.objects:
            for v in delta.parts[b]:
                for s, x in zip(ctx.sorts, v):
                    seeds.setdefault(s, {}).setdefault(b, set()).add(x)
        relations = {}
        if isinstance(bc, RelationAtom):
            target = Context((f"_{i}", s) for i, s in enumerate(m.sig.relation(bc.rel)))
            tup = interpret_ctx_morphism(m, CtxMorphism(ctx, target, bc.args))
            relations[bc.rel] = {b: [tup(b, v) for v in delta.parts[b]] for b in m.base.objects}
        generated, _ = submodel_generated(m, seeds, relations, name="generated")
        out.append(("generated", generated))
    except UnsupportedCarrier:
        logger.debug("no generated witness candidate for structures with power sorts")
    out.append(("terminal", terminal_model(m.sig, m.base)))
    if m.base.is_set_like() and not m.sig.power_sorts:
        for size in range(1, candidate_bound + 1):
            carriers = {s: set_presheaf(range(size), m.base, name=s) for s in m.sig.sorts}
            for k, w in enumerate(enumerate_structures(m.sig, carriers)):
                out.append((f"size{size}#{k}", w))
    return out


def _finiteness_first(w: SigmaStructure, m: SigmaStructure, ctx: Context, bc: BasicAtom, delta: SubPresheaf,
                      targets: Sequence[SigmaStructure]) -> Optional[Dict[str, Any]]:
    """Incoming half: every μ: N → M whose μ*(δ) is a generator; returns a counterexample or None"""
    w_bc = interp_basic(w, ctx, bc)
    for n_index, n in enumerate(targets):
        gens = context_generators(n, ctx)
        into_n = enumerate_model_morphisms(w, n)
        for mu in enumerate_model_morphisms(n, m):
            pulled = pullback_sub(context_map(mu, ctx), delta)
            if pulled not in gens:
                continue
            lhs = sub_leq(pulled, interp_basic(n, ctx, bc))
            rhs = any(w_bc == pullback_sub(context_map(compose_model_morphisms(mu, nu), ctx), delta)
                      for nu in into_n)
            if lhs != rhs:
                return {"half": "incoming", "target": n_index, "pulled": pulled, "validates": lhs, "factors": rhs}
    return None


def _finiteness_second(w: SigmaStructure, m: SigmaStructure, ctx: Context, bc: BasicAtom, delta: SubPresheaf,
                       targets: Sequence[SigmaStructure]) -> Optional[Dict[str, Any]]:
    """Outgoing half: every μ: M → N; δ_N is searched among the generators of N"""
    w_bc = interp_basic(w, ctx, bc)
    for n_index, n in enumerate(targets):
        into_n = enumerate_model_morphisms(w, n)
        n_bc = interp_basic(n, ctx, bc)
        for mu in enumerate_model_morphisms(m, n):
            t = context_map(mu, ctx)
            found = False
            for d in context_generators(n, ctx):
                if not sub_leq(delta, pullback_sub(t, d)):
                    continue
                lhs = sub_leq(d, n_bc)
                rhs = any(sub_leq(w_bc, pullback_sub(context_map(nu, ctx), d)) for nu in into_n)
                if lhs == rhs:
                    found = True
                    break
            if not found:
                return {"half": "outgoing", "target": n_index}
    return None


def check_finiteness(m: SigmaStructure, ctx: Context, bc: BasicAtom, delta: SubPresheaf,
                     targets: Optional[Sequence[SigmaStructure]] = None, candidate_bound: int = 1) -> ConditionReport:
    """Search one witness M_bc satisfying both halves of finiteness at δ.

    Finite presentability is replaced by a bounded-size certificate.
    """
    report = ConditionReport("finiteness")
    targets = list(targets) if targets else [m]
    rejected = []
    for name, w in finiteness_candidates(m, ctx, bc, delta, candidate_bound):
        problem = (_finiteness_first(w, m, ctx, bc, delta, targets)
                   or _finiteness_second(w, m, ctx, bc, delta, targets))
        if problem is None:
            report.details["witness"] = name
            logger.warning("finiteness at %s certified by the bounded witness %r", bc, name)
            return report
        rejected.append({"candidate": name, **problem})
    report.details["rejected"] = [r["candidate"] for r in rejected]
    return report.fail("no candidate witness satisfies both halves", delta=delta,
                       first=rejected[0] if rejected else {})


def _sub_tuples(F: Presheaf, arity: int) -> List[Tuple[SubPresheaf, ...]]:
    subs = enumerate_sub(F)
    guard(len(subs) ** arity, "argument tuples")
    return list(itertools.product(subs, repeat=arity))


def _require_morphism(q: QuantifierDef) -> CtxMorphism:
    if q.morphism is None:
        raise MalformedInput(f"quantifier {q.name} has no context morphism")
    return q.morphism


def _filter_witness(delta: SubPresheaf, args: Sequence[SubPresheaf],
                    values: Mapping[Tuple[SubPresheaf, ...], SubPresheaf]) -> bool:
    return any(v == delta and all(sub_leq(d, a) for d, a in zip(ds, args)) for ds, v in values.items())


def _witness_values(q: QuantifierDef, m: Any, pool: Sequence[SubPresheaf]) -> Dict[Tuple, SubPresheaf]:
    guard(len(pool) ** q.arity, "witness tuples")
    return {ds: q(m, list(ds)) for ds in itertools.product(pool, repeat=q.arity)}


def check_filterable(q: QuantifierDef, m: Any, gens: Optional[GeneratorOverrides] = None,
                     global_mode: bool = False,
                     arg_tuples: Optional[Sequence[Sequence[SubPresheaf]]] = None) -> ConditionReport:
    """δ ⪯ Qf(ι⃗) with δ ∈ l_τ must be δ = Qf(δ⃗) for some δ_j ⪯ ι_j.

    Witnesses δ_j range over generators, or over all subobjects in global mode.
    """
    g = _require_morphism(q)
    report = ConditionReport("globally-filterable" if global_mode else "filterable",
                             details={"quantifier": q.name})
    sem = semantics_of(m)
    src = sem.context(g.src)
    pool = enumerate_sub(src) if global_mode else list(context_generators(m, g.src, gens))
    values = _witness_values(q, m, pool)
    ltau = context_generators(m, g.dst, gens)
    tuples = arg_tuples if arg_tuples is not None else _sub_tuples(src, q.arity)
    for args in tuples:
        value = q(m, list(args))
        for delta in ltau:
            if sub_leq(delta, value) and not _filter_witness(delta, args, values):
                return report.fail(f"no witness for {q.name} below the arguments", delta=delta, args=list(args))
    return report


def check_globally_filterable(q: QuantifierDef, m: Any, gens: Optional[GeneratorOverrides] = None
                              ) -> ConditionReport:
    return check_filterable(q, m, gens, global_mode=True)


def check_distributing(q: QuantifierDef, mu: ModelMorphism,
                       arg_tuples: Optional[Sequence[Sequence[SubPresheaf]]] = None) -> ConditionReport:
    """Qf_M ∘ (|μ|*, …, |μ|*) = |μ|* ∘ Qf_N for μ: M → N"""
    g = _require_morphism(q)
    report = ConditionReport("distributing", details={"quantifier": q.name})
    M, N = mu.src, mu.dst
    at_src, at_dst = context_map(mu, g.src), context_map(mu, g.dst)
    tuples = arg_tuples if arg_tuples is not None else _sub_tuples(semantics_of(N).context(g.src), q.arity)
    for args in tuples:
        lhs = q(M, [pullback_sub(at_src, a) for a in args])
        rhs = pullback_sub(at_dst, q(N, list(args)))
        if lhs != rhs:
            return report.fail(f"{q.name} does not commute with |μ|*", args=list(args), lhs=lhs, rhs=rhs)
    return report


def check_pullback_filterable(f: CtxMorphism, m: Any, gens: Optional[GeneratorOverrides] = None,
                              strict: bool = False,
                              args: Optional[Sequence[SubPresheaf]] = None) -> ConditionReport:
    """δ_σ ⪯ f*(ι) with δ_σ ∈ l_σ is witnessed by δ_τ ∈ l_τ, δ_τ ⪯ ι, and δ_σ ⪯ f*(δ_τ)
    (δ_σ = f*(δ_τ) when strict)"""
    report = ConditionReport("pullback-filterable", details={"strict": strict})
    sem = semantics_of(m)
    t = sem.ctx_morphism(f)
    lsig = context_generators(m, f.src, gens)
    ltau = context_generators(m, f.dst, gens)
    pulled = {d: pullback_sub(t, d) for d in ltau}
    iotas = args if args is not None else enumerate_sub(sem.context(f.dst))
    for iota in iotas:
        back = pullback_sub(t, iota)
        below = [d for d in ltau if sub_leq(d, iota)]
        for delta in lsig:
            if not sub_leq(delta, back):
                continue
            if strict:
                ok = any(pulled[d] == delta for d in below)
            else:
                ok = any(sub_leq(delta, pulled[d]) for d in below)
            if not ok:
                return report.fail("no generator of the codomain witnesses the pullback", delta=delta, iota=iota)
    return report


def _negate_at(args: Sequence[SubPresheaf], signs: FrozenSet[int]) -> List[SubPresheaf]:
    return [sub_negate(a) if k + 1 in signs else a for k, a in enumerate(args)]


def _dual_holds(q: QuantifierDef, qbar: QuantifierDef, signs: FrozenSet[int], m: Any,
                tuples: Sequence[Sequence[SubPresheaf]], gens: Iterable[SubPresheaf]
                ) -> Optional[Dict[str, Any]]:
    gens = list(gens)
    for args in tuples:
        value = q(m, list(args))
        dual = qbar(m, _negate_at(args, signs))
        for iota in gens:
            if (not sub_leq(iota, value)) != sub_leq(iota, dual):
                return {"iota": iota, "args": list(args)}
    return None


def check_dual(q: QuantifierDef, qbar: QuantifierDef, signs: Iterable[int], ms: Sequence[Any],
               corpus: Optional[Sequence[Formula]] = None, registry: Optional[QuantifierRegistry] = None
               ) -> ConditionReport:
    """ι ⋠ ⟦Qf(φ⃗)⟧ ⇔ ι ⪯ ⟦Q̄f(φ̄⃗)⟧ for every generator ι, with φ̄ negated at ``signs``.

    Arguments range over all subobjects, or over the interpretations of
    ``corpus`` when one is given.
    """
    signs = frozenset(signs)
    if q.arity != qbar.arity:
        raise ArityMismatch(f"{q.name} and {qbar.name} have different arities")
    g = _require_morphism(q)
    if not signs <= set(range(1, q.arity + 1)):
        raise MalformedInput("sign positions must be argument positions")
    report = ConditionReport("dual", details={"quantifier": q.name, "dual": qbar.name, "signs": sorted(signs)})
    all_signs = [frozenset(c) for r in range(q.arity + 1) for c in itertools.combinations(range(1, q.arity + 1), r)]
    working: List[List[FrozenSet[int]]] = []
    first = None
    for k, m in enumerate(ms):
        src = semantics_of(m).context(g.src)
        if corpus is None:
            tuples = _sub_tuples(src, q.arity)
        else:
            values = [interpret_formula(m, phi, registry) for phi in corpus]
            guard(len(values) ** q.arity, "corpus argument tuples")
            tuples = list(itertools.product(values, repeat=q.arity))
        gens = context_generators(m, g.dst)
        problem = _dual_holds(q, qbar, signs, m, tuples, gens)
        if problem is not None and first is None:
            first = {"model": k, **problem}
        working.append([s for s in all_signs if _dual_holds(q, qbar, s, m, tuples, gens) is None])
    if first is None:
        return report
    uniform = set(all_signs)
    for w in working:
        uniform &= set(w)
    report.details["working_signs"] = [[sorted(s) for s in w] for w in working]
    if uniform:
        report.details["note"] = "another uniform sign set works"
    elif all(working):
        report.details["note"] = "only a model-varying sign set would succeed"
    return report.fail(f"{qbar.name} is not dual to {q.name} at the given signs", **first)


def check_supgeneration_system(inst: LosInstance) -> ConditionReport:
    """Generator sets of every context of the formula validated and covered in
    ∏_I M, together with generator transport along the pullbacks used"""
    report = ConditionReport("supgeneration-system")
    P = inst.product
    contexts = []
    for psi in inst.nodes():
        if psi.context.sorts not in [c.sorts for c in contexts]:
            contexts.append(psi.context)
    for ctx in contexts:
        gens = inst.gens(ctx)
        report.add(from_validation(f"generators{list(ctx.sorts)}", validate_generator_set(gens)))
        report.add(from_validation(f"covered{list(ctx.sorts)}", check_covered(gens.ambient)))
    for psi in inst.nodes():
        if isinstance(psi.body, Pull):
            f = psi.body.morphism
            t = interpret_ctx_morphism(P, f)
            report.add(from_validation(f"transport{f!r}",
                                       check_supgen_condition(t, inst.gens(f.src), inst.gens(f.dst))))
    return report


# Proof steps

def check_basic_step(inst: LosInstance) -> ConditionReport:
    """The biconditional at basic atoms, over any filter"""
    report = ConditionReport("basic-step")
    found = False
    for psi in inst.nodes():
        if not isinstance(psi.body, Basic):
            continue
        found = True
        _, via_filter, via_models = inst.values(psi)
        for delta in inst.gens(psi.context):
            lhs = sub_leq(delta, via_filter)
            holding = inst.holding_set(delta, via_models)
            if lhs != inst.filter.contains(holding):
                return report.fail("basic atom breaks the biconditional", atom=psi.body.atom, delta=delta,
                                   lhs=lhs, holding=holding)
    return report if found else report.skip("no basic atoms")


def _split_ok(delta: SubPresheaf, a: SubPresheaf, b: SubPresheaf, gens: GeneratorSet) -> bool:
    if not sub_leq(delta, sub_join(a, b)):
        return True
    d1, d2 = cover_split(delta, a, b)
    parts_ok = all(d.is_bottom() or d in gens for d in (d1, d2))
    return parts_ok and sub_join(d1, d2) == delta


def check_cover_step(inst: LosInstance) -> ConditionReport:
    """Generators below a disjunction split into generator parts below the disjuncts"""
    report = ConditionReport("cover-step")
    found = False
    for psi in inst.nodes():
        if not isinstance(psi.body, Disj):
            continue
        found = True
        left = inst.values(Formula(psi.context, psi.body.left))
        right = inst.values(Formula(psi.context, psi.body.right))
        gens = inst.gens(psi.context)
        for delta in gens:
            pairs = [(left[1], right[1])] + list(zip(left[2], right[2]))
            for k, (a, b) in enumerate(pairs):
                if not _split_ok(delta, a, b, gens):
                    return report.fail("a generator below the disjunction does not split", delta=delta,
                                       side="filtered" if k == 0 else f"model {k - 1}")
    return report if found else report.skip("no disjunctions")


def check_implication_step(inst: LosInstance) -> ConditionReport:
    """The complement law for the antecedents of ⇒ and ¬ nodes"""
    report = ConditionReport("implication-step")
    nodes = [psi for psi in inst.nodes() if isinstance(psi.body, (Imp, Neg))]
    if not nodes:
        return report.skip("no implications")
    if not inst.filter.ultra:
        return report.skip("the complement law needs an ultrafilter")
    I = inst.filter.indices
    for psi in nodes:
        antecedent = psi.body.left if isinstance(psi.body, Imp) else psi.body.child
        _, _, via_models = inst.values(Formula(psi.context, antecedent))
        for delta in inst.gens(psi.context):
            holding = inst.holding_set(delta, via_models)
            if inst.filter.contains(holding) == inst.filter.contains(I - holding):
                return report.fail("neither the holding set nor its complement is in the filter",
                                   delta=delta, holding=holding)
    return report


def _quantifier_node_report(inst: LosInstance, psi: Formula) -> ConditionReport:
    node = psi.body
    g = node.morphism
    q = inst.registry.resolve(node.name, g, len(node.children))
    report = ConditionReport(f"quantifier:{node.name}", details={"morphism": repr(g)})
    P, FP = inst.product, inst.filtered.product
    args_P = [interpret_formula(P, Formula(g.src, c), inst.registry) for c in node.children]

    filterable = check_filterable(q, P, inst.generator_sets, arg_tuples=[args_P])
    if not filterable.ok:
        dual = inst.registry.dual_of(node.name)
        if dual is not None:
            dual_name, signs = dual
            qbar = inst.registry.resolve(dual_name, g, len(node.children))
            via = ConditionReport("filterable-via-dual", details={"dual": dual_name, "signs": sorted(signs)})
            problem = _dual_holds(q, qbar, signs, P, [args_P], context_generators(P, g.dst, inst.generator_sets))
            if problem is not None:
                via.fail("duality fails at the arguments", **problem)
            else:
                via.add(check_filterable(qbar, P, inst.generator_sets, arg_tuples=[_negate_at(args_P, signs)]))
            filterable = via if via.ok else filterable
    report.add(filterable)

    args_F = [interpret_formula(FP, Formula(g.src, c), inst.registry) for c in node.children]
    report.add(check_distributing(q, inst.coprojection, arg_tuples=[args_F]))
    for p, m in zip(inst.projections, inst.models):
        args_m = [interpret_formula(m, Formula(g.src, c), inst.registry) for c in node.children]
        report.add(check_distributing(q, p, arg_tuples=[args_m]))
    return report


def check_quantifier_step(inst: LosInstance) -> ConditionReport:
    """Each quantifier node filterable in ∏_I M (directly or through its dual)
    and distributing over μ_I and every p_{I,i}, at the arguments it receives"""
    report = ConditionReport("quantifier-step")
    nodes = [psi for psi in inst.nodes() if isinstance(psi.body, Quant)]
    if not nodes:
        return report.skip("no quantifiers")
    for psi in nodes:
        report.add(_quantifier_node_report(inst, psi))
    return report


def check_pullback_step(inst: LosInstance) -> ConditionReport:
    report = ConditionReport("pullback-step")
    nodes = [psi for psi in inst.nodes() if isinstance(psi.body, Pull)]
    if not nodes:
        return report.skip("no pullbacks")
    for psi in nodes:
        f = psi.body.morphism
        inner = interpret_formula(inst.product, Formula(f.dst, psi.body.child), inst.registry)
        report.add(check_pullback_filterable(f, inst.product, inst.generator_sets, args=[inner]))
    return report


def check_instance_hypotheses(inst: LosInstance, with_finiteness: bool = False) -> ConditionReport:
    report = ConditionReport("hypotheses")
    ultra = ConditionReport("ultrafilter")
    if not inst.filter.ultra:
        ultra.fail("the filter is not an ultrafilter", members=inst.filter.sorted_members())
    report.add(ultra)
    report.add(check_quantifier_step(inst))
    report.add(check_pullback_step(inst))
    if with_finiteness:
        report.add(check_instance_finiteness(inst))
    return report


def check_instance_finiteness(inst: LosInstance) -> ConditionReport:
    report = ConditionReport("finiteness-all")
    atoms = [psi for psi in inst.nodes() if isinstance(psi.body, Basic)]
    if not atoms:
        return report.skip("no basic atoms")
    for psi in atoms:
        for k, m in enumerate(inst.models):
            for delta in context_generators(m, psi.context):
                child = check_finiteness(m, psi.context, psi.body.atom, delta, targets=inst.models)
                child.details["model"] = k
                report.add(child)
                if not child.ok:
                    return report
    return report


CONDITIONS = ("projection", "finiteness", "filterable", "distributing", "dual")


def _quantifier_defs(inst: LosInstance) -> List[Tuple[Formula, QuantifierDef]]:
    out = []
    for psi in inst.nodes():
        if isinstance(psi.body, Quant):
            out.append((psi, inst.registry.resolve(psi.body.name, psi.body.morphism, len(psi.body.children))))
    return out


def check_conditions(inst: LosInstance, only: Optional[Iterable[str]] = None) -> ConditionReport:
    """Standalone run of the semantical conditions, exhaustive over all arguments"""
    selected = list(only) if only else list(CONDITIONS)
    unknown = [c for c in selected if c not in CONDITIONS]
    if unknown:
        raise MalformedInput(f"unknown conditions: {', '.join(unknown)}")
    report = ConditionReport("conditions")
    quantified = _quantifier_defs(inst)
    P = inst.product
    for name in CONDITIONS:
        if name not in selected:
            continue
        if name == "projection":
            report.add(check_projection_condition(inst))
        elif name == "finiteness":
            report.add(check_instance_finiteness(inst))
        elif name == "filterable":
            group = ConditionReport("filterable-all")
            for _, q in quantified:
                group.add(check_filterable(q, P, inst.generator_sets))
            report.add(group if quantified else group.skip("no quantifiers"))
        elif name == "distributing":
            group = ConditionReport("distributing-all")
            for _, q in quantified:
                group.add(check_distributing(q, inst.coprojection))
                for p in inst.projections:
                    group.add(check_distributing(q, p))
            report.add(group if quantified else group.skip("no quantifiers"))
        else:
            group = ConditionReport("dual-all")
            for psi, q in quantified:
                dual = inst.registry.dual_of(q.name)
                if dual is None:
                    continue
                dual_name, signs = dual
                qbar = inst.registry.resolve(dual_name, psi.body.morphism, q.arity)
                group.add(check_dual(q, qbar, signs, [P] + inst.models))
            report.add(group if group.children else group.skip("no quantifier with a registered dual"))
    return report


# The theorem

def los_verify(inst: LosInstance, force: bool = False, with_finiteness: bool = False) -> ConditionReport:
    """δ_I ⪯ μ_I*(⟦∏_F M⟧φ) iff {i | δ_I ⪯ p_{I,i}*(⟦M_i⟧φ)} ∈ F for every generator δ_I"""
    hypotheses = check_instance_hypotheses(inst, with_finiteness)
    report = ConditionReport("los", details={"hypotheses": hypotheses})
    if not hypotheses.ok:
        if not force:
            raise HypothesesNotMet(f"hypotheses of the instance fail: {hypotheses.reason}",
                                   failed=hypotheses.counterexample.get("failed"))
        report.details["forced"] = True
        logger.warning("running Łoś verification on %s despite failed hypotheses", inst.name or "instance")
    phi = inst.formula
    _, via_filter, via_models = inst.values(phi)
    rows = []
    for delta in inst.gens(phi.context):
        lhs = sub_leq(delta, via_filter)
        holding = inst.holding_set(delta, via_models)
        rhs = inst.filter.contains(holding)
        rows.append({"delta": delta, "lhs": lhs, "rhs": rhs, "holding": holding})
        if lhs != rhs:
            report.fail("the biconditional fails", delta=delta, lhs=lhs, rhs=rhs,
                        membership={i: i in holding for i in inst.filter.index_set})
    report.details["table"] = rows
    return report


def los_sentence_corollary(inst: LosInstance) -> ConditionReport:
    """∏_F M ⊨ φ iff {i | M_i ⊨ φ} ∈ F"""
    phi = inst.formula
    ms = inst.models + [inst.filtered.product]
    if not is_sentence(ms, phi, inst.registry):
        raise NotASentence("the formula is neither valid nor refuted in some structure")
    report = ConditionReport("sentence-corollary")
    lhs = validates(inst.filtered.product, phi, inst.registry)
    holding = frozenset(i for i, m in zip(inst.filter.index_set, inst.models) if validates(m, phi, inst.registry))
    rhs = inst.filter.contains(holding)
    report.details.update({"lhs": lhs, "rhs": rhs, "holding": holding})
    if lhs != rhs:
        report.fail("the sentence biconditional fails", lhs=lhs, rhs=rhs, holding=holding)
    return report


def proof_steps(inst: LosInstance) -> ConditionReport:
    report = ConditionReport("proof-steps")
    for check in (check_basic_step, check_cover_step, check_implication_step, check_quantifier_step,
                  check_pullback_step):
        report.add(check(inst))
    return report
