"""
Filters on finite index sets and filtered products of presheaves and structures
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .cat_core import (NatTrans, Presheaf, ValidationReport, compose_nat, elem_key, enumerate_nat_trans, is_epi,
                       is_iso, make_presheaf, product_presheaf, same_base, set_presheaf, sort_elems)
from .errors import EmptyCarrier, ImproperFilter, MalformedInput, UnsupportedCarrier
from .fol_model import (ModelMorphism, SigmaStructure, _require_compatible, compose_model_morphisms,
                        enumerate_model_morphisms, make_structure, product_models, terminal_model)
from .settings_manager import guard
from .sub_heyting import omega_presheaf

logger = logging.getLogger(__name__)

Index = Any
IndexSet = FrozenSet[Index]

MAX_FILTER_INDEX = 16


def _powerset(I: Sequence[Index]) -> List[IndexSet]:
    if len(I) > MAX_FILTER_INDEX:
        raise MalformedInput(f"index sets are limited to {MAX_FILTER_INDEX} elements")
    guard(2 ** len(I), "subsets of the index set")
    return [frozenset(c) for r in range(len(I) + 1) for c in itertools.combinations(I, r)]


def _set_key(a: IndexSet):
    return (len(a), tuple(sorted(elem_key(i) for i in a)))


@dataclass(frozen=True)
class Filter:
    """A filter on a finite index set, stored as its explicit family of members"""
    index_set: Tuple[Index, ...]
    members: FrozenSet[IndexSet]

    @cached_property
    def indices(self) -> IndexSet:
        return frozenset(self.index_set)

    @property
    def proper(self) -> bool:
        return frozenset() not in self.members

    @property
    def ultra(self) -> bool:
        return is_ultrafilter(self)

    @cached_property
    def core(self) -> IndexSet:
        return filter_core(self)

    def contains(self, a: Iterable[Index]) -> bool:
        return frozenset(a) in self.members

    def sorted_members(self) -> List[IndexSet]:
        return sorted(self.members, key=_set_key)

    def to_dict(self) -> Dict[str, Any]:
        return {"index_set": list(self.index_set),
                "members": [sort_elems(m) for m in self.sorted_members()],
                "proper": self.proper, "ultra": self.ultra}


@dataclass(frozen=True)
class FilterDescription:
    """A filter known only by name; Fréchet's filter lives here"""
    kind: str
    index_set: Tuple[Index, ...]


def _index_tuple(I: Iterable[Index]) -> Tuple[Index, ...]:
    return tuple(sort_elems(set(I)))


def make_principal(I: Iterable[Index], J: Iterable[Index]) -> Filter:
    """{A ⊆ I | J ⊆ A}; an empty J gives the improper filter"""
    index = _index_tuple(I)
    core = frozenset(J)
    if not core <= set(index):
        raise MalformedInput("the principal set must be a subset of the index set")
    members = frozenset(a for a in _powerset(index) if core <= a)
    if not core:
        logger.debug("principal filter at the empty set is improper")
    return Filter(index, members)


def trivial_filter(I: Iterable[Index]) -> Filter:
    index = _index_tuple(I)
    return make_principal(index, index)


def generate_filter(I: Iterable[Index], seeds: Iterable[Iterable[Index]]) -> Filter:
    """Superset closure of the finite intersections of ``seeds``"""
    index = _index_tuple(I)
    core = frozenset(index)
    for s in seeds:
        s = frozenset(s)
        if not s <= frozenset(index):
            raise MalformedInput("seed sets must be subsets of the index set")
        core &= s
    return make_principal(index, core)


def make_filter(I: Iterable[Index], members: Iterable[Iterable[Index]]) -> Filter:
    F = Filter(_index_tuple(I), frozenset(frozenset(m) for m in members))
    report = check_filter(F)
    if not report.ok:
        raise MalformedInput(report.violations[0].message, violations=report.codes())
    return F


def check_filter(F: Filter) -> ValidationReport:
    report = ValidationReport(subject="filter")
    I = F.indices
    if I not in F.members:
        report.add("missing-index-set", "the index set is not a member")
    for a in F.sorted_members():
        if not a <= I:
            report.add("not-subset", f"{sort_elems(a)} is not a subset of the index set", member=sort_elems(a))
    if not report.ok:
        return report
    for a, b in itertools.combinations(F.sorted_members(), 2):
        if a & b not in F.members:
            report.add("not-intersection-closed", f"{sort_elems(a)} ∩ {sort_elems(b)} is missing",
                       left=sort_elems(a), right=sort_elems(b))
    for a in F.sorted_members():
        for i in sort_elems(I - a):
            if a | {i} not in F.members:
                report.add("not-upward-closed", f"{sort_elems(a | {i})} is missing", member=sort_elems(a))
    return report


def is_ultrafilter(F: Filter) -> bool:
    I = F.indices
    return F.proper and all((a in F.members) != ((I - a) in F.members) for a in _powerset(F.index_set))


def filter_core(F: Filter) -> IndexSet:
    """∩F; a filter on a finite set is principal at its core"""
    core = F.indices
    for a in F.members:
        core &= a
    return core


def extend_to_ultrafilter(F: Filter) -> Filter:
    """The principal ultrafilter at the least index of the core"""
    if not F.proper:
        raise ImproperFilter("the improper filter has no ultrafilter above it")
    i0 = sort_elems(F.core)[0]
    return make_principal(F.index_set, {i0})


def frechet_description(I: Iterable[Index]) -> FilterDescription:
    return FilterDescription("frechet", _index_tuple(I))


def materialize(d: FilterDescription) -> Filter:
    if d.kind == "frechet":
        # cofinite subsets of a finite set include ∅
        raise ImproperFilter("Fréchet's filter on a finite index set is improper", index_set=list(d.index_set))
    raise MalformedInput(f"unknown filter description {d.kind!r}")


def reduce_filter(F: Filter, J: Iterable[Index]) -> Filter:
    """{J ∩ K | K ∈ F} on J"""
    J = frozenset(J)
    if not J <= F.indices:
        raise MalformedInput("the reduction set must be a subset of the index set")
    return Filter(_index_tuple(J), frozenset(J & k for k in F.members))


def agreement_set(a: Sequence[Any], b: Sequence[Any], index_set: Sequence[Index]) -> IndexSet:
    return frozenset(i for i, x, y in zip(index_set, a, b) if x == y)


def equivalent(F: Filter, a: Sequence[Any], b: Sequence[Any]) -> bool:
    """(a_i) ~_F (b_i) iff {i | a_i = b_i} ∈ F"""
    if len(a) != len(F.index_set) or len(b) != len(F.index_set):
        raise MalformedInput("tuples must be indexed by the filter's index set")
    return agreement_set(a, b, F.index_set) in F.members


# Filtered products

Family = Mapping[Index, Any]


def _ordered(family: Family, F: Filter) -> List[Any]:
    if set(family) != F.indices:
        raise MalformedInput("the family must be indexed by the filter's index set")
    if not F.proper:
        raise ImproperFilter("filtered products need a proper filter")
    return [family[i] for i in F.index_set]


class _Quotient:
    """∏_i G_i modulo agreement on the core positions, per object"""

    def __init__(self, factors: Sequence[Presheaf], positions: Sequence[int], name: str = ""):
        self.base = same_base(*factors)
        self.factors = list(factors)
        self.positions = frozenset(positions)
        for i, G in enumerate(factors):
            for b in self.base.objects:
                if not G.on_obj[b]:
                    raise EmptyCarrier(f"factor {i} is empty at {b}", factor=i, object=b)
        count = 0
        for b in self.base.objects:
            n = 1
            for G in factors:
                n *= len(G.on_obj[b])
            count += n
        guard(count, "filtered product tuples")
        self.least = {b: [G.elements(b)[0] for G in factors] for b in self.base.objects}
        self.class_index: Dict[str, Dict[Tuple, Tuple]] = {}
        for b in self.base.objects:
            self.class_index[b] = {t: self.rep(b, t) for t in itertools.product(*(G.elements(b) for G in factors))}
        on_obj = {b: set(self.class_index[b].values()) for b in self.base.objects}
        on_mor = {}
        for m in self.base.morphisms:
            on_mor[m.name] = {r: self.rep(m.dom, self.restrict(m.name, r)) for r in on_obj[m.cod]}
        self.presheaf = make_presheaf(self.base, on_obj, on_mor, name=name)

    def rep(self, b: str, t: Sequence[Any]) -> Tuple:
        """Least tuple of the class of ``t``"""
        least = self.least[b]
        return tuple(x if i in self.positions else least[i] for i, x in enumerate(t))

    def restrict(self, mor: str, t: Sequence[Any]) -> Tuple:
        return tuple(G.on_mor[mor][x] for G, x in zip(self.factors, t))


@dataclass
class FilteredProductResult:
    """∏_F of a family with the coprojections μ_J for J ∈ F.

    ``class_index`` maps every I-tuple to its class representative: per
    object for presheaves, per sort then object for structures.
    """
    filter: Filter
    family: List[Any]
    product: Union[Presheaf, SigmaStructure]
    class_index: Dict[str, Any]
    kind: str
    _sources: Dict[IndexSet, Any] = field(default_factory=dict, repr=False)
    _coprojections: Dict[IndexSet, Any] = field(default_factory=dict, repr=False)

    def positions(self, J: Iterable[Index]) -> List[int]:
        J = frozenset(J)
        return [k for k, i in enumerate(self.filter.index_set) if i in J]

    def _product(self, J: IndexSet):
        if J not in self._sources:
            sub = [self.family[k] for k in self.positions(J)]
            if self.kind == "presheaf":
                self._sources[J] = product_presheaf(sub, self.product.base)
            else:
                self._sources[J] = product_models(sub, self.product.sig, self.product.base)
        return self._sources[J]

    def source(self, J: Iterable[Index]):
        """∏_J of the subfamily"""
        return self._product(frozenset(J))[0]

    def source_projections(self, J: Iterable[Index]) -> List[Any]:
        """p_{J,j} for j ∈ J in index order"""
        return self._product(frozenset(J))[1]

    def _component(self, b: str, index: Mapping[Tuple, Tuple], least: Sequence[Any],
                   positions: Sequence[int], src: Presheaf) -> Dict[Any, Any]:
        out = {}
        for s in src.on_obj[b]:
            full = list(least)
            for k, x in zip(positions, s):
                full[k] = x
            out[s] = index[tuple(full)]
        return out

    def coprojection(self, J: Iterable[Index]):
        """μ_J: ∏_J → ∏_F"""
        J = frozenset(J)
        if J not in self.filter.members:
            raise MalformedInput(f"{sort_elems(J)} is not a member of the filter")
        if J in self._coprojections:
            return self._coprojections[J]
        pos = self.positions(J)
        src = self.source(J)
        if self.kind == "presheaf":
            base = self.product.base
            comps = {b: self._component(b, self.class_index[b], _least(self.family, b), pos, src)
                     for b in base.objects}
            mu = NatTrans(src, self.product, comps, f"mu{sort_elems(J)}")
        else:
            M = self.product
            comps = {}
            for s in M.sig.sorts:
                carriers = [m.carriers[s] for m in self.family]
                comps[s] = NatTrans(src.carriers[s], M.carriers[s], {
                    b: self._component(b, self.class_index[s][b], _least(carriers, b), pos, src.carriers[s])
                    for b in M.base.objects})
            mu = ModelMorphism(src, M, comps, f"mu{sort_elems(J)}")
        self._coprojections[J] = mu
        return mu

    def coprojections(self) -> Dict[IndexSet, Any]:
        return {J: self.coprojection(J) for J in self.filter.sorted_members()}

    def transition(self, big: Iterable[Index], small: Iterable[Index]):
        """p_{J′,J}: ∏_{J′} → ∏_J for J ⊆ J′"""
        big, small = frozenset(big), frozenset(small)
        if not small <= big:
            raise MalformedInput("transition maps go from a larger index set to a smaller one")
        bpos = self.positions(big)
        keep = [bpos.index(k) for k in self.positions(small)]
        src, dst = self.source(big), self.source(small)

        def project(P: Presheaf, Q: Presheaf) -> NatTrans:
            return NatTrans(P, Q, {b: {t: tuple(t[k] for k in keep) for t in P.on_obj[b]} for b in P.base.objects})

        if self.kind == "presheaf":
            return project(src, dst)
        return ModelMorphism(src, dst, {s: project(src.carriers[s], dst.carriers[s]) for s in src.sig.sorts})


def _least(factors: Sequence[Any], b: str) -> List[Any]:
    out = []
    for G in factors:
        out.append(G.elements(b)[0])
    return out


def filtered_product_presheaf(family: Family, F: Filter) -> FilteredProductResult:
    factors = _ordered(family, F)
    if not factors:
        raise MalformedInput("filtered products need a nonempty index set")
    core = F.core
    positions = [k for k, i in enumerate(F.index_set) if i in core]
    q = _Quotient(factors, positions, name=f"∏_F({', '.join(G.name or '?' for G in factors)})")
    logger.debug("filtered product over core %s: %d classes", sort_elems(core), q.presheaf.size())
    return FilteredProductResult(F, factors, q.presheaf, q.class_index, "presheaf")


def filtered_product_models(family: Family, F: Filter) -> FilteredProductResult:
    models = _ordered(family, F)
    if not models:
        raise MalformedInput("filtered products need a nonempty index set")
    for other in models[1:]:
        _require_compatible(models[0], other)
    sig, base = models[0].sig, models[0].base
    if sig.power_sorts:
        raise UnsupportedCarrier("filtered products of structures with power sorts are not supported")
    core = F.core
    positions = [k for k, i in enumerate(F.index_set) if i in core]
    quotients = {s: _Quotient([m.carriers[s] for m in models], positions, name=s) for s in sig.sorts}

    functions = {}
    for fname, (args, result) in sig.functions.items():
        tables = [m.functions[fname].components for m in models]
        functions[fname] = {}
        for b in base.objects:
            table = {}
            for v in itertools.product(*(quotients[s].presheaf.elements(b) for s in args)):
                image = tuple(tab[b][tuple(a[k] for a in v)] for k, tab in enumerate(tables))
                table[v] = quotients[result].rep(b, image)
            functions[fname][b] = table

    relations = {}
    for rname, args in sig.relations.items():
        parts = [m.relations[rname].parts for m in models]
        relations[rname] = {}
        for b in base.objects:
            rows = []
            for v in itertools.product(*(quotients[s].presheaf.elements(b) for s in args)):
                holds = frozenset(i for k, i in enumerate(F.index_set) if tuple(a[k] for a in v) in parts[k][b])
                if holds in F.members:
                    rows.append(v)
            relations[rname][b] = rows

    product = make_structure(sig, base, {s: q.presheaf for s, q in quotients.items()}, functions, relations,
                             name=f"∏_F({', '.join(m.name or '?' for m in models)})")
    class_index = {s: q.class_index for s, q in quotients.items()}
    return FilteredProductResult(F, models, product, class_index, "models")


def check_representative_independence(result: FilteredProductResult) -> ValidationReport:
    """Restriction and operations computed on any member of a class land in the same class"""
    report = ValidationReport(subject="representative independence")
    if result.kind == "presheaf":
        _check_presheaf_classes(result.family, result.product, result.class_index, report, "")
        return report
    M = result.product
    for s in M.sig.sorts:
        _check_presheaf_classes([m.carriers[s] for m in result.family], M.carriers[s],
                                result.class_index[s], report, s)
    for fname, (args, res) in M.sig.functions.items():
        tables = [m.functions[fname].components for m in result.family]
        for b in M.base.objects:
            count = 1
            for s in args:
                count *= len(result.class_index[s][b])
            guard(count, "argument tuples")
            for v in itertools.product(*(list(result.class_index[s][b]) for s in args)):
                image = tuple(tab[b][tuple(a[k] for a in v)] for k, tab in enumerate(tables))
                reps = tuple(result.class_index[s][b][a] for s, a in zip(args, v))
                if result.class_index[res][b][image] != M.functions[fname].components[b][reps]:
                    report.add("representative-dependent", f"{fname} depends on the representative at {v!r}",
                               function=fname, object=b, element=v)
    return report


def _check_presheaf_classes(factors, Q: Presheaf, index, report: ValidationReport, sort: str) -> None:
    for m in Q.base.morphisms:
        for t, r in index[m.cod].items():
            moved = tuple(G.on_mor[m.name][x] for G, x in zip(factors, t))
            if index[m.dom][moved] != Q.on_mor[m.name][r]:
                report.add("representative-dependent", f"restriction along {m.name} depends on the representative",
                           sort=sort, morphism=m.name, element=t)


def _same_arrow(a, b) -> bool:
    if isinstance(a, ModelMorphism):
        return all(a.components[s].components == b.components[s].components for s in a.src.sig.sorts)
    return a.components == b.components


def _compose(u, t):
    if isinstance(u, ModelMorphism):
        return compose_model_morphisms(u, t)
    return compose_nat(u, t)


def check_cocone(result: FilteredProductResult) -> ValidationReport:
    """μ_J ∘ p_{J′,J} = μ_{J′} for all J ⊆ J′ in F"""
    report = ValidationReport(subject="cocone")
    members = result.filter.sorted_members()
    guard(len(members) ** 2, "cocone pairs")
    for small in members:
        for big in members:
            if small <= big:
                lhs = _compose(result.coprojection(small), result.transition(big, small))
                if not _same_arrow(lhs, result.coprojection(big)):
                    report.add("cocone", f"μ_{sort_elems(small)} ∘ p ≠ μ_{sort_elems(big)}",
                               small=sort_elems(small), big=sort_elems(big))
    return report


def default_targets(result: FilteredProductResult) -> List[Any]:
    """Small test targets: 1- and 2-element sets over a one-object base, else 1 and Ω"""
    if result.kind == "presheaf":
        base = result.product.base
        if base.is_set_like():
            return [set_presheaf({0}, base), set_presheaf({0, 1}, base)]
        return [product_presheaf([], base)[0], omega_presheaf(base)]
    return [terminal_model(result.product.sig, result.product.base)] + list(result.family)


def _arrows(src, dst) -> List[Any]:
    if isinstance(src, SigmaStructure):
        return enumerate_model_morphisms(src, dst)
    return enumerate_nat_trans(src, dst)


def check_universal_property(result: FilteredProductResult, targets: Optional[Sequence[Any]] = None
                             ) -> ValidationReport:
    """Every cocone into each target factors through ∏_F by exactly one map.

    Cocones are determined by their leg at the core, the least member.
    """
    report = ValidationReport(subject="universal property")
    core = result.filter.core
    members = result.filter.sorted_members()
    for t_index, T in enumerate(targets if targets is not None else default_targets(result)):
        candidates = _arrows(result.product, T)
        for nu_core in _arrows(result.source(core), T):
            legs = {J: _compose(nu_core, result.transition(J, core)) for J in members}
            mediators = [theta for theta in candidates
                         if all(_same_arrow(_compose(theta, result.coprojection(J)), legs[J]) for J in members)]
            if len(mediators) != 1:
                report.add("mediator-count", f"{len(mediators)} mediating maps into target {t_index}",
                           target=t_index, count=len(mediators))
    return report


def _is_epi_arrow(a) -> bool:
    if isinstance(a, ModelMorphism):
        return all(is_epi(a.components[s]) for s in a.src.sig.sorts)
    return is_epi(a)


def check_coprojection_epi(result: FilteredProductResult, targets: Optional[Sequence[Any]] = None
                           ) -> ValidationReport:
    """Transition maps epi, every μ_J epi, and the μ_J jointly epic on small targets"""
    report = ValidationReport(subject="coprojections")
    members = result.filter.sorted_members()
    for small in members:
        for big in members:
            if small < big and not _is_epi_arrow(result.transition(big, small)):
                report.add("transition-not-epi", f"p from {sort_elems(big)} to {sort_elems(small)} is not epi",
                           small=sort_elems(small), big=sort_elems(big))
    for J in members:
        if not _is_epi_arrow(result.coprojection(J)):
            report.add("coprojection-not-epi", f"μ_{sort_elems(J)} is not surjective", member=sort_elems(J))
    for t_index, T in enumerate(targets if targets is not None else default_targets(result)):
        maps = _arrows(result.product, T)
        for a, b in itertools.combinations(maps, 2):
            if all(_same_arrow(_compose(a, result.coprojection(J)), _compose(b, result.coprojection(J)))
                   for J in members):
                report.add("not-jointly-epic", f"two distinct maps into target {t_index} agree on every μ_J",
                           target=t_index)
    return report


def reduction_isomorphism(family: Family, F: Filter, J: Iterable[Index]):
    """∏_F X ≅ ∏_{F|J} X for J ∈ F; returns (iso, left product, right product)"""
    J = frozenset(J)
    if J not in F.members:
        raise MalformedInput(f"{sort_elems(J)} is not a member of the filter")
    reduced = reduce_filter(F, J)
    sub = {i: family[i] for i in reduced.index_set}
    first = next(iter(family.values()), None)
    if isinstance(first, SigmaStructure):
        left, right = filtered_product_models(family, F), filtered_product_models(sub, reduced)
    else:
        left, right = filtered_product_presheaf(family, F), filtered_product_presheaf(sub, reduced)
    keep = left.positions(J)

    def component(P: Presheaf, Q: Presheaf, index) -> NatTrans:
        return NatTrans(P, Q, {b: {r: index[b][tuple(r[k] for k in keep)] for r in P.on_obj[b]}
                               for b in P.base.objects})

    if left.kind == "presheaf":
        iso = component(left.product, right.product, right.class_index)
    else:
        M, N = left.product, right.product
        iso = ModelMorphism(M, N, {s: component(M.carriers[s], N.carriers[s], right.class_index[s])
                                   for s in M.sig.sorts}, "reduction")
    return iso, left, right


def is_isomorphism(a) -> bool:
    if isinstance(a, ModelMorphism):
        return all(is_iso(a.components[s]) for s in a.src.sig.sorts)
    return is_iso(a)
