"""
Finite categories, presheaves over them and natural transformations
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .errors import BaseMismatch, MalformedInput, UnknownIdentifier
from .settings_manager import guard

logger = logging.getLogger(__name__)

TERMINAL_OBJECT = "*"


def elem_key(x: Any):
    """Sort key giving a total, lexicographic order on element identifiers"""
    if isinstance(x, tuple):
        return (1, tuple(elem_key(y) for y in x))
    if isinstance(x, frozenset):
        return (2, tuple(sorted(elem_key(y) for y in x)))
    return (0, str(x))


def sort_elems(xs: Iterable[Any]) -> List[Any]:
    return sorted(xs, key=elem_key)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    payload: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ValidationReport:
    """Collected law violations; empty means the checked object is valid"""
    subject: str = ""
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str, **payload: Any) -> None:
        self.violations.append(Violation(code, message, payload))

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class Morphism:
    name: str
    dom: str
    cod: str


@dataclass(frozen=True)
class FinCategory:
    """A finite category given by explicit object, morphism and composition tables.

    ``compose[(g, f)]`` is the name of g∘f for f: a→b and g: b→c.
    """
    objects: Tuple[str, ...]
    morphisms: Tuple[Morphism, ...]
    identity: Mapping[str, str]
    compose: Mapping[Tuple[str, str], str]
    name: str = field(default="", compare=False)

    @classmethod
    def build(cls, objects: Sequence[str], morphisms: Sequence[Tuple[str, str, str]],
              compose: Optional[Iterable[Tuple[str, str, str]]] = None,
              name: str = "") -> "FinCategory":
        """Build a category from its non-identity data.

        Identities ``id_<obj>`` and their compositions are added; ``compose``
        lists the remaining entries as (g, f, g∘f).
        """
        objects = tuple(objects)
        identity = {o: f"id_{o}" for o in objects}
        mors = [Morphism(identity[o], o, o) for o in objects]
        mors.extend(Morphism(n, d, c) for n, d, c in morphisms)
        table: Dict[Tuple[str, str], str] = {}
        for m in mors:
            table[(m.name, identity[m.dom])] = m.name
            table[(identity[m.cod], m.name)] = m.name
        for g, f, h in compose or ():
            table[(g, f)] = h
        return cls(objects, tuple(mors), identity, table, name)

    @cached_property
    def _by_name(self) -> Dict[str, Morphism]:
        return {m.name: m for m in self.morphisms}

    def mor(self, name: str) -> Morphism:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownIdentifier(f"unknown morphism {name!r}")

    def has_object(self, obj: str) -> bool:
        return obj in self._object_set

    @cached_property
    def _object_set(self) -> frozenset:
        return frozenset(self.objects)

    def comp(self, g: str, f: str) -> str:
        """g∘f"""
        try:
            return self.compose[(g, f)]
        except KeyError:
            raise MalformedInput(f"composition {g}∘{f} is not defined")

    def into(self, obj: str) -> List[Morphism]:
        """All morphisms with codomain ``obj``"""
        return [m for m in self.morphisms if m.cod == obj]

    def composable_pairs(self) -> Iterator[Tuple[Morphism, Morphism]]:
        """Pairs (g, f) with cod f = dom g"""
        for f in self.morphisms:
            for g in self.morphisms:
                if f.cod == g.dom:
                    yield g, f

    def is_set_like(self) -> bool:
        return len(self.objects) == 1 and len(self.morphisms) == 1


def terminal_category() -> FinCategory:
    return FinCategory.build([TERMINAL_OBJECT], [], name="1")


def graph_category() -> FinCategory:
    """The base whose presheaves are directed multigraphs: s, t: V→E"""
    return FinCategory.build(["V", "E"], [("s", "V", "E"), ("t", "V", "E")], name="graph")


def poset_category(elements: Sequence[str], leq: Iterable[Tuple[str, str]], name: str = "") -> FinCategory:
    """The category of a finite poset; ``leq`` is closed reflexively and transitively"""
    elements = list(elements)
    order = {(a, b) for a, b in leq} | {(a, a) for a in elements}
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(order), repeat=2):
            if b == c and (a, d) not in order:
                order.add((a, d))
                changed = True
    for a, b in order:
        if a != b and (b, a) in order:
            raise MalformedInput(f"order is not antisymmetric on {a}, {b}")

    def arrow(a, b):
        return f"id_{a}" if a == b else f"{a}<={b}"

    morphisms = [(arrow(a, b), a, b) for a, b in sorted(order) if a != b]
    compose = []
    for a, b in order:
        for c, d in order:
            if b == c and a != b and c != d:
                compose.append((arrow(c, d), arrow(a, b), arrow(a, d)))
    return FinCategory.build(elements, morphisms, compose, name=name)


def check_category(cat: FinCategory) -> ValidationReport:
    """Identity, associativity and typing laws of an explicit composition table"""
    report = ValidationReport(subject=cat.name or "category")
    if len(set(cat.objects)) != len(cat.objects):
        raise MalformedInput("duplicate object identifiers")
    names = [m.name for m in cat.morphisms]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise MalformedInput(f"duplicate morphism identifiers: {', '.join(dupes)}")
    by_name = {m.name: m for m in cat.morphisms}
    objs = set(cat.objects)
    for m in cat.morphisms:
        if m.dom not in objs or m.cod not in objs:
            report.add("unknown-object", f"morphism {m.name} has an undeclared endpoint", morphism=m.name)
    for o in cat.objects:
        ident = cat.identity.get(o)
        if ident is None or ident not in by_name:
            report.add("missing-identity", f"object {o} has no identity", object=o)
        elif (by_name[ident].dom, by_name[ident].cod) != (o, o):
            report.add("identity-typing", f"identity {ident} is not an endomorphism of {o}", object=o)
    if not report.ok:
        return report

    for (g, f), h in cat.compose.items():
        if g not in by_name or f not in by_name or h not in by_name:
            report.add("unknown-morphism", f"composition entry {g}∘{f} = {h} names an undeclared morphism",
                       pair=[g, f])
            continue
        mg, mf, mh = by_name[g], by_name[f], by_name[h]
        if mf.cod != mg.dom:
            report.add("not-composable", f"{g}∘{f} is tabled but {f} and {g} are not composable", pair=[g, f])
        elif (mh.dom, mh.cod) != (mf.dom, mg.cod):
            report.add("composite-typing", f"{g}∘{f} = {h} has the wrong domain or codomain", pair=[g, f])
    for g, f in cat.composable_pairs():
        if (g.name, f.name) not in cat.compose:
            report.add("missing-composite", f"{g.name}∘{f.name} is not tabled", pair=[g.name, f.name])
    if not report.ok:
        return report

    for m in cat.morphisms:
        if cat.compose[(m.name, cat.identity[m.dom])] != m.name:
            report.add("right-identity", f"{m.name}∘{cat.identity[m.dom]} ≠ {m.name}", morphism=m.name)
        if cat.compose[(cat.identity[m.cod], m.name)] != m.name:
            report.add("left-identity", f"{cat.identity[m.cod]}∘{m.name} ≠ {m.name}", morphism=m.name)
    for h, g in cat.composable_pairs():
        for f in cat.morphisms:
            if f.cod != g.dom:
                continue
            left = cat.compose[(cat.compose[(h.name, g.name)], f.name)]
            right = cat.compose[(h.name, cat.compose[(g.name, f.name)])]
            if left != right:
                report.add("associativity", f"({h.name}∘{g.name})∘{f.name} ≠ {h.name}∘({g.name}∘{f.name})",
                           triple=[h.name, g.name, f.name])
    return report


def hom_set(cat: FinCategory, a: str, b: str) -> List[Morphism]:
    for o in (a, b):
        if not cat.has_object(o):
            raise UnknownIdentifier(f"unknown object {o!r}")
    return [m for m in cat.morphisms if m.dom == a and m.cod == b]


@dataclass(frozen=True)
class Presheaf:
    """A contravariant functor base^op → FinSet.

    ``on_mor[f]`` for f: a→b maps elements of ``on_obj[b]`` to ``on_obj[a]``.
    """
    base: FinCategory
    on_obj: Mapping[str, frozenset]
    on_mor: Mapping[str, Mapping[Any, Any]]
    name: str = field(default="", compare=False)

    @cached_property
    def _sorted(self) -> Dict[str, Tuple[Any, ...]]:
        return {b: tuple(sort_elems(self.on_obj[b])) for b in self.base.objects}

    def elements(self, obj: str) -> Tuple[Any, ...]:
        """Elements over ``obj`` in deterministic order"""
        return self._sorted[obj]

    def restrict(self, mor: str, x: Any) -> Any:
        return self.on_mor[mor][x]

    def size(self) -> int:
        return sum(len(self.on_obj[b]) for b in self.base.objects)

    def all_elements(self) -> List[Tuple[str, Any]]:
        return [(b, x) for b in self.base.objects for x in self.elements(b)]


def make_presheaf(base: FinCategory, on_obj: Mapping[str, Iterable[Any]],
                  on_mor: Optional[Mapping[str, Mapping[Any, Any]]] = None, name: str = "") -> Presheaf:
    """Presheaf from element sets and the non-identity restriction maps"""
    sets = {b: frozenset(on_obj.get(b, ())) for b in base.objects}
    maps: Dict[str, Dict[Any, Any]] = {}
    for b in base.objects:
        maps[base.identity[b]] = {x: x for x in sets[b]}
    for m, table in (on_mor or {}).items():
        base.mor(m)
        maps[m] = dict(table)
    return Presheaf(base, sets, maps, name)


def set_presheaf(elements: Iterable[Any], base: Optional[FinCategory] = None, name: str = "") -> Presheaf:
    """A finite set seen as a presheaf over the terminal category"""
    base = base or terminal_category()
    if not base.is_set_like():
        raise BaseMismatch("set presheaves live over a one-object base")
    return make_presheaf(base, {base.objects[0]: elements}, name=name)


def graph_presheaf(vertices: Iterable[Any], edges: Mapping[Any, Tuple[Any, Any]],
                   base: Optional[FinCategory] = None, name: str = "") -> Presheaf:
    """A directed multigraph; ``edges`` maps an edge to its (source, target)"""
    base = base or graph_category()
    return make_presheaf(
        base,
        {"V": vertices, "E": edges.keys()},
        {"s": {e: st[0] for e, st in edges.items()}, "t": {e: st[1] for e, st in edges.items()}},
        name=name,
    )


def is_set_like(F: Presheaf) -> bool:
    return F.base.is_set_like()


def check_presheaf(F: Presheaf) -> ValidationReport:
    """Totality, identity and contravariance laws"""
    report = ValidationReport(subject=F.name or "presheaf")
    cat = F.base
    for m in cat.morphisms:
        table = F.on_mor.get(m.name)
        if table is None:
            report.add("missing-map", f"no restriction map for {m.name}", morphism=m.name)
            continue
        for x in F.elements(m.cod):
            if x not in table:
                report.add("map-not-total", f"{m.name} is undefined on {x!r}", morphism=m.name, element=x)
            elif table[x] not in F.on_obj[m.dom]:
                report.add("map-codomain", f"{m.name} sends {x!r} outside F({m.dom})", morphism=m.name, element=x)
    if not report.ok:
        return report
    for b in cat.objects:
        ident = F.on_mor[cat.identity[b]]
        for x in F.elements(b):
            if ident[x] != x:
                report.add("identity", f"F({cat.identity[b]}) moves {x!r}", object=b, element=x)
    for g, f in cat.composable_pairs():
        gf = cat.comp(g.name, f.name)
        for x in F.elements(g.cod):
            if F.on_mor[gf][x] != F.on_mor[f.name][F.on_mor[g.name][x]]:
                report.add("contravariance", f"F({gf}) ≠ F({f.name})∘F({g.name}) at {x!r}",
                           pair=[g.name, f.name], element=x)
    return report


def same_base(*presheaves: Presheaf) -> FinCategory:
    base = presheaves[0].base
    for F in presheaves[1:]:
        if F.base is not base and F.base != base:
            raise BaseMismatch("presheaves live over different base categories")
    return base


@dataclass(frozen=True)
class NatTrans:
    src: Presheaf
    dst: Presheaf
    components: Mapping[str, Mapping[Any, Any]]
    name: str = field(default="", compare=False)

    def __call__(self, obj: str, x: Any) -> Any:
        return self.components[obj][x]


def check_nat_trans(t: NatTrans) -> ValidationReport:
    report = ValidationReport(subject=t.name or "natural transformation")
    cat = same_base(t.src, t.dst)
    for b in cat.objects:
        comp = t.components.get(b)
        if comp is None:
            raise MalformedInput(f"component at {b} is missing")
        for x in t.src.elements(b):
            if x not in comp:
                raise MalformedInput(f"component at {b} is undefined on {x!r}")
            if comp[x] not in t.dst.on_obj[b]:
                raise MalformedInput(f"component at {b} sends {x!r} outside the target")
    for m in cat.morphisms:
        for x in t.src.elements(m.cod):
            if t.dst.on_mor[m.name][t(m.cod, x)] != t(m.dom, t.src.on_mor[m.name][x]):
                report.add("naturality", f"the square of {m.name} fails at {x!r}", morphism=m.name, element=x)
    return report


def identity_nat(F: Presheaf) -> NatTrans:
    return NatTrans(F, F, {b: {x: x for x in F.on_obj[b]} for b in F.base.objects}, "id")


def compose_nat(u: NatTrans, t: NatTrans) -> NatTrans:
    """u∘t for t: X→Y and u: Y→Z"""
    if t.dst is not u.src and t.dst != u.src:
        raise MalformedInput("natural transformations are not composable")
    return NatTrans(t.src, u.dst,
                    {b: {x: u.components[b][y] for x, y in t.components[b].items()} for b in t.src.base.objects})


def product_presheaf(factors: Sequence[Presheaf], base: Optional[FinCategory] = None
                     ) -> Tuple[Presheaf, List[NatTrans]]:
    """Componentwise product with its projections; no factors gives the terminal presheaf"""
    if factors:
        base = same_base(*factors)
    elif base is None:
        raise MalformedInput("the empty product needs an explicit base")
    count = 0
    sets = {}
    for b in base.objects:
        n = 1
        for F in factors:
            n *= len(F.on_obj[b])
        count += n
    guard(count, "product elements")
    for b in base.objects:
        sets[b] = list(itertools.product(*(F.elements(b) for F in factors)))
    maps = {}
    for m in base.morphisms:
        tables = [F.on_mor[m.name] for F in factors]
        maps[m.name] = {x: tuple(tab[xi] for tab, xi in zip(tables, x)) for x in sets[m.cod]}
    P = Presheaf(base, {b: frozenset(xs) for b, xs in sets.items()}, maps,
                 " × ".join(F.name or "?" for F in factors) if factors else "1")
    projections = [
        NatTrans(P, F, {b: {x: x[i] for x in sets[b]} for b in base.objects}, f"p{i}")
        for i, F in enumerate(factors)
    ]
    return P, projections


def terminal_presheaf(base: FinCategory) -> Presheaf:
    return product_presheaf([], base)[0]


def enumerate_nat_trans(F: Presheaf, G: Presheaf) -> List[NatTrans]:
    """All natural transformations F ⇒ G in deterministic order"""
    cat = same_base(F, G)
    space = 1
    for b in cat.objects:
        space *= len(G.on_obj[b]) ** len(F.on_obj[b])
    guard(space, "natural transformations")

    slots = F.all_elements()
    position = {s: i for i, s in enumerate(slots)}
    # constraint (f, (b, x), (a, y)) with y = F(f)(x): G(f)(t_b(x)) = t_a(y)
    checks: List[List[Tuple[str, Tuple[str, Any], Tuple[str, Any]]]] = [[] for _ in slots]
    for m in cat.morphisms:
        for x in F.elements(m.cod):
            hi = (m.cod, x)
            lo = (m.dom, F.on_mor[m.name][x])
            last = max(position[hi], position[lo])
            checks[last].append((m.name, hi, lo))

    results: List[NatTrans] = []
    assignment: Dict[Tuple[str, Any], Any] = {}

    def extend(i: int) -> None:
        if i == len(slots):
            comps = {b: {} for b in cat.objects}
            for (b, x), y in assignment.items():
                comps[b][x] = y
            results.append(NatTrans(F, G, comps))
            return
        b, _ = slots[i]
        for y in G.elements(b):
            assignment[slots[i]] = y
            if all(G.on_mor[m][assignment[hi]] == assignment[lo] for m, hi, lo in checks[i]):
                extend(i + 1)
        assignment.pop(slots[i], None)

    extend(0)
    logger.debug("enumerated %d natural transformations out of %d candidates", len(results), space)
    return results


def is_epi(t: NatTrans) -> bool:
    return all(set(t.components[b].values()) == set(t.dst.on_obj[b]) for b in t.src.base.objects)


def is_mono(t: NatTrans) -> bool:
    return all(len(set(t.components[b].values())) == len(t.components[b]) for b in t.src.base.objects)


def is_iso(t: NatTrans) -> bool:
    return is_epi(t) and is_mono(t)


def global_elements(F: Presheaf) -> List[NatTrans]:
    """Morphisms 1 → F"""
    return enumerate_nat_trans(terminal_presheaf(F.base), F)
