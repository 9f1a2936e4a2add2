"""
The Heyting algebra Sub(F) of a finite presheaf, base change along natural
transformations with its two adjoints, generator sets and the subobject
classifier.
"""
import itertools
import logging
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .cat_core import (FinCategory, NatTrans, Presheaf, ValidationReport, elem_key, make_presheaf)
from .errors import AmbientMismatch, MalformedInput, PreconditionFailed
from .settings_manager import guard

logger = logging.getLogger(__name__)


class SubPresheaf:
    """A restriction-closed family of subsets of an ambient presheaf"""

    def __init__(self, ambient: Presheaf, parts: Mapping[str, Iterable[Any]]):
        self.ambient = ambient
        self.parts: Dict[str, FrozenSet[Any]] = {
            b: frozenset(parts.get(b, ())) for b in ambient.base.objects
        }
        self._key = tuple(self.parts[b] for b in ambient.base.objects)

    def __eq__(self, other):
        if not isinstance(other, SubPresheaf):
            return NotImplemented
        return self._key == other._key and _same_ambient(self.ambient, other.ambient)

    def __hash__(self):
        return hash(self._key)

    def __le__(self, other: "SubPresheaf") -> bool:
        return sub_leq(self, other)

    def __and__(self, other: "SubPresheaf") -> "SubPresheaf":
        return sub_meet(self, other)

    def __or__(self, other: "SubPresheaf") -> "SubPresheaf":
        return sub_join(self, other)

    def __repr__(self):
        inner = ", ".join(f"{b}: {sorted(map(str, self.parts[b]))}" for b in self.ambient.base.objects)
        return f"SubPresheaf({{{inner}}})"

    def is_bottom(self) -> bool:
        return not any(self._key)

    def size(self) -> int:
        return sum(len(p) for p in self._key)

    def sort_key(self):
        return tuple(tuple(sorted(elem_key(x) for x in p)) for p in self._key)


def _same_ambient(F: Presheaf, G: Presheaf) -> bool:
    return F is G or F == G


def _check_ambient(*subs: SubPresheaf) -> Presheaf:
    F = subs[0].ambient
    for a in subs[1:]:
        if not _same_ambient(F, a.ambient):
            raise AmbientMismatch("subobjects of different presheaves")
    return F


def make_sub(ambient: Presheaf, parts: Mapping[str, Iterable[Any]]) -> SubPresheaf:
    """Validated constructor for external data"""
    for b in parts:
        if not ambient.base.has_object(b):
            raise MalformedInput(f"unknown object {b!r} in subobject")
    a = SubPresheaf(ambient, parts)
    report = check_sub(a)
    if not report.ok:
        raise MalformedInput(report.violations[0].message)
    return a


def check_sub(a: SubPresheaf) -> ValidationReport:
    report = ValidationReport(subject="subobject")
    F = a.ambient
    for b in F.base.objects:
        stray = a.parts[b] - F.on_obj[b]
        if stray:
            report.add("not-a-subset", f"elements outside F({b})", object=b)
    for m in F.base.morphisms:
        for x in a.parts[m.cod]:
            if x in F.on_mor[m.name] and F.on_mor[m.name][x] not in a.parts[m.dom]:
                report.add("not-restriction-closed", f"{m.name} sends {x!r} out of the subobject",
                           morphism=m.name, element=x)
    return report


def sub_top(F: Presheaf) -> SubPresheaf:
    return SubPresheaf(F, F.on_obj)


def sub_bottom(F: Presheaf) -> SubPresheaf:
    return SubPresheaf(F, {})


def sub_leq(a: SubPresheaf, b: SubPresheaf) -> bool:
    _check_ambient(a, b)
    return all(pa <= pb for pa, pb in zip(a._key, b._key))


def sub_meet(a: SubPresheaf, b: SubPresheaf) -> SubPresheaf:
    F = _check_ambient(a, b)
    return SubPresheaf(F, {o: a.parts[o] & b.parts[o] for o in F.base.objects})


def sub_join(a: SubPresheaf, b: SubPresheaf) -> SubPresheaf:
    F = _check_ambient(a, b)
    return SubPresheaf(F, {o: a.parts[o] | b.parts[o] for o in F.base.objects})


def meet_all(F: Presheaf, subs: Iterable[SubPresheaf]) -> SubPresheaf:
    return reduce(sub_meet, subs, sub_top(F))


def join_all(F: Presheaf, subs: Iterable[SubPresheaf]) -> SubPresheaf:
    return reduce(sub_join, subs, sub_bottom(F))


def sub_implies(a: SubPresheaf, b: SubPresheaf) -> SubPresheaf:
    """a → b: x is in it iff every restriction of x lying in a also lies in b"""
    F = _check_ambient(a, b)
    cat = F.base
    parts = {}
    for o in cat.objects:
        arrows = cat.into(o)
        parts[o] = {
            x for x in F.on_obj[o]
            if all(F.on_mor[f.name][x] not in a.parts[f.dom] or F.on_mor[f.name][x] in b.parts[f.dom]
                   for f in arrows)
        }
    return SubPresheaf(F, parts)


def sub_negate(a: SubPresheaf) -> SubPresheaf:
    return sub_implies(a, sub_bottom(a.ambient))


def _check_pullback_shape(t: NatTrans, b: SubPresheaf) -> None:
    if not _same_ambient(t.dst, b.ambient):
        raise AmbientMismatch("subobject does not live over the codomain")


def pullback_sub(t: NatTrans, b: SubPresheaf) -> SubPresheaf:
    """t*(b), the componentwise preimage"""
    _check_pullback_shape(t, b)
    return SubPresheaf(t.src, {o: {x for x, y in t.components[o].items() if y in b.parts[o]}
                               for o in t.src.base.objects})


def exists_along(t: NatTrans, a: SubPresheaf) -> SubPresheaf:
    """∃t(a), the componentwise image; left adjoint to pullback"""
    if not _same_ambient(t.src, a.ambient):
        raise AmbientMismatch("subobject does not live over the domain")
    return SubPresheaf(t.dst, {o: {t.components[o][x] for x in a.parts[o]} for o in t.src.base.objects})


def forall_along(t: NatTrans, a: SubPresheaf) -> SubPresheaf:
    """∀t(a), the largest b with t*(b) ⪯ a.

    y lies in it iff for every g: c→o, every x over c with t(x) = Y(g)(y)
    belongs to a.
    """
    if not _same_ambient(t.src, a.ambient):
        raise AmbientMismatch("subobject does not live over the domain")
    X, Y = t.src, t.dst
    cat = X.base
    fibres: Dict[str, Dict[Any, List[Any]]] = {}
    for c in cat.objects:
        fib: Dict[Any, List[Any]] = {}
        for x, y in t.components[c].items():
            fib.setdefault(y, []).append(x)
        fibres[c] = fib
    parts = {}
    for o in cat.objects:
        arrows = cat.into(o)
        parts[o] = {
            y for y in Y.on_obj[o]
            if all(x in a.parts[g.dom]
                   for g in arrows
                   for x in fibres[g.dom].get(Y.on_mor[g.name][y], ()))
        }
    return SubPresheaf(Y, parts)


def principal_sub(F: Presheaf, obj: str, x: Any) -> SubPresheaf:
    """⟨x⟩, the smallest subobject containing x"""
    if x not in F.on_obj[obj]:
        raise MalformedInput(f"{x!r} is not an element of F({obj})")
    parts: Dict[str, set] = {b: set() for b in F.base.objects}
    for f in F.base.into(obj):
        parts[f.dom].add(F.on_mor[f.name][x])
    return SubPresheaf(F, parts)


def _closures(F: Presheaf) -> Dict[Tuple[str, Any], List[Tuple[str, Any]]]:
    cat = F.base
    return {
        (o, x): sorted({(f.dom, F.on_mor[f.name][x]) for f in cat.into(o)}, key=lambda e: (e[0], elem_key(e[1])))
        for o, x in F.all_elements()
    }


def enumerate_sub(F: Presheaf, within: Optional[SubPresheaf] = None) -> List[SubPresheaf]:
    """All subobjects of F (optionally only those below ``within``), bottom first"""
    if within is not None:
        _check_ambient(within, SubPresheaf(F, {}))
    slots = [e for e in F.all_elements() if within is None or e[1] in within.parts[e[0]]]
    closure = _closures(F)
    limit_hint = 2 ** len(slots)
    if limit_hint > 64:
        logger.debug("enumerating subobjects over %d elements", len(slots))

    decided: Dict[Tuple[str, Any], bool] = {}
    if within is not None:
        for e in F.all_elements():
            if e[1] not in within.parts[e[0]]:
                decided[e] = False
    results: List[SubPresheaf] = []

    def emit():
        guard(len(results) + 1, "subobjects")
        parts: Dict[str, set] = {b: set() for b in F.base.objects}
        for (b, x), inside in decided.items():
            if inside:
                parts[b].add(x)
        results.append(SubPresheaf(F, parts))

    def extend(i: int) -> None:
        while i < len(slots) and slots[i] in decided:
            i += 1
        if i == len(slots):
            emit()
            return
        e = slots[i]
        decided[e] = False
        extend(i + 1)
        del decided[e]
        down = closure[e]
        if any(decided.get(d) is False for d in down):
            return
        forced = [d for d in down if d not in decided]
        for d in forced:
            decided[d] = True
        extend(i + 1)
        for d in forced:
            del decided[d]

    extend(0)
    return results


@dataclass(frozen=True)
class GeneratorSet:
    """A set l_F of nonbottom subobjects; ``ambient`` is F"""
    ambient: Presheaf
    members: Tuple[SubPresheaf, ...]

    def __contains__(self, a: SubPresheaf) -> bool:
        return a in self._member_set

    @cached_property
    def _member_set(self) -> FrozenSet[SubPresheaf]:
        return frozenset(self.members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def below(self, a: SubPresheaf) -> List[SubPresheaf]:
        return down_set(self, a)


def make_generator_set(ambient: Presheaf, members: Iterable[SubPresheaf]) -> GeneratorSet:
    unique = {m for m in members}
    for m in unique:
        _check_ambient(m, SubPresheaf(ambient, {}))
    return GeneratorSet(ambient, tuple(sorted(unique, key=lambda a: (a.size(), a.sort_key()))))


def down_set(gens: GeneratorSet, a: SubPresheaf) -> List[SubPresheaf]:
    """↓a: the members below a"""
    return [d for d in gens.members if sub_leq(d, a)]


def generators(F: Presheaf) -> GeneratorSet:
    """Nonbottom subobjects lying below some ⟨x⟩"""
    members = set()
    for o, x in F.all_elements():
        for a in enumerate_sub(F, within=principal_sub(F, o, x)):
            if not a.is_bottom():
                members.add(a)
    return make_generator_set(F, members)


def validate_generator_set(gens: GeneratorSet) -> ValidationReport:
    """No bottom, downward closed below members, and every subobject is the join of its ↓"""
    F = gens.ambient
    report = ValidationReport(subject="generator set")
    members = set(gens.members)
    for d in gens.members:
        if d.is_bottom():
            report.add("bottom-member", "⊥ is a member", member=d)
        if not check_sub(d).ok:
            report.add("not-a-subobject", "member is not restriction-closed", member=d)
    if not report.ok:
        return report
    for d in gens.members:
        for a in enumerate_sub(F, within=d):
            if not a.is_bottom() and a not in members:
                report.add("not-downward-closed", "a nonbottom subobject below a member is missing",
                           member=d, missing=a)
                break
    report.extend(check_supgeneration(gens))
    return report


def check_supgeneration(gens: GeneratorSet) -> ValidationReport:
    report = ValidationReport(subject="sup-generation")
    F = gens.ambient
    for a in enumerate_sub(F):
        if join_all(F, down_set(gens, a)) != a:
            report.add("not-sup-generating", "subobject is not the join of the generators below it", subobject=a)
    return report


def check_supgen_condition(t: NatTrans, lX: GeneratorSet, lY: GeneratorSet) -> ValidationReport:
    """Transport of generators along t: every δ_X ⪯ t*(ι) is witnessed by some δ_Y ⪯ ι with δ_X ⪯ t*(δ_Y)"""
    if not _same_ambient(lX.ambient, t.src) or not _same_ambient(lY.ambient, t.dst):
        raise AmbientMismatch("generator sets do not match the morphism")
    report = ValidationReport(subject="generator transport")
    pulled = {d: pullback_sub(t, d) for d in lY.members}
    for iota in enumerate_sub(t.dst):
        back = pullback_sub(t, iota)
        candidates = [d for d in lY.members if sub_leq(d, iota)]
        for dx in lX.members:
            if not sub_leq(dx, back):
                continue
            if not any(sub_leq(dx, pulled[dy]) for dy in candidates):
                report.add("no-witness", "no generator of the codomain transports this pair",
                           delta=dx, iota=iota)
    return report


def cover_split(iota: SubPresheaf, d1: SubPresheaf, d2: SubPresheaf) -> Tuple[SubPresheaf, SubPresheaf]:
    if not sub_leq(iota, sub_join(d1, d2)):
        raise PreconditionFailed("ι is not below δ1 ∨ δ2")
    return sub_meet(iota, d1), sub_meet(iota, d2)


def check_covered(F: Presheaf) -> ValidationReport:
    """Every ι ⪯ δ1 ∨ δ2 splits as ι1 ∨ ι2 with ιk ⪯ δk"""
    report = ValidationReport(subject="covering")
    subs = enumerate_sub(F)
    guard(len(subs) ** 3, "covering triples")
    for d1, d2 in itertools.product(subs, repeat=2):
        top = sub_join(d1, d2)
        for iota in subs:
            if not sub_leq(iota, top):
                continue
            i1, i2 = cover_split(iota, d1, d2)
            if sub_join(i1, i2) != iota or not sub_leq(i1, d1) or not sub_leq(i2, d2):
                report.add("not-covered", "split does not recover ι", iota=iota, delta1=d1, delta2=d2)
    return report


@dataclass(frozen=True)
class Sieve:
    base: FinCategory
    on: str
    arrows: FrozenSet[str]


def _is_sieve(cat: FinCategory, arrows: FrozenSet[str]) -> bool:
    for name in arrows:
        f = cat.mor(name)
        for g in cat.into(f.dom):
            if cat.comp(f.name, g.name) not in arrows:
                return False
    return True


def sieves(cat: FinCategory, obj: str) -> List[Sieve]:
    arrows = [f.name for f in cat.into(obj)]
    guard(2 ** len(arrows), f"candidate sieves on {obj}")
    found = []
    for r in range(len(arrows) + 1):
        for chosen in itertools.combinations(arrows, r):
            s = frozenset(chosen)
            if _is_sieve(cat, s):
                found.append(Sieve(cat, obj, s))
    return found


def maximal_sieve(cat: FinCategory, obj: str) -> FrozenSet[str]:
    return frozenset(f.name for f in cat.into(obj))


def omega_presheaf(cat: FinCategory) -> Presheaf:
    """Ω: sieves on each object, restricted by Ω(f)(S) = {g | f∘g ∈ S}"""
    sets = {o: [s.arrows for s in sieves(cat, o)] for o in cat.objects}
    maps = {}
    for f in cat.morphisms:
        maps[f.name] = {
            S: frozenset(g.name for g in cat.into(f.dom) if cat.comp(f.name, g.name) in S)
            for S in sets[f.cod]
        }
    return make_presheaf(cat, sets, maps, name="Ω")


def true_sub(omega: Presheaf) -> SubPresheaf:
    """The subobject of maximal sieves"""
    cat = omega.base
    return SubPresheaf(omega, {o: {maximal_sieve(cat, o)} for o in cat.objects})


def char_morphism(g: SubPresheaf, omega: Optional[Presheaf] = None) -> NatTrans:
    """χ(G)_A(x) = {f: B→A | F(f)(x) ∈ G(B)}"""
    F = g.ambient
    cat = F.base
    omega = omega or omega_presheaf(cat)
    comps = {}
    for o in cat.objects:
        arrows = cat.into(o)
        comps[o] = {x: frozenset(f.name for f in arrows if F.on_mor[f.name][x] in g.parts[f.dom])
                    for x in F.on_obj[o]}
    return NatTrans(F, omega, comps, "χ")


def sub_from_char(x: NatTrans) -> SubPresheaf:
    """The pullback of the maximal sieves along x"""
    return pullback_sub(x, true_sub(x.dst))


def subobjects_by_key(subs: Sequence[SubPresheaf]) -> List[SubPresheaf]:
    return sorted(subs, key=lambda a: a.sort_key())
