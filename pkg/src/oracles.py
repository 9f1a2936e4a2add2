"""
Brute-force oracles used to cross-check the direct constructions
"""
import itertools
import logging
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

from .cat_core import FinCategory, NatTrans, Presheaf, compose_nat, enumerate_nat_trans, make_presheaf, sort_elems
from .modal_coalg import Coalgebra, Subset
from .settings_manager import guard
from .sub_heyting import (SubPresheaf, enumerate_sub, join_all, meet_all, omega_presheaf, pullback_sub, sub_leq,
                          sub_meet, sub_top)
from .ultra_filt import Filter, equivalent

logger = logging.getLogger(__name__)


def implies_by_join(a: SubPresheaf, b: SubPresheaf) -> SubPresheaf:
    """a ⇒ b as the join of every c with c ∧ a ⪯ b"""
    F = a.ambient
    return join_all(F, [c for c in enumerate_sub(F) if sub_leq(sub_meet(c, a), b)])


def forall_by_join(t: NatTrans, a: SubPresheaf) -> SubPresheaf:
    """∀t(a) as the largest b with t*(b) ⪯ a"""
    return join_all(t.dst, [b for b in enumerate_sub(t.dst) if sub_leq(pullback_sub(t, b), a)])


def exists_by_meet(t: NatTrans, a: SubPresheaf) -> SubPresheaf:
    """∃t(a) as the least b with a ⪯ t*(b)"""
    return meet_all(t.dst, [b for b in enumerate_sub(t.dst) if sub_leq(a, pullback_sub(t, b))])


def count_subobjects(F: Presheaf) -> int:
    """Subsets of the element set closed under restriction, counted by filtering all subsets"""
    elems = F.all_elements()
    guard(2 ** len(elems), "element subsets")
    count = 0
    for mask in itertools.product((False, True), repeat=len(elems)):
        chosen = {e for e, keep in zip(elems, mask) if keep}
        if all((m.dom, F.on_mor[m.name][x]) in chosen
               for (b, x) in chosen for m in F.base.into(b)):
            count += 1
    return count


def representable(cat: FinCategory, obj: str) -> Presheaf:
    """hom(-, obj)"""
    on_obj = {a: [m.name for m in cat.morphisms if m.dom == a and m.cod == obj] for a in cat.objects}
    on_mor = {f.name: {g: cat.comp(g, f.name) for g in on_obj[f.cod]} for f in cat.morphisms}
    return make_presheaf(cat, on_obj, on_mor, name=f"y({obj})")


def _same(u: NatTrans, v: NatTrans) -> bool:
    return u.components == v.components


def epi_by_cancellation(t: NatTrans, targets: Optional[Sequence[Presheaf]] = None) -> bool:
    """u∘t = v∘t implies u = v for maps into Ω (or the given targets)"""
    for T in targets if targets is not None else [omega_presheaf(t.src.base)]:
        maps = enumerate_nat_trans(t.dst, T)
        for u, v in itertools.combinations(maps, 2):
            if _same(compose_nat(u, t), compose_nat(v, t)):
                return False
    return True


def mono_by_cancellation(t: NatTrans, sources: Optional[Sequence[Presheaf]] = None) -> bool:
    """t∘u = t∘v implies u = v for maps out of the representables (or the given sources)"""
    cat = t.src.base
    for S in sources if sources is not None else [representable(cat, b) for b in cat.objects]:
        maps = enumerate_nat_trans(S, t.src)
        for u, v in itertools.combinations(maps, 2):
            if _same(compose_nat(t, u), compose_nat(t, v)):
                return False
    return True


# Kripke semantics

def successors(c: Coalgebra) -> Dict[Any, FrozenSet[Any]]:
    return {x: frozenset(c.functor.beta(c.structure[x])) for x in c.carrier}


def kripke_box(c: Coalgebra, a: Subset) -> Subset:
    rel = successors(c)
    return frozenset(x for x in c.carrier if all(y in a for y in rel[x]))


def kripke_diamond(c: Coalgebra, a: Subset) -> Subset:
    rel = successors(c)
    return frozenset(x for x in c.carrier if any(y in a for y in rel[x]))


def kripke_nabla(c: Coalgebra, args: Sequence[Subset]) -> Subset:
    rel = successors(c)
    out = set()
    for x in c.carrier:
        forth = all(any(y in a for y in rel[x]) for a in args)
        back = all(any(y in a for a in args) for y in rel[x])
        if forth and back:
            out.add(x)
    return frozenset(out)


# Filtered products

def count_classes(F: Filter, tuples: Sequence[Tuple[Any, ...]]) -> int:
    """Number of ~_F classes among ``tuples``, by pairwise comparison"""
    reps: List[Tuple[Any, ...]] = []
    for t in tuples:
        if not any(equivalent(F, t, r) for r in reps):
            reps.append(t)
    return len(reps)


def class_counts(F: Filter, factors: Sequence[Presheaf]) -> Dict[str, int]:
    base = factors[0].base
    out = {}
    for b in base.objects:
        tuples = list(itertools.product(*(G.elements(b) for G in factors)))
        guard(len(tuples) ** 2, "class comparisons")
        out[b] = count_classes(F, tuples)
    return out


def subsets_of(xs: Sequence[Any]) -> List[Subset]:
    xs = sort_elems(xs)
    guard(2 ** len(xs), "subsets")
    return [frozenset(c) for r in range(len(xs) + 1) for c in itertools.combinations(xs, r)]


def top_of(a: SubPresheaf) -> SubPresheaf:
    return sub_top(a.ambient)
