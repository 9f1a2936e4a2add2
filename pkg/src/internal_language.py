"""
The internal language of a topos, evaluated over set-like carriers.

Types are built from named carriers with products and power types; terms of
type Ω are formulas. Formulas in a context denote subsets of the product of
the context types.
"""
import itertools
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from .cat_core import Presheaf, sort_elems
from .errors import MalformedInput, UnboundVariable, UnknownIdentifier, UnsupportedCarrier
from .settings_manager import guard


@dataclass(frozen=True)
class BaseType:
    name: str


@dataclass(frozen=True)
class PowerType:
    of: "Type"


@dataclass(frozen=True)
class ProductType:
    items: Tuple["Type", ...]


@dataclass(frozen=True)
class OmegaType:
    pass


Type = Union[BaseType, PowerType, ProductType, OmegaType]
OMEGA = OmegaType()


@dataclass(frozen=True)
class ITrue:
    pass


@dataclass(frozen=True)
class IFalse:
    pass


@dataclass(frozen=True)
class IVar:
    name: str
    type: Type


@dataclass(frozen=True)
class IConst:
    value: Any
    type: Type


@dataclass(frozen=True)
class IFun:
    fn: str
    arg: "ITerm"


@dataclass(frozen=True)
class ITuple:
    items: Tuple["ITerm", ...]


@dataclass(frozen=True)
class IProj:
    index: int
    term: "ITerm"


@dataclass(frozen=True)
class IComprehension:
    var: str
    type: Type
    body: "ITerm"


@dataclass(frozen=True)
class IEq:
    left: "ITerm"
    right: "ITerm"


@dataclass(frozen=True)
class IIn:
    elem: "ITerm"
    collection: "ITerm"


@dataclass(frozen=True)
class ILeq:
    left: "ITerm"
    right: "ITerm"


@dataclass(frozen=True)
class IAnd:
    left: "ITerm"
    right: "ITerm"


@dataclass(frozen=True)
class IOr:
    left: "ITerm"
    right: "ITerm"


@dataclass(frozen=True)
class IImp:
    left: "ITerm"
    right: "ITerm"


@dataclass(frozen=True)
class INot:
    child: "ITerm"


@dataclass(frozen=True)
class IForall:
    var: str
    type: Type
    body: "ITerm"


@dataclass(frozen=True)
class IExists:
    var: str
    type: Type
    body: "ITerm"


ITerm = Union[ITrue, IFalse, IVar, IConst, IFun, ITuple, IProj, IComprehension, IEq, IIn, ILeq,
              IAnd, IOr, IImp, INot, IForall, IExists]


@dataclass(frozen=True)
class InternalFunction:
    dom: Type
    cod: Type
    table: Mapping[Any, Any]


class InternalEnv:
    """Named set-like carriers and morphisms between carriers of types"""

    def __init__(self, carriers: Mapping[str, FrozenSet[Any]],
                 functions: Optional[Mapping[str, InternalFunction]] = None):
        self.carriers = {k: frozenset(v) for k, v in carriers.items()}
        self.functions = dict(functions or {})

    @classmethod
    def from_presheaves(cls, carriers: Mapping[str, Presheaf],
                        functions: Optional[Mapping[str, InternalFunction]] = None) -> "InternalEnv":
        sets = {}
        for name, F in carriers.items():
            if not F.base.is_set_like():
                raise UnsupportedCarrier(f"carrier {name} is not set-like")
            sets[name] = F.on_obj[F.base.objects[0]]
        return cls(sets, functions)

    def values(self, t: Type) -> List[Any]:
        """Elements of a type in deterministic order"""
        if isinstance(t, BaseType):
            if t.name not in self.carriers:
                raise UnknownIdentifier(f"unknown type {t.name!r}")
            return sort_elems(self.carriers[t.name])
        if isinstance(t, ProductType):
            parts = [self.values(s) for s in t.items]
            count = 1
            for p in parts:
                count *= len(p)
            guard(count, "product type values")
            return list(itertools.product(*parts))
        if isinstance(t, PowerType):
            inner = self.values(t.of)
            guard(2 ** len(inner), "power type values")
            return [frozenset(c) for r in range(len(inner) + 1) for c in itertools.combinations(inner, r)]
        return [False, True]


def type_of(env: InternalEnv, term: ITerm, scope: Mapping[str, Type]) -> Type:
    if isinstance(term, (ITrue, IFalse, IEq, IIn, ILeq, IAnd, IOr, IImp, INot, IForall, IExists)):
        return OMEGA
    if isinstance(term, IVar):
        if term.name not in scope:
            raise UnboundVariable(f"variable {term.name!r} is not bound")
        return scope[term.name]
    if isinstance(term, IConst):
        return term.type
    if isinstance(term, IFun):
        fn = env.functions.get(term.fn)
        if fn is None:
            raise UnknownIdentifier(f"unknown morphism {term.fn!r}")
        return fn.cod
    if isinstance(term, ITuple):
        return ProductType(tuple(type_of(env, t, scope) for t in term.items))
    if isinstance(term, IProj):
        t = type_of(env, term.term, scope)
        if not isinstance(t, ProductType) or not 1 <= term.index <= len(t.items):
            raise MalformedInput(f"projection {term.index} of a term of type {t}")
        return t.items[term.index - 1]
    if isinstance(term, IComprehension):
        return PowerType(term.type)
    raise MalformedInput(f"unknown internal term {term!r}")


def eval_internal_term(env: InternalEnv, term: ITerm, assignment: Optional[Mapping[str, Any]] = None) -> Any:
    """Value of a term under an assignment; formulas evaluate to booleans
    and comprehensions to the subset they carve out."""
    return _eval(env, term, dict(assignment or {}), {})


def _eval(env: InternalEnv, term: ITerm, values: Dict[str, Any], scope: Dict[str, Type]) -> Any:
    if isinstance(term, ITrue):
        return True
    if isinstance(term, IFalse):
        return False
    if isinstance(term, IVar):
        if term.name not in values:
            raise UnboundVariable(f"variable {term.name!r} is not bound")
        return values[term.name]
    if isinstance(term, IConst):
        return term.value
    if isinstance(term, IFun):
        fn = env.functions.get(term.fn)
        if fn is None:
            raise UnknownIdentifier(f"unknown morphism {term.fn!r}")
        arg = _eval(env, term.arg, values, scope)
        try:
            return fn.table[arg]
        except KeyError:
            raise MalformedInput(f"{term.fn} is undefined on {arg!r}")
    if isinstance(term, ITuple):
        return tuple(_eval(env, t, values, scope) for t in term.items)
    if isinstance(term, IProj):
        value = _eval(env, term.term, values, scope)
        if not isinstance(value, tuple) or not 1 <= term.index <= len(value):
            raise MalformedInput(f"projection {term.index} of {value!r}")
        return value[term.index - 1]
    if isinstance(term, IComprehension):
        return frozenset(x for x in env.values(term.type)
                         if _eval(env, term.body, {**values, term.var: x}, {**scope, term.var: term.type}))
    if isinstance(term, IEq):
        return _eval(env, term.left, values, scope) == _eval(env, term.right, values, scope)
    if isinstance(term, IIn):
        collection = _eval(env, term.collection, values, scope)
        if not isinstance(collection, frozenset):
            raise MalformedInput("membership needs a term of power type on the right")
        return _eval(env, term.elem, values, scope) in collection
    if isinstance(term, ILeq):
        left, right = _eval(env, term.left, values, scope), _eval(env, term.right, values, scope)
        if not isinstance(left, frozenset) or not isinstance(right, frozenset):
            raise MalformedInput("⪯ compares terms of power type")
        return left <= right
    if isinstance(term, IAnd):
        return _eval(env, term.left, values, scope) and _eval(env, term.right, values, scope)
    if isinstance(term, IOr):
        return _eval(env, term.left, values, scope) or _eval(env, term.right, values, scope)
    if isinstance(term, IImp):
        return (not _eval(env, term.left, values, scope)) or _eval(env, term.right, values, scope)
    if isinstance(term, INot):
        return not _eval(env, term.child, values, scope)
    if isinstance(term, IForall):
        return all(_eval(env, term.body, {**values, term.var: x}, {**scope, term.var: term.type})
                   for x in env.values(term.type))
    if isinstance(term, IExists):
        return any(_eval(env, term.body, {**values, term.var: x}, {**scope, term.var: term.type})
                   for x in env.values(term.type))
    raise MalformedInput(f"unknown internal term {term!r}")


def interpret_internal_formula(env: InternalEnv, context: Sequence[Tuple[str, Type]],
                               formula: ITerm) -> FrozenSet[Tuple[Any, ...]]:
    """⟦φ⟧ in the context x⃗ as a subset of X_x⃗"""
    scope = dict(context)
    if type_of(env, formula, scope) != OMEGA:
        raise MalformedInput("only formulas denote subobjects")
    names = [n for n, _ in context]
    space = env.values(ProductType(tuple(t for _, t in context)))
    return frozenset(v for v in space if _eval(env, formula, dict(zip(names, v)), scope))
