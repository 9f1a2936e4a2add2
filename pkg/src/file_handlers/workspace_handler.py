"""
Loader for JSON workspace documents (schema version 1).

A workspace names a base category, a signature, structures, coalgebras,
model morphisms, formulas, filters, generator sets and Łoś instances.
Everything is validated on load; errors carry the object path of the
offending entry.
"""
import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple, Union

from ..cat_core import (FinCategory, NatTrans, Presheaf, ValidationReport, check_category, check_presheaf,
                        graph_category, graph_presheaf, make_presheaf, poset_category, terminal_category)
from ..errors import ParseError, SearchSpaceTooLarge, ToposLosError, UnknownIdentifier, WorkspaceError
from ..fol_model import (ModelMorphism, SigmaStructure, Signature, check_model_morphism, check_structure,
                         make_structure)
from ..formula_sem import Formula, QuantifierRegistry, default_registry, semantics_of
from ..los_check import LosInstance
from ..modal_coalg import (Coalgebra, ConstantFunctor, ExponentFunctor, KripkeFunctor, PowersetFunctor,
                           SetFunctor, make_coalgebra, modal_registry)
from ..parser_formula import parse_context, parse_formula
from ..sub_heyting import GeneratorSet, make_generator_set, make_sub
from ..ultra_filt import Filter, frechet_description, generate_filter, make_filter, make_principal, materialize

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

Model = Union[SigmaStructure, Coalgebra]


def freeze(value: Any) -> Any:
    """JSON lists become tuples, recursively, so elements are hashable"""
    if isinstance(value, list):
        return tuple(freeze(v) for v in value)
    return value


def _index_key(key: str) -> Any:
    try:
        return int(key)
    except ValueError:
        return key


@contextmanager
def _at(path: str) -> Iterator[None]:
    """Attach ``path`` to any library error raised inside the block"""
    try:
        yield
    except (WorkspaceError, ParseError, SearchSpaceTooLarge):
        raise
    except ToposLosError as e:
        raise WorkspaceError(e.message, path, cause=e.code, **e.payload) from e


def _require_valid(report: ValidationReport, path: str) -> None:
    if not report.ok:
        first = report.violations[0]
        raise WorkspaceError(first.message, path, cause=first.code, **first.payload)


def _mapping(raw: Any, path: str) -> Mapping[str, Any]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise WorkspaceError("expected an object", path)
    return raw


@dataclass(frozen=True)
class GeneratorSpec:
    """A generator set given by its members; bound to a model on use"""
    context: str
    members: Tuple[Mapping[str, Tuple[Any, ...]], ...]
    model: Optional[str] = None


@dataclass(frozen=True)
class InstanceSpec:
    family: Tuple[Tuple[Any, str], ...]
    filter: str
    formula: str
    generators: Tuple[str, ...] = ()


@dataclass
class Workspace:
    path: str
    base: FinCategory
    signature: Signature
    models: Dict[str, SigmaStructure] = field(default_factory=dict)
    coalgebras: Dict[str, Coalgebra] = field(default_factory=dict)
    morphisms: Dict[str, ModelMorphism] = field(default_factory=dict)
    formulas: Dict[str, Formula] = field(default_factory=dict)
    filters: Dict[str, Filter] = field(default_factory=dict)
    generators: Dict[str, GeneratorSpec] = field(default_factory=dict)
    registry: QuantifierRegistry = field(default_factory=default_registry)
    instances: Dict[str, InstanceSpec] = field(default_factory=dict)
    raw: Mapping[str, Any] = field(default_factory=dict, repr=False)

    def _lookup(self, table: Mapping[str, Any], kind: str, name: str) -> Any:
        try:
            return table[name]
        except KeyError:
            raise UnknownIdentifier(f"unknown {kind} {name!r}", name=name)

    def model(self, name: str) -> SigmaStructure:
        return self._lookup(self.models, "model", name)

    def structure(self, name: str) -> Model:
        """A Σ-structure or a coalgebra"""
        if name in self.coalgebras:
            return self.coalgebras[name]
        return self._lookup(self.models, "model", name)

    def formula(self, name: str) -> Formula:
        return self._lookup(self.formulas, "formula", name)

    def filter(self, name: str) -> Filter:
        return self._lookup(self.filters, "filter", name)

    def morphism(self, name: str) -> ModelMorphism:
        return self._lookup(self.morphisms, "morphism", name)

    def props(self) -> List[str]:
        return sorted({p for c in self.coalgebras.values() for p in c.valuation})

    def formula_or_text(self, text: str, modal: bool = False) -> Formula:
        """A named formula, or formula text parsed against the workspace"""
        if text in self.formulas:
            return self.formulas[text]
        if modal:
            return parse_formula(text, quantifiers=self.registry.names(), props=self.props(),
                                 source="<command line>")
        return parse_formula(text, self.signature, quantifiers=self.registry.names(), source="<command line>")

    def generator_set(self, name: str, model: Any) -> GeneratorSet:
        spec = self._lookup(self.generators, "generator set", name)
        with _at(f"generators.{name}"):
            ctx = parse_context(spec.context, self.signature, source=f"generators.{name}")
            F = semantics_of(model).context(ctx)
            return make_generator_set(F, [make_sub(F, parts) for parts in spec.members])

    def instance(self, name: str) -> LosInstance:
        spec = self._lookup(self.instances, "instance", name)
        path = f"instances.{name}"
        with _at(path):
            family = {i: self.model(m) for i, m in spec.family}
            inst = LosInstance(family, self.filter(spec.filter), self.formula(spec.formula), self.registry,
                               name=name)
            if not spec.generators:
                return inst
            overrides = {}
            for g in spec.generators:
                gens = self.generator_set(g, inst.product)
                overrides[parse_context(self.generators[g].context, self.signature).sorts] = gens
            return replace(inst, generator_sets=overrides)

    def summary(self) -> Dict[str, Any]:
        return {
            "base": {"name": self.base.name, "objects": len(self.base.objects),
                     "morphisms": len(self.base.morphisms)},
            "sorts": list(self.signature.all_sorts()),
            "models": {n: {s: m.carrier(s).size() for s in m.sig.sorts} for n, m in sorted(self.models.items())},
            "coalgebras": {n: len(c.carrier) for n, c in sorted(self.coalgebras.items())},
            "morphisms": sorted(self.morphisms),
            "formulas": sorted(self.formulas),
            "filters": sorted(self.filters),
            "generators": sorted(self.generators),
            "instances": sorted(self.instances),
            "quantifiers": self.registry.names(),
        }


# Sections

def load_base(raw: Any, path: str = "base") -> FinCategory:
    if raw in (None, "terminal"):
        return terminal_category()
    if raw == "graph":
        return graph_category()
    raw = _mapping(raw, path)
    with _at(path):
        if "poset" in raw:
            spec = raw["poset"]
            cat = poset_category(spec.get("elements", []), [tuple(p) for p in spec.get("leq", [])],
                                 name=spec.get("name", "poset"))
        else:
            cat = FinCategory.build(raw.get("objects", []), [tuple(m) for m in raw.get("morphisms", [])],
                                    [tuple(c) for c in raw.get("compose", [])], name=raw.get("name", ""))
    report = check_category(cat)
    if not report.ok:
        first = report.violations[0]
        raise WorkspaceError(first.message, path, cause=first.code, **first.payload)
    return cat


def load_signature(raw: Any, path: str = "signature") -> Signature:
    raw = _mapping(raw, path)
    with _at(path):
        functions = {f: (tuple(spec[0]), spec[1]) for f, spec in _mapping(raw.get("functions"), path).items()}
        relations = {r: tuple(args) for r, args in _mapping(raw.get("relations"), path).items()}
        return Signature(tuple(raw.get("sorts", [])), functions, relations,
                         dict(_mapping(raw.get("power_sorts"), path)))


def _per_object(base: FinCategory, raw: Any, path: str) -> Mapping[str, Any]:
    """A bare list stands for the only object of a one-object base"""
    if isinstance(raw, list):
        if len(base.objects) != 1:
            raise WorkspaceError("per-object tables are needed over a base with several objects", path)
        return {base.objects[0]: raw}
    table = _mapping(raw, path)
    for obj in table:
        if not base.has_object(obj):
            raise WorkspaceError(f"unknown object {obj!r}", path)
    return table


def load_carrier(base: FinCategory, raw: Any, path: str) -> Presheaf:
    name = path.rsplit(".", 1)[-1]
    with _at(path):
        if isinstance(raw, dict) and "vertices" in raw:
            edges = {e: tuple(st) for e, st in _mapping(raw.get("edges"), path).items()}
            F = graph_presheaf(freeze(raw["vertices"]), edges, base if base.objects == ("V", "E") else None,
                               name=name)
        elif isinstance(raw, dict) and "elements" in raw:
            on_obj = {b: [freeze(x) for x in xs] for b, xs in _per_object(base, raw["elements"], path).items()}
            maps = {m: {freeze(x): freeze(y) for x, y in pairs} for m, pairs in _mapping(raw.get("maps"), path).items()}
            F = make_presheaf(base, on_obj, maps, name=name)
        else:
            on_obj = {b: [freeze(x) for x in xs] for b, xs in _per_object(base, raw, path).items()}
            F = make_presheaf(base, on_obj, name=name)
    if F.base != base:
        raise WorkspaceError("graph carriers need the graph base", path)
    _require_valid(check_presheaf(F), path)
    return F


def _as_tuple(entry: Any) -> Tuple[Any, ...]:
    return freeze(entry) if isinstance(entry, list) else (entry,)


def load_model(sig: Signature, base: FinCategory, name: str, raw: Any) -> SigmaStructure:
    path = f"models.{name}"
    raw = _mapping(raw, path)
    carriers = {s: load_carrier(base, c, f"{path}.carriers.{s}") for s, c in _mapping(raw.get("carriers"), path).items()}
    for s in sig.sorts:
        if s not in carriers:
            raise WorkspaceError(f"no carrier for sort {s!r}", f"{path}.carriers")
    functions = {}
    for f, table in _mapping(raw.get("functions"), path).items():
        per = {}
        for b, rows in _per_object(base, table, f"{path}.functions.{f}").items():
            per[b] = {freeze(row[:-1]): freeze(row[-1]) for row in rows}
        functions[f] = per
    relations = {}
    for r, table in _mapping(raw.get("relations"), path).items():
        relations[r] = {b: [_as_tuple(x) for x in rows]
                        for b, rows in _per_object(base, table, f"{path}.relations.{r}").items()}
    with _at(path):
        m = make_structure(sig, base, carriers, functions, relations, name=name)
    _require_valid(check_structure(m), path)
    return m


def load_functor(raw: Any, path: str) -> SetFunctor:
    raw = {"kind": raw} if isinstance(raw, str) else _mapping(raw, path)
    kind = raw.get("kind")
    with _at(path):
        if kind == "powerset":
            return PowersetFunctor()
        if kind == "kripke":
            return KripkeFunctor(raw.get("props", []))
        if kind == "exponent":
            return ExponentFunctor(raw.get("labels", []))
        if kind == "constant":
            return ConstantFunctor(freeze(v) for v in raw.get("values", []))
    raise WorkspaceError(f"unknown functor kind {kind!r}", path)


def _functor_value(functor: SetFunctor, raw: Any) -> Any:
    if isinstance(functor, PowersetFunctor):
        return frozenset(freeze(x) for x in raw)
    if isinstance(functor, KripkeFunctor):
        succ, labels = raw
        return frozenset(freeze(x) for x in succ), frozenset(labels)
    return freeze(raw)


def load_coalgebra(name: str, raw: Any) -> Coalgebra:
    path = f"coalgebras.{name}"
    raw = _mapping(raw, path)
    functor = load_functor(raw.get("functor"), f"{path}.functor")
    structure = {freeze(x): _functor_value(functor, y) for x, y in raw.get("structure", [])}
    valuation = {p: [freeze(x) for x in xs] for p, xs in _mapping(raw.get("valuation"), path).items()}
    with _at(path):
        return make_coalgebra(functor, [freeze(x) for x in raw.get("carrier", [])], structure, valuation, name)


def _component(src: Presheaf, dst: Presheaf, raw: Any, path: str) -> NatTrans:
    table = _per_object(src.base, raw, path)
    return NatTrans(src, dst, {b: {freeze(x): freeze(y) for x, y in table.get(b, [])} for b in src.base.objects})


def load_morphism(ws: Workspace, name: str, raw: Any) -> ModelMorphism:
    path = f"morphisms.{name}"
    raw = _mapping(raw, path)
    with _at(path):
        M, N = ws.model(raw.get("src")), ws.model(raw.get("dst"))
    comps = {}
    given = _mapping(raw.get("components"), path)
    for s in ws.signature.sorts:
        if s not in given:
            raise WorkspaceError(f"no component for sort {s!r}", f"{path}.components")
        comps[s] = _component(M.carrier(s), N.carrier(s), given[s], f"{path}.components.{s}")
    for pa, a in ws.signature.power_sorts.items():
        obj = M.base.objects[0]
        image = comps[a].components[obj]
        comps[pa] = NatTrans(M.carrier(pa), N.carrier(pa),
                             {obj: {S: frozenset(image[x] for x in S) for S in M.carrier(pa).on_obj[obj]}})
    mu = ModelMorphism(M, N, comps, name)
    with _at(path):
        _require_valid(check_model_morphism(mu), path)
    return mu


def load_formula(ws: Workspace, name: str, raw: Any, props: List[str]) -> Formula:
    path = f"formulas.{name}"
    if isinstance(raw, str):
        raw = {"text": raw}
    raw = _mapping(raw, path)
    text = raw.get("text", "")
    modal = raw.get("modal", False)
    context = parse_context(raw["context"], ws.signature, source=f"{path}.context") if "context" in raw else None
    return parse_formula(text, None if modal else ws.signature, context, quantifiers=ws.registry.names(),
                         props=props if modal else None, source=path)


def load_filter(name: str, raw: Any) -> Filter:
    path = f"filters.{name}"
    raw = _mapping(raw, path)
    index = [freeze(i) for i in raw.get("index_set", [])]
    with _at(path):
        if raw.get("frechet"):
            return materialize(frechet_description(index))
        if "principal" in raw:
            return make_principal(index, raw["principal"])
        if "generated_by" in raw:
            return generate_filter(index, raw["generated_by"])
        if "members" in raw:
            return make_filter(index, raw["members"])
    raise WorkspaceError("a filter needs principal, generated_by, members or frechet", path)


def load_generators(name: str, raw: Any) -> GeneratorSpec:
    path = f"generators.{name}"
    raw = _mapping(raw, path)
    members = tuple({b: tuple(freeze(x) for x in xs) for b, xs in _mapping(m, f"{path}.members").items()}
                    for m in raw.get("members", []))
    return GeneratorSpec(raw.get("context", "[]"), members, raw.get("model"))


def load_instance(ws: Workspace, name: str, raw: Any) -> InstanceSpec:
    path = f"instances.{name}"
    raw = _mapping(raw, path)
    family = raw.get("family", [])
    if isinstance(family, list):
        pairs = tuple((k + 1, m) for k, m in enumerate(family))
    else:
        pairs = tuple((_index_key(k), m) for k, m in _mapping(family, f"{path}.family").items())
    spec = InstanceSpec(pairs, raw.get("filter", ""), raw.get("formula", ""), tuple(raw.get("generators", [])))
    with _at(path):
        for _, m in pairs:
            ws.model(m)
        ws.filter(spec.filter)
        ws.formula(spec.formula)
        for g in spec.generators:
            ws._lookup(ws.generators, "generator set", g)
    return spec


def build_registry(raw: Mapping[str, Any], props: List[str]) -> QuantifierRegistry:
    registry = modal_registry(props) if props else default_registry()
    for k, d in enumerate(raw.get("duals", [])):
        with _at(f"duals.{k}"):
            for q in (d["quantifier"], d["dual"]):
                if q not in registry:
                    raise UnknownIdentifier(f"unknown quantifier {q!r}")
            registry = registry.register_dual(d["quantifier"], d["dual"], d.get("signs", []))
    return registry


def parse_workspace(data: Mapping[str, Any], path: str = "<workspace>") -> Workspace:
    data = _mapping(data, "")
    version = data.get("version")
    if version != SCHEMA_VERSION:
        raise WorkspaceError(f"unsupported workspace version {version!r}", "version")
    base = load_base(data.get("base"))
    sig = load_signature(data.get("signature"))
    ws = Workspace(path, base, sig, raw=data)
    for name, raw in sorted(_mapping(data.get("models"), "models").items()):
        ws.models[name] = load_model(sig, base, name, raw)
    for name, raw in sorted(_mapping(data.get("coalgebras"), "coalgebras").items()):
        ws.coalgebras[name] = load_coalgebra(name, raw)
    props = ws.props()
    ws.registry = build_registry(data, props)
    for name, raw in sorted(_mapping(data.get("morphisms"), "morphisms").items()):
        ws.morphisms[name] = load_morphism(ws, name, raw)
    for name, raw in sorted(_mapping(data.get("formulas"), "formulas").items()):
        ws.formulas[name] = load_formula(ws, name, raw, props)
    for name, raw in sorted(_mapping(data.get("filters"), "filters").items()):
        ws.filters[name] = load_filter(name, raw)
    for name, raw in sorted(_mapping(data.get("generators"), "generators").items()):
        ws.generators[name] = load_generators(name, raw)
    for name, raw in sorted(_mapping(data.get("instances"), "instances").items()):
        ws.instances[name] = load_instance(ws, name, raw)
    logger.info("loaded workspace %s: %d models, %d formulas, %d instances",
                path, len(ws.models), len(ws.formulas), len(ws.instances))
    return ws


def load_workspace(path: str) -> Workspace:
    """Read, parse and validate a workspace file"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise WorkspaceError(f"cannot read workspace: {e.strerror}", path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno, source=path)
    return parse_workspace(data, path)
