"""
Deterministic rendering of command reports as JSON or a short human summary
"""
import json
import logging
from dataclasses import fields, is_dataclass
from typing import Any, Dict, List

from .cat_core import Morphism, NatTrans, Presheaf, ValidationReport, elem_key, sort_elems
from .errors import ToposLosError
from .fol_model import Context, CtxMorphism, ModelMorphism, SigmaStructure
from .formula_sem import Formula
from .los_check import FAIL, ConditionReport
from .modal_coalg import Coalgebra
from .parser_formula import format_context, format_formula
from .sub_heyting import GeneratorSet, SubPresheaf
from .ultra_filt import Filter

logger = logging.getLogger(__name__)


def _key(value: Any) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(encode(value), sort_keys=True, ensure_ascii=False)


def encode_elements(xs) -> List[Any]:
    return [encode(x) for x in sort_elems(xs)]


def encode(value: Any) -> Any:
    """A JSON-ready value with every collection in a fixed order"""
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, ConditionReport):
        out = {"condition": value.condition, "verdict": value.verdict}
        if value.reason:
            out["reason"] = value.reason
        if value.counterexample:
            out["counterexample"] = encode(value.counterexample)
        if value.details:
            out["details"] = encode(value.details)
        if value.children:
            out["children"] = [encode(c) for c in value.children]
        return out
    if isinstance(value, SubPresheaf):
        return {b: encode_elements(value.parts[b]) for b in value.ambient.base.objects}
    if isinstance(value, GeneratorSet):
        return [encode(a) for a in value.members]
    if isinstance(value, Presheaf):
        return {"name": value.name, "elements": {b: encode_elements(value.on_obj[b]) for b in value.base.objects}}
    if isinstance(value, NatTrans):
        return {b: [[encode(x), encode(value.components[b][x])] for x in sort_elems(value.components[b])]
                for b in value.src.base.objects}
    if isinstance(value, Formula):
        return format_formula(value)
    if isinstance(value, Context):
        return format_context(value)
    if isinstance(value, CtxMorphism):
        return repr(value)
    if isinstance(value, (SigmaStructure, Coalgebra, ModelMorphism)):
        return value.name
    if isinstance(value, Morphism):
        return value.name
    if isinstance(value, Filter):
        return encode(value.to_dict())
    if isinstance(value, ValidationReport):
        return {"subject": value.subject, "ok": value.ok,
                "violations": [{"code": v.code, "message": v.message, **encode(v.payload)}
                               for v in value.violations]}
    if isinstance(value, ToposLosError):
        return encode(value.to_dict())
    if isinstance(value, dict):
        return {_key(k): encode(v) for k, v in sorted(value.items(), key=lambda kv: elem_key(kv[0]))}
    if isinstance(value, (set, frozenset)):
        return encode_elements(value)
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if is_dataclass(value):
        return {f.name: encode(getattr(value, f.name)) for f in fields(value) if not f.name.startswith("_")}
    return str(value)


def to_json(report: Dict[str, Any]) -> str:
    return json.dumps(encode(report), sort_keys=True, indent=2, ensure_ascii=False)


def _summarize(report: ConditionReport, depth: int, lines: List[str]) -> None:
    mark = {"pass": "ok", "fail": "FAIL", "skipped": "skip"}.get(report.verdict, report.verdict)
    line = f"{'  ' * depth}{report.condition}: {mark}"
    if report.reason:
        line += f" ({report.reason})"
    lines.append(line)
    for child in report.children:
        _summarize(child, depth + 1, lines)


def to_human(report: Dict[str, Any]) -> str:
    """Indented verdict tree for condition reports; key/value lines otherwise"""
    lines = [f"{report.get('command', 'report')}: {report.get('status', '')}".rstrip(": ")]
    for key in sorted(report):
        if key in ("command", "status"):
            continue
        value = report[key]
        if isinstance(value, ConditionReport):
            _summarize(value, 1, lines)
        elif isinstance(value, ToposLosError):
            where = value.location()
            lines.append(f"  error {value.code}: {value.message}" + (f" at {where}" if where else ""))
        else:
            text = json.dumps(encode(value), sort_keys=True, ensure_ascii=False)
            lines.append(f"  {key}: {text}")
    return "\n".join(lines)


def status_of(report: Any) -> str:
    if isinstance(report, ConditionReport):
        return "fail" if report.verdict == FAIL else "pass"
    return "ok"
