import os
import sys
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import functools
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import click

from src.cat_core import elem_key, is_epi, sort_elems
from src.errors import MalformedInput, ToposLosError
from src.file_handlers.workspace_handler import Workspace, load_workspace
from src.fol_model import prefix_projection
from src.formula_sem import interpret_formula, semantics_of, validates
from src.los_check import CONDITIONS, check_conditions, los_sentence_corollary, los_verify, proof_steps
from src.modal_coalg import Coalgebra, eval_box, eval_diamond, eval_nabla
from src.oracles import (class_counts, count_subobjects, epi_by_cancellation, exists_by_meet, forall_by_join,
                         implies_by_join, kripke_box, kripke_diamond, kripke_nabla, subsets_of)
from src.parser_formula import parse_context
from src.report_writer import status_of, to_human, to_json
from src.settings_manager import DEFAULT_MAX_ENUM, ENV_MAX_ENUM, REPORT_FORMATS, SettingsManager, bounded
from src.sub_heyting import enumerate_sub, exists_along, forall_along, sub_implies, validate_generator_set
from src.ultra_filt import check_representative_independence, filtered_product_models

logger = logging.getLogger("toposlos")

EXIT_CHECK_FAILED = 1


@dataclass
class CliState:
    settings_manager: SettingsManager
    report_format: str
    workspace_path: Optional[str] = None
    _workspace: Optional[Workspace] = field(default=None, repr=False)

    def workspace(self) -> Workspace:
        if self._workspace is None:
            path = self.workspace_path or self.settings_manager.settings.last_workspace
            if not path:
                raise MalformedInput("no workspace given; use --workspace or toposlos check <workspace>")
            self._workspace = load_workspace(path)
        return self._workspace

    def emit(self, report: Dict[str, Any]) -> None:
        click.echo(to_json(report) if self.report_format == "json" else to_human(report))


def configure_logging(verbose: bool, level: str) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, level.upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def reports_errors(command: str) -> Callable:
    """Turn library errors into an error report and the matching exit code"""
    def decorate(fn):
        @functools.wraps(fn)
        @click.pass_obj
        def wrapper(state: CliState, *args, **kwargs):
            try:
                report = fn(state, *args, **kwargs)
            except ToposLosError as e:
                logger.error("%s failed: %s", command, e)
                state.emit({"command": command, "status": "error", "error": e})
                sys.exit(e.exit_code)
            report.setdefault("command", command)
            state.emit(report)
            if report.get("status") == "fail":
                sys.exit(EXIT_CHECK_FAILED)
        return wrapper
    return decorate


@click.group()
@click.option("-w", "--workspace", "workspace_path", type=click.Path(dir_okay=False),
              help="Workspace JSON document.")
@click.option("--format", "report_format", type=click.Choice(REPORT_FORMATS), default=None,
              help="Report format (default from settings, json).")
@click.option("--max-enum", type=click.IntRange(min=1), default=None,
              help=f"Enumeration bound; overrides {ENV_MAX_ENUM}.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging on stderr.")
@click.pass_context
def cli(ctx: click.Context, workspace_path, report_format, max_enum, verbose):
    """Finite checks of Łoś's theorem for first-order logic in presheaf toposes."""
    settings_manager = SettingsManager()
    settings = settings_manager.settings
    configure_logging(verbose, settings.log_level)
    if max_enum is not None:
        ctx.with_resource(bounded(max_enum))
    elif ENV_MAX_ENUM not in os.environ and settings.max_enum != DEFAULT_MAX_ENUM:
        ctx.with_resource(bounded(settings.max_enum))
    ctx.obj = CliState(settings_manager, report_format or settings.report_format, workspace_path)


@cli.command()
@click.argument("workspace", required=False, type=click.Path(dir_okay=False))
@click.option("--remember", is_flag=True, help="Store the workspace as the default for later commands.")
@reports_errors("check")
def check(state: CliState, workspace, remember):
    """Load and validate a workspace."""
    if workspace:
        state.workspace_path = workspace
    ws = state.workspace()
    generators = {}
    for name, spec in sorted(ws.generators.items()):
        if spec.model:
            generators[name] = validate_generator_set(ws.generator_set(name, ws.structure(spec.model)))
    if remember:
        state.settings_manager.update_settings(last_workspace=os.path.abspath(ws.path))
    return {"status": "ok", "workspace": ws.path, "summary": ws.summary(), "generators": generators}


@cli.command(name="eval")
@click.option("-m", "--model", "model_name", required=True, help="Structure or coalgebra name.")
@click.option("-f", "--formula", "formula_text", required=True, help="Formula name or formula text.")
@reports_errors("eval")
def eval_command(state: CliState, model_name, formula_text):
    """Interpret a formula in one structure."""
    ws = state.workspace()
    model = ws.structure(model_name)
    phi = ws.formula_or_text(formula_text, modal=isinstance(model, Coalgebra))
    value = interpret_formula(model, phi, ws.registry)
    ambient = semantics_of(model).context(phi.context)
    return {"status": "ok", "model": model_name, "formula": phi, "value": value,
            "size": value.size(), "ambient_size": ambient.size(),
            "valid": validates(model, phi, ws.registry)}


def _split_names(raw: str) -> List[str]:
    names = [n.strip() for n in raw.split(",") if n.strip()]
    if not names:
        raise MalformedInput("at least one model name is needed")
    return names


@cli.command()
@click.option("-M", "--models", "model_names", required=True, help="Comma separated model names.")
@click.option("--filter", "filter_name", required=True, help="Filter name.")
@reports_errors("product")
def product(state: CliState, model_names, filter_name):
    """Filtered product of structures with its class tables."""
    ws = state.workspace()
    names = _split_names(model_names)
    F = ws.filter(filter_name)
    if len(names) != len(F.index_set):
        raise MalformedInput(f"filter {filter_name} indexes {len(F.index_set)} models, got {len(names)}")
    family = {i: ws.model(n) for i, n in zip(F.index_set, names)}
    result = filtered_product_models(family, F)
    classes = {}
    for s in sorted(result.class_index):
        classes[s] = {}
        for b, index in result.class_index[s].items():
            grouped: Dict[Any, List[Any]] = {}
            for t, rep in index.items():
                grouped.setdefault(rep, []).append(t)
            classes[s][b] = [{"representative": rep, "members": sort_elems(ts)}
                             for rep, ts in sorted(grouped.items(), key=lambda kv: elem_key(kv[0]))]
    M = result.product
    return {"status": "ok", "filter": F, "models": dict(zip(F.index_set, names)), "classes": classes,
            "class_counts": {s: {b: len(M.carrier(s).on_obj[b]) for b in M.base.objects} for s in M.sig.sorts},
            "relations": {r: M.relations[r] for r in sorted(M.relations)},
            "independence": check_representative_independence(result)}


@cli.command()
@click.option("--instance", "instance_name", required=True)
@click.option("--only", multiple=True, type=click.Choice(CONDITIONS), help="Restrict to these conditions.")
@reports_errors("conditions")
def conditions(state: CliState, instance_name, only):
    """Exhaustive semantical conditions of a Łoś instance."""
    inst = state.workspace().instance(instance_name)
    report = check_conditions(inst, only or None)
    return {"status": status_of(report), "instance": instance_name, "report": report}


@cli.command()
@click.option("--instance", "instance_name", required=True)
@click.option("--force", is_flag=True, help="Run even when the hypotheses fail.")
@click.option("--finiteness", is_flag=True, help="Also certify the finiteness condition.")
@click.option("--steps", is_flag=True, help="Also run each proof step on its own.")
@reports_errors("los")
def los(state: CliState, instance_name, force, finiteness, steps):
    """Verify the Łoś biconditional on every generator."""
    inst = state.workspace().instance(instance_name)
    report = los_verify(inst, force=force, with_finiteness=finiteness)
    out = {"status": status_of(report), "instance": instance_name, "report": report}
    if steps:
        out["steps"] = proof_steps(inst)
    if not len(inst.formula.context):
        try:
            out["sentence"] = los_sentence_corollary(inst)
        except ToposLosError as e:
            out["sentence"] = e
    return out


# Oracles

@cli.group()
def oracle():
    """Cross-check direct constructions against brute-force oracles."""


def _agreement(pairs) -> Dict[str, Any]:
    mismatches = [{"input": x, "direct": a, "oracle": b} for x, a, b in pairs if a != b]
    return {"status": "fail" if mismatches else "ok", "checked": len(pairs), "mismatches": mismatches[:5]}


@oracle.command()
@click.option("-m", "--model", "model_name", required=True)
@click.option("-c", "--context", "context_text", required=True, help="Context such as [x:s].")
@reports_errors("oracle subobjects")
def subobjects(state: CliState, model_name, context_text):
    """Count and Heyting implication of Sub(context) against enumeration."""
    ws = state.workspace()
    F = semantics_of(ws.model(model_name)).context(parse_context(context_text, ws.signature))
    subs = enumerate_sub(F)
    count = count_subobjects(F)
    pairs = [((a, b), sub_implies(a, b), implies_by_join(a, b)) for a, b in itertools.product(subs, repeat=2)]
    out = _agreement(pairs)
    out["count"] = {"direct": len(subs), "oracle": count}
    if len(subs) != count:
        out["status"] = "fail"
    return out


@oracle.command()
@click.option("-m", "--model", "model_name", required=True)
@click.option("-c", "--context", "context_text", required=True, help="Source context of the projection.")
@click.option("--keep", type=int, required=True, help="Number of leading variables the projection keeps.")
@reports_errors("oracle quantifiers")
def quantifiers(state: CliState, model_name, context_text, keep):
    """∀ and ∃ along a projection against their adjoint definitions."""
    ws = state.workspace()
    m = ws.model(model_name)
    t = semantics_of(m).ctx_morphism(prefix_projection(parse_context(context_text, ws.signature), keep))
    pairs = []
    for a in enumerate_sub(t.src):
        pairs.append((("forall", a), forall_along(t, a), forall_by_join(t, a)))
        pairs.append((("exists", a), exists_along(t, a), exists_by_meet(t, a)))
    return _agreement(pairs)


@oracle.command()
@click.option("-m", "--model", "model_name", required=True, help="Coalgebra name.")
@reports_errors("oracle modal")
def modal(state: CliState, model_name):
    """Box, diamond and ∇ against the Kripke relation."""
    c = state.workspace().structure(model_name)
    if not isinstance(c, Coalgebra):
        raise MalformedInput(f"{model_name} is not a coalgebra")
    subsets = subsets_of(c.carrier)
    pairs = []
    for a in subsets:
        pairs.append((("box", a), eval_box(c, a), kripke_box(c, a)))
        pairs.append((("diamond", a), eval_diamond(c, a), kripke_diamond(c, a)))
    for a, b in itertools.combinations_with_replacement(subsets, 2):
        pairs.append((("nabla", a, b), eval_nabla(c, [a, b]), kripke_nabla(c, [a, b])))
    return _agreement(pairs)


@oracle.command()
@click.option("-M", "--models", "model_names", required=True)
@click.option("--filter", "filter_name", required=True)
@reports_errors("oracle classes")
def classes(state: CliState, model_names, filter_name):
    """Class counts of a filtered product against pairwise comparison."""
    ws = state.workspace()
    names = _split_names(model_names)
    F = ws.filter(filter_name)
    if len(names) != len(F.index_set):
        raise MalformedInput(f"filter {filter_name} indexes {len(F.index_set)} models, got {len(names)}")
    family = {i: ws.model(n) for i, n in zip(F.index_set, names)}
    M = filtered_product_models(family, F).product
    pairs = []
    for s in M.sig.sorts:
        expected = class_counts(F, [family[i].carrier(s) for i in F.index_set])
        for b in M.base.objects:
            pairs.append(((s, b), len(M.carrier(s).on_obj[b]), expected[b]))
    return _agreement(pairs)


@oracle.command()
@click.option("--morphism", "morphism_name", required=True)
@reports_errors("oracle epi")
def epi(state: CliState, morphism_name):
    """Componentwise surjectivity against cancellation into Ω."""
    mu = state.workspace().morphism(morphism_name)
    pairs = [(s, is_epi(t), epi_by_cancellation(t)) for s, t in sorted(mu.components.items())]
    return _agreement(pairs)


def main():
    cli(prog_name="toposlos")


if __name__ == "__main__":
    main()
