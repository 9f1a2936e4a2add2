"""
Concrete syntax for formulas in context
"""
import logging
from typing import Any, Iterable, List, Optional, Sequence, Tuple

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from .errors import MalformedInput, ParseError, ToposLosError
from .fol_model import (EMPTY_CONTEXT, App, Context, CtxMorphism, Signature, Term, Var, app, identity_ctx_morphism,
                        prefix_projection)
from .formula_sem import (Basic, Bot, Conj, Disj, Equation, Formula, Imp, Membership, Neg, Node, PropVar, Pull,
                          Quant, RelationAtom, Top, check_formula)

logger = logging.getLogger(__name__)

GRAMMAR = r"""
start: [context] formula

context: "[" [binders] "]"

?formula: disj
    | disj _implies formula                            -> imp

?disj: conj
    | disj _or conj                                    -> disj

?conj: unary
    | conj _and unary                                  -> conj

?unary: _not unary                                     -> neg
    | quantifier_kw binders "." unary                  -> quantified
    | quantifier_kw "[" [binders] "]" "(" [args] ")"   -> along
    | NAME "[" binders "]" "(" [args] ")"              -> along
    | "pull" "[" assignment ("," assignment)* "]" "(" formula ")"  -> pull
    | _top "(" ")"                                     -> top_call
    | _top                                             -> top
    | _bot                                             -> bot
    | operand "=" operand                              -> eq
    | operand _in operand                              -> mem
    | operand
    | "(" formula ")"

?operand: NAME                                         -> name
    | NAME "(" [args] ")"                              -> call

args: formula ("," formula)*
binders: binder ("," binder)*
binder: NAME ":" NAME
assignment: NAME ":=" operand

_implies: "implies" | "=>" | "⇒"
_or: "or" | "|" | "∨"
_and: "and" | "&" | "∧"
_not: "not" | "~" | "¬"
_in: "in" | "∈"

!quantifier_kw: "forall" | "exists" | "∀" | "∃"
_top: "top" | "⊤"
_bot: "bot" | "⊥"

NAME: /[A-Za-z0-9_][A-Za-z0-9_']*/

COMMENT: /#[^\n]*/
%import common.WS
%ignore WS
%ignore COMMENT
"""

KEYWORD_QUANTIFIERS = ("forall", "exists")


@v_args(inline=True)
class _RawTree(Transformer):
    """Name-agnostic syntax tree; names are resolved against the signature afterwards"""

    def start(self, ctx, body):
        return ctx, body

    def context(self, binders=None):
        return binders or []

    def binders(self, *items):
        return list(items)

    def binder(self, name, sort):
        return name, sort

    def args(self, *items):
        return list(items)

    def assignment(self, name, value):
        return name, value

    def imp(self, a, b):
        return ("imp", a, b)

    def disj(self, a, b):
        return ("or", a, b)

    def conj(self, a, b):
        return ("and", a, b)

    def neg(self, a):
        return ("not", a)

    def quantifier_kw(self, tok):
        return Token("NAME", {"∀": "forall", "∃": "exists"}.get(str(tok), str(tok)), line=tok.line, column=tok.column)

    def quantified(self, kind, binders, body):
        return ("along", kind, binders, [body])

    def along(self, name, binders, args):
        return ("along", name, binders or [], args or [])

    def pull(self, *items):
        *assignments, child = items
        return ("pull", list(assignments), child)

    def top_call(self):
        return ("call", Token("NAME", "top"), [])

    def top(self):
        return ("top",)

    def bot(self):
        return ("bot",)

    def eq(self, a, b):
        return ("eq", a, b)

    def mem(self, a, b):
        return ("in", a, b)

    def name(self, tok):
        return ("name", tok)

    def call(self, tok, args):
        return ("call", tok, args or [])


_parser = Lark(GRAMMAR, parser="lalr", maybe_placeholders=True)


def _position(raw: Any) -> Tuple[int, int]:
    if isinstance(raw, Token):
        return raw.line or 0, raw.column or 0
    if isinstance(raw, tuple):
        for part in raw[1:]:
            if isinstance(part, (Token, tuple)):
                return _position(part)
    return 0, 0


class _Resolver:
    def __init__(self, sig: Optional[Signature], quantifiers: Iterable[str], props: Optional[Iterable[str]],
                 source: str):
        self.sig = sig
        self.quantifiers = set(quantifiers) | set(KEYWORD_QUANTIFIERS)
        self.props = None if props is None else set(props)
        self.source = source

    def error(self, message: str, at: Any) -> ParseError:
        line, column = _position(at)
        return ParseError(message, line, column, self.source)

    def context(self, binders: Sequence[Tuple[Token, Token]], base: Context = EMPTY_CONTEXT) -> Context:
        pairs = []
        for name, sort in binders:
            if self.sig is not None and not self.sig.has_sort(str(sort)):
                raise self.error(f"unknown sort {sort!s}", sort)
            pairs.append((str(name), str(sort)))
        try:
            return base.extend(pairs)
        except MalformedInput as e:
            raise self.error(e.message, binders[0][0])

    def _is_term_head(self, name: str, ctx: Context) -> bool:
        return name in ctx.names or (self.sig is not None and name in self.sig.functions)

    def formula(self, raw: Any, ctx: Context) -> Node:
        kind = raw[0]
        if kind == "top":
            return Top()
        if kind == "bot":
            return Bot()
        if kind == "and":
            return Conj(self.formula(raw[1], ctx), self.formula(raw[2], ctx))
        if kind == "or":
            return Disj(self.formula(raw[1], ctx), self.formula(raw[2], ctx))
        if kind == "imp":
            return Imp(self.formula(raw[1], ctx), self.formula(raw[2], ctx))
        if kind == "not":
            return Neg(self.formula(raw[1], ctx))
        if kind == "along":
            _, name, binders, children = raw
            if str(name) not in self.quantifiers:
                raise self.error(f"unknown quantifier {name!s}", name)
            inner = self.context(binders, ctx)
            g = prefix_projection(inner, len(ctx))
            return Quant(str(name), g, tuple(self.formula(c, inner) for c in children))
        if kind == "pull":
            _, assignments, child = raw
            terms = [self.term(value, ctx) for _, value in assignments]
            try:
                dst = Context((str(n), t.sort) for (n, _), t in zip(assignments, terms))
            except MalformedInput as e:
                raise self.error(e.message, assignments[0][0])
            return Pull(CtxMorphism(ctx, dst, tuple(terms)), self.formula(child, dst))
        if kind == "eq":
            return Basic(Equation(self.term(raw[1], ctx), self.term(raw[2], ctx)))
        if kind == "in":
            return Basic(Membership(self.term(raw[1], ctx), self.term(raw[2], ctx)))
        if kind == "call":
            _, tok, args = raw
            name = str(tok)
            if self.sig is not None and name in self.sig.relations:
                return Basic(RelationAtom(name, tuple(self.term(a, ctx) for a in args)))
            if name in self.quantifiers:
                return Quant(name, identity_ctx_morphism(ctx), tuple(self.formula(a, ctx) for a in args))
            raise self.error(f"{name} is neither a relation nor a quantifier", tok)
        if kind == "name":
            tok = raw[1]
            name = str(tok)
            if self._is_term_head(name, ctx):
                raise self.error(f"the term {name} is not a formula; expected '=' or 'in' after it", tok)
            if self.props is not None and name not in self.props:
                raise self.error(f"unknown proposition {name}", tok)
            return Basic(PropVar(name))
        raise self.error("unexpected syntax", raw)

    def term(self, raw: Any, ctx: Context) -> Term:
        kind = raw[0]
        if kind == "name":
            tok = raw[1]
            name = str(tok)
            if name in ctx.names:
                return Var(name, ctx.sorts[ctx.index(name)])
            if self.sig is not None and name in self.sig.functions:
                return self._app(name, [], tok)
            raise self.error(f"unknown variable or constant {name}", tok)
        if kind == "call":
            _, tok, args = raw
            if self.sig is None or str(tok) not in self.sig.functions:
                raise self.error(f"unknown function symbol {tok!s}", tok)
            return self._app(str(tok), [self.term(a, ctx) for a in args], tok)
        raise self.error("expected a term", raw)

    def _app(self, name: str, args: List[Term], tok: Token) -> App:
        try:
            return app(self.sig, name, *args)
        except ToposLosError as e:
            raise self.error(e.message, tok)


def _raw_parse(text: str, source: str):
    try:
        return _RawTree().transform(_parser.parse(text))
    except UnexpectedEOF as e:
        lines = text.splitlines() or [""]
        raise ParseError("unexpected end of input", len(lines), len(lines[-1]) + 1, source) from e
    except UnexpectedCharacters as e:
        raise ParseError(f"unexpected character {e.char!r}", e.line, e.column, source) from e
    except UnexpectedToken as e:
        if e.token.type == "$END":
            lines = text.splitlines() or [""]
            raise ParseError("unexpected end of input", len(lines), len(lines[-1]) + 1, source) from e
        raise ParseError(f"unexpected {e.token!s}", e.line, e.column, source) from e
    except UnexpectedInput as e:
        raise ParseError("syntax error", e.line, e.column, source) from e


def parse_formula(text: str, sig: Optional[Signature] = None, context: Optional[Context] = None,
                  quantifiers: Iterable[str] = (), props: Optional[Iterable[str]] = None,
                  source: str = "<formula>") -> Formula:
    """Parse ``[x:s, …] φ``; a leading context overrides ``context``.

    Names applied to arguments are relations when the signature declares
    them and quantifiers otherwise; bare names that are neither variables
    nor constants are propositional variables.
    """
    binders, raw = _raw_parse(text, source)
    resolver = _Resolver(sig, quantifiers, props, source)
    if binders is not None:
        ctx = resolver.context(binders)
    else:
        ctx = context if context is not None else Context()
    phi = Formula(ctx, resolver.formula(raw, ctx))
    check_formula(phi, sig)
    logger.debug("parsed %s", source)
    return phi


def parse_context(text: str, sig: Optional[Signature] = None, source: str = "<context>") -> Context:
    """``x:s, y:t`` or ``[x:s, y:t]``"""
    body = text.strip()
    if not body.startswith("["):
        body = f"[{body}]"
    binders, _ = _raw_parse(body + " top", source)
    return _Resolver(sig, (), None, source).context(binders or [])


# Printing

def format_context(ctx: Context) -> str:
    return "[" + ", ".join(f"{n}:{s}" for n, s in ctx.vars) + "]"


def _format_atom(a) -> str:
    if isinstance(a, Equation):
        return f"{a.lhs} = {a.rhs}"
    if isinstance(a, Membership):
        return f"{a.elem} in {a.collection}"
    if isinstance(a, RelationAtom):
        return f"{a.rel}({', '.join(map(str, a.args))})"
    return a.name


def format_node(node: Node) -> str:
    if isinstance(node, Top):
        return "top"
    if isinstance(node, Bot):
        return "bot"
    if isinstance(node, Basic):
        return _format_atom(node.atom)
    if isinstance(node, Conj):
        return f"({format_node(node.left)} and {format_node(node.right)})"
    if isinstance(node, Disj):
        return f"({format_node(node.left)} or {format_node(node.right)})"
    if isinstance(node, Imp):
        return f"({format_node(node.left)} implies {format_node(node.right)})"
    if isinstance(node, Neg):
        return f"not ({format_node(node.child)})"
    if isinstance(node, Pull):
        h = node.morphism
        bindings = ", ".join(f"{n} := {t}" for (n, _), t in zip(h.dst.vars, h.terms))
        return f"pull[{bindings}]({format_node(node.child)})"
    if isinstance(node, Quant):
        f = node.morphism
        children = ", ".join(format_node(c) for c in node.children)
        if not f.is_prefix_projection():
            raise MalformedInput(f"{node.name} along {f!r} has no concrete syntax")
        bound = f.src.vars[len(f.dst):]
        if not bound and node.name not in KEYWORD_QUANTIFIERS:
            return f"{node.name}({children})"
        return f"{node.name}[{', '.join(f'{n}:{s}' for n, s in bound)}]({children})"
    raise MalformedInput(f"unknown formula node {node!r}")


def format_formula(phi: Formula) -> str:
    body = format_node(phi.body)
    return f"{format_context(phi.context)} {body}" if len(phi.context) else body
