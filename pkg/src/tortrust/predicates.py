"""Predicate language over world instances.

Grammar (standard precedence, not > and > or):

    expr     := or
    or       := and ("or" and)*
    and      := unary ("and" unary)*
    unary    := "not" unary | atom
    atom     := "(" expr ")" | typetest | idtest | attrcmp | structtest
    typetest := "is" IDENT
    idtest   := "id" "in" setlit
    attrcmp  := "attr" "(" STRING ")" CMP literal
              | "attr" "(" STRING ")" "in" setlit
    structtest := "child_count" "(" expr ")" CMP INT
                | "has_parent" "(" expr ")"
                | "has_child" "(" expr ")"
    setlit   := "{" (literal ("," literal)*)? "}"
    literal  := STRING | NUMBER
    CMP      := "=" | "!=" | "<" | "<=" | ">" | ">="

Type names are written in identifier form: spaces, slashes and hyphens
dropped ("Router/Switch" -> RouterSwitch).  A comparison against a missing
attribute is false and logs a warning.  Structural tests (child_count,
has_parent, has_child) walk the world's edges and are rejected when a
predicate is evaluated in structural-belief context.
"""

import logging
import re
from dataclasses import dataclass

from .errors import PredicateSyntaxError, StructuralContextError
from .ontology import normalize_type_name

log = logging.getLogger(__name__)

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=")


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    inner: object


@dataclass(frozen=True)
class IsType:
    name: str


@dataclass(frozen=True)
class IdIn:
    ids: frozenset


@dataclass(frozen=True)
class AttrCmp:
    name: str
    op: str
    value: object


@dataclass(frozen=True)
class AttrIn:
    name: str
    values: frozenset


@dataclass(frozen=True)
class ChildCount:
    pred: object
    op: str
    count: int


@dataclass(frozen=True)
class HasParent:
    pred: object


@dataclass(frozen=True)
class HasChild:
    pred: object


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Predicate:
    """A parsed predicate; `text` is the exact source it parses back from."""
    text: str
    root: object

    def __bool__(self):
        raise TypeError("evaluate predicates with eval_predicate, not bool()")


TOP = Predicate("", Const(True))


# --- Lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|[=<>(){},])
""", re.VERBOSE)

_KEYWORDS = {"and", "or", "not", "is", "id", "in"}


@dataclass(frozen=True)
class _Token:
    kind: str
    value: object
    line: int
    column: int


def _tokenize(text):
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PredicateSyntaxError(
                f"unexpected character {text[pos]!r}",
                line, pos - line_start + 1)
        column = pos - line_start + 1
        if m.lastgroup == "ws":
            chunk = m.group()
            if "\n" in chunk:
                line += chunk.count("\n")
                line_start = pos + chunk.rindex("\n") + 1
        elif m.lastgroup == "string":
            raw = m.group()
            try:
                value = raw[1:-1].encode().decode("unicode_escape")
            except UnicodeDecodeError:
                raise PredicateSyntaxError("bad string escape", line, column)
            tokens.append(_Token("string", value, line, column))
        elif m.lastgroup == "number":
            raw = m.group()
            value = float(raw) if "." in raw else int(raw)
            tokens.append(_Token("number", value, line, column))
        elif m.lastgroup == "ident":
            word = m.group()
            kind = word if word in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, line, column))
        else:
            tokens.append(_Token(m.group(), m.group(), line, column))
        pos = m.end()
    tokens.append(_Token("eof", None, line, len(text) - line_start + 1))
    return tokens


# --- Parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind, what=None):
        if self.cur.kind != kind:
            raise PredicateSyntaxError(
                f"expected {what or kind}, found {self._describe(self.cur)}",
                self.cur.line, self.cur.column)
        return self.advance()

    @staticmethod
    def _describe(tok):
        if tok.kind == "eof":
            return "end of input"
        return repr(tok.value)

    def fail(self, message):
        raise PredicateSyntaxError(message, self.cur.line, self.cur.column)

    def parse_expr(self):
        node = self.parse_and()
        items = [node]
        while self.cur.kind == "or":
            self.advance()
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self):
        items = [self.parse_unary()]
        while self.cur.kind == "and":
            self.advance()
            items.append(self.parse_unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_unary(self):
        if self.cur.kind == "not":
            self.advance()
            return Not(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self):
        tok = self.cur
        if tok.kind == "(":
            self.advance()
            node = self.parse_expr()
            self.expect(")")
            return node
        if tok.kind == "is":
            self.advance()
            name = self.expect("ident", "a type name")
            return IsType(name.value)
        if tok.kind == "id":
            self.advance()
            self.expect("in")
            return IdIn(frozenset(self.parse_setlit(strings_only=True)))
        if tok.kind == "ident" and tok.value == "attr":
            return self.parse_attr()
        if tok.kind == "ident" and tok.value == "child_count":
            self.advance()
            self.expect("(")
            inner = self.parse_expr()
            self.expect(")")
            op = self.parse_cmp()
            count = self.expect("number", "an integer")
            if not isinstance(count.value, int) or count.value < 0:
                raise PredicateSyntaxError("child_count needs a non-negative "
                                           "integer", count.line, count.column)
            return ChildCount(inner, op, count.value)
        if tok.kind == "ident" and tok.value in ("has_parent", "has_child"):
            self.advance()
            self.expect("(")
            inner = self.parse_expr()
            self.expect(")")
            return HasParent(inner) if tok.value == "has_parent" else HasChild(inner)
        self.fail(f"expected a test, found {self._describe(tok)}")

    def parse_attr(self):
        self.advance()
        self.expect("(")
        name = self.expect("string", "a quoted attribute name")
        self.expect(")")
        if self.cur.kind == "in":
            self.advance()
            return AttrIn(name.value, frozenset(self.parse_setlit()))
        op = self.parse_cmp()
        if self.cur.kind not in ("string", "number"):
            self.fail("expected a literal")
        lit = self.advance()
        return AttrCmp(name.value, op, lit.value)

    def parse_cmp(self):
        if self.cur.kind not in COMPARATORS:
            self.fail(f"expected a comparator, found {self._describe(self.cur)}")
        return self.advance().kind

    def parse_setlit(self, strings_only=False):
        self.expect("{")
        values = []
        if self.cur.kind != "}":
            while True:
                if self.cur.kind not in ("string", "number"):
                    self.fail("expected a literal in set")
                if strings_only and self.cur.kind != "string":
                    self.fail("expected a quoted id in set")
                values.append(self.advance().value)
                if self.cur.kind != ",":
                    break
                self.advance()
        self.expect("}")
        return values


def parse_predicate(text):
    if not text or not text.strip():
        raise PredicateSyntaxError("empty predicate", 1, 1)
    parser = _Parser(_tokenize(text))
    root = parser.parse_expr()
    if parser.cur.kind != "eof":
        parser.fail(f"unexpected {parser._describe(parser.cur)} after expression")
    return Predicate(text, root)


# --- Evaluation ------------------------------------------------------------

def eval_predicate(pred, world, node_id, ctx="trust"):
    """Evaluate `pred` on instance `node_id` of `world`.

    ctx is "trust" or "structural"; structural tests raise under
    "structural" because the world's final shape is not yet fixed there.
    """
    if node_id not in world.by_id:
        raise KeyError(f"unknown instance {node_id!r}")
    return _eval(pred.root, world, node_id, ctx)


def _eval(node, world, node_id, ctx):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, And):
        return all(_eval(n, world, node_id, ctx) for n in node.items)
    if isinstance(node, Or):
        return any(_eval(n, world, node_id, ctx) for n in node.items)
    if isinstance(node, Not):
        return not _eval(node.inner, world, node_id, ctx)
    if isinstance(node, IsType):
        type_name = world.type_of(node_id)
        return node.name == type_name or node.name == normalize_type_name(type_name)
    if isinstance(node, IdIn):
        return node_id in node.ids
    if isinstance(node, AttrCmp):
        value = world.by_id[node_id].attributes.get(node.name, _MISSING)
        if value is _MISSING:
            log.warning("predicate tests missing attribute %r on %s",
                        node.name, node_id)
            return False
        return _compare(value, node.op, node.value, node.name, node_id)
    if isinstance(node, AttrIn):
        value = world.by_id[node_id].attributes.get(node.name, _MISSING)
        if value is _MISSING:
            log.warning("predicate tests missing attribute %r on %s",
                        node.name, node_id)
            return False
        if isinstance(value, (list, tuple, set, frozenset)):
            return any(v in node.values for v in value)
        return value in node.values
    if isinstance(node, ChildCount):
        _require_trust_ctx(ctx, "child_count")
        count = sum(1 for c in world.children(node_id)
                    if _eval(node.pred, world, c, ctx))
        return _compare(count, node.op, node.count, "child_count", node_id)
    if isinstance(node, HasParent):
        _require_trust_ctx(ctx, "has_parent")
        return any(_eval(node.pred, world, p, ctx)
                   for p in world.parents(node_id))
    if isinstance(node, HasChild):
        _require_trust_ctx(ctx, "has_child")
        return any(_eval(node.pred, world, c, ctx)
                   for c in world.children(node_id))
    raise TypeError(f"unknown predicate node {node!r}")


_MISSING = object()


def _require_trust_ctx(ctx, what):
    if ctx == "structural":
        raise StructuralContextError(
            f"{what} is not allowed in structural-belief predicates")


def _compare(value, op, literal, name, node_id):
    try:
        if op == "=":
            return value == literal
        if op == "!=":
            return value != literal
        if op == "<":
            return value < literal
        if op == "<=":
            return value <= literal
        if op == ">":
            return value > literal
        if op == ">=":
            return value >= literal
    except TypeError:
        log.warning("attribute %r on %s is not comparable with %r",
                    name, node_id, literal)
        return False
    raise ValueError(f"unknown comparator {op!r}")
