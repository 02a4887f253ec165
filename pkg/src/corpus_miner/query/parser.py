"""Query language parser.

Grammar (keywords are case-sensitive upper case):

    query := or
    or    := and {OR and}
    and   := not {[AND] not}          juxtaposition is an implicit AND
    not   := [NOT] prim
    prim  := TERM
           | PHRASE [~INT]            "minimum wage"~3 is a proximity query
           | FIELD ":" (VALUE | "[" VALUE TO VALUE "]")
           | "(" query ")"

NOT binds tighter than AND, AND tighter than OR. A query whose only
effect is negation (no positive branch anywhere that could match) is
rejected because its result would be the complement of nothing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import QueryParseError
from ..nlp.tokenize import word_terms


class QueryAst:
    """Marker base class for query nodes."""

    def to_string(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Term(QueryAst):
    text: str

    def to_string(self) -> str:
        return self.text


@dataclass(frozen=True)
class MatchAll(QueryAst):
    def to_string(self) -> str:
        return "*"


@dataclass(frozen=True)
class Phrase(QueryAst):
    terms: tuple[str, ...]

    def to_string(self) -> str:
        return '"' + " ".join(self.terms) + '"'


@dataclass(frozen=True)
class Proximity(QueryAst):
    terms: tuple[str, ...]
    max_distance: int
    ordered: bool = False

    def to_string(self) -> str:
        suffix = f"~{self.max_distance}"
        return '"' + " ".join(self.terms) + '"' + suffix


@dataclass(frozen=True)
class FieldEq(QueryAst):
    field: str
    value: str

    def to_string(self) -> str:
        return f"{self.field}:{self.value}"


@dataclass(frozen=True)
class Range(QueryAst):
    field: str
    lo: str
    hi: str

    def to_string(self) -> str:
        return f"{self.field}:[{self.lo} TO {self.hi}]"


@dataclass(frozen=True)
class And(QueryAst):
    children: tuple[QueryAst, ...]

    def to_string(self) -> str:
        return "(" + " AND ".join(c.to_string() for c in self.children) + ")"


@dataclass(frozen=True)
class Or(QueryAst):
    children: tuple[QueryAst, ...]

    def to_string(self) -> str:
        return "(" + " OR ".join(c.to_string() for c in self.children) + ")"


@dataclass(frozen=True)
class Not(QueryAst):
    child: QueryAst

    def to_string(self) -> str:
        return f"NOT {self.child.to_string()}"


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<lbracket>\[)
  | (?P<rbracket>\])
  | (?P<phrase>"[^"]*")
  | (?P<tilde>~\d+)
  | (?P<colon>:)
  | (?P<star>\*)
  | (?P<word>[^\s()\[\]":~]+)
    """,
    re.VERBOSE,
)


def _lex(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QueryParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(0), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise QueryParseError("unexpected end of query", len(self.text))
        self.pos += 1
        return tok

    def parse(self) -> QueryAst:
        if not self.tokens:
            raise QueryParseError("empty query", 0)
        node = self.parse_or()
        if self.peek() is not None:
            kind, value, at = self.peek()
            raise QueryParseError(f"unexpected {value!r}", at)
        return node

    def parse_or(self) -> QueryAst:
        children = [self.parse_and()]
        while self.peek() is not None and self.peek()[1] == "OR":
            self.next()
            children.append(self.parse_and())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def parse_and(self) -> QueryAst:
        children = [self.parse_not()]
        while True:
            tok = self.peek()
            if tok is None:
                break
            kind, value, _ = tok
            if value == "AND":
                self.next()
                children.append(self.parse_not())
            elif value == "OR" or kind in ("rparen", "rbracket"):
                break
            else:  # implicit AND by juxtaposition
                children.append(self.parse_not())
        return children[0] if len(children) == 1 else And(tuple(children))

    def parse_not(self) -> QueryAst:
        tok = self.peek()
        if tok is not None and tok[1] == "NOT":
            self.next()
            return Not(self.parse_prim())
        return self.parse_prim()

    def parse_prim(self) -> QueryAst:
        kind, value, at = self.next()
        if kind == "lparen":
            node = self.parse_or()
            closing = self.peek()
            if closing is None or closing[0] != "rparen":
                raise QueryParseError("missing closing parenthesis", at)
            self.next()
            return node
        if kind == "star":
            return MatchAll()
        if kind == "phrase":
            return self._finish_phrase(value, at)
        if kind == "word":
            nxt = self.peek()
            if nxt is not None and nxt[0] == "colon":
                self.next()
                return self._finish_field(value, at)
            if value in ("AND", "OR", "NOT"):
                raise QueryParseError(f"operator {value} needs an operand", at)
            terms = word_terms(value)
            if not terms:
                raise QueryParseError(f"term {value!r} has no searchable content", at)
            if len(terms) > 1:
                return Phrase(tuple(terms))
            return Term(terms[0])
        raise QueryParseError(f"unexpected {value!r}", at)

    def _finish_phrase(self, raw: str, at: int) -> QueryAst:
        terms = tuple(word_terms(raw[1:-1]))
        if not terms:
            raise QueryParseError("empty phrase", at)
        nxt = self.peek()
        if nxt is not None and nxt[0] == "tilde":
            self.next()
            distance = int(nxt[1][1:])
            if distance < 1:
                raise QueryParseError("proximity distance must be >= 1", nxt[2])
            return Proximity(terms, distance)
        return Phrase(terms)

    def _finish_field(self, name: str, at: int) -> QueryAst:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise QueryParseError(f"invalid field name {name!r}", at)
        tok = self.peek()
        if tok is None:
            raise QueryParseError(f"field {name!r} needs a value", at)
        if tok[0] == "lbracket":
            self.next()
            lo = self._range_value()
            to = self.next()
            if to[1] != "TO":
                raise QueryParseError("range expects 'TO'", to[2])
            hi = self._range_value()
            closing = self.next()
            if closing[0] != "rbracket":
                raise QueryParseError("missing closing bracket", closing[2])
            if _range_key(lo) > _range_key(hi):
                raise QueryParseError(f"range lower bound {lo!r} exceeds {hi!r}", at)
            return Range(name, lo, hi)
        if tok[0] in ("word", "phrase"):
            self.next()
            value = tok[1][1:-1] if tok[0] == "phrase" else tok[1]
            return FieldEq(name, value)
        raise QueryParseError(f"field {name!r} needs a value", tok[2])

    def _range_value(self) -> str:
        tok = self.next()
        if tok[0] != "word":
            raise QueryParseError("range bound must be a bare value", tok[2])
        return tok[1]


def _range_key(value: str):
    try:
        return (0, float(value), "")
    except ValueError:
        return (1, 0.0, value)


def _is_pure_negative(node: QueryAst) -> bool:
    if isinstance(node, Not):
        return True
    if isinstance(node, And):
        return all(_is_pure_negative(c) for c in node.children)
    if isinstance(node, Or):
        return any(_is_pure_negative(c) for c in node.children) and all(
            _is_pure_negative(c) for c in node.children
        )
    return False


def parse_query(text: str) -> QueryAst:
    """Parse query text into an AST; raises QueryParseError with position."""
    ast = _Parser(text).parse()
    if _is_pure_negative(ast):
        raise QueryParseError("query must contain at least one positive criterion", 0)
    return ast
