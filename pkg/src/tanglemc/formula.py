"""Grammar and abstract syntax for the tangled dynamic modal language.

ASCII surface syntax::

    var     = [a-z][a-zA-Z0-9_]*
    unary   = "~" | "O" | "<d>" | "[d]" | "<d.>" | "[d.]"
    binary  = "->" | "|" | "&"          (loosest to tightest)
    tangle  = "<t>{" formula ("," formula)* "}"
    dotted  = "<t.>{" formula ("," formula)* "}"
    consts  = "T" | "F"

"->" associates to the right, "|" and "&" to the left.  The dotted
operators, the dotted tangle and the constants are surface sugar and are
expanded during parsing:

    <d.>p   becomes  p | <d>p
    [d.]p   becomes  p & [d]p
    <t.>{..} becomes <d.>(conjunction of args) | <t>{..}
    T / F   become   r | ~r  /  r & ~r  over a reserved variable

The reserved variable cannot be written in the surface syntax, so "T" and
"F" round-trip through the printer.  Printing otherwise emits core
connectives only, with minimal parentheses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator


class ParseError(ValueError):
    """Syntax error, carrying the offending position in the input."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class Formula:
    """Base class of all AST nodes.  Instances are immutable and hashable."""

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Neg(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    child: Formula


@dataclass(frozen=True)
class Box(Formula):
    child: Formula


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Tangle(Formula):
    """Polyadic tangle operator; arguments behave as a nonempty set.

    Duplicates are merged and the arguments are kept in a canonical order
    (sorted by printed form), so structurally equal argument sets compare
    equal.
    """

    args: tuple[Formula, ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("tangle requires at least one argument")
        ordered = tuple(sorted(set(self.args), key=pretty))
        object.__setattr__(self, "args", ordered)


# Reserved variable backing the constants; unparseable because surface
# variables must start with a lowercase letter.
RESERVED_VAR = "_const"

_TOP = Or(Var(RESERVED_VAR), Neg(Var(RESERVED_VAR)))
_BOT = And(Var(RESERVED_VAR), Neg(Var(RESERVED_VAR)))


def top() -> Formula:
    return _TOP


def bot() -> Formula:
    return _BOT


def dot_diamond(phi: Formula) -> Formula:
    """Reflexive diamond: phi | <d>phi."""
    return Or(phi, Diamond(phi))


def dot_box(phi: Formula) -> Formula:
    """Reflexive box: phi & [d]phi."""
    return And(phi, Box(phi))


def big_and(formulas: Iterable[Formula]) -> Formula:
    """Left-folded conjunction; argument order is preserved."""
    items = list(formulas)
    if not items:
        raise ValueError("empty conjunction")
    out = items[0]
    for f in items[1:]:
        out = And(out, f)
    return out


def dot_tangle(args: Iterable[Formula]) -> Formula:
    """Dotted tangle: <d.>(conjunction of args) | <t>{args}."""
    t = Tangle(tuple(args))
    return Or(dot_diamond(big_and(t.args)), t)


def children(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, (Neg, Diamond, Box, Next)):
        return (phi.child,)
    if isinstance(phi, (And, Or, Implies)):
        return (phi.left, phi.right)
    if isinstance(phi, Tangle):
        return phi.args
    return ()


def walk(phi: Formula) -> Iterator[Formula]:
    stack = [phi]
    while stack:
        f = stack.pop()
        yield f
        stack.extend(children(f))


def size(phi: Formula) -> int:
    """Number of AST nodes (tangle counts as one node plus its arguments)."""
    return sum(1 for _ in walk(phi))


def vars_of(phi: Formula) -> frozenset[str]:
    """Variable names occurring in phi, excluding the reserved one."""
    return frozenset(
        f.name for f in walk(phi) if isinstance(f, Var) and f.name != RESERVED_VAR
    )


def next_depth(phi: Formula) -> int:
    """Maximum nesting depth of the O operator."""
    if isinstance(phi, Next):
        return 1 + next_depth(phi.child)
    kids = children(phi)
    return max((next_depth(c) for c in kids), default=0)


def subformula_closure(phi: Formula) -> frozenset[Formula]:
    """Smallest set containing phi closed under subformulas and single negations.

    Negations are added only to unnegated members, so double negations are
    never introduced.
    """
    subs: set[Formula] = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if f in subs:
            continue
        subs.add(f)
        stack.extend(children(f))
    out = set(subs)
    for f in subs:
        if not isinstance(f, Neg):
            out.add(Neg(f))
    return frozenset(out)


# ---------------------------------------------------------------------------
# printing

_PREC_IMPLIES = 1
_PREC_OR = 2
_PREC_AND = 3
_PREC_UNARY = 4
_PREC_ATOM = 5


def _prec(phi: Formula) -> int:
    if isinstance(phi, Implies):
        return _PREC_IMPLIES
    if isinstance(phi, Or):
        return _PREC_OR
    if isinstance(phi, And):
        return _PREC_AND
    if isinstance(phi, (Neg, Diamond, Box, Next)):
        return _PREC_UNARY
    return _PREC_ATOM


def pretty(phi: Formula) -> str:
    """Minimal-parenthesis printer; parse(pretty(phi)) == phi."""
    return _fmt(phi, _PREC_IMPLIES)


def _fmt(phi: Formula, min_prec: int) -> str:
    if phi == _TOP:
        return "T"
    if phi == _BOT:
        return "F"
    if isinstance(phi, Var):
        return phi.name
    if isinstance(phi, Tangle):
        return "<t>{" + ", ".join(_fmt(a, _PREC_IMPLIES) for a in phi.args) + "}"
    if isinstance(phi, Neg):
        s = "~" + _fmt(phi.child, _PREC_UNARY)
    elif isinstance(phi, Diamond):
        s = "<d>" + _fmt(phi.child, _PREC_UNARY)
    elif isinstance(phi, Box):
        s = "[d]" + _fmt(phi.child, _PREC_UNARY)
    elif isinstance(phi, Next):
        s = "O " + _fmt(phi.child, _PREC_UNARY)
    elif isinstance(phi, And):
        s = _fmt(phi.left, _PREC_AND) + " & " + _fmt(phi.right, _PREC_UNARY)
    elif isinstance(phi, Or):
        s = _fmt(phi.left, _PREC_OR) + " | " + _fmt(phi.right, _PREC_AND)
    elif isinstance(phi, Implies):
        s = _fmt(phi.left, _PREC_OR) + " -> " + _fmt(phi.right, _PREC_IMPLIES)
    else:  # pragma: no cover - exhaustive over node types
        raise TypeError(f"not a formula: {phi!r}")
    if _prec(phi) < min_prec:
        return "(" + s + ")"
    return s


# ---------------------------------------------------------------------------
# parsing

_TOKEN_SPEC = [
    ("WS", r"\s+"),
    ("ARROW", r"->"),
    ("DDIA", r"<d\.>"),
    ("DIA", r"<d>"),
    ("DBOX", r"\[d\.\]"),
    ("BOX", r"\[d\]"),
    ("DTANGLE", r"<t\.>"),
    ("TANGLE", r"<t>"),
    ("IDENT", r"[a-z][a-zA-Z0-9_]*"),
    ("TOP", r"T"),
    ("BOT", r"F"),
    ("NEXT", r"O"),
    ("AND", r"&"),
    ("OR", r"\|"),
    ("NOT", r"~"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("LBRACE", r"\{"),
    ("RBRACE", r"\}"),
    ("COMMA", r","),
]

_MASTER = re.compile("|".join(f"(?P<{k}>{p})" for k, p in _TOKEN_SPEC))


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _MASTER.match(text, pos)
        if m is None:
            raise ParseError(f"unknown token {text[pos]!r}", pos)
        if m.lastgroup != "WS":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("EOF", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if tok[0] != kind:
            raise ParseError(f"expected {kind}, found {tok[1]!r}", tok[2])
        return self.advance()

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "ARROW":
            self.advance()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        out = self.conjunction()
        while self.peek()[0] == "OR":
            self.advance()
            out = Or(out, self.conjunction())
        return out

    def conjunction(self) -> Formula:
        out = self.unary()
        while self.peek()[0] == "AND":
            self.advance()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        kind = self.peek()[0]
        if kind == "NOT":
            self.advance()
            return Neg(self.unary())
        if kind == "DIA":
            self.advance()
            return Diamond(self.unary())
        if kind == "BOX":
            self.advance()
            return Box(self.unary())
        if kind == "DDIA":
            self.advance()
            return dot_diamond(self.unary())
        if kind == "DBOX":
            self.advance()
            return dot_box(self.unary())
        if kind == "NEXT":
            self.advance()
            return Next(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind, text, pos = self.peek()
        if kind == "IDENT":
            self.advance()
            return Var(text)
        if kind == "TOP":
            self.advance()
            return top()
        if kind == "BOT":
            self.advance()
            return bot()
        if kind == "LPAREN":
            self.advance()
            inner = self.implies()
            self.expect("RPAREN")
            return inner
        if kind == "TANGLE":
            self.advance()
            return Tangle(tuple(self.tangle_args()))
        if kind == "DTANGLE":
            self.advance()
            return dot_tangle(self.tangle_args())
        raise ParseError(f"expected a formula, found {text!r}", pos)

    def tangle_args(self) -> list[Formula]:
        _, _, pos = self.expect("LBRACE")
        if self.peek()[0] == "RBRACE":
            raise ParseError("empty tangle", self.peek()[2])
        args = [self.implies()]
        while self.peek()[0] == "COMMA":
            self.advance()
            args.append(self.implies())
        self.expect("RBRACE")
        return args


def parse(text: str) -> Formula:
    """Parse a formula from the ASCII surface syntax."""
    p = _Parser(text)
    out = p.implies()
    kind, tok, pos = p.peek()
    if kind != "EOF":
        raise ParseError(f"unexpected token {tok!r}", pos)
    return out
