"""Front end for the analyzed language.

The language is a single function of integer locals with assignments,
nondeterministic ``input(a, b)`` reads, ``if``/``else``, ``while`` and
``break``.  All expressions are linear.  The parser produces a small AST
that the control-flow lowering in :mod:`numinv.ir` consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Linear expressions and comparisons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinExpr:
    """Linear expression sum(coeff * var) + const with integer coefficients."""

    coeffs: tuple[tuple[str, int], ...]
    const: int = 0

    @classmethod
    def of(cls, coeffs: dict[str, int], const: int = 0) -> "LinExpr":
        items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return cls(items, const)

    @classmethod
    def var(cls, name: str) -> "LinExpr":
        return cls(((name, 1),), 0)

    @classmethod
    def constant(cls, value: int) -> "LinExpr":
        return cls((), value)

    def coeff_map(self) -> dict[str, int]:
        return dict(self.coeffs)

    def add(self, other: "LinExpr") -> "LinExpr":
        coeffs = self.coeff_map()
        for v, c in other.coeffs:
            coeffs[v] = coeffs.get(v, 0) + c
        return LinExpr.of(coeffs, self.const + other.const)

    def scale(self, k: int) -> "LinExpr":
        return LinExpr.of({v: k * c for v, c in self.coeffs}, k * self.const)

    def sub(self, other: "LinExpr") -> "LinExpr":
        return self.add(other.scale(-1))

    def vars(self) -> set[str]:
        return {v for v, _ in self.coeffs}

    def eval(self, store: dict[str, int]) -> int:
        return self.const + sum(c * store[v] for v, c in self.coeffs)

    def rename(self, mapping: dict[str, str]) -> "LinExpr":
        coeffs: dict[str, int] = {}
        for v, c in self.coeffs:
            nv = mapping.get(v, v)
            coeffs[nv] = coeffs.get(nv, 0) + c
        return LinExpr.of(coeffs, self.const)

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.coeffs:
            if not parts:
                if c == 1:
                    parts.append(v)
                elif c == -1:
                    parts.append(f"-{v}")
                else:
                    parts.append(f"{c}*{v}")
            else:
                sign = "+" if c > 0 else "-"
                a = abs(c)
                parts.append(f" {sign} {v}" if a == 1 else f" {sign} {a}*{v}")
        if not parts:
            return str(self.const)
        if self.const > 0:
            parts.append(f" + {self.const}")
        elif self.const < 0:
            parts.append(f" - {-self.const}")
        return "".join(parts)


_NEG_OP = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


@dataclass(frozen=True)
class Constraint:
    """Comparison sum(coeff * var) op const, over integer variables."""

    coeffs: tuple[tuple[str, int], ...]
    op: str
    const: int

    @classmethod
    def make(cls, expr: LinExpr, op: str, rhs: LinExpr) -> "Constraint":
        d = expr.sub(rhs)
        return cls(d.coeffs, op, -d.const)

    def negate(self) -> "Constraint":
        return Constraint(self.coeffs, _NEG_OP[self.op], self.const)

    def vars(self) -> set[str]:
        return {v for v, _ in self.coeffs}

    def rename(self, mapping: dict[str, str]) -> "Constraint":
        e = LinExpr(self.coeffs, 0).rename(mapping)
        return Constraint(e.coeffs, self.op, self.const - e.const)

    def holds(self, store: dict[str, int]) -> bool:
        lhs = sum(c * store[v] for v, c in self.coeffs)
        if self.op == "==":
            return lhs == self.const
        if self.op == "!=":
            return lhs != self.const
        if self.op == "<":
            return lhs < self.const
        if self.op == "<=":
            return lhs <= self.const
        if self.op == ">":
            return lhs > self.const
        return lhs >= self.const

    def to_leq(self) -> list[tuple[tuple[tuple[str, int], ...], int]]:
        """Equivalent list of sum(coeffs) <= c rows over the integers.

        ``!=`` has no conjunctive form and must be handled by the caller.
        """
        neg = tuple((v, -c) for v, c in self.coeffs)
        if self.op == "<=":
            return [(self.coeffs, self.const)]
        if self.op == "<":
            return [(self.coeffs, self.const - 1)]
        if self.op == ">=":
            return [(neg, -self.const)]
        if self.op == ">":
            return [(neg, -self.const - 1)]
        if self.op == "==":
            return [(self.coeffs, self.const), (neg, -self.const)]
        raise ValueError("no conjunctive <= form for !=")

    def __str__(self) -> str:
        return f"{LinExpr(self.coeffs, 0)} {self.op} {self.const}"


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InputExpr:
    lo: int
    hi: int


@dataclass
class Assign:
    name: str
    value: object  # LinExpr | InputExpr
    line: int = 0


@dataclass
class If:
    cond: object  # Constraint | None (None means "true")
    then_body: list = field(default_factory=list)
    else_body: list = field(default_factory=list)


@dataclass
class While:
    cond: object  # Constraint | None (None means "true")
    body: list = field(default_factory=list)


@dataclass
class Break:
    line: int = 0


@dataclass
class Decl:
    name: str
    init: LinExpr | None


@dataclass
class Function:
    name: str
    decls: list[Decl]
    body: list


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_KEYWORDS = {"fn", "int", "if", "else", "while", "break", "true", "input"}
_SYMBOLS = ("==", "!=", "<=", ">=", "{", "}", "(", ")", ";", ",", "=", "<", ">", "+", "-", "*")


@dataclass
class Token:
    kind: str  # "ident", "int", "kw", or the symbol itself
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("int", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            toks.append(Token("kw" if word in _KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if src.startswith(sym, i):
                toks.append(Token(sym, sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0
        self.declared: set[str] = set()
        self.loop_depth = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        t = tok or self.peek()
        raise ParseError(msg, t.line, t.col)

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            self.error(f"expected {want!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def parse_function(self) -> Function:
        self.expect("kw", "fn")
        name = self.expect("ident").text
        self.expect("(")
        self.expect(")")
        self.expect("{")
        decls: list[Decl] = []
        while self.peek().kind == "kw" and self.peek().text == "int":
            decls.append(self.parse_decl())
        body = self.parse_stmts()
        self.expect("}")
        self.expect("eof")
        return Function(name, decls, body)

    def parse_decl(self) -> Decl:
        self.expect("kw", "int")
        t = self.expect("ident")
        if t.text in self.declared:
            self.error(f"variable {t.text!r} already declared", t)
        self.declared.add(t.text)
        init = None
        if self.peek().kind == "=":
            self.next()
            init = self.parse_linexpr()
        self.expect(";")
        return Decl(t.text, init)

    def parse_stmts(self) -> list:
        out = []
        while True:
            t = self.peek()
            if t.kind == "}" or t.kind == "eof":
                return out
            out.append(self.parse_stmt())

    def parse_block(self) -> list:
        self.expect("{")
        body = self.parse_stmts()
        self.expect("}")
        return body

    def parse_stmt(self):
        t = self.peek()
        if t.kind == "kw" and t.text == "if":
            self.next()
            self.expect("(")
            cond = self.parse_cond()
            self.expect(")")
            then_body = self.parse_block()
            else_body = []
            if self.peek().kind == "kw" and self.peek().text == "else":
                self.next()
                else_body = self.parse_block()
            return If(cond, then_body, else_body)
        if t.kind == "kw" and t.text == "while":
            self.next()
            self.expect("(")
            cond = self.parse_cond()
            self.expect(")")
            self.loop_depth += 1
            body = self.parse_block()
            self.loop_depth -= 1
            return While(cond, body)
        if t.kind == "kw" and t.text == "break":
            self.next()
            if self.loop_depth == 0:
                self.error("break outside of a loop", t)
            self.expect(";")
            return Break(t.line)
        if t.kind == "kw" and t.text == "int":
            self.error("declarations must precede statements", t)
        if t.kind == "ident":
            name = self.next().text
            if name not in self.declared:
                self.error(f"use of undeclared variable {name!r}", t)
            self.expect("=")
            nt = self.peek()
            if nt.kind == "kw" and nt.text == "input":
                self.next()
                self.expect("(")
                lo = self.parse_int_literal()
                self.expect(",")
                hi = self.parse_int_literal()
                self.expect(")")
                self.expect(";")
                if lo > hi:
                    self.error("empty input range", nt)
                return Assign(name, InputExpr(lo, hi), t.line)
            value = self.parse_linexpr()
            self.expect(";")
            return Assign(name, value, t.line)
        self.error(f"expected a statement, found {t.text or 'end of input'!r}")

    def parse_cond(self):
        t = self.peek()
        if t.kind == "kw" and t.text == "true":
            self.next()
            return None
        lhs = self.parse_linexpr()
        op_tok = self.peek()
        if op_tok.kind not in ("==", "!=", "<", "<=", ">", ">="):
            self.error("expected a comparison operator")
        self.next()
        rhs = self.parse_linexpr()
        return Constraint.make(lhs, op_tok.kind, rhs)

    def parse_int_literal(self) -> int:
        neg = False
        if self.peek().kind == "-":
            self.next()
            neg = True
        t = self.expect("int")
        v = int(t.text)
        return -v if neg else v

    def parse_linexpr(self) -> LinExpr:
        expr = self.parse_term(allow_sign=True)
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            term = self.parse_term(allow_sign=False)
            expr = expr.add(term if op == "+" else term.scale(-1))
        return expr

    def parse_term(self, allow_sign: bool) -> LinExpr:
        sign = 1
        if allow_sign and self.peek().kind == "-":
            self.next()
            sign = -1
        t = self.peek()
        if t.kind == "int":
            self.next()
            k = sign * int(t.text)
            if self.peek().kind == "*":
                self.next()
                vt = self.peek()
                if vt.kind != "ident":
                    self.error("nonlinear expression", vt)
                self.next()
                self.check_declared(vt)
                return LinExpr.of({vt.text: k})
            return LinExpr.constant(k)
        if t.kind == "ident":
            self.next()
            self.check_declared(t)
            if self.peek().kind == "*":
                self.error("nonlinear expression", self.peek())
            return LinExpr.of({t.text: sign})
        self.error(f"expected an expression, found {t.text or 'end of input'!r}")

    def check_declared(self, t: Token):
        if t.text not in self.declared:
            self.error(f"use of undeclared variable {t.text!r}", t)


def parse_program(src: str) -> Function:
    """Parse source text into a single-function AST.

    Raises ParseError with line/column information on malformed input,
    nonlinear expressions, undeclared variables or a stray break.
    """
    return _Parser(tokenize(src)).parse_function()
