"""Lexer and single-pass parser for the SL scripting language.

SL is a small imperative language with curly-brace blocks:

    script     : import-lines subprogram+
    subprogram : 'def' NAME '(' names ')' '{' statement* 'return' NAME '}'
    statement  : lvalue '=' expression            (scalar or indexed element)
               | NAME '=' '[' 0.0 ']' '*' pexpr   (vector allocation)
               | NAME '=' NAME '(' names ')'      (subprogram/external call)
               | 'if' condition '{' ... '}' 'else' '{' ... '}'
               | 'while' condition '{' ... '}'
               | 'for' NAME 'in' 'range' '(' pexpr ')' '{' ... '}'
               | '#pragma' ('noprimal' | 'notbr')
    expression : + - * / unary minus, parentheses, literals, names,
                 NAME '[' pexpr ']', exp(e), gt0(e)
    condition  : expression relop expression      (< > <= >= == !=)

Statements sit one per line or separated by ';'.  Comments run from '#' to
end of line except for the two recognized pragmas; unknown pragmas are lex
errors.  Lines starting with 'from' or 'import' are kept verbatim as
preamble.

The parser is plain recursive descent, but translation is strictly
syntax-directed: it builds no tree and holds no program-wide state.  Every
handle reduction invokes exactly one callback on the sink, passing the
already-synthesized child attributes, and the sink's return value becomes the
attribute of the reduced nonterminal.  Index expressions, range bounds,
allocation lengths and condition operands are parsed through the sink's
passive-flavor callbacks, which keeps single-assignment-code numbering
confined to assignment right-hand sides.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Protocol

from .errors import CompileError


class Tok(enum.Enum):
    DEF = "def"
    RETURN = "return"
    IF = "if"
    ELSE = "else"
    WHILE = "while"
    FOR = "for"
    IN = "in"
    RANGE = "range"
    REVERSED = "reversed"
    EXP = "exp"
    GT0 = "gt0"
    NAME = "name"
    INT = "int"
    FLOAT = "float"
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    ASSIGN = "="
    LT = "<"
    GT = ">"
    LE = "<="
    GE = ">="
    EQ = "=="
    NE = "!="
    LPAREN = "("
    RPAREN = ")"
    LBRACE = "{"
    RBRACE = "}"
    LBRACKET = "["
    RBRACKET = "]"
    COMMA = ","
    SEP = "separator"  # newline or ';'
    PRAGMA = "pragma"
    IMPORT = "import-line"
    EOF = "eof"


KEYWORDS = {t.value: t for t in (
    Tok.DEF, Tok.RETURN, Tok.IF, Tok.ELSE, Tok.WHILE, Tok.FOR, Tok.IN,
    Tok.RANGE, Tok.REVERSED, Tok.EXP, Tok.GT0,
)}

RELOPS = {Tok.LT, Tok.GT, Tok.LE, Tok.GE, Tok.EQ, Tok.NE}

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?")
_PRAGMA_RE = re.compile(r"#pragma\s+([A-Za-z_][A-Za-z0-9_]*)")
_TWO_CHAR = {"<=": Tok.LE, ">=": Tok.GE, "==": Tok.EQ, "!=": Tok.NE}
_ONE_CHAR = {
    "+": Tok.PLUS, "-": Tok.MINUS, "*": Tok.STAR, "/": Tok.SLASH,
    "=": Tok.ASSIGN, "<": Tok.LT, ">": Tok.GT,
    "(": Tok.LPAREN, ")": Tok.RPAREN, "{": Tok.LBRACE, "}": Tok.RBRACE,
    "[": Tok.LBRACKET, "]": Tok.RBRACKET, ",": Tok.COMMA, ";": Tok.SEP,
}
PRAGMA_KINDS = ("noprimal", "notbr")


@dataclass(frozen=True)
class Token:
    kind: Tok
    lexeme: str
    line: int


def tokenize(source: str) -> list[Token]:
    """Scan SL source into tokens.

    Pragmas become single PRAGMA tokens, import lines single IMPORT tokens
    preserved verbatim, other comments vanish, and every physical line break
    yields one separator token.
    """
    tokens: list[Token] = []
    for line_no, raw in enumerate(source.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith(("from ", "import ")) or stripped in ("from", "import"):
            tokens.append(Token(Tok.IMPORT, stripped, line_no))
            tokens.append(Token(Tok.SEP, "\n", line_no))
            continue
        i, n = 0, len(raw)
        while i < n:
            c = raw[i]
            if c in " \t\r":
                i += 1
                continue
            if c == "#":
                m = _PRAGMA_RE.match(raw, i)
                if m:
                    kind = m.group(1)
                    if kind not in PRAGMA_KINDS:
                        raise CompileError("lex", f"unknown pragma {kind!r}", line_no)
                    tokens.append(Token(Tok.PRAGMA, kind, line_no))
                    i = m.end()
                    continue
                break  # plain comment runs to end of line
            two = raw[i:i + 2]
            if two in _TWO_CHAR:
                tokens.append(Token(_TWO_CHAR[two], two, line_no))
                i += 2
                continue
            if c in _ONE_CHAR:
                tokens.append(Token(_ONE_CHAR[c], c, line_no))
                i += 1
                continue
            m = _NUMBER_RE.match(raw, i)
            if m:
                text = m.group(0)
                kind = Tok.INT if text.isdigit() else Tok.FLOAT
                tokens.append(Token(kind, text, line_no))
                i = m.end()
                continue
            m = _NAME_RE.match(raw, i)
            if m:
                text = m.group(0)
                tokens.append(Token(KEYWORDS.get(text, Tok.NAME), text, line_no))
                i = m.end()
                continue
            raise CompileError("lex", f"unknown character {c!r}", line_no)
        tokens.append(Token(Tok.SEP, "\n", line_no))
    # trim the separator tail so empty input stays empty
    while tokens and tokens[-1].kind is Tok.SEP and (len(tokens) == 1 or tokens[-2].kind is Tok.SEP):
        tokens.pop()
    if tokens and tokens[-1].kind is Tok.SEP:
        tokens.pop()
    return tokens


class Sink(Protocol):
    """Synthesis callbacks; one invocation per handle reduction.

    The two expression flavors keep SAC slots out of passive contexts: the
    plain (SAC) flavor serves assignment right-hand sides, the p-flavor
    serves conditions, indices, range bounds and allocation lengths.
    """

    def leaf_name(self, name, line): ...
    def leaf_indexed(self, name, index, line): ...
    def leaf_literal(self, lexeme, line): ...
    def parens(self, inner, line): ...
    def negate(self, operand, line): ...
    def binary(self, op, left, right, line): ...
    def intrinsic(self, name, arg, line): ...

    def pleaf_name(self, name, line): ...
    def pleaf_indexed(self, name, index, line): ...
    def pleaf_literal(self, lexeme, line): ...
    def pparens(self, inner, line): ...
    def pnegate(self, operand, line): ...
    def pbinary(self, op, left, right, line): ...
    def pintrinsic(self, name, arg, line): ...
    def condition(self, left, op, right, line): ...

    def lvalue(self, name, index, line): ...
    def assign(self, lhs, rhs, line): ...
    def alloc(self, name, length, line): ...
    def call(self, result, callee, args, line): ...
    def if_(self, cond, then_stmts, else_stmts, line): ...
    def while_(self, cond, body, line): ...
    def for_(self, var, bound, body, line): ...
    def pragma(self, kind, line): ...

    def begin_subprogram(self, name, params, line): ...
    def subprogram(self, name, params, body, return_name, line): ...


@dataclass(frozen=True)
class SourceScript:
    """Parse result: verbatim preamble plus one synthesized attribute per subprogram."""

    preamble: tuple
    names: tuple
    subprograms: tuple


class Parser:
    """Recursive-descent driver over a token stream and a sink."""

    def __init__(self, tokens: list[Token], sink: Sink):
        self.tokens = tokens
        self.sink = sink
        self.pos = 0

    # -- token plumbing -------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        i = self.pos + offset
        if i < len(self.tokens):
            return self.tokens[i]
        line = self.tokens[-1].line if self.tokens else 1
        return Token(Tok.EOF, "", line)

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind is not Tok.EOF:
            self.pos += 1
        return tok

    def expect(self, kind: Tok, expected: str) -> Token:
        tok = self.peek()
        if tok.kind is not kind:
            raise CompileError(
                "syntax", f"expected {expected}, found {tok.lexeme or 'end of input'!r}", tok.line
            )
        return self.advance()

    def skip_seps(self) -> None:
        while self.peek().kind is Tok.SEP:
            self.advance()

    # -- grammar --------------------------------------------------------

    def parse_script(self) -> SourceScript:
        preamble: list[str] = []
        self.skip_seps()
        while self.peek().kind is Tok.IMPORT:
            preamble.append(self.advance().lexeme)
            self.skip_seps()
        subs = []
        names = []
        while self.peek().kind is not Tok.EOF:
            name, attr = self.parse_subprogram()
            if name in names:
                raise CompileError("duplicate-subprogram", f"subprogram {name!r} redefined", self.peek(-1).line)
            names.append(name)
            subs.append(attr)
            self.skip_seps()
        if not subs:
            raise CompileError("syntax", "expected at least one subprogram definition", 1)
        return SourceScript(preamble=tuple(preamble), names=tuple(names), subprograms=tuple(subs))

    def parse_subprogram(self):
        tok = self.expect(Tok.DEF, "'def'")
        name = self.expect(Tok.NAME, "subprogram name").lexeme
        self.expect(Tok.LPAREN, "'('")
        params: list[str] = []
        if self.peek().kind is not Tok.RPAREN:
            params.append(self.expect(Tok.NAME, "parameter name").lexeme)
            while self.peek().kind is Tok.COMMA:
                self.advance()
                params.append(self.expect(Tok.NAME, "parameter name").lexeme)
        self.expect(Tok.RPAREN, "')'")
        self.sink.begin_subprogram(name, tuple(params), tok.line)
        self.expect(Tok.LBRACE, "'{'")
        body = self.parse_statements()
        ret_tok = self.expect(Tok.RETURN, "'return'")
        return_name = self.expect(Tok.NAME, "returned name").lexeme
        self.skip_seps()
        self.expect(Tok.RBRACE, "'}'")
        attr = self.sink.subprogram(name, tuple(params), body, return_name, ret_tok.line)
        return name, attr

    def parse_statements(self) -> tuple:
        """Statements up to (not including) 'return' or '}'."""
        stmts = []
        self.skip_seps()
        while self.peek().kind not in (Tok.RBRACE, Tok.RETURN, Tok.EOF):
            stmts.append(self.parse_statement())
            self.skip_seps()
        return tuple(stmts)

    def parse_block(self) -> tuple:
        self.expect(Tok.LBRACE, "'{'")
        stmts = self.parse_statements()
        self.expect(Tok.RBRACE, "'}'")
        return stmts

    def parse_statement(self):
        tok = self.peek()
        if tok.kind is Tok.PRAGMA:
            self.advance()
            return self.sink.pragma(tok.lexeme, tok.line)
        if tok.kind is Tok.IF:
            return self.parse_if()
        if tok.kind is Tok.WHILE:
            return self.parse_while()
        if tok.kind is Tok.FOR:
            return self.parse_for()
        if tok.kind is Tok.NAME:
            return self.parse_assignment_like()
        raise CompileError("syntax", f"expected a statement, found {tok.lexeme!r}", tok.line)

    def parse_assignment_like(self):
        name_tok = self.expect(Tok.NAME, "a name")
        index = None
        if self.peek().kind is Tok.LBRACKET:
            self.advance()
            index = self.parse_passive_expression()
            self.expect(Tok.RBRACKET, "']'")
        eq = self.expect(Tok.ASSIGN, "'='")
        if index is None and self.peek().kind is Tok.LBRACKET:
            return self.parse_alloc_tail(name_tok)
        if (index is None and self.peek().kind is Tok.NAME
                and self.peek(1).kind is Tok.LPAREN):
            return self.parse_call_tail(name_tok)
        lhs = self.sink.lvalue(name_tok.lexeme, index, name_tok.line)
        rhs = self.parse_expression()
        return self.sink.assign(lhs, rhs, eq.line)

    def parse_alloc_tail(self, name_tok: Token):
        self.expect(Tok.LBRACKET, "'['")
        init = self.expect(Tok.FLOAT, "float literal 0.0")
        if float(init.lexeme) != 0.0:
            raise CompileError("syntax", "vector allocations must initialize with 0.0", init.line)
        self.expect(Tok.RBRACKET, "']'")
        self.expect(Tok.STAR, "'*'")
        length = self.parse_passive_expression()
        return self.sink.alloc(name_tok.lexeme, length, name_tok.line)

    def parse_call_tail(self, result_tok: Token):
        callee = self.expect(Tok.NAME, "callee name").lexeme
        self.expect(Tok.LPAREN, "'('")
        args: list[str] = []
        if self.peek().kind is not Tok.RPAREN:
            args.append(self.expect(Tok.NAME, "argument name").lexeme)
            while self.peek().kind is Tok.COMMA:
                self.advance()
                args.append(self.expect(Tok.NAME, "argument name").lexeme)
        self.expect(Tok.RPAREN, "')'")
        return self.sink.call(result_tok.lexeme, callee, tuple(args), result_tok.line)

    def parse_if(self):
        tok = self.expect(Tok.IF, "'if'")
        cond = self.parse_condition()
        then_stmts = self.parse_block()
        self.expect(Tok.ELSE, "'else'")
        else_stmts = self.parse_block()
        return self.sink.if_(cond, then_stmts, else_stmts, tok.line)

    def parse_while(self):
        tok = self.expect(Tok.WHILE, "'while'")
        cond = self.parse_condition()
        body = self.parse_block()
        return self.sink.while_(cond, body, tok.line)

    def parse_for(self):
        tok = self.expect(Tok.FOR, "'for'")
        var = self.expect(Tok.NAME, "loop variable").lexeme
        self.expect(Tok.IN, "'in'")
        self.expect(Tok.RANGE, "'range'")
        self.expect(Tok.LPAREN, "'('")
        bound = self.parse_passive_expression()
        self.expect(Tok.RPAREN, "')'")
        body = self.parse_block()
        return self.sink.for_(var, bound, body, tok.line)

    def parse_condition(self):
        left = self.parse_passive_expression()
        tok = self.peek()
        if tok.kind not in RELOPS:
            raise CompileError("syntax", f"expected a comparison operator, found {tok.lexeme!r}", tok.line)
        self.advance()
        right = self.parse_passive_expression()
        return self.sink.condition(left, tok.lexeme, right, tok.line)

    # -- expressions, SAC flavor ----------------------------------------

    def parse_expression(self):
        attr = self.parse_term()
        while self.peek().kind in (Tok.PLUS, Tok.MINUS):
            op = self.advance()
            right = self.parse_term()
            attr = self.sink.binary(op.lexeme, attr, right, op.line)
        return attr

    def parse_term(self):
        attr = self.parse_factor()
        while self.peek().kind in (Tok.STAR, Tok.SLASH):
            op = self.advance()
            right = self.parse_factor()
            attr = self.sink.binary(op.lexeme, attr, right, op.line)
        return attr

    def parse_factor(self):
        tok = self.peek()
        if tok.kind is Tok.MINUS:
            self.advance()
            operand = self.parse_factor()
            return self.sink.negate(operand, tok.line)
        return self.parse_atom()

    def parse_atom(self):
        tok = self.advance()
        if tok.kind in (Tok.FLOAT, Tok.INT):
            return self.sink.leaf_literal(tok.lexeme, tok.line)
        if tok.kind is Tok.NAME:
            if self.peek().kind is Tok.LBRACKET:
                self.advance()
                index = self.parse_passive_expression()
                self.expect(Tok.RBRACKET, "']'")
                return self.sink.leaf_indexed(tok.lexeme, index, tok.line)
            return self.sink.leaf_name(tok.lexeme, tok.line)
        if tok.kind is Tok.LPAREN:
            inner = self.parse_expression()
            self.expect(Tok.RPAREN, "')'")
            return self.sink.parens(inner, tok.line)
        if tok.kind in (Tok.EXP, Tok.GT0):
            self.expect(Tok.LPAREN, "'('")
            arg = self.parse_expression()
            self.expect(Tok.RPAREN, "')'")
            return self.sink.intrinsic(tok.lexeme, arg, tok.line)
        raise CompileError("syntax", f"expected an expression, found {tok.lexeme or 'end of input'!r}", tok.line)

    # -- expressions, passive flavor ------------------------------------

    def parse_passive_expression(self):
        attr = self.parse_passive_term()
        while self.peek().kind in (Tok.PLUS, Tok.MINUS):
            op = self.advance()
            right = self.parse_passive_term()
            attr = self.sink.pbinary(op.lexeme, attr, right, op.line)
        return attr

    def parse_passive_term(self):
        attr = self.parse_passive_factor()
        while self.peek().kind in (Tok.STAR, Tok.SLASH):
            op = self.advance()
            right = self.parse_passive_factor()
            attr = self.sink.pbinary(op.lexeme, attr, right, op.line)
        return attr

    def parse_passive_factor(self):
        tok = self.peek()
        if tok.kind is Tok.MINUS:
            self.advance()
            operand = self.parse_passive_factor()
            return self.sink.pnegate(operand, tok.line)
        return self.parse_passive_atom()

    def parse_passive_atom(self):
        tok = self.advance()
        if tok.kind in (Tok.FLOAT, Tok.INT):
            return self.sink.pleaf_literal(tok.lexeme, tok.line)
        if tok.kind is Tok.NAME:
            if self.peek().kind is Tok.LBRACKET:
                self.advance()
                index = self.parse_passive_expression()
                self.expect(Tok.RBRACKET, "']'")
                return self.sink.pleaf_indexed(tok.lexeme, index, tok.line)
            return self.sink.pleaf_name(tok.lexeme, tok.line)
        if tok.kind is Tok.LPAREN:
            inner = self.parse_passive_expression()
            self.expect(Tok.RPAREN, "')'")
            return self.sink.pparens(inner, tok.line)
        if tok.kind in (Tok.EXP, Tok.GT0):
            self.expect(Tok.LPAREN, "'('")
            arg = self.parse_passive_expression()
            self.expect(Tok.RPAREN, "')'")
            return self.sink.pintrinsic(tok.lexeme, arg, tok.line)
        raise CompileError("syntax", f"expected an expression, found {tok.lexeme or 'end of input'!r}", tok.line)


def parse(tokens: list[Token], sink: Sink) -> SourceScript:
    """Parse a token stream, driving one bottom-up synthesis pass over the sink."""
    return Parser(tokens, sink).parse_script()
