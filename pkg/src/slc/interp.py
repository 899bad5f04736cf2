"""Tree-walking interpreter for target programs.

Executes primal and adjoint target code hermetically: scalar/vector frames,
subprogram calls, intrinsics, registered externals and the tape stacks all
live in process.  Statement texts are compiled once into closures over a
frame dict; vectors are Python lists bound by reference within a call chain
(callee mutations are visible to the caller) while scalars pass by value.

Evaluation is strict left-to-right, ``reversed(range(n))`` iterates n-1..0,
and division by zero follows IEEE with a warning.  After an adjoint entry
returns, all three tape stacks must be empty.
"""

from __future__ import annotations

import math
import warnings

from .activity import is_active
from .emitter import Comment, ForBlock, IfBlock, Line, TargetProgram, TargetSub
from .errors import SLRuntimeError, TapeImbalance
from .externals import REGISTRY, External
from .frontend import RELOPS, Tok, Token, tokenize
from .runtime import ExecStats, SmoothingConfig, TapeStacks, d_exp, d_gt0, gt0

_RELOP_FNS = {
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _ieee_div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        warnings.warn("division by zero during target execution", RuntimeWarning, stacklevel=2)
        if a == 0.0:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        warnings.warn("exp overflow during target execution", RuntimeWarning, stacklevel=2)
        return math.inf


class _CompiledSub:
    def __init__(self, sub: TargetSub, interp: "Interpreter"):
        self.name = sub.name
        self.params = sub.params
        self.return_name = sub.return_name
        self.vector_params = tuple(p for p in sub.params if is_active(p))
        nodes = tuple(sub.header) + tuple(sub.forward) + tuple(sub.reverse)
        self.steps = interp._compile_nodes(nodes)


class Interpreter:
    """One interpreter instance per execution context; instances are independent."""

    def __init__(self, programs, seed: int = 42, h: float = 1e-3,
                 strict_kinks: bool = False, externals: dict | None = None):
        if isinstance(programs, TargetProgram):
            programs = (programs,)
        self.seed = seed
        self.cfg = SmoothingConfig(h=h, strict_kinks=strict_kinks)
        self.stats = ExecStats()
        self.stacks = TapeStacks(self.stats)
        self._intrinsics = {
            "exp": _safe_exp,
            "gt0": gt0,
            "d_exp": d_exp,
            "d_gt0": lambda x: d_gt0(x, self.cfg, self.stats),
        }
        self.subs: dict = {}
        self._externals: dict = {}
        registry = REGISTRY if externals is None else externals
        for ext in registry.values():
            self._externals[ext.name] = ext.primal
            self._externals[f"a_{ext.name}"] = ext.adjoint
        for program in programs:
            for sub in program.subs:
                if sub.name in self.subs:
                    raise SLRuntimeError(f"subprogram {sub.name!r} loaded twice")
                self.subs[sub.name] = _CompiledSub(sub, self)

    # -- public API -------------------------------------------------------

    def call(self, entry: str, args: list):
        """Run a subprogram by name; adjoint entries must leave the tapes empty."""
        result = self._invoke(entry, list(args))
        if entry.startswith("a_") and not self.stacks.balanced:
            raise TapeImbalance(
                f"tape stacks not empty after {entry}: "
                f"{len(self.stacks.scalars)} scalars, {len(self.stacks.vectors)} vectors, "
                f"{len(self.stacks.controls)} controls"
            )
        return result

    # -- execution core ----------------------------------------------------

    def _invoke(self, name: str, values: list):
        sub = self.subs.get(name)
        if sub is None:
            ext = self._externals.get(name)
            if ext is None:
                raise SLRuntimeError(f"unknown subprogram or external {name!r}")
            try:
                return ext(*values, self.seed)
            except TypeError as exc:
                raise SLRuntimeError(f"bad call to external {name!r}: {exc}") from exc
        if len(values) != len(sub.params):
            raise SLRuntimeError(
                f"{name} expects {len(sub.params)} arguments, got {len(values)}"
            )
        frame = dict(zip(sub.params, values))
        for param in sub.vector_params:
            if not isinstance(frame[param], list):
                raise SLRuntimeError(
                    f"active argument {param!r} of {name} must be a vector"
                )
        for step in sub.steps:
            step(frame)
        try:
            return frame[sub.return_name]
        except KeyError:
            raise SLRuntimeError(f"{name} returned unbound name {sub.return_name!r}") from None

    # -- compilation -------------------------------------------------------

    def _compile_nodes(self, nodes) -> list:
        steps = []
        for node in nodes:
            if isinstance(node, Comment):
                continue
            if isinstance(node, Line):
                for part in node.text.split(";"):
                    if part.strip():
                        steps.append(self._compile_line(part.strip()))
            elif isinstance(node, ForBlock):
                steps.append(self._compile_for(node))
            elif isinstance(node, IfBlock):
                steps.append(self._compile_if(node))
            else:  # WhileBlock
                steps.append(self._compile_while(node))
        return steps

    def _compile_for(self, node: ForBlock):
        bound = self._compile_expr_text(node.bound)
        body = self._compile_nodes(node.body)
        var = node.var
        stats = self.stats
        if node.backwards:
            def run_backwards(frame):
                n = _trip_count(bound(frame))
                stats.adjoint_loop_iterations += n
                for i in range(n - 1, -1, -1):
                    frame[var] = i
                    for step in body:
                        step(frame)
            return run_backwards

        def run_forwards(frame):
            n = _trip_count(bound(frame))
            for i in range(n):
                frame[var] = i
                for step in body:
                    step(frame)
        return run_forwards

    def _compile_while(self, node):
        cond = self._compile_cond_text(node.cond)
        body = self._compile_nodes(node.body)

        def run(frame):
            while cond(frame):
                for step in body:
                    step(frame)
        return run

    def _compile_if(self, node: IfBlock):
        cond = self._compile_cond_text(node.cond)
        then_body = self._compile_nodes(node.then_body)
        else_body = self._compile_nodes(node.else_body)

        def run(frame):
            for step in (then_body if cond(frame) else else_body):
                step(frame)
        return run

    def _compile_line(self, text: str):
        p = _StmtParser(tokenize(text), self, text)
        return p.compile_statement()

    def _compile_expr_text(self, text: str):
        p = _StmtParser(tokenize(text), self, text)
        fn = p.compile_expression()
        p.expect_end()
        return fn

    def _compile_cond_text(self, text: str):
        p = _StmtParser(tokenize(text), self, text)
        left = p.compile_expression()
        op = p.advance()
        if op.kind not in RELOPS:
            raise SLRuntimeError(f"expected comparison in condition {text!r}")
        right = p.compile_expression()
        p.expect_end()
        relop = _RELOP_FNS[op.lexeme]
        return lambda frame: relop(left(frame), right(frame))


def _trip_count(value) -> int:
    n = int(value)
    if n != value:
        raise SLRuntimeError(f"loop bound must be integral, got {value!r}")
    return max(n, 0)


def _read(frame: dict, name: str):
    try:
        return frame[name]
    except KeyError:
        raise SLRuntimeError(f"unbound name {name!r}") from None


def _checked_index(vec, name: str, index) -> int:
    if not isinstance(vec, list):
        raise SLRuntimeError(f"{name!r} is not a vector")
    i = int(index)
    if i != index:
        raise SLRuntimeError(f"non-integral index {index!r} into {name!r}")
    if not 0 <= i < len(vec):
        raise SLRuntimeError(f"index {i} out of range for {name!r} of length {len(vec)}")
    return i


class _StmtParser:
    """Compiles one target statement or expression into a closure."""

    def __init__(self, tokens: list, interp: Interpreter, text: str):
        self.tokens = tokens
        self.interp = interp
        self.text = text
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        i = self.pos + offset
        if i < len(self.tokens):
            return self.tokens[i]
        return Token(Tok.EOF, "", 0)

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind is not Tok.EOF:
            self.pos += 1
        return tok

    def expect(self, kind: Tok) -> Token:
        tok = self.advance()
        if tok.kind is not kind:
            raise SLRuntimeError(f"malformed target statement {self.text!r}")
        return tok

    def expect_end(self) -> None:
        if self.peek().kind is not Tok.EOF:
            raise SLRuntimeError(f"trailing tokens in target statement {self.text!r}")

    # -- statements ------------------------------------------------------

    def compile_statement(self):
        interp = self.interp
        tok = self.peek()
        if tok.kind is Tok.RETURN:
            raise SLRuntimeError("unexpected return inside statement list")
        if tok.kind is Tok.NAME and tok.lexeme in ("push_s", "push_v", "push_c") \
                and self.peek(1).kind is Tok.LPAREN:
            kind = self.advance().lexeme
            self.expect(Tok.LPAREN)
            if kind == "push_v":
                name = self.expect(Tok.NAME).lexeme
                self.expect(Tok.RPAREN)
                self.expect_end()
                stacks = interp.stacks

                def push_vec(frame):
                    vec = _read(frame, name)
                    if not isinstance(vec, list):
                        raise SLRuntimeError(f"push_v argument {name!r} is not a vector")
                    stacks.push_v(vec)
                return push_vec
            arg = self.compile_expression()
            self.expect(Tok.RPAREN)
            self.expect_end()
            stacks = interp.stacks
            if kind == "push_s":
                return lambda frame: stacks.push_s(arg(frame))
            return lambda frame: stacks.push_c(int(arg(frame)))

        name = self.expect(Tok.NAME).lexeme
        index_fn = None
        if self.peek().kind is Tok.LBRACKET:
            self.advance()
            index_fn = self.compile_expression()
            self.expect(Tok.RBRACKET)
        self.expect(Tok.ASSIGN)

        if index_fn is None and self.peek().kind is Tok.LBRACKET:
            return self._compile_alloc(name)
        if (index_fn is None and self.peek().kind is Tok.NAME
                and self.peek(1).kind is Tok.LPAREN
                and self.peek().lexeme not in ("pop_s", "pop_v", "pop_c", "d_exp", "d_gt0")):
            return self._compile_call(name)

        rhs = self.compile_expression()
        self.expect_end()
        if index_fn is None:
            def assign_scalar(frame):
                frame[name] = rhs(frame)
            return assign_scalar

        def assign_element(frame):
            value = rhs(frame)  # strict left-to-right: RHS before the store
            vec = _read(frame, name)
            vec[_checked_index(vec, name, index_fn(frame))] = value
        return assign_element

    def _compile_alloc(self, name: str):
        self.expect(Tok.LBRACKET)
        self.expect(Tok.FLOAT)
        self.expect(Tok.RBRACKET)
        self.expect(Tok.STAR)
        length = self.compile_expression()
        self.expect_end()

        def alloc(frame):
            n = length(frame)
            count = int(n)
            if count != n or count < 0:
                raise SLRuntimeError(f"bad vector length {n!r} for {name!r}")
            frame[name] = [0.0] * count
        return alloc

    def _compile_call(self, result: str):
        callee = self.expect(Tok.NAME).lexeme
        self.expect(Tok.LPAREN)
        args = []
        if self.peek().kind is not Tok.RPAREN:
            args.append(self.expect(Tok.NAME).lexeme)
            while self.peek().kind is Tok.COMMA:
                self.advance()
                args.append(self.expect(Tok.NAME).lexeme)
        self.expect(Tok.RPAREN)
        self.expect_end()
        interp = self.interp

        def run_call(frame):
            values = [_read(frame, a) for a in args]
            frame[result] = interp._invoke(callee, values)
        return run_call

    # -- expressions -------------------------------------------------------

    def compile_expression(self):
        fn = self._term()
        while self.peek().kind in (Tok.PLUS, Tok.MINUS):
            op = self.advance().kind
            right = self._term()
            left = fn
            if op is Tok.PLUS:
                fn = lambda frame, l=left, r=right: l(frame) + r(frame)
            else:
                fn = lambda frame, l=left, r=right: l(frame) - r(frame)
        return fn

    def _term(self):
        fn = self._factor()
        while self.peek().kind in (Tok.STAR, Tok.SLASH):
            op = self.advance().kind
            right = self._factor()
            left = fn
            if op is Tok.STAR:
                fn = lambda frame, l=left, r=right: l(frame) * r(frame)
            else:
                fn = lambda frame, l=left, r=right: _ieee_div(l(frame), r(frame))
        return fn

    def _factor(self):
        if self.peek().kind is Tok.MINUS:
            self.advance()
            operand = self._factor()
            return lambda frame: -operand(frame)
        return self._atom()

    def _atom(self):
        tok = self.advance()
        if tok.kind is Tok.FLOAT:
            value = float(tok.lexeme)
            return lambda frame: value
        if tok.kind is Tok.INT:
            value = float(tok.lexeme)
            return lambda frame: value
        if tok.kind in (Tok.EXP, Tok.GT0):
            fn = self.interp._intrinsics[tok.lexeme]
            self.expect(Tok.LPAREN)
            arg = self.compile_expression()
            self.expect(Tok.RPAREN)
            return lambda frame: fn(arg(frame))
        if tok.kind is Tok.LPAREN:
            inner = self.compile_expression()
            self.expect(Tok.RPAREN)
            return inner
        if tok.kind is Tok.NAME:
            name = tok.lexeme
            if self.peek().kind is Tok.LPAREN:
                return self._builtin_call(name)
            if self.peek().kind is Tok.LBRACKET:
                self.advance()
                index = self.compile_expression()
                self.expect(Tok.RBRACKET)

                def read_element(frame):
                    vec = _read(frame, name)
                    return vec[_checked_index(vec, name, index(frame))]
                return read_element
            return lambda frame: _read(frame, name)
        raise SLRuntimeError(f"malformed target expression {self.text!r}")

    def _builtin_call(self, name: str):
        stacks = self.interp.stacks
        self.expect(Tok.LPAREN)
        if name in ("pop_s", "pop_v", "pop_c"):
            self.expect(Tok.RPAREN)
            if name == "pop_s":
                return lambda frame: stacks.pop_s()
            if name == "pop_v":
                return lambda frame: stacks.pop_v()
            return lambda frame: stacks.pop_c()
        if name in ("d_exp", "d_gt0"):
            fn = self.interp._intrinsics[name]
            arg = self.compile_expression()
            self.expect(Tok.RPAREN)
            return lambda frame: fn(arg(frame))
        raise SLRuntimeError(
            f"subprogram call {name!r} cannot be nested inside an expression"
        )
