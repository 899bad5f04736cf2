"""Single-pass synthesis of primal and adjoint target code.

Four code attributes are synthesized per construct during the one parse pass:
primal text ``p``, forward-section statements ``f``, single-assignment code
``s`` and adjoint statements ``a``, plus the variedness flag ``v`` and the SAC
slot index ``j``.  Every intermediate result of a right-hand side lands in a
slot ``v[j]`` (its adjoint in ``a_v[j]``), with the counter reset at each new
right-hand side; the forward section re-runs the primal while taping
overwritten values, and the reverse section replays statements backwards,
re-evaluating each SAC and accumulating adjoints.

Naming is fixed: slot k -> ``v[k]``/``a_v[k]``, variable x -> ``a_x``,
subprogram or external f -> ``a_f``.  Control flow reverses by flagging
branches (1 for the taken if-branch, 0 for else), counting while-loop trips,
and iterating simple for loops backwards.

Adjoints of active slots are incremented and must be reset to zero right
after being consumed; passive constructs synthesize no adjoint code at all.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

from . import activity
from .activity import is_active
from .emitter import Comment, ForBlock, IfBlock, Line, TargetProgram, TargetSub, WhileBlock
from .errors import CompileError, CompileWarning
from .externals import external_names
from .frontend import SourceScript, parse, tokenize

INTRINSICS = ("exp", "gt0")


@dataclass(frozen=True)
class PassiveAttr:
    """Attribute of a passive-context expression: primal text and variedness."""

    p: str
    v: bool
    line: int


@dataclass(frozen=True)
class ExprAttr:
    """Synthesized attribute of a right-hand-side (sub)expression."""

    p: str
    v: bool
    j: int
    s: tuple
    a: tuple
    line: int


@dataclass(frozen=True)
class LhsAttr:
    p: str
    base: str
    v: bool
    indexed: bool
    line: int

    @property
    def adjoint_name(self) -> str:
        return "a_" + self.p


@dataclass(frozen=True)
class CondAttr:
    p: str
    v: bool
    line: int


@dataclass(frozen=True)
class StmtAttr:
    """Per-statement synthesis: primal nodes, forward nodes, adjoint nodes.

    Adjoint nodes are in their own execution order; reversal over a statement
    sequence happens when the enclosing block or subprogram is reduced.
    """

    primal: tuple = ()
    forward: tuple = ()
    adjoint: tuple = ()


@dataclass(frozen=True)
class SubprogramPair:
    name: str
    primal: TargetSub
    adjoint: TargetSub


def _forward_of(stmts) -> tuple:
    out = []
    for s in stmts:
        out.extend(s.forward)
    return tuple(out)


def _primal_of(stmts) -> tuple:
    out = []
    for s in stmts:
        out.extend(s.primal)
    return tuple(out)


def _adjoint_of(stmts) -> tuple:
    """adjoint(s1; s2) = adjoint(s2) followed by adjoint(s1)."""
    out = []
    for s in reversed(stmts):
        out.extend(s.adjoint)
    return tuple(out)


class SubprogramCtx:
    """Mutable synthesis state for one subprogram."""

    def __init__(self, name: str, params: tuple, line: int):
        self.name = name
        self.params = params
        self.line = line
        self.j = 0
        self.max_sac = 0
        self.vectors: set = set()
        self.scalar_locals: dict = {}  # insertion-ordered set of active scalar locals
        self.assigned: set = set()
        self.noprimal = False
        self.notbr = False
        self.names_seen: set = set(params) | {name}

    def next_j(self) -> int:
        j = self.j
        self.j += 1
        if self.j > self.max_sac:
            self.max_sac = self.j
        return j

    def reset_j(self) -> None:
        self.j = 0

    def set_pragma(self, kind: str, line: int) -> None:
        if getattr(self, kind):
            warnings.warn(
                f"duplicate #pragma {kind} before one statement at line {line}; last wins",
                CompileWarning,
                stacklevel=2,
            )
        setattr(self, kind, True)

    def take_pragmas(self) -> tuple:
        flags = (self.noprimal, self.notbr)
        self.noprimal = False
        self.notbr = False
        return flags

    def fresh_counter(self) -> str:
        k = 0
        while f"C{k}" in self.names_seen:
            k += 1
        name = f"C{k}"
        self.names_seen.add(name)
        return name


class AdjointSink:
    """Sink implementing the translation rules; one target pair per subprogram."""

    def __init__(self, no_pragmas: bool = False, externals: frozenset | None = None):
        self.no_pragmas = no_pragmas
        self.externals = external_names() if externals is None else externals
        self.defined: set = set()
        self.ctx: SubprogramCtx | None = None

    # -- expressions, SAC flavor ----------------------------------------

    def leaf_literal(self, lexeme: str, line: int) -> ExprAttr:
        j = self.ctx.next_j()
        return ExprAttr(p=lexeme, v=False, j=j, s=(f"v[{j}]={lexeme}",), a=(), line=line)

    def leaf_name(self, name: str, line: int) -> ExprAttr:
        self.ctx.names_seen.add(name)
        j = self.ctx.next_j()
        varied = is_active(name)
        a = (f"a_{name}=a_{name}+a_v[{j}]", f"a_v[{j}]=0.0") if varied else ()
        return ExprAttr(p=name, v=varied, j=j, s=(f"v[{j}]={name}",), a=a, line=line)

    def leaf_indexed(self, name: str, index: PassiveAttr, line: int) -> ExprAttr:
        self.ctx.names_seen.add(name)
        activity.check_index_passive(index.v, line)
        j = self.ctx.next_j()
        p = f"{name}[{index.p}]"
        varied = is_active(name)
        a = (f"a_{p}=a_{p}+a_v[{j}]", f"a_v[{j}]=0.0") if varied else ()
        return ExprAttr(p=p, v=varied, j=j, s=(f"v[{j}]={p}",), a=a, line=line)

    def parens(self, inner: ExprAttr, line: int) -> ExprAttr:
        return replace(inner, p=f"({inner.p})")

    def negate(self, operand: ExprAttr, line: int) -> ExprAttr:
        # unary minus reuses the subtraction rule as 0.0 - operand
        zero = self.leaf_literal("0.0", line)
        attr = self.binary("-", zero, operand, line)
        return replace(attr, p=f"-{operand.p}")

    def binary(self, op: str, left: ExprAttr, right: ExprAttr, line: int) -> ExprAttr:
        j = self.ctx.next_j()
        varied = activity.propagate_variedness((left.v, right.v))
        s = left.s + right.s + (f"v[{j}]=v[{left.j}]{op}v[{right.j}]",)
        a: tuple = ()
        if varied:
            incs = []
            if op == "+":
                if left.v:
                    incs.append(f"a_v[{left.j}]=a_v[{left.j}]+a_v[{j}]")
                if right.v:
                    incs.append(f"a_v[{right.j}]=a_v[{right.j}]+a_v[{j}]")
            elif op == "-":
                if left.v:
                    incs.append(f"a_v[{left.j}]=a_v[{left.j}]+a_v[{j}]")
                if right.v:
                    incs.append(f"a_v[{right.j}]=a_v[{right.j}]-a_v[{j}]")
            elif op == "*":
                if left.v:
                    incs.append(f"a_v[{left.j}]=a_v[{left.j}]+v[{right.j}]*a_v[{j}]")
                if right.v:
                    incs.append(f"a_v[{right.j}]=a_v[{right.j}]+v[{left.j}]*a_v[{j}]")
            elif op == "/":
                if left.v:
                    incs.append(f"a_v[{left.j}]=a_v[{left.j}]+a_v[{j}]/v[{right.j}]")
                if right.v:
                    incs.append(
                        f"a_v[{right.j}]=a_v[{right.j}]"
                        f"-v[{left.j}]/(v[{right.j}]*v[{right.j}])*a_v[{j}]"
                    )
            else:
                raise CompileError("syntax", f"unknown operator {op!r}", line)
            # children in reverse operand order
            a = tuple(incs) + (f"a_v[{j}]=0.0",) + right.a + left.a
        return ExprAttr(p=f"{left.p}{op}{right.p}", v=varied, j=j, s=s, a=a, line=line)

    def intrinsic(self, name: str, arg: ExprAttr, line: int) -> ExprAttr:
        if name not in INTRINSICS:
            raise CompileError("unknown-intrinsic", f"unknown intrinsic {name!r}", line)
        j = self.ctx.next_j()
        s = arg.s + (f"v[{j}]={name}(v[{arg.j}])",)
        a: tuple = ()
        if arg.v:
            a = (
                f"a_v[{arg.j}]=a_v[{arg.j}]+d_{name}(v[{arg.j}])*a_v[{j}]",
                f"a_v[{j}]=0.0",
            ) + arg.a
        return ExprAttr(p=f"{name}({arg.p})", v=arg.v, j=j, s=s, a=a, line=line)

    # -- expressions, passive flavor ------------------------------------

    def pleaf_literal(self, lexeme: str, line: int) -> PassiveAttr:
        return PassiveAttr(p=lexeme, v=False, line=line)

    def pleaf_name(self, name: str, line: int) -> PassiveAttr:
        self.ctx.names_seen.add(name)
        return PassiveAttr(p=name, v=is_active(name), line=line)

    def pleaf_indexed(self, name: str, index: PassiveAttr, line: int) -> PassiveAttr:
        self.ctx.names_seen.add(name)
        activity.check_index_passive(index.v, line)
        return PassiveAttr(p=f"{name}[{index.p}]", v=is_active(name), line=line)

    def pparens(self, inner: PassiveAttr, line: int) -> PassiveAttr:
        return replace(inner, p=f"({inner.p})")

    def pnegate(self, operand: PassiveAttr, line: int) -> PassiveAttr:
        return PassiveAttr(p=f"-{operand.p}", v=operand.v, line=line)

    def pbinary(self, op: str, left: PassiveAttr, right: PassiveAttr, line: int) -> PassiveAttr:
        v = activity.propagate_variedness((left.v, right.v))
        return PassiveAttr(p=f"{left.p}{op}{right.p}", v=v, line=line)

    def pintrinsic(self, name: str, arg: PassiveAttr, line: int) -> PassiveAttr:
        if name not in INTRINSICS:
            raise CompileError("unknown-intrinsic", f"unknown intrinsic {name!r}", line)
        return PassiveAttr(p=f"{name}({arg.p})", v=arg.v, line=line)

    def condition(self, left: PassiveAttr, op: str, right: PassiveAttr, line: int) -> CondAttr:
        v = activity.propagate_variedness((left.v, right.v))
        activity.check_condition_passive(v, line)
        return CondAttr(p=f"{left.p}{op}{right.p}", v=v, line=line)

    # -- lvalues and statements ------------------------------------------

    def lvalue(self, name: str, index: PassiveAttr | None, line: int) -> LhsAttr:
        self.ctx.names_seen.add(name)
        self.ctx.reset_j()  # SAC slots are numbered per right-hand side
        if index is not None:
            activity.check_index_passive(index.v, line)
            return LhsAttr(p=f"{name}[{index.p}]", base=name, v=is_active(name),
                           indexed=True, line=line)
        return LhsAttr(p=name, base=name, v=is_active(name), indexed=False, line=line)

    def assign(self, lhs: LhsAttr, rhs: ExprAttr, line: int) -> StmtAttr:
        activity.check_assignment_activity(lhs.v, rhs.v, line)
        ctx = self.ctx
        noprimal, notbr = ctx.take_pragmas()
        ctx.assigned.add(lhs.base)
        if lhs.v and not lhs.indexed and lhs.base not in ctx.params and lhs.base not in ctx.vectors:
            ctx.scalar_locals.setdefault(lhs.base, None)
        p = f"{lhs.p}={rhs.p}"
        varied = lhs.v or rhs.v

        # taping of the overwritten left-hand side; the suppression comments
        # name the vector-level operation for indexed targets
        if lhs.indexed:
            push_text, pop_text = f"push_v({lhs.base})", f"{lhs.base}=pop_v()"
        else:
            push_text, pop_text = f"push_s({lhs.base})", f"{lhs.base}=pop_s()"

        if noprimal:
            forward: tuple = (Comment(f"# {p} omitted due to #pragma noprimal"),)
        elif notbr:
            forward = (Comment(f"# {push_text} omitted due to #pragma notbr"), Line(p))
        else:
            forward = (Line(f"push_s({lhs.p})"), Line(p))

        adj: list = []
        if not noprimal and not notbr:
            adj.append(Line(f"{lhs.p}=pop_s()"))
        elif notbr:
            adj.append(Comment(f"# {pop_text} omitted due to #pragma notbr"))
        if varied:
            # restore precedes the SAC so the right-hand side is re-evaluated
            # on pre-assignment values
            adj.extend(Line(t) for t in rhs.s)
            adj.append(Line(f"a_v[{rhs.j}]=a_v[{rhs.j}]+{lhs.adjoint_name}"))
            adj.append(Line(f"{lhs.adjoint_name}=0.0"))
            adj.extend(Line(t) for t in rhs.a)
        return StmtAttr(primal=(Line(p),), forward=forward, adjoint=tuple(adj))

    def alloc(self, name: str, length: PassiveAttr, line: int) -> StmtAttr:
        activity.check_index_passive(length.v, line)
        ctx = self.ctx
        if name in ctx.vectors:
            raise CompileError("realloc", f"vector {name!r} allocated twice", line)
        ctx.names_seen.add(name)
        ctx.vectors.add(name)
        ctx.assigned.add(name)
        p = f"{name}=[0.0]*{length.p}"
        forward = [Line(p)]
        if is_active(name):
            forward.append(Line(f"a_{name}=[0.0]*{length.p}"))
        return StmtAttr(primal=(Line(p),), forward=tuple(forward), adjoint=())

    def call(self, result: str, callee: str, args: tuple, line: int) -> StmtAttr:
        ctx = self.ctx
        noprimal, notbr = ctx.take_pragmas()
        if callee not in self.defined and callee not in self.externals:
            raise CompileError(
                "unknown-callee", f"call to unknown subprogram or external {callee!r}", line
            )
        active_args = [a for a in args if is_active(a)]
        if not active_args:
            raise CompileError("no-active-arg", f"call to {callee!r} has no active argument", line)
        activity.check_assignment_activity(is_active(result), True, line)
        if result not in args and result not in ctx.vectors and result not in ctx.params:
            raise CompileError(
                "call-result",
                f"call result {result!r} must be an argument name or an allocated vector",
                line,
            )
        ctx.names_seen.update(args)
        ctx.names_seen.add(result)
        ctx.assigned.add(result)
        p = f"{result}={callee}({','.join(args)})"

        if noprimal:
            forward: tuple = (Comment(f"# {p} omitted due to #pragma noprimal"),)
        elif notbr:
            forward = (Comment(f"# push_v({result}) omitted due to #pragma notbr"), Line(p))
        else:
            forward = (Line(f"push_v({result})"), Line(p))

        interleaved = []
        for a in args:
            interleaved.append(a)
            if is_active(a):
                interleaved.append(f"a_{a}")
        adj: list = []
        if not noprimal and not notbr:
            adj.append(Line(f"{result}=pop_v()"))
        elif notbr:
            adj.append(Comment(f"# {result}=pop_v() omitted due to #pragma notbr"))
        adj.append(Line(f"a_{active_args[0]}=a_{callee}({','.join(interleaved)})"))
        return StmtAttr(primal=(Line(p),), forward=forward, adjoint=tuple(adj))

    def if_(self, cond: CondAttr, then_stmts: tuple, else_stmts: tuple, line: int) -> StmtAttr:
        # the taken if-branch tapes 1, the else branch 0
        then_f = _forward_of(then_stmts) + (Line("push_c(1)"),)
        else_f = _forward_of(else_stmts) + (Line("push_c(0)"),)
        return StmtAttr(
            primal=(IfBlock(cond.p, _primal_of(then_stmts), _primal_of(else_stmts)),),
            forward=(IfBlock(cond.p, then_f, else_f),),
            adjoint=(IfBlock("pop_c()==1", _adjoint_of(then_stmts), _adjoint_of(else_stmts)),),
        )

    def while_(self, cond: CondAttr, body: tuple, line: int) -> StmtAttr:
        # the adjoint loop body must run exactly as often as the primal body,
        # so trips are counted and taped
        counter = self.ctx.fresh_counter()
        body_f = _forward_of(body) + (Line(f"{counter}={counter}+1"),)
        forward = (
            Line(f"{counter}=0"),
            WhileBlock(cond.p, body_f),
            Line(f"push_c({counter})"),
        )
        adjoint = (ForBlock(var=counter, bound="pop_c()", body=_adjoint_of(body)),)
        return StmtAttr(
            primal=(WhileBlock(cond.p, _primal_of(body)),),
            forward=forward,
            adjoint=adjoint,
        )

    def for_(self, var: str, bound: PassiveAttr, body: tuple, line: int) -> StmtAttr:
        if is_active(var):
            raise CompileError(
                "active-loop-var", f"loop variable {var!r} is active; counters must be passive", line
            )
        activity.check_index_passive(bound.v, line)
        self.ctx.names_seen.add(var)
        return StmtAttr(
            primal=(ForBlock(var, bound.p, _primal_of(body)),),
            forward=(ForBlock(var, bound.p, _forward_of(body)),),
            adjoint=(ForBlock(var, bound.p, _adjoint_of(body), backwards=True),),
        )

    def pragma(self, kind: str, line: int) -> StmtAttr:
        if self.no_pragmas:
            return StmtAttr()
        self.ctx.set_pragma(kind, line)
        return StmtAttr(primal=(Comment(f"#pragma {kind}"),), forward=(), adjoint=())

    # -- subprogram lifecycle ---------------------------------------------

    def begin_subprogram(self, name: str, params: tuple, line: int) -> None:
        if len(set(params)) != len(params):
            raise CompileError("syntax", f"duplicate parameter name in {name!r}", line)
        self.ctx = SubprogramCtx(name, params, line)

    def subprogram(self, name: str, params: tuple, body: tuple, return_name: str, line: int) -> SubprogramPair:
        ctx = self.ctx
        if ctx.noprimal or ctx.notbr:
            warnings.warn(
                f"pragma before 'return' in {name!r} has no statement to apply to",
                CompileWarning,
                stacklevel=2,
            )
        active_params = [p for p in params if is_active(p)]
        if not active_params:
            raise CompileError("no-active-param", f"subprogram {name!r} has no active parameter", line)
        if return_name not in params and return_name not in ctx.assigned:
            raise CompileError(
                "return-undefined",
                f"returned name {return_name!r} is neither a parameter nor a local",
                line,
            )

        primal_sub = TargetSub(
            name=name,
            params=params,
            forward=_primal_of(body),
            return_name=return_name,
            kind="primal",
        )

        interleaved = []
        for p in params:
            interleaved.append(p)
            if is_active(p):
                interleaved.append(f"a_{p}")
        header: list = []
        if ctx.max_sac > 0:
            header.append(Line(f"v=[0.0]*{ctx.max_sac}"))
            header.append(Line(f"a_v=[0.0]*{ctx.max_sac}"))
        for local in ctx.scalar_locals:
            header.append(Line(f"a_{local}=0.0"))
        adjoint_sub = TargetSub(
            name=f"a_{name}",
            params=tuple(interleaved),
            header=tuple(header),
            forward=_forward_of(body),
            reverse=_adjoint_of(body),
            return_name=f"a_{active_params[0]}",
            kind="adjoint",
        )
        self.defined.add(name)
        self.ctx = None
        return SubprogramPair(name=name, primal=primal_sub, adjoint=adjoint_sub)


@dataclass(frozen=True)
class CompileResult:
    script: SourceScript
    primal: TargetProgram
    adjoint: TargetProgram


def compile_source(source: str, no_pragmas: bool = False,
                   externals: frozenset | None = None) -> CompileResult:
    """Tokenize, parse and synthesize the primal/adjoint target programs."""
    sink = AdjointSink(no_pragmas=no_pragmas, externals=externals)
    script = parse(tokenize(source), sink)
    pairs = script.subprograms
    primal = TargetProgram(
        preamble=script.preamble, subs=tuple(p.primal for p in pairs)
    )
    adjoint = TargetProgram(
        preamble=script.preamble, subs=tuple(p.adjoint for p in pairs)
    )
    return CompileResult(script=script, primal=primal, adjoint=adjoint)
