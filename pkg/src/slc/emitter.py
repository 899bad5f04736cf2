"""Target-program structure and its indentation-delimited text form.

The compiler synthesizes statements as text, one simple statement per Line
node, with dedicated nodes for the three block forms.  A TargetSub keeps the
statements grouped into header/forward/reverse sections so the adjoint shape
survives into the structured form; primal subprograms use only the forward
section.  ``emit`` renders the text (2-space indents, ``:`` blocks, section
banners in adjoint mode) and ``parse_target`` reads such text back, so a
program can round-trip between the two representations.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import CompileError


@dataclass(frozen=True)
class Line:
    text: str


@dataclass(frozen=True)
class Comment:
    text: str  # full comment text including the leading '#'


@dataclass(frozen=True)
class ForBlock:
    var: str
    bound: str
    body: tuple
    backwards: bool = False

    @property
    def header(self) -> str:
        rng = f"range({self.bound})"
        if self.backwards:
            rng = f"reversed({rng})"
        return f"for {self.var} in {rng} :"


@dataclass(frozen=True)
class WhileBlock:
    cond: str
    body: tuple

    @property
    def header(self) -> str:
        return f"while {self.cond} :"


@dataclass(frozen=True)
class IfBlock:
    cond: str
    then_body: tuple
    else_body: tuple

    @property
    def header(self) -> str:
        return f"if {self.cond} :"


@dataclass(frozen=True)
class TargetSub:
    name: str
    params: tuple
    forward: tuple
    header: tuple = ()
    reverse: tuple = ()
    return_name: str = ""
    kind: str = "primal"  # "adjoint" subs carry section banners

    @property
    def signature(self) -> str:
        return f"def {self.name}({','.join(self.params)}) :"


@dataclass(frozen=True)
class TargetProgram:
    preamble: tuple
    subs: tuple

    def sub(self, name: str) -> TargetSub:
        for s in self.subs:
            if s.name == name:
                return s
        raise KeyError(name)


def format_stmt(node, depth: int) -> list:
    """Render one statement at the given nesting depth (2 spaces per level).

    ';'-joined multi-statements coming out of one synthesis step are split one
    per line.
    """
    pad = "  " * depth
    if isinstance(node, Comment):
        return [pad + node.text]
    if isinstance(node, Line):
        return [pad + part.strip() for part in node.text.split(";") if part.strip()]
    if isinstance(node, (ForBlock, WhileBlock)):
        lines = [pad + node.header]
        for child in node.body:
            lines.extend(format_stmt(child, depth + 1))
        return lines
    if isinstance(node, IfBlock):
        lines = [pad + node.header]
        for child in node.then_body:
            lines.extend(format_stmt(child, depth + 1))
        lines.append(pad + "else :")
        for child in node.else_body:
            lines.extend(format_stmt(child, depth + 1))
        return lines
    raise TypeError(f"not a target statement: {node!r}")


def emit(program: TargetProgram) -> str:
    """Deterministic text form of a target program."""
    lines: list = []
    for imp in program.preamble:
        lines.append(imp)
    if program.preamble:
        lines.append("")
    for i, sub in enumerate(program.subs):
        if i:
            lines.append("")
        lines.append(sub.signature)
        for node in sub.header:
            lines.extend(format_stmt(node, 1))
        if sub.kind == "adjoint":
            lines.append("  # forward section")
        for node in sub.forward:
            lines.extend(format_stmt(node, 1))
        if sub.kind == "adjoint":
            lines.append("  # reverse section")
        for node in sub.reverse:
            lines.extend(format_stmt(node, 1))
        lines.append(f"  return {sub.return_name}")
    return "\n".join(lines) + "\n"


def output_paths(input_path) -> tuple:
    """Companion file names for a compiled script."""
    p = Path(input_path)
    return p.with_suffix(".primal.txt"), p.with_suffix(".adjoint.txt")


class _BlockFrame:
    def __init__(self, depth: int):
        self.depth = depth
        self.nodes: list = []


def _parse_block_header(stripped: str, line_no: int):
    body = stripped[:-1].rstrip()  # drop the trailing ':'
    if body.startswith("for ") and " in " in body:
        var, _, rng = body[4:].partition(" in ")
        rng = rng.strip()
        backwards = False
        if rng.startswith("reversed(") and rng.endswith(")"):
            rng = rng[len("reversed("):-1].strip()
            backwards = True
        if not (rng.startswith("range(") and rng.endswith(")")):
            raise CompileError("syntax", f"malformed loop range {rng!r}", line_no)
        return ForBlock(var=var.strip(), bound=rng[len("range("):-1].strip(),
                        body=(), backwards=backwards)
    if body.startswith("while "):
        return WhileBlock(cond=body[len("while "):].strip(), body=())
    if body.startswith("if "):
        return IfBlock(cond=body[len("if "):].strip(), then_body=(), else_body=())
    if body == "else":
        return "else"
    raise CompileError("syntax", f"unrecognized block header {stripped!r}", line_no)


def _close_frame(header, nodes: tuple, parent: list):
    if isinstance(header, ForBlock):
        parent.append(ForBlock(header.var, header.bound, nodes, header.backwards))
    elif isinstance(header, WhileBlock):
        parent.append(WhileBlock(header.cond, nodes))
    elif isinstance(header, IfBlock):
        parent.append(IfBlock(header.cond, nodes, ()))
    elif header == "else":
        prev = parent.pop()
        if not isinstance(prev, IfBlock):
            raise CompileError("syntax", "else without a preceding if", 0)
        parent.append(IfBlock(prev.cond, prev.then_body, nodes))
    else:
        raise AssertionError(header)


def parse_target(text: str) -> TargetProgram:
    """Read emitted target text back into structured form.

    Section banners come back as ordinary comments, which keeps
    emit(parse_target(emit(p))) a fixed point.
    """
    preamble: list = []
    subs: list = []
    # per open block: (header-or-None, depth, nodes); index 0 is the sub body
    stack: list = []
    current: dict | None = None

    def close_to(depth: int):
        while len(stack) > 1 and stack[-1][1] >= depth:
            header, _, nodes = stack.pop()
            _close_frame(header, tuple(nodes), stack[-1][2])

    def finish_sub():
        nonlocal current
        if current is None:
            return
        close_to(1)
        _, _, nodes = stack.pop()
        ret = current.get("return")
        if ret is None:
            raise CompileError("syntax", f"subprogram {current['name']} has no return", current["line"])
        subs.append(TargetSub(name=current["name"], params=current["params"],
                              forward=tuple(nodes), return_name=ret))
        current = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if current is None and (stripped.startswith("from ") or stripped.startswith("import ")):
            preamble.append(stripped)
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        if indent % 2:
            raise CompileError("syntax", "odd indentation", line_no)
        depth = indent // 2
        if stripped.startswith("#"):
            if current is not None:
                close_to(depth + 1)
                stack[-1][2].append(Comment(stripped))
            continue
        if stripped.startswith("def "):
            finish_sub()
            head = stripped[4:].rstrip(":").rstrip()
            name, _, rest = head.partition("(")
            params = rest.rstrip(")").strip()
            current = {
                "name": name.strip(),
                "params": tuple(p.strip() for p in params.split(",")) if params else (),
                "line": line_no,
            }
            stack = [(None, 1, [])]
            continue
        if current is None:
            raise CompileError("syntax", f"statement outside subprogram: {stripped!r}", line_no)
        close_to(depth + 1)
        if stripped.endswith(":"):
            header = _parse_block_header(stripped, line_no)
            stack.append((header, depth + 1, []))
        elif stripped.startswith("return "):
            current["return"] = stripped[len("return "):].strip()
        else:
            for part in stripped.split(";"):
                if part.strip():
                    stack[-1][2].append(Line(part.strip()))
    finish_sub()
    return TargetProgram(preamble=tuple(preamble), subs=tuple(subs))
