"""OpenQASM 2 frontend for a fixed gate subset.

Supported statements: ``OPENQASM 2.0;``, ``qreg``/``creg`` declarations,
applications of h/x/y/z/s/t/rx/ry/rz/cx/cz/rzz, ``measure a -> b;``,
``reset``, and ``barrier`` on one or two explicit qubits. ``rzz`` is
accepted as a native token. Include statements, custom gate definitions and
classical control flow are rejected. Angle expressions may use numeric
literals, ``pi`` and ``+ - * /`` with parentheses; they are evaluated to a
64-bit float at parse time.

Both directions are pure functions and safe under arbitrary concurrency.
"""
from __future__ import annotations

import ast
import math
import re

from .circuit import Circuit, GATES_1Q, GATES_2Q, ROTATIONS, Instruction, instr


class QasmError(ValueError):
    """Base class for frontend errors."""


class QasmSyntaxError(QasmError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnsupportedGateError(QasmError):
    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: unsupported gate {name!r}")
        self.gate_name = name
        self.line = line
        self.column = column


class QasmIndexError(QasmError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<comment>//[^\n]*)"
    r"|(?P<real>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)"
    r"|(?P<int>\d+)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<arrow>->)"
    r"|(?P<str>\"[^\"]*\")"
    r"|(?P<sym>[()\[\]{},;+\-*/^=<>.])"
)

_KEYWORDS = {"OPENQASM", "qreg", "creg", "measure", "reset", "barrier", "include"}


class _Token:
    __slots__ = ("text", "line", "column")

    def __init__(self, text: str, line: int, column: int):
        self.text = text
        self.line = line
        self.column = column


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QasmSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group(0)
        if m.lastgroup not in ("ws", "comment"):
            tokens.append(_Token(lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def _here(self) -> tuple[int, int]:
        if self.pos < len(self.tokens):
            t = self.tokens[self.pos]
            return t.line, t.column
        if self.tokens:
            t = self.tokens[-1]
            return t.line, t.column + len(t.text)
        return 1, 1

    def peek(self) -> str | None:
        return self.tokens[self.pos].text if self.pos < len(self.tokens) else None

    def next(self, expected: str | None = None) -> _Token:
        if self.pos >= len(self.tokens):
            line, col = self._here()
            raise QasmSyntaxError(
                f"unexpected end of input (expected {expected or 'token'})", line, col
            )
        tok = self.tokens[self.pos]
        if expected is not None and tok.text != expected:
            raise QasmSyntaxError(
                f"expected {expected!r}, got {tok.text!r}", tok.line, tok.column
            )
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)


def _eval_angle(expr_text: str, line: int, col: int) -> float:
    try:
        tree = ast.parse(expr_text, mode="eval")
    except SyntaxError:
        raise QasmSyntaxError(f"bad angle expression {expr_text!r}", line, col)

    def ev(node) -> float:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and isinstance(
            node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)
        ):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            return a / b
        raise QasmSyntaxError(f"bad angle expression {expr_text!r}", line, col)

    return ev(tree)


def parse_qasm(text: str, name: str = "circuit") -> Circuit:
    """Parse OpenQASM 2 source into a :class:`Circuit`.

    Instruction order matches program order. Unsupported gates raise
    :class:`UnsupportedGateError`; malformed input raises
    :class:`QasmSyntaxError` with line/column; out-of-range register indices
    raise :class:`QasmIndexError`.
    """
    p = _Parser(_tokenize(text))
    tok = p.next("OPENQASM")
    version = p.next()
    if version.text != "2.0":
        raise QasmSyntaxError(f"unsupported version {version.text!r}",
                              version.line, version.column)
    p.next(";")

    qregs: dict[str, tuple[int, int]] = {}  # name -> (offset, size)
    cregs: dict[str, tuple[int, int]] = {}
    num_qubits = 0
    num_clbits = 0
    instructions: list[Instruction] = []

    def parse_ref(regs: dict[str, tuple[int, int]], what: str) -> int:
        tok = p.next()
        if tok.text not in regs:
            raise QasmSyntaxError(f"unknown {what} register {tok.text!r}",
                                  tok.line, tok.column)
        offset, size = regs[tok.text]
        p.next("[")
        idx_tok = p.next()
        if not idx_tok.text.isdigit():
            raise QasmSyntaxError(f"expected index, got {idx_tok.text!r}",
                                  idx_tok.line, idx_tok.column)
        idx = int(idx_tok.text)
        if idx >= size:
            raise QasmIndexError(
                f"index {idx} out of range for {what} register "
                f"{tok.text!r} of size {size}", idx_tok.line, idx_tok.column)
        p.next("]")
        return offset + idx

    while not p.at_end():
        head = p.next()
        if head.text == "qreg" or head.text == "creg":
            name_tok = p.next()
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name_tok.text):
                raise QasmSyntaxError(f"bad register name {name_tok.text!r}",
                                      name_tok.line, name_tok.column)
            p.next("[")
            size_tok = p.next()
            if not size_tok.text.isdigit():
                raise QasmSyntaxError(f"expected register size, got {size_tok.text!r}",
                                      size_tok.line, size_tok.column)
            size = int(size_tok.text)
            p.next("]")
            p.next(";")
            if head.text == "qreg":
                if name_tok.text in qregs:
                    raise QasmSyntaxError(f"duplicate qreg {name_tok.text!r}",
                                          name_tok.line, name_tok.column)
                qregs[name_tok.text] = (num_qubits, size)
                num_qubits += size
            else:
                if name_tok.text in cregs:
                    raise QasmSyntaxError(f"duplicate creg {name_tok.text!r}",
                                          name_tok.line, name_tok.column)
                cregs[name_tok.text] = (num_clbits, size)
                num_clbits += size
        elif head.text == "include":
            raise QasmSyntaxError("include statements are not supported",
                                  head.line, head.column)
        elif head.text == "measure":
            q = parse_ref(qregs, "quantum")
            p.next("->")
            c = parse_ref(cregs, "classical")
            p.next(";")
            instructions.append(instr("measure", q, clbit=c))
        elif head.text == "reset":
            q = parse_ref(qregs, "quantum")
            p.next(";")
            instructions.append(instr("reset", q))
        elif head.text == "barrier":
            qs = [parse_ref(qregs, "quantum")]
            if p.peek() == ",":
                p.next(",")
                qs.append(parse_ref(qregs, "quantum"))
            p.next(";")
            instructions.append(instr("barrier", *qs))
        elif head.text in GATES_1Q or head.text in GATES_2Q:
            kind = head.text
            angle = None
            if p.peek() == "(":
                p.next("(")
                start_tok = p.next()
                parts, depth = [start_tok.text], 0
                while True:
                    nxt = p.peek()
                    if nxt is None:
                        raise QasmSyntaxError("unterminated angle expression",
                                              start_tok.line, start_tok.column)
                    if nxt == "(":
                        depth += 1
                    elif nxt == ")":
                        if depth == 0:
                            break
                        depth -= 1
                    parts.append(p.next().text)
                p.next(")")
                angle = _eval_angle("".join(parts), start_tok.line, start_tok.column)
            if angle is None and kind in ROTATIONS:
                raise QasmSyntaxError(f"{kind} requires an angle", head.line, head.column)
            if angle is not None and kind not in ROTATIONS:
                raise QasmSyntaxError(f"{kind} takes no angle", head.line, head.column)
            qs = [parse_ref(qregs, "quantum")]
            while p.peek() == ",":
                p.next(",")
                qs.append(parse_ref(qregs, "quantum"))
            p.next(";")
            want = 2 if kind in GATES_2Q else 1
            if len(qs) != want:
                raise QasmSyntaxError(
                    f"{kind} takes {want} qubit argument(s), got {len(qs)}",
                    head.line, head.column)
            if want == 2 and qs[0] == qs[1]:
                raise QasmSyntaxError(f"{kind} qubits must be distinct",
                                      head.line, head.column)
            instructions.append(instr(kind, *qs, angle=angle))
        elif re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", head.text) and \
                head.text not in _KEYWORDS:
            raise UnsupportedGateError(head.text, head.line, head.column)
        else:
            raise QasmSyntaxError(f"unexpected token {head.text!r}",
                                  head.line, head.column)

    return Circuit(num_qubits, instructions, name=name,
                   num_clbits=num_clbits).validate()


def _format_angle(angle: float) -> str:
    if angle == math.pi:
        return "pi"
    if angle == -math.pi:
        return "-pi"
    return repr(float(angle))


def emit_qasm(c: Circuit) -> str:
    """Render a circuit as OpenQASM 2 text, one instruction per line.

    The output re-parses to a circuit structurally equal to ``c``. Circuits
    containing sign-marked or unrecorded measurements are internal runtime
    artifacts and cannot be rendered.
    """
    c.validate()
    lines = ["OPENQASM 2.0;", f"qreg q[{c.num_qubits}];"]
    if c.num_clbits > 0:
        lines.append(f"creg c[{c.num_clbits}];")
    for ins in c.instructions:
        if ins.kind == "measure":
            if ins.sign or ins.clbit is None:
                raise QasmError(
                    "sign-marked or unrecorded measurements have no QASM form")
            lines.append(f"measure q[{ins.qubits[0]}] -> c[{ins.clbit}];")
        elif ins.kind == "reset":
            lines.append(f"reset q[{ins.qubits[0]}];")
        elif ins.kind == "barrier":
            args = ",".join(f"q[{q}]" for q in ins.qubits)
            lines.append(f"barrier {args};")
        elif ins.angle is not None:
            args = ",".join(f"q[{q}]" for q in ins.qubits)
            lines.append(f"{ins.kind}({_format_angle(ins.angle)}) {args};")
        else:
            args = ",".join(f"q[{q}]" for q in ins.qubits)
            lines.append(f"{ins.kind} {args};")
    return "\n".join(lines) + "\n"
