"""Two-pass assembler, disassembler and the .pdkimg image format.

Syntax: one instruction per line, `mnemonic op1, op2`.  `#` prefixes
immediates, `io[n]` addresses the I/O space, `m.b` and `io[n].b` are bit
operands, `[sp+k]` / `[sp-k]` are stack-pointer-relative operands, `;` starts
a comment.  Directives:

  .arch pdk13            architecture (required, before any instruction)
  .ext spadd, sprel      extensions for the opcode map (may repeat)
  .org ADDR              set the code placement cursor
  .equ NAME, EXPR        define a constant
  .word EXPR [, ...]     emit raw code words at the cursor
  .byte ADDR, V [, ...]  preload data memory (simulator initialization)
  .rodata V | "str" ...  emit constant bytes as `ret k` words

Expressions accept decimal/hex/binary literals, character literals, defined
names, `lo(expr)` / `hi(expr)` and +/-.  Forward references to labels are
resolved in the second pass.

Reserved symbols understood by the simulator loader: `_start` (entry point),
`__irq` (interrupt vector), `__coreN_start` / `__coreN_sp` (per-core reset
state).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import (
    AsmSyntaxError,
    OperandOutOfRange,
    ProgramMemoryOverflow,
    UndefinedSymbol,
    UnknownMnemonic,
)
from .isa import (
    ExtensionSet,
    Instruction,
    OpcodeMap,
    Operand,
    acc,
    bitref,
    build_map,
    imm,
    iobit,
    iomem,
    mem,
    pair,
    prog,
    sprel,
    variant_spec,
)

# ---------------------------------------------------------------------------
# Parsed representation


@dataclass
class SourceOperand:
    kind: str  # 'acc' | 'imm' | 'io' | 'iobit' | 'sprel' | 'bit' | 'bare'
    expr: str = ""
    bit_expr: str = ""


@dataclass
class Item:
    line: int
    kind: str  # 'label' | 'instr' | directive name without the dot
    name: str = ""
    operands: list = field(default_factory=list)
    args: list = field(default_factory=list)


@dataclass
class AssemblyUnit:
    items: list[Item]
    arch: str | None = None
    extensions: list[str] = field(default_factory=list)


@dataclass
class Image:
    variant: object
    extensions: ExtensionSet
    words: dict[int, int]
    symbols: dict[str, int]
    entry: int = 0
    data_init: dict[int, int] = field(default_factory=dict)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(image_dumps(self))


# ---------------------------------------------------------------------------
# Parsing

_LABEL_RE = re.compile(r"^([.\w]+):")
_NAME_RE = re.compile(r"^[.\w]+$")
_IO_RE = re.compile(r"^io\[(.+)\](?:\.(\d))?$", re.IGNORECASE)
_SPREL_RE = re.compile(r"^\[\s*sp\s*([+-].+)\]$", re.IGNORECASE)


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == ";" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def _split_args(text: str) -> list[str]:
    parts, buf, in_str = [], [], False
    for ch in text:
        if ch == '"':
            in_str = not in_str
        if ch == "," and not in_str:
            parts.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    tail = "".join(buf).strip()
    if tail or parts:
        parts.append(tail)
    return parts


def _parse_operand(text: str, line: int) -> SourceOperand:
    text = text.strip()
    if not text:
        raise AsmSyntaxError(line, "empty operand")
    if text.lower() == "a":
        return SourceOperand("acc")
    if text.startswith("#"):
        return SourceOperand("imm", text[1:].strip())
    m = _IO_RE.match(text)
    if m:
        if m.group(2) is not None:
            return SourceOperand("iobit", m.group(1).strip(), m.group(2))
        return SourceOperand("io", m.group(1).strip())
    m = _SPREL_RE.match(text)
    if m:
        return SourceOperand("sprel", m.group(1).replace(" ", ""))
    dot = text.rfind(".")
    if dot > 0 and text[dot + 1 :].isdigit() and len(text[dot + 1 :]) == 1:
        return SourceOperand("bit", text[:dot].strip(), text[dot + 1 :])
    return SourceOperand("bare", text)


def parse(text: str) -> AssemblyUnit:
    """Parse assembly source into an ordered item list (first error wins)."""
    items: list[Item] = []
    arch: str | None = None
    extensions: list[str] = []
    saw_instr = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        while line:
            m = _LABEL_RE.match(line)
            if not m:
                break
            items.append(Item(lineno, "label", m.group(1)))
            line = line[m.end() :].strip()
        if not line:
            continue
        if line.startswith("."):
            head, _, rest = line.partition(" ")
            directive = head[1:].lower()
            args = _split_args(rest)
            if directive == "arch":
                if saw_instr:
                    raise AsmSyntaxError(lineno, ".arch must precede instructions")
                if len(args) != 1 or not args[0]:
                    raise AsmSyntaxError(lineno, ".arch needs one variant name")
                arch = args[0]
            elif directive == "ext":
                names = [a for part in args for a in part.split("+") if a]
                extensions.extend(n.strip() for n in names)
            elif directive in ("org", "equ", "word", "byte", "rodata"):
                if directive != "rodata" and not args:
                    raise AsmSyntaxError(lineno, f".{directive} needs arguments")
                items.append(Item(lineno, directive, args=args))
            else:
                raise AsmSyntaxError(lineno, f"unknown directive .{directive}")
            continue
        head, _, rest = line.partition(" ")
        mnemonic = head.lower()
        if not _NAME_RE.match(mnemonic):
            raise AsmSyntaxError(lineno, f"bad mnemonic {head!r}")
        ops = []
        if rest.strip():
            for part in _split_args(rest):
                if not part:
                    raise AsmSyntaxError(lineno, "malformed operand list")
                ops.append(_parse_operand(part, lineno))
        items.append(Item(lineno, "instr", mnemonic, operands=ops))
        saw_instr = True
    return AssemblyUnit(items=items, arch=arch, extensions=extensions)


# ---------------------------------------------------------------------------
# Expressions

_NUM_RE = re.compile(r"^(0x[0-9a-fA-F]+|0b[01]+|\d+)$")
_CHAR_ESCAPES = {"n": 10, "t": 9, "0": 0, "\\": 92, "'": 39}


def _tokenize_expr(text: str, line: int) -> list[str]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "+-()":
            tokens.append(ch)
            i += 1
        elif ch == "'":
            if i + 1 >= len(text):
                raise AsmSyntaxError(line, f"unterminated character literal in {text!r}")
            j = text.find("'", i + 1 + (text[i + 1] == "\\"))
            if j < 0:
                raise AsmSyntaxError(line, f"unterminated character literal in {text!r}")
            tokens.append(text[i : j + 1])
            i = j + 1
        else:
            m = re.match(r"[.\w$]+", text[i:])
            if not m:
                raise AsmSyntaxError(line, f"bad expression character {ch!r}")
            tokens.append(m.group(0))
            i += m.end()
    return tokens


def eval_expr(text: str, symbols: dict[str, int], line: int) -> int:
    tokens = _tokenize_expr(text, line)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take():
        nonlocal pos
        tok = peek()
        pos += 1
        return tok

    def atom() -> int:
        tok = take()
        if tok is None:
            raise AsmSyntaxError(line, f"truncated expression {text!r}")
        if tok == "-":
            return -atom()
        if tok == "+":
            return atom()
        if tok == "(":
            v = expr()
            if take() != ")":
                raise AsmSyntaxError(line, f"missing ')' in {text!r}")
            return v
        if tok.startswith("'"):
            body = tok[1:-1]
            if body.startswith("\\"):
                if body[1] not in _CHAR_ESCAPES:
                    raise AsmSyntaxError(line, f"unknown escape {body!r}")
                return _CHAR_ESCAPES[body[1]]
            if len(body) != 1:
                raise AsmSyntaxError(line, f"bad character literal {tok}")
            return ord(body)
        if _NUM_RE.match(tok):
            return int(tok, 0)
        if tok in ("lo", "hi") and peek() == "(":
            take()
            v = expr()
            if take() != ")":
                raise AsmSyntaxError(line, f"missing ')' in {text!r}")
            return v & 0xFF if tok == "lo" else (v >> 8) & 0xFF
        if _NAME_RE.match(tok):
            if tok not in symbols:
                raise UndefinedSymbol(line, f"undefined symbol {tok!r}")
            return symbols[tok]
        raise AsmSyntaxError(line, f"bad expression token {tok!r}")

    def expr() -> int:
        v = atom()
        while peek() in ("+", "-"):
            if take() == "+":
                v += atom()
            else:
                v -= atom()
        return v

    v = expr()
    if pos != len(tokens):
        raise AsmSyntaxError(line, f"trailing junk in expression {text!r}")
    return v


# ---------------------------------------------------------------------------
# Assembly


def _rodata_bytes(args: list[str], symbols: dict[str, int], line: int) -> list[int]:
    out = []
    for a in args:
        if a.startswith('"'):
            if not a.endswith('"') or len(a) < 2:
                raise AsmSyntaxError(line, f"unterminated string {a!r}")
            out.extend(ord(c) for c in a[1:-1])
        else:
            v = eval_expr(a, symbols, line)
            if not 0 <= v <= 255:
                raise AsmSyntaxError(line, f"rodata byte {v} out of 0..255")
            out.append(v)
    return out


def emit_rodata(data: bytes | list[int], opmap: OpcodeMap) -> list[int]:
    """Encode constant bytes as `ret k` words (read back by calling them)."""
    return [opmap.encode(Instruction("ret", (imm(b),))) for b in data]


def _build_operand(tok: str, src: SourceOperand, symbols, line, opmap) -> Operand | None:
    """Fit a parsed operand to a template shape token, or return None."""
    if tok == "a":
        return acc() if src.kind == "acc" else None
    if tok == "#":
        if src.kind != "imm":
            return None
        return imm(eval_expr(src.expr, symbols, line))
    if tok == "m":
        if src.kind == "bare":
            return mem(eval_expr(src.expr, symbols, line))
        if src.kind == "sprel" and opmap.extensions.sprel:
            return sprel(eval_expr(src.expr, symbols, line))
        return None
    if tok == "o":
        if src.kind != "sprel":
            return None
        return sprel(eval_expr(src.expr, symbols, line))
    if tok == "n":
        if src.kind != "bare":
            return None
        return pair(eval_expr(src.expr, symbols, line))
    if tok == "p":
        if src.kind != "bare":
            return None
        return prog(eval_expr(src.expr, symbols, line))
    if tok == "io":
        if src.kind != "io":
            return None
        return iomem(eval_expr(src.expr, symbols, line))
    if tok == "m.b":
        if src.kind != "bit":
            return None
        return bitref(eval_expr(src.expr, symbols, line), int(src.bit_expr))
    if tok == "io.b":
        if src.kind != "iobit":
            return None
        return iobit(eval_expr(src.expr, symbols, line), int(src.bit_expr))
    return None


def assemble(
    unit: AssemblyUnit,
    *,
    arch: str | None = None,
    extensions=None,
    reclaim: bool = False,
    opmap: OpcodeMap | None = None,
) -> Image:
    """Two-pass assembly: place and bind symbols, then encode."""
    if opmap is None:
        arch_name = unit.arch or arch
        if arch_name is None:
            raise AsmSyntaxError(0, "no .arch directive and no architecture given")
        if arch and unit.arch and arch != unit.arch:
            raise AsmSyntaxError(0, f"file says .arch {unit.arch}, caller wants {arch}")
        names = list(unit.extensions)
        if extensions:
            names += (
                list(extensions.names())
                if isinstance(extensions, ExtensionSet)
                else list(extensions)
            )
        exts = ExtensionSet.from_names(names)
        opmap = build_map(variant_spec(arch_name), exts, reclaim=reclaim)
    v = opmap.variant

    # pass 1: addresses for labels, sizes for everything
    symbols: dict[str, int] = {}
    equs: list[Item] = []
    cursor = 0
    placed: list[tuple[Item, int]] = []  # instruction/word/rodata items
    for item in unit.items:
        if item.kind == "label":
            if item.name in symbols:
                raise AsmSyntaxError(item.line, f"duplicate label {item.name!r}")
            symbols[item.name] = cursor
            continue
        if item.kind == "equ":
            if len(item.args) != 2 or not _NAME_RE.match(item.args[0]):
                raise AsmSyntaxError(item.line, ".equ needs: .equ NAME, EXPR")
            equs.append(item)
            continue
        if item.kind == "org":
            cursor = eval_expr(item.args[0], symbols, item.line)
            if not 0 <= cursor < v.prog_space:
                raise ProgramMemoryOverflow(
                    item.line, f".org 0x{cursor:x} outside program memory"
                )
            continue
        if item.kind == "byte":
            placed.append((item, cursor))
            continue
        size = 0
        if item.kind == "instr":
            size = 1
        elif item.kind == "word":
            size = len(item.args)
        elif item.kind == "rodata":
            # size is known without evaluating expressions
            size = sum(
                len(a) - 2 if a.startswith('"') else 1 for a in item.args
            )
        placed.append((item, cursor))
        cursor += size
        if cursor > v.prog_space:
            raise ProgramMemoryOverflow(
                item.line,
                f"program exceeds {v.prog_space} words of {v.name} program memory",
            )

    # .equ values may reference labels; resolve them before pass 2
    for item in equs:
        name = item.args[0]
        if name in symbols:
            raise AsmSyntaxError(item.line, f"duplicate symbol {name!r}")
        symbols[name] = eval_expr(item.args[1], symbols, item.line)

    # pass 2: encode
    words: dict[int, int] = {}
    data_init: dict[int, int] = {}
    for item, addr in placed:
        if item.kind == "instr":
            word = _encode_item(item, symbols, opmap)
            words[addr] = word
        elif item.kind == "word":
            for i, a in enumerate(item.args):
                val = eval_expr(a, symbols, item.line)
                if not 0 <= val < v.word_count:
                    raise AsmSyntaxError(
                        item.line, f".word 0x{val:x} exceeds {v.prog_word_width} bits"
                    )
                words[addr + i] = val
        elif item.kind == "rodata":
            for i, b in enumerate(_rodata_bytes(item.args, symbols, item.line)):
                words[addr + i] = opmap.encode(Instruction("ret", (imm(b),)))
        elif item.kind == "byte":
            dest = eval_expr(item.args[0], symbols, item.line)
            vals = [eval_expr(a, symbols, item.line) for a in item.args[1:]]
            for i, b in enumerate(vals):
                if not 0 <= b <= 255:
                    raise AsmSyntaxError(item.line, f".byte value {b} out of 0..255")
                if not 0 <= dest + i < v.data_space:
                    raise AsmSyntaxError(
                        item.line, f".byte address 0x{dest + i:x} outside data space"
                    )
                data_init[dest + i] = b

    return Image(
        variant=v,
        extensions=opmap.extensions,
        words=words,
        symbols=symbols,
        entry=symbols.get("_start", 0),
        data_init=data_init,
    )


def _encode_item(item: Item, symbols, opmap: OpcodeMap) -> int:
    shapes = opmap.shapes(item.name)
    if not shapes:
        raise AsmSyntaxError(
            item.line,
            f"unknown mnemonic {item.name!r} for {opmap.variant.name} "
            f"(extensions: {opmap.extensions})",
        )
    last_err = None
    for shape in sorted(shapes):
        if len(shape) != len(item.operands):
            continue
        ops = []
        for tok, src in zip(shape, item.operands):
            op = _build_operand(tok, src, symbols, item.line, opmap)
            if op is None:
                break
            ops.append(op)
        else:
            try:
                return opmap.encode(Instruction(item.name, tuple(ops)))
            except (OperandOutOfRange, UnknownMnemonic) as e:
                last_err = e
    if last_err is not None:
        raise AsmSyntaxError(item.line, str(last_err))
    raise AsmSyntaxError(
        item.line,
        f"{item.name}: no operand form matches "
        f"{[s.kind for s in item.operands]} under this variant/extension set",
    )


def assemble_text(text: str, **kwargs) -> Image:
    return assemble(parse(text), **kwargs)


# ---------------------------------------------------------------------------
# Disassembly


def disassemble(image: Image, opmap: OpcodeMap | None = None) -> str:
    """Render an image back to source; reassembling reproduces the word map."""
    if opmap is None:
        opmap = build_map(image.variant, image.extensions, reclaim=True)
    lines = [f".arch {image.variant.name}"]
    if image.extensions:
        lines.append(f".ext {', '.join(image.extensions.names())}")
    prev = None
    for addr in sorted(image.words):
        if prev is None or addr != prev + 1:
            lines.append(f".org 0x{addr:03x}")
        word = image.words[addr]
        try:
            instr = opmap.decode(word)
            lines.append(f"    {instr}")
        except Exception:
            lines.append(f"    .word 0x{word:04x}")
        prev = addr
    for addr in sorted(image.data_init):
        lines.append(f".byte 0x{addr:02x}, 0x{image.data_init[addr]:02x}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# .pdkimg format


def image_dumps(image: Image) -> str:
    ext = "+".join(image.extensions.names()) or "none"
    lines = [f"PDKIMG 1 {image.variant.name} {ext}"]
    for addr in sorted(image.words):
        lines.append(f"{addr:04x}: {image.words[addr]:04x}")
    for name in sorted(image.symbols):
        lines.append(f"SYM {name} {image.symbols[name]:04x}")
    for addr in sorted(image.data_init):
        lines.append(f"DATA {addr:04x} {image.data_init[addr]:02x}")
    return "\n".join(lines) + "\n"


def image_loads(text: str) -> Image:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty image file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "PDKIMG" or head[1] != "1":
        raise ValueError(f"bad image header {lines[0]!r}")
    variant = variant_spec(head[2])
    exts = (
        ExtensionSet.none()
        if head[3] == "none"
        else ExtensionSet.from_names(head[3].split("+"))
    )
    words: dict[int, int] = {}
    symbols: dict[str, int] = {}
    data_init: dict[int, int] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "SYM":
            symbols[parts[1]] = int(parts[2], 16)
        elif parts[0] == "DATA":
            data_init[int(parts[1], 16)] = int(parts[2], 16)
        else:
            addr = int(parts[0].rstrip(":"), 16)
            words[addr] = int(parts[1], 16)
    return Image(
        variant=variant,
        extensions=exts,
        words=words,
        symbols=symbols,
        entry=symbols.get("_start", 0),
        data_init=data_init,
    )


def image_load(path: str) -> Image:
    with open(path, "r", encoding="utf-8") as fh:
        return image_loads(fh.read())
