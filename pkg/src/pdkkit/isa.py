"""Architecture variants, instruction model, opcode maps and the word codec.

The four variants (pdk13/14/15/16) differ in word width, address-space sizes
and hardware-thread count.  Official documentation for the real devices does
not publish opcodes, so the encodings here are an invented, documented,
table-driven layout (see layouts.py); what is preserved exactly is the
*structure* of the opcode space that matters for extension capacity:
pdk13 has three unallocated runs of 35, 8 and 5 words, pdk14's two widest
runs are 88 and 67 words, and pdk15/pdk16 keep runs wide enough for several
instructions with full memory-operand fields.

An opcode map is a list of non-overlapping templates.  Each template owns a
contiguous, naturally aligned block of words: the fixed opcode bits are the
high bits, operand fields are packed into the low bits in declaration order
(first declared field highest).  That makes gap arithmetic exact and keeps
encode/decode trivially invertible.
"""

from __future__ import annotations

import json
import os
from bisect import bisect_right
from dataclasses import dataclass, field, replace

from .errors import (
    ExtensionConflict,
    NotAVariant,
    OperandOutOfRange,
    UnallocatedOpcode,
    UnknownMnemonic,
)

# ---------------------------------------------------------------------------
# Architecture variants


@dataclass(frozen=True)
class ArchVariant:
    name: str
    prog_word_width: int
    prog_addr_bits: int
    data_addr_bits: int
    io_addr_bits: int
    max_hw_threads: int
    optional_instrs: frozenset[str] = frozenset()

    @property
    def word_count(self) -> int:
        return 1 << self.prog_word_width

    @property
    def data_space(self) -> int:
        return 1 << self.data_addr_bits

    @property
    def io_space(self) -> int:
        return 1 << self.io_addr_bits

    @property
    def prog_space(self) -> int:
        return 1 << self.prog_addr_bits

    @property
    def bit_ops_lower_half_only(self) -> bool:
        # Bit set/reset/test on pdk13/14/15 reach only the lower half of the
        # data address space; pdk16 bit ops carry a full-width address field.
        return self.name != "pdk16"

    @property
    def has_ldspt(self) -> bool:
        """ldsptl/ldspth (program read via the word just above stack top)."""
        return self.name in ("pdk13", "pdk14")

    @property
    def has_ldtab(self) -> bool:
        """ldtabl/ldtabh (program read via a 16-bit pointer in data memory)."""
        return self.name in ("pdk15", "pdk16")


# Note: pdk16 really does have fewer I/O address bits (6) than pdk15 (7);
# the table is implemented as published.
VARIANTS: dict[str, ArchVariant] = {
    "pdk13": ArchVariant("pdk13", 13, 10, 6, 5, 1),
    "pdk14": ArchVariant("pdk14", 14, 11, 7, 6, 2, frozenset({"mul"})),
    "pdk15": ArchVariant("pdk15", 15, 12, 8, 7, 1, frozenset({"mul"})),
    "pdk16": ArchVariant(
        "pdk16", 16, 13, 9, 6, 8, frozenset({"mul", "pushw", "igoto", "icall"})
    ),
}


def variant_spec(name: str) -> ArchVariant:
    """Return the architecture row for a variant name."""
    try:
        return VARIANTS[name]
    except KeyError:
        raise NotAVariant(f"unknown architecture variant {name!r}") from None


def spadd_domain(variant: ArchVariant | str) -> set[int]:
    """Valid immediates of the proposed stack-pointer-adjust instruction.

    Even numbers only; -8..6 on pdk13 and -16..14 on pdk14.  The immediate
    field widens by one bit per variant step, so pdk15 covers -32..30 and
    pdk16 covers -64..62.
    """
    v = variant_spec(variant) if isinstance(variant, str) else variant
    bits = _spadd_field_bits(v)
    half = 1 << (bits - 1)
    return {2 * k for k in range(-half, half)}


def _spadd_field_bits(v: ArchVariant) -> int:
    return {"pdk13": 3, "pdk14": 4, "pdk15": 5, "pdk16": 6}[v.name]


# ---------------------------------------------------------------------------
# Extension set

EXTENSION_NAMES = (
    "spadd",
    "idxsp",
    "sprel",
    "idxxch",
    "cmpxchg_dir",
    "cmpxchg_ind",
    "coreid",
    "atomic_rmw_ind",
    "pushw",
    "igoto_icall",
    "da",
    "gint_io",
)


@dataclass(frozen=True)
class ExtensionSet:
    spadd: bool = False
    idxsp: bool = False
    sprel: bool = False
    idxxch: bool = False
    cmpxchg_dir: bool = False
    cmpxchg_ind: bool = False
    coreid: bool = False
    atomic_rmw_ind: bool = False
    pushw: bool = False
    igoto_icall: bool = False
    da: bool = False
    gint_io: bool = False

    def __post_init__(self):
        if self.sprel and self.idxsp:
            raise ExtensionConflict(
                "sprel and idxsp compete for the same design slot; "
                "enable at most one of them per map"
            )

    @classmethod
    def none(cls) -> "ExtensionSet":
        return cls()

    @classmethod
    def of(cls, *names: str) -> "ExtensionSet":
        return cls.from_names(names)

    @classmethod
    def from_names(cls, names) -> "ExtensionSet":
        flags = {}
        for n in names:
            n = n.strip()
            if not n:
                continue
            if n not in EXTENSION_NAMES:
                raise ExtensionConflict(f"unknown extension name {n!r}")
            flags[n] = True
        return cls(**flags)

    def names(self) -> tuple[str, ...]:
        return tuple(n for n in EXTENSION_NAMES if getattr(self, n))

    def __bool__(self) -> bool:
        return bool(self.names())

    def __str__(self) -> str:
        return "+".join(self.names()) or "none"


# ---------------------------------------------------------------------------
# Operands and instructions

# Operand kinds:
#   acc    the accumulator
#   imm    immediate byte (also spadd's even immediate)
#   mem    direct data-memory address
#   io     I/O-space address
#   bit    data-memory bit reference (addr, bit)
#   iobit  I/O-space bit reference (addr, bit)
#   pair   16-bit-aligned data-memory pair address (even)
#   sprel  stack-pointer-relative offset (signed)
#   prog   program-memory address (goto/call target)

ACC = "acc"
IMM = "imm"
MEM = "mem"
IO = "io"
BIT = "bit"
IOBIT = "iobit"
PAIR = "pair"
SPREL = "sprel"
PROG = "prog"


@dataclass(frozen=True)
class Operand:
    kind: str
    value: int = 0
    bit: int = 0

    def __str__(self) -> str:
        if self.kind == ACC:
            return "a"
        if self.kind == IMM:
            return f"#{self.value}" if self.value < 10 else f"#0x{self.value:02x}"
        if self.kind == MEM or self.kind == PAIR:
            return f"0x{self.value:02x}"
        if self.kind == IO:
            return f"io[{self.value}]"
        if self.kind == BIT:
            return f"0x{self.value:02x}.{self.bit}"
        if self.kind == IOBIT:
            return f"io[{self.value}].{self.bit}"
        if self.kind == SPREL:
            return f"[sp{self.value:+d}]" if self.value else "[sp+0]"
        if self.kind == PROG:
            return f"0x{self.value:03x}"
        return f"{self.kind}:{self.value}"


def acc() -> Operand:
    return Operand(ACC)


def imm(v: int) -> Operand:
    return Operand(IMM, v)


def mem(addr: int) -> Operand:
    return Operand(MEM, addr)


def iomem(addr: int) -> Operand:
    return Operand(IO, addr)


def bitref(addr: int, bit: int) -> Operand:
    return Operand(BIT, addr, bit)


def iobit(addr: int, bit: int) -> Operand:
    return Operand(IOBIT, addr, bit)


def pair(addr: int) -> Operand:
    return Operand(PAIR, addr)


def sprel(offset: int) -> Operand:
    return Operand(SPREL, offset)


def prog(addr: int) -> Operand:
    return Operand(PROG, addr)


@dataclass(frozen=True)
class Instruction:
    mnemonic: str
    operands: tuple[Operand, ...] = ()

    def __str__(self) -> str:
        if not self.operands:
            return self.mnemonic
        return f"{self.mnemonic} " + ", ".join(str(o) for o in self.operands)


# ---------------------------------------------------------------------------
# Templates

# Field letters used in bit-pattern strings:
#   m data address   i io address   k immediate   p program address
#   b bit index      n pair address (stored as addr>>1)
#   o sp-relative offset (signed)   s spadd immediate (stored as k/2, signed)
FIELD_LETTERS = {"m", "i", "k", "p", "b", "n", "o", "s"}


@dataclass(frozen=True)
class Field:
    letter: str
    width: int


@dataclass(frozen=True)
class Template:
    mnemonic: str
    # operand shape tokens: 'a', '#', 'm', 'io', 'm.b', 'io.b', 'n', 'o', 'p', 's'
    shape: tuple[str, ...]
    base: int
    fields: tuple[Field, ...]
    cycles: int = 1
    skip: bool = False  # conditional skip: cycles is the not-taken cost
    sem: str = ""
    origin: str = "baseline"

    @property
    def field_bits(self) -> int:
        return sum(f.width for f in self.fields)

    @property
    def size(self) -> int:
        return 1 << self.field_bits

    @property
    def end(self) -> int:
        return self.base + self.size

    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.mnemonic, self.shape)

    def pattern(self, word_width: int) -> str:
        """Render as an MSB-first bit-pattern string with field letters."""
        bits = []
        prefix = self.base >> self.field_bits
        for i in range(word_width - self.field_bits - 1, -1, -1):
            bits.append("1" if (prefix >> i) & 1 else "0")
        for f in self.fields:
            bits.extend(f.letter * f.width)
        return " ".join(bits)


def _sext(value: int, bits: int) -> int:
    mask = (1 << bits) - 1
    value &= mask
    if value & (1 << (bits - 1)):
        value -= 1 << bits
    return value


# ---------------------------------------------------------------------------
# Opcode map


@dataclass
class OpcodeMap:
    variant: ArchVariant
    extensions: ExtensionSet
    entries: tuple[Template, ...]
    provenance: str = "paper_informed_baseline"
    notes: tuple[str, ...] = ()

    # derived lookup state
    _bases: list[int] = field(default_factory=list, repr=False)
    _by_base: list[Template] = field(default_factory=list, repr=False)
    _by_key: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda t: t.base))
        object.__setattr__(self, "entries", entries)
        self.validate()
        self._bases = [t.base for t in entries]
        self._by_base = list(entries)
        self._by_key = {}
        for t in entries:
            self._by_key.setdefault(t.key(), []).append(t)

    # -- structure ---------------------------------------------------------

    def validate(self) -> None:
        limit = self.variant.word_count
        prev_end = 0
        for t in self.entries:
            if t.base % t.size:
                raise ValueError(f"template {t.mnemonic} at 0x{t.base:x} is unaligned")
            if t.end > limit:
                raise ValueError(f"template {t.mnemonic} exceeds the {self.variant.prog_word_width}-bit word")
            if t.base < prev_end:
                raise ValueError(f"template {t.mnemonic} overlaps its predecessor")
            prev_end = t.end

    def gaps(self) -> list[tuple[int, int]]:
        """Maximal unallocated runs as (start, length), ascending by start."""
        out = []
        cursor = 0
        for t in self.entries:
            if t.base > cursor:
                out.append((cursor, t.base - cursor))
            cursor = t.end
        if cursor < self.variant.word_count:
            out.append((cursor, self.variant.word_count - cursor))
        return out

    def allocated_words(self) -> int:
        return sum(t.size for t in self.entries)

    def mnemonics(self) -> set[str]:
        return {t.mnemonic for t in self.entries}

    def shapes(self, mnemonic: str) -> list[tuple[str, ...]]:
        return [k[1] for k in self._by_key if k[0] == mnemonic]

    def template_at(self, word: int) -> Template | None:
        i = bisect_right(self._bases, word) - 1
        if i < 0:
            return None
        t = self._by_base[i]
        return t if word < t.end else None

    # -- codec -------------------------------------------------------------

    def encode(self, instr: Instruction) -> int:
        candidates = []
        for (mn, shape), templates in self._by_key.items():
            if mn != instr.mnemonic or len(shape) != len(instr.operands):
                continue
            if all(
                self._operand_matches(tok, op)
                for tok, op in zip(shape, instr.operands)
            ):
                candidates.extend(templates)
        if not candidates:
            if any(k[0] == instr.mnemonic for k in self._by_key):
                raise UnknownMnemonic(
                    f"{instr.mnemonic} exists but has no form matching "
                    f"operands {tuple(str(o) for o in instr.operands)} "
                    f"under this variant/extension set"
                )
            raise UnknownMnemonic(
                f"mnemonic {instr.mnemonic!r} is not in this opcode map"
            )
        t = min(candidates, key=lambda c: c.base)
        word = t.base
        shift = t.field_bits
        fi = 0
        for tok, op in zip(t.shape, instr.operands):
            if tok == "a":
                continue
            if tok in ("m.b", "io.b"):
                f_addr, f_bit = t.fields[fi], t.fields[fi + 1]
                fi += 2
                shift -= f_addr.width
                word |= self._bit_addr_value(tok, f_addr, op) << shift
                if not 0 <= op.bit <= 7:
                    raise OperandOutOfRange(f"bit index {op.bit} out of 0..7")
                shift -= f_bit.width
                word |= op.bit << shift
            else:
                f = t.fields[fi]
                fi += 1
                shift -= f.width
                word |= self._field_value(f, op) << shift
        return word

    def _bit_addr_value(self, tok: str, f: Field, op: Operand) -> int:
        v = self.variant
        if tok == "io.b":
            if not 0 <= op.value < v.io_space:
                raise OperandOutOfRange(f"I/O address {op.value} out of range")
            return op.value
        limit = 1 << f.width
        if not 0 <= op.value < limit:
            if v.bit_ops_lower_half_only and op.value < v.data_space:
                raise OperandOutOfRange(
                    f"bit operations on {v.name} can only access the lower "
                    f"half of the data address space "
                    f"(0x{op.value:02x} >= 0x{limit:02x})"
                )
            raise OperandOutOfRange(f"data address 0x{op.value:x} out of range")
        return op.value

    def decode(self, word: int) -> Instruction:
        t = self.template_at(word)
        if t is None:
            raise UnallocatedOpcode(word)
        offset = word - t.base
        values = []
        shift = t.field_bits
        for f in t.fields:
            shift -= f.width
            values.append((offset >> shift) & ((1 << f.width) - 1))
        return Instruction(t.mnemonic, self._operands_from_fields(t, values))

    # -- operand/field plumbing --------------------------------------------

    def _operand_matches(self, tok: str, op: Operand) -> bool:
        if tok == "a":
            return op.kind == ACC
        if tok == "#":
            return op.kind == IMM
        if tok == "m":
            if op.kind == MEM:
                return True
            # Under sprel the existing direct-address field doubles as the
            # sp-relative form (upper two address bits = 11).
            return op.kind == SPREL and self.extensions.sprel
        if tok == "o":
            return op.kind == SPREL
        if tok == "io":
            return op.kind == IO
        if tok == "m.b":
            return op.kind == BIT
        if tok == "io.b":
            return op.kind == IOBIT
        if tok == "n":
            return op.kind == PAIR
        if tok == "p":
            return op.kind in (PROG, IMM)
        if tok == "s":
            return op.kind == IMM
        return False

    def _field_value(self, f: Field, op: Operand) -> int:
        v = self.variant
        if f.letter == "m":
            if op.kind == SPREL:
                qbits = v.data_addr_bits - 2
                if not -(1 << (qbits - 1)) <= op.value < (1 << (qbits - 1)):
                    raise OperandOutOfRange(
                        f"sp-relative offset {op.value} is outside the "
                        f"quarter-space window of +/-{1 << (qbits - 1)}"
                    )
                return (0b11 << qbits) | (op.value & ((1 << qbits) - 1))
            if not 0 <= op.value < v.data_space:
                raise OperandOutOfRange(
                    f"data address 0x{op.value:x} exceeds the "
                    f"{v.data_addr_bits}-bit data space"
                )
            if self.extensions.sprel and (op.value >> (v.data_addr_bits - 2)) == 0b11:
                raise OperandOutOfRange(
                    f"data address 0x{op.value:x} lies in the quarter of the "
                    f"address space reserved for sp-relative addressing"
                )
            return op.value
        if f.letter == "i":
            if not 0 <= op.value < v.io_space:
                raise OperandOutOfRange(f"I/O address {op.value} out of range")
            return op.value
        if f.letter == "k":
            if not -256 <= op.value < 256:
                raise OperandOutOfRange(f"immediate {op.value} does not fit a byte")
            return op.value & 0xFF
        if f.letter == "p":
            if not 0 <= op.value < v.prog_space:
                raise OperandOutOfRange(
                    f"program address 0x{op.value:x} exceeds "
                    f"{v.prog_addr_bits} bits"
                )
            return op.value
        if f.letter == "b":
            if not 0 <= op.bit <= 7:
                raise OperandOutOfRange(f"bit index {op.bit} out of 0..7")
            return op.bit
        if f.letter == "n":
            if op.value % 2:
                raise OperandOutOfRange(
                    f"pair address 0x{op.value:x} must be 16-bit aligned (even)"
                )
            if not 0 <= op.value < v.data_space:
                raise OperandOutOfRange(f"pair address 0x{op.value:x} out of range")
            return op.value >> 1
        if f.letter == "o":
            if not -(1 << (f.width - 1)) <= op.value < (1 << (f.width - 1)):
                raise OperandOutOfRange(
                    f"sp-relative offset {op.value} is outside the "
                    f"quarter-space window of +/-{1 << (f.width - 1)}"
                )
            return op.value & ((1 << f.width) - 1)
        if f.letter == "s":
            if op.value % 2:
                raise OperandOutOfRange("spadd immediate must be even")
            half = 1 << (f.width - 1)
            if not -2 * half <= op.value <= 2 * (half - 1):
                raise OperandOutOfRange(
                    f"spadd immediate {op.value} outside {-2 * half}..{2 * (half - 1)}"
                )
            return (op.value >> 1) & ((1 << f.width) - 1)
        raise ValueError(f"unknown field letter {f.letter}")

    def _operands_from_fields(self, t: Template, values: list[int]) -> tuple[Operand, ...]:
        v = self.variant
        ops: list[Operand] = []
        vi = 0

        def next_value() -> int:
            nonlocal vi
            val = values[vi]
            vi += 1
            return val

        for tok in t.shape:
            if tok == "a":
                ops.append(acc())
            elif tok == "#":
                f = t.fields[vi]
                if f.letter == "s":
                    ops.append(imm(2 * _sext(next_value(), f.width)))
                else:
                    ops.append(imm(next_value()))
            elif tok == "m":
                raw = next_value()
                if self.extensions.sprel and (raw >> (v.data_addr_bits - 2)) == 0b11:
                    qbits = v.data_addr_bits - 2
                    ops.append(sprel(_sext(raw & ((1 << qbits) - 1), qbits)))
                else:
                    ops.append(mem(raw))
            elif tok == "o":
                f = t.fields[vi]
                ops.append(sprel(_sext(next_value(), f.width)))
            elif tok == "io":
                ops.append(iomem(next_value()))
            elif tok == "m.b":
                addr = next_value()
                bit = next_value()
                ops.append(bitref(addr, bit))
            elif tok == "io.b":
                addr = next_value()
                bit = next_value()
                ops.append(iobit(addr, bit))
            elif tok == "n":
                ops.append(pair(next_value() << 1))
            elif tok == "p":
                ops.append(prog(next_value()))
            else:
                raise ValueError(f"unknown shape token {tok}")
        return tuple(ops)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "format": "pdkkit-opcode-map",
            "version": 1,
            "variant": self.variant.name,
            "word_width": self.variant.prog_word_width,
            "extensions": list(self.extensions.names()),
            "provenance": self.provenance,
            "notes": list(self.notes),
            "entries": [
                {
                    "mnemonic": t.mnemonic,
                    "operands": list(t.shape),
                    "pattern": t.pattern(self.variant.prog_word_width),
                    "cycles": t.cycles,
                    "skip": t.skip,
                    "sem": t.sem,
                    "origin": t.origin,
                }
                for t in self.entries
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "OpcodeMap":
        doc = json.loads(text)
        if doc.get("format") != "pdkkit-opcode-map" or doc.get("version") != 1:
            raise ValueError("not a version-1 pdkkit opcode map document")
        variant = variant_spec(doc["variant"])
        exts = ExtensionSet.from_names(doc.get("extensions", []))
        entries = []
        for e in doc["entries"]:
            base, fields = _parse_pattern(e["pattern"], variant.prog_word_width, e["mnemonic"])
            entries.append(
                Template(
                    mnemonic=e["mnemonic"],
                    shape=tuple(e["operands"]),
                    base=base,
                    fields=tuple(fields),
                    cycles=e.get("cycles", 1),
                    skip=e.get("skip", False),
                    sem=e.get("sem", e["mnemonic"]),
                    origin=e.get("origin", "baseline"),
                )
            )
        return cls(
            variant=variant,
            extensions=exts,
            entries=tuple(entries),
            provenance=doc.get("provenance", "paper_informed_baseline"),
            notes=tuple(doc.get("notes", ())),
        )


def _parse_pattern(pattern: str, word_width: int, who: str) -> tuple[int, list[Field]]:
    """Parse an MSB-first bit-pattern string into (base, fields)."""
    bits = pattern.split()
    if len(bits) != word_width:
        raise ValueError(f"{who}: pattern has {len(bits)} bits, expected {word_width}")
    base = 0
    fields: list[Field] = []
    pos = len(bits)
    for ch in bits:
        pos -= 1
        if ch in ("0", "1"):
            if fields:
                raise ValueError(f"{who}: fixed bit below an operand field")
            base |= int(ch) << pos
        elif ch in FIELD_LETTERS:
            if fields and fields[-1].letter == ch:
                fields[-1] = Field(ch, fields[-1].width + 1)
            elif any(f.letter == ch for f in fields):
                raise ValueError(f"{who}: field letter {ch!r} is not contiguous")
            else:
                fields.append(Field(ch, 1))
        else:
            raise ValueError(f"{who}: bad pattern character {ch!r}")
    return base, fields


# ---------------------------------------------------------------------------
# Gap analysis


@dataclass(frozen=True)
class GapReport:
    variant: str
    extensions: tuple[str, ...]
    word_count: int
    allocated: int
    gaps: tuple[tuple[int, int], ...]  # (start, length), sorted by length desc
    capacity_notes: tuple[str, ...]

    @property
    def widest(self) -> int:
        return self.gaps[0][1] if self.gaps else 0

    def lengths(self) -> list[int]:
        return [g[1] for g in self.gaps]

    def to_text(self) -> str:
        lines = [
            f"opcode gap report: {self.variant} "
            f"(extensions: {'+'.join(self.extensions) or 'none'})",
            f"granularity: single {self.word_count.bit_length() - 1}-bit words; "
            f"allocated {self.allocated} + gap {self.word_count - self.allocated} "
            f"= {self.word_count}",
        ]
        if not self.gaps:
            lines.append("no gaps: the map is fully allocated")
        for start, length in self.gaps:
            lines.append(f"  gap at 0x{start:04x}: {length} opcodes")
        lines.extend(self.capacity_notes)
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(
            {
                "variant": self.variant,
                "extensions": list(self.extensions),
                "granularity": "word",
                "word_count": self.word_count,
                "allocated": self.allocated,
                "gaps": [{"start": s, "length": n} for s, n in self.gaps],
                "widest": self.widest,
                "capacity_notes": list(self.capacity_notes),
            },
            indent=2,
        )


def gap_analysis(opmap: OpcodeMap) -> GapReport:
    """Describe unallocated runs and whether candidate extensions would fit."""
    from .layouts import extension_block_requests

    raw = opmap.gaps()
    gaps = tuple(sorted(raw, key=lambda g: (-g[1], g[0])))
    notes = []
    for ext in EXTENSION_NAMES:
        if getattr(opmap.extensions, ext):
            continue
        requests = extension_block_requests(ext, opmap.variant)
        if not requests:
            notes.append(f"  {ext}: needs no encoding space (fits)")
            continue
        ok = _requests_fit(requests, raw)
        need = max(requests)
        widest = gaps[0][1] if gaps else 0
        verdict = "fits" if ok else f"does NOT fit (widest gap {widest})"
        blocks = f"{len(requests)} aligned block(s) of {need}" if len(requests) > 1 else f"an aligned run of {need}"
        notes.append(f"  {ext}: needs {blocks} opcodes; {verdict}")
    return GapReport(
        variant=opmap.variant.name,
        extensions=opmap.extensions.names(),
        word_count=opmap.variant.word_count,
        allocated=opmap.allocated_words(),
        gaps=gaps,
        capacity_notes=tuple(notes),
    )


def _requests_fit(requests: list[int], gaps: list[tuple[int, int]]) -> bool:
    """Greedy aligned placement of block requests into gaps (largest first)."""
    free = sorted(gaps)
    for size in sorted(requests, reverse=True):
        placed = False
        # widest-gap-first, like the real placement policy
        for i, (start, length) in sorted(
            enumerate(free), key=lambda e: (-e[1][1], e[1][0])
        ):
            base = -(-start // size) * size
            if base + size <= start + length:
                free.pop(i)
                if base > start:
                    free.append((start, base - start))
                if base + size < start + length:
                    free.append((base + size, start + length - base - size))
                free.sort()
                placed = True
                break
        if not placed:
            return False
    return True


# ---------------------------------------------------------------------------
# Map construction entry points


def build_map(
    variant: ArchVariant | str,
    exts: ExtensionSet | None = None,
    *,
    reclaim: bool = False,
    optional: frozenset[str] | None = None,
) -> OpcodeMap:
    """Build the per-variant opcode map with the requested extensions placed.

    Extensions are placed into baseline gaps (widest remaining gap first, at
    the lowest aligned address inside it).  When `reclaim` is set, extensions
    that do not fit may take over the redundant baseline opcodes instead
    (`addc m,a` for memory-operand instructions, `nadd` on pdk15/16, `not a`
    for single-word instructions); reclamations are recorded in the map notes.

    If the PDKKIT_MAPS environment variable points to a directory holding a
    `<variant>.json` opcode-map document, that document replaces the built-in
    baseline layout.
    """
    from .layouts import build_baseline, place_extensions

    v = variant_spec(variant) if isinstance(variant, str) else variant
    exts = exts or ExtensionSet.none()

    maps_dir = os.environ.get("PDKKIT_MAPS")
    base = None
    if maps_dir:
        path = os.path.join(maps_dir, f"{v.name}.json")
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                base = OpcodeMap.from_json(fh.read())
            if base.variant.name != v.name:
                raise ValueError(f"{path} describes {base.variant.name}, not {v.name}")
            if base.extensions.names() == exts.names():
                return base
            if base.extensions:
                raise ValueError(
                    f"{path} already carries extensions {base.extensions}; "
                    f"cannot re-target it to {exts}"
                )
    if base is None:
        base = build_baseline(v, optional=optional)
    if not exts:
        return base
    return place_extensions(base, exts, reclaim=reclaim)


def encode(instr: Instruction, opmap: OpcodeMap) -> int:
    return opmap.encode(instr)


def decode(word: int, opmap: OpcodeMap) -> Instruction:
    return opmap.decode(word)
