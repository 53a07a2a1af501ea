"""Code-sequence generators and the extension-evaluation harness.

Generates the sequences whose costs motivate the proposed extensions, runs
them on the simulator, and compares code sizes of a small hand-written corpus
across extension configurations (the established integer benchmarks need more
RAM than these parts have, so the corpus stands in at desk scale).

Scenario memory convention (data space):
  0x00/0x01  pseudo-register byte plus its pair partner (indirect pointer)
  0x02-0x07  scratch and stash bytes
  0x08-0x0f  scenario inputs/outputs for the static-locals mode
  0x10-0x1f  stack region (initial sp = 0x20 for scenario sequences)

Stack locals live below the stack pointer; a frame of N bytes allocated by
moving sp up leaves local i at [sp-N+i].  The sp-relative window is a signed
quarter of the data space, so pdk13 reaches offsets -8..7, pdk14 -16..15,
pdk15 -32..31 and pdk16 -64..63; accesses outside the window fall back to the
explicit pointer-arithmetic sequence through the pseudo-register.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
from dataclasses import dataclass, field

from .asm import assemble_text
from .errors import OverlappingRanges, UnsupportedCombination
from .isa import ExtensionSet, variant_spec
from .sim import Machine, RunConfig, load

MODES = ("static_locals", "stack_baseline", "stack_extended")

SP0 = 0x20  # initial stack pointer for scenario sequences


def _count_instrs(lines) -> int:
    n = 0
    for ln in lines:
        s = ln.split(";")[0].strip()
        if not s or s.endswith(":") or s.startswith("."):
            continue
        n += 1
    return n


@dataclass
class LoweredSequence:
    kind: str
    mode: str | None
    extensions: ExtensionSet
    lines: list[str]
    inputs: dict[str, int] = field(default_factory=dict)
    outputs: dict[str, int] = field(default_factory=dict)
    clobbers: set = field(default_factory=set)
    measured_cycles: int | None = None
    arch: str = "pdk13"

    @property
    def size_words(self) -> int:
        return _count_instrs(self.lines)

    @property
    def instructions(self) -> list[str]:
        return [
            ln.split(";")[0].strip()
            for ln in self.lines
            if ln.split(";")[0].strip()
            and not ln.split(";")[0].strip().endswith(":")
        ]

    def program(self) -> str:
        head = [f".arch {self.arch}"]
        if self.extensions:
            head.append(f".ext {', '.join(self.extensions.names())}")
        head.append(f".equ __core0_sp, 0x{SP0:02x}")
        head.append("_start:")
        return "\n".join(head + self.lines + ["    stopsys", ""])

    def assemble(self):
        return assemble_text(self.program(), reclaim=True)


def measure(seq: LoweredSequence, *, poke=None, max_cycles=200_000) -> int:
    """Run the sequence to its stopsys and record the cycles it consumed."""
    m = load(seq.assemble(), RunConfig(max_cycles=max_cycles))
    if poke:
        for addr, val in poke.items():
            m.poke(addr, val)
    r = m.run()
    if r.halt_reason != "stopsys":
        raise RuntimeError(f"sequence did not halt cleanly: {r.halt_reason}")
    seq.measured_cycles = r.cycle - 1  # exclude the stopsys cycle itself
    return seq.measured_cycles


# ---------------------------------------------------------------------------
# 16-bit addition over locals (the stack-access cost anchor)


def _sprel_half(variant) -> int:
    return 1 << (variant_spec(variant).data_addr_bits - 3)


def _baseline_add16_lines(s1: int, s2: int, d: int) -> list[str]:
    """The generic stack sequence: explicit sp-offset computation through the
    pseudo-register pair and idxm per access.

    s1/s2/d are byte distances below sp of the two source pairs and the
    destination pair (low byte; high byte is one closer to sp).  With the
    canonical distances 6/4/2 this is exactly 34 instructions and, with the
    six idxm accesses costing two cycles each, 40 cycles.
    """
    return [
        f"    mov a, #0          ; address-pair high byte := 0",
        f"    mov 0x01, a",
        f"    mov a, io[0]       ; sp",
        f"    sub a, #{s1}       ; -> &src1.lo",
        f"    mov 0x00, a",
        f"    idxm a, 0x00       ; src1.lo            [2cy]",
        f"    mov 0x02, a        ; stash src1.lo",
        f"    inc 0x00           ; -> &src1.hi",
        f"    idxm a, 0x00       ; src1.hi            [2cy]",
        f"    mov 0x03, a        ; stash src1.hi",
        f"    mov a, io[0]",
        f"    sub a, #{s2}       ; -> &src2.lo",
        f"    mov 0x00, a",
        f"    idxm a, 0x00       ; src2.lo            [2cy]",
        f"    mov 0x04, a        ; stash src2.lo",
        f"    inc 0x00           ; -> &src2.hi",
        f"    idxm a, 0x00       ; src2.hi            [2cy]",
        f"    mov 0x05, a        ; stash src2.hi",
        f"    mov a, 0x02        ; low-byte sum",
        f"    add a, 0x04        ; carry set here",
        f"    mov 0x02, a        ; stash sum.lo (mov leaves flags alone)",
        f"    mov a, 0x03        ; high-byte sum",
        f"    addc a, 0x05",
        f"    mov 0x03, a        ; stash sum.hi",
        f"    mov a, #0          ; re-establish the address-pair high byte",
        f"    mov 0x01, a",
        f"    mov a, io[0]",
        f"    sub a, #{d}        ; -> &dst.lo",
        f"    mov 0x00, a",
        f"    mov a, 0x02",
        f"    idxm 0x00, a       ; dst.lo             [2cy]",
        f"    inc 0x00           ; -> &dst.hi",
        f"    mov a, 0x03",
        f"    idxm 0x00, a       ; dst.hi             [2cy]",
    ]


def gen_add16_locals(
    mode: str, exts: ExtensionSet | None = None, *, arch: str = "pdk13"
) -> LoweredSequence:
    """c = a + b over 16-bit locals in one of the three access disciplines."""
    exts = exts or ExtensionSet.none()
    if mode not in MODES:
        raise UnsupportedCombination(f"unknown mode {mode!r}")
    if mode == "stack_extended" and not (exts.spadd or exts.idxsp or exts.sprel):
        raise UnsupportedCombination(
            "stack_extended needs at least one of spadd/idxsp/sprel"
        )

    if mode == "static_locals":
        lines = [
            "    mov a, 0x08        ; a.lo",
            "    add a, 0x0a        ; + b.lo",
            "    mov 0x0c, a        ; c.lo",
            "    mov a, 0x09        ; a.hi",
            "    addc a, 0x0b       ; + b.hi + carry",
            "    mov 0x0d, a        ; c.hi",
        ]
        seq = LoweredSequence(
            "add16_locals", mode, exts, lines,
            inputs={"a": 0x08, "b": 0x0A}, outputs={"c": 0x0C},
            clobbers=set(), arch=arch,
        )
        return seq

    inputs = {"a": SP0 - 6, "b": SP0 - 4}
    outputs = {"c": SP0 - 2}
    if mode == "stack_baseline":
        lines = _baseline_add16_lines(6, 4, 2)
        clobbers = {0, 1, 2, 3, 4, 5}
    elif exts.sprel:
        lines = [
            "    mov a, [sp-6]      ; a.lo",
            "    add a, [sp-4]      ; + b.lo",
            "    mov [sp-2], a      ; c.lo",
            "    mov a, [sp-5]      ; a.hi",
            "    addc a, [sp-3]     ; + b.hi + carry",
            "    mov [sp-1], a      ; c.hi",
        ]
        clobbers = set()
    else:  # idxsp: sp-relative mov only, arithmetic staged through scratch
        lines = [
            "    mov a, [sp-6]",
            "    mov 0x02, a",
            "    mov a, [sp-4]",
            "    add a, 0x02",
            "    mov [sp-2], a",
            "    mov a, [sp-5]",
            "    mov 0x02, a",
            "    mov a, [sp-3]",
            "    addc a, 0x02",
            "    mov [sp-1], a",
        ]
        clobbers = {2}
    return LoweredSequence(
        "add16_locals", mode, exts, lines,
        inputs=inputs, outputs=outputs, clobbers=clobbers, arch=arch,
    )


def run_add16(seq: LoweredSequence, a: int, b: int) -> int:
    """Functional oracle hook: run the sequence on one operand pair."""
    m = load(seq.assemble(), RunConfig(max_cycles=10_000))
    m.poke(seq.inputs["a"], a & 0xFF, (a >> 8) & 0xFF)
    m.poke(seq.inputs["b"], b & 0xFF, (b >> 8) & 0xFF)
    r = m.run()
    if r.halt_reason != "stopsys":
        raise RuntimeError(f"add16 run failed: {r.halt_reason}")
    c = seq.outputs["c"]
    return m.peek(c) | (m.peek(c + 1) << 8)


# ---------------------------------------------------------------------------
# Generic-pointer reads and writes

GENPTR_PTR = 0x08  # 16-bit tagged pointer (little-endian pair)


def gen_genptr_read(exts: ExtensionSet | None = None, *, arch: str = "pdk13") -> LoweredSequence:
    """Dispatch on the pointer's top bit: code reads call into the constant
    object (stored as `ret k` words); data reads go through idxm."""
    exts = exts or ExtensionSet.none()
    if exts.igoto_icall:
        lines = [
            "    t1sn 0x09.7        ; top bit set -> code memory",
            "    goto gp_data",
            "    mov a, 0x09        ; strip the tag",
            "    and a, #0x7f",
            "    mov 0x03, a",
            "    mov a, 0x08",
            "    mov 0x02, a",
            "    icall 0x02         ; object returns its byte via ret k",
            "    goto gp_done",
            "gp_data:",
            "    idxm a, 0x08",
            "gp_done:",
        ]
    else:
        lines = [
            "    t1sn 0x09.7        ; top bit set -> code memory",
            "    goto gp_data",
            "    mov a, 0x09        ; strip the tag",
            "    and a, #0x7f",
            "    mov 0x03, a        ; target.hi",
            "    mov a, 0x08",
            "    mov 0x02, a        ; target.lo",
            "    mov a, #0          ; stack-writer pair high",
            "    mov 0x05, a",
            "    mov a, io[0]",
            "    mov 0x04, a        ; writer -> [sp]",
            "    mov a, #lo(gp_done)",
            "    idxm 0x04, a       ; push resume address...",
            "    inc 0x04",
            "    mov a, #hi(gp_done)",
            "    idxm 0x04, a",
            "    inc 0x04",
            "    mov a, 0x02",
            "    idxm 0x04, a       ; ...then the target address",
            "    inc 0x04",
            "    mov a, 0x03",
            "    idxm 0x04, a",
            "    mov a, io[0]",
            "    add a, #4",
            "    mov io[0], a       ; commit both pushes",
            "    ret                ; jump into the object; it rets back here",
            "gp_data:",
            "    idxm a, 0x08",
            "gp_done:",
        ]
    return LoweredSequence(
        "genptr_read", None, exts, lines,
        inputs={"ptr": GENPTR_PTR}, outputs={},
        clobbers={2, 3, 4, 5}, arch=arch,
    )


def gen_genptr_write(exts: ExtensionSet | None = None, *, arch: str = "pdk13") -> LoweredSequence:
    """Writes assume a data pointer: no top-bit dispatch at all."""
    exts = exts or ExtensionSet.none()
    lines = ["    idxm 0x08, a       ; store through the pointer"]
    return LoweredSequence(
        "genptr_write", None, exts, lines,
        inputs={"ptr": GENPTR_PTR}, outputs={}, clobbers=set(), arch=arch,
    )


# ---------------------------------------------------------------------------
# Binary -> decimal conversion


def gen_bcd_u16_to_dec(exts: ExtensionSet | None = None, *, arch: str = "pdk15") -> LoweredSequence:
    """16-bit value at 0x10/0x11 to five ASCII digits at 0x18..0x1c.

    With the decimal-adjust extension: shift-and-double BCD accumulation
    (double-dabble), one da per packed BCD byte per bit.  Without it:
    repeated subtraction of powers of ten.
    """
    exts = exts or ExtensionSet.none()
    inputs = {"value": 0x10}
    outputs = {"digits": 0x18}
    if exts.da:
        lines = [
            "    clear 0x12         ; packed BCD accumulator, low pair",
            "    clear 0x13",
            "    clear 0x14         ; top digit",
            "    mov a, #16",
            "    mov 0x15, a        ; bit counter",
            "bcd_loop:",
            "    sl 0x10            ; shift msb of the binary value into C",
            "    slc 0x11",
            "    mov a, 0x12        ; each BCD byte: a = 2*byte + carry, then adjust",
            "    addc a, 0x12",
            "    da a",
            "    mov 0x12, a",
            "    mov a, 0x13",
            "    addc a, 0x13",
            "    da a",
            "    mov 0x13, a",
            "    mov a, 0x14",
            "    addc a, 0x14",
            "    da a",
            "    mov 0x14, a",
            "    dezsn 0x15",
            "    goto bcd_loop",
            "    mov a, 0x14        ; unpack the 5 digits to ASCII",
            "    and a, #0x0f",
            "    add a, #'0'",
            "    mov 0x18, a",
            "    mov a, 0x13",
            "    sr a",
            "    sr a",
            "    sr a",
            "    sr a",
            "    add a, #'0'",
            "    mov 0x19, a",
            "    mov a, 0x13",
            "    and a, #0x0f",
            "    add a, #'0'",
            "    mov 0x1a, a",
            "    mov a, 0x12",
            "    sr a",
            "    sr a",
            "    sr a",
            "    sr a",
            "    add a, #'0'",
            "    mov 0x1b, a",
            "    mov a, 0x12",
            "    and a, #0x0f",
            "    add a, #'0'",
            "    mov 0x1c, a",
        ]
        clobbers = {0x12, 0x13, 0x14, 0x15}
    else:
        lines = []
        for label, power, out in (
            ("p4", 10000, 0x18),
            ("p3", 1000, 0x19),
            ("p2", 100, 0x1A),
            ("p1", 10, 0x1B),
        ):
            lines += [
                f"    mov a, #{power & 0xFF}",
                f"    mov 0x16, a        ; power.lo",
                f"    mov a, #{(power >> 8) & 0xFF}",
                f"    mov 0x17, a        ; power.hi",
                f"    clear 0x15         ; digit",
                f"bcd_{label}:",
                f"    mov a, 0x10",
                f"    sub a, 0x16",
                f"    mov 0x02, a",
                f"    mov a, 0x11",
                f"    subc a, 0x17",
                f"    t0sn io[1].1       ; borrow? then this digit is done",
                f"    goto bcd_{label}_done",
                f"    mov 0x11, a        ; commit the subtraction",
                f"    mov a, 0x02",
                f"    mov 0x10, a",
                f"    inc 0x15",
                f"    goto bcd_{label}",
                f"bcd_{label}_done:",
                f"    mov a, 0x15",
                f"    add a, #'0'",
                f"    mov 0x{out:02x}, a",
            ]
        lines += [
            "    mov a, 0x10        ; remainder is the ones digit",
            "    add a, #'0'",
            "    mov 0x1c, a",
        ]
        clobbers = {0x02, 0x10, 0x11, 0x15, 0x16, 0x17}
    return LoweredSequence(
        "bcd_u16_to_dec", None, exts, lines,
        inputs=inputs, outputs=outputs, clobbers=clobbers, arch=arch,
    )


def run_bcd(machine: Machine, value: int) -> str:
    """Reset, feed one value through an assembled BCD program, read digits."""
    machine.reset()
    machine.poke(0x10, value & 0xFF, (value >> 8) & 0xFF)
    r = machine.run()
    if r.halt_reason != "stopsys":
        raise RuntimeError(f"bcd run failed: {r.halt_reason}")
    return bytes(machine.peek(0x18, 5)).decode("ascii")


# ---------------------------------------------------------------------------
# Core lookup by stack pointer


def core_lookup_by_sp(
    stack_ranges, exts: ExtensionSet | None = None, *, arch: str = "pdk16"
) -> LoweredSequence:
    """Leave the executing core's index in the accumulator.

    Without hardware support this is a binary search of the stack pointer
    over the per-core stack ranges; with the core-id extension it is a single
    instruction.
    """
    exts = exts or ExtensionSet.none()
    ranges = sorted(stack_ranges)
    for (lo1, hi1), (lo2, hi2) in zip(ranges, ranges[1:]):
        if hi1 > lo2:
            raise OverlappingRanges(f"ranges {(lo1, hi1)} and {(lo2, hi2)} overlap")
    if exts.coreid:
        lines = ["    coreid"]
    elif len(ranges) == 1:
        lines = ["    mov a, #0          ; single core"]
    else:
        lines = []
        counter = [0]

        def emit(lo: int, hi: int):
            if lo == hi:
                lines.append(f"    mov a, #{lo}")
                lines.append("    goto csp_done")
                return
            mid = (lo + hi) // 2
            n = counter[0]
            counter[0] += 1
            bound = ranges[mid][1]
            lines.append(f"    mov a, io[0]       ; sp")
            lines.append(f"    sub a, #0x{bound:02x}")
            lines.append(f"    t1sn io[1].1       ; borrow -> sp below the boundary")
            lines.append(f"    goto csp_r{n}")
            emit(lo, mid)
            lines.append(f"csp_r{n}:")
            emit(mid + 1, hi)

        emit(0, len(ranges) - 1)
        lines.append("csp_done:")
    return LoweredSequence(
        "core_lookup_by_sp", None, exts, lines,
        inputs={}, outputs={}, clobbers=set(), arch=arch,
    )


# ---------------------------------------------------------------------------
# Two-lock atomic_flag fixture

LOCK1 = 0x10
LOCK2 = 0x11
FLAGPTR = 0x12  # pair -> FLAG
FLAG = 0x20
OLD_BASE = 0x14  # handler at 0x15, core i at 0x16+i
ITER_BASE = 0x1A  # per-core iteration counters

IO_OCC = 8        # occupancy depth of the critical section
IO_VIOL = 9       # latch: occupancy ever exceeded 1
IO_DEFER = 10     # latch: handler deferred (first lock held or chain risk)
IO_DONE = 11      # per-core completion bits
IO_HRAN = 12      # latch: handler returned


@dataclass
class AtomicFixture:
    ops: str
    cores: int
    extensions: ExtensionSet
    arch: str
    text: str
    handler_lines: list[str]
    driver_lines: dict[int, list[str]]
    hold: int = 0
    handler_pad: int = 0

    @property
    def size_words(self) -> int:
        return len(self.image().words)

    def image(self):
        return assemble_text(self.text, reclaim=True)

    def machine(self, irq_at=(), max_cycles=60_000) -> Machine:
        return load(
            self.image(),
            RunConfig(cores=self.cores, irq_at=tuple(irq_at), max_cycles=max_cycles),
        )


def _crit_enter() -> list[str]:
    return [
        f"    mov a, io[{IO_OCC}]",
        f"    add a, #1",
        f"    mov io[{IO_OCC}], a",
        f"    ceqsn a, #1        ; anyone else inside?",
        f"    set1 io[{IO_VIOL}].0",
    ]


def _crit_exit() -> list[str]:
    return [
        f"    mov a, io[{IO_OCC}]",
        f"    sub a, #1",
        f"    mov io[{IO_OCC}], a",
    ]


def _spin(label: str, lock: int) -> list[str]:
    return [
        f"    mov a, #1",
        f"{label}:",
        f"    xch a, 0x{lock:02x}",
        f"    ceqsn a, #0",
        f"    goto {label}",
    ]


def gen_atomic_flag(
    ops: str = "test_and_set",
    cores: int = 2,
    exts: ExtensionSet | None = None,
    *,
    iterations: int = 3,
    hold: int = 0,
    handler_pad: int = 0,
    arch: str | None = None,
) -> AtomicFixture:
    """Emit a complete program: per-core drivers doing atomic_flag operations
    on a shared flag through a pointer, plus the interrupt handler.

    Baseline discipline (two locks): the first core takes only the first
    lock; every other core takes the second lock first, then the first; the
    handler takes the second lock only and then checks whether the first lock
    is held (the holder could only be the interrupted context, so the handler
    must stay out).  The flag itself is reached indirectly, which is why the
    direct-only swap instruction cannot do the job in one step; with the
    indirect-swap extension every access collapses to one instruction and
    the locks disappear.
    """
    if ops not in ("test_and_set", "clear"):
        raise ValueError(f"unknown atomic_flag op {ops!r}")
    if cores < 1:
        raise ValueError("need at least one core")
    exts = exts or ExtensionSet.none()
    if arch is None:
        arch = "pdk13" if cores == 1 else ("pdk14" if cores <= 2 else "pdk16")
    v = variant_spec(arch)
    if cores > v.max_hw_threads:
        raise ValueError(f"{arch} supports only {v.max_hw_threads} threads")

    use_idxxch = exts.idxxch
    do_clear_phase = ops == "test_and_set"  # TAS drivers also clear, so the
    # flag keeps changing hands across iterations; clear-only drivers skip TAS

    def driver(core: int) -> list[str]:
        tag = f"c{core}"
        old_slot = OLD_BASE + 2 + core
        iter_slot = ITER_BASE + core
        lines = [f"    mov a, #{iterations}", f"    mov 0x{iter_slot:02x}, a"]
        lines += [f"{tag}_loop:"]

        def protected(body: list[str], phase: str) -> list[str]:
            out = []
            if use_idxxch:
                return body
            if core == 0:
                out += _spin(f"{tag}_{phase}_l1", LOCK1)
            else:
                out += _spin(f"{tag}_{phase}_l2", LOCK2)
                out += _spin(f"{tag}_{phase}_l1", LOCK1)
            out += _crit_enter()
            out += body
            out += ["    nop"] * hold
            out += _crit_exit()
            out += [f"    clear 0x{LOCK1:02x}"]
            if core != 0:
                out += [f"    clear 0x{LOCK2:02x}"]
            return out

        if ops == "test_and_set":
            if use_idxxch:
                tas = [
                    f"    mov a, #1",
                    f"    idxxch 0x{FLAGPTR:02x}, a",
                    f"    mov 0x{old_slot:02x}, a",
                ]
            else:
                tas = [
                    f"    idxm a, 0x{FLAGPTR:02x}",
                    f"    mov 0x{old_slot:02x}, a",
                    f"    mov a, #1",
                    f"    idxm 0x{FLAGPTR:02x}, a",
                ]
            lines += protected(tas, "tas")
        if ops == "clear" or do_clear_phase:
            if use_idxxch:
                clr = [f"    mov a, #0", f"    idxxch 0x{FLAGPTR:02x}, a"]
            else:
                clr = [f"    mov a, #0", f"    idxm 0x{FLAGPTR:02x}, a"]
            lines += protected(clr, "clr")
        lines += [
            f"    dezsn 0x{iter_slot:02x}",
            f"    goto {tag}_loop",
            f"    set1 io[{IO_DONE}].{core}",
            f"{tag}_idle:",
            f"    goto {tag}_idle",
        ]
        return lines

    def handler() -> list[str]:
        lines = ["__irq:", "    pushaf"]
        if use_idxxch:
            lines += [
                f"    mov a, #1",
                f"    idxxch 0x{FLAGPTR:02x}, a",
                f"    mov 0x{OLD_BASE + 1:02x}, a",
            ]
        else:
            lines += [
                "h_retry:",
                f"    mov a, #1",
                f"    xch a, 0x{LOCK2:02x}    ; the handler takes the second lock only",
                f"    ceqsn a, #0",
                f"    goto h_busy2",
                f"    mov a, 0x{LOCK1:02x}    ; now check the first lock",
                f"    ceqsn a, #0",
                f"    goto h_defer       ; held by the interrupted context",
            ]
            lines += _crit_enter()
            lines += [
                f"    idxm a, 0x{FLAGPTR:02x}",
                f"    mov 0x{OLD_BASE + 1:02x}, a",
                f"    mov a, #1",
                f"    idxm 0x{FLAGPTR:02x}, a",
            ]
            lines += ["    nop"] * handler_pad
            lines += _crit_exit()
            lines += [
                f"    goto h_rel",
                f"h_defer:",
                f"    set1 io[{IO_DEFER}].0",
                f"h_rel:",
                f"    clear 0x{LOCK2:02x}",
                f"    goto h_done",
                f"h_busy2:",
                # second lock busy: its holder normally progresses, but if the
                # first lock is held too the chain may end at the interrupted
                # context, so bail out instead of spinning forever
                f"    mov a, 0x{LOCK1:02x}",
                f"    ceqsn a, #0",
                f"    goto h_bail",
                f"    goto h_retry",
                f"h_bail:",
                f"    set1 io[{IO_DEFER}].0",
                f"h_done:",
            ]
        lines += [f"    set1 io[{IO_HRAN}].0", "    popaf", "    reti"]
        return lines

    drivers = {i: driver(i) for i in range(cores)}
    parts = [f".arch {arch}"]
    if exts:
        parts.append(f".ext {', '.join(exts.names())}")
    parts.append(f".byte 0x{FLAGPTR:02x}, 0x{FLAG:02x}, 0x00   ; flag pointer")
    # the stack pointer is 8 bits wide, so stacks live in the low 256 bytes
    sp_top = min(v.data_space, 256)
    for i in range(cores):
        parts.append(f".equ __core{i}_sp, 0x{sp_top - 16 * (cores - i):02x}")
    parts.append("_start:")
    parts.append("    engint")
    parts += drivers[0]
    for i in range(1, cores):
        parts.append(f"__core{i}_start:")
        parts += drivers[i]
    hl = handler()
    parts += hl
    text = "\n".join(parts) + "\n"
    return AtomicFixture(
        ops=ops,
        cores=cores,
        extensions=exts,
        arch=arch,
        text=text,
        handler_lines=hl,
        driver_lines=drivers,
        hold=hold,
        handler_pad=handler_pad,
    )


def handler_takes_only_second_lock(fixture: AtomicFixture) -> bool:
    """Static inspection: the handler must never acquire or write lock 1."""
    l1 = f"0x{LOCK1:02x}"
    for ln in fixture.handler_lines:
        s = ln.split(";")[0].strip().lower()
        if s.startswith("xch") and l1 in s:
            return False
        if (s.startswith("mov " + l1) or s.startswith(f"clear {l1}")
                or s.startswith(f"set0 {l1}") or s.startswith(f"set1 {l1}")):
            return False
    return True


@dataclass
class ExclusionSweep:
    runs: int
    violations: int
    incomplete: int     # runs where a driver never finished (deadlock)
    deferred: int       # handler found the first lock held and backed off
    handler_ran: int    # an arrival before interrupts are enabled is dropped

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.incomplete == 0


def sweep_mutual_exclusion(
    fixture: AtomicFixture, arrivals, *, max_cycles=60_000
) -> ExclusionSweep:
    """Run the fixture once per interrupt arrival cycle and count violations.

    A run passes when the occupancy latch stayed clear and every driver
    finished its iterations (no deadlock).
    """
    done_mask = (1 << fixture.cores) - 1
    violations = incomplete = deferred = ran = runs = 0
    m = fixture.machine(max_cycles=max_cycles)
    for at in arrivals:
        m.reset(irq_at=(at,))
        # run in slices and stop once the drivers are done and the interrupt
        # has either been served or dropped; idling to the budget would
        # dominate the sweep otherwise
        while m.cycle < max_cycles and not m.halted:
            m.run(max_cycles=512)
            if (m.io[IO_DONE] & done_mask) == done_mask:
                if m.io[IO_HRAN]:
                    break
                if m._irq_idx >= len(m._irq) and m.gint:
                    # consumed with interrupts enabled and no handler entry:
                    # the request was dropped while they were disabled
                    break
        runs += 1
        if m.io[IO_VIOL]:
            violations += 1
        if (m.io[IO_DONE] & done_mask) != done_mask:
            incomplete += 1
        if m.io[IO_DEFER]:
            deferred += 1
        if m.io[IO_HRAN]:
            ran += 1
    return ExclusionSweep(runs, violations, incomplete, deferred, ran)


def fixture_horizon(fixture: AtomicFixture, *, max_cycles=60_000) -> int:
    """Cycle by which all drivers have completed, with no interrupt raised."""
    m = fixture.machine(max_cycles=max_cycles)
    done_mask = (1 << fixture.cores) - 1
    probe = 0
    while probe < max_cycles:
        probe += 256
        m.run(max_cycles=256)
        if (m.io[IO_DONE] & done_mask) == done_mask:
            return m.cycle
        if m.halted:
            break
    raise RuntimeError("fixture drivers did not complete")


# ---------------------------------------------------------------------------
# Corpus templates and size comparison

CORPUS_DIR = os.path.join(os.path.dirname(__file__), "corpus")

SBASE_DEFAULT = 0x20   # static-locals area (kept clear of the sprel quarter)
CSP0 = 0x10            # corpus stack region


def _chunked_spadd(n: int, variant: str) -> list[str]:
    from .isa import spadd_domain

    dom = spadd_domain(variant)
    step = max(dom)
    out = []
    left = n
    while left > 0:
        k = min(step, left)
        if k % 2:
            k -= 1
        out.append(f"    spadd #{k}")
        left -= k
    return out


def _chunked_spsub(n: int, variant: str) -> list[str]:
    from .isa import spadd_domain

    dom = spadd_domain(variant)
    step = -min(dom)
    out = []
    left = n
    while left > 0:
        k = min(step, left)
        if k % 2:
            k -= 1
        out.append(f"    spadd #-{k}")
        left -= k
    return out


class TemplateContext:
    def __init__(self, mode: str, variant: str, exts: ExtensionSet, sbase: int = SBASE_DEFAULT):
        if mode not in ("static_locals", "all_reentrant"):
            raise UnsupportedCombination(f"unknown reentrancy mode {mode!r}")
        self.mode = mode
        self.variant = variant
        self.exts = exts
        self.sbase = sbase
        self.frame = 0
        self.half = _sprel_half(variant)  # negative reach of the signed window

    def _in_window(self, dist: int) -> bool:
        return (self.exts.sprel or self.exts.idxsp) and 0 < dist <= self.half

    def frame_enter(self, n: int) -> list[str]:
        self.frame = n
        if self.mode == "static_locals":
            return []
        if self.exts.spadd:
            return _chunked_spadd(n, self.variant)
        return [
            "    mov a, io[0]",
            f"    add a, #{n}",
            "    mov io[0], a",
        ]

    def frame_exit(self, n: int) -> list[str]:
        self.frame = 0
        if self.mode == "static_locals":
            return []
        if self.exts.spadd:
            return _chunked_spsub(n, self.variant)
        return [
            "    mov a, io[0]",
            f"    sub a, #{n}",
            "    mov io[0], a",
        ]

    def _baseline_addr(self, dist: int) -> list[str]:
        return [
            "    mov a, #0",
            "    mov 0x01, a",
            "    mov a, io[0]",
            f"    sub a, #{dist}",
            "    mov 0x00, a",
        ]

    def lda(self, off: int) -> list[str]:
        if self.mode == "static_locals":
            return [f"    mov a, 0x{self.sbase + off:02x}"]
        dist = self.frame - off
        if self._in_window(dist):
            return [f"    mov a, [sp-{dist}]"]
        return self._baseline_addr(dist) + ["    idxm a, 0x00"]

    def sta(self, off: int) -> list[str]:
        if self.mode == "static_locals":
            return [f"    mov 0x{self.sbase + off:02x}, a"]
        dist = self.frame - off
        if self._in_window(dist):
            return [f"    mov [sp-{dist}], a"]
        return (
            ["    mov 0x02, a"]
            + self._baseline_addr(dist)
            + ["    mov a, 0x02", "    idxm 0x00, a"]
        )

    def add16(self, d: int, s1: int, s2: int) -> list[str]:
        if self.mode == "static_locals":
            b = self.sbase
            return [
                f"    mov a, 0x{b + s1:02x}",
                f"    add a, 0x{b + s2:02x}",
                f"    mov 0x{b + d:02x}, a",
                f"    mov a, 0x{b + s1 + 1:02x}",
                f"    addc a, 0x{b + s2 + 1:02x}",
                f"    mov 0x{b + d + 1:02x}, a",
            ]
        dd, d1, d2 = self.frame - d, self.frame - s1, self.frame - s2
        if all(self._in_window(x) for x in (dd, dd - 1, d1, d1 - 1, d2, d2 - 1)):
            if self.exts.sprel:
                return [
                    f"    mov a, [sp-{d1}]",
                    f"    add a, [sp-{d2}]",
                    f"    mov [sp-{dd}], a",
                    f"    mov a, [sp-{d1 - 1}]",
                    f"    addc a, [sp-{d2 - 1}]",
                    f"    mov [sp-{dd - 1}], a",
                ]
            return [
                f"    mov a, [sp-{d1}]",
                "    mov 0x02, a",
                f"    mov a, [sp-{d2}]",
                "    add a, 0x02",
                f"    mov [sp-{dd}], a",
                f"    mov a, [sp-{d1 - 1}]",
                "    mov 0x02, a",
                f"    mov a, [sp-{d2 - 1}]",
                "    addc a, 0x02",
                f"    mov [sp-{dd - 1}], a",
            ]
        return _baseline_add16_lines(d1, d2, dd)

    def push_arg_imm(self, value: int) -> list[str]:
        # arguments travel on the stack in every mode, 16-bit aligned
        if (self.exts.sprel or self.exts.idxsp) and self.exts.spadd:
            return [
                f"    mov a, #{value}",
                "    mov [sp+0], a",
                "    mov a, #0",
                "    mov [sp+1], a",
                "    spadd #2",
            ]
        if self.exts.sprel or self.exts.idxsp:
            return [
                f"    mov a, #{value}",
                "    mov [sp+0], a",
                "    mov a, #0",
                "    mov [sp+1], a",
                "    mov a, io[0]",
                "    add a, #2",
                "    mov io[0], a",
            ]
        return [
            "    mov a, #0",
            "    mov 0x01, a",
            "    mov a, io[0]",
            "    mov 0x00, a",
            f"    mov a, #{value}",
            "    idxm 0x00, a",
            "    inc 0x00",
            "    mov a, #0",
            "    idxm 0x00, a",
            "    mov a, io[0]",
            "    add a, #2",
            "    mov io[0], a",
        ]

    def pop_args(self, nbytes: int) -> list[str]:
        if self.exts.spadd:
            return _chunked_spsub(nbytes, self.variant)
        return [
            "    mov a, io[0]",
            f"    sub a, #{nbytes}",
            "    mov io[0], a",
        ]

    def ldarg(self, k: int, nargs: int) -> list[str]:
        # callee view: [ret.lo ret.hi] sits between sp and the args
        dist = 2 + 2 * (nargs - k)
        if self._in_window(dist):
            return [f"    mov a, [sp-{dist}]"]
        return self._baseline_addr(dist) + ["    idxm a, 0x00"]


def expand_template(text: str, mode: str, variant: str, exts: ExtensionSet) -> str:
    """Substitute %ARCH/%EXTS and expand @-fragment lines per configuration."""
    ctx = TemplateContext(mode, variant, exts)
    out: list[str] = []
    for raw in text.splitlines():
        line = raw.rstrip()
        stripped = line.strip()
        if stripped.startswith("@"):
            parts = stripped[1:].split(";")[0].replace(",", " ").split()
            name, args = parts[0], [int(x, 0) for x in parts[1:]]
            if name == "layout":
                ctx.sbase = args[0]
                continue
            if name == "frame":
                out += ctx.frame_enter(args[0])
            elif name == "unframe":
                out += ctx.frame_exit(args[0])
            elif name == "lda":
                out += ctx.lda(args[0])
            elif name == "sta":
                out += ctx.sta(args[0])
            elif name == "add16":
                out += ctx.add16(args[0], args[1], args[2])
            elif name == "push_arg_imm":
                out += ctx.push_arg_imm(args[0])
            elif name == "pop_args":
                out += ctx.pop_args(args[0])
            elif name == "ldarg":
                out += ctx.ldarg(args[0], args[1])
            else:
                raise UnsupportedCombination(f"unknown corpus fragment @{name}")
            continue
        if "%ARCH" in line:
            line = line.replace("%ARCH", variant)
        if "%EXTS" in line:
            if not exts:
                continue
            line = line.replace("%EXTS", ", ".join(exts.names()))
        out.append(line)
    return "\n".join(out) + "\n"


def default_corpus() -> dict[str, str]:
    corpus = {}
    for name in sorted(os.listdir(CORPUS_DIR)):
        if name.endswith(".pdkasm"):
            with open(os.path.join(CORPUS_DIR, name), "r", encoding="utf-8") as fh:
                corpus[name[: -len(".pdkasm")]] = fh.read()
    return corpus


def default_configs() -> list[dict]:
    ext_sets = [
        [],
        ["spadd"],
        ["idxsp"],
        ["spadd", "idxsp"],
        ["sprel"],
        ["spadd", "sprel"],
    ]
    configs = []
    for variant in ("pdk13", "pdk14", "pdk15"):
        for mode in ("static_locals", "all_reentrant"):
            for exts in ext_sets:
                configs.append(
                    {
                        "variant": variant,
                        "extensions": list(exts),
                        "mode": mode,
                        "reclaim": True,
                    }
                )
    return configs


@dataclass
class SizeRow:
    program: str
    variant: str
    extensions: str
    mode: str
    size_words: int
    ratio: float


@dataclass
class SizeComparison:
    rows: list[SizeRow]

    def totals(self) -> dict[tuple[str, str, str], int]:
        agg: dict[tuple[str, str, str], int] = {}
        for r in self.rows:
            key = (r.variant, r.mode, r.extensions)
            agg[key] = agg.get(key, 0) + r.size_words
        return agg

    def total_ratio(self, variant: str, mode: str, extensions: str) -> float:
        agg = self.totals()
        base = agg[(variant, mode, "none")]
        return agg[(variant, mode, extensions)] / base

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf)
        w.writerow(["program", "variant", "extensions", "mode", "size_words", "ratio"])
        for r in self.rows:
            w.writerow(
                [r.program, r.variant, r.extensions, r.mode, r.size_words, f"{r.ratio:.4f}"]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            [
                {
                    "program": r.program,
                    "variant": r.variant,
                    "extensions": r.extensions,
                    "mode": r.mode,
                    "size_words": r.size_words,
                    "ratio": r.ratio,
                }
                for r in self.rows
            ],
            indent=2,
        )

    def to_text(self) -> str:
        lines = [
            f"{'program':<14} {'variant':<7} {'extensions':<14} {'mode':<14} "
            f"{'words':>5} {'ratio':>6}"
        ]
        for r in self.rows:
            lines.append(
                f"{r.program:<14} {r.variant:<7} {r.extensions:<14} {r.mode:<14} "
                f"{r.size_words:>5} {r.ratio:>6.3f}"
            )
        return "\n".join(lines)


def size_compare(corpus: dict[str, str] | None = None, configs=None) -> SizeComparison:
    """Assemble every corpus program under every configuration and normalize
    sizes against the no-extension build of the same variant and mode."""
    corpus = corpus if corpus is not None else default_corpus()
    configs = configs if configs is not None else default_configs()
    sizes: dict[tuple, int] = {}
    rows: list[SizeRow] = []
    for cfg in configs:
        variant = cfg["variant"]
        mode = cfg["mode"]
        exts = ExtensionSet.from_names(cfg.get("extensions", ()))
        ext_name = str(exts)
        for prog, text in sorted(corpus.items()):
            try:
                src = expand_template(text, mode, variant, exts)
                img = assemble_text(src, reclaim=cfg.get("reclaim", True))
            except Exception as e:
                raise type(e)(
                    f"{prog} under ({variant}, {ext_name}, {mode}): {e}"
                ) from e
            sizes[(prog, variant, mode, ext_name)] = len(img.words)
    def baseline(prog: str, variant: str, mode: str) -> int:
        key = (prog, variant, mode, "none")
        if key not in sizes:
            src = expand_template(corpus[prog], mode, variant, ExtensionSet.none())
            sizes[key] = len(assemble_text(src).words)
        return sizes[key]

    for cfg in configs:
        variant = cfg["variant"]
        mode = cfg["mode"]
        ext_name = str(ExtensionSet.from_names(cfg.get("extensions", ())))
        for prog in sorted(corpus):
            size = sizes[(prog, variant, mode, ext_name)]
            rows.append(
                SizeRow(
                    prog, variant, ext_name, mode, size,
                    size / baseline(prog, variant, mode),
                )
            )
    return SizeComparison(rows)
