"""Cycle-stepped barrel-processor simulator.

Model (documented choices where the hardware leaves room):

* One core is active per cycle, rotating round-robin over the configured
  cores (core index = cycle mod cores).  A two-cycle instruction commits its
  effects on its first cycle and additionally occupies its core's next barrel
  turn; other cores' turns are not reordered.  Conditional skips cost one
  extra cycle when taken (they behave like the two-cycle class).
* The stack grows upward; sp points at the first free byte.  call/interrupt
  push the 16-bit return pc little-endian at [sp] and advance sp by 2, the
  same location ldsptl/ldspth read through, so the word just above the stack
  top is exactly what an interrupt would overwrite.
* Interrupt entry is modeled with zero latency at the first core-0
  instruction boundary at or after the requested cycle; a request arriving
  while interrupts are disabled is dropped at that boundary.  All handlers
  run on core 0.  reti re-enables interrupts.
* I/O space: io[0] mirrors the active core's stack pointer, io[1] mirrors
  its flag nibble (Z=bit0, C=bit1, AC=bit2, OV=bit3), io[2] is the global
  interrupt enable bit when the gint_io extension is active.  All other I/O
  bytes are plain latches for harnesses.
* Data accesses outside the configured RAM size fault (halt with a fault
  reason) unless the machine is configured to wrap.
* mov never touches flags; inc/dec set Z only; logic ops set Z; shifts set
  C; add/sub families set Z, C, AC, OV; da adjusts the accumulator to BCD
  using AC and C and sets C on decimal carry.

Code memory is never writable by instructions (Harvard separation).
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field

from .errors import ImageVariantMismatch, TooManyCores
from .isa import ACC, SPREL, Instruction, OpcodeMap, build_map
from .ops import (
    FLAG_AC,
    FLAG_C,
    FLAG_OV,
    FLAG_Z,
    HALT_BREAKPOINT,
    HALT_FAULT_DATA,
    HALT_FAULT_UNALLOC,
    HALT_NONE,
    HALT_STOPSYS,
    REASON_NAMES,
    SEM,
)

try:  # compiled hot kernel; pure-Python twin otherwise
    from . import _simkern as _fast_kernel
except ImportError:  # pragma: no cover - depends on build environment
    _fast_kernel = None

from . import _kernel_py as _pure_kernel

KERNEL_NAME = "compiled" if _fast_kernel is not None else "pure-python"


@dataclass
class RunConfig:
    cores: int = 1
    data_size: int | None = None
    irq_vector: int | None = None
    irq_at: tuple[int, ...] = ()
    max_cycles: int = 1_000_000
    wrap_data: bool = False
    expected_variant: str | None = None
    sp: tuple[int, ...] | None = None

    def __post_init__(self):
        if any(c < 0 for c in self.irq_at):
            raise ValueError("irq cycles must be non-negative")
        if list(self.irq_at) != sorted(self.irq_at):
            raise ValueError("irq cycles must be ascending")


@dataclass
class StepResult:
    """What one cycle did.

    Per-core architectural state is the accumulator, stack pointer, flag
    nibble, and program counter (the pc is the fourth per-thread register
    the barrel needs even where descriptions list only three).
    """

    cycle: int
    core: int
    pc: int
    word: int
    instruction: Instruction | None
    cycles_consumed: int
    phase: str  # 'complete' | 'start' | 'finish'
    events: list = field(default_factory=list)

    def trace_line(self) -> str:
        mnem = str(self.instruction) if self.instruction else "..."
        effects = " ".join(_fmt_event(e) for e in self.events)
        return f"{self.cycle} {self.core} {self.pc:04x} {self.word:04x} {mnem}" + (
            f" | {effects}" if effects else ""
        )


def _fmt_event(e) -> str:
    kind = e[0]
    if kind == "data":
        return f"data[0x{e[1]:02x}]=0x{e[2]:02x}"
    if kind == "io":
        return f"io[{e[1]}]=0x{e[2]:02x}"
    if kind == "sp":
        return f"sp=0x{e[1]:02x}"
    if kind == "skip":
        return "skip"
    if kind == "irq":
        return f"irq-enter vector=0x{e[1]:03x}"
    if kind == "halt":
        return f"halt:{e[1]}"
    if kind == "fault":
        return f"fault:{e[1]}"
    return str(e)


@dataclass
class RunResult:
    halt_reason: str
    cycle: int
    detail: int = 0

    @property
    def faulted(self) -> bool:
        return self.halt_reason.startswith("fault")


class Machine:
    """A loaded program plus architectural state, steppable or batch-run."""

    def __init__(self, image, opmap: OpcodeMap, config: RunConfig):
        v = image.variant
        if config.expected_variant and config.expected_variant != v.name:
            raise ImageVariantMismatch(
                f"image is {v.name}, config expects {config.expected_variant}"
            )
        if not 1 <= config.cores <= v.max_hw_threads:
            raise TooManyCores(
                f"{v.name} supports at most {v.max_hw_threads} hardware "
                f"thread(s), {config.cores} requested"
            )
        data_size = config.data_size or v.data_space
        if not 0 < data_size <= v.data_space:
            raise ValueError(
                f"data size {data_size} exceeds the {v.data_addr_bits}-bit space"
            )
        self.image = image
        self.map = opmap
        self.config = config
        self.variant = v
        self.ncores = config.cores
        self.data_size = data_size
        self.prog_mask = v.prog_space - 1
        self.gint_io = opmap.extensions.gint_io

        irq_vector = config.irq_vector
        if irq_vector is None:
            irq_vector = image.symbols.get("__irq")
        self.irq_vector = irq_vector

        # predecode the whole code image once
        n = v.prog_space
        self.code = array("i", [0] * n)
        for addr, word in image.words.items():
            self.code[addr] = word
        self.pre_op = array("i", [SEM["UNALLOC"]] * n)
        self.pre_a1 = array("i", [0] * n)
        self.pre_a2 = array("i", [0] * n)
        self.pre_cyc = array("i", [1] * n)
        self.pre_skip = array("i", [0] * n)
        for addr, word in image.words.items():
            t = opmap.template_at(word)
            if t is None or not t.sem:
                continue
            if t.sem not in SEM:
                raise ValueError(
                    f"opcode map entry {t.mnemonic} carries unknown semantic "
                    f"id {t.sem!r}; fix the map document"
                )
            instr = opmap.decode(word)
            a1, a2 = _predecode_args(instr)
            self.pre_op[addr] = SEM[t.sem]
            self.pre_a1[addr] = a1
            self.pre_a2[addr] = a2
            self.pre_cyc[addr] = t.cycles
            self.pre_skip[addr] = 1 if t.skip else 0

        self._init_sps = self._initial_sps()
        self._init_pcs = self._initial_pcs()
        self.reset()

    # -- state ------------------------------------------------------------

    def _initial_sps(self):
        sps = []
        for i in range(self.ncores):
            sym = self.image.symbols.get(f"__core{i}_sp")
            if self.config.sp is not None and i < len(self.config.sp):
                sps.append(self.config.sp[i] & 0xFF)
            elif sym is not None:
                sps.append(sym & 0xFF)
            else:
                sps.append(max(0, self.data_size - 16 * (self.ncores - i)) & 0xFF)
        return sps

    def _initial_pcs(self):
        pcs = [self.image.entry]
        for i in range(1, self.ncores):
            pcs.append(self.image.symbols.get(f"__core{i}_start", self.image.entry))
        return pcs

    def reset(self, irq_at=None) -> None:
        """Return to the loaded state; optionally replace the irq schedule."""
        self.data = bytearray(self.data_size)
        for addr, val in self.image.data_init.items():
            if addr < self.data_size:
                self.data[addr] = val
        self.io = bytearray(self.variant.io_space)
        self.acc = array("i", [0] * self.ncores)
        self.sp = array("i", self._init_sps)
        self.fl = array("i", [0] * self.ncores)
        self.pc = array("i", self._init_pcs)
        self.stall = array("i", [0] * self.ncores)
        self.running = [True] * self.ncores
        self.gint = False
        self.cycle = 0
        self.halted: str | None = None
        self.halt_detail = 0
        self._irq = list(self.config.irq_at if irq_at is None else irq_at)
        self._irq_idx = 0

    @property
    def active_core(self) -> int:
        return self.cycle % self.ncores

    def raise_interrupt(self, at_cycle: int) -> None:
        """Schedule an interrupt request for the given cycle."""
        if at_cycle < 0:
            raise ValueError("irq cycle must be non-negative")
        self._irq.append(at_cycle)
        self._irq.sort()

    def poke(self, addr: int, *values: int) -> None:
        for i, v in enumerate(values):
            self.data[addr + i] = v & 0xFF

    def peek(self, addr: int, count: int = 1):
        if count == 1:
            return self.data[addr]
        return bytes(self.data[addr : addr + count])

    # -- I/O mirrors --------------------------------------------------------

    def _io_read(self, addr: int, core: int) -> int:
        if addr == 0:
            return self.sp[core]
        if addr == 1:
            return self.fl[core]
        if addr == 2 and self.gint_io:
            return 1 if self.gint else 0
        return self.io[addr]

    def _io_write(self, addr: int, val: int, core: int, events) -> None:
        val &= 0xFF
        if addr == 0:
            self.sp[core] = val
            events.append(("sp", val))
        elif addr == 1:
            self.fl[core] = val & 0xF
        elif addr == 2 and self.gint_io:
            self.gint = bool(val & 1)
            events.append(("io", 2, val & 1))
        else:
            self.io[addr] = val
            events.append(("io", addr, val))

    # -- reference stepper --------------------------------------------------

    def step(self) -> StepResult:
        """Advance exactly one cycle; return what happened during it."""
        if self.halted:
            raise RuntimeError(f"machine already halted: {self.halted}")
        core = self.cycle % self.ncores
        events: list = []

        if core == 0 and not self.stall[0]:
            while self._irq_idx < len(self._irq) and self._irq[self._irq_idx] <= self.cycle:
                at = self._irq[self._irq_idx]
                self._irq_idx += 1
                if self.gint and self.irq_vector is not None:
                    if not self._push16(self.pc[0], 0, events):
                        return self._finish_fault(core, events)
                    self.pc[0] = self.irq_vector & self.prog_mask
                    self.gint = False
                    events.append(("irq", self.irq_vector))
                    break
                del at  # dropped: interrupts disabled at this boundary

        if self.stall[core]:
            self.stall[core] = 0
            pc = self.pc[core]
            self.cycle += 1
            return StepResult(
                self.cycle - 1, core, pc, 0, None, 2, "finish", events
            )

        pc = self.pc[core]
        word = self.code[pc]
        op = self.pre_op[pc]
        if op == SEM["UNALLOC"]:
            self.halted = REASON_NAMES[HALT_FAULT_UNALLOC]
            self.halt_detail = word
            events.append(("fault", f"unallocated opcode 0x{word:04x} at 0x{pc:03x}"))
            self.cycle += 1
            return StepResult(self.cycle - 1, core, pc, word, None, 1, "complete", events)

        instr = self.map.decode(word)
        taken_skip = self._exec(core, pc, events)
        if self.halted:
            self.cycle += 1
            return StepResult(self.cycle - 1, core, pc, word, instr, 1, "complete", events)
        cycles = self.pre_cyc[pc]
        if taken_skip:
            cycles = 2
            events.append(("skip",))
        if cycles == 2:
            self.stall[core] = 1
        self.cycle += 1
        phase = "start" if cycles == 2 else "complete"
        return StepResult(self.cycle - 1, core, pc, word, instr, cycles, phase, events)

    # -- execution helpers ----------------------------------------------------

    def _fault_data(self, addr: int, events) -> None:
        self.halted = REASON_NAMES[HALT_FAULT_DATA]
        self.halt_detail = addr
        events.append(("fault", f"data address 0x{addr:03x} outside {self.data_size}B RAM"))

    def _finish_fault(self, core, events) -> StepResult:
        self.cycle += 1
        return StepResult(self.cycle - 1, core, self.pc[core], 0, None, 1, "complete", events)

    def _rd(self, addr: int, events) -> int | None:
        if 0 <= addr < self.data_size:
            return self.data[addr]
        if self.config.wrap_data:
            return self.data[addr % self.data_size]
        self._fault_data(addr, events)
        return None

    def _wr(self, addr: int, val: int, events) -> bool:
        if not 0 <= addr < self.data_size:
            if not self.config.wrap_data:
                self._fault_data(addr, events)
                return False
            addr %= self.data_size
        self.data[addr] = val & 0xFF
        events.append(("data", addr, val & 0xFF))
        return True

    def _rd16(self, addr: int, events) -> int | None:
        if addr + 1 >= self.data_size and not self.config.wrap_data:
            self._fault_data(addr, events)
            return None
        lo = self.data[addr % self.data_size]
        hi = self.data[(addr + 1) % self.data_size]
        return lo | (hi << 8)

    def _push16(self, value: int, core: int, events) -> bool:
        # the push is atomic: fault before either byte lands
        sp = self.sp[core]
        if sp + 1 >= self.data_size and not self.config.wrap_data:
            self._fault_data(sp + 1, events)
            return False
        self._wr(sp, value & 0xFF, events)
        self._wr(sp + 1, (value >> 8) & 0xFF, events)
        self.sp[core] = (sp + 2) & 0xFF
        events.append(("sp", self.sp[core]))
        return True

    def _pop16(self, core: int, events) -> int | None:
        sp = (self.sp[core] - 2) & 0xFF
        v = self._rd16(sp, events)
        if v is None:
            return None
        self.sp[core] = sp
        events.append(("sp", sp))
        return v

    def _ea(self, core: int, a1: int, a2: int) -> int:
        if a2:  # sp-relative
            return (self.sp[core] + a1) % self.data_size
        return a1

    # flag math

    def _add(self, core, x, y, cin) -> int:
        r = x + y + cin
        fl = 0
        if (r & 0xFF) == 0:
            fl |= FLAG_Z
        if r > 0xFF:
            fl |= FLAG_C
        if (x & 0xF) + (y & 0xF) + cin > 0xF:
            fl |= FLAG_AC
        if (~(x ^ y)) & (x ^ r) & 0x80:
            fl |= FLAG_OV
        self.fl[core] = fl
        return r & 0xFF

    def _sub(self, core, x, y, bin_) -> int:
        r = x - y - bin_
        fl = 0
        if (r & 0xFF) == 0:
            fl |= FLAG_Z
        if r < 0:
            fl |= FLAG_C
        if (x & 0xF) - (y & 0xF) - bin_ < 0:
            fl |= FLAG_AC
        if (x ^ y) & (x ^ r) & 0x80:
            fl |= FLAG_OV
        self.fl[core] = fl
        return r & 0xFF

    def _set_z(self, core, v) -> int:
        if v & 0xFF:
            self.fl[core] &= ~FLAG_Z
        else:
            self.fl[core] |= FLAG_Z
        return v & 0xFF

    def _exec(self, core: int, pc: int, events) -> bool:
        """Execute the predecoded instruction at pc; return True on taken skip."""
        op = self.pre_op[pc]
        a1 = self.pre_a1[pc]
        a2 = self.pre_a2[pc]
        S = SEM
        nxt = (pc + 1) & self.prog_mask
        skip = False
        acc = self.acc[core]
        C = 1 if self.fl[core] & FLAG_C else 0

        def rd(addr):
            return self._rd(addr, events)

        if op == S["NOP"]:
            pass
        elif op == S["MOV_A_M"]:
            v = rd(self._ea(core, a1, a2))
            if v is None:
                return False
            self.acc[core] = v
        elif op == S["MOV_M_A"]:
            if not self._wr(self._ea(core, a1, a2), acc, events):
                return False
        elif op in (S["ADD_A_M"], S["ADDC_A_M"], S["SUB_A_M"], S["SUBC_A_M"]):
            v = rd(self._ea(core, a1, a2))
            if v is None:
                return False
            cin = C if op in (S["ADDC_A_M"], S["SUBC_A_M"]) else 0
            if op in (S["ADD_A_M"], S["ADDC_A_M"]):
                self.acc[core] = self._add(core, acc, v, cin)
            else:
                self.acc[core] = self._sub(core, acc, v, cin)
        elif op in (S["ADD_M_A"], S["ADDC_M_A"], S["SUB_M_A"], S["SUBC_M_A"]):
            ea = self._ea(core, a1, a2)
            v = rd(ea)
            if v is None:
                return False
            cin = C if op in (S["ADDC_M_A"], S["SUBC_M_A"]) else 0
            if op in (S["ADD_M_A"], S["ADDC_M_A"]):
                r = self._add(core, v, acc, cin)
            else:
                r = self._sub(core, v, acc, cin)
            if not self._wr(ea, r, events):
                return False
        elif op in (S["AND_A_M"], S["OR_A_M"], S["XOR_A_M"]):
            v = rd(self._ea(core, a1, a2))
            if v is None:
                return False
            r = acc & v if op == S["AND_A_M"] else acc | v if op == S["OR_A_M"] else acc ^ v
            self.acc[core] = self._set_z(core, r)
        elif op in (S["AND_M_A"], S["OR_M_A"], S["XOR_M_A"]):
            ea = self._ea(core, a1, a2)
            v = rd(ea)
            if v is None:
                return False
            r = v & acc if op == S["AND_M_A"] else v | acc if op == S["OR_M_A"] else v ^ acc
            if not self._wr(ea, self._set_z(core, r), events):
                return False
        elif op == S["COMP_A_M"]:
            v = rd(self._ea(core, a1, a2))
            if v is None:
                return False
            self._sub(core, acc, v, 0)
        elif op == S["COMP_M_A"]:
            v = rd(self._ea(core, a1, a2))
            if v is None:
                return False
            self._sub(core, v, acc, 0)
        elif op in (S["INC_M"], S["DEC_M"]):
            ea = self._ea(core, a1, a2)
            v = rd(ea)
            if v is None:
                return False
            r = (v + 1 if op == S["INC_M"] else v - 1) & 0xFF
            self._set_z(core, r)
            if not self._wr(ea, r, events):
                return False
        elif op == S["CLEAR_M"]:
            if not self._wr(self._ea(core, a1, a2), 0, events):
                return False
        elif op in (S["SL_M"], S["SR_M"], S["SLC_M"], S["SRC_M"]):
            ea = self._ea(core, a1, a2)
            v = rd(ea)
            if v is None:
                return False
            r, c_out = _shift(op, S, v, C)
            self.fl[core] = (self.fl[core] & ~FLAG_C) | (FLAG_C if c_out else 0)
            if not self._wr(ea, r, events):
                return False
        elif op in (S["CEQSN_A_M"], S["CNEQSN_A_M"]):
            v = rd(self._ea(core, a1, a2))
            if v is None:
                return False
            self._sub(core, acc, v, 0)
            skip = (acc == v) if op == S["CEQSN_A_M"] else (acc != v)
        elif op in (S["IZSN_M"], S["DEZSN_M"]):
            ea = self._ea(core, a1, a2)
            v = rd(ea)
            if v is None:
                return False
            r = self._add(core, v, 1, 0) if op == S["IZSN_M"] else self._sub(core, v, 1, 0)
            if not self._wr(ea, r, events):
                return False
            skip = r == 0
        elif op == S["XCH_A_M"]:
            ea = self._ea(core, a1, a2)
            v = rd(ea)
            if v is None:
                return False
            if not self._wr(ea, acc, events):
                return False
            self.acc[core] = v
        elif op == S["MUL_A_M"]:
            v = rd(self._ea(core, a1, a2))
            if v is None:
                return False
            prod = acc * v
            self.acc[core] = prod & 0xFF
            self._io_write(5, prod >> 8, core, events)
            fl = 0
            if prod == 0:
                fl |= FLAG_Z
            if prod > 0xFF:
                fl |= FLAG_C
            self.fl[core] = fl
        elif op == S["NADD_A_M"]:
            v = rd(self._ea(core, a1, a2))
            if v is None:
                return False
            self.acc[core] = self._sub(core, v, acc, 0)
        elif op == S["NADD_M_A"]:
            ea = self._ea(core, a1, a2)
            v = rd(ea)
            if v is None:
                return False
            if not self._wr(ea, self._sub(core, acc, v, 0), events):
                return False
        elif op == S["MOV_A_IMM"]:
            self.acc[core] = a1
        elif op == S["ADD_A_IMM"]:
            self.acc[core] = self._add(core, acc, a1, 0)
        elif op == S["SUB_A_IMM"]:
            self.acc[core] = self._sub(core, acc, a1, 0)
        elif op == S["AND_A_IMM"]:
            self.acc[core] = self._set_z(core, acc & a1)
        elif op == S["OR_A_IMM"]:
            self.acc[core] = self._set_z(core, acc | a1)
        elif op == S["XOR_A_IMM"]:
            self.acc[core] = self._set_z(core, acc ^ a1)
        elif op == S["COMP_A_IMM"]:
            self._sub(core, acc, a1, 0)
        elif op in (S["CEQSN_A_IMM"], S["CNEQSN_A_IMM"]):
            self._sub(core, acc, a1, 0)
            skip = (acc == a1) if op == S["CEQSN_A_IMM"] else (acc != a1)
        elif op == S["RET_IMM"]:
            self.acc[core] = a1
            v = self._pop16(core, events)
            if v is None:
                return False
            self.pc[core] = v & self.prog_mask
            return False
        elif op == S["GOTO"]:
            self.pc[core] = a1
            return False
        elif op == S["CALL"]:
            if not self._push16(nxt, core, events):
                return False
            self.pc[core] = a1
            return False
        elif op == S["RET"]:
            v = self._pop16(core, events)
            if v is None:
                return False
            self.pc[core] = v & self.prog_mask
            return False
        elif op == S["RETI"]:
            v = self._pop16(core, events)
            if v is None:
                return False
            self.pc[core] = v & self.prog_mask
            self.gint = True
            return False
        elif op == S["IDXM_A_N"]:
            ptr = self._rd16(a1, events)
            if ptr is None:
                return False
            v = rd(ptr)
            if v is None:
                return False
            self.acc[core] = v
        elif op == S["IDXM_N_A"]:
            ptr = self._rd16(a1, events)
            if ptr is None:
                return False
            if not self._wr(ptr, acc, events):
                return False
        elif op in (S["LDTABL"], S["LDTABH"]):
            ptr = self._rd16(a1, events)
            if ptr is None:
                return False
            w = self.code[ptr & self.prog_mask]
            self.acc[core] = w & 0xFF if op == S["LDTABL"] else (w >> 8) & 0xFF
        elif op in (S["LDSPTL"], S["LDSPTH"]):
            ptr = self._rd16(self.sp[core], events)
            if ptr is None:
                return False
            w = self.code[ptr & self.prog_mask]
            self.acc[core] = w & 0xFF if op == S["LDSPTL"] else (w >> 8) & 0xFF
        elif op == S["IGOTO"]:
            ptr = self._rd16(a1, events)
            if ptr is None:
                return False
            self.pc[core] = ptr & self.prog_mask
            return False
        elif op == S["ICALL"]:
            ptr = self._rd16(a1, events)
            if ptr is None:
                return False
            if not self._push16(nxt, core, events):
                return False
            self.pc[core] = ptr & self.prog_mask
            return False
        elif op == S["PUSHW"]:
            v = self._rd16(a1, events)
            if v is None:
                return False
            if not self._push16(v, core, events):
                return False
        elif op == S["MOV_A_IO"]:
            self.acc[core] = self._io_read(a1, core)
        elif op == S["MOV_IO_A"]:
            self._io_write(a1, acc, core, events)
        elif op in (S["SET0_M"], S["SET1_M"]):
            v = rd(a1)
            if v is None:
                return False
            r = v & ~(1 << a2) if op == S["SET0_M"] else v | (1 << a2)
            if not self._wr(a1, r, events):
                return False
        elif op in (S["T0SN_M"], S["T1SN_M"]):
            v = rd(a1)
            if v is None:
                return False
            bit = (v >> a2) & 1
            skip = bit == 0 if op == S["T0SN_M"] else bit == 1
        elif op in (S["SET0_IO"], S["SET1_IO"]):
            v = self._io_read(a1, core)
            r = v & ~(1 << a2) if op == S["SET0_IO"] else v | (1 << a2)
            self._io_write(a1, r, core, events)
        elif op in (S["T0SN_IO"], S["T1SN_IO"]):
            bit = (self._io_read(a1, core) >> a2) & 1
            skip = bit == 0 if op == S["T0SN_IO"] else bit == 1
        elif op == S["SWAPC_M"]:
            v = rd(a1)
            if v is None:
                return False
            bit = (v >> a2) & 1
            r = (v & ~(1 << a2)) | (C << a2)
            if not self._wr(a1, r, events):
                return False
            self.fl[core] = (self.fl[core] & ~FLAG_C) | (FLAG_C if bit else 0)
        elif op == S["SWAPC_IO"]:
            v = self._io_read(a1, core)
            bit = (v >> a2) & 1
            self._io_write(a1, (v & ~(1 << a2)) | (C << a2), core, events)
            self.fl[core] = (self.fl[core] & ~FLAG_C) | (FLAG_C if bit else 0)
        elif op == S["ENGINT"]:
            self.gint = True
        elif op == S["DISGINT"]:
            self.gint = False
        elif op == S["STOPSYS"]:
            self.halted = REASON_NAMES[HALT_STOPSYS]
            events.append(("halt", "stopsys"))
        elif op == S["PUSHAF"]:
            sp = self.sp[core]
            if sp + 1 >= self.data_size and not self.config.wrap_data:
                self._fault_data(sp + 1, events)
                return False
            self._wr(sp, acc, events)
            self._wr(sp + 1, self.fl[core], events)
            self.sp[core] = (sp + 2) & 0xFF
            events.append(("sp", self.sp[core]))
        elif op == S["POPAF"]:
            sp = (self.sp[core] - 2) & 0xFF
            if sp + 1 >= self.data_size and not self.config.wrap_data:
                self._fault_data(sp, events)
                return False
            self.acc[core] = self.data[sp % self.data_size]
            self.fl[core] = self.data[(sp + 1) % self.data_size] & 0xF
            self.sp[core] = sp
            events.append(("sp", sp))
        elif op == S["NOT_A"]:
            self.acc[core] = self._set_z(core, acc ^ 0xFF)
        elif op == S["NEG_A"]:
            self.acc[core] = self._set_z(core, (-acc) & 0xFF)
        elif op in (S["SL_A"], S["SR_A"], S["SLC_A"], S["SRC_A"]):
            base = {S["SL_A"]: "SL_M", S["SR_A"]: "SR_M", S["SLC_A"]: "SLC_M", S["SRC_A"]: "SRC_M"}
            r, c_out = _shift(S[base[op]], S, acc, C)
            self.acc[core] = r
            self.fl[core] = (self.fl[core] & ~FLAG_C) | (FLAG_C if c_out else 0)
        elif op == S["SPADD"]:
            self.sp[core] = (self.sp[core] + a1) & 0xFF
            events.append(("sp", self.sp[core]))
        elif op == S["IDXSP_LOAD"]:
            v = rd((self.sp[core] + a1) % self.data_size)
            if v is None:
                return False
            self.acc[core] = v
        elif op == S["IDXSP_STORE"]:
            if not self._wr((self.sp[core] + a1) % self.data_size, acc, events):
                return False
        elif op == S["IDXXCH"]:
            ptr = self._rd16(a1, events)
            if ptr is None:
                return False
            v = rd(ptr)
            if v is None:
                return False
            if not self._wr(ptr, acc, events):
                return False
            self.acc[core] = v
        elif op == S["CMPXCHG_DIR"]:
            v = rd(a1)
            desired = rd(0)
            if v is None or desired is None:
                return False
            if v == acc:
                if not self._wr(a1, desired, events):
                    return False
                self.fl[core] |= FLAG_Z
            else:
                self.acc[core] = v
                self.fl[core] &= ~FLAG_Z
        elif op == S["CMPXCHG_IND"]:
            ptr = self._rd16(a1, events)
            desired = rd((a1 + 2) % self.data_size)
            if ptr is None or desired is None:
                return False
            v = rd(ptr)
            if v is None:
                return False
            if v == acc:
                if not self._wr(ptr, desired, events):
                    return False
                self.fl[core] |= FLAG_Z
            else:
                self.acc[core] = v
                self.fl[core] &= ~FLAG_Z
        elif op == S["COREID"]:
            self.acc[core] = core
        elif op == S["DA_A"]:
            t = acc
            if (self.fl[core] & FLAG_AC) or (t & 0xF) > 9:
                t += 0x06
            if C or (t >> 4) > 9:
                t += 0x60
                self.fl[core] |= FLAG_C
            self.acc[core] = t & 0xFF
        elif op in (S["IDXADD"], S["IDXAND"], S["IDXOR"], S["IDXXOR"]):
            ptr = self._rd16(a1, events)
            if ptr is None:
                return False
            v = rd(ptr)
            if v is None:
                return False
            if op == S["IDXADD"]:
                r = (v + acc) & 0xFF
            elif op == S["IDXAND"]:
                r = v & acc
            elif op == S["IDXOR"]:
                r = v | acc
            else:
                r = v ^ acc
            if not self._wr(ptr, r, events):
                return False
            self.acc[core] = v
        else:
            raise AssertionError(f"unhandled semantic id {op}")

        self.pc[core] = ((pc + 2) if skip else nxt) & self.prog_mask
        return skip

    # -- batch run ----------------------------------------------------------

    def run(
        self,
        max_cycles: int | None = None,
        breakpoints=None,
        trace=None,
        kernel: str | None = None,
    ) -> RunResult:
        """Run until halt, fault, breakpoint or cycle budget.

        Without trace/breakpoints the hot batch kernel executes the run
        (compiled when available, pure-Python twin otherwise); the reference
        stepper is used for traced or breakpointed runs.  `kernel` forces
        'compiled', 'pure' or 'stepper'.
        """
        budget = self.config.max_cycles if max_cycles is None else max_cycles
        if self.halted:
            return RunResult(self.halted, self.cycle, self.halt_detail)
        if kernel is None:
            kernel = (
                "stepper"
                if breakpoints or trace is not None
                else ("compiled" if _fast_kernel is not None else "pure")
            )
        if kernel == "stepper":
            return self._run_stepper(budget, breakpoints, trace)
        mod = _fast_kernel if kernel == "compiled" else _pure_kernel
        if mod is None:
            raise RuntimeError("compiled kernel requested but not built")
        state = array(
            "q",
            [
                self.cycle,
                1 if self.gint else 0,
                self._irq_idx,
                HALT_NONE,
                0,
                -1 if self.irq_vector is None else self.irq_vector,
            ],
        )
        irq = array("i", self._irq) if self._irq else array("i", [0])
        mod.run_batch(
            self.pre_op,
            self.pre_a1,
            self.pre_a2,
            self.pre_cyc,
            self.pre_skip,
            self.code,
            self.data,
            self.io,
            self.acc,
            self.sp,
            self.fl,
            self.pc,
            self.stall,
            self.ncores,
            self.data_size,
            self.prog_mask,
            1 if self.gint_io else 0,
            1 if self.config.wrap_data else 0,
            irq,
            len(self._irq),
            state,
            self.cycle + budget,
        )
        self.cycle = state[0]
        self.gint = bool(state[1])
        self._irq_idx = state[2]
        reason = int(state[3])
        self.halt_detail = int(state[4])
        if reason != HALT_NONE:
            self.halted = REASON_NAMES[reason]
            return RunResult(self.halted, self.cycle, self.halt_detail)
        return RunResult(REASON_NAMES[HALT_NONE], self.cycle, 0)

    def _run_stepper(self, budget, breakpoints, trace) -> RunResult:
        bps = set(breakpoints or ())
        end = self.cycle + budget
        while self.cycle < end:
            if not self.stall[self.active_core] and self.pc[self.active_core] in bps:
                return RunResult(REASON_NAMES[HALT_BREAKPOINT], self.cycle, self.pc[self.active_core])
            r = self.step()
            if trace is not None:
                trace.append(r)
            if self.halted:
                return RunResult(self.halted, self.cycle, self.halt_detail)
        return RunResult(REASON_NAMES[HALT_NONE], self.cycle, 0)


def _shift(op, S, v, C):
    if op == S["SL_M"]:
        return (v << 1) & 0xFF, (v >> 7) & 1
    if op == S["SR_M"]:
        return v >> 1, v & 1
    if op == S["SLC_M"]:
        return ((v << 1) | C) & 0xFF, (v >> 7) & 1
    return (v >> 1) | (C << 7), v & 1


def _predecode_args(instr: Instruction) -> tuple[int, int]:
    a1 = a2 = 0
    for op in instr.operands:
        if op.kind == ACC:
            continue
        a1 = op.value
        if op.kind == SPREL:
            a2 = 1
        elif op.bit or op.kind in ("bit", "iobit"):
            a2 = op.bit
        break
    return a1, a2


def load(image, config: RunConfig | dict | None = None, opmap: OpcodeMap | None = None) -> Machine:
    """Build a ready-to-run machine from an assembled image."""
    if config is None:
        config = RunConfig()
    elif isinstance(config, dict):
        config = RunConfig(**config)
    if opmap is None:
        opmap = build_map(image.variant, image.extensions, reclaim=True)
    return Machine(image, opmap, config)


def step(machine: Machine) -> StepResult:
    return machine.step()


def run(machine: Machine, max_cycles: int | None = None, breakpoints=None, **kw) -> RunResult:
    return machine.run(max_cycles, breakpoints, **kw)


def raise_interrupt(machine: Machine, at_cycle: int) -> None:
    machine.raise_interrupt(at_cycle)


def trace_text(steps) -> str:
    return "\n".join(s.trace_line() for s in steps) + "\n"


def trace_jsonl(steps) -> str:
    import json

    out = []
    for s in steps:
        out.append(
            json.dumps(
                {
                    "cycle": s.cycle,
                    "core": s.core,
                    "pc": s.pc,
                    "word": s.word,
                    "mnemonic": str(s.instruction) if s.instruction else None,
                    "cycles": s.cycles_consumed,
                    "phase": s.phase,
                    "events": [list(e) for e in s.events],
                }
            )
        )
    return "\n".join(out) + "\n"
