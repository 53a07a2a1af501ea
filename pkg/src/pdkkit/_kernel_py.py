"""Pure-Python batch execution kernel.

Fallback twin of the compiled kernel in _simkern.pyx: identical dispatch
structure and memory/fault rules, selected at import time by sim.py when the
extension is unavailable.  Keep the two files in sync; tests assert they
produce bitwise-identical machine states.

Fault signalling uses sentinel returns (-1 from reads) so the structure maps
1:1 onto the C version.
"""

from .ops import (
    FLAG_AC,
    FLAG_C,
    FLAG_OV,
    FLAG_Z,
    HALT_FAULT_DATA,
    HALT_FAULT_UNALLOC,
    HALT_NONE,
    HALT_STOPSYS,
    SEM,
)

S = SEM  # shorthand

OP_UNALLOC = S["UNALLOC"]
OP_NOP = S["NOP"]
OP_MOV_A_M = S["MOV_A_M"]
OP_MOV_M_A = S["MOV_M_A"]
OP_ADD_A_M = S["ADD_A_M"]
OP_ADD_M_A = S["ADD_M_A"]
OP_SUB_A_M = S["SUB_A_M"]
OP_SUB_M_A = S["SUB_M_A"]
OP_ADDC_A_M = S["ADDC_A_M"]
OP_ADDC_M_A = S["ADDC_M_A"]
OP_SUBC_A_M = S["SUBC_A_M"]
OP_SUBC_M_A = S["SUBC_M_A"]
OP_AND_A_M = S["AND_A_M"]
OP_AND_M_A = S["AND_M_A"]
OP_OR_A_M = S["OR_A_M"]
OP_OR_M_A = S["OR_M_A"]
OP_XOR_A_M = S["XOR_A_M"]
OP_XOR_M_A = S["XOR_M_A"]
OP_COMP_A_M = S["COMP_A_M"]
OP_COMP_M_A = S["COMP_M_A"]
OP_INC_M = S["INC_M"]
OP_DEC_M = S["DEC_M"]
OP_CLEAR_M = S["CLEAR_M"]
OP_SL_M = S["SL_M"]
OP_SR_M = S["SR_M"]
OP_SLC_M = S["SLC_M"]
OP_SRC_M = S["SRC_M"]
OP_CEQSN_A_M = S["CEQSN_A_M"]
OP_CNEQSN_A_M = S["CNEQSN_A_M"]
OP_IZSN_M = S["IZSN_M"]
OP_DEZSN_M = S["DEZSN_M"]
OP_XCH_A_M = S["XCH_A_M"]
OP_MUL_A_M = S["MUL_A_M"]
OP_NADD_A_M = S["NADD_A_M"]
OP_NADD_M_A = S["NADD_M_A"]
OP_MOV_A_IMM = S["MOV_A_IMM"]
OP_ADD_A_IMM = S["ADD_A_IMM"]
OP_SUB_A_IMM = S["SUB_A_IMM"]
OP_AND_A_IMM = S["AND_A_IMM"]
OP_OR_A_IMM = S["OR_A_IMM"]
OP_XOR_A_IMM = S["XOR_A_IMM"]
OP_COMP_A_IMM = S["COMP_A_IMM"]
OP_CEQSN_A_IMM = S["CEQSN_A_IMM"]
OP_CNEQSN_A_IMM = S["CNEQSN_A_IMM"]
OP_RET_IMM = S["RET_IMM"]
OP_GOTO = S["GOTO"]
OP_CALL = S["CALL"]
OP_RET = S["RET"]
OP_RETI = S["RETI"]
OP_IDXM_A_N = S["IDXM_A_N"]
OP_IDXM_N_A = S["IDXM_N_A"]
OP_LDTABL = S["LDTABL"]
OP_LDTABH = S["LDTABH"]
OP_LDSPTL = S["LDSPTL"]
OP_LDSPTH = S["LDSPTH"]
OP_IGOTO = S["IGOTO"]
OP_ICALL = S["ICALL"]
OP_PUSHW = S["PUSHW"]
OP_MOV_A_IO = S["MOV_A_IO"]
OP_MOV_IO_A = S["MOV_IO_A"]
OP_SET0_M = S["SET0_M"]
OP_SET1_M = S["SET1_M"]
OP_T0SN_M = S["T0SN_M"]
OP_T1SN_M = S["T1SN_M"]
OP_SET0_IO = S["SET0_IO"]
OP_SET1_IO = S["SET1_IO"]
OP_T0SN_IO = S["T0SN_IO"]
OP_T1SN_IO = S["T1SN_IO"]
OP_SWAPC_M = S["SWAPC_M"]
OP_SWAPC_IO = S["SWAPC_IO"]
OP_ENGINT = S["ENGINT"]
OP_DISGINT = S["DISGINT"]
OP_STOPSYS = S["STOPSYS"]
OP_PUSHAF = S["PUSHAF"]
OP_POPAF = S["POPAF"]
OP_NOT_A = S["NOT_A"]
OP_NEG_A = S["NEG_A"]
OP_SL_A = S["SL_A"]
OP_SR_A = S["SR_A"]
OP_SLC_A = S["SLC_A"]
OP_SRC_A = S["SRC_A"]
OP_SPADD = S["SPADD"]
OP_IDXSP_LOAD = S["IDXSP_LOAD"]
OP_IDXSP_STORE = S["IDXSP_STORE"]
OP_IDXXCH = S["IDXXCH"]
OP_CMPXCHG_DIR = S["CMPXCHG_DIR"]
OP_CMPXCHG_IND = S["CMPXCHG_IND"]
OP_COREID = S["COREID"]
OP_DA_A = S["DA_A"]
OP_IDXADD = S["IDXADD"]
OP_IDXAND = S["IDXAND"]
OP_IDXOR = S["IDXOR"]
OP_IDXXOR = S["IDXXOR"]


def run_batch(
    pre_op, pre_a1, pre_a2, pre_cyc, pre_skip,
    code, data, io,
    acc, sp, fl, pc, stall,
    ncores, data_size, prog_mask, gint_io, wrap,
    irq, n_irq, state, end_cycle,
):
    cycle = state[0]
    gint = state[1]
    irq_idx = state[2]
    vec = state[5]
    reason = HALT_NONE
    detail = 0

    def rd(addr):
        if 0 <= addr < data_size:
            return data[addr]
        if wrap:
            return data[addr % data_size]
        return -1

    while cycle < end_cycle:
        c = cycle % ncores

        if c == 0 and stall[0] == 0:
            while irq_idx < n_irq and irq[irq_idx] <= cycle:
                irq_idx += 1
                if gint and vec >= 0:
                    s0 = sp[0]
                    if s0 + 1 >= data_size and not wrap:
                        reason = HALT_FAULT_DATA
                        detail = s0 + 1
                        cycle += 1
                        break
                    data[s0 % data_size] = pc[0] & 0xFF
                    data[(s0 + 1) % data_size] = (pc[0] >> 8) & 0xFF
                    sp[0] = (s0 + 2) & 0xFF
                    pc[0] = vec & prog_mask
                    gint = 0
                    break
            if reason != HALT_NONE:
                break

        if stall[c]:
            stall[c] = 0
            cycle += 1
            continue

        p = pc[c]
        op = pre_op[p]
        a1 = pre_a1[p]
        a2 = pre_a2[p]
        a = acc[c]
        f = fl[c]
        C = 1 if f & FLAG_C else 0
        nxt = (p + 1) & prog_mask
        skip = 0

        if op == OP_UNALLOC:
            reason = HALT_FAULT_UNALLOC
            detail = code[p]
            cycle += 1
            break

        # --- direct/sp-relative memory ops ---
        if op <= OP_NADD_M_A and op >= OP_MOV_A_M:
            ea = (sp[c] + a1) % data_size if a2 else a1
            if op == OP_MOV_A_M:
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                acc[c] = v
            elif op == OP_MOV_M_A:
                if ea >= data_size:
                    if wrap:
                        ea %= data_size
                    else:
                        reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                data[ea] = a
            elif op in (OP_ADD_A_M, OP_ADDC_A_M, OP_SUB_A_M, OP_SUBC_A_M):
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                cin = C if op in (OP_ADDC_A_M, OP_SUBC_A_M) else 0
                if op == OP_ADD_A_M or op == OP_ADDC_A_M:
                    r = a + v + cin
                    f = 0
                    if (r & 0xFF) == 0: f |= FLAG_Z
                    if r > 0xFF: f |= FLAG_C
                    if (a & 0xF) + (v & 0xF) + cin > 0xF: f |= FLAG_AC
                    if (~(a ^ v)) & (a ^ r) & 0x80: f |= FLAG_OV
                else:
                    r = a - v - cin
                    f = 0
                    if (r & 0xFF) == 0: f |= FLAG_Z
                    if r < 0: f |= FLAG_C
                    if (a & 0xF) - (v & 0xF) - cin < 0: f |= FLAG_AC
                    if (a ^ v) & (a ^ r) & 0x80: f |= FLAG_OV
                acc[c] = r & 0xFF
                fl[c] = f
            elif op in (OP_ADD_M_A, OP_ADDC_M_A, OP_SUB_M_A, OP_SUBC_M_A):
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                cin = C if op in (OP_ADDC_M_A, OP_SUBC_M_A) else 0
                if op == OP_ADD_M_A or op == OP_ADDC_M_A:
                    r = v + a + cin
                    f = 0
                    if (r & 0xFF) == 0: f |= FLAG_Z
                    if r > 0xFF: f |= FLAG_C
                    if (v & 0xF) + (a & 0xF) + cin > 0xF: f |= FLAG_AC
                    if (~(v ^ a)) & (v ^ r) & 0x80: f |= FLAG_OV
                else:
                    r = v - a - cin
                    f = 0
                    if (r & 0xFF) == 0: f |= FLAG_Z
                    if r < 0: f |= FLAG_C
                    if (v & 0xF) - (a & 0xF) - cin < 0: f |= FLAG_AC
                    if (v ^ a) & (v ^ r) & 0x80: f |= FLAG_OV
                data[ea % data_size] = r & 0xFF
                fl[c] = f
            elif op in (OP_AND_A_M, OP_OR_A_M, OP_XOR_A_M):
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                r = a & v if op == OP_AND_A_M else (a | v if op == OP_OR_A_M else a ^ v)
                acc[c] = r
                fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
            elif op in (OP_AND_M_A, OP_OR_M_A, OP_XOR_M_A):
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                r = v & a if op == OP_AND_M_A else (v | a if op == OP_OR_M_A else v ^ a)
                data[ea % data_size] = r
                fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
            elif op == OP_COMP_A_M or op == OP_COMP_M_A:
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                x, y = (a, v) if op == OP_COMP_A_M else (v, a)
                r = x - y
                f = 0
                if (r & 0xFF) == 0: f |= FLAG_Z
                if r < 0: f |= FLAG_C
                if (x & 0xF) - (y & 0xF) < 0: f |= FLAG_AC
                if (x ^ y) & (x ^ r) & 0x80: f |= FLAG_OV
                fl[c] = f
            elif op == OP_INC_M or op == OP_DEC_M:
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                r = (v + 1 if op == OP_INC_M else v - 1) & 0xFF
                data[ea % data_size] = r
                fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
            elif op == OP_CLEAR_M:
                if ea >= data_size:
                    if wrap:
                        ea %= data_size
                    else:
                        reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                data[ea] = 0
            elif op in (OP_SL_M, OP_SR_M, OP_SLC_M, OP_SRC_M):
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                if op == OP_SL_M:
                    r = (v << 1) & 0xFF; co = (v >> 7) & 1
                elif op == OP_SR_M:
                    r = v >> 1; co = v & 1
                elif op == OP_SLC_M:
                    r = ((v << 1) | C) & 0xFF; co = (v >> 7) & 1
                else:
                    r = (v >> 1) | (C << 7); co = v & 1
                data[ea % data_size] = r
                fl[c] = (f & ~FLAG_C) | (FLAG_C if co else 0)
            elif op == OP_CEQSN_A_M or op == OP_CNEQSN_A_M:
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                r = a - v
                f = 0
                if (r & 0xFF) == 0: f |= FLAG_Z
                if r < 0: f |= FLAG_C
                if (a & 0xF) - (v & 0xF) < 0: f |= FLAG_AC
                if (a ^ v) & (a ^ r) & 0x80: f |= FLAG_OV
                fl[c] = f
                skip = 1 if ((a == v) if op == OP_CEQSN_A_M else (a != v)) else 0
            elif op == OP_IZSN_M or op == OP_DEZSN_M:
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                if op == OP_IZSN_M:
                    r = v + 1
                    f = 0
                    if (r & 0xFF) == 0: f |= FLAG_Z
                    if r > 0xFF: f |= FLAG_C
                    if (v & 0xF) + 1 > 0xF: f |= FLAG_AC
                    if (~(v ^ 1)) & (v ^ r) & 0x80: f |= FLAG_OV
                else:
                    r = v - 1
                    f = 0
                    if (r & 0xFF) == 0: f |= FLAG_Z
                    if r < 0: f |= FLAG_C
                    if (v & 0xF) - 1 < 0: f |= FLAG_AC
                    if (v ^ 1) & (v ^ r) & 0x80: f |= FLAG_OV
                r &= 0xFF
                data[ea % data_size] = r
                fl[c] = f
                skip = 1 if r == 0 else 0
            elif op == OP_XCH_A_M:
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                data[ea % data_size] = a
                acc[c] = v
            elif op == OP_MUL_A_M:
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                prod = a * v
                acc[c] = prod & 0xFF
                io[5] = (prod >> 8) & 0xFF
                f = 0
                if prod == 0: f |= FLAG_Z
                if prod > 0xFF: f |= FLAG_C
                fl[c] = f
            elif op == OP_NADD_A_M or op == OP_NADD_M_A:
                v = rd(ea)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
                x, y = (v, a) if op == OP_NADD_A_M else (a, v)
                r = x - y
                f = 0
                if (r & 0xFF) == 0: f |= FLAG_Z
                if r < 0: f |= FLAG_C
                if (x & 0xF) - (y & 0xF) < 0: f |= FLAG_AC
                if (x ^ y) & (x ^ r) & 0x80: f |= FLAG_OV
                fl[c] = f
                if op == OP_NADD_A_M:
                    acc[c] = r & 0xFF
                else:
                    data[ea % data_size] = r & 0xFF

        elif op == OP_MOV_A_IMM:
            acc[c] = a1
        elif op == OP_ADD_A_IMM or op == OP_SUB_A_IMM:
            if op == OP_ADD_A_IMM:
                r = a + a1
                f = 0
                if (r & 0xFF) == 0: f |= FLAG_Z
                if r > 0xFF: f |= FLAG_C
                if (a & 0xF) + (a1 & 0xF) > 0xF: f |= FLAG_AC
                if (~(a ^ a1)) & (a ^ r) & 0x80: f |= FLAG_OV
            else:
                r = a - a1
                f = 0
                if (r & 0xFF) == 0: f |= FLAG_Z
                if r < 0: f |= FLAG_C
                if (a & 0xF) - (a1 & 0xF) < 0: f |= FLAG_AC
                if (a ^ a1) & (a ^ r) & 0x80: f |= FLAG_OV
            acc[c] = r & 0xFF
            fl[c] = f
        elif op in (OP_AND_A_IMM, OP_OR_A_IMM, OP_XOR_A_IMM):
            r = a & a1 if op == OP_AND_A_IMM else (a | a1 if op == OP_OR_A_IMM else a ^ a1)
            acc[c] = r
            fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
        elif op in (OP_COMP_A_IMM, OP_CEQSN_A_IMM, OP_CNEQSN_A_IMM):
            r = a - a1
            f = 0
            if (r & 0xFF) == 0: f |= FLAG_Z
            if r < 0: f |= FLAG_C
            if (a & 0xF) - (a1 & 0xF) < 0: f |= FLAG_AC
            if (a ^ a1) & (a ^ r) & 0x80: f |= FLAG_OV
            fl[c] = f
            if op == OP_CEQSN_A_IMM:
                skip = 1 if a == a1 else 0
            elif op == OP_CNEQSN_A_IMM:
                skip = 1 if a != a1 else 0
        elif op == OP_RET_IMM or op == OP_RET or op == OP_RETI:
            s0 = (sp[c] - 2) & 0xFF
            lo = rd(s0)
            hi = rd(s0 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = s0; cycle += 1; break
            if op == OP_RET_IMM:
                acc[c] = a1
            if op == OP_RETI:
                gint = 1
            sp[c] = s0
            pc[c] = (lo | (hi << 8)) & prog_mask
            stall[c] = 1
            cycle += 1
            continue
        elif op == OP_GOTO:
            pc[c] = a1
            stall[c] = 1
            cycle += 1
            continue
        elif op == OP_CALL:
            s0 = sp[c]
            if s0 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = s0 + 1; cycle += 1; break
            data[s0 % data_size] = nxt & 0xFF
            data[(s0 + 1) % data_size] = (nxt >> 8) & 0xFF
            sp[c] = (s0 + 2) & 0xFF
            pc[c] = a1
            stall[c] = 1
            cycle += 1
            continue
        elif op == OP_IDXM_A_N or op == OP_IDXM_N_A:
            lo = rd(a1)
            hi = rd(a1 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            ptr = lo | (hi << 8)
            if op == OP_IDXM_A_N:
                v = rd(ptr)
                if v < 0:
                    reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
                acc[c] = v
            else:
                if ptr >= data_size:
                    if wrap:
                        ptr %= data_size
                    else:
                        reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
                data[ptr] = a
        elif op == OP_LDTABL or op == OP_LDTABH:
            lo = rd(a1)
            hi = rd(a1 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            w = code[(lo | (hi << 8)) & prog_mask]
            acc[c] = w & 0xFF if op == OP_LDTABL else (w >> 8) & 0xFF
        elif op == OP_LDSPTL or op == OP_LDSPTH:
            s0 = sp[c]
            lo = rd(s0)
            hi = rd(s0 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = s0; cycle += 1; break
            w = code[(lo | (hi << 8)) & prog_mask]
            acc[c] = w & 0xFF if op == OP_LDSPTL else (w >> 8) & 0xFF
        elif op == OP_IGOTO or op == OP_ICALL:
            lo = rd(a1)
            hi = rd(a1 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            target = (lo | (hi << 8)) & prog_mask
            if op == OP_ICALL:
                s0 = sp[c]
                if s0 + 1 >= data_size and not wrap:
                    reason = HALT_FAULT_DATA; detail = s0 + 1; cycle += 1; break
                data[s0 % data_size] = nxt & 0xFF
                data[(s0 + 1) % data_size] = (nxt >> 8) & 0xFF
                sp[c] = (s0 + 2) & 0xFF
            pc[c] = target
            stall[c] = 1
            cycle += 1
            continue
        elif op == OP_PUSHW:
            lo = rd(a1)
            hi = rd(a1 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            s0 = sp[c]
            if s0 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = s0 + 1; cycle += 1; break
            data[s0 % data_size] = lo
            data[(s0 + 1) % data_size] = hi
            sp[c] = (s0 + 2) & 0xFF
        elif op == OP_MOV_A_IO:
            if a1 == 0:
                acc[c] = sp[c]
            elif a1 == 1:
                acc[c] = f
            elif a1 == 2 and gint_io:
                acc[c] = gint
            else:
                acc[c] = io[a1]
        elif op == OP_MOV_IO_A:
            if a1 == 0:
                sp[c] = a
            elif a1 == 1:
                fl[c] = a & 0xF
            elif a1 == 2 and gint_io:
                gint = a & 1
            else:
                io[a1] = a
        elif op == OP_SET0_M or op == OP_SET1_M:
            v = rd(a1)
            if v < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            data[a1 % data_size] = v & ~(1 << a2) if op == OP_SET0_M else v | (1 << a2)
        elif op == OP_T0SN_M or op == OP_T1SN_M:
            v = rd(a1)
            if v < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            bit = (v >> a2) & 1
            skip = 1 if (bit == 0 if op == OP_T0SN_M else bit == 1) else 0
        elif op in (OP_SET0_IO, OP_SET1_IO, OP_T0SN_IO, OP_T1SN_IO, OP_SWAPC_IO):
            if a1 == 0:
                v = sp[c]
            elif a1 == 1:
                v = f
            elif a1 == 2 and gint_io:
                v = gint
            else:
                v = io[a1]
            if op == OP_T0SN_IO or op == OP_T1SN_IO:
                bit = (v >> a2) & 1
                skip = 1 if (bit == 0 if op == OP_T0SN_IO else bit == 1) else 0
            else:
                if op == OP_SET0_IO:
                    r = v & ~(1 << a2)
                elif op == OP_SET1_IO:
                    r = v | (1 << a2)
                else:  # SWAPC_IO
                    bit = (v >> a2) & 1
                    r = (v & ~(1 << a2)) | (C << a2)
                    fl[c] = (f & ~FLAG_C) | (FLAG_C if bit else 0)
                if a1 == 0:
                    sp[c] = r & 0xFF
                elif a1 == 1:
                    fl[c] = r & 0xF
                elif a1 == 2 and gint_io:
                    gint = r & 1
                else:
                    io[a1] = r & 0xFF
        elif op == OP_SWAPC_M:
            v = rd(a1)
            if v < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            bit = (v >> a2) & 1
            data[a1 % data_size] = (v & ~(1 << a2)) | (C << a2)
            fl[c] = (f & ~FLAG_C) | (FLAG_C if bit else 0)
        elif op == OP_ENGINT:
            gint = 1
        elif op == OP_DISGINT:
            gint = 0
        elif op == OP_STOPSYS:
            pc[c] = nxt
            reason = HALT_STOPSYS
            cycle += 1
            break
        elif op == OP_PUSHAF:
            s0 = sp[c]
            if s0 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = s0 + 1; cycle += 1; break
            data[s0 % data_size] = a
            data[(s0 + 1) % data_size] = f
            sp[c] = (s0 + 2) & 0xFF
        elif op == OP_POPAF:
            s0 = (sp[c] - 2) & 0xFF
            lo = rd(s0)
            hi = rd(s0 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = s0; cycle += 1; break
            acc[c] = lo
            fl[c] = hi & 0xF
            sp[c] = s0
        elif op == OP_NOT_A or op == OP_NEG_A:
            r = (a ^ 0xFF) if op == OP_NOT_A else ((-a) & 0xFF)
            acc[c] = r
            fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
        elif op in (OP_SL_A, OP_SR_A, OP_SLC_A, OP_SRC_A):
            if op == OP_SL_A:
                r = (a << 1) & 0xFF; co = (a >> 7) & 1
            elif op == OP_SR_A:
                r = a >> 1; co = a & 1
            elif op == OP_SLC_A:
                r = ((a << 1) | C) & 0xFF; co = (a >> 7) & 1
            else:
                r = (a >> 1) | (C << 7); co = a & 1
            acc[c] = r
            fl[c] = (f & ~FLAG_C) | (FLAG_C if co else 0)
        elif op == OP_SPADD:
            sp[c] = (sp[c] + a1) & 0xFF
        elif op == OP_IDXSP_LOAD:
            ea = (sp[c] + a1) % data_size
            acc[c] = data[ea]
        elif op == OP_IDXSP_STORE:
            ea = (sp[c] + a1) % data_size
            data[ea] = a
        elif op == OP_IDXXCH:
            lo = rd(a1)
            hi = rd(a1 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            ptr = lo | (hi << 8)
            v = rd(ptr)
            if v < 0:
                reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
            data[ptr % data_size] = a
            acc[c] = v
        elif op == OP_CMPXCHG_DIR:
            v = rd(a1)
            desired = rd(0)
            if v < 0 or desired < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            if v == a:
                data[a1 % data_size] = desired
                fl[c] = f | FLAG_Z
            else:
                acc[c] = v
                fl[c] = f & ~FLAG_Z
        elif op == OP_CMPXCHG_IND:
            lo = rd(a1)
            hi = rd(a1 + 1)
            desired = rd((a1 + 2) % data_size)
            if lo < 0 or hi < 0 or desired < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            ptr = lo | (hi << 8)
            v = rd(ptr)
            if v < 0:
                reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
            if v == a:
                data[ptr % data_size] = desired
                fl[c] = f | FLAG_Z
            else:
                acc[c] = v
                fl[c] = f & ~FLAG_Z
        elif op == OP_COREID:
            acc[c] = c
        elif op == OP_DA_A:
            t = a
            if (f & FLAG_AC) or (t & 0xF) > 9:
                t += 0x06
            if C or (t >> 4) > 9:
                t += 0x60
                fl[c] = f | FLAG_C
            acc[c] = t & 0xFF
        elif op in (OP_IDXADD, OP_IDXAND, OP_IDXOR, OP_IDXXOR):
            lo = rd(a1)
            hi = rd(a1 + 1)
            if lo < 0 or hi < 0:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            ptr = lo | (hi << 8)
            v = rd(ptr)
            if v < 0:
                reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
            if op == OP_IDXADD:
                r = (v + a) & 0xFF
            elif op == OP_IDXAND:
                r = v & a
            elif op == OP_IDXOR:
                r = v | a
            else:
                r = v ^ a
            data[ptr % data_size] = r
            acc[c] = v
        # OP_NOP falls through with no effect

        if skip:
            pc[c] = (p + 2) & prog_mask
            stall[c] = 1
        else:
            pc[c] = nxt
            if pre_cyc[p] == 2:
                stall[c] = 1
        cycle += 1

    state[0] = cycle
    state[1] = gint
    state[2] = irq_idx
    state[3] = reason
    state[4] = detail
