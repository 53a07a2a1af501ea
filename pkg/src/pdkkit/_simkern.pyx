# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch execution kernel.

Twin of _kernel_py.py: identical dispatch structure, memory and fault rules.
Keep the two files in sync; tests assert bitwise-identical machine states.
"""

from .ops import SEM as _SEM
from .ops import (
    HALT_NONE as _HALT_NONE,
    HALT_STOPSYS as _HALT_STOPSYS,
    HALT_FAULT_UNALLOC as _HALT_FAULT_UNALLOC,
    HALT_FAULT_DATA as _HALT_FAULT_DATA,
)

cdef int FLAG_Z = 1
cdef int FLAG_C = 2
cdef int FLAG_AC = 4
cdef int FLAG_OV = 8

cdef int HALT_NONE = _HALT_NONE
cdef int HALT_STOPSYS = _HALT_STOPSYS
cdef int HALT_FAULT_UNALLOC = _HALT_FAULT_UNALLOC
cdef int HALT_FAULT_DATA = _HALT_FAULT_DATA

cdef int OP_UNALLOC = _SEM["UNALLOC"]
cdef int OP_NOP = _SEM["NOP"]
cdef int OP_MOV_A_M = _SEM["MOV_A_M"]
cdef int OP_MOV_M_A = _SEM["MOV_M_A"]
cdef int OP_ADD_A_M = _SEM["ADD_A_M"]
cdef int OP_ADD_M_A = _SEM["ADD_M_A"]
cdef int OP_SUB_A_M = _SEM["SUB_A_M"]
cdef int OP_SUB_M_A = _SEM["SUB_M_A"]
cdef int OP_ADDC_A_M = _SEM["ADDC_A_M"]
cdef int OP_ADDC_M_A = _SEM["ADDC_M_A"]
cdef int OP_SUBC_A_M = _SEM["SUBC_A_M"]
cdef int OP_SUBC_M_A = _SEM["SUBC_M_A"]
cdef int OP_AND_A_M = _SEM["AND_A_M"]
cdef int OP_AND_M_A = _SEM["AND_M_A"]
cdef int OP_OR_A_M = _SEM["OR_A_M"]
cdef int OP_OR_M_A = _SEM["OR_M_A"]
cdef int OP_XOR_A_M = _SEM["XOR_A_M"]
cdef int OP_XOR_M_A = _SEM["XOR_M_A"]
cdef int OP_COMP_A_M = _SEM["COMP_A_M"]
cdef int OP_COMP_M_A = _SEM["COMP_M_A"]
cdef int OP_INC_M = _SEM["INC_M"]
cdef int OP_DEC_M = _SEM["DEC_M"]
cdef int OP_CLEAR_M = _SEM["CLEAR_M"]
cdef int OP_SL_M = _SEM["SL_M"]
cdef int OP_SR_M = _SEM["SR_M"]
cdef int OP_SLC_M = _SEM["SLC_M"]
cdef int OP_SRC_M = _SEM["SRC_M"]
cdef int OP_CEQSN_A_M = _SEM["CEQSN_A_M"]
cdef int OP_CNEQSN_A_M = _SEM["CNEQSN_A_M"]
cdef int OP_IZSN_M = _SEM["IZSN_M"]
cdef int OP_DEZSN_M = _SEM["DEZSN_M"]
cdef int OP_XCH_A_M = _SEM["XCH_A_M"]
cdef int OP_MUL_A_M = _SEM["MUL_A_M"]
cdef int OP_NADD_A_M = _SEM["NADD_A_M"]
cdef int OP_NADD_M_A = _SEM["NADD_M_A"]
cdef int OP_MOV_A_IMM = _SEM["MOV_A_IMM"]
cdef int OP_ADD_A_IMM = _SEM["ADD_A_IMM"]
cdef int OP_SUB_A_IMM = _SEM["SUB_A_IMM"]
cdef int OP_AND_A_IMM = _SEM["AND_A_IMM"]
cdef int OP_OR_A_IMM = _SEM["OR_A_IMM"]
cdef int OP_XOR_A_IMM = _SEM["XOR_A_IMM"]
cdef int OP_COMP_A_IMM = _SEM["COMP_A_IMM"]
cdef int OP_CEQSN_A_IMM = _SEM["CEQSN_A_IMM"]
cdef int OP_CNEQSN_A_IMM = _SEM["CNEQSN_A_IMM"]
cdef int OP_RET_IMM = _SEM["RET_IMM"]
cdef int OP_GOTO = _SEM["GOTO"]
cdef int OP_CALL = _SEM["CALL"]
cdef int OP_RET = _SEM["RET"]
cdef int OP_RETI = _SEM["RETI"]
cdef int OP_IDXM_A_N = _SEM["IDXM_A_N"]
cdef int OP_IDXM_N_A = _SEM["IDXM_N_A"]
cdef int OP_LDTABL = _SEM["LDTABL"]
cdef int OP_LDTABH = _SEM["LDTABH"]
cdef int OP_LDSPTL = _SEM["LDSPTL"]
cdef int OP_LDSPTH = _SEM["LDSPTH"]
cdef int OP_IGOTO = _SEM["IGOTO"]
cdef int OP_ICALL = _SEM["ICALL"]
cdef int OP_PUSHW = _SEM["PUSHW"]
cdef int OP_MOV_A_IO = _SEM["MOV_A_IO"]
cdef int OP_MOV_IO_A = _SEM["MOV_IO_A"]
cdef int OP_SET0_M = _SEM["SET0_M"]
cdef int OP_SET1_M = _SEM["SET1_M"]
cdef int OP_T0SN_M = _SEM["T0SN_M"]
cdef int OP_T1SN_M = _SEM["T1SN_M"]
cdef int OP_SET0_IO = _SEM["SET0_IO"]
cdef int OP_SET1_IO = _SEM["SET1_IO"]
cdef int OP_T0SN_IO = _SEM["T0SN_IO"]
cdef int OP_T1SN_IO = _SEM["T1SN_IO"]
cdef int OP_SWAPC_M = _SEM["SWAPC_M"]
cdef int OP_SWAPC_IO = _SEM["SWAPC_IO"]
cdef int OP_ENGINT = _SEM["ENGINT"]
cdef int OP_DISGINT = _SEM["DISGINT"]
cdef int OP_STOPSYS = _SEM["STOPSYS"]
cdef int OP_PUSHAF = _SEM["PUSHAF"]
cdef int OP_POPAF = _SEM["POPAF"]
cdef int OP_NOT_A = _SEM["NOT_A"]
cdef int OP_NEG_A = _SEM["NEG_A"]
cdef int OP_SL_A = _SEM["SL_A"]
cdef int OP_SR_A = _SEM["SR_A"]
cdef int OP_SLC_A = _SEM["SLC_A"]
cdef int OP_SRC_A = _SEM["SRC_A"]
cdef int OP_SPADD = _SEM["SPADD"]
cdef int OP_IDXSP_LOAD = _SEM["IDXSP_LOAD"]
cdef int OP_IDXSP_STORE = _SEM["IDXSP_STORE"]
cdef int OP_IDXXCH = _SEM["IDXXCH"]
cdef int OP_CMPXCHG_DIR = _SEM["CMPXCHG_DIR"]
cdef int OP_CMPXCHG_IND = _SEM["CMPXCHG_IND"]
cdef int OP_COREID = _SEM["COREID"]
cdef int OP_DA_A = _SEM["DA_A"]
cdef int OP_IDXADD = _SEM["IDXADD"]
cdef int OP_IDXAND = _SEM["IDXAND"]
cdef int OP_IDXOR = _SEM["IDXOR"]
cdef int OP_IDXXOR = _SEM["IDXXOR"]


def run_batch(
    int[:] pre_op, int[:] pre_a1, int[:] pre_a2, int[:] pre_cyc, int[:] pre_skip,
    int[:] code, unsigned char[:] data, unsigned char[:] io,
    int[:] acc, int[:] sp, int[:] fl, int[:] pc, int[:] stall,
    int ncores, int data_size, int prog_mask, int gint_io, int wrap,
    int[:] irq, int n_irq, long long[:] state, long long end_cycle,
):
    cdef long long cycle = state[0]
    cdef int gint = <int> state[1]
    cdef int irq_idx = <int> state[2]
    cdef int vec = <int> state[5]
    cdef int reason = HALT_NONE
    cdef int detail = 0

    cdef int c, p, op, a1, a2, a, f, C, nxt, skip
    cdef int v, r, ea, cin, co, x, y, s0, lo, hi, ptr, bit, target, prod, t

    while cycle < end_cycle:
        c = <int> (cycle % ncores)

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

        if op >= OP_MOV_A_M and op <= OP_NADD_M_A:
            if a2:
                # mathematical modulo: cdivision would keep the dividend's sign
                ea = (sp[c] + a1) % data_size
                if ea < 0:
                    ea += data_size
            else:
                ea = a1
            if ea >= data_size:
                if wrap:
                    ea = ea % data_size
                else:
                    reason = HALT_FAULT_DATA; detail = ea; cycle += 1; break
            v = data[ea]
            if op == OP_MOV_A_M:
                acc[c] = v
            elif op == OP_MOV_M_A:
                data[ea] = a
            elif op == OP_ADD_A_M or op == OP_ADDC_A_M or op == OP_SUB_A_M or op == OP_SUBC_A_M:
                cin = C if (op == OP_ADDC_A_M or op == OP_SUBC_A_M) else 0
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
            elif op == OP_ADD_M_A or op == OP_ADDC_M_A or op == OP_SUB_M_A or op == OP_SUBC_M_A:
                cin = C if (op == OP_ADDC_M_A or op == OP_SUBC_M_A) else 0
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
                data[ea] = r & 0xFF
                fl[c] = f
            elif op == OP_AND_A_M or op == OP_OR_A_M or op == OP_XOR_A_M:
                r = a & v if op == OP_AND_A_M else (a | v if op == OP_OR_A_M else a ^ v)
                acc[c] = r
                fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
            elif op == OP_AND_M_A or op == OP_OR_M_A or op == OP_XOR_M_A:
                r = v & a if op == OP_AND_M_A else (v | a if op == OP_OR_M_A else v ^ a)
                data[ea] = r
                fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
            elif op == OP_COMP_A_M or op == OP_COMP_M_A:
                if op == OP_COMP_A_M:
                    x = a; y = v
                else:
                    x = v; y = a
                r = x - y
                f = 0
                if (r & 0xFF) == 0: f |= FLAG_Z
                if r < 0: f |= FLAG_C
                if (x & 0xF) - (y & 0xF) < 0: f |= FLAG_AC
                if (x ^ y) & (x ^ r) & 0x80: f |= FLAG_OV
                fl[c] = f
            elif op == OP_INC_M or op == OP_DEC_M:
                r = (v + 1 if op == OP_INC_M else v - 1) & 0xFF
                data[ea] = r
                fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
            elif op == OP_CLEAR_M:
                data[ea] = 0
            elif op == OP_SL_M or op == OP_SR_M or op == OP_SLC_M or op == OP_SRC_M:
                if op == OP_SL_M:
                    r = (v << 1) & 0xFF; co = (v >> 7) & 1
                elif op == OP_SR_M:
                    r = v >> 1; co = v & 1
                elif op == OP_SLC_M:
                    r = ((v << 1) | C) & 0xFF; co = (v >> 7) & 1
                else:
                    r = (v >> 1) | (C << 7); co = v & 1
                data[ea] = r
                fl[c] = (f & ~FLAG_C) | (FLAG_C if co else 0)
            elif op == OP_CEQSN_A_M or op == OP_CNEQSN_A_M:
                r = a - v
                f = 0
                if (r & 0xFF) == 0: f |= FLAG_Z
                if r < 0: f |= FLAG_C
                if (a & 0xF) - (v & 0xF) < 0: f |= FLAG_AC
                if (a ^ v) & (a ^ r) & 0x80: f |= FLAG_OV
                fl[c] = f
                if op == OP_CEQSN_A_M:
                    skip = 1 if a == v else 0
                else:
                    skip = 1 if a != v else 0
            elif op == OP_IZSN_M or op == OP_DEZSN_M:
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
                r = r & 0xFF
                data[ea] = r
                fl[c] = f
                skip = 1 if r == 0 else 0
            elif op == OP_XCH_A_M:
                data[ea] = a
                acc[c] = v
            elif op == OP_MUL_A_M:
                prod = a * v
                acc[c] = prod & 0xFF
                io[5] = (prod >> 8) & 0xFF
                f = 0
                if prod == 0: f |= FLAG_Z
                if prod > 0xFF: f |= FLAG_C
                fl[c] = f
            else:  # NADD_A_M / NADD_M_A
                if op == OP_NADD_A_M:
                    x = v; y = a
                else:
                    x = a; y = v
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
                    data[ea] = r & 0xFF

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
        elif op == OP_AND_A_IMM or op == OP_OR_A_IMM or op == OP_XOR_A_IMM:
            r = a & a1 if op == OP_AND_A_IMM else (a | a1 if op == OP_OR_A_IMM else a ^ a1)
            acc[c] = r
            fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
        elif op == OP_COMP_A_IMM or op == OP_CEQSN_A_IMM or op == OP_CNEQSN_A_IMM:
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
            if s0 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = s0; cycle += 1; break
            lo = data[s0 % data_size]
            hi = data[(s0 + 1) % data_size]
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
            if a1 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            lo = data[a1 % data_size]
            hi = data[(a1 + 1) % data_size]
            ptr = lo | (hi << 8)
            if ptr >= data_size:
                if wrap:
                    ptr = ptr % data_size
                else:
                    reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
            if op == OP_IDXM_A_N:
                acc[c] = data[ptr]
            else:
                data[ptr] = a
        elif op == OP_LDTABL or op == OP_LDTABH:
            if a1 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            lo = data[a1 % data_size]
            hi = data[(a1 + 1) % data_size]
            v = code[(lo | (hi << 8)) & prog_mask]
            acc[c] = v & 0xFF if op == OP_LDTABL else (v >> 8) & 0xFF
        elif op == OP_LDSPTL or op == OP_LDSPTH:
            s0 = sp[c]
            if s0 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = s0; cycle += 1; break
            lo = data[s0 % data_size]
            hi = data[(s0 + 1) % data_size]
            v = code[(lo | (hi << 8)) & prog_mask]
            acc[c] = v & 0xFF if op == OP_LDSPTL else (v >> 8) & 0xFF
        elif op == OP_IGOTO or op == OP_ICALL:
            if a1 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            lo = data[a1 % data_size]
            hi = data[(a1 + 1) % data_size]
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
            if a1 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            lo = data[a1 % data_size]
            hi = data[(a1 + 1) % data_size]
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
            if a1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            v = data[a1 % data_size]
            data[a1 % data_size] = v & ~(1 << a2) if op == OP_SET0_M else v | (1 << a2)
        elif op == OP_T0SN_M or op == OP_T1SN_M:
            if a1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            v = data[a1 % data_size]
            bit = (v >> a2) & 1
            if op == OP_T0SN_M:
                skip = 1 if bit == 0 else 0
            else:
                skip = 1 if bit == 1 else 0
        elif op == OP_SET0_IO or op == OP_SET1_IO or op == OP_T0SN_IO or op == OP_T1SN_IO or op == OP_SWAPC_IO:
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
                if op == OP_T0SN_IO:
                    skip = 1 if bit == 0 else 0
                else:
                    skip = 1 if bit == 1 else 0
            else:
                if op == OP_SET0_IO:
                    r = v & ~(1 << a2)
                elif op == OP_SET1_IO:
                    r = v | (1 << a2)
                else:
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
            if a1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            v = data[a1 % data_size]
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
            if s0 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = s0; cycle += 1; break
            acc[c] = data[s0 % data_size]
            fl[c] = data[(s0 + 1) % data_size] & 0xF
            sp[c] = s0
        elif op == OP_NOT_A or op == OP_NEG_A:
            r = (a ^ 0xFF) if op == OP_NOT_A else ((0 - a) & 0xFF)
            acc[c] = r
            fl[c] = (f & ~FLAG_Z) | (FLAG_Z if r == 0 else 0)
        elif op == OP_SL_A or op == OP_SR_A or op == OP_SLC_A or op == OP_SRC_A:
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
            if ea < 0:
                ea += data_size
            acc[c] = data[ea]
        elif op == OP_IDXSP_STORE:
            ea = (sp[c] + a1) % data_size
            if ea < 0:
                ea += data_size
            data[ea] = a
        elif op == OP_IDXXCH:
            if a1 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            lo = data[a1 % data_size]
            hi = data[(a1 + 1) % data_size]
            ptr = lo | (hi << 8)
            if ptr >= data_size:
                if wrap:
                    ptr = ptr % data_size
                else:
                    reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
            v = data[ptr]
            data[ptr] = a
            acc[c] = v
        elif op == OP_CMPXCHG_DIR:
            if a1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            v = data[a1 % data_size]
            r = data[0]
            if v == a:
                data[a1 % data_size] = r
                fl[c] = f | FLAG_Z
            else:
                acc[c] = v
                fl[c] = f & ~FLAG_Z
        elif op == OP_CMPXCHG_IND:
            if a1 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            lo = data[a1 % data_size]
            hi = data[(a1 + 1) % data_size]
            r = data[(a1 + 2) % data_size]
            ptr = lo | (hi << 8)
            if ptr >= data_size:
                if wrap:
                    ptr = ptr % data_size
                else:
                    reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
            v = data[ptr]
            if v == a:
                data[ptr] = r
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
        elif op == OP_IDXADD or op == OP_IDXAND or op == OP_IDXOR or op == OP_IDXXOR:
            if a1 + 1 >= data_size and not wrap:
                reason = HALT_FAULT_DATA; detail = a1; cycle += 1; break
            lo = data[a1 % data_size]
            hi = data[(a1 + 1) % data_size]
            ptr = lo | (hi << 8)
            if ptr >= data_size:
                if wrap:
                    ptr = ptr % data_size
                else:
                    reason = HALT_FAULT_DATA; detail = ptr; cycle += 1; break
            v = data[ptr]
            if op == OP_IDXADD:
                r = (v + a) & 0xFF
            elif op == OP_IDXAND:
                r = v & a
            elif op == OP_IDXOR:
                r = v | a
            else:
                r = v ^ a
            data[ptr] = r
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
