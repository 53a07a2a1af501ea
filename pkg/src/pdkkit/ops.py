"""Shared semantic-operation table for the three executors.

The reference stepper (sim.py), the pure-Python batch kernel (_kernel_py.py)
and the compiled batch kernel (_simkern.pyx) all dispatch on these integer
ids.  Predecoding turns each program word into (op, a1, a2) once; the arrays
are then interpreted by whichever executor runs.

Argument conventions by operand class:
  direct memory     a1 = address,        a2 = 0
  sp-relative       a1 = signed offset,  a2 = 1   (same op id as direct)
  bit reference     a1 = address,        a2 = bit index
  immediate         a1 = value (spadd: signed even value)
  pair              a1 = even address
  goto/call target  a1 = program address
  I/O               a1 = I/O address
"""

SEM_NAMES = (
    "UNALLOC",
    "NOP",
    "MOV_A_M", "MOV_M_A", "ADD_A_M", "ADD_M_A", "SUB_A_M", "SUB_M_A",
    "ADDC_A_M", "ADDC_M_A", "SUBC_A_M", "SUBC_M_A",
    "AND_A_M", "AND_M_A", "OR_A_M", "OR_M_A", "XOR_A_M", "XOR_M_A",
    "COMP_A_M", "COMP_M_A", "INC_M", "DEC_M", "CLEAR_M",
    "SL_M", "SR_M", "SLC_M", "SRC_M",
    "CEQSN_A_M", "CNEQSN_A_M", "IZSN_M", "DEZSN_M", "XCH_A_M",
    "MUL_A_M", "NADD_A_M", "NADD_M_A",
    "MOV_A_IMM", "ADD_A_IMM", "SUB_A_IMM", "AND_A_IMM", "OR_A_IMM",
    "XOR_A_IMM", "COMP_A_IMM", "CEQSN_A_IMM", "CNEQSN_A_IMM", "RET_IMM",
    "GOTO", "CALL", "RET", "RETI",
    "IDXM_A_N", "IDXM_N_A", "LDTABL", "LDTABH", "LDSPTL", "LDSPTH",
    "IGOTO", "ICALL", "PUSHW",
    "MOV_A_IO", "MOV_IO_A",
    "SET0_M", "SET1_M", "T0SN_M", "T1SN_M",
    "SET0_IO", "SET1_IO", "T0SN_IO", "T1SN_IO",
    "SWAPC_M", "SWAPC_IO",
    "ENGINT", "DISGINT", "STOPSYS", "PUSHAF", "POPAF",
    "NOT_A", "NEG_A", "SL_A", "SR_A", "SLC_A", "SRC_A",
    "SPADD", "IDXSP_LOAD", "IDXSP_STORE",
    "IDXXCH", "CMPXCHG_DIR", "CMPXCHG_IND", "COREID", "DA_A",
    "IDXADD", "IDXAND", "IDXOR", "IDXXOR",
)

SEM = {name: i for i, name in enumerate(SEM_NAMES)}

# run() halt reasons shared with the kernels
HALT_NONE = 0          # still running (cycle budget reached)
HALT_STOPSYS = 1
HALT_FAULT_UNALLOC = 2  # detail = word value, detail2 = pc
HALT_FAULT_DATA = 3     # detail = data address
HALT_BREAKPOINT = 4     # detail = pc

REASON_NAMES = {
    HALT_NONE: "cycle_budget",
    HALT_STOPSYS: "stopsys",
    HALT_FAULT_UNALLOC: "fault:unallocated-opcode",
    HALT_FAULT_DATA: "fault:data-address",
    HALT_BREAKPOINT: "breakpoint",
}

# flag bits
FLAG_Z = 1
FLAG_C = 2
FLAG_AC = 4
FLAG_OV = 8
