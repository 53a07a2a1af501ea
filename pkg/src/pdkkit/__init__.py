"""pdkkit: a workbench for the Padauk-style tiny 8-bit MCU family.

Data-driven opcode maps for the four architecture variants, a two-pass
assembler/disassembler, a cycle-stepped barrel-processor simulator, and
lowering generators that measure the code-size/cycle impact of the proposed
ISA extensions.
"""

from .errors import (
    AsmSyntaxError,
    DataAddressOutOfRange,
    ExtensionConflict,
    ImageVariantMismatch,
    NotAVariant,
    OperandOutOfRange,
    OverlappingRanges,
    PdkError,
    ProgramMemoryOverflow,
    TooManyCores,
    UnallocatedOpcode,
    UndefinedSymbol,
    UnknownMnemonic,
    UnplaceableExtension,
    UnsupportedCombination,
)
from .isa import (
    ArchVariant,
    ExtensionSet,
    GapReport,
    Instruction,
    OpcodeMap,
    Operand,
    build_map,
    decode,
    encode,
    gap_analysis,
    spadd_domain,
    variant_spec,
)

__version__ = "0.1.0"

__all__ = [
    "ArchVariant",
    "ExtensionSet",
    "GapReport",
    "Instruction",
    "OpcodeMap",
    "Operand",
    "build_map",
    "decode",
    "encode",
    "gap_analysis",
    "spadd_domain",
    "variant_spec",
    "PdkError",
    "NotAVariant",
    "ExtensionConflict",
    "UnplaceableExtension",
    "UnknownMnemonic",
    "OperandOutOfRange",
    "UnallocatedOpcode",
    "AsmSyntaxError",
    "UndefinedSymbol",
    "ProgramMemoryOverflow",
    "TooManyCores",
    "ImageVariantMismatch",
    "DataAddressOutOfRange",
    "UnsupportedCombination",
    "OverlappingRanges",
    "__version__",
]
