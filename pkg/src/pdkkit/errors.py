"""Exception hierarchy shared by all pdkkit modules."""


class PdkError(Exception):
    """Base class for all pdkkit errors."""


class NotAVariant(PdkError):
    """Unknown architecture variant name."""


class ExtensionConflict(PdkError):
    """Extension flags that cannot coexist in one opcode map."""


class UnplaceableExtension(PdkError):
    """An extension does not fit into the remaining opcode-map gaps."""

    def __init__(self, ext, needed_width, widest_gap):
        self.ext = ext
        self.needed_width = needed_width
        self.widest_gap = widest_gap
        super().__init__(
            f"extension {ext!r} needs a free aligned run of {needed_width} "
            f"opcodes but the widest remaining gap is {widest_gap}"
        )


class UnknownMnemonic(PdkError):
    """Mnemonic (or mnemonic/operand-shape combination) absent from the map."""


class OperandOutOfRange(PdkError):
    """Operand value does not fit its encoding field or violates a rule."""


class UnallocatedOpcode(PdkError):
    """Word falls into an opcode-map gap."""

    def __init__(self, word):
        self.word = word
        super().__init__(f"word 0x{word:04x} is not an allocated opcode")


class AsmSyntaxError(PdkError):
    """Assembly source error, carrying the 1-based line number."""

    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class UndefinedSymbol(AsmSyntaxError):
    pass


class ProgramMemoryOverflow(AsmSyntaxError):
    pass


class TooManyCores(PdkError):
    pass


class ImageVariantMismatch(PdkError):
    pass


class DataAddressOutOfRange(PdkError):
    pass


class UnsupportedCombination(PdkError):
    """Lowering scenario mode/extension combination that cannot be generated."""


class OverlappingRanges(PdkError):
    """Per-core stack ranges that are not disjoint."""
