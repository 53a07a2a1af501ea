"""Assembler, disassembler and image format."""

import pytest

from pdkkit.asm import (
    assemble,
    assemble_text,
    disassemble,
    emit_rodata,
    image_dumps,
    image_loads,
    parse,
)
from pdkkit.errors import (
    AsmSyntaxError,
    ProgramMemoryOverflow,
    UndefinedSymbol,
)
from pdkkit.isa import ExtensionSet, build_map


def test_parse_single_instruction():
    unit = parse("  nop")
    assert len(unit.items) == 1
    assert unit.items[0].kind == "instr"
    assert unit.items[0].name == "nop"


def test_parse_label_and_instruction():
    unit = parse("lbl: goto lbl")
    kinds = [(i.kind, i.name) for i in unit.items]
    assert kinds == [("label", "lbl"), ("instr", "goto")]


def test_parse_malformed_operand():
    with pytest.raises(AsmSyntaxError) as e:
        assemble_text(".arch pdk13\nmov a,")
    assert e.value.line == 2


def test_empty_file_is_empty_image():
    img = assemble_text("", arch="pdk13")
    assert img.words == {} and img.data_init == {}


def test_arch_required():
    with pytest.raises(AsmSyntaxError):
        assemble_text("nop\n")


def test_arch_must_precede_instructions():
    with pytest.raises(AsmSyntaxError):
        parse("nop\n.arch pdk13\n")


def test_forward_reference():
    img = assemble_text(".arch pdk13\n  goto end\nend: nop\n")
    assert img.symbols["end"] == 1


def test_undefined_symbol_carries_line():
    with pytest.raises(UndefinedSymbol) as e:
        assemble_text(".arch pdk13\n nop\n goto nowhere\n")
    assert e.value.line == 3


def test_duplicate_label():
    with pytest.raises(AsmSyntaxError):
        assemble_text(".arch pdk13\nx: nop\nx: nop\n")


def test_program_memory_overflow():
    src = ".arch pdk13\n" + "nop\n" * 1025
    with pytest.raises(ProgramMemoryOverflow):
        assemble_text(src)
    assemble_text(".arch pdk13\n" + "nop\n" * 1024)  # exactly full fits


def test_lower_half_bit_violation_diagnosed():
    with pytest.raises(AsmSyntaxError) as e:
        assemble_text(".arch pdk13\n set0 0x30.0\n")
    assert "lower half" in str(e.value)


def test_equ_and_expressions():
    img = assemble_text(
        ".arch pdk13\n"
        ".equ base, 0x10\n"
        "_start:\n"
        "  mov a, #base+2\n"
        "  mov base+1, a\n"
        "  mov a, #lo(_start)\n"
        "  mov a, #hi(_start)\n"
        "  mov a, #'A'\n"
    )
    m = build_map("pdk13")
    assert m.decode(img.words[0]).operands[1].value == 0x12
    assert m.decode(img.words[1]).operands[0].value == 0x11
    assert m.decode(img.words[4]).operands[1].value == ord("A")


def test_org_directive():
    img = assemble_text(".arch pdk13\n.org 0x100\n nop\n")
    assert list(img.words) == [0x100]


def test_byte_preload():
    img = assemble_text(".arch pdk13\n.byte 0x20, 1, 2, 3\n nop\n")
    assert img.data_init == {0x20: 1, 0x21: 2, 0x22: 3}


def test_emit_rodata_words():
    m = build_map("pdk13")
    words = emit_rodata(b"\x12", m)
    assert len(words) == 1
    instr = m.decode(words[0])
    assert instr.mnemonic == "ret" and instr.operands[0].value == 0x12
    assert emit_rodata(b"", m) == []


def test_rodata_directive_emits_ret_k():
    img = assemble_text('.arch pdk13\nmsg:\n.rodata "ABC"\n')
    m = build_map("pdk13")
    values = [m.decode(img.words[a]).operands[0].value for a in sorted(img.words)]
    assert values == [0x41, 0x42, 0x43]


def test_entry_symbol():
    img = assemble_text(".arch pdk13\n nop\n_start: nop\n")
    assert img.entry == 1
    img2 = assemble_text(".arch pdk13\n nop\n")
    assert img2.entry == 0


CORPUS_SNIPPETS = [
    ".arch pdk13\n_start:\n mov a, #5\n mov 0x10, a\n xch a, 0x11\n stopsys\n",
    ".arch pdk13\n_start:\n t1sn 0x10.3\n goto _start\n set1 io[4].0\n ret\n",
    ".arch pdk14\n.ext spadd\n_start:\n spadd #-8\n spadd #14\n stopsys\n",
    ".arch pdk15\n.ext spadd, sprel\n_start:\n mov a, [sp-6]\n add a, [sp+3]\n"
    " mov [sp-1], a\n stopsys\n",
    ".arch pdk16\n_start:\n idxm a, 0x10\n ldtabl a, 0x10\n pushw 0x10\n"
    " igoto 0x12\n",
    ".arch pdk13\nv: .word 0x1fc1, 0x0000\n nop\n",
]


@pytest.mark.parametrize("src", CORPUS_SNIPPETS)
def test_disassemble_fixed_point(src):
    img = assemble_text(src, reclaim=True)
    text = disassemble(img)
    img2 = assemble_text(text, reclaim=True)
    assert img2.words == img.words
    # second round is bit-identical text
    assert disassemble(img2) == text


def test_gap_word_renders_as_word_literal():
    img = assemble_text(".arch pdk13\n.word 0x1fc1\n")  # inside the 35-run
    text = disassemble(img)
    assert ".word 0x1fc1" in text


def test_extension_word_under_wrong_extension_set_is_word_literal():
    ext_img = assemble_text(".arch pdk13\n.ext spadd\n spadd #-8\n")
    word = ext_img.words[0]
    base_img = assemble_text(f".arch pdk13\n.word 0x{word:04x}\n")
    assert ".word" in disassemble(base_img)
    assert "spadd" in disassemble(ext_img)


def test_image_format_round_trip():
    img = assemble_text(
        ".arch pdk14\n.ext spadd\n.equ __core0_sp, 0x40\n_start:\n"
        " spadd #2\n stopsys\n.byte 0x10, 9\n"
    )
    dumped = image_dumps(img)
    assert dumped.splitlines()[0] == "PDKIMG 1 pdk14 spadd"
    again = image_loads(dumped)
    assert again.words == img.words
    assert again.symbols == img.symbols
    assert again.data_init == img.data_init
    assert again.extensions.names() == ("spadd",)
    assert image_dumps(again) == dumped


def test_sampled_word_text_round_trip():
    # sampled allocated words: decode -> render -> assemble -> same word
    # (the step keeps each listing inside the variant's program memory)
    for name, step in (("pdk13", 9), ("pdk16", 9)):
        m = build_map(name)
        lines = [f".arch {name}"]
        expect = []
        for w in range(0, m.variant.word_count, step):
            t = m.template_at(w)
            if t is None:
                continue
            lines.append(f"    {m.decode(w)}")
            expect.append(w)
        assert len(expect) <= m.variant.prog_space
        img = assemble_text("\n".join(lines) + "\n")
        got = [img.words[a] for a in sorted(img.words)]
        assert got == expect


def test_arch_flag_conflicts():
    with pytest.raises(AsmSyntaxError):
        assemble(parse(".arch pdk13\n nop\n"), arch="pdk14")


def test_sprel_requires_extension():
    with pytest.raises(AsmSyntaxError):
        assemble_text(".arch pdk13\n mov a, [sp-2]\n")


def test_idxsp_store_and_load_forms():
    img = assemble_text(
        ".arch pdk15\n.ext idxsp\n mov a, [sp-4]\n mov [sp-4], a\n"
    )
    m = build_map("pdk15", ExtensionSet.of("idxsp"))
    i0 = m.decode(img.words[0])
    i1 = m.decode(img.words[1])
    assert i0.operands[0].kind == "acc" and i0.operands[1].kind == "sprel"
    assert i1.operands[0].kind == "sprel" and i1.operands[1].kind == "acc"
