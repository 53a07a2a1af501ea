"""Architecture table, opcode maps, gap structure, and the word codec."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdkkit.errors import (
    ExtensionConflict,
    NotAVariant,
    OperandOutOfRange,
    UnallocatedOpcode,
    UnknownMnemonic,
    UnplaceableExtension,
)
from pdkkit.isa import (
    ExtensionSet,
    Instruction,
    OpcodeMap,
    acc,
    bitref,
    build_map,
    decode,
    encode,
    gap_analysis,
    imm,
    iomem,
    mem,
    pair,
    prog,
    spadd_domain,
    sprel,
    variant_spec,
)

ARCHES = ("pdk13", "pdk14", "pdk15", "pdk16")


@pytest.fixture(scope="module")
def maps():
    return {name: build_map(name) for name in ARCHES}


# ---------------------------------------------------------------------------
# architecture table


def test_variant_table_matches_published_rows():
    expect = {
        "pdk13": (13, 10, 6, 5, 1),
        "pdk14": (14, 11, 7, 6, 2),
        "pdk15": (15, 12, 8, 7, 1),
        "pdk16": (16, 13, 9, 6, 8),
    }
    for name, row in expect.items():
        v = variant_spec(name)
        assert (
            v.prog_word_width,
            v.prog_addr_bits,
            v.data_addr_bits,
            v.io_addr_bits,
            v.max_hw_threads,
        ) == row


def test_unknown_variant():
    with pytest.raises(NotAVariant):
        variant_spec("pdk17")


def test_optional_instruction_sets():
    assert variant_spec("pdk13").optional_instrs == frozenset()
    assert variant_spec("pdk14").optional_instrs == frozenset({"mul"})
    assert variant_spec("pdk15").optional_instrs == frozenset({"mul"})
    assert variant_spec("pdk16").optional_instrs == frozenset(
        {"mul", "pushw", "igoto", "icall"}
    )


def test_spadd_domains():
    assert spadd_domain("pdk13") == set(range(-8, 7, 2))
    assert spadd_domain("pdk14") == set(range(-16, 15, 2))
    assert spadd_domain("pdk15") == set(range(-32, 31, 2))
    assert spadd_domain("pdk16") == set(range(-64, 63, 2))
    for name in ARCHES:
        assert all(k % 2 == 0 for k in spadd_domain(name))


def test_spadd_domain_round_trips():
    for name in ARCHES:
        m = build_map(name, ExtensionSet.of("spadd"))
        for k in sorted(spadd_domain(name)):
            word = m.encode(Instruction("spadd", (imm(k),)))
            assert m.decode(word) == Instruction("spadd", (imm(k),))
        with pytest.raises(OperandOutOfRange):
            m.encode(Instruction("spadd", (imm(3),)))  # odd
        with pytest.raises(OperandOutOfRange):
            m.encode(Instruction("spadd", (imm(max(spadd_domain(name)) + 2),)))


# ---------------------------------------------------------------------------
# gap structure


def test_pdk13_gap_structure(maps):
    report = gap_analysis(maps["pdk13"])
    assert report.lengths() == [35, 8, 5]
    assert report.allocated + sum(report.lengths()) == 1 << 13


def test_pdk14_gap_structure(maps):
    report = gap_analysis(maps["pdk14"])
    assert report.lengths()[:2] == [88, 67]
    assert all(n <= 67 for n in report.lengths()[2:])


def test_pdk15_pdk16_have_memory_op_sized_gaps(maps):
    r15 = gap_analysis(maps["pdk15"])
    assert r15.widest >= 1 << 8  # room for several memory-operand instructions
    r16 = gap_analysis(maps["pdk16"])
    assert r16.widest >= 1 << 9


def test_gap_sum_invariant(maps):
    for name, m in maps.items():
        report = gap_analysis(m)
        assert report.allocated + sum(report.lengths()) == m.variant.word_count


def test_fully_allocated_toy_map_has_no_gaps():
    from pdkkit.isa import Field, Template

    v = variant_spec("pdk13")
    t = Template("goto", ("p",), 0, (Field("p", 13),), 2, sem="GOTO")
    toy = OpcodeMap(v, ExtensionSet.none(), (t,))
    assert gap_analysis(toy).lengths() == []


# ---------------------------------------------------------------------------
# codec


def test_exhaustive_round_trip_all_maps(maps):
    for name, m in maps.items():
        unallocated = 0
        for w in range(m.variant.word_count):
            try:
                instr = m.decode(w)
            except UnallocatedOpcode:
                unallocated += 1
                continue
            assert m.encode(instr) == w, (name, hex(w), str(instr))
        assert unallocated == m.variant.word_count - m.allocated_words()


def test_pdk13_unallocated_count_is_48(maps):
    m = maps["pdk13"]
    unallocated = sum(
        1
        for w in range(1 << 13)
        if m.template_at(w) is None
    )
    assert unallocated == 48  # 35 + 8 + 5


def test_decode_in_gap_raises(maps):
    m = maps["pdk13"]
    start, length = sorted(m.gaps(), key=lambda g: -g[1])[0]
    assert length == 35
    for w in (start, start + 17, start + 34):
        with pytest.raises(UnallocatedOpcode):
            m.decode(w)


def test_non_overlap_by_interval(maps):
    for m in maps.values():
        prev_end = 0
        for t in m.entries:
            assert t.base >= prev_end
            prev_end = t.base + t.size
            assert prev_end <= m.variant.word_count


def test_bit_lower_half_rule(maps):
    for name in ("pdk13", "pdk14", "pdk15"):
        m = maps[name]
        half = 1 << (m.variant.data_addr_bits - 1)
        m.encode(Instruction("set0", (bitref(half - 1, 7),)))
        with pytest.raises(OperandOutOfRange) as e:
            m.encode(Instruction("set0", (bitref(half, 0),)))
        assert "lower half" in str(e.value)
    # pdk16 bit ops reach the full space
    maps["pdk16"].encode(Instruction("set0", (bitref(511, 7),)))


def test_pair_must_be_even(maps):
    with pytest.raises(OperandOutOfRange):
        maps["pdk13"].encode(Instruction("idxm", (acc(), pair(0x11))))
    maps["pdk13"].encode(Instruction("idxm", (acc(), pair(0x10))))


def test_unknown_mnemonic(maps):
    with pytest.raises(UnknownMnemonic):
        maps["pdk13"].encode(Instruction("frobnicate", ()))
    # known mnemonic, unavailable form
    with pytest.raises(UnknownMnemonic):
        maps["pdk13"].encode(Instruction("mov", (acc(), sprel(-2))))


# ---------------------------------------------------------------------------
# extensions


def test_extension_conflict():
    with pytest.raises(ExtensionConflict):
        ExtensionSet.of("sprel", "idxsp")
    with pytest.raises(ExtensionConflict):
        ExtensionSet.from_names(["bogus"])


def test_idxsp_unplaceable_on_pdk13():
    with pytest.raises(UnplaceableExtension) as e:
        build_map("pdk13", ExtensionSet.of("idxsp"))
    assert e.value.ext == "idxsp"
    assert e.value.needed_width == 64
    assert e.value.widest_gap == 35


def test_idxsp_reclamation_on_pdk13():
    m = build_map("pdk13", ExtensionSet.of("idxsp"), reclaim=True)
    # addc m,a gave up its block
    assert ("addc", ("m", "a")) not in {t.key() for t in m.entries}
    w = m.encode(Instruction("mov", (acc(), sprel(-8))))
    assert m.decode(w) == Instruction("mov", (acc(), sprel(-8)))
    assert any("reclaimed" in n for n in m.notes)


def test_memory_extensions_unplaceable_on_pdk14():
    for ext, width in (("idxxch", 128), ("cmpxchg_ind", 128)):
        with pytest.raises(UnplaceableExtension) as e:
            build_map("pdk14", ExtensionSet.of(ext))
        assert (e.value.needed_width, e.value.widest_gap) == (width, 88)
        build_map("pdk14", ExtensionSet.of(ext), reclaim=True)


def test_pdk15_spadd_sprel_conflict_free():
    m = build_map("pdk15", ExtensionSet.of("spadd", "sprel"))
    seen = 0
    for w in range(m.variant.word_count):
        t = m.template_at(w)
        if t is not None:
            seen += 1
            assert m.encode(m.decode(w)) == w
    assert seen == m.allocated_words()


def test_pdk16_hosts_every_extension_in_gaps():
    exts = ExtensionSet.of(
        "spadd", "sprel", "idxxch", "cmpxchg_dir", "cmpxchg_ind",
        "coreid", "atomic_rmw_ind", "pushw", "igoto_icall", "da", "gint_io",
    )
    m = build_map("pdk16", exts)
    assert not any("reclaimed" in n for n in m.notes)
    for mn in ("spadd", "idxxch", "idxcmpx", "cmpxchg", "coreid", "da",
               "idxadd", "idxand", "idxor", "idxxor"):
        assert mn in m.mnemonics()
    assert "engint" not in m.mnemonics()  # gint_io freed it
    assert "disgint" not in m.mnemonics()


def test_sprel_blocks_exactly_a_quarter_of_direct_addresses():
    for name in ARCHES:
        m = build_map(name, ExtensionSet.of("sprel"))
        space = m.variant.data_space
        rejected = 0
        for addr in range(space):
            try:
                m.encode(Instruction("mov", (acc(), mem(addr))))
            except OperandOutOfRange:
                rejected += 1
        assert rejected == space // 4


def test_sprel_offsets_cover_signed_quarter():
    m = build_map("pdk13", ExtensionSet.of("sprel"))
    for off in range(-8, 8):
        w = m.encode(Instruction("mov", (acc(), sprel(off))))
        assert m.decode(w) == Instruction("mov", (acc(), sprel(off)))
    for off in (-9, 8):
        with pytest.raises(OperandOutOfRange):
            m.encode(Instruction("mov", (acc(), sprel(off))))


def test_gint_io_removes_engint_disgint():
    m = build_map("pdk13", ExtensionSet.of("gint_io"))
    assert "engint" not in m.mnemonics() and "disgint" not in m.mnemonics()


def test_optional_instructions_configurable_per_map():
    bare = build_map("pdk16", optional=frozenset())
    for mn in ("mul", "pushw", "igoto", "icall"):
        assert mn not in bare.mnemonics()
    full = build_map("pdk16")
    for mn in ("mul", "pushw", "igoto", "icall"):
        assert mn in full.mnemonics()
    with pytest.raises(ValueError):
        build_map("pdk13", optional=frozenset({"mul"}))
    # the pushw extension flag is a no-op where the baseline already has it
    m = build_map("pdk16", ExtensionSet.of("pushw"))
    assert sum(1 for t in m.entries if t.mnemonic == "pushw") == 1


# ---------------------------------------------------------------------------
# serialization


def test_capacity_notes_agree_with_actual_placement(maps):
    # whenever the gap report says an extension fits, placing it must work,
    # and vice versa
    for name, m in maps.items():
        report = gap_analysis(m)
        for note in report.capacity_notes:
            ext = note.strip().split(":")[0]
            fits = "does NOT fit" not in note
            try:
                build_map(name, ExtensionSet.from_names([ext]))
                placed = True
            except UnplaceableExtension:
                placed = False
            except ExtensionConflict:
                continue
            assert placed == fits, (name, note)


def test_json_round_trip(maps):
    for m in maps.values():
        again = OpcodeMap.from_json(m.to_json())
        assert [t for t in again.entries] == [t for t in m.entries]
        assert again.variant.name == m.variant.name


def test_json_round_trip_extended():
    m = build_map("pdk15", ExtensionSet.of("spadd", "sprel", "da"))
    again = OpcodeMap.from_json(m.to_json())
    assert again.extensions.names() == m.extensions.names()
    assert [t for t in again.entries] == [t for t in m.entries]


def test_pattern_strings_have_field_letters(maps):
    m = maps["pdk13"]
    t = next(t for t in m.entries if t.key() == ("mov", ("a", "m")))
    bits = t.pattern(13).split()
    assert len(bits) == 13
    assert bits[-6:] == list("mmmmmm")


def test_env_maps_dir(tmp_path, monkeypatch, maps):
    path = tmp_path / "pdk13.json"
    path.write_text(maps["pdk13"].to_json())
    monkeypatch.setenv("PDKKIT_MAPS", str(tmp_path))
    m = build_map("pdk13")
    assert [t.base for t in m.entries] == [t.base for t in maps["pdk13"].entries]
    # extensions are placed on top of the environment-provided baseline
    m2 = build_map("pdk13", ExtensionSet.of("spadd"))
    assert "spadd" in m2.mnemonics()


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_random_instruction_round_trip(data):
    name = data.draw(st.sampled_from(ARCHES))
    m = _MAP_CACHE.setdefault(name, build_map(name))
    w = data.draw(st.integers(min_value=0, max_value=m.variant.word_count - 1))
    try:
        instr = m.decode(w)
    except UnallocatedOpcode:
        return
    assert m.encode(instr) == w


_MAP_CACHE: dict = {}


def test_goto_operand_range(maps):
    m = maps["pdk13"]
    m.encode(Instruction("goto", (prog(1023),)))
    with pytest.raises(OperandOutOfRange):
        m.encode(Instruction("goto", (prog(1024),)))


def test_io_operand_range(maps):
    m = maps["pdk13"]
    m.encode(Instruction("mov", (acc(), iomem(31))))
    with pytest.raises(OperandOutOfRange):
        m.encode(Instruction("mov", (acc(), iomem(32))))
