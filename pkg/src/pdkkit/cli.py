"""Command-line front end.

Subcommands: asm, dasm, run, gap-report, size-compare.  Exit codes: 0 on
success, 1 on diagnostics (assembly errors, unplaceable extensions, load
failures), 2 on usage errors.  Machine-readable output is canonical: stable
ordering, no timestamps.

PDKKIT_MAPS may point to a directory of opcode-map JSON documents that
replace the built-in baseline layouts (one <variant>.json per variant).
"""

from __future__ import annotations

import argparse
import json
import sys

from .asm import assemble_text, disassemble, image_dumps, image_load
from .errors import PdkError, TooManyCores
from .isa import (
    EXTENSION_NAMES,
    ExtensionSet,
    build_map,
    gap_analysis,
    variant_spec,
)
from .lowering import default_configs, default_corpus, size_compare
from .sim import RunConfig, load, trace_jsonl, trace_text

USAGE_ERROR = 2
DIAG_ERROR = 1


def _ext_arg(text: str) -> ExtensionSet:
    try:
        return ExtensionSet.from_names(text.replace("+", ",").split(","))
    except PdkError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _arch_arg(text: str):
    try:
        return variant_spec(text)
    except PdkError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pdkkit",
        description="Workbench for the Padauk-style tiny-MCU ISA family",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    pa = sub.add_parser("asm", help="assemble a .pdkasm file to a .pdkimg image")
    pa.add_argument("input")
    pa.add_argument("-o", "--output", help="image path (default: stdout)")
    pa.add_argument("--arch", type=_arch_arg, help="architecture when the file has no .arch")
    pa.add_argument("--ext", type=_ext_arg, default=None,
                    help=f"extensions, comma separated ({', '.join(EXTENSION_NAMES)})")
    pa.add_argument("--reclaim", action="store_true",
                    help="allow extensions to displace redundant baseline opcodes")

    pd = sub.add_parser("dasm", help="disassemble a .pdkimg image")
    pd.add_argument("input")
    pd.add_argument("-o", "--output")

    pr = sub.add_parser("run", help="load and run an image")
    pr.add_argument("input")
    pr.add_argument("--cores", type=int, default=1)
    pr.add_argument("--data-size", type=int, default=None)
    pr.add_argument("--irq-at", type=int, action="append", default=[],
                    help="raise an interrupt request at this cycle (repeatable)")
    pr.add_argument("--irq-vector", default=None,
                    help="handler address or symbol (default: the __irq symbol)")
    pr.add_argument("--max-cycles", type=int, default=1_000_000)
    pr.add_argument("--trace", choices=("text", "jsonl"), default=None)
    pr.add_argument("--trace-out", default=None, help="trace file (default: stderr)")
    pr.add_argument("--wrap-data", action="store_true")

    pg = sub.add_parser("gap-report", help="opcode-map gap analysis")
    pg.add_argument("--arch", type=_arch_arg, required=True)
    pg.add_argument("--ext", type=_ext_arg, default=None)
    pg.add_argument("--reclaim", action="store_true")
    pg.add_argument("--format", choices=("text", "json"), default="text")

    ps = sub.add_parser("size-compare", help="corpus code-size comparison")
    ps.add_argument("--corpus", default=None, help="directory of .pdkasm templates")
    ps.add_argument("--configs", default=None, help="JSON file of build configurations")
    ps.add_argument("--format", choices=("text", "json", "csv"), default="csv")
    ps.add_argument("-o", "--output", default=None)
    return p


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_asm(args) -> int:
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        print(f"pdkkit: {e}", file=sys.stderr)
        return USAGE_ERROR
    try:
        image = assemble_text(
            text,
            arch=args.arch.name if args.arch else None,
            extensions=args.ext,
            reclaim=args.reclaim,
        )
    except PdkError as e:
        print(f"{args.input}: {e}", file=sys.stderr)
        return DIAG_ERROR
    _write(image_dumps(image), args.output)
    return 0


def cmd_dasm(args) -> int:
    try:
        image = image_load(args.input)
    except OSError as e:
        print(f"pdkkit: {e}", file=sys.stderr)
        return USAGE_ERROR
    except (PdkError, ValueError) as e:
        print(f"{args.input}: {e}", file=sys.stderr)
        return DIAG_ERROR
    _write(disassemble(image), args.output)
    return 0


def cmd_run(args) -> int:
    try:
        image = image_load(args.input)
    except OSError as e:
        print(f"pdkkit: {e}", file=sys.stderr)
        return USAGE_ERROR
    except (PdkError, ValueError) as e:
        print(f"{args.input}: {e}", file=sys.stderr)
        return DIAG_ERROR
    vector = None
    if args.irq_vector is not None:
        try:
            vector = int(args.irq_vector, 0)
        except ValueError:
            vector = image.symbols.get(args.irq_vector)
            if vector is None:
                print(f"pdkkit: unknown symbol {args.irq_vector!r}", file=sys.stderr)
                return USAGE_ERROR
    try:
        config = RunConfig(
            cores=args.cores,
            data_size=args.data_size,
            irq_vector=vector,
            irq_at=tuple(sorted(args.irq_at)),
            max_cycles=args.max_cycles,
            wrap_data=args.wrap_data,
        )
        machine = load(image, config)
    except TooManyCores as e:
        print(f"pdkkit: {e}", file=sys.stderr)
        return USAGE_ERROR
    except (PdkError, ValueError) as e:
        print(f"pdkkit: {e}", file=sys.stderr)
        return DIAG_ERROR
    steps = [] if args.trace else None
    result = machine.run(trace=steps)
    if steps is not None:
        rendered = trace_text(steps) if args.trace == "text" else trace_jsonl(steps)
        if args.trace_out:
            with open(args.trace_out, "w", encoding="utf-8") as fh:
                fh.write(rendered)
        else:
            sys.stderr.write(rendered)
    print(f"halt: {result.halt_reason}")
    print(f"cycle: {result.cycle}")
    for addr in range(3, machine.variant.io_space):
        if machine.io[addr]:
            print(f"io[{addr}] = 0x{machine.io[addr]:02x}")
    for name in sorted(machine.image.symbols):
        if name.startswith("out"):
            addr = machine.image.symbols[name]
            if addr < machine.data_size:
                print(f"data[{name}] = 0x{machine.peek(addr):02x}")
    return 0


def cmd_gap_report(args) -> int:
    exts = args.ext or ExtensionSet.none()
    try:
        opmap = build_map(args.arch, exts, reclaim=args.reclaim)
    except PdkError as e:
        print(f"pdkkit: {e}", file=sys.stderr)
        return DIAG_ERROR
    report = gap_analysis(opmap)
    if args.format == "json":
        print(report.to_json())
    else:
        print(report.to_text())
    return 0


def cmd_size_compare(args) -> int:
    if args.corpus is not None:
        import os

        if not os.path.isdir(args.corpus):
            print(f"pdkkit: corpus directory {args.corpus!r} not found", file=sys.stderr)
            return USAGE_ERROR
        corpus = {}
        for name in sorted(os.listdir(args.corpus)):
            if name.endswith(".pdkasm"):
                with open(os.path.join(args.corpus, name), "r", encoding="utf-8") as fh:
                    corpus[name[: -len(".pdkasm")]] = fh.read()
        if not corpus:
            print(f"pdkkit: no .pdkasm templates in {args.corpus!r}", file=sys.stderr)
            return USAGE_ERROR
    else:
        corpus = default_corpus()
    if args.configs is not None:
        try:
            with open(args.configs, "r", encoding="utf-8") as fh:
                configs = json.load(fh)
        except OSError as e:
            print(f"pdkkit: {e}", file=sys.stderr)
            return USAGE_ERROR
    else:
        configs = default_configs()
    try:
        comparison = size_compare(corpus, configs)
    except (PdkError, ValueError) as e:
        print(f"pdkkit: {e}", file=sys.stderr)
        return DIAG_ERROR
    rendered = {
        "csv": comparison.to_csv,
        "json": comparison.to_json,
        "text": comparison.to_text,
    }[args.format]()
    if not rendered.endswith("\n"):
        rendered += "\n"
    _write(rendered, args.output)
    return 0


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    handler = {
        "asm": cmd_asm,
        "dasm": cmd_dasm,
        "run": cmd_run,
        "gap-report": cmd_gap_report,
        "size-compare": cmd_size_compare,
    }[args.cmd]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
