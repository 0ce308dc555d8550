"""Command-line surface.

One executable, six subcommands:

  compile        .bt / .bt.json -> SMV text under a chosen encoding
  simulate       tick the reference interpreter with a seeded oracle
  diff           differential sweep of the encodings against the interpreter
  gen-checklist  emit the scalable benchmark family plus its spec files
  check          bounded template checking of .ltl formulas against a tree
  bridge-import  convert interchange JSON into canonical .bt text

Exit codes: 0 on success (all specs hold, no divergence), 1 when a
counterexample or divergence was found, 2 on usage or input errors.
Identical invocations on identical inputs produce identical bytes.
"""
import argparse
import random
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .benchgen import DIALECTS, checklist_specs, checklist_tree
from .btc_encoding import BtcError, BtcMachine
from .core import Status, Tree, binarize, validate
from .dsl import Document, DslError, from_json, parse, serialize
from .emitter import (
    EmitError,
    EmitOptions,
    Generate,
    GenerateAndSave,
    IncludeFile,
    emit_smv,
    read_spec_file,
)
from .harness import (
    COMPOSITE_KINDS,
    Corpus,
    InterpRunner,
    MachineRunner,
    ReportEntry,
    TemplateError,
    check_template_spec,
    diff_runners,
    format_report,
)
from .interp import SemanticsFlavor
from .leaf_encoding import LeafMachine
from .plan import ENCODINGS, WORD_OF, PlanError, build_plan
from .total_encoding import TotalMachine


class CliError(Exception):
    """Bad usage or bad input; rendered to stderr and mapped to exit 2."""


_FLAVORS = {
    "pytrees": SemanticsFlavor.PYTREES,
    "btc": SemanticsFlavor.BTCOMPILER,
}


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror or e}") from None


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror or e}") from None


def _load_document(path: str) -> Document:
    text = _read_text(path)
    try:
        if path.endswith(".json"):
            doc = from_json(text)
        else:
            doc = parse(text, filename=path)
    except DslError as e:
        raise CliError(str(e)) from None
    problems = validate(doc.tree)
    if problems:
        listing = "\n".join(f"  {p}" for p in problems)
        raise CliError(f"{path} is not a valid tree:\n{listing}")
    return doc


def _sibling(anchor: str, relative: str) -> str:
    """Paths named inside a document resolve against the document's folder."""
    p = Path(relative)
    if p.is_absolute():
        return str(p)
    return str(Path(anchor).parent / p)


# ---------------------------------------------------------------------------
# compile
# ---------------------------------------------------------------------------

def _cmd_compile(args) -> int:
    doc = _load_document(args.tree)
    if args.blackboard_in and args.save_blackboard:
        raise CliError("--blackboard-in and --save-blackboard conflict; "
                       "a file cannot be both spliced in and generated")
    if args.blackboard_in:
        mode = IncludeFile(args.blackboard_in)
    elif args.save_blackboard:
        mode = GenerateAndSave(args.save_blackboard)
    elif doc.blackboard_file:
        mode = IncludeFile(_sibling(args.tree, doc.blackboard_file))
    else:
        mode = Generate()

    spec_file = args.specs
    if spec_file is None and doc.spec_file:
        spec_file = _sibling(args.tree, doc.spec_file)

    try:
        plan = build_plan(doc.tree, args.encoding, _FLAVORS[args.flavor])
        text = emit_smv(plan, EmitOptions(blackboard=mode,
                                          spec_file=spec_file))
    except (BtcError, PlanError, EmitError) as e:
        raise CliError(str(e)) from None
    except OSError as e:
        raise CliError(f"blackboard or spec file: {e}") from None

    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _seeded_rows(tree: Tree, ticks: int, seed: int) -> list[dict]:
    """One oracle row per tick, drawn leaf by leaf in pre-order.

    Pre-drawing the whole row keeps the run independent of which leaves
    actually execute, so the dump is reproducible from the seed alone.
    """
    rng = random.Random(seed)
    names = [tree.name(n) for n in tree.leaves()]
    domains = {tree.name(n): sorted(tree.kind(n).profile.statuses,
                                    key=lambda s: "SFR".index(s.value))
               for n in tree.leaves()}
    return [{name: rng.choice(domains[name]) for name in names}
            for _ in range(ticks)]


def _status_line(statuses: dict[str, Status]) -> str:
    shown = {k: v for k, v in statuses.items() if v.value != "I"}
    return " ".join(f"{k}={WORD_OF[v]}" for k, v in sorted(shown.items()))


def _cmd_simulate(args) -> int:
    if args.ticks < 1:
        raise CliError("--ticks must be at least 1")
    doc = _load_document(args.tree)
    tree = doc.tree
    rows = _seeded_rows(tree, args.ticks, args.seed)
    runner = InterpRunner(tree, _FLAVORS[args.flavor])
    out = []
    for t, row in enumerate(rows):
        trace = runner.run(row, t)
        out.append(f"tick {t}: root {WORD_OF[trace.root_status]}")
        out.append(f"  oracle: {_status_line(row)}")
        out.append(f"  executed: {' '.join(trace.executed) or '(none)'}")
        out.append(f"  skipped: {' '.join(trace.skipped) or '(none)'}")
        out.append(f"  statuses: {_status_line(trace.statuses)}")
        if trace.blackboard:
            vals = " ".join(f"{k}={v}" for k, v in
                            sorted(trace.blackboard.items()))
            out.append(f"  blackboard: {vals}")
    sys.stdout.write("\n".join(out) + "\n")
    return 0


# ---------------------------------------------------------------------------
# diff
# ---------------------------------------------------------------------------

_MEMORYLESS_KINDS = tuple(k for k in COMPOSITE_KINDS if not k.endswith("_mem"))
_BTC_KINDS = ("sel", "seq", "sel_mem", "seq_mem", "par_one", "par_all")


def _tick_routes(tree: Tree, flavor: SemanticsFlavor):
    yield "total", MachineRunner(TotalMachine(tree, flavor))
    yield "leaf", MachineRunner(LeafMachine(tree, flavor))


def _diff_tree(tree: Tree, flavor: SemanticsFlavor, ticks: int) -> list[ReportEntry]:
    entries = []
    for label, candidate in _tick_routes(tree, flavor):
        div = diff_runners(tree, InterpRunner(tree, flavor), candidate,
                           ticks=ticks)
        if div is None:
            entries.append(ReportEntry(label, "pass"))
        else:
            entries.append(ReportEntry(label, "fail", str(div)))
    return entries


def _diff_corpus(corpus_name: str, grid_leaves: int, ticks: int):
    """Yields (tree name, divergence or None) over a built-in corpus."""
    from .core import ParallelFlavor

    if corpus_name == "memoryless":
        corpus = Corpus(_MEMORYLESS_KINDS, grid_leaves=grid_leaves)
        flavor = SemanticsFlavor.PYTREES
    elif corpus_name == "memory":
        corpus = Corpus(COMPOSITE_KINDS, grid_leaves=grid_leaves)
        flavor = SemanticsFlavor.PYTREES
    else:
        corpus = Corpus(_BTC_KINDS, grid_leaves=grid_leaves,
                        flavor=ParallelFlavor.THRESHOLD)
        flavor = SemanticsFlavor.BTCOMPILER

    for i, tree in enumerate(corpus.trees()):
        if corpus_name == "btc":
            tree = binarize(tree, for_btc=True)
            div = diff_runners(tree, InterpRunner(tree, flavor),
                               MachineRunner(BtcMachine(tree)),
                               ticks=ticks, fields=("root_status",))
            yield f"tree {i}", div
            continue
        for label, candidate in _tick_routes(tree, flavor):
            div = diff_runners(tree, InterpRunner(tree, flavor), candidate,
                               ticks=ticks)
            yield f"tree {i} ({label})", div


def _cmd_diff(args) -> int:
    if args.tree:
        doc = _load_document(args.tree)
        entries = _diff_tree(doc.tree, _FLAVORS[args.flavor], args.ticks)
        sys.stdout.write(format_report(entries) + "\n")
        return 1 if any(e.verdict == "fail" for e in entries) else 0

    checked = 0
    failures = []
    for name, div in _diff_corpus(args.corpus, args.grid_leaves, args.ticks):
        checked += 1
        if div is not None:
            failures.append(ReportEntry(name, "fail", str(div)))
    if failures:
        sys.stdout.write(format_report(failures) + "\n")
    sys.stdout.write(f"checked {checked} cases: {len(failures)} divergences\n")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# gen-checklist
# ---------------------------------------------------------------------------

def _cmd_gen_checklist(args) -> int:
    if args.n < 1:
        raise CliError("--n must be at least 1")
    tree = checklist_tree(args.n, parallel_variant=args.parallel)
    specs = checklist_specs(args.n, args.dialect)
    stem = f"checklist{args.n}" + ("_par" if args.parallel else "")
    folder = Path(args.out_dir)
    try:
        folder.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create {args.out_dir}: {e}") from None

    written = []
    for name, text in (
        (f"{stem}.bt", serialize(tree)),
        (f"{stem}_true.ltl",
         "".join(s.formula + "\n" for s in specs if s.holds)),
        (f"{stem}_false.ltl",
         "".join(s.formula + "\n" for s in specs if not s.holds)),
    ):
        _write_text(str(folder / name), text)
        written.append(str(folder / name))
    sys.stdout.write("\n".join(written) + "\n")
    return 0


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _format_row(row: dict[str, Status]) -> str:
    return " ".join(f"{k}={WORD_OF[v]}" for k, v in sorted(row.items()))


def _cmd_check(args) -> int:
    doc = _load_document(args.tree)
    try:
        formulas = read_spec_file(args.spec)
    except OSError as e:
        raise CliError(f"cannot read {args.spec}: {e.strerror or e}") from None
    if not formulas:
        raise CliError(f"{args.spec} contains no formulas")

    worst = 0
    out = []
    for i, formula in enumerate(formulas, start=1):
        try:
            result = check_template_spec(doc.tree, args.encoding, formula,
                                         horizon=args.horizon,
                                         flavor=_FLAVORS[args.flavor])
        except (TemplateError, BtcError) as e:
            raise CliError(f"spec {i}: {e}") from None
        out.append(f"spec {i}: {result.verdict}  {formula}")
        if result.verdict != "holds":
            worst = 1
            for t, row in enumerate(result.path):
                out.append(f"  tick {t}: {_format_row(row)}")
            if result.detail:
                out.append(f"  {result.detail}")
    sys.stdout.write("\n".join(out) + "\n")
    return worst


# ---------------------------------------------------------------------------
# bridge-import
# ---------------------------------------------------------------------------

def _cmd_bridge_import(args) -> int:
    text = _read_text(args.json)
    try:
        doc = from_json(text)
    except DslError as e:
        raise CliError(str(e)) from None
    problems = validate(doc.tree)
    if problems:
        listing = "\n".join(f"  {p}" for p in problems)
        raise CliError(f"{args.json} is not a valid tree:\n{listing}")
    rendered = serialize(doc)
    if args.out:
        _write_text(args.out, rendered)
    else:
        sys.stdout.write(rendered)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="btverify",
        description="Behavior tree verification: compile trees to SMV, "
                    "simulate, and differentially check the encodings.")
    top.add_argument("--version", action="version",
                     version=f"btverify {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="emit SMV for a tree")
    c.add_argument("--encoding", required=True, choices=ENCODINGS)
    c.add_argument("--tree", required=True, metavar="FILE")
    c.add_argument("--flavor", choices=sorted(_FLAVORS), default="pytrees")
    c.add_argument("--blackboard-in", metavar="FILE",
                   help="splice this SMV fragment instead of generating one")
    c.add_argument("--save-blackboard", metavar="FILE",
                   help="also write the generated blackboard section here")
    c.add_argument("--specs", metavar="FILE",
                   help="append LTLSPEC lines from this file")
    c.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    c.set_defaults(run=_cmd_compile)

    s = sub.add_parser("simulate", help="run the reference interpreter")
    s.add_argument("--tree", required=True, metavar="FILE")
    s.add_argument("--ticks", required=True, type=int)
    s.add_argument("--flavor", choices=sorted(_FLAVORS), default="pytrees")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(run=_cmd_simulate)

    d = sub.add_parser("diff", help="differential sweep vs the interpreter")
    d.add_argument("--tree", metavar="FILE",
                   help="diff this tree instead of a built-in corpus")
    d.add_argument("--corpus", choices=("memoryless", "memory", "btc"),
                   default="memoryless")
    d.add_argument("--grid-leaves", type=int, default=3,
                   help="corpus size bound (default 3)")
    d.add_argument("--ticks", type=int, default=3)
    d.add_argument("--flavor", choices=sorted(_FLAVORS), default="pytrees")
    d.set_defaults(run=_cmd_diff)

    g = sub.add_parser("gen-checklist", help="emit the benchmark family")
    g.add_argument("--n", required=True, type=int)
    g.add_argument("--parallel", action="store_true",
                   help="chain the units with parallels instead of sequences")
    g.add_argument("--dialect", choices=DIALECTS, default="total")
    g.add_argument("--out-dir", default=".", metavar="DIR")
    g.set_defaults(run=_cmd_gen_checklist)

    k = sub.add_parser("check", help="bounded template checking")
    k.add_argument("--tree", required=True, metavar="FILE")
    k.add_argument("--encoding", required=True,
                   choices=("total",) + ENCODINGS)
    k.add_argument("--spec", required=True, metavar="FILE")
    k.add_argument("--horizon", type=int, default=3)
    k.add_argument("--flavor", choices=sorted(_FLAVORS), default="pytrees")
    k.set_defaults(run=_cmd_check)

    b = sub.add_parser("bridge-import",
                       help="convert interchange JSON to canonical .bt text")
    b.add_argument("--json", required=True, metavar="FILE")
    b.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    b.set_defaults(run=_cmd_bridge_import)
    return top


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.run(args)
    except CliError as e:
        print(f"btverify: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
