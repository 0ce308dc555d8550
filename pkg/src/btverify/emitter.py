"""Deterministic rendering of emission plans to model-checker input text.

Output layout: a comment header, one MODULE per distinct node signature,
then MODULE main holding one instance per tree node (named after the node),
the main-scope wiring, the blackboard section, and any property lines.
Emission is a pure function of the plan and options: identical inputs give
byte-identical text.

The blackboard section can be generated inline, generated and also written
to a file, or spliced verbatim from a file. Splicing is byte-exact, so a
generate-and-save run followed by an include run is a fixed point; it also
lets a hand-tuned environment model replace the generated updates without
touching the rest of the file.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from . import __version__
from .plan import (
    Plan, PlanError,
    BoolType, RangeType, SymType, IntSetType,
    InputDecl, StateDecl, DefineDecl, ChainDecl,
    Const, LocalRef, ParamRef, MainRef, MemberRef,
    Not, And, Or, Eq, Ge, Gt, Add, Count, Case,
)


class EmitError(Exception):
    pass


@dataclass(frozen=True)
class Generate:
    """Emit the blackboard section inline."""


@dataclass(frozen=True)
class GenerateAndSave:
    """Emit inline and write the same bytes to a file."""
    path: Union[str, Path]


@dataclass(frozen=True)
class IncludeFile:
    """Splice the file's bytes verbatim where the section would go."""
    path: Union[str, Path]


BlackboardMode = Union[Generate, GenerateAndSave, IncludeFile]


@dataclass(frozen=True)
class EmitOptions:
    blackboard: BlackboardMode = Generate()
    spec_file: Optional[Union[str, Path]] = None
    specs: tuple = ()


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

#: words the model checker claims for itself; node names may not shadow them
RESERVED = frozenset("""
    MODULE DEFINE VAR IVAR FROZENVAR ASSIGN CONSTANTS INIT TRANS INVAR
    FAIRNESS JUSTICE COMPASSION SPEC CTLSPEC LTLSPEC PSLSPEC COMPUTE
    NAME INVARSPEC ISA ASSIGN process array of boolean integer real word
    word1 bool signed unsigned extend resize sizeof uwconst swconst
    EX AX EF AF EG AG E F O G H X Y Z A U S V T BU EBF ABF EBG ABG
    case esac mod next init union in xor xnor self TRUE FALSE count
    abs max min main
""".split())


def _ident(name: str, what: str) -> str:
    if not _IDENT.match(name) or name in RESERVED:
        raise EmitError(f"{what} {name!r} is not usable as an identifier")
    return name


# --- expression rendering ----------------------------------------------------

_PREC_OR, _PREC_AND, _PREC_CMP, _PREC_ADD, _PREC_NOT, _PREC_ATOM = range(1, 7)


def _const(value) -> str:
    if value is True:
        return "TRUE"
    if value is False:
        return "FALSE"
    if isinstance(value, int):
        return str(value)
    return _ident(value, "symbol")


def _render(e, ind: int) -> tuple[str, int]:
    """Text plus the precedence of its outermost operator."""
    pad = " " * ind
    if isinstance(e, Const):
        return _const(e.value), _PREC_ATOM
    if isinstance(e, (LocalRef, ParamRef, MainRef)):
        return e.name, _PREC_ATOM
    if isinstance(e, MemberRef):
        return f"{e.instance}.{e.name}", _PREC_ATOM
    if isinstance(e, Not):
        s, p = _render(e.item, ind)
        return ("!" + s if p >= _PREC_NOT else f"!({s})"), _PREC_NOT
    if isinstance(e, (And, Or)):
        mine = _PREC_AND if isinstance(e, And) else _PREC_OR
        sep = " & " if isinstance(e, And) else " | "
        parts = []
        for item in e.items:
            s, p = _render(item, ind)
            parts.append(s if p > mine else f"({s})")
        return sep.join(parts), mine
    if isinstance(e, (Eq, Ge, Gt)):
        op = {Eq: "=", Ge: ">=", Gt: ">"}[type(e)]
        l, lp = _render(e.left, ind)
        r, rp = _render(e.right, ind)
        if lp <= _PREC_CMP:
            l = f"({l})"
        if rp <= _PREC_CMP:
            r = f"({r})"
        return f"{l} {op} {r}", _PREC_CMP
    if isinstance(e, Add):
        l, lp = _render(e.left, ind)
        r, rp = _render(e.right, ind)
        if lp < _PREC_ADD:
            l = f"({l})"
        if rp < _PREC_ADD:
            r = f"({r})"
        return f"{l} + {r}", _PREC_ADD
    if isinstance(e, Count):
        parts = [_render(i, ind)[0] for i in e.items]
        return f"count({', '.join(parts)})", _PREC_ATOM
    assert isinstance(e, Case), f"unrenderable expression {e!r}"
    lines = ["case"]
    for cond, value in e.branches:
        c, _ = _render(cond, ind + 2)
        v, _ = _render(value, ind + 2)
        lines.append(f"{pad}  {c} : {v};")
    lines.append(f"{pad}esac")
    return "\n".join(lines), _PREC_ATOM


def _rhs(expr, ind: int) -> str:
    return _render(expr, ind)[0]


# --- declaration sections ----------------------------------------------------

def _type_text(t) -> str:
    if isinstance(t, BoolType):
        return "boolean"
    if isinstance(t, RangeType):
        return f"{t.lo}..{t.hi}"
    if isinstance(t, SymType):
        return "{" + ", ".join(_ident(v, "symbol") for v in t.values) + "}"
    assert isinstance(t, IntSetType)
    return "{" + ", ".join(str(v) for v in t.values) + "}"


def _sections(decls, lines, ind: int, leading_vars=()) -> None:
    pad = " " * ind
    vars_ = [d for d in decls
             if isinstance(d, (InputDecl, StateDecl, ChainDecl))]
    states = [d for d in decls if isinstance(d, StateDecl)]
    chains = [d for d in decls if isinstance(d, ChainDecl)]
    defines = [d for d in decls if isinstance(d, DefineDecl)]
    if vars_ or leading_vars:
        lines.append(f"{pad}VAR")
        lines.extend(leading_vars)
        for d in vars_:
            lines.append(f"{pad}  {d.name} : {_type_text(d.type)};")
    if states:
        lines.append(f"{pad}ASSIGN")
        for d in states:
            lines.append(
                f"{pad}  init({d.name}) := {_const(d.init.value)};")
            lines.append(
                f"{pad}  next({d.name}) := {_rhs(d.next, ind + 2)};")
    for d in chains:
        s, p = _render(d.expr, ind)
        # "=" binds tighter than the boolean connectives, so guard the rhs
        if p <= _PREC_CMP:
            s = f"({s})"
        lines.append(f"{pad}INVAR {d.name} = {s};")
    if defines:
        lines.append(f"{pad}DEFINE")
        for d in defines:
            lines.append(f"{pad}  {d.name} := {_rhs(d.expr, ind + 2)};")


def _module_text(mod) -> str:
    lines = [f"MODULE {mod.key}({', '.join(mod.params)})"]
    _sections(mod.decls, lines, 2)
    return "\n".join(lines)


# --- blackboard section --------------------------------------------------------

def _blackboard_names(plan: Plan) -> frozenset:
    names = {main for _, main in plan.meta.bb_vars}
    names.update(choice for _, choice in plan.meta.nd_inputs)
    return frozenset(names)


def _blackboard_block(plan: Plan) -> str:
    names = _blackboard_names(plan)
    decls = [d for d in plan.main_decls if d.name in names]
    if not decls:
        return ""
    lines = ["  -- blackboard begin"]
    _sections(decls, lines, 2)
    lines.append("  -- blackboard end")
    return "\n".join(lines) + "\n"


def _resolve_blackboard(plan: Plan, mode: BlackboardMode) -> str:
    if isinstance(mode, Generate):
        return _blackboard_block(plan)
    if isinstance(mode, GenerateAndSave):
        block = _blackboard_block(plan)
        Path(mode.path).write_text(block)
        return block
    assert isinstance(mode, IncludeFile)
    path = Path(mode.path)
    if not path.is_file():
        raise EmitError(f"blackboard include {str(path)!r} is not readable")
    return path.read_text()


# --- properties ----------------------------------------------------------------

def read_spec_file(path) -> tuple:
    """Formula per line; blank lines and '#' comments are skipped."""
    out = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return tuple(out)


# --- whole-file assembly ---------------------------------------------------------

def emit_smv(plan: Plan, options: EmitOptions = EmitOptions()) -> str:
    tree = plan.tree
    taken: set[str] = set()
    for inst in plan.instances:
        _ident(inst.name, "node name")
        if inst.name in taken:
            raise EmitError(f"duplicate main identifier {inst.name!r}")
        taken.add(inst.name)
    for d in plan.main_decls:
        _ident(d.name, "main declaration")
        if d.name in taken:
            raise EmitError(f"duplicate main identifier {d.name!r}")
        taken.add(d.name)

    out = [
        f"-- btverify {__version__}",
        f"-- encoding: {plan.encoding}",
        f"-- tree: {tree.name(tree.root)} ({len(tree)} nodes)",
        "",
    ]
    for mod in plan.modules:
        out.append(_module_text(mod))
        out.append("")

    bb_names = _blackboard_names(plan)
    plain = [d for d in plan.main_decls if d.name not in bb_names]

    main = ["MODULE main"]
    inst_lines = []
    for inst in plan.instances:
        args = ", ".join(_rhs(a, 0) for a in inst.args)
        inst_lines.append(f"    {inst.name} : {inst.module}({args});")
    _sections(plain, main, 2, leading_vars=inst_lines)
    out.append("\n".join(main))

    block = _resolve_blackboard(plan, options.blackboard)
    if block:
        out.append(block.rstrip("\n"))

    specs = []
    if options.spec_file is not None:
        specs.extend(read_spec_file(options.spec_file))
    specs.extend(options.specs)
    if specs:
        out.append("")
        for line in specs:
            out.append(f"  LTLSPEC {line}")

    return "\n".join(out) + "\n"
