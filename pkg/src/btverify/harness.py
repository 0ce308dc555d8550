"""Differential checking: run encodings against each other and the reference.

The harness has four jobs. interpret_plan executes an emission plan directly,
so the declarations headed for model-checker input can be compared against
the simulators tick by tick. diff_encodings drives a simulator and the
reference interpreter through every reachable (state, oracle row) pair and
reports the first divergence with a replayable input path. check_template_spec
decides the restricted temporal formulas the benchmark generator emits, again
by exhaustive exploration. nuxmv_smoke hands emitted text to an external
model checker when one is configured, and reports pass, fail, or skipped.
"""
from __future__ import annotations

import functools
import itertools
import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Any, Optional

from .core import (
    Status, INVALID, Tree, domain_contains,
    ParallelFlavor, build, leaf, parallel, selector, sequence,
)
from .interp import (
    Interpreter, SemanticsFlavor, TickTrace, ValueResolver,
)
from .leaf_encoding import LeafMachine, LeafStep
from .total_encoding import TotalMachine
from .btc_encoding import BtcMachine
from .plan import (
    Plan, PlanError, InputDecl, StateDecl,
    Const, LocalRef, ParamRef, MainRef, MemberRef,
    Not, And, Or, Eq, Ge, Gt, Add, Count, Case,
    STATUS_OF, WORD_OF, type_values,
)


# ---------------------------------------------------------------------------
# Plan interpretation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanTick:
    trace: TickTrace
    #: step-granularity plans: one record per cursor stop, like LeafMachine
    steps: tuple = ()


class PlanRun:
    """Executes a plan over rows of leaf statuses, one tick at a time."""

    def __init__(self, plan: Plan,
                 value_resolver: Optional[ValueResolver] = None):
        self.plan = plan
        self.tree = plan.tree
        self.value_resolver = value_resolver
        self._inst = {i.name: i for i in plan.instances}
        self._mod = {m.key: m for m in plan.modules}
        self._main = {d.name: d for d in plan.main_decls}
        self._states = []  # (scope key, decl, allowed values)
        for inst in plan.instances:
            for d in self._mod[inst.module].decls:
                if isinstance(d, StateDecl):
                    self._states.append(
                        ((inst.name, d.name), inst, d,
                         frozenset(type_values(d.type))))
        for d in plan.main_decls:
            if isinstance(d, StateDecl):
                self._states.append(
                    ((None, d.name), None, d, frozenset(type_values(d.type))))
        self._stop_names = dict(plan.meta.stops)
        self._bb_vars = dict(plan.meta.bb_vars)
        self._tick_fn = self._compile()
        self.reset()

    def reset(self) -> None:
        self.state = {key: d.init.value for key, _, d, _ in self._states}
        self.ticks = 0

    def snapshot(self):
        return (dict(self.state), self.ticks)

    def restore(self, snap) -> None:
        state, ticks = snap
        self.state = dict(state)
        self.ticks = ticks

    # -- expression evaluation over the current state --

    def _compile(self):
        """Flatten every declaration and next expression into one generated
        function of (state, inputs), dependencies emitted before their users.
        Unknown names and definition cycles surface here, not at run time."""
        decls: dict[tuple, tuple] = {}
        for inst in self.plan.instances:
            for d in self._mod[inst.module].decls:
                decls[(inst.name, d.name)] = (inst, d)
        for d in self.plan.main_decls:
            decls[(None, d.name)] = (None, d)

        keys: list[tuple] = []
        slot: dict[tuple, int] = {}
        done: set[tuple] = set()
        visiting: set[tuple] = set()
        lines: list[str] = []

        def intern(key) -> int:
            if key not in slot:
                slot[key] = len(keys)
                keys.append(key)
            return slot[key]

        def emit(key) -> str:
            i = intern(key)
            if key in done:
                return f"v{i}"
            inst, d = decls[key]
            if isinstance(d, InputDecl):
                lines.append(f"    v{i} = inputs[_K[{i}]]")
            elif isinstance(d, StateDecl):
                lines.append(f"    v{i} = state[_K[{i}]]")
            else:
                if key in visiting:
                    raise PlanError(f"definition cycle through {d.name!r}")
                visiting.add(key)
                src = comp(inst, d.expr)
                visiting.discard(key)
                lines.append(f"    v{i} = {src}")
            done.add(key)
            return f"v{i}"

        def ref(inst, name) -> str:
            key = (inst.name if inst else None, name)
            if key not in decls:
                raise PlanError(
                    f"undeclared reference {name!r}"
                    + (f" in {inst.name!r}" if inst else ""))
            return emit(key)

        def comp(inst, e) -> str:
            if isinstance(e, Const):
                return repr(e.value)
            if isinstance(e, LocalRef):
                return ref(inst, e.name)
            if isinstance(e, MainRef):
                return ref(None, e.name)
            if isinstance(e, MemberRef):
                return ref(self._inst[e.instance], e.name)
            if isinstance(e, ParamRef):
                idx = self._mod[inst.module].params.index(e.name)
                return comp(None, inst.args[idx])
            if isinstance(e, Not):
                return f"(not {comp(inst, e.item)})"
            if isinstance(e, And):
                if not e.items:
                    return "True"
                return "(" + " and ".join(comp(inst, i) for i in e.items) + ")"
            if isinstance(e, Or):
                if not e.items:
                    return "False"
                return "(" + " or ".join(comp(inst, i) for i in e.items) + ")"
            if isinstance(e, Eq):
                return f"({comp(inst, e.left)} == {comp(inst, e.right)})"
            if isinstance(e, Ge):
                return f"({comp(inst, e.left)} >= {comp(inst, e.right)})"
            if isinstance(e, Gt):
                return f"({comp(inst, e.left)} > {comp(inst, e.right)})"
            if isinstance(e, Add):
                return f"({comp(inst, e.left)} + {comp(inst, e.right)})"
            if isinstance(e, Count):
                if not e.items:
                    return "0"
                return "(" + " + ".join(
                    f"(1 if {comp(inst, i)} else 0)" for i in e.items) + ")"
            assert isinstance(e, Case)
            # the last branch condition is always the constant true
            out = comp(inst, e.branches[-1][1])
            for cond, val in reversed(e.branches[:-1]):
                out = f"({comp(inst, val)} if {comp(inst, cond)} else {out})"
            return out

        for key in decls:
            emit(key)
        for j, (key, inst, d, _) in enumerate(self._states):
            intern(key)
            lines.append(f"    n{j} = {comp(inst, d.next)}")

        vals = ", ".join(f"_K[{i}]: v{i}" for i in range(len(keys))
                         if keys[i] in done)
        nexts = ", ".join(f"_K[{slot[key]}]: n{j}"
                          for j, (key, _, _, _) in enumerate(self._states))
        src = ("def _tick(state, inputs):\n"
               + "\n".join(lines)
               + f"\n    return {{{vals}}}, {{{nexts}}}\n")
        ns = {"_K": keys}
        exec(compile(src, "<plan>", "exec"), ns)
        return ns["_tick"]

    def _evaluate(self, inputs):
        try:
            return self._tick_fn(self.state, inputs)
        except KeyError as e:
            raise PlanError(f"no input supplied for {e.args[0]}") from e

    def _advance(self, nexts) -> None:
        for key, _inst, _d, allowed in self._states:
            val = nexts[key]
            if val not in allowed:
                raise PlanError(f"{key} stepped outside its type: {val!r}")
        self.state = nexts

    def _inputs_for(self, row):
        inputs = {}
        for leaf_name, key in self.plan.meta.leaf_inputs:
            if leaf_name not in row:
                raise PlanError(f"oracle row missing leaf {leaf_name!r}")
            inputs[key] = WORD_OF[row[leaf_name]]
        for (leaf_name, var), choice in self.plan.meta.nd_inputs:
            current = self.state[(None, self._bb_vars[var])]
            if self.value_resolver is None:
                val = current
            else:
                decl = self.tree.bb_decl(var)
                val = self.value_resolver(
                    self.ticks, leaf_name, var, decl.domain, current)
                if not domain_contains(decl.domain, val):
                    raise PlanError(
                        f"value {val!r} outside domain of {var}")
            inputs[(None, choice)] = val
        return inputs

    def _statuses(self, vals):
        return {i.name: STATUS_OF[vals[(i.name, "status")]]
                for i in self.plan.instances}

    def _skipped(self, flags_before, statuses):
        tree = self.tree
        hits = []
        for child, key in self.plan.meta.skip_vars:
            if flags_before[key] and statuses[key[0]] is not INVALID:
                hits.append(tree.by_name(child))
        return tuple(tree.name(n) for n in sorted(hits))

    def _blackboard(self):
        return {var: self.state[(None, main)]
                for var, main in self.plan.meta.bb_vars}

    def run_tick(self, row) -> PlanTick:
        if self.plan.granularity == "step":
            return self._run_step_tick(row)
        inputs = self._inputs_for(row)
        flags_before = {key: self.state[key]
                        for _, key in self.plan.meta.skip_vars}
        vals, nexts = self._evaluate(inputs)
        statuses = self._statuses(vals)
        self._advance(nexts)
        trace = TickTrace(
            tick=self.ticks,
            root_status=statuses[self.tree.name(self.tree.root)],
            statuses=statuses,
            executed=tuple(
                self.tree.name(n) for n in self.tree.leaves()
                if statuses[self.tree.name(n)] is not INVALID),
            skipped=self._skipped(flags_before, statuses),
            blackboard=self._blackboard(),
        )
        self.ticks += 1
        return PlanTick(trace=trace)

    def _run_step_tick(self, row) -> PlanTick:
        tree = self.tree
        cursor_key = (None, self.plan.meta.cursor)
        if self.state[cursor_key] != -1:
            raise PlanError("tick started away from the idle cursor")
        inputs = self._inputs_for(row)
        flags_before = {key: self.state[key]
                        for _, key in self.plan.meta.skip_vars}
        _, nexts = self._evaluate(inputs)
        self._advance(nexts)

        steps = []
        union: dict[str, Status] = {}
        executed = []
        budget = 2 * len(tree) + 2
        while self.state[cursor_key] != -1:
            budget -= 1
            if budget < 0:
                raise PlanError("cursor failed to return to idle")
            stop = self._stop_names[self.state[cursor_key]]
            vals, nexts = self._evaluate(inputs)
            resolved = {name: st
                        for name, st in self._statuses(vals).items()
                        if st is not INVALID}
            union.update(resolved)
            if tree.is_leaf(tree.by_name(stop)):
                executed.append(stop)
            self._advance(nexts)
            steps.append(LeafStep(
                cursor=stop, statuses=resolved,
                blackboard=self._blackboard()))

        statuses = {tree.name(n): union.get(tree.name(n), INVALID)
                    for n in range(len(tree))}
        trace = TickTrace(
            tick=self.ticks,
            root_status=statuses[tree.name(tree.root)],
            statuses=statuses,
            executed=tuple(executed),
            skipped=self._skipped(flags_before, statuses),
            blackboard=self._blackboard(),
        )
        self.ticks += 1
        return PlanTick(trace=trace, steps=tuple(steps))


def interpret_plan(
    plan: Plan,
    rows,
    value_resolver: Optional[ValueResolver] = None,
) -> list[PlanTick]:
    """Run the plan over a row of leaf statuses per tick."""
    run = PlanRun(plan, value_resolver=value_resolver)
    return [run.run_tick(row) for row in rows]


# ---------------------------------------------------------------------------
# Oracle rows
# ---------------------------------------------------------------------------

_SFR = "SFR"


def leaf_rows(tree: Tree) -> list[dict[str, Status]]:
    """Every assignment of oracle statuses to the tree's leaves, S before F
    before R, leftmost leaf varying slowest."""
    names = [tree.name(n) for n in tree.leaves()]
    pools = [
        sorted(tree.kind(n).profile.statuses, key=lambda s: _SFR.index(s.value))
        for n in tree.leaves()
    ]
    return [dict(zip(names, combo)) for combo in itertools.product(*pools)]


class RowOracle:
    """Feeds one fixed row of leaf statuses regardless of the tick counter."""

    def __init__(self, row: dict[str, Status]) -> None:
        self.row = row

    def status_for(self, tick: int, ordinal: int, leaf: str) -> Status:
        return self.row[leaf]


# ---------------------------------------------------------------------------
# Corpus enumeration
# ---------------------------------------------------------------------------

COMPOSITE_KINDS = (
    "sel", "seq", "sel_mem", "seq_mem",
    "par_one", "par_all", "par_sync_one", "par_sync_all",
)


def make_composite(kind: str, name: str, children,
                   flavor: ParallelFlavor = ParallelFlavor.PYTREES):
    """Build a composite draft from one of the corpus kind tokens."""
    if kind == "sel":
        return selector(name, *children)
    if kind == "seq":
        return sequence(name, *children)
    if kind == "sel_mem":
        return selector(name, *children, memory=True)
    if kind == "seq_mem":
        return sequence(name, *children, memory=True)
    if kind in ("par_one", "par_all", "par_sync_one", "par_sync_all"):
        return parallel(
            name, *children,
            threshold="one" if kind.endswith("_one") else "all",
            synchronized="sync" in kind,
            flavor=flavor,
        )
    raise ValueError(f"unknown composite kind {kind!r}")


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(1, total - parts + 2):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


@functools.lru_cache(maxsize=None)
def _shapes(size: int) -> tuple:
    """All ordered tree shapes with `size` leaves and composite arity 2..3.

    A shape is None for a leaf, else a tuple of child shapes.
    """
    if size == 1:
        return (None,)
    out = []
    for arity in range(2, min(3, size) + 1):
        for parts in _compositions(size, arity):
            for kids in itertools.product(*(_shapes(p) for p in parts)):
                out.append(kids)
    return tuple(out)


def _internal_count(shape) -> int:
    if shape is None:
        return 0
    return 1 + sum(_internal_count(k) for k in shape)


@dataclass(frozen=True)
class Corpus:
    """Deterministic enumeration of small trees over composite kind tokens.

    Sizes up to grid_leaves assign every combination of kinds to the internal
    nodes of every shape. Sizes above that, up to uniform_leaves, keep every
    shape but use a single kind throughout, which preserves depth coverage
    without the combinatorial blowup.
    """
    kinds: tuple[str, ...]
    grid_leaves: int = 4
    uniform_leaves: int = 0
    statuses: str = "SFR"
    flavor: ParallelFlavor = ParallelFlavor.PYTREES

    def trees(self):
        top = max(self.grid_leaves, self.uniform_leaves)
        for size in range(1, top + 1):
            for shape in _shapes(size):
                spots = _internal_count(shape)
                if size <= self.grid_leaves:
                    picks = itertools.product(self.kinds, repeat=spots)
                elif spots:
                    picks = ((k,) * spots for k in self.kinds)
                else:
                    continue
                for assignment in picks:
                    yield self._realize(shape, assignment)

    def _realize(self, shape, assignment) -> Tree:
        slots = iter(assignment)
        counts = {"leaf": 0, "comp": 0}

        def grow(s):
            if s is None:
                counts["leaf"] += 1
                return leaf(f"x{counts['leaf']}", self.statuses)
            kind = next(slots)
            counts["comp"] += 1
            name = f"c{counts['comp']}"
            return make_composite(kind, name, [grow(k) for k in s],
                                  flavor=self.flavor)

        return build(grow(shape))


# ---------------------------------------------------------------------------
# Differential closure search
# ---------------------------------------------------------------------------

class InterpRunner:
    """Adapter giving the reference interpreter the common runner surface."""

    def __init__(self, tree: Tree,
                 flavor: SemanticsFlavor = SemanticsFlavor.PYTREES,
                 value_resolver: Optional[ValueResolver] = None) -> None:
        self.m = Interpreter(tree, flavor, value_resolver=value_resolver)

    def snapshot(self):
        return self.m.snapshot()

    def restore(self, snap) -> None:
        self.m.restore(snap)

    def run(self, row: dict[str, Status], tick: int) -> TickTrace:
        self.m.ticks = tick
        return self.m.tick(RowOracle(row))


class MachineRunner:
    """Adapter for the tick-granularity simulators (total, btc, leaf)."""

    def __init__(self, machine) -> None:
        self.m = machine

    def snapshot(self):
        return self.m.snapshot()

    def restore(self, snap) -> None:
        self.m.restore(snap)

    def run(self, row: dict[str, Status], tick: int):
        self.m.ticks = tick
        return self.m.run_tick(RowOracle(row))


class PlanRunner:
    """Adapter executing an emission plan through PlanRun."""

    def __init__(self, plan: Plan,
                 value_resolver: Optional[ValueResolver] = None) -> None:
        self.r = PlanRun(plan, value_resolver=value_resolver)

    def snapshot(self):
        state, _ = self.r.snapshot()
        return tuple(sorted(
            state.items(), key=lambda kv: (kv[0][0] or "", kv[0][1])))

    def restore(self, snap) -> None:
        self.r.restore((dict(snap), self.r.ticks))

    def run(self, row: dict[str, Status], tick: int) -> PlanTick:
        self.r.ticks = tick
        return self.r.run_tick(row)


def _trace(result) -> TickTrace:
    return result if isinstance(result, TickTrace) else result.trace


TRACE_FIELDS = ("statuses", "executed", "skipped", "blackboard")


def _first_mismatch(want: TickTrace, got: TickTrace, fields) -> Optional[str]:
    for f in fields:
        if getattr(want, f) != getattr(got, f):
            return f
    return None


@dataclass(frozen=True)
class Divergence:
    """A replayable witness: run `path` from reset; the last row disagrees."""
    tree: Tree
    path: tuple
    tick: int
    field: str
    expected: Any
    got: Any

    def __str__(self) -> str:
        steps = " ; ".join(
            ",".join(f"{k}={v.value}" for k, v in row.items())
            for row in self.path)
        return (f"tick {self.tick}: {self.field} differ "
                f"(expected {self.expected!r}, got {self.got!r}) after [{steps}]")


def diff_runners(
    tree: Tree,
    reference,
    candidate,
    ticks: int = 3,
    rows: Optional[list] = None,
    fields=TRACE_FIELDS,
) -> Optional[Divergence]:
    """Explore every reachable (state, oracle row) pair up to `ticks` deep.

    States are joint (reference, candidate) snapshots, memoized, so closed
    state spaces cost far less than the full row-sequence product. Returns
    the first divergence found, or None.
    """
    if rows is None:
        rows = leaf_rows(tree)
    start = (reference.snapshot(), candidate.snapshot())
    seen = {start}
    frontier = [(start, ())]
    for depth in range(ticks):
        grown = []
        for (rsnap, csnap), path in frontier:
            for row in rows:
                reference.restore(rsnap)
                candidate.restore(csnap)
                want = _trace(reference.run(row, depth))
                got = _trace(candidate.run(row, depth))
                bad = _first_mismatch(want, got, fields)
                if bad is not None:
                    return Divergence(tree, path + (row,), depth, bad,
                                      getattr(want, bad), getattr(got, bad))
                key = (reference.snapshot(), candidate.snapshot())
                if key not in seen:
                    seen.add(key)
                    grown.append((key, path + (row,)))
        frontier = grown
        if not frontier:
            break
    return None


def run_rows(runner, rows) -> list[TickTrace]:
    """Replay a row sequence from the runner's current state."""
    return [_trace(runner.run(row, i)) for i, row in enumerate(rows)]


# ---------------------------------------------------------------------------
# Template specs
# ---------------------------------------------------------------------------

class TemplateError(ValueError):
    """The formula falls outside the restricted template grammar."""


@dataclass(frozen=True)
class Atom:
    owner: Optional[str]   # node name; None for the bare cursor variable
    field: str             # status | enable | active | active_node
    value: Any


@dataclass(frozen=True)
class Negation:
    item: Any


@dataclass(frozen=True)
class Until:
    guard: Any
    target: Any


@dataclass(frozen=True)
class Always:
    premise: Any
    conclusion: Any


_TOKEN = re.compile(r"\s*(->|-?\d+|[A-Za-z_][A-Za-z0-9_]*|[().!=U])")


def _tokenize(text: str) -> list[str]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise TemplateError(f"cannot tokenize {text[pos:pos + 10]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_template(text: str) -> Always:
    """Parse `G ( condition -> condition )` with atoms `name.field = value`,
    negation, parentheses, and a single until inside parentheses."""
    toks = _tokenize(text)
    pos = 0

    def peek() -> Optional[str]:
        return toks[pos] if pos < len(toks) else None

    def take(expected: Optional[str] = None) -> str:
        nonlocal pos
        if pos >= len(toks):
            raise TemplateError(f"unexpected end of formula in {text!r}")
        tok = toks[pos]
        if expected is not None and tok != expected:
            raise TemplateError(f"expected {expected!r}, found {tok!r}")
        pos += 1
        return tok

    def value(tok: str):
        if tok == "TRUE":
            return True
        if tok == "FALSE":
            return False
        if re.fullmatch(r"-?\d+", tok):
            return int(tok)
        word = tok.lower()
        if word in STATUS_OF:
            return STATUS_OF[word]
        raise TemplateError(f"unknown value {tok!r}")

    def atom() -> Atom:
        name = take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise TemplateError(f"expected a name, found {name!r}")
        owner: Optional[str] = None
        fieldname = name
        if peek() == ".":
            take()
            owner = name
            fieldname = take()
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", fieldname):
                raise TemplateError(f"expected a field, found {fieldname!r}")
        take("=")
        val = value(take())
        return Atom(owner, fieldname, val)

    def condition():
        tok = peek()
        if tok == "!":
            take()
            return Negation(condition())
        if tok == "(":
            take()
            first = condition()
            if peek() == "U":
                take()
                second = condition()
                take(")")
                return Until(first, second)
            take(")")
            return first
        return atom()

    take("G")
    take("(")
    premise = condition()
    take("->")
    conclusion = condition()
    take(")")
    if pos != len(toks):
        raise TemplateError(f"trailing input {toks[pos:]!r}")
    return Always(premise, conclusion)


class _Obs:
    """One observable state: per-node statuses plus encoding extras."""

    __slots__ = ("statuses", "active", "active_node")

    def __init__(self, statuses, active=None, active_node=None):
        self.statuses = statuses
        self.active = active or {}
        self.active_node = active_node


_IDLE = _Obs({}, active_node=-1)

_DIALECT_OF = {
    "total": "total", "total-v2": "total", "total-v3": "total",
    "btc": "btc", "leaf": "leaf",
}

_DIALECT_FIELDS = {
    "total": frozenset(("status", "active")),
    "btc": frozenset(("status", "enable", "active")),
    "leaf": frozenset(("status", "active_node")),
}


def _eval_atom(a: Atom, obs: _Obs) -> bool:
    if a.field == "active_node":
        return obs.active_node == a.value
    if a.field == "status":
        return obs.statuses.get(a.owner, INVALID) == a.value
    return obs.active[a.owner] == a.value


def _eval_path(cond, suffix) -> bool:
    """LTL over a finite state suffix; atoms read the first state."""
    if isinstance(cond, Atom):
        return _eval_atom(cond, suffix[0])
    if isinstance(cond, Negation):
        return not _eval_path(cond.item, suffix)
    if isinstance(cond, Until):
        for j in range(len(suffix)):
            if _eval_path(cond.target, suffix[j:]):
                return True
            if not _eval_path(cond.guard, suffix[j:]):
                return False
        return False
    raise TemplateError(f"cannot evaluate {cond!r}")


def _bind(spec: Always, tree: Tree, dialect: str) -> None:
    names = {tree.name(n) for n in range(len(tree))}
    allowed = _DIALECT_FIELDS[dialect]

    def walk(cond, in_conclusion: bool) -> None:
        if isinstance(cond, Atom):
            if cond.field == "active_node":
                if dialect != "leaf":
                    raise TemplateError(
                        "active_node only exists in the leaf encoding")
                if cond.owner is not None:
                    raise TemplateError("active_node is not a node field")
                if not isinstance(cond.value, int) or isinstance(cond.value, bool):
                    raise TemplateError("active_node compares to an integer")
                return
            if cond.field not in allowed:
                raise TemplateError(
                    f"field {cond.field!r} is not part of the {dialect} dialect")
            if cond.owner is None:
                raise TemplateError(f"{cond.field} needs a node name")
            if cond.owner not in names:
                raise TemplateError(f"unknown node {cond.owner!r}")
            if cond.field == "status" and not isinstance(cond.value, Status):
                raise TemplateError("status compares to a status word")
            if cond.field in ("enable", "active") \
                    and not isinstance(cond.value, bool):
                raise TemplateError(f"{cond.field} compares to TRUE or FALSE")
        elif isinstance(cond, Negation):
            walk(cond.item, in_conclusion)
        elif isinstance(cond, Until):
            if dialect != "leaf":
                raise TemplateError("until needs the stepping (leaf) encoding")
            if not in_conclusion:
                raise TemplateError("until may only appear in the conclusion")
            walk(cond.guard, False)
            walk(cond.target, False)
            if _eval_path(cond.guard, [_IDLE]):
                raise TemplateError(
                    "the until guard must be false between ticks, "
                    "e.g. !(active_node = -1)")
        else:
            raise TemplateError(f"unsupported condition {cond!r}")

    walk(spec.premise, False)
    walk(spec.conclusion, True)


@dataclass(frozen=True)
class CheckResult:
    verdict: str       # holds | counterexample | diverged
    path: tuple = ()   # oracle rows reaching the offending state
    detail: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def check_template_spec(
    tree: Tree,
    encoding: str,
    formula,
    horizon: int = 3,
    flavor: SemanticsFlavor = SemanticsFlavor.PYTREES,
) -> CheckResult:
    """Decide a template formula against an encoding's simulator.

    Explores every oracle row from every reachable state up to `horizon`
    ticks, with the reference interpreter running alongside as a guard: if
    the simulator ever disagrees with it, the verdict is `diverged` rather
    than a claim about the formula. The leaf dialect checks the cursor's
    step states, including the quiescent state between ticks.
    """
    spec = parse_template(formula) if isinstance(formula, str) else formula
    dialect = _DIALECT_OF.get(encoding)
    if dialect is None:
        raise TemplateError(
            f"unknown encoding {encoding!r}, expected one of "
            f"{', '.join(sorted(set(_DIALECT_OF)))}")
    _bind(spec, tree, dialect)

    if dialect == "btc":
        machine = BtcMachine(tree)
        interp = Interpreter(tree, SemanticsFlavor.BTCOMPILER)
        guard_fields = ("root_status",)
    elif dialect == "total":
        machine = TotalMachine(tree, flavor)
        interp = Interpreter(tree, flavor)
        guard_fields = TRACE_FIELDS
    else:
        machine = LeafMachine(tree, flavor)
        interp = Interpreter(tree, flavor)
        guard_fields = TRACE_FIELDS

    if dialect == "leaf":
        if _eval_path(spec.premise, [_IDLE]) \
                and not _eval_path(spec.conclusion, [_IDLE]):
            return CheckResult("counterexample", (),
                               "the quiescent state between ticks violates "
                               "the formula")
        ids = {tree.name(n): n for n in range(len(tree))}

    rows = leaf_rows(tree)
    start = (machine.snapshot(), interp.snapshot())
    seen = {start}
    frontier = [(start, ())]
    for depth in range(horizon):
        grown = []
        for (msnap, isnap), path in frontier:
            for row in rows:
                machine.restore(msnap)
                machine.ticks = depth
                interp.restore(isnap)
                interp.ticks = depth
                res = machine.run_tick(RowOracle(row))
                want = interp.tick(RowOracle(row))
                bad = _first_mismatch(want, _trace(res), guard_fields)
                if bad is not None:
                    return CheckResult(
                        "diverged", path + (row,),
                        f"tick {depth}: simulator and interpreter disagree "
                        f"on {bad}")
                if dialect == "leaf":
                    states = [
                        _Obs(s.statuses, active_node=ids[s.cursor])
                        for s in res.steps
                    ]
                    for i, obs in enumerate(states):
                        if not _eval_path(spec.premise, [obs]):
                            continue
                        if not _eval_path(spec.conclusion, states[i:] + [_IDLE]):
                            return CheckResult(
                                "counterexample", path + (row,),
                                f"tick {depth}, step {i} (cursor at "
                                f"{res.steps[i].cursor}): premise holds but "
                                f"the conclusion fails")
                else:
                    obs = _Obs(_trace(res).statuses,
                               active=getattr(res, "active", None))
                    if _eval_path(spec.premise, [obs]) \
                            and not _eval_path(spec.conclusion, [obs]):
                        return CheckResult(
                            "counterexample", path + (row,),
                            f"tick {depth}: premise holds but the conclusion "
                            f"fails")
                key = (machine.snapshot(), interp.snapshot())
                if key not in seen:
                    seen.add(key)
                    grown.append((key, path + (row,)))
        frontier = grown
        if not frontier:
            break
    return CheckResult("holds")


# ---------------------------------------------------------------------------
# External model checker smoke
# ---------------------------------------------------------------------------

NUXMV_ENV = "BTVERIFY_NUXMV"


class NuxmvError(RuntimeError):
    """The external checker failed or produced unparseable output."""


@dataclass(frozen=True)
class SmokeResult:
    status: str              # passed | failed | skipped
    details: str = ""
    verdicts: tuple = ()     # (model name, formula, bool) per LTLSPEC


def nuxmv_path() -> Optional[str]:
    return os.environ.get(NUXMV_ENV) or None


_VERDICT_LINE = re.compile(r"-- specification\s+(.*?)\s+is\s+(true|false)")
_ERROR_MARKS = ("syntax error", "Parser error", "TYPE ERROR",
                "undefined", "aborting", "Impossible to")


def run_nuxmv(smv_text: str, timeout: float = 120.0):
    """Parse, build, and check one model; returns ((formula, bool), raw output).

    Raises NuxmvError when the checker is absent, exits nonzero, or reports
    an error, with the tool's output included verbatim.
    """
    exe = nuxmv_path()
    if exe is None:
        raise NuxmvError(f"{NUXMV_ENV} is not set")
    if shutil.which(exe) is None and not os.path.isfile(exe):
        raise NuxmvError(f"{exe!r} is not an executable")
    with tempfile.TemporaryDirectory(prefix="btverify_smv_") as d:
        model = os.path.join(d, "model.smv")
        with open(model, "w") as f:
            f.write(smv_text)
        try:
            proc = subprocess.run(
                [exe, model],
                capture_output=True, text=True, timeout=timeout)
        except (OSError, subprocess.TimeoutExpired) as e:
            raise NuxmvError(f"failed to run {exe!r}: {e}") from e
    output = proc.stdout + ("\n" + proc.stderr if proc.stderr else "")
    if proc.returncode != 0:
        raise NuxmvError(
            f"{exe} exited with {proc.returncode}:\n{output}")
    for mark in _ERROR_MARKS:
        if mark in output:
            raise NuxmvError(f"{exe} reported a problem:\n{output}")
    verdicts = tuple(
        (m.group(1), m.group(2) == "true")
        for m in _VERDICT_LINE.finditer(output))
    return verdicts, output


def nuxmv_smoke(models) -> SmokeResult:
    """Feed (name, smv text) pairs through the external checker.

    Returns skipped when no checker is configured; a configured checker that
    rejects any model yields failed with the diagnostics kept verbatim.
    """
    if nuxmv_path() is None:
        return SmokeResult("skipped", f"{NUXMV_ENV} is not set")
    lines = []
    verdicts = []
    failed = False
    for name, text in models:
        try:
            got, _ = run_nuxmv(text)
        except NuxmvError as e:
            failed = True
            lines.append(f"{name}: FAILED\n{e}")
            continue
        lines.append(f"{name}: ok ({len(got)} specs)")
        verdicts.extend((name, formula, value) for formula, value in got)
    return SmokeResult("failed" if failed else "passed",
                       "\n".join(lines), tuple(verdicts))


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReportEntry:
    name: str
    verdict: str       # pass | fail | skip
    detail: str = ""


def format_report(entries) -> str:
    lines = []
    for e in entries:
        mark = {"pass": "PASS", "fail": "FAIL", "skip": "SKIP"}[e.verdict]
        lines.append(f"{mark}  {e.name}" + (f"  {e.detail}" if e.detail else ""))
    counts = report_summary(entries)["counts"]
    lines.append(f"{counts['pass']} passed, {counts['fail']} failed, "
                 f"{counts['skip']} skipped")
    return "\n".join(lines)


def report_summary(entries) -> dict:
    counts = {"pass": 0, "fail": 0, "skip": 0}
    for e in entries:
        counts[e.verdict] += 1
    return {
        "counts": counts,
        "entries": [
            {"name": e.name, "verdict": e.verdict, "detail": e.detail}
            for e in entries
        ],
    }


def rows_json(path) -> list[dict[str, str]]:
    """Oracle rows as letter maps, for reproducers in reports."""
    return [{k: v.value for k, v in row.items()} for row in path]
