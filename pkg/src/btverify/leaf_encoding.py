"""Stepping encoding: a cursor walks leaf to leaf within each tick.

One transition resolves one node: the cursor sits on a leaf (or on a
finished one-shot, which replays its stored verdict), the node's status
cascades upward through any ancestors it resolves, and the cursor jumps to
the next pending leaf. A tick is the stretch of steps between idle states;
node statuses exist only at the step where the node resolves.

Composite memory lives in per-child skip flags that are updated on every
step from that step's resolutions: a child that resolves with its parent's
continue status is flagged while the parent is still in progress, the flag
survives the tick boundary, and it clears when the parent itself resolves
(or, under the pytrees flavor, when any strict ancestor does). Parallel
progress is held in success/failure counters that reset on the owning
node's own resolution, whatever the verdict, so counters are always zero at
tick boundaries; flagged children of a synchronized parallel are added to
the success count at the resolution step itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .core import (
    Status, SUCCESS, FAILURE, RUNNING, INVALID,
    Selector, Sequence, Parallel, Decorator, StatusMap, OneShot, Leaf,
    ParallelFlavor, Tree, TreeError, validate,
)
from .interp import (
    Oracle, OracleError, SemanticsFlavor, TableOracle, TickTrace,
    ValueResolver,
)
from .core import OnStatus, SetConstant, SetFromStatus, domain_contains


@dataclass(frozen=True)
class LeafStep:
    """One transition: the cursor position and every resolution it caused."""
    cursor: Optional[str]
    statuses: dict[str, Status]
    blackboard: dict[str, Any]


@dataclass(frozen=True)
class LeafTickResult:
    trace: TickTrace
    steps: tuple[LeafStep, ...]


def _continue_status(kind) -> Status:
    """The child verdict a composite steps past: what a skip stands for."""
    if isinstance(kind, Selector):
        return FAILURE
    return SUCCESS


def _has_skip_flags(kind) -> bool:
    if isinstance(kind, (Selector, Sequence)):
        return kind.memory
    return isinstance(kind, Parallel) and kind.synchronized


class LeafMachine:
    """Executable twin of the stepping SMV model."""

    def __init__(
        self,
        tree: Tree,
        flavor: SemanticsFlavor = SemanticsFlavor.PYTREES,
        value_resolver: Optional[ValueResolver] = None,
    ) -> None:
        problems = validate(tree)
        if problems:
            raise TreeError(
                "invalid tree: " + "; ".join(str(v) for v in problems))
        self.tree = tree
        self.flavor = flavor
        self.value_resolver = value_resolver
        self.flagged_parents = tuple(
            n for n in range(len(tree)) if _has_skip_flags(tree.kind(n)))
        self.parallels = tuple(
            n for n in range(len(tree)) if isinstance(tree.kind(n), Parallel))
        self.oneshots = tuple(
            n for n in range(len(tree))
            if isinstance(tree.kind(n), Decorator)
            and isinstance(tree.kind(n).kind, OneShot))
        self.reset()

    def reset(self) -> None:
        self.skip: dict[int, bool] = {
            c: False for p in self.flagged_parents for c in self.tree.children(p)}
        self.success_count: dict[int, int] = {p: 0 for p in self.parallels}
        self.failure_count: dict[int, int] = {p: 0 for p in self.parallels}
        self.stored: dict[int, Status] = {}
        self.blackboard: dict[str, Any] = {
            d.name: d.initial for d in self.tree.blackboard}
        self.ticks = 0

    # -- state capture -------------------------------------------------------

    def snapshot(self):
        return (
            tuple(sorted((c, v) for c, v in self.skip.items() if v)),
            tuple(sorted(self.stored.items(), key=lambda kv: kv[0])),
            tuple((d.name, self.blackboard[d.name]) for d in self.tree.blackboard),
        )

    def restore(self, state) -> None:
        flagged, stored, bb = state
        for c in self.skip:
            self.skip[c] = False
        for c, v in flagged:
            self.skip[c] = v
        self.stored = dict(stored)
        self.blackboard = dict(bb)
        for p in self.parallels:
            self.success_count[p] = 0
            self.failure_count[p] = 0

    # -- cursor movement -----------------------------------------------------

    def _is_stop(self, n: int) -> bool:
        """Cursor positions: leaves and finished one-shots."""
        kind = self.tree.kind(n)
        if isinstance(kind, Leaf):
            return True
        return (isinstance(kind, Decorator) and isinstance(kind.kind, OneShot)
                and n in self.stored)

    def _enter(self, n: int) -> int:
        """Descend to the first pending cursor position inside subtree n."""
        while not self._is_stop(n):
            kind = self.tree.kind(n)
            if isinstance(kind, Decorator):
                n = self.tree.first_child(n)
                continue
            for c in self.tree.children(n):
                if not self.skip.get(c, False):
                    n = c
                    break
            else:
                raise AssertionError(
                    f"all children of {self.tree.name(n)} are skipped")
        return n

    def _next_unskipped(self, parent: int, after: int) -> Optional[int]:
        kids = self.tree.children(parent)
        for c in kids[kids.index(after) + 1:]:
            if not self.skip.get(c, False):
                return c
        return None

    # -- effects (same firing rules as the interpreter) ------------------------

    def _fire_effects(self, n: int, st: Status) -> None:
        for e in self.tree.kind(n).profile.effects:
            if isinstance(e.trigger, OnStatus) and e.trigger.status is not st:
                continue
            decl = self.tree.bb_decl(e.variable)
            cur = self.blackboard[e.variable]
            if isinstance(e.update, SetConstant):
                val = e.update.value
            elif isinstance(e.update, SetFromStatus):
                val = e.update.as_dict()[st]
            elif self.value_resolver is None:
                val = cur
            else:
                val = self.value_resolver(
                    self.ticks, self.tree.name(n), e.variable, decl.domain, cur)
                if not domain_contains(decl.domain, val):
                    raise OracleError(
                        f"value {val!r} outside domain of {e.variable}")
            self.blackboard[e.variable] = val

    # -- one tick --------------------------------------------------------------

    def run_tick(self, oracle: Oracle) -> LeafTickResult:
        tree = self.tree
        flags_at_entry = dict(self.skip)
        tick_statuses: dict[int, Status] = {}
        executed: list[str] = []
        steps: list[LeafStep] = []
        step_budget = 2 * len(tree) + 1

        cursor = self._enter(tree.root)
        while True:
            if len(steps) >= step_budget:
                raise AssertionError("tick exceeded its step budget")
            resolutions: dict[int, Status] = {}

            # resolve the cursor node
            if tree.is_leaf(cursor):
                st = oracle.status_for(self.ticks, len(executed),
                                       tree.name(cursor))
                if st not in tree.kind(cursor).profile.statuses:
                    raise OracleError(
                        f"leaf {tree.name(cursor)!r} cannot return {st.name}")
                executed.append(tree.name(cursor))
                self._fire_effects(cursor, st)
            else:
                st = self.stored[cursor]
            resolutions[cursor] = st

            # cascade upward, stopping where the tree merely advances
            node, status = cursor, st
            next_cursor: Optional[int] = None
            while True:
                parent = tree.parent(node)
                if parent is None:
                    break
                kind = tree.kind(parent)
                if isinstance(kind, Decorator):
                    if isinstance(kind.kind, OneShot):
                        if parent not in self.stored and status is not RUNNING:
                            self.stored[parent] = status
                    else:
                        status = kind.kind.apply(status)
                    resolutions[parent] = status
                    node = parent
                    continue
                if isinstance(kind, (Selector, Sequence)):
                    bail = SUCCESS if isinstance(kind, Selector) else FAILURE
                    if status is bail or status is RUNNING:
                        resolutions[parent] = status
                        node = parent
                        continue
                    nxt = self._next_unskipped(parent, node)
                    if nxt is None:
                        status = _continue_status(kind)
                        resolutions[parent] = status
                        node = parent
                        continue
                    next_cursor = self._enter(nxt)
                    break
                # parallel: every pending child runs before the verdict
                nxt = self._next_unskipped(parent, node)
                if nxt is not None:
                    next_cursor = self._enter(nxt)
                    break
                n_skipped = sum(
                    1 for c in tree.children(parent) if self.skip.get(c, False))
                sc = self.success_count[parent] + n_skipped + \
                    (1 if status is SUCCESS else 0)
                fc = self.failure_count[parent] + \
                    (1 if status is FAILURE else 0)
                k = len(tree.children(parent))
                m = kind.policy.resolve(k)
                if kind.policy.flavor is ParallelFlavor.PYTREES:
                    verdict = FAILURE if fc else SUCCESS if sc >= m else RUNNING
                else:
                    verdict = SUCCESS if sc >= m else \
                        FAILURE if m > k - fc else RUNNING
                status = verdict
                resolutions[parent] = status
                node = parent
                continue

            self._update_state(resolutions)
            tick_statuses.update(resolutions)
            steps.append(LeafStep(
                cursor=tree.name(cursor),
                statuses={tree.name(n): s for n, s in resolutions.items()},
                blackboard=dict(self.blackboard),
            ))
            if next_cursor is None:
                break
            cursor = next_cursor

        skipped = tuple(
            tree.name(c) for c in sorted(flags_at_entry)
            if flags_at_entry[c] and tree.parent(c) in tick_statuses)
        trace = TickTrace(
            tick=self.ticks,
            root_status=tick_statuses[tree.root],
            statuses={tree.name(n): tick_statuses.get(n, INVALID)
                      for n in range(len(tree))},
            executed=tuple(executed),
            skipped=skipped,
            blackboard=dict(self.blackboard),
        )
        self.ticks += 1
        return LeafTickResult(trace, tuple(steps))

    # -- per-step state update (mirrors the SMV next() cases) -------------------

    def _update_state(self, resolutions: dict[int, Status]) -> None:
        tree = self.tree
        resolved_sf = {n for n, s in resolutions.items()
                       if s is SUCCESS or s is FAILURE}

        for p in self.flagged_parents:
            kind = tree.kind(p)
            cont = _continue_status(kind)
            parent_resolved_sf = p in resolved_sf
            ancestor_resolved = (
                self.flavor is SemanticsFlavor.PYTREES
                and any(a in resolved_sf for a in tree.ancestors(p)))
            for c in tree.children(p):
                if parent_resolved_sf or ancestor_resolved:
                    self.skip[c] = False
                elif resolutions.get(c) is cont:
                    # covers both a mid-tick advance and a child succeeding
                    # at the very step a synchronized parallel returns running
                    self.skip[c] = True
                # otherwise hold

        for p in self.parallels:
            if p in resolutions:
                self.success_count[p] = 0
                self.failure_count[p] = 0
                continue
            # a synchronized parallel's successes live in its skip flags, so
            # counting them here as well would double them at the trigger
            synchronized = tree.kind(p).synchronized
            for c in tree.children(p):
                if resolutions.get(c) is SUCCESS and not synchronized:
                    self.success_count[p] += 1
                elif resolutions.get(c) is FAILURE:
                    self.failure_count[p] += 1


def run_leaf_machine(
    tree: Tree,
    rows,
    flavor: SemanticsFlavor = SemanticsFlavor.PYTREES,
    value_resolver: Optional[ValueResolver] = None,
) -> list[LeafTickResult]:
    machine = LeafMachine(tree, flavor=flavor, value_resolver=value_resolver)
    oracle = TableOracle(list(rows))
    return [machine.run_tick(oracle) for _ in rows]
