"""Whole-tree encoding: one transition evaluates one full tick.

Activation flows down through skip-transparent enter gates: a child is
active when the gate reaches it and its skip flag is clear; the gate passes
over flagged children unchanged and advances past an active child only on
that child's continue status. Composite memory is the same per-child skip
flag scheme as the stepping encoding, updated once per tick from the tick's
statuses. Parallel verdicts count flagged children as successes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .core import (
    Status, SUCCESS, FAILURE, RUNNING, INVALID,
    OnStatus, SetConstant, SetFromStatus, domain_contains,
    Selector, Sequence, Parallel, Decorator, StatusMap, OneShot, Leaf,
    ParallelFlavor, Tree, TreeError, validate,
)
from .interp import (
    Oracle, OracleError, SemanticsFlavor, TableOracle, TickTrace,
    ValueResolver,
)
from .leaf_encoding import _continue_status, _has_skip_flags


@dataclass(frozen=True)
class TotalTickResult:
    trace: TickTrace
    active: dict
    success_counts: dict


class TotalMachine:
    """Executable twin of the whole-tree SMV model (both define layouts)."""

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
        self.reset()

    def reset(self) -> None:
        self.skip: dict[int, bool] = {
            c: False for p in self.flagged_parents
            for c in self.tree.children(p)}
        self.stored: dict[int, Status] = {}
        self.blackboard: dict[str, Any] = {
            d.name: d.initial for d in self.tree.blackboard}
        self.ticks = 0

    def snapshot(self):
        return (
            tuple(sorted((c, v) for c, v in self.skip.items() if v)),
            tuple(sorted(self.stored.items(), key=lambda kv: kv[0])),
            tuple((d.name, self.blackboard[d.name])
                  for d in self.tree.blackboard),
        )

    def restore(self, state) -> None:
        flagged, stored, bb = state
        for c in self.skip:
            self.skip[c] = False
        for c, v in flagged:
            self.skip[c] = v
        self.stored = dict(stored)
        self.blackboard = dict(bb)

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

    def run_tick(self, oracle: Oracle) -> TotalTickResult:
        tree = self.tree
        flags_at_entry = dict(self.skip)
        statuses: dict[int, Status] = {}
        executed: list[str] = []
        success_counts: dict[str, int] = {}

        def evaluate(n: int) -> Status:
            kind = tree.kind(n)
            if isinstance(kind, Leaf):
                st = oracle.status_for(self.ticks, len(executed), tree.name(n))
                if st not in kind.profile.statuses:
                    raise OracleError(
                        f"leaf {tree.name(n)!r} cannot return {st.name}")
                executed.append(tree.name(n))
                self._fire_effects(n, st)
            elif isinstance(kind, Decorator):
                if isinstance(kind.kind, OneShot):
                    if n in self.stored:
                        st = self.stored[n]
                    else:
                        st = evaluate(tree.first_child(n))
                        if st is not RUNNING:
                            self.stored[n] = st
                else:
                    st = kind.kind.apply(evaluate(tree.first_child(n)))
            elif isinstance(kind, (Selector, Sequence)):
                bail = SUCCESS if isinstance(kind, Selector) else FAILURE
                st = _continue_status(kind)
                enter = True
                for c in tree.children(n):
                    if self.skip.get(c, False):
                        continue  # the enter gate passes through unchanged
                    if not enter:
                        continue
                    cst = evaluate(c)
                    if cst is bail or cst is RUNNING:
                        st = cst
                        enter = False
            else:
                assert isinstance(kind, Parallel)
                kids = tree.children(n)
                child_st = {
                    c: (SUCCESS if self.skip.get(c, False) else evaluate(c))
                    for c in kids
                }
                sc = sum(s is SUCCESS for s in child_st.values())
                fc = sum(s is FAILURE for s in child_st.values())
                success_counts[tree.name(n)] = sc
                k = len(kids)
                m = kind.policy.resolve(k)
                if kind.policy.flavor is ParallelFlavor.PYTREES:
                    st = FAILURE if fc else SUCCESS if sc >= m else RUNNING
                else:
                    st = SUCCESS if sc >= m else \
                        FAILURE if m > k - fc else RUNNING
            statuses[n] = st
            return st

        root_status = evaluate(tree.root)
        self._update_flags(statuses)

        skipped = tuple(
            tree.name(c) for c in sorted(flags_at_entry)
            if flags_at_entry[c] and tree.parent(c) in statuses)
        trace = TickTrace(
            tick=self.ticks,
            root_status=root_status,
            statuses={tree.name(n): statuses.get(n, INVALID)
                      for n in range(len(tree))},
            executed=tuple(executed),
            skipped=skipped,
            blackboard=dict(self.blackboard),
        )
        active = {tree.name(n): n in statuses for n in range(len(tree))}
        self.ticks += 1
        return TotalTickResult(trace, active, success_counts)

    def _update_flags(self, statuses: dict[int, Status]) -> None:
        tree = self.tree
        resolved = {n for n, s in statuses.items()
                    if s is SUCCESS or s is FAILURE}
        for p in self.flagged_parents:
            cont = _continue_status(tree.kind(p))
            clear = p in resolved or (
                self.flavor is SemanticsFlavor.PYTREES
                and any(a in resolved for a in tree.ancestors(p)))
            for c in tree.children(p):
                if clear:
                    self.skip[c] = False
                elif statuses.get(c) is cont:
                    self.skip[c] = True
                # otherwise hold


def run_total_machine(
    tree: Tree,
    rows,
    flavor: SemanticsFlavor = SemanticsFlavor.PYTREES,
    value_resolver: Optional[ValueResolver] = None,
) -> list[TotalTickResult]:
    machine = TotalMachine(tree, flavor=flavor, value_resolver=value_resolver)
    oracle = TableOracle(list(rows))
    return [machine.run_tick(oracle) for _ in rows]
