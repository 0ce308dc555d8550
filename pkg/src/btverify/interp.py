"""Reference tick interpreter.

Runs a behavior tree one tick at a time, pulling leaf statuses from an
oracle. Two forgetting rules are supported: under the pytrees flavor a
composite's memory (resume point or synchronization set) is dropped whenever
any strict ancestor resolves, while under the btcompiler flavor memory
survives ancestor resolution and clears only when the owning node itself
returns success or failure. One-shot verdicts are immune to forgetting under
both flavors.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional, Protocol, Sequence as Seq

from .core import (
    Status, SUCCESS, FAILURE, RUNNING, INVALID,
    Domain, domain_contains,
    OnStatus, Nondet, SetConstant, SetFromStatus,
    Selector, Sequence, Parallel, Decorator, StatusMap, OneShot, Leaf,
    ParallelFlavor, Tree, TreeError, validate,
)


class SemanticsFlavor(enum.Enum):
    PYTREES = "pytrees"
    BTCOMPILER = "btcompiler"


class OracleError(Exception):
    pass


class Oracle(Protocol):
    def status_for(self, tick: int, ordinal: int, leaf: str) -> Status: ...


@dataclass
class TableOracle:
    """Serves per-tick leaf assignments; strict about coverage."""
    rows: Seq[Mapping[str, Status]]
    base_tick: int = 0

    def status_for(self, tick: int, ordinal: int, leaf: str) -> Status:
        i = tick - self.base_tick
        if not (0 <= i < len(self.rows)):
            raise OracleError(f"oracle has no row for tick {tick}")
        row = self.rows[i]
        if leaf not in row:
            raise OracleError(f"oracle row for tick {tick} is missing {leaf!r}")
        return row[leaf]


class SeededOracle:
    """Uniform choice from each leaf's status domain, reproducible by seed."""

    def __init__(self, tree: Tree, seed: int) -> None:
        self._rnd = random.Random(seed)
        self._domains = {
            tree.name(n): sorted(tree.kind(n).profile.statuses,
                                 key=lambda s: "SFR".index(s.value))
            for n in tree.leaves()
        }

    def status_for(self, tick: int, ordinal: int, leaf: str) -> Status:
        return self._rnd.choice(self._domains[leaf])


#: (tick, leaf name, variable, domain, current value) -> new value
ValueResolver = Callable[[int, str, str, Domain, Any], Any]


@dataclass(frozen=True)
class TickTrace:
    """Everything observable about one tick.

    `statuses` covers every node by name, Invalid when the node did not run.
    `executed` lists leaves in execution order. `skipped` lists nodes that an
    executing parent deliberately jumped over (memory resume, synchronization)
    rather than merely never reached.
    """
    tick: int
    root_status: Status
    statuses: dict[str, Status]
    executed: tuple[str, ...]
    skipped: tuple[str, ...]
    blackboard: dict[str, Any]


def format_trace(traces: Seq[TickTrace]) -> str:
    lines = []
    for tr in traces:
        ex = ", ".join(tr.executed)
        bb = ", ".join(f"{k}={v}" for k, v in tr.blackboard.items())
        lines.append(
            f"tick {tr.tick}: root={tr.root_status.letter} "
            f"executed=[{ex}] bb={{{bb}}}")
    return "\n".join(lines)


#: Hashable interpreter state: (resume, sync_done, oneshot, blackboard).
InterpState = tuple[
    tuple[tuple[int, int], ...],
    tuple[tuple[int, frozenset[int]], ...],
    tuple[tuple[int, Status], ...],
    tuple[tuple[str, Any], ...],
]


class Interpreter:
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
        self.reset()

    def reset(self) -> None:
        self.resume: dict[int, int] = {}
        self.sync_done: dict[int, frozenset[int]] = {}
        self.oneshot: dict[int, Status] = {}
        self.blackboard: dict[str, Any] = {
            d.name: d.initial for d in self.tree.blackboard}
        self.ticks = 0

    # -- state capture -------------------------------------------------------

    def snapshot(self) -> InterpState:
        return (
            tuple(sorted(self.resume.items())),
            tuple(sorted(self.sync_done.items())),
            tuple(sorted(self.oneshot.items(), key=lambda kv: kv[0])),
            tuple((d.name, self.blackboard[d.name]) for d in self.tree.blackboard),
        )

    def restore(self, state: InterpState) -> None:
        resume, sync_done, oneshots, bb = state
        self.resume = dict(resume)
        self.sync_done = dict(sync_done)
        self.oneshot = dict(oneshots)
        self.blackboard = dict(bb)

    # -- execution -----------------------------------------------------------

    def tick(self, oracle: Oracle) -> TickTrace:
        tree = self.tree
        statuses: dict[int, Status] = {}
        executed: list[str] = []
        skipped: list[int] = []

        def fire_effects(n: int, st: Status) -> None:
            for e in tree.kind(n).profile.effects:
                if isinstance(e.trigger, OnStatus) and e.trigger.status is not st:
                    continue
                decl = tree.bb_decl(e.variable)
                cur = self.blackboard[e.variable]
                if isinstance(e.update, SetConstant):
                    val = e.update.value
                elif isinstance(e.update, SetFromStatus):
                    val = e.update.as_dict()[st]
                elif self.value_resolver is None:
                    val = cur
                else:
                    val = self.value_resolver(
                        self.ticks, tree.name(n), e.variable, decl.domain, cur)
                    if not domain_contains(decl.domain, val):
                        raise OracleError(
                            f"value {val!r} outside domain of {e.variable}")
                self.blackboard[e.variable] = val

        def exec_node(n: int) -> Status:
            kind = tree.kind(n)
            if isinstance(kind, Leaf):
                st = oracle.status_for(self.ticks, len(executed), tree.name(n))
                if st not in kind.profile.statuses:
                    raise OracleError(
                        f"leaf {tree.name(n)!r} cannot return {st.name}")
                executed.append(tree.name(n))
                statuses[n] = st
                fire_effects(n, st)
                return st
            if isinstance(kind, Decorator):
                if isinstance(kind.kind, OneShot):
                    if n in self.oneshot:
                        st = self.oneshot[n]
                    else:
                        st = exec_node(tree.first_child(n))
                        if st is not RUNNING:
                            self.oneshot[n] = st
                else:
                    st = kind.kind.apply(exec_node(tree.first_child(n)))
                statuses[n] = st
                return st
            kids = tree.children(n)
            if isinstance(kind, (Selector, Sequence)):
                bail = SUCCESS if isinstance(kind, Selector) else FAILURE
                result = FAILURE if isinstance(kind, Selector) else SUCCESS
                start = self.resume.get(n, 0) if kind.memory else 0
                skipped.extend(kids[:start])
                resume_at = None
                for i in range(start, len(kids)):
                    st = exec_node(kids[i])
                    if st is bail or st is RUNNING:
                        result, resume_at = st, i
                        break
                statuses[n] = result
                if kind.memory:
                    if result is RUNNING:
                        self.resume[n] = resume_at
                    else:
                        self.resume.pop(n, None)
                return result
            assert isinstance(kind, Parallel)
            done = self.sync_done.get(n, frozenset()) if kind.synchronized \
                else frozenset()
            effective: list[Status] = []
            succeeded_now: set[int] = set()
            for i, c in enumerate(kids):
                if i in done:
                    skipped.append(c)
                    effective.append(SUCCESS)
                else:
                    st = exec_node(c)
                    effective.append(st)
                    if st is SUCCESS:
                        succeeded_now.add(i)
            n_s = sum(s is SUCCESS for s in effective)
            n_f = sum(s is FAILURE for s in effective)
            n_r = sum(s is RUNNING for s in effective)
            m = kind.policy.resolve(len(kids))
            if kind.policy.flavor is ParallelFlavor.PYTREES:
                result = FAILURE if n_f else SUCCESS if n_s >= m else RUNNING
            else:
                result = SUCCESS if n_s >= m else \
                    FAILURE if m > n_s + n_r else RUNNING
            statuses[n] = result
            if kind.synchronized:
                if result is RUNNING:
                    self.sync_done[n] = frozenset(done | succeeded_now)
                else:
                    self.sync_done.pop(n, None)
            return result

        root_status = exec_node(tree.root)

        if self.flavor is SemanticsFlavor.PYTREES:
            resolved = {n for n, s in statuses.items()
                        if s is SUCCESS or s is FAILURE}
            for store in (self.resume, self.sync_done):
                stale = [k for k in store
                         if any(a in resolved for a in tree.ancestors(k))]
                for k in stale:
                    del store[k]

        trace = TickTrace(
            tick=self.ticks,
            root_status=root_status,
            statuses={tree.name(n): statuses.get(n, INVALID)
                      for n in range(len(tree))},
            executed=tuple(executed),
            skipped=tuple(tree.name(k) for k in sorted(skipped)),
            blackboard=dict(self.blackboard),
        )
        self.ticks += 1
        return trace

    def run(self, oracle: Oracle, n: int,
            start_tick: Optional[int] = None) -> list[TickTrace]:
        if start_tick is not None:
            self.ticks = start_tick
        return [self.tick(oracle) for _ in range(n)]


def run_interpreter(
    tree: Tree,
    rows: Seq[Mapping[str, Status]],
    flavor: SemanticsFlavor = SemanticsFlavor.PYTREES,
    value_resolver: Optional[ValueResolver] = None,
) -> list[TickTrace]:
    it = Interpreter(tree, flavor=flavor, value_resolver=value_resolver)
    return it.run(TableOracle(list(rows)), len(rows))
