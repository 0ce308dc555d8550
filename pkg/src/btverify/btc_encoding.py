"""Binary-tree encoding: activation clauses scoped to two-child composites.

Memory lives in one prior-verdict flag per first child: a sequence skips a
first child whose earlier success is on record, a selector one whose earlier
failure is. Flag updates reset first (the composite resolved), then set (the
first child handed over while the composite stayed running), else hold. The
flags survive ancestor resolutions, so this machine realizes the semantics
where memory clears only on the owning composite's own verdict.

Trees must be binary and blackboard-free, and parallels must use the
threshold flavor without synchronization; check_btc_compatible explains any
violation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    Status, SUCCESS, FAILURE, RUNNING, INVALID,
    Selector, Sequence, Parallel, Decorator, OneShot,
    Leaf, ParallelFlavor, Tree, TreeError, validate,
)
from .interp import Oracle, OracleError, TableOracle, TickTrace
from .leaf_encoding import _continue_status


class BtcError(Exception):
    """The tree falls outside what the binary encoding can express."""


def check_btc_compatible(tree: Tree) -> None:
    if tree.blackboard:
        raise BtcError(
            "BTCompiler does not support blackboard variables; "
            "the btc encoding rejects trees with a blackboard")
    for n in range(len(tree)):
        kind = tree.kind(n)
        if isinstance(kind, (Selector, Sequence, Parallel)):
            arity = len(tree.children(n))
            if arity != 2:
                raise BtcError(
                    f"node {tree.name(n)!r} has arity {arity}; "
                    "the btc encoding requires binary composites")
        if isinstance(kind, Parallel):
            if kind.policy.flavor is not ParallelFlavor.THRESHOLD:
                raise BtcError(
                    f"parallel {tree.name(n)!r} uses the pytrees flavor; "
                    "the btc encoding only supports the threshold flavor")
            if kind.synchronized:
                raise BtcError(
                    f"parallel {tree.name(n)!r} is synchronized; "
                    "the btc encoding does not support synchronization")


@dataclass(frozen=True)
class BtcTickResult:
    trace: TickTrace
    active: dict


class BtcMachine:
    """Executable twin of the binary SMV model."""

    def __init__(self, tree: Tree) -> None:
        problems = validate(tree)
        if problems:
            raise TreeError(
                "invalid tree: " + "; ".join(str(v) for v in problems))
        check_btc_compatible(tree)
        self.tree = tree
        self.mem_pairs = tuple(
            (n, tree.first_child(n)) for n in range(len(tree))
            if isinstance(tree.kind(n), (Selector, Sequence))
            and tree.kind(n).memory)
        self.reset()

    def reset(self) -> None:
        self.flags: dict[int, bool] = {c: False for _, c in self.mem_pairs}
        self.stored: dict[int, Status] = {}
        self.ticks = 0

    def snapshot(self):
        return (
            tuple(sorted(c for c, v in self.flags.items() if v)),
            tuple(sorted(self.stored.items(), key=lambda kv: kv[0])),
        )

    def restore(self, state) -> None:
        flagged, stored = state
        for c in self.flags:
            self.flags[c] = c in flagged
        self.stored = dict(stored)

    def run_tick(self, oracle: Oracle) -> BtcTickResult:
        tree = self.tree
        statuses: dict[int, Status] = {}
        executed: list[str] = []
        skipped: list[int] = []

        def evaluate(n: int) -> Status:
            kind = tree.kind(n)
            if isinstance(kind, Leaf):
                st = oracle.status_for(self.ticks, len(executed), tree.name(n))
                if st not in kind.profile.statuses:
                    raise OracleError(
                        f"leaf {tree.name(n)!r} cannot return {st.name}")
                executed.append(tree.name(n))
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
                c1, c2 = tree.children(n)
                cont = _continue_status(kind)
                if kind.memory and self.flags[c1]:
                    skipped.append(c1)
                    eff1 = cont  # the recorded verdict stands in for a rerun
                else:
                    eff1 = evaluate(c1)
                st = evaluate(c2) if eff1 is cont else eff1
            else:
                assert isinstance(kind, Parallel)
                c1, c2 = tree.children(n)
                s1, s2 = evaluate(c1), evaluate(c2)
                sc = (s1 is SUCCESS) + (s2 is SUCCESS)
                fc = (s1 is FAILURE) + (s2 is FAILURE)
                m = kind.policy.resolve(2)
                st = SUCCESS if sc >= m else \
                    FAILURE if m > 2 - fc else RUNNING
            statuses[n] = st
            return st

        root_status = evaluate(tree.root)

        for p, c1 in self.mem_pairs:
            pst = statuses.get(p)
            if pst is SUCCESS or pst is FAILURE:
                self.flags[c1] = False
            elif statuses.get(c1) is _continue_status(tree.kind(p)):
                self.flags[c1] = True
            # otherwise hold, including while the composite sits inactive

        trace = TickTrace(
            tick=self.ticks,
            root_status=root_status,
            statuses={tree.name(n): statuses.get(n, INVALID)
                      for n in range(len(tree))},
            executed=tuple(executed),
            skipped=tuple(tree.name(c) for c in sorted(skipped)),
            blackboard={},
        )
        active = {tree.name(n): n in statuses for n in range(len(tree))}
        self.ticks += 1
        return BtcTickResult(trace, active)


def run_btc_machine(tree: Tree, rows) -> list[BtcTickResult]:
    machine = BtcMachine(tree)
    oracle = TableOracle(list(rows))
    return [machine.run_tick(oracle) for _ in rows]
