"""Scaling benchmark family: the checklist.

A checklist of size n strings together n guarded fallbacks
selector(safety_check_i, backup_i) where the check can fail but the backup
always succeeds. The combining chain is a right-nested binary sequence (or,
in the parallel variant, a success-on-all parallel), so the tree is already
binary and grows linearly while staying semantically transparent: whenever a
check fails its backup must run and succeed. That yields one property that
holds and one falsifiable twin per check, phrased per encoding dialect.
"""
from __future__ import annotations

from dataclasses import dataclass

from .core import (
    ParallelFlavor, Tree, Draft, build, leaf, selector, sequence, parallel,
)

DIALECTS = ("total", "btc", "leaf")


@dataclass(frozen=True)
class ChecklistSpec:
    index: int
    holds: bool
    formula: str


def checklist_tree(n: int, parallel_variant: bool = False) -> Tree:
    """n fallback units chained right-nested; unit 1 shallowest."""
    if n < 1:
        raise ValueError("a checklist needs at least one check")

    def unit(i: int) -> Draft:
        return selector(f"sel{i}",
                        leaf(f"safety_check{i}", "SF"),
                        leaf(f"backup{i}", "S"))

    node = unit(n)
    for i in range(n - 1, 0, -1):
        if parallel_variant:
            node = parallel(f"par{i}", unit(i), node, threshold="all",
                            flavor=ParallelFlavor.THRESHOLD)
        else:
            node = sequence(f"seq{i}", unit(i), node)
    return build(node)


def checklist_specs(n: int, dialect: str) -> tuple[ChecklistSpec, ...]:
    """One pair per check: a property that holds and its falsifiable twin."""
    if dialect not in DIALECTS:
        raise ValueError(f"unknown dialect {dialect!r}, expected one of "
                         f"{', '.join(DIALECTS)}")
    out = []
    for i in range(1, n + 1):
        fail = f"safety_check{i}.status = failure"
        if dialect == "total":
            good = f"G ({fail} -> backup{i}.status = success)"
            bad = f"G ({fail} -> !(backup{i}.status = success))"
        elif dialect == "btc":
            good = f"G ({fail} -> backup{i}.enable = TRUE)"
            bad = f"G ({fail} -> backup{i}.enable = FALSE)"
        else:
            # the stepping encoding resolves the backup a few transitions
            # after the check inside the same tick, hence the until form
            within = f"(!(active_node = -1) U backup{i}.status = success)"
            good = f"G ({fail} -> {within})"
            bad = f"G ({fail} -> !{within})"
        out.append(ChecklistSpec(i, True, good))
        out.append(ChecklistSpec(i, False, bad))
    return tuple(out)
