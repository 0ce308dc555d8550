"""Behavior tree verification toolkit.

Builds behavior trees, runs them under two tick semantics, compiles them to
three SMV encodings, and differentially tests the encodings against the
reference interpreter.
"""
from .core import (
    Status,
    SUCCESS,
    FAILURE,
    RUNNING,
    INVALID,
    BoolDomain,
    IntDomain,
    EnumDomain,
    BlackboardDecl,
    BlackboardEffect,
    OnTick,
    OnStatus,
    Nondet,
    SetConstant,
    SetFromStatus,
    LeafProfile,
    ParallelFlavor,
    ParallelPolicy,
    Selector,
    Sequence,
    Parallel,
    Decorator,
    StatusMap,
    OneShot,
    Leaf,
    Node,
    Tree,
    TreeError,
    BinarizeError,
    Violation,
    build,
    leaf,
    selector,
    sequence,
    parallel,
    statusmap,
    inverter,
    oneshot,
    validate,
    binarize,
    memory_resume_domain,
)

__all__ = [
    "Status", "SUCCESS", "FAILURE", "RUNNING", "INVALID",
    "BoolDomain", "IntDomain", "EnumDomain",
    "BlackboardDecl", "BlackboardEffect", "OnTick", "OnStatus",
    "Nondet", "SetConstant", "SetFromStatus",
    "LeafProfile", "ParallelFlavor", "ParallelPolicy",
    "Selector", "Sequence", "Parallel", "Decorator", "StatusMap", "OneShot",
    "Leaf", "Node", "Tree", "TreeError", "BinarizeError", "Violation",
    "build", "leaf", "selector", "sequence", "parallel", "statusmap",
    "inverter", "oneshot", "validate", "binarize", "memory_resume_domain",
]

__version__ = "0.1.0"
