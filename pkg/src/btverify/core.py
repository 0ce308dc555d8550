"""Behavior tree data model.

A tree is a flat array of nodes indexed by dense pre-order ids (root = 0).
Node kinds: Selector / Sequence (each optionally with memory), Parallel
(threshold policy, optionally synchronized), Decorator (status map or
one-shot), and Leaf (a profile naming the statuses it may return plus its
blackboard effects). Statuses are four-valued; Invalid marks a node that did
not execute.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Optional, Sequence as Seq, Union


class Status(enum.Enum):
    SUCCESS = "S"
    FAILURE = "F"
    RUNNING = "R"
    INVALID = "I"

    def __repr__(self) -> str:
        return f"Status.{self.name}"

    @property
    def letter(self) -> str:
        return self.value


SUCCESS = Status.SUCCESS
FAILURE = Status.FAILURE
RUNNING = Status.RUNNING
INVALID = Status.INVALID

#: The statuses a leaf may actually return (Invalid is reserved for "did not run").
RETURNABLE = (SUCCESS, FAILURE, RUNNING)


def parse_statuses(spec: Union[str, Seq[Status]]) -> frozenset[Status]:
    """Accepts "SF", "SFR", ... or an iterable of Status values."""
    if isinstance(spec, str):
        return frozenset(Status(ch) for ch in spec)
    return frozenset(spec)


# ---------------------------------------------------------------------------
# Blackboard declarations and leaf effects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoolDomain:
    pass


@dataclass(frozen=True)
class IntDomain:
    lo: int
    hi: int


@dataclass(frozen=True)
class EnumDomain:
    values: tuple[str, ...]


Domain = Union[BoolDomain, IntDomain, EnumDomain]


def domain_values(domain: Domain) -> tuple:
    if isinstance(domain, BoolDomain):
        return (False, True)
    if isinstance(domain, IntDomain):
        return tuple(range(domain.lo, domain.hi + 1))
    return domain.values


def domain_contains(domain: Domain, value: Any) -> bool:
    if isinstance(domain, BoolDomain):
        return isinstance(value, bool)
    if isinstance(domain, IntDomain):
        return isinstance(value, int) and not isinstance(value, bool) and domain.lo <= value <= domain.hi
    return isinstance(value, str) and value in domain.values


@dataclass(frozen=True)
class BlackboardDecl:
    name: str
    domain: Domain
    initial: Any


@dataclass(frozen=True)
class OnTick:
    """Effect fires whenever the leaf executes, regardless of outcome."""


@dataclass(frozen=True)
class OnStatus:
    """Effect fires only when the leaf returns the given status."""
    status: Status


Trigger = Union[OnTick, OnStatus]


@dataclass(frozen=True)
class Nondet:
    """Update picks an arbitrary value from the variable's domain."""


@dataclass(frozen=True)
class SetConstant:
    value: Any


@dataclass(frozen=True)
class SetFromStatus:
    """Update maps the leaf's returned status to a value."""
    mapping: tuple[tuple[Status, Any], ...]

    @classmethod
    def of(cls, mapping: Mapping[Status, Any]) -> "SetFromStatus":
        return cls(tuple(sorted(mapping.items(), key=lambda kv: kv[0].value)))

    def as_dict(self) -> dict[Status, Any]:
        return dict(self.mapping)


Update = Union[Nondet, SetConstant, SetFromStatus]


@dataclass(frozen=True)
class BlackboardEffect:
    variable: str
    trigger: Trigger
    update: Update


@dataclass(frozen=True)
class LeafProfile:
    """What a leaf can do: the statuses it may return and its side effects."""
    name: str
    statuses: frozenset[Status]
    effects: tuple[BlackboardEffect, ...] = ()

    def status_letters(self) -> str:
        return "".join(s.letter for s in RETURNABLE if s in self.statuses)


# ---------------------------------------------------------------------------
# Node kinds
# ---------------------------------------------------------------------------

class ParallelFlavor(enum.Enum):
    #: fail as soon as any child fails; succeed once the threshold is met
    PYTREES = "pytrees"
    #: fail only once the threshold is unreachable (threshold > successes + runnings)
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class ParallelPolicy:
    """Success threshold for a parallel, kept symbolic so "all" survives binarize."""
    threshold: Union[int, str]  # explicit int, or "one" / "all"
    flavor: ParallelFlavor = ParallelFlavor.PYTREES

    def __post_init__(self) -> None:
        if isinstance(self.threshold, str) and self.threshold not in ("one", "all"):
            raise ValueError(f"bad threshold spec {self.threshold!r}")
        if isinstance(self.flavor, str):
            try:
                coerced = ParallelFlavor(self.flavor)
            except ValueError:
                raise ValueError(f"bad parallel flavor {self.flavor!r}") from None
            object.__setattr__(self, "flavor", coerced)

    def resolve(self, arity: int) -> int:
        if self.threshold == "one":
            return 1
        if self.threshold == "all":
            return arity
        return self.threshold

    @classmethod
    def success_on_one(cls, flavor: ParallelFlavor = ParallelFlavor.PYTREES) -> "ParallelPolicy":
        return cls("one", flavor)

    @classmethod
    def success_on_all(cls, flavor: ParallelFlavor = ParallelFlavor.PYTREES) -> "ParallelPolicy":
        return cls("all", flavor)


@dataclass(frozen=True)
class Selector:
    memory: bool = False


@dataclass(frozen=True)
class Sequence:
    memory: bool = False


@dataclass(frozen=True)
class Parallel:
    policy: ParallelPolicy
    synchronized: bool = False


@dataclass(frozen=True)
class StatusMap:
    """Pure relabeling of the child's returned status; total over S/F/R."""
    mapping: tuple[tuple[Status, Status], ...]
    label: str = ""

    @classmethod
    def of(cls, mapping: Mapping[Status, Status], label: str = "") -> "StatusMap":
        return cls(tuple(sorted(mapping.items(), key=lambda kv: kv[0].value)), label)

    def apply(self, status: Status) -> Status:
        return dict(self.mapping).get(status, status)

    def as_dict(self) -> dict[Status, Status]:
        return dict(self.mapping)


@dataclass(frozen=True)
class OneShot:
    """Runs the child until it resolves, then repeats that verdict forever."""


DecoratorKind = Union[StatusMap, OneShot]


@dataclass(frozen=True)
class Decorator:
    kind: DecoratorKind


@dataclass(frozen=True)
class Leaf:
    profile: LeafProfile


NodeKind = Union[Selector, Sequence, Parallel, Decorator, Leaf]

#: Named status maps, in their canonical order.
STATUS_MAP_SHORTHANDS: dict[str, dict[Status, Status]] = {
    "inverter": {SUCCESS: FAILURE, FAILURE: SUCCESS, RUNNING: RUNNING},
    "running_is_failure": {SUCCESS: SUCCESS, FAILURE: FAILURE, RUNNING: FAILURE},
    "running_is_success": {SUCCESS: SUCCESS, FAILURE: FAILURE, RUNNING: SUCCESS},
    "failure_is_success": {SUCCESS: SUCCESS, FAILURE: SUCCESS, RUNNING: RUNNING},
    "failure_is_running": {SUCCESS: SUCCESS, FAILURE: RUNNING, RUNNING: RUNNING},
    "success_is_failure": {SUCCESS: FAILURE, FAILURE: FAILURE, RUNNING: RUNNING},
    "success_is_running": {SUCCESS: RUNNING, FAILURE: FAILURE, RUNNING: RUNNING},
}


# ---------------------------------------------------------------------------
# Tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    name: str


class TreeError(Exception):
    pass


class Tree:
    """Immutable tree over pre-order node ids with topology accessors."""

    __slots__ = ("nodes", "blackboard", "_children", "_parent", "_by_name")

    def __init__(
        self,
        nodes: Seq[Node],
        children: Seq[Seq[int]],
        blackboard: Seq[BlackboardDecl] = (),
    ) -> None:
        if len(nodes) != len(children):
            raise TreeError("nodes and children tables differ in length")
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.blackboard: tuple[BlackboardDecl, ...] = tuple(blackboard)
        self._children: tuple[tuple[int, ...], ...] = tuple(tuple(c) for c in children)
        parent: list[Optional[int]] = [None] * len(self.nodes)
        for pid, kids in enumerate(self._children):
            for k in kids:
                if 0 <= k < len(self.nodes):
                    parent[k] = pid
        self._parent: tuple[Optional[int], ...] = tuple(parent)
        self._by_name = {n.name: n.id for n in self.nodes}

    # -- topology ----------------------------------------------------------

    @property
    def root(self) -> int:
        return 0

    def __len__(self) -> int:
        return len(self.nodes)

    def kind(self, n: int) -> NodeKind:
        return self.nodes[n].kind

    def name(self, n: int) -> str:
        return self.nodes[n].name

    def by_name(self, name: str) -> int:
        return self._by_name[name]

    def children(self, n: int) -> tuple[int, ...]:
        return self._children[n]

    def parent(self, n: int) -> Optional[int]:
        return self._parent[n]

    def first_child(self, n: int) -> Optional[int]:
        kids = self._children[n]
        return kids[0] if kids else None

    def last_child(self, n: int) -> Optional[int]:
        kids = self._children[n]
        return kids[-1] if kids else None

    def child_index(self, n: int) -> int:
        p = self._parent[n]
        assert p is not None
        return self._children[p].index(n)

    def right_neighbor(self, n: int) -> Optional[int]:
        p = self._parent[n]
        if p is None:
            return None
        sibs = self._children[p]
        i = sibs.index(n)
        return sibs[i + 1] if i + 1 < len(sibs) else None

    def left_neighbor(self, n: int) -> Optional[int]:
        p = self._parent[n]
        if p is None:
            return None
        sibs = self._children[p]
        i = sibs.index(n)
        return sibs[i - 1] if i > 0 else None

    def ancestors(self, n: int) -> tuple[int, ...]:
        """Strict ancestors, nearest first."""
        out = []
        p = self._parent[n]
        while p is not None:
            out.append(p)
            p = self._parent[p]
        return tuple(out)

    def is_leaf(self, n: int) -> bool:
        return isinstance(self.nodes[n].kind, Leaf)

    def leaves(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if isinstance(n.kind, Leaf))

    def subtree(self, n: int) -> Iterator[int]:
        yield n
        for c in self._children[n]:
            yield from self.subtree(c)

    def bb_decl(self, name: str) -> Optional[BlackboardDecl]:
        for d in self.blackboard:
            if d.name == name:
                return d
        return None

    def with_blackboard(self, blackboard: Seq[BlackboardDecl]) -> "Tree":
        return Tree(self.nodes, self._children, blackboard)


# ---------------------------------------------------------------------------
# Builder
# ---------------------------------------------------------------------------

@dataclass
class Draft:
    kind: NodeKind
    name: Optional[str]
    children: list["Draft"] = field(default_factory=list)


def leaf(
    name: Optional[str] = None,
    statuses: Union[str, Seq[Status]] = "SFR",
    effects: Seq[BlackboardEffect] = (),
    profile_name: Optional[str] = None,
) -> Draft:
    sts = parse_statuses(statuses)
    pname = profile_name or "leaf_" + "".join(
        s.letter.lower() for s in RETURNABLE if s in sts
    )
    return Draft(Leaf(LeafProfile(pname, sts, tuple(effects))), name)


def selector(name: Optional[str], *children: Draft, memory: bool = False) -> Draft:
    return Draft(Selector(memory), name, list(children))


def sequence(name: Optional[str], *children: Draft, memory: bool = False) -> Draft:
    return Draft(Sequence(memory), name, list(children))


def parallel(
    name: Optional[str],
    *children: Draft,
    threshold: Union[int, str] = "all",
    synchronized: bool = False,
    flavor: ParallelFlavor = ParallelFlavor.PYTREES,
) -> Draft:
    return Draft(
        Parallel(ParallelPolicy(threshold, flavor), synchronized), name, list(children)
    )


def statusmap(name: Optional[str], child: Draft, mapping: Union[str, Mapping[Status, Status]]) -> Draft:
    if isinstance(mapping, str):
        kind = StatusMap.of(STATUS_MAP_SHORTHANDS[mapping], mapping)
    else:
        label = ""
        for lbl, m in STATUS_MAP_SHORTHANDS.items():
            if m == dict(mapping):
                label = lbl
                break
        kind = StatusMap.of(mapping, label)
    return Draft(Decorator(kind), name, [child])


def inverter(name: Optional[str], child: Draft) -> Draft:
    return statusmap(name, child, "inverter")


def oneshot(name: Optional[str], child: Draft) -> Draft:
    return Draft(Decorator(OneShot()), name, [child])


def _kind_word(kind: NodeKind) -> str:
    if isinstance(kind, Selector):
        return "selector"
    if isinstance(kind, Sequence):
        return "sequence"
    if isinstance(kind, Parallel):
        return "parallel"
    if isinstance(kind, Decorator):
        return "oneshot" if isinstance(kind.kind, OneShot) else (kind.kind.label or "statusmap")
    return "leaf"


def build(root: Draft, blackboard: Seq[BlackboardDecl] = ()) -> Tree:
    """Assigns pre-order ids; unnamed nodes get `<kindword><id>` names."""
    nodes: list[Node] = []
    children: list[list[int]] = []

    def walk(d: Draft) -> int:
        nid = len(nodes)
        name = d.name if d.name is not None else f"{_kind_word(d.kind)}{nid}"
        nodes.append(Node(nid, d.kind, name))
        children.append([])
        for c in d.children:
            children[nid].append(walk(c))
        return nid

    walk(root)
    return Tree(nodes, children, blackboard)


def to_draft(tree: Tree, n: Optional[int] = None) -> Draft:
    n = tree.root if n is None else n
    return Draft(tree.kind(n), tree.name(n), [to_draft(tree, c) for c in tree.children(n)])


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    node: Optional[int]
    name: str
    rule: str
    message: str

    def __str__(self) -> str:
        where = self.name if self.name else "<tree>"
        return f"{where}: {self.rule}: {self.message}"


_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


def validate(tree: Tree) -> list[Violation]:
    """Structural and typing checks; returns one violation per broken rule."""
    out: list[Violation] = []

    def bad(n: Optional[int], rule: str, msg: str) -> None:
        out.append(Violation(n, tree.name(n) if n is not None else "", rule, msg))

    roots = [n.id for n in tree.nodes if tree.parent(n.id) is None]
    if roots != [0]:
        bad(None, "single root", f"expected node 0 as the only root, found {roots}")
    for n in tree.nodes:
        p = tree.parent(n.id)
        if p is not None and p >= n.id:
            bad(n.id, "preorder", f"parent {p} does not precede child {n.id}")
        for c in tree.children(n.id):
            if not (0 <= c < len(tree)):
                bad(n.id, "parent mismatch", f"child id {c} out of range")
            elif tree.parent(c) != n.id:
                bad(n.id, "parent mismatch", f"child {c} has parent {tree.parent(c)}")

    seen: dict[str, int] = {}
    for n in tree.nodes:
        if not _NAME_RE.match(n.name):
            bad(n.id, "name format", f"{n.name!r} is not lower_snake")
        if n.name in seen:
            bad(n.id, "duplicate name", f"{n.name!r} already used by node {seen[n.name]}")
        else:
            seen[n.name] = n.id

    bb_names: dict[str, BlackboardDecl] = {}
    for d in tree.blackboard:
        if d.name in bb_names:
            out.append(Violation(None, d.name, "duplicate blackboard variable", d.name))
            continue
        bb_names[d.name] = d
        if isinstance(d.domain, IntDomain) and d.domain.lo > d.domain.hi:
            out.append(Violation(None, d.name, "empty domain", f"int[{d.domain.lo},{d.domain.hi}]"))
        elif isinstance(d.domain, EnumDomain) and not d.domain.values:
            out.append(Violation(None, d.name, "empty domain", "enum with no values"))
        elif not domain_contains(d.domain, d.initial):
            out.append(Violation(None, d.name, "initial out of domain", repr(d.initial)))

    for n in tree.nodes:
        kids = tree.children(n.id)
        kind = n.kind
        if isinstance(kind, Leaf):
            if kids:
                bad(n.id, "leaf arity", f"leaf has {len(kids)} children")
            if not kind.profile.statuses:
                bad(n.id, "empty status domain", "leaf must be able to return something")
            if INVALID in kind.profile.statuses:
                bad(n.id, "status domain invalid", "Invalid is not returnable")
            for e in kind.profile.effects:
                decl = bb_names.get(e.variable)
                if decl is None:
                    bad(n.id, "undeclared blackboard variable", e.variable)
                    continue
                if isinstance(e.update, SetConstant) and not domain_contains(decl.domain, e.update.value):
                    bad(n.id, "constant out of domain", f"{e.variable} := {e.update.value!r}")
                if isinstance(e.update, SetFromStatus):
                    m = e.update.as_dict()
                    for s in kind.profile.statuses:
                        if s not in m:
                            bad(n.id, "effect map not total", f"no value for status {s.letter}")
                    for v in m.values():
                        if not domain_contains(decl.domain, v):
                            bad(n.id, "map value out of domain", f"{e.variable} <- {v!r}")
        elif isinstance(kind, Decorator):
            if len(kids) != 1:
                bad(n.id, "decorator arity", f"decorator has {len(kids)} children, wants 1")
            if isinstance(kind.kind, StatusMap):
                m = kind.kind.as_dict()
                for s in RETURNABLE:
                    if s not in m:
                        bad(n.id, "status map not total", f"no mapping for {s.letter}")
                if INVALID in m.values() or INVALID in m:
                    bad(n.id, "status map invalid", "Invalid may not appear in a status map")
        else:
            if not kids:
                bad(n.id, "composite arity", "composite has no children")
            if isinstance(kind, Parallel) and kids:
                m = kind.policy.resolve(len(kids))
                if not (1 <= m <= len(kids)):
                    bad(n.id, "threshold out of range",
                        f"threshold {m} with {len(kids)} children")
    return out


# ---------------------------------------------------------------------------
# Binarization
# ---------------------------------------------------------------------------

class BinarizeError(TreeError):
    pass


def binarize(tree: Tree, for_btc: bool = False) -> Tree:
    """Rewrites every k-ary composite (k > 2) into a right-leaning chain of
    binary copies of the same kind and policy. Parallel thresholds decompose
    only for the one/all policies; anything in between is rejected because no
    exact binary self-composition exists. With for_btc, parallels must carry
    the threshold flavor (mismatches are reported, never converted).
    """
    used = {n.name for n in tree.nodes}

    def fresh(base: str, i: int) -> str:
        cand = f"{base}__{i}"
        while cand in used:
            cand += "_"
        used.add(cand)
        return cand

    def layer_policy(kind: Parallel, arity: int) -> ParallelPolicy:
        pol = kind.policy
        if for_btc and pol.flavor is not ParallelFlavor.THRESHOLD:
            raise BinarizeError(
                "parallel carries the pytrees failure flavor; the btc path needs the threshold flavor"
            )
        m = pol.resolve(arity)
        if m == 1:
            return ParallelPolicy("one", pol.flavor)
        if m == arity:
            return ParallelPolicy("all", pol.flavor)
        raise BinarizeError(
            f"threshold {m} of {arity} has no exact binary decomposition"
        )

    def walk(n: int) -> Draft:
        kind = tree.kind(n)
        kids = tree.children(n)
        if isinstance(kind, Leaf):
            return Draft(kind, tree.name(n))
        if isinstance(kind, Decorator):
            return Draft(kind, tree.name(n), [walk(kids[0])])
        if len(kids) < 2:
            raise BinarizeError(f"composite {tree.name(n)!r} has arity {len(kids)}")
        if isinstance(kind, Parallel):
            if for_btc and kind.synchronized:
                raise BinarizeError("synchronized parallel is not supported on the btc path")
            kind = Parallel(layer_policy(kind, len(kids)), kind.synchronized)
        drafts = [walk(c) for c in kids]
        # right-leaning chain: copy i pairs child i with the rest; the
        # outermost copy keeps the original name
        node = Draft(kind, fresh(tree.name(n), len(drafts) - 1) if len(drafts) > 2
                     else tree.name(n), [drafts[-2], drafts[-1]])
        for i in range(len(drafts) - 2, 0, -1):
            nm = tree.name(n) if i == 1 else fresh(tree.name(n), i)
            node = Draft(kind, nm, [drafts[i - 1], node])
        return node

    return build(walk(tree.root), tree.blackboard)


# ---------------------------------------------------------------------------
# Memory resume domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResumeDomain:
    node: int
    resume_leaves: tuple[int, ...]
    cardinality: int
    lazy_cardinality: int


def _has_memory(kind: NodeKind) -> bool:
    if isinstance(kind, (Selector, Sequence)):
        return kind.memory
    if isinstance(kind, Parallel):
        return kind.synchronized
    return False


def memory_resume_domain(tree: Tree, node: int) -> ResumeDomain:
    """Minimized set of resume configurations for the subtree at `node`: one
    per leaf descendant that can return Running (the implicit "no resume"
    state is tracked separately and not counted). The lazy alternative, one
    integer per memory composite ranging over its children, multiplies out
    instead.
    """
    if not _has_memory(tree.kind(node)):
        raise TreeError(f"node {tree.name(node)!r} is not a composite with memory")
    resume = tuple(
        n for n in tree.subtree(node)
        if tree.is_leaf(n) and RUNNING in tree.kind(n).profile.statuses  # type: ignore[union-attr]
    )
    lazy = 1
    for n in tree.subtree(node):
        if _has_memory(tree.kind(n)):
            lazy *= len(tree.children(n))
    return ResumeDomain(node, resume, len(resume), lazy)
