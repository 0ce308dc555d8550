"""Emission plans: the declaration-level form of each model-checker encoding.

A plan is what the SMV text will say, one step short of rendering: module
bodies made of typed declarations over a small expression language, one
instance per tree node, and a handful of main-scope declarations for the
cross-cutting wiring (activation arguments, forgetting signals, the tick
cursor, the blackboard). The same plan drives both the text emitter and the
plan interpreter, so the emitted semantics stay testable without a model
checker in the loop.

Whole-tree plans come in two layouts. The v2 layout keeps every derived
quantity a defined expression, so resolving the root's status walks a
definition chain that grows with the tree. The v3 layout turns enter gates
and non-leaf statuses into constraint-defined variables, which caps the
definition depth at a small constant; dependency_depth measures exactly
that difference.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    SUCCESS, FAILURE, RUNNING, INVALID,
    BoolDomain, IntDomain, EnumDomain,
    OnStatus, Nondet, SetConstant, SetFromStatus,
    Selector, Sequence, Parallel, Decorator, OneShot, Leaf,
    ParallelFlavor, Tree, TreeError, validate,
)
from .interp import SemanticsFlavor
from .btc_encoding import check_btc_compatible
from .leaf_encoding import _continue_status, _has_skip_flags


class PlanError(Exception):
    pass


STATUS_WORDS = ("invalid", "running", "success", "failure")
WORD_OF = {INVALID: "invalid", RUNNING: "running",
           SUCCESS: "success", FAILURE: "failure"}
STATUS_OF = {w: s for s, w in WORD_OF.items()}


# --- types -----------------------------------------------------------------

@dataclass(frozen=True)
class BoolType:
    pass


@dataclass(frozen=True)
class RangeType:
    lo: int
    hi: int


@dataclass(frozen=True)
class SymType:
    values: tuple


@dataclass(frozen=True)
class IntSetType:
    values: tuple


def type_values(t):
    if isinstance(t, BoolType):
        return (False, True)
    if isinstance(t, RangeType):
        return tuple(range(t.lo, t.hi + 1))
    return t.values


def domain_type(domain):
    if isinstance(domain, BoolDomain):
        return BoolType()
    if isinstance(domain, IntDomain):
        return RangeType(domain.lo, domain.hi)
    assert isinstance(domain, EnumDomain)
    return SymType(tuple(domain.values))


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: object


@dataclass(frozen=True)
class LocalRef:
    name: str


@dataclass(frozen=True)
class ParamRef:
    name: str


@dataclass(frozen=True)
class MainRef:
    name: str


@dataclass(frozen=True)
class MemberRef:
    instance: str
    name: str


@dataclass(frozen=True)
class Not:
    item: object


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Eq:
    left: object
    right: object


@dataclass(frozen=True)
class Ge:
    left: object
    right: object


@dataclass(frozen=True)
class Gt:
    left: object
    right: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Count:
    items: tuple


@dataclass(frozen=True)
class Case:
    """Branches in priority order; the last condition must be Const(True)."""
    branches: tuple

    def __post_init__(self):
        if not self.branches or self.branches[-1][0] != Const(True):
            raise PlanError("case must end with a TRUE branch")


def conj(*items):
    items = tuple(i for i in items if i != Const(True))
    if any(i == Const(False) for i in items):
        return Const(False)
    if not items:
        return Const(True)
    return items[0] if len(items) == 1 else And(items)


def disj(*items):
    items = tuple(i for i in items if i != Const(False))
    if any(i == Const(True) for i in items):
        return Const(True)
    if not items:
        return Const(False)
    return items[0] if len(items) == 1 else Or(items)


# --- declarations ----------------------------------------------------------

@dataclass(frozen=True)
class InputDecl:
    name: str
    type: object


@dataclass(frozen=True)
class StateDecl:
    name: str
    type: object
    init: Const
    next: object


@dataclass(frozen=True)
class DefineDecl:
    name: str
    expr: object


@dataclass(frozen=True)
class ChainDecl:
    """A variable pinned to an expression by an invariant constraint."""
    name: str
    type: object
    expr: object


@dataclass(frozen=True)
class ModuleDef:
    key: str
    params: tuple
    decls: tuple

    def decl(self, name):
        for d in self.decls:
            if d.name == name:
                return d
        return None


@dataclass(frozen=True)
class Instance:
    name: str
    module: str
    args: tuple


@dataclass(frozen=True)
class PlanMeta:
    #: child node name -> (instance holding the flag, flag decl name)
    skip_vars: tuple = ()
    #: leaf name -> (instance, input decl name)
    leaf_inputs: tuple = ()
    #: blackboard variable name -> main decl name
    bb_vars: tuple = ()
    #: names of main input decls feeding nondeterministic effects,
    #: keyed (leaf, variable) -> main decl name
    nd_inputs: tuple = ()
    #: step plans: cursor decl name and stop id -> node name pairs
    cursor: Optional[str] = None
    stops: tuple = ()


@dataclass(frozen=True)
class Plan:
    encoding: str
    granularity: str  # "tick" or "step"
    flavor: SemanticsFlavor
    tree: Tree
    modules: tuple
    instances: tuple
    main_decls: tuple
    meta: PlanMeta

    def module(self, key):
        for m in self.modules:
            if m.key == key:
                return m
        raise PlanError(f"no module {key!r}")

    def instance(self, name):
        for i in self.instances:
            if i.name == name:
                return i
        raise PlanError(f"no instance {name!r}")

    def main_decl(self, name):
        for d in self.main_decls:
            if d.name == name:
                return d
        return None


# --- shared builder pieces ---------------------------------------------------

def _status_type():
    return SymType(STATUS_WORDS)


def _leaf_domain_word(profile):
    return "".join(l.lower() for l in profile.status_letters())


def _leaf_input_type(profile):
    values = tuple(w for w in ("running", "success", "failure")
                   if STATUS_OF[w] in profile.statuses)
    return SymType(values)


def _flag_next(cont_word, child_status, resolved, forget):
    """Clear on resolution or forgetting, set on the continue status, hold."""
    return Case((
        (disj(resolved, forget), Const(False)),
        (Eq(child_status, Const(cont_word)), Const(True)),
        (Const(True), LocalRef("_self_")),
    ))


def _with_self(case, name):
    branches = tuple(
        (c, LocalRef(name) if v == LocalRef("_self_") else v)
        for c, v in case.branches)
    return Case(branches)


def _resolved_expr():
    return disj(Eq(LocalRef("status"), Const("success")),
                Eq(LocalRef("status"), Const("failure")))


def _composite_status_case(kind, arity):
    bail = "success" if isinstance(kind, Selector) else "failure"
    cont = WORD_OF[_continue_status(kind)]
    any_bail = disj(*(Eq(ParamRef(f"c{i}_status"), Const(bail))
                      for i in range(1, arity + 1)))
    any_running = disj(*(Eq(ParamRef(f"c{i}_status"), Const("running"))
                         for i in range(1, arity + 1)))
    return Case((
        (Not(LocalRef("active")), Const("invalid")),
        (any_bail, Const(bail)),
        (any_running, Const("running")),
        (Const(True), Const(cont)),
    ))


def _parallel_status_case(kind, arity):
    m = kind.policy.resolve(arity)
    if kind.policy.flavor is ParallelFlavor.PYTREES:
        verdicts = (
            (Gt(LocalRef("fc"), Const(0)), Const("failure")),
            (Ge(LocalRef("sc"), Const(m)), Const("success")),
        )
    else:
        verdicts = (
            (Ge(LocalRef("sc"), Const(m)), Const("success")),
            (Gt(LocalRef("fc"), Const(arity - m)), Const("failure")),
        )
    return Case((
        (Not(LocalRef("active")), Const("invalid")),
        *verdicts,
        (Const(True), Const("running")),
    ))


def _map_images(kind):
    m = kind.as_dict()
    return {WORD_OF[s]: WORD_OF[m[s]] for s in (SUCCESS, FAILURE, RUNNING)}


def _parallel_key_bits(kind):
    t = kind.policy.threshold
    tbit = t if isinstance(t, str) else f"t{t}"
    return tbit, kind.policy.flavor.value


# --- whole-tree plans --------------------------------------------------------

def _total_leaf_module(profile, variant):
    key = f"Leaf_{_leaf_domain_word(profile)}"
    decls = (
        InputDecl("input", _leaf_input_type(profile)),
        DefineDecl("active", ParamRef("act")),
        DefineDecl("status", Case((
            (LocalRef("active"), LocalRef("input")),
            (Const(True), Const("invalid")),
        ))),
    )
    return ModuleDef(key, ("act",), decls)


def _total_chain_module(kind, arity, variant, flavor):
    """Selector or sequence: skip-transparent enter gates over the children."""
    mem = kind.memory
    word = "Sel" if isinstance(kind, Selector) else "Seq"
    key = f"{word}{'Mem' if mem else ''}{arity}"
    cont = WORD_OF[_continue_status(kind)]
    params = ("act",) + (("forget",) if mem else ()) + tuple(
        f"c{i}_status" for i in range(1, arity + 1))
    chain = variant == "v3"

    decls = [DefineDecl("active", ParamRef("act"))]
    if mem:
        for i in range(1, arity + 1):
            nxt = _with_self(_flag_next(
                cont, ParamRef(f"c{i}_status"),
                LocalRef("resolved"), ParamRef("forget")), f"skip{i}")
            decls.append(StateDecl(f"skip{i}", BoolType(), Const(False), nxt))
    for i in range(1, arity + 1):
        if i == 1:
            gate = LocalRef("active")
        else:
            stepped = conj(LocalRef(f"act{i - 1}"),
                           Eq(ParamRef(f"c{i - 1}_status"), Const(cont)))
            if mem:
                gate = disj(conj(LocalRef(f"skip{i - 1}"),
                                 LocalRef(f"enter{i - 1}")), stepped)
            else:
                gate = stepped
        if chain:
            decls.append(ChainDecl(f"enter{i}", BoolType(), gate))
        else:
            decls.append(DefineDecl(f"enter{i}", gate))
        act = conj(LocalRef(f"enter{i}"),
                   Not(LocalRef(f"skip{i}")) if mem else Const(True))
        decls.append(DefineDecl(f"act{i}", act))
    status = _composite_status_case(kind, arity)
    if chain:
        decls.append(ChainDecl("st", _status_type(), status))
        decls.append(DefineDecl("status", LocalRef("st")))
    else:
        decls.append(DefineDecl("status", status))
    decls.append(DefineDecl("resolved", _resolved_expr()))
    return ModuleDef(key, params, tuple(decls))


def _total_parallel_module(kind, arity, variant, flavor):
    sync = kind.synchronized
    tbit, fbit = _parallel_key_bits(kind)
    key = f"Par{'Sync' if sync else ''}{arity}_{tbit}_{fbit}"
    params = ("act",) + (("forget",) if sync else ()) + tuple(
        f"c{i}_status" for i in range(1, arity + 1))
    chain = variant == "v3"

    decls = [DefineDecl("active", ParamRef("act"))]
    if sync:
        for i in range(1, arity + 1):
            nxt = _with_self(_flag_next(
                "success", ParamRef(f"c{i}_status"),
                LocalRef("resolved"), ParamRef("forget")), f"skip{i}")
            decls.append(StateDecl(f"skip{i}", BoolType(), Const(False), nxt))
    for i in range(1, arity + 1):
        act = conj(LocalRef("active"),
                   Not(LocalRef(f"skip{i}")) if sync else Const(True))
        decls.append(DefineDecl(f"act{i}", act))
    succ = [disj(Eq(ParamRef(f"c{i}_status"), Const("success")),
                 LocalRef(f"skip{i}") if sync else Const(False))
            for i in range(1, arity + 1)]
    decls.append(DefineDecl("sc", Count(tuple(succ))))
    decls.append(DefineDecl("fc", Count(tuple(
        Eq(ParamRef(f"c{i}_status"), Const("failure"))
        for i in range(1, arity + 1)))))
    status = _parallel_status_case(kind, arity)
    if chain:
        decls.append(ChainDecl("st", _status_type(), status))
        decls.append(DefineDecl("status", LocalRef("st")))
    else:
        decls.append(DefineDecl("status", status))
    decls.append(DefineDecl("resolved", _resolved_expr()))
    return ModuleDef(key, params, tuple(decls))


def _total_map_module(kind, variant):
    img = _map_images(kind)
    key = f"Map_{img['success'][0]}{img['failure'][0]}{img['running'][0]}"
    status = Case((
        (Not(LocalRef("active")), Const("invalid")),
        (Eq(ParamRef("c_status"), Const("success")), Const(img["success"])),
        (Eq(ParamRef("c_status"), Const("failure")), Const(img["failure"])),
        (Const(True), Const(img["running"])),
    ))
    decls = [
        DefineDecl("active", ParamRef("act")),
        DefineDecl("act1", LocalRef("active")),
    ]
    if variant == "v3":
        decls.append(ChainDecl("st", _status_type(), status))
        decls.append(DefineDecl("status", LocalRef("st")))
    else:
        decls.append(DefineDecl("status", status))
    return ModuleDef(key, ("act", "c_status"), tuple(decls))


def _total_oneshot_module(variant):
    status = Case((
        (Not(LocalRef("active")), Const("invalid")),
        (Eq(LocalRef("stored"), Const("success")), Const("success")),
        (Eq(LocalRef("stored"), Const("failure")), Const("failure")),
        (Const(True), ParamRef("c_status")),
    ))
    decls = [
        DefineDecl("active", ParamRef("act")),
        StateDecl("stored", SymType(("none", "success", "failure")),
                  Const("none"), Case((
                      (Not(Eq(LocalRef("stored"), Const("none"))),
                       LocalRef("stored")),
                      (conj(LocalRef("active"),
                            Eq(ParamRef("c_status"), Const("success"))),
                       Const("success")),
                      (conj(LocalRef("active"),
                            Eq(ParamRef("c_status"), Const("failure"))),
                       Const("failure")),
                      (Const(True), Const("none")),
                  ))),
        DefineDecl("act1", conj(LocalRef("active"),
                                Eq(LocalRef("stored"), Const("none")))),
    ]
    if variant == "v3":
        decls.append(ChainDecl("st", _status_type(), status))
        decls.append(DefineDecl("status", LocalRef("st")))
    else:
        decls.append(DefineDecl("status", status))
    return ModuleDef("Once", ("act", "c_status"), tuple(decls))


def _forget_expr(tree, n, flavor):
    if flavor is not SemanticsFlavor.PYTREES:
        return Const(False)
    parts = []
    for a in tree.ancestors(n):
        name = tree.name(a)
        parts.append(Eq(MemberRef(name, "status"), Const("success")))
        parts.append(Eq(MemberRef(name, "status"), Const("failure")))
    return disj(*parts)


def _blackboard_decls(tree, trigger_of, prefix_scope):
    """Shared blackboard wiring: one state per variable, choices for Nondet.

    trigger_of(leaf_name, trigger) must yield the firing condition in main
    scope. Later writers win, so branches are laid down in reverse execution
    order (preorder position, then declaration order within a leaf).
    """
    decls = []
    bb_vars = []
    nd_inputs = []
    writers = {}
    for n in tree.leaves():
        profile = tree.kind(n).profile
        for idx, e in enumerate(profile.effects):
            writers.setdefault(e.variable, []).append((n, idx, e))
    for decl in tree.blackboard:
        main_name = f"bb_{decl.name}"
        bb_vars.append((decl.name, main_name))
        t = domain_type(decl.domain)
        branches = []
        for n, idx, e in sorted(
                writers.get(decl.name, ()), key=lambda w: (-w[0], -w[1])):
            leaf_name = tree.name(n)
            cond = trigger_of(leaf_name, e.trigger)
            if isinstance(e.update, SetConstant):
                branches.append((cond, Const(e.update.value)))
            elif isinstance(e.update, SetFromStatus):
                m = e.update.as_dict()
                for s in (SUCCESS, FAILURE, RUNNING):
                    if s in tree.kind(n).profile.statuses:
                        branches.append((
                            conj(cond, Eq(MemberRef(leaf_name, "status"),
                                          Const(WORD_OF[s]))),
                            Const(m[s])))
            else:
                assert isinstance(e.update, Nondet)
                choice = f"bb_{decl.name}_nd_{leaf_name}"
                if choice not in (d.name for d in decls):
                    decls.append(InputDecl(choice, t))
                    nd_inputs.append(((leaf_name, decl.name), choice))
                branches.append((cond, MainRef(choice)))
        branches.append((Const(True), MainRef(main_name)))
        decls.append(StateDecl(main_name, t, Const(decl.initial),
                               Case(tuple(branches))))
    return decls, tuple(bb_vars), tuple(nd_inputs)


def build_total_plan(
    tree: Tree,
    variant: str = "v2",
    flavor: SemanticsFlavor = SemanticsFlavor.PYTREES,
) -> Plan:
    if variant not in ("v2", "v3"):
        raise PlanError(f"unknown layout {variant!r}")
    problems = validate(tree)
    if problems:
        raise TreeError(
            "invalid tree: " + "; ".join(str(v) for v in problems))

    modules: dict[str, ModuleDef] = {}
    instances = []
    main_decls = []
    skip_vars = []
    leaf_inputs = []

    def register(mod):
        if mod.key not in modules:
            modules[mod.key] = mod
        return mod.key

    def act_arg(n):
        p = tree.parent(n)
        if p is None:
            return Const(True)
        i = tree.child_index(n) + 1
        return MemberRef(tree.name(p), f"act{i}")

    def forget_arg(n):
        expr = _forget_expr(tree, n, flavor)
        if expr == Const(False):
            return Const(False)
        name = f"{tree.name(n)}_forget"
        main_decls.append(DefineDecl(name, expr))
        return MainRef(name)

    for n in range(len(tree)):
        kind = tree.kind(n)
        name = tree.name(n)
        kids = tree.children(n)
        child_statuses = tuple(
            MemberRef(tree.name(c), "status") for c in kids)
        if isinstance(kind, Leaf):
            key = register(_total_leaf_module(kind.profile, variant))
            instances.append(Instance(name, key, (act_arg(n),)))
            leaf_inputs.append((name, (name, "input")))
        elif isinstance(kind, Decorator):
            if isinstance(kind.kind, OneShot):
                key = register(_total_oneshot_module(variant))
            else:
                key = register(_total_map_module(kind.kind, variant))
            instances.append(Instance(
                name, key, (act_arg(n),) + child_statuses))
        elif isinstance(kind, (Selector, Sequence)):
            key = register(
                _total_chain_module(kind, len(kids), variant, flavor))
            args = (act_arg(n),)
            if kind.memory:
                args += (forget_arg(n),)
                for i, c in enumerate(kids, start=1):
                    skip_vars.append((tree.name(c), (name, f"skip{i}")))
            instances.append(Instance(name, key, args + child_statuses))
        else:
            assert isinstance(kind, Parallel)
            key = register(
                _total_parallel_module(kind, len(kids), variant, flavor))
            args = (act_arg(n),)
            if kind.synchronized:
                args += (forget_arg(n),)
                for i, c in enumerate(kids, start=1):
                    skip_vars.append((tree.name(c), (name, f"skip{i}")))
            instances.append(Instance(name, key, args + child_statuses))

    def tick_trigger(leaf_name, trigger):
        if isinstance(trigger, OnStatus):
            return Eq(MemberRef(leaf_name, "status"),
                      Const(WORD_OF[trigger.status]))
        return MemberRef(leaf_name, "active")

    bb_decls, bb_vars, nd_inputs = _blackboard_decls(
        tree, tick_trigger, None)
    main_decls.extend(bb_decls)

    return Plan(
        encoding=f"total-{variant}",
        granularity="tick",
        flavor=flavor,
        tree=tree,
        modules=tuple(modules.values()),
        instances=tuple(instances),
        main_decls=tuple(main_decls),
        meta=PlanMeta(
            skip_vars=tuple(skip_vars),
            leaf_inputs=tuple(leaf_inputs),
            bb_vars=bb_vars,
            nd_inputs=nd_inputs,
        ),
    )


# --- binary plans ------------------------------------------------------------

def _btc_leaf_module(profile):
    key = f"BtcLeaf_{_leaf_domain_word(profile)}"
    decls = (
        InputDecl("input", _leaf_input_type(profile)),
        DefineDecl("active", ParamRef("act")),
        DefineDecl("enable", ParamRef("act")),
        DefineDecl("status", Case((
            (LocalRef("active"), LocalRef("input")),
            (Const(True), Const("invalid")),
        ))),
    )
    return ModuleDef(key, ("act",), decls)


def _btc_chain_module(kind):
    mem = kind.memory
    word = "Sel" if isinstance(kind, Selector) else "Seq"
    key = f"Btc{word}{'Mem' if mem else ''}"
    cont = WORD_OF[_continue_status(kind)]
    bail = "success" if isinstance(kind, Selector) else "failure"

    decls = [DefineDecl("active", ParamRef("act"))]
    if mem:
        decls.append(StateDecl(
            "skip1", BoolType(), Const(False),
            _with_self(_flag_next(cont, ParamRef("c1_status"),
                                  LocalRef("resolved"), Const(False)),
                       "skip1")))
        decls.append(DefineDecl(
            "act1", conj(LocalRef("active"), Not(LocalRef("skip1")))))
        decls.append(DefineDecl("eff1", Case((
            (conj(LocalRef("skip1"), LocalRef("active")), Const(cont)),
            (Const(True), ParamRef("c1_status")),
        ))))
    else:
        decls.append(DefineDecl("act1", LocalRef("active")))
        decls.append(DefineDecl("eff1", ParamRef("c1_status")))
    decls.append(DefineDecl(
        "act2", conj(LocalRef("active"), Eq(LocalRef("eff1"), Const(cont)))))
    decls.append(DefineDecl("status", Case((
        (Not(LocalRef("active")), Const("invalid")),
        (Eq(LocalRef("eff1"), Const(bail)), Const(bail)),
        (Eq(LocalRef("eff1"), Const("running")), Const("running")),
        (Const(True), ParamRef("c2_status")),
    ))))
    decls.append(DefineDecl("resolved", _resolved_expr()))
    return ModuleDef(key, ("act", "c1_status", "c2_status"), tuple(decls))


def _btc_parallel_module(kind):
    m = kind.policy.resolve(2)
    key = f"BtcPar_{'one' if m == 1 else 'all'}"
    decls = (
        DefineDecl("active", ParamRef("act")),
        DefineDecl("act1", LocalRef("active")),
        DefineDecl("act2", LocalRef("active")),
        DefineDecl("sc", Count((
            Eq(ParamRef("c1_status"), Const("success")),
            Eq(ParamRef("c2_status"), Const("success"))))),
        DefineDecl("fc", Count((
            Eq(ParamRef("c1_status"), Const("failure")),
            Eq(ParamRef("c2_status"), Const("failure"))))),
        DefineDecl("status", Case((
            (Not(LocalRef("active")), Const("invalid")),
            (Ge(LocalRef("sc"), Const(m)), Const("success")),
            (Gt(LocalRef("fc"), Const(2 - m)), Const("failure")),
            (Const(True), Const("running")),
        ))),
    )
    return ModuleDef(key, ("act", "c1_status", "c2_status"), decls)


def _btc_map_module(kind):
    base = _total_map_module(kind, "v2")
    return ModuleDef("Btc" + base.key, base.params, base.decls)


def _btc_oneshot_module():
    base = _total_oneshot_module("v2")
    return ModuleDef("BtcOnce", base.params, base.decls)


def build_btc_plan(tree: Tree) -> Plan:
    problems = validate(tree)
    if problems:
        raise TreeError(
            "invalid tree: " + "; ".join(str(v) for v in problems))
    check_btc_compatible(tree)

    modules: dict[str, ModuleDef] = {}
    instances = []
    skip_vars = []
    leaf_inputs = []

    def register(mod):
        if mod.key not in modules:
            modules[mod.key] = mod
        return mod.key

    def act_arg(n):
        p = tree.parent(n)
        if p is None:
            return Const(True)
        return MemberRef(tree.name(p), f"act{tree.child_index(n) + 1}")

    for n in range(len(tree)):
        kind = tree.kind(n)
        name = tree.name(n)
        child_statuses = tuple(
            MemberRef(tree.name(c), "status") for c in tree.children(n))
        if isinstance(kind, Leaf):
            key = register(_btc_leaf_module(kind.profile))
            leaf_inputs.append((name, (name, "input")))
        elif isinstance(kind, Decorator):
            key = register(_btc_oneshot_module()
                           if isinstance(kind.kind, OneShot)
                           else _btc_map_module(kind.kind))
        elif isinstance(kind, (Selector, Sequence)):
            key = register(_btc_chain_module(kind))
            if kind.memory:
                skip_vars.append(
                    (tree.name(tree.first_child(n)), (name, "skip1")))
        else:
            key = register(_btc_parallel_module(kind))
        instances.append(Instance(name, key, (act_arg(n),) + child_statuses))

    return Plan(
        encoding="btc",
        granularity="tick",
        flavor=SemanticsFlavor.BTCOMPILER,
        tree=tree,
        modules=tuple(modules.values()),
        instances=tuple(instances),
        main_decls=(),
        meta=PlanMeta(
            skip_vars=tuple(skip_vars),
            leaf_inputs=tuple(leaf_inputs),
        ),
    )


# --- stepping plans ----------------------------------------------------------

def _step_leaf_module(profile):
    key = f"StepLeaf_{_leaf_domain_word(profile)}"
    decls = (
        InputDecl("input", _leaf_input_type(profile)),
        DefineDecl("status", Case((
            (ParamRef("at_me"), LocalRef("input")),
            (Const(True), Const("invalid")),
        ))),
        DefineDecl("active", Not(Eq(LocalRef("status"), Const("invalid")))),
    )
    return ModuleDef(key, ("at_me",), decls)


def _step_oneshot_module():
    decls = (
        StateDecl("stored", SymType(("none", "success", "failure")),
                  Const("none"), Case((
                      (Not(Eq(LocalRef("stored"), Const("none"))),
                       LocalRef("stored")),
                      (Eq(ParamRef("c_status"), Const("success")),
                       Const("success")),
                      (Eq(ParamRef("c_status"), Const("failure")),
                       Const("failure")),
                      (Const(True), Const("none")),
                  ))),
        DefineDecl("status", Case((
            (conj(ParamRef("at_me"),
                  Eq(LocalRef("stored"), Const("success"))),
             Const("success")),
            (conj(ParamRef("at_me"),
                  Eq(LocalRef("stored"), Const("failure"))),
             Const("failure")),
            (Const(True), ParamRef("c_status")),
        ))),
        DefineDecl("active", Not(Eq(LocalRef("status"), Const("invalid")))),
    )
    return ModuleDef("StepOnce", ("at_me", "c_status"), decls)


def _step_map_module(kind):
    img = _map_images(kind)
    key = f"StepMap_{img['success'][0]}{img['failure'][0]}{img['running'][0]}"
    decls = (
        DefineDecl("status", Case((
            (Eq(ParamRef("c_status"), Const("success")),
             Const(img["success"])),
            (Eq(ParamRef("c_status"), Const("failure")),
             Const(img["failure"])),
            (Eq(ParamRef("c_status"), Const("running")),
             Const(img["running"])),
            (Const(True), Const("invalid")),
        ))),
        DefineDecl("active", Not(Eq(LocalRef("status"), Const("invalid")))),
    )
    return ModuleDef(key, ("c_status",), decls)


def _step_chain_module(kind, arity):
    mem = kind.memory
    word = "Sel" if isinstance(kind, Selector) else "Seq"
    key = f"Step{word}{'Mem' if mem else ''}{arity}"
    cont = WORD_OF[_continue_status(kind)]
    bail = "success" if isinstance(kind, Selector) else "failure"
    params = tuple(f"c{i}_status" for i in range(1, arity + 1)) + (
        ("forget",) if mem else ())

    decls = []
    if mem:
        for i in range(1, arity + 1):
            decls.append(StateDecl(
                f"skip{i}", BoolType(), Const(False),
                _with_self(_flag_next(cont, ParamRef(f"c{i}_status"),
                                      LocalRef("resolved"),
                                      ParamRef("forget")), f"skip{i}")))
    any_bail = disj(*(Eq(ParamRef(f"c{i}_status"), Const(bail))
                      for i in range(1, arity + 1)))
    any_running = disj(*(Eq(ParamRef(f"c{i}_status"), Const("running"))
                         for i in range(1, arity + 1)))
    finish = []
    for i in range(arity, 0, -1):
        later = [LocalRef(f"skip{j}") for j in range(i + 1, arity + 1)]
        if later and not mem:
            continue  # without flags only the last child can finish the run
        finish.append((
            conj(Eq(ParamRef(f"c{i}_status"), Const(cont)), *later),
            Const(cont)))
    decls.append(DefineDecl("status", Case((
        (any_bail, Const(bail)),
        (any_running, Const("running")),
        *finish,
        (Const(True), Const("invalid")),
    ))))
    decls.append(DefineDecl("active",
                            Not(Eq(LocalRef("status"), Const("invalid")))))
    decls.append(DefineDecl("resolved", _resolved_expr()))
    return ModuleDef(key, params, tuple(decls))


def _step_parallel_module(kind, arity):
    sync = kind.synchronized
    tbit, fbit = _parallel_key_bits(kind)
    key = f"StepPar{'Sync' if sync else ''}{arity}_{tbit}_{fbit}"
    m = kind.policy.resolve(arity)
    params = tuple(f"c{i}_status" for i in range(1, arity + 1)) + (
        ("forget",) if sync else ())

    decls = []
    if sync:
        for i in range(1, arity + 1):
            decls.append(StateDecl(
                f"skip{i}", BoolType(), Const(False),
                _with_self(_flag_next("success", ParamRef(f"c{i}_status"),
                                      LocalRef("resolved"),
                                      ParamRef("forget")), f"skip{i}")))
    resolved_now = [Not(Eq(ParamRef(f"c{i}_status"), Const("invalid")))
                    for i in range(1, arity + 1)]
    decls.append(StateDecl(
        "fc", RangeType(0, arity), Const(0), Case((
            (Not(Eq(LocalRef("status"), Const("invalid"))), Const(0)),
            (disj(*(Eq(ParamRef(f"c{i}_status"), Const("failure"))
                    for i in range(1, arity + 1))),
             Add(LocalRef("fc"), Const(1))),
            (Const(True), LocalRef("fc")),
        ))))
    if not sync:
        decls.append(StateDecl(
            "sc", RangeType(0, arity), Const(0), Case((
                (Not(Eq(LocalRef("status"), Const("invalid"))), Const(0)),
                (disj(*(Eq(ParamRef(f"c{i}_status"), Const("success"))
                        for i in range(1, arity + 1))),
                 Add(LocalRef("sc"), Const(1))),
                (Const(True), LocalRef("sc")),
            ))))
    # the verdict fires when the last non-skipped child resolves
    trigger_parts = []
    for i in range(1, arity + 1):
        later = [LocalRef(f"skip{j}") for j in range(i + 1, arity + 1)]
        if later and not sync:
            continue
        trigger_parts.append(conj(resolved_now[i - 1], *later))
    decls.append(DefineDecl("trigger", disj(*trigger_parts)))
    succ_now = disj(*(Eq(ParamRef(f"c{i}_status"), Const("success"))
                      for i in range(1, arity + 1)))
    if sync:
        flagged = [disj(LocalRef(f"skip{i}"),
                        Eq(ParamRef(f"c{i}_status"), Const("success")))
                   for i in range(1, arity + 1)]
        decls.append(DefineDecl("sc_now", Count(tuple(flagged))))
    else:
        decls.append(DefineDecl(
            "sc_now", Add(LocalRef("sc"), Count((succ_now,)))))
    decls.append(DefineDecl(
        "fc_now", Add(LocalRef("fc"), Count(tuple(
            Eq(ParamRef(f"c{i}_status"), Const("failure"))
            for i in range(1, arity + 1))))))
    if kind.policy.flavor is ParallelFlavor.PYTREES:
        verdicts = (
            (Gt(LocalRef("fc_now"), Const(0)), Const("failure")),
            (Ge(LocalRef("sc_now"), Const(m)), Const("success")),
        )
    else:
        verdicts = (
            (Ge(LocalRef("sc_now"), Const(m)), Const("success")),
            (Gt(LocalRef("fc_now"), Const(arity - m)), Const("failure")),
        )
    decls.append(DefineDecl("status", Case((
        (Not(LocalRef("trigger")), Const("invalid")),
        *verdicts,
        (Const(True), Const("running")),
    ))))
    decls.append(DefineDecl("active",
                            Not(Eq(LocalRef("status"), Const("invalid")))))
    decls.append(DefineDecl("resolved", _resolved_expr()))
    return ModuleDef(key, params, tuple(decls))


def build_leaf_plan(
    tree: Tree,
    flavor: SemanticsFlavor = SemanticsFlavor.PYTREES,
) -> Plan:
    problems = validate(tree)
    if problems:
        raise TreeError(
            "invalid tree: " + "; ".join(str(v) for v in problems))

    modules: dict[str, ModuleDef] = {}
    instances = []
    main_decls = []
    skip_vars = []
    leaf_inputs = []
    stops = []

    def register(mod):
        if mod.key not in modules:
            modules[mod.key] = mod
        return mod.key

    def flag_ref(n):
        """Skip flag of node n, if its parent keeps one."""
        p = tree.parent(n)
        if p is None or not _has_skip_flags(tree.kind(p)):
            return None
        return MemberRef(tree.name(p), f"skip{tree.child_index(n) + 1}")

    at_me = {}
    for n in range(len(tree)):
        kind = tree.kind(n)
        name = tree.name(n)
        if isinstance(kind, Leaf) or (
                isinstance(kind, Decorator)
                and isinstance(kind.kind, OneShot)):
            stops.append((n, name))
            at_me[n] = Eq(MainRef("active_node"), Const(n))

    for n in range(len(tree)):
        kind = tree.kind(n)
        name = tree.name(n)
        kids = tree.children(n)
        child_statuses = tuple(
            MemberRef(tree.name(c), "status") for c in kids)
        if isinstance(kind, Leaf):
            key = register(_step_leaf_module(kind.profile))
            instances.append(Instance(name, key, (at_me[n],)))
            leaf_inputs.append((name, (name, "input")))
            continue
        if isinstance(kind, Decorator):
            if isinstance(kind.kind, OneShot):
                key = register(_step_oneshot_module())
                instances.append(Instance(
                    name, key, (at_me[n],) + child_statuses))
            else:
                key = register(_step_map_module(kind.kind))
                instances.append(Instance(name, key, child_statuses))
            continue
        if isinstance(kind, (Selector, Sequence)):
            key = register(_step_chain_module(kind, len(kids)))
        else:
            key = register(_step_parallel_module(kind, len(kids)))
        args = child_statuses
        if _has_skip_flags(kind):
            expr = _forget_expr(tree, n, flavor)
            if expr == Const(False):
                args += (Const(False),)
            else:
                fname = f"{name}_forget"
                main_decls.append(DefineDecl(fname, expr))
                args += (MainRef(fname),)
            for i, c in enumerate(kids, start=1):
                skip_vars.append((tree.name(c), (name, f"skip{i}")))
        instances.append(Instance(name, key, args))

    # entry points: the first stop reached when control enters each subtree
    def entry_name(n):
        return f"{tree.name(n)}_entry"

    for n in reversed(range(len(tree))):
        kind = tree.kind(n)
        if isinstance(kind, Leaf):
            expr = Const(n)
        elif isinstance(kind, Decorator):
            child = MainRef(entry_name(tree.first_child(n)))
            if isinstance(kind.kind, OneShot):
                expr = Case((
                    (Eq(MemberRef(tree.name(n), "stored"), Const("none")),
                     child),
                    (Const(True), Const(n)),
                ))
            else:
                expr = child
        else:
            kids = tree.children(n)
            if _has_skip_flags(kind):
                branches = tuple(
                    (Not(flag_ref(c)), MainRef(entry_name(c)))
                    for c in kids[:-1])
                expr = Case(branches + (
                    (Const(True), MainRef(entry_name(kids[-1]))),))
            else:
                expr = MainRef(entry_name(kids[0]))
        main_decls.insert(0, DefineDecl(entry_name(n), expr))

    # landing spots: where the cursor goes after each stop resolves
    def after_decl(stop):
        branches = []
        c = stop
        for a in tree.ancestors(stop):
            kind = tree.kind(a)
            if isinstance(kind, Decorator):
                c = a
                continue
            kids = tree.children(a)
            idx = kids.index(c)
            later = kids[idx + 1:]
            if later:
                flagged = _has_skip_flags(kind)
                if flagged:
                    exists = disj(*(Not(flag_ref(j)) for j in later))
                    target = Case(tuple(
                        (Not(flag_ref(j)), MainRef(entry_name(j)))
                        for j in later[:-1]) + (
                        (Const(True), MainRef(entry_name(later[-1]))),))
                else:
                    exists = Const(True)
                    target = MainRef(entry_name(later[0]))
                if isinstance(kind, Parallel):
                    cond = exists
                else:
                    cont = WORD_OF[_continue_status(kind)]
                    cond = conj(
                        Eq(MemberRef(tree.name(c), "status"), Const(cont)),
                        exists)
                branches.append((cond, target))
            c = a
        branches.append((Const(True), Const(-1)))
        return DefineDecl(f"{tree.name(stop)}_after",
                          Case(tuple(branches)))

    for n, _ in stops:
        main_decls.append(after_decl(n))

    cursor_type = IntSetType((-1,) + tuple(n for n, _ in stops))
    next_cursor = Case(
        ((Eq(LocalRef("active_node"), Const(-1)),
          MainRef(entry_name(tree.root))),)
        + tuple(
            (Eq(LocalRef("active_node"), Const(n)),
             MainRef(f"{name}_after"))
            for n, name in stops)
        + ((Const(True), Const(-1)),))
    main_decls.append(StateDecl(
        "active_node", cursor_type, Const(-1), next_cursor))

    def step_trigger(leaf_name, trigger):
        if isinstance(trigger, OnStatus):
            return Eq(MemberRef(leaf_name, "status"),
                      Const(WORD_OF[trigger.status]))
        return MemberRef(leaf_name, "active")

    bb_decls, bb_vars, nd_inputs = _blackboard_decls(
        tree, step_trigger, None)
    main_decls.extend(bb_decls)

    return Plan(
        encoding="leaf",
        granularity="step",
        flavor=flavor,
        tree=tree,
        modules=tuple(modules.values()),
        instances=tuple(instances),
        main_decls=tuple(main_decls),
        meta=PlanMeta(
            skip_vars=tuple(skip_vars),
            leaf_inputs=tuple(leaf_inputs),
            bb_vars=bb_vars,
            nd_inputs=nd_inputs,
            cursor="active_node",
            stops=tuple(stops),
        ),
    )


def build_plan(tree: Tree, encoding: str,
               flavor: SemanticsFlavor = SemanticsFlavor.PYTREES) -> Plan:
    if encoding == "leaf":
        return build_leaf_plan(tree, flavor)
    if encoding == "total-v2":
        return build_total_plan(tree, "v2", flavor)
    if encoding == "total-v3":
        return build_total_plan(tree, "v3", flavor)
    if encoding == "btc":
        return build_btc_plan(tree)
    raise PlanError(f"unknown encoding {encoding!r}")


ENCODINGS = ("leaf", "total-v2", "total-v3", "btc")


# --- definition-chain depth ---------------------------------------------------

def dependency_depth(plan: Plan) -> int:
    """Longest chain of defined expressions referencing defined expressions.

    Variables (state, inputs, constraint-pinned chain variables) reset the
    count: the metric tracks how much definition unfolding stands between
    any expression and ground variables, which is the quantity the v3
    layout caps.
    """
    inst_by_name = {i.name: i for i in plan.instances}
    mod_by_key = {m.key: m for m in plan.modules}
    main = {d.name: d for d in plan.main_decls}
    memo: dict = {}
    visiting: set = set()

    def decl_depth(inst, name):
        key = (inst.name if inst else None, name)
        if key in memo:
            return memo[key]
        if key in visiting:
            raise PlanError(
                f"definition cycle through {name!r}"
                + (f" in {inst.name!r}" if inst else ""))
        visiting.add(key)
        d = (mod_by_key[inst.module].decl(name) if inst
             else main.get(name))
        if d is None:
            raise PlanError(
                f"undeclared reference {name!r}"
                + (f" in {inst.name!r}" if inst else ""))
        if isinstance(d, DefineDecl):
            out = 1 + expr_depth(inst, d.expr)
        else:
            out = 0
        visiting.discard(key)
        memo[key] = out
        return out

    def expr_depth(inst, e):
        if isinstance(e, Const):
            return 0
        if isinstance(e, LocalRef):
            return decl_depth(inst, e.name)
        if isinstance(e, MainRef):
            return decl_depth(None, e.name)
        if isinstance(e, MemberRef):
            return decl_depth(inst_by_name[e.instance], e.name)
        if isinstance(e, ParamRef):
            idx = mod_by_key[inst.module].params.index(e.name)
            return expr_depth(None, inst.args[idx])
        if isinstance(e, Not):
            return expr_depth(inst, e.item)
        if isinstance(e, (And, Or, Count)):
            return max((expr_depth(inst, i) for i in e.items), default=0)
        if isinstance(e, (Eq, Ge, Gt, Add)):
            return max(expr_depth(inst, e.left), expr_depth(inst, e.right))
        assert isinstance(e, Case)
        return max(max(expr_depth(inst, c), expr_depth(inst, v))
                   for c, v in e.branches)

    depth = 0
    for inst in plan.instances:
        for d in mod_by_key[inst.module].decls:
            if isinstance(d, DefineDecl):
                depth = max(depth, decl_depth(inst, d.name))
            elif isinstance(d, (StateDecl, ChainDecl)):
                expr = d.next if isinstance(d, StateDecl) else d.expr
                depth = max(depth, expr_depth(inst, expr))
    for d in plan.main_decls:
        if isinstance(d, DefineDecl):
            depth = max(depth, decl_depth(None, d.name))
        elif isinstance(d, (StateDecl, ChainDecl)):
            expr = d.next if isinstance(d, StateDecl) else d.expr
            depth = max(depth, expr_depth(None, expr))
    return depth
