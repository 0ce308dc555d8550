"""Emission plans: structure, definition depth, and simulator agreement."""
import pytest
from hypothesis import given, settings, strategies as st

from btverify import (
    SUCCESS, FAILURE, RUNNING, INVALID,
    BlackboardDecl, BlackboardEffect, IntDomain, EnumDomain,
    OnTick, OnStatus, Nondet, SetConstant, SetFromStatus,
    build, leaf, selector, sequence, parallel, oneshot, inverter, binarize,
)
from btverify.core import ParallelFlavor
from btverify.interp import SemanticsFlavor, TableOracle
from btverify.total_encoding import TotalMachine
from btverify.btc_encoding import BtcMachine, BtcError
from btverify.leaf_encoding import LeafMachine
from btverify.benchgen import checklist_tree
from btverify.plan import (
    Plan, PlanMeta, ModuleDef, Instance,
    ChainDecl, DefineDecl, StateDecl, InputDecl,
    Const, LocalRef, MainRef,
    build_total_plan, build_leaf_plan, build_btc_plan, build_plan,
    dependency_depth, PlanError, ENCODINGS,
)
from btverify.harness import PlanRun, interpret_plan

from strategies import trees

S, F, R, I = SUCCESS, FAILURE, RUNNING, INVALID
PY = SemanticsFlavor.PYTREES
BTC = SemanticsFlavor.BTCOMPILER


def memory_tree():
    return build(sequence("root",
                          leaf("a"),
                          sequence("inner", leaf("b"), leaf("c"),
                                   memory=True)))


class TestPlanStructure:
    def test_modules_are_shared_across_identical_nodes(self):
        t = build(selector("top", leaf("a"), leaf("b"), leaf("c")))
        p = build_total_plan(t, "v2")
        assert [m.key for m in p.modules] == ["Sel3", "Leaf_sfr"]
        assert [i.name for i in p.instances] == ["top", "a", "b", "c"]
        assert all(i.module == "Leaf_sfr" for i in p.instances[1:])

    def test_v2_has_no_chain_variables(self):
        p = build_total_plan(memory_tree(), "v2")
        kinds = {type(d) for m in p.modules for d in m.decls}
        assert ChainDecl not in kinds

    def test_v3_pins_gates_and_statuses_to_variables(self):
        p = build_total_plan(memory_tree(), "v3")
        mod = p.module("SeqMem2")
        chains = {d.name for d in mod.decls if isinstance(d, ChainDecl)}
        assert chains == {"enter1", "enter2", "st"}
        assert isinstance(mod.decl("status"), DefineDecl)
        assert mod.decl("status").expr == LocalRef("st")

    def test_memory_flags_are_recorded_in_meta(self):
        p = build_total_plan(memory_tree(), "v2")
        assert p.meta.skip_vars == (
            ("b", ("inner", "skip1")), ("c", ("inner", "skip2")))

    def test_leaf_plan_cursor_covers_every_stop(self):
        t = build(sequence("root", leaf("a"), oneshot("once", leaf("b"))))
        p = build_leaf_plan(t)
        cursor = p.main_decl("active_node")
        assert isinstance(cursor, StateDecl)
        # stops: both leaves plus the one-shot replay point
        assert set(cursor.type.values) == {-1, 1, 2, 3}
        assert dict(p.meta.stops) == {1: "a", 2: "once", 3: "b"}
        assert p.main_decl("root_entry") is not None
        assert p.main_decl("a_after") is not None

    def test_btc_plan_rejects_wide_trees(self):
        t = build(selector("top", leaf("a"), leaf("b"), leaf("c")))
        with pytest.raises(BtcError, match="arity 3"):
            build_btc_plan(t)

    def test_build_plan_dispatch(self):
        t = build(selector("top", leaf("a"), leaf("b")))
        for enc in ENCODINGS:
            assert build_plan(t, enc).encoding == enc
        with pytest.raises(PlanError, match="unknown encoding"):
            build_plan(t, "total-v9")


class TestDependencyDepth:
    def test_v2_depth_grows_with_the_checklist(self):
        depths = [dependency_depth(build_total_plan(checklist_tree(n), "v2"))
                  for n in range(1, 7)]
        assert all(b > a for a, b in zip(depths, depths[1:]))

    def test_v3_depth_is_flat_across_checklist_sizes(self):
        depths = [dependency_depth(build_total_plan(checklist_tree(n), "v3"))
                  for n in range(1, 7)]
        assert len(set(depths)) == 1
        assert depths[0] <= 6

    def test_cycle_is_reported(self):
        t = build(leaf("x"))
        mod = ModuleDef("M", ("act",),
                        (DefineDecl("status", LocalRef("status")),))
        p = Plan("total-v2", "tick", PY, t, (mod,),
                 (Instance("x", "M", (Const(True),)),), (), PlanMeta())
        with pytest.raises(PlanError, match="cycle"):
            dependency_depth(p)
        with pytest.raises(PlanError, match="cycle"):
            PlanRun(p).run_tick({})

    def test_undeclared_reference_is_reported(self):
        t = build(leaf("x"))
        mod = ModuleDef("M", ("act",),
                        (DefineDecl("status", MainRef("nope")),))
        p = Plan("total-v2", "tick", PY, t, (mod,),
                 (Instance("x", "M", (Const(True),)),), (), PlanMeta())
        with pytest.raises(PlanError, match="undeclared"):
            dependency_depth(p)


class TestInterpretTotalPlans:
    def test_checklist_smoke(self):
        t = checklist_tree(2)
        rows = [
            {"safety_check1": F, "backup1": S, "safety_check2": S},
            {"safety_check1": S, "safety_check2": F, "backup2": S},
        ]
        rows = [dict(r, **{"backup1": S, "backup2": S}) for r in rows]
        for variant in ("v2", "v3"):
            ticks = interpret_plan(build_total_plan(t, variant), rows)
            assert [pt.trace.root_status for pt in ticks] == [S, S]
            assert ticks[0].trace.executed == (
                "safety_check1", "backup1", "safety_check2")

    @settings(max_examples=120, deadline=None)
    @given(data=st.data(),
           variant=st.sampled_from(["v2", "v3"]),
           flavor=st.sampled_from([PY, BTC]))
    def test_matches_total_machine(self, data, variant, flavor):
        tree = data.draw(
            trees(max_leaves=4, memory=True, sync=True, oneshots=True))
        rows = [
            data.draw(st.fixed_dictionaries({
                tree.name(n): st.sampled_from(sorted(
                    tree.kind(n).profile.statuses,
                    key=lambda s: "SFR".index(s.value)))
                for n in tree.leaves()}))
            for _ in range(4)
        ]
        machine = TotalMachine(tree, flavor=flavor)
        run = PlanRun(build_total_plan(tree, variant, flavor))
        oracle = TableOracle(rows)
        for row in rows:
            want = machine.run_tick(oracle).trace
            assert run.run_tick(row).trace == want

    @settings(max_examples=60, deadline=None)
    @given(data=st.data())
    def test_v2_and_v3_agree(self, data):
        tree = data.draw(
            trees(max_leaves=4, memory=True, sync=True, oneshots=True))
        rows = [
            data.draw(st.fixed_dictionaries({
                tree.name(n): st.sampled_from(sorted(
                    tree.kind(n).profile.statuses,
                    key=lambda s: "SFR".index(s.value)))
                for n in tree.leaves()}))
            for _ in range(3)
        ]
        a = interpret_plan(build_total_plan(tree, "v2"), rows)
        b = interpret_plan(build_total_plan(tree, "v3"), rows)
        assert [t.trace for t in a] == [t.trace for t in b]


class TestInterpretBtcPlans:
    @settings(max_examples=100, deadline=None)
    @given(data=st.data())
    def test_matches_btc_machine(self, data):
        wide = data.draw(trees(
            max_leaves=4, memory=True, oneshots=True,
            flavors=(ParallelFlavor.THRESHOLD,), sync=False))
        tree = binarize(wide, for_btc=True)
        rows = [
            data.draw(st.fixed_dictionaries({
                tree.name(n): st.sampled_from(sorted(
                    tree.kind(n).profile.statuses,
                    key=lambda s: "SFR".index(s.value)))
                for n in tree.leaves()}))
            for _ in range(4)
        ]
        machine = BtcMachine(tree)
        run = PlanRun(build_btc_plan(tree))
        oracle = TableOracle(rows)
        for row in rows:
            assert run.run_tick(row).trace == machine.run_tick(oracle).trace


class TestInterpretLeafPlans:
    @settings(max_examples=100, deadline=None)
    @given(data=st.data(), flavor=st.sampled_from([PY, BTC]))
    def test_matches_leaf_machine_step_for_step(self, data, flavor):
        tree = data.draw(
            trees(max_leaves=4, memory=True, sync=True, oneshots=True))
        rows = [
            data.draw(st.fixed_dictionaries({
                tree.name(n): st.sampled_from(sorted(
                    tree.kind(n).profile.statuses,
                    key=lambda s: "SFR".index(s.value)))
                for n in tree.leaves()}))
            for _ in range(4)
        ]
        machine = LeafMachine(tree, flavor=flavor)
        run = PlanRun(build_leaf_plan(tree, flavor))
        oracle = TableOracle(rows)
        for row in rows:
            want = machine.run_tick(oracle)
            got = run.run_tick(row)
            assert got.trace == want.trace
            assert got.steps == want.steps


class TestBlackboardPlans:
    def tree(self):
        decls = [BlackboardDecl("power", IntDomain(0, 3), 3),
                 BlackboardDecl("mode", EnumDomain(("idle", "work")), "idle")]
        return build(sequence(
            "root",
            leaf("drain", "SR", effects=[
                BlackboardEffect("power", OnTick(), Nondet())]),
            leaf("log", "SF", effects=[
                BlackboardEffect("mode", OnStatus(S), SetConstant("work")),
                BlackboardEffect("power", OnStatus(S), SetFromStatus.of(
                    {S: 1, F: 0, R: 0}))]),
        ), decls)

    @staticmethod
    def by_tick(tick, leaf_name, var, domain, current):
        return (tick * 2) % (domain.hi + 1)

    def test_total_plan_tracks_machine_blackboard(self):
        t = self.tree()
        rows = [{"drain": S, "log": S}, {"drain": R, "log": S},
                {"drain": S, "log": F}]
        machine = TotalMachine(t, value_resolver=self.by_tick)
        run = PlanRun(build_total_plan(t, "v2"),
                      value_resolver=self.by_tick)
        oracle = TableOracle(rows)
        for row in rows:
            assert run.run_tick(row).trace == machine.run_tick(oracle).trace

    def test_leaf_plan_tracks_machine_blackboard(self):
        t = self.tree()
        rows = [{"drain": S, "log": F}, {"drain": S, "log": S},
                {"drain": R, "log": S}]
        machine = LeafMachine(t, value_resolver=self.by_tick)
        run = PlanRun(build_leaf_plan(t), value_resolver=self.by_tick)
        oracle = TableOracle(rows)
        for row in rows:
            want = machine.run_tick(oracle)
            got = run.run_tick(row)
            assert got.trace == want.trace
            assert got.steps == want.steps

    def test_last_writer_wins(self):
        decls = [BlackboardDecl("slot", IntDomain(0, 9), 0)]
        t = build(sequence(
            "root",
            leaf("first", "SR", effects=[
                BlackboardEffect("slot", OnTick(), SetConstant(1))]),
            leaf("second", "S", effects=[
                BlackboardEffect("slot", OnTick(), SetConstant(2))]),
        ), decls)
        run = PlanRun(build_total_plan(t, "v2"))
        assert run.run_tick({"first": S, "second": S}).trace.blackboard == {
            "slot": 2}
        assert run.run_tick({"first": R, "second": S}).trace.blackboard == {
            "slot": 1}
