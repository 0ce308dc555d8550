"""Tree model: builders, validation, binarization, resume-domain counting."""
import pytest
from hypothesis import given, strategies as st

from btverify import (
    Status, SUCCESS, FAILURE, RUNNING, INVALID,
    BoolDomain, IntDomain, EnumDomain, BlackboardDecl, BlackboardEffect,
    OnTick, OnStatus, Nondet, SetConstant, SetFromStatus,
    ParallelFlavor, ParallelPolicy, Parallel, Sequence, Selector,
    BinarizeError, TreeError,
    build, leaf, selector, sequence, parallel, statusmap, inverter, oneshot,
    validate, binarize, memory_resume_domain,
)
from btverify.core import STATUS_MAP_SHORTHANDS, domain_values, domain_contains


def names(tree):
    return [tree.name(n) for n in range(len(tree))]


def rules(violations):
    return {v.rule for v in violations}


class TestBuild:
    def test_preorder_ids_and_autonames(self):
        t = build(selector(None, leaf("a"), sequence(None, leaf("b"), leaf("c"))))
        assert names(t) == ["selector0", "a", "sequence2", "b", "c"]
        assert t.children(0) == (1, 2)
        assert t.children(2) == (3, 4)
        assert t.parent(4) == 2
        assert t.ancestors(4) == (2, 0)

    def test_neighbors(self):
        t = build(sequence("s", leaf("a"), leaf("b"), leaf("c")))
        b = t.by_name("b")
        assert t.name(t.left_neighbor(b)) == "a"
        assert t.name(t.right_neighbor(b)) == "c"
        assert t.left_neighbor(t.by_name("a")) is None
        assert t.right_neighbor(t.by_name("c")) is None
        assert t.right_neighbor(0) is None

    def test_leaves_and_profiles(self):
        t = build(selector("root", leaf("a", "SF"), leaf("b", "R")))
        assert t.leaves() == (1, 2)
        assert t.kind(1).profile.statuses == frozenset({SUCCESS, FAILURE})
        assert t.kind(1).profile.name == "leaf_sf"
        assert t.kind(2).profile.name == "leaf_r"

    def test_status_letters_ordered(self):
        t = build(leaf("a", "RFS"))
        assert t.kind(0).profile.status_letters() == "SFR"


class TestValidate:
    def test_clean_tree(self):
        t = build(selector("root", leaf("a"), leaf("b")))
        assert validate(t) == []

    def test_decorator_arity(self):
        t = build(sequence("s", inverter("inv", leaf("a")), leaf("b")))
        assert validate(t) == []
        # force a decorator with two children through the draft layer
        d = inverter("inv", leaf("a"))
        d.children.append(leaf("b"))
        bad = build(d)
        assert rules(validate(bad)) == {"decorator arity"}

    def test_threshold_out_of_range(self):
        t = build(parallel("p", leaf("a"), leaf("b"), leaf("c"), threshold=4))
        assert rules(validate(t)) == {"threshold out of range"}
        ok = build(parallel("p", leaf("a"), leaf("b"), leaf("c"), threshold=3))
        assert validate(ok) == []

    def test_duplicate_and_bad_names(self):
        t = build(selector("root", leaf("x"), leaf("x")))
        assert "duplicate name" in rules(validate(t))
        t2 = build(selector("Root", leaf("a"), leaf("b")))
        assert "name format" in rules(validate(t2))

    def test_empty_status_domain(self):
        t = build(leaf("a", ""))
        assert "empty status domain" in rules(validate(t))

    def test_composite_needs_children(self):
        t = build(selector("root"))
        assert "composite arity" in rules(validate(t))

    def test_statusmap_totality(self):
        t = build(statusmap("m", leaf("a"), {SUCCESS: FAILURE}))
        assert "status map not total" in rules(validate(t))

    def test_undeclared_blackboard_variable(self):
        eff = BlackboardEffect("flag", OnTick(), SetConstant(True))
        t = build(leaf("a", "SF", effects=[eff]))
        assert "undeclared blackboard variable" in rules(validate(t))
        declared = t.with_blackboard([BlackboardDecl("flag", BoolDomain(), False)])
        assert validate(declared) == []

    def test_initial_out_of_domain(self):
        t = build(leaf("a")).with_blackboard(
            [BlackboardDecl("n", IntDomain(0, 3), 7)])
        assert "initial out of domain" in rules(validate(t))

    def test_effect_map_totality(self):
        upd = SetFromStatus.of({SUCCESS: True})
        eff = BlackboardEffect("flag", OnTick(), upd)
        t = build(leaf("a", "SF", effects=[eff])).with_blackboard(
            [BlackboardDecl("flag", BoolDomain(), False)])
        assert "effect map not total" in rules(validate(t))


class TestDomains:
    def test_values(self):
        assert domain_values(BoolDomain()) == (False, True)
        assert domain_values(IntDomain(2, 4)) == (2, 3, 4)
        assert domain_values(EnumDomain(("lo", "hi"))) == ("lo", "hi")

    def test_contains_rejects_bool_as_int(self):
        assert not domain_contains(IntDomain(0, 1), True)
        assert domain_contains(IntDomain(0, 1), 1)
        assert domain_contains(BoolDomain(), True)
        assert not domain_contains(EnumDomain(("a",)), 1)


class TestStatusMaps:
    def test_shorthands_total(self):
        for label, m in STATUS_MAP_SHORTHANDS.items():
            assert set(m) == {SUCCESS, FAILURE, RUNNING}, label

    def test_inverter(self):
        m = STATUS_MAP_SHORTHANDS["inverter"]
        assert m[SUCCESS] is FAILURE
        assert m[FAILURE] is SUCCESS
        assert m[RUNNING] is RUNNING


class TestPolicy:
    def test_resolve(self):
        assert ParallelPolicy("one").resolve(5) == 1
        assert ParallelPolicy("all").resolve(5) == 5
        assert ParallelPolicy(3).resolve(5) == 3

    def test_bad_symbolic(self):
        with pytest.raises(ValueError):
            ParallelPolicy("most")


class TestBinarize:
    def test_three_way_sequence_shape(self):
        t = build(sequence("walk", leaf("a"), leaf("b"), leaf("c")))
        bt = binarize(t)
        assert names(bt) == ["walk", "a", "walk__2", "b", "c"]
        assert bt.children(0) == (1, 2)
        assert bt.children(2) == (3, 4)

    def test_four_way_selector_shape(self):
        t = build(selector("pick", leaf("a"), leaf("b"), leaf("c"), leaf("d")))
        bt = binarize(t)
        assert names(bt) == ["pick", "a", "pick__2", "b", "pick__3", "c", "d"]

    def test_binary_tree_unchanged(self):
        t = build(sequence("s", leaf("a"), sequence("t", leaf("b"), leaf("c"))))
        bt = binarize(t)
        assert names(bt) == names(t)
        assert [bt.children(n) for n in range(len(bt))] == \
               [t.children(n) for n in range(len(t))]

    def test_parallel_one_and_all_decompose(self):
        one = build(parallel("p", leaf("a"), leaf("b"), leaf("c"), threshold="one"))
        bone = binarize(one)
        assert all(bone.kind(n).policy.threshold == "one"
                   for n in range(len(bone)) if isinstance(bone.kind(n), Parallel))
        alln = build(parallel("p", leaf("a"), leaf("b"), leaf("c"), threshold=3))
        ball = binarize(alln)
        assert all(ball.kind(n).policy.threshold == "all"
                   for n in range(len(ball)) if isinstance(ball.kind(n), Parallel))

    def test_intermediate_threshold_rejected(self):
        t = build(parallel("p", leaf("a"), leaf("b"), leaf("c"), threshold=2))
        with pytest.raises(BinarizeError, match="no exact binary decomposition"):
            binarize(t)

    def test_unary_composite_rejected(self):
        t = build(sequence("s", leaf("a")))
        with pytest.raises(BinarizeError, match="arity 1"):
            binarize(t)

    def test_btc_rejects_pytrees_flavor(self):
        t = build(parallel("p", leaf("a"), leaf("b"),
                           threshold="all", flavor=ParallelFlavor.PYTREES))
        with pytest.raises(BinarizeError, match="threshold flavor"):
            binarize(t, for_btc=True)
        ok = build(parallel("p", leaf("a"), leaf("b"),
                            threshold="all", flavor=ParallelFlavor.THRESHOLD))
        assert len(binarize(ok, for_btc=True)) == 3

    def test_btc_rejects_synchronized(self):
        t = build(parallel("p", leaf("a"), leaf("b"), threshold="all",
                           synchronized=True, flavor=ParallelFlavor.THRESHOLD))
        with pytest.raises(BinarizeError, match="synchronized"):
            binarize(t, for_btc=True)

    def test_memory_carries_to_copies(self):
        t = build(sequence("s", leaf("a"), leaf("b"), leaf("c"), memory=True))
        bt = binarize(t)
        assert all(bt.kind(n).memory for n in range(len(bt))
                   if isinstance(bt.kind(n), Sequence))

    @given(st.integers(min_value=2, max_value=8))
    def test_chain_is_binary_and_preserves_leaves(self, k):
        t = build(selector("s", *[leaf(f"l{i}") for i in range(k)]))
        bt = binarize(t)
        for n in range(len(bt)):
            if not bt.is_leaf(n):
                assert len(bt.children(n)) == 2
        assert [bt.name(n) for n in bt.leaves()] == [f"l{i}" for i in range(k)]
        assert validate(bt) == []


class TestResumeDomain:
    def test_canonical_two_level(self):
        # seq(mem)[leaf, sel(mem)[x, y, z]]: four leaves can hand back Running,
        # so four resume targets; the lazy per-composite product is 2 * 3 = 6
        t = build(sequence(
            "seq1",
            leaf("leaf"),
            selector("sel1", leaf("x"), leaf("y"), leaf("z"), memory=True),
            memory=True,
        ))
        rd = memory_resume_domain(t, t.by_name("seq1"))
        assert rd.cardinality == 4
        assert rd.lazy_cardinality == 6
        assert [t.name(n) for n in rd.resume_leaves] == ["leaf", "x", "y", "z"]

    def test_nested_deeper(self):
        t = build(sequence(
            "outer",
            leaf("a"),
            sequence("mid", leaf("b"), selector("inner", leaf("c"), leaf("d"),
                                                memory=True), memory=True),
            memory=True,
        ))
        rd = memory_resume_domain(t, 0)
        assert rd.cardinality == 4
        assert rd.lazy_cardinality == 2 * 2 * 2

    def test_non_running_leaves_not_counted(self):
        t = build(sequence("s", leaf("a", "SF"), leaf("b", "SFR"), memory=True))
        rd = memory_resume_domain(t, 0)
        assert rd.cardinality == 1
        assert [t.name(n) for n in rd.resume_leaves] == ["b"]

    def test_requires_memory(self):
        t = build(sequence("s", leaf("a"), leaf("b")))
        with pytest.raises(TreeError, match="memory"):
            memory_resume_domain(t, 0)

    def test_synchronized_parallel_counts(self):
        t = build(parallel("p", leaf("a"), leaf("b"), threshold="all",
                           synchronized=True))
        rd = memory_resume_domain(t, 0)
        assert rd.cardinality == 2
        assert rd.lazy_cardinality == 2
