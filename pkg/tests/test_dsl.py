"""Text format: parse, canonical serialize, JSON mirror, error positions."""
import json

import pytest
from hypothesis import given, settings

from btverify import (
    SUCCESS, FAILURE, RUNNING,
    BoolDomain, IntDomain, EnumDomain, BlackboardDecl, BlackboardEffect,
    OnTick, OnStatus, Nondet, SetConstant, SetFromStatus, ParallelFlavor,
    build, leaf, selector, sequence, parallel, statusmap, inverter, oneshot,
    validate,
)
from btverify.dsl import (
    Document, ParseError, JsonError, parse, serialize, to_json, from_json,
)

from strategies import trees

S, F, R = SUCCESS, FAILURE, RUNNING

CANONICAL = """\
format btv1

blackboard {
  flag: bool = false
  count: int[0..3] = 1
  mode: enum{idle, work} = idle
}

spec_file "specs.ltl"

selector root {
  check
  sequence walk memory {
    leaf step statuses SR {
      on S: flag := true
      on tick: mode := map(S -> work, F -> idle, R -> idle)
      on R: count := any
    }
    parallel regroup sync all {
      a
      b
    }
  }
  inverter flip {
    leaf guard statuses SF
  }
  parallel pick one flavor=threshold {
    c
    d
  }
}
"""


def canonical_doc():
    step_effects = [
        BlackboardEffect("flag", OnStatus(S), SetConstant(True)),
        BlackboardEffect("mode", OnTick(), SetFromStatus.of(
            {S: "work", F: "idle", R: "idle"})),
        BlackboardEffect("count", OnStatus(R), Nondet()),
    ]
    tree = build(
        selector(
            "root",
            leaf("check"),
            sequence(
                "walk",
                leaf("step", "SR", effects=step_effects),
                parallel("regroup", leaf("a"), leaf("b"), threshold="all",
                         synchronized=True),
                memory=True,
            ),
            inverter("flip", leaf("guard", "SF")),
            parallel("pick", leaf("c"), leaf("d"), threshold="one",
                     flavor=ParallelFlavor.THRESHOLD),
        ),
        blackboard=[
            BlackboardDecl("flag", BoolDomain(), False),
            BlackboardDecl("count", IntDomain(0, 3), 1),
            BlackboardDecl("mode", EnumDomain(("idle", "work")), "idle"),
        ],
    )
    return Document(tree, spec_file="specs.ltl")


class TestCanonicalForm:
    def test_serialize_matches_frozen_text(self):
        assert serialize(canonical_doc()) == CANONICAL

    def test_parse_serialize_fixpoint(self):
        doc = parse(CANONICAL)
        assert serialize(doc) == CANONICAL
        assert doc.spec_file == "specs.ltl"
        assert doc.blackboard_file is None
        assert validate(doc.tree) == []

    def test_json_roundtrip_preserves_document(self):
        doc = canonical_doc()
        again = from_json(to_json(doc))
        assert serialize(again) == CANONICAL
        assert again.spec_file == "specs.ltl"

    def test_bare_ident_equals_leaf_form(self):
        a = parse("format btv1\n\nx\n")
        b = parse("format btv1\n\nleaf x statuses SFR\n")
        assert serialize(a) == serialize(b) == "format btv1\n\nx\n"

    def test_statuses_letters_normalized(self):
        doc = parse("format btv1\n\nleaf x statuses RS\n")
        assert "statuses SR" in serialize(doc)

    def test_autonaming_by_preorder_index(self):
        doc = parse("format btv1\n\nselector {\n  a\n  sequence {\n    b\n  }\n}\n")
        t = doc.tree
        assert t.name(0) == "selector0"
        assert t.name(2) == "sequence2"

    def test_negative_int_bounds(self):
        text = ("format btv1\n\nblackboard {\n  depth: int[-3..-1] = -2\n}\n\n"
                "x\n")
        doc = parse(text)
        assert doc.tree.blackboard[0].domain == IntDomain(-3, -1)
        assert doc.tree.blackboard[0].initial == -2
        assert serialize(doc) == text

    def test_blackboard_file_header(self):
        text = 'format btv1\n\nblackboard_file "frag.smv"\n\nx\n'
        doc = parse(text)
        assert doc.blackboard_file == "frag.smv"
        assert serialize(doc) == text

    def test_general_statusmap_syntax(self):
        text = ("format btv1\n\nstatusmap m (S -> S, F -> R, R -> S) {\n"
                "  x\n}\n")
        doc = parse(text)
        assert serialize(doc) == text

    def test_shorthand_label_survives_roundtrip(self):
        text = "format btv1\n\nrunning_is_failure m {\n  x\n}\n"
        assert serialize(parse(text)) == text

    def test_oneshot(self):
        text = "format btv1\n\noneshot once {\n  x\n}\n"
        assert serialize(parse(text)) == text


def err(text):
    with pytest.raises(ParseError) as e:
        parse(text, filename="t.bt")
    return e.value


class TestParseErrors:
    def test_missing_format(self):
        e = err("selector r {\n  a\n}\n")
        assert (e.line, e.col) == (1, 1)
        assert "format" in e.message

    def test_unsupported_version(self):
        e = err("format btv2\n\nx\n")
        assert (e.line, e.col) == (1, 8)
        assert "unsupported format 'btv2'" in e.message

    def test_eof_inside_body(self):
        e = err("format btv1\n\nselector root {\n  a\n")
        assert (e.line, e.col) == (5, 1)
        assert "end of file" in e.message

    def test_bad_status_letter(self):
        e = err("format btv1\n\nleaf x statuses SQ\n")
        assert (e.line, e.col) == (3, 17)
        assert "bad status letter 'Q'" in e.message

    def test_reserved_word_as_bare_leaf(self):
        e = err("format btv1\n\nselector r {\n  memory\n}\n")
        assert (e.line, e.col) == (4, 3)
        assert "reserved word" in e.message

    def test_unexpected_character(self):
        e = err("format btv1\n\nselector r { a; }\n")
        assert (e.line, e.col) == (3, 15)
        assert "unexpected character ';'" in e.message

    def test_duplicate_map_key(self):
        e = err("format btv1\n\nleaf x {\n  on tick: v := map(S -> 1, S -> 2)\n}\n")
        assert e.line == 4
        assert "duplicate map key 'S'" in e.message

    def test_trailing_input(self):
        e = err("format btv1\n\na\nb\n")
        assert (e.line, e.col) == (4, 1)
        assert "trailing" in e.message

    def test_missing_policy(self):
        e = err("format btv1\n\nparallel p {\n  a\n  b\n}\n")
        assert (e.line, e.col) == (3, 12)
        assert "policy" in e.message

    def test_filename_in_message(self):
        e = err("format btv1\n\nparallel p {\n  a\n}\n")
        assert str(e).startswith("t.bt:3:")


class TestJson:
    def test_frozen_shape(self):
        doc = Document(
            build(selector("root", leaf("a")),
                  blackboard=[BlackboardDecl("flag", BoolDomain(), False)]),
            spec_file="props.ltl")
        assert json.loads(to_json(doc)) == {
            "format": "btv1",
            "blackboard": [
                {"name": "flag", "type": {"kind": "bool"}, "initial": False},
            ],
            "blackboard_file": None,
            "spec_file": "props.ltl",
            "root": {
                "kind": "selector", "name": "root", "memory": False,
                "children": [
                    {"kind": "leaf", "name": "a", "statuses": "SFR",
                     "effects": []},
                ],
            },
        }

    def test_unknown_kind_rejected(self):
        bad = json.dumps({"format": "btv1", "root":
                          {"kind": "repeat", "name": "r", "children": []}})
        with pytest.raises(JsonError, match="unknown node kind 'repeat'"):
            from_json(bad)

    def test_bad_threshold_rejected(self):
        bad = json.dumps({"format": "btv1", "root": {
            "kind": "parallel", "name": "p", "threshold": "most",
            "children": [
                {"kind": "leaf", "name": "a", "statuses": "S", "effects": []},
                {"kind": "leaf", "name": "b", "statuses": "S", "effects": []},
            ]}})
        with pytest.raises(JsonError, match="root.p: bad threshold 'most'"):
            from_json(bad)

    def test_version_checked(self):
        with pytest.raises(JsonError, match="unsupported format"):
            from_json('{"format": "btv0", "root": {}}')

    def test_not_json(self):
        with pytest.raises(JsonError, match="not valid JSON"):
            from_json("format btv1")


class TestRoundTripProperties:
    @given(trees(max_leaves=5, memory=True, sync=True, oneshots=True))
    @settings(max_examples=150, deadline=None)
    def test_serialize_parse_fixpoint(self, tree):
        text = serialize(tree)
        assert serialize(parse(text)) == text

    @given(trees(max_leaves=5, memory=True, sync=True, oneshots=True))
    @settings(max_examples=150, deadline=None)
    def test_json_mirror_agrees_with_text(self, tree):
        doc = from_json(to_json(Document(tree)))
        assert serialize(doc) == serialize(tree)
