"""Text emission: determinism, splicing, identifier safety, and goldens."""
import sys
from pathlib import Path

import pytest

from btverify import (
    SUCCESS, build, leaf, selector, sequence, parallel, oneshot,
    BlackboardDecl, BlackboardEffect, IntDomain,
    OnTick, OnStatus, SetConstant, Nondet,
)
from btverify.benchgen import checklist_tree
from btverify.plan import build_plan, ENCODINGS
from btverify.emitter import (
    EmitError, EmitOptions, Generate, GenerateAndSave, IncludeFile,
    emit_smv, read_spec_file,
)

GOLDEN_DIR = Path(__file__).parent / "golden"

GOLDEN_CASES = {
    "single_leaf": lambda: build(leaf("pulse")),
    "checklist1": lambda: checklist_tree(1),
    "checklist3": lambda: checklist_tree(3),
}


def bb_tree():
    decls = [BlackboardDecl("power", IntDomain(0, 3), 3)]
    return build(sequence(
        "root",
        leaf("drain", "SR", effects=[
            BlackboardEffect("power", OnTick(), Nondet())]),
        leaf("plug", "SF", effects=[
            BlackboardEffect("power", OnStatus(SUCCESS), SetConstant(3))]),
    ), decls)


class TestDeterminism:
    @pytest.mark.parametrize("encoding", ENCODINGS)
    def test_same_input_same_bytes(self, encoding):
        t = checklist_tree(2)
        first = emit_smv(build_plan(t, encoding))
        second = emit_smv(build_plan(t, encoding))
        assert first == second

    def test_blackboard_section_is_stable(self):
        t = bb_tree()
        a = emit_smv(build_plan(t, "total-v2"))
        b = emit_smv(build_plan(t, "total-v2"))
        assert a == b
        assert a.count("-- blackboard begin") == 1
        assert a.count("-- blackboard end") == 1


class TestBlackboardModes:
    def test_save_then_include_is_a_fixed_point(self, tmp_path):
        t = bb_tree()
        block = tmp_path / "power.bb.smv"
        saved = emit_smv(build_plan(t, "total-v2"),
                         EmitOptions(blackboard=GenerateAndSave(block)))
        included = emit_smv(build_plan(t, "total-v2"),
                            EmitOptions(blackboard=IncludeFile(block)))
        assert saved == included
        assert block.read_text() in saved

    def test_included_bytes_are_spliced_verbatim(self, tmp_path):
        t = bb_tree()
        block = tmp_path / "custom.smv"
        custom = ("  -- handwritten environment\n"
                  "  VAR\n    bb_power : 0..3;\n    bb_power_nd_drain : 0..3;\n"
                  "  ASSIGN\n    init(bb_power) := 0;\n"
                  "    next(bb_power) := bb_power;\n")
        block.write_text(custom)
        text = emit_smv(build_plan(t, "total-v2"),
                        EmitOptions(blackboard=IncludeFile(block)))
        assert custom.rstrip("\n") in text
        assert "-- blackboard begin" not in text

    def test_missing_include_is_an_error(self, tmp_path):
        t = bb_tree()
        with pytest.raises(EmitError, match="not readable"):
            emit_smv(build_plan(t, "total-v2"),
                     EmitOptions(blackboard=IncludeFile(tmp_path / "nope")))

    def test_tree_without_blackboard_emits_no_section(self):
        text = emit_smv(build_plan(checklist_tree(1), "total-v2"))
        assert "blackboard" not in text


class TestStructure:
    def test_instances_are_named_after_nodes(self):
        text = emit_smv(build_plan(checklist_tree(1), "total-v2"))
        assert "sel1 : Sel2(TRUE, safety_check1.status, backup1.status);" \
            in text
        assert "safety_check1 : Leaf_sf(sel1.act1);" in text
        assert "backup1 : Leaf_s(sel1.act2);" in text

    def test_v3_pins_chains_with_invariants(self):
        v2 = emit_smv(build_plan(checklist_tree(2), "total-v2"))
        v3 = emit_smv(build_plan(checklist_tree(2), "total-v3"))
        assert "INVAR" not in v2
        assert "INVAR st =" in v3 and "INVAR enter2 =" in v3

    def test_btc_leaves_expose_enable(self):
        text = emit_smv(build_plan(checklist_tree(2), "btc"))
        assert "enable := act;" in text

    def test_leaf_encoding_has_an_idle_cursor(self):
        text = emit_smv(build_plan(checklist_tree(2), "leaf"))
        assert "active_node : {-1, 2, 3, 5, 6};" in text
        assert "init(active_node) := -1;" in text
        assert "sel1_entry := safety_check1_entry;" in text

    def test_header_names_the_encoding(self):
        text = emit_smv(build_plan(checklist_tree(1), "btc"))
        head = text.splitlines()[:3]
        assert head[0].startswith("-- btverify ")
        assert head[1] == "-- encoding: btc"
        assert head[2] == "-- tree: sel1 (3 nodes)"


class TestIdentifierSafety:
    def test_reserved_word_node_name_is_rejected(self):
        t = build(selector("esac", leaf("a"), leaf("b")))
        with pytest.raises(EmitError, match="esac"):
            emit_smv(build_plan(t, "total-v2"))

    def test_collision_with_cursor_variable_is_rejected(self):
        t = build(sequence("root", leaf("active_node"), leaf("b")))
        with pytest.raises(EmitError, match="duplicate main identifier"):
            emit_smv(build_plan(t, "leaf"))


class TestSpecLines:
    def test_spec_file_lines_are_prefixed_verbatim(self, tmp_path):
        spec = tmp_path / "props.ltl"
        spec.write_text(
            "# the backup always answers a failed check\n"
            "\n"
            "G (safety_check1.status = failure -> backup1.status = success)\n")
        text = emit_smv(build_plan(checklist_tree(1), "total-v2"),
                        EmitOptions(spec_file=spec))
        assert text.rstrip().endswith(
            "LTLSPEC G (safety_check1.status = failure"
            " -> backup1.status = success)")
        assert "#" not in text

    def test_read_spec_file_skips_comments(self, tmp_path):
        spec = tmp_path / "props.ltl"
        spec.write_text("# c\nA\n\nB\n")
        assert read_spec_file(spec) == ("A", "B")

    def test_explicit_specs_follow_file_specs(self, tmp_path):
        spec = tmp_path / "props.ltl"
        spec.write_text("A\n")
        text = emit_smv(build_plan(checklist_tree(1), "total-v2"),
                        EmitOptions(spec_file=spec, specs=("B",)))
        lines = [l.strip() for l in text.splitlines() if "LTLSPEC" in l]
        assert lines == ["LTLSPEC A", "LTLSPEC B"]


class TestGoldens:
    @pytest.mark.parametrize("case", sorted(GOLDEN_CASES))
    @pytest.mark.parametrize("encoding", ENCODINGS)
    def test_emission_matches_golden(self, case, encoding):
        path = GOLDEN_DIR / f"{case}.{encoding}.smv"
        got = emit_smv(build_plan(GOLDEN_CASES[case](), encoding))
        assert got == path.read_text(), (
            f"{path.name} drifted; regenerate with "
            f"python3 tests/test_emitter.py --regen after review")


def _regen():
    GOLDEN_DIR.mkdir(exist_ok=True)
    for case, make in sorted(GOLDEN_CASES.items()):
        for encoding in ENCODINGS:
            path = GOLDEN_DIR / f"{case}.{encoding}.smv"
            path.write_text(emit_smv(build_plan(make(), encoding)))
            print(f"wrote {path}")


if __name__ == "__main__":
    if "--regen" in sys.argv:
        _regen()
    else:
        print("usage: python3 tests/test_emitter.py --regen")
