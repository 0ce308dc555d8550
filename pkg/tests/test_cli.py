"""Command-line surface: exit codes, output determinism, file plumbing."""
import pytest

from btverify.cli import main
from btverify.dsl import parse


CHECKLIST1 = """\
format btv1

selector sel1 {
  leaf safety_check1 statuses SF
  leaf backup1 statuses S
}
"""

WITH_BLACKBOARD = """\
format btv1

blackboard {
  flag: bool = false
}

selector root {
  leaf probe statuses SF {
    on S: flag := true
  }
  backup
}
"""


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def checklist1(tmp_path):
    path = tmp_path / "checklist1.bt"
    path.write_text(CHECKLIST1)
    return str(path)


@pytest.fixture
def bb_tree(tmp_path):
    path = tmp_path / "bb.bt"
    path.write_text(WITH_BLACKBOARD)
    return str(path)


class TestUsage:
    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--bogus"])
        assert exc.value.code == 2

    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["transmogrify"])
        assert exc.value.code == 2

    def test_missing_tree_file(self, capsys, tmp_path):
        code, out, err = run(capsys, "simulate", "--tree",
                             str(tmp_path / "nope.bt"), "--ticks", "1")
        assert code == 2
        assert "cannot read" in err

    def test_invalid_tree_lists_problems(self, capsys, tmp_path):
        path = tmp_path / "bad.bt"
        path.write_text("format btv1\n\nselector root {\n"
                        "  leaf Bad statuses SF\n  ok\n}\n")
        code, out, err = run(capsys, "simulate", "--tree", str(path),
                             "--ticks", "1")
        assert code == 2
        assert "not a valid tree" in err
        assert "lower_snake" in err


class TestCompile:
    def test_deterministic_bytes(self, capsys, checklist1):
        runs = [run(capsys, "compile", "--encoding", "total-v3",
                    "--tree", checklist1) for _ in range(2)]
        assert runs[0] == runs[1]
        assert runs[0][0] == 0

    def test_emits_every_encoding(self, capsys, checklist1):
        for encoding in ("leaf", "total-v2", "total-v3", "btc"):
            code, out, err = run(capsys, "compile", "--encoding", encoding,
                                 "--tree", checklist1)
            assert code == 0
            assert f"-- encoding: {encoding}" in out
            assert "backup1" in out

    def test_out_flag_writes_file(self, capsys, checklist1, tmp_path):
        target = tmp_path / "model.smv"
        code, out, err = run(capsys, "compile", "--encoding", "leaf",
                             "--tree", checklist1, "--out", str(target))
        assert code == 0
        assert out == ""
        assert target.read_text().startswith("-- btverify")

    def test_btc_rejects_blackboard(self, capsys, bb_tree):
        code, out, err = run(capsys, "compile", "--encoding", "btc",
                             "--tree", bb_tree)
        assert code == 2
        assert "BTCompiler does not support blackboard variables" in err

    def test_saved_blackboard_round_trips(self, capsys, bb_tree, tmp_path):
        frag = tmp_path / "frag.smv"
        code, generated, _ = run(capsys, "compile", "--encoding", "total-v2",
                                 "--tree", bb_tree,
                                 "--save-blackboard", str(frag))
        assert code == 0
        code, spliced, _ = run(capsys, "compile", "--encoding", "total-v2",
                               "--tree", bb_tree,
                               "--blackboard-in", str(frag))
        assert code == 0
        assert spliced == generated

    def test_blackboard_mode_conflict(self, capsys, bb_tree, tmp_path):
        code, out, err = run(capsys, "compile", "--encoding", "total-v2",
                             "--tree", bb_tree,
                             "--blackboard-in", str(tmp_path / "a.smv"),
                             "--save-blackboard", str(tmp_path / "b.smv"))
        assert code == 2
        assert "conflict" in err

    def test_specs_flag_appends_ltlspec(self, capsys, checklist1, tmp_path):
        spec = tmp_path / "props.ltl"
        spec.write_text("G (safety_check1.status = failure -> "
                        "backup1.status = success)\n")
        code, out, err = run(capsys, "compile", "--encoding", "total-v2",
                             "--tree", checklist1, "--specs", str(spec))
        assert code == 0
        assert "LTLSPEC G (safety_check1.status = failure" in out

    def test_document_spec_file_hint(self, capsys, tmp_path):
        # spec_file named in the document resolves against the document dir
        (tmp_path / "props.ltl").write_text("G (backup1.status = success)\n")
        path = tmp_path / "tree.bt"
        path.write_text('format btv1\n\nspec_file "props.ltl"\n\n'
                        "selector sel1 {\n"
                        "  leaf safety_check1 statuses SF\n"
                        "  leaf backup1 statuses S\n}\n")
        code, out, err = run(capsys, "compile", "--encoding", "total-v2",
                             "--tree", str(path))
        assert code == 0
        assert "LTLSPEC G (backup1.status = success)" in out


class TestSimulate:
    def test_seed_reproducible(self, capsys, checklist1):
        first = run(capsys, "simulate", "--tree", checklist1,
                    "--ticks", "5", "--seed", "7")
        second = run(capsys, "simulate", "--tree", checklist1,
                     "--ticks", "5", "--seed", "7")
        assert first == second
        assert first[0] == 0

    def test_dump_shape(self, capsys, checklist1):
        code, out, err = run(capsys, "simulate", "--tree", checklist1,
                             "--ticks", "2", "--seed", "0")
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("tick 0: root ")
        assert any(line.startswith("  oracle: ") for line in lines)
        assert any(line.startswith("  executed: safety_check1")
                   for line in lines)
        assert sum(line.startswith("tick ") for line in lines) == 2

    def test_blackboard_line(self, capsys, bb_tree):
        code, out, err = run(capsys, "simulate", "--tree", bb_tree,
                             "--ticks", "1", "--seed", "3")
        assert code == 0
        assert "  blackboard: flag=" in out

    def test_json_tree_accepted(self, capsys, checklist1, tmp_path):
        from btverify.dsl import to_json
        doc = parse(CHECKLIST1)
        as_json = tmp_path / "tree.bt.json"
        as_json.write_text(to_json(doc))
        text_run = run(capsys, "simulate", "--tree", checklist1,
                       "--ticks", "3", "--seed", "1")
        json_run = run(capsys, "simulate", "--tree", str(as_json),
                       "--ticks", "3", "--seed", "1")
        assert text_run == json_run

    def test_zero_ticks_rejected(self, capsys, checklist1):
        code, out, err = run(capsys, "simulate", "--tree", checklist1,
                             "--ticks", "0")
        assert code == 2


class TestDiff:
    def test_single_tree_report(self, capsys, checklist1):
        code, out, err = run(capsys, "diff", "--tree", checklist1)
        assert code == 0
        assert "PASS  total" in out
        assert "PASS  leaf" in out
        assert "2 passed, 0 failed" in out

    def test_corpus_sweep_clean(self, capsys):
        code, out, err = run(capsys, "diff", "--corpus", "memoryless",
                             "--grid-leaves", "2")
        assert code == 0
        assert "0 divergences" in out

    def test_btc_corpus_sweep_clean(self, capsys):
        code, out, err = run(capsys, "diff", "--corpus", "btc",
                             "--grid-leaves", "2")
        assert code == 0
        assert "0 divergences" in out


class TestGenChecklist:
    def test_writes_three_files(self, capsys, tmp_path):
        code, out, err = run(capsys, "gen-checklist", "--n", "2",
                             "--out-dir", str(tmp_path))
        assert code == 0
        tree_text = (tmp_path / "checklist2.bt").read_text()
        doc = parse(tree_text)
        assert doc.tree.name(doc.tree.root) == "seq1"
        true_lines = (tmp_path / "checklist2_true.ltl").read_text().splitlines()
        false_lines = (tmp_path / "checklist2_false.ltl").read_text().splitlines()
        assert len(true_lines) == 2
        assert len(false_lines) == 2
        assert all("backup" in line for line in true_lines + false_lines)

    def test_parallel_variant_stem(self, capsys, tmp_path):
        code, out, err = run(capsys, "gen-checklist", "--n", "1", "--parallel",
                             "--dialect", "leaf", "--out-dir", str(tmp_path))
        assert code == 0
        assert (tmp_path / "checklist1_par.bt").exists()
        true_text = (tmp_path / "checklist1_par_true.ltl").read_text()
        assert "active_node" in true_text

    def test_bad_n(self, capsys, tmp_path):
        code, out, err = run(capsys, "gen-checklist", "--n", "0",
                             "--out-dir", str(tmp_path))
        assert code == 2


class TestCheck:
    def gen(self, capsys, tmp_path, dialect):
        run(capsys, "gen-checklist", "--n", "1", "--dialect", dialect,
            "--out-dir", str(tmp_path))
        return (str(tmp_path / "checklist1.bt"),
                str(tmp_path / "checklist1_true.ltl"),
                str(tmp_path / "checklist1_false.ltl"))

    def test_holds_exits_0(self, capsys, tmp_path):
        tree, true_specs, _ = self.gen(capsys, tmp_path, "total")
        code, out, err = run(capsys, "check", "--tree", tree,
                             "--encoding", "total", "--spec", true_specs)
        assert code == 0
        assert "spec 1: holds" in out

    def test_counterexample_exits_1(self, capsys, tmp_path):
        tree, _, false_specs = self.gen(capsys, tmp_path, "total")
        code, out, err = run(capsys, "check", "--tree", tree,
                             "--encoding", "total-v3", "--spec", false_specs)
        assert code == 1
        assert "spec 1: counterexample" in out
        assert "safety_check1=failure" in out

    def test_leaf_dialect(self, capsys, tmp_path):
        tree, true_specs, false_specs = self.gen(capsys, tmp_path, "leaf")
        code, out, err = run(capsys, "check", "--tree", tree,
                             "--encoding", "leaf", "--spec", true_specs)
        assert code == 0
        code, out, err = run(capsys, "check", "--tree", tree,
                             "--encoding", "leaf", "--spec", false_specs)
        assert code == 1

    def test_btc_dialect(self, capsys, tmp_path):
        tree, true_specs, false_specs = self.gen(capsys, tmp_path, "btc")
        code, out, err = run(capsys, "check", "--tree", tree,
                             "--encoding", "btc", "--spec", true_specs)
        assert code == 0
        code, out, err = run(capsys, "check", "--tree", tree,
                             "--encoding", "btc", "--spec", false_specs)
        assert code == 1

    def test_malformed_formula_exits_2(self, capsys, tmp_path):
        tree, _, _ = self.gen(capsys, tmp_path, "total")
        spec = tmp_path / "broken.ltl"
        spec.write_text("F (backup1.status = success)\n")
        code, out, err = run(capsys, "check", "--tree", tree,
                             "--encoding", "total", "--spec", str(spec))
        assert code == 2
        assert "spec 1" in err

    def test_empty_spec_file_exits_2(self, capsys, tmp_path):
        tree, _, _ = self.gen(capsys, tmp_path, "total")
        spec = tmp_path / "empty.ltl"
        spec.write_text("# comments only\n\n")
        code, out, err = run(capsys, "check", "--tree", tree,
                             "--encoding", "total", "--spec", str(spec))
        assert code == 2


class TestBridgeImport:
    def test_json_to_canonical_text(self, capsys, tmp_path):
        from btverify.dsl import to_json
        doc = parse(CHECKLIST1)
        source = tmp_path / "tree.bt.json"
        source.write_text(to_json(doc))
        code, out, err = run(capsys, "bridge-import", "--json", str(source))
        assert code == 0
        assert parse(out).tree.by_name("backup1") is not None
        assert out == CHECKLIST1

    def test_out_flag(self, capsys, tmp_path):
        from btverify.dsl import to_json
        source = tmp_path / "tree.bt.json"
        source.write_text(to_json(parse(CHECKLIST1)))
        target = tmp_path / "tree.bt"
        code, out, err = run(capsys, "bridge-import", "--json", str(source),
                             "--out", str(target))
        assert code == 0
        assert target.read_text() == CHECKLIST1

    def test_invalid_json_exits_2(self, capsys, tmp_path):
        source = tmp_path / "tree.bt.json"
        source.write_text("{not json")
        code, out, err = run(capsys, "bridge-import", "--json", str(source))
        assert code == 2
        assert "not valid JSON" in err
