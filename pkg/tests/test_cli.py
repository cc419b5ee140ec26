import json
from pathlib import Path

import pytest

from chainminer.cli import main
from chainminer.export import graph_to_doc, dump_json

from util import planted_chain_graph, PLANTED_CLIQUES

FIXTURE = Path(__file__).resolve().parent.parent / "data" / "fixture_corpus.json"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestIngest:
    def test_golden_outputs_byte_identical(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run(capsys, "ingest", "--input", str(FIXTURE), "--output", str(out1))[0] == 0
        assert run(capsys, "ingest", "--input", str(FIXTURE), "--output", str(out2))[0] == 0
        for name in ("graph.json", "provenance.json", "graph.tsv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_graph_tsv_contents(self, tmp_path, capsys):
        out = tmp_path / "g"
        run(capsys, "ingest", "--input", str(FIXTURE), "--output", str(out))
        lines = (out / "graph.tsv").read_text().splitlines()
        assert len(lines) == 15
        assert lines == sorted(lines)
        assert "Elena Vargas\tTheodore Quinn" in lines

    def test_graph_json_loads(self, tmp_path, capsys):
        out = tmp_path / "g"
        run(capsys, "ingest", "--input", str(FIXTURE), "--output", str(out))
        doc = json.loads((out / "graph.json").read_text())
        assert doc["format_version"] == 1
        assert len(doc["labels"]) == 11
        assert doc["directed"] is False

    def test_bad_corpus_exit_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, "ingest", "--input", str(bad), "--output", str(tmp_path / "o"))
        assert code == 3
        assert "error" in err

    def test_missing_file_exit_3(self, tmp_path, capsys):
        code, _, _ = run(capsys, "ingest", "--input", str(tmp_path / "nope.json"),
                         "--output", str(tmp_path / "o"))
        assert code == 3

    def test_usage_error_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["ingest"])  # missing required flags
        assert exc.value.code == 2


@pytest.fixture
def planted_graph_file(tmp_path):
    g = planted_chain_graph(seed=0)
    path = tmp_path / "planted.json"
    path.write_text(dump_json(graph_to_doc(g)), encoding="utf-8")
    return path


class TestMine:
    def test_planted_chain_file(self, tmp_path, planted_graph_file, capsys):
        out = tmp_path / "chains.json"
        code, _, _ = run(
            capsys, "mine", "--graph", str(planted_graph_file), "--k", "1",
            "--min-size", "4", "--out", str(out),
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert len(doc["chains"]) == 1
        got = [sorted(c["vertices"]) for c in doc["chains"][0]["cliques"]]
        want = [sorted(f"v{i:03d}" for i in clique) for clique in PLANTED_CLIQUES]
        assert got == want or got == want[::-1]
        assert (tmp_path / "chains.json.model.json").exists()

    def test_deterministic_output(self, tmp_path, planted_graph_file, capsys):
        outs = []
        for name in ("c1.json", "c2.json"):
            out = tmp_path / name
            run(capsys, "mine", "--graph", str(planted_graph_file), "--k", "1",
                "--min-size", "4", "--out", str(out),
                "--model-out", str(tmp_path / (name + ".m")))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_score_drops_after_mine(self, tmp_path, planted_graph_file, capsys):
        out = tmp_path / "chains.json"
        model = tmp_path / "model.json"
        run(capsys, "mine", "--graph", str(planted_graph_file), "--k", "1",
            "--min-size", "4", "--out", str(out), "--model-out", str(model))
        doc = json.loads(out.read_text())
        mined_ids = {c["id"] for c in doc["chains"][0]["cliques"]}

        code, fresh_out, _ = run(capsys, "score", "--graph", str(planted_graph_file),
                                 "--min-size", "4")
        assert code == 0
        code, mined_out, _ = run(capsys, "score", "--graph", str(planted_graph_file),
                                 "--min-size", "4", "--model", str(model))
        assert code == 0

        def parse(table):
            rows = {}
            for line in table.strip().splitlines()[1:]:
                cid, score, _ = line.split("\t")
                rows[int(cid)] = float(score)
            return rows

        before, after = parse(fresh_out), parse(mined_out)
        for cid in mined_ids:
            assert before[cid] > 1.0
            assert after[cid] <= 1e-6

    def test_model_graph_mismatch_exit_3(self, tmp_path, planted_graph_file, capsys):
        model = tmp_path / "model.json"
        run(capsys, "mine", "--graph", str(planted_graph_file), "--k", "0",
            "--out", str(tmp_path / "c.json"), "--model-out", str(model))
        small = tmp_path / "small.json"
        small.write_text(dump_json(graph_to_doc(planted_chain_graph(seed=1, n=20))))
        code, _, _ = run(capsys, "score", "--graph", str(small), "--model", str(model))
        assert code == 3


class TestExport:
    def test_text_rendering(self, tmp_path, planted_graph_file, capsys):
        out = tmp_path / "chains.json"
        run(capsys, "mine", "--graph", str(planted_graph_file), "--k", "1",
            "--min-size", "4", "--out", str(out))
        code, text, _ = run(capsys, "export", "--chains", str(out), "--format", "text")
        assert code == 0
        assert "chain 1" in text
        assert "shared:" in text

    def test_dot_rendering(self, tmp_path, planted_graph_file, capsys):
        out = tmp_path / "chains.json"
        run(capsys, "mine", "--graph", str(planted_graph_file), "--k", "1",
            "--min-size", "4", "--out", str(out))
        dot_file = tmp_path / "chains.dot"
        code, _, _ = run(capsys, "export", "--chains", str(out), "--format", "dot",
                         "--out", str(dot_file))
        assert code == 0
        content = dot_file.read_text()
        assert content.startswith("graph chains {")
        assert "subgraph cluster_c1_1" in content

    def test_edge_list_graph_input(self, tmp_path, capsys):
        # Triangle with a tail: the triangle is denser than its degrees imply.
        tsv = tmp_path / "g.tsv"
        tsv.write_text("a\tb\nb\tc\na\tc\nc\td\nd\te\n")
        out = tmp_path / "chains.json"
        code, _, _ = run(capsys, "mine", "--graph", str(tsv), "--k", "1",
                         "--out", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["chains"][0]["cliques"][0]["vertices"] == ["a", "b", "c"]
