import json
import logging
from functools import partial

import pytest

import main as cli
from backend.load_data import parse_workspace
from backend.routers import rips as rips_router
from backend.tools.generators import circle_document
from backend.tools.rips_homology import build_rips
from backend.utils import ReportDocument
from utils.helpers import format_number, render_kv, render_text
from utils.logger import JSONFormatter, logger


def cycle_text(n, extra=""):
    edges = "".join(f"edge {i} {(i + 1) % n} 1\n" for i in range(n))
    return f"points {n}\n{edges}{extra}"


HEXAGON = cycle_text(6, "subspace A: 0 1 2\nsubspace B: 3 4 5\ngenerator r: 1 2 3 4 5 0\nparam r0 1.0\n")

TWELVE = cycle_text(
    12,
    "subspace Y: " + " ".join(map(str, range(12))) + "\n"
    "generator r: " + " ".join(str((i + 1) % 12) for i in range(12)) + "\n"
    "rotation R: subspace=Y subgroup=r^3\n"
    "param delta0 1.0\nparam Delta0 0.5\nparam r0 1.0\nparam epsilon 0.1\n",
)


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestDelta:
    def test_kv_report(self, capsys, write_doc):
        path = write_doc(HEXAGON)
        code, out, _ = run(capsys, "--output", "kv", "delta", path)
        assert code == 0
        assert out.splitlines() == [f"command=delta {path} --mode auto --seed 0", "points=6", "delta=1", "delta.mode=exact"]

    def test_reports_are_deterministic(self, capsys, write_doc):
        path = write_doc(HEXAGON)
        first = run(capsys, "delta", path, "--thin", "--subspaces")[1]
        second = run(capsys, "delta", path, "--thin", "--subspaces")[1]
        assert first == second
        assert "thin_triangle" in first
        assert "subspace.A.strongly_quasiconvex" in first
        assert "[FAIL]" not in first

    def test_out_file(self, capsys, write_doc, tmp_path):
        path = write_doc(HEXAGON)
        expected = run(capsys, "delta", path)[1]
        target = tmp_path / "report.txt"
        code, out, _ = run(capsys, "--out", str(target), "delta", path)
        assert code == 0 and out == ""
        assert target.read_text() == expected

    def test_sampled_mode_is_noted(self, capsys, write_doc):
        code, out, _ = run(capsys, "--output", "kv", "delta", write_doc(HEXAGON), "--mode", "sampled", "--samples", "500")
        assert code == 0
        assert "delta.mode=sampled" in out
        assert "note.0=delta is a lower estimate from 500 quadruples, seed 0" in out

    def test_thin_on_integer_weights_uses_the_subdivision(self, capsys, write_doc):
        text = "points 4\n" + "".join(f"edge {i} {(i + 1) % 4} 2\n" for i in range(4))
        code, out, _ = run(capsys, "--output", "kv", "delta", write_doc(text), "--thin")
        assert code == 0
        assert "delta.subdivided=2" in out.splitlines()
        assert "thin_triangle.subdivided" in out
        assert "pass=false" not in out
        assert "cross-bounds audited on the unit subdivision (8 vertices)" in out

    def test_thin_on_fractional_weights_is_not_audited(self, capsys, write_doc):
        text = "points 3\nedge 0 1 1.5\nedge 1 2 1\nedge 0 2 1\n"
        code, out, _ = run(capsys, "--output", "kv", "delta", write_doc(text), "--thin")
        assert code == 0
        assert "thin_triangle.subdivided" not in out
        assert "cross-bounds need integer edge weights and an exact-size subdivision; not audited" in out

    def test_thin_needs_a_graph(self, capsys, write_doc):
        code, _, err = run(capsys, "delta", write_doc("points 3\ndist 0 1 1\ndist 0 2 1\ndist 1 2 1\n"), "--thin")
        assert code == 2
        assert err.startswith("error: --thin needs a graph space")


class TestMu:
    def test_values_and_audits(self, capsys):
        code, out, _ = run(capsys, "--output", "kv", "mu", "--r0", "1", "0.5", "4")
        assert code == 0
        assert "mu.0.t=0.5" in out.splitlines()
        assert "mu.1.value=2" in out.splitlines()
        assert "pass=false" not in out

    def test_bad_radius(self, capsys):
        code, _, err = run(capsys, "mu", "--r0", "0", "1")
        assert code == 2
        assert "r0 must be positive" in err


class TestCone:
    def test_audits_pass(self, capsys, write_doc):
        code, out, _ = run(capsys, "cone", write_doc(HEXAGON), "--subspace", "A", "--pairs", "200")
        assert code == 0
        assert out.startswith("# cone ")
        assert "[FAIL]" not in out and "[ok]" in out

    def test_unknown_subspace(self, capsys, write_doc):
        code, _, err = run(capsys, "cone", write_doc(HEXAGON), "--subspace", "Z")
        assert code == 2
        assert "unknown subspace Z" in err

    def test_missing_radius(self, capsys, write_doc):
        code, _, err = run(capsys, "cone", write_doc(cycle_text(5, "subspace A: 0 1\n")), "--subspace", "A")
        assert code == 2
        assert "missing r0" in err


class TestConeOff:
    def test_tree_family(self, capsys, write_doc):
        code, document, _ = run(capsys, "demo", "tree-family", "--seed", "1")
        assert code == 0
        code, out, _ = run(capsys, "coneoff", write_doc(document), "--pairs", "10")
        assert code == 0
        assert "[ok] tree cone-off delta <= ln 3" in out
        assert "[ok] chain metric <= sc distance" in out
        assert "approximation.eta" in out

    def test_unknown_family_member(self, capsys, write_doc):
        code, _, err = run(capsys, "coneoff", write_doc(HEXAGON), "--family", "A,C")
        assert code == 2
        assert "C" in err


class TestRips:
    def test_betti_numbers(self, capsys, write_doc):
        code, out, _ = run(capsys, "--output", "kv", "rips", write_doc(HEXAGON), "--d", "1.5", "--maxdim", "2")
        assert code == 0
        assert "betti=[1, 1]" in out.splitlines()
        assert "simplices=[6, 6, 0]" in out.splitlines()

    def test_certificate(self, capsys, write_doc):
        code, out, _ = run(capsys, "--output", "kv", "rips", write_doc(HEXAGON), "--certificate", "1", "--d", "1.5")
        assert code == 0
        assert "reduced_betti=[0, 1]" in out.splitlines()
        assert "verdict=fail" in out.splitlines()

    def test_needs_scale(self, capsys, write_doc):
        code, _, err = run(capsys, "rips", write_doc(HEXAGON))
        assert code == 2
        assert "--d or --certificate" in err

    def test_simplex_limit_exit_code(self, capsys, write_doc, monkeypatch):
        monkeypatch.setattr(rips_router, "build_rips", partial(build_rips, limit=10))
        code, out, err = run(capsys, "rips", write_doc(HEXAGON), "--d", "10")
        assert code == 3
        assert out == ""
        assert "exceeds 10 simplices" in err


class TestScCheck:
    def test_pass(self, capsys, write_doc):
        code, out, _ = run(capsys, "--output", "kv", "sc-check", write_doc(TWELVE))
        lines = out.splitlines()
        assert code == 0
        assert "rho=3" in lines
        assert "delta=3" in lines
        assert "index.r.R=R (inferred)" in lines
        assert "verdict=pass" in lines

    def test_flag_overrides_document(self, capsys, write_doc):
        code, out, _ = run(capsys, "--output", "kv", "sc-check", write_doc(TWELVE), "--delta0", "0.5")
        assert code == 0
        assert "verdict=fail" in out.splitlines()

    def test_needs_rotations(self, capsys, write_doc):
        code, _, err = run(capsys, "sc-check", write_doc(HEXAGON), "--delta0", "1", "--Delta0", "1")
        assert code == 2
        assert "rotation" in err

    def test_inconsistent_family(self, capsys, write_doc):
        every_point = "subspace Y: " + " ".join(map(str, range(12)))
        code, _, err = run(capsys, "sc-check", write_doc(TWELVE.replace(every_point, "subspace Y: 0 3 6 9")))
        assert code == 2
        assert "rotation R: image under r is not in the family" in err


class TestDemo:
    def test_circle_round_trip(self, capsys):
        code, out, _ = run(capsys, "demo", "circle", "--n", "8")
        assert code == 0
        assert parse_workspace(out) == circle_document(8, 1.0)

    def test_free_group(self, capsys):
        code, out, _ = run(capsys, "demo", "free-group", "--radius", "3", "--relator", "ab")
        assert code == 0
        assert out.startswith("freegroup radius 3\n")
        assert "rotation R0: subspace=Y0 subgroup=ab" in out

    @pytest.mark.parametrize(
        "argv",
        [
            ["demo", "free-group", "--radius", "3", "--relator", "aba^-1"],
            ["demo", "tree-family", "--sizes", "4,x"],
            ["demo", "circle", "--n", "2"],
        ],
    )
    def test_bad_arguments(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 2
        assert out == ""
        assert err.startswith("error: ")


class TestMain:
    def test_missing_workspace(self, capsys, tmp_path):
        code, _, err = run(capsys, "delta", str(tmp_path / "absent.txt"))
        assert code == 2
        assert "not found" in err

    def test_document_error_has_line(self, capsys, write_doc):
        code, _, err = run(capsys, "delta", write_doc("points 2\nedge 0 1 1\nbogus\n"))
        assert code == 2
        assert err.startswith("error: line 3: unknown keyword 'bogus'")

    def test_threads_must_be_positive(self, write_doc):
        with pytest.raises(SystemExit):
            cli.main(["--threads", "0", "delta", write_doc(HEXAGON)])


class TestRendering:
    def test_format_number(self):
        assert format_number(True) == "true"
        assert format_number(3) == "3"
        assert format_number(1.0) == "1"
        assert format_number(float("inf")) == "inf"
        assert format_number(float("nan")) == "nan"
        assert format_number(0.1, exact=True) == "0.1"
        assert format_number(1 / 3) == "0.333333333333"

    def test_text_and_kv(self):
        report = ReportDocument(command="demo")
        report.add("delta", 0.5, "four-point")
        report.add("pair", ["A", "B"])
        report.audit("delta <= 1", 0.5, 1.0, True)
        report.verdict = "pass"
        report.notes.append("seeded")
        assert render_kv(report).splitlines() == [
            "command=demo",
            "delta=0.5",
            "pair=[A, B]",
            "audit.0.name=delta <= 1",
            "audit.0.observed=0.5",
            "audit.0.bound=1",
            "audit.0.pass=true",
            "verdict=pass",
            "note.0=seeded",
        ]
        text = render_text(report)
        assert text.startswith("# demo\ndelta  0.5    (four-point)\n")
        assert "  [ok] delta <= 1: observed 0.5, bound 1" in text
        assert text.endswith("note: seeded\n")


class TestLogging:
    def test_json_lines(self):
        record = logging.LogRecord("coneoff", logging.WARNING, __file__, 10, "cap %s reached", (12,), None)
        record.extra_data = {"cap": 12}
        payload = json.loads(JSONFormatter().format(record))
        assert payload["message"] == "cap 12 reached"
        assert payload["level"] == "WARNING"
        assert payload["extra"] == {"cap": 12}
        assert {"timestamp", "logger", "module", "line"} <= set(payload)

    def test_level_from_environment(self, monkeypatch):
        monkeypatch.setenv("LOG_LEVEL", "debug")
        assert logger("coneoff.test").level == logging.DEBUG
        assert logger("coneoff.test", "ERROR").level == logging.ERROR
