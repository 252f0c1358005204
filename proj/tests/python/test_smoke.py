import pytest

vtrace = pytest.importorskip("vtrace")



def _pre_and_diff():
    from conftest import AFTER, BEFORE

    diff = (
        "diff --git a/name.c b/name.c\n--- a/name.c\n+++ b/name.c\n"
        "@@ -8,1 +8,2 @@\n-    strcpy(dst, src);\n+    strncpy(dst, src, n - 1);\n+    dst[n - 1] = 0;\n"
    )
    return BEFORE, AFTER, diff


def test_line_similarity():
    assert vtrace.line_similarity("x = 1;", "x = 1;") == 1.0
    assert vtrace.line_similarity("", "x") == 0.0
    assert vtrace.line_similarity("if (item_num > 65536) {", "if (item_num > 65536 || item_num < 0) {") < 0.9


def test_ast_similarity_with_macro_definitions():
    before = "if (avio_tell(s->pb) + size > tag_end)\n    size = tag_end - avio_tell(s->pb);"
    after = "size = FFMIN(size, tag_end - avio_tell(s->pb));"
    defs = "#define FFMIN(a,b) ((a) < (b) ? (a) : (b))\n"
    assert vtrace.ast_similarity(before, after, definitions=defs) >= 0.8
    assert vtrace.ast_similarity("x = b + a;", "x = a + b;") == 1.0


def test_similarity_score():
    assert vtrace.compute_similarity_score(1, 1, 2, 1) == pytest.approx(0.75)
    with pytest.raises(vtrace.VtraceError):
        vtrace.compute_similarity_score(0, 0, 0, 0)


def test_parse_unified_diff():
    _, _, diff = _pre_and_diff()
    hunks = vtrace.parse_unified_diff(diff)
    assert len(hunks) == 1
    kinds = [c["kind"] for c in hunks[0]["changes"]]
    assert kinds == ["deleted", "added", "added"]
    assert hunks[0]["changes"][0]["old"] == 8
    assert vtrace.parse_unified_diff("") == []


def test_malformed_diff_raises():
    with pytest.raises(vtrace.VtraceError, match="MalformedDiff"):
        vtrace.parse_unified_diff("--- a/x.c\n+++ b/x.c\n@@ -1,2 +1,2 @@\n-only one line\n")


def test_flows_prompt_and_response():
    pre, _, diff = _pre_and_diff()
    flows = vtrace.extract_flows(diff, {"name.c": pre})
    assert len(flows) == 1
    flow = flows[0]
    assert flow.function_name == "copy_name"
    assert {5, 8}.issubset(set(flow.rows))
    assert "strcpy(dst, src);" in flow.render()

    prompt = vtrace.build_prompt("CVE-2099-0009", "CWE-120", "overflow", flow)
    assert prompt["system"].startswith("You are a security researcher")
    assert "CVE-2099-0009" in prompt["user"]

    parsed = vtrace.parse_response("vulnerability logic: too long\nvulnerable lines : [5, 8, 400]", flow)
    assert parsed["logic"] == "too long"
    assert parsed["lines"] == [5, 8]
    assert len(parsed["warnings"]) == 1


def test_analyze_and_delineate(tiny_repo):
    report = vtrace.analyze(repo=tiny_repo["path"], commit=tiny_repo["ids"][2], cve="CVE-2099-0009", cwe="CWE-120",
                            stub_answers=tiny_repo["stub"])
    assert report["status"]["exit_code"] == 0
    assert report["vic"]["id"] == tiny_repo["ids"][0]
    assert report["versions"]["vulnerable"] == ["v1"]
    assert "timings_ms" not in report

    verdict = vtrace.delineate(tiny_repo["path"], tiny_repo["ids"][0], tiny_repo["ids"][2])
    assert verdict["vulnerable"] == ["v1"]
    assert verdict["ranges"] == ["[v1, v2)"]


def test_bad_setting_raises():
    with pytest.raises(vtrace.VtraceError, match="theta1"):
        vtrace.analyze(repo=".", commit="HEAD", theta1=1.5)
