import json
import os
import subprocess

import pytest

CLI = os.environ.get("VTRACE_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="VTRACE_CLI not set")


def run(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True)


def analyze_args(repo):
    return ["analyze", "--repo", repo["path"], "--commit", repo["ids"][2], "--cve", "CVE-2099-0009", "--cwe",
            "CWE-120", "--stub-answers", repo["stub"], "--no-timings"]


def test_analyze_is_byte_identical_across_runs(tiny_repo):
    first = run(*analyze_args(tiny_repo))
    second = run(*analyze_args(tiny_repo))
    assert first.returncode == 0, first.stderr
    assert first.stdout == second.stdout
    report = json.loads(first.stdout)
    assert report["vic"]["id"] == tiny_repo["ids"][0]
    assert report["versions"]["vulnerable"] == ["v1"]


def test_markdown_output(tiny_repo):
    out = run(*analyze_args(tiny_repo), "--format", "markdown")
    assert out.returncode == 0, out.stderr
    assert "| v1 | vulnerable |" in out.stdout


def test_config_file_and_flag_precedence(tiny_repo, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("theta3 = 1.5\n")
    bad = run(*analyze_args(tiny_repo), "--config", str(conf))
    assert bad.returncode == 1
    assert "theta3 must be in [0, 1]" in bad.stderr + bad.stdout
    good = run(*analyze_args(tiny_repo), "--config", str(conf), "--theta3", "0.7")
    assert good.returncode == 0, good.stderr


def test_slice_and_delineate(tiny_repo):
    sliced = json.loads(run("slice", "--repo", tiny_repo["path"], "--commit", tiny_repo["ids"][2]).stdout)
    assert sliced["functions"][0]["function"] == "copy_name"
    verdict = json.loads(run("delineate", "--repo", tiny_repo["path"], "--vic", tiny_repo["ids"][0], "--pc",
                             tiny_repo["ids"][2]).stdout)
    assert verdict["vulnerable"] == ["v1"]


def test_batch(tiny_repo, tmp_path):
    entry = {"repo": tiny_repo["path"], "commit": tiny_repo["ids"][2], "cve": "CVE-2099-0009",
             "stub_answers": tiny_repo["stub"]}
    batch = tmp_path / "batch.json"
    batch.write_text(json.dumps([entry, entry, entry]))
    out = run("batch", "--input", str(batch), "--jobs", "2", "--no-timings")
    assert out.returncode == 0, out.stderr
    reports = json.loads(out.stdout)
    assert len(reports) == 3
    assert all(r["vic"]["id"] == tiny_repo["ids"][0] for r in reports)
