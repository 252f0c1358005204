import json
import os
import subprocess
from pathlib import Path

import pytest

jsonschema = pytest.importorskip("jsonschema")


@pytest.fixture(scope="module")
def schema():
    path = os.environ.get("VTRACE_SCHEMA", str(Path(__file__).resolve().parents[2] / "schema" / "report.schema.json"))
    return json.loads(Path(path).read_text())


@pytest.fixture(scope="module")
def samples(tmp_path_factory):
    tool = os.environ.get("VTRACE_REPORT_SAMPLES")
    if not tool:
        pytest.skip("VTRACE_REPORT_SAMPLES not set")
    out = tmp_path_factory.mktemp("reports")
    subprocess.run([tool, str(out), "120"], check=True, capture_output=True)
    return sorted(out.glob("*.json"))


def test_schema_is_valid(schema):
    jsonschema.Draft202012Validator.check_schema(schema)


def test_generated_reports_validate(schema, samples):
    assert len(samples) >= 100
    validator = jsonschema.Draft202012Validator(schema)
    for path in samples:
        errors = sorted(validator.iter_errors(json.loads(path.read_text())), key=lambda e: list(e.path))
        assert not errors, f"{path.name}: {errors[0].message} at {list(errors[0].path)}"


def test_real_reports_present(samples):
    names = {p.name for p in samples}
    assert {"real-ok.json", "real-error.json"} <= names
    ok = json.loads(next(p for p in samples if p.name == "real-ok.json").read_text())
    assert ok["status"]["exit_code"] == 0
    bad = json.loads(next(p for p in samples if p.name == "real-error.json").read_text())
    assert bad["status"]["exit_code"] == 1


def test_schema_rejects_a_broken_report(schema, samples):
    report = json.loads(samples[0].read_text())
    del report["status"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(report, schema, cls=jsonschema.Draft202012Validator)
