"""Trace patched C vulnerabilities back to the commit that introduced them."""

import json

from . import _vtrace
from ._vtrace import (
    DangerousFlow,
    VtraceError,
    ast_similarity,
    compute_similarity_score,
    extract_flows,
    line_similarity,
)

__all__ = [
    "DangerousFlow",
    "VtraceError",
    "analyze",
    "ast_similarity",
    "build_prompt",
    "compute_similarity_score",
    "delineate",
    "extract_flows",
    "line_similarity",
    "parse_response",
    "parse_unified_diff",
    "report_schema",
]


def parse_unified_diff(diff_text):
    """Hunks of a unified diff as a list of dicts."""
    return json.loads(_vtrace.parse_unified_diff(diff_text))


def build_prompt(cve_id, cwe_id, description, flow, strategy="few_shot_cot"):
    system, user = _vtrace.build_prompt(cve_id, cwe_id, description, flow, strategy)
    return {"system": system, "user": user}


def parse_response(raw, flow):
    logic, lines, warnings = _vtrace.parse_response(raw, flow)
    return {"logic": logic, "lines": lines, "warnings": warnings}


def delineate(repo, vic, pc=None, cve_id=""):
    """Tags reachable from `vic` minus those reachable from `pc`."""
    return json.loads(_vtrace.delineate(repo, vic, pc, cve_id))


def analyze(include_timings=False, **settings):
    """Runs the whole pipeline. Keyword names are configuration keys."""
    args = {k: v if isinstance(v, str) else json.dumps(v) for k, v in settings.items()}
    return json.loads(_vtrace.analyze(args, include_timings))


def report_schema():
    return json.loads(_vtrace.report_schema())
