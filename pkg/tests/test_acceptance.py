"""Acceptance run: one full ``vlb suite`` (which reruns itself for the
determinism check), then one PASS/FAIL line per criterion.

Run alone with ``pytest -s tests/test_acceptance.py`` to see the lines
grouped together; they are printed even without ``-s``.
"""
import io
import json
import re
from contextlib import redirect_stderr, redirect_stdout

import pytest

from vanlambalgen.construct import PairArtifact
from vanlambalgen.exactcap import Capital
from vanlambalgen.cli import main
from vanlambalgen.suite import CRITERIA

RUNTIME_LIMITS = {1: 10.0, 2: 30.0}


@pytest.fixture(scope="module")
def suite_run(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("suite")
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(["suite", "--out", str(out_dir)])
    summary = json.loads((out_dir / "summary.json").read_text())
    timings = {int(n): float(s) for n, s in re.findall(r"criterion (\d) took ([\d.]+) s", err.getvalue())}
    return {"code": code, "dir": out_dir, "summary": summary, "timings": timings,
            "status": {c["number"]: c for c in summary["criteria"]}}


def _extra_checks(number, run):
    """Checks on the emitted files that do not trust the suite's own verdict."""
    problems = []
    limit = RUNTIME_LIMITS.get(number)
    if limit is not None and run["timings"].get(number, float("inf")) >= limit:
        problems.append(f"took {run['timings'].get(number)} s, limit {limit} s")
    if number == 4:
        art = PairArtifact.from_fixture(_fixture_text(run, "pair_incompressibility"))
        if max(art.slacks.values()) > 4 or art.replay() or art.audit():
            problems.append(f"fixture slacks {art.slacks} or replay/audit failed")
    if number == 7:
        art = PairArtifact.from_fixture(_fixture_text(run, "pair_martingale"))
        got = [Capital.parse(r.value) for r in art.certificates if r.role == "copy_predictor"]
        if got != [2 ** s for s in range(1, art.schedule.stages + 1)]:
            problems.append(f"copy predictor capitals {got}")
    return problems


def _fixture_text(run, name):
    text = (run["dir"] / f"{name}.txt").read_text()
    return "\n".join(line for line in text.splitlines() if not line.startswith("# vanlambalgen")) + "\n"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, suite_run, capsys):
    entry = suite_run["status"].get(number)
    status = entry["status"] if entry else "missing"
    problems = _extra_checks(number, suite_run) if entry else ["not reported"]
    ok = status == "pass" and not problems
    secs = suite_run["timings"].get(number)
    timing = f" ({secs:.1f} s)" if secs is not None else ""
    detail = f" [{'; '.join(problems)}]" if problems else ""
    with capsys.disabled():
        print(f"\ncriterion {number} ({CRITERIA[number]}): {'PASS' if ok else 'FAIL'}{timing}{detail}")
    assert ok, f"criterion {number}: status {status}, measured {entry and entry['measured']}, {problems}"


def test_suite_exit_code(suite_run):
    expected = 0 if all(c["status"] != "fail" for c in suite_run["summary"]["criteria"]) else 1
    assert suite_run["code"] == expected
