from __future__ import annotations

import json
import math

import pytest

from combworks.optimize import OptimizerConfig
from combworks.protocols import gap_report
from combworks.scenarios import scenario
from combworks.serialization import serialize_process
from combworks.verify import (
    FIELDS,
    VerificationRecord,
    emit_report,
    exit_status,
    lemma_s2_samples,
    resolve_target,
    verify_suite,
)

FAST = OptimizerConfig(restarts=4)


def test_pass_semantics():
    assert VerificationRecord("a", 1.0, 1.0 + 1e-4, 1e-3, "eq").passed
    assert not VerificationRecord("a", 1.0, 1.1, 1e-3, "eq").passed
    assert VerificationRecord("a", 1.0, 0.5, 0.0, "ge").passed
    assert not VerificationRecord("a", 1.0, 0.5, 0.0, "le").passed
    assert VerificationRecord("a", 1.0, 1.0 + 1e-9, 0.0, "le").passed
    assert not VerificationRecord("a", math.nan, 1.0, 1.0, "le").passed
    assert VerificationRecord("a", math.nan, math.nan, 0.0, "value").passed
    assert VerificationRecord("a", 1.0, math.inf, 0.0, "le").margin == math.inf


def test_exit_status():
    ok = VerificationRecord("a", 0.0, 1.0, 0.0)
    bad = VerificationRecord("b", 2.0, 1.0, 0.0)
    assert exit_status([]) == 0
    assert exit_status([ok]) == 0
    assert exit_status([ok, bad]) == 1


def test_json_layout_and_rounding():
    rec = VerificationRecord("x", 1 / 3, math.inf, 1e-6, "le", 42, "abcd", "note")
    doc = json.loads(emit_report([rec]))
    row = doc["records"][0]
    assert tuple(row) == FIELDS
    assert row["lhs"] == 0.333333333333
    assert row["rhs"] == "inf" and row["margin"] == "inf"
    assert row["pass"] is True
    assert json.loads(emit_report([])) == {"records": []}


def test_csv_layout():
    rec = VerificationRecord("x", 2 / 3, 1.0, 0.0, "le", 1, "d", "")
    lines = emit_report([rec], "csv").decode().splitlines()
    assert lines[0] == ",".join(FIELDS)
    assert lines[1].split(",")[:6] == ["x", "0.666666666667", "1", "0.333333333333", "0", "true"]
    with pytest.raises(ValueError):
        emit_report([rec], "xml")


def test_lemma_samples_never_violate():
    samples = lemma_s2_samples(300, seed=3)
    assert len(samples) == 300
    assert max(lhs - rhs for lhs, rhs in samples) <= 0.0


def test_suite_is_byte_reproducible():
    rep = gap_report(scenario("markov-random"), resolve_target("markov-random").ctx, FAST)
    a = emit_report(verify_suite("markov-random", opt=FAST, report=rep))
    b = emit_report(verify_suite("markov-random", opt=FAST, report=rep))
    assert a == b
    ids = [r["id"] for r in json.loads(a)["records"]]
    assert "hierarchy_seq_joint" in ids and "nm_bracket" in ids and "lemma_s2" in ids
    assert len(set(ids)) == len(ids)


def test_check_group_selection():
    recs = verify_suite("fig2a", ["lemma_s2"], FAST)
    assert [r.id for r in recs] == ["lemma_s2"]
    assert recs[0].passed
    with pytest.raises(ValueError):
        verify_suite("fig2a", ["bogus"], FAST)


def test_file_target_reads_thermal_metadata(tmp_path):
    path = tmp_path / "p.json"
    path.write_bytes(serialize_process(scenario("fig2b"), [0.0, 2.0], 0.5))
    t = resolve_target(str(path))
    assert t.scenario is None
    assert t.ctx.kT == 0.5
    assert t.ctx.hamiltonian[1, 1].real == 2.0
    with pytest.raises(ValueError):
        resolve_target(str(tmp_path / "missing.json"))


def test_digest_changes_with_settings():
    a = verify_suite("fig2a", ["lemma_s2"], FAST)[0].digest
    b = verify_suite("fig2a", ["lemma_s2"], FAST.with_(seed=7))[0].digest
    c = verify_suite("fig2b", ["lemma_s2"], FAST)[0].digest
    assert len({a, b, c}) == 3 and len(a) == 16
