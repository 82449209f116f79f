from __future__ import annotations

import json
import subprocess
import sys

import pytest

from combworks.cli import main, read_config
from combworks.serialization import parse_process


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_export_is_deterministic(capsys):
    code, a, _ = _run(capsys, "export", "fig2b")
    _, b, _ = _run(capsys, "export", "fig2b")
    assert code == 0 and a == b
    assert parse_process(a.encode()).steps == 2


def test_random_writes_process_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["random", "--steps", "3", "--env-dim", "3", "--seed", "5", "--out", str(out)]) == 0
    p = parse_process(out.read_bytes())
    assert (p.steps, p.sys_dim) == (3, 2)
    assert p.metadata["temperature"] == 1.0
    _, again, _ = _run(capsys, "random", "--steps", "3", "--env-dim", "3", "--seed", "5")
    assert again.encode() == out.read_bytes()


def test_verify_lemma_group(capsys):
    code, out, _ = _run(capsys, "verify", "fig2a", "--checks", "lemma_s2", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("id,lhs,rhs,margin,tol,pass")
    assert lines[1].startswith("lemma_s2,")


def test_nm_on_fig2b(capsys):
    code, out, _ = _run(capsys, "nm", "fig2b", "--restarts", "4")
    assert code == 0
    vals = {r["id"]: r["lhs"] for r in json.loads(out)["records"]}
    assert vals["nm_lower"] == pytest.approx(1.164406217776, abs=1e-6)
    assert vals["nm_exact"] == 1.0


def test_work_on_process_file(tmp_path, capsys):
    path = tmp_path / "m.json"
    assert main(["export", "markov-saturating", "--out", str(path)]) == 0
    code, out, _ = _run(capsys, "work", str(path), "--restarts", "4")
    assert code == 0
    vals = {r["id"]: r["lhs"] for r in json.loads(out)["records"]}
    assert vals["w_seq"] == pytest.approx(2 * 1.313261687518, abs=1e-6)


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# energy scale\nenergy = 2.0\ntemperature = 0.5\nenv-dim = 3\n")
    assert read_config(str(cfg)) == {"energy": 2.0, "temperature": 0.5, "env_dim": 3}
    _, a, _ = _run(capsys, "export", "fig2b", "--config", str(cfg))
    _, b, _ = _run(capsys, "export", "fig2b", "--energy", "2", "--temperature", "0.5")
    assert a == b
    _, c, _ = _run(capsys, "export", "fig2b", "--config", str(cfg), "--energy", "1")
    _, d, _ = _run(capsys, "export", "fig2b", "--temperature", "0.5")
    assert c == d


def test_errors_exit_with_status_2(tmp_path, capsys):
    code, _, err = _run(capsys, "work", "no-such-target")
    assert code == 2 and err.startswith("combworks: error:")
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert _run(capsys, "export", "fig2a", "--config", str(bad))[0] == 2
    assert _run(capsys, "export", "fig2a", "--steps", "3")[0] == 2
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "combworks", "export", "fig2a"], capture_output=True, check=True)
    assert parse_process(res.stdout).steps == 2
