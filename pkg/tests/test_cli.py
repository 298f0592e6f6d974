import subprocess
import sys

import pytest

from twsum.cli import main, read_config


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def fields(out: str) -> dict[str, str]:
    return dict(line.split(" ", 1) for line in out.splitlines() if " " in line)


@pytest.fixture
def xor_inst(tmp_path, capsys):
    path = tmp_path / "x.inst"
    code, out, _ = run(capsys, "gen", "kxor", "--k", 4, "--n", 4, "--u", 12, "--planted",
                       "--seed", 7, "--out", path)
    assert code == 0 and "witness" in out
    return path


def test_gen_requires_width(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "kxor", "--k", "4", "--n", "4", "--planted", "--out", str(tmp_path / "a")])
    assert exc.value.code == 2


def test_gen_bad_shape(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "ksum", "--k", 4, "--n", 8, "--range", 50, "--planted",
                       "--out", tmp_path / "s")
    assert code == 2 and "power of 4" in err


def test_mitm_finds_planted(xor_inst, capsys):
    code, out, _ = run(capsys, "mitm", xor_inst)
    assert code == 0 and fields(out)["result"] == "FOUND"


def test_reduce_solve_check(tmp_path, xor_inst, capsys):
    prefix = tmp_path / "a"
    code, out, _ = run(capsys, "reduce", xor_inst, "--out", prefix, "--copies", 3, "--seed", 1)
    info = fields(out)
    assert code == 0 and info["copies"] == "3" and info["within"] == "yes"
    code, out, _ = run(capsys, "check-td", f"{prefix}.cnf", f"{prefix}.td")
    assert code == 0 and fields(out)["valid"] == "yes"
    code, out, _ = run(capsys, "solve", f"{prefix}.cnf", f"{prefix}.td", "--model")
    info = fields(out)
    assert code == 0 and info["result"] == "SAT" and info["model"].endswith(" 0")


def test_solve_count_and_budget(tmp_path, capsys):
    (tmp_path / "f.cnf").write_text("p cnf 2 1\n1 2 0\n")
    (tmp_path / "f.td").write_text("s td 1 2 2\nb 1 1 2\n")
    code, out, _ = run(capsys, "solve", tmp_path / "f.cnf", tmp_path / "f.td", "--mode", "count")
    assert code == 0 and fields(out)["count"] == "3"
    code, _, err = run(capsys, "solve", tmp_path / "f.cnf", tmp_path / "f.td", "--budget", 0)
    assert code == 4 and "resource" in err


def test_check_td_failure_and_mismatch(tmp_path, capsys):
    (tmp_path / "f.cnf").write_text("p cnf 3 2\n1 2 0\n1 3 0\n")
    (tmp_path / "bad.td").write_text("s td 2 2 3\nb 1 1 2\nb 2 2 3\n1 2\n")
    code, out, _ = run(capsys, "check-td", tmp_path / "f.cnf", tmp_path / "bad.td")
    assert code == 1 and fields(out)["valid"] == "no"
    code, _, err = run(capsys, "solve", tmp_path / "f.cnf", tmp_path / "bad.td")
    assert code == 3


def test_parse_error_exit(tmp_path, capsys):
    (tmp_path / "f.cnf").write_text("p cnf 2 1\n1 x 0\n")
    (tmp_path / "f.td").write_text("s td 1 2 2\nb 1 1 2\n")
    code, _, err = run(capsys, "check-td", tmp_path / "f.cnf", tmp_path / "f.td")
    assert code == 2 and "line 2" in err
    code, _, _ = run(capsys, "mitm", tmp_path / "missing.inst")
    assert code == 2


def test_reduce_failure_exit(tmp_path, capsys):
    inst = tmp_path / "s.inst"
    run(capsys, "gen", "ksum", "--k", 4, "--n", 4, "--range", 20, "--planted", "--out", inst)
    code, _, err = run(capsys, "reduce", inst, "--out", tmp_path / "s", "--copies", 1,
                       "--strict")
    assert code == 3 and "reduction failed" in err
    code, _, err = run(capsys, "reduce", inst, "--out", tmp_path / "s", "--copies", 1)
    assert code == 0 and "warning" in err


def test_budget_from_config_and_env(tmp_path, xor_inst, capsys, monkeypatch):
    prefix = tmp_path / "a"
    run(capsys, "reduce", xor_inst, "--out", prefix, "--copies", 2)
    args = ("solve", f"{prefix}.cnf", f"{prefix}.td")
    cfg = tmp_path / "twsum.conf"
    cfg.write_text("# small machine\nbudget = 3\n")
    assert read_config(cfg) == {"budget": "3"}
    assert run(capsys, *args, "--config", cfg)[0] == 4
    assert run(capsys, *args, "--config", cfg, "--budget", 26)[0] == 0
    monkeypatch.setenv("TWSUM_BUDGET", "3")
    assert run(capsys, *args)[0] == 4
    cfg.write_text("budget = 26\n")
    assert run(capsys, *args, "--config", cfg)[0] == 0


def test_verify_instance_and_artifact(tmp_path, xor_inst, capsys):
    prefix = tmp_path / "a"
    run(capsys, "reduce", xor_inst, "--out", prefix, "--copies", 2)
    code, out, _ = run(capsys, "verify", xor_inst, "--artifact", prefix, "--trials", 2)
    info = fields(out)
    assert code == 0 and info["artifact_result"] == "SAT"
    assert info["completeness"] == "1.0000" and info["completeness_perfect"] == "yes"


def test_verify_instance_sweeps_every_copy_count(xor_inst, capsys):
    code, out, _ = run(capsys, "verify", xor_inst, "--trials", 1, "--copies", "1,2")
    assert code == 0
    assert "copies=1" in out and "copies=2" in out


def test_verify_corpus(capsys):
    code, out, _ = run(capsys, "verify", "--corpus", "nosol", "--kind", "kxor", "--k", 4,
                       "--n", 4, "--u", 6, "--trials", 2, "--copies", "1,4")
    assert code == 0
    assert out.count("false_positive_rate") == 2
    with pytest.raises(SystemExit):
        main(["verify", "--corpus", "planted"])


def test_maxcut_command(tmp_path, capsys):
    (tmp_path / "f.m2s").write_text("p max2sat 2 2 1\n1 -2 0\n2 0\n")
    (tmp_path / "f.td").write_text("s td 1 2 2\nb 1 1 2\n")
    code, out, _ = run(capsys, "maxcut", tmp_path / "f.m2s", "--out", tmp_path / "g",
                       "--td", tmp_path / "f.td", "--verify", "--unweighted")
    info = fields(out)
    assert code == 0
    assert info["target"] == str(8 * 4 + 2)
    assert info["valid"] == "yes" and int(info["width_increase"]) <= 4
    assert info["equivalent"] == "yes" and info["heavy_edges_cut"] == "yes"
    assert (tmp_path / "g.unweighted.maxcut").exists()


def test_hash_stats_csv(tmp_path, capsys):
    code, out, err = run(capsys, "hash-stats", "--family", "dietz-exact")
    assert code == 0 and err.strip() == "exact pass"
    assert out.splitlines()[0] == "family,u,r|m,|S|,trials,mean_max_load,p_violation,bound"
    assert len(out.splitlines()) == 5
    code, out, _ = run(capsys, "hash-stats", "--family", "gf2", "--sizes", "4,6",
                       "--trials", 50, "--seed", 1, "--out", tmp_path / "h.csv")
    assert code == 0 and "pass" in out
    assert len((tmp_path / "h.csv").read_text().splitlines()) == 3


def test_reduce_and_verify_are_byte_reproducible(tmp_path, xor_inst, capsys):
    reports = []
    for name in ("r1", "r2"):
        (tmp_path / name).mkdir()
        _, out, _ = run(capsys, "reduce", xor_inst, "--out", tmp_path / name / "a",
                        "--copies", 2, "--seed", 5)
        reports.append(out.replace(str(tmp_path / name), "DIR"))
        _, out, _ = run(capsys, "verify", xor_inst, "--trials", 2, "--seed", 5)
        reports.append(out)
    assert reports[0] == reports[2] and reports[1] == reports[3]
    for ext in (".cnf", ".td", ".meta.json"):
        assert (tmp_path / "r1" / f"a{ext}").read_bytes() == (tmp_path / "r2" / f"a{ext}").read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "twsum.cli", "mitm", str(tmp_path / "none")],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stderr.startswith("error:")
