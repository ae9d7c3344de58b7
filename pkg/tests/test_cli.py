import json
import socket
import subprocess
import sys
import time

import pytest

from spssr.cli import cli_main, parse_grid


@pytest.fixture
def example_dir(tmp_path):
    out = tmp_path / "inst"
    assert cli_main(["gen", "--n", "3", "--k", "6", "--d", "4", "--q", "257",
                     "--full-family", "--seed", "5", "--out", str(out)]) == 0
    return out


def test_params_output(capsys):
    assert cli_main(["params", "3", "6", "4"]) == 0
    out = capsys.readouterr().out
    assert "G=2 L=1 M=2 rate=2/3 ratio=2" in out
    assert "scheme,subpacketization,randomness_ratio,rate" in out
    assert "smpir-wbu2022,36,2,2/3" in out


def test_params_invalid(capsys):
    assert cli_main(["params", "1", "6", "4"]) == 1
    assert "error" in capsys.readouterr().err


def test_gen_is_deterministic(tmp_path, monkeypatch):
    monkeypatch.delenv("SPSSR_SEED", raising=False)
    args = ["gen", "--n", "4", "--k", "5", "--d", "3", "--full-family", "--seed", "11"]
    cli_main(args + ["--out", str(tmp_path / "a")])
    cli_main(args + ["--out", str(tmp_path / "b")])
    for name in ("instance.json", "database.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_env_seed_overrides_flag(tmp_path, monkeypatch):
    args = ["gen", "--n", "3", "--k", "4", "--d", "2", "--full-family"]
    cli_main(args + ["--seed", "1", "--out", str(tmp_path / "a")])
    monkeypatch.setenv("SPSSR_SEED", "1")
    cli_main(args + ["--seed", "999", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "database.json").read_bytes() == \
        (tmp_path / "b" / "database.json").read_bytes()


def test_gen_from_family_file(tmp_path):
    fam = tmp_path / "fam.json"
    fam.write_text("[[1,2],[2,3]]")
    assert cli_main(["gen", "--n", "2", "--k", "3", "--d", "2", "--q", "2", "--family", str(fam),
                     "--seed", "0", "--out", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "instance.json").read_text())
    assert doc == {"q": 2, "N": 2, "K": 3, "D": 2, "family": [[1, 2], [2, 3]], "seed": 0}
    fam.write_text("[[1,2],[1,2]]")
    assert cli_main(["gen", "--n", "2", "--k", "3", "--d", "2", "--family", str(fam),
                     "--out", str(tmp_path / "p")]) == 1


def test_run_example(example_dir, capsys):
    assert cli_main(["run", "--instance", str(example_dir / "instance.json"),
                     "--demand", "1,2,3,4"]) == 0
    out = capsys.readouterr().out
    doc = json.loads(out[:out.rindex("}") + 1])
    assert doc["metrics"]["achieved_rate"] == "2/3"
    assert doc["metrics"]["downlink_symbols"] == 6
    assert "recovery check: ok" in out


def test_run_bad_demand(example_dir):
    assert cli_main(["run", "--instance", str(example_dir / "instance.json"),
                     "--demand", "1,2"]) == 1


def test_run_tcp_unreachable(example_dir):
    ports = []
    for _ in range(3):
        s = socket.socket()
        s.bind(("127.0.0.1", 0))
        ports.append(s.getsockname()[1])
        s.close()
    endpoints = ",".join(f"127.0.0.1:{p}" for p in ports)
    assert cli_main(["run", "--instance", str(example_dir / "instance.json"),
                     "--demand", "1,2,3,4", "--tcp", endpoints, "--timeout", "1"]) == 3


def test_audits_write_reports(tmp_path):
    fam = tmp_path / "fam.json"
    fam.write_text("[[1,2],[2,3]]")
    cli_main(["gen", "--n", "2", "--k", "3", "--d", "2", "--q", "2", "--family", str(fam),
              "--seed", "0", "--out", str(tmp_path / "i")])
    inst = str(tmp_path / "i" / "instance.json")
    for kind, expect in [("correctness", "correctness"), ("privacy", "privacy_exact"),
                         ("security", "security_exact"), ("metrics", "metrics")]:
        out = tmp_path / f"{kind}.json"
        assert cli_main(["audit", kind, "--instance", inst, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["audit"] == expect and doc["verdict"] == "pass"
    out = tmp_path / "stat.json"
    assert cli_main(["audit", "privacy", "--instance", inst, "--samples", "10000",
                     "--out", str(out)]) == 0
    assert json.loads(out.read_text())["audit"] == "privacy_statistical"


def test_audit_metrics_grid(tmp_path):
    out = tmp_path / "m.json"
    assert cli_main(["audit", "metrics", "--grid", "N=2:8;D=2:9;K=3:10", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["verdict"] == "pass" and doc["evidence"]["points"] == 7 * sum(K - 2 for K in range(3, 11))


def test_audit_too_large_for_exhaustive(example_dir):
    assert cli_main(["audit", "correctness", "--instance",
                     str(example_dir / "instance.json")]) == 1


def test_parse_grid():
    assert parse_grid("N=2:4;q=2,5") == {"N": [2, 3, 4], "q": [2, 5]}
    with pytest.raises(Exception):
        parse_grid("Z=1")


def test_bench_writes_csv_and_figures(tmp_path):
    out = tmp_path / "b" / "sweep.csv"
    assert cli_main(["bench", "--grid", "N=2:4;K=3:5", "--out", str(out), "--rounds", "2"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("N,K,D,q,E,G,L,M,rate,randomness_ratio")
    assert len(lines) == 1 + 3 * (1 + 2 + 3)
    assert (tmp_path / "b" / "sweep_subpacketization.png").stat().st_size > 0
    assert (tmp_path / "b" / "sweep_round_time.png").stat().st_size > 0


def test_serve_subprocess_round(example_dir, capsys):
    procs, endpoints = [], []
    try:
        for n in (1, 2, 3):
            s = socket.socket()
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
            s.close()
            procs.append(subprocess.Popen(
                [sys.executable, "-m", "spssr", "serve", "--port", str(port),
                 "--db", str(example_dir / "database.json"), "--server-index", str(n)]))
            endpoints.append(f"127.0.0.1:{port}")
        deadline = time.time() + 10
        for ep in endpoints:
            host, port = ep.split(":")
            while True:
                try:
                    socket.create_connection((host, int(port)), timeout=0.2).close()
                    break
                except OSError:
                    assert time.time() < deadline, "server did not start"
                    time.sleep(0.05)
        assert cli_main(["run", "--instance", str(example_dir / "instance.json"),
                         "--demand", "2,3,5,6", "--tcp", ",".join(endpoints)]) == 0
        assert "recovery check: ok" in capsys.readouterr().out
    finally:
        for p in procs:
            p.terminate()
            p.wait(timeout=5)
