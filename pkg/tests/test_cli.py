import gzip
import json
import os
import subprocess
import sys

import pytest

from plgen.cli import main
from plgen.io import export_native, import_native

from conftest import chain_model, xor_and_model


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "model.plgen.json"
    path.write_text(export_native(xor_and_model()))
    return str(path)


def test_generate_single_file(tmp_path, capsys):
    out = tmp_path / "m.plgen.json"
    assert main(["generate", "--seed", "5", "--out", str(out)]) == 0
    model = import_native(out.read_text())
    assert model.activities
    assert "wrote" in capsys.readouterr().out


def test_generate_directory_with_manifest(tmp_path):
    out = tmp_path / "models"
    assert main(["generate", "--count", "4", "--seed", "3", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest) == 4
    for row in manifest:
        assert set(row) == {"file", "seed", "activities"}
        import_native((out / row["file"]).read_text())
    assert [row["seed"] for row in manifest] == [3, 4, 5, 6]


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a.plgen.json", tmp_path / "b.plgen.json"
    main(["generate", "--seed", "9", "--out", str(a)])
    main(["generate", "--seed", "9", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_generate_parallel_matches_serial(tmp_path):
    serial, parallel = tmp_path / "s", tmp_path / "p"
    main(["generate", "--count", "6", "--seed", "2", "--out", str(serial)])
    main(["generate", "--count", "6", "--seed", "2", "--out", str(parallel),
          "--jobs", "3"])
    for name in sorted(os.listdir(serial)):
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()


def test_generate_grammar_flags_forwarded(tmp_path):
    out = tmp_path / "m.plgen.json"
    main(["generate", "--seed", "4", "--out", str(out),
          "--weights", "1,3,1,1,0.5", "--max-depth", "4", "--p-loop", "0.4"])
    import_native(out.read_text())
    assert main(["generate", "--weights", "1,2,3", "--out", str(out)]) == 1
    assert main(["generate", "--weights", "a,b,c,d,e", "--out", str(out)]) == 1


def test_simulate_writes_xes(tmp_path, model_file):
    out = tmp_path / "log.xes"
    assert main(["simulate", model_file, "--traces", "10", "--seed", "1",
                 "--out", str(out)]) == 0
    text = out.read_text()
    assert text.count("<trace>") == 10


def test_simulate_gzip_and_noise(tmp_path, model_file):
    out = tmp_path / "log.xes.gz"
    assert main(["simulate", model_file, "--traces", "5", "--noise", "complete",
                 "--out", str(out)]) == 0
    with gzip.open(out, "rt", encoding="utf-8") as fh:
        assert "<log" in fh.read()
    assert main(["simulate", model_file, "--noise", "loud",
                 "--out", str(tmp_path / "x.xes")]) == 1


def test_simulate_deterministic_and_parallel(tmp_path, model_file):
    outs = [tmp_path / f"log{i}.xes" for i in range(3)]
    for out, jobs in zip(outs, ("1", "1", "2")):
        assert main(["simulate", model_file, "--traces", "20", "--seed", "7",
                     "--jobs", jobs, "--out", str(out)]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes() == outs[2].read_bytes()


def test_evolve_roundtrip(tmp_path, model_file):
    out = tmp_path / "evolved.plgen.json"
    assert main(["evolve", model_file, "--p-replace", "0.5", "--seed", "2",
                 "--out", str(out)]) == 0
    import_native(out.read_text())


def test_export_pnml_and_dot(tmp_path, model_file, capsys):
    pnml = tmp_path / "m.pnml"
    assert main(["export", model_file, "--format", "pnml", "--out", str(pnml)]) == 0
    assert pnml.read_text().startswith("<?xml")
    capsys.readouterr()
    # dot goes to stdout when --out is omitted
    assert main(["export", model_file, "--format", "dot"]) == 0
    assert capsys.readouterr().out.startswith("digraph")


def test_validate_exit_codes(tmp_path, model_file, capsys):
    assert main(["validate", model_file]) == 0
    assert "valid" in capsys.readouterr().out
    bad = tmp_path / "bad.plgen.json"
    doc = json.loads(export_native(xor_and_model()))
    doc["sequences"].append(["a_A", "ghost"])
    bad.write_text(json.dumps(doc))
    assert main(["validate", str(bad)]) == 2
    assert "dangling-sequence" in capsys.readouterr().out


def test_exit_codes_for_errors(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "x.xes")]) == 3
    assert main(["frobnicate"]) == 1
    assert main(["simulate"]) == 1
    garbage = tmp_path / "g.json"
    garbage.write_text("{]")
    assert main(["validate", str(garbage)]) == 2
    capsys.readouterr()


def test_seed_from_environment(tmp_path, monkeypatch):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("PLGEN_SEED", "31")
    main(["generate", "--out", str(out1)])
    monkeypatch.delenv("PLGEN_SEED")
    main(["generate", "--seed", "31", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()
    monkeypatch.setenv("PLGEN_SEED", "not-a-number")
    assert main(["generate", "--out", str(out1)]) == 1


def test_config_file_defaults(tmp_path, model_file):
    config = tmp_path / "plgen.toml"
    config.write_text('[simulate]\ntraces = 7\nout = "%s"\n'
                      % (tmp_path / "cfg.xes"))
    assert main(["--config", str(config), "simulate", model_file]) == 0
    assert (tmp_path / "cfg.xes").read_text().count("<trace>") == 7
    # explicit flags beat config values
    assert main(["--config", str(config), "simulate", model_file,
                 "--traces", "2", "--out", str(tmp_path / "cli.xes")]) == 0
    assert (tmp_path / "cli.xes").read_text().count("<trace>") == 2
    assert main(["--config", str(tmp_path / "nope.toml"), "validate", model_file]) == 1


def test_stream_command_runs_and_stops(tmp_path):
    model = tmp_path / "m.plgen.json"
    model.write_text(export_native(chain_model(("A", "B"))))
    proc = subprocess.Popen(
        [sys.executable, "-m", "plgen.cli", "stream", str(model),
         "--port", "0", "--control-port", "0", "--multiplier", "0.001"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    try:
        header = [proc.stdout.readline() for _ in range(2)]
        assert header[0].startswith("stream port: ")
        assert header[1].startswith("control port: ")
        control_port = int(header[1].split(":")[1])
        import urllib.request
        with urllib.request.urlopen(
                f"http://127.0.0.1:{control_port}/v1/status", timeout=5) as resp:
            assert json.loads(resp.read())["running"] is True
        req = urllib.request.Request(
            f"http://127.0.0.1:{control_port}/v1/stop", data=b"", method="POST")
        urllib.request.urlopen(req, timeout=5)
        proc.wait(timeout=10)
        assert proc.returncode == 0
    finally:
        if proc.poll() is None:
            proc.kill()
