import json
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from fraclab import ConfigError, ExperimentConfig
from fraclab.cli import main
from fraclab.output import format_csv, read_csv

DISK = '{"kind": "disk"}'


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["spectrum", "pohozaev", "hadamard-check", "simplify"]),
       st.lists(st.floats(0.05, 0.95), min_size=1, max_size=4), st.integers(1, 30),
       st.sampled_from(["domain", "potential", "weight"]), st.floats(-2, 2), st.floats(0.1, 3))
def test_config_round_trip(command, s, k, mode, a, L):
    cfg = ExperimentConfig(command=command, s=s, k=k, mode=mode,
                           domain={"kind": "interval", "endpoints": [a, a + L]})
    for fmt in ("yaml", "json"):
        back = ExperimentConfig.loads(cfg.dumps(fmt), fmt)
        assert back == cfg and back.hash == cfg.hash


def test_config_errors_name_the_field():
    with pytest.raises(ConfigError, match="^frobnicate: unknown config key"):
        ExperimentConfig.from_dict({"frobnicate": 1})
    for bad, field in (({"s": [1.5]}, "s"), ({"k": 0}, "k"), ({"h": -1.0}, "h"),
                       ({"domain": {"kind": "annulus"}}, "domain"), ({"mode": "shape"}, "mode")):
        with pytest.raises(ConfigError, match=f"^{field}"):
            ExperimentConfig(**bad)
    with pytest.raises(ConfigError, match="unknown kind 'annulus'$"):
        ExperimentConfig(domain={"kind": "annulus"})


def test_hash_ignores_output_paths():
    a = ExperimentConfig(s=[0.3])
    assert a.hash == ExperimentConfig(s=[0.3], output="x.csv", report="r.json").hash
    assert a.hash != ExperimentConfig(s=[0.4]).hash


def test_load_by_extension(tmp_path):
    cfg = ExperimentConfig(command="pohozaev", s=[0.2, 0.7], k=6)
    (tmp_path / "c.yaml").write_text(cfg.dumps("yaml"))
    (tmp_path / "c.json").write_text(cfg.dumps("json"))
    assert ExperimentConfig.load(str(tmp_path / "c.yaml")) == cfg
    assert ExperimentConfig.load(str(tmp_path / "c.json")) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(tmp_path / "missing.yaml"))


def test_csv_round_trip():
    text = format_csv(["s", "k", "lambda"], [[0.5, 1, 1.1577738836977]], "abc")
    comments, header, rows = read_csv(text)
    assert comments == {"config-hash": "abc"} and header == ["s", "k", "lambda"]
    assert float(rows[0][2]) == 1.1577738836977


def test_spectrum_sweep_rows_and_clusters(capsys):
    grid = [f"{v / 10:g}" for v in range(1, 10)]
    code, out, _ = _run(capsys, "spectrum", "--s", *grid, "--k", "10")
    assert code == 0
    comments, header, rows = read_csv(out)
    assert header == ["s", "k", "lambda", "cluster"] and len(rows) == 90
    assert comments["config-hash"] == ExperimentConfig(s=[float(g) for g in grid], k=10).hash
    for r in rows:
        assert r[3] == r[1]
    for s in grid:
        lam = [float(r[2]) for r in rows if r[0] == repr(float(s))]
        assert lam == sorted(lam)


def test_disk_spectrum_groups_the_degenerate_pair(capsys):
    code, out, _ = _run(capsys, "spectrum", "--domain", DISK, "--h", "0.125", "--k", "4")
    assert code == 0
    _, _, rows = read_csv(out)
    ids = [r[3] for r in rows]
    assert ids[1] == ids[2] != ids[0]


def test_exit_codes(capsys):
    assert _run(capsys, "spectrum", "--s", "1.5")[0] == 2
    assert _run(capsys, "pohozaev", "--k", "3", "--indices", "4")[0] == 2
    assert _run(capsys, "spectrum", "--domain", '{"kind": "annulus"}')[0] == 2
    code, _, err = _run(capsys, "spectrum", "--weight", '{"kind": "constant", "value": -1}')
    assert code == 3
    assert json.loads(err)["error"] == "NonPositiveWeight"
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--k", "many"])
    assert exc.value.code == 2


def test_pohozaev_residuals_small_on_interval(capsys):
    code, out, _ = _run(capsys, "pohozaev", "--s", "0.3", "0.7", "--N", "48")
    _, header, rows = read_csv(out)
    assert code == 0 and header == ["s", "k", "residual"] and len(rows) == 10
    # small s converges more slowly in N, as in the spectral Pohozaev test
    assert max(float(r[2]) for r in rows) < 1e-3


def test_hadamard_check_dilation_and_translation(capsys):
    code, out, _ = _run(capsys, "hadamard-check", "--s", "0.4", "--indices", "1", "2")
    assert code == 0
    _, header, rows = read_csv(out)
    assert header == ["s", "field", "k", "slope_formula", "slope_fd", "rel_err", "error_kind"]
    by = {(r[1], r[2]): r for r in rows}
    assert {f for f, _ in by} == {"dilation", "translation"}
    for k in ("1", "2"):
        d = by[("dilation", k)]
        assert d[6] == "relative" and float(d[5]) < 1e-5
        t = by[("translation", k)]
        assert t[6] == "absolute" and abs(float(t[3])) < 1e-8


def test_simplify_interval_report(tmp_path, capsys):
    rep = tmp_path / "rep.json"
    code, out, _ = _run(capsys, "simplify", "--q", "10", "--report", str(rep))
    assert code == 0
    d = json.loads(rep.read_text())
    assert d["success"] is True and d["iterations"] == []
    assert d["config_hash"] == ExperimentConfig.from_dict(d["config"]).hash
    assert out == ""


def test_simplify_rejects_sweep(capsys):
    assert _run(capsys, "simplify", "--s", "0.3", "0.4")[0] == 2


def test_outputs_are_byte_deterministic(tmp_path, capsys):
    paths = [tmp_path / f"o{i}.csv" for i in range(2)]
    for p in paths:
        assert _run(capsys, "hadamard-check", "--s", "0.3", "0.6", "-o", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def _cli(*argv, env=None):
    e = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "fraclab", *argv], capture_output=True, text=True, env=e)


def test_threaded_sweep_matches_serial():
    argv = ("spectrum", "--s", "0.2", "0.4", "0.6", "0.8", "--k", "6")
    serial = _cli(*argv, env={"FRACLAB_THREADS": "1"})
    para = _cli(*argv, env={"FRACLAB_THREADS": "4"})
    assert serial.returncode == para.returncode == 0
    assert serial.stdout == para.stdout
    bad = _cli(*argv, env={"FRACLAB_THREADS": "zero"})
    assert bad.returncode == 2 and "FRACLAB_THREADS" in bad.stderr


def test_dump_config_reloads(tmp_path, capsys):
    dump = tmp_path / "eff.yaml"
    code, out, _ = _run(capsys, "spectrum", "--s", "0.25", "--k", "3", "--dump-config", str(dump))
    assert code == 0
    cfg = ExperimentConfig.load(str(dump))
    assert read_csv(out)[0]["config-hash"] == cfg.hash
    code, again, _ = _run(capsys, "spectrum", "--config", str(dump))
    assert again == out
