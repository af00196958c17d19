import subprocess
import sys

import numpy as np
import pytest

from mantensor.cli import main, parse_rank_list
from mantensor.errors import ValidationError
from mantensor.io import read_mvt, read_report_csv


@pytest.fixture(scope="module")
def spd_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "spd.mvt"
    assert main(["generate", "spd1d", "--n", "100", "--seed", "0", "--out", str(path)]) == 0
    return path


def test_parse_rank_list():
    assert parse_rank_list("1..5") == [1, 2, 3, 4, 5]
    assert parse_rank_list("2..9:3") == [2, 5, 8]
    assert parse_rank_list("4,1") == [4, 1]
    for bad in ("a..b", "1..4:0", "1,x"):
        with pytest.raises(ValidationError):
            parse_rank_list(bad)


def test_generate_is_seeded(tmp_path):
    a, b, c = (tmp_path / f"{x}.mvt" for x in "abc")
    for path, seed in ((a, 3), (b, 3), (c, 4)):
        assert main(["generate", "sphere1d", "--n", "20", "--seed", str(seed), "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()
    assert read_mvt(a).shape == (20,)


def test_sweep_five_rows_deterministic(spd_file, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        rc = main(["--threads", "1", "sweep", str(spd_file), "--method", "cc", "--ranks", "1..5", "--out", str(out)])
        assert rc == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    rep = read_report_csv(outs[0])
    assert [r.rank for r in rep.rows] == [(r,) for r in range(1, 6)]
    assert all(r.wall_time is None and r.delta_rel is not None for r in rep.rows)
    eps = [r.eps_rel for r in rep.rows]
    assert np.all(np.diff(eps) < 0)


def test_approximate_full_rank(spd_file, tmp_path, capsys):
    core = tmp_path / "core.npz"
    rep = tmp_path / "rep.csv"
    argv = ["approximate", str(spd_file), "--method", "thosvd", "--rank", "full", "--out-core", str(core), "--out-report", str(rep)]
    assert main(argv) == 0
    row = read_report_csv(rep).rows[0]
    assert row.eps_rel <= 1e-12
    z = np.load(core)
    assert z["factor_0"].shape == (100, 6)
    assert z["core"].shape == (6, 9)


def test_approximate_mc_and_base_file(spd_file, tmp_path, capsys):
    base = tmp_path / "base.mvt"
    assert main(["barycentre", str(spd_file), "--out", str(base)]) == 0
    printed = np.array(capsys.readouterr().out.split(), float)
    assert np.array_equal(printed, read_mvt(base).coords.reshape(-1))
    argv = ["approximate", str(spd_file), "--method", "mc", "--rank", "1", "--base", str(base), "--tau", "0.25", "--threads", "1"]
    assert main(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("method,rank") and lines[1].startswith("mc,1,")


def test_bench_fills_timing(spd_file, tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", str(spd_file), "--method", "thosvd", "--ranks", "1,2", "--repeats", "2", "--out", str(out)]) == 0
    rows = read_report_csv(out).rows
    assert len(rows) == 2 and all(r.wall_time > 0 for r in rows)


def test_ingest_command(tmp_path):
    raw = tmp_path / "f.raw"
    field = np.broadcast_to(np.eye(3), (4, 4, 2, 3, 3))
    field.astype("<f8").tofile(raw)
    out = tmp_path / "img.mvt"
    assert main(["ingest-spd", str(raw), "--dims", "4,4,2", "--crop", "0:3,1:4,1", "--out", str(out)]) == 0
    T = read_mvt(out)
    assert T.shape == (3, 3)
    assert np.allclose(T.coords, np.eye(3).ravel())


def test_exit_codes(spd_file, tmp_path, monkeypatch):
    missing = str(tmp_path / "nope.mvt")
    assert main(["barycentre", missing]) == 2
    bad = tmp_path / "bad.mvt"
    bad.write_bytes(b"junk")
    assert main(["barycentre", str(bad)]) == 2
    assert main(["sweep", str(spd_file), "--method", "cc", "--ranks", "x"]) == 2
    assert main(["approximate", str(spd_file), "--method", "cc", "--rank", "1,2"]) == 2
    assert main(["--threads", "0", "barycentre", str(spd_file)]) == 2
    monkeypatch.setenv("MANTENSOR_THREADS", "many")
    assert main(["barycentre", str(spd_file)]) == 2
    monkeypatch.delenv("MANTENSOR_THREADS")
    # step far beyond stability: numeric failure
    assert main(["approximate", str(spd_file), "--method", "mc", "--rank", "1", "--tau", "1e3"]) == 3
    with pytest.raises(SystemExit) as info:
        main(["approximate", str(spd_file)])
    assert info.value.code != 0


def test_module_entry_point(spd_file):
    res = subprocess.run([sys.executable, "-m", "mantensor", "barycentre", str(spd_file), "--nearest-data"], capture_output=True, text=True)
    assert res.returncode == 0
    assert len(res.stdout.split()) == 9
