import hashlib
import json
import math

import numpy as np
import pytest

from proxvr.cli import main
from proxvr.core import RunTrace, TraceRecord
from proxvr.experiment import (CSV_HEADER, ConfigError, emit_csv, parse_config, parse_seeds,
                               read_csv)


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2))
    return str(path)


def base_cfg(**over):
    cfg = {
        "schema_version": 1,
        "problem": {"kind": "quadratic_l1", "n": 300, "d": 10, "l1_weight": 0.02, "seed": 42},
        "algorithm": "proxsvrg_plus",
        "schedule": "T1a",
        "params": {"b": 9, "stop_at_epsilon": True},
        "epsilon": 0.05,
        "seeds": [1, 2],
        "eval_stride": 3,
    }
    cfg.update(over)
    return cfg


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_run_two_seeds(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write_cfg(tmp_path, base_cfg()), "--out", str(out)]) == 0
    traces = sorted(p.name for p in out.glob("trace_*.csv"))
    assert traces == ["trace_b9_seed1.csv", "trace_b9_seed2.csv"]
    rows = read_csv(out / "summary.csv")
    assert [r["seed"] for r in rows] == ["1", "2"]
    for r in rows:
        assert r["status"] == "ok"
        assert int(r["sfo_paper"]) == int(r["epochs"]) * 300 + int(r["epochs"]) * 3 * 9
        assert int(r["po"]) == int(r["iterations"])


def test_b_sweep_rows(tmp_path):
    cfg = base_cfg(algorithm="ssrgd", schedule="T2a", params={"stop_at_epsilon": True},
                   sweep={"b": [1, 4, 16, 64, 256]})
    out = tmp_path / "sweep"
    assert main(["run", write_cfg(tmp_path, cfg), "--out", str(out), "--no-timing"]) == 0
    rows = read_csv(out / "summary.csv")
    assert len(rows) == 5 * 2
    assert sorted({int(r["b"]) for r in rows}) == [1, 4, 16, 64, 256]
    assert len(list(out.glob("trace_*.csv"))) == 10


def test_success_flags_match_traces(tmp_path):
    out = tmp_path / "o"
    cfg = base_cfg(params={"b": 4, "max_iters": 40}, seeds=[0, 1, 2], epsilon=0.3)
    main(["run", write_cfg(tmp_path, cfg), "--out", str(out), "--stride", "1"])
    for r in read_csv(out / "summary.csv"):
        trace = read_csv(out / f"trace_b{r['b']}_seed{r['seed']}.csv")
        best = min(float(t["grad_map_norm"]) for t in trace)
        assert (r["success"] == "1") == (best <= 0.3)
        assert float(r["best_grad_map_norm"]) == best


def test_rerun_is_byte_identical(tmp_path):
    path = write_cfg(tmp_path, base_cfg())
    hashes = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["run", path, "--out", str(out), "--no-timing"])
        hashes.append({p.name: digest(p) for p in sorted(out.iterdir())})
    assert hashes[0] == hashes[1]
    assert all(r["wall_ms"] == "0" for r in read_csv(tmp_path / "run0" / "trace_b9_seed1.csv"))


def test_seed_flag_overrides(tmp_path):
    out = tmp_path / "o"
    main(["run", write_cfg(tmp_path, base_cfg()), "--out", str(out), "--seeds", "3..5"])
    assert [r["seed"] for r in read_csv(out / "summary.csv")] == ["3", "4", "5"]
    assert parse_seeds("1..3") == [1, 2, 3]
    assert parse_seeds("4,7") == [4, 7]


def test_misspelled_key_names_key_and_line(tmp_path, capsys):
    cfg = base_cfg()
    cfg["problem"]["spectrm"] = [0.1, 1.0]
    path = write_cfg(tmp_path, cfg)
    assert main(["validate", path]) == 2
    err = capsys.readouterr().err
    assert "spectrm" in err
    line = next(i for i, ln in enumerate(open(path), 1) if "spectrm" in ln)
    assert f"{path}:{line}:" in err


def test_top_level_unknown_key_and_bad_json():
    text = '{\n  "schema_version": 1,\n  "algoritm": "ssrgd"\n}'
    with pytest.raises(ConfigError, match=r"<config>:3: unknown key 'algoritm'"):
        parse_config(text)
    with pytest.raises(ConfigError, match=r"<config>:2: invalid JSON"):
        parse_config('{\n  "a": ,\n}')


def test_schema_version_required(tmp_path):
    cfg = base_cfg()
    cfg["schema_version"] = 2
    assert main(["validate", write_cfg(tmp_path, cfg)]) == 2


def test_all_runs_overflow(tmp_path):
    cfg = base_cfg(schedule=None, algorithm="proxgd",
                   params={"eta": 50.0, "max_iters": 2000}, seeds=[0, 1])
    out = tmp_path / "o"
    with np.errstate(all="ignore"):
        assert main(["run", write_cfg(tmp_path, cfg), "--out", str(out)]) == 3
    rows = read_csv(out / "summary.csv")
    assert all(r["status"].startswith("failed") for r in rows)
    assert (out / "trace_b1_seed0.csv").read_text().strip() == ",".join(CSV_HEADER)


def test_schedules_and_certify(tmp_path, capsys):
    cfg = {
        "schema_version": 1,
        "problem": {"kind": "quartic_saddle", "n": 32, "d": 4, "seed": 0},
        "algorithm": "ssrgd_saddle",
        "schedule": "T5",
        "epsilon": 1e-3,
        "delta": 0.5,
    }
    path = write_cfg(tmp_path, cfg)
    assert main(["schedules", path]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split("\t")[0] == "theorem"
    assert any(line.startswith("T5\t") for line in out.splitlines())
    xf = tmp_path / "x.json"
    xf.write_text(json.dumps([1.0, 0.0, 0.0, 0.0]))
    assert main(["certify", path, str(xf)]) == 0
    assert "verdict=yes" in capsys.readouterr().out
    xf.write_text("0 0 0 0")
    main(["certify", path, str(xf)])
    assert "verdict=no" in capsys.readouterr().out


def _trace(k):
    tr = RunTrace("test")
    for i in range(k):
        tr.records.append(TraceRecord(i, 0, i == 1, math.pi * (i + 1) / 7, 0.1 / 3 ** i,
                                      i * 10, i * 5, i, 1.25))
    return tr


def test_emit_csv_shapes_and_round_trip(tmp_path):
    empty = tmp_path / "e.csv"
    emit_csv(_trace(0), empty)
    assert empty.read_text() == ",".join(CSV_HEADER) + "\n"
    three = tmp_path / "t.csv"
    tr = _trace(3)
    emit_csv(tr, three)
    lines = three.read_text().splitlines()
    assert len(lines) == 4 and lines[0] == "iter,epoch,super_epoch,phi,grad_map_norm,sfo,sfo_paper,po,wall_ms"
    rows = read_csv(three)
    for rec, row in zip(tr.records, rows):
        assert float(row["phi"]) == rec.phi
        assert float(row["grad_map_norm"]) == rec.grad_map_norm
        assert row["super_epoch"] == ("1" if rec.super_epoch else "0")
    emit_csv(tr, three, no_timing=True)
    assert {r["wall_ms"] for r in read_csv(three)} == {"0"}


def test_emit_csv_io_error_names_path(tmp_path):
    bad = tmp_path / "missing_dir" / "t.csv"
    with pytest.raises(OSError, match="missing_dir"):
        emit_csv(_trace(1), bad)
