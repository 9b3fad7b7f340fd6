import json

import numpy as np
import pytest

from bdlab import io
from bdlab.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from bdlab.lattice import BoxSpec
from bdlab.sampler import SamplerParams, sample_many


def run(*argv):
    return main([str(a) for a in argv])


def test_run_config_roundtrip():
    cfg = io.RunConfig("sample", d=2, N=7, mode="cesaro", value=3.0, replicas=4, seed=9,
                       window=3, out="x.jsonl", checkpoint=10, force=True)
    assert io.RunConfig.from_dict(json.loads(io.dumps(cfg.to_dict()))) == cfg


@pytest.mark.parametrize("bad", [
    dict(command="simulate", steps=3, T=1.0),
    dict(command="simulate"),
    dict(command="sample", N=5, window=6, mode="geometric", value=0.1),
    dict(command="sample", format="xml", mode="geometric", value=0.1),
    dict(command="sample"),
])
def test_run_config_rejects(bad):
    with pytest.raises(ValueError):
        io.RunConfig(**bad).validate()


def test_record_roundtrip(tmp_path):
    samples = sample_many(SamplerParams.geometric(2, 6, 1e-2, seed=1), 3)
    path = tmp_path / "s.jsonl"
    io.write_jsonl(path, (io.sample_to_record(s, i) for i, s in enumerate(samples)))
    back = io.read_samples(path)
    for s, t in zip(samples, back):
        assert np.array_equal(s.heights, t.heights)
        assert io.sample_to_record(s, 0) == io.sample_to_record(t, 0)


def test_schema_version_checked(tmp_path):
    rec = io.sample_to_record(sample_many(SamplerParams.geometric(1, 5, 0.1), 1)[0], 0)
    rec["schema_version"] = 99
    with pytest.raises(io.SchemaError):
        io.record_to_sample(rec)


def test_bad_record_length():
    rec = io.sample_to_record(sample_many(SamplerParams.geometric(1, 5, 0.1), 1)[0], 0)
    rec["heights"] = rec["heights"][:-1]
    with pytest.raises(io.SchemaError):
        io.record_to_sample(rec)


def test_sample_zero_replicas(tmp_path):
    out = tmp_path / "z.jsonl"
    assert run("sample", "--box-n", 50, "--p", 1e-3, "--replicas", 0,
               "--out", out) == EXIT_OK
    assert out.read_text() == ""
    meta = io.read_meta(out)
    assert meta["records"] == 0 and meta["seed_mixer"] == "splitmix64"
    assert meta["config"]["replicas"] == 0


def test_sample_is_byte_reproducible(tmp_path):
    args = ["sample", "--box-n", 60, "--p", 1e-3, "--replicas", 4, "--seed", 5,
            "--no-figure"]
    a, b = tmp_path / "a" / "s.jsonl", tmp_path / "b" / "s.jsonl"
    a.parent.mkdir()
    b.parent.mkdir()
    run(*args, "--out", a)
    run(*args, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_out_of_window_needs_force(tmp_path):
    out = tmp_path / "s.jsonl"
    assert run("sample", "--box-n", 50, "--p", 0.5, "--out", out) == EXIT_USAGE
    assert not out.exists()
    assert run("sample", "--box-n", 50, "--p", 0.5, "--out", out,
               "--force", "--no-figure") == EXIT_OK


def test_profile_csv_export(tmp_path):
    out = tmp_path / "fig.csv"
    assert run("sample", "--dim", 1, "--box-n", 1000, "--p", 1e-4,
               "--window", 40, "--format", "csv", "--seed", 1, "--out", out) == EXIT_OK
    header, rows = io.read_csv(out)
    assert header == ["replica", "x1", "u", "dg1"]
    assert len(rows) == 81
    assert [int(r[1]) for r in rows] == list(range(-40, 41))
    assert int(rows[40][2]) == 0
    assert rows[-1][3] == "" and all(r[3] != "" for r in rows[:-1])
    assert (tmp_path / "fig.png").stat().st_size > 0


def test_simulate_zero_steps(tmp_path):
    out = tmp_path / "t.csv"
    assert run("simulate", "--box-n", 3, "--steps", 0, "--out", out,
               "--no-figure") == EXIT_OK
    header, rows = io.read_csv(out)
    assert header == ["snapshot", "events", "x1", "height"]
    assert len(rows) == 7 and all(r[0] == "0" and r[3] == "0" for r in rows)


def test_simulate_single_site(tmp_path):
    out = tmp_path / "t.csv"
    run("simulate", "--box-n", 0, "--steps", 5, "--out", out, "--no-figure")
    _, rows = io.read_csv(out)
    assert rows[-1] == ["1", "5", "0", "5"]


def test_simulate_needs_steps_or_time(tmp_path):
    assert run("simulate", "--box-n", 3, "--steps", 4, "--time", 1.0) == EXIT_USAGE


@pytest.mark.parametrize("extra", [["--steps", 900], ["--time", 8.0]])
def test_resume_matches_uninterrupted(tmp_path, extra):
    base = ["simulate", "--dim", 2, "--box-n", 4, "--checkpoint", 100, "--seed", 3,
            "--no-figure", *extra]
    full, part = tmp_path / "full.csv", tmp_path / "part.csv"
    run(*base, "--out", full)
    run(*base, "--out", part, "--stop-after", 350)
    assert part.read_bytes() != full.read_bytes()
    run(*base, "--out", part, "--resume")
    assert part.read_bytes() == full.read_bytes()


def test_resume_rejects_other_config(tmp_path):
    part = tmp_path / "p.csv"
    run("simulate", "--box-n", 4, "--steps", 500, "--checkpoint", 100,
        "--out", part, "--stop-after", 200, "--no-figure")
    assert run("simulate", "--box-n", 4, "--steps", 500, "--checkpoint", 100,
               "--seed", 7, "--out", part, "--resume", "--no-figure") == EXIT_USAGE


def test_checkpoint_schema_checked(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"schema_version": 0}))
    with pytest.raises(io.SchemaError):
        io.read_checkpoint(path)


def test_oracles_suite_passes(tmp_path):
    out = tmp_path / "r.jsonl"
    assert run("test", "oracles", "--out", out) == EXIT_OK
    reports = list(io.read_jsonl(out))
    assert len(reports) == 8 and all(r["decision"] for r in reports)


def test_negative_control_exits_nonzero(tmp_path):
    code = run("test", "stationarity", "--p", 0.5, "--force", "--replicas", 400,
               "--out", tmp_path / "r.jsonl")
    assert code == EXIT_FAIL


def test_stats_alpha_single_site(tmp_path):
    out = tmp_path / "alpha.csv"
    with pytest.warns(UserWarning):
        run("stats", "alpha", "--box-n", 0, "--time", 4, "--points", 4,
            "--replicas", 20_000, "--out", out)
    header, rows = io.read_csv(out)
    assert header == ["t", "mean"]
    for t, m in rows:
        assert abs(float(m) - float(t)) < 4 * np.sqrt(float(t) / 20_000)


def test_stats_tails_on_flat_input(tmp_path):
    box = BoxSpec(1, 3)
    src = tmp_path / "flat.jsonl"
    recs = [{"schema_version": 1, "d": 1, "N": 3, "sampler": {"N": 3}, "replica": i,
             "seed": i, "n_updates": 0, "elapsed": None, "window": 3,
             "heights": [0] * box.size, "raw_origin": 0} for i in range(5)]
    io.write_jsonl(src, recs)
    out = tmp_path / "tails.csv"
    assert run("stats", "tails", "--input", src, "--out", out,
               "--no-figure") == EXIT_OK
    assert io.read_csv(out) == (["value", "count"], [["0", "5"]])


def test_stats_cluster_tail_table(tmp_path):
    out = tmp_path / "ct.csv"
    run("stats", "cluster-tail", "--box-n", 100, "--replicas", 200,
        "--tail-c", 1.5, "--out", out)
    header, rows = io.read_csv(out)
    assert header == ["T", "prob", "stderr"] and len(rows) == 4
    assert all(0 <= float(r[1]) <= 1 for r in rows)
