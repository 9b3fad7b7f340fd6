"""On-disk formats: sample records (JSONL), run configs, checkpoints, CSV tables.

Every JSON object carries ``schema_version``; readers refuse other
versions.  JSON is written with sorted keys and fixed separators so equal
inputs give equal bytes.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .lattice import BoxSpec, CenteredSample
from .seeding import MIXER

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def _check_version(obj: dict, kind: str):
    v = obj.get("schema_version")
    if v != SCHEMA_VERSION:
        raise SchemaError(f"{kind}: schema_version {v!r}, expected {SCHEMA_VERSION}")


@dataclass
class RunConfig:
    command: str
    d: int = 1
    N: int = 200
    mode: str | None = None
    value: float | None = None
    T: float | None = None
    steps: int | None = None
    replicas: int = 1
    seed: int = 0
    window: int | None = None
    out: str | None = None
    format: str = "jsonl"
    checkpoint: int | None = None
    force: bool = False
    target: str | None = None  # test suite or stats kind

    def validate(self) -> "RunConfig":
        if self.d < 1 or self.N < 0:
            raise ValueError("need d >= 1 and N >= 0")
        if self.replicas < 0:
            raise ValueError("replicas must be >= 0")
        if self.window is not None and not 0 <= self.window <= self.N:
            raise ValueError(f"window {self.window} must lie in [0, N={self.N}]")
        if self.format not in ("jsonl", "csv"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.steps is not None and self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.T is not None and self.T < 0:
            raise ValueError("time must be >= 0")
        if self.checkpoint is not None and self.checkpoint < 1:
            raise ValueError("checkpoint stride must be >= 1")
        if self.command == "simulate" and (self.steps is None) == (self.T is None):
            raise ValueError("simulate needs exactly one of steps or time")
        if self.command == "sample" and self.mode is None:
            raise ValueError("sample needs one of --p, --mean-time, --cesaro-t")
        return self

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        _check_version(data, "run config")
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def sample_to_record(s: CenteredSample, replica: int) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "d": s.box.d,
        "N": s.params.get("N", s.box.N),
        "sampler": s.params,
        "replica": replica,
        "seed": s.seed,
        "n_updates": s.n_updates,
        "elapsed": s.elapsed,
        "window": s.box.N,
        "heights": s.heights.reshape(-1).tolist(),
        "raw_origin": s.raw_origin,
    }


def record_to_sample(rec: dict) -> CenteredSample:
    _check_version(rec, "sample record")
    box = BoxSpec(rec["d"], rec["window"])
    h = np.asarray(rec["heights"], dtype=np.int64)
    if h.size != box.size:
        raise SchemaError(f"record has {h.size} heights, window needs {box.size}")
    h = h.reshape(box.shape)
    if h[(box.N,) * box.d] != 0:
        raise SchemaError("record is not centred")
    return CenteredSample(box, h, rec["raw_origin"], rec["n_updates"], rec["elapsed"],
                          rec["seed"], dict(rec["sampler"]))


def write_jsonl(path: Path | str, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(dumps(r) + "\n")
            n += 1
    return n


def read_jsonl(path: Path | str) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def read_samples(path: Path | str) -> list[CenteredSample]:
    return [record_to_sample(r) for r in read_jsonl(path)]


def meta_path(out: Path | str) -> Path:
    return Path(str(out) + ".meta.json")


def write_meta(out: Path | str, config: RunConfig, **extra) -> Path:
    meta = {"schema_version": SCHEMA_VERSION, "config": config.to_dict(),
            "seed_mixer": MIXER, **extra}
    p = meta_path(out)
    p.write_text(dumps(meta) + "\n", encoding="utf-8")
    return p


def read_meta(out: Path | str) -> dict:
    meta = json.loads(meta_path(out).read_text(encoding="utf-8"))
    _check_version(meta, "metadata")
    return meta


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
            n += 1
    return n


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path: Path | str) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def profile_rows(s: CenteredSample, replica: int = 0):
    """Per-site rows ``replica, x1..xd, u, dg1..dgd`` (empty where undefined)."""
    box = s.box
    for x in box.coords():
        x = tuple(int(c) for c in x)
        grads = []
        for i in range(box.d):
            y = x[:i] + (x[i] + 1,) + x[i + 1:]
            grads.append(s.at(y) - s.at(x) if box.contains(y) else "")
        yield (replica, *x, s.at(x), *grads)


def profile_header(d: int) -> list[str]:
    return ["replica"] + [f"x{i + 1}" for i in range(d)] + ["u"] + [f"dg{i + 1}" for i in range(d)]


# -- checkpoints -------------------------------------------------------------------


def write_checkpoint(path: Path | str, config: RunConfig, events_done: int, total: int,
                     heights: np.ndarray, rng: np.random.Generator, snapshot: int,
                     **extra) -> None:
    state = rng.bit_generator.state
    obj = {"schema_version": SCHEMA_VERSION, "config": config.to_dict(),
           "events_done": events_done, "total": total, "snapshot": snapshot,
           "heights": heights.reshape(-1).tolist(), "rng": state, **extra}
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(dumps(obj), encoding="utf-8")
    tmp.replace(path)


def read_checkpoint(path: Path | str) -> dict:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    _check_version(obj, "checkpoint")
    return obj


def rng_from_state(state: dict) -> np.random.Generator:
    bitgen = getattr(np.random, state["bit_generator"])()
    bitgen.state = state
    return np.random.Generator(bitgen)
