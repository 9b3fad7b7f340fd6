"""Ballistic deposition dynamics on a finite box.

Two clocks drive the same update rule:

* the discrete chain picks a uniform box site per step;
* continuous time runs an independent rate-1 Poisson clock per site,
  realised by superposition: one rate-``|B_N|`` stream of exponential
  gaps, each event marked with a uniform site.

RNG consumption is fixed so that a seed determines everything.  Draws
come in blocks: the discrete chain draws its site indices in blocks of
``CHUNK``; the continuous chain draws a block of exponential gaps and
then a block of site indices of the same length, discarding whatever
overshoots the horizon.  The continuous block length is a function of
the expected event count only (see :func:`block_length`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .lattice import Boundary, BoxSpec, HeightField, Site, as_mask

CHUNK = 1 << 14
_HEADROOM = np.iinfo(np.int64).max // 4


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ChainConfig:
    box: BoxSpec
    boundary: Boundary = Boundary.PINNED_ZERO
    seed: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True, eq=False)
class UpdateSchedule:
    """Event times on ``[0, T]`` for every box site.

    Stored as one time-sorted event list (``times``, ``sites``); the
    per-site lists are views of it.  Times are pairwise distinct.
    """

    box: BoxSpec
    horizon: float
    times: np.ndarray
    sites: np.ndarray

    def __post_init__(self):
        if self.horizon < 0:
            raise ScheduleError("negative horizon")
        if self.times.shape != self.sites.shape or self.times.ndim != 1:
            raise ScheduleError("times and sites must be matching 1-d arrays")
        if self.times.size:
            if np.any(np.diff(self.times) <= 0):
                raise ScheduleError("event times must be strictly increasing")
            if self.times[0] < 0 or self.times[-1] > self.horizon:
                raise ScheduleError("event time outside [0, T]")
            if self.sites.min() < 0 or self.sites.max() >= self.box.size:
                raise ScheduleError("event site outside the box")

    @classmethod
    def empty(cls, box: BoxSpec, horizon: float = 0.0) -> "UpdateSchedule":
        return cls(box, float(horizon), np.empty(0), np.empty(0, dtype=np.int64))

    @classmethod
    def from_site_lists(cls, box: BoxSpec, horizon: float,
                        lists: dict[Site, Sequence[float]]) -> "UpdateSchedule":
        times, sites = [], []
        for x, ts in lists.items():
            idx = box.index(x)
            for t in ts:
                times.append(float(t))
                sites.append(idx)
        times = np.asarray(times, dtype=float)
        sites = np.asarray(sites, dtype=np.int64)
        order = np.argsort(times, kind="stable")
        return cls(box, float(horizon), times[order], sites[order])

    def __len__(self) -> int:
        return int(self.times.size)

    def at(self, x: Site) -> np.ndarray:
        """Ascending event times at one site."""
        return self.times[self.sites == self.box.index(x)]

    def site_lists(self) -> dict[Site, np.ndarray]:
        return {self.box.site(int(i)): self.times[self.sites == i] for i in np.unique(self.sites)}

    def counts(self) -> np.ndarray:
        return np.bincount(self.sites, minlength=self.box.size)

    def truncate(self, horizon: float) -> "UpdateSchedule":
        keep = self.times <= horizon
        return UpdateSchedule(self.box, float(horizon), self.times[keep], self.sites[keep])

    def restrict(self, D) -> "UpdateSchedule":
        keep = as_mask(self.box, D)[self.sites]
        return UpdateSchedule(self.box, self.horizon, self.times[keep], self.sites[keep])


@dataclass(eq=False)
class SimResult:
    heights: HeightField
    events: int
    elapsed: float
    schedule: UpdateSchedule | None = None
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)


class _Engine:
    """Padded-grid state plus the kernel lookup tables for one box."""

    def __init__(self, field_: HeightField):
        self.box = field_.box
        self.padded = field_.copy_padded()
        self.flat = self.padded.reshape(-1)
        self.pad_index = self.box.pad_index()
        self.offsets = self.box.pad_offsets()
        self.boundary = field_.boundary
        self.top = int(self.flat.max())

    def run(self, sites: np.ndarray):
        if sites.size == 0:
            return
        self.top += int(sites.size)
        if self.top > _HEADROOM:
            raise OverflowError("heights would leave the safe int64 range")
        _kernels.deposit_sequence(self.flat, self.pad_index, self.offsets,
                                  np.ascontiguousarray(sites, dtype=np.int64))

    def field(self) -> HeightField:
        return HeightField(self.box, self.padded.copy(), self.boundary)

    def snapshot(self) -> np.ndarray:
        return self.padded[(slice(1, -1),) * self.box.d].copy()


def deposit(h: HeightField, x: Sequence[int]) -> HeightField:
    """One deposition at ``x``: ``max(neighbour max, h(x) + 1)``."""
    box = h.box
    if not box.contains(x):
        raise ValueError(f"site {tuple(x)} is outside {box}")
    eng = _Engine(h)
    eng.run(np.array([box.index(x)]))
    return eng.field()


def _initial(cfg: ChainConfig, initial: HeightField | None) -> HeightField:
    if initial is None:
        return HeightField.zeros(cfg.box, cfg.boundary)
    if initial.box != cfg.box:
        raise ValueError("initial field lives on a different box")
    return initial


def _resolve_rng(cfg: ChainConfig, rng: np.random.Generator | None) -> np.random.Generator:
    return cfg.rng() if rng is None else rng


def draw_sites(rng: np.random.Generator, n_sites: int, steps: int) -> np.ndarray:
    """Uniform site stream for the discrete chain, drawn in CHUNK blocks."""
    out = np.empty(steps, dtype=np.int64)
    for lo in range(0, steps, CHUNK):
        hi = min(lo + CHUNK, steps)
        out[lo:hi] = rng.integers(0, n_sites, size=hi - lo)
    return out


def run_discrete(cfg: ChainConfig, steps: int, rng: np.random.Generator | None = None, *,
                 initial: HeightField | None = None, sites: Sequence[int] | None = None,
                 snapshot_stride: int | None = None) -> SimResult:
    """Discrete-time chain: ``steps`` deposits at uniform box sites.

    ``sites`` forces the site stream (box flat indices) instead of drawing
    it, which is how the discrete and continuous chains are coupled.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    eng = _Engine(_initial(cfg, initial))
    if sites is None:
        stream = draw_sites(_resolve_rng(cfg, rng), cfg.box.size, steps)
    else:
        stream = np.asarray(sites, dtype=np.int64)
        if stream.size != steps:
            raise ValueError("forced site stream length differs from steps")
        if stream.size and (stream.min() < 0 or stream.max() >= cfg.box.size):
            raise ValueError("forced site outside the box")
    snaps = _run_with_snapshots(eng, stream, snapshot_stride)
    return SimResult(eng.field(), steps, float("nan"), None, snaps)


def _run_with_snapshots(eng: _Engine, stream: np.ndarray, stride: int | None):
    if not stride:
        eng.run(stream)
        return []
    snaps = [(0, eng.snapshot())]
    for lo in range(0, stream.size, stride):
        eng.run(stream[lo:lo + stride])
        snaps.append((min(lo + stride, stream.size), eng.snapshot()))
    return snaps


def block_length(mean_events: float) -> int:
    """Block size for the superposed stream; usually one block suffices."""
    return int(min(CHUNK, 16 + mean_events + 6.0 * np.sqrt(mean_events)))


def superposed_events(rng: np.random.Generator, n_sites: int, horizon: float):
    """Event times and sites of ``n_sites`` rate-1 clocks on ``[0, horizon)``."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if horizon == 0 or n_sites == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    rate = float(n_sites)
    size = block_length(rate * horizon)
    times, sites = [], []
    t = 0.0
    while True:
        gaps = rng.exponential(1.0 / rate, size=size)
        marks = rng.integers(0, n_sites, size=size)
        block = t + np.cumsum(gaps)
        # simultaneous events have probability zero but doubles can tie
        while np.any(np.diff(np.concatenate(([t], block))) <= 0):
            bad = np.flatnonzero(np.diff(np.concatenate(([t], block))) <= 0)
            gaps[bad] = rng.exponential(1.0 / rate, size=bad.size)
            block = t + np.cumsum(gaps)
        stop = int(np.searchsorted(block, horizon, side="left"))
        times.append(block[:stop])
        sites.append(marks[:stop])
        if stop < size:
            break
        t = float(block[-1])
    return np.concatenate(times), np.concatenate(sites).astype(np.int64)


def generate_schedule(cfg: ChainConfig, T: float, rng: np.random.Generator | None = None
                      ) -> UpdateSchedule:
    times, sites = superposed_events(_resolve_rng(cfg, rng), cfg.box.size, T)
    return UpdateSchedule(cfg.box, float(T), times, sites)


def apply_schedule(f: HeightField, P: UpdateSchedule, D=None) -> HeightField:
    """Run the events of ``P`` at sites in ``D`` (default: whole box) on ``f``.

    Sites outside ``D`` keep their values but still feed neighbour maxima.
    """
    if P.box.d != f.box.d:
        raise ScheduleError("schedule and field dimensions differ")
    if P.box != f.box:
        raise ScheduleError("schedule and field live on different boxes")
    eng = _Engine(f)
    sites = P.sites if D is None else P.sites[as_mask(f.box, D)[P.sites]]
    eng.run(sites)
    return eng.field()


def run_continuous(cfg: ChainConfig, T: float, rng: np.random.Generator | None = None, *,
                   initial: HeightField | None = None, keep_schedule: bool = True,
                   snapshot_stride: int | None = None) -> SimResult:
    P = generate_schedule(cfg, T, rng)
    eng = _Engine(_initial(cfg, initial))
    snaps = _run_with_snapshots(eng, P.sites, snapshot_stride)
    return SimResult(eng.field(), len(P), float(T), P if keep_schedule else None, snaps)


def continuous_from_stream(cfg: ChainConfig, sites: Iterable[int], T: float,
                           initial: HeightField | None = None) -> SimResult:
    """Continuous-time result for a given ordered site stream.

    Event times do not affect heights, only the order of sites does; this
    is the coupling with :func:`run_discrete`.
    """
    stream = np.asarray(list(sites) if not isinstance(sites, np.ndarray) else sites,
                        dtype=np.int64)
    eng = _Engine(_initial(cfg, initial))
    eng.run(stream)
    return SimResult(eng.field(), int(stream.size), float(T))


def run_discrete_batch(cfg: ChainConfig, steps: int, replicas: int,
                       rng: np.random.Generator | None = None,
                       sites: np.ndarray | None = None) -> np.ndarray:
    """Final heights of many independent zero-start discrete chains.

    Pinned-zero boundary.  Draws a ``(replicas, steps)`` site matrix in
    one call unless ``sites`` is given.  Returns ``(replicas, |B_N|)``
    heights in canonical site order.
    """
    box = cfg.box
    if sites is None:
        sites = _resolve_rng(cfg, rng).integers(0, box.size, size=(replicas, steps))
    sites = np.ascontiguousarray(sites, dtype=np.int64)
    if sites.shape != (replicas, steps):
        raise ValueError("site matrix has the wrong shape")
    return _kernels.deposit_batch(int(np.prod(box.padded_shape)), box.pad_index(),
                                  box.pad_offsets(), sites)
