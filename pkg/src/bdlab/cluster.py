"""Backward influence sets of the graphical construction.

Starting from ``t_0 = T`` and ``S_0 = {x}``, each step takes the latest
event strictly before the current time at some member ``y`` and adds the
neighbours of ``y``.  Only events and initial heights inside the final
set can influence the height at ``x`` at time ``T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .dynamics import ChainConfig, UpdateSchedule, apply_schedule, generate_schedule
from .lattice import BoxSpec, HeightField, Site
from .seeding import derive_seed


@dataclass(frozen=True, eq=False)
class ClusterResult:
    root: Site
    sites: frozenset
    K: int
    times: np.ndarray
    rho: int
    escaped: bool = False

    @property
    def size(self) -> int:
        return len(self.sites)


def _box_mask_padded(box: BoxSpec) -> np.ndarray:
    m = np.zeros(box.padded_shape, dtype=bool)
    m[(slice(1, -1),) * box.d] = True
    return m.reshape(-1)


def explore(x: Sequence[int], P: UpdateSchedule) -> ClusterResult:
    """Influence set ``S(x, P)`` with its stop index, step times and radius.

    Sites that fall outside the box carrying ``P`` have no events there;
    if any enter the set, ``escaped`` is set and the result is only a
    lower bound for the infinite-lattice set.
    """
    box = P.box
    x = tuple(int(c) for c in x)
    if not box.contains(x):
        raise ValueError(f"root {x} is outside the schedule's box {box}")
    pad_index = box.pad_index()
    live = P.times < P.horizon
    event_pad = pad_index[P.sites[live]]
    root_pad = int(pad_index[box.index(x)])
    member, steps, escaped = _kernels.explore_backward(
        event_pad, root_pad, box.pad_offsets(), _box_mask_padded(box),
        int(np.prod(box.padded_shape)))
    idx = np.flatnonzero(member)
    coords = np.stack(np.unravel_index(idx, box.padded_shape), axis=1) - (box.N + 1)
    sites = frozenset(tuple(int(c) for c in row) for row in coords)
    rho = int(np.abs(coords - np.asarray(x)).sum(axis=1).max())
    return ClusterResult(x, sites, int(steps.size), P.times[live][steps], rho, bool(escaped))


@dataclass
class StabilizationReport:
    site: Site
    value: int | None
    passed: bool
    escaped: bool
    values: dict = field(default_factory=dict)


def stabilization_check(f: HeightField, P: UpdateSchedule, x: Sequence[int],
                        domains: Sequence | None = None,
                        rng: np.random.Generator | None = None,
                        n_random: int = 3) -> StabilizationReport:
    """Check that the height at ``x`` is the same for every ``D ⊇ S(x, P)``.

    Tested domains: ``S`` itself, the whole box, any given ``domains``
    (each is united with ``S``), and ``n_random`` random supersets.
    """
    x = tuple(x)
    cl = explore(x, P)
    if cl.escaped:
        return StabilizationReport(x, None, False, True)
    box = f.box
    s_mask = np.zeros(box.size, dtype=bool)
    for y in cl.sites:
        s_mask[box.index(y)] = True
    tested = {"S": s_mask, "box": np.ones(box.size, dtype=bool)}
    for k, D in enumerate(domains or ()):
        m = s_mask.copy()
        for y in D:
            m[box.index(y)] = True
        tested[f"given{k}"] = m
    if n_random:
        rng = np.random.default_rng(0) if rng is None else rng
        for k in range(n_random):
            tested[f"random{k}"] = s_mask | (rng.random(box.size) < rng.random())
    values = {name: apply_schedule(f, P, m).at(x) for name, m in tested.items()}
    ref = values["S"]
    return StabilizationReport(x, ref, all(v == ref for v in values.values()), False, values)


@dataclass
class RadiusTail:
    d: int
    N: int
    c: float
    T: np.ndarray
    prob: np.ndarray
    stderr: np.ndarray
    censored: np.ndarray
    replicas: int
    slope: float
    intercept: float
    r2: float

    def rows(self):
        for i in range(self.T.size):
            yield (float(self.T[i]), float(self.prob[i]), float(self.stderr[i]),
                   int(self.censored[i]))


def loglinear_fit(x: np.ndarray, p: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit of ``log p`` on ``x`` over the positive entries.

    Returns (slope, intercept, R^2); NaNs when fewer than two points are
    usable.
    """
    keep = p > 0
    if keep.sum() < 2:
        return float("nan"), float("nan"), float("nan")
    xs, ys = np.asarray(x, float)[keep], np.log(p[keep])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else float("nan")
    return float(slope), float(intercept), r2


def radius_tail(d: int, N: int, T_grid: Sequence[float], replicas: int, c: float = 8.0,
                seed: int = 0) -> RadiusTail:
    """Monte Carlo estimate of ``P(rho(0, P) > c T)`` on ``B_N`` for each ``T``.

    A set that leaves the box is right-censored at ``rho >= N + 1``; it
    counts as exceeding ``cT`` when ``N + 1 > cT`` and is otherwise
    evaluated on its observed radius.  Censoring counts are reported.
    """
    box = BoxSpec(d, N)
    cfg = ChainConfig(box)
    origin = box.origin
    T_arr = np.asarray(T_grid, dtype=float)
    prob = np.zeros(T_arr.size)
    cens = np.zeros(T_arr.size, dtype=np.int64)
    for g, T in enumerate(T_arr):
        hits = 0
        for r in range(replicas):
            rng = np.random.default_rng(derive_seed(seed, g * replicas + r))
            cl = explore(origin, generate_schedule(cfg, float(T), rng))
            if cl.escaped:
                cens[g] += 1
                hits += (N + 1 > c * T) or cl.rho > c * T
            else:
                hits += cl.rho > c * T
        prob[g] = hits / replicas if replicas else float("nan")
    stderr = np.sqrt(prob * (1 - prob) / max(replicas, 1))
    slope, intercept, r2 = loglinear_fit(T_arr, prob)
    return RadiusTail(d, N, c, T_arr, prob, stderr, cens, replicas, slope, intercept, r2)
