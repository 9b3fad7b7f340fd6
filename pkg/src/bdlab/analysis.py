"""Estimators and distributional tests for simulated surfaces.

All tests report a chi-square p-value and a total-variation distance;
which of the two decides is recorded in the report (``gate``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import _kernels
from .cluster import loglinear_fit
from .lattice import BoxSpec, CenteredSample, Site, all_symmetries, linf, unit
from .sampler import SamplerParams, evolve_further, sample_many
from .seeding import derive_seed, splitmix64

CLIP = 50
MIN_EXPECTED = 5.0
EVOLVE_TAG = 0x5EED_E70_1F


# -- histograms and reports ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class Histogram:
    """Integer histogram on ``[-clip, clip]`` with one overflow bin per side.

    ``counts[0]`` holds values below ``-clip``, ``counts[-1]`` values above.
    """

    counts: np.ndarray
    clip: int = CLIP

    @classmethod
    def from_values(cls, values, clip: int = CLIP) -> "Histogram":
        v = np.clip(np.asarray(values, dtype=np.int64), -clip - 1, clip + 1)
        return cls(np.bincount(v + clip + 1, minlength=2 * clip + 3), clip)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def labels(self) -> list:
        return ["<"] + list(range(-self.clip, self.clip + 1)) + [">"]

    def normalized(self) -> np.ndarray:
        return self.counts / self.total

    def __add__(self, other: "Histogram") -> "Histogram":
        if other.clip != self.clip:
            raise ValueError("histograms with different clips")
        return Histogram(self.counts + other.counts, self.clip)

    def moments(self) -> tuple[float, float]:
        """Mean and variance from the in-range bins (overflow excluded)."""
        vals = np.arange(-self.clip, self.clip + 1)
        c = self.counts[1:-1]
        n = c.sum()
        if n == 0:
            return float("nan"), float("nan")
        m = float((vals * c).sum() / n)
        return m, float(((vals - m) ** 2 * c).sum() / n)

    def to_dict(self) -> dict:
        return {"clip": self.clip, "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Histogram":
        return cls(np.asarray(data["counts"], dtype=np.int64), int(data["clip"]))


@dataclass
class TestReport:
    name: str
    statistic: float
    p_value: float
    tv: float
    sizes: tuple
    gate: str
    threshold: float
    decision: bool | None
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    @property
    def passed(self) -> bool:
        return self.decision is True

    def line(self) -> str:
        status = {True: "PASS", False: "FAIL", None: "UNDECIDED"}[self.decision]
        return (f"{status} {self.name}: {self.gate}={self.gated_value():.4g} "
                f"(threshold {self.threshold:g}); p={self.p_value:.3g}, tv={self.tv:.4g}, "
                f"n={self.sizes}")

    def gated_value(self) -> float:
        return {"tv": self.tv, "p": self.p_value}.get(self.gate, self.statistic)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sizes"] = list(self.sizes)
        return _jsonable(out)

    @classmethod
    def from_dict(cls, data: dict) -> "TestReport":
        data = dict(data)
        data["sizes"] = tuple(data["sizes"])
        return cls(**data)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def tv_decision(tv: float, threshold: float) -> bool:
    return tv < threshold


def _merge_bins(c1: np.ndarray, c2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge adjacent bins until every expected count is at least 5."""
    n1, n2 = c1.sum(), c2.sum()
    need = MIN_EXPECTED * (n1 + n2) / min(n1, n2)
    g1, g2 = [], []
    a = b = 0
    for x, y in zip(c1, c2):
        a += x
        b += y
        if a + b >= need:
            g1.append(a)
            g2.append(b)
            a = b = 0
    if a + b:
        if g1:
            g1[-1] += a
            g2[-1] += b
        else:
            g1.append(a)
            g2.append(b)
    return np.asarray(g1, float), np.asarray(g2, float)


def two_sample_test(h1: Histogram, h2: Histogram, *, level: float = 0.01,
                    tv_threshold: float | None = None, name: str = "two-sample") -> TestReport:
    """Chi-square homogeneity test on merged bins plus total variation.

    Decides on TV when ``tv_threshold`` is given, otherwise on the p-value
    at ``level``.
    """
    if h1.total == 0 or h2.total == 0:
        raise ValueError("empty histogram")
    if h1.clip != h2.clip:
        raise ValueError("histograms with different clips")
    tv = 0.5 * float(np.abs(h1.normalized() - h2.normalized()).sum())
    g1, g2 = _merge_bins(h1.counts, h2.counts)
    if g1.size < 2:
        stat, p = 0.0, 1.0
    else:
        n1, n2 = g1.sum(), g2.sum()
        pooled = (g1 + g2) / (n1 + n2)
        e1, e2 = n1 * pooled, n2 * pooled
        stat = float(((g1 - e1) ** 2 / e1).sum() + ((g2 - e2) ** 2 / e2).sum())
        p = float(stats.chi2.sf(stat, g1.size - 1))
    if tv_threshold is None:
        gate, thr, decision = "p", level, p > level
    else:
        gate, thr, decision = "tv", tv_threshold, tv_decision(tv, tv_threshold)
    return TestReport(name, stat, p, tv, (h1.total, h2.total), gate, thr, decision,
                      extras={"bins": int(g1.size)})


# -- sample accessors ------------------------------------------------------------


def heights_at(samples: Sequence[CenteredSample], x: Sequence[int]) -> np.ndarray:
    return np.array([s.at(x) for s in samples], dtype=np.int64)


def gradient_at(samples: Sequence[CenteredSample], x: Sequence[int], i: int = 0) -> np.ndarray:
    """``u(x + e_i) - u(x)`` for every sample."""
    y = tuple(c + (1 if j == i else 0) for j, c in enumerate(x))
    return heights_at(samples, y) - heights_at(samples, x)


# -- growth estimators -------------------------------------------------------------


@dataclass
class EstimateSeries:
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n: int

    def rows(self):
        for i in range(self.t.size):
            yield float(self.t[i]), float(self.mean[i]), float(self.stderr[i]), self.n


def _probe_runs(d: int, N: int, slices: np.ndarray, seed: int, probes: Sequence[Site],
                block_events: float = 2 ** 24) -> np.ndarray:
    """Zero-start continuous-time runs, heights at ``probes`` after each slice.

    ``slices`` is ``(R, G)``: the durations of consecutive time slices per
    replica.  Replicas are simulated in blocks; block ``b`` draws its
    counts and then its sites from ``derive_seed(seed, b)``.
    """
    box = BoxSpec(d, N)
    B = box.size
    R, G = slices.shape
    per_rep = max(B * float(slices.sum(axis=1).max(initial=0.0)), 1.0)
    block = max(1, int(block_events // per_rep))
    pad_index = box.pad_index()
    offsets = box.pad_offsets()
    centre = np.array([N + 1] * d)
    strides = box.pad_strides()
    probe_idx = np.array([int((centre + np.asarray(p)) @ strides) for p in probes], dtype=np.int64)
    n_pad = int(np.prod(box.padded_shape))
    out = np.empty((R, G, len(probes)), dtype=np.int64)
    for b, lo in enumerate(range(0, R, block)):
        hi = min(lo + block, R)
        rng = np.random.default_rng(derive_seed(seed, b))
        counts = rng.poisson(B * slices[lo:hi]).astype(np.int64)
        sites = rng.integers(0, B, size=int(counts.sum()), dtype=np.int32)
        out[lo:hi] = _kernels.run_probed(n_pad, pad_index, offsets, counts, sites, probe_idx)
    return out


def _star(d: int) -> list[Site]:
    return [(0,) * d] + [unit(d, i, s) for i in range(d) for s in (1, -1)]


def _series(t, values: np.ndarray) -> EstimateSeries:
    n = values.shape[0]
    se = values.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(values.shape[1], np.nan)
    return EstimateSeries(np.asarray(t, float), values.mean(axis=0), se, n)


def estimate_alpha_beta(d: int, N: int, t_grid: Sequence[float], replicas: int,
                        seed: int = 0) -> tuple[EstimateSeries, EstimateSeries]:
    """Mean height at the origin and mean of the max over the origin's star.

    The second dominates the first sample by sample.
    """
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) < 0) or (t.size and t[0] < 0):
        raise ValueError("time grid must be nonnegative and nondecreasing")
    if t.size and N < t.max():
        warnings.warn(f"N={N} is small against t={t.max()}; boundary effects likely",
                      stacklevel=2)
    slices = np.tile(np.diff(np.concatenate(([0.0], t))), (replicas, 1))
    h = _probe_runs(d, N, slices, seed, _star(d)).astype(float)
    return _series(t, h[:, :, 0]), _series(t, h.max(axis=2))


def check_growth_inequality(d: int, N: int, t: float, delta: float, replicas: int,
                            seed: int = 0, min_informative: float = 100.0) -> TestReport:
    """One-sided check of ``a(t+δ) - a(t) >= δ e^{-(2d+1)δ} (b(t) - a(t))``.

    Works on the paired per-replica differences.  If the expected number
    of replicas with an origin event during ``[t, t+δ)`` is below
    ``min_informative`` the report is undecided (insufficient power).
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    coef = delta * math.exp(-(2 * d + 1) * delta)
    slices = np.tile([t, delta], (replicas, 1))
    h = _probe_runs(d, N, slices, seed, _star(d)).astype(float)
    h0, h1, mx = h[:, 0, 0], h[:, 1, 0], h[:, 0, :].max(axis=1)
    inc, gap = h1 - h0, mx - h0
    diff = inc - coef * gap
    lhs, rhs = float(inc.mean()), coef * float(gap.mean())
    se = float(diff.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else float("inf")
    informative = replicas * (1 - math.exp(-delta))
    if rhs == 0.0:
        decision = True
    elif informative < min_informative:
        decision = None
    else:
        decision = bool(diff.mean() >= -3 * se)
    return TestReport("growth-inequality", float(diff.mean()), float("nan"), float("nan"),
                      (replicas,), "margin", -3 * se, decision,
                      params=dict(d=d, N=N, t=t, delta=delta, seed=seed),
                      extras=dict(lhs=lhs, rhs=rhs, se=se, alpha_t=float(h0.mean()),
                                  beta_t=float(mx.mean()), informative=informative))


def l1_time_average(d: int, N: int, t: float, replicas: int, seed: int = 0
                    ) -> tuple[float, float]:
    """Mean over ``s ~ U[0, t]`` of ``|h(s, e_1) - h(s, 0)|``, with stderr."""
    if t == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(splitmix64(seed))
    s = rng.uniform(0.0, t, size=(replicas, 1))
    h = _probe_runs(d, N, s, seed, [(0,) * d, unit(d, 0)])
    v = np.abs(h[:, 0, 1] - h[:, 0, 0]).astype(float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0


def l1_bound_check(d: int, N: int, t: float, replicas: int, seed: int = 0) -> TestReport:
    """The time-averaged neighbour gap must not grow: ratio at 2t vs t in [0.5, 2]."""
    m1, se1 = l1_time_average(d, N, t, replicas, derive_seed(seed, 1))
    m2, se2 = l1_time_average(d, N, 2 * t, replicas, derive_seed(seed, 2))
    ratio = m2 / m1 if m1 > 0 else float("nan")
    decision = bool(0.5 <= ratio <= 2.0) if m1 > 0 else None
    return TestReport("l1-bound", ratio, float("nan"), float("nan"), (replicas, replicas),
                      "ratio", 2.0, decision, params=dict(d=d, N=N, t=t, seed=seed),
                      extras=dict(mean_t=m1, se_t=se1, mean_2t=m2, se_2t=se2))


# -- stationarity and invariance --------------------------------------------------------


def _evolve_all(samples, T, seed, workers=1):
    base = splitmix64(seed ^ EVOLVE_TAG)
    return [evolve_further(s, T, np.random.default_rng(derive_seed(base, i)))
            for i, s in enumerate(samples)]


def stationarity_test(params: SamplerParams, T: float = 1.0, replicas: int | None = None,
                      window: int | None = None, tv_threshold: float = 0.03,
                      level: float = 0.01, samples: Sequence[CenteredSample] | None = None
                      ) -> TestReport:
    """Compare ``δg(0)`` before and after evolving every sample for time ``T``.

    Gated on the largest TV over the ``d`` gradient components at the
    origin; TVs of ``u(x)`` over the window are reported alongside.
    """
    full = SamplerParams(**{**params.to_dict(), "window": None})
    if samples is None:
        samples = sample_many(full, replicas)
    after = _evolve_all(samples, T, params.seed)
    d, N = params.d, params.N
    origin = (0,) * d
    worst = None
    for i in range(d):
        r = two_sample_test(Histogram.from_values(gradient_at(samples, origin, i)),
                            Histogram.from_values(gradient_at(after, origin, i)),
                            level=level, tv_threshold=tv_threshold)
        if worst is None or r.tv > worst.tv:
            worst = r
    W = min(N, 10) if window is None else window
    u_tv = {}
    for x in BoxSpec(d, W).coords():
        x = tuple(int(c) for c in x)
        if x == origin:
            continue
        u_tv[str(x)] = two_sample_test(Histogram.from_values(heights_at(samples, x)),
                                       Histogram.from_values(heights_at(after, x))).tv
    worst.name = "stationarity"
    worst.params = dict(params.to_dict(), T=T, replicas=len(samples))
    worst.extras.update(window=W, u_tv_max=max(u_tv.values(), default=0.0),
                        u_tv_mean=float(np.mean(list(u_tv.values()))) if u_tv else 0.0,
                        mean_abs_before=float(np.abs(gradient_at(samples, origin)).mean()),
                        mean_abs_after=float(np.abs(gradient_at(after, origin)).mean()))
    return worst


def _central_sites(d: int, W: int, radius: int | None) -> list[Site]:
    r = min(W // 2, 20) if radius is None else radius
    if r > W - 1:
        raise ValueError(f"radius {r} leaves no room for gradients in window {W}")
    return [tuple(int(c) for c in x) for x in BoxSpec(d, r).coords()]


def invariance_tests(samples: Sequence[CenteredSample], mode: str, *,
                     sites: Iterable[Site] | None = None, radius: int | None = None,
                     tv_threshold: float = 0.05, level: float = 0.01) -> TestReport:
    """Translation, reflection or sign-symmetry check on a set of samples.

    translation
        for each central site ``x`` and each component ``i``, the law of
        ``δg_i(x)`` against the law pooled over all tested sites;
    reflection
        the law of ``u(x)`` against ``u(s(x))`` for every lattice symmetry
        ``s`` moving ``x``;
    sign-symmetry
        the law of ``u(x)`` against that of ``-u(x)``.

    Gated on the largest TV found.
    """
    if not samples:
        raise ValueError("no samples")
    W, d = samples[0].box.N, samples[0].box.d
    if W < 2:
        raise ValueError("window too small for invariance tests")
    reports = []
    if mode == "translation":
        xs = list(sites) if sites is not None else _central_sites(d, W, radius)
        for i in range(d):
            hists = [Histogram.from_values(gradient_at(samples, x, i)) for x in xs]
            pooled = sum(hists[1:], hists[0])
            for x, hx in zip(xs, hists):
                r = two_sample_test(hx, pooled, level=level, tv_threshold=tv_threshold)
                r.extras["site"], r.extras["component"] = list(x), i
                reports.append(r)
    elif mode == "reflection":
        xs = list(sites) if sites is not None else [unit(d, 0)]
        for x in xs:
            hx = Histogram.from_values(heights_at(samples, x))
            for s in all_symmetries(d):
                y = s(x)
                if y == tuple(x):
                    continue
                if linf(y) > W:
                    raise ValueError("reflected site leaves the window")
                r = two_sample_test(hx, Histogram.from_values(heights_at(samples, y)),
                                    level=level, tv_threshold=tv_threshold)
                r.extras["pair"] = [list(x), list(y)]
                reports.append(r)
    elif mode in ("sign", "sign-symmetry"):
        xs = list(sites) if sites is not None else [unit(d, 0)]
        for x in xs:
            v = heights_at(samples, x)
            r = two_sample_test(Histogram.from_values(v), Histogram.from_values(-v),
                                level=level, tv_threshold=tv_threshold)
            r.extras["site"] = list(x)
            reports.append(r)
    else:
        raise ValueError(f"unknown invariance mode {mode!r}")
    if not reports:
        raise ValueError("nothing to test")
    worst = max(reports, key=lambda r: r.tv)
    worst.name = f"invariance-{mode}"
    worst.extras.update(checks=len(reports), min_p=min(r.p_value for r in reports),
                        mean_tv=float(np.mean([r.tv for r in reports])))
    worst.params = dict(samples[0].params, replicas=len(samples))
    return worst


# -- exploratory measurements --------------------------------------------------------


def correlation_decay(samples: Sequence[CenteredSample], pairs: Sequence[tuple[Site, Site]],
                      component: int = 0) -> list[tuple[int, float, float]]:
    """Pearson correlation of ``δg_i`` at site pairs: (l1 distance, r, stderr)."""
    n = len(samples)
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    rows = []
    for x, y in pairs:
        a = gradient_at(samples, x, component).astype(float)
        b = gradient_at(samples, y, component).astype(float)
        if a.std() == 0 or b.std() == 0:
            raise ValueError(f"degenerate variance at pair {x}, {y}")
        r = float(np.corrcoef(a, b)[0, 1])
        se = math.sqrt(max(1 - r * r, 0.0) / (n - 2))
        rows.append((sum(abs(p - q) for p, q in zip(x, y)), r, se))
    return rows


def distance_pairs(d: int, distances: Sequence[int]) -> list[tuple[Site, Site]]:
    origin = (0,) * d
    return [(origin, unit(d, 0, k)) for k in distances]


@dataclass
class TailProfile:
    histogram: Histogram
    mean: float
    variance: float
    abs_mean: float
    survival_slope: float
    n: int


def tail_profile(samples: Sequence[CenteredSample], site: Site | None = None,
                 component: int = 0, clip: int = CLIP) -> TailProfile:
    """Histogram, moments and log-survival slope of ``δg_i`` at ``site``."""
    if not samples:
        raise ValueError("no samples")
    d = samples[0].box.d
    site = (0,) * d if site is None else tuple(site)
    if len(samples) < 1000:
        warnings.warn(f"tail profile from only {len(samples)} samples", stacklevel=2)
    v = gradient_at(samples, site, component)
    hist = Histogram.from_values(v, clip)
    a = np.abs(v)
    ks = np.arange(1, int(a.max()) + 1) if a.max() > 0 else np.arange(0)
    surv = np.array([(a >= k).mean() for k in ks])
    slope = loglinear_fit(ks, surv)[0] if ks.size >= 2 else float("nan")
    return TailProfile(hist, float(v.mean()), float(v.var()), float(a.mean()), slope, v.size)
