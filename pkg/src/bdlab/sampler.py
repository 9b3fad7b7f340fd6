"""Approximately stationary centred surfaces.

Three families of random times are supported, all run from the zero
field on ``B_N`` with the pinned-zero boundary and then re-centred:

``geometric(p)``
    a Geometric(p) number of discrete uniform-site updates, support
    ``{0, 1, 2, ...}`` with ``P(n=j) = p (1-p)^j``;
``exponential(a)``
    continuous time to an Exponential time of mean ``a``;
``cesaro(t)``
    continuous time to a Uniform[0, t] time.

The update count of ``exponential(a)`` is Geometric with success
probability ``1/(|B_N| a + 1)``, so the first two families coincide in
law when the parameters are matched.
"""
from __future__ import annotations

import functools
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .dynamics import ChainConfig, run_continuous, run_discrete
from .lattice import Boundary, BoxSpec, CenteredSample, HeightField, recenter
from .seeding import derive_seed, map_replicas


class Mode(str, Enum):
    GEOMETRIC = "geometric"
    EXPONENTIAL = "exponential"
    CESARO = "cesaro"


class Verdict(str, Enum):
    VALID = "valid"
    OUT_OF_WINDOW = "out-of-window"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class SamplerParams:
    d: int
    N: int
    mode: Mode
    value: float
    seed: int = 0
    replicas: int = 1
    window: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))

    @classmethod
    def geometric(cls, d: int, N: int, p: float, **kw) -> "SamplerParams":
        return cls(d, N, Mode.GEOMETRIC, p, **kw)

    @classmethod
    def exponential(cls, d: int, N: int, a: float, **kw) -> "SamplerParams":
        return cls(d, N, Mode.EXPONENTIAL, a, **kw)

    @classmethod
    def cesaro(cls, d: int, N: int, t: float, **kw) -> "SamplerParams":
        return cls(d, N, Mode.CESARO, t, **kw)

    @property
    def box(self) -> BoxSpec:
        return BoxSpec(self.d, self.N)

    @property
    def W(self) -> int:
        return self.N if self.window is None else self.window

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mode"] = self.mode.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerParams":
        return cls(**data)


@dataclass(frozen=True)
class Validation:
    verdict: Verdict
    lower: float
    upper: float
    recommended_p: float

    @property
    def ok(self) -> bool:
        return self.verdict is Verdict.VALID


def recommended_p(d: int, N: int) -> float:
    """Log-midpoint of the admissible window ``[N^-(d+1), N^-d]``."""
    return float(N) ** -(d + 0.5)


def validate_params(params: SamplerParams) -> Validation:
    """Check the sampler parameter against its admissible window.

    geometric: ``N^-(d+1) <= p <= N^-d``; exponential and cesaro:
    ``1 <= value <= N``.  Impossible values are degenerate.
    """
    d, N, v = params.d, params.N, params.value
    rec = recommended_p(d, N) if N >= 1 else float("nan")
    if params.mode is Mode.GEOMETRIC:
        lo, hi = (float(N) ** -(d + 1), float(N) ** -d) if N >= 1 else (1.0, 1.0)
        degenerate = not 0 < v < 1
    else:
        lo, hi = 1.0, float(N)
        degenerate = v < 0 or (params.mode is Mode.EXPONENTIAL and v == 0)
    if degenerate or params.N < 1 or (params.window is not None
                                       and not 0 <= params.window <= N):
        return Validation(Verdict.DEGENERATE, lo, hi, rec)
    verdict = Verdict.VALID if lo <= v <= hi else Verdict.OUT_OF_WINDOW
    return Validation(verdict, lo, hi, rec)


def draw_geometric_count(p: float, rng: np.random.Generator) -> int:
    """``P(n=j) = p (1-p)^j`` for ``j >= 0``."""
    return int(rng.geometric(p)) - 1


def _finish(h: HeightField, params: SamplerParams, n: int, elapsed: float | None,
            seed: int | None) -> CenteredSample:
    s = recenter(h)
    s.n_updates, s.elapsed, s.seed = int(n), elapsed, seed
    s.params = params.to_dict()
    return s.restrict(params.W) if params.W != params.N else s


def _config(params: SamplerParams) -> ChainConfig:
    return ChainConfig(params.box, Boundary.PINNED_ZERO, params.seed)


def sample_stationary(params: SamplerParams, rng: np.random.Generator | None = None, *,
                      n: int | None = None, site_rng: np.random.Generator | None = None,
                      seed: int | None = None) -> CenteredSample:
    """Geometric sampler.

    ``n`` forces the update count and ``site_rng`` supplies the site
    stream; both exist for coupling with :func:`sample_exponential`.
    """
    if params.mode is not Mode.GEOMETRIC:
        raise ValueError("sample_stationary needs geometric params")
    p = params.value
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    rng = np.random.default_rng(params.seed) if rng is None else rng
    if n is None:
        n = draw_geometric_count(p, rng)
    cfg = _config(params)
    res = run_discrete(cfg, n, site_rng if site_rng is not None else rng)
    return _finish(res.heights, params, n, None, seed)


def sample_exponential(params: SamplerParams, rng: np.random.Generator | None = None, *,
                       site_rng: np.random.Generator | None = None,
                       seed: int | None = None) -> CenteredSample:
    """Surface at an Exponential time of mean ``a``.

    With ``site_rng`` the time and event count come from ``rng`` and the
    ordered site stream from ``site_rng``, exactly as the geometric
    sampler consumes it.
    """
    if params.mode is not Mode.EXPONENTIAL:
        raise ValueError("sample_exponential needs exponential params")
    a = params.value
    if a < 0:
        raise ValueError("mean time must be >= 0")
    rng = np.random.default_rng(params.seed) if rng is None else rng
    t = float(rng.exponential(a)) if a > 0 else 0.0
    cfg = _config(params)
    if site_rng is None:
        res = run_continuous(cfg, t, rng, keep_schedule=False)
        return _finish(res.heights, params, res.events, t, seed)
    k = int(rng.poisson(params.box.size * t))
    res = run_discrete(cfg, k, site_rng)
    return _finish(res.heights, params, k, t, seed)


def sample_cesaro(params: SamplerParams, rng: np.random.Generator | None = None, *,
                  seed: int | None = None) -> CenteredSample:
    if params.mode is not Mode.CESARO:
        raise ValueError("sample_cesaro needs cesaro params")
    if params.value < 0:
        raise ValueError("t must be >= 0")
    rng = np.random.default_rng(params.seed) if rng is None else rng
    s = float(rng.uniform(0.0, params.value)) if params.value > 0 else 0.0
    res = run_continuous(_config(params), s, rng, keep_schedule=False)
    return _finish(res.heights, params, res.events, s, seed)


_SAMPLERS = {
    Mode.GEOMETRIC: sample_stationary,
    Mode.EXPONENTIAL: sample_exponential,
    Mode.CESARO: sample_cesaro,
}


def sample(params: SamplerParams, rng: np.random.Generator | None = None,
           seed: int | None = None) -> CenteredSample:
    return _SAMPLERS[params.mode](params, rng, seed=seed)


def _one(params: SamplerParams, index: int) -> CenteredSample:
    s = derive_seed(params.seed, index)
    return sample(params, np.random.default_rng(s), seed=s)


def sample_many(params: SamplerParams, replicas: int | None = None,
                workers: int = 1, start: int = 0) -> list[CenteredSample]:
    """Replicas ``start .. start+replicas-1``, each on its derived seed."""
    replicas = params.replicas if replicas is None else replicas
    return map_replicas(functools.partial(_one, params), range(start, start + replicas), workers)


class WindowTooSmallError(ValueError):
    pass


def evolve_further(sample_: CenteredSample, T: float,
                   rng: np.random.Generator | None = None) -> CenteredSample:
    """Run the continuous dynamics for extra time ``T`` and re-centre.

    The surface is rebuilt in raw coordinates (heights + raw origin
    height) so the pinned-zero boundary sits where it did originally;
    this needs the sample to cover the whole box.
    """
    N = sample_.params.get("N", sample_.box.N)
    if sample_.box.N != N:
        raise WindowTooSmallError(f"sample window {sample_.box.N} is smaller than box N={N}")
    if T == 0:
        return replace_sample(sample_)
    rng = np.random.default_rng() if rng is None else rng
    box = sample_.box
    raw = HeightField.from_array(box, sample_.heights + sample_.raw_origin)
    res = run_continuous(ChainConfig(box), T, rng, initial=raw, keep_schedule=False)
    out = recenter(res.heights)
    out.n_updates = (sample_.n_updates or 0) + res.events
    out.elapsed = (sample_.elapsed or 0.0) + T if sample_.elapsed is not None else None
    out.seed = sample_.seed
    out.params = dict(sample_.params)
    return out


def replace_sample(s: CenteredSample, **changes) -> CenteredSample:
    fields = dict(box=s.box, heights=s.heights.copy(), raw_origin=s.raw_origin,
                  n_updates=s.n_updates, elapsed=s.elapsed, seed=s.seed, params=dict(s.params))
    fields.update(changes)
    return CenteredSample(**fields)


PROFILE_DEMO = SamplerParams.geometric(1, 1000, 1e-4, window=40)
