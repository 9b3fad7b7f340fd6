"""Command line: ``bdlab sample | simulate | test <suite> | stats <kind>``.

Exit status: 0 when every gated check passes (or the command just
produces data), 1 when any check fails, 2 on usage or config errors,
3 when nothing failed but some check was undecided.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import (CLIP, Histogram, TestReport, check_growth_inequality,
                       correlation_decay, distance_pairs, estimate_alpha_beta,
                       gradient_at, invariance_tests, l1_bound_check, stationarity_test)
from .cluster import radius_tail, stabilization_check
from .dynamics import ChainConfig, generate_schedule, run_discrete, run_discrete_batch
from .lattice import BoxSpec, HeightField
from .oracles import (brute_force_chain_law, gamma_cdf_integer_shape, gamma_tail_bound,
                      geometric_count_pmf, max_mean_gap)
from .sampler import (Mode, SamplerParams, Verdict, sample_many, validate_params)
from .seeding import derive_seed

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNDECIDED = 0, 1, 2, 3

SUITES = ("oracles", "stationarity", "invariance", "cluster", "growth")
STATS = ("alpha", "correlation", "tails", "cluster-tail")

# per-command defaults applied where a flag was not given
DEFAULTS = {
    "sample": dict(d=1, N=200, replicas=1),
    "simulate": dict(d=1, N=50, replicas=1),
    "oracles": dict(d=1, N=1, replicas=100_000),
    "stationarity": dict(d=1, N=200, mode="geometric", value=5e-4, T=1.0, replicas=2000),
    "invariance": dict(d=1, N=200, mode="geometric", value=5e-4, replicas=2000),
    "cluster": dict(d=1, N=200, replicas=10_000),
    "growth": dict(d=1, N=200, T=1.0, replicas=100_000),
    "alpha": dict(d=1, N=0, T=10.0, replicas=1000),
    "correlation": dict(d=1, N=200, mode="geometric", value=5e-4, replicas=1000),
    "tails": dict(d=1, N=200, mode="geometric", value=5e-4, replicas=1000),
    "cluster-tail": dict(d=1, N=200, replicas=10_000),
}


class UsageError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--dim", dest="d", type=int, help="lattice dimension d")
    g.add_argument("--box-n", dest="N", type=int, help="box half-width N")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--p", type=float, help="geometric sampler parameter")
    mode.add_argument("--mean-time", type=float, help="exponential sampler mean time")
    mode.add_argument("--cesaro-t", type=float, help="Cesaro sampler horizon")
    g.add_argument("--time", dest="T", type=float, help="continuous time")
    g.add_argument("--steps", type=int, help="discrete steps")
    r = common.add_argument_group("run")
    r.add_argument("--replicas", type=int)
    r.add_argument("--seed", type=int, default=0, help="master seed")
    r.add_argument("--window", type=int, help="output window half-width W")
    r.add_argument("--out", type=Path, help="output path")
    r.add_argument("--format", choices=("jsonl", "csv"), default=None)
    r.add_argument("--checkpoint", type=int, help="checkpoint/snapshot stride (events)")
    r.add_argument("--force", action="store_true", help="allow out-of-window parameters")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--no-figure", action="store_true", help="skip PNG output")

    ap = argparse.ArgumentParser(prog="bdlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="draw approximately stationary surfaces")
    sim = sub.add_parser("simulate", parents=[common], help="run the chain, emit snapshots")
    sim.add_argument("--resume", action="store_true", help="continue from the checkpoint")
    sim.add_argument("--stop-after", type=int, help="stop once this many events are done")
    t = sub.add_parser("test", parents=[common], help="run a verification suite")
    t.add_argument("suite", choices=SUITES)
    t.add_argument("--input", type=Path, help="sample JSONL to test instead of sampling")
    t.add_argument("--delta", type=float, default=0.1, help="growth suite time step")
    t.add_argument("--tail-c", type=float, default=8.0, help="cluster radius factor c")
    t.add_argument("--tv", type=float, help="override the TV threshold")
    s = sub.add_parser("stats", parents=[common], help="export plot-ready tables")
    s.add_argument("kind", choices=STATS)
    s.add_argument("--input", type=Path, help="sample JSONL to summarise")
    s.add_argument("--points", type=int, default=10, help="time grid size")
    s.add_argument("--tail-c", type=float, default=8.0)
    s.add_argument("--max-distance", type=int, default=10)
    return ap


def to_config(args: argparse.Namespace) -> io.RunConfig:
    target = getattr(args, "suite", None) or getattr(args, "kind", None)
    dflt = DEFAULTS[target or args.command]
    if args.p is not None:
        mode, value = "geometric", args.p
    elif args.mean_time is not None:
        mode, value = "exponential", args.mean_time
    elif args.cesaro_t is not None:
        mode, value = "cesaro", args.cesaro_t
    else:
        mode, value = dflt.get("mode"), dflt.get("value")

    def pick(name):
        v = getattr(args, name)
        return dflt.get(name) if v is None else v

    T = pick("T") if args.steps is None or args.command != "simulate" else args.T
    fmt = args.format or ("csv" if args.command in ("simulate", "stats") else "jsonl")
    cfg = io.RunConfig(command=args.command, d=pick("d"), N=pick("N"), mode=mode,
                       value=value, T=T, steps=args.steps, replicas=pick("replicas"),
                       seed=args.seed, window=args.window,
                       out=None if args.out is None else str(args.out), format=fmt,
                       checkpoint=args.checkpoint, force=args.force, target=target)
    try:
        return cfg.validate()
    except ValueError as e:
        raise UsageError(str(e)) from None


def sampler_params(cfg: io.RunConfig, window: int | None = None) -> SamplerParams:
    if cfg.mode is None:
        raise UsageError("no sampler parameter given")
    params = SamplerParams(cfg.d, cfg.N, Mode(cfg.mode), cfg.value, seed=cfg.seed,
                           replicas=cfg.replicas, window=window)
    v = validate_params(params)
    if v.verdict is Verdict.DEGENERATE:
        raise UsageError(f"degenerate sampler parameters {params.to_dict()}")
    if not v.ok and not cfg.force:
        raise UsageError(f"{cfg.mode}={cfg.value} is outside [{v.lower:.3g}, {v.upper:.3g}]"
                         f" (recommended p {v.recommended_p:.3g}); pass --force to run anyway")
    if not v.ok:
        print(f"warning: {cfg.mode}={cfg.value} is out of window, forced", file=sys.stderr)
    return params


def _out(cfg: io.RunConfig, default: str) -> Path:
    return Path(cfg.out) if cfg.out else Path(default)


# -- sample ----------------------------------------------------------------------


def cmd_sample(cfg: io.RunConfig, workers: int = 1, figure: bool = True) -> int:
    params = sampler_params(cfg, cfg.window)
    out = _out(cfg, f"samples.{cfg.format}")
    samples = sample_many(params, cfg.replicas, workers)
    if cfg.format == "jsonl":
        io.write_jsonl(out, (io.sample_to_record(s, i) for i, s in enumerate(samples)))
    else:
        d = cfg.d
        io.write_csv(out, io.profile_header(d),
                     (row for i, s in enumerate(samples) for row in io.profile_rows(s, i)))
    v = validate_params(params)
    io.write_meta(out, cfg, records=len(samples), verdict=v.verdict.value,
                  window_bounds=[v.lower, v.upper], recommended_p=v.recommended_p)
    if figure and samples:
        from .plotting import figure_path, plot_profile
        plot_profile(samples[0], figure_path(out))
    print(f"wrote {len(samples)} samples to {out}")
    return EXIT_OK


# -- simulate --------------------------------------------------------------------


def _snapshot_rows(box: BoxSpec, snap: int, events: int, heights: np.ndarray):
    flat = heights.reshape(-1)
    for k, x in enumerate(box.coords()):
        yield (snap, events, *(int(c) for c in x), int(flat[k]))


def _checkpoint_path(out: Path) -> Path:
    return Path(str(out) + ".ckpt.json")


def cmd_simulate(cfg: io.RunConfig, resume: bool = False, stop_after: int | None = None,
                 figure: bool = True) -> int:
    box = BoxSpec(cfg.d, cfg.N)
    out = _out(cfg, f"trajectory.{cfg.format}")
    ckpt = _checkpoint_path(out)
    if resume:
        state = io.read_checkpoint(ckpt)
        saved = io.RunConfig.from_dict(state["config"])
        if (saved.d, saved.N, saved.seed, saved.steps, saved.T, saved.checkpoint) != (
                cfg.d, cfg.N, cfg.seed, cfg.steps, cfg.T, cfg.checkpoint):
            raise UsageError("checkpoint was written for a different configuration")
        rng = io.rng_from_state(state["rng"])
        done, total, snap = state["events_done"], state["total"], state["snapshot"]
        h = np.asarray(state["heights"], dtype=np.int64).reshape(box.shape)
        with open(out, "r+b") as fh:
            fh.truncate(state["out_bytes"])
    else:
        rng = np.random.default_rng(cfg.seed)
        # time mode: the continuous chain is the discrete chain run for Poisson(|B| T) steps
        total = cfg.steps if cfg.steps is not None else int(rng.poisson(box.size * cfg.T))
        done, snap = 0, 0
        h = np.zeros(box.shape, dtype=np.int64)
        _emit(out, cfg, box, 0, 0, h, new=True)
    stride = cfg.checkpoint or max(total, 1)
    ccfg = ChainConfig(box)
    field = HeightField.from_array(box, h)
    while done < total:
        if stop_after is not None and done >= stop_after:
            io.write_checkpoint(ckpt, cfg, done, total, field.heights, rng, snap,
                                out_bytes=out.stat().st_size)
            print(f"stopped after {done} of {total} events; checkpoint {ckpt}")
            return EXIT_OK
        k = min(stride, total - done)
        sites = rng.integers(0, box.size, size=k)
        field = run_discrete(ccfg, k, initial=field, sites=sites).heights
        done += k
        snap += 1
        _emit(out, cfg, box, snap, done, field.heights)
        if cfg.checkpoint:
            io.write_checkpoint(ckpt, cfg, done, total, field.heights, rng, snap,
                                out_bytes=out.stat().st_size)
    io.write_meta(out, cfg, events=total, snapshots=snap + 1)
    if figure and cfg.format == "csv" and cfg.d == 1:
        from .plotting import figure_path, plot_table
        xs = np.arange(-box.N, box.N + 1)
        plot_table(xs, {"h": field.heights}, figure_path(out), xlabel="x", ylabel="h(x)")
    print(f"{total} events, final field in {out}")
    return EXIT_OK


def _emit(out: Path, cfg: io.RunConfig, box: BoxSpec, snap: int, events: int,
          heights: np.ndarray, new: bool = False):
    mode = "w" if new else "a"
    with open(out, mode, encoding="utf-8", newline="") as fh:
        if cfg.format == "csv":
            if new:
                fh.write(",".join(["snapshot", "events"]
                                  + [f"x{i + 1}" for i in range(box.d)] + ["height"]) + "\n")
            for row in _snapshot_rows(box, snap, events, heights):
                fh.write(",".join(str(v) for v in row) + "\n")
        else:
            rec = {"schema_version": io.SCHEMA_VERSION, "snapshot": snap, "events": events,
                   "d": box.d, "N": box.N, "heights": heights.reshape(-1).tolist()}
            fh.write(io.dumps(rec) + "\n")


# -- test ------------------------------------------------------------------------


def _load_or_sample(cfg: io.RunConfig, path: Path | None, workers: int):
    if path is not None:
        return io.read_samples(path)
    return sample_many(sampler_params(cfg), cfg.replicas, workers)


def oracle_reports(cfg: io.RunConfig) -> list[TestReport]:
    """Brute-force law, event-count law, gamma bound and max-mean inequality."""
    reports = []
    d, N, R = cfg.d, cfg.N, cfg.replicas
    box = BoxSpec(d, N)
    for steps in range(1, 6):
        law = brute_force_chain_law(d, N, steps)
        support = law.support()
        where = {o: k for k, o in enumerate(support)}
        rng = np.random.default_rng(derive_seed(cfg.seed, steps))
        runs = run_discrete_batch(ChainConfig(box), steps, R, rng)
        codes = np.array([where[tuple(r)] for r in map(tuple, runs)])
        observed = np.bincount(codes, minlength=len(support))
        expected = np.array([float(law[o]) for o in support]) * R
        reports.append(_gof(f"brute-force-law steps={steps}", observed, expected,
                            dict(d=d, N=N, steps=steps, replicas=R)))
    # event count at exponential time a=1 on B_2, d=1
    B, a = 5, 1.0
    rng = np.random.default_rng(derive_seed(cfg.seed, 100))
    t = rng.exponential(a, size=R)
    k = rng.poisson(B * t)
    top = int(k.max())
    observed = np.bincount(k, minlength=top + 2)[: top + 1]
    expected = np.array([geometric_count_pmf(B, a, j) for j in range(top + 1)]) * R
    expected[-1] += R - expected.sum()
    reports.append(_gof("event-count-law", observed, expected, dict(B=B, a=a, replicas=R)))
    worst = max(gamma_cdf_integer_shape(n, a * n) - gamma_tail_bound(n, a)
                for n in range(1, 51) for a in np.arange(1, 10) / 10)
    reports.append(TestReport("gamma-tail-bound", worst, float("nan"), float("nan"), (450,),
                              "margin", 0.0, bool(worst <= 0.0)))
    rng = np.random.default_rng(derive_seed(cfg.seed, 200))
    bad = 0
    for _ in range(min(R, 10_000)):
        n = int(rng.integers(2, 8))
        xs = [int(v) for v in rng.integers(-20, 21, size=n)]
        lhs, rhs = max_mean_gap(xs)
        bad += lhs < rhs
    reports.append(TestReport("max-mean-gap", float(bad), float("nan"), float("nan"),
                              (min(R, 10_000),), "violations", 0.0, bad == 0))
    return reports


def _gof(name, observed, expected, params, level=0.01) -> TestReport:
    """Chi-square goodness of fit on bins merged to expected count >= 5."""
    from scipy import stats
    obs, exp = [], []
    a = b = 0.0
    for o, e in zip(observed, expected):
        a, b = a + o, b + e
        if b >= 5:
            obs.append(a)
            exp.append(b)
            a = b = 0.0
    if b and obs:
        obs[-1] += a
        exp[-1] += b
    obs, exp = np.asarray(obs), np.asarray(exp)
    if obs.size < 2:
        stat, p = 0.0, 1.0
    else:
        stat = float(((obs - exp) ** 2 / exp).sum())
        p = float(stats.chi2.sf(stat, obs.size - 1))
    tv = 0.5 * float(np.abs(np.asarray(observed) / max(np.sum(observed), 1)
                            - np.asarray(expected) / np.sum(expected)).sum())
    return TestReport(name, stat, p, tv, (int(np.sum(observed)),), "p", level, p > level,
                      params=params, extras={"bins": int(obs.size)})


def cmd_test(cfg: io.RunConfig, suite: str, args) -> int:
    reports: list[TestReport] = []
    if suite == "oracles":
        reports = oracle_reports(cfg)
    elif suite == "stationarity":
        params = sampler_params(cfg)
        samples = None if args.input is None else io.read_samples(args.input)
        reports = [stationarity_test(params, cfg.T, cfg.replicas, cfg.window,
                                     tv_threshold=args.tv or 0.03, samples=samples)]
    elif suite == "invariance":
        samples = _load_or_sample(cfg, args.input, args.workers)
        tv = args.tv or 0.05
        reports = [invariance_tests(samples, m, tv_threshold=tv)
                   for m in ("translation", "reflection", "sign-symmetry")]
    elif suite == "cluster":
        reports = cluster_reports(cfg, args.tail_c)
    elif suite == "growth":
        reports = [check_growth_inequality(cfg.d, cfg.N, cfg.T, args.delta, cfg.replicas,
                                           seed=cfg.seed),
                   l1_bound_check(cfg.d, cfg.N, max(cfg.T, 1.0), min(cfg.replicas, 5000),
                                  seed=cfg.seed)]
    out = _out(cfg, f"report-{suite}.jsonl")
    if cfg.format == "jsonl":
        io.write_jsonl(out, ({"schema_version": io.SCHEMA_VERSION, **r.to_dict()}
                             for r in reports))
    else:
        io.write_csv(out, ["name", "decision", "gate", "value", "threshold", "p_value", "tv"],
                     ((r.name, r.decision, r.gate, r.gated_value(), r.threshold,
                       r.p_value, r.tv) for r in reports))
    io.write_meta(out, cfg)
    for r in reports:
        print(r.line())
    return exit_status(reports)


def cluster_reports(cfg: io.RunConfig, c: float) -> list[TestReport]:
    box = BoxSpec(cfg.d, min(cfg.N, 20))
    rng = np.random.default_rng(derive_seed(cfg.seed, 0))
    fails = 0
    n_stab = 200
    for _ in range(n_stab):
        f = HeightField.from_array(box, rng.integers(0, 5, size=box.shape))
        P = generate_schedule(ChainConfig(box), 3.0, rng)
        rep = stabilization_check(f, P, box.origin, rng=rng)
        fails += not rep.passed and not rep.escaped
    reports = [TestReport("stabilization", float(fails), float("nan"), float("nan"),
                          (n_stab,), "violations", 0.0, fails == 0)]
    tail = radius_tail(cfg.d, cfg.N, [5, 10, 15, 20], cfg.replicas, c=c, seed=cfg.seed)
    ok = bool(tail.slope < 0 and tail.r2 > 0.9) if not math.isnan(tail.r2) else False
    reports.append(TestReport("cluster-tail", tail.slope, float("nan"), float("nan"),
                              (cfg.replicas,), "r2", 0.9, ok,
                              params=dict(d=cfg.d, N=cfg.N, c=c),
                              extras=dict(prob=tail.prob.tolist(), r2=tail.r2,
                                          censored=tail.censored.tolist())))
    return reports


def exit_status(reports) -> int:
    decisions = [r.decision for r in reports]
    if any(d is False for d in decisions):
        return EXIT_FAIL
    if any(d is None for d in decisions):
        return EXIT_UNDECIDED
    return EXIT_OK


# -- stats -----------------------------------------------------------------------


def cmd_stats(cfg: io.RunConfig, kind: str, args, figure: bool = True) -> int:
    from . import plotting
    out = _out(cfg, f"{kind}.csv")
    png = plotting.figure_path(out)
    if kind == "alpha":
        t = np.linspace(cfg.T / args.points, cfg.T, args.points)
        alpha, _ = estimate_alpha_beta(cfg.d, cfg.N, t, cfg.replicas, seed=cfg.seed)
        io.write_csv(out, ["t", "mean"], ((r[0], r[1]) for r in alpha.rows()))
        if figure:
            plotting.plot_table(alpha.t, {"mean height": alpha.mean}, png, xlabel="t",
                                ylabel="E h(t,0)", errors={"mean height": alpha.stderr})
    elif kind == "correlation":
        samples = _load_or_sample(cfg, args.input, args.workers)
        W = samples[0].box.N
        dist = range(1, min(args.max_distance, W - 1) + 1)
        rows = correlation_decay(samples, distance_pairs(cfg.d, dist))
        io.write_csv(out, ["distance", "correlation", "stderr"], rows)
        if figure:
            a = np.array(rows)
            plotting.plot_table(a[:, 0], {"r": a[:, 1]}, png, xlabel="distance",
                                ylabel="correlation", errors={"r": a[:, 2]})
    elif kind == "tails":
        samples = _load_or_sample(cfg, args.input, args.workers)
        v = gradient_at(samples, (0,) * samples[0].box.d)
        hist = Histogram.from_values(v, CLIP)
        # overflow bins are reported at -(clip+1) and clip+1
        values = np.arange(-CLIP - 1, CLIP + 2)
        keep = hist.counts > 0
        io.write_csv(out, ["value", "count"], zip(values[keep].tolist(),
                                                  hist.counts[keep].tolist()))
        if figure:
            plotting.plot_histogram(values[keep], hist.counts[keep], png, xlabel="gradient")
    elif kind == "cluster-tail":
        tail = radius_tail(cfg.d, cfg.N, [5, 10, 15, 20], cfg.replicas, c=args.tail_c,
                           seed=cfg.seed)
        io.write_csv(out, ["T", "prob", "stderr"], ((r[0], r[1], r[2]) for r in tail.rows()))
        if figure:
            plotting.plot_table(tail.T, {"P(rho > cT)": tail.prob}, png, xlabel="T",
                                ylabel="tail probability", logy=True,
                                errors={"P(rho > cT)": tail.stderr})
    io.write_meta(out, cfg)
    print(f"wrote {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = to_config(args)
        figure = not args.no_figure
        if args.command == "sample":
            return cmd_sample(cfg, args.workers, figure)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.resume, args.stop_after, figure)
        if args.command == "test":
            return cmd_test(cfg, args.suite, args)
        return cmd_stats(cfg, args.kind, args, figure)
    except (UsageError, io.SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
