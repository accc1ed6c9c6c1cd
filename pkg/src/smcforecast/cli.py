"""Command line harness.

Subcommands::

    returns               prices CSV -> percent log-return CSV, prints s and T
    estimate              PMMH on the training window -> samples + diagnostics
    filter                run sisr | lw1 | lw2 | swarm over the full series
    compare               cumulative evidence and relative-evidence simplex
    replicate-posteriors  repeated Liu-West runs vs a PMMH reference

Values come from defaults, then ``--config FILE`` (``key = value``
lines), then flags.  Every output file begins with the resolved
configuration as ``#`` comments.  Wall-clock timings go to stderr only,
so outputs are byte-identical across runs with the same seed.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import csvio, diagnostics
from .data import load_prices, log_returns, sample_prices_path, split_by_year
from .filters import (
    AuxiliaryLiuWestFilter,
    DegenerateCloudError,
    LiuWestConfig,
    LiuWestFilter,
    ParticleSwarmFilter,
    SISRFilter,
)
from .model import PARAM_NAMES, SV, ConstraintError
from .pmmh import InitializationError, ProposalConfig, pmmh_run
from .rng import FILTER, PMMH, REPLICATE, THETA, NoiseSource, derive, generator


class UsageError(ValueError):
    pass


# --- helpers -------------------------------------------------------------------

def _log(msg):
    print(msg, file=sys.stderr)


def _load_series(cfg):
    if cfg.input:
        return csvio.read_returns(cfg.input)
    return log_returns(load_prices(sample_prices_path()))


def _training_window(cfg):
    series = _load_series(cfg)
    split = split_by_year(series, cfg.cutoff_year)
    return split.train(series.returns), split


def _proposal_config(cfg, n_iterations=None):
    return ProposalConfig(
        n_iterations=cfg.n_iterations if n_iterations is None else n_iterations,
        n_filter_replicates=cfg.n_replicates,
        n_state_particles=cfg.n_particles or cfgmod.DEFAULT_PARTICLES["pmmh"],
        proposal_scale=cfg.proposal_scale,
        resample_threshold=cfg.resample_threshold if cfg.resample_threshold is not None else 0.5,
        workers=cfg.workers,
    )


def _chain_path(out: Path, c: int) -> Path:
    return out if c == 0 else out.with_name(f"{out.stem}_chain{c}{out.suffix}")


def _posterior_draws(cfg) -> np.ndarray:
    if not cfg.theta_samples:
        raise UsageError(f"theta source {cfg.source!r} needs --samples")
    s = csvio.read_samples(cfg.theta_samples)["theta"]
    start = int(math.floor(cfg.burn_in * s.shape[0]))
    s = s[start::cfg.thin]
    if s.shape[0] == 0:
        raise UsageError(f"{cfg.theta_samples}: no posterior samples after burn-in")
    return s


def resolve_theta(cfg, n_draws: int) -> np.ndarray:
    """Parameter draws (n_draws, 4) for a filter, per ``cfg.source``.

    ``fixed`` parses ``--theta``; ``mean`` uses the posterior mean;
    ``posterior`` resamples posterior rows with replacement; ``uniform``
    draws independently inside each parameter's 95% credible interval.
    """
    src = cfg.source
    if src == "fixed":
        if not cfg.theta_fixed:
            raise UsageError("theta source 'fixed' needs --theta mu,phi,sigma_sq,rho")
        theta = np.array([float(v) for v in cfg.theta_fixed.split(",")])
        if theta.shape != (4,):
            raise UsageError("--theta needs 4 comma-separated values")
        SV.check(theta)
        return np.tile(theta, (n_draws, 1))
    post = _posterior_draws(cfg)
    rng = generator(cfg.seed, THETA)
    if src == "mean":
        return np.tile(post.mean(axis=0), (n_draws, 1))
    if src == "posterior":
        return post[rng.integers(0, post.shape[0], n_draws)]
    summ = diagnostics.posterior_summary(post, PARAM_NAMES)
    lo = np.array([p.lower for p in summ])
    hi = np.array([p.upper for p in summ])
    return rng.uniform(lo, hi, (n_draws, 4))


# --- commands --------------------------------------------------------------------

def cmd_returns(cfg, args):
    prices = load_prices(args.prices or sample_prices_path())
    series = log_returns(prices)
    split = split_by_year(series, cfg.cutoff_year)
    if cfg.output:
        header = cfgmod.echo_lines(cfg, "returns") + [f"# s = {split.s}", f"# T = {split.T}"]
        csvio.write_returns(cfg.output, series, header)
    print(f"s={split.s} T={split.T}")
    return 0


def _write_diagnostics(outs, cfg, diag_dir: Path, header):
    kept = [o.discard(cfg.burn_in, cfg.thin) for o in outs]
    pooled = np.concatenate([k.samples for k in kept])
    if pooled.shape[0] == 0:
        _log("no draws left after burn-in; diagnostics skipped")
        return
    summ = diagnostics.posterior_summary(pooled, PARAM_NAMES)
    r = np.full(4, math.nan)
    if len(kept) >= 2:
        try:
            r = diagnostics.rhat(np.stack([k.samples for k in kept]))
        except ValueError as exc:
            _log(f"R-hat skipped: {exc}")
    first = kept[0].samples
    rows = []
    for j, p in enumerate(summ):
        try:
            mcse = diagnostics.batch_means_se(first[:, j])
        except ValueError:
            mcse = math.nan
        rows.append((p.name, p.mean, p.sd, p.lower, p.upper, mcse, float(r[j])))
    csvio.write_table(diag_dir / "report.csv", ("parameter", "mean", "sd", "lower", "upper", "mcse", "rhat"),
                      rows, header + [f"# acceptance_rate = {[o.acceptance_rate for o in outs]}"])
    for j, name in enumerate(PARAM_NAMES):
        csvio.write_table(diag_dir / f"trace_{name}.csv", ("iteration", "value"),
                          ((i + 1, v) for i, v in enumerate(outs[0].samples[:, j])), header)
        lag = min(cfg.max_lag, first.shape[0] - 1)
        try:
            vals = diagnostics.acf(first[:, j], lag)
        except ValueError as exc:
            _log(f"acf for {name} skipped: {exc}")
            continue
        csvio.write_table(diag_dir / f"acf_{name}.csv", ("lag", "value"), enumerate(vals), header)


def cmd_estimate(cfg, args):
    if not cfg.output:
        raise UsageError("estimate needs --out")
    y, split = _training_window(cfg)
    pc = _proposal_config(cfg)
    header = cfgmod.echo_lines(cfg, "estimate") + [f"# s = {split.s}"]
    out = Path(cfg.output)
    outs = []
    for c in range(cfg.chains):
        t0 = time.perf_counter()
        res = pmmh_run(y, pc, seed=derive(cfg.seed, PMMH, c))
        _log(f"chain {c}: {len(res)} iterations, acceptance {res.acceptance_rate:.3f}, "
             f"{time.perf_counter() - t0:.2f} s")
        csvio.write_samples(_chain_path(out, c), res, header + [f"# chain = {c}"])
        outs.append(res)
    if cfg.n_iterations == 0:
        _log("zero iterations; diagnostics skipped")
        return 0
    diag_dir = Path(args.diagnostics_dir) if args.diagnostics_dir else out.with_name(f"{out.stem}_diagnostics")
    _write_diagnostics(outs, cfg, diag_dir, header)
    return 0


def build_filter(cfg):
    alg = cfg.algorithm
    N = cfg.particles
    seed = derive(cfg.seed, FILTER)
    if alg == "sisr":
        return SISRFilter(resolve_theta(cfg, 1)[0], N, NoiseSource(seed, 0), threshold=cfg.threshold)
    if alg in ("lw1", "lw2"):
        lwc = LiuWestConfig(delta=cfg.delta, n_particles=N, resample_threshold=cfg.threshold)
        cls = AuxiliaryLiuWestFilter if alg == "lw1" else LiuWestFilter
        return cls(resolve_theta(cfg, N), lwc, NoiseSource(seed, 0))
    if alg == "swarm":
        return ParticleSwarmFilter(resolve_theta(cfg, cfg.n_theta), N, seed, threshold=cfg.threshold,
                                   weighting=cfg.weighting, workers=cfg.workers)
    raise UsageError(f"filter does not run algorithm {alg!r}")


def cmd_filter(cfg, args):
    if not cfg.output:
        raise UsageError("filter needs --out")
    y = _load_series(cfg).returns
    filt = build_filter(cfg)
    header = cfgmod.echo_lines(cfg, "filter")
    t0 = time.perf_counter()
    with csvio.RecordWriter(cfg.output, filt.algorithm_id, header) as w:
        for t in range(y.shape[0]):
            w.write(filt.init(y[0]) if t == 0 else filt.step(y[t], y[t - 1]))
    _log(f"{filt.algorithm_id}: {y.shape[0]} steps in {time.perf_counter() - t0:.3f} s "
         "(wall-clock; magnitudes are hardware-specific)")
    return 0


def cmd_compare(cfg, args):
    files = args.records
    if len(files) < 2:
        raise UsageError("compare needs at least 2 record files")
    recs = [csvio.read_records(f) for f in files]
    t = recs[0]["time_index"]
    for f, r in zip(files, recs):
        if r["time_index"].shape != t.shape or np.any(r["time_index"] != t):
            raise UsageError(f"{f}: time indices do not align with {files[0]}")
    keep = t >= args.start
    names, seen = [], {}
    for r in recs:
        base = r["algorithm_id"]
        seen[base] = seen.get(base, 0) + 1
        names.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    ev = [r["log_cond_evidence"][keep] for r in recs]
    out = Path(args.out_dir)
    header = cfgmod.echo_lines(cfg, "compare") + [f"# inputs = {','.join(str(f) for f in files)}",
                                                  f"# coords = {','.join(names)}"]
    cum = np.column_stack([diagnostics.cumulative_log_evidence(e) for e in ev])
    csvio.write_table(out / "cumulative.csv", ("time_index", *names),
                      ((ti, *row) for ti, row in zip(t[keep], cum)), header)
    simplex = diagnostics.simplex_series(ev)
    csvio.write_table(out / "simplex.csv", ("time", *(f"coord{k + 1}" for k in range(len(ev)))),
                      ((ti, *row) for ti, row in zip(t[keep], simplex)), header)
    return 0


def cmd_replicate_posteriors(cfg, args):
    if not cfg.output:
        raise UsageError("replicate-posteriors needs --out")
    y, split = _training_window(cfg)
    algs = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    if not algs or any(a not in ("lw1", "lw2") for a in algs):
        raise UsageError("--algorithms takes a comma list of lw1, lw2")
    N = cfg.n_particles or cfgmod.DEFAULT_PARTICLES["lw1"]
    lwc = LiuWestConfig(delta=cfg.delta, n_particles=N, resample_threshold=cfg.resample_threshold or 0.5)
    rows = []
    for a_idx, alg in enumerate(algs):
        cls = AuxiliaryLiuWestFilter if alg == "lw1" else LiuWestFilter
        for r in range(cfg.lw_replicates):
            theta0 = SV.sample_prior(generator(cfg.seed, THETA, a_idx, r), size=N)
            f = cls(theta0, lwc, NoiseSource(derive(cfg.seed, REPLICATE, a_idx, r)))
            f.run(y)
            params, w = f.parameter_samples()
            rows.extend((alg, r, i, wi, *p) for i, (p, wi) in enumerate(zip(params, w)))
    if cfg.theta_samples:
        ref = _posterior_draws(cfg)
    else:
        res = pmmh_run(y, _proposal_config(cfg), seed=derive(cfg.seed, PMMH, 0))
        ref = res.discard(cfg.burn_in, cfg.thin).samples
    rows.extend(("pmmh", 0, i, 1.0 / ref.shape[0], *p) for i, p in enumerate(ref))
    header = cfgmod.echo_lines(cfg, "replicate-posteriors") + [f"# s = {split.s}"]
    csvio.write_table(cfg.output, ("source", "replicate", "draw", "weight", *PARAM_NAMES), rows, header)
    return 0


# --- parser ----------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", "-o", dest="output", help="output file")
    p.add_argument("--workers", type=int, help="threads for swarm bundles / PMMH replicates")
    p.add_argument("--cutoff-year", type=int, help="last calendar year of the training window")


def _run_flags(p):
    p.add_argument("--returns", dest="input", help="return CSV (date,return_pct); default: bundled sample")
    p.add_argument("--particles", "-N", dest="n_particles", type=int)
    p.add_argument("--threshold", dest="resample_threshold", type=float, help="resample when ESS/N < threshold")
    p.add_argument("--burn-in", type=float, help="fraction of iterations dropped from posterior files")
    p.add_argument("--thin", type=int)


def build_parser():
    ap = argparse.ArgumentParser(prog="smcforecast", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("returns", help="compute percent log returns")
    _common(p)
    p.add_argument("--prices", help="date,adj_close CSV; default: bundled sample")

    p = sub.add_parser("estimate", help="PMMH on the training window")
    _common(p)
    _run_flags(p)
    p.add_argument("--iterations", dest="n_iterations", type=int)
    p.add_argument("--replicates", "-K", dest="n_replicates", type=int, help="filters averaged per likelihood")
    p.add_argument("--proposal-scale", type=float, help="random-walk covariance = scale * I")
    p.add_argument("--chains", type=int)
    p.add_argument("--max-lag", type=int)
    p.add_argument("--diagnostics-dir")

    p = sub.add_parser("filter", help="run an online filter over the full series")
    _common(p)
    _run_flags(p)
    p.add_argument("--algorithm", "-a", choices=("sisr", "lw1", "lw2", "swarm"))
    p.add_argument("--n-theta", type=int, help="parameter draws (swarm bundles)")
    p.add_argument("--delta", type=float, help="Liu-West discount")
    p.add_argument("--weighting", choices=("uniform", "history"))
    p.add_argument("--theta-source", choices=cfgmod.THETA_SOURCES)
    p.add_argument("--samples", dest="theta_samples", help="posterior samples CSV")
    p.add_argument("--theta", dest="theta_fixed", help="mu,phi,sigma_sq,rho")

    p = sub.add_parser("compare", help="cumulative evidence and simplex series")
    p.add_argument("records", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--start", type=int, default=1, help="first time index kept")
    p.add_argument("--config")

    p = sub.add_parser("replicate-posteriors", help="repeated Liu-West runs on the training window")
    _common(p)
    _run_flags(p)
    p.add_argument("--lw-replicates", "-R", type=int)
    p.add_argument("--algorithms", default="lw1,lw2")
    p.add_argument("--delta", type=float)
    p.add_argument("--samples", dest="theta_samples", help="PMMH samples to use as the reference")
    p.add_argument("--iterations", dest="n_iterations", type=int, help="PMMH reference length")
    p.add_argument("--replicates", "-K", dest="n_replicates", type=int)
    return ap


COMMANDS = {
    "returns": cmd_returns,
    "estimate": cmd_estimate,
    "filter": cmd_filter,
    "compare": cmd_compare,
    "replicate-posteriors": cmd_replicate_posteriors,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = cfgmod.load_config(args.config) if args.config else {}
        flags = {k: v for k, v in vars(args).items() if k in cfgmod.RunConfig.__dataclass_fields__}
        if args.command == "estimate":
            flags["algorithm"] = "pmmh"
        cfg = cfgmod.resolve(file_values, **flags)
        if cfg.input and not Path(cfg.input).is_file():
            raise UsageError(f"{cfg.input}: no such file")
        if cfg.theta_samples and not Path(cfg.theta_samples).is_file():
            raise UsageError(f"{cfg.theta_samples}: no such file")
        return COMMANDS[args.command](cfg, args)
    except (UsageError, ValueError, OSError, ConstraintError, DegenerateCloudError, InitializationError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
