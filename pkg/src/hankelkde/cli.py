"""Command-line entry point: simulate, estimate, validate, mc-oracle."""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from hankelkde.analytic import SnrPoint, h2_cell_integrals, mc_condensed_density
from hankelkde.bandwidth import EstimateConfig, write_bandwidth_reports
from hankelkde.cluster import write_cluster_report
from hankelkde.config import ConfigError, RunConfig, dump_config, load_config
from hankelkde.diffusion import FilterParams, SolverConfig
from hankelkde.fields import ScalarField, make_grid, write_field
from hankelkde.pencil import eigensolve_replicates, write_eigen_dump
from hankelkde.pilot import PilotConfig, write_maxima
from hankelkde.pipeline import StageError, analyze_region
from hankelkde.signal import RngConfig, add_noise, read_replicates, synthesize, write_replicates

log = logging.getLogger("hankelkde")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    if getattr(args, "grid", None):
        over["mx"], over["my"] = args.grid
    if getattr(args, "literal_operator", False):
        over["literal_operator"] = True
    if getattr(args, "per_point_delta", False):
        over["per_point_delta"] = True
    if getattr(args, "threads", None):
        over["threads"] = args.threads
    return replace(cfg, **over).validate()


def _replicates(cfg: RunConfig):
    model = cfg.model()
    return add_noise(synthesize(model), model.sigma, cfg.R, RngConfig(cfg.seed))


def cmd_simulate(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    reps = _replicates(cfg)
    path = out / "replicates.csv"
    write_replicates(reps, path)
    (out / "config.txt").write_text(dump_config(cfg))
    print(f"seed {cfg.seed}")
    print(f"replicates {reps.R} x {reps.n} -> {path}")
    print(f"sha256 {_sha256(path)}  {path.name}")
    return 0


def estimate_config(cfg: RunConfig) -> EstimateConfig:
    return EstimateConfig(
        solver=SolverConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol),
        filter=FilterParams(cfg.gamma, cfg.phi),
        literal=cfg.literal_operator,
        per_point_delta=cfg.per_point_delta,
        eg_support=cfg.eg_support,
        mixing_fraction=cfg.mixing_fraction,
        iterations=cfg.iterations,
        threads=cfg.threads,
    )


def cmd_estimate(cfg: RunConfig, regions=None, figures: bool = True) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rep_path = out / "replicates.csv"
    if rep_path.exists():
        reps = read_replicates(rep_path)
    else:
        reps = _replicates(cfg)
        write_replicates(reps, rep_path)
    samples = eigensolve_replicates(reps.data)
    write_eigen_dump(samples, out / "eigenvalues.csv")
    model = cfg.model()
    ecfg = estimate_config(cfg)
    summary = [f"seed={cfg.seed}", f"sigma={reps.sigma}", f"n={reps.n}", f"R={reps.R}", f"grid={cfg.mx}x{cfg.my}"]
    idx = range(len(cfg.regions)) if regions is None else regions
    for i in idx:
        region = cfg.regions[i]
        tag = f"region{i + 1}"
        pcfg = PilotConfig.for_noise(reps.n, reps.sigma, maxima_threshold=cfg.maxima_threshold)
        try:
            res = analyze_region(reps, samples, region, cfg.mx, cfg.my, ecfg, pcfg, RngConfig(cfg.seed), baseline=cfg.baseline)
        except StageError as exc:
            print(f"{tag}: stage {exc.stage} failed: {exc}", file=sys.stderr)
            return 2
        truth = model.nodes[region.contains(model.nodes)]
        np.savetxt(out / f"{tag}_truth.csv", np.column_stack([truth.real, truth.imag]), delimiter=",",
                   header="x,y", comments="", fmt="%.17g")
        if res.n_clusters == 0:
            summary.append(f"{tag}: zero clusters (no eigenvalues in region)")
            continue
        write_field(res.empirical, out / f"{tag}_empirical.csv")
        if res.pilot is not None:
            write_field(res.pilot, out / f"{tag}_pilot.csv")
            write_maxima(res.pilot_maxima, out / f"{tag}_pilot_maxima.csv")
        write_cluster_report(res.clusters, out / f"{tag}_clusters.csv")
        write_bandwidth_reports(res.reports, out / f"{tag}_bandwidth.csv")
        write_field(res.combined.field, out / f"{tag}_proposed.csv")
        write_field(res.combined_raw.field, out / f"{tag}_proposed_raw.csv")
        for est in res.estimates:
            write_field(est.field, out / f"{tag}_cluster{est.provenance['cluster']}.csv")
        if res.baseline is not None:
            write_field(res.baseline.field, out / f"{tag}_baseline.csv")
        if figures:
            from hankelkde.plotting import region_figure

            region_figure(res, out / f"{tag}.png", truth=truth, title=f"{tag}, sigma = {reps.sigma:g}")
        fb = sum(r.fallback for r in res.reports)
        summary.append(f"{tag}: points={len(res.pooled)} clusters={res.n_clusters} fallbacks={fb} "
                       f"combined_mass={res.combined_raw.mass:.6g}")
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    print("\n".join(summary))
    return 0


def cmd_mc_oracle(cfg: RunConfig, trials: int | None = None, figures: bool = True) -> int:
    model = cfg.model()
    if model.n != 2 or model.p_star != 1:
        raise ConfigError("mc-oracle needs a single-component model with n = 2")
    trials = trials or cfg.mc_trials or 100_000
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    point = SnrPoint(complex(model.coeffs[0]), complex(model.nodes[0]), model.sigma)
    for i, region in enumerate(cfg.regions):
        grid = make_grid(region, cfg.mx, cfg.my)
        analytic = ScalarField(grid, h2_cell_integrals(point, grid) / grid.voronoi_area)
        mc = mc_condensed_density(model, trials, grid, RngConfig(cfg.seed, "mc-oracle"))
        write_field(analytic, out / f"region{i + 1}_analytic.csv")
        write_field(mc, out / f"region{i + 1}_montecarlo.csv")
        if figures:
            from hankelkde.plotting import comparison_figure

            comparison_figure(analytic, mc, out / f"region{i + 1}_oracle.png")
        print(f"region{i + 1}: rho={point.rho:.4g} trials={trials}")
    return 0


def cmd_validate(cfg: RunConfig, include_sigma3: bool = True) -> int:
    from hankelkde.validate import run_all

    results = run_all(mx=cfg.mx, seed=cfg.seed, include_sigma3=include_sigma3)
    lines = ["criterion,status,runtime,detail"] + [r.line() for r in results]
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "validation.csv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if all(r.passed for r in results if r.gated) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hankelkde", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--config", type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if grid:
            p.add_argument("--grid", nargs=2, type=int, metavar=("MX", "MY"))
        return p

    common(sub.add_parser("simulate", help="write noisy replicates"), grid=False)
    est = common(sub.add_parser("estimate", help="run the density estimation pipeline"))
    est.add_argument("--region", type=int, metavar="IDX", help="1-based region index")
    est.add_argument("--literal-operator", "--literal-eq51", dest="literal_operator", action="store_true", help="use the printed operator without a on the Laplacian")
    est.add_argument("--per-point-delta", action="store_true")
    est.add_argument("--threads", type=int)
    est.add_argument("--no-figures", action="store_true")
    val = common(sub.add_parser("validate", help="run the acceptance checks"))
    val.add_argument("--skip-sigma3", action="store_true")
    mc = common(sub.add_parser("mc-oracle", help="closed-form density vs Monte Carlo (n = 2)"))
    mc.add_argument("--trials", type=int)
    mc.add_argument("--no-figures", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "estimate":
            regions = None
            if args.region is not None:
                if not 1 <= args.region <= len(cfg.regions):
                    raise ConfigError(f"--region must be in 1..{len(cfg.regions)}")
                regions = [args.region - 1]
            return cmd_estimate(cfg, regions, figures=not args.no_figures)
        if args.command == "validate":
            return cmd_validate(cfg, include_sigma3=not args.skip_sigma3)
        if args.command == "mc-oracle":
            return cmd_mc_oracle(cfg, args.trials, figures=not args.no_figures)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
