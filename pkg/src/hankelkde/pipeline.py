"""End-to-end analysis of one region: pilot, clustering, diffusion estimates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from hankelkde.bandwidth import (
    BandwidthReport,
    DensityEstimate,
    EstimateConfig,
    combine,
    gaussian_baseline,
    run_cluster_estimate,
)
from hankelkde.cluster import ClusterSet, kmeans
from hankelkde.fields import ChebGrid, ScalarField, StationaryDensity, make_grid, stationary_density
from hankelkde.pencil import Region, pool_eigenvalues
from hankelkde.pilot import PilotConfig, count_relative_maxima, pilot_density
from hankelkde.signal import ReplicateSet, RngConfig

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


@dataclass
class RegionResult:
    region: Region
    grid: ChebGrid
    pooled: list
    empirical: ScalarField | None = None
    pilot: ScalarField | None = None
    pilot_maxima: list = field(default_factory=list)
    clusters: ClusterSet | None = None
    estimates: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    combined_raw: DensityEstimate | None = None
    combined: DensityEstimate | None = None
    baseline: DensityEstimate | None = None

    @property
    def n_clusters(self) -> int:
        return 0 if self.clusters is None else self.clusters.k


def empirical_density(points, grid: ChebGrid, R: int, p: int) -> ScalarField:
    """Counting measure of the pooled points, per replicate and per eigenvalue slot."""
    vals = np.zeros(grid.shape)
    for z in points:
        h, k = grid.nearest_node(z)
        vals[h, k] += 1.0
    return ScalarField(grid, vals / (R * p) / grid.voronoi_area)


def analyze_region(
    replicates: ReplicateSet,
    eigen_samples,
    region: Region,
    mx: int = 64,
    my: int = 64,
    cfg: EstimateConfig | None = None,
    pilot_cfg: PilotConfig | None = None,
    rng: RngConfig = RngConfig(),
    p_density: StationaryDensity | None = None,
    baseline: bool = True,
    n_clusters: int | None = None,
) -> RegionResult:
    cfg = cfg or EstimateConfig()
    grid = make_grid(region, mx, my)
    p = p_density or stationary_density(grid)
    R, n = replicates.R, replicates.n
    pooled = pool_eigenvalues(eigen_samples, region)
    res = RegionResult(region, grid, pooled)
    if not pooled:
        log.info("region %s holds no eigenvalues; nothing to estimate", region)
        return res
    pts = np.array([z for _, z in pooled])
    res.empirical = empirical_density(pts, grid, R, n // 2)

    if n_clusters is None:
        try:
            pcfg = pilot_cfg or PilotConfig.for_noise(n, replicates.sigma)
            res.pilot = pilot_density(replicates, grid, pcfg)
            k, res.pilot_maxima = count_relative_maxima(res.pilot, pcfg.maxima_threshold)
        except Exception as exc:
            raise StageError("pilot", exc) from exc
    else:
        k = n_clusters
    k = max(1, min(k, len(pooled)))

    try:
        res.clusters = kmeans(pooled, k, rng.child("kmeans"), R=R, variance_floor=1e-6 * region.diagonal**2)
    except Exception as exc:
        raise StageError("kmeans", exc) from exc

    for j in range(res.clusters.k):
        try:
            est, rep, _ = run_cluster_estimate(j, res.clusters, eigen_samples, replicates.mean_signal, grid, p, cfg)
        except Exception as exc:
            raise StageError("diffusion", exc) from exc
        res.estimates.append(est)
        res.reports.append(rep)
    res.combined_raw = combine(res.estimates, n)
    res.combined = combine(res.estimates, n, renormalize=True)

    if baseline and np.unique(pts).size >= 2:
        try:
            res.baseline = gaussian_baseline(pts, grid)
        except Exception as exc:
            raise StageError("baseline", exc) from exc
    return res
