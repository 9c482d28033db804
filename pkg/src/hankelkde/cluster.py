"""k-means clustering of pooled eigenvalues with one representative per replicate."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hankelkde.signal import RngConfig


@dataclass
class ClusterSet:
    centers: np.ndarray  # k complex centers
    labels: np.ndarray  # cluster index of every pooled point
    points: np.ndarray  # pooled complex points
    replicate_ids: np.ndarray  # replicate of every pooled point
    R: int
    members: list = field(default_factory=list)  # per cluster: {replicate: point}
    standins: list = field(default_factory=list)  # per cluster: replicates given the center
    variances: np.ndarray = None
    history: list = field(default_factory=list)  # within-cluster SS per Lloyd iteration

    @property
    def k(self) -> int:
        return len(self.centers)

    def cluster_points(self, j: int) -> np.ndarray:
        return self.points[self.labels == j]

    def representatives(self, j: int) -> np.ndarray:
        """zeta_j^(r) for r = 0..R-1."""
        return np.array([self.members[j][r] for r in range(self.R)])


def _wcss(points, centers, labels) -> float:
    return float(np.sum(np.abs(points - centers[labels]) ** 2))


def _seed_plusplus(points: np.ndarray, k: int, g: np.random.Generator) -> np.ndarray:
    centers = [points[g.integers(points.size)]]
    for _ in range(1, k):
        d2 = np.min(np.abs(points[:, None] - np.array(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total == 0:
            idx = g.integers(points.size)
        else:
            idx = g.choice(points.size, p=d2 / total)
        centers.append(points[idx])
    return np.array(centers)


def lloyd(points: np.ndarray, centers: np.ndarray, tol: float = 1e-10, max_iter: int = 500):
    """Plain Lloyd iteration; an emptied cluster keeps its previous center."""
    centers = centers.copy()
    history = []
    for _ in range(max_iter):
        labels = np.argmin(np.abs(points[:, None] - centers[None, :]), axis=1)
        history.append(_wcss(points, centers, labels))
        new = centers.copy()
        for j in range(centers.size):
            sel = labels == j
            if np.any(sel):
                new[j] = points[sel].mean()
        moved = np.max(np.abs(new - centers))
        centers = new
        if moved < tol:
            break
    labels = np.argmin(np.abs(points[:, None] - centers[None, :]), axis=1)
    history.append(_wcss(points, centers, labels))
    return centers, labels, history


def cluster_variance(members, floor: float) -> float:
    """Mean squared distance to the member mean, floored."""
    z = np.asarray(members, dtype=complex)
    if z.size < 2:
        return floor
    t = float(np.mean(np.abs(z - z.mean()) ** 2))
    return max(t, floor)


def kmeans(pooled, k: int, rng: RngConfig, R: int | None = None, variance_floor: float = 0.0,
           n_init: int = 10) -> ClusterSet:
    """Cluster (replicate, point) pairs into k groups.

    Lloyd runs from `n_init` k-means++ seedings (sub-streams of `rng`) and the
    lowest within-cluster sum of squares wins.

    After Lloyd converges, replicate r's representative in cluster j is its
    member nearest the center; a replicate with no member gets the center itself
    and is listed in `standins`.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(pooled) < k:
        raise ValueError(f"cannot form {k} clusters from {len(pooled)} points")
    rep_ids = np.array([r for r, _ in pooled], dtype=int)
    pts = np.array([z for _, z in pooled], dtype=complex)
    if R is None:
        R = int(rep_ids.max()) + 1
    best = None
    for i in range(max(n_init, 1)):
        run = lloyd(pts, _seed_plusplus(pts, k, rng.generator(k, i)))
        if best is None or run[2][-1] < best[2][-1]:
            best = run
    centers, labels, history = best

    members, standins = [], []
    for j in range(k):
        mj, sj = {}, []
        for r in range(R):
            sel = (labels == j) & (rep_ids == r)
            if np.any(sel):
                cand = pts[sel]
                mj[r] = complex(cand[np.argmin(np.abs(cand - centers[j]))])
            else:
                mj[r] = complex(centers[j])
                sj.append(r)
        members.append(mj)
        standins.append(sj)
    variances = np.array([cluster_variance(pts[labels == j], variance_floor) for j in range(k)])
    return ClusterSet(centers, labels, pts, rep_ids, R, members, standins, variances, history)


def write_cluster_report(cs: ClusterSet, path) -> None:
    lines = ["cluster,center_re,center_im,t_hat,member_count,standin_count"]
    for j in range(cs.k):
        c = cs.centers[j]
        count = int(np.sum(cs.labels == j))
        lines.append(f"{j},{float(c.real)!r},{float(c.imag)!r},{float(cs.variances[j])!r},{count},{len(cs.standins[j])}")
    Path(path).write_text("\n".join(lines) + "\n")
