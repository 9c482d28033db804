"""Single-exponential closed-form condensed density and a Monte-Carlo oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hankelkde.fields import ChebGrid, ScalarField, voronoi_edges
from hankelkde.pencil import build_pencil, generalized_eigenvalues
from hankelkde.signal import ExponentialModel, RngConfig, synthesize


@dataclass(frozen=True)
class SnrPoint:
    c1: complex
    xi1: complex
    sigma: float

    @property
    def rho(self) -> float:
        if self.sigma <= 0:
            return float("inf")
        return abs(self.c1) ** 2 / self.sigma**2

    @classmethod
    def from_rho(cls, xi1: complex, rho: float, c1: complex = 1.0) -> "SnrPoint":
        return cls(c1, xi1, abs(c1) / np.sqrt(rho) if rho > 0 else np.inf)


def h2_closed_form(point: SnrPoint, z):
    """Condensed density of d1/d0 for n = 2 at SNR rho = |c1|^2 / sigma^2."""
    z = np.asarray(z, dtype=complex)
    rho = 0.0 if np.isinf(point.sigma) else point.rho
    m = 1.0 + np.abs(z) ** 2
    expo = np.exp(-rho * np.abs(z - point.xi1) ** 2 / m)
    return expo * (rho * np.abs(1.0 + np.conj(z) * point.xi1) ** 2 / (np.pi * m**3) + 1.0 / (np.pi * m**2))


def h2_cell_integrals(point: SnrPoint, grid: ChebGrid, order: int = 8) -> np.ndarray:
    """Integral of h2 over every nearest-node cell (tensor Gauss-Legendre per cell)."""
    r = grid.region
    ex = voronoi_edges(grid.x, r.x_min, r.x_max)
    ey = voronoi_edges(grid.y, r.y_min, r.y_max)
    t, w = np.polynomial.legendre.leggauss(order)
    # quadrature abscissae for every cell along each axis
    xs = 0.5 * (ex[:-1, None] + ex[1:, None]) + 0.5 * np.diff(ex)[:, None] * t[None, :]
    ys = 0.5 * (ey[:-1, None] + ey[1:, None]) + 0.5 * np.diff(ey)[:, None] * t[None, :]
    wx = 0.5 * np.diff(ex)[:, None] * w[None, :]
    wy = 0.5 * np.diff(ey)[:, None] * w[None, :]
    Z = xs[:, None, :, None] + 1j * ys[None, :, None, :]
    vals = h2_closed_form(point, Z)
    return np.einsum("hkab,ha,kb->hk", vals, wx, wy)


def mc_eigenvalues(model: ExponentialModel, trials: int, rng: RngConfig, batch: int = 100_000):
    """Yield arrays of generalized eigenvalues from independent noisy replicates."""
    s = synthesize(model)
    scale = model.sigma / np.sqrt(2.0)
    done = 0
    b = 0
    while done < trials:
        m = min(batch, trials - done)
        g = rng.generator(b)
        noise = scale * (g.standard_normal((m, model.n)) + 1j * g.standard_normal((m, model.n)))
        d = s[None, :] + noise
        if model.n == 2:
            # 1x1 pencil: the eigenvalue is the ratio itself
            with np.errstate(divide="ignore", invalid="ignore"):
                yield d[:, 1] / d[:, 0]
        else:
            yield np.concatenate([generalized_eigenvalues(build_pencil(row)).eigenvalues for row in d])
        done += m
        b += 1


def mc_counts(model: ExponentialModel, trials: int, grid: ChebGrid, rng: RngConfig) -> np.ndarray:
    """Eigenvalue counts per nearest-node cell over `trials` replicates."""
    r = grid.region
    ex = voronoi_edges(grid.x, r.x_min, r.x_max)
    ey = voronoi_edges(grid.y, r.y_min, r.y_max)
    counts = np.zeros(grid.shape)
    for z in mc_eigenvalues(model, trials, rng):
        z = z[np.isfinite(z)]
        z = z[grid.contains(z)]
        H, _, _ = np.histogram2d(z.real, z.imag, bins=[ex, ey])
        counts += H
    return counts


def mc_condensed_density(model: ExponentialModel, trials: int, grid: ChebGrid, rng: RngConfig) -> ScalarField:
    """Histogram estimate of the condensed density: counts / (trials * p * cell area)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    counts = mc_counts(model, trials, grid, rng)
    return ScalarField(grid, counts / (trials * model.p) / grid.voronoi_area)
