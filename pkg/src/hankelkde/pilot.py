"""Closed-form pilot density from the triangular factors of U1 - z U0."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hankelkde.fields import ChebGrid, ScalarField
from hankelkde.pencil import build_pencil


@dataclass
class PilotConfig:
    beta: float
    clamp_negatives: bool = True
    maxima_threshold: float = 0.1

    @classmethod
    def for_noise(cls, n: int, sigma: float, **kw) -> "PilotConfig":
        return cls(beta=5.0 * n * sigma**2, **kw)


def log_potential(data, grid: ChebGrid, sigma: float, beta: float, chunk: int = 512) -> np.ndarray:
    """S(z) = sum_r sum_k ln(|R_kk^(r)(z)|^2 / (sigma^2 beta) + 1) on the grid nodes."""
    z = grid.Z.ravel()
    S = np.zeros(z.size)
    for r, row in enumerate(np.atleast_2d(data)):
        pen = build_pencil(row)
        for start in range(0, z.size, chunk):
            zc = z[start : start + chunk]
            M = pen.U1[None, :, :] - zc[:, None, None] * pen.U0[None, :, :]
            try:
                Rf = np.linalg.qr(M, mode="r")
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(f"QR failed for replicate {r} near node {start}: {exc}") from exc
            diag = np.abs(np.diagonal(Rf, axis1=-2, axis2=-1)) ** 2
            S[start : start + chunk] += np.sum(np.log1p(diag / (sigma**2 * beta)), axis=1)
    return S.reshape(grid.shape)


def nonuniform_laplacian(grid: ChebGrid, f: np.ndarray) -> np.ndarray:
    """5-point Laplacian with unequal spacings; zero on the boundary nodes."""
    out = np.zeros_like(f)
    x, y = grid.x, grid.y
    hm = (x[1:-1] - x[:-2])[:, None]
    hp = (x[2:] - x[1:-1])[:, None]
    km = (y[1:-1] - y[:-2])[None, :]
    kp = (y[2:] - y[1:-1])[None, :]
    c = f[1:-1, 1:-1]
    fxx = 2 * (f[2:, 1:-1] * hm - c * (hm + hp) + f[:-2, 1:-1] * hp) / (hm * hp * (hm + hp))
    fyy = 2 * (f[1:-1, 2:] * km - c * (km + kp) + f[1:-1, :-2] * kp) / (km * kp * (km + kp))
    out[1:-1, 1:-1] = fxx + fyy
    return out


def pilot_density(replicates, grid: ChebGrid, config: PilotConfig) -> ScalarField:
    """Positive part of the discrete Laplacian of the log potential, unit mass."""
    if replicates.sigma <= 0:
        raise ValueError("the pilot estimate needs sigma > 0")
    S = log_potential(replicates.data, grid, replicates.sigma, config.beta)
    return pilot_from_potential(grid, S, config)


def pilot_from_potential(grid: ChebGrid, S: np.ndarray, config: PilotConfig) -> ScalarField:
    lap = nonuniform_laplacian(grid, S)
    # cancellation residue; normalizing it to unit mass would invent structure
    h = min(np.diff(grid.x).min(), np.diff(grid.y).min())
    floor = 64 * np.finfo(float).eps * float(np.abs(S).max()) / h**2
    lap[np.abs(lap) <= floor] = 0.0
    if config.clamp_negatives:
        lap = np.maximum(lap, 0.0)
    mass = grid.integrate(lap)
    if mass > 0:
        lap = lap / mass
    return ScalarField(grid, lap)


def count_relative_maxima(field: ScalarField, threshold: float = 0.1):
    """Interior nodes strictly above all 8 neighbours and >= threshold * global max.

    Returns (count, list of (h, k, x, y, value)) sorted by decreasing value.
    """
    v = field.values
    top = float(v.max())
    c = v[1:-1, 1:-1]
    is_max = np.ones(c.shape, dtype=bool)
    for dh in (-1, 0, 1):
        for dk in (-1, 0, 1):
            if dh or dk:
                nb = v[1 + dh : v.shape[0] - 1 + dh, 1 + dk : v.shape[1] - 1 + dk]
                is_max &= c > nb
    is_max &= c >= threshold * top
    if top <= 0:
        is_max[:] = False
    hs, ks = np.nonzero(is_max)
    g = field.grid
    found = [(int(h + 1), int(k + 1), float(g.x[h + 1]), float(g.y[k + 1]), float(c[h, k])) for h, k in zip(hs, ks)]
    found.sort(key=lambda m: -m[4])
    return len(found), found


def write_maxima(maxima, path) -> None:
    lines = ["idx,x,y,value"] + [f"{i},{float(m[2])!r},{float(m[3])!r},{float(m[4])!r}" for i, m in enumerate(maxima)]
    Path(path).write_text("\n".join(lines) + "\n")
