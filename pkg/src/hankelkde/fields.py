"""Scalar fields on a tensor Chebyshev-Gauss-Lobatto grid.

Covers the projection residual nu(z), its spectral gradient, the stationary
density p and the diffusion coefficient a = p nu / |grad nu|^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg

from hankelkde.pencil import Region


def cheb_nodes(m: int) -> np.ndarray:
    """CGL nodes on [-1, 1] in increasing order."""
    return -np.cos(np.pi * np.arange(m) / (m - 1))


def cheb_diff_matrix(m: int) -> np.ndarray:
    """Differentiation matrix on the increasing CGL nodes (Trefethen's cheb)."""
    N = m - 1
    x = cheb_nodes(m)
    c = np.ones(m)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(m)
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dX + np.eye(m))
    # negative-sum trick: rows of D annihilate constants exactly
    D -= np.diag(D.sum(axis=1))
    if N == 0:
        D[:] = 0.0
    return D


def clenshaw_curtis_weights(m: int) -> np.ndarray:
    """Quadrature weights on the CGL nodes of [-1, 1] (Trefethen's clencurt)."""
    N = m - 1
    theta = np.pi * np.arange(m) / N
    w = np.zeros(m)
    inner = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(N * theta[inner]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2 * v / N
    return w  # symmetric, so the increasing node order needs no flip


def _widths(nodes: np.ndarray) -> np.ndarray:
    d = np.empty_like(nodes)
    d[1:] = np.diff(nodes)
    d[0] = d[1]
    return d


def voronoi_edges(nodes: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Edges of the nearest-node cells along one axis, clipped to [lo, hi]."""
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    return np.concatenate([[lo], mid, [hi]])


@dataclass(frozen=True)
class ChebGrid:
    region: Region
    mx: int
    my: int

    def __post_init__(self):
        if self.mx < 2 or self.my < 2:
            raise ValueError("need at least two nodes per axis")

    @cached_property
    def x(self) -> np.ndarray:
        r = self.region
        return r.x_min + (cheb_nodes(self.mx) + 1) * 0.5 * (r.x_max - r.x_min)

    @cached_property
    def y(self) -> np.ndarray:
        r = self.region
        return r.y_min + (cheb_nodes(self.my) + 1) * 0.5 * (r.y_max - r.y_min)

    @cached_property
    def dx(self) -> np.ndarray:
        return _widths(self.x)

    @cached_property
    def dy(self) -> np.ndarray:
        return _widths(self.y)

    @cached_property
    def cell_area(self) -> np.ndarray:
        """mx x my array of quadrature weights dx(h) * dy(k)."""
        return np.outer(self.dx, self.dy)

    @cached_property
    def voronoi_area(self) -> np.ndarray:
        """Areas of the nearest-node cells (edges at node midpoints, clipped to the region)."""
        r = self.region
        ax = np.diff(voronoi_edges(self.x, r.x_min, r.x_max))
        ay = np.diff(voronoi_edges(self.y, r.y_min, r.y_max))
        return np.outer(ax, ay)

    @cached_property
    def cc_weights(self) -> np.ndarray:
        """Tensor Clenshaw-Curtis weights; exact for the collocation polynomials."""
        r = self.region
        wx = clenshaw_curtis_weights(self.mx) * 0.5 * (r.x_max - r.x_min)
        wy = clenshaw_curtis_weights(self.my) * 0.5 * (r.y_max - r.y_min)
        return np.outer(wx, wy)

    @cached_property
    def Dx(self) -> np.ndarray:
        r = self.region
        return cheb_diff_matrix(self.mx) * (2.0 / (r.x_max - r.x_min))

    @cached_property
    def Dy(self) -> np.ndarray:
        r = self.region
        return cheb_diff_matrix(self.my) * (2.0 / (r.y_max - r.y_min))

    @cached_property
    def neumann_maps(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior-to-edge maps enforcing a zero spectral normal derivative."""
        from hankelkde.diffusion import _edge_map

        return _edge_map(self.Dx), _edge_map(self.Dy)

    @cached_property
    def Z(self) -> np.ndarray:
        """Complex node coordinates, indexed [h, k] with x along h."""
        return self.x[:, None] + 1j * self.y[None, :]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.mx, self.my)

    def integrate(self, values, rule: str = "cells") -> float:
        """Weighted sum with backward-width cells, nearest-node cells or Clenshaw-Curtis weights."""
        weights = {"cells": "cell_area", "voronoi": "voronoi_area", "cc": "cc_weights"}
        if rule not in weights:
            raise ValueError(f"unknown quadrature rule {rule!r}")
        w = getattr(self, weights[rule])
        return float(np.sum(np.asarray(values) * w))

    def nearest_node(self, z: complex) -> tuple[int, int]:
        h = int(np.argmin(np.abs(self.x - z.real)))
        k = int(np.argmin(np.abs(self.y - z.imag)))
        return h, k

    def contains(self, z) -> np.ndarray:
        return self.region.contains(z)


def make_grid(region: Region, mx: int, my: int) -> ChebGrid:
    if mx < 8 or my < 8:
        raise ValueError("grid needs at least 8 nodes per axis")
    return ChebGrid(region, mx, my)


@dataclass
class ScalarField:
    grid: ChebGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def mass(self) -> float:
        return self.grid.integrate(self.values)


def d_dx(grid: ChebGrid, f: np.ndarray) -> np.ndarray:
    return grid.Dx @ f


def d_dy(grid: ChebGrid, f: np.ndarray) -> np.ndarray:
    return f @ grid.Dy.T


def spectral_gradient(field: ScalarField) -> tuple[ScalarField, ScalarField]:
    g = field.grid
    return ScalarField(g, d_dx(g, field.values)), ScalarField(g, d_dy(g, field.values))


# --- projection residual -----------------------------------------------------


def _powers(z: np.ndarray, n: int) -> np.ndarray:
    """n x len(z) matrix with columns [1, z, ..., z^(n-1)]."""
    z = np.asarray(z, dtype=complex).ravel()
    return z[None, :] ** np.arange(n)[:, None]


class ProjectionWorkspace:
    """Fixed nodes {zeta_h, h != j} of one (cluster, replicate) problem.

    The columns of X^H are geometric progressions; the fixed ones are factored
    once (rank revealing) so the evaluation point only adds one column.
    """

    def __init__(self, fixed_nodes, n: int, rank_tol: float = 1e-12):
        fixed = np.asarray(fixed_nodes, dtype=complex).ravel()
        self.fixed_nodes = fixed[np.isfinite(fixed)]
        self.n = n
        if self.fixed_nodes.size:
            A = _powers(self.fixed_nodes, n)
            # normalize columns so the rank decision is scale free
            A = A / np.linalg.norm(A, axis=0)
            U, sv, _ = scipy.linalg.svd(A, full_matrices=False)
            rank = int(np.sum(sv > rank_tol * sv[0]))
            self.basis = U[:, :rank]
        else:
            self.basis = np.zeros((n, 0), dtype=complex)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def project_out(self, M: np.ndarray) -> np.ndarray:
        Q = self.basis
        return M - Q @ (Q.conj().T @ M)


def nu_values(s_hat, workspace: ProjectionWorkspace, z, chunk: int = 2048) -> np.ndarray:
    """Squared residual of projecting s_hat on span{fixed progressions, progression of z}."""
    s = np.asarray(s_hat, dtype=complex)
    z = np.asarray(z, dtype=complex)
    r0 = workspace.project_out(s[:, None])[:, 0]
    flat = z.ravel()
    out = np.empty(flat.size)
    for start in range(0, flat.size, chunk):
        V = _powers(flat[start : start + chunk], s.size)
        V = V / np.linalg.norm(V, axis=0)
        W = workspace.project_out(V)
        ww = np.sum(np.abs(W) ** 2, axis=0)
        # z already in the span of the fixed progressions: it adds nothing
        live = ww > 1e-24
        coef = np.zeros(ww.shape, dtype=complex)
        coef[live] = (W[:, live].conj().T @ r0) / ww[live]
        resid = r0[:, None] - W * coef[None, :]
        out[start : start + chunk] = np.sum(np.abs(resid) ** 2, axis=0)
    return out.reshape(z.shape)


def nu_field(s_hat, workspace: ProjectionWorkspace, grid: ChebGrid) -> ScalarField:
    return ScalarField(grid, nu_values(s_hat, workspace, grid.Z))


def nu_reference(s_hat, fixed_nodes, z: complex) -> float:
    """Per-point residual from a full least-squares solve; the slow baseline."""
    s = np.asarray(s_hat, dtype=complex)
    nodes = np.append(np.asarray(fixed_nodes, dtype=complex), z)
    A = _powers(nodes, s.size)
    A = A / np.linalg.norm(A, axis=0)
    coef, *_ = scipy.linalg.lstsq(A, s, cond=1e-12)
    r = s - A @ coef
    return float(np.vdot(r, r).real)


# --- stationary density and diffusion coefficient -----------------------------


def default_profile(r2):
    """Stationary density of the single-exponential case in the zero-SNR limit."""
    return 1.0 / (np.pi * (1.0 + r2) ** 2)


@dataclass
class StationaryDensity:
    field: ScalarField
    profile: Callable

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def stationary_density(grid: ChebGrid, profile: Callable = default_profile) -> StationaryDensity:
    """Sample a radial profile p(|z|^2) on the grid."""
    vals = np.asarray(profile(np.abs(grid.Z) ** 2), dtype=float)
    if vals.shape != grid.shape:
        vals = np.broadcast_to(vals, grid.shape).copy()
    if not np.all(vals > 0):
        raise ValueError("stationary density profile must be positive")
    return StationaryDensity(ScalarField(grid, vals), profile)


def diffusion_coeff(
    p: StationaryDensity,
    nu: ScalarField,
    grad: tuple[ScalarField, ScalarField] | None = None,
    reg: float = 1e-12,
    clip_percentile: float | None = 99.0,
) -> ScalarField:
    """a = p nu / (nu_x^2 + nu_y^2 + eps), capped at a grid percentile."""
    if grad is None:
        grad = spectral_gradient(nu)
    g2 = grad[0].values ** 2 + grad[1].values ** 2
    eps = reg * float(np.max(g2)) if np.max(g2) > 0 else 1.0
    a = p.values * nu.values / (g2 + eps)
    if clip_percentile is not None and np.any(a > 0):
        a = np.minimum(a, np.percentile(a, clip_percentile))
    return ScalarField(nu.grid, np.maximum(a, 0.0))


# --- text IO ------------------------------------------------------------------


def write_field(field: ScalarField, path) -> None:
    """Header `mx,my,xmin,xmax,ymin,ymax`, then `h,k,x,y,value` rows (h major)."""
    g = field.grid
    r = g.region
    lines = [f"{g.mx},{g.my},{float(r.x_min)!r},{float(r.x_max)!r},{float(r.y_min)!r},{float(r.y_max)!r}"]
    for h in range(g.mx):
        for k in range(g.my):
            lines.append(f"{h},{k},{float(g.x[h])!r},{float(g.y[k])!r},{float(field.values[h, k])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path) -> ScalarField:
    rows = Path(path).read_text().strip().splitlines()
    head = rows[0].split(",")
    mx, my = int(head[0]), int(head[1])
    grid = ChebGrid(Region(*map(float, head[2:6])), mx, my)
    vals = np.zeros((mx, my))
    for line in rows[1:]:
        h, k, _, _, v = line.split(",")
        vals[int(h), int(k)] = float(v)
    return ScalarField(grid, vals)
