"""Hankel pencils, their generalized eigenvalues, and pooling by region."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

INFINITE = complex(np.inf, np.inf)


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max] in the complex plane."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"degenerate region {self}")

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        return (
            (z.real >= self.x_min)
            & (z.real <= self.x_max)
            & (z.imag >= self.y_min)
            & (z.imag <= self.y_max)
        )

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.x_max - self.x_min, self.y_max - self.y_min))


@dataclass(frozen=True)
class HankelPencil:
    U0: np.ndarray
    U1: np.ndarray

    @property
    def p(self) -> int:
        return self.U0.shape[0]


@dataclass
class EigenSample:
    replicate_id: int
    eigenvalues: np.ndarray  # length p, INFINITE where the ratio is ill defined
    residuals: np.ndarray  # relative backward residual, nan for INFINITE

    @property
    def finite(self) -> np.ndarray:
        return self.eigenvalues[np.isfinite(self.eigenvalues)]


def build_pencil(samples) -> HankelPencil:
    s = np.asarray(samples, dtype=complex)
    n = s.size
    if n < 2 or n % 2:
        raise ValueError(f"a Hankel pencil needs an even number of samples >= 2, got {n}")
    p = n // 2
    U0 = scipy.linalg.hankel(s[:p], s[p - 1 : n - 1])
    U1 = scipy.linalg.hankel(s[1 : p + 1], s[p:n])
    return HankelPencil(U0, U1)


def generalized_eigenvalues(pencil: HankelPencil, replicate_id: int = 0, ratio_tol: float = 1e-12) -> EigenSample:
    """Eigenvalues of U1 v = lambda U0 v via the QZ decomposition.

    Eigenvalues whose homogeneous denominator is below ratio_tol * ||U0||_F are
    returned as INFINITE; U0 is rank deficient whenever p exceeds the model order.
    """
    U0, U1 = pencil.U0, pencil.U1
    try:
        (alpha, beta), V = scipy.linalg.eig(U1, U0, right=True, homogeneous_eigvals=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError(f"QZ failed for replicate {replicate_id}: {exc}") from exc
    n0 = np.linalg.norm(U0)
    n1 = np.linalg.norm(U1)
    bad = np.abs(beta) < ratio_tol * n0
    if n0 == 0:
        bad[:] = True
    lam = np.full(alpha.shape, INFINITE, dtype=complex)
    lam[~bad] = alpha[~bad] / beta[~bad]
    res = np.full(alpha.shape, np.nan)
    for i in np.flatnonzero(~bad):
        v = V[:, i]
        num = np.linalg.norm(U1 @ v - lam[i] * (U0 @ v))
        den = (n1 + abs(lam[i]) * n0) * np.linalg.norm(v)
        res[i] = num / den if den > 0 else 0.0
    return EigenSample(replicate_id, lam, res)


def eigensolve_replicates(data) -> list[EigenSample]:
    return [generalized_eigenvalues(build_pencil(row), r) for r, row in enumerate(np.atleast_2d(data))]


def pool_eigenvalues(samples, region: Region) -> list[tuple[int, complex]]:
    """All finite eigenvalues inside `region`, tagged by replicate id."""
    out = []
    for es in samples:
        z = es.eigenvalues
        keep = np.isfinite(z) & region.contains(np.where(np.isfinite(z), z, 0))
        out.extend((es.replicate_id, complex(v)) for v in z[keep])
    return out


def match_nodes(estimated, truth) -> tuple[np.ndarray, float]:
    """Minimal total-distance assignment of `truth` to a subset of `estimated`.

    Returns the matched estimates (in truth order) and the largest matched error.
    Exhaustive over permutations for small problems, Hungarian otherwise.
    """
    est = np.asarray(estimated, dtype=complex)
    est = est[np.isfinite(est)]
    tru = np.asarray(truth, dtype=complex)
    if est.size < tru.size:
        raise ValueError("fewer estimates than true nodes")
    cost = np.abs(tru[:, None] - est[None, :])
    if tru.size <= 6 and est.size <= 8:
        best = min(
            itertools.permutations(range(est.size), tru.size),
            key=lambda perm: sum(cost[i, j] for i, j in enumerate(perm)),
        )
        cols = np.array(best)
    else:
        from scipy.optimize import linear_sum_assignment

        _, cols = linear_sum_assignment(cost)
    matched = est[cols]
    return matched, float(np.max(np.abs(matched - tru)))


def write_eigen_dump(samples, path) -> None:
    lines = ["replicate,index,re,im,residual"]
    for es in samples:
        for i, (z, res) in enumerate(zip(es.eigenvalues, es.residuals)):
            if np.isfinite(z):
                lines.append(f"{es.replicate_id},{i},{float(z.real)!r},{float(z.imag)!r},{float(res)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
