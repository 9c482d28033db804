"""Complex-exponential ground truth and replicated noisy observations."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class RngConfig:
    """Seed plus a stream label; sub-streams are derived deterministically from both."""

    seed: int = 0
    stream: str = "default"

    def generator(self, *counter: int) -> np.random.Generator:
        # Philox is counter based, so each (stream, counter...) key gives an
        # independent sequence regardless of the order in which keys are used.
        key = (zlib.crc32(self.stream.encode()),) + tuple(int(c) for c in counter)
        ss = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))

    def child(self, label: str) -> "RngConfig":
        return RngConfig(self.seed, f"{self.stream}/{label}")


@dataclass(frozen=True)
class ExponentialModel:
    coeffs: np.ndarray
    nodes: np.ndarray
    n: int
    sigma: float = 0.0

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        nodes = np.atleast_1d(np.asarray(self.nodes, dtype=complex))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "nodes", nodes)
        if coeffs.shape != nodes.shape or coeffs.ndim != 1:
            raise ValueError("coeffs and nodes must be 1-d and of equal length")
        if np.any(coeffs == 0):
            raise ValueError("all amplitudes must be nonzero")
        diff = np.abs(nodes[:, None] - nodes[None, :]) + np.eye(len(nodes))
        if np.any(diff == 0):
            raise ValueError("nodes must be pairwise distinct")
        if self.n % 2 or self.n < 2 * len(nodes):
            raise ValueError(f"n must be even and >= 2*p_star, got n={self.n}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @property
    def p_star(self) -> int:
        return len(self.nodes)

    @property
    def p(self) -> int:
        return self.n // 2


def paper_model(sigma: float = 1.0, n: int = 74) -> ExponentialModel:
    """Five-component test model with a closely spaced pair at frequencies 0.20 / 0.21."""
    tau = 2j * np.pi
    nodes = np.exp(
        [
            -0.1 - tau * 0.3,
            -0.05 - tau * 0.28,
            -0.0001 + tau * 0.2,
            -0.0001 + tau * 0.21,
            -0.3 - tau * 0.35,
        ]
    )
    return ExponentialModel(np.array([6, 3, 1, 1, 20], dtype=complex), nodes, n, sigma)


def synthesize(model: ExponentialModel) -> np.ndarray:
    """Return s_k = sum_j c_j xi_j**k for k = 0..n-1."""
    k = np.arange(model.n)
    return (model.nodes[None, :] ** k[:, None]) @ model.coeffs


@dataclass(frozen=True)
class ReplicateSet:
    data: np.ndarray
    sigma: float
    mean_signal: np.ndarray = field(init=False)

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=complex))
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        mean = data.mean(axis=0)
        mean.setflags(write=False)
        object.__setattr__(self, "mean_signal", mean)

    @property
    def R(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


def add_noise(s, sigma: float, R: int, rng: RngConfig) -> ReplicateSet:
    """Replicate `s` R times with circular complex white noise of variance sigma**2.

    Real and imaginary parts each get variance sigma**2 / 2. Replicate r draws
    from its own sub-stream, so any subset of replicates can be regenerated alone.
    """
    s = np.asarray(s, dtype=complex)
    if sigma < 0 or R < 1:
        raise ValueError("need sigma >= 0 and R >= 1")
    scale = sigma / np.sqrt(2.0)
    rows = []
    for r in range(R):
        g = rng.generator(r)
        eps = g.standard_normal(s.size) + 1j * g.standard_normal(s.size)
        rows.append(s + scale * eps)
    return ReplicateSet(np.array(rows), float(sigma))


def write_replicates(reps: ReplicateSet, path) -> None:
    """Text format: header `n,R,sigma` then one `r,k,re,im` row per sample."""
    lines = [f"{reps.n},{reps.R},{float(reps.sigma)!r}"]
    for r in range(reps.R):
        for k in range(reps.n):
            v = reps.data[r, k]
            lines.append(f"{r},{k},{float(v.real)!r},{float(v.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_replicates(path) -> ReplicateSet:
    rows = Path(path).read_text().strip().splitlines()
    n, R, sigma = rows[0].split(",")
    n, R = int(n), int(R)
    data = np.zeros((R, n), dtype=complex)
    seen = 0
    for line in rows[1:]:
        r, k, re, im = line.split(",")
        data[int(r), int(k)] = complex(float(re), float(im))
        seen += 1
    if seen != n * R:
        raise ValueError(f"{path}: expected {n * R} samples, found {seen}")
    return ReplicateSet(data, float(sigma))
