import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hankelkde.cluster import cluster_variance, kmeans, write_cluster_report
from hankelkde.signal import RngConfig


def _pooled(points, R):
    return [(i % R, complex(z)) for i, z in enumerate(points)]


def test_separated_clouds():
    g = np.random.default_rng(0)
    a = 0.01 * (g.normal(size=20) + 1j * g.normal(size=20))
    b = 5 + 5j + 0.01 * (g.normal(size=20) + 1j * g.normal(size=20))
    cs = kmeans(_pooled(np.concatenate([a, b]), 4), 2, RngConfig(1))
    labels = cs.labels
    assert len(set(labels[:20])) == 1 and len(set(labels[20:])) == 1
    assert labels[0] != labels[20]


def test_singletons_get_floor_variance():
    pts = [(0, 0j), (0, 1 + 0j), (0, 3j)]
    cs = kmeans(pts, 3, RngConfig(2), R=1, variance_floor=1e-4)
    assert sorted(len(cs.cluster_points(j)) for j in range(3)) == [1, 1, 1]
    np.testing.assert_array_equal(cs.variances, 1e-4)


def test_matches_exhaustive_two_partition():
    g = np.random.default_rng(5)
    z = g.normal(size=6) + 1j * g.normal(size=6)

    def wcss(mask):
        return sum(np.sum(np.abs(z[m] - z[m].mean()) ** 2) for m in (mask, ~mask) if m.any())

    best = min(
        (np.array(bits, dtype=bool) for bits in itertools.product([0, 1], repeat=6) if 0 < sum(bits) < 6),
        key=wcss,
    )
    cs = kmeans(_pooled(z, 6), 2, RngConfig(3))
    got = cs.labels == cs.labels[0]
    ref = best == best[0]
    np.testing.assert_array_equal(got, ref)


def test_too_many_clusters():
    with pytest.raises(ValueError):
        kmeans([(0, 0j), (0, 1j)], 3, RngConfig())


def test_variance_examples():
    assert cluster_variance([0.5j, 0.5j, 0.5j], 1e-6) == 1e-6
    assert cluster_variance([0.0, 2.0], 0.0) == pytest.approx(1.0)
    g = np.random.default_rng(9)
    draws = 0.2 / np.sqrt(2) * (g.normal(size=100) + 1j * g.normal(size=100))
    assert cluster_variance(draws, 0.0) == pytest.approx(0.04, rel=0.2)


def test_representatives_and_standins():
    # replicate 1 has no point in the far cluster
    pooled = [(0, 0j), (1, 0.01 + 0j), (0, 10 + 0j), (0, 10.2 + 0j)]
    cs = kmeans(pooled, 2, RngConfig(4), R=2)
    far = int(np.argmax(np.abs(cs.centers)))
    reps = cs.representatives(far)
    assert cs.standins[far] == [1]
    assert reps[1] == cs.centers[far]
    assert reps[0] in (10, 10.2)
    near = 1 - far
    assert cs.standins[near] == []


def test_deterministic(tmp_path):
    g = np.random.default_rng(1)
    z = g.normal(size=50) + 1j * g.normal(size=50)
    a = kmeans(_pooled(z, 5), 4, RngConfig(7), variance_floor=1e-6)
    b = kmeans(_pooled(z, 5), 4, RngConfig(7), variance_floor=1e-6)
    np.testing.assert_array_equal(a.centers, b.centers)
    np.testing.assert_array_equal(a.labels, b.labels)
    write_cluster_report(a, tmp_path / "a.csv")
    write_cluster_report(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    head = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert head == "cluster,center_re,center_im,t_hat,member_count,standin_count"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_lloyd_history_nonincreasing(seed, k):
    g = np.random.default_rng(seed)
    z = g.normal(size=40) + 1j * g.normal(size=40)
    cs = kmeans(_pooled(z, 4), k, RngConfig(seed))
    h = np.array(cs.history)
    assert np.all(np.diff(h) <= 1e-9 * h[0])
    # every point sits with its nearest center
    d = np.abs(cs.points[:, None] - cs.centers[None, :])
    np.testing.assert_array_equal(cs.labels, np.argmin(d, axis=1))
