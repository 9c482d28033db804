import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hankelkde.pencil import (
    Region,
    build_pencil,
    eigensolve_replicates,
    generalized_eigenvalues,
    match_nodes,
    pool_eigenvalues,
    write_eigen_dump,
)
from hankelkde.signal import ExponentialModel, RngConfig, add_noise, paper_model, synthesize


def test_hankel_layout_n4():
    a, b, c, d = 1.0, 2.0, 3.0, 4.0
    pen = build_pencil([a, b, c, d])
    np.testing.assert_array_equal(pen.U0, [[a, b], [b, c]])
    np.testing.assert_array_equal(pen.U1, [[b, c], [c, d]])


def test_hankel_layout_n2():
    pen = build_pencil([2.0 + 1j, 5.0])
    assert pen.U0.shape == (1, 1)
    assert pen.U0[0, 0] == 2.0 + 1j and pen.U1[0, 0] == 5.0


def test_hankel_corner_symmetry():
    s = synthesize(paper_model(0.0))
    pen = build_pencil(s)
    assert pen.U0.shape == (37, 37)
    assert pen.U0[0, 36] == s[36] == pen.U0[36, 0]


def test_odd_length_rejected():
    with pytest.raises(ValueError, match="even"):
        build_pencil(np.ones(5))


def test_one_by_one_pencil_is_ratio():
    es = generalized_eigenvalues(build_pencil([2.0 - 1j, 3.0 + 4j]))
    assert es.eigenvalues[0] == pytest.approx((3.0 + 4j) / (2.0 - 1j), rel=1e-14)


def test_noiseless_nodes_recovered():
    m = paper_model(0.0, n=10)
    es = generalized_eigenvalues(build_pencil(synthesize(m)))
    _, err = match_nodes(es.finite, m.nodes)
    assert err <= 1e-8


def test_noiseless_oversampled_gives_infinite_sentinels():
    m = paper_model(0.0, n=74)
    es = generalized_eigenvalues(build_pencil(synthesize(m)))
    assert es.finite.size == 5
    assert np.all(np.isnan(es.residuals[~np.isfinite(es.eigenvalues)]))
    _, err = match_nodes(es.finite, m.nodes)
    assert err <= 1e-8


def test_three_by_three_against_determinant_roots():
    g = np.random.default_rng(4)
    s = g.normal(size=6) + 1j * g.normal(size=6)
    pen = build_pencil(s)
    # det(U1 - l U0) is a cubic in l; sample it at 4 points and fit exactly
    ls = np.array([0.0, 1.0, -1.0, 2.0j])
    dets = np.array([np.linalg.det(pen.U1 - l * pen.U0) for l in ls])
    coef = np.linalg.solve(np.vander(ls, 4), dets)
    roots = np.roots(coef)
    es = generalized_eigenvalues(pen)
    _, err = match_nodes(es.eigenvalues, roots)
    assert err < 1e-9
    assert np.all(es.residuals < 1e-12)


def test_pool_by_region():
    reps = add_noise(synthesize(paper_model()), 1.0, 10, RngConfig(1))
    samples = eigensolve_replicates(reps.data)
    everything = pool_eigenvalues(samples, Region(-1e9, 1e9, -1e9, 1e9))
    n_finite = sum(es.finite.size for es in samples)
    assert len(everything) == n_finite <= 10 * 37
    first = Region(-0.8, 0.4, -1.4, -0.4)
    inside = pool_eigenvalues(samples, first)
    assert inside and all(first.contains(z) for _, z in inside)
    assert {r for r, _ in inside} <= set(range(10))
    assert pool_eigenvalues(samples, Region(50, 60, 50, 60)) == []


def test_degenerate_region_rejected():
    with pytest.raises(ValueError):
        Region(1.0, 1.0, 0.0, 1.0)


def test_eigen_dump(tmp_path):
    reps = add_noise(synthesize(paper_model()), 1.0, 2, RngConfig(1))
    samples = eigensolve_replicates(reps.data)
    path = tmp_path / "e.csv"
    write_eigen_dump(samples, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "replicate,index,re,im,residual"
    assert len(rows) - 1 == sum(es.finite.size for es in samples)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10_000))
def test_noiseless_recovery_property(p_star, seed):
    g = np.random.default_rng(seed)
    nodes = g.uniform(0.6, 1.0, p_star) * np.exp(2j * np.pi * (np.arange(p_star) + g.uniform(0, 0.5, p_star)) / p_star)
    coeffs = g.uniform(0.5, 2.0, p_star) * np.exp(2j * np.pi * g.uniform(size=p_star))
    m = ExponentialModel(coeffs, nodes, 2 * p_star)
    es = generalized_eigenvalues(build_pencil(synthesize(m)))
    _, err = match_nodes(es.finite, m.nodes)
    assert err < 1e-7
