import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hankelkde.signal import (
    ExponentialModel,
    ReplicateSet,
    RngConfig,
    add_noise,
    paper_model,
    read_replicates,
    synthesize,
    write_replicates,
)


def test_first_sample_is_sum_of_amplitudes():
    s = synthesize(paper_model(sigma=0.0))
    assert s[0] == pytest.approx(31 + 0j, abs=1e-12)


def test_powers_of_i():
    s = synthesize(ExponentialModel([2.0], [1j], 4))
    np.testing.assert_allclose(s, [2, 2j, -2, -2j], atol=1e-14)


def test_second_sample_against_extended_precision():
    m = paper_model(sigma=0.0)
    mpmath.mp.dps = 40
    tau = 2j * mpmath.pi
    exps = [-0.1 - tau * 0.3, -0.05 - tau * 0.28, -0.0001 + tau * 0.2, -0.0001 + tau * 0.21, -0.3 - tau * 0.35]
    ref = sum(c * mpmath.exp(e) for c, e in zip([6, 3, 1, 1, 20], exps))
    s1 = synthesize(m)[1]
    assert abs(s1 - complex(ref)) < 1e-12


def test_paper_model_shape():
    m = paper_model()
    assert (m.n, m.p, m.p_star, m.sigma) == (74, 37, 5, 1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(coeffs=[1.0, 2.0], nodes=[0.5, 0.5], n=4),
        dict(coeffs=[0.0], nodes=[0.5], n=2),
        dict(coeffs=[1.0, 1.0], nodes=[0.5, 0.6], n=3),
        dict(coeffs=[1.0, 1.0], nodes=[0.5, 0.6], n=2),
        dict(coeffs=[1.0], nodes=[0.5], n=2, sigma=-1.0),
    ],
)
def test_model_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        ExponentialModel(**kwargs)


def test_zero_noise_rows_equal_signal():
    s = synthesize(paper_model(0.0))
    reps = add_noise(s, 0.0, 4, RngConfig(3))
    for row in reps.data:
        np.testing.assert_array_equal(row, s)


def test_noise_variance_convention():
    reps = add_noise(np.zeros(1), 1.0, 10_000, RngConfig(7))
    d = reps.data[:, 0]
    assert np.mean(np.abs(d) ** 2) == pytest.approx(1.0, rel=0.05)
    # half the variance in each real component
    assert np.var(d.real) == pytest.approx(0.5, rel=0.07)
    assert np.var(d.imag) == pytest.approx(0.5, rel=0.07)


def test_same_rng_same_replicates():
    s = synthesize(paper_model())
    a = add_noise(s, 1.0, 5, RngConfig(11))
    b = add_noise(s, 1.0, 5, RngConfig(11))
    np.testing.assert_array_equal(a.data, b.data)
    c = add_noise(s, 1.0, 5, RngConfig(12))
    assert not np.array_equal(a.data, c.data)


def test_replicate_substreams_are_prefix_stable():
    s = synthesize(paper_model())
    few = add_noise(s, 1.0, 3, RngConfig(5))
    many = add_noise(s, 1.0, 8, RngConfig(5))
    np.testing.assert_array_equal(few.data, many.data[:3])


def test_child_streams_differ():
    r = RngConfig(1)
    x = r.child("a").generator().standard_normal(4)
    y = r.child("b").generator().standard_normal(4)
    assert not np.array_equal(x, y)


def test_replicate_set_is_read_only():
    reps = add_noise(np.ones(4), 1.0, 2, RngConfig(0))
    with pytest.raises(ValueError):
        reps.data[0, 0] = 0
    np.testing.assert_allclose(reps.mean_signal, reps.data.mean(axis=0))


def test_replicate_file_roundtrip(tmp_path):
    reps = add_noise(synthesize(paper_model()), 1.0, 10, RngConfig(1))
    path = tmp_path / "r.csv"
    write_replicates(reps, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "74,10,1.0"
    assert len(lines) == 1 + 10 * 74
    back = read_replicates(path)
    np.testing.assert_array_equal(back.data, reps.data)
    assert back.sigma == reps.sigma


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False, min_magnitude=0.1),
             min_size=1, max_size=4, unique=True),
    st.integers(0, 3),
)
def test_synthesize_linear_in_coefficients(nodes, extra):
    nodes = np.array(nodes)
    if np.min(np.abs(nodes[:, None] - nodes[None, :]) + np.eye(nodes.size)) < 1e-6:
        return
    n = 2 * (nodes.size + extra)
    c1 = np.arange(1, nodes.size + 1, dtype=complex)
    c2 = 1j * np.ones(nodes.size)
    s1 = synthesize(ExponentialModel(c1, nodes, n))
    s2 = synthesize(ExponentialModel(c2, nodes, n))
    s12 = synthesize(ExponentialModel(c1 + c2, nodes, n)) if np.all(c1 + c2 != 0) else s1 + s2
    np.testing.assert_allclose(s12, s1 + s2, rtol=1e-12, atol=1e-12 * np.abs(s12).max())
