import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hankelkde.analytic import SnrPoint, h2_cell_integrals, h2_closed_form, mc_condensed_density, mc_counts
from hankelkde.fields import make_grid
from hankelkde.pencil import Region
from hankelkde.signal import ExponentialModel, RngConfig

XI = np.exp(-0.1 - 2j * np.pi * 0.3)


def test_value_at_node_zero():
    pt = SnrPoint(1.0, 0.0, 1 / np.sqrt(4.0))
    assert pt.rho == pytest.approx(4.0)
    assert h2_closed_form(pt, 0.0) == pytest.approx(5.0 / np.pi)


def test_zero_snr_limit_is_stationary_density():
    pt = SnrPoint(1.0, XI, np.inf)
    z = np.array([0, 0.5 + 0.2j, -3j, 10 + 1j])
    np.testing.assert_allclose(h2_closed_form(pt, z), 1 / (np.pi * (1 + np.abs(z) ** 2) ** 2))


def test_unit_mass_on_large_disk():
    pt = SnrPoint.from_rho(XI, 10.0)
    f = lambda r, th: r * float(h2_closed_form(pt, r * np.exp(1j * th)))
    # split the radius at |xi| where the density peaks
    m1, _ = integrate.dblquad(f, 0, 2 * np.pi, 0, abs(XI), epsabs=1e-10)
    m2, _ = integrate.dblquad(f, 0, 2 * np.pi, abs(XI), 200, epsabs=1e-10)
    # the tail beyond radius R carries about 1/R^2 of the mass
    assert m1 + m2 == pytest.approx(1.0, abs=1e-3)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0.01, 50), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_rotation_invariance(theta, rho, z):
    rot = np.exp(1j * theta)
    a = SnrPoint.from_rho(XI, rho)
    b = SnrPoint.from_rho(XI * rot, rho)
    assert h2_closed_form(b, z * rot) == pytest.approx(float(h2_closed_form(a, z)), rel=1e-10)


def test_cell_integrals_sum_to_region_mass():
    pt = SnrPoint.from_rho(XI, 10.0)
    g = make_grid(Region(-2, 2, -2, 2), 30, 30)
    total = h2_cell_integrals(pt, g).sum()
    f = lambda y, x: float(h2_closed_form(pt, x + 1j * y))
    ref, _ = integrate.dblquad(f, -2, 2, -2, 2, epsabs=1e-9)
    assert total == pytest.approx(ref, rel=1e-6)


def test_low_noise_mass_sits_on_the_node_cell():
    model = ExponentialModel([1.0], [XI], 2, 1e-6)
    g = make_grid(Region(-1, 1, -1, 1), 20, 20)
    counts = mc_counts(model, 500, g, RngConfig(1))
    h, k = g.nearest_node(XI)
    assert counts[h, k] == 500


def test_monte_carlo_density_units():
    model = ExponentialModel([1.0], [XI], 2, 1 / np.sqrt(10))
    g = make_grid(Region(-2, 2, -2, 2), 24, 24)
    f = mc_condensed_density(model, 20_000, g, RngConfig(2))
    # with p = 1 the density integrates to the in-region probability
    pt = SnrPoint.from_rho(XI, 10.0)
    inside = h2_cell_integrals(pt, g).sum()
    assert g.integrate(f.values, rule="voronoi") == pytest.approx(inside, abs=0.01)


def test_monte_carlo_deterministic():
    model = ExponentialModel([1.0], [XI], 2, 0.5)
    g = make_grid(Region(-2, 2, -2, 2), 10, 10)
    a = mc_counts(model, 1000, g, RngConfig(3))
    b = mc_counts(model, 1000, g, RngConfig(3))
    np.testing.assert_array_equal(a, b)
