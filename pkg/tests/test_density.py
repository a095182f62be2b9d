import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locdens import (
    ModelParams,
    Prescription,
    Region,
    energy_density,
    energy_moment,
    make_gaussian,
    mix,
    mixture_density,
    naive_probability_density,
    nw_density,
    povm_density,
    region_probability,
)
from locdens.density import integrate_density, spatial_extent
from locdens.errors import ConfigurationError, DomainError

WHOLE = Region.whole(1)
PROBABILITIES = [Prescription.POVM, Prescription.NAIVE, Prescription.NW]


@pytest.mark.parametrize("p0", [0.0, 1.0, 5.0])
def test_energy_density_integrates_to_mean_energy(massive, p0):
    s = make_gaussian(massive, p0, 0.25)
    total = integrate_density(s, WHOLE, 0.0, Prescription.ENERGY_RAW)
    assert total == pytest.approx(energy_moment(s, 1), rel=1e-10)


@pytest.mark.parametrize("prescription", list(Prescription))
def test_densities_nonnegative(moving, prescription):
    x = np.linspace(-8, 8, 301)
    fn = {Prescription.ENERGY_RAW: energy_density, Prescription.NAIVE: naive_probability_density,
          Prescription.POVM: povm_density, Prescription.NW: nw_density}[prescription]
    assert np.all(fn(moving, x, 0.4).values >= 0)


def test_naive_is_energy_density_over_mean_energy(moving):
    x = np.linspace(-4, 4, 33)
    ratio = naive_probability_density(moving, x).values / energy_density(moving, x).values
    np.testing.assert_allclose(ratio, 1 / energy_moment(moving, 1), rtol=1e-13)


@pytest.mark.parametrize("t", [0.0, 1.0, 5.0, -3.0])
@pytest.mark.parametrize("prescription", PROBABILITIES)
def test_whole_space_probability_is_one(moving, prescription, t):
    assert region_probability(moving, WHOLE, t, prescription) == pytest.approx(1.0, abs=1e-10)


def test_massless_state_normalized():
    s = make_gaussian(ModelParams(0.0, 1), 2.0, 0.25)
    for prescription in PROBABILITIES:
        assert region_probability(s, WHOLE, 0.5, prescription) == pytest.approx(1.0, abs=1e-10)


def test_radial_state_normalized():
    s = make_gaussian(ModelParams(1.0, 3), 1.0, 0.25)
    whole = Region.whole(3)
    for prescription in PROBABILITIES:
        assert region_probability(s, whole, 0.0, prescription) == pytest.approx(1.0, abs=1e-9)
    h = energy_moment(s, 1)
    assert integrate_density(s, whole, 0.0, Prescription.ENERGY_RAW) == pytest.approx(h, rel=1e-9)


def test_total_mass_hint_tracks_trapezoid(moving):
    profile = povm_density(moving, np.linspace(-20, 20, 4001))
    assert profile.total_mass_hint == pytest.approx(1.0, abs=1e-8)


def test_even_state_mirror_symmetry_in_time(rest):
    # for psi(p) = psi(-p) the density satisfies p(x, t) = p(-x, -t) = p(x, -t)
    x = np.linspace(-5, 5, 21)
    a = povm_density(rest, x, 2.0).values
    b = povm_density(rest, -x, -2.0).values
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-18)


def test_moving_packet_drifts_right(moving):
    x = np.linspace(-10, 10, 2001)
    early = povm_density(moving, x, 0.0).values
    late = povm_density(moving, x, 4.0).values
    assert np.sum(x * late) > np.sum(x * early) + 1.0


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=-3.0, max_value=3.0), st.floats(min_value=0.05, max_value=3.0))
def test_additivity_over_disjoint_regions(a, width):
    s = make_gaussian(ModelParams(1.0, 1), 1.0, 0.25)
    left, right = Region.interval(-math.inf, a), Region.interval(a, a + width)
    rest_ = Region.interval(a + width, math.inf)
    parts = sum(region_probability(s, r, 0.3) for r in (left, right, rest_))
    assert parts == pytest.approx(1.0, abs=1e-10)
    union = left.union(right)
    assert region_probability(s, union, 0.3) == pytest.approx(
        region_probability(s, left, 0.3) + region_probability(s, right, 0.3), abs=1e-10)


def test_singleton_mixture_equals_pure_state(moving):
    m = mix([(1.0, moving)])
    x = np.linspace(-4, 4, 17)
    for prescription in PROBABILITIES:
        np.testing.assert_allclose(mixture_density(m, x, 0.5, prescription).values,
                                   povm_density(moving, x, 0.5).values if prescription is Prescription.POVM
                                   else mixture_density(moving, x, 0.5, prescription).values, rtol=1e-14)


def test_equal_energy_components_make_naive_linear(massive):
    a = make_gaussian(massive, 1.0, 0.25)
    b = make_gaussian(massive, -1.0, 0.25)
    m = mix([(0.3, a), (0.7, b)])
    x = np.linspace(-4, 4, 41)
    convex = 0.3 * naive_probability_density(a, x).values + 0.7 * naive_probability_density(b, x).values
    np.testing.assert_allclose(mixture_density(m, x, 0.0, Prescription.NAIVE).values, convex, rtol=1e-12)


def test_unequal_energy_mixture_rules(unequal_mixture, rest, fast):
    x = np.linspace(-4, 4, 41)
    povm = mixture_density(unequal_mixture, x, 0.0, Prescription.POVM).values
    np.testing.assert_allclose(povm, 0.5 * povm_density(rest, x).values + 0.5 * povm_density(fast, x).values,
                               rtol=1e-14)
    naive = mixture_density(unequal_mixture, x, 0.0, Prescription.NAIVE).values
    convex = 0.5 * naive_probability_density(rest, x).values + 0.5 * naive_probability_density(fast, x).values
    assert np.max(np.abs(naive - convex)) > 1e-3
    # the ratio rule still normalizes the mixture
    assert region_probability(unequal_mixture, WHOLE, 0.0, Prescription.NAIVE) == pytest.approx(1.0, abs=1e-10)


def test_mixture_region_probability_frozen(unequal_mixture):
    region = Region.interval(-1.0, 1.0)
    assert region_probability(unequal_mixture, region, 0.0, Prescription.POVM) == pytest.approx(
        0.37046917516579575, abs=1e-11)
    assert region_probability(unequal_mixture, region, 0.0, Prescription.NAIVE) == pytest.approx(
        0.37669129845645166, abs=1e-11)


@pytest.mark.parametrize("intervals, dim, match", [
    ([], 1, "at least one"),
    ([(1.0, 1.0)], 1, "positive measure"),
    ([(0.0, 2.0), (1.0, 3.0)], 1, "disjoint"),
    ([(-1.0, 1.0)], 3, "below r=0"),
    ([(0.0, 1.0)], 2, "dim"),
])
def test_region_validation(intervals, dim, match):
    with pytest.raises(ConfigurationError, match=match):
        Region(tuple(intervals), dim)


def test_region_dimension_must_match_state(rest):
    with pytest.raises(ConfigurationError, match="dim"):
        region_probability(rest, Region.ball(1.0, 3))


def test_energy_raw_is_not_a_probability(rest):
    with pytest.raises(ConfigurationError, match="ENERGY_RAW"):
        region_probability(rest, WHOLE, 0.0, Prescription.ENERGY_RAW)


@pytest.mark.parametrize("t", [0.0, 20.0])
def test_density_negligible_beyond_spatial_extent(rest, t):
    X = spatial_extent(rest, t)
    x = np.linspace(-X, X, 1601)
    values = povm_density(rest, x, t).values
    assert max(values[0], values[-1]) < 1e-14 * values.max()


def test_domain_error_when_extension_exhausted(rest, monkeypatch):
    import locdens.density as density_mod
    monkeypatch.setattr(density_mod, "MAX_DOUBLINGS", 1)
    with pytest.raises(DomainError, match="doublings"):
        spatial_extent(rest, 0.0, rel=1e-300)
