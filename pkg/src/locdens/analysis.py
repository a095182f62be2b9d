"""Quantitative studies on the localization densities.

Tail-exponent fits, quantile front speeds, the narrow-energy comparison of the
naive and POVM densities, the width x energy scan, and the convexity gap of
mixtures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .density import (
    DensityProfile,
    Prescription,
    Region,
    StateLike,
    _radial_mass,
    _states,
    density,
    initial_panels,
    density_values,
    region_probability,
    spatial_extent,
)
from .errors import ConfigurationError, DomainError, TailFitError
from .quadrature import adaptive_rule
from .state import MixedState, MomentumState, energy_moment, relative_energy_spread

MIN_FIT_POINTS = 8
MONOTONE_JITTER = 0.05
# absolute accuracy floor for L1 distances between unit-normalized densities
DIFFERENCE_FLOOR = 1e-15


@dataclass(frozen=True)
class TailFit:
    r_lo: float
    r_hi: float
    slope: float
    intercept: float
    residual: float
    slope_stderr: float
    n_points: int

    @property
    def gamma_hat(self) -> float:
        """Decay rate of the amplitude: density ~ exp(-2 gamma r)."""
        return -self.slope / 2.0

    @property
    def gamma_stderr(self) -> float:
        return self.slope_stderr / 2.0

    def bound(self, mass: float, n_sigma: float = 3.0) -> float:
        return mass + n_sigma * self.gamma_stderr

    def within_bound(self, mass: float, n_sigma: float = 3.0) -> bool:
        return self.gamma_hat <= self.bound(mass, n_sigma)


def fit_tail(profile: DensityProfile, window: tuple[float, float]) -> TailFit:
    """Least-squares line through (r, ln p) on the window.

    Raises
    ------
    TailFitError
        Fewer than 8 points in the window, or a nonpositive density sample
        (the quadrature noise floor has been reached).
    """
    r_lo, r_hi = map(float, window)
    if not r_lo < r_hi:
        raise TailFitError(f"empty tail window [{r_lo}, {r_hi}]")
    pts = np.asarray(profile.points, dtype=float)
    sel = (pts >= r_lo) & (pts <= r_hi)
    r, p = pts[sel], np.asarray(profile.values)[sel]
    if r.size < MIN_FIT_POINTS:
        raise TailFitError(f"only {r.size} samples in [{r_lo}, {r_hi}]; need at least {MIN_FIT_POINTS}")
    if np.any(p <= 0):
        bad = float(r[np.argmax(p <= 0)])
        raise TailFitError(
            f"nonpositive density at r={bad:.4g}: noise floor reached; shrink the window or raise the resolution"
        )
    lp = np.log(p)
    fit = stats.linregress(r, lp)
    resid = lp - (fit.intercept + fit.slope * r)
    return TailFit(r_lo, r_hi, float(fit.slope), float(fit.intercept),
                   float(np.sqrt(np.mean(resid**2))), float(fit.stderr), int(r.size))


def tail_profile(state: MomentumState, prescription, window, n_points: int = 64, t: float = 0.0) -> DensityProfile:
    """Density sampled uniformly on the tail window."""
    return density(state, np.linspace(window[0], window[1], n_points), t, prescription)


def width_and_peak(state: MomentumState, prescription=Prescription.POVM, t: float = 0.0) -> tuple[float, float]:
    """Location of the density maximum and RMS spatial width about the mean."""
    X = spatial_extent(state, t, prescription)
    lo = -X if state.dim == 1 else 0.0
    f = _radial_mass(state, t, prescription)
    nodes, w, v = adaptive_rule(f, lo, X, tol=1e-10, initial_panels=initial_panels(state, lo, X))
    mass = w @ v
    if state.dim == 1:
        mean = (w * nodes) @ v / mass
        var = (w * (nodes - mean) ** 2) @ v / mass
    else:
        mean = 0.0
        var = (w * nodes**2) @ v / mass
    dense = np.linspace(lo, X, 4001)
    peak = float(dense[np.argmax(density_values(state, dense, t, prescription))])
    return peak, float(math.sqrt(var))


def default_tail_window(state: MomentumState, prescription=Prescription.POVM, t: float = 0.0) -> tuple[float, float]:
    """[peak + 5 w, peak + 10 w] with w the RMS width of the density."""
    peak, w = width_and_peak(state, prescription, t)
    return abs(peak) + 5 * w, abs(peak) + 10 * w


@dataclass(frozen=True)
class FrontRadius:
    """Radius R_q(t) of the smallest centered region holding probability 1 - q."""

    q: float
    times: tuple[float, ...]
    radii: tuple[float, ...]

    @property
    def speeds(self) -> tuple[float, ...]:
        """(R_q(t) - R_q(0)) / t for every t > 0."""
        r0 = self.radii[0]
        return tuple((r - r0) / t for t, r in zip(self.times[1:], self.radii[1:]))


def front_radius(state: StateLike, prescription, q: float, t: float, center: float = 0.0) -> float:
    """Solve P(ball(R), t) = 1 - q for R."""
    prescription = Prescription(prescription)
    dim = state.params.dim
    target = 1.0 - q

    def excess(R):
        if R <= 0:
            return -target
        region = Region(((center - R, center + R),), 1) if dim == 1 else Region.ball(R, 3)
        return region_probability(state, region, t, prescription) - target

    X = spatial_extent(state, t, prescription) + abs(center)
    if excess(X) < 0:
        raise DomainError(f"P(|x| < {X:.4g}) is below 1 - q = {target}; domain too small")
    return float(optimize.brentq(excess, 0.0, X, xtol=1e-11, rtol=1e-13))


def front_speed(state: StateLike, prescription, q: float, times: Sequence[float]) -> FrontRadius:
    """Quantile front radii at ``times`` and their average growth rates from t=0."""
    if not 1e-6 <= q <= 0.5:
        raise ConfigurationError(f"quantile q must lie in [1e-6, 0.5], got {q}")
    times = tuple(float(t) for t in times)
    if not times or times[0] != 0.0:
        raise ConfigurationError("times must start at t=0")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigurationError("times must be strictly increasing")
    radii = tuple(front_radius(state, prescription, q, t) for t in times)
    return FrontRadius(q, times, radii)


def l1_distance(state: StateLike, first, second, t: float = 0.0, points=None) -> float:
    """Integral of |p_first - p_second| over all space (or trapezoid on ``points``)."""
    first, second = Prescription(first), Prescription(second)
    if points is not None:
        pts = np.sort(np.asarray(points, dtype=float))
        diff = np.abs(density_values(state, pts, t, first) - density_values(state, pts, t, second))
        weight = 4 * np.pi * pts**2 if state.params.dim == 3 else 1.0
        return float(np.trapezoid(weight * diff, pts))
    if first is second:
        return 0.0
    X = max(spatial_extent(state, t, first), spatial_extent(state, t, second))
    f1, f2 = _radial_mass(state, t, first), _radial_mass(state, t, second)
    lo = -X if state.params.dim == 1 else 0.0
    _, w, v = adaptive_rule(lambda x: np.abs(f1(x) - f2(x)), lo, X, tol=1e-10, abs_tol=DIFFERENCE_FLOOR,
                            initial_panels=initial_panels(state, lo, X))
    return float(w @ v)


@dataclass(frozen=True)
class NarrowEnergyRow:
    relative_spread: float
    l1: float


def narrow_energy_study(family: Sequence[MomentumState], t: float = 0.0, points=None,
                        first=Prescription.NAIVE, second=Prescription.POVM) -> list[NarrowEnergyRow]:
    """L1 distance between two prescriptions along a family of narrowing energy spread.

    The family must be ordered by decreasing Delta E / <E>.
    """
    spreads = [relative_energy_spread(s) for s in family]
    if any(b > a for a, b in zip(spreads, spreads[1:])):
        raise ConfigurationError("family must be sorted by decreasing relative energy spread")
    return [NarrowEnergyRow(sp, l1_distance(s, first, second, t, points)) for sp, s in zip(spreads, family)]


def is_nonincreasing(values: Sequence[float], jitter: float = MONOTONE_JITTER) -> bool:
    return all(b <= a * (1 + jitter) for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class LocalizationRow:
    width: float
    mean_energy: float

    @property
    def product(self) -> float:
        return self.width * self.mean_energy


def localization_width(state: MomentumState, q: float = 0.9, prescription=Prescription.POVM) -> float:
    """Length (d=1) or cube root of the volume (d=3) of the centered region holding fraction q at t=0."""
    R = front_radius(state, prescription, 1.0 - q, 0.0)
    if state.dim == 1:
        return 2.0 * R
    return (4.0 * math.pi / 3.0) ** (1.0 / 3.0) * R


def localization_bound_scan(family: Sequence[MomentumState], q: float = 0.9) -> list[LocalizationRow]:
    """width_q x <E> for each state of the family; the family should span a decade of widths."""
    if not 0 < q < 1:
        raise ConfigurationError(f"mass fraction must lie in (0, 1), got {q}")
    return [LocalizationRow(localization_width(s, q), energy_moment(s, 1)) for s in family]


def convexity_gap(mix: MixedState, t: float = 0.0, prescription=Prescription.NAIVE, points=None) -> float:
    """L1 distance between the mixture density and the convex combination of component densities."""
    prescription = Prescription(prescription)
    if len(mix.components) < 2:
        raise ConfigurationError("convexity gap needs a mixture with at least two components")

    def gap(x):
        mixed = density_values(mix, x, t, prescription)
        convex = sum(w * density_values(s, x, t, prescription) for w, s in mix.components)
        out = np.abs(mixed - convex)
        return 4 * np.pi * x**2 * out if mix.params.dim == 3 else out

    if points is not None:
        pts = np.sort(np.asarray(points, dtype=float))
        return float(np.trapezoid(gap(pts), pts))
    X = max(spatial_extent(s, t, prescription) for s in _states(mix))
    lo = -X if mix.params.dim == 1 else 0.0
    _, w, v = adaptive_rule(gap, lo, X, tol=1e-10, abs_tol=DIFFERENCE_FLOOR,
                            initial_panels=initial_panels(mix, lo, X))
    return float(w @ v)
