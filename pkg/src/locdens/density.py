"""Localization densities, region probabilities and mixture rules.

Four prescriptions are available for a one-particle state:

``ENERGY_RAW``
    Energy density |grad psi|^2 + |d_t psi|^2 + m^2 |psi|^2 of the plain field.
``NAIVE``
    Energy density divided by <H>; for mixtures the ratio of the mixed
    energy density to the mixed <H>, which is not linear in the state.
``POVM``
    The same quadratic form evaluated on the field of psi(p)/sqrt(E(p));
    normalized for every state and linear on mixtures.
``NW``
    |psi_NW(x, t)|^2 with psi_NW(p) = sqrt(2E) psi(p).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ConfigurationError, DomainError
from .quadrature import adaptive_rule
from .state import MixedState, MomentumState, energy_moment, momentum_spread
from .transform import FieldKind, evaluate_field

StateLike = Union[MomentumState, MixedState]

# boundary density must fall below this fraction of the peak
EXTENT_REL = 1e-14
SPATIAL_TOL = 1e-12
MAX_DOUBLINGS = 12


class Prescription(enum.Enum):
    ENERGY_RAW = "energy_raw"
    NAIVE = "naive"
    POVM = "povm"
    NW = "nw"


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """Density samples at fixed time.

    ``total_mass_hint`` is the trapezoidal integral of the samples over the
    given points (with 4 pi r^2 in d=3); it approximates the all-space
    integral only when the points cover the support.
    """

    points: np.ndarray
    t: float
    values: np.ndarray
    prescription: Prescription
    dim: int
    total_mass_hint: float


@dataclass(frozen=True)
class Region:
    """Finite union of disjoint intervals (d=1) or radial shells (d=3).

    Infinite endpoints are allowed and resolved by automatic domain extension.
    """

    intervals: tuple[tuple[float, float], ...]
    dim: int = 1

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        if self.dim not in (1, 3):
            raise ConfigurationError(f"region dim must be 1 or 3, got {self.dim}")
        if not ivs:
            raise ConfigurationError("region needs at least one interval")
        for a, b in ivs:
            if not a < b:
                raise ConfigurationError(f"region component [{a}, {b}] has no positive measure")
            if self.dim == 3 and a < 0:
                raise ConfigurationError(f"radial shell [{a}, {b}] starts below r=0")
        for (_, b1), (a2, _) in zip(ivs, ivs[1:]):
            if a2 < b1:
                raise ConfigurationError("region components must be sorted and pairwise disjoint")

    @classmethod
    def interval(cls, a: float, b: float) -> "Region":
        return cls(((a, b),), 1)

    @classmethod
    def shell(cls, r1: float, r2: float) -> "Region":
        return cls(((r1, r2),), 3)

    @classmethod
    def ball(cls, radius: float, dim: int) -> "Region":
        """Centered interval [-R, R] (d=1) or ball r < R (d=3)."""
        return cls(((-radius, radius),), 1) if dim == 1 else cls(((0.0, radius),), 3)

    @classmethod
    def whole(cls, dim: int) -> "Region":
        return cls(((-math.inf, math.inf),), 1) if dim == 1 else cls(((0.0, math.inf),), 3)

    def union(self, other: "Region") -> "Region":
        if other.dim != self.dim:
            raise ConfigurationError("cannot join regions of different dimension")
        return Region(tuple(sorted(self.intervals + other.intervals)), self.dim)


def _quadratic_form(field, mass: float) -> np.ndarray:
    out = np.abs(field.grad) ** 2 + np.abs(field.dt) ** 2
    if mass != 0:
        # skipped for m=0: the bare field value may not converge there
        out = out + mass**2 * np.abs(field.value) ** 2
    return out


def _pure_values(s: MomentumState, points, t: float, prescription: Prescription) -> np.ndarray:
    if prescription is Prescription.NW:
        return np.abs(evaluate_field(s, FieldKind.NEWTON_WIGNER, points, t).value) ** 2
    if prescription is Prescription.POVM:
        return _quadratic_form(evaluate_field(s, FieldKind.TILDE, points, t), s.mass)
    raw = _quadratic_form(evaluate_field(s, FieldKind.PLAIN, points, t), s.mass)
    if prescription is Prescription.NAIVE:
        return raw / energy_moment(s, 1)
    return raw


def density_values(state: StateLike, points, t: float, prescription) -> np.ndarray:
    """Pointwise density of a pure or mixed state.

    Mixtures combine linearly for ENERGY_RAW, POVM and NW, and by the ratio
    sum_i w_i E_i(x,t) / sum_i w_i <H>_i for NAIVE.
    """
    prescription = Prescription(prescription)
    if isinstance(state, MomentumState):
        return _pure_values(state, points, t, prescription)
    if prescription is Prescription.NAIVE:
        num = sum(w * _pure_values(s, points, t, Prescription.ENERGY_RAW) for w, s in state.components)
        den = math.fsum(w * energy_moment(s, 1) for w, s in state.components)
        return num / den
    return sum(w * _pure_values(s, points, t, prescription) for w, s in state.components)


def _profile(state: StateLike, points, t, prescription) -> DensityProfile:
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    values = density_values(state, pts, t, prescription)
    dim = state.params.dim
    if pts.size > 1:
        order = np.argsort(pts)
        weight = 4 * np.pi * pts[order] ** 2 if dim == 3 else 1.0
        hint = float(np.trapezoid(weight * values[order], pts[order]))
    else:
        hint = 0.0
    return DensityProfile(pts, float(t), values, Prescription(prescription), dim, hint)


def energy_density(s: MomentumState, points, t: float = 0.0) -> DensityProfile:
    """Energy density; its spatial integral is <H>."""
    return _profile(s, points, t, Prescription.ENERGY_RAW)


def naive_probability_density(s: MomentumState, points, t: float = 0.0) -> DensityProfile:
    """Energy density normalized by <H>."""
    return _profile(s, points, t, Prescription.NAIVE)


def povm_density(s: MomentumState, points, t: float = 0.0) -> DensityProfile:
    """Expectation of the localization POVM element at each point."""
    return _profile(s, points, t, Prescription.POVM)


def nw_density(s: MomentumState, points, t: float = 0.0) -> DensityProfile:
    """Newton-Wigner density |psi_NW(x, t)|^2."""
    return _profile(s, points, t, Prescription.NW)


def mixture_density(mix: MixedState, points, t: float = 0.0, prescription=Prescription.POVM) -> DensityProfile:
    """Density of a mixture; see :func:`density_values` for the combination rules."""
    return _profile(mix, points, t, prescription)


def density(state: StateLike, points, t: float = 0.0, prescription=Prescription.POVM) -> DensityProfile:
    return _profile(state, points, t, prescription)


def _states(state: StateLike) -> Sequence[MomentumState]:
    return [state] if isinstance(state, MomentumState) else state.states


def _radial_mass(state, t, prescription) -> Callable[[np.ndarray], np.ndarray]:
    if state.params.dim == 3:
        return lambda r: 4 * np.pi * r**2 * density_values(state, r, t, prescription)
    return lambda x: density_values(state, x, t, prescription)


def spatial_extent(state: StateLike, t: float = 0.0, prescription=Prescription.POVM, rel: float = EXTENT_REL) -> float:
    """Half-width X (or radius) beyond which the density is below ``rel`` x peak.

    Starts from a width set by the momentum spread and the time, and doubles
    until the outer 2.5% of the window on each side is below threshold.

    Raises
    ------
    DomainError
        If no such X is found within 12 doublings.
    """
    prescription = Prescription(prescription)
    states = _states(state)
    dp = min(momentum_spread(s) for s in states)
    X = max(4.0, 5.0 / max(dp, 1e-12)) + abs(t)
    f = _radial_mass(state, t, prescription)
    dim = state.params.dim
    for _ in range(MAX_DOUBLINGS):
        pts = np.linspace(-X, X, 1601) if dim == 1 else np.linspace(0.0, X, 801)
        vals = np.abs(f(pts))
        edge = max(1, pts.size // 40)
        boundary = vals[-edge:].max() if dim == 3 else max(vals[:edge].max(), vals[-edge:].max())
        if boundary < rel * vals.max():
            return float(X)
        X *= 2.0
    raise DomainError(
        f"density still above {rel:g} x peak at |x| = {X / 2:.4g} after {MAX_DOUBLINGS} doublings; "
        "pass an explicit finite region instead"
    )


def _finite_intervals(state, region: Region, t, prescription) -> list[tuple[float, float]]:
    if all(math.isfinite(a) and math.isfinite(b) for a, b in region.intervals):
        return list(region.intervals)
    X = spatial_extent(state, t, prescription)
    out = []
    for a, b in region.intervals:
        a = -X if a == -math.inf else a
        b = X if b == math.inf else b
        if a >= b:
            continue
        out.append((a, b))
    if not out:
        raise DomainError("region lies entirely beyond the extended domain")
    return out


def integrate_density(state: StateLike, region: Region, t: float, prescription, tol: float = SPATIAL_TOL) -> float:
    """Integral of the chosen density over ``region`` (no normalization rule applied)."""
    prescription = Prescription(prescription)
    if region.dim != state.params.dim:
        raise ConfigurationError(f"region has dim={region.dim}, state has dim={state.params.dim}")
    f = _radial_mass(state, t, prescription)
    total = 0.0
    for a, b in _finite_intervals(state, region, t, prescription):
        _, w, v = adaptive_rule(f, a, b, tol=tol, initial_panels=initial_panels(state, a, b))
        total += float(w @ v)
    return total


def initial_panels(state: StateLike, a: float, b: float) -> int:
    """Starting panel count so that no feature of width ~1/dp falls between nodes."""
    dp = max(momentum_spread(s) for s in _states(state))
    return int(min(max(16, math.ceil((b - a) * dp / 2)), 4096))


def region_probability(state: StateLike, region: Region, t: float = 0.0, prescription=Prescription.POVM,
                       tol: float = SPATIAL_TOL) -> float:
    """Probability to find the particle in ``region`` at time ``t``.

    For mixtures POVM and NW use the linear rule sum_i w_i P_i(region); NAIVE
    uses the ratio sum_i w_i int_region E_i / sum_i w_i <H>_i.
    """
    prescription = Prescription(prescription)
    if prescription is Prescription.ENERGY_RAW:
        raise ConfigurationError("ENERGY_RAW is not a probability prescription")
    if isinstance(state, MomentumState):
        return integrate_density(state, region, t, prescription, tol)
    if prescription is Prescription.NAIVE:
        num = math.fsum(w * integrate_density(s, region, t, Prescription.ENERGY_RAW, tol) for w, s in state.components)
        den = math.fsum(w * energy_moment(s, 1) for w, s in state.components)
        return num / den
    return math.fsum(w * integrate_density(s, region, t, prescription, tol) for w, s in state.components)
