"""One-particle momentum-space states of a free scalar field.

States live on the Lorentz-invariant measure

    dmu(p) = d^d p / ((2 pi)^d 2 E(p)),    E(p) = sqrt(m^2 + p^2),

in natural units (hbar = c = 1). Two spatial dimensions are supported: ``dim=1``
with signed momenta, and ``dim=3`` with radially symmetric wavefunctions
psi(|p|), for which the angular integral contributes 4 pi p^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, IncompatibleStatesError
from .quadrature import DEFAULT_ORDER, composite_rule

# |psi| at the momentum cutoff, relative to max |psi|.
CUTOFF_BOUND = 1e-12
# the default window is placed where the Gaussian has decayed this far
DEFAULT_TAIL_TOL = 1e-14
# massless states must satisfy |psi(0)| < MASSLESS_SUPPRESSION * max |psi|
MASSLESS_SUPPRESSION = 1e-6
MIN_MOMENTUM_NODES = 256
WEIGHT_SUM_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ModelParams:
    """Mass and spatial dimension of the free scalar field."""

    mass: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass >= 0):
            raise ConfigurationError(f"mass must be finite and >= 0, got {self.mass!r}")
        if self.dim not in (1, 3):
            raise ConfigurationError(f"dim must be 1 or 3, got {self.dim!r}")

    def energy(self, p):
        return np.sqrt(self.mass**2 + np.square(p))


def lorentz_measure(p, params: ModelParams):
    """Density of dmu with respect to dp (d=1) or d|p| (d=3, angles integrated)."""
    E = params.energy(p)
    if params.dim == 1:
        return 1.0 / (2.0 * np.pi * 2.0 * E)
    return 4.0 * np.pi * np.square(p) / ((2.0 * np.pi) ** 3 * 2.0 * E)


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Composite Gauss-Legendre grid on the truncated momentum window [lo, hi].

    For ``dim=1`` the window holds signed momenta; for ``dim=3`` it is a
    sub-interval of [0, inf) in |p|.
    """

    nodes: np.ndarray
    weights: np.ndarray
    lo: float
    hi: float
    n_panels: int
    order: int = DEFAULT_ORDER

    @classmethod
    def build(cls, lo: float, hi: float, n_nodes: int, order: int = DEFAULT_ORDER) -> "MomentumGrid":
        if not hi > lo:
            raise ConfigurationError(f"momentum window [{lo}, {hi}] is empty")
        n_panels = max(1, -(-int(n_nodes) // order))
        nodes, weights = composite_rule(lo, hi, n_panels, order)
        return cls(_frozen(nodes), _frozen(weights), float(lo), float(hi), n_panels, order)

    @property
    def cutoff(self) -> float:
        """Largest |p| on the grid (the momentum cutoff P)."""
        return max(abs(self.lo), abs(self.hi))

    @property
    def panel_width(self) -> float:
        return (self.hi - self.lo) / self.n_panels

    @property
    def size(self) -> int:
        return self.nodes.size

    def same_as(self, other: "MomentumGrid") -> bool:
        return self.nodes.shape == other.nodes.shape and bool(np.array_equal(self.nodes, other.nodes))


@dataclass(frozen=True)
class GaussianProfile:
    """Unnormalized psi(p) = exp(-(p - p0)^2 / (4 sigma^2)); kept so states can be resampled."""

    p0: float
    sigma: float

    def __call__(self, p):
        return np.exp(-np.square(np.asarray(p) - self.p0) / (4.0 * self.sigma**2))

    def window(self, tail_tol: float) -> tuple[float, float]:
        half = 2.0 * self.sigma * math.sqrt(math.log(1.0 / tail_tol))
        return self.p0 - half, self.p0 + half


@dataclass(frozen=True, eq=False)
class MomentumState:
    """Wavefunction samples psi(p) on a momentum grid.

    ``profile`` is set for closed-form states (Gaussians) so that the state can
    be re-evaluated on any other grid; ``norm`` is the numerically fixed
    normalization constant applied to the profile.
    """

    params: ModelParams
    grid: MomentumGrid
    values: np.ndarray
    normalized: bool = True
    profile: GaussianProfile | None = None
    norm: float = 1.0

    @cached_property
    def energies(self) -> np.ndarray:
        return _frozen(self.params.energy(self.grid.nodes))

    @cached_property
    def dmu(self) -> np.ndarray:
        """Quadrature weights of the Lorentz-invariant measure at the nodes."""
        return _frozen(self.grid.weights * lorentz_measure(self.grid.nodes, self.params))

    @property
    def mass(self) -> float:
        return self.params.mass

    @property
    def dim(self) -> int:
        return self.params.dim

    def norm_squared(self) -> float:
        return float(self.dmu @ np.abs(self.values) ** 2)

    def evolved(self, t: float) -> "MomentumState":
        """The state with the free phase exp(-i E t) absorbed into psi(p)."""
        return MomentumState(
            self.params, self.grid, _frozen(self.values * np.exp(-1j * self.energies * t)), self.normalized
        )

    def resampled(self, grid: MomentumGrid) -> "MomentumState":
        """Re-evaluate a closed-form state on ``grid`` and renormalize there."""
        if self.profile is None:
            raise ConfigurationError("only closed-form states can be resampled onto another grid")
        return _normalized_profile_state(self.params, grid, self.profile)

    def with_resolution(self, n_nodes: int) -> "MomentumState":
        return self.resampled(MomentumGrid.build(self.grid.lo, self.grid.hi, n_nodes, self.grid.order))

    @classmethod
    def from_samples(cls, params: ModelParams, grid: MomentumGrid, values, normalize: bool = True) -> "MomentumState":
        values = np.asarray(values, dtype=complex)
        if values.shape != grid.nodes.shape:
            raise ConfigurationError(f"expected {grid.size} samples, got shape {values.shape}")
        state = cls(params, grid, _frozen(values), normalized=False)
        if not normalize:
            return state
        n2 = state.norm_squared()
        if not n2 > 0:
            raise ConfigurationError("cannot normalize a state of zero norm")
        scale = 1.0 / math.sqrt(n2)
        return cls(params, grid, _frozen(values * scale), normalized=True, norm=scale)


def _normalized_profile_state(params, grid, profile) -> MomentumState:
    raw = profile(grid.nodes).astype(complex)
    n2 = float(grid.weights * lorentz_measure(grid.nodes, params) @ np.abs(raw) ** 2)
    scale = 1.0 / math.sqrt(n2)
    return MomentumState(params, grid, _frozen(raw * scale), True, profile, scale)


@dataclass(frozen=True)
class MixedState:
    """Convex combination sum_i w_i |psi_i><psi_i|, never collapsed to a pure state."""

    components: tuple[tuple[float, MomentumState], ...]

    @property
    def params(self) -> ModelParams:
        return self.components[0][1].params

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    @property
    def states(self) -> list[MomentumState]:
        return [s for _, s in self.components]


def make_gaussian(
    params: ModelParams,
    p0: float,
    sigma: float,
    n_nodes: int = 512,
    cutoff: float | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
    order: int = DEFAULT_ORDER,
) -> MomentumState:
    """Normalized Gaussian wavepacket psi(p) ~ exp(-(p - p0)^2 / (4 sigma^2)).

    Parameters
    ----------
    params : ModelParams
    p0, sigma : float
        Center and width of the momentum distribution. For ``dim=3`` the profile
        is used as a function of |p| on p >= 0.
    n_nodes : int
        Total number of momentum nodes (at least 256).
    cutoff : float, optional
        Explicit cutoff P; the window becomes [-P, P] (d=1) or [0, P] (d=3).
        By default the window is [p0 - L, p0 + L] with |psi| = ``tail_tol`` at
        the edges.

    Raises
    ------
    ConfigurationError
        If sigma <= 0, the cutoff leaves |psi(P)|/max|psi| >= 1e-12, the grid
        is too coarse for sigma, or a massless state is not suppressed at p=0.
    """
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ConfigurationError(f"sigma must be > 0, got {sigma!r}")
    if not math.isfinite(p0):
        raise ConfigurationError(f"p0 must be finite, got {p0!r}")
    if n_nodes < MIN_MOMENTUM_NODES:
        raise ConfigurationError(f"momentum resolution {n_nodes} below minimum {MIN_MOMENTUM_NODES}")
    if params.dim == 3 and p0 < 0:
        raise ConfigurationError("radial states need p0 >= 0")
    profile = GaussianProfile(float(p0), float(sigma))

    if cutoff is not None:
        if not cutoff > 0:
            raise ConfigurationError(f"cutoff P must be > 0, got {cutoff!r}")
        lo, hi = (-cutoff, cutoff) if params.dim == 1 else (0.0, cutoff)
        peak = 1.0 if lo <= p0 <= hi else float(max(profile(lo), profile(hi)))
        edges = [abs(profile(hi))] if params.dim == 3 else [abs(profile(lo)), abs(profile(hi))]
        ratio = max(edges) / peak
        if not ratio < CUTOFF_BOUND:
            raise ConfigurationError(
                f"cutoff bound violated: |psi(P)|/max|psi| = {ratio:.3e} >= {CUTOFF_BOUND:g} at P={cutoff}"
            )
    else:
        lo, hi = profile.window(tail_tol)
        if params.dim == 3:
            lo = max(lo, 0.0)

    if params.mass == 0 and lo <= 0.0 <= hi:
        ratio = float(profile(0.0))
        if not ratio < MASSLESS_SUPPRESSION:
            raise ConfigurationError(
                f"massless bound violated: |psi(0)|/max|psi| = {ratio:.3e} >= {MASSLESS_SUPPRESSION:g}"
            )
        # the remaining mass on the far side of p=0 is below ratio^2
        if params.dim == 1:
            lo, hi = (0.0, hi) if p0 > 0 else (lo, 0.0)

    grid = MomentumGrid.build(lo, hi, n_nodes, order)
    if grid.panel_width > 2.0 * sigma:
        raise ConfigurationError(
            f"momentum resolution too coarse: panel width {grid.panel_width:.3g} > 2*sigma = {2 * sigma:.3g}; "
            f"raise n_nodes above {n_nodes}"
        )
    return _normalized_profile_state(params, grid, profile)


def common_grid(states: Sequence[MomentumState]) -> MomentumGrid:
    """Grid covering the union of the windows at the finest panel width."""
    first = states[0].grid
    if all(s.grid.same_as(first) for s in states[1:]):
        return first
    lo = min(s.grid.lo for s in states)
    hi = max(s.grid.hi for s in states)
    width = min(s.grid.panel_width for s in states)
    order = first.order
    n_panels = int(math.ceil((hi - lo) / width - 1e-9))
    return MomentumGrid.build(lo, hi, n_panels * order, order)


def _check_params(states: Iterable[MomentumState]) -> ModelParams:
    states = list(states)
    params = states[0].params
    for s in states[1:]:
        if s.params != params:
            raise IncompatibleStatesError(f"incompatible model parameters: {params} vs {s.params}")
    return params


def inner_product(a: MomentumState, b: MomentumState) -> complex:
    """<a|b> = integral dmu(p) conj(psi_a(p)) psi_b(p).

    States on different grids are resampled onto a common grid when both are
    closed-form; otherwise the grids must coincide.
    """
    _check_params([a, b])
    if not a.grid.same_as(b.grid):
        if a.profile is None or b.profile is None:
            raise IncompatibleStatesError("states on different momentum grids and without closed form")
        grid = common_grid([a, b])
        a, b = a.resampled(grid), b.resampled(grid)
    return complex(a.dmu @ (np.conj(a.values) * b.values))


def _require_normalized(s: MomentumState):
    if not s.normalized:
        raise ConfigurationError("operation requires a normalized state")


def energy_moment(s: MomentumState, k: int) -> float:
    """<E^k> = integral dmu |psi|^2 E^k for a normalized state."""
    if int(k) != k or k < 0:
        raise ValueError(f"moment order must be a non-negative integer, got {k!r}")
    _require_normalized(s)
    return float(s.dmu @ (np.abs(s.values) ** 2 * s.energies ** int(k)))


def relative_energy_spread(s: MomentumState) -> float:
    """Delta E / <E> with Delta E = sqrt(<E^2> - <E>^2)."""
    e1 = energy_moment(s, 1)
    e2 = energy_moment(s, 2)
    return math.sqrt(max(e2 - e1 * e1, 0.0)) / e1


def momentum_spread(s: MomentumState) -> float:
    """RMS spread of the momentum (of |p| in d=3) under |psi|^2 dmu."""
    _require_normalized(s)
    prob = s.dmu * np.abs(s.values) ** 2
    mean = float(prob @ s.grid.nodes)
    return math.sqrt(max(float(prob @ s.grid.nodes**2) - mean**2, 0.0))


def mix(components: Sequence[tuple[float, MomentumState]]) -> MixedState:
    """Validate and build a mixture of pure states.

    Weights must be positive and sum to 1 within 1e-12; all states must share
    mass and dimension.
    """
    components = tuple((float(w), s) for w, s in components)
    if not components:
        raise ConfigurationError("a mixture needs at least one component")
    for w, s in components:
        if not w > 0:
            raise ConfigurationError(f"mixture weights must be positive, got {w}")
        _require_normalized(s)
    total = math.fsum(w for w, _ in components)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ConfigurationError(f"mixture weights sum to {total!r}, not 1")
    _check_params(s for _, s in components)
    return MixedState(components)
