"""Position-space fields of a one-particle state by direct quadrature.

For a weight w(p) the field is

    f(x, t) = integral dmu(p) w(p) psi(p) K(p, x) exp(-i E t)

with K = exp(i p x) in d=1 and the angular average K = sin(p r)/(p r) in d=3.
Spatial and time derivatives differentiate the kernel under the integral.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError, SingularWeightError
from .state import MASSLESS_SUPPRESSION, MomentumGrid, MomentumState

# max phase change (|x| + |t|) * panel_width tolerated by one Gauss-Legendre panel
MAX_PANEL_PHASE = 6.0
SERIES_THRESHOLD = 1e-4
_CHUNK = 256


class FieldKind(enum.Enum):
    PLAIN = "plain"
    TILDE = "tilde"
    NEWTON_WIGNER = "nw"

    def weight(self, E):
        """Multiplier applied to psi(p): 1, E^(-1/2) or sqrt(2E)."""
        E = np.asarray(E, dtype=float)
        if self is FieldKind.PLAIN:
            return np.ones_like(E)
        if self is FieldKind.TILDE:
            return 1.0 / np.sqrt(E)
        return np.sqrt(2.0 * E)


@dataclass(frozen=True, eq=False)
class PositionField:
    """Field value, spatial derivative and time derivative at sample points.

    In d=3 ``points`` are radii and ``grad`` is the radial derivative, so
    |grad f|^2 = |grad|^2 by radial symmetry.
    """

    points: np.ndarray
    t: float
    value: np.ndarray
    grad: np.ndarray
    dt: np.ndarray
    kind: FieldKind


def sinc(z):
    """sin(z)/z with a Taylor series below 1e-4."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_THRESHOLD
    zs = np.where(small, 1.0, z)
    z2 = z * z
    return np.where(small, 1.0 - z2 / 6.0 + z2 * z2 / 120.0, np.sin(zs) / zs)


def sinc_prime(z):
    """d/dz sin(z)/z = (z cos z - sin z)/z^2 with a Taylor series below 1e-4."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_THRESHOLD
    zs = np.where(small, 1.0, z)
    z2 = z * z
    return np.where(small, -z / 3.0 + z * z2 / 30.0, (zs * np.cos(zs) - np.sin(zs)) / (zs * zs))


def _check_massless(s: MomentumState):
    if s.mass != 0:
        return
    amp = np.abs(s.values)
    near = int(np.argmin(np.abs(s.grid.nodes)))
    if amp[near] >= MASSLESS_SUPPRESSION * amp.max():
        raise SingularWeightError(
            f"massless state not suppressed at p=0: |psi|/max = {amp[near] / amp.max():.3e} "
            f"(need < {MASSLESS_SUPPRESSION:g}); the E-dependent weights are singular there"
        )


def resolved_state(s: MomentumState, reach: float) -> MomentumState:
    """Return ``s`` or a resampled copy whose panels resolve phases up to ``reach``.

    ``reach`` is max(|x|) + |t|. Closed-form states are resampled on a finer
    grid; sampled states raise :class:`ResolutionError`.
    """
    if reach * s.grid.panel_width <= MAX_PANEL_PHASE:
        return s
    n_panels = int(math.ceil(reach * (s.grid.hi - s.grid.lo) / MAX_PANEL_PHASE))
    if s.profile is None:
        raise ResolutionError(
            f"momentum panels of width {s.grid.panel_width:.3g} cannot resolve |x|+|t| = {reach:.3g}; "
            f"need at least {n_panels} panels"
        )
    grid = MomentumGrid.build(s.grid.lo, s.grid.hi, n_panels * s.grid.order, s.grid.order)
    return s.resampled(grid)


def evaluate_field(s: MomentumState, kind: FieldKind, points, t: float = 0.0) -> PositionField:
    """Evaluate the ``kind`` field of ``s`` and its derivatives at ``points``.

    Parameters
    ----------
    s : MomentumState
        Normalized state.
    kind : FieldKind
    points : array_like
        Positions x (d=1) or radii r >= 0 (d=3).
    t : float
        Time.

    Returns
    -------
    PositionField
    """
    kind = FieldKind(kind)
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    if s.dim == 3 and np.any(pts < 0):
        raise ValueError("radial points must be >= 0")
    _check_massless(s)
    reach = (float(np.max(np.abs(pts))) if pts.size else 0.0) + abs(t)
    s = resolved_state(s, reach)

    p = s.grid.nodes
    E = s.energies
    amp = s.dmu * kind.weight(E) * s.values * np.exp(-1j * E * t)
    flat = pts.reshape(-1)
    out = np.empty((3, flat.size), dtype=complex)
    for lo in range(0, flat.size, _CHUNK):
        z = np.outer(flat[lo : lo + _CHUNK], p)
        if s.dim == 1:
            kern = np.exp(1j * z)
            dkern = kern * (1j * p)
        else:
            kern = sinc(z)
            dkern = sinc_prime(z) * p
        out[0, lo : lo + _CHUNK] = kern @ amp
        out[1, lo : lo + _CHUNK] = dkern @ amp
        out[2, lo : lo + _CHUNK] = kern @ (-1j * E * amp)
    value, grad, dt = (row.reshape(pts.shape) for row in out)
    return PositionField(pts, float(t), value, grad, dt, kind)


@dataclass(frozen=True)
class DerivativeCheck:
    grad_deviation: float
    dt_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.grad_deviation, self.dt_deviation)


def check_derivatives(s: MomentumState, kind: FieldKind, x: float, t: float, h: float) -> DerivativeCheck:
    """Compare analytic derivatives against central differences of the field.

    Deviations are relative to max(|analytic derivative|, |field value|), which
    keeps them meaningful where a derivative vanishes by symmetry.
    """
    if not 1e-6 <= h <= 1e-2:
        raise ValueError(f"step h must lie in [1e-6, 1e-2], got {h!r}")
    here = evaluate_field(s, kind, [x], t)
    xs = [x - h, x + h]
    if s.dim == 3 and x - h < 0:
        raise ValueError("radial finite difference needs r >= h")
    fx = evaluate_field(s, kind, xs, t).value
    ft_minus = evaluate_field(s, kind, [x], t - h).value[0]
    ft_plus = evaluate_field(s, kind, [x], t + h).value[0]
    fd_grad = (fx[1] - fx[0]) / (2 * h)
    fd_dt = (ft_plus - ft_minus) / (2 * h)
    v = abs(here.value[0])
    g, d = here.grad[0], here.dt[0]
    return DerivativeCheck(
        grad_deviation=abs(g - fd_grad) / max(abs(g), v, 1e-300),
        dt_deviation=abs(d - fd_dt) / max(abs(d), v, 1e-300),
    )
