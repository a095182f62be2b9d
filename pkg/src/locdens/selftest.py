"""Built-in invariant checks run by ``locdens selftest``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .analysis import convexity_gap
from .density import Prescription, Region, integrate_density, region_probability
from .state import ModelParams, energy_moment, make_gaussian, mix
from .transform import FieldKind, check_derivatives


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    # "max": pass when measured <= tolerance; "min": pass when measured > tolerance
    sense: str = "max"

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.measured):
            return False
        return self.measured <= self.tolerance if self.sense == "max" else self.measured > self.tolerance

    def line(self) -> str:
        op = "<=" if self.sense == "max" else ">"
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: measured={self.measured:.3e} required {op} {self.tolerance:.1e}"


def run_selftest() -> list[Check]:
    params = ModelParams(1.0, 1)
    s = make_gaussian(params, 1.0, 0.25)
    a = make_gaussian(params, 0.0, 0.25)
    b = make_gaussian(params, 2.0, 0.25)
    whole = Region.whole(1)
    checks = []

    # normalization constant against scipy's adaptive quadrature of the closed form
    ref, _ = integrate.quad(
        lambda p: math.exp(-((p - 1.0) ** 2) / (2 * 0.25**2)) / (4 * math.pi * math.hypot(1.0, p)),
        -np.inf, np.inf, epsabs=0, epsrel=1e-13,
    )
    checks.append(Check("gaussian normalization constant vs adaptive quadrature",
                        abs(s.norm - 1 / math.sqrt(ref)) * math.sqrt(ref), 1e-10))
    for t in (0.0, 1.0, 5.0):
        checks.append(Check(f"povm normalization t={t:g}",
                            abs(region_probability(s, whole, t, Prescription.POVM) - 1), 1e-6))
    checks.append(Check("newton-wigner normalization", abs(region_probability(s, whole, 0.0, Prescription.NW) - 1), 1e-6))
    checks.append(Check("naive normalization", abs(region_probability(s, whole, 0.0, Prescription.NAIVE) - 1), 1e-6))
    h = energy_moment(s, 1)
    checks.append(Check("energy density integrates to <H>",
                        abs(integrate_density(s, whole, 0.0, Prescription.ENERGY_RAW) / h - 1), 1e-6))

    m = mix([(0.5, a), (0.5, b)])
    region = Region.interval(-1.0, 1.0)
    mixed = region_probability(m, region, 0.0, Prescription.POVM)
    convex = 0.5 * region_probability(a, region, 0.0, Prescription.POVM) + 0.5 * region_probability(b, region, 0.0, Prescription.POVM)
    checks.append(Check("povm linearity on mixture", abs(mixed - convex), 1e-12))
    checks.append(Check("povm convexity gap", convexity_gap(m, 0.0, Prescription.POVM), 1e-12))
    checks.append(Check("naive convexity gap is nonzero", convexity_gap(m, 0.0, Prescription.NAIVE), 1e-3, "min"))

    E = s.energies
    tilde = FieldKind.TILDE.weight(E)
    nw = FieldKind.NEWTON_WIGNER.weight(E)
    rel = np.abs(tilde * math.sqrt(2.0) * E - nw) / nw
    checks.append(Check("tilde weight = 2^(-1/2) E^(-1) x newton-wigner weight", float(rel.max()), 1e-14))

    for kind in FieldKind:
        dev = check_derivatives(s, kind, 0.5, 0.3, 1e-4).max_deviation
        checks.append(Check(f"analytic derivatives ({kind.value}) vs central differences", dev, 1e-6))
    return checks
