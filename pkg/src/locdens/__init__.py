"""Localization probability densities for one-particle states of a free scalar field."""

__version__ = "0.1.0"

from .state import (  # noqa: E402
    MixedState,
    ModelParams,
    MomentumGrid,
    MomentumState,
    energy_moment,
    inner_product,
    make_gaussian,
    mix,
    relative_energy_spread,
)
from .transform import FieldKind, PositionField, check_derivatives, evaluate_field  # noqa: E402
from .density import (  # noqa: E402
    DensityProfile,
    Prescription,
    Region,
    energy_density,
    mixture_density,
    naive_probability_density,
    nw_density,
    povm_density,
    region_probability,
)
from .analysis import (  # noqa: E402
    FrontRadius,
    TailFit,
    convexity_gap,
    fit_tail,
    front_speed,
    localization_bound_scan,
    narrow_energy_study,
)
