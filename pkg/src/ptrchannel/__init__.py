"""Probabilistic two-ray (PTR) air-to-air path loss for built-up areas.

Submodules:

``city``         statistical cities and occlusion geometry
``propagation``  free-space, Fresnel, two-ray and PTR closed forms
``raycheck``     geometric two-ray evaluation over generated cities
``stats``        Weibull/Normal fits, ECDF/KS, log-distance and shadowing laws
``experiments``  the canned 4 GHz scenarios used by the CLI
``cli``          the ``ptrchannel`` command
"""

__version__ = '0.1.0'

from .city import (  # noqa: F401
    PRESETS, Building, CityMap, EnvironmentParams, GRLogistic,
    generate_city, get_preset, grid_dimensions, sample_building_height,
    segment_occluded,
    )
from .errors import (  # noqa: F401
    ConfigError, ConvergenceError, DomainError, PTRError,
    )
from .propagation import (  # noqa: F401
    Link, ModelOptions, Polarization, TwoRayBreakdown, fspl_db,
    ground_reflection_probability, ptr_path_loss, ptr_path_loss_curve,
    reflection_coefficient, two_ray_geometry,
    )
from .raycheck import (  # noqa: F401
    Condition, LinkSample, SweepResult, classify_link,
    deterministic_path_loss, distance_sweep, estimate_gr_probability,
    )
from .stats import (  # noqa: F401
    extract_shadowing, fit_log_distance, fit_normal, fit_shadow_model,
    fit_weibull, ks_statistic,
    )
