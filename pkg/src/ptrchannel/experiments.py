"""Canned scenarios: the 4 GHz urban trajectories and the sigma(h) study."""

from dataclasses import dataclass

import numpy as np

from . import raycheck, stats
from .city import PRESETS
from .propagation import (
    ModelOptions, Polarization, free_space_loss_db, ptr_path_loss_curve,
    )

FREQUENCY_HZ = 4.0e9
EPS_BUILDING = 4.44
EPS_GROUND = 3.0
CITY_SIDE_KM = 0.472
TRAJECTORY_ALTITUDES_M = (50.0, 100.0)
# 1 m grid over (0, 300] m
DISTANCE_RANGE_M = (1.0, 300.0)
DISTANCE_STEP_M = 1.0
SHADOW_ALTITUDES_M = tuple(float(h) for h in range(50, 301, 25))

# Reported values, kept for side-by-side output only.
REPORTED_SHADOW_LAW = {
    'suburban': (2.013, 0.0167, 1.608),
    'urban': (1.002, 0.0250, 1.369),
    'dense-urban': (3.936, 0.0286, 1.405),
    'high-rise': (11.001, 0.0222, 1.286),
    }
REPORTED_FITS = {
    'ptr': {'eta': 88.61, 'nu': 15.41, 'mu': -0.083, 'sigma': 1.500},
    'ray_tracing': {'eta': 90.54, 'nu': 15.48, 'mu': -0.068, 'sigma': 1.274},
    }


@dataclass(frozen=True)
class Scenario:
    """Everything needed to evaluate one model over a distance grid."""
    env: object = PRESETS['urban']
    frequency: float = FREQUENCY_HZ
    d_range: tuple = DISTANCE_RANGE_M
    step: float = DISTANCE_STEP_M
    polarization: Polarization = Polarization.HORIZONTAL
    eps_building: float = EPS_BUILDING
    eps_ground: float = EPS_GROUND
    options: ModelOptions = ModelOptions()
    h_b: float = None
    p_g: float = None
    seed: int = 0
    realizations: int = 1
    side_d: float = CITY_SIDE_KM
    linear_power: bool = False
    workers: int = 1

    @property
    def distances(self):
        return raycheck.distance_grid(self.d_range[0], self.d_range[1],
                                      self.step)


def ptr_curve(scenario, altitude):
    """Distances and PTR path loss for one altitude."""
    d = scenario.distances
    rng = None
    if scenario.options.stochastic_hb:
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(scenario.seed,
                                   spawn_key=(int(round(altitude * 1000)),))))
    pl = ptr_path_loss_curve(
        d, altitude, scenario.frequency, scenario.env, scenario.polarization,
        scenario.eps_building, scenario.eps_ground, h_b=scenario.h_b,
        p_g=scenario.p_g, options=scenario.options, rng=rng)
    return d, pl


def fspl_curve(scenario):
    d = scenario.distances
    return d, free_space_loss_db(d, scenario.frequency)


def ray_sweep(scenario, altitude):
    return raycheck.distance_sweep(
        scenario.env, altitude, scenario.frequency, scenario.d_range,
        scenario.step, scenario.realizations, scenario.seed,
        scenario.polarization, scenario.eps_building, scenario.eps_ground,
        scenario.options, scenario.side_d, scenario.linear_power,
        workers=scenario.workers)


@dataclass(frozen=True)
class CurveFits:
    weibull: stats.WeibullParams
    normal: stats.NormalParams
    log_distance: stats.LogDistanceFit
    path_loss: np.ndarray
    shadowing: np.ndarray


def fit_curve(distances, path_loss):
    """Weibull on path loss, Normal on detrended path loss, and the PLE."""
    ld = stats.fit_log_distance(distances, path_loss)
    pl = np.asarray(path_loss, dtype=float)
    pl = pl[np.isfinite(pl)]
    return CurveFits(stats.fit_weibull(pl), stats.fit_normal(ld.residuals),
                     ld, pl, ld.residuals)


def shadowing_vs_altitude(scenario, altitudes=SHADOW_ALTITUDES_M,
                          source='ptr'):
    """Shadowing factor (dB) at each altitude over a fixed distance grid."""
    out = []
    for h in altitudes:
        if source == 'ptr':
            d, pl = ptr_curve(scenario, h)
        elif source == 'raycheck':
            sweep = ray_sweep(scenario, h)
            d, pl = sweep.distances, sweep.path_loss_db
        else:
            raise ValueError(f'unknown source {source!r}')
        out.append(stats.fit_normal(stats.extract_shadowing(d, pl)).sigma)
    return np.array(out)


@dataclass(frozen=True)
class ShadowStudy:
    environment: str
    altitudes: np.ndarray
    sigmas: np.ndarray
    fit: stats.ShadowModelParams


def shadow_study(scenario, altitudes=SHADOW_ALTITUDES_M, source='ptr',
                 form='exp_decay'):
    sig = shadowing_vs_altitude(scenario, altitudes, source)
    h = np.asarray(altitudes, dtype=float)
    return ShadowStudy(scenario.env.name, h, sig,
                       stats.fit_shadow_model(h, sig, form=form))
