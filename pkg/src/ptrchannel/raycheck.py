"""Deterministic geometric two-ray evaluation over generated cities.

Each link has one specular point, at the horizontal midpoint of two
equal-altitude platforms.  If that point lies on a footprint the roof of
that building is the reflector, otherwise the ground is.  The reflected ray
survives only when both legs to the specular point are unobstructed.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import city as _city
from ._parallel import ordered_map
from .errors import ConfigError, DomainError
from .propagation import (
    SPEED_OF_LIGHT, Link, ModelOptions, Polarization, TwoRayBreakdown,
    _fresnel,
    )

__all__ = [
    'Condition', 'LinkSample', 'SweepResult', 'GRProbabilityEstimate',
    'classify_link', 'classify_links', 'deterministic_path_loss',
    'deterministic_path_loss_batch', 'estimate_gr_probability',
    'estimate_gr_curve', 'distance_sweep', 'realization_seeds',
    'SWEEP_COLUMNS', 'GR_COLUMNS',
    ]

SWEEP_COLUMNS = ('distance_m', 'pl_db', 'n_cond1', 'n_cond2', 'n_cond3',
                 'n_blocked')
GR_COLUMNS = ('theta_deg', 'p_gr', 'stderr', 'n')


class Condition(enum.IntEnum):
    LOS_AND_BUILDING_REFLECTION = 1
    LOS_AND_GROUND_REFLECTION = 2
    LOS_ONLY = 3
    LOS_BLOCKED = 4

    @property
    def label(self):
        return self.name.lower()


@dataclass(frozen=True)
class LinkSample:
    link: Link
    condition: Condition
    breakdown: Optional[TwoRayBreakdown]
    city_seed: Optional[int] = None


@dataclass(frozen=True)
class SweepResult:
    distances: np.ndarray        # m, strictly increasing
    path_loss_db: np.ndarray     # NaN where every realization was blocked
    tallies: np.ndarray          # (n, 4) counts of conditions 1..4
    altitude: float
    frequency: float
    environment: str
    realizations: int
    seed: int
    per_realization: Optional[np.ndarray] = field(default=None, repr=False,
                                                  compare=False)

    @property
    def n_blocked(self):
        return int(self.tallies[:, 3].sum())

    @property
    def valid(self):
        return np.isfinite(self.path_loss_db)

    def rows(self):
        for d, pl, t in zip(self.distances, self.path_loss_db, self.tallies):
            yield (float(d), float(pl), *(int(v) for v in t))


@dataclass(frozen=True)
class GRProbabilityEstimate:
    theta_deg: float
    p_gr: float
    stderr: float
    n: int                # links whose specular point is on open ground
    n_links: int          # all links placed
    altitude: float
    distance: float

    def row(self):
        return (self.theta_deg, self.p_gr, self.stderr, self.n)


# --------------------------------------------------------------------------
# Classification

def _endpoints(tx, rx):
    tx = np.atleast_2d(np.asarray(tx, dtype=float))
    rx = np.atleast_2d(np.asarray(rx, dtype=float))
    if tx.shape != rx.shape or tx.shape[1] != 3:
        raise DomainError('tx and rx must be matching (n, 3) arrays')
    h = tx[:, 2]
    if np.any(np.abs(h - rx[:, 2]) > 1e-9 * np.maximum(1.0, np.abs(h))):
        raise DomainError('links must have equal-altitude endpoints')
    return tx, rx


def classify_links(city, tx, rx):
    """Vectorised condition codes for links between ``tx[i]`` and ``rx[i]``.

    Returns ``(conditions, roof_heights)``; roof height is NaN unless the
    specular point is on a footprint.
    """
    tx, rx = _endpoints(tx, rx)
    boxes = city.boxes
    n = tx.shape[0]
    h = tx[:, 2]
    mid = 0.5 * (tx + rx)
    cond = np.full(n, Condition.LOS_ONLY, dtype=np.int64)

    direct, _ = _city.segments_occluded(boxes, tx, rx)
    owner = _city.footprint_index(boxes, mid[:, :2])
    on_roof = owner >= 0
    roof_h = np.full(n, np.nan)
    roof_h[on_roof] = boxes[owner[on_roof], 4]

    sp = mid.copy()
    sp[:, 2] = np.where(on_roof, roof_h, 0.0)
    # a roof at or above the platforms also cuts the direct path
    candidate = ~direct & ~(on_roof & (roof_h >= h))
    idx = np.flatnonzero(candidate)
    if idx.size:
        leg1, _ = _city.segments_occluded(boxes, tx[idx], sp[idx])
        leg2, _ = _city.segments_occluded(boxes, sp[idx], rx[idx])
        clear = idx[~leg1 & ~leg2]
        cond[clear] = np.where(on_roof[clear],
                               Condition.LOS_AND_BUILDING_REFLECTION,
                               Condition.LOS_AND_GROUND_REFLECTION)
    cond[direct] = Condition.LOS_BLOCKED
    return cond, roof_h


def _reflection_terms(cond, roof_h, h, d, frequency, polarization, eps_b,
                      eps_g, options):
    """Per-link reflected-ray geometry; NaN where no reflection exists."""
    k = 2.0 * np.pi * frequency / SPEED_OF_LIGHT
    refl_h = np.where(cond == Condition.LOS_AND_BUILDING_REFLECTION,
                      roof_h, 0.0)
    rise = 2.0 * (h - refl_h)
    d_ref = np.hypot(d, rise)
    theta = np.arctan2(rise, d)
    eps = np.where(cond == Condition.LOS_AND_BUILDING_REFLECTION, eps_b,
                   eps_g)
    gamma = _fresnel(theta, eps, polarization, options.paper_literal_fresnel)
    dphi = -k * rise ** 2 / (d + d_ref)
    has = ((cond == Condition.LOS_AND_BUILDING_REFLECTION)
           | (cond == Condition.LOS_AND_GROUND_REFLECTION))
    nan = np.nan
    return (np.where(has, d_ref, nan), np.where(has, np.degrees(theta), nan),
            np.where(has, gamma, nan), np.where(has, dphi, nan))


def _phasor_loss(d_los, d_ref, gamma, dphi, frequency):
    lam = SPEED_OF_LIGHT / frequency
    has = np.isfinite(gamma)
    refl = np.where(has, np.nan_to_num(gamma) * np.nan_to_num(d_los / d_ref)
                    * np.exp(1j * np.nan_to_num(dphi)), 0.0)
    mag = np.abs(1.0 + refl)
    with np.errstate(divide='ignore'):
        return (20.0 * np.log10(4.0 * np.pi * d_los / lam)
                - 20.0 * np.log10(mag))


def deterministic_path_loss_batch(city, tx, rx, frequency,
                                  polarization=Polarization.HORIZONTAL,
                                  eps_building=4.44, eps_ground=3.0,
                                  options=None):
    """Conditions and exact two-ray path loss (dB, NaN when blocked)."""
    options = options or ModelOptions()
    tx, rx = _endpoints(tx, rx)
    cond, roof_h = classify_links(city, tx, rx)
    d = np.hypot(rx[:, 0] - tx[:, 0], rx[:, 1] - tx[:, 1])
    if np.any(d <= 0):
        raise DomainError('horizontal separation must be positive')
    d_ref, _, gamma, dphi = _reflection_terms(
        cond, roof_h, tx[:, 2], d, frequency,
        Polarization.parse(polarization), eps_building, eps_ground, options)
    pl = _phasor_loss(d, d_ref, gamma, dphi, frequency)
    pl = np.where(cond == Condition.LOS_BLOCKED, np.nan, pl)
    return cond, pl


def classify_link(city, link, options=None):
    """Classify one equal-altitude link and attach its two-ray breakdown."""
    options = options or ModelOptions()
    h = link.altitude
    d = link.horizontal_distance
    if not d > 0:
        raise DomainError('horizontal separation must be positive')
    cond, roof_h = classify_links(city, link.tx, link.rx)
    c = Condition(int(cond[0]))
    if c is Condition.LOS_BLOCKED:
        return LinkSample(link, c, None, city.seed)
    d_ref, theta, gamma, dphi = _reflection_terms(
        cond, roof_h, np.array([h]), np.array([d]), link.frequency,
        link.polarization, link.eps_building, link.eps_ground, options)
    pl = float(_phasor_loss(np.array([d]), d_ref, gamma, dphi,
                            link.frequency)[0])
    roof = c is Condition.LOS_AND_BUILDING_REFLECTION
    ground = c is Condition.LOS_AND_GROUND_REFLECTION

    def pick(flag, arr):
        return float(arr[0]) if flag else None

    breakdown = TwoRayBreakdown(
        d_los=d,
        d_ref_building=pick(roof, d_ref), d_ref_ground=pick(ground, d_ref),
        theta_b=pick(roof, theta), theta_g=pick(ground, theta),
        gamma_b=pick(roof, gamma), gamma_g=pick(ground, gamma),
        dphi_b=pick(roof, dphi), dphi_g=pick(ground, dphi),
        path_loss_db=pl,
        h_b=float(roof_h[0]) if roof else None,
        deep_fade=math.isinf(pl),
        )
    return LinkSample(link, c, breakdown, city.seed)


def deterministic_path_loss(sample):
    """Coherent sum of the direct ray and the surviving reflection (dB).

    The reflected amplitude carries the exact ``d_los / d_ref`` spreading
    factor.  A link with no reflection returns its free-space loss.
    """
    if sample.condition is Condition.LOS_BLOCKED or sample.breakdown is None:
        raise DomainError('direct path is blocked')
    b = sample.breakdown
    if sample.condition is Condition.LOS_AND_BUILDING_REFLECTION:
        terms = (b.d_ref_building, b.gamma_b, b.dphi_b)
    elif sample.condition is Condition.LOS_AND_GROUND_REFLECTION:
        terms = (b.d_ref_ground, b.gamma_g, b.dphi_g)
    else:
        terms = (np.nan, np.nan, np.nan)
    d_ref, gamma, dphi = (np.array([t], dtype=float) for t in terms)
    return float(_phasor_loss(np.array([b.d_los]), d_ref, gamma, dphi,
                              sample.link.frequency)[0])


# --------------------------------------------------------------------------
# Monte Carlo drivers

def realization_seeds(seed, index):
    """City seed and link-placement generator for realization ``index``.

    Realization ``r`` owns ``SeedSequence(seed, spawn_key=(r,))``; the city
    is seeded from its child 0 and link placement draws from child 1.
    """
    base = np.random.SeedSequence(seed, spawn_key=(index,))
    city_seq, link_seq = base.spawn(2)
    city_seed = int(city_seq.generate_state(1, np.uint64)[0])
    return city_seed, np.random.Generator(np.random.PCG64(link_seq))


def _place_links(rng, n, length, side_m, altitude):
    """Random midpoints and azimuths with both endpoints inside the map."""
    half = 0.5 * np.asarray(length, dtype=float)
    half = np.broadcast_to(half, (n,))
    u = rng.random((n, 2))
    az = rng.random(n) * 2.0 * np.pi
    span = side_m - 2.0 * half
    mid = half[:, None] + u * span[:, None]
    step = half[:, None] * np.column_stack([np.cos(az), np.sin(az)])
    z = np.full((n, 1), float(altitude))
    tx = np.hstack([mid - step, z])
    rx = np.hstack([mid + step, z])
    return mid, tx, rx


@dataclass(frozen=True)
class _SweepTask:
    env: object
    altitude: float
    frequency: float
    distances: np.ndarray
    seed: int
    index: int
    side_d: float
    polarization: Polarization
    eps_building: float
    eps_ground: float
    options: ModelOptions
    placement: str


def _place_trajectory(rng, distances, side_m, altitude):
    """Fixed transmitter, receiver receding along one random azimuth."""
    reach = float(np.max(distances))
    az = rng.random() * 2.0 * np.pi
    u = np.array([math.cos(az), math.sin(az)])
    lo = np.maximum(0.0, -reach * u)
    hi = np.minimum(side_m, side_m - reach * u)
    start = lo + rng.random(2) * (hi - lo)
    n = np.size(distances)
    tx = np.tile(np.append(start, altitude), (n, 1))
    rx = np.column_stack([start + np.outer(distances, u),
                          np.full(n, float(altitude))])
    return tx, rx


def _sweep_one(task):
    city_seed, rng = realization_seeds(task.seed, task.index)
    scene = _city.generate_city(task.env, task.side_d, city_seed)
    if task.placement == 'trajectory':
        tx, rx = _place_trajectory(rng, task.distances, scene.side_m,
                                   task.altitude)
    else:
        _, tx, rx = _place_links(rng, task.distances.size, task.distances,
                                 scene.side_m, task.altitude)
    return deterministic_path_loss_batch(
        scene, tx, rx, task.frequency, task.polarization, task.eps_building,
        task.eps_ground, task.options)


def distance_grid(d_min, d_max, step):
    if not d_min > 0:
        raise ConfigError('minimum distance must be positive', field='dist_m')
    if not (d_max >= d_min and step > 0):
        raise ConfigError('distance range must satisfy min <= max with a '
                          'positive step', field='dist_m')
    n = int(math.floor((d_max - d_min) / step + 1e-9)) + 1
    return d_min + step * np.arange(n)


def distance_sweep(env, altitude, frequency, d_range=(5.0, 300.0), step=5.0,
                   realizations=10, seed=0, polarization='horizontal',
                   eps_building=4.44, eps_ground=3.0, options=None,
                   side_d=0.472, linear_power=False, placement='trajectory',
                   workers=1):
    """Mean exact two-ray path loss versus distance over random cities.

    Every realization draws a fresh city.  With ``placement='trajectory'``
    one transmitter is fixed and the receiver recedes along a random
    azimuth; with ``'random'`` each distance gets an independent midpoint
    and azimuth.  Blocked links are dropped from the mean and tallied.
    Averaging is over dB values unless ``linear_power``.
    """
    if placement not in ('trajectory', 'random'):
        raise ConfigError(f'unknown placement {placement!r}',
                          field='placement')
    if realizations < 1:
        raise ConfigError('realizations must be at least 1',
                          field='realizations')
    distances = distance_grid(d_range[0], d_range[1], step)
    limit = 1000.0 * side_d / (math.sqrt(2.0) if placement == 'trajectory'
                               else 1.0)
    if distances[-1] >= limit:
        raise ConfigError(f'links of {distances[-1]} m do not fit a '
                          f'{side_d} km map', field='side_d')
    tasks = [
        _SweepTask(env, float(altitude), float(frequency), distances,
                   int(seed), r, side_d, Polarization.parse(polarization),
                   eps_building, eps_ground, options or ModelOptions(),
                   placement)
        for r in range(realizations)]
    results = ordered_map(_sweep_one, tasks, workers)
    conds = np.stack([c for c, _ in results])
    pls = np.stack([p for _, p in results])

    tallies = np.stack([(conds == c).sum(axis=0) for c in Condition], axis=1)
    valid = np.isfinite(pls)
    with np.errstate(invalid='ignore', divide='ignore'):
        if linear_power:
            lin = np.where(valid, 10.0 ** (np.nan_to_num(pls) / 10.0), 0.0)
            mean = 10.0 * np.log10(lin.sum(axis=0) / valid.sum(axis=0))
        else:
            mean = (np.where(valid, pls, 0.0).sum(axis=0)
                    / valid.sum(axis=0))
    mean = np.where(valid.any(axis=0), mean, np.nan)
    return SweepResult(distances, mean, tallies, float(altitude),
                       float(frequency), env.name, realizations, int(seed),
                       per_realization=pls)


@dataclass(frozen=True)
class _GRTask:
    env: object
    theta: float
    altitude: float
    distance: float
    side_d: float
    links: int
    seed: int
    index: int
    city_factory: object


def _gr_one(task):
    city_seed, rng = realization_seeds(task.seed, task.index)
    if task.city_factory is not None:
        scene = task.city_factory(city_seed)
    else:
        scene = _city.generate_city(task.env, task.side_d, city_seed)
    mid, tx, rx = _place_links(rng, task.links, task.distance, scene.side_m,
                               task.altitude)
    open_ground = _city.footprint_index(scene.boxes, mid) < 0
    g = np.column_stack([mid[open_ground], np.zeros(open_ground.sum())])
    leg1, _ = _city.segments_occluded(scene.boxes, tx[open_ground], g)
    leg2, _ = _city.segments_occluded(scene.boxes, g, rx[open_ground])
    return int(open_ground.sum()), int((~leg1 & ~leg2).sum())


def estimate_gr_probability(env, theta, realizations=10, links_per_city=1000,
                            seed=0, altitude=None, side_d=None,
                            city_factory=None, workers=1):
    """Monte Carlo probability that the ground specular path is clear.

    Links are placed at random positions and azimuths with separation
    ``2 h / tan(theta)`` so the ground grazing angle is ``theta``.  Among
    links whose specular point lies on open ground, the estimate is the
    fraction with both legs to that point unobstructed.  ``altitude``
    defaults to the 99th percentile of building heights; ``side_d``
    defaults to a map comfortably larger than the link.
    ``city_factory(seed) -> CityMap`` replaces the generated cities.
    """
    if realizations < 1 or links_per_city < 1:
        raise ConfigError('need at least one realization and one link',
                          field='realizations')
    if not 0.0 < theta < 90.0:
        raise ConfigError('elevation must lie in (0, 90) degrees; use 89 '
                          'for near-vertical geometry', field='theta_deg')
    if altitude is None:
        altitude = _city.rayleigh_quantile(0.99, env.gamma)
    distance = 2.0 * altitude / math.tan(math.radians(theta))
    if side_d is None:
        side_d = max(1.0, math.ceil(2.0 * distance + 200.0) / 1000.0)
    if distance >= 1000.0 * side_d:
        raise ConfigError(f'elevation {theta} deg needs {distance:.1f} m '
                          f'links, larger than the {side_d} km map',
                          field='theta_deg')
    tasks = [_GRTask(env, float(theta), float(altitude), distance, side_d,
                     int(links_per_city), int(seed), r, city_factory)
             for r in range(realizations)]
    counts = ordered_map(_gr_one, tasks, workers)
    n = sum(c[0] for c in counts)
    clear = sum(c[1] for c in counts)
    if n == 0:
        raise ConfigError('no link landed on open ground; raise '
                          'links_per_city', field='links_per_city')
    p = clear / n
    return GRProbabilityEstimate(float(theta), p, math.sqrt(p * (1 - p) / n),
                                 n, realizations * links_per_city,
                                 float(altitude), distance)


def estimate_gr_curve(env, thetas, **kwargs):
    """:func:`estimate_gr_probability` at each angle with a shared seed.

    Sharing the seed and the map size reuses the same cities and link
    placements across angles, which keeps the curve smooth.
    """
    thetas = list(thetas)
    if kwargs.get('side_d') is None and thetas:
        altitude = kwargs.get('altitude')
        if altitude is None:
            altitude = _city.rayleigh_quantile(0.99, env.gamma)
        longest = 2.0 * altitude / math.tan(math.radians(min(thetas)))
        kwargs['side_d'] = max(1.0, math.ceil(2.0 * longest + 200.0) / 1000.0)
    return [estimate_gr_probability(env, t, **kwargs) for t in thetas]
