"""Statistical built-up scenes and geometric occlusion queries.

Cities follow the ITU-R P.1410 parameterisation: a built-area ratio
``alpha``, a building density ``beta`` (buildings per km^2) and a Rayleigh
scale ``gamma`` (m) for building heights.  They are realised as a Manhattan
grid of square plots of width ``W`` separated by streets of width ``S``.
"""

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    'GRLogistic', 'EnvironmentParams', 'PRESETS', 'get_preset',
    'Building', 'CityMap',
    'sample_building_height', 'rayleigh_heights', 'rayleigh_cdf',
    'rayleigh_mean', 'rayleigh_quantile', 'truncated_rayleigh_mean',
    'truncated_rayleigh_sample',
    'grid_dimensions', 'grid_count', 'generate_city',
    'segment_occluded', 'segments_occluded', 'footprint_index',
    ]


class GRLogistic(NamedTuple):
    """Constants of the ground-reflection logistic.

    ``a`` and ``b`` are in percent, ``c`` and ``d`` in degrees, ``e`` is
    dimensionless.
    """
    a: float
    b: float
    c: float
    d: float
    e: float


@dataclass(frozen=True)
class EnvironmentParams:
    name: str
    alpha: float
    beta: float
    gamma: float
    gr_logistic: GRLogistic

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f'alpha must lie in [0, 1], got {self.alpha}')
        if not self.beta > 0:
            raise DomainError(f'beta must be positive, got {self.beta}')
        if not self.gamma > 0:
            raise DomainError(f'gamma must be positive, got {self.gamma}')
        gl = GRLogistic(*self.gr_logistic)
        if not (gl.d > 0 and gl.e > 0):
            raise DomainError('logistic constants d and e must be positive')
        object.__setattr__(self, 'gr_logistic', gl)

    def replace(self, **changes):
        fields = dict(
            name=self.name, alpha=self.alpha, beta=self.beta,
            gamma=self.gamma, gr_logistic=self.gr_logistic,
            )
        fields.update(changes)
        return EnvironmentParams(**fields)

    def to_dict(self):
        return {
            'name': self.name,
            'alpha': self.alpha,
            'beta': self.beta,
            'gamma': self.gamma,
            'gr_logistic': dict(self.gr_logistic._asdict()),
            }


PRESETS = {
    'suburban': EnvironmentParams(
        'suburban', 0.1, 750.0, 8.0,
        GRLogistic(101.6, 0.0, 0.0, 3.25, 1.241)),
    'urban': EnvironmentParams(
        'urban', 0.3, 500.0, 15.0,
        GRLogistic(120.0, 0.0, 0.0, 24.30, 1.229)),
    'dense-urban': EnvironmentParams(
        'dense-urban', 0.5, 300.0, 20.0,
        GRLogistic(187.3, 0.0, 0.0, 82.10, 1.478)),
    'high-rise': EnvironmentParams(
        'high-rise', 0.5, 300.0, 50.0,
        GRLogistic(352.0, -1.37, -53.0, 173.80, 4.670)),
    }


def get_preset(name):
    key = name.strip().lower().replace('_', '-').replace(' ', '-')
    aliases = {'dense': 'dense-urban', 'highrise': 'high-rise',
               'high-rise-urban': 'high-rise'}
    key = aliases.get(key, key)
    try:
        return PRESETS[key]
    except KeyError:
        raise ConfigError(
            f'unknown environment {name!r}; choose from {sorted(PRESETS)}',
            field='environment') from None


# --------------------------------------------------------------------------
# Rayleigh building heights

def sample_building_height(gamma, u):
    """Rayleigh inverse CDF, ``gamma * sqrt(-2 ln(1 - u))``."""
    if not gamma > 0:
        raise DomainError(f'gamma must be positive, got {gamma}')
    if not 0.0 < u < 1.0:
        raise DomainError(f'u must lie in (0, 1), got {u}')
    return gamma * math.sqrt(-2.0 * math.log1p(-u))


def rayleigh_heights(gamma, u):
    u = np.asarray(u, dtype=float)
    return gamma * np.sqrt(-2.0 * np.log1p(-u))


def rayleigh_cdf(h, gamma):
    h = np.maximum(np.asarray(h, dtype=float), 0.0)
    return -np.expm1(-h * h / (2.0 * gamma * gamma))


def rayleigh_mean(gamma):
    return gamma * math.sqrt(math.pi / 2.0)


def rayleigh_quantile(p, gamma):
    return gamma * math.sqrt(-2.0 * math.log1p(-p))


def truncated_rayleigh_mean(gamma, upper):
    """Mean of a Rayleigh(gamma) height conditioned on ``h < upper``.

    Equals the unconditional mean to machine precision once ``upper``
    exceeds about 8 gamma.
    """
    if not upper > 0:
        raise DomainError(f'upper bound must be positive, got {upper}')
    z = upper / gamma
    tail = math.exp(-0.5 * z * z)
    mass = -math.expm1(-0.5 * z * z)
    partial = (gamma * math.sqrt(math.pi / 2.0) * math.erf(z / math.sqrt(2.0))
               - upper * tail)
    return partial / mass


def truncated_rayleigh_sample(gamma, upper, u):
    """Inverse-CDF draw from Rayleigh(gamma) restricted to ``[0, upper)``."""
    u = np.asarray(u, dtype=float)
    mass = -math.expm1(-0.5 * (upper / gamma) ** 2)
    return gamma * np.sqrt(-2.0 * np.log1p(-u * mass))


# --------------------------------------------------------------------------
# Scene construction

@dataclass(frozen=True)
class Building:
    x0: float
    y0: float
    x1: float
    y1: float
    height: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise DomainError('building footprint must have positive width '
                              'and depth')
        if not self.height >= 0:
            raise DomainError('building height must be non-negative')


@dataclass(frozen=True)
class CityMap:
    """A generated scene. Immutable; safe to share between readers."""
    side_d: float          # km
    plot_width: float      # m
    spacing: float         # m
    buildings: tuple
    seed: Optional[int] = None

    @property
    def side_m(self):
        return 1000.0 * self.side_d

    @cached_property
    def boxes(self):
        """``(N, 5)`` array of ``x0, y0, x1, y1, height`` rows."""
        if not self.buildings:
            return np.zeros((0, 5))
        return np.array([[b.x0, b.y0, b.x1, b.y1, b.height]
                         for b in self.buildings], dtype=float)

    @property
    def max_height(self):
        return float(self.boxes[:, 4].max()) if self.buildings else 0.0

    def built_area_ratio(self):
        b = self.boxes
        area = np.sum((b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1]))
        return float(area / self.side_m ** 2)

    def building_density(self):
        return len(self.buildings) / self.side_d ** 2

    def to_dict(self):
        return {
            'seed': self.seed,
            'side_d_km': self.side_d,
            'w_m': self.plot_width,
            's_m': self.spacing,
            'buildings': [
                {'x0': b.x0, 'y0': b.y0, 'x1': b.x1, 'y1': b.y1,
                 'h': b.height}
                for b in self.buildings],
            }

    def to_json(self, **extra):
        doc = dict(extra)
        doc.update(self.to_dict())
        return json.dumps(doc, indent=1)

    @classmethod
    def from_dict(cls, doc):
        known = {'seed', 'side_d_km', 'w_m', 's_m', 'buildings',
                 'config_sha256'}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f'unknown city fields: {sorted(unknown)}')
        try:
            buildings = tuple(
                Building(float(b['x0']), float(b['y0']), float(b['x1']),
                         float(b['y1']), float(b['h']))
                for b in doc['buildings'])
            return cls(float(doc['side_d_km']), float(doc['w_m']),
                       float(doc['s_m']), buildings, doc.get('seed'))
        except KeyError as exc:
            raise ConfigError(f'missing city field {exc}') from None

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def grid_dimensions(env):
    """Plot width ``W`` and street spacing ``S`` in metres."""
    w = 1000.0 * math.sqrt(env.alpha / env.beta)
    s = 1000.0 / math.sqrt(env.beta) - w
    return w, s


def grid_count(side_m, w, s):
    """Plots per side: every plot whose start lies strictly inside the map.

    Plots start at ``S/2 + i (W + S)``; the last one is clipped to the map
    edge.
    """
    free = side_m - 0.5 * s
    if free <= 0:
        return 0
    return int(math.ceil(free / (w + s)))


def generate_city(env, side_d, seed=0):
    """Manhattan grid of Rayleigh-height buildings, deterministic in ``seed``.

    Building ``k`` (row-major over plot indices) draws its height from
    child ``k`` of ``numpy.random.SeedSequence(seed)``, so heights do not
    depend on generation order.  ``alpha == 0`` yields an empty city.
    """
    if not side_d > 0:
        raise ConfigError(f'map side must be positive, got {side_d}',
                          field='side_d')
    seed = int(seed)
    w, s = grid_dimensions(env)
    if env.alpha == 0:
        # nothing is built: open ground only
        return CityMap(side_d, w, s, (), seed)
    side_m = 1000.0 * side_d
    n = grid_count(side_m, w, s)
    if n == 0 or w <= 0:
        raise ConfigError('map is too small to hold a single building',
                          field='side_d')
    starts = 0.5 * s + np.arange(n) * (w + s)
    ends = np.minimum(starts + w, side_m)

    children = np.random.SeedSequence(seed).spawn(n * n)
    u = np.array([np.random.Generator(np.random.PCG64(c)).random()
                  for c in children])
    heights = rayleigh_heights(env.gamma, u)

    buildings = []
    for i in range(n):
        for j in range(n):
            buildings.append(Building(
                float(starts[i]), float(starts[j]), float(ends[i]),
                float(ends[j]), float(heights[i * n + j])))
    return CityMap(side_d, w, s, tuple(buildings), seed)


# --------------------------------------------------------------------------
# Occlusion

# Segments touching a face within this parametric slack count as clear.
GRAZING_EPS = 1e-9


def _slab_intervals(boxes, p, v):
    """Parametric entry/exit of each segment through each box (open slabs)."""
    lo = np.zeros((p.shape[0], boxes.shape[0]))
    hi = np.ones((p.shape[0], boxes.shape[0]))
    bounds = ((boxes[:, 0], boxes[:, 2]),
              (boxes[:, 1], boxes[:, 3]),
              (np.zeros(boxes.shape[0]), boxes[:, 4]))
    for axis, (b0, b1) in enumerate(bounds):
        pa = p[:, axis, None]
        va = v[:, axis, None]
        parallel = va == 0.0
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            t0 = (b0[None, :] - pa) / va
            t1 = (b1[None, :] - pa) / va
        tmin = np.minimum(t0, t1)
        tmax = np.maximum(t0, t1)
        inside = (pa > b0[None, :]) & (pa < b1[None, :])
        tmin = np.where(parallel, np.where(inside, -np.inf, np.inf), tmin)
        tmax = np.where(parallel, np.where(inside, np.inf, -np.inf), tmax)
        np.maximum(lo, tmin, out=lo)
        np.minimum(hi, tmax, out=hi)
    return lo, hi


def segments_occluded(boxes, p1, p2, chunk=2_000_000):
    """Vectorised slab test of segments against extruded footprints.

    Returns ``(blocked, first)`` where ``first`` is the index of the first
    box hit along each segment, or -1.
    """
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 5)
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    p2 = np.atleast_2d(np.asarray(p2, dtype=float))
    m = p1.shape[0]
    blocked = np.zeros(m, dtype=bool)
    first = np.full(m, -1, dtype=np.int64)
    if boxes.shape[0] == 0 or m == 0:
        return blocked, first
    v = p2 - p1
    for idx in _tiles(p1, p2):
        # only boxes overlapping the tile's extent and rising above its
        # lowest point can be hit
        lo_xy = np.minimum(p1[idx, :2], p2[idx, :2]).min(axis=0)
        hi_xy = np.maximum(p1[idx, :2], p2[idx, :2]).max(axis=0)
        z_min = np.minimum(p1[idx, 2], p2[idx, 2]).min()
        cand = np.flatnonzero(
            (boxes[:, 2] >= lo_xy[0]) & (boxes[:, 0] <= hi_xy[0])
            & (boxes[:, 3] >= lo_xy[1]) & (boxes[:, 1] <= hi_xy[1])
            & (boxes[:, 4] > z_min))
        if cand.size == 0:
            continue
        step = max(1, chunk // cand.size)
        for start in range(0, idx.size, step):
            sub = idx[start:start + step]
            lo, hi = _slab_intervals(boxes[cand], p1[sub], v[sub])
            hit = lo < hi - GRAZING_EPS
            any_hit = hit.any(axis=1)
            blocked[sub] = any_hit
            entry = np.where(hit, lo, np.inf)
            first[sub] = np.where(any_hit, cand[entry.argmin(axis=1)], -1)
    return blocked, first


def _tiles(p1, p2, per_side=8, size=256):
    """Index groups of segments with nearby midpoints."""
    mid = 0.5 * (p1[:, :2] + p2[:, :2])
    span = np.ptp(mid, axis=0)
    cell = np.maximum(span / per_side, 1e-9)
    key = np.floor((mid - mid.min(axis=0)) / cell).astype(np.int64)
    key = np.minimum(key, per_side - 1)
    tile = key[:, 0] * per_side + key[:, 1]
    order = np.argsort(tile, kind='stable')
    bounds = np.flatnonzero(np.diff(tile[order])) + 1
    for group in np.split(order, bounds):
        for start in range(0, group.size, size):
            yield group[start:start + size]


def segment_occluded(city, p1, p2):
    """Whether the open segment ``p1 -> p2`` passes through a building.

    Returns ``(blocked, building)``; ``building`` is the first one hit or
    None.  Grazing contact with a face is not an occlusion.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if np.array_equal(p1, p2):
        raise DomainError('segment endpoints coincide')
    blocked, first = segments_occluded(city.boxes, p1, p2)
    if blocked[0]:
        return True, city.buildings[int(first[0])]
    return False, None


def footprint_index(boxes, xy, chunk=2_000_000):
    """Index of the footprint strictly containing each ``(x, y)``, else -1."""
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 5)
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    out = np.full(xy.shape[0], -1, dtype=np.int64)
    if boxes.shape[0] == 0:
        return out
    step = max(1, chunk // boxes.shape[0])
    for start in range(0, xy.shape[0], step):
        x = xy[start:start + step, 0, None]
        y = xy[start:start + step, 1, None]
        inside = ((x > boxes[None, :, 0]) & (x < boxes[None, :, 2])
                  & (y > boxes[None, :, 1]) & (y < boxes[None, :, 3]))
        found = inside.any(axis=1)
        out[start:start + step] = np.where(found, inside.argmax(axis=1), -1)
    return out
