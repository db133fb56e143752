"""Closed-form air-to-air propagation models.

Internal quantities are SI (metres, hertz, radians) except where a function
name or argument says otherwise.  The probabilistic two-ray (PTR) model adds
a roof-reflected and a ground-reflected ray to the direct ray, weighting the
roof term by the built-area ratio and the ground term by the open-ground
fraction times the probability that the ground specular path is clear.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .city import truncated_rayleigh_mean, truncated_rayleigh_sample
from .errors import DomainError

__all__ = [
    'SPEED_OF_LIGHT', 'Polarization', 'Link', 'ModelOptions',
    'TwoRayBreakdown', 'wavelength', 'fspl_db', 'free_space_loss_db',
    'reflection_coefficient', 'two_ray_geometry',
    'ground_reflection_probability', 'effective_building_height',
    'ptr_path_loss', 'ptr_path_loss_curve',
    ]

SPEED_OF_LIGHT = 299_792_458.0


class Polarization(str, enum.Enum):
    HORIZONTAL = 'horizontal'
    VERTICAL = 'vertical'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        key = {'h': 'horizontal', 'hp': 'horizontal', 'v': 'vertical',
               'vp': 'vertical'}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f'unknown polarization {value!r}') from None


@dataclass(frozen=True)
class Link:
    tx: tuple
    rx: tuple
    frequency: float
    polarization: Polarization = Polarization.HORIZONTAL
    eps_building: float = 4.44
    eps_ground: float = 3.0

    def __post_init__(self):
        tx = tuple(float(v) for v in self.tx)
        rx = tuple(float(v) for v in self.rx)
        if len(tx) != 3 or len(rx) != 3:
            raise DomainError('tx and rx must be 3D points')
        if tx == rx:
            raise DomainError('tx and rx coincide')
        if not self.frequency > 0:
            raise DomainError('frequency must be positive')
        if not (self.eps_building > 1 and self.eps_ground > 1):
            raise DomainError('relative permittivities must exceed 1')
        object.__setattr__(self, 'tx', tx)
        object.__setattr__(self, 'rx', rx)
        object.__setattr__(self, 'polarization',
                           Polarization.parse(self.polarization))

    @property
    def horizontal_distance(self):
        return math.hypot(self.rx[0] - self.tx[0], self.rx[1] - self.tx[1])

    @property
    def los_distance(self):
        return math.dist(self.tx, self.rx)

    @property
    def altitude(self):
        """Common platform altitude; raises if the endpoints differ."""
        h1, h2 = self.tx[2], self.rx[2]
        if abs(h1 - h2) > 1e-9 * max(1.0, abs(h1), abs(h2)):
            raise DomainError('two-ray geometry needs equal-altitude '
                              f'endpoints, got {h1} and {h2}')
        return 0.5 * (h1 + h2)

    @property
    def wavelength(self):
        return wavelength(self.frequency)

    @classmethod
    def at_altitude(cls, altitude, distance, frequency, **kwargs):
        """Link along the x axis between two platforms at ``altitude``."""
        return cls((0.0, 0.0, altitude), (distance, 0.0, altitude),
                   frequency, **kwargs)


@dataclass(frozen=True)
class ModelOptions:
    # take the permittivity term as printed, sqrt(eps + cos^2) etc.
    paper_literal_fresnel: bool = False
    # scale each reflected ray by d_los / d_ref
    exact_amplitude: bool = False
    # draw the roof height per evaluation instead of using its mean
    stochastic_hb: bool = False


@dataclass(frozen=True)
class TwoRayBreakdown:
    d_los: float
    d_ref_building: Optional[float]
    d_ref_ground: Optional[float]
    theta_b: Optional[float]          # degrees
    theta_g: Optional[float]          # degrees
    gamma_b: Optional[float]
    gamma_g: Optional[float]
    dphi_b: Optional[float]           # radians
    dphi_g: Optional[float]           # radians
    path_loss_db: float
    h_b: Optional[float] = None
    p_g: Optional[float] = None
    p_g_source: Optional[str] = None  # 'explicit' or 'logistic'
    deep_fade: bool = False
    extra: dict = field(default_factory=dict, compare=False)


def wavelength(frequency):
    if not np.all(np.asarray(frequency) > 0):
        raise DomainError('frequency must be positive')
    return SPEED_OF_LIGHT / frequency


def fspl_db(distance, frequency):
    """Free-space path loss with distance in km and frequency in MHz."""
    distance = np.asarray(distance, dtype=float)
    frequency = np.asarray(frequency, dtype=float)
    if np.any(distance <= 0) or np.any(frequency <= 0):
        raise DomainError('distance and frequency must be positive')
    out = 32.45 + 20.0 * np.log10(distance) + 20.0 * np.log10(frequency)
    return float(out) if out.ndim == 0 else out


def free_space_loss_db(distance_m, frequency_hz):
    """``20 log10(4 pi d / lambda)`` with SI inputs."""
    distance_m = np.asarray(distance_m, dtype=float)
    if np.any(distance_m <= 0):
        raise DomainError('distance must be positive')
    out = 20.0 * np.log10(4.0 * np.pi * distance_m / wavelength(frequency_hz))
    return float(out) if out.ndim == 0 else out


def _fresnel(theta_rad, eps_r, polarization, paper_literal=False):
    s = np.sin(theta_rad)
    c2 = np.cos(theta_rad) ** 2
    if polarization is Polarization.HORIZONTAL:
        root = np.sqrt(eps_r + c2) if paper_literal else np.sqrt(eps_r - c2)
        return (s - root) / (s + root)
    if paper_literal:
        root = np.sqrt(eps_r + c2 / eps_r)
        return (s - root) / (s + root)
    root = np.sqrt(eps_r - c2)
    return (eps_r * s - root) / (eps_r * s + root)


def reflection_coefficient(theta, eps_r, polarization, paper_literal=False):
    """Fresnel reflection coefficient at elevation ``theta`` (degrees).

    With ``paper_literal`` the root uses ``sqrt(eps + cos^2)`` for HP and
    ``sqrt(eps + cos^2/eps)`` for VP instead of the standard
    ``sqrt(eps - cos^2)`` form.
    """
    polarization = Polarization.parse(polarization)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or np.any(theta > 90):
        raise DomainError('elevation must lie in (0, 90] degrees')
    if not eps_r > 1:
        raise DomainError('relative permittivity must exceed 1')
    out = _fresnel(np.radians(theta), eps_r, polarization, paper_literal)
    return float(out) if out.ndim == 0 else out


def two_ray_geometry(h, h_b, d):
    """Reflected path length and grazing angle for equal-altitude platforms.

    ``h`` is the platform altitude, ``h_b`` the reflecting plane height
    (0 for the ground) and ``d`` the horizontal separation, all in metres.
    Returns ``(d_los, d_ref, theta_deg)``.
    """
    if not h > h_b:
        raise DomainError(f'reflector at {h_b} m is not below the platforms '
                          f'at {h} m')
    if h_b < 0:
        raise DomainError('reflector height must be non-negative')
    if not d > 0:
        raise DomainError('horizontal separation must be positive')
    rise = 2.0 * (h - h_b)
    return d, math.hypot(d, rise), math.degrees(math.atan2(rise, d))


def ground_reflection_probability(theta, env):
    """Probability that the ground specular path is clear at ``theta`` deg.

    The logistic is read as a percentage line-of-sight probability for one
    air-to-ground leg; it is clamped to [0, 1] and squared for the two legs.
    Angles below the logistic's offset ``c`` are treated as ``c``.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta > 90):
        raise DomainError('elevation must lie in [0, 90] degrees')
    a, b, c, d, e = env.gr_logistic
    base = np.maximum((theta - c) / d, 0.0)
    p_los = (a - (a - b) / (1.0 + base ** e)) / 100.0
    out = np.clip(p_los, 0.0, 1.0) ** 2
    return float(out) if out.ndim == 0 else out


def effective_building_height(env, altitude, options=None, rng=None,
                              size=None):
    """Roof height entering the building term of the PTR model.

    The deterministic choice is the Rayleigh mean conditioned on lying below
    the platforms (identical to the plain mean when ``altitude`` is many
    ``gamma`` above the roofs).  The stochastic choice draws from the same
    truncated distribution.
    """
    options = options or ModelOptions()
    if not options.stochastic_hb:
        value = truncated_rayleigh_mean(env.gamma, altitude)
        return value if size is None else np.full(size, value)
    if rng is None:
        raise DomainError('stochastic roof heights need an rng')
    u = rng.random(size)
    return truncated_rayleigh_sample(env.gamma, altitude, u)


def _ptr_core(d, h, h_b, frequency, alpha, p_g, env, polarization, eps_b,
              eps_g, options):
    """Vectorised PTR evaluation; returns a dict of arrays."""
    lam = SPEED_OF_LIGHT / frequency
    k = 2.0 * np.pi / lam
    rise_b = 2.0 * (h - h_b)
    rise_g = 2.0 * h
    d_ref_b = np.hypot(d, rise_b)
    d_ref_g = np.hypot(d, rise_g)
    theta_b = np.arctan2(rise_b, d)
    theta_g = np.arctan2(rise_g, d)
    literal = options.paper_literal_fresnel
    gamma_b = _fresnel(theta_b, eps_b, polarization, literal)
    gamma_g = _fresnel(theta_g, eps_g, polarization, literal)
    # d - d_ref without cancellation: -rise^2 / (d + d_ref)
    dphi_b = -k * rise_b ** 2 / (d + d_ref_b)
    dphi_g = -k * rise_g ** 2 / (d + d_ref_g)
    source = 'explicit'
    if p_g is None:
        p_g = ground_reflection_probability(np.degrees(theta_g), env)
        source = 'logistic'
    amp_b = d / d_ref_b if options.exact_amplitude else 1.0
    amp_g = d / d_ref_g if options.exact_amplitude else 1.0
    total = (1.0
             + gamma_b * np.exp(1j * dphi_b) * alpha * amp_b
             + gamma_g * np.exp(1j * dphi_g) * (1.0 - alpha) * p_g * amp_g)
    mag = np.abs(total)
    deep_fade = mag == 0.0
    with np.errstate(divide='ignore'):
        pl = 20.0 * np.log10(4.0 * np.pi * d / lam) - 20.0 * np.log10(mag)
    return dict(
        d_los=d, d_ref_building=d_ref_b, d_ref_ground=d_ref_g,
        theta_b=np.degrees(theta_b), theta_g=np.degrees(theta_g),
        gamma_b=gamma_b, gamma_g=gamma_g, dphi_b=dphi_b, dphi_g=dphi_g,
        path_loss_db=pl, h_b=h_b, p_g=np.broadcast_to(p_g, np.shape(d)),
        p_g_source=source, deep_fade=deep_fade,
        )


def _check_ptr_inputs(d, h, h_b, p_g):
    if np.any(np.asarray(d) <= 0):
        raise DomainError('horizontal separation must be positive')
    if np.any(np.asarray(h_b) < 0) or np.any(np.asarray(h_b) >= h):
        raise DomainError(f'roof height must lie in [0, {h}) m')
    if p_g is not None and not np.all((np.asarray(p_g) >= 0)
                                      & (np.asarray(p_g) <= 1)):
        raise DomainError('p_g must lie in [0, 1]')


def ptr_path_loss(link, env, h_b=None, p_g=None, options=None, rng=None):
    """PTR path loss (dB) of one equal-altitude link plus its breakdown.

    ``h_b`` defaults to :func:`effective_building_height`; ``p_g`` defaults
    to :func:`ground_reflection_probability` at the ground grazing angle.
    A vanishing phasor sum gives ``inf`` with ``breakdown.deep_fade`` set.
    """
    options = options or ModelOptions()
    h = link.altitude
    if not h > 0:
        raise DomainError('platform altitude must be positive')
    d = link.horizontal_distance
    if h_b is None:
        h_b = float(effective_building_height(env, h, options, rng))
    _check_ptr_inputs(d, h, h_b, p_g)
    r = _ptr_core(np.float64(d), h, np.float64(h_b), link.frequency,
                  env.alpha, p_g, env, link.polarization, link.eps_building,
                  link.eps_ground, options)
    breakdown = TwoRayBreakdown(
        d_los=float(r['d_los']),
        d_ref_building=float(r['d_ref_building']),
        d_ref_ground=float(r['d_ref_ground']),
        theta_b=float(r['theta_b']), theta_g=float(r['theta_g']),
        gamma_b=float(r['gamma_b']), gamma_g=float(r['gamma_g']),
        dphi_b=float(r['dphi_b']), dphi_g=float(r['dphi_g']),
        path_loss_db=float(r['path_loss_db']),
        h_b=float(h_b), p_g=float(r['p_g']), p_g_source=r['p_g_source'],
        deep_fade=bool(r['deep_fade']),
        )
    return breakdown.path_loss_db, breakdown


def ptr_path_loss_curve(distances, altitude, frequency, env,
                        polarization=Polarization.HORIZONTAL,
                        eps_building=4.44, eps_ground=3.0, h_b=None,
                        p_g=None, options=None, rng=None):
    """PTR path loss (dB) over an array of horizontal distances (m)."""
    options = options or ModelOptions()
    d = np.asarray(distances, dtype=float)
    if not altitude > 0:
        raise DomainError('platform altitude must be positive')
    if not frequency > 0:
        raise DomainError('frequency must be positive')
    if not (eps_building > 1 and eps_ground > 1):
        raise DomainError('relative permittivities must exceed 1')
    if h_b is None:
        h_b = effective_building_height(env, altitude, options, rng,
                                        size=d.shape)
    _check_ptr_inputs(d, altitude, h_b, p_g)
    r = _ptr_core(d, altitude, np.asarray(h_b, dtype=float), frequency,
                  env.alpha, p_g, env, Polarization.parse(polarization),
                  eps_building, eps_ground, options)
    return r['path_loss_db']
