import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    bisect, fresnel_h, fresnel_v, fspl_si, logistic_gr, ptr_high_precision,
    ptr_rectangular,
    )
from ptrchannel.city import PRESETS, EnvironmentParams, GRLogistic
from ptrchannel.errors import DomainError
from ptrchannel.propagation import (
    Link, ModelOptions, Polarization, effective_building_height, fspl_db,
    free_space_loss_db, ground_reflection_probability, ptr_path_loss,
    ptr_path_loss_curve, reflection_coefficient, two_ray_geometry,
    )

URBAN = PRESETS['urban']
H, V = Polarization.HORIZONTAL, Polarization.VERTICAL


def _flat(alpha=0.0):
    return EnvironmentParams('flat', alpha, 500.0, 15.0,
                             GRLogistic(120.0, 0.0, 0.0, 24.3, 1.229))


# -- free space -----------------------------------------------------------

def test_fspl_golden_values():
    assert abs(fspl_db(1.0, 1000.0) - 92.45) < 1e-9
    assert fspl_db(0.3, 4000.0) == pytest.approx(94.03, abs=0.01)
    assert fspl_db(0.001, 1.0) == pytest.approx(-27.55, abs=1e-9)


@pytest.mark.parametrize('d, f', [(0, 1000), (-1, 1000), (1, 0), (1, -5)])
def test_fspl_domain(d, f):
    with pytest.raises(DomainError):
        fspl_db(d, f)


def test_si_and_km_mhz_forms_agree():
    # 32.45 is a rounded constant, so the two forms differ by ~2e-3 dB
    d = np.array([1.0, 50.0, 300.0, 1000.0])
    si = free_space_loss_db(d, 4e9)
    assert np.allclose(si, [fspl_si(x, 4e9) for x in d], atol=1e-12)
    assert np.allclose(si, fspl_db(d / 1000.0, 4000.0), atol=0.005)


# -- Fresnel ---------------------------------------------------------------

@pytest.mark.parametrize('pol', [H, V])
@pytest.mark.parametrize('eps', [1.5, 3.0, 4.44, 15.0])
def test_grazing_limit_is_minus_one(pol, eps):
    gamma = reflection_coefficient(1e-7, eps, pol)
    assert gamma == pytest.approx(-1, abs=1e-6)
    assert reflection_coefficient(1e-7, eps, pol, paper_literal=True) == \
        pytest.approx(-1, abs=1e-6)


def test_normal_incidence_hp():
    assert reflection_coefficient(90.0, 4.0, H) == pytest.approx(-1 / 3)


def test_matches_textbook_forms():
    for theta in np.linspace(0.5, 90, 40):
        for eps in (3.0, 4.44):
            assert reflection_coefficient(theta, eps, H) == pytest.approx(
                fresnel_h(theta, eps), abs=1e-14)
            assert reflection_coefficient(theta, eps, V) == pytest.approx(
                fresnel_v(theta, eps), abs=1e-14)


def test_paper_literal_forms():
    t = math.radians(30.0)
    s, c2 = math.sin(t), math.cos(t) ** 2
    hp = (s - math.sqrt(3 + c2)) / (s + math.sqrt(3 + c2))
    vp = (s - math.sqrt(3 + c2 / 3)) / (s + math.sqrt(3 + c2 / 3))
    assert reflection_coefficient(30, 3, H, True) == pytest.approx(hp)
    assert reflection_coefficient(30, 3, V, True) == pytest.approx(vp)


def test_vp_brewster_single_sign_change():
    eps = 3.0
    theta = np.linspace(0.01, 89.99, 20_000)
    g = reflection_coefficient(theta, eps, V)
    changes = np.flatnonzero(np.diff(np.sign(g)) != 0)
    assert changes.size == 1

    def numerator(deg):
        t = math.radians(deg)
        return eps * math.sin(t) - math.sqrt(eps - math.cos(t) ** 2)

    root = bisect(numerator, 0.01, 89.99)
    assert theta[changes[0]] <= root <= theta[changes[0] + 1]
    # closed form for eps=3: sin^2 = 1/(eps+1)
    assert root == pytest.approx(math.degrees(math.asin(0.5)), abs=1e-8)


@pytest.mark.parametrize('theta, eps', [(0, 3), (-1, 3), (91, 3), (45, 1.0),
                                        (45, 0.5)])
def test_reflection_domain(theta, eps):
    with pytest.raises(DomainError):
        reflection_coefficient(theta, eps, H)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-6, 90), st.floats(1.0001, 100), st.sampled_from([H, V]),
       st.booleans())
def test_reflection_bounded(theta, eps, pol, literal):
    assert abs(reflection_coefficient(theta, eps, pol, literal)) <= 1 + 1e-12


# -- geometry --------------------------------------------------------------

def test_geometry_values():
    d_los, d_ref, th = two_ray_geometry(100, 0, 200)
    assert (d_los, round(d_ref, 2), th) == (200, 282.84, pytest.approx(45))
    _, d_ref, th = two_ray_geometry(50, 20, 300)
    assert d_ref == pytest.approx(305.94, abs=0.005)
    assert th == pytest.approx(11.31, abs=0.005)


def test_geometry_reflector_near_platform():
    _, d_ref, th = two_ray_geometry(100, 100 - 1e-9, 250)
    assert d_ref == pytest.approx(250, abs=1e-9) and th < 1e-9


@pytest.mark.parametrize('h, hb, d', [(100, 100, 50), (100, 120, 50),
                                      (100, 0, 0), (100, -1, 50)])
def test_geometry_domain(h, hb, d):
    with pytest.raises(DomainError):
        two_ray_geometry(h, hb, d)


@settings(max_examples=200, deadline=None)
@given(st.floats(1, 500), st.floats(0, 0.999), st.floats(0.01, 2000))
def test_reflected_path_never_shorter(h, frac, d):
    d_los, d_ref, _ = two_ray_geometry(h, frac * h, d)
    assert d_ref >= d_los


# -- ground-reflection probability -----------------------------------------

def test_gr_probability_values():
    p90 = ground_reflection_probability(90, URBAN)
    assert p90 == pytest.approx(1, abs=1e-3)
    assert ground_reflection_probability(0, PRESETS['suburban']) == 0.0
    assert ground_reflection_probability(10, PRESETS['suburban']) == \
        pytest.approx(0.663, abs=0.005)


@pytest.mark.parametrize('name', sorted(PRESETS))
def test_gr_probability_matches_hand_logistic(name):
    env = PRESETS[name]
    for theta in range(0, 91, 5):
        assert ground_reflection_probability(theta, env) == pytest.approx(
            logistic_gr(theta, *env.gr_logistic), abs=1e-12)


@pytest.mark.parametrize('name', sorted(PRESETS))
def test_gr_probability_monotone(name):
    p = ground_reflection_probability(np.arange(0, 90.5, 0.5), PRESETS[name])
    assert np.all(np.diff(p) >= 0)
    assert p[-1] >= 0.995


def test_gr_environment_ordering():
    th = np.arange(20.0, 70.5, 0.5)
    p = [ground_reflection_probability(th, PRESETS[n]) for n in
         ('suburban', 'urban', 'dense-urban', 'high-rise')]
    for a, b in zip(p, p[1:]):
        assert np.all(a >= b)


@pytest.mark.parametrize('theta', [-0.1, 90.1])
def test_gr_probability_domain(theta):
    with pytest.raises(DomainError):
        ground_reflection_probability(theta, URBAN)


# -- PTR -------------------------------------------------------------------

def test_ptr_reduces_to_free_space():
    d = np.linspace(1, 1000, 400)
    for f in (1e9, 4e9, 6e9):
        pl = ptr_path_loss_curve(d, 100.0, f, _flat(), p_g=0.0)
        assert np.max(np.abs(pl - free_space_loss_db(d, f))) < 0.01


def test_ptr_breakdown_fields():
    link = Link.at_altitude(100.0, 200.0, 4e9)
    pl, b = ptr_path_loss(link, URBAN)
    assert b.path_loss_db == pl
    assert b.d_los == 200.0 and b.d_ref_ground == pytest.approx(282.8427, 1e-6)
    assert b.theta_g == pytest.approx(45.0)
    assert b.d_ref_building >= b.d_los and b.d_ref_ground >= b.d_los
    assert abs(b.gamma_b) <= 1 and abs(b.gamma_g) <= 1
    assert b.dphi_b <= 0 and b.dphi_g <= 0
    assert b.p_g_source == 'logistic'
    assert b.p_g == pytest.approx(ground_reflection_probability(45, URBAN))
    assert b.h_b == pytest.approx(15 * math.sqrt(math.pi / 2), rel=1e-9)
    _, b = ptr_path_loss(link, URBAN, p_g=0.25)
    assert (b.p_g, b.p_g_source) == (0.25, 'explicit')


def test_ptr_matches_rectangular_phasor_oracle():
    rng = np.random.default_rng(0)
    n = 10_000
    d = rng.uniform(1, 2000, n)
    h = rng.uniform(20, 400, n)
    hb = rng.uniform(0, 0.95, n) * h
    f = rng.uniform(0.5e9, 6e9, n)
    alpha = rng.uniform(0, 1, n)
    pg = rng.uniform(0, 1, n)
    eb = rng.uniform(1.5, 10, n)
    eg = rng.uniform(1.5, 10, n)
    pols = rng.integers(0, 2, n)
    worst = 0.0
    for i in range(n):
        pol = (H, V)[pols[i]]
        env = _flat(alpha[i])
        link = Link.at_altitude(h[i], d[i], f[i], polarization=pol,
                                eps_building=eb[i], eps_ground=eg[i])
        pl, _ = ptr_path_loss(link, env, h_b=hb[i], p_g=pg[i])
        fr = fresnel_h if pol is H else fresnel_v
        gb = fr(math.degrees(math.atan2(2 * (h[i] - hb[i]), d[i])), eb[i])
        gg = fr(math.degrees(math.atan2(2 * h[i], d[i])), eg[i])
        want = ptr_rectangular(d[i], h[i], hb[i], f[i], alpha[i], pg[i],
                               gb, gg)
        worst = max(worst, abs(pl - want))
    assert worst < 1e-9


def test_ptr_matches_extended_precision():
    # long links at high frequency put the phase near 1e6 rad; the loss must
    # still agree with a 40-digit evaluation
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        d = rng.uniform(1, 5000)
        h = rng.uniform(5, 500)
        hb = rng.uniform(0, 0.99) * h
        f = rng.uniform(0.1e9, 10e9)
        alpha, pg = rng.uniform(0, 1, 2)
        eb, eg = rng.uniform(1.05, 20, 2)
        vertical = bool(rng.random() < 0.5)
        link = Link.at_altitude(h, d, f, polarization=V if vertical else H,
                                eps_building=eb, eps_ground=eg)
        pl, _ = ptr_path_loss(link, _flat(alpha), h_b=hb, p_g=pg)
        worst = max(worst, abs(pl - ptr_high_precision(
            d, h, hb, f, alpha, pg, eb, eg, vertical)))
    assert worst < 1e-9


def test_curve_equals_pointwise():
    d = np.linspace(5, 300, 60)
    curve = ptr_path_loss_curve(d, 50.0, 4e9, URBAN)
    point = [ptr_path_loss(Link.at_altitude(50.0, x, 4e9), URBAN)[0]
             for x in d]
    assert np.allclose(curve, point, atol=1e-12)


def test_exact_amplitude_option():
    link = Link.at_altitude(100.0, 150.0, 4e9)
    plain, b = ptr_path_loss(link, URBAN)
    exact, _ = ptr_path_loss(link, URBAN,
                             options=ModelOptions(exact_amplitude=True))
    want = ptr_rectangular(150.0, 100.0, b.h_b, 4e9, URBAN.alpha, b.p_g,
                           b.gamma_b, b.gamma_g, spreading=True)
    assert exact == pytest.approx(want, abs=1e-9)
    assert exact != plain


def test_stochastic_hb_is_seeded_and_truncated():
    opts = ModelOptions(stochastic_hb=True)
    env = PRESETS['high-rise']
    h1 = effective_building_height(env, 50.0, opts,
                                   np.random.default_rng(5), size=1000)
    h2 = effective_building_height(env, 50.0, opts,
                                   np.random.default_rng(5), size=1000)
    assert np.array_equal(h1, h2) and h1.max() < 50.0
    with pytest.raises(DomainError):
        effective_building_height(env, 50.0, opts, None)


def test_high_rise_low_altitude_default_is_valid():
    # plain Rayleigh mean (62.7 m) would exceed the platforms
    h_b = effective_building_height(PRESETS['high-rise'], 50.0)
    assert 0 < h_b < 50.0
    pl = ptr_path_loss_curve(np.arange(1, 301.0), 50.0, 4e9,
                             PRESETS['high-rise'])
    assert np.all(np.isfinite(pl))


@pytest.mark.parametrize('kw', [dict(h_b=100.0), dict(h_b=-1.0),
                                dict(p_g=1.5), dict(p_g=-0.1)])
def test_ptr_domain(kw):
    with pytest.raises(DomainError):
        ptr_path_loss(Link.at_altitude(100.0, 50.0, 4e9), URBAN, **kw)


def test_link_validation():
    with pytest.raises(DomainError):
        Link((0, 0, 1), (0, 0, 1), 4e9)
    with pytest.raises(DomainError):
        Link((0, 0, 1), (1, 0, 1), 0)
    with pytest.raises(DomainError):
        Link((0, 0, 1), (1, 0, 1), 4e9, eps_ground=1.0)
    with pytest.raises(DomainError):
        Link((0, 0, 1), (1, 0, 2), 4e9).altitude


@settings(max_examples=300, deadline=None)
@given(st.floats(1, 2000), st.floats(10, 500), st.floats(0, 0.99),
       st.floats(0.5e9, 6e9), st.floats(0, 1), st.floats(0, 1),
       st.sampled_from([H, V]), st.booleans())
def test_ptr_lower_bound(d, h, frac, f, alpha, pg, pol, literal):
    link = Link.at_altitude(h, d, f, polarization=pol)
    pl, _ = ptr_path_loss(link, _flat(alpha), h_b=frac * h, p_g=pg,
                          options=ModelOptions(paper_literal_fresnel=literal))
    assert pl >= free_space_loss_db(d, f) - 6.03
