"""Independent reference implementations used by the tests.

None of these share code with the package; they are written from the
textbook definitions, favouring clarity over speed.
"""

import cmath
import math

import numpy as np

C = 299_792_458.0


def box_hit_breakpoints(p1, p2, box):
    """Open-segment vs. open-box test by enumerating face-plane crossings.

    The segment is cut at every parameter where it crosses one of the six
    face planes.  Between consecutive cuts it is either wholly inside or
    wholly outside the box, so testing each piece's midpoint is exact.
    """
    x0, y0, x1, y1, h = box
    lo = (x0, y0, 0.0)
    hi = (x1, y1, h)
    cuts = {0.0, 1.0}
    for axis in range(3):
        v = p2[axis] - p1[axis]
        if v == 0:
            continue
        for plane in (lo[axis], hi[axis]):
            t = (plane - p1[axis]) / v
            if 0.0 < t < 1.0:
                cuts.add(t)
    cuts = sorted(cuts)
    for a, b in zip(cuts, cuts[1:]):
        if b - a < 1e-12:
            continue
        t = 0.5 * (a + b)
        q = [p1[k] + t * (p2[k] - p1[k]) for k in range(3)]
        if all(lo[k] < q[k] < hi[k] for k in range(3)):
            return True
    return False


def box_hit_breakpoints_batch(p1, p2, box):
    """Vectorised form of :func:`box_hit_breakpoints` over many segments."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    x0, y0, x1, y1, h = box
    lo = np.array([x0, y0, 0.0])
    hi = np.array([x1, y1, h])
    v = p2 - p1
    cuts = [np.zeros(len(p1)), np.ones(len(p1))]
    for axis in range(3):
        for plane in (lo[axis], hi[axis]):
            with np.errstate(divide='ignore', invalid='ignore'):
                t = (plane - p1[:, axis]) / v[:, axis]
            t = np.where(np.isfinite(t) & (t > 0) & (t < 1), t, 0.0)
            cuts.append(t)
    cuts = np.sort(np.column_stack(cuts), axis=1)
    mids = 0.5 * (cuts[:, 1:] + cuts[:, :-1])
    wide = (cuts[:, 1:] - cuts[:, :-1]) > 1e-12
    q = p1[:, None, :] + mids[:, :, None] * v[:, None, :]
    inside = np.all((q > lo) & (q < hi), axis=2) & wide
    return inside.any(axis=1)


def any_box_hit(p1, p2, boxes):
    hit = np.zeros(len(p1), dtype=bool)
    for box in boxes:
        hit |= box_hit_breakpoints_batch(p1, p2, box)
    return hit


def fresnel_h(theta_deg, eps):
    t = math.radians(theta_deg)
    root = math.sqrt(eps - math.cos(t) ** 2)
    return (math.sin(t) - root) / (math.sin(t) + root)


def fresnel_v(theta_deg, eps):
    t = math.radians(theta_deg)
    root = math.sqrt(eps - math.cos(t) ** 2)
    return (eps * math.sin(t) - root) / (eps * math.sin(t) + root)


def fspl_si(d, f):
    return 20.0 * math.log10(4.0 * math.pi * d * f / C)


def classical_two_ray(h, d, f, gamma):
    """Received field of a direct and a ground-reflected spherical wave."""
    k = 2.0 * math.pi * f / C
    d_ref = math.sqrt(d * d + 4.0 * h * h)
    field = (cmath.exp(-1j * k * d) / d
             + gamma * cmath.exp(-1j * k * d_ref) / d_ref)
    lam = C / f
    return -20.0 * math.log10(abs(field) * lam / (4.0 * math.pi))


def ptr_rectangular(d, h, h_b, f, alpha, p_g, gamma_b, gamma_g,
                    spreading=False):
    """The three-term bracket summed with cos/sin, no complex arithmetic.

    ``spreading`` scales each reflected ray by ``d / d_ref``.
    """
    k = 2.0 * np.pi * f / C
    rb = 2.0 * (h - h_b)
    rg = 2.0 * h
    db = np.sqrt(d ** 2 + rb ** 2)
    dg = np.sqrt(d ** 2 + rg ** 2)
    # (d - sqrt(d^2 + r^2)) rationalised, exact for r << d in floating point
    pb = -k * rb ** 2 / (d + db)
    pg = -k * rg ** 2 / (d + dg)
    wb = gamma_b * alpha
    wg = gamma_g * (1.0 - alpha) * p_g
    if spreading:
        wb = wb * d / db
        wg = wg * d / dg
    re = 1.0 + wb * np.cos(pb) + wg * np.cos(pg)
    im = wb * np.sin(pb) + wg * np.sin(pg)
    lam = C / f
    return (20.0 * np.log10(4.0 * np.pi * d / lam)
            - 10.0 * np.log10(re * re + im * im))


def logistic_gr(theta, a, b, c, d, e):
    """Ground-reflection probability from the percent logistic, by hand."""
    x = max(theta - c, 0.0) / d
    pct = a - (a - b) / (1.0 + x ** e)
    p = min(max(pct / 100.0, 0.0), 1.0)
    return p * p


def weibull_samples(rng, eta, nu, n):
    u = rng.random(n)
    return eta * (-np.log1p(-u)) ** (1.0 / nu)


def bisect(f, lo, hi, tol=1e-12):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ptr_high_precision(d, h, h_b, f, alpha, p_g, eps_b, eps_g, vertical,
                       digits=40):
    """The PTR loss evaluated from scratch in extended precision."""
    import mpmath as mp
    with mp.workdps(digits):
        d, h, h_b, f, alpha, p_g, eps_b, eps_g = (
            mp.mpf(v) for v in (d, h, h_b, f, alpha, p_g, eps_b, eps_g))
        k = 2 * mp.pi * f / mp.mpf(C)

        def gamma(rise, eps):
            s = rise / mp.sqrt(d * d + rise * rise)
            c2 = 1 - s * s
            root = mp.sqrt(eps - c2)
            a = eps * s if vertical else s
            return (a - root) / (a + root)

        total = mp.mpc(1)
        for rise, eps, w in ((2 * (h - h_b), eps_b, alpha),
                             (2 * h, eps_g, (1 - alpha) * p_g)):
            path = mp.sqrt(d * d + rise * rise)
            total += w * gamma(rise, eps) * mp.expjpi(k * (d - path) / mp.pi)
        loss = 20 * mp.log10(4 * mp.pi * d * f / mp.mpf(C)) \
            - 20 * mp.log10(abs(total))
        return float(loss)
