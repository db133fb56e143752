"""Distribution fits, log-distance regression and shadowing-law fits."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    'WeibullParams', 'NormalParams', 'LogDistanceFit', 'ShadowModelParams',
    'ECDF', 'fit_weibull', 'fit_normal', 'ecdf', 'ks_statistic',
    'weibull_cdf', 'weibull_pdf', 'normal_cdf', 'normal_pdf',
    'fit_log_distance', 'extract_shadowing', 'fit_shadow_model',
    'shadow_exp_decay', 'shadow_power_law', 'fit_report',
    ]


@dataclass(frozen=True)
class WeibullParams:
    eta: float   # scale
    nu: float    # shape
    n: int = 0
    iterations: int = 0

    def cdf(self, x):
        return weibull_cdf(x, self.eta, self.nu)

    def pdf(self, x):
        return weibull_pdf(x, self.eta, self.nu)


@dataclass(frozen=True)
class NormalParams:
    mu: float
    sigma: float
    n: int = 0

    def cdf(self, x):
        return normal_cdf(x, self.mu, self.sigma)

    def pdf(self, x):
        return normal_pdf(x, self.mu, self.sigma)


@dataclass(frozen=True)
class LogDistanceFit:
    ple: float
    intercept: float
    residual_std: float
    residuals: np.ndarray = field(repr=False, compare=False, default=None)
    distances: np.ndarray = field(repr=False, compare=False, default=None)

    def predict(self, distance):
        return self.intercept + self.ple * 10.0 * np.log10(distance)


@dataclass(frozen=True)
class ShadowModelParams:
    """Fitted altitude law for the shadowing factor (dB).

    ``form`` is ``'exp_decay'`` for ``p exp(-q h) + r`` or ``'power_law'``
    for ``p h**-q + r``.
    """
    form: str
    p: float
    q: float
    r: float
    rmse: float
    n: int = 0
    iterations: int = 0

    def __call__(self, h):
        if self.form == 'exp_decay':
            return shadow_exp_decay(h, self.p, self.q, self.r)
        return shadow_power_law(h, self.p, self.q, self.r)


def weibull_cdf(x, eta, nu):
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return -np.expm1(-(x / eta) ** nu)


def weibull_pdf(x, eta, nu):
    x = np.asarray(x, dtype=float)
    z = np.maximum(x, 0.0) / eta
    return np.where(x >= 0, nu / eta * z ** (nu - 1) * np.exp(-z ** nu), 0.0)


def normal_cdf(x, mu, sigma):
    z = (np.asarray(x, dtype=float) - mu) / (sigma * math.sqrt(2.0))
    return 0.5 * (1.0 + np.vectorize(math.erf, otypes=[float])(z))


def normal_pdf(x, mu, sigma):
    z = (np.asarray(x, dtype=float) - mu) / sigma
    return np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))


def _finite(data):
    x = np.asarray(data, dtype=float).ravel()
    return x[np.isfinite(x)]


def fit_weibull(data, tol=1e-8, max_iter=200):
    """Two-parameter Weibull maximum-likelihood fit.

    Newton iteration on the profile score for the shape ``nu``; the scale
    follows in closed form as ``mean(x**nu)**(1/nu)``.  Data are divided by
    their geometric mean first so large values do not overflow.
    """
    x = _finite(data)
    if x.size < 10:
        raise DomainError('Weibull fit needs at least 10 values')
    if np.any(x <= 0):
        raise DomainError('Weibull fit needs strictly positive data')
    logx = np.log(x)
    spread = logx.std()
    if spread == 0 or not np.isfinite(spread):
        raise DomainError('Weibull likelihood is degenerate for constant '
                          'data')
    centre = logx.mean()
    ly = logx - centre

    def score(nu):
        w = np.exp(nu * ly - np.max(nu * ly))
        sw = w.sum()
        a = (w * ly).sum() / sw
        b = (w * ly * ly).sum() / sw
        return a - 1.0 / nu, (b - a * a) + 1.0 / (nu * nu)

    nu = math.pi / (math.sqrt(6.0) * spread)
    for it in range(1, max_iter + 1):
        g, dg = score(nu)
        step = g / dg
        new = nu - step
        while new <= 0:
            step *= 0.5
            new = nu - step
        if abs(new - nu) < tol:
            nu = new
            break
        nu = new
    else:
        raise ConvergenceError(
            f'Weibull shape did not converge in {max_iter} iterations',
            best=nu)
    m = np.max(nu * ly)
    eta = math.exp(centre + (m + math.log(np.mean(np.exp(nu * ly - m)))) / nu)
    return WeibullParams(float(eta), float(nu), int(x.size), it)


def fit_normal(data):
    x = _finite(data)
    if x.size < 2:
        raise DomainError('Normal fit needs at least 2 values')
    return NormalParams(float(x.mean()), float(x.std(ddof=1)), int(x.size))


class ECDF:
    """Right-continuous empirical CDF."""

    def __init__(self, data):
        x = _finite(data)
        if x.size < 1:
            raise DomainError('ECDF needs at least one value')
        self.x = np.sort(x)
        self.n = x.size

    def __call__(self, t):
        out = np.searchsorted(self.x, np.asarray(t, dtype=float),
                              side='right') / self.n
        return float(out) if np.ndim(out) == 0 else out

    def steps(self):
        """Unique jump locations and the ECDF value just after each."""
        xs, counts = np.unique(self.x, return_counts=True)
        return xs, np.cumsum(counts) / self.n


def ecdf(data):
    return ECDF(data)


def ks_statistic(data, cdf):
    """Sup-norm distance between the ECDF of ``data`` and ``cdf``."""
    x = np.sort(_finite(data))
    n = x.size
    if n < 1:
        raise DomainError('KS statistic needs at least one value')
    f = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max(), 0.0))


def _sweep_arrays(distances, path_loss):
    if path_loss is None:
        if hasattr(distances, 'path_loss_db'):
            d, pl = distances.distances, distances.path_loss_db
        else:
            pairs = np.asarray(distances, dtype=float)
            d, pl = pairs[:, 0], pairs[:, 1]
    else:
        d, pl = distances, path_loss
    d = np.asarray(d, dtype=float).ravel()
    pl = np.asarray(pl, dtype=float).ravel()
    if d.shape != pl.shape:
        raise DomainError('distances and path loss differ in length')
    keep = np.isfinite(d) & np.isfinite(pl)
    d, pl = d[keep], pl[keep]
    if np.any(d <= 0):
        raise DomainError('distances must be positive')
    if np.unique(d).size < 3:
        raise DomainError('log-distance fit needs at least 3 distinct '
                          'distances')
    return d, pl


def fit_log_distance(distances, path_loss=None):
    """Least-squares ``pl = intercept + ple * 10 log10(d)``.

    Accepts two arrays, an ``(n, 2)`` array of pairs, or a sweep result.
    Non-finite samples (fully blocked distances) are skipped.
    """
    d, pl = _sweep_arrays(distances, path_loss)
    x = 10.0 * np.log10(d)
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, pl, rcond=None)
    resid = pl - design @ coef
    dof = max(pl.size - 2, 1)
    return LogDistanceFit(float(coef[0]), float(coef[1]),
                          float(math.sqrt(resid @ resid / dof)), resid, d)


def extract_shadowing(distances, path_loss=None):
    """Detrended path loss (dB): residuals of the log-distance fit."""
    return fit_log_distance(distances, path_loss).residuals


def shadow_exp_decay(h, p, q, r):
    return p * np.exp(-q * np.asarray(h, dtype=float)) + r


def shadow_power_law(h, p, q, r):
    return p * np.asarray(h, dtype=float) ** (-q) + r


def _model(form):
    if form == 'exp_decay':
        def f(h, th):
            e = np.exp(-th[1] * h)
            return th[0] * e + th[2], np.column_stack(
                [e, -th[0] * h * e, np.ones_like(h)])
    elif form == 'power_law':
        def f(h, th):
            e = h ** (-th[1])
            return th[0] * e + th[2], np.column_stack(
                [e, -th[0] * np.log(h) * e, np.ones_like(h)])
    else:
        raise DomainError(f'unknown shadow model form {form!r}')
    return f


def _rmse(f, h, y, th):
    return float(np.sqrt(np.mean((f(h, th)[0] - y) ** 2)))


def _levenberg(f, h, y, th, rtol, max_iter):
    """Gauss-Newton with Marquardt damping; returns (theta, rmse, iters)."""
    lam = 1e-3
    rmse = _rmse(f, h, y, th)
    floor = 1e-14 * max(np.abs(y).max(), 1e-300)
    it = 0
    for it in range(1, max_iter + 1):
        if rmse <= floor:
            break
        pred, jac = f(h, th)
        resid = y - pred
        jtj = jac.T @ jac
        grad = jac.T @ resid
        diag = np.diag(np.diag(jtj)) + 1e-12 * np.trace(jtj) * np.eye(3)
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(jtj + lam * diag, grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = th + step
            new = _rmse(f, h, y, trial)
            if np.isfinite(new) and new < rmse:
                improved = True
                break
            lam *= 10.0
        if not improved:
            break        # no descent direction left: numerical minimum
        change = (rmse - new) / rmse
        th, rmse = trial, new
        lam = max(lam / 10.0, 1e-12)
        if change < rtol:
            break
    else:
        raise ConvergenceError('shadow model fit hit the iteration limit',
                               best=th, rmse=rmse)
    return th, rmse, it


def _grid_start(form, h, y, f):
    """Best ``q`` on a log grid, ``p`` and ``r`` by linear least squares."""
    best = None
    for q in np.logspace(-4, 0, 81):
        basis = np.exp(-q * h) if form == 'exp_decay' else h ** (-q)
        design = np.column_stack([basis, np.ones_like(h)])
        (p, r), *_ = np.linalg.lstsq(design, y, rcond=None)
        th = np.array([p, q, r])
        err = _rmse(f, h, y, th)
        if best is None or err < best[1]:
            best = (th, err)
    return best[0]


def fit_shadow_model(altitudes, sigmas=None, form='exp_decay', rtol=1e-10,
                     max_iter=500):
    """Fit ``sigma(h)`` to the exponential-decay or power-law altitude law.

    Starts from ``r = min sigma``, ``p = max sigma - min sigma`` and
    ``q = 1 / median(h)``.  When damping cannot lower the error from that
    start, restarts from a coarse grid over ``q`` in [1e-4, 1].
    """
    if sigmas is None:
        pts = np.asarray(altitudes, dtype=float)
        h, y = pts[:, 0], pts[:, 1]
    else:
        h = np.asarray(altitudes, dtype=float).ravel()
        y = np.asarray(sigmas, dtype=float).ravel()
    if h.size != y.size:
        raise DomainError('altitudes and sigmas differ in length')
    if h.size < 4:
        raise DomainError('shadow model fit needs at least 4 points')
    if np.any(h <= 0) or np.any(y <= 0):
        raise DomainError('altitudes and sigmas must be positive')
    f = _model(form)
    start = np.array([y.max() - y.min(), 1.0 / np.median(h), y.min()])
    start_rmse = _rmse(f, h, y, start)
    floor = 1e-14 * np.abs(y).max()
    try:
        th, rmse, it = _levenberg(f, h, y, start, rtol, max_iter)
    except ConvergenceError:
        th, rmse, it = start, start_rmse, 0
    if rmse >= start_rmse and start_rmse > floor:
        th, rmse, it2 = _levenberg(f, h, y, _grid_start(form, h, y, f), rtol,
                                   max_iter)
        it += it2
        if rmse >= start_rmse:
            raise ConvergenceError('shadow model fit failed to improve on its '
                                   'starting point', best=th, rmse=rmse)
    return ShadowModelParams(form, float(th[0]), float(th[1]), float(th[2]),
                             float(rmse), int(h.size), it)


def fit_report(fit, data=None):
    """JSON-ready summary of a fit, with the KS distance when data given."""
    if isinstance(fit, WeibullParams):
        doc = {'distribution': 'weibull',
               'parameters': {'eta': fit.eta, 'nu': fit.nu}, 'n': fit.n}
        if data is not None:
            doc['ks'] = ks_statistic(data, fit.cdf)
    elif isinstance(fit, NormalParams):
        doc = {'distribution': 'normal',
               'parameters': {'mu': fit.mu, 'sigma': fit.sigma}, 'n': fit.n}
        if data is not None:
            doc['ks'] = ks_statistic(data, fit.cdf)
    elif isinstance(fit, ShadowModelParams):
        doc = {'distribution': f'shadow_{fit.form}',
               'parameters': {'p': fit.p, 'q': fit.q, 'r': fit.r},
               'n': fit.n, 'rmse': fit.rmse}
    elif isinstance(fit, LogDistanceFit):
        doc = {'distribution': 'log_distance',
               'parameters': {'ple': fit.ple, 'intercept': fit.intercept},
               'n': int(fit.residuals.size), 'rmse': fit.residual_std}
    else:
        raise TypeError(f'cannot report {type(fit).__name__}')
    return doc
