"""Command-line front end.

Every command writes CSV (or JSON) whose first line records the SHA-256 of
the resolved configuration.  Failures exit non-zero with a JSON error
object on stderr.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__, experiments, output, raycheck, stats
from .city import PRESETS, generate_city
from .config import FLAG_NAMES, RunConfig, parse_range
from .errors import ConfigError, ConvergenceError, DomainError, PTRError
from .propagation import free_space_loss_db, ground_reflection_probability

FIGURES = ('fig2', 'fig5a', 'fig5b', 'fig6', 'fig7', 'fig8', 'table3')

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONVERGENCE = 3


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, field='argv')


def _common(p):
    p.add_argument('--config', metavar='PATH', help='JSON run configuration')
    p.add_argument('--seed', type=int)
    p.add_argument('--env', dest='environment',
                   help='suburban | urban | dense-urban | high-rise')
    p.add_argument('--freq-hz', dest='frequency_hz', type=float)
    p.add_argument('--alt-m', dest='altitudes_m', action='append',
                   help='platform altitude(s); comma list or repeated')
    p.add_argument('--dist-m', dest='dist_m', metavar='MIN:MAX:STEP')
    p.add_argument('--realizations', type=int)
    p.add_argument('--out', metavar='PATH')
    p.add_argument('--format', choices=('csv', 'json'))
    p.add_argument('--polarization', choices=('horizontal', 'vertical'))
    p.add_argument('--eps-building', type=float)
    p.add_argument('--eps-ground', type=float)
    p.add_argument('--p-g', dest='p_g', type=float,
                   help='fix the ground-reflection probability')
    p.add_argument('--h-b-m', dest='h_b_m', type=float,
                   help='fix the effective roof height')
    p.add_argument('--workers', type=int)
    p.add_argument('--side-km', dest='side_d_km', type=float)
    for flag in FLAG_NAMES:
        p.add_argument('--' + flag.replace('_', '-'), dest=flag,
                       action='store_true', default=None)


def build_parser():
    parser = _Parser(prog='ptrchannel', description=(
        'Probabilistic two-ray air-to-air path loss in built-up areas.'))
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('predict', help='PTR and free-space loss vs distance')
    _common(p)

    p = sub.add_parser('simulate', help='geometric two-ray sweep over cities')
    _common(p)
    p.add_argument('--placement', choices=('trajectory', 'random'))

    p = sub.add_parser('grprob',
                       help='Monte Carlo ground-reflection probability')
    _common(p)
    p.add_argument('--theta-deg', dest='theta_deg', action='append')
    p.add_argument('--links-per-city', type=int)

    p = sub.add_parser('fit', help='fit a distribution or shadowing law')
    p.add_argument('input', help='CSV file produced by another command')
    p.add_argument('--what', required=True,
                   choices=('weibull', 'normal', 'shadow_model'))
    p.add_argument('--column', help='data column (default depends on --what)')
    p.add_argument('--form', choices=('exp_decay', 'power_law'),
                   default='exp_decay')
    p.add_argument('--detrend', action='store_true',
                   help='for normal: fit log-distance residuals')
    p.add_argument('--out', metavar='PATH')
    p.add_argument('--format', choices=('csv', 'json'), default='json')

    p = sub.add_parser('reproduce', help='regenerate a figure or table')
    p.add_argument('figure', choices=FIGURES + ('all',))
    _common(p)
    p.add_argument('--no-figures', action='store_true',
                   help='skip the PNG renderings')

    p = sub.add_parser('generate-city', help='emit a generated city as JSON')
    _common(p)
    return parser


def resolve_config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    over = {}
    for name in ('seed', 'environment', 'frequency_hz', 'realizations', 'out',
                 'format', 'polarization', 'eps_building', 'eps_ground',
                 'p_g', 'h_b_m', 'workers', 'side_d_km', 'placement',
                 'links_per_city'):
        if getattr(args, name, None) is not None:
            over[name] = getattr(args, name)
    if getattr(args, 'dist_m', None):
        over['dist_m'] = parse_range(args.dist_m)
    if getattr(args, 'altitudes_m', None):
        over['altitudes_m'] = ','.join(args.altitudes_m)
    if getattr(args, 'theta_deg', None):
        over['theta_deg'] = ','.join(args.theta_deg)
    for flag in FLAG_NAMES:
        if getattr(args, flag, None):
            over[flag] = True
    return cfg.with_overrides(**over)


def _scenario(cfg, **changes):
    lo, hi, step = cfg.dist_m
    sc = experiments.Scenario(
        env=cfg.env, frequency=cfg.frequency_hz, d_range=(lo, hi), step=step,
        polarization=cfg.pol, eps_building=cfg.eps_building,
        eps_ground=cfg.eps_ground, options=cfg.options, h_b=cfg.h_b_m,
        p_g=cfg.p_g, seed=cfg.seed, realizations=cfg.realizations,
        side_d=cfg.side_d_km or experiments.CITY_SIDE_KM,
        linear_power=cfg.flags['linear_power_averaging'],
        workers=cfg.workers)
    return replace(sc, **changes)


def _emit(cfg, columns, rows, path=None, **extra):
    digest = output.config_hash(cfg.provenance(**extra))
    rows = list(rows)
    if cfg.format == 'json':
        text = output.render_records(columns, rows, digest)
    else:
        text = output.render_csv(columns, rows, digest)
    return output.write_text(path if path is not None else cfg.out, text)


def _altitudes(cfg, default=(100.0,)):
    return cfg.altitudes_m or default


# --------------------------------------------------------------------------
# Commands

def cmd_predict(cfg):
    sc = _scenario(cfg)
    alts = _altitudes(cfg)
    rows = []
    for h in sorted(alts):
        d, pl = experiments.ptr_curve(sc, h)
        fs = free_space_loss_db(d, sc.frequency)
        for di, a, b in zip(d, pl, fs):
            rows.append(((h,) if len(alts) > 1 else ()) + (di, a, b))
    cols = ('distance_m', 'pl_ptr_db', 'pl_fspl_db')
    if len(alts) > 1:
        cols = ('altitude_m',) + cols
    return _emit(cfg, cols, rows, command='predict')


def cmd_simulate(cfg):
    sc = _scenario(cfg)
    alts = _altitudes(cfg)
    rows = []
    for h in sorted(alts):
        sweep = raycheck.distance_sweep(
            sc.env, h, sc.frequency, sc.d_range, sc.step, sc.realizations,
            sc.seed, sc.polarization, sc.eps_building, sc.eps_ground,
            sc.options, sc.side_d, sc.linear_power, cfg.placement,
            workers=cfg.workers)
        for row in sweep.rows():
            rows.append(((h,) if len(alts) > 1 else ()) + row)
    cols = raycheck.SWEEP_COLUMNS
    if len(alts) > 1:
        cols = ('altitude_m',) + cols
    return _emit(cfg, cols, rows, command='simulate')


def cmd_grprob(cfg):
    altitude = cfg.altitudes_m[0] if cfg.altitudes_m else None
    est = raycheck.estimate_gr_curve(
        cfg.env, sorted(cfg.theta_deg), realizations=cfg.realizations,
        links_per_city=cfg.links_per_city, seed=cfg.seed, altitude=altitude,
        side_d=cfg.side_d_km, workers=cfg.workers)
    return _emit(cfg, raycheck.GR_COLUMNS, (e.row() for e in est),
                 command='grprob')


def _column(table, names, label):
    for name in names:
        if name in table:
            return name, np.array([float(v) for v in table[name]])
    raise ConfigError(f'input has no {label} column (tried {list(names)})',
                      field='column')


def cmd_fit(args):
    table = output.read_table(args.input)
    if args.what == 'shadow_model':
        _, h = _column(table, ('h_m', 'altitude_m'), 'altitude')
        _, sig = _column(table, (args.column,) if args.column else
                         ('sigma_db',), 'sigma')
        fit = stats.fit_shadow_model(h, sig, form=args.form)
        report = stats.fit_report(fit)
    else:
        names = (args.column,) if args.column else ('pl_db', 'pl_ptr_db',
                                                    'sf_db')
        name, data = _column(table, names, 'data')
        if args.what == 'weibull':
            fit = stats.fit_weibull(data)
            report = stats.fit_report(fit, data)
        else:
            if args.detrend:
                _, d = _column(table, ('distance_m',), 'distance')
                data = stats.extract_shadowing(d, data)
            fit = stats.fit_normal(data)
            report = stats.fit_report(fit, data)
        report['column'] = name
    report['input'] = os.path.basename(args.input)
    digest = output.config_hash({'command': 'fit', 'what': args.what,
                                 'form': args.form, 'column': args.column,
                                 'detrend': args.detrend, 'report': report})
    if args.format == 'csv':
        rows = [(k, v) for k, v in report['parameters'].items()]
        rows += [(k, report[k]) for k in ('n', 'ks', 'rmse') if k in report]
        text = output.render_csv(('parameter', 'value'), rows, digest)
    else:
        text = output.render_json(report, digest)
    return output.write_text(args.out, text)


def cmd_generate_city(cfg):
    side = cfg.side_d_km or experiments.CITY_SIDE_KM
    scene = generate_city(cfg.env, side, cfg.seed)
    digest = output.config_hash(cfg.provenance(command='generate-city'))
    return output.write_text(cfg.out,
                             scene.to_json(config_sha256=digest) + '\n')


# --------------------------------------------------------------------------
# Reproduction bundles

def _reference_scenario(cfg, env=None):
    """Reference settings with the user's seed, flags and realization count."""
    return _scenario(
        cfg, env=env or PRESETS['urban'], frequency=experiments.FREQUENCY_HZ,
        d_range=experiments.DISTANCE_RANGE_M, step=experiments.DISTANCE_STEP_M,
        eps_building=experiments.EPS_BUILDING,
        eps_ground=experiments.EPS_GROUND,
        side_d=cfg.side_d_km or experiments.CITY_SIDE_KM)


class Bundle:
    def __init__(self, cfg, directory, figures=True):
        self.cfg = cfg
        self.dir = directory
        self.figures = figures
        self.written = []
        os.makedirs(directory, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def digest(self, figure):
        return output.config_hash(self.cfg.provenance(command='reproduce',
                                                      figure=figure))

    def csv(self, figure, name, columns, rows):
        text = output.render_csv(columns, list(rows), self.digest(figure))
        self.written.append(output.write_text(self.path(name), text))

    def json(self, figure, name, doc):
        text = output.render_json(doc, self.digest(figure))
        self.written.append(output.write_text(self.path(name), text))

    def plot(self, fn, name, *args, **kwargs):
        if self.figures:
            self.written.append(fn(self.path(name), *args, **kwargs))


def _fits_doc(f):
    return {
        'weibull': {'eta': f.weibull.eta, 'nu': f.weibull.nu,
                    'ks': stats.ks_statistic(f.path_loss, f.weibull.cdf)},
        'normal': {'mu': f.normal.mu, 'sigma': f.normal.sigma,
                   'ks': stats.ks_statistic(f.shadowing, f.normal.cdf)},
        'ple': f.log_distance.ple,
        'n': int(f.path_loss.size),
        }


def _reproduce_fig2(b):
    from . import plotting
    thetas = np.arange(0.0, 90.5, 1.0)
    curves = {n: ground_reflection_probability(thetas, e)
              for n, e in PRESETS.items()}
    rows = [(t, *(curves[n][i] for n in PRESETS))
            for i, t in enumerate(thetas)]
    b.csv('fig2', 'fig2_gr_probability.csv',
          ('theta_deg', *(f'p_gr_{n}' for n in PRESETS)), rows)
    if b.figures:
        b.plot(plotting.gr_probability_figure, 'fig2_gr_probability.png',
               thetas, curves)


def _reproduce_fig5(b, key, altitude):
    from . import plotting
    sc = _reference_scenario(b.cfg)
    d, pl = experiments.ptr_curve(sc, altitude)
    _, fs = experiments.fspl_curve(sc)
    sweep = experiments.ray_sweep(sc, altitude)
    b.csv(key, f'{key}_path_loss.csv',
          ('distance_m', 'pl_fspl_db', 'pl_ptr_db', 'pl_ray_db', 'n_blocked'),
          zip(d, fs, pl, sweep.path_loss_db, sweep.tallies[:, 3]))
    b.json(key, f'{key}_summary.json', {
        'altitude_m': altitude,
        'ple': {'fspl': stats.fit_log_distance(d, fs).ple,
                'ptr': stats.fit_log_distance(d, pl).ple,
                'raycheck': stats.fit_log_distance(sweep).ple},
        'raycheck_blocked_links': sweep.n_blocked,
        })
    if b.figures:
        b.plot(plotting.path_loss_figure, f'{key}_path_loss.png', d, fs, pl,
               sweep.path_loss_db, altitude)


def _reproduce_fig6(b):
    from . import plotting
    sc = _reference_scenario(b.cfg)
    d, pl = experiments.ptr_curve(sc, 100.0)
    sweep = experiments.ray_sweep(sc, 100.0)
    ptr = experiments.fit_curve(d, pl)
    ray = experiments.fit_curve(sweep.distances, sweep.path_loss_db)
    ray_sf = np.full(d.shape, np.nan)
    ray_sf[np.isfinite(sweep.path_loss_db)] = ray.shadowing
    b.csv('fig6', 'fig6_samples.csv',
          ('distance_m', 'pl_ptr_db', 'sf_ptr_db', 'pl_ray_db', 'sf_ray_db'),
          zip(d, pl, ptr.shadowing, sweep.path_loss_db, ray_sf))
    b.json('fig6', 'fig6_fits.json', {
        'altitude_m': 100.0,
        'ptr': _fits_doc(ptr),
        'raycheck': _fits_doc(ray),
        'reported': experiments.REPORTED_FITS,
        })
    if b.figures:
        b.plot(plotting.cdf_figure, 'fig6_cdfs.png',
               {'PTR': ptr.path_loss, 'two-ray': ray.path_loss},
               (ptr.weibull, ray.weibull),
               {'PTR': ptr.shadowing, 'two-ray': ray.shadowing},
               (ptr.normal, ray.normal))


def _shadow_studies(cfg):
    studies, ray_sig = [], {}
    for name, env in PRESETS.items():
        sc = _reference_scenario(cfg, env)
        studies.append(experiments.shadow_study(sc))
        ray_sig[name] = experiments.shadowing_vs_altitude(
            sc, source='raycheck')
    return studies, ray_sig


def _reproduce_fig7(b, studies, ray_sig):
    from . import plotting
    rows = []
    for s in studies:
        for h, sig, fit, rs in zip(s.altitudes, s.sigmas, s.fit(s.altitudes),
                                   ray_sig[s.environment]):
            rows.append((s.environment, h, sig, fit, rs))
    b.csv('fig7', 'fig7_sigma_vs_altitude.csv',
          ('environment', 'h_m', 'sigma_db', 'fit_sigma_db',
           'sigma_raycheck_db'), rows)
    if b.figures:
        b.plot(plotting.shadow_figure, 'fig7_sigma_vs_altitude.png', studies,
               experiments.REPORTED_SHADOW_LAW)


def _reproduce_fig8(b, studies):
    from . import plotting
    sub = next(s for s in studies if s.environment == 'suburban')
    power = stats.fit_shadow_model(sub.altitudes, sub.sigmas,
                                   form='power_law')
    b.csv('fig8', 'fig8_shadow_laws.csv',
          ('h_m', 'sigma_db', 'fit_exp_db', 'fit_power_db'),
          zip(sub.altitudes, sub.sigmas, sub.fit(sub.altitudes),
              power(sub.altitudes)))
    b.json('fig8', 'fig8_shadow_laws.json', {
        'environment': 'suburban',
        'exp_decay': stats.fit_report(sub.fit),
        'power_law': stats.fit_report(power),
        })
    if b.figures:
        b.plot(plotting.shadow_law_comparison_figure, 'fig8_shadow_laws.png',
               sub, power)


def _reproduce_table3(b, studies):
    rows = []
    doc = {}
    for s in studies:
        rep = experiments.REPORTED_SHADOW_LAW[s.environment]
        rows.append((s.environment, s.fit.p, s.fit.q, s.fit.r, s.fit.rmse,
                     *rep))
        doc[s.environment] = {
            'fitted': {'p2': s.fit.p, 'q2': s.fit.q, 'r2': s.fit.r,
                       'rmse': s.fit.rmse},
            'reported': dict(zip(('p2', 'q2', 'r2'), rep)),
            }
    b.csv('table3', 'table3_shadow_model.csv',
          ('environment', 'p2', 'q2', 'r2', 'rmse', 'p2_reported',
           'q2_reported', 'r2_reported'), rows)
    b.json('table3', 'table3_shadow_model.json', doc)


def cmd_reproduce(cfg, figure, figures=True):
    b = Bundle(cfg, cfg.out or f'reproduce_{figure}', figures)
    wanted = FIGURES if figure == 'all' else (figure,)
    studies = ray_sig = None
    for fig in wanted:
        if fig == 'fig2':
            _reproduce_fig2(b)
        elif fig == 'fig5a':
            _reproduce_fig5(b, 'fig5a', 50.0)
        elif fig == 'fig5b':
            _reproduce_fig5(b, 'fig5b', 100.0)
        elif fig == 'fig6':
            _reproduce_fig6(b)
        else:
            if studies is None:
                studies, ray_sig = _shadow_studies(cfg)
            if fig == 'fig7':
                _reproduce_fig7(b, studies, ray_sig)
            elif fig == 'fig8':
                _reproduce_fig8(b, studies)
            elif fig == 'table3':
                _reproduce_table3(b, studies)
    return b.written


# --------------------------------------------------------------------------

def _fail(exc, code):
    doc = {'error': type(exc).__name__, 'message': str(exc)}
    if getattr(exc, 'field', None):
        doc['field'] = exc.field
    if isinstance(exc, ConvergenceError) and exc.rmse is not None:
        doc['rmse'] = exc.rmse
    sys.stderr.write(json.dumps(doc) + '\n')
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command == 'fit':
            cmd_fit(args)
            return EXIT_OK
        cfg = resolve_config(args)
        if args.command == 'predict':
            cmd_predict(cfg)
        elif args.command == 'simulate':
            cmd_simulate(cfg)
        elif args.command == 'grprob':
            cmd_grprob(cfg)
        elif args.command == 'generate-city':
            cmd_generate_city(cfg)
        elif args.command == 'reproduce':
            cmd_reproduce(cfg, args.figure, figures=not args.no_figures)
        return EXIT_OK
    except ConfigError as exc:
        return _fail(exc, EXIT_USAGE)
    except ConvergenceError as exc:
        return _fail(exc, EXIT_CONVERGENCE)
    except (DomainError, PTRError, OSError, ValueError) as exc:
        return _fail(exc, EXIT_ERROR)


if __name__ == '__main__':
    sys.exit(main())
