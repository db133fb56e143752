"""Matplotlib renderings of the reproduction outputs.

Figures are written with the Agg backend and without a software/date
stamp, so a given input produces byte-identical PNG files.
"""

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import stats  # noqa: E402

STYLE = {
    'figure.figsize': (5.0, 3.6),
    'font.size': 9,
    'axes.labelsize': 9,
    'axes.grid': True,
    'grid.alpha': 0.3,
    'legend.fontsize': 8,
    'legend.frameon': False,
    'lines.linewidth': 1.2,
    'savefig.dpi': 120,
    'svg.hashsalt': 'ptrchannel',
    }

ENV_COLORS = {
    'suburban': 'tab:green',
    'urban': 'tab:blue',
    'dense-urban': 'tab:orange',
    'high-rise': 'tab:red',
    }


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={'Software': None})
    plt.close(fig)
    return path


def path_loss_figure(path, distances, fspl, ptr, ray=None, altitude=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(distances, fspl, 'k--', label='FSPL')
        ax.plot(distances, ptr, color='tab:blue', label='PTR model')
        if ray is not None:
            ax.plot(distances, ray, color='tab:red', alpha=0.8,
                    label='geometric two-ray')
        ax.set_xlabel('Distance (m)')
        ax.set_ylabel('Path loss (dB)')
        if altitude is not None:
            ax.set_title(f'h = {altitude:g} m')
        ax.legend()
        return _save(fig, path)


def _cdf_panel(ax, samples, fits, xlabel):
    for (label, data), fit, color in zip(samples.items(), fits,
                                         ('tab:blue', 'tab:red')):
        xs, ys = stats.ecdf(data).steps()
        ax.step(xs, ys, where='post', color=color, label=f'{label} data')
        grid = np.linspace(xs.min(), xs.max(), 300)
        ax.plot(grid, fit.cdf(grid), '--', color=color, label=f'{label} fit')
    ax.set_xlabel(xlabel)
    ax.set_ylabel('CDF')
    ax.legend()


def cdf_figure(path, path_loss, pl_fits, shadowing, sf_fits):
    """Two panels: path-loss CDF with Weibull fits, shadowing with Normal."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
        _cdf_panel(axes[0], path_loss, pl_fits, 'Path loss (dB)')
        _cdf_panel(axes[1], shadowing, sf_fits, 'Shadow fading (dB)')
        return _save(fig, path)


def gr_probability_figure(path, thetas, curves, estimates=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, p in curves.items():
            ax.plot(thetas, p, color=ENV_COLORS.get(name), label=name)
        for name, pts in (estimates or {}).items():
            th, p, err = (np.asarray(v) for v in zip(*pts))
            ax.errorbar(th, p, yerr=2 * err, fmt='o', ms=3,
                        color=ENV_COLORS.get(name))
        ax.set_xlabel('Elevation angle (deg)')
        ax.set_ylabel('Ground reflection probability')
        ax.set_xlim(0, 90)
        ax.set_ylim(0, 1.02)
        ax.legend()
        return _save(fig, path)


def shadow_figure(path, studies, reported=None):
    """One panel per environment: extracted sigma(h) and fitted law."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(8.0, 6.0))
        for ax, study in zip(axes.ravel(), studies):
            h = study.altitudes
            grid = np.linspace(h.min(), h.max(), 200)
            color = ENV_COLORS.get(study.environment)
            ax.plot(h, study.sigmas, 'o', color=color, ms=4, label='extracted')
            ax.plot(grid, study.fit(grid), color=color, label='fit')
            if reported and study.environment in reported:
                p, q, r = reported[study.environment]
                ax.plot(grid, stats.shadow_exp_decay(grid, p, q, r), 'k:',
                        label='reported')
            ax.set_title(study.environment)
            ax.set_xlabel('Altitude (m)')
            ax.set_ylabel('sigma (dB)')
            ax.legend()
        return _save(fig, path)


def shadow_law_comparison_figure(path, study, power_fit):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        h = study.altitudes
        grid = np.linspace(h.min(), h.max(), 200)
        ax.plot(h, study.sigmas, 'ko', ms=4, label='extracted')
        ax.plot(grid, study.fit(grid), color='tab:blue',
                label='p exp(-q h) + r')
        ax.plot(grid, power_fit(grid), '--', color='tab:red',
                label='p h^-q + r')
        ax.set_xlabel('Altitude (m)')
        ax.set_ylabel('sigma (dB)')
        ax.set_title(study.environment)
        ax.legend()
        return _save(fig, path)
