"""
Command-line interface.

    elliptest test DATA.csv            one dataset; exit 0 accept, 3 reject
    elliptest pairwise DATA.csv        every column pair, Bonferroni-corrected
    elliptest entropy DATA.csv         standalone entropy estimate
    elliptest simulate GRID.yaml       Monte Carlo size/power table
    elliptest settings                 list the simulation settings

Errors exit with status 1 and a message on stderr. Results go to stdout (or
``--output``); logs go to stderr only.
"""

import json
import logging
import sys
from typing import Any, Dict, Optional

import click
import coloredlogs

from . import __version__
from .config import ExperimentGrid, TestConfig, list_presets, preset_path
from .exceptions import ElliptestError
from .inference import apply_jitter, as_data_matrix, pairwise_test, run_test
from .io import parse_matrix, parse_vector, read_matrix
from .kl_entropy import choose_k, entropy_estimate, resolve_weights
from .setting_registry import get_registered_settings_metadata
from .simharness import FORMATS, emit_table, run_grid

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
LOG_FORMAT = '%(asctime)s | %(levelname)s | %(name)s:%(lineno)d | %(message)s'
FAST_B = 25

EXIT_ACCEPT = 0
EXIT_ERROR = 1
EXIT_REJECT = 3


def _setup_logging(ctx: click.Context, verbose: int) -> None:
    level = {0: 'WARNING', 1: 'INFO'}.get(verbose, 'DEBUG')
    package_logger = logging.getLogger('elliptest')
    before = list(package_logger.handlers)
    coloredlogs.install(level=level, logger=package_logger, fmt=LOG_FORMAT, stream=sys.stderr)
    added = [h for h in package_logger.handlers if h not in before]

    def teardown():
        for handler in added:
            package_logger.removeHandler(handler)
        package_logger.setLevel(logging.NOTSET)

    ctx.call_on_close(teardown)


def _weights(value: Optional[str]):
    if value is None or value in ('auto', 'uniform', 'optimal'):
        return value
    return tuple(parse_vector(value))


def run_options(func):
    """Options shared by the commands that run the test."""
    options = [
        click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=0, show_default=True,
                     help='Seed for every random choice (split, debias, jitter).'),
        click.option('--alpha', type=float, default=0.05, show_default=True, help='Test level.'),
        click.option('--B', 'B', type=click.IntRange(min=0), default=100, show_default=True,
                     help='Debias resamples; 0 disables debiasing.'),
        click.option('--k-p', type=int, default=None, help='Neighbor depth for the p-dimensional entropy.'),
        click.option('--k-1', 'k_1', type=int, default=None, help='Neighbor depth for the length entropy.'),
        click.option('--weights-p', default='auto', show_default=True,
                     help='auto, uniform, optimal or comma-separated weights.'),
        click.option('--weights-1', 'weights_1', default='uniform', show_default=True,
                     help='Weights for the length entropy.'),
        click.option('--bandwidth', type=float, default=None, help='KDE bandwidth (default n^-1/5).'),
        click.option('--variance-mode', type=click.Choice(['inflation', 'plugin']), default='inflation',
                     show_default=True),
        click.option('--c-exponent', type=float, default=0.5, show_default=True,
                     help='Exponent of the n^-c term of the plug-in variance.'),
        click.option('--jitter', type=float, default=None,
                     help='Add seeded Uniform(-j, j) noise to break ties.'),
        click.option('--workers', type=click.IntRange(min=1), default=1, show_default=True,
                     help='Worker processes for the debias resamples.'),
        click.option('-o', '--output', type=click.File('w'), default='-', help='Output file (default stdout).'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _config(params: Dict[str, Any]) -> TestConfig:
    return TestConfig(
        k_p=params['k_p'], k_1=params['k_1'],
        weights_p=_weights(params['weights_p']), weights_1=_weights(params['weights_1']),
        bandwidth=params['bandwidth'], B=params['B'], alpha=params['alpha'],
        c_exponent=params['c_exponent'], variance_mode=params['variance_mode'],
        seed=params['seed'], jitter=params['jitter'],
    )


def _write_json(stream, payload: Dict[str, Any]) -> None:
    stream.write(json.dumps({'schema_version': SCHEMA_VERSION, **payload}, indent=2) + '\n')


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.version_option(__version__, prog_name='elliptest')
@click.option('-v', '--verbose', count=True, help='-v for progress, -vv for debug output.')
@click.pass_context
def cli(ctx: click.Context, verbose: int) -> None:
    """KL-divergence test for elliptical distributions."""
    _setup_logging(ctx, verbose)


def _fail(exc: ElliptestError) -> click.ClickException:
    return click.ClickException(f"{type(exc).__name__}: {exc}")


@cli.command('test')
@click.argument('data', type=click.File('r'))
@click.option('--mu', default=None, help='Known mean, e.g. "0,0".')
@click.option('--sigma', default=None, help='Known covariance, rows separated by ";", e.g. "1,0;0,1".')
@click.option('--include-split', is_flag=True, help='Report the row shuffle used for the split.')
@run_options
@click.pass_context
def cmd_test(ctx: click.Context, data, mu, sigma, include_split, output, workers, **params) -> None:
    """Test the rows of DATA (CSV, optional header) for ellipticity.

    Supplying --mu and --sigma runs the known-moments test; otherwise the
    split-sample test estimates them.
    """
    if (mu is None) != (sigma is None):
        raise click.UsageError('--mu and --sigma must be given together')
    try:
        cfg = _config(params)
        X, header = read_matrix(data)
        mu_v = parse_vector(mu) if mu is not None else None
        sigma_m = parse_matrix(sigma) if sigma is not None else None
        result = run_test(X, mu_v, sigma_m, cfg=cfg, workers=workers)
    except ElliptestError as exc:
        raise _fail(exc)
    _write_json(output, {
        'command': 'test',
        'columns': header,
        'known_moments': None if mu_v is None else {'mu': mu_v.tolist(), 'sigma': sigma_m.tolist()},
        'config': cfg.to_dict(),
        'result': result.to_dict(include_split=include_split),
    })
    ctx.exit(EXIT_REJECT if result.reject else EXIT_ACCEPT)


@cli.command('pairwise')
@click.argument('data', type=click.File('r'))
@run_options
@click.pass_context
def cmd_pairwise(ctx: click.Context, data, output, workers, **params) -> None:
    """Split-sample test on every pair of columns of DATA at level alpha / (p(p-1)/2).

    Exits 3 when any pair is rejected.
    """
    try:
        cfg = _config(params)
        X, header = read_matrix(data)
        result = pairwise_test(X, cfg=cfg, workers=workers)
    except ElliptestError as exc:
        raise _fail(exc)
    _write_json(output, {
        'command': 'pairwise',
        'columns': header,
        'config': cfg.to_dict(),
        'result': result.to_dict(),
    })
    ctx.exit(EXIT_REJECT if result.reject.any() else EXIT_ACCEPT)


@cli.command('entropy')
@click.argument('data', type=click.File('r'))
@click.option('--k', type=int, default=None, help='Neighbor depth (default: tuning rule).')
@click.option('--weights', default='auto', show_default=True,
              help='auto, uniform, optimal or comma-separated weights.')
@click.option('--jitter', type=float, default=None, help='Add seeded Uniform(-j, j) noise.')
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=0, show_default=True)
@click.option('--xi', is_flag=True, help='Also report the per-point terms.')
@click.option('-o', '--output', type=click.File('w'), default='-')
def cmd_entropy(data, k, weights, jitter, seed, xi, output) -> None:
    """Weighted Kozachenko-Leonenko entropy (nats) of the rows of DATA."""
    try:
        X, header = read_matrix(data)
        X = apply_jitter(as_data_matrix(X), jitter, seed)
        n, d = X.shape
        rule = _weights(weights)
        if not isinstance(rule, str):
            k = len(rule)
        elif k is None:
            k = choose_k(d, n)
        w = resolve_weights(rule, k, d)
        est = entropy_estimate(X, k, w)
    except ElliptestError as exc:
        raise _fail(exc)
    payload = {
        'command': 'entropy',
        'columns': header,
        'n': n,
        'd': d,
        'k': k,
        'weights': weights,
        'jitter': jitter,
        'seed': seed,
        'h_hat': est.h_hat,
        'weights_used': w.to_dict(),
    }
    if xi:
        payload['xi'] = est.xi.tolist()
    _write_json(output, payload)


@cli.command('simulate')
@click.argument('config', required=False, type=click.Path(exists=True, dir_okay=False))
@click.option('--preset', type=click.Choice(list(list_presets())), default=None, help='Bundled grid.')
@click.option('--format', 'fmt', type=click.Choice(FORMATS), default='csv', show_default=True)
@click.option('--fast', is_flag=True, help=f'Use B={FAST_B} debias resamples.')
@click.option('--reps', type=click.IntRange(min=1), default=None, help='Override the replication count.')
@click.option('--timing', is_flag=True, help='Record wall time per cell (output is then not reproducible).')
@click.option('--workers', type=click.IntRange(min=1), default=None,
              help='Worker processes (default: physical cores, capped by ELLIPTEST_THREADS).')
@click.option('-o', '--output', type=click.File('w'), default='-')
def cmd_simulate(config, preset, fmt, fast, reps, timing, workers, output) -> None:
    """Empirical rejection rates over the grid in CONFIG (YAML) or a --preset."""
    if (config is None) == (preset is None):
        raise click.UsageError('give exactly one of CONFIG or --preset')
    try:
        grid = ExperimentGrid.from_yaml(config or preset_path(preset))
        if fast:
            grid = grid.replace(test=grid.test.replace(B=FAST_B))
        if reps:
            grid = grid.replace(reps=reps)
        table = run_grid(grid, workers=workers, timing=timing)
    except ElliptestError as exc:
        raise _fail(exc)
    output.write(emit_table(table, fmt))


@cli.command('settings')
@click.option('-o', '--output', type=click.File('w'), default='-')
def cmd_settings(output) -> None:
    """List the registered simulation settings and bundled presets."""
    _write_json(output, {
        'command': 'settings',
        'settings': get_registered_settings_metadata(),
        'presets': list(list_presets()),
    })


def main(argv=None) -> None:
    """Console entry point; maps every usage or input error to exit status 1."""
    try:
        code = cli.main(args=argv, prog_name='elliptest', standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        code = EXIT_ERROR
    except click.Abort:
        click.echo('Aborted!', err=True)
        code = EXIT_ERROR
    sys.exit(code if isinstance(code, int) else EXIT_ACCEPT)


if __name__ == '__main__':
    main()
