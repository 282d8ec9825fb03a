"""
Command-line driver.

    msgwr fit data.csv --model msgwr
    msgwr simulate --scenario pure-geo --seed 7 --output sim.csv
    msgwr compare data.csv
    msgwr trace run.trace.csv --best

Settings resolve in order: defaults, --config YAML, MSGWR_SEED, command-line flags.
Exit codes: 0 success, 2 input or parameter error, 3 calibration or numeric
error, 4 non-convergence.
"""

import argparse
import sys
from pathlib import Path

import pandas as pd

from .diagnostics import morans_i
from .enum import AlphaSearch, Criterion, Model, Scenario, SOCKind, Standardize
from .errors import CalibrationError, InputError, MSGWRError, NumericError, ParameterError
from .estimators import fit_model
from .hash import generate_run_id
from .io import (RunConfig, load_dataset, load_truth, output_path, standardize, summary_dict, write_coefficients,
                 write_frame, write_simulated, write_summary)
from .logging import LogFileManager, getLogger, set_level
from .model_selection import SearchTrace
from .simulation import GRID_SIDE, NOISE_SD, score_recovery, simulate
from .utils import split_names
from .validation import validate_choice
from .version import __version__

logger = getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CALIBRATION = 3
EXIT_NONCONVERGENCE = 4

COMPARE_COLUMNS = ['model', 'adj_r2', 'aicc', 'rss', 'mae', 'rmse']


class _Outputs:
    """
    Files written by the current command, removed again if it fails.
    """

    def __init__(self):
        self.paths = []

    def add(self, path):
        self.paths.append(Path(path))
        return path

    def cleanup(self):
        for path in self.paths:
            if path.exists():
                path.unlink()
                logger.info(f'Removed partial output {path}.')
        self.paths = []


def _values(enum_cls):
    return [m.value for m in enum_cls]


def _add_common(parser):
    parser.add_argument('--config', help='YAML run configuration')
    parser.add_argument('--log-file', help='also write logs to this file')
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--threads', type=int, help='worker cap for local fits')


def _add_data(parser):
    parser.add_argument('data', help='input CSV with a header row')
    parser.add_argument('--x-col', dest='x_col')
    parser.add_argument('--y-col', dest='y_col')
    parser.add_argument('--response')
    parser.add_argument('--predictors', help='comma separated predictor columns (default: all others)')
    parser.add_argument('--standardize', choices=_values(Standardize))
    parser.add_argument('--criterion', choices=_values(Criterion))
    parser.add_argument('--alpha-search', dest='alpha_search', choices=_values(AlphaSearch))
    parser.add_argument('--epsilon', type=float, help='resolution of the divide-and-conquer alpha search')
    parser.add_argument('--phi', type=float, help='backfitting convergence tolerance')
    parser.add_argument('--soc', choices=_values(SOCKind))
    parser.add_argument('--max-iters', dest='max_iters', type=int)
    parser.add_argument('--bw-min', dest='bw_min', type=int)
    parser.add_argument('--bw-max', dest='bw_max', type=int)
    parser.add_argument('--ridge', action='store_true', default=None, help='ridge fallback for singular local systems')
    parser.add_argument('--moran-k', dest='moran_k', type=int)
    parser.add_argument('--moran-permutations', dest='moran_permutations', type=int)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--out-dir', dest='out_dir', help='output directory (default: next to the input)')
    parser.add_argument('--stem', help='output file stem')
    parser.add_argument('--keep-partial', action='store_true', help='keep outputs of a run that did not converge')


def build_parser():
    parser = argparse.ArgumentParser(prog='msgwr', description='Multiscale similarity and geographically weighted regression.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    fit = sub.add_parser('fit', help='fit one model')
    _add_common(fit)
    _add_data(fit)
    fit.add_argument('--model', choices=_values(Model))
    fit.add_argument('--bandwidths', help="pinned bandwidths, one per covariate or one for all; 'auto' entries are searched")
    fit.add_argument('--alphas', help="pinned alphas, one per covariate or one for all; 'auto' entries are searched")

    sim = sub.add_parser('simulate', help='generate a synthetic dataset')
    _add_common(sim)
    sim.add_argument('--scenario', choices=_values(Scenario), default=Scenario.MIXED.value)
    sim.add_argument('--seed', type=int)
    sim.add_argument('--grid-side', dest='grid_side', type=int, default=GRID_SIDE)
    sim.add_argument('--noise-sd', dest='noise_sd', type=float, default=NOISE_SD)
    sim.add_argument('--output', help='dataset CSV (default: <scenario>-<seed>.csv)')

    compare = sub.add_parser('compare', help='fit every model on one dataset')
    _add_common(compare)
    _add_data(compare)
    compare.add_argument('--models', help='comma separated subset of models (default: all five)')

    trace = sub.add_parser('trace', help='filter a search trace')
    _add_common(trace)
    trace.add_argument('trace_file')
    trace.add_argument('--covariate', type=int)
    trace.add_argument('--iteration', type=int)
    trace.add_argument('--best', action='store_true', help='keep only the lowest-criterion row per covariate and iteration')
    trace.add_argument('--output', help='CSV path (default: stdout)')
    return parser


def _load_config(args):
    config = RunConfig.from_yaml(args.config) if getattr(args, 'config', None) else RunConfig().with_env()
    keys = set(RunConfig.keys()) & set(vars(args))
    return config.with_overrides(**{k: getattr(args, k) for k in keys})


def _parse_pins(text, cast, name):
    if text is None:
        return None
    values = []
    for item in split_names(text):
        if item.lower() in ('auto', 'none', '-'):
            values.append(None)
            continue
        try:
            values.append(cast(item))
        except ValueError:
            raise ParameterError(f'Invalid {name} entry {item!r}.') from None
    return values


def _model_kwargs(config, model, m, bandwidths=None, alphas=None):
    if bandwidths is not None and len(bandwidths) == 1:
        bandwidths = bandwidths * m
    if alphas is not None and len(alphas) == 1:
        alphas = alphas * m
    if model is Model.OLS:
        return {}
    if model in (Model.GWR, Model.SGWR):
        kwargs = {}
        for name, pins in (('bandwidth', bandwidths), ('alpha', alphas)):
            if pins is None:
                continue
            if len(set(pins)) != 1:
                raise ParameterError(f'{model.value} takes a single {name}.')
            if name == 'alpha' and model is Model.GWR:
                continue
            kwargs[name] = pins[0]
        return kwargs
    return {
        'phi': config.phi,
        'soc_kind': config.soc,
        'max_iters': config.max_iters,
        'bandwidths': bandwidths,
        'alphas': alphas,
    }


def _prepare_data(config):
    data = load_dataset(config.data, config.column_spec())
    truth = load_truth(config.data, data)
    record = None
    fit_data = data
    if config.standardize is Standardize.ON or (config.standardize is Standardize.AUTO and truth is None):
        fit_data, record = standardize(data)
        logger.info('Standardized the response and predictors.')
    return data, fit_data, record, truth


def _locations(config, default_stem):
    source = Path(config.data)
    out_dir = Path(config.out_dir) if config.out_dir is not None else source.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = config.stem if config.stem is not None else default_stem
    return out_dir, stem


def _moran(result, data, config):
    k = min(config.moran_k, data.n - 1)
    try:
        return morans_i(result.residuals, data.coords, k=k, permutations=config.moran_permutations, seed=config.seed)
    except NumericError as e:
        logger.warning(f"Moran's I skipped: {e}")
        return None


def _recovery(result, truth, record):
    if truth is None:
        return None
    beta = record.back_transform(result.beta) if record is not None else result.beta
    return score_recovery(truth, beta)


def _report(result, moran):
    line = f'{result.model.value}: {result.criterion.kind.value} = {result.criterion.value:.6g}'
    if result.scales is not None:
        scales = ', '.join(f'{n} (bw {k}, alpha {a:.3f})' for n, k, a in zip(result.names, result.scales.bandwidths, result.scales.alphas))
        line += f'; {scales}'
    print(line)
    if moran is not None:
        print(f"  residual Moran's I = {moran.I:.4f} (E[I] = {moran.expected:.4f}, z = {moran.z:.3f}, p = {moran.p_value:.4g})")


def run_fit(args, config, outputs):
    data, fit_data, record, truth = _prepare_data(config)
    bandwidths = _parse_pins(args.bandwidths, int, 'bandwidth')
    alphas = _parse_pins(args.alphas, float, 'alpha')
    settings = dict(config.to_dict(), bandwidths=bandwidths, alphas=alphas)
    run_id = generate_run_id(fit_data, settings)
    kwargs = _model_kwargs(config, config.model, data.m, bandwidths, alphas)
    result = fit_model(config.model, fit_data, config.fit_options(), **kwargs)

    moran = _moran(result, data, config)
    recovery = _recovery(result, truth, record)
    out_dir, stem = _locations(config, f'{Path(config.data).stem}.{config.model.value}')
    write_coefficients(result, data, outputs.add(output_path(out_dir, stem, 'coefficients')))
    summary = summary_dict(result, run_id, settings, standardization=record, moran=moran, recovery=recovery)
    write_summary(summary, outputs.add(output_path(out_dir, stem, 'summary', '.json')))
    result.trace.to_csv(outputs.add(output_path(out_dir, stem, 'trace')))
    _report(result, moran)
    return EXIT_OK if result.converged else EXIT_NONCONVERGENCE


def run_compare(args, config, outputs):
    data, fit_data, record, truth = _prepare_data(config)
    models = [validate_choice(m, Model, 'model') for m in split_names(args.models)] if args.models else list(Model)
    options = config.fit_options()
    comparison, scales, morans, recoveries = [], [], [], []
    converged = True
    for model in models:
        result = fit_model(model, fit_data, options, **_model_kwargs(config, model, data.m))
        converged = converged and result.converged
        metrics = result.diagnostics
        comparison.append({'model': model.value, 'adj_r2': metrics.adj_r2, 'aicc': metrics.aicc, 'rss': metrics.rss, 'mae': metrics.mae, 'rmse': metrics.rmse})
        for j, name in enumerate(result.names):
            scales.append({
                'model': model.value,
                'covariate': name,
                'bandwidth': result.scales.bandwidths[j] if result.scales is not None else None,
                'alpha': result.scales.alphas[j] if result.scales is not None else None,
                'enp': result.enp_per_covariate[j],
            })
        moran = _moran(result, data, config)
        if moran is not None:
            morans.append(dict(model=model.value, **moran.to_dict()))
        recovery = _recovery(result, truth, record)
        if recovery is not None:
            frame = recovery.to_frame(result.names)
            frame.insert(0, 'model', model.value)
            recoveries.append(frame)
        _report(result, moran)

    out_dir, stem = _locations(config, Path(config.data).stem)
    write_frame(pd.DataFrame(comparison, columns=COMPARE_COLUMNS), outputs.add(output_path(out_dir, stem, 'compare')))
    write_frame(pd.DataFrame(scales, columns=['model', 'covariate', 'bandwidth', 'alpha', 'enp']), outputs.add(output_path(out_dir, stem, 'scales')))
    if morans:
        write_frame(pd.DataFrame(morans), outputs.add(output_path(out_dir, stem, 'moran')))
    if recoveries:
        write_frame(pd.concat(recoveries, ignore_index=True), outputs.add(output_path(out_dir, stem, 'recovery')))
    return EXIT_OK if converged else EXIT_NONCONVERGENCE


def run_simulate(args, config, outputs):
    sim = simulate(args.scenario, seed=config.seed, grid_side=args.grid_side, noise_sd=args.noise_sd)
    path = Path(args.output) if args.output else Path(f'{args.scenario}-{config.seed}.csv')
    path.parent.mkdir(parents=True, exist_ok=True)
    outputs.add(path)
    outputs.add(path.with_suffix('.truth.csv'))
    data_path, sidecar = write_simulated(sim, path)
    print(f'Wrote {data_path} and {sidecar} (n={sim.dataset.n}).')
    return EXIT_OK


def run_trace(args, config, outputs):
    trace = SearchTrace.from_csv(args.trace_file)
    frame = trace.best() if args.best else trace.to_frame()
    if args.covariate is not None:
        frame = frame[frame['covariate'] == args.covariate]
    if args.iteration is not None:
        frame = frame[frame['iteration'] == args.iteration]
    if args.output:
        write_frame(frame, outputs.add(args.output))
    else:
        frame.to_csv(sys.stdout, index=False, float_format='%.17g')
    return EXIT_OK


COMMANDS = {
    'fit': run_fit,
    'compare': run_compare,
    'simulate': run_simulate,
    'trace': run_trace,
}


def main(argv=None):
    """
    :param argv: arguments without the program name, defaults to sys.argv[1:]
    :returns: (int) exit code
    """
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    if args.log_file:
        log_file = Path(args.log_file)
        LogFileManager('msgwr', log_file.name, base_dir=log_file.parent, level=args.log_level).logger

    outputs = _Outputs()
    try:
        config = _load_config(args)
        code = COMMANDS[args.command](args, config, outputs)
    except (InputError, ParameterError) as e:
        logger.error(str(e))
        outputs.cleanup()
        return EXIT_INPUT
    except (CalibrationError, NumericError, MSGWRError) as e:
        logger.error(str(e))
        outputs.cleanup()
        return EXIT_CALIBRATION
    if code == EXIT_NONCONVERGENCE:
        if getattr(args, 'keep_partial', False):
            logger.warning('Run did not converge; outputs kept (--keep-partial).')
        else:
            logger.warning('Run did not converge; outputs removed (use --keep-partial to keep them).')
            outputs.cleanup()
    return code


if __name__ == '__main__':
    sys.exit(main())
