# -*- coding: utf-8 -*-

"""The ``bench`` command-line program with the sub-commands

    bench run <config>            run the evaluation protocol
    bench synth <spec>            write a synthetic data set
    bench compare-multi <config>  compare multivariate and univariate DGM2

The exit code is 0 on success, 2 for invalid configurations and unloadable
data, and 1 for any other failure.
"""

import argparse
import logging
import sys

from mtsclust.bench.config import (
    ConfigInvalidError,
    ExperimentConfig,
    SynthConfig
)
from mtsclust.bench.experiment import (
    run_experiment,
    run_multivariate_comparison
)
from mtsclust.bench.report import emit_report
from mtsclust.core.config import (
    CFG,
    set_ncpu
)
from mtsclust.core.debugging import (
    enable_tracing,
    get_logger,
    setup_console_handler,
    setup_file_handler,
    setup_logger
)
from mtsclust.core.storage import DataLoadError
from mtsclust.core.synthgen import write_synth_dataset


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2

logger = get_logger(__name__)


def _setup_logging(args):
    level = getattr(logging, args.log_level.upper())
    setup_logger('mtsclust', level)
    setup_console_handler('mtsclust', level, stream=sys.stderr)
    if(args.log_file is not None):
        setup_file_handler(
            'mtsclust', args.log_file, log_level=logging.DEBUG)
    if(args.trace):
        enable_tracing()


def _cmd_run(args):
    config = ExperimentConfig.from_file(args.config)
    if(args.out_dir is not None):
        config.out_dir = args.out_dir
    logger.info('Running %r.', config)
    report = run_experiment(config)
    return emit_report(
        report, config.out_dir, config.formats, config.report_timing)


def _cmd_compare_multi(args):
    config = ExperimentConfig.from_file(args.config)
    if(args.out_dir is not None):
        config.out_dir = args.out_dir
    logger.info('Running the multivariate comparison of %r.', config)
    report = run_multivariate_comparison(config)
    return emit_report(
        report, config.out_dir, config.formats, config.report_timing)


def _cmd_synth(args):
    spec = SynthConfig.from_file(args.spec)
    out_dir = args.out_dir if args.out_dir is not None else spec.out_dir
    if(out_dir is None):
        raise ConfigInvalidError(
            'The output directory must be given by the out_dir key or the '
            '--out-dir option!')
    (data, truth, dim_names) = spec.generate()
    return list(write_synth_dataset(out_dir, data, truth, dim_names))


def create_argparser():
    parser = argparse.ArgumentParser(
        prog='bench',
        description='Benchmarks of static and dynamic clustering forecasters '
                    'for multivariate time series.')
    parser.add_argument(
        '--log-level', default='info',
        choices=['debug', 'info', 'warning', 'error'],
        help='The level of the log messages printed to stderr.')
    parser.add_argument(
        '--log-file', default=None,
        help='An optional file receiving all debug log messages.')
    parser.add_argument(
        '--trace', action='store_true',
        help='Enable the per-iteration trace log messages.')
    parser.add_argument(
        '--ncpu', type=int, default=None,
        help='The number of processes running benchmark rows.')
    parser.add_argument(
        '--cfg', default=None,
        help='An optional YAML file updating the global configuration.')

    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', help='Run the evaluation protocol.')
    p.add_argument('config', help='The experiment config file.')
    p.add_argument('--out-dir', default=None,
                   help='Overrides the out_dir of the config.')
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser('synth', help='Write a synthetic data set.')
    p.add_argument('spec', help='The synthetic data config file.')
    p.add_argument('--out-dir', default=None,
                   help='Overrides the out_dir of the synthetic data config.')
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser(
        'compare-multi',
        help='Compare a multivariate DGM2 model with combined univariate '
             'ones.')
    p.add_argument('config', help='The experiment config file.')
    p.add_argument('--out-dir', default=None,
                   help='Overrides the out_dir of the config.')
    p.set_defaults(func=_cmd_compare_multi)

    return parser


def main(argv=None):
    """Runs the program and returns its exit code.
    """
    args = create_argparser().parse_args(argv)
    _setup_logging(args)

    try:
        if(args.cfg is not None):
            CFG.from_yaml(args.cfg)
        if(args.ncpu is not None):
            set_ncpu(args.ncpu)
        files = args.func(args)
    except (ConfigInvalidError, DataLoadError) as exc:
        logger.error('%s: %s', type(exc).__name__, exc)
        return EXIT_INVALID
    except Exception as exc:
        logger.exception('The command "%s" failed: %s', args.command, exc)
        return EXIT_FAILURE

    for path in files:
        print(path)
    return EXIT_OK


if(__name__ == '__main__'):
    sys.exit(main())
