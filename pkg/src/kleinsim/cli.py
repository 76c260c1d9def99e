"""Command line of kleinsim.

Verbs:
    run       run one or more scenarios and write their artifacts
    frames    run a scenario and write its frames, one file per frame
    table     tabulate the tunneling probabilities of linear scenarios over the engines
    validate  check scenario files without running them
    oracle    run the cross-checks fixing the conventions of the engines
"""

import argparse
import logging
import os
import sys

import pandas as pd

from kleinsim.__pkginfo__ import __description__, __version__
from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.oracle import run_oracle_cases
from kleinsim.kernel.scenario import (ENGINES, FRAME_FORMATS, config_issues, emit_frames, export_table, load_config, run_batch, run_scenario,
                                      tunneling_table)
from kleinsim.utils.logger import setup_logging


def _load(args):

    configs = [load_config(filename) for filename in args.config]
    if getattr(args, 'engine', None) is not None:
        configs = [config.replace(engine=args.engine) for config in configs]

    return configs


def _run(args):

    reports = run_batch(_load(args), args.threads, args.out)

    for report in reports:
        tunneling = report.tunneling['negative_branch']
        logging.info('{} ({}): tunneling {} (analytic {}), position based {:.4f}'.format(report.config.name,
                                                                                       report.config.engine,
                                                                                       'n/a' if tunneling is None else '{:.4f}'.format(tunneling),
                                                                                       'n/a' if report.analytic is None else '{:.4f}'.format(report.analytic),
                                                                                       report.tunneling['position']))

    return 0


def _frames(args):

    for config in _load(args):
        directory = os.path.join(args.out, config.output_dir or config.name)
        report = run_scenario(config, directory)
        paths = emit_frames(report, os.path.join(directory, 'frames'), args.format)
        logging.info('{} frames of {} written to {}'.format(len(paths) - 1, config.name, os.path.dirname(paths[-1])))

    return 0


def _table(args):

    engines = ENGINES if args.engine is None else (args.engine,)
    table = tunneling_table([load_config(filename) for filename in args.config], engines, args.threads, args.out)

    with pd.option_context('display.width', 200, 'display.max_columns', None):
        print(table)

    os.makedirs(args.out, exist_ok=True)
    export_table(table, os.path.join(args.out, 'tunneling.csv'), xlsx=args.xlsx)

    return 0


def _validate(args):

    status = 0
    for filename in args.config:
        try:
            issues = config_issues(load_config(filename))
        except KleinSimError as e:
            issues = [str(e)]

        if issues:
            status = 1
            for issue in issues:
                logging.error('{}: {}'.format(filename, issue))
        else:
            logging.info('{}: valid'.format(filename))

    return status


def _oracle(args):

    results = run_oracle_cases()

    with pd.option_context('display.width', 200, 'display.max_colwidth', 80):
        print(results)

    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        results.to_csv(os.path.join(args.out, 'oracle.csv'), index=False)

    failed = results.loc[~results['passed'], 'description']
    for description in failed:
        logging.error('Oracle case failed: {}'.format(description))

    return 1 if len(failed) else 0


def build_parser():
    """Build the argument parser of the command line.
    """

    parser = argparse.ArgumentParser(prog='kleinsim', description=__description__)
    parser.add_argument('--version', action='version', version='%(prog)s {}'.format(__version__))
    parser.add_argument('--verbose', action='store_true', help='log at DEBUG level')

    subparsers = parser.add_subparsers(dest='verb', required=True)

    run = subparsers.add_parser('run', help='run scenarios')
    run.add_argument('--config', nargs='+', required=True, help='scenario files')
    run.add_argument('--engine', choices=ENGINES, default=None, help='override the engine of the scenarios')
    run.add_argument('--out', default='.', help='root of the output directories')
    run.add_argument('--threads', type=int, default=1, help='number of worker processes')
    run.set_defaults(func=_run)

    frames = subparsers.add_parser('frames', help='run scenarios and write their frames')
    frames.add_argument('--config', nargs='+', required=True, help='scenario files')
    frames.add_argument('--engine', choices=ENGINES, default=None, help='override the engine of the scenarios')
    frames.add_argument('--out', default='.', help='root of the output directories')
    frames.add_argument('--format', choices=FRAME_FORMATS, default='csv', help='frame file format')
    frames.set_defaults(func=_frames)

    table = subparsers.add_parser('table', help='tabulate the tunneling probabilities')
    table.add_argument('--config', nargs='+', required=True, help='free or linear scenario files')
    table.add_argument('--engine', choices=ENGINES, default=None, help='restrict the table to one engine')
    table.add_argument('--out', default='.', help='output directory')
    table.add_argument('--threads', type=int, default=1, help='number of worker processes')
    table.add_argument('--xlsx', action='store_true', help='also write an Excel workbook')
    table.set_defaults(func=_table)

    validate = subparsers.add_parser('validate', help='check scenario files')
    validate.add_argument('--config', nargs='+', required=True, help='scenario files')
    validate.set_defaults(func=_validate)

    oracle = subparsers.add_parser('oracle', help='run the cross-checks')
    oracle.add_argument('--out', default=None, help='directory receiving oracle.csv')
    oracle.set_defaults(func=_oracle)

    return parser


def main(argv=None):
    """Entry point of the command line.

    Returns:
        int: the exit code
    """

    args = build_parser().parse_args(argv)

    setup_logging(args.verbose)

    try:
        return args.func(args)
    except KleinSimError as e:
        logging.error(str(e))
        return 1


if __name__ == '__main__':
    sys.exit(main())
