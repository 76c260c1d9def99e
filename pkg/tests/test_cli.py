import os

import pandas as pd
import pytest

from kleinsim.cli import build_parser, main


def test_parser_requires_a_verb():

    with pytest.raises(SystemExit):
        build_parser().parse_args([])

    args = build_parser().parse_args(['frames', '--config', 'a.cfg', '--format', 'ndjson'])
    assert args.verb == 'frames'
    assert args.format == 'ndjson'
    assert args.out == '.'


def test_validate(scenario_file, tmp_path):

    assert main(['validate', '--config', scenario_file('fig2a'), scenario_file('desk_n20')]) == 0

    broken = tmp_path / 'broken.cfg'
    broken.write_text('name = broken\nduration_us = 100\nn_frames = 7\n')
    assert main(['validate', '--config', str(broken)]) == 1

    unknown = tmp_path / 'unknown.cfg'
    unknown.write_text('name = unknown\ncolour = blue\n')
    assert main(['validate', '--config', str(unknown)]) == 1


def test_run(scenario_file, tmp_path):

    assert main(['run', '--config', scenario_file('desk_n20'), '--out', str(tmp_path)]) == 0
    assert (tmp_path / 'desk_n20' / 'report.json').exists()
    assert (tmp_path / 'desk_n20' / 'run.log').exists()


def test_run_with_an_engine_error_exits_with_1(tmp_path):

    config = tmp_path / 'narrow.cfg'
    config.write_text('name = narrow\ngrid_points = 64\nx_min_delta = -4\nx_max_delta = 4\nduration_us = 10\nn_frames = 2\n')

    assert main(['run', '--config', str(config), '--out', str(tmp_path)]) == 1


def test_frames(scenario_file, tmp_path):

    assert main(['frames', '--config', scenario_file('desk_n20'), '--engine', 'dirac', '--format', 'ndjson', '--out', str(tmp_path)]) == 0

    frames = tmp_path / 'desk_n20' / 'frames'
    index = pd.read_csv(str(frames / 'index.csv'))
    assert len(index) == 11
    assert all(os.path.exists(str(frames / filename)) for filename in index['file'])


def test_table_rejects_quadratic_scenarios(scenario_file, tmp_path):

    assert main(['table', '--config', scenario_file('fig3b'), '--out', str(tmp_path)]) == 1


def test_oracle(tmp_path):

    assert main(['oracle', '--out', str(tmp_path)]) == 0

    results = pd.read_csv(str(tmp_path / 'oracle.csv'))
    assert results['passed'].all()
