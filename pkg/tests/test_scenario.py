import glob
import json
import os

import numpy as np
import pandas as pd
import pytest

from kleinsim.kernel.scenario import (ConfigError, ScenarioConfig, ScenarioError, compare_engines, config_issues, emit_frames, export_table,
                                      load_config, parse_config, run_batch, run_scenario, simulate, tunneling_table, validate)
from kleinsim.utils.progress_bar import progress_bar
from kleinsim.utils.signal import l1_distance

SCENARIOS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')

DESK_TEXT = """
# desk check
name = desk
engine = ion-ideal
omega_tilde2_kHz = 22   # linear slope
p0_hbar_per_delta = 1.0
fock_cutoff = 20
duration_us = 20
dt_us = 1
n_frames = 5
grid_points = 256
x_min_delta = -16
x_max_delta = 16
branch_filter = yes
"""


def _read_bytes(paths):

    contents = []
    for path in paths:
        with open(path, 'rb') as fin:
            contents.append(fin.read())

    return contents


def test_parse_config():

    config = parse_config(DESK_TEXT)

    assert config.name == 'desk'
    assert config.output_dir == 'desk'
    assert config.omega_tilde2_kHz == 22.0
    assert config.fock_cutoff == 20
    assert config.branch_filter is True
    assert config.reconstruction is False
    assert config.kind == 'linear'
    assert config.n_steps == 20
    assert config.frame_stride == 5
    np.testing.assert_allclose(config.frame_times, [0.0, 5.0, 10.0, 15.0, 20.0])


@pytest.mark.parametrize('text', ['name = a\nomega_tilde_kHz = 3', 'engine = dirac', 'name = a\nfock_cutoff = many', 'name = a\nname = b'])
def test_invalid_config_text(text):

    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_config_file(tmp_path):

    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'missing.cfg'))


@pytest.mark.parametrize('filename', sorted(glob.glob(os.path.join(SCENARIOS_DIR, '*.cfg'))), ids=os.path.basename)
def test_shipped_scenarios_are_valid(filename):

    config = load_config(filename)

    assert config.name == os.path.splitext(os.path.basename(filename))[0]
    assert config_issues(config) == []
    assert config.frame_times[-1] == pytest.approx(config.duration_us)


def test_config_issues():

    config = parse_config(DESK_TEXT)

    assert config_issues(config.replace(engine='quantum')) == ['unknown engine quantum']
    assert len(config_issues(config.replace(n_frames=4))) == 1
    assert len(config_issues(config.replace(potential='quadratic'))) == 1
    assert len(config_issues(config.replace(recipe='prep2'))) == 1
    assert len(config_issues(config.replace(c_delta_per_us=0.01))) == 1

    with pytest.raises(ConfigError):
        validate(config.replace(grid_points=100))


def test_config_hash():

    config = parse_config(DESK_TEXT)

    assert len(config.config_hash) == 64
    assert config.config_hash == parse_config(DESK_TEXT).config_hash
    assert config.config_hash == config.replace(output_dir='elsewhere').config_hash
    assert config.config_hash != config.replace(engine='dirac').config_hash


def test_dirac_overrides():

    config = parse_config(DESK_TEXT).replace(engine='dirac', c_delta_per_us=0.02, mc2_rad_per_us=0.0)
    params = config.dirac_params()

    assert params.c == 0.02
    assert params.mc2 == 0.0
    assert params.potential.g == pytest.approx(0.044*2.0*np.pi*0.022)


def test_run_scenario_writes_its_artifacts(tmp_path):

    config = parse_config(DESK_TEXT)
    report = run_scenario(config, str(tmp_path))

    for filename in ('report.json', 'summary.csv', 'run.log', 'filtered.csv'):
        assert (tmp_path / filename).exists()

    with open(str(tmp_path / 'report.json'), 'r') as fin:
        data = json.load(fin)

    assert data['config_hash'] == config.config_hash
    assert data['engine'] == 'ion-ideal'
    assert data['frame_times_us'] == [0.0, 5.0, 10.0, 15.0, 20.0]
    assert data['analytic'] == pytest.approx(0.0284, abs=1.0e-4)
    assert data['reference']['numerical'] == pytest.approx(0.07)
    assert set(data['tunneling']) == {'final_negative_population', 'position', 'negative_branch', 'separated'}
    assert data['parameters']['g'] == pytest.approx(0.044*2.0*np.pi*0.022)

    assert len(report.series) == 5
    for label in ('plus', 'minus'):
        assert 0.0 <= report.branch_filter[label]['probability'] <= 1.0

    filtered = pd.read_csv(str(tmp_path / 'filtered.csv'))
    assert list(filtered.columns) == ['x', 'density_plus_filtered', 'density_minus_filtered']


def test_run_without_output_directory():

    report = run_scenario(parse_config(DESK_TEXT).replace(branch_filter=False))

    assert report.branch_filter is None
    assert report.reconstruction is None
    assert report.wall_clock >= 0.0


def test_reconstruction_in_a_run(scenario_file, tmp_path):

    report = run_scenario(load_config(scenario_file('desk_n30')), str(tmp_path))

    assert (tmp_path / 'fringes.csv').exists()
    assert (tmp_path / 'reconstruction.csv').exists()
    assert report.reconstruction['l1_distance'] < 0.02
    assert report.reconstruction['resolution'] == pytest.approx(np.pi/6.0)


def test_engine_errors_carry_the_scenario_context():

    config = parse_config(DESK_TEXT).replace(engine='dirac', x_min_delta=-4.0, x_max_delta=4.0)

    with pytest.raises(ScenarioError) as info:
        run_scenario(config)

    assert 'desk' in str(info.value)


@pytest.mark.parametrize('fmt', ['csv', 'ndjson'])
def test_emit_frames(fmt, tmp_path):

    config = parse_config(DESK_TEXT).replace(branch_filter=False)

    paths = emit_frames(run_scenario(config), str(tmp_path / 'first'), fmt)
    again = emit_frames(run_scenario(config), str(tmp_path / 'second'), fmt)

    assert len(paths) == 6
    assert _read_bytes(paths) == _read_bytes(again)

    index = pd.read_csv(paths[-1])
    assert list(index.columns) == ['frame', 'time_us', 'file']
    np.testing.assert_allclose(index['time_us'], config.frame_times)

    if fmt == 'csv':
        frame = pd.read_csv(paths[0])
    else:
        frame = pd.read_json(paths[0], lines=True)
    assert list(frame.columns) == ['x', 'density', 'density_plus', 'density_minus', 'local_p']
    assert len(frame) == 256


def test_two_frame_run(tmp_path):

    config = parse_config(DESK_TEXT).replace(branch_filter=False, duration_us=2.0, n_frames=2)
    paths = emit_frames(run_scenario(config), str(tmp_path), 'csv')

    assert [os.path.basename(path) for path in paths] == ['frame_0000.csv', 'frame_0001.csv', 'index.csv']

    with pytest.raises(ScenarioError):
        emit_frames(run_scenario(config), str(tmp_path), 'xml')


def test_compare_engines(scenario_file):

    distances = compare_engines(load_config(scenario_file('desk_n20')), engines=('dirac', 'ion-ideal'))

    assert list(distances.columns) == ['time', 'ion-ideal']
    assert len(distances) == 11
    assert distances['ion-ideal'].max() < 1.0e-3


def test_run_batch(tmp_path):

    configs = [parse_config(DESK_TEXT).replace(name=name, output_dir=name, branch_filter=False) for name in ('first', 'second')]

    steps = []
    progress_bar.set_callback(lambda step, n_steps: steps.append((step, n_steps)))
    try:
        reports = run_batch(configs, threads=2, root=str(tmp_path))
    finally:
        progress_bar.set_callback(None)

    assert steps == [(1, 2), (2, 2)]

    assert [report.config.name for report in reports] == ['first', 'second']
    assert (tmp_path / 'first' / 'report.json').exists()
    assert (tmp_path / 'second' / 'report.json').exists()


def test_tunneling_table(tmp_path):

    config = parse_config(DESK_TEXT).replace(branch_filter=False)
    table = tunneling_table([config], engines=('dirac',))

    assert list(table.index) == [22.0]
    assert table.loc[22.0, 'analytic'] == pytest.approx(0.028)
    assert table.loc[22.0, 'reported measured'] == pytest.approx(0.1)
    assert 'dirac - reported numerical' in table

    filename = str(tmp_path / 'tunneling.csv')
    export_table(table, filename, xlsx=True)
    assert os.path.exists(filename)
    assert pd.read_excel(str(tmp_path / 'tunneling.xlsx'), sheet_name='tunneling', index_col=0).shape == table.shape

    with pytest.raises(ScenarioError):
        tunneling_table([config.replace(potential='quadratic', omega2_kHz=33.0)])


@pytest.mark.slow
def test_free_packet_moves_right(scenario_file):

    report = run_scenario(load_config(scenario_file('fig2a')))
    mean_x = report.series.observable('mean_x')

    assert mean_x[-1] > mean_x[0]
    assert report.tunneling['separated']
    assert report.tunneling['negative_branch'] == pytest.approx(0.0, abs=0.02)


@pytest.mark.slow
def test_weak_slope_reflects(scenario_file):

    report = run_scenario(load_config(scenario_file('fig2b')))

    assert report.tunneling['separated']
    assert report.tunneling['negative_branch'] < 0.07


@pytest.mark.slow
@pytest.mark.parametrize('name', ['fig2c', 'fig2d'])
def test_steep_slopes_follow_landau_zener(name, scenario_file):

    report = run_scenario(load_config(scenario_file(name)))

    assert report.tunneling['negative_branch'] == pytest.approx(report.analytic, abs=0.05)


@pytest.mark.slow
def test_confinement_slows_the_spreading(scenario_file):

    free = run_scenario(load_config(scenario_file('fig3a')))
    confined = run_scenario(load_config(scenario_file('fig3b')))

    assert np.all(np.diff(free.series.observable('variance_x')) > 0.0)
    assert confined.series[-1].variance_x < free.series[-1].variance_x
    assert free.reconstruction['l1_distance'] < 0.05
    assert confined.reconstruction['l1_distance'] < 0.05


@pytest.mark.slow
def test_kicked_packet_oscillates(scenario_file):

    report = run_scenario(load_config(scenario_file('fig3c')))

    assert report.oscillation['sign_changes'] >= 2
    assert report.reconstruction['l1_distance'] < 0.05


def test_doubling_the_cutoff_leaves_the_densities_unchanged(scenario_file):

    config = load_config(scenario_file('desk_n20')).replace(fock_cutoff=30)

    coarse = simulate(config)
    fine = simulate(config.replace(fock_cutoff=60))

    assert len(coarse) == len(fine) == 11
    for first, second in zip(coarse, fine):
        assert l1_distance(first.density, second.density, coarse.grid.dx) < 1.0e-6


@pytest.mark.slow
@pytest.mark.parametrize('name, duration', [('fig2a', None), ('fig2b', None), ('fig3a', None), ('fig3b', None), ('fig3c', 1500.0)])
def test_emulator_follows_the_dirac_engine(name, duration, scenario_file):

    config = load_config(scenario_file(name))
    if duration is not None:
        config = config.replace(duration_us=duration)

    distances = compare_engines(config, engines=('dirac', 'ion-ideal'))

    assert len(distances) == config.n_frames
    assert distances['ion-ideal'].max() < 0.05


@pytest.mark.slow
def test_branch_filter_separates_the_reflected_and_transmitted_packets(scenario_file, tmp_path):

    report = run_scenario(load_config(scenario_file('fig2d')), str(tmp_path))
    filtered = pd.read_csv(str(tmp_path / 'filtered.csv'))
    dx = filtered['x'][1] - filtered['x'][0]

    # reflected packet on the positive branch, transmitted one on the negative branch
    assert np.sum(filtered['x']*filtered['density_plus_filtered'])*dx < 0.0
    assert np.sum(filtered['x']*filtered['density_minus_filtered'])*dx > 0.0
    assert report.branch_filter['plus']['probability'] == pytest.approx(1.0 - report.tunneling['final_negative_population'], abs=0.02)
    assert report.branch_filter['minus']['probability'] == pytest.approx(report.tunneling['final_negative_population'], abs=0.02)


@pytest.mark.slow
def test_steepest_slope_with_lamb_dicke_corrections(scenario_file):

    config = load_config(scenario_file('fig2d')).replace(engine='ion-corrected', branch_filter=False)
    report = run_scenario(config)

    assert report.series.engine == 'ion-corrected'
    assert report.tunneling['final_negative_population'] == pytest.approx(report.analytic, abs=0.1)
