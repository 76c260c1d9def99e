"""Config driven experiment harness: runs a scenario on one engine and writes its artifacts.
"""

import collections
import concurrent.futures
import configparser
import dataclasses
import hashlib
import json
import logging
import os
import time

import numpy as np
import pandas as pd

from kleinsim.kernel.analytic import (REFERENCE_SLOPES_KHZ, REFERENCE_TUNNELING, SCENARIO_KINDS, IonParams, klein_gamma, map_ion_to_dirac,
                                      scenario_kind, tunnel_prob_analytic)
from kleinsim.kernel.dirac import (LinearPotential, NotSeparatedError, QuadraticPotential, kick_spinor, make_gaussian_spinor, position_tunnel_probability,
                                   record_frames, rotate_internal, tunnel_probability)
from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.fock import RECIPES, Recipe, build_hamiltonian, decode_spinor, encode_spinor, prepare_initial, record_fock_frames
from kleinsim.kernel.grid import Grid
from kleinsim.kernel.reconstruction import acquire_fringes, filter_energy_branch, invert_fringes
from kleinsim.utils.logger import RunLogHandler
from kleinsim.utils.progress_bar import progress_bar
from kleinsim.utils.signal import count_sign_changes, l1_distance, oscillation_period

ENGINES = ('dirac', 'ion-ideal', 'ion-corrected')

FRAME_FORMATS = ('csv', 'ndjson')

# The recognised keys of a scenario file with their type
CONFIG_KEYS = collections.OrderedDict()
CONFIG_KEYS['name'] = str
CONFIG_KEYS['engine'] = str
CONFIG_KEYS['potential'] = str
CONFIG_KEYS['recipe'] = str
CONFIG_KEYS['eta'] = float
CONFIG_KEYS['delta_nm'] = float
CONFIG_KEYS['omega1_kHz'] = float
CONFIG_KEYS['omega_tilde1_kHz'] = float
CONFIG_KEYS['omega_tilde2_kHz'] = float
CONFIG_KEYS['omega2_kHz'] = float
CONFIG_KEYS['omega_prep2_kHz'] = float
CONFIG_KEYS['prep_duration_us'] = float
CONFIG_KEYS['p0_hbar_per_delta'] = float
CONFIG_KEYS['fock_cutoff'] = int
CONFIG_KEYS['duration_us'] = float
CONFIG_KEYS['dt_us'] = float
CONFIG_KEYS['n_frames'] = int
CONFIG_KEYS['grid_points'] = int
CONFIG_KEYS['x_min_delta'] = float
CONFIG_KEYS['x_max_delta'] = float
CONFIG_KEYS['reconstruction'] = bool
CONFIG_KEYS['branch_filter'] = bool
CONFIG_KEYS['output_dir'] = str
CONFIG_KEYS['c_delta_per_us'] = float
CONFIG_KEYS['mc2_rad_per_us'] = float


class ScenarioError(KleinSimError):
    """Error handler for scenario related exceptions.
    """


class ConfigError(ScenarioError):
    """Raised for unreadable or inconsistent scenario files.
    """


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    """A scenario: the engine, the laboratory parameters, the preparation and the run layout.

    Field names are the keys of the scenario files, units are encoded in the names.
    """

    name: str
    engine: str = 'dirac'
    potential: str = None
    recipe: str = 'momentum_kick'
    eta: float = 0.044
    delta_nm: float = 7.0
    omega1_kHz: float = 1.3
    omega_tilde1_kHz: float = 17.5
    omega_tilde2_kHz: float = 0.0
    omega2_kHz: float = 0.0
    omega_prep2_kHz: float = 0.0
    prep_duration_us: float = 16.0
    p0_hbar_per_delta: float = 0.0
    fock_cutoff: int = 256
    duration_us: float = 1500.0
    dt_us: float = 1.0
    n_frames: int = 16
    grid_points: int = 2048
    x_min_delta: float = -64.0
    x_max_delta: float = 64.0
    reconstruction: bool = False
    branch_filter: bool = False
    output_dir: str = None
    c_delta_per_us: float = None
    mc2_rad_per_us: float = None

    @property
    def config_hash(self):
        """Return the SHA-256 of the canonical key/value text of the numerical inputs.
        """

        lines = ['{} = {!r}'.format(key, getattr(self, key)) for key in sorted(CONFIG_KEYS) if key != 'output_dir']

        return hashlib.sha256('\n'.join(lines).encode('utf-8')).hexdigest()

    def dirac_params(self):
        """Return the simulated physics, with the optional overrides of c and mc2.
        """

        params = map_ion_to_dirac(self.ion_params(), self.kind)

        changes = {}
        if self.c_delta_per_us is not None:
            changes['c'] = self.c_delta_per_us
        if self.mc2_rad_per_us is not None:
            changes['mc2'] = self.mc2_rad_per_us

        return dataclasses.replace(params, **changes) if changes else params

    @property
    def frame_stride(self):

        return self.n_steps//(self.n_frames - 1)

    @property
    def frame_times(self):
        """Return the times of the frames in us (uniform sampling of the run).
        """

        return np.arange(self.n_frames)*self.frame_stride*self.dt_us

    def grid(self):

        return Grid(self.grid_points, self.x_min_delta, self.x_max_delta)

    def ion_params(self):

        return IonParams.from_kilohertz(eta=self.eta,
                                        delta_nm=self.delta_nm,
                                        omega_tilde1=self.omega_tilde1_kHz,
                                        omega1=self.omega1_kHz,
                                        omega_tilde2=self.omega_tilde2_kHz,
                                        omega2=self.omega2_kHz,
                                        omega_prep2=self.omega_prep2_kHz,
                                        fock_cutoff=self.fock_cutoff)

    @property
    def kind(self):
        """Return the potential of the scenario, inferred from the frequencies when not given.
        """

        if self.potential is not None:
            return self.potential

        return scenario_kind(self.ion_params())

    @property
    def n_steps(self):

        return int(round(self.duration_us/self.dt_us))

    def recipe_spec(self):

        return Recipe(self.recipe, p0=self.p0_hbar_per_delta, duration=self.prep_duration_us)

    def replace(self, **changes):

        return dataclasses.replace(self, **changes)

    def to_dict(self):

        return dataclasses.asdict(self)


def parse_config(text, source='<string>'):
    """Parse the flat key = value text of a scenario.

    Args:
        text (str): the text
        source (str): the origin of the text used in the error messages

    Returns:
        kleinsim.kernel.scenario.ScenarioConfig: the scenario
    """

    parser = configparser.ConfigParser(inline_comment_prefixes=('#',))
    # Keys carry their units, e.g. omega_tilde2_kHz
    parser.optionxform = str

    try:
        parser.read_string('[scenario]\n' + text, source=source)
    except configparser.Error as e:
        raise ConfigError('Can not parse {}: {}'.format(source, e)) from e

    section = parser['scenario']

    unknown = [key for key in section if key not in CONFIG_KEYS]
    if unknown:
        raise ConfigError('Unknown keys in {}: {}'.format(source, ', '.join(unknown)))

    values = {}
    for key in section:
        kind = CONFIG_KEYS[key]
        try:
            if kind is bool:
                values[key] = section.getboolean(key)
            elif kind is str:
                values[key] = section[key].strip()
            else:
                values[key] = kind(section[key])
        except ValueError as e:
            raise ConfigError('Invalid value for {} in {}: {}'.format(key, source, e)) from e

    if 'name' not in values:
        raise ConfigError('Missing name in {}'.format(source))

    values.setdefault('output_dir', values['name'])

    return ScenarioConfig(**values)


def load_config(filename):
    """Read a scenario file.
    """

    try:
        with open(filename, 'r') as fin:
            text = fin.read()
    except OSError as e:
        raise ConfigError('Can not read {}'.format(filename)) from e

    return parse_config(text, source=filename)


def config_issues(config):
    """Return the list of the inconsistencies of a scenario, empty for a valid one.
    """

    issues = []

    if config.engine not in ENGINES:
        issues.append('unknown engine {}'.format(config.engine))

    if config.recipe not in RECIPES:
        issues.append('unknown recipe {}'.format(config.recipe))
    elif config.recipe != 'momentum_kick' and config.omega_prep2_kHz <= 0.0:
        issues.append('the {} recipe needs omega_prep2_kHz > 0'.format(config.recipe))

    if config.potential is not None and config.potential not in SCENARIO_KINDS:
        issues.append('unknown potential {}'.format(config.potential))
    elif config.potential == 'free' and config.omega_tilde2_kHz != 0.0:
        issues.append('the free potential needs omega_tilde2_kHz = 0')
    elif config.potential == 'linear' and (config.omega_tilde2_kHz <= 0.0 or config.omega2_kHz != 0.0):
        issues.append('the linear potential needs omega_tilde2_kHz > 0 and omega2_kHz = 0')
    elif config.potential == 'quadratic' and (config.omega_tilde2_kHz <= 0.0 or config.omega2_kHz <= 0.0):
        issues.append('the quadratic potential needs omega_tilde2_kHz > 0 and omega2_kHz > 0')

    if not 0.0 < config.eta < 0.3:
        issues.append('eta must be in (0,0.3)')

    if config.omega_tilde1_kHz <= 0.0:
        issues.append('omega_tilde1_kHz must be positive')

    if config.fock_cutoff < 8:
        issues.append('fock_cutoff must be at least 8')

    if config.dt_us <= 0.0 or config.duration_us <= 0.0:
        issues.append('duration_us and dt_us must be positive')
    elif abs(config.duration_us/config.dt_us - config.n_steps) > 1.0e-9*config.n_steps:
        issues.append('duration_us must be a multiple of dt_us')
    elif config.n_frames < 2:
        issues.append('n_frames must be at least 2')
    elif config.n_steps % (config.n_frames - 1):
        issues.append('the {} steps can not be split into {} frame intervals'.format(config.n_steps, config.n_frames - 1))

    if config.grid_points < 16 or config.grid_points & (config.grid_points - 1):
        issues.append('grid_points must be a power of two >= 16')

    if config.x_max_delta <= config.x_min_delta:
        issues.append('x_max_delta must be larger than x_min_delta')

    if config.engine != 'dirac' and (config.c_delta_per_us is not None or config.mc2_rad_per_us is not None):
        issues.append('c_delta_per_us and mc2_rad_per_us only apply to the dirac engine')

    return issues


def validate(config):
    """Raise ConfigError when a scenario is inconsistent.
    """

    issues = config_issues(config)
    if issues:
        raise ConfigError('Invalid scenario {}: {}'.format(config.name, '; '.join(issues)))


def initial_spinor(config, grid):
    """Return the Dirac side image of the preparation recipe of a scenario.
    """

    recipe = config.recipe_spec()

    if recipe.kind == 'momentum_kick':
        return make_gaussian_spinor(grid, p0=recipe.p0, internal=(1.0, 1.0))

    state = rotate_internal(make_gaussian_spinor(grid, internal=(1.0, 0.0)), recipe.preparation_kick(config.ion_params()))
    if recipe.kind == 'prep2_plus_kick':
        state = kick_spinor(state, recipe.p0)

    return state


def simulate(config):
    """Run the engine of a scenario and return its frames.
    """

    grid = config.grid()
    params = config.dirac_params()

    if config.engine == 'dirac':
        state = initial_spinor(config, grid)
        return record_frames(state, params, config.dt_us, config.n_steps, config.frame_stride)

    ion = config.ion_params()
    mode = 'corrected' if config.engine == 'ion-corrected' else 'ideal'
    hamiltonian = build_hamiltonian(ion, config.kind, lamb_dicke_mode=mode)
    state = prepare_initial(ion, config.recipe_spec(), config.kind)

    return record_fock_frames(state, hamiltonian, grid, params, config.dt_us, config.n_steps, config.frame_stride, engine=config.engine)


def analytic_prediction(params):
    """Return the Landau-Zener prediction for the physics of a run, 0 without potential and None for a quadratic one.
    """

    if params.potential is None:
        return 0.0

    if isinstance(params.potential, LinearPotential):
        return tunnel_prob_analytic(klein_gamma(params.mc2, params.c, params.potential.g))

    return None


def reference_values(config):
    """Return the reported tunneling probabilities of the linear slope matching a scenario, if any.
    """

    if config.kind == 'quadratic':
        return None

    for i, slope in enumerate(REFERENCE_SLOPES_KHZ):
        if np.isclose(slope, config.omega_tilde2_kHz):
            return {label: values[i] for label, values in REFERENCE_TUNNELING.items()}

    return None


@dataclasses.dataclass(eq=False)
class RunReport:
    """The outcome of a scenario run.
    """

    config: ScenarioConfig
    series: object
    tunneling: dict
    analytic: float
    wall_clock: float
    reconstruction: dict = None
    branch_filter: dict = None
    oscillation: dict = None
    reference: dict = None

    @property
    def config_hash(self):

        return self.config.config_hash

    def parameters(self):
        """Return the echo of the parameters of the run, laboratory and simulated.
        """

        params = self.series.params
        potential = params.potential
        echo = dict(self.config.to_dict())
        echo['c'] = params.c
        echo['mc2'] = params.mc2
        echo['g'] = potential.g if isinstance(potential, LinearPotential) else None
        echo['q'] = potential.q if isinstance(potential, QuadraticPotential) else None

        return echo

    def to_dict(self):

        return {'name': self.config.name,
                'engine': self.config.engine,
                'config_hash': self.config_hash,
                'parameters': self.parameters(),
                'frame_times_us': [float(t) for t in self.series.times],
                'tunneling': self.tunneling,
                'analytic': self.analytic,
                'reference': self.reference,
                'reconstruction': self.reconstruction,
                'branch_filter': self.branch_filter,
                'oscillation': self.oscillation,
                'wall_clock_s': self.wall_clock}

    def write(self, directory):
        """Write report.json and the summary of the frames into a directory.
        """

        os.makedirs(directory, exist_ok=True)

        with open(os.path.join(directory, 'report.json'), 'w') as fout:
            json.dump(self.to_dict(), fout, indent=2, sort_keys=True)

        self.series.summary().to_csv(os.path.join(directory, 'summary.csv'), index=False, float_format='%.12e')


def _tunneling_estimates(series):

    final = series[-1]
    estimates = {'final_negative_population': float(final.negative_population),
                 'position': position_tunnel_probability(series)}
    try:
        estimates['negative_branch'] = tunnel_probability(series)
        estimates['separated'] = True
    except NotSeparatedError as e:
        logging.warning(str(e))
        estimates['negative_branch'] = None
        estimates['separated'] = False

    return estimates


def _final_fock_state(config, series):

    if config.engine == 'dirac':
        return encode_spinor(series.final_state, config.fock_cutoff)

    return series.final_state


def _reconstruct(config, series, directory):

    grid = series.grid
    final = series[-1]
    scan = acquire_fringes(_final_fock_state(config, series))
    reconstructed = invert_fringes(scan, grid)
    distance = l1_distance(reconstructed.density, final.density, grid.dx)
    logging.info('Reconstruction of {}: L1 distance {:.4f} to the decoded density'.format(config.name, distance))

    if directory is not None:
        scan.to_csv(os.path.join(directory, 'fringes.csv'))
        data = pd.DataFrame({'x': grid.x, 'density': reconstructed.density, 'raw': reconstructed.raw, 'direct': final.density})
        data.to_csv(os.path.join(directory, 'reconstruction.csv'), index=False, float_format='%.12e')

    return {'l1_distance': distance, 'negativity': reconstructed.negativity, 'resolution': reconstructed.resolution}


def _filter_branches(config, series, directory):

    grid = series.grid
    fock = _final_fock_state(config, series)

    outcome = {}
    densities = {'x': grid.x}
    for branch, label in ((1, 'plus'), (-1, 'minus')):
        result = filter_energy_branch(fock, branch, series.params)
        density = decode_spinor(result.state, grid, purity_threshold=1.0).density()
        densities['density_{}_filtered'.format(label)] = density/grid.integrate(density)
        outcome[label] = {'probability': result.probability, 'entangled': result.entangled, 'leakage': result.leakage}

    if directory is not None:
        pd.DataFrame(densities).to_csv(os.path.join(directory, 'filtered.csv'), index=False, float_format='%.12e')

    return outcome


def _oscillation(series):

    mean_x = series.observable('mean_x')
    times = series.times
    dead_band = 1.0e-3*np.max(np.abs(mean_x))

    return {'sign_changes': count_sign_changes(mean_x, dead_band),
            'period_us': float(oscillation_period(mean_x, times[1] - times[0]))}


def run_scenario(config, directory=None):
    """Run a scenario.

    Args:
        config (kleinsim.kernel.scenario.ScenarioConfig): the scenario
        directory (str): the directory receiving the artifacts, nothing is written when None

    Returns:
        kleinsim.kernel.scenario.RunReport: the report
    """

    validate(config)

    handler = RunLogHandler()
    logging.getLogger().addHandler(handler)

    try:
        if directory is not None:
            os.makedirs(directory, exist_ok=True)

        logging.info('Running scenario {} on the {} engine (config hash {})'.format(config.name, config.engine, config.config_hash[:12]))
        start = time.time()

        series = simulate(config)

        report = RunReport(config=config,
                           series=series,
                           tunneling=_tunneling_estimates(series),
                           analytic=analytic_prediction(series.params),
                           wall_clock=0.0,
                           oscillation=_oscillation(series),
                           reference=reference_values(config))

        if config.reconstruction:
            report.reconstruction = _reconstruct(config, series, directory)

        if config.branch_filter:
            report.branch_filter = _filter_branches(config, series, directory)

        report.wall_clock = time.time() - start
        logging.info('Scenario {} done in {:.1f} s'.format(config.name, report.wall_clock))

        if directory is not None:
            report.write(directory)
            handler.save(os.path.join(directory, 'run.log'))

    except KleinSimError as e:
        raise ScenarioError('Scenario {} ({} engine) failed: {}'.format(config.name, config.engine, e)) from e

    finally:
        logging.getLogger().removeHandler(handler)

    return report


def emit_frames(report, directory, fmt='csv'):
    """Write one file per frame plus an index listing the frame times.

    Args:
        report (kleinsim.kernel.scenario.RunReport): the report
        directory (str): the output directory
        fmt (str): 'csv' or 'ndjson'

    Returns:
        list: the paths of the written files, the index last
    """

    if fmt not in FRAME_FORMATS:
        raise ScenarioError('Unknown frame format {}'.format(fmt))

    try:
        os.makedirs(directory, exist_ok=True)

        x = report.series.grid.x
        paths = []
        rows = []
        for i, frame in enumerate(report.series):
            filename = 'frame_{:04d}.{}'.format(i, fmt)
            path = os.path.join(directory, filename)
            data = frame.to_dataframe(x)
            if fmt == 'csv':
                data.to_csv(path, index=False, float_format='%.12e')
            else:
                data.to_json(path, orient='records', lines=True, double_precision=15)
            paths.append(path)
            rows.append({'frame': i, 'time_us': frame.time, 'file': filename})

        index = os.path.join(directory, 'index.csv')
        pd.DataFrame(rows, columns=['frame', 'time_us', 'file']).to_csv(index, index=False)
        paths.append(index)
    except OSError as e:
        raise ScenarioError('Can not write the frames to {}'.format(directory)) from e

    return paths


def _run_one(config, directory):

    return run_scenario(config, directory)


def run_batch(configs, threads=1, root=None):
    """Run independent scenarios, in a process pool when threads > 1.

    Args:
        configs (list): the scenarios
        threads (int): the number of worker processes
        root (str): the root directory of the artifacts, each scenario writing in its output_dir; nothing is written when None

    Returns:
        list: the reports, in the order of the scenarios
    """

    directories = [None if root is None else os.path.join(root, config.output_dir or config.name) for config in configs]

    progress_bar.reset(len(configs))

    if threads <= 1:
        reports = []
        for i, (config, directory) in enumerate(zip(configs, directories)):
            reports.append(_run_one(config, directory))
            progress_bar.update(i + 1)
        return reports

    reports = [None]*len(configs)
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as executor:
        futures = {executor.submit(_run_one, config, directory): i for i, (config, directory) in enumerate(zip(configs, directories))}
        for done, future in enumerate(concurrent.futures.as_completed(futures)):
            reports[futures[future]] = future.result()
            progress_bar.update(done + 1)

    return reports


def tunneling_table(configs, engines=ENGINES, threads=1, root=None):
    """Run linear slope scenarios on several engines and tabulate their tunneling probabilities.

    Args:
        configs (list): the scenarios (free or linear potential)
        engines (tuple): the engines
        threads (int): the number of worker processes
        root (str): the root directory of the artifacts

    Returns:
        pandas.DataFrame: one row per slope Omega_tilde2/2pi (kHz)
    """

    for config in configs:
        if config.kind == 'quadratic':
            raise ScenarioError('The tunneling table needs free or linear scenarios ({} is quadratic)'.format(config.name))

    runs = [config.replace(engine=engine, output_dir=os.path.join(config.output_dir or config.name, engine)) for config in configs for engine in engines]
    reports = run_batch(runs, threads, root)

    rows = collections.OrderedDict()
    for run, report in zip(runs, reports):
        row = rows.setdefault(run.omega_tilde2_kHz, collections.OrderedDict())
        row['analytic'] = report.analytic
        value = report.tunneling['negative_branch']
        row[run.engine] = np.nan if value is None else value
        for label, reference in (report.reference or {}).items():
            row['reported {}'.format(label)] = reference

    table = pd.DataFrame.from_dict(rows, orient='index')
    table.index.name = 'omega_tilde2_kHz'

    for engine in engines:
        if 'reported numerical' in table and engine in table:
            table['{} - reported numerical'.format(engine)] = table[engine] - table['reported numerical']

    return table.round(3)


def export_table(table, filename, xlsx=False):
    """Write a table as CSV and optionally as an Excel workbook next to it.
    """

    table.to_csv(filename)
    logging.info('Table written to {}'.format(filename))

    if xlsx:
        excel_file = '{}.xlsx'.format(os.path.splitext(filename)[0])
        with pd.ExcelWriter(excel_file, engine='openpyxl') as writer:
            table.to_excel(writer, sheet_name='tunneling')
        logging.info('Table written to {}'.format(excel_file))


def compare_engines(config, engines=('dirac', 'ion-ideal')):
    """Run a scenario on several engines and return the L1 distance of their densities to the first engine at every frame.

    Returns:
        pandas.DataFrame: the frame times and one column of distances per compared engine
    """

    reports = [run_scenario(config.replace(engine=engine)) for engine in engines]
    reference = reports[0].series
    dx = reference.grid.dx

    data = collections.OrderedDict()
    data['time'] = reference.times
    for engine, report in zip(engines[1:], reports[1:]):
        data[engine] = [l1_distance(first.density, second.density, dx) for first, second in zip(reference, report.series)]

    return pd.DataFrame(data)
