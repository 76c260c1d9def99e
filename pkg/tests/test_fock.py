import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from kleinsim.kernel.analytic import IonParams, map_ion_to_dirac
from kleinsim.kernel.dirac import branch_project, expectations, make_gaussian_spinor, record_frames, rotate_internal
from kleinsim.kernel.fock import (CouplingTerm, CutoffOverflowError, FockVector, HamiltonianSpec, InconsistentScenarioError, IonEmulatorError, Recipe,
                                  build_hamiltonian, check_cutoff, coherent_amplitude, decode_spinor, displace, encode_spinor, ground_state,
                                  krylov_expm_multiply, lamb_dicke_corrected_couplings, lamb_dicke_factors, oscillator_operator, phase_space_point,
                                  prepare_initial, propagate, quadrature_weights, record_fock_frames, reduced_motional_state)
from kleinsim.kernel.grid import Grid
from kleinsim.utils.signal import l1_distance


def _fidelity(first, second):

    return abs(np.vdot(first.amplitudes, second.amplitudes))**2


def test_fock_vector_layout():

    state = FockVector.from_product([1.0, 0.0], [0.0, 1.0], [0.0, 1.0, 0.0, 0.0])

    assert state.cutoff == 4
    assert state.norm() == pytest.approx(1.0)
    assert state.tensor[0, 1, 1] == 1.0
    assert state.amplitudes[4 + 1] == 1.0
    assert state.mean_phonon_number() == pytest.approx(1.0)

    with pytest.raises(IonEmulatorError):
        FockVector(np.zeros(10), 4)


def test_coherent_amplitude_convention():

    alpha = coherent_amplitude(1.0, 3.5)

    assert alpha == complex(0.5, 3.5)
    assert phase_space_point(alpha) == pytest.approx((1.0, 3.5))


def test_quadratures_commute_canonically():

    x = oscillator_operator('x', 20).toarray()
    p = oscillator_operator('p', 20).toarray()
    commutator = x @ p - p @ x

    # exact away from the truncation edge
    np.testing.assert_allclose(np.diag(commutator)[:-1], 1.0j, atol=1.0e-12)


def test_momentum_displacement():

    state = displace(ground_state(64, [1.0, 1.0], [1.0, 0.0]), coherent_amplitude(0.0, 3.5))
    rho = reduced_motional_state(state)

    assert state.norm() == pytest.approx(1.0, abs=1.0e-9)
    assert state.mean_phonon_number() == pytest.approx(12.25, abs=1.0e-6)
    assert np.trace(rho @ oscillator_operator('p', 64).toarray()).real == pytest.approx(3.5, abs=1.0e-6)
    assert np.trace(rho @ oscillator_operator('x', 64).toarray()).real == pytest.approx(0.0, abs=1.0e-6)

    nodes, weights = quadrature_weights(rho, 'p')
    assert np.sum(weights) == pytest.approx(1.0, abs=1.0e-9)
    assert np.dot(nodes, weights) == pytest.approx(3.5, abs=1.0e-6)


def test_ground_state_quadrature_moments():

    rho = reduced_motional_state(ground_state(16, [1.0, 0.0], [1.0, 0.0]))

    nodes, weights = quadrature_weights(rho, 'x')
    assert np.dot(nodes**2, weights) == pytest.approx(1.0, abs=1.0e-10)

    nodes, weights = quadrature_weights(rho, 'p')
    assert np.dot(nodes**2, weights) == pytest.approx(0.25, abs=1.0e-10)


def test_lamb_dicke_factors():

    eta = 0.044
    factors = lamb_dicke_factors(eta, 10)

    assert factors.shape == (9,)
    assert factors[0] == pytest.approx(np.exp(-0.5*eta**2))
    assert factors[1] == pytest.approx(np.exp(-0.5*eta**2)*(2.0 - eta**2)/2.0)
    assert np.all(np.diff(factors) < 0.0)


def test_build_hamiltonian(desk_ion):

    ideal = build_hamiltonian(desk_ion, 'linear').matrix()
    corrected = lamb_dicke_corrected_couplings(desk_ion).matrix()

    assert ideal.shape == (120, 120)
    assert abs(ideal - ideal.conj().T).max() < 1.0e-14
    assert abs(corrected - ideal).max() > 0.0

    with pytest.raises(InconsistentScenarioError):
        build_hamiltonian(desk_ion, 'free')

    with pytest.raises(InconsistentScenarioError):
        build_hamiltonian(desk_ion.replace(omega2=0.2), 'linear')

    with pytest.raises(InconsistentScenarioError):
        build_hamiltonian(desk_ion, 'quadratic')

    with pytest.raises(IonEmulatorError):
        HamiltonianSpec(terms=(CouplingTerm(1, 'x', 'p', 1.0),), cutoff=8, lamb_dicke_mode='corrected')


def test_krylov_exponential_matches_dense(rng):

    dimension = 40
    matrix = rng.normal(size=(dimension, dimension)) + 1j*rng.normal(size=(dimension, dimension))
    matrix = 0.5*(matrix + matrix.conj().T)
    vector = rng.normal(size=dimension) + 1j*rng.normal(size=dimension)
    vector /= np.linalg.norm(vector)

    expected = scipy.linalg.expm(-2.0j*matrix) @ vector
    result = krylov_expm_multiply(sp.csr_matrix(matrix), vector, 2.0, max_dimension=20)

    np.testing.assert_allclose(result, expected, atol=1.0e-8)


def test_propagation_preserves_the_norm(desk_ion):

    state = prepare_initial(desk_ion, Recipe('momentum_kick', p0=1.5), 'linear')
    final = propagate(state, build_hamiltonian(desk_ion, 'linear'), dt=1.0, n_steps=20)

    assert final.time == pytest.approx(20.0)
    assert final.norm() == pytest.approx(1.0, abs=1.0e-8)

    with pytest.raises(IonEmulatorError):
        propagate(state, build_hamiltonian(desk_ion.replace(fock_cutoff=20), 'linear'))


def test_cutoff_guard():

    motion = np.zeros(20)
    motion[0] = 1.0
    motion[-1] = 0.1
    state = FockVector.from_product([1.0, 0.0], [1.0, 0.0], motion)

    with pytest.raises(CutoffOverflowError) as info:
        check_cutoff(state, step=7)

    assert info.value.step == 7
    assert info.value.profile.shape == (20,)


def test_momentum_kick_preparation(desk_ion):

    state = prepare_initial(desk_ion, Recipe('momentum_kick', p0=1.5), 'linear')
    qubit2 = np.einsum('ian,ibn->ab', state.tensor, state.tensor.conj())

    assert state.mean_phonon_number() == pytest.approx(2.25, abs=1.0e-8)
    np.testing.assert_allclose(qubit2, 0.5*np.ones((2, 2)), atol=1.0e-10)


def test_preparation_pulse_matches_the_spinor_rotation():

    ion = IonParams.from_kilohertz(omega_tilde1=17.5, omega1=0.65, omega_tilde2=50.0, omega2=33.0, omega_prep2=83.0, fock_cutoff=64)
    recipe = Recipe('prep2', duration=16.0)
    grid = Grid(512, -32.0, 32.0)

    assert recipe.preparation_kick(ion) == pytest.approx(0.367, abs=1.0e-3)

    prepared = prepare_initial(ion, recipe, 'quadratic')
    expected = encode_spinor(rotate_internal(make_gaussian_spinor(grid, internal=(1.0, 0.0)), recipe.preparation_kick(ion)), 64, qubit2=(1.0, 0.0))

    assert _fidelity(prepared, expected) == pytest.approx(1.0, abs=1.0e-8)


def test_preparation_pulse_makes_a_positive_energy_packet():

    ion = IonParams.from_kilohertz(omega_tilde1=17.5, omega1=0.65, omega_tilde2=50.0, omega2=33.0, omega_prep2=83.0, fock_cutoff=64)
    grid = Grid(512, -32.0, 32.0)

    decoded = decode_spinor(prepare_initial(ion, Recipe('prep2', duration=16.0), 'quadratic'), grid)

    assert not decoded.entangled
    assert expectations(decoded.spinor)['mean_p'] == pytest.approx(0.0, abs=1.0e-6)
    assert branch_project(decoded.spinor, map_ion_to_dirac(ion), 1).norm() > 0.98


def test_encode_decode(small_grid):

    spinor = make_gaussian_spinor(small_grid, x0=1.0, p0=2.0, internal=(1.0, 1.0j))
    decoded = decode_spinor(encode_spinor(spinor, 128, qubit2=(0.0, 1.0)), small_grid)

    assert not decoded.entangled
    assert decoded.purity == pytest.approx(1.0, abs=1.0e-10)
    assert l1_distance(decoded.density(), spinor.density(), small_grid.dx) < 1.0e-6
    assert abs(small_grid.integrate(np.sum(np.conj(decoded.spinor.components)*spinor.components, axis=0))) == pytest.approx(1.0, abs=1.0e-6)


def test_entangled_qubit_is_detected(small_grid):

    tensor = np.zeros((2, 2, 16), dtype=complex)
    tensor[0, 0, 0] = 1.0/np.sqrt(2.0)
    tensor[0, 1, 1] = 1.0/np.sqrt(2.0)

    decoded = decode_spinor(FockVector(tensor, 16), small_grid)

    assert decoded.entangled
    assert decoded.spinor is None
    assert decoded.purity == pytest.approx(0.5)
    assert small_grid.integrate(decoded.density()) == pytest.approx(1.0, abs=1.0e-9)


def test_emulator_frames_follow_the_dirac_engine(desk_ion):

    grid = Grid(256, -16.0, 16.0)
    params = map_ion_to_dirac(desk_ion)

    state = prepare_initial(desk_ion, Recipe('momentum_kick', p0=1.5), 'linear')
    series = record_fock_frames(state, build_hamiltonian(desk_ion, 'linear'), grid, params, dt=1.0, n_steps=50, frame_stride=10)
    reference = record_frames(make_gaussian_spinor(grid, p0=1.5, internal=(1.0, 1.0)), params, dt=1.0, n_steps=50, frame_stride=10)

    assert series.engine == 'ion-ideal'
    np.testing.assert_allclose(series.times, [0.0, 10.0, 20.0, 30.0, 40.0, 50.0])
    assert series[0].mean_p == pytest.approx(1.5, abs=1.0e-6)
    for emulated, solved in zip(series, reference):
        assert l1_distance(emulated.density, solved.density, grid.dx) < 1.0e-3
        assert emulated.positive_population == pytest.approx(solved.positive_population, abs=1.0e-3)
