"""Brute-force references used to fix the conventions and to validate the fast propagation paths.
"""

import dataclasses
import logging

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.special import gammaln

from kleinsim.kernel.analytic import IonParams
from kleinsim.kernel.dirac import DiracParams, evolve, make_gaussian_spinor
from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.fock import FockVector, Recipe, annihilation, build_hamiltonian, lamb_dicke_factors, prepare_initial, propagate
from kleinsim.kernel.grid import Grid
from kleinsim.kernel.parameters import PARAMETERS
from kleinsim.kernel.reconstruction import COS_PREPARATION, COS_SIGN, SIN_PREPARATION, SIN_SIGN, acquire_fringes


class OracleError(KleinSimError):
    """Error handler for oracle related exceptions.
    """


class DimensionCapError(OracleError):
    """Raised when a dense computation is requested above the dimension cap.
    """


def dense_expm_propagate(state, hamiltonian, t, cap=None):
    """Apply exp(-i*t*H) with a dense scaling-and-squaring exponential.

    Args:
        state (numpy.ndarray or kleinsim.kernel.fock.FockVector): the state
        hamiltonian (numpy.ndarray or scipy.sparse.spmatrix): the Hermitian matrix H
        t (float): the time
        cap (int): the largest dimension allowed

    Returns:
        numpy.ndarray or kleinsim.kernel.fock.FockVector: the propagated state, of the same type as state
    """

    cap = PARAMETERS['dense dimension cap'] if cap is None else cap

    matrix = hamiltonian.toarray() if sp.issparse(hamiltonian) else np.asarray(hamiltonian, dtype=complex)
    if matrix.shape[0] > cap:
        raise DimensionCapError('Dense exponentials are limited to dimension {} (got {})'.format(cap, matrix.shape[0]))

    propagator = expm(-1j*t*matrix)
    deviation = np.max(np.abs(propagator.conj().T @ propagator - np.identity(matrix.shape[0])))
    if deviation > 1.0e-12:
        logging.warning('The dense propagator deviates from unitarity by {:.2e}'.format(deviation))

    if isinstance(state, FockVector):
        return state.replace(amplitudes=propagator @ state.amplitudes, time=state.time + t)

    return propagator @ np.asarray(state, dtype=complex)


def free_dirac_momentum_solution(spinor, params, t):
    """Return the exact free evolution of a spinor by diagonalizing the 2x2 Hamiltonian of every momentum.
    """

    if params.potential is not None:
        raise OracleError('The momentum space solution only holds without potential')

    grid = spinor.grid
    cp = params.c*grid.p
    blocks = np.zeros((grid.n_points, 2, 2))
    blocks[:, 0, 0] = params.mc2
    blocks[:, 1, 1] = -params.mc2
    blocks[:, 0, 1] = cp
    blocks[:, 1, 0] = cp

    energies, vectors = np.linalg.eigh(blocks)
    propagators = np.einsum('pij,pj,pkj->pik', vectors, np.exp(-1j*t*energies), vectors.conj())

    phi = spinor.momentum_components()
    evolved = np.einsum('pij,jp->ip', propagators, phi)

    return spinor.replace(components=np.fft.ifft(evolved, axis=1), time=spinor.time + t)


@dataclasses.dataclass(frozen=True)
class CoherentReference:
    """Closed-form coherent state: Fock amplitudes and characteristic function <exp(i*k*X)>.
    """

    alpha: complex
    amplitudes: np.ndarray = dataclasses.field(compare=False)

    def characteristic(self, k):

        x0 = 2.0*self.alpha.real

        return np.exp(1j*k*x0 - 0.5*np.asarray(k)**2)

    def fringe_signals(self, k):
        """Return the sin and cos readouts expected for the coherent state.
        """

        chi = self.characteristic(k)

        return SIN_SIGN*chi.imag, COS_SIGN*chi.real


def coherent_state_reference(alpha, cutoff, tolerance=1.0e-12):
    """Return the Poissonian amplitudes exp(-|alpha|**2/2)*alpha**n/sqrt(n!) of a coherent state.

    Args:
        alpha (complex): the coherent amplitude
        cutoff (int): the number of levels
        tolerance (float): the largest probability allowed beyond the cutoff

    Returns:
        kleinsim.kernel.oracle.CoherentReference: the reference
    """

    alpha = complex(alpha)
    n = np.arange(cutoff)
    amplitudes = np.zeros(cutoff, dtype=complex)
    if alpha == 0.0:
        amplitudes[0] = 1.0
    else:
        log_modulus = -0.5*abs(alpha)**2 + n*np.log(abs(alpha)) - 0.5*gammaln(n + 1.0)
        amplitudes = np.exp(log_modulus + 1j*n*np.angle(alpha))

    missing = 1.0 - np.sum(np.abs(amplitudes)**2)
    if missing > tolerance:
        raise OracleError('A cutoff of {} misses {:.3e} of the coherent state alpha={}'.format(cutoff, missing, alpha))

    return CoherentReference(alpha=alpha, amplitudes=amplitudes)


def dense_fringe_signals(rho, k_values):
    """Return the sin and cos readouts by exponentiating the displacement on ion 2 (x) motion.
    """

    cutoff = rho.shape[0]
    a = annihilation(cutoff).toarray()
    position = a + a.conj().T
    sigma_y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    sigma_z = np.kron(np.diag([1.0, -1.0]), np.identity(cutoff))

    signals = []
    for preparation in (SIN_PREPARATION, COS_PREPARATION):
        joint = np.kron(np.outer(preparation, preparation.conj()), rho)
        readouts = []
        for k in k_values:
            pulse = expm(-0.5j*k*np.kron(sigma_y, position))
            readouts.append(np.trace(sigma_z @ pulse @ joint @ pulse.conj().T).real)
        signals.append(np.array(readouts))

    return signals[0], signals[1]


def infidelity(reference, candidate):
    """Return 1-|<reference|candidate>|**2 of two states.
    """

    reference = reference.amplitudes if isinstance(reference, FockVector) else np.ravel(getattr(reference, 'components', reference))
    candidate = candidate.amplitudes if isinstance(candidate, FockVector) else np.ravel(getattr(candidate, 'components', candidate))

    overlap = np.vdot(reference, candidate)/np.sqrt(np.vdot(reference, reference).real*np.vdot(candidate, candidate).real)

    return float(1.0 - abs(overlap)**2)


def max_deviation(reference, candidate):

    return float(np.max(np.abs(np.asarray(reference) - np.asarray(candidate))))


@dataclasses.dataclass(frozen=True, eq=False)
class OracleCase:
    """A cross-check of a fast path against a brute-force reference.

    Attributes:
        description (str): what is checked
        inputs (dict): the keyword arguments of both routines
        routine (callable): the brute-force routine producing the reference output
        candidate (callable): the fast path under test
        tolerance (float): the largest error allowed
        metric (callable): the error between the reference and the candidate outputs
    """

    description: str
    inputs: dict
    routine: object
    candidate: object
    tolerance: float
    metric: object = infidelity

    def evaluate(self):
        """Run both routines.

        Returns:
            tuple: the error and whether it is within the tolerance
        """

        reference = self.routine(**self.inputs)
        candidate = self.candidate(**self.inputs)
        error = self.metric(reference, candidate)

        return error, bool(error <= self.tolerance)

def _desk_ion():

    return IonParams.from_kilohertz(eta=0.044, omega_tilde1=17.5, omega1=1.3, omega_tilde2=22.0, fock_cutoff=30)


def _krylov_path(ion, p0, t):

    hamiltonian = build_hamiltonian(ion, 'linear')

    return propagate(prepare_initial(ion, Recipe('momentum_kick', p0=p0), 'linear'), hamiltonian, 1.0, int(round(t)))


def _dense_path(ion, p0, t):

    hamiltonian = build_hamiltonian(ion, 'linear')

    return dense_expm_propagate(prepare_initial(ion, Recipe('momentum_kick', p0=p0), 'linear'), hamiltonian.matrix(), t)


def _split_operator_free(grid, params, p0, t, dt):

    return evolve(make_gaussian_spinor(grid, p0=p0, internal=(1.0, 1.0)), params, dt, int(round(t/dt)))


def _momentum_space_free(grid, params, p0, t, dt):

    return free_dirac_momentum_solution(make_gaussian_spinor(grid, p0=p0, internal=(1.0, 1.0)), params, t)


def _prepared_kick(cutoff, p0):

    ion = IonParams.from_kilohertz(omega_tilde1=17.5, omega1=1.3, fock_cutoff=cutoff)

    return prepare_initial(ion, Recipe('momentum_kick', p0=p0), 'free')


def _coherent_kick(cutoff, p0):

    motion = coherent_state_reference(complex(0.0, p0), cutoff).amplitudes
    qubit = np.array([1.0, 1.0])/np.sqrt(2.0)

    return FockVector.from_product(qubit, qubit, motion)


def _coherent_fringes(alpha, cutoff, k_max, n_k):

    reference = coherent_state_reference(alpha, cutoff)

    return np.concatenate(reference.fringe_signals(np.linspace(0.0, k_max, n_k)))


def _protocol_fringes(alpha, cutoff, k_max, n_k):

    motion = coherent_state_reference(alpha, cutoff).amplitudes
    scan = acquire_fringes(np.outer(motion, motion.conj()), k_max, n_k)

    return np.concatenate([scan.sin_signal, scan.cos_signal])


def _dense_fringes(cutoff, k_max, n_k):

    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[:2, :2] = 0.5
    k_values = np.linspace(0.0, k_max, n_k)

    return np.concatenate(dense_fringe_signals(rho, k_values))


def _node_fringes(cutoff, k_max, n_k):

    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[:2, :2] = 0.5
    scan = acquire_fringes(rho, k_max, n_k)

    return np.concatenate([scan.sin_signal, scan.cos_signal])


def _exponentiated_sidebands(eta, cutoff, n_max):

    a = annihilation(cutoff).toarray()
    coupling = expm(1j*eta*(a + a.conj().T))
    n = np.arange(n_max)

    return coupling[n + 1, n]/(1j*eta*np.sqrt(n + 1.0))


def _laguerre_sidebands(eta, cutoff, n_max):

    return lamb_dicke_factors(eta, cutoff)[:n_max]


def oracle_cases():
    """Return the convention fixing and fast path cross-checks.
    """

    fig2 = IonParams.from_kilohertz(eta=0.044, omega_tilde1=17.5, omega1=1.3)
    free_params = DiracParams(c=2.0*fig2.eta*fig2.omega_tilde1, mc2=fig2.omega1)

    return [OracleCase(description='Krylov vs dense exponential, N=30 linear slope, t=100 us',
                       inputs={'ion': _desk_ion(), 'p0': 1.5, 't': 100.0},
                       routine=_dense_path,
                       candidate=_krylov_path,
                       tolerance=1.0e-8),
            OracleCase(description='split operator vs momentum space solution, free packet, t=1500 us',
                       inputs={'grid': Grid(), 'params': free_params, 'p0': 3.5, 't': 1500.0, 'dt': 1.0},
                       routine=_momentum_space_free,
                       candidate=_split_operator_free,
                       tolerance=1.0e-8),
            OracleCase(description='momentum kick p0=3.5 vs coherent state alpha=3.5i',
                       inputs={'cutoff': 64, 'p0': 3.5},
                       routine=_coherent_kick,
                       candidate=_prepared_kick,
                       tolerance=1.0e-9),
            OracleCase(description='fringe readouts vs characteristic function of a coherent state',
                       inputs={'alpha': complex(1.0, 0.5), 'cutoff': 64, 'k_max': 6.0, 'n_k': 64},
                       routine=_coherent_fringes,
                       candidate=_protocol_fringes,
                       tolerance=1.0e-6,
                       metric=max_deviation),
            OracleCase(description='fringe readouts vs dense displacement exponential, N=20',
                       inputs={'cutoff': 20, 'k_max': 3.0, 'n_k': 16},
                       routine=_dense_fringes,
                       candidate=_node_fringes,
                       tolerance=1.0e-9,
                       metric=max_deviation),
            OracleCase(description='Laguerre sideband factors vs exponentiated coupling, N=400',
                       inputs={'eta': 0.044, 'cutoff': 400, 'n_max': 151},
                       routine=_exponentiated_sidebands,
                       candidate=_laguerre_sidebands,
                       tolerance=1.0e-9,
                       metric=max_deviation)]


def run_oracle_cases(cases=None):
    """Evaluate oracle cases.

    Returns:
        pandas.DataFrame: one row per case with the error, the tolerance and the verdict
    """

    cases = oracle_cases() if cases is None else cases

    rows = []
    for case in cases:
        error, passed = case.evaluate()
        logging.info('Oracle case "{}": error {:.3e} (tolerance {:.1e}) {}'.format(case.description, error, case.tolerance, 'passed' if passed else 'FAILED'))
        rows.append({'description': case.description, 'error': error, 'tolerance': case.tolerance, 'passed': passed})

    return pd.DataFrame(rows, columns=['description', 'error', 'tolerance', 'passed'])
