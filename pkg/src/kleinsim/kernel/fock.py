"""Emulation of the two-ion analogue in a truncated Fock space.

The joint state lives in qubit1 (x) qubit2 (x) N oscillator levels, flattened in that order
(index = 2*N*q1 + N*q2 + n). Oscillator quadratures are expressed in units of Delta and hbar/Delta:

    X = a + a^dagger,  P = i*(a^dagger - a)/2,  [X, P] = i

so that a coherent state |alpha> has <X> = 2*Re(alpha) and <P> = Im(alpha).
"""

import dataclasses
import functools
import logging

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.special import eval_genlaguerre

from kleinsim.kernel.analytic import SCENARIO_KINDS, scenario_kind
from kleinsim.kernel.dirac import SpinorField, frame_from_spinors
from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.frames import FrameSeries
from kleinsim.kernel.parameters import PARAMETERS

PAULI = {'x': sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)),
         'y': sp.csr_matrix(np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)),
         'z': sp.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)),
         'identity': sp.identity(2, dtype=complex, format='csr')}

RECIPES = ('momentum_kick', 'prep2', 'prep2_plus_kick')


class IonEmulatorError(KleinSimError):
    """Error handler for ion emulator related exceptions.
    """


class InconsistentScenarioError(IonEmulatorError):
    """Raised when the laboratory parameters do not realize the requested scenario.
    """


class HermiticityError(IonEmulatorError):
    """Raised when an assembled Hamiltonian is not Hermitian.
    """


class CutoffOverflowError(IonEmulatorError):
    """Raised when the highest Fock levels get populated.
    """

    def __init__(self, message, step, profile):

        super().__init__(message)

        self.step = step

        self.profile = profile


class FockVector:
    """This class implements a state of the two qubits and the oscillator.
    """

    def __init__(self, amplitudes, cutoff, time=0.0):
        """Constructor

        Args:
            amplitudes (numpy.ndarray): the 4*cutoff complex amplitudes
            cutoff (int): the number of oscillator levels
            time (float): the time in us
        """

        amplitudes = np.array(amplitudes, dtype=complex).ravel()
        if amplitudes.size != 4*cutoff:
            raise IonEmulatorError('A Fock vector with cutoff {} needs {} amplitudes (got {})'.format(cutoff, 4*cutoff, amplitudes.size))
        amplitudes.flags.writeable = False

        self._amplitudes = amplitudes

        self._cutoff = int(cutoff)

        self._time = float(time)

    @property
    def amplitudes(self):
        """Getter for _amplitudes attribute.
        """

        return self._amplitudes

    @property
    def cutoff(self):
        """Getter for _cutoff attribute.
        """

        return self._cutoff

    @classmethod
    def from_product(cls, qubit1, qubit2, motion, time=0.0):
        """Build the product state qubit1 (x) qubit2 (x) motion.
        """

        qubit1 = np.asarray(qubit1, dtype=complex)
        qubit2 = np.asarray(qubit2, dtype=complex)
        motion = np.asarray(motion, dtype=complex)

        amplitudes = np.kron(np.kron(qubit1/np.linalg.norm(qubit1), qubit2/np.linalg.norm(qubit2)), motion/np.linalg.norm(motion))

        return cls(amplitudes, motion.size, time)

    def mean_phonon_number(self):

        profile = self.occupation()

        return float(np.sum(np.arange(self._cutoff)*profile)/np.sum(profile))

    def norm(self):
        """Return the squared norm of the state.
        """

        return float(np.vdot(self._amplitudes, self._amplitudes).real)

    def occupation(self):
        """Return the population of each Fock level summed over the qubit states.
        """

        return np.sum(np.abs(self.tensor)**2, axis=(0, 1))

    def replace(self, amplitudes=None, time=None):

        amplitudes = self._amplitudes if amplitudes is None else amplitudes
        time = self._time if time is None else time

        return FockVector(amplitudes, self._cutoff, time)

    @property
    def tensor(self):
        """Return the amplitudes as a (2, 2, cutoff) array indexed by (qubit1, qubit2, level).
        """

        return self._amplitudes.reshape(2, 2, self._cutoff)

    @property
    def time(self):
        """Getter for _time attribute.
        """

        return self._time


def coherent_amplitude(x, p):
    """Return the coherent amplitude alpha = x/2 + i*p of the phase space point (x, p).

    This is the single place where the alpha <-> (x, p) convention is fixed: <X> = 2*Re(alpha)
    and <P> = Im(alpha), x in Delta and p in hbar/Delta.
    """

    return complex(0.5*x, p)


def phase_space_point(alpha):
    """Return the phase space point (x, p) of a coherent amplitude.
    """

    return 2.0*alpha.real, alpha.imag


def lamb_dicke_factors(eta, cutoff):
    """Return the scaling of the sideband matrix elements <n+1|a^dagger|n> beyond the Lamb-Dicke regime.

    The exact first sideband element of exp(i*eta*X) is i*eta*exp(-eta**2/2)*L_n^(1)(eta**2)/sqrt(n+1),
    i.e. the ideal element i*eta*sqrt(n+1) times exp(-eta**2/2)*L_n^(1)(eta**2)/(n+1).

    Args:
        eta (float): the Lamb-Dicke parameter
        cutoff (int): the number of oscillator levels

    Returns:
        numpy.ndarray: the cutoff-1 factors for n = 0 ... cutoff-2
    """

    n = np.arange(cutoff - 1)

    return np.exp(-0.5*eta**2)*eval_genlaguerre(n, 1, eta**2)/(n + 1.0)


@functools.lru_cache(maxsize=32)
def annihilation(cutoff, eta=None):
    """Return the (optionally Lamb-Dicke corrected) annihilation operator of the truncated oscillator.

    Args:
        cutoff (int): the number of oscillator levels
        eta (float): when given, the matrix elements are scaled by the corrections of lamb_dicke_factors

    Returns:
        scipy.sparse.csr_matrix: the operator
    """

    elements = np.sqrt(np.arange(1, cutoff, dtype=float))
    if eta is not None:
        elements = elements*lamb_dicke_factors(eta, cutoff)

    return sp.diags(elements.astype(complex), 1, shape=(cutoff, cutoff), format='csr')


def oscillator_operator(name, cutoff, eta=None):
    """Return X, P or the identity on the truncated oscillator.
    """

    if name == 'identity':
        return sp.identity(cutoff, dtype=complex, format='csr')

    a = annihilation(cutoff, eta)
    if name == 'x':
        return (a + a.conj().T).tocsr()
    elif name == 'p':
        return (0.5j*(a.conj().T - a)).tocsr()

    raise IonEmulatorError('Unknown oscillator operator {}'.format(name))


@dataclasses.dataclass(frozen=True)
class CouplingTerm:
    """A term strength * sigma_axis^(ion) (x) oscillator of a Hamiltonian (strength in rad/us).
    """

    ion: int
    axis: str
    oscillator: str
    strength: float

    def __post_init__(self):

        if self.ion not in (1, 2):
            raise IonEmulatorError('Invalid ion index {}'.format(self.ion))

        if self.axis not in PAULI:
            raise IonEmulatorError('Invalid Pauli axis {}'.format(self.axis))

        if self.oscillator not in ('x', 'p', 'identity'):
            raise IonEmulatorError('Invalid oscillator coupling {}'.format(self.oscillator))


@dataclasses.dataclass(frozen=True)
class HamiltonianSpec:
    """A Hamiltonian given as a sum of coupling terms.

    In 'corrected' Lamb-Dicke mode the oscillator quadratures of the sideband terms are built
    with the corrected ladder operators.
    """

    terms: tuple
    cutoff: int
    lamb_dicke_mode: str = 'ideal'
    eta: float = None

    def __post_init__(self):

        if self.lamb_dicke_mode not in ('ideal', 'corrected'):
            raise IonEmulatorError('Unknown Lamb-Dicke mode {}'.format(self.lamb_dicke_mode))

        if self.lamb_dicke_mode == 'corrected' and self.eta is None:
            raise IonEmulatorError('The corrected Lamb-Dicke mode needs eta')

    @property
    def dimension(self):

        return 4*self.cutoff

    def matrix(self, tolerance=1.0e-12):
        """Assemble the sparse matrix of the Hamiltonian in the product basis.

        Args:
            tolerance (float): the maximum deviation from hermiticity

        Returns:
            scipy.sparse.csr_matrix: the matrix
        """

        return _assemble(self, tolerance)


@functools.lru_cache(maxsize=16)
def _assemble(spec, tolerance):

    eta = spec.eta if spec.lamb_dicke_mode == 'corrected' else None

    matrix = sp.csr_matrix((spec.dimension, spec.dimension), dtype=complex)
    for term in spec.terms:
        qubit1 = PAULI[term.axis] if term.ion == 1 else PAULI['identity']
        qubit2 = PAULI[term.axis] if term.ion == 2 else PAULI['identity']
        oscillator = oscillator_operator(term.oscillator, spec.cutoff, eta)
        matrix = matrix + term.strength*sp.kron(sp.kron(qubit1, qubit2), oscillator, format='csr')

    matrix = matrix.tocsr()
    deviation = abs(matrix - matrix.conj().T).max() if matrix.nnz else 0.0
    if deviation > tolerance:
        raise HermiticityError('The Hamiltonian deviates from hermiticity by {:.3e}'.format(deviation))

    return matrix


def build_hamiltonian(ion, scenario, lamb_dicke_mode='ideal'):
    """Build the Hamiltonian of the analogue for a scenario.

        free:      c*P*sigma_x^(1) + Omega1*sigma_z^(1)
        linear:    free + eta*Omega_tilde2*X*sigma_x^(2)
        quadratic: linear + Omega2*sigma_z^(2)

    with c = 2*eta*Omega_tilde1.

    Args:
        ion (kleinsim.kernel.analytic.IonParams): the laboratory parameters
        scenario (str): 'free', 'linear' or 'quadratic'
        lamb_dicke_mode (str): 'ideal' or 'corrected'

    Returns:
        kleinsim.kernel.fock.HamiltonianSpec: the Hamiltonian
    """

    if scenario not in SCENARIO_KINDS:
        raise InconsistentScenarioError('Unknown scenario {}'.format(scenario))

    if scenario == 'quadratic' and ion.omega2 == 0.0:
        raise InconsistentScenarioError('The quadratic scenario needs Omega2 > 0')

    if scenario == 'linear' and ion.omega2 > 0.0:
        raise InconsistentScenarioError('The linear scenario needs Omega2 = 0 (got {:.4g} rad/us)'.format(ion.omega2))

    if scenario != 'free' and ion.omega_tilde2 == 0.0:
        raise InconsistentScenarioError('The {} scenario needs Omega_tilde2 > 0'.format(scenario))

    if scenario == 'free' and ion.omega_tilde2 > 0.0:
        raise InconsistentScenarioError('The free scenario needs Omega_tilde2 = 0 (got {:.4g} rad/us)'.format(ion.omega_tilde2))

    terms = [CouplingTerm(1, 'x', 'p', 2.0*ion.eta*ion.omega_tilde1),
             CouplingTerm(1, 'z', 'identity', ion.omega1)]

    if scenario != 'free':
        terms.append(CouplingTerm(2, 'x', 'x', ion.eta*ion.omega_tilde2))

    if scenario == 'quadratic':
        terms.append(CouplingTerm(2, 'z', 'identity', ion.omega2))

    return HamiltonianSpec(terms=tuple(terms), cutoff=ion.fock_cutoff, lamb_dicke_mode=lamb_dicke_mode, eta=ion.eta)


def lamb_dicke_corrected_couplings(ion, scenario=None):
    """Build the Hamiltonian of a scenario with the sideband couplings corrected beyond the Lamb-Dicke regime.
    """

    scenario = scenario_kind(ion) if scenario is None else scenario

    return build_hamiltonian(ion, scenario, lamb_dicke_mode='corrected')


def _lanczos_exponential(matrix, vector, t, tolerance, max_dimension):

    beta0 = np.linalg.norm(vector)
    if beta0 == 0.0:
        return vector, 0.0

    basis = np.zeros((max_dimension + 1, vector.size), dtype=complex)
    alpha = np.zeros(max_dimension)
    beta = np.zeros(max_dimension)
    basis[0] = vector/beta0

    error = np.inf
    for j in range(max_dimension):
        w = matrix @ basis[j]
        alpha[j] = np.vdot(basis[j], w).real
        w = w - alpha[j]*basis[j]
        if j > 0:
            w = w - beta[j - 1]*basis[j - 1]
        # Full reorthogonalization
        w = w - basis[:j + 1].T @ (basis[:j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)

        m = j + 1
        if m == 1:
            eigenvalues, eigenvectors = alpha[:1], np.ones((1, 1))
        else:
            eigenvalues, eigenvectors = eigh_tridiagonal(alpha[:m], beta[:m - 1])
        coefficients = eigenvectors @ (np.exp(-1j*t*eigenvalues)*eigenvectors[0])

        # Invariant subspace: the exponential is exact
        if beta[j] < 1.0e-14*max(1.0, abs(alpha[j])):
            return beta0*(coefficients @ basis[:m]), 0.0

        error = beta0*beta[j]*abs(coefficients[-1])
        if error < tolerance:
            return beta0*(coefficients @ basis[:m]), error

        basis[j + 1] = w/beta[j]

    return None, error


def krylov_expm_multiply(matrix, vector, t, tolerance=None, max_dimension=None):
    """Return exp(-i*t*H) @ vector using a Lanczos approximation of the exponential.

    The interval is split into substeps which are halved until the a posteriori error estimate
    beta_m*|[exp(-i*t*T_m)]_m1| of each of them is below the tolerance.

    Args:
        matrix (scipy.sparse.spmatrix): the Hermitian matrix H
        vector (numpy.ndarray): the vector
        t (float): the time
        tolerance (float): the error tolerance per substep
        max_dimension (int): the maximum dimension of the Krylov subspace

    Returns:
        numpy.ndarray: the propagated vector
    """

    tolerance = PARAMETERS['krylov tolerance'] if tolerance is None else tolerance
    max_dimension = PARAMETERS['krylov max dimension'] if max_dimension is None else max_dimension

    vector = np.asarray(vector, dtype=complex)
    max_dimension = max(1, min(max_dimension, vector.size))

    remaining = float(t)
    substep = float(t)
    while abs(remaining) > 1.0e-12*max(1.0, abs(t)):
        h = substep if abs(substep) < abs(remaining) else remaining
        result, error = _lanczos_exponential(matrix, vector, h, tolerance, max_dimension)
        if result is None:
            substep = 0.5*h
            logging.debug('Krylov step of {:.3e} not converged (error {:.3e}): halving'.format(h, error))
            if abs(substep) < 1.0e-8*abs(t):
                raise IonEmulatorError('The Krylov propagation did not converge (error {:.3e})'.format(error))
            continue
        vector = result
        remaining -= h

    return vector


def check_cutoff(state, step=0, guard=None, fraction=None):
    """Raise CutoffOverflowError when the highest Fock levels are populated.

    Args:
        state (kleinsim.kernel.fock.FockVector): the state
        step (int): the step index reported in the error
        guard (float): the maximum population of the highest levels
        fraction (float): the fraction of the levels considered as the highest ones
    """

    guard = PARAMETERS['cutoff guard'] if guard is None else guard
    fraction = PARAMETERS['cutoff guard fraction'] if fraction is None else fraction

    profile = state.occupation()
    n_top = max(1, int(np.ceil(fraction*state.cutoff)))
    top = np.sum(profile[-n_top:])
    if top > guard:
        raise CutoffOverflowError('The {} highest Fock levels hold {:.3e} of the population at step {}'.format(n_top, top, step), step, profile)


def propagate(state, hamiltonian, dt=None, n_steps=1, norm_tolerance=None):
    """Propagate a Fock vector over n_steps time steps.

    Args:
        state (kleinsim.kernel.fock.FockVector): the initial state
        hamiltonian (kleinsim.kernel.fock.HamiltonianSpec): the Hamiltonian
        dt (float): the time step in us
        n_steps (int): the number of steps
        norm_tolerance (float): the maximum norm drift allowed

    Returns:
        kleinsim.kernel.fock.FockVector: the propagated state
    """

    dt = PARAMETERS['time step'] if dt is None else dt
    norm_tolerance = PARAMETERS['norm tolerance'] if norm_tolerance is None else norm_tolerance

    if hamiltonian.cutoff != state.cutoff:
        raise IonEmulatorError('Cutoff mismatch between the state ({}) and the Hamiltonian ({})'.format(state.cutoff, hamiltonian.cutoff))

    check_cutoff(state, 0)

    matrix = hamiltonian.matrix()
    norm0 = state.norm()

    vector = state.amplitudes
    for step in range(1, n_steps + 1):
        vector = krylov_expm_multiply(matrix, vector, dt)
        current = state.replace(amplitudes=vector)
        drift = current.norm() - norm0
        if abs(drift) > norm_tolerance:
            raise IonEmulatorError('Norm drift {:.3e} at step {}'.format(drift, step))
        check_cutoff(current, step)

    return state.replace(amplitudes=vector, time=state.time + n_steps*dt)


def displace(state, alpha):
    """Apply the displacement operator D(alpha) = exp(alpha*a^dagger - conj(alpha)*a) to the oscillator.
    """

    a = annihilation(state.cutoff)
    generator = 1j*(alpha*a.conj().T - np.conj(alpha)*a)
    matrix = sp.kron(sp.identity(4, dtype=complex), generator, format='csr')

    displaced = state.replace(amplitudes=krylov_expm_multiply(matrix, state.amplitudes, 1.0))
    check_cutoff(displaced)

    return displaced


def ground_state(cutoff, qubit1, qubit2):
    """Return qubit1 (x) qubit2 (x) |0>.
    """

    motion = np.zeros(cutoff, dtype=complex)
    motion[0] = 1.0

    return FockVector.from_product(qubit1, qubit2, motion)


@dataclasses.dataclass(frozen=True)
class Recipe:
    """An initial state preparation.

    Attributes:
        kind (str): 'momentum_kick', 'prep2' or 'prep2_plus_kick'
        p0 (float): the momentum kick in hbar/Delta
        duration (float): the duration of the preparation pulse in us
    """

    kind: str
    p0: float = 0.0
    duration: float = 16.0

    def __post_init__(self):

        if self.kind not in RECIPES:
            raise IonEmulatorError('Unknown preparation recipe {}'.format(self.kind))

        if self.duration < 0.0:
            raise IonEmulatorError('The preparation duration must be nonnegative')

    def preparation_kick(self, ion):
        """Return the kick k = eta*Omega_prep2*duration (1/Delta) of the preparation pulse.
        """

        return ion.eta*ion.omega_prep2*self.duration if self.kind != 'momentum_kick' else 0.0


def qubit2_preparation(scenario):
    """Return the initial state of ion 2: +1 eigenstate of sigma_z for the quadratic scenario, of sigma_x otherwise.
    """

    if scenario == 'quadratic':
        return np.array([1.0, 0.0], dtype=complex)

    return np.array([1.0, 1.0], dtype=complex)/np.sqrt(2.0)


def prepare_initial(ion, recipe, scenario=None):
    """Prepare the initial state of a run from the motional ground state.

    momentum_kick: ion 1 in (1,1)/sqrt(2), displacement along the momentum quadrature by p0.
    prep2: ion 1 in (1,0), pulse exp(-i*t*H) with H = -eta*Omega_prep2*X*sigma_x^(1), which produces
    exp(i*k*X*sigma_x^(1)), k = eta*Omega_prep2*t, and lands in the positive energy branch.
    prep2_plus_kick: prep2 followed by the momentum displacement.

    Args:
        ion (kleinsim.kernel.analytic.IonParams): the laboratory parameters
        recipe (kleinsim.kernel.fock.Recipe): the preparation
        scenario (str): the scenario, which sets the state of ion 2

    Returns:
        kleinsim.kernel.fock.FockVector: the prepared state
    """

    scenario = scenario_kind(ion) if scenario is None else scenario
    qubit2 = qubit2_preparation(scenario)

    if recipe.kind == 'momentum_kick':
        state = ground_state(ion.fock_cutoff, np.array([1.0, 1.0])/np.sqrt(2.0), qubit2)
        return displace(state, coherent_amplitude(0.0, recipe.p0))

    state = ground_state(ion.fock_cutoff, np.array([1.0, 0.0]), qubit2)
    pulse = HamiltonianSpec(terms=(CouplingTerm(1, 'x', 'x', -ion.eta*ion.omega_prep2),), cutoff=ion.fock_cutoff)
    state = state.replace(amplitudes=krylov_expm_multiply(pulse.matrix(), state.amplitudes, recipe.duration))
    check_cutoff(state)

    if recipe.kind == 'prep2_plus_kick':
        state = displace(state, coherent_amplitude(0.0, recipe.p0))

    return state


@functools.lru_cache(maxsize=8)
def hermite_functions(grid, cutoff):
    """Return the oscillator eigenfunctions <x|n> sampled on a grid.

    With X = a + a^dagger, <x|n> = 2**(-1/4)*h_n(x/sqrt(2)) where h_n are the normalized Hermite
    functions, computed with their stable three-term recurrence.

    Args:
        grid (kleinsim.kernel.grid.Grid): the grid
        cutoff (int): the number of levels

    Returns:
        numpy.ndarray: the (cutoff, n_points) read-only array
    """

    q = grid.x/np.sqrt(2.0)
    functions = np.zeros((cutoff, grid.n_points))
    functions[0] = np.pi**-0.25*np.exp(-0.5*q**2)
    if cutoff > 1:
        functions[1] = np.sqrt(2.0)*q*functions[0]
    for n in range(1, cutoff - 1):
        functions[n + 1] = np.sqrt(2.0/(n + 1))*q*functions[n] - np.sqrt(n/(n + 1.0))*functions[n - 1]

    functions *= 2.0**-0.25
    functions.flags.writeable = False

    return functions


@dataclasses.dataclass(frozen=True, eq=False)
class DecodedState:
    """The grid representation of a Fock vector.

    Attributes:
        spinor (SpinorField or None): the spinor carried by ion 1 and the oscillator when ion 2 factors out
        conditional (tuple): the two unnormalized spinors conditioned on ion 2 in (1,0) and (0,1)
        qubit2 (numpy.ndarray): the reduced density matrix of ion 2
        purity (float): the purity of the reduced state of ion 2
        entangled (bool): True when ion 2 does not factor out and only the densities are meaningful
    """

    spinor: object
    conditional: tuple
    qubit2: np.ndarray
    purity: float
    entangled: bool

    def density(self):
        """Return the motional density summed over all internal states.
        """

        return sum(spinor.density() for spinor in self.conditional)


def decode_spinor(state, grid, purity_threshold=None):
    """Decode a Fock vector into a Dirac spinor on a grid.

    The spinor components are the position wavefunctions paired with the basis states of ion 1,
    synthesized from the Fock amplitudes with the oscillator eigenfunctions.

    Args:
        state (kleinsim.kernel.fock.FockVector): the state
        grid (kleinsim.kernel.grid.Grid): the grid
        purity_threshold (float): the maximum purity defect of ion 2 for an exact decoding

    Returns:
        kleinsim.kernel.fock.DecodedState: the decoded state
    """

    purity_threshold = PARAMETERS['purity threshold'] if purity_threshold is None else purity_threshold

    tensor = state.tensor
    functions = hermite_functions(grid, state.cutoff)

    # (qubit1, qubit2, x)
    wavefunctions = tensor @ functions
    conditional = tuple(SpinorField(grid, wavefunctions[0, q2], wavefunctions[1, q2], state.time) for q2 in range(2))

    qubit2 = np.einsum('ian,ibn->ab', tensor, tensor.conj())
    qubit2 /= np.trace(qubit2).real
    purity = float(np.real(np.trace(qubit2 @ qubit2)))

    if purity < 1.0 - purity_threshold:
        logging.warning('Ion 2 is entangled with the spinor (purity {:.4f}): only densities are decoded'.format(purity))
        return DecodedState(spinor=None, conditional=conditional, qubit2=qubit2, purity=purity, entangled=True)

    _, eigenvectors = np.linalg.eigh(qubit2)
    chi = eigenvectors[:, -1]
    components = np.einsum('q,iqx->ix', chi.conj(), wavefunctions)
    components /= np.sqrt(grid.integrate(np.sum(np.abs(components)**2, axis=0)))
    spinor = SpinorField(grid, components[0], components[1], state.time)

    return DecodedState(spinor=spinor, conditional=conditional, qubit2=qubit2, purity=purity, entangled=False)


def encode_spinor(spinor, cutoff, qubit2=(1.0, 0.0)):
    """Project a grid spinor on the oscillator eigenfunctions, ion 2 being in the state qubit2.

    Args:
        spinor (kleinsim.kernel.dirac.SpinorField): the spinor
        cutoff (int): the number of oscillator levels
        qubit2 (2-sequence): the state of ion 2

    Returns:
        kleinsim.kernel.fock.FockVector: the normalized state
    """

    grid = spinor.grid
    functions = hermite_functions(grid, cutoff)

    # (qubit1, level)
    coefficients = spinor.components @ functions.T*grid.dx
    captured = np.sum(np.abs(coefficients)**2)/spinor.norm()
    if 1.0 - captured > PARAMETERS['cutoff guard']:
        logging.warning('The encoding on {} levels misses {:.3e} of the spinor'.format(cutoff, 1.0 - captured))

    qubit2 = np.asarray(qubit2, dtype=complex)
    qubit2 = qubit2/np.linalg.norm(qubit2)
    tensor = np.einsum('in,q->iqn', coefficients, qubit2)

    return FockVector(tensor/np.sqrt(np.sum(np.abs(tensor)**2)), cutoff, spinor.time)


def reduced_motional_state(state):
    """Trace out both ions and return the motional density matrix.
    """

    matrix = state.tensor.reshape(4, state.cutoff)

    return matrix.T @ matrix.conj()


@functools.lru_cache(maxsize=16)
def quadrature_basis(cutoff, axis='x'):
    """Return the eigenvalues and eigenvectors (columns) of the truncated X or P quadrature.
    """

    nodes, vectors = eigh_tridiagonal(np.zeros(cutoff), np.sqrt(np.arange(1, cutoff, dtype=float)))
    vectors = vectors.astype(complex)

    if axis == 'p':
        # P = -R^dagger X R/2 with R = diag(i**n)
        phases = (-1j)**np.arange(cutoff)
        nodes, vectors = -0.5*nodes[::-1], phases[:, None]*vectors[:, ::-1]
    elif axis != 'x':
        raise IonEmulatorError('Unknown quadrature {}'.format(axis))

    nodes.flags.writeable = False
    vectors.flags.writeable = False

    return nodes, vectors


def quadrature_weights(rho, axis='x'):
    """Return the discrete distribution of a quadrature for a motional density matrix.

    Args:
        rho (numpy.ndarray): the motional density matrix
        axis (str): 'x' or 'p'

    Returns:
        tuple: the nodes and their probabilities
    """

    nodes, vectors = quadrature_basis(rho.shape[0], axis)
    weights = np.real(np.einsum('nj,nm,mj->j', vectors.conj(), rho, vectors))

    return nodes, np.clip(weights, 0.0, None)


def frame_from_fock(state, grid, params, window=None):
    """Build a frame from a Fock vector (mixed over the states of ion 2).
    """

    decoded = decode_spinor(state, grid, purity_threshold=1.0)

    return frame_from_spinors(list(decoded.conditional), params, time=state.time, window=window)


def record_fock_frames(state, hamiltonian, grid, params, dt=None, n_steps=1, frame_stride=1, window=None, engine='ion-ideal'):
    """Propagate a Fock vector and record a frame every frame_stride steps (plus the initial and final frames).

    Args:
        state (kleinsim.kernel.fock.FockVector): the initial state
        hamiltonian (kleinsim.kernel.fock.HamiltonianSpec): the Hamiltonian
        grid (kleinsim.kernel.grid.Grid): the grid on which the frames are sampled
        params (kleinsim.kernel.dirac.DiracParams): the physics used for the branch decomposition
        dt (float): the time step in us
        n_steps (int): the total number of steps
        frame_stride (int): the number of steps between two frames
        window (float): the smoothing window of the local momentum
        engine (str): the engine label of the series

    Returns:
        kleinsim.kernel.frames.FrameSeries: the frames
    """

    dt = PARAMETERS['time step'] if dt is None else dt

    if frame_stride < 1:
        raise IonEmulatorError('The frame stride must be at least 1 (got {})'.format(frame_stride))

    series = FrameSeries(grid, params, engine=engine)
    series.append(frame_from_fock(state, grid, params, window))

    done = 0
    while done < n_steps:
        chunk = min(frame_stride, n_steps - done)
        try:
            state = propagate(state, hamiltonian, dt, chunk)
        except CutoffOverflowError as e:
            raise CutoffOverflowError('{} (run step {})'.format(e, done + e.step), done + e.step, e.profile) from e
        done += chunk
        series.append(frame_from_fock(state, grid, params, window))
        logging.debug('Recorded emulator frame at t={:.1f} us'.format(state.time))

    series.final_state = state

    return series
