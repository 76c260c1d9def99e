"""Emulation of the measurement protocol of the analogue.

A displacement exp(-i*k*X*sigma_y^(2)/2) entangles ion 2 with the position quadrature; the mean of
sigma_z^(2) then reads a Fourier component of the position distribution:

    preparation (1,1)/sqrt(2) -> SIN_SIGN*<sin(k*X)>
    preparation (0,1)         -> COS_SIGN*<cos(k*X)>

The density follows by a Fourier transform of <cos(k*X)> + i*<sin(k*X)> over k in [0, k_max].
"""

import dataclasses
import logging

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from kleinsim.kernel.dirac import SpinorField, branch_project, local_momentum
from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.fock import FockVector, decode_spinor, quadrature_weights, reduced_motional_state
from kleinsim.kernel.parameters import PARAMETERS

SIN_PREPARATION = np.array([1.0, 1.0], dtype=complex)/np.sqrt(2.0)

COS_PREPARATION = np.array([0.0, 1.0], dtype=complex)

# Signs of the readouts, locked against the dense displacement computation
SIN_SIGN = -1.0

COS_SIGN = -1.0


class ReconstructionError(KleinSimError):
    """Error handler for reconstruction related exceptions.
    """


class UndersampledScanError(ReconstructionError):
    """Raised when the k spacing of a scan cannot represent the grid extent.
    """


@dataclasses.dataclass(frozen=True, eq=False)
class FringeScan:
    """The readouts of ion 2 versus the displacement parameter k (1/Delta) for the two preparations.

    The k grid is uniform and starts at 0.
    """

    k_values: np.ndarray
    sin_signal: np.ndarray
    cos_signal: np.ndarray
    sin_preparation: str = '(1,1)/sqrt(2)'
    cos_preparation: str = '(0,1)'

    def __post_init__(self):

        k = np.asarray(self.k_values, dtype=float)
        if k.ndim != 1 or k.size < 2 or k[0] != 0.0:
            raise ReconstructionError('The k grid must be one dimensional and start at 0')

        steps = np.diff(k)
        if np.any(steps <= 0.0) or not np.allclose(steps, steps[0], rtol=1.0e-9, atol=0.0):
            raise ReconstructionError('The k grid must be uniform and increasing')

        for name in ('sin_signal', 'cos_signal'):
            signal = np.asarray(getattr(self, name), dtype=float)
            if signal.shape != k.shape:
                raise ReconstructionError('The {} does not match the k grid'.format(name))
            if np.max(np.abs(signal)) > 1.0 + 1.0e-9:
                raise ReconstructionError('The {} exceeds 1 in magnitude'.format(name))

    @property
    def dk(self):

        return self.k_values[1] - self.k_values[0]

    @property
    def k_max(self):

        return self.k_values[-1]

    @classmethod
    def from_csv(cls, filename):
        """Read a scan written by to_csv.
        """

        data = pd.read_csv(filename)

        return cls(k_values=data['k'].to_numpy(), sin_signal=data['sin'].to_numpy(), cos_signal=data['cos'].to_numpy())

    def to_csv(self, filename):
        """Write the scan as a text table with columns k, sin and cos.
        """

        data = pd.DataFrame({'k': self.k_values, 'sin': self.sin_signal, 'cos': self.cos_signal})
        data.to_csv(filename, index=False, float_format='%.12e')


@dataclasses.dataclass(frozen=True, eq=False)
class ReconstructedDensity:
    """The output of the Fourier inversion.

    Attributes:
        density (numpy.ndarray): the clipped and renormalized density
        raw (numpy.ndarray): the density before clipping
        negativity (float): the integrated negative part of the raw density
        resolution (float): the smallest resolvable feature width pi/k_max in Delta
    """

    density: np.ndarray
    raw: np.ndarray
    negativity: float
    resolution: float


def resolution(k_max):
    """Return the smallest resolvable feature width pi/k_max of a scan.
    """

    if k_max <= 0.0:
        raise ReconstructionError('k_max must be positive (got {})'.format(k_max))

    return np.pi/k_max


def readout_signal(preparation, theta):
    """Return <sigma_z> after the rotation exp(-i*theta*sigma_y/2) of a qubit state.

    Args:
        preparation (numpy.ndarray): the qubit state
        theta (numpy.ndarray): the rotation angles

    Returns:
        numpy.ndarray: the readouts
    """

    cos = np.cos(0.5*theta)
    sin = np.sin(0.5*theta)
    up = cos*preparation[0] - sin*preparation[1]
    down = sin*preparation[0] + cos*preparation[1]

    return np.abs(up)**2 - np.abs(down)**2


def acquire_fringes(state, k_max=None, n_k=None):
    """Simulate the fringe scans of a motional state.

    In the eigenbasis of the truncated X the displacement is a qubit rotation by k*x_j per node, so the
    readout is the node-weighted average of the rotated qubit readouts.

    Args:
        state (numpy.ndarray or kleinsim.kernel.fock.FockVector): the motional density matrix,
            or a joint state whose ions are traced out
        k_max (float): the largest displacement parameter in 1/Delta
        n_k (int): the number of displacement parameters

    Returns:
        kleinsim.kernel.reconstruction.FringeScan: the scan
    """

    k_max = PARAMETERS['k max'] if k_max is None else k_max
    n_k = PARAMETERS['n k'] if n_k is None else n_k

    rho = reduced_motional_state(state) if isinstance(state, FockVector) else np.asarray(state)

    trace = np.trace(rho).real
    if abs(trace - 1.0) > PARAMETERS['norm tolerance']:
        raise ReconstructionError('The motional state has trace {}'.format(trace))

    k_values = np.linspace(0.0, k_max, n_k)
    nodes, weights = quadrature_weights(rho, 'x')

    support = np.max(np.abs(nodes[weights > 1.0e-10]))
    period = 2.0*np.pi/(k_values[1] - k_values[0])
    if 2.0*support > period:
        logging.warning('The state extends over {:.1f} Delta, beyond the alias period {:.1f} Delta of the scan'.format(2.0*support, period))

    theta = np.outer(k_values, nodes)
    sin_signal = readout_signal(SIN_PREPARATION, theta) @ weights
    cos_signal = readout_signal(COS_PREPARATION, theta) @ weights

    return FringeScan(k_values=k_values, sin_signal=np.clip(sin_signal, -1.0, 1.0), cos_signal=np.clip(cos_signal, -1.0, 1.0))


def invert_fringes(scan, grid):
    """Fourier invert a scan into a position density on a grid.

    rho(x) = (1/pi)*integral_0^k_max [C(k)*cos(k*x) + S(k)*sin(k*x)] dk, with C and S the sign
    corrected cos and sin readouts. Negative ripple is clipped and the result renormalized.

    Args:
        scan (kleinsim.kernel.reconstruction.FringeScan): the scan
        grid (kleinsim.kernel.grid.Grid): the grid

    Returns:
        kleinsim.kernel.reconstruction.ReconstructedDensity: the density
    """

    if 2.0*np.pi/scan.dk < grid.extent:
        raise UndersampledScanError('The k spacing {:.4f} aliases over the grid extent {:.1f}'.format(scan.dk, grid.extent))

    characteristic_cos = scan.cos_signal/COS_SIGN
    characteristic_sin = scan.sin_signal/SIN_SIGN

    phase = np.outer(grid.x, scan.k_values)
    integrand = characteristic_cos*np.cos(phase) + characteristic_sin*np.sin(phase)
    raw = trapezoid(integrand, scan.k_values, axis=1)/np.pi

    negativity = float(-grid.integrate(np.minimum(raw, 0.0)))
    density = np.clip(raw, 0.0, None)
    total = grid.integrate(density)
    if total <= 0.0:
        raise ReconstructionError('The reconstructed density vanishes')

    return ReconstructedDensity(density=density/total, raw=raw, negativity=negativity, resolution=resolution(scan.k_max))


@dataclasses.dataclass(frozen=True, eq=False)
class BranchFilterResult:
    """The outcome of an energy branch filtering.

    Attributes:
        state (kleinsim.kernel.fock.FockVector): the post-selected and renormalized state
        probability (float): the probability of the post-selection
        entangled (bool): True when the internal state is not of the (1,+/-1) form over the whole state
        leakage (float): the momentum weight for which the mapping pulse is not faithful
        momentum_sign (int): the momentum direction assumed by the mapping pulse
    """

    state: FockVector
    probability: float
    entangled: bool
    leakage: float
    momentum_sign: int


def filter_energy_branch(state, branch, params=None, momentum_sign=None, leakage_threshold=None):
    """Isolate one energy branch with a pi/2 pulse on ion 1 and a post-selection of (1,0).

    In the ultra-relativistic regime the positive branch of a packet moving with momentum sign s has
    ion 1 in the sigma_x = s eigenstate, the negative branch in sigma_x = -s. The pulse
    exp(-i*theta*sigma_y/2), theta = -sigma*pi/2, maps the sigma_x = sigma eigenstate onto (1,0).

    Args:
        state (kleinsim.kernel.fock.FockVector): the state
        branch (int): +1 or -1
        params (kleinsim.kernel.dirac.DiracParams): when given, the momenta with c|p| < 3*mc2 count as leakage
        momentum_sign (int): the direction of motion, inferred from <P> when None
        leakage_threshold (float): the leakage above which the result is flagged

    Returns:
        kleinsim.kernel.reconstruction.BranchFilterResult: the filtered state and the post-selection probability
    """

    leakage_threshold = PARAMETERS['branch filter leakage'] if leakage_threshold is None else leakage_threshold

    if branch not in (1, -1):
        raise ReconstructionError('The branch must be +1 or -1 (got {})'.format(branch))

    nodes, weights = quadrature_weights(reduced_motional_state(state), 'p')
    weights = weights/np.sum(weights)
    if momentum_sign is None:
        momentum_sign = 1 if np.dot(nodes, weights) >= 0.0 else -1

    unfaithful = np.sign(nodes) != momentum_sign
    if params is not None:
        unfaithful |= params.c*np.abs(nodes) < 3.0*params.mc2
    leakage = float(np.sum(weights[unfaithful]))

    entangled = leakage > leakage_threshold
    if entangled:
        logging.warning('The internal state is entangled with the motion ({:.1%} leakage): the branch filter is approximate'.format(leakage))

    theta = -branch*momentum_sign*0.5*np.pi
    tensor = state.tensor
    selected = np.cos(0.5*theta)*tensor[0] - np.sin(0.5*theta)*tensor[1]

    probability = float(np.sum(np.abs(selected)**2)/state.norm())
    if probability == 0.0:
        raise ReconstructionError('The post-selection of branch {} has zero probability'.format(branch))

    filtered = np.zeros_like(tensor)
    filtered[0] = selected/np.sqrt(np.sum(np.abs(selected)**2))

    return BranchFilterResult(state=state.replace(amplitudes=filtered),
                              probability=probability,
                              entangled=entangled,
                              leakage=leakage,
                              momentum_sign=momentum_sign)


def branch_momentum_profile(state, grid=None, params=None, branch=None, window=None):
    """Return the windowed local momentum <p>(x) of a state, optionally restricted to one energy branch.

    Args:
        state (SpinorField or FockVector): the state
        grid (kleinsim.kernel.grid.Grid): the grid, needed for a Fock vector
        params (kleinsim.kernel.dirac.DiracParams): the physics, needed with branch
        branch (int): +1 or -1 to project on an energy branch first
        window (float): the smoothing window in Delta

    Returns:
        numpy.ndarray: the profile in hbar/Delta
    """

    if isinstance(state, SpinorField):
        spinors = [state]
    elif isinstance(state, FockVector):
        if grid is None:
            raise ReconstructionError('A grid is needed to decode a Fock vector')
        spinors = list(decode_spinor(state, grid, purity_threshold=1.0).conditional)
    else:
        raise ReconstructionError('Unsupported state {!r}'.format(type(state)))

    if branch is not None:
        if params is None:
            raise ReconstructionError('The Dirac parameters are needed to project on a branch')
        spinors = [branch_project(spinor, params, branch) for spinor in spinors]

    return local_momentum(spinors, window)
