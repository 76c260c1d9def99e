"""Grid based solver of the 1D Dirac equation

    i d/dt Psi = (c p sigma_x + mc2 sigma_z + V(x)) Psi

with a Strang split-operator scheme: half potential kick in position space, exact 2x2 free
step per momentum point, half potential kick. The scheme is second order in dt and
unconditionally unitary; its splitting error stays small as long as the phases
max(E(p))*dt and max|V(x)|*dt per step are well below pi, which is checked at each call.
"""

import dataclasses
import logging

import numpy as np
from scipy.ndimage import gaussian_filter1d

from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.frames import Frame, FrameSeries
from kleinsim.kernel.grid import GridError
from kleinsim.kernel.parameters import PARAMETERS
from kleinsim.utils.signal import overlap_mass


class DiracError(KleinSimError):
    """Error handler for Dirac solver related exceptions.
    """


class GridTooNarrowError(DiracError, GridError):
    """Raised when the density reaches the edges of the grid.
    """

    def __init__(self, message, step=None):

        super().__init__(message)

        self.step = step


class InstabilityError(DiracError):
    """Raised when the norm drifts during the propagation.
    """

    def __init__(self, message, step):

        super().__init__(message)

        self.step = step


class NotSeparatedError(DiracError):
    """Raised when the branch resolved densities of the final frame still overlap.
    """


@dataclasses.dataclass(frozen=True)
class LinearPotential:
    """The potential V(x) = g*x, g in rad/us per Delta.
    """

    g: float

    def __call__(self, x):

        return self.g*x

    def __post_init__(self):

        if self.g < 0.0:
            raise DiracError('The slope of a linear potential must be nonnegative (got {})'.format(self.g))


@dataclasses.dataclass(frozen=True)
class QuadraticPotential:
    """The potential V(x) = q*x**2, q in rad/us per Delta**2 (both signs allowed).
    """

    q: float

    def __call__(self, x):

        return self.q*x**2


@dataclasses.dataclass(frozen=True)
class DiracParams:
    """The simulated physics.

    Attributes:
        c (float): the speed of light in Delta/us
        mc2 (float): the rest energy in rad/us
        potential (LinearPotential or QuadraticPotential or None): the electrostatic potential
    """

    c: float
    mc2: float
    potential: object = None

    def __post_init__(self):

        if self.c <= 0.0:
            raise DiracError('The speed of light must be positive (got {})'.format(self.c))

        if self.mc2 < 0.0:
            raise DiracError('The rest energy must be nonnegative (got {})'.format(self.mc2))

        if self.potential is not None and not isinstance(self.potential, (LinearPotential, QuadraticPotential)):
            raise DiracError('Unknown potential {!r}'.format(self.potential))

    def potential_values(self, x):
        """Return the potential sampled on positions x.
        """

        if self.potential is None:
            return np.zeros_like(x)

        return self.potential(x)


class SpinorField:
    """This class implements a two component spinor sampled on a grid.

    The components are stored as read-only complex arrays; operations return new spinors.
    """

    def __init__(self, grid, upper, lower, time=0.0):
        """Constructor

        Args:
            grid (kleinsim.kernel.grid.Grid): the grid
            upper (numpy.ndarray): the upper component
            lower (numpy.ndarray): the lower component
            time (float): the time in us
        """

        components = np.array([upper, lower], dtype=complex)
        if components.shape != (2, grid.n_points):
            raise DiracError('Spinor components must have {} points (got shape {})'.format(grid.n_points, components.shape))
        components.flags.writeable = False

        self._grid = grid

        self._components = components

        self._time = float(time)

    @property
    def components(self):
        """Return the components as a (2, n_points) array.
        """

        return self._components

    def density(self):
        """Return the position density |upper|**2 + |lower|**2.
        """

        return np.sum(np.abs(self._components)**2, axis=0)

    @property
    def grid(self):
        """Getter for _grid attribute.
        """

        return self._grid

    @property
    def lower(self):

        return self._components[1]

    def momentum_components(self):
        """Return the components in momentum space (numpy FFT ordering, unnormalized transform).
        """

        return np.fft.fft(self._components, axis=1)

    def norm(self):
        """Return the squared norm of the spinor.
        """

        return float(self._grid.integrate(self.density()))

    def replace(self, components=None, time=None):
        """Return a new spinor on the same grid with the given components and/or time.
        """

        components = self._components if components is None else components
        time = self._time if time is None else time

        return SpinorField(self._grid, components[0], components[1], time)

    @property
    def time(self):
        """Getter for _time attribute.
        """

        return self._time

    @property
    def upper(self):

        return self._components[0]


def _free_terms(grid, params):

    cp = params.c*grid.p
    energy = np.sqrt(cp**2 + params.mc2**2)

    return cp, energy


def _apply_free_hamiltonian(phi, cp, mc2):

    return np.array([mc2*phi[0] + cp*phi[1], cp*phi[0] - mc2*phi[1]])


def make_gaussian_spinor(grid, x0=0.0, p0=0.0, width=1.0, internal=(1.0, 0.0), time=0.0, threshold=None):
    """Build a normalized Gaussian wavepacket exp(i*p0*x)*exp(-(x-x0)**2/(4*width**2)) times a
    constant internal 2-vector.

    Args:
        grid (kleinsim.kernel.grid.Grid): the grid
        x0 (float): the center of the wavepacket in Delta
        p0 (float): the mean momentum in hbar/Delta
        width (float): the width in Delta (the density has standard deviation width)
        internal (2-sequence): the internal state
        time (float): the time stamp of the spinor
        threshold (float): the maximum probability allowed in the boundary strips of the grid

    Returns:
        kleinsim.kernel.dirac.SpinorField: the spinor
    """

    threshold = PARAMETERS['initial boundary threshold'] if threshold is None else threshold

    if width <= 0.0:
        raise DiracError('The width of the wavepacket must be positive (got {})'.format(width))

    internal = np.asarray(internal, dtype=complex)
    internal_norm = np.linalg.norm(internal)
    if internal.shape != (2,) or internal_norm == 0.0:
        raise DiracError('Invalid internal state {}'.format(internal))
    internal = internal/internal_norm

    envelope = np.exp(1j*p0*grid.x - (grid.x - x0)**2/(4.0*width**2))
    envelope /= np.sqrt(grid.integrate(np.abs(envelope)**2))

    outside = grid.integrate(np.abs(envelope[grid.boundary_mask()])**2)
    if outside > threshold:
        raise GridTooNarrowError('The wavepacket probability in the grid boundaries is {:.3e} (threshold {:.1e})'.format(outside, threshold))

    return SpinorField(grid, internal[0]*envelope, internal[1]*envelope, time)


def kick_spinor(state, p):
    """Shift the momentum of a spinor by p (multiplication by exp(i*p*x)).
    """

    return state.replace(components=state.components*np.exp(1j*p*state.grid.x))


def rotate_internal(state, k):
    """Apply exp(i*k*x*sigma_x) in position space.

    This is the image on the spinor of the bichromatic preparation pulse with kick k = eta*Omega*t.
    """

    cos = np.cos(k*state.grid.x)
    isin = 1j*np.sin(k*state.grid.x)
    upper, lower = state.components

    return state.replace(components=np.array([cos*upper + isin*lower, isin*upper + cos*lower]))


def evolve(state, params, dt=None, n_steps=1, norm_tolerance=None, boundary_threshold=None):
    """Propagate a spinor over n_steps time steps with the Strang split-operator scheme.

    Args:
        state (kleinsim.kernel.dirac.SpinorField): the normalized initial spinor
        params (kleinsim.kernel.dirac.DiracParams): the physics
        dt (float): the time step in us
        n_steps (int): the number of steps
        norm_tolerance (float): the maximum norm drift allowed
        boundary_threshold (float): the maximum probability allowed in the boundary strips

    Returns:
        kleinsim.kernel.dirac.SpinorField: the propagated spinor
    """

    dt = PARAMETERS['time step'] if dt is None else dt
    norm_tolerance = PARAMETERS['norm tolerance'] if norm_tolerance is None else norm_tolerance
    boundary_threshold = PARAMETERS['boundary threshold'] if boundary_threshold is None else boundary_threshold

    if dt <= 0.0:
        raise DiracError('The time step must be positive (got {})'.format(dt))

    if n_steps < 0:
        raise DiracError('The number of steps must be nonnegative (got {})'.format(n_steps))

    grid = state.grid
    norm0 = state.norm()
    if abs(norm0 - 1.0) > norm_tolerance:
        raise InstabilityError('The initial state is not normalized (norm {})'.format(norm0), 0)

    if n_steps == 0:
        return state

    cp, energy = _free_terms(grid, params)
    potential = params.potential_values(grid.x)

    phase = max(np.max(energy), np.max(np.abs(potential)))*dt
    if phase > np.pi:
        logging.warning('The phase per step {:.3f} exceeds pi: reduce the time step'.format(phase))

    half_kick = np.exp(-0.5j*potential*dt)

    # U = cos(E dt) - i sin(E dt)/E (cp sigma_x + mc2 sigma_z), sin(E dt)/E is regular at E = 0
    cos = np.cos(energy*dt)
    sin_over_e = dt*np.sinc(energy*dt/np.pi)
    diagonal_upper = cos - 1j*sin_over_e*params.mc2
    diagonal_lower = cos + 1j*sin_over_e*params.mc2
    off_diagonal = -1j*sin_over_e*cp

    mask = grid.boundary_mask()

    psi = np.array(state.components)
    for step in range(1, n_steps + 1):
        psi *= half_kick
        phi = np.fft.fft(psi, axis=1)
        phi = np.array([diagonal_upper*phi[0] + off_diagonal*phi[1],
                        off_diagonal*phi[0] + diagonal_lower*phi[1]])
        psi = np.fft.ifft(phi, axis=1)
        psi *= half_kick

        density = np.sum(np.abs(psi)**2, axis=0)
        norm = np.sum(density)*grid.dx
        if abs(norm - norm0) > norm_tolerance:
            raise InstabilityError('Norm drift {:.3e} at step {}'.format(norm - norm0, step), step)

        outside = np.sum(density[mask])*grid.dx
        if outside > boundary_threshold:
            raise GridTooNarrowError('Probability {:.3e} reached the grid boundaries at step {}'.format(outside, step), step)

    return state.replace(components=psi, time=state.time + n_steps*dt)


def branch_project(state, params, sign):
    """Project a spinor on one energy branch of the free Dirac Hamiltonian.

    P(+/-) = (1 +/- H_free(p)/E(p))/2 per momentum component. At E = 0 (massless, p = 0)
    H_free/E is replaced by its p -> 0+ limit sigma_x.

    Args:
        state (kleinsim.kernel.dirac.SpinorField): the spinor
        params (kleinsim.kernel.dirac.DiracParams): the physics
        sign (int): +1 or -1

    Returns:
        kleinsim.kernel.dirac.SpinorField: the unnormalized projected spinor
    """

    if sign not in (1, -1):
        raise DiracError('The branch sign must be +1 or -1 (got {})'.format(sign))

    cp, energy = _free_terms(state.grid, params)

    phi = state.momentum_components()
    h_phi = _apply_free_hamiltonian(phi, cp, params.mc2)
    safe_energy = np.where(energy > 0.0, energy, 1.0)
    ratio = np.where(energy > 0.0, h_phi/safe_energy, phi[::-1])

    projected = 0.5*(phi + sign*ratio)

    return state.replace(components=np.fft.ifft(projected, axis=1))


def _raw_moments(state, params):

    grid = state.grid
    n = grid.n_points
    psi = state.components

    density = state.density()
    phi = state.momentum_components()
    momentum_density = np.sum(np.abs(phi)**2, axis=0)*grid.dx/n

    if params is None:
        total_energy = np.nan
    else:
        cp, _ = _free_terms(grid, params)
        h_phi = _apply_free_hamiltonian(phi, cp, params.mc2)
        kinetic = np.real(np.sum(np.conj(phi)*h_phi))*grid.dx/n
        total_energy = kinetic + grid.integrate(params.potential_values(grid.x)*density)

    return {'norm': grid.integrate(density),
            'x': grid.integrate(grid.x*density),
            'x2': grid.integrate(grid.x**2*density),
            'p': np.sum(grid.p*momentum_density),
            'sigma_x': 2.0*np.real(grid.integrate(np.conj(psi[0])*psi[1])),
            'energy': total_energy}


def energy(state, params):
    """Return the expectation value of the Dirac Hamiltonian in rad/us.
    """

    moments = _raw_moments(state, params)

    return float(moments['energy']/moments['norm'])


def expectations(state):
    """Return the mean position, mean momentum, mean sigma_x and position variance of a spinor.

    Args:
        state (kleinsim.kernel.dirac.SpinorField): the spinor

    Returns:
        dict: the expectation values keyed by 'mean_x', 'mean_p', 'mean_sigma_x' and 'variance_x'
    """

    moments = _raw_moments(state, None)

    return _expectations_from_moments(moments)


def _expectations_from_moments(moments):

    norm = moments['norm']
    mean_x = moments['x']/norm

    return {'mean_x': float(mean_x),
            'mean_p': float(moments['p']/norm),
            'mean_sigma_x': float(moments['sigma_x']/norm),
            'variance_x': float(moments['x2']/norm - mean_x**2)}


def local_momentum(spinors, window=None):
    """Return the windowed local momentum <p>(x) = j(x)/rho(x) of one or several spinors.

    The current j = sum Im(psi* dpsi/dx) and the density are both smoothed with a Gaussian window
    before taking the ratio; the profile is set to 0 where the smoothed density vanishes.

    Args:
        spinors (list): the spinors, sharing the same grid; their contributions are summed
        window (float): the standard deviation of the smoothing window in Delta

    Returns:
        numpy.ndarray: the local momentum in hbar/Delta
    """

    window = PARAMETERS['momentum window'] if window is None else window

    grid = spinors[0].grid
    current = np.zeros(grid.n_points)
    density = np.zeros(grid.n_points)
    for spinor in spinors:
        psi = spinor.components
        derivative = np.fft.ifft(1j*grid.p*np.fft.fft(psi, axis=1), axis=1)
        current += np.sum(np.imag(np.conj(psi)*derivative), axis=0)
        density += spinor.density()

    sigma = window/grid.dx
    current = gaussian_filter1d(current, sigma, mode='wrap')
    density = gaussian_filter1d(density, sigma, mode='wrap')

    floor = 1.0e-12*np.max(density)

    return np.where(density > floor, current/np.where(density > floor, density, 1.0), 0.0)


def frame_from_spinors(spinors, params, time=None, window=None):
    """Build a frame from one or several (unnormalized) spinors describing a mixed state.

    Args:
        spinors (list): the spinors, their squared norms sum to the total probability
        params (kleinsim.kernel.dirac.DiracParams): the physics used for the branch decomposition
        time (float): the time of the frame, defaults to the time of the first spinor
        window (float): the smoothing window of the local momentum

    Returns:
        kleinsim.kernel.frames.Frame: the frame, renormalized to unit probability
    """

    grid = spinors[0].grid
    time = spinors[0].time if time is None else time

    density = np.zeros(grid.n_points)
    density_plus = np.zeros(grid.n_points)
    density_minus = np.zeros(grid.n_points)
    moments = dict.fromkeys(['norm', 'x', 'x2', 'p', 'sigma_x', 'energy'], 0.0)
    for spinor in spinors:
        density += spinor.density()
        density_plus += branch_project(spinor, params, 1).density()
        density_minus += branch_project(spinor, params, -1).density()
        for key, value in _raw_moments(spinor, params).items():
            moments[key] += value

    norm = moments['norm']
    stats = _expectations_from_moments(moments)

    return Frame(time=float(time),
                 density=density/norm,
                 density_plus=density_plus/norm,
                 density_minus=density_minus/norm,
                 local_p=local_momentum(spinors, window),
                 positive_population=float(grid.integrate(density_plus)/norm),
                 energy=float(moments['energy']/norm),
                 **stats)


def record_frames(state, params, dt=None, n_steps=1, frame_stride=1, window=None):
    """Propagate a spinor and record a frame every frame_stride steps (plus the initial and final frames).

    Args:
        state (kleinsim.kernel.dirac.SpinorField): the initial spinor
        params (kleinsim.kernel.dirac.DiracParams): the physics
        dt (float): the time step in us
        n_steps (int): the total number of steps
        frame_stride (int): the number of steps between two frames
        window (float): the smoothing window of the local momentum

    Returns:
        kleinsim.kernel.frames.FrameSeries: the frames
    """

    dt = PARAMETERS['time step'] if dt is None else dt

    if frame_stride < 1:
        raise DiracError('The frame stride must be at least 1 (got {})'.format(frame_stride))

    series = FrameSeries(state.grid, params, engine='dirac')
    series.append(frame_from_spinors([state], params, window=window))

    done = 0
    while done < n_steps:
        chunk = min(frame_stride, n_steps - done)
        state = evolve(state, params, dt, chunk)
        done += chunk
        series.append(frame_from_spinors([state], params, window=window))
        logging.debug('Recorded frame at t={:.1f} us'.format(state.time))

    series.final_state = state

    return series


def branch_overlap(frame, grid):
    """Return the overlap integral of min(rho+, rho-) of a frame.
    """

    return overlap_mass(frame.density_plus, frame.density_minus, grid.dx)


def tunnel_probability(series, threshold=None):
    """Return the tunneling probability of a run as the negative branch population of its final frame.

    Args:
        series (kleinsim.kernel.frames.FrameSeries): the frames
        threshold (float): the maximum overlap of the branch resolved densities

    Returns:
        float: the probability
    """

    threshold = PARAMETERS['separation threshold'] if threshold is None else threshold

    final = series[-1]
    overlap = branch_overlap(final, series.grid)
    if overlap > threshold:
        raise NotSeparatedError('The branch densities of the final frame at t={} overlap ({:.3e} > {:.1e})'.format(final.time, overlap, threshold))

    return float(np.clip(final.negative_population, 0.0, 1.0))


def position_tunnel_probability(series):
    """Return the probability found beyond the classical turning point in the final frame.

    The turning point is where the potential equals the initial energy E0: x = E0/g for a linear
    potential, |x| = sqrt(E0/q) for a confining quadratic one. Without potential the
    probability is 0.

    Args:
        series (kleinsim.kernel.frames.FrameSeries): the frames

    Returns:
        float: the probability
    """

    potential = series.params.potential
    grid = series.grid
    e0 = series[0].energy
    final = series[-1]

    if isinstance(potential, LinearPotential) and potential.g > 0.0:
        beyond = grid.x > e0/potential.g
    elif isinstance(potential, QuadraticPotential) and potential.q > 0.0 and e0 > 0.0:
        beyond = np.abs(grid.x) > np.sqrt(e0/potential.q)
    else:
        return 0.0

    return float(np.clip(grid.integrate(final.density[beyond]), 0.0, 1.0))
