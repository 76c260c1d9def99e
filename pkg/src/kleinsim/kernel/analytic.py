"""Closed-form Klein tunneling predictions and the mapping between the laboratory parameters
of the two-ion analogue and the simulated Dirac physics.
"""

import dataclasses
import logging

import numpy as np

from kleinsim.kernel.dirac import DiracParams, LinearPotential, QuadraticPotential
from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.parameters import PARAMETERS
from kleinsim.utils.units import kilohertz_to_angular

# Slopes Omega_tilde2/2pi (kHz) of the linear potential runs and the tunneling probabilities
# reported for them (closed form, full numerics and measurement)
REFERENCE_SLOPES_KHZ = (0.0, 22.0, 50.0, 76.0)

REFERENCE_TUNNELING = {'analytic': (0.0, 0.03, 0.21, 0.36),
                       'numerical': (0.0, 0.07, 0.22, 0.39),
                       'measured': (0.017, 0.10, 0.32, 0.45)}

SCENARIO_KINDS = ('free', 'linear', 'quadratic')


class AnalyticError(KleinSimError):
    """Error handler for analytic predictions related exceptions.
    """


@dataclasses.dataclass(frozen=True)
class IonParams:
    """The laboratory side parameters of the two-ion analogue.

    Attributes:
        eta (float): the Lamb-Dicke parameter
        delta_nm (float): the ground state width Delta in nm (informational)
        omega_tilde1 (float): the bichromatic Rabi frequency on ion 1 in rad/us
        omega1 (float): the carrier term on ion 1 in rad/us
        omega_tilde2 (float): the bichromatic Rabi frequency on ion 2 in rad/us
        omega2 (float): the carrier term on ion 2 in rad/us
        omega_prep2 (float): the Rabi frequency of the preparation pulse in rad/us
        fock_cutoff (int): the number of oscillator levels
    """

    eta: float = 0.044
    delta_nm: float = 7.0
    omega_tilde1: float = 0.0
    omega1: float = 0.0
    omega_tilde2: float = 0.0
    omega2: float = 0.0
    omega_prep2: float = 0.0
    fock_cutoff: int = PARAMETERS['fock cutoff']

    def __post_init__(self):

        if not 0.0 < self.eta < 0.3:
            raise AnalyticError('The Lamb-Dicke parameter must be in (0,0.3) (got {})'.format(self.eta))

        for field in ('omega_tilde1', 'omega1', 'omega_tilde2', 'omega2', 'omega_prep2'):
            if getattr(self, field) < 0.0:
                raise AnalyticError('{} must be nonnegative (got {})'.format(field, getattr(self, field)))

        if self.fock_cutoff < 8:
            raise AnalyticError('The Fock cutoff must be at least 8 (got {})'.format(self.fock_cutoff))

    @classmethod
    def from_kilohertz(cls, eta=0.044, delta_nm=7.0, omega_tilde1=0.0, omega1=0.0, omega_tilde2=0.0, omega2=0.0, omega_prep2=0.0, fock_cutoff=None):
        """Build the parameters from frequencies f given in kHz (angular frequency 2*pi*f).
        """

        fock_cutoff = PARAMETERS['fock cutoff'] if fock_cutoff is None else int(fock_cutoff)

        return cls(eta=eta,
                   delta_nm=delta_nm,
                   omega_tilde1=float(kilohertz_to_angular(omega_tilde1)),
                   omega1=float(kilohertz_to_angular(omega1)),
                   omega_tilde2=float(kilohertz_to_angular(omega_tilde2)),
                   omega2=float(kilohertz_to_angular(omega2)),
                   omega_prep2=float(kilohertz_to_angular(omega_prep2)),
                   fock_cutoff=fock_cutoff)

    def replace(self, **changes):

        return dataclasses.replace(self, **changes)


def scenario_kind(ion):
    """Infer the kind of potential realized by a set of laboratory parameters.

    Returns:
        str: 'free' without coupling on ion 2, 'quadratic' with a detuning on ion 2, 'linear' otherwise
    """

    if ion.omega_tilde2 == 0.0:
        return 'free'

    return 'quadratic' if ion.omega2 > 0.0 else 'linear'


def quadratic_ratio(ion):
    """Return eta*Omega_tilde2/Omega2, the small parameter of the quadratic potential.
    """

    if ion.omega2 == 0.0:
        raise AnalyticError('The quadratic potential needs Omega2 > 0')

    return ion.eta*ion.omega_tilde2/ion.omega2


def map_ion_to_dirac(ion, kind=None):
    """Map laboratory parameters onto the simulated Dirac physics.

    c = 2*eta*Omega_tilde1 (Delta/us), mc2 = Omega1, g = eta*Omega_tilde2 for the linear potential
    and q = (eta*Omega_tilde2)**2/(2*Omega2) for the quadratic one.

    Args:
        ion (kleinsim.kernel.analytic.IonParams): the laboratory parameters
        kind (str): 'free', 'linear' or 'quadratic', inferred from the parameters when None

    Returns:
        kleinsim.kernel.dirac.DiracParams: the Dirac parameters
    """

    kind = scenario_kind(ion) if kind is None else kind
    if kind not in SCENARIO_KINDS:
        raise AnalyticError('Unknown scenario kind {}'.format(kind))

    if ion.omega_tilde1 <= 0.0:
        raise AnalyticError('Omega_tilde1 must be positive to define a speed of light')

    c = 2.0*ion.eta*ion.omega_tilde1

    coupling = ion.eta*ion.omega_tilde2
    if kind == 'quadratic':
        ratio = quadratic_ratio(ion)
        if ratio > PARAMETERS['quadratic ratio warning']:
            logging.warning('eta*Omega_tilde2/Omega2 = {:.3f}: the quadratic potential approximation is poor'.format(ratio))
        potential = QuadraticPotential(q=coupling**2/(2.0*ion.omega2))
    elif kind == 'linear' and coupling > 0.0:
        potential = LinearPotential(g=coupling)
    else:
        potential = None

    return DiracParams(c=c, mc2=ion.omega1, potential=potential)


def klein_gamma(mc2, c, g):
    """Return the adiabaticity parameter Gamma = mc2**2/(2*c*g) of a linear potential (hbar = 1).

    Args:
        mc2 (float): the rest energy in rad/us
        c (float): the speed of light in Delta/us
        g (float): the slope of the potential in rad/us per Delta

    Returns:
        float: Gamma
    """

    if g <= 0.0:
        raise AnalyticError('The slope of the potential must be positive (got {})'.format(g))

    if c <= 0.0:
        raise AnalyticError('The speed of light must be positive (got {})'.format(c))

    return mc2**2/(2.0*c*g)


def ion_gamma(ion):
    """Return Gamma = Omega1**2/(4*eta**2*Omega_tilde1*Omega_tilde2) from the laboratory parameters.
    """

    denominator = 4.0*ion.eta**2*ion.omega_tilde1*ion.omega_tilde2
    if denominator == 0.0:
        raise AnalyticError('Gamma is undefined for Omega_tilde1 = 0 or Omega_tilde2 = 0')

    return ion.omega1**2/denominator


def tunnel_prob_analytic(gamma):
    """Return the Landau-Zener tunneling probability exp(-2*pi*Gamma).
    """

    if gamma < 0.0:
        raise AnalyticError('Gamma must be nonnegative (got {})'.format(gamma))

    return float(np.exp(-2.0*np.pi*gamma))


def analytic_tunneling(ion):
    """Return the closed-form tunneling probability of a scenario, 0 without potential and None
    for a non linear potential.
    """

    kind = scenario_kind(ion)
    if kind == 'free':
        return 0.0

    if kind == 'quadratic':
        return None

    return tunnel_prob_analytic(ion_gamma(ion))
