"""Unit conversions.

Internally lengths are in Delta, momenta in hbar/Delta, times in microseconds and energies
are angular frequencies in rad/us (hbar = 1). Laboratory frequencies are quoted as f in kHz
for an angular frequency 2*pi*f.
"""

import numpy as np


def kilohertz_to_angular(frequency):
    """Convert a laboratory frequency 2*pi*f given as f in kHz into rad/us.

    Args:
        frequency (float or numpy.ndarray): f in kHz

    Returns:
        float or numpy.ndarray: the angular frequency in rad/us
    """

    return 2.0e-3*np.pi*np.asarray(frequency, dtype=float)[()]


def angular_to_kilohertz(omega):
    """Convert an angular frequency in rad/us into f in kHz.
    """

    return np.asarray(omega, dtype=float)[()]*1.0e3/(2.0*np.pi)
