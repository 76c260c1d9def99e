import numpy as np


def centered_difference(values, times):
    """Return the centered finite difference derivative of a sampled signal.

    Args:
        values (numpy.ndarray): the signal
        times (numpy.ndarray): the sampling times

    Returns:
        tuple: the times of the interior samples and the derivative there
    """

    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)

    return times[1:-1], (values[2:] - values[:-2])/(times[2:] - times[:-2])


def count_sign_changes(values, dead_band=0.0):
    """Count the sign changes of a signal, ignoring the samples within +/-dead_band of 0.
    """

    n_changes = 0
    previous = 0
    for v in values:
        if abs(v) <= dead_band:
            continue
        sign = 1 if v > 0.0 else -1
        if previous and sign != previous:
            n_changes += 1
        previous = sign

    return n_changes


def l1_distance(first, second, dx):
    """Return the L1 distance of two densities sampled with spacing dx.
    """

    return float(np.sum(np.abs(np.asarray(first) - np.asarray(second)))*dx)


def overlap_mass(first, second, dx):
    """Return the integral of min(first, second) of two densities sampled with spacing dx.
    """

    return float(np.sum(np.minimum(first, second))*dx)


def observed_order(errors, steps):
    """Return the convergence order observed between two runs.

    Args:
        errors (2-sequence): the errors of the two runs
        steps (2-sequence): the time steps of the two runs

    Returns:
        float: log(e1/e2)/log(h1/h2)
    """

    return float(np.log(errors[0]/errors[1])/np.log(steps[0]/steps[1]))


def oscillation_period(signal, dt):
    """Return the period of an oscillating signal from the first maximum of its autocorrelation.

    Args:
        signal (numpy.ndarray): the signal
        dt (float): the sampling interval

    Returns:
        float: the period, nan when the signal shows no oscillation
    """

    signal = np.asarray(signal, dtype=float)
    signal = signal - np.mean(signal)

    acf = np.correlate(signal, signal, 'full')[-len(signal):]
    # Maxima are where the second order differences of the sign of the slope are negative
    inflection = np.diff(np.sign(np.diff(acf)))
    peaks = (inflection < 0).nonzero()[0] + 1
    if peaks.size == 0:
        return np.nan

    return peaks[acf[peaks].argmax()]*dt
