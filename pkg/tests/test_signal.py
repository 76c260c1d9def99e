import numpy as np
import pytest

from kleinsim.utils.signal import centered_difference, count_sign_changes, l1_distance, observed_order, oscillation_period, overlap_mass
from kleinsim.utils.units import angular_to_kilohertz, kilohertz_to_angular


def test_centered_difference():

    times = np.linspace(0.0, 1.0, 11)
    interior, derivative = centered_difference(times**2, times)

    np.testing.assert_allclose(interior, times[1:-1])
    np.testing.assert_allclose(derivative, 2.0*times[1:-1], atol=1.0e-12)


def test_count_sign_changes():

    assert count_sign_changes([1.0, 0.5, -0.5, -1.0, 0.2, 1.0]) == 2
    assert count_sign_changes([1.0, 0.01, -0.01, 1.0], dead_band=0.1) == 0
    assert count_sign_changes([]) == 0


def test_l1_distance_and_overlap():

    dx = 0.1
    first = np.array([1.0, 2.0, 0.0])
    second = np.array([0.0, 2.0, 3.0])

    assert l1_distance(first, second, dx) == pytest.approx(0.4)
    assert overlap_mass(first, second, dx) == pytest.approx(0.2)


def test_observed_order():

    assert observed_order([4.0e-4, 1.0e-4], [2.0, 1.0]) == pytest.approx(2.0)


def test_oscillation_period():

    dt = 1.0
    times = np.arange(400)*dt
    signal = np.sin(2.0*np.pi*times/50.0)

    assert oscillation_period(signal, dt) == pytest.approx(50.0, abs=1.0)


def test_unit_conversions():

    assert kilohertz_to_angular(1.0) == pytest.approx(2.0e-3*np.pi)
    assert angular_to_kilohertz(kilohertz_to_angular(22.0)) == pytest.approx(22.0)
    np.testing.assert_allclose(kilohertz_to_angular([0.0, 50.0]), [0.0, 0.1*np.pi])
