import logging

import numpy as np
import pytest

from kleinsim.kernel.dirac import make_gaussian_spinor
from kleinsim.kernel.fock import coherent_amplitude, displace, ground_state, reduced_motional_state
from kleinsim.kernel.reconstruction import (FringeScan, ReconstructionError, UndersampledScanError, acquire_fringes, branch_momentum_profile,
                                            filter_energy_branch, invert_fringes, readout_signal, resolution)
from kleinsim.utils.signal import l1_distance


def _coherent(x, p, cutoff=128, qubit1=(1.0, 1.0), qubit2=(1.0, 0.0)):

    return displace(ground_state(cutoff, qubit1, qubit2), coherent_amplitude(x, p))


def _at(grid, values, position):

    return values[np.argmin(np.abs(grid.x - position))]


def test_readout_signal():

    up = np.array([1.0, 0.0])

    assert readout_signal(up, np.array([0.0]))[0] == pytest.approx(1.0)
    assert readout_signal(up, np.array([np.pi]))[0] == pytest.approx(-1.0)
    assert readout_signal(np.array([1.0, 1.0])/np.sqrt(2.0), np.array([0.0]))[0] == pytest.approx(0.0)


def test_resolution():

    assert resolution(6.0) == pytest.approx(np.pi/6.0)

    with pytest.raises(ReconstructionError):
        resolution(0.0)


def test_reconstruction_of_a_displaced_state(small_grid):

    state = _coherent(2.0, 0.0)
    scan = acquire_fringes(state)
    reconstructed = invert_fringes(scan, small_grid)

    expected = np.exp(-0.5*(small_grid.x - 2.0)**2)/np.sqrt(2.0*np.pi)

    assert scan.k_max == pytest.approx(6.0)
    assert reconstructed.resolution == pytest.approx(np.pi/6.0)
    assert small_grid.integrate(reconstructed.density) == pytest.approx(1.0)
    assert reconstructed.negativity < 1.0e-3
    assert l1_distance(reconstructed.density, expected, small_grid.dx) < 1.0e-3


def test_two_peaks_are_resolved_only_with_a_wide_scan(small_grid):

    rho = 0.5*(reduced_motional_state(_coherent(1.5, 0.0, 64)) + reduced_motional_state(_coherent(-1.5, 0.0, 64)))

    sharp = invert_fringes(acquire_fringes(rho, k_max=6.0), small_grid).density
    assert _at(small_grid, sharp, 0.0) < _at(small_grid, sharp, 1.5)

    blurred = invert_fringes(acquire_fringes(rho, k_max=0.5), small_grid).density
    assert _at(small_grid, blurred, 0.0) > _at(small_grid, blurred, 1.5)


def test_undersampled_scan(small_grid):

    scan = acquire_fringes(_coherent(0.0, 0.0, 32), k_max=6.0, n_k=16)

    with pytest.raises(UndersampledScanError):
        invert_fringes(scan, small_grid)


def test_aliasing_warning(caplog):

    with caplog.at_level(logging.WARNING):
        acquire_fringes(_coherent(0.0, 0.0, 64), k_max=6.0, n_k=8)

    assert 'alias' in caplog.text


def test_invalid_scans():

    k = np.linspace(0.0, 1.0, 5)

    with pytest.raises(ReconstructionError):
        FringeScan(k_values=k + 0.1, sin_signal=np.zeros(5), cos_signal=np.zeros(5))

    with pytest.raises(ReconstructionError):
        FringeScan(k_values=k, sin_signal=np.zeros(5), cos_signal=np.full(5, 1.5))

    with pytest.raises(ReconstructionError):
        FringeScan(k_values=np.array([0.0, 0.1, 0.3]), sin_signal=np.zeros(3), cos_signal=np.zeros(3))

    with pytest.raises(ReconstructionError):
        acquire_fringes(2.0*reduced_motional_state(_coherent(0.0, 0.0, 16)))


def test_scan_csv(tmp_path):

    scan = acquire_fringes(_coherent(1.0, 0.5, 32), k_max=2.0, n_k=32)
    filename = str(tmp_path / 'fringes.csv')

    scan.to_csv(filename)
    loaded = FringeScan.from_csv(filename)

    np.testing.assert_allclose(loaded.k_values, scan.k_values, rtol=1.0e-11)
    np.testing.assert_allclose(loaded.sin_signal, scan.sin_signal, rtol=1.0e-11, atol=1.0e-14)
    np.testing.assert_allclose(loaded.cos_signal, scan.cos_signal, rtol=1.0e-11, atol=1.0e-14)


def test_branch_filter_on_a_single_internal_state():

    state = _coherent(0.0, 1.5, 64, qubit1=(1.0, 0.0))

    for branch in (1, -1):
        result = filter_energy_branch(state, branch)
        assert result.probability == pytest.approx(0.5, abs=1.0e-12)
        assert result.momentum_sign == 1
        assert result.state.norm() == pytest.approx(1.0)


def test_branch_filter_keeps_a_pure_branch(free_params):

    for branch, qubit1 in ((1, (1.0, 1.0)), (-1, (1.0, -1.0))):
        result = filter_energy_branch(_coherent(0.0, 4.5, 64, qubit1=qubit1), branch, free_params)
        assert result.probability == pytest.approx(1.0, abs=1.0e-9)
        assert not result.entangled
        assert result.leakage < 1.0e-3

    state = _coherent(0.0, 4.5, 64)

    with pytest.raises(ReconstructionError):
        filter_energy_branch(state, 2)


def test_branch_momentum_profile(small_grid, free_params):

    spinor = make_gaussian_spinor(small_grid, p0=2.0, internal=(1.0, 1.0))

    profile = branch_momentum_profile(spinor)
    assert _at(small_grid, profile, 0.0) == pytest.approx(2.0, abs=1.0e-6)

    projected = branch_momentum_profile(spinor, params=free_params, branch=1)
    assert _at(small_grid, projected, 0.0) == pytest.approx(2.0, abs=0.05)

    with pytest.raises(ReconstructionError):
        branch_momentum_profile(_coherent(0.0, 2.0, 32))

    with pytest.raises(ReconstructionError):
        branch_momentum_profile(spinor, branch=1)
