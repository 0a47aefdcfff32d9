import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spingates.errors import ContractError, DegeneracyError
from spingates.spin_model import (TWO_PI, SystemParams, Transition, control_coupling, control_hamiltonian,
                                  drift_hamiltonian, drive_detuning, noise_hamiltonian, product_state,
                                  spin_operators, transition_frequency)


def test_spin_algebra():
    sx, sy, sz, ix, iy, iz = spin_operators()
    assert np.allclose(sx @ sy - sy @ sx, 1j * sz)
    assert np.allclose(ix @ iy - iy @ ix, 1j * iz)
    # electron and nuclear operators commute
    for s in (sx, sy, sz):
        for i in (ix, iy, iz):
            assert np.allclose(s @ i, i @ s)
    # basis order uu, ud, du, dd with the electron first
    assert np.allclose(np.diag(sz).real, [0.5, 0.5, -0.5, -0.5])
    assert np.allclose(np.diag(iz).real, [0.5, -0.5, 0.5, -0.5])


def test_drift_spectrum_matches_closed_form(params):
    # electron-up block: (A_zz/2 - w_I) I_z + (A_zx/2) I_x, electron-down block likewise with -A
    r_up = np.hypot(params.a_zz / 2 - params.omega_i, params.a_zx / 2)
    r_dn = np.hypot(params.a_zz / 2 + params.omega_i, params.a_zx / 2)
    expected = np.sort([r_up / 2, -r_up / 2, r_dn / 2, -r_dn / 2])
    got = np.linalg.eigvalsh(drift_hamiltonian(params).matrix)
    assert np.allclose(got, expected, atol=1e-12)


def test_transition_frequencies_without_transverse_coupling():
    p = SystemParams.from_mhz(a_zx=0.0)
    assert transition_frequency(p, "electron_flip_n_up") == pytest.approx(p.omega_e - p.a_zz / 2, abs=1e-9)
    assert transition_frequency(p, Transition.FLIP_FLOP) == pytest.approx(p.omega_e - p.omega_i, abs=1e-9)


def test_transition_frequency_with_transverse_coupling(params):
    r_up = np.hypot(params.a_zz / 2 - params.omega_i, params.a_zx / 2)
    r_dn = np.hypot(params.a_zz / 2 + params.omega_i, params.a_zx / 2)
    expected = params.omega_e - 0.5 * (r_up + r_dn)
    assert transition_frequency(params, "electron_flip_n_up") == pytest.approx(expected, abs=1e-9)
    assert drive_detuning(params, "electron_flip_n_up") == pytest.approx(expected - params.omega_e, abs=1e-9)


def test_degenerate_labelling_is_reported():
    # A_zx alone with w_I = A_zz = 0 makes every nuclear state an equal mix
    p = SystemParams(TWO_PI * 3000.0, 0.0, 0.0, TWO_PI * 0.6, TWO_PI * 15.0)
    with pytest.raises(DegeneracyError):
        transition_frequency(p, "electron_flip_n_up")


def test_control_hamiltonian_matrix_elements(params):
    amp, phase, det, t = 3.0, 0.4, 2.0, 0.7
    h = control_hamiltonian(params, amp, phase, det, t).matrix
    c = control_coupling(amp, phase, det, t)
    # <u n|H|d n> for both nuclear states, zero within a manifold
    assert h[0, 2] == pytest.approx(c)
    assert h[1, 3] == pytest.approx(c)
    assert h[0, 1] == 0 and h[2, 3] == 0
    assert np.allclose(h, h.conj().T)


def test_amplitude_bound(params):
    with pytest.raises(ContractError):
        control_hamiltonian(params, 1.01 * params.omega_max, 0.0, 0.0, 0.0)
    control_hamiltonian(params, -params.omega_max, 0.0, 0.0, 0.0)


def test_params_validation():
    with pytest.raises(ContractError):
        SystemParams(omega_max=0.0)
    with pytest.raises(ContractError):
        SystemParams(a_zz=float("nan"))
    assert SystemParams.from_mhz().a_zz == pytest.approx(TWO_PI * 2.86234)


def test_product_state():
    assert np.allclose(product_state("du"), [0, 0, 1, 0])
    with pytest.raises(ContractError):
        product_state("xx")


def test_noise_term():
    assert np.allclose(noise_hamiltonian(2.0).matrix, 2.0 * spin_operators()[2])


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50), st.floats(-np.pi, np.pi), st.floats(-20, 20), st.floats(0, 5))
def test_control_hamiltonian_is_hermitian_and_bounded(amp, phase, det, t):
    p = SystemParams()
    h = control_hamiltonian(p, amp, phase, det, t).matrix
    assert np.allclose(h, h.conj().T)
    # spectrum of Omega (cos a S_x - sin a S_y) is +-Omega/2
    assert np.allclose(np.sort(np.abs(np.linalg.eigvalsh(h))), [abs(amp) / 2] * 4, atol=1e-9)
