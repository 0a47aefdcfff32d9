import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from spingates.errors import ContractError, NumericError
from spingates.noise import OuParams, sample_trajectory, seed_block
from spingates.propagator import (ControlWaveform, n_steps_for, sample_times, propagate, propagate_batch, propagate_ensemble,
                                  propagate_rows, read_waveform, state_trajectory, unitarity_defect,
                                  write_waveform)
from spingates.spin_model import SystemParams, drift_hamiltonian, spin_operators


def constant_waveform(amp, n, dt=1e-3, detuning=0.0, phase=0.0, sampling="start"):
    return ControlWaveform.from_angular(np.full(n, amp), np.full(n, phase), detuning, dt, sampling)


def rabi_population(omega, delta, t):
    w = np.hypot(omega, delta)
    return (omega / w) ** 2 * np.sin(w * t / 2) ** 2


def test_resonant_rabi_oracle(bare_params):
    omega, n = 2 * np.pi * 3.0, 700
    u = propagate(bare_params, constant_waveform(omega, n))
    assert abs(u[2, 0]) ** 2 == pytest.approx(np.sin(omega * n * 1e-3 / 2) ** 2, abs=1e-12)


def test_detuned_rabi_oracle(bare_params):
    omega, delta, t_f = 2 * np.pi * 4.0, 2 * np.pi * 3.0, 0.4
    u = propagate(bare_params, constant_waveform(omega, n_steps_for(t_f, 1e-3), 1e-3, delta))
    assert abs(u[2, 0]) ** 2 == pytest.approx(rabi_population(omega, delta, t_f), abs=1e-6)


def continuous_reference(params, amp_fn, detuning, t_f):
    """Propagator of the continuous-time drive from an adaptive ODE solver."""
    sx, sy = spin_operators()[:2]
    h0 = drift_hamiltonian(params).matrix

    def rhs(t, y):
        a = detuning * t
        h = h0 + amp_fn(t) * (np.cos(a) * sx - np.sin(a) * sy)
        return (-1j * h @ y.reshape(4, 4)).ravel()

    sol = solve_ivp(rhs, (0.0, t_f), np.eye(4, dtype=complex).ravel(), method="DOP853",
                    rtol=1e-12, atol=1e-13)
    return sol.y[:, -1].reshape(4, 4)


def ramp_errors(params, sampling, dts):
    t_f, detuning = 0.3, -9.0

    def amp(t):
        return 60.0 * t / t_f

    ref = continuous_reference(params, amp, detuning, t_f)
    errors = []
    for dt in dts:
        n = n_steps_for(t_f, dt)
        t = sample_times(n, dt, sampling)
        wf = ControlWaveform.from_angular(amp(t), np.zeros(n), detuning, dt, sampling)
        errors.append(np.linalg.norm(propagate(params, wf) - ref))
    return np.array(errors)


def test_start_sampling_converges_first_order(params):
    e = ramp_errors(params, "start", (4e-3, 2e-3, 1e-3))
    ratios = e[:-1] / e[1:]
    assert np.all((ratios >= 1.7) & (ratios <= 2.3)), ratios


def test_midpoint_sampling_converges_second_order(params):
    e = ramp_errors(params, "midpoint", (4e-3, 2e-3, 1e-3))
    ratios = e[:-1] / e[1:]
    assert np.all((ratios >= 3.5) & (ratios <= 4.5)), ratios


def test_kernel_matches_eigendecomposition(params):
    rng = np.random.default_rng(3)
    n = 300
    wf = ControlWaveform.from_angular(rng.uniform(-80, 80, n), rng.uniform(-3, 3, n), -9.0)
    betas = rng.normal(0, 0.5, size=(3, n))
    fast = propagate_batch(params, wf, betas)
    for k in range(3):
        assert np.max(np.abs(fast[k] - propagate(params, wf, betas[k]))) < 1e-11


def test_unitarity_over_many_steps(params):
    rng = np.random.default_rng(0)
    n = 10_000
    wf = ControlWaveform.from_angular(rng.uniform(-90, 90, n), rng.uniform(-3, 3, n), 5.0)
    beta = sample_trajectory(OuParams(0.46, 1e7), n, 1e-3, 1).values
    assert unitarity_defect(propagate(params, wf, beta)) <= 1e-9
    assert unitarity_defect(propagate_batch(params, wf, beta[None])[0]) <= 1e-9


def test_split_method_agrees_for_small_steps(params):
    wf = constant_waveform(20.0, 200, dt=1e-4, detuning=3.0)
    assert np.max(np.abs(propagate(params, wf) - propagate(params, wf, method="split"))) < 1e-5
    with pytest.raises(ContractError):
        propagate(params, wf, method="magnus")


def test_ensemble_matches_individual_trajectories(params):
    ou = OuParams(0.46, 5.0)
    wf = constant_waveform(10.0, 120, detuning=-9.0)
    seeds = seed_block(4, 5)
    ens = propagate_ensemble(params, wf, seeds, ou)
    for k, s in enumerate(seeds):
        ref = propagate(params, wf, sample_trajectory(ou, wf.n_steps, wf.dt, s))
        assert np.max(np.abs(ens[k] - ref)) < 1e-11
    assert np.array_equal(ens, propagate_ensemble(params, wf, seeds, ou, threads=2))


def test_threaded_rows_are_bit_identical(params):
    rng = np.random.default_rng(1)
    wf = constant_waveform(30.0, 50, detuning=-9.0)
    betas = rng.normal(0, 0.5, size=(9, 50))
    assert np.array_equal(propagate_rows(params, wf, betas, 1), propagate_rows(params, wf, betas, 3))


def test_state_trajectory_ends_at_propagator(params):
    wf = constant_waveform(25.0, 80, detuning=-9.0, phase=0.3)
    psi0 = np.array([1, 0, 0, 0], dtype=complex)
    states = state_trajectory(params, wf, psi0)
    assert states.shape == (81, 4)
    assert np.allclose(states[-1], propagate(params, wf) @ psi0, atol=1e-12)


def test_waveform_file_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(2)
    wf = ControlWaveform.from_angular(rng.uniform(-90, 90, 37), rng.normal(size=37), -8.9999, 1e-3,
                                      "midpoint")
    back = read_waveform(write_waveform(tmp_path / "w.tsv", wf))
    assert np.array_equal(back.omega_mhz, wf.omega_mhz)
    assert np.array_equal(back.phases, wf.phases)
    assert back.detuning == wf.detuning and back.dt == wf.dt and back.sampling == "midpoint"


def test_waveform_validation(tmp_path):
    with pytest.raises(ContractError):
        ControlWaveform(np.zeros(3), np.zeros(4), 0.0)
    with pytest.raises(NumericError):
        ControlWaveform(np.array([np.nan]), np.zeros(1), 0.0)
    with pytest.raises(ContractError):
        ControlWaveform.from_angular([100.0], [0.0], 0.0, omega_max=90.0)
    with pytest.raises(ContractError):
        propagate(SystemParams(), constant_waveform(1.0, 5), np.zeros(4))
    bad = tmp_path / "bad.tsv"
    bad.write_text("nothing here\n")
    with pytest.raises(ContractError):
        read_waveform(bad)
    with pytest.raises(ContractError):
        n_steps_for(0.0105, 1e-3)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(-94, 94), st.floats(-np.pi, np.pi)), min_size=1, max_size=40),
       st.floats(-20, 20), st.floats(-2, 2))
def test_propagators_are_unitary(samples, detuning, beta):
    amp, phase = np.array(samples).T
    wf = ControlWaveform.from_angular(amp, phase, detuning)
    u = propagate_batch(SystemParams(), wf, np.full((1, wf.n_steps), beta))[0]
    assert unitarity_defect(u) < 1e-12
    assert np.max(np.abs(u - propagate(SystemParams(), wf, np.full(wf.n_steps, beta)))) < 1e-11
