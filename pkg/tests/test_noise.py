import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spingates.errors import ContractError
from spingates.noise import (STREAM_EVAL, STREAM_SEARCH, OuParams, ou_params_from_coherence, ou_step,
                             read_trajectory, realization_seed, sample_ensemble, sample_trajectory,
                             seed_block, stationary_autocovariance, write_trajectory)


def test_parameters_from_coherence_times():
    ou = ou_params_from_coherence(1.542, 605.0)
    assert ou.sigma == pytest.approx(np.sqrt(2) / (2 * 1.542), rel=1e-15)
    assert ou.t_c == pytest.approx(605.0 ** 3 / (6 * 1.542 ** 2), rel=1e-15)
    assert ou.sigma == pytest.approx(0.4585647, abs=1e-7)
    with pytest.raises(ContractError):
        ou_params_from_coherence(0.0, 1.0)


def test_invalid_params():
    with pytest.raises(ContractError):
        OuParams(-1.0, 1.0)
    with pytest.raises(ContractError):
        OuParams(1.0, 0.0)


def test_ensemble_rows_match_single_trajectories():
    ou = OuParams(1.0, 0.5)
    seeds = seed_block(7, 5)
    block = sample_ensemble(ou, 40, 0.01, seeds)
    for i, s in enumerate(seeds):
        assert np.array_equal(block[i], sample_trajectory(ou, 40, 0.01, s).values)


def test_seeds_are_deterministic_and_stream_separated():
    assert realization_seed(1, 3) == realization_seed(1, 3)
    assert realization_seed(1, 3, STREAM_SEARCH) != realization_seed(1, 3, STREAM_EVAL)
    assert realization_seed(1, 3) != realization_seed(2, 3)
    assert seed_block(5, 4, start=2) == seed_block(5, 6)[2:]


def test_exact_update_step():
    ou = OuParams(2.0, 0.3)
    dt = 0.05
    beta = ou_step(1.5, dt, ou, 0.7)
    a = np.exp(-dt / ou.t_c)
    assert beta == pytest.approx(a * 1.5 + ou.sigma * np.sqrt(1 - a ** 2) * 0.7, rel=1e-14)


def test_zero_sigma_gives_zero_noise():
    assert not np.any(sample_ensemble(OuParams(0.0, 1.0), 10, 0.01, [1, 2]))


def test_moments_small_ensemble():
    ou = OuParams(1.0, 1.0)
    dt, n = 0.05, 41
    b = sample_ensemble(ou, n, dt, seed_block(11, 20000))
    # variance is stationary along the trajectory
    var = b.var(axis=0)
    assert np.all(np.abs(var - 1.0) < 5 * np.sqrt(2.0 / 20000))
    lag = 20
    cov = np.mean(b[:, 0] * b[:, lag])
    assert cov == pytest.approx(stationary_autocovariance(ou, lag * dt), abs=5 / np.sqrt(20000))


def test_trajectory_file_round_trip(tmp_path):
    ou = OuParams(0.4, 10.0)
    traj = sample_trajectory(ou, 25, 0.001, 99)
    back = read_trajectory(write_trajectory(tmp_path / "beta.tsv", traj, ou))
    assert back.seed == 99 and back.dt == traj.dt
    assert np.array_equal(back.values, traj.values)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.01, 100.0), st.integers(0, 2 ** 63))
def test_trajectories_scale_linearly_with_sigma(sigma, t_c, seed):
    base = sample_trajectory(OuParams(1.0, t_c), 30, 0.01, seed).values
    scaled = sample_trajectory(OuParams(sigma, t_c), 30, 0.01, seed).values
    assert np.allclose(scaled, sigma * base, rtol=1e-12, atol=0)
