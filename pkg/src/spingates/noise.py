"""
Ornstein-Uhlenbeck dephasing trajectories.

Each realization draws from its own Philox stream.  The 64-bit realization
seed is derived from ``(master_seed, stream, index)`` by
:func:`realization_seed`, which hashes the triple with NumPy's
``SeedSequence``.  Realization ``k`` of an ensemble is therefore reproducible
on its own, independently of chunking, thread count or ensemble size, and
two candidate pulses evaluated with the same seed block see identical noise.

Within a trajectory the standard-normal draws are consumed in order: the
first one sets ``beta(0) ~ N(0, sigma^2)`` and each further draw drives one
step of the exact OU update.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError

#: stream tags for :func:`realization_seed`
STREAM_SEARCH = 0
STREAM_EVAL = 1
STREAM_DIAGNOSTIC = 2


@dataclass(frozen=True)
class OuParams:
    """Stationary standard deviation ``sigma`` (rad/us) and correlation time ``t_c`` (us)."""

    sigma: float
    t_c: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ContractError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if not self.t_c > 0:
            raise ContractError(f"t_c must be positive, got {self.t_c!r}")

    @classmethod
    def from_coherence_times(cls, t2_star: float, t2: float) -> "OuParams":
        return ou_params_from_coherence(t2_star, t2)


@dataclass(frozen=True)
class NoiseTrajectory:
    seed: int
    values: np.ndarray = field(repr=False)
    dt: float

    def __len__(self):
        return len(self.values)


def ou_params_from_coherence(t2_star: float, t2: float) -> OuParams:
    """OU parameters reproducing measured T2* and T2 (both in us).

    ``sigma = sqrt(2) / (2 T2*)`` and ``t_c = T2^3 / (6 T2*^2)``.
    """
    if not (t2_star > 0 and t2 > 0):
        raise ContractError(f"coherence times must be positive, got T2*={t2_star!r}, T2={t2!r}")
    return OuParams(sigma=np.sqrt(2.0) / (2.0 * t2_star), t_c=t2 ** 3 / (6.0 * t2_star ** 2))


def _coefficients(dt: float, params: OuParams):
    # expm1 keeps the diffusion factor accurate when dt << t_c
    decay = np.exp(-dt / params.t_c)
    diffusion = params.sigma * np.sqrt(-np.expm1(-2.0 * dt / params.t_c))
    return decay, diffusion


def ou_step(beta, dt: float, params: OuParams, gaussian_draw):
    """One exact OU update: ``exp(-dt/t_c) beta + sigma sqrt(1 - exp(-2 dt/t_c)) xi``."""
    if not dt > 0:
        raise ContractError(f"dt must be positive, got {dt!r}")
    decay, diffusion = _coefficients(dt, params)
    return decay * beta + diffusion * gaussian_draw


def realization_seed(master_seed: int, index: int, stream: int = STREAM_SEARCH) -> int:
    """64-bit seed of realization ``index`` in ``stream`` under ``master_seed``."""
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(stream), int(index)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def seed_block(master_seed: int, count: int, stream: int = STREAM_SEARCH, start: int = 0):
    return [realization_seed(master_seed, i, stream) for i in range(start, start + count)]


def _draws(seed: int, n_steps: int) -> np.ndarray:
    return np.random.Generator(np.random.Philox(seed)).standard_normal(n_steps)


def _integrate(xi: np.ndarray, params: OuParams, dt: float) -> np.ndarray:
    """Apply the OU recursion along the last axis of a block of draws."""
    decay, diffusion = _coefficients(dt, params)
    out = np.empty_like(xi)
    out[..., 0] = params.sigma * xi[..., 0]
    for k in range(1, xi.shape[-1]):
        out[..., k] = decay * out[..., k - 1] + diffusion * xi[..., k]
    return out


def sample_trajectory(params: OuParams, n_steps: int, dt: float, seed: int) -> NoiseTrajectory:
    """One stationary OU realization sampled once per propagation step."""
    if n_steps < 1:
        raise ContractError(f"n_steps must be >= 1, got {n_steps!r}")
    if not dt > 0:
        raise ContractError(f"dt must be positive, got {dt!r}")
    values = _integrate(_draws(seed, n_steps), params, dt)
    values.setflags(write=False)
    return NoiseTrajectory(seed=int(seed), values=values, dt=dt)


def sample_ensemble(params: OuParams, n_steps: int, dt: float, seeds) -> np.ndarray:
    """Trajectories for many seeds as an array of shape ``(len(seeds), n_steps)``.

    Row ``i`` equals ``sample_trajectory(params, n_steps, dt, seeds[i]).values``.
    """
    if n_steps < 1:
        raise ContractError(f"n_steps must be >= 1, got {n_steps!r}")
    if not dt > 0:
        raise ContractError(f"dt must be positive, got {dt!r}")
    seeds = list(seeds)
    if params.sigma == 0.0:
        return np.zeros((len(seeds), n_steps))
    xi = np.empty((len(seeds), n_steps))
    for i, seed in enumerate(seeds):
        xi[i] = _draws(seed, n_steps)
    return _integrate(xi, params, dt)


def stationary_autocovariance(params: OuParams, lag):
    return params.sigma ** 2 * np.exp(-np.abs(lag) / params.t_c)


def write_trajectory(path, trajectory: NoiseTrajectory, params: OuParams | None = None) -> Path:
    """Dump a trajectory as tab-separated ``t_ns``, ``beta_rad_per_us`` columns."""
    path = Path(path)
    meta = f"# ou_trajectory seed={trajectory.seed} dt_us={trajectory.dt!r}"
    if params is not None:
        meta += f" sigma_rad_per_us={params.sigma!r} t_c_us={params.t_c!r}"
    lines = [meta, "t_ns\tbeta_rad_per_us"]
    for k, beta in enumerate(trajectory.values):
        lines.append(f"{k * trajectory.dt * 1e3!r}\t{float(beta)!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_trajectory(path) -> NoiseTrajectory:
    lines = Path(path).read_text().splitlines()
    meta = dict(tok.split("=", 1) for tok in lines[0].lstrip("#").split() if "=" in tok)
    if lines[1].split("\t") != ["t_ns", "beta_rad_per_us"]:
        raise ContractError(f"{path}: unexpected header {lines[1]!r}")
    values = np.array([float(line.split("\t")[1]) for line in lines[2:] if line.strip()])
    return NoiseTrajectory(seed=int(meta["seed"]), values=values, dt=float(meta["dt_us"]))
