"""
Piecewise-constant propagation of the two-qubit unitary.

The Hamiltonian of step ``k`` is frozen at the step sample time ``t_k`` and
its exponential is applied exactly.  Two sample conventions are supported:
``"start"`` (``t_k = k dt``, the default) and ``"midpoint"``
(``t_k = (k + 1/2) dt``).  The waveform records which one its samples use so
the carrier phase ``Delta t_k`` is always evaluated at the same instants.

:func:`propagate` is the reference single-trajectory path (batched
eigendecomposition of the step Hamiltonians); :func:`propagate_ensemble`
runs the compiled kernel over many noise realizations at once.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernel
from .errors import ContractError, NumericError
from .noise import NoiseTrajectory, OuParams, sample_ensemble
from .spin_model import (TWO_PI, SystemParams, control_coupling, drift_hamiltonian,
                         spin_operators)

DEFAULT_DT = 1e-3
SAMPLINGS = ("start", "midpoint")
UNITARY_TOL = 1e-9
_ENSEMBLE_CHUNK = 256


@dataclass(frozen=True)
class ControlWaveform:
    """Per-step drive samples.

    Amplitudes are stored as ordinary frequencies ``omega_mhz`` (signed) so a
    waveform written to disk reads back bit-identically; ``amplitudes`` gives
    them in rad/us.
    """

    omega_mhz: np.ndarray = field(repr=False)
    phases: np.ndarray = field(repr=False)
    detuning: float
    dt: float = DEFAULT_DT
    sampling: str = "start"
    omega_max: float | None = None
    clamped: int = 0

    def __post_init__(self):
        omega = np.array(self.omega_mhz, dtype=float)
        phases = np.array(self.phases, dtype=float)
        if omega.ndim != 1 or omega.shape != phases.shape or omega.size < 1:
            raise ContractError(
                f"amplitudes and phases must be equal-length 1-D arrays, got {omega.shape} and {phases.shape}")
        if not self.dt > 0:
            raise ContractError(f"dt must be positive, got {self.dt!r}")
        if self.sampling not in SAMPLINGS:
            raise ContractError(f"sampling must be one of {SAMPLINGS}, got {self.sampling!r}")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(phases)) and np.isfinite(self.detuning)):
            raise NumericError("waveform contains non-finite samples")
        if self.omega_max is not None:
            peak = np.max(np.abs(omega)) * TWO_PI
            if peak > self.omega_max * (1 + 1e-12):
                raise ContractError(f"waveform peak {peak!r} rad/us exceeds omega_max={self.omega_max!r}")
        omega.setflags(write=False)
        phases.setflags(write=False)
        object.__setattr__(self, "omega_mhz", omega)
        object.__setattr__(self, "phases", phases)

    @classmethod
    def from_angular(cls, amplitudes, phases, detuning, dt=DEFAULT_DT, sampling="start",
                     omega_max=None, clamped=0) -> "ControlWaveform":
        return cls(np.asarray(amplitudes, dtype=float) / TWO_PI, phases, detuning, dt,
                   sampling, omega_max, clamped)

    @property
    def amplitudes(self) -> np.ndarray:
        return self.omega_mhz * TWO_PI

    @property
    def n_steps(self) -> int:
        return self.omega_mhz.size

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return sample_times(self.n_steps, self.dt, self.sampling)

    def couplings(self) -> np.ndarray:
        """Per-step complex electron coupling ``(Omega/2) exp(i(Delta t - phi))``."""
        return control_coupling(self.amplitudes, self.phases, self.detuning, self.times)


def sample_times(n_steps: int, dt: float, sampling: str = "start") -> np.ndarray:
    offset = 0.5 if sampling == "midpoint" else 0.0
    return (np.arange(n_steps) + offset) * dt


def n_steps_for(duration: float, dt: float) -> int:
    n = int(round(duration / dt))
    if n < 1 or abs(duration / dt - n) > 1e-6:
        raise ContractError(f"duration {duration!r} us is not a whole number of {dt!r} us steps")
    return n


def check_unitary(u, tol=UNITARY_TOL, name="matrix") -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape[-2:] != (4, 4):
        raise ContractError(f"{name} must be 4x4, got shape {u.shape}")
    defect = unitarity_defect(u)
    if not defect <= tol:
        raise ContractError(f"{name} is not unitary (defect {defect:.3e} > {tol:.1e})")
    return u


def unitarity_defect(u) -> float:
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return float(np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - eye)))


def step_hamiltonians(params: SystemParams, waveform: ControlWaveform, beta=None) -> np.ndarray:
    """Frozen Hamiltonians of every step, shape ``(n_steps, 4, 4)``."""
    sx, sy, sz = spin_operators()[:3]
    c = waveform.couplings()
    # Omega [cos a S_x - sin a S_y] == 2 Re(c) S_x - 2 Im(c) S_y
    h = (drift_hamiltonian(params).matrix[None]
         + 2.0 * c.real[:, None, None] * sx - 2.0 * c.imag[:, None, None] * sy)
    if beta is not None:
        h = h + np.asarray(beta)[:, None, None] * sz
    if not np.all(np.isfinite(h)):
        raise NumericError("non-finite entries in step Hamiltonian")
    return h


def step_unitaries(hamiltonians: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` for a stack of Hermitian matrices via eigendecomposition."""
    energies, vectors = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * energies * dt)
    return (vectors * phases[..., None, :]) @ np.conj(np.swapaxes(vectors, -1, -2))


def _ordered_product(steps: np.ndarray) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for step in steps:
        u = step @ u
    return u


def _noise_values(noise, waveform):
    if noise is None:
        return None
    if isinstance(noise, NoiseTrajectory):
        if noise.dt != waveform.dt:
            raise ContractError(f"noise dt {noise.dt!r} != waveform dt {waveform.dt!r}")
        values = noise.values
    else:
        values = np.asarray(noise, dtype=float)
    if values.shape != (waveform.n_steps,):
        raise ContractError(f"noise has {values.shape} samples, waveform has {waveform.n_steps} steps")
    return values


def propagate(params: SystemParams, waveform: ControlWaveform, noise=None,
              method: str = "exact") -> np.ndarray:
    """Final propagator ``U(T)`` for one (optional) noise trajectory.

    ``method="exact"`` exponentiates each frozen step Hamiltonian;
    ``method="split"`` uses a symmetric drift/control splitting per step and
    exists only for cross-checks.
    """
    beta = _noise_values(noise, waveform)
    if method == "exact":
        steps = step_unitaries(step_hamiltonians(params, waveform, beta), waveform.dt)
    elif method == "split":
        sz = spin_operators()[2]
        static = drift_hamiltonian(params).matrix[None]
        if beta is not None:
            static = static + beta[:, None, None] * sz
        static = np.broadcast_to(static, (waveform.n_steps, 4, 4))
        control = step_hamiltonians(SystemParams(0.0, 0.0, 0.0, 0.0, params.omega_max), waveform)
        half = step_unitaries(static, 0.5 * waveform.dt)
        steps = half @ step_unitaries(control, waveform.dt) @ half
    else:
        raise ContractError(f"unknown propagation method {method!r}")
    return _ordered_product(steps)


def _substeps(drift, couplings, beta, dt):
    bound = (np.max(np.abs(np.linalg.eigvalsh(drift)))
             + (np.max(np.abs(couplings)) if couplings.size else 0.0)
             + (0.5 * np.max(np.abs(beta)) if beta.size else 0.0))
    if not np.isfinite(bound):
        raise NumericError("non-finite entries in step Hamiltonian")
    return max(1, int(np.ceil(bound * dt / _kernel.MAX_STEP_NORM)))


def propagate_batch(params: SystemParams, waveform: ControlWaveform, betas) -> np.ndarray:
    """Propagators for a block of noise rows, shape ``(n_rows, 4, 4)``.

    ``betas`` has shape ``(n_rows, n_steps)``; a row of zeros gives the
    noiseless propagator.
    """
    betas = np.asarray(betas, dtype=float)
    if betas.ndim != 2 or betas.shape[1] != waveform.n_steps:
        raise ContractError(f"noise block shape {betas.shape} does not match {waveform.n_steps} steps")
    drift = np.ascontiguousarray(drift_hamiltonian(params).matrix)
    c = waveform.couplings()
    beta_t = np.ascontiguousarray(betas.T)
    nsub = _substeps(drift, c, betas, waveform.dt)
    u_re, u_im = _kernel.identity_state(betas.shape[0])
    _kernel.propagate_columns(drift, np.ascontiguousarray(c.real), np.ascontiguousarray(c.imag),
                              beta_t, waveform.dt, nsub, u_re, u_im)
    u = _kernel.unpack(u_re, u_im)
    if not np.all(np.isfinite(u)):
        raise NumericError("propagation produced non-finite entries")
    return u


def propagate_rows(params: SystemParams, waveform: ControlWaveform, betas, threads: int = 1) -> np.ndarray:
    """:func:`propagate_batch` with the rows split over ``threads`` workers.

    The result is identical to the single-threaded call.
    """
    betas = np.asarray(betas, dtype=float)
    if threads <= 1 or betas.shape[0] < 2 * threads:
        return propagate_batch(params, waveform, betas)
    blocks = np.array_split(betas, threads)
    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(lambda b: propagate_batch(params, waveform, b), blocks))
    return np.concatenate(parts)


def propagate_ensemble(params: SystemParams, waveform: ControlWaveform, seeds, ou: OuParams,
                       threads: int = 1) -> np.ndarray:
    """One propagator per seed, in seed order, shape ``(len(seeds), 4, 4)``."""
    seeds = list(seeds)
    if not seeds:
        raise ContractError("propagate_ensemble needs at least one seed")
    chunks = [seeds[i:i + _ENSEMBLE_CHUNK] for i in range(0, len(seeds), _ENSEMBLE_CHUNK)]

    def run(chunk):
        betas = sample_ensemble(ou, waveform.n_steps, waveform.dt, chunk)
        return propagate_batch(params, waveform, betas)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(chunk) for chunk in chunks]
    return np.concatenate(parts)


def state_trajectory(params: SystemParams, waveform: ControlWaveform, psi0) -> np.ndarray:
    """Noise-free state after every step, shape ``(n_steps + 1, 4)`` including ``psi0``."""
    steps = step_unitaries(step_hamiltonians(params, waveform), waveform.dt)
    states = np.empty((waveform.n_steps + 1, 4), dtype=complex)
    states[0] = psi0
    for k, step in enumerate(steps):
        states[k + 1] = step @ states[k]
    return states


def write_waveform(path, waveform: ControlWaveform) -> Path:
    """Tab-separated ``t_ns``, ``omega_mhz``, ``phi_rad`` with a metadata comment line."""
    path = Path(path)
    lines = [f"# waveform dt_us={waveform.dt!r} detuning_rad_per_us={float(waveform.detuning)!r} "
             f"sampling={waveform.sampling}",
             "t_ns\tomega_mhz\tphi_rad"]
    t_ns = waveform.times * 1e3
    for t, omega, phi in zip(t_ns, waveform.omega_mhz, waveform.phases):
        lines.append(f"{float(t)!r}\t{float(omega)!r}\t{float(phi)!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_waveform(path, omega_max=None) -> ControlWaveform:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ContractError(f"cannot read waveform {path}: {exc}") from exc
    if len(lines) < 3 or not lines[0].startswith("#"):
        raise ContractError(f"{path}: missing waveform metadata line")
    meta = dict(tok.split("=", 1) for tok in lines[0].lstrip("#").split() if "=" in tok)
    if lines[1].split("\t") != ["t_ns", "omega_mhz", "phi_rad"]:
        raise ContractError(f"{path}: unexpected header {lines[1]!r}")
    try:
        rows = np.array([[float(x) for x in line.split("\t")] for line in lines[2:] if line.strip()])
        dt = float(meta["dt_us"])
        detuning = float(meta["detuning_rad_per_us"])
    except (KeyError, ValueError) as exc:
        raise ContractError(f"{path}: malformed waveform ({exc})") from exc
    if rows.ndim != 2 or rows.shape[1] != 3:
        raise ContractError(f"{path}: expected 3 columns per row")
    return ControlWaveform(rows[:, 1], rows[:, 2], detuning, dt, meta.get("sampling", "start"),
                           omega_max)
