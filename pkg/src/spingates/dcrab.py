"""
dCRAB pulse optimization.

Each control (drive amplitude and phase) is a constant offset plus a sum of
``cos``/``sin`` terms at randomly drawn frequencies.  Every superiteration
draws new frequencies, appends them to the basis and runs Nelder-Mead over
the new coefficients together with the two offsets, keeping all earlier
coefficients frozen ("dressing").  The search starts from the incumbent with
the new coefficients at zero, so the best FoM never increases.

Noise during the search uses one frozen seed block (common random numbers);
the reported figures use fresh seeds from a separate stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError
from .gates import TargetGate, fidelities, fom_av, fom_cb
from .nelder_mead import nelder_mead
from .noise import STREAM_EVAL, STREAM_SEARCH, OuParams, sample_ensemble, seed_block
from .propagator import DEFAULT_DT, ControlWaveform, n_steps_for, propagate_batch, propagate_rows, sample_times
from .spin_model import SystemParams, Transition, drive_detuning
from .weyl import f_nl

FOM_KINDS = ("average", "combined")
FREQUENCY_RANGE = (0.1, 40.0)  # omega * t_f
STREAM_BASIS = 3

# drive transition per target gate
GATE_TRANSITIONS = {
    "cenotn": Transition.ELECTRON_FLIP_N_UP,
    "cnnote": Transition.ELECTRON_FLIP_N_UP,
    "hadamard_e": Transition.ELECTRON_FLIP_N_UP,
    "hadamard_n": Transition.ELECTRON_FLIP_N_UP,
    "x_e": Transition.ELECTRON_FLIP_N_UP,
    "swap": Transition.FLIP_FLOP,
    "custom": Transition.ELECTRON_FLIP_N_UP,
}


@dataclass(frozen=True)
class OptimizerConfig:
    """Search budget and basis settings.

    Counts are per superiteration where that applies.  ``initial_amplitude``
    of ``None`` selects a resonant pi-pulse offset capped at half the drive
    bound.
    """

    superiterations: int = 10
    evals_per_superiteration: int = 5000
    n_noise_opt: int = 100
    n_noise_eval: int = 5000
    n_eval_repeats: int = 10
    fom_kind: str = "average"
    rise_time: float = 0.1
    master_seed: int = 0
    freqs_per_superiteration: int = 2
    shared_frequencies: bool = False
    dt: float = DEFAULT_DT
    sampling: str = "start"
    initial_amplitude: float | None = None
    amplitude_step: float = 0.1  # fraction of omega_max
    phase_step: float = 0.1  # rad
    adaptive_simplex: bool = False

    def __post_init__(self):
        for name in ("superiterations", "evals_per_superiteration", "n_noise_opt", "n_noise_eval",
                     "n_eval_repeats", "freqs_per_superiteration"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ContractError(f"{name} must be an integer >= 1, got {value!r}")
        if self.fom_kind not in FOM_KINDS:
            raise ContractError(f"fom_kind must be one of {FOM_KINDS}, got {self.fom_kind!r}")
        if not self.rise_time > 0:
            raise ContractError(f"rise_time must be positive, got {self.rise_time!r}")
        if not self.dt > 0:
            raise ContractError(f"dt must be positive, got {self.dt!r}")
        if not (self.amplitude_step > 0 and self.phase_step > 0):
            raise ContractError("simplex steps must be positive")
        n_params = 2 + 4 * self.freqs_per_superiteration
        if self.evals_per_superiteration < n_params + 2:
            raise ContractError(f"evals_per_superiteration must be >= {n_params + 2} "
                                f"for {n_params} parameters per superiteration")

    def check_duration(self, t_f: float):
        if not 2 * self.rise_time < t_f:
            raise ContractError(f"t_f={t_f!r} us must exceed twice the rise time {self.rise_time!r} us")


@dataclass(frozen=True)
class BasisSet:
    """Fourier expansion of both controls.

    ``amp_coeffs`` and ``phase_coeffs`` have shape ``(K, 2)`` holding the
    ``(cos, sin)`` coefficients of the matching frequency.
    """

    t_f: float
    amp_offset: float = 0.0
    phase_offset: float = 0.0
    amp_freqs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    amp_coeffs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    phase_freqs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phase_coeffs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        if not self.t_f > 0:
            raise ContractError(f"t_f must be positive, got {self.t_f!r}")
        for freqs, coeffs in ((self.amp_freqs, self.amp_coeffs), (self.phase_freqs, self.phase_coeffs)):
            f = np.asarray(freqs, dtype=float)
            c = np.asarray(coeffs, dtype=float)
            if c.shape != (f.size, 2):
                raise ContractError(f"coefficients shape {c.shape} does not match {f.size} frequencies")
            scaled = f * self.t_f
            if np.any(scaled < FREQUENCY_RANGE[0] * (1 - 1e-12)) or np.any(scaled > FREQUENCY_RANGE[1] * (1 + 1e-12)):
                raise ContractError(f"basis frequencies must satisfy omega t_f in {FREQUENCY_RANGE}")
        for name in ("amp_freqs", "amp_coeffs", "phase_freqs", "phase_coeffs"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([[self.amp_offset, self.phase_offset],
                               self.amp_coeffs.ravel(), self.phase_coeffs.ravel()])

    def extended(self, amp_freqs, phase_freqs) -> "BasisSet":
        """Append new frequencies with zero coefficients."""
        amp_freqs = np.asarray(amp_freqs, dtype=float)
        phase_freqs = np.asarray(phase_freqs, dtype=float)
        return replace(self,
                       amp_freqs=np.concatenate([self.amp_freqs, amp_freqs]),
                       amp_coeffs=np.vstack([self.amp_coeffs, np.zeros((amp_freqs.size, 2))]),
                       phase_freqs=np.concatenate([self.phase_freqs, phase_freqs]),
                       phase_coeffs=np.vstack([self.phase_coeffs, np.zeros((phase_freqs.size, 2))]))

    def with_tail(self, x, n_amp: int, n_phase: int) -> "BasisSet":
        """Set the offsets and the last ``n_amp``/``n_phase`` coefficient rows from ``x``."""
        x = np.asarray(x, dtype=float)
        amp = self.amp_coeffs.copy()
        phase = self.phase_coeffs.copy()
        if n_amp:
            amp[-n_amp:] = x[2:2 + 2 * n_amp].reshape(n_amp, 2)
        if n_phase:
            phase[-n_phase:] = x[2 + 2 * n_amp:].reshape(n_phase, 2)
        return replace(self, amp_offset=float(x[0]), phase_offset=float(x[1]),
                       amp_coeffs=amp, phase_coeffs=phase)

    def tail(self, n_amp: int, n_phase: int) -> np.ndarray:
        amp = self.amp_coeffs[self.amp_coeffs.shape[0] - n_amp:]
        phase = self.phase_coeffs[self.phase_coeffs.shape[0] - n_phase:]
        return np.concatenate([[self.amp_offset, self.phase_offset], amp.ravel(), phase.ravel()])


@dataclass
class SuperiterationTrace:
    index: int
    amp_freqs: np.ndarray
    phase_freqs: np.ndarray
    fom_start: float
    fom_best: float
    n_evals: int
    n_nonfinite: int
    stop_reason: str
    history: list = field(default_factory=list)


@dataclass
class Evaluation:
    """Fresh-seed FoM statistics over ``repeats`` blocks of ``n`` realizations."""

    fom_kind: str
    n: int
    repeats: int
    foms: np.ndarray
    fidelity_mean: float  # average fidelity against the target gate

    @property
    def mean(self) -> float:
        return float(np.mean(self.foms))

    @property
    def std(self) -> float:
        if self.foms.size < 2:
            return 0.0
        # shifting by the first entry keeps identical repeats at exactly zero spread
        return float(np.std(self.foms - self.foms[0], ddof=1))

    @property
    def sem(self) -> float:
        return self.std / np.sqrt(self.foms.size)


@dataclass
class OptimizationResult:
    gate: str
    t_f: float
    detuning: float
    basis: BasisSet
    waveform: ControlWaveform
    fom_search: float
    evaluation: Evaluation
    trace: list
    search_seeds: list
    u_ideal: np.ndarray = field(repr=False)


def envelope(t, t_f: float, t_r: float):
    """Gaussian ramp envelope, 0 at both ends and 1 on the plateau.

    The ramps use width ``t_r / 4`` and are written as
    ``(exp(-x) - e0) / (1 - e0)`` so that ``s(t_r) = 1`` holds exactly.
    """
    if not 2 * t_r < t_f:
        raise ContractError(f"envelope needs 2 t_r < t_f, got t_r={t_r!r}, t_f={t_f!r}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > t_f) or not np.all(np.isfinite(t)):
        raise ContractError(f"envelope time outside [0, {t_f!r}]")
    sigma = 0.25 * t_r
    e0 = np.exp(-t_r ** 2 / (2 * sigma ** 2))
    norm = 1.0 - e0
    rise = (np.exp(-(t - t_r) ** 2 / (2 * sigma ** 2)) - e0) / norm
    fall = (np.exp(-(t - (t_f - t_r)) ** 2 / (2 * sigma ** 2)) - e0) / norm
    s = np.where(t <= t_r, rise, np.where(t >= t_f - t_r, fall, 1.0))
    return s if s.ndim else float(s)


def _series(t, offset, freqs, coeffs):
    if freqs.size == 0:
        return np.full_like(t, offset)
    phase = np.outer(t, freqs)
    return offset + np.cos(phase) @ coeffs[:, 0] + np.sin(phase) @ coeffs[:, 1]


def realize_waveform(basis: BasisSet, params: SystemParams, detuning: float,
                     config: OptimizerConfig, envelope_values=None) -> ControlWaveform:
    """Sample the controls on the step grid.

    The amplitude is the envelope times the amplitude series, clamped to
    ``[-omega_max, omega_max]``; the number of clamped samples is stored on
    the waveform.  The phase is not clamped.
    """
    n = n_steps_for(basis.t_f, config.dt)
    t = sample_times(n, config.dt, config.sampling)
    if envelope_values is None:
        envelope_values = envelope(t, basis.t_f, config.rise_time)
    raw = envelope_values * _series(t, basis.amp_offset, basis.amp_freqs, basis.amp_coeffs)
    amplitude = np.clip(raw, -params.omega_max, params.omega_max)
    clamped = int(np.count_nonzero(amplitude != raw))
    phase = _series(t, basis.phase_offset, basis.phase_freqs, basis.phase_coeffs)
    return ControlWaveform.from_angular(amplitude, phase, detuning, config.dt, config.sampling,
                                        params.omega_max, clamped)


def draw_frequencies(rng: np.random.Generator, count: int, t_f: float) -> np.ndarray:
    lo, hi = FREQUENCY_RANGE
    return rng.uniform(lo / t_f, hi / t_f, size=count)


def gate_detuning(params: SystemParams, gate: TargetGate) -> float:
    return drive_detuning(params, GATE_TRANSITIONS.get(gate.name, Transition.ELECTRON_FLIP_N_UP))


def initial_amplitude(params: SystemParams, t_f: float, config: OptimizerConfig) -> float:
    """Constant amplitude whose enveloped area is ``pi``, capped at ``omega_max / 2``."""
    if config.initial_amplitude is not None:
        return float(config.initial_amplitude)
    n = n_steps_for(t_f, config.dt)
    area = np.sum(envelope(sample_times(n, config.dt, config.sampling), t_f, config.rise_time)) * config.dt
    return float(min(np.pi / area, 0.5 * params.omega_max))


def _score(kind, params, waveform, gate, betas, with_ideal, threads=1):
    """FoM of one waveform on a fixed noise block.

    For the combined FoM the first row of ``betas`` is all zeros and yields
    the noiseless propagator.
    """
    u = propagate_rows(params, waveform, betas, threads)
    if kind == "average":
        return fom_av(u, gate.matrix), None
    u_ideal = u[0]
    noisy = u[1:] if with_ideal else u
    return fom_cb(u_ideal, noisy, gate), u_ideal


class Objective:
    """FoM as a function of the free coefficients of one superiteration.

    ``x`` is ``[a0, phi0, amplitude (cos, sin) pairs, phase (cos, sin) pairs]``
    for the newest ``n_amp``/``n_phase`` frequencies of ``basis``.  The frozen
    part of each series and the new basis columns are tabulated once.
    """

    def __init__(self, params, gate, basis, n_amp, n_phase, detuning, config, betas, envelope_values,
                 threads=1):
        self.threads = threads
        self.params = params
        self.gate = gate
        self.basis = basis
        self.n_amp = n_amp
        self.n_phase = n_phase
        self.detuning = detuning
        self.config = config
        self.betas = betas
        self.envelope_values = envelope_values
        n = n_steps_for(basis.t_f, config.dt)
        t = sample_times(n, config.dt, config.sampling)
        ka, kp = basis.amp_freqs.size - n_amp, basis.phase_freqs.size - n_phase
        self._frozen_amp = _series(t, 0.0, basis.amp_freqs[:ka], basis.amp_coeffs[:ka])
        self._frozen_phase = _series(t, 0.0, basis.phase_freqs[:kp], basis.phase_coeffs[:kp])
        self._amp_columns = _columns(t, basis.amp_freqs[ka:])
        self._phase_columns = _columns(t, basis.phase_freqs[kp:])

    def basis_for(self, x) -> BasisSet:
        return self.basis.with_tail(x, self.n_amp, self.n_phase)

    def waveform(self, x) -> ControlWaveform:
        x = np.asarray(x, dtype=float)
        split = 2 + 2 * self.n_amp
        raw = self.envelope_values * (x[0] + self._frozen_amp + self._amp_columns @ x[2:split])
        amplitude = np.clip(raw, -self.params.omega_max, self.params.omega_max)
        phase = x[1] + self._frozen_phase + self._phase_columns @ x[split:]
        return ControlWaveform.from_angular(amplitude, phase, self.detuning, self.config.dt,
                                            self.config.sampling, self.params.omega_max,
                                            int(np.count_nonzero(amplitude != raw)))

    def __call__(self, x) -> float:
        return _score(self.config.fom_kind, self.params, self.waveform(x), self.gate, self.betas, True,
                      self.threads)[0]


def _columns(t, freqs):
    # [cos w1 t, sin w1 t, cos w2 t, ...]
    phase = np.outer(t, freqs)
    return np.stack([np.cos(phase), np.sin(phase)], axis=2).reshape(t.size, 2 * freqs.size)


def _search_block(ou: OuParams, n_steps: int, config: OptimizerConfig):
    seeds = seed_block(config.master_seed, config.n_noise_opt, STREAM_SEARCH)
    if ou.sigma == 0:
        # every realization is identical; one row gives the same mean
        betas = np.zeros((1, n_steps))
    else:
        betas = sample_ensemble(ou, n_steps, config.dt, seeds)
    if config.fom_kind == "combined":
        betas = np.vstack([np.zeros((1, n_steps)), betas])
    return seeds, betas


def evaluate_waveform(params: SystemParams, waveform: ControlWaveform, gate: TargetGate, ou: OuParams,
                      n: int, repeats: int, master_seed: int, fom_kind: str = "average",
                      start: int = 0, threads: int = 1) -> Evaluation:
    """FoM over ``repeats`` independent blocks of ``n`` fresh realizations.

    Seeds come from the evaluation stream, blocks use consecutive indices
    beginning at ``start``.
    """
    if fom_kind not in FOM_KINDS:
        raise ContractError(f"fom_kind must be one of {FOM_KINDS}, got {fom_kind!r}")
    if n < 1 or repeats < 1:
        raise ContractError("evaluation needs n >= 1 and repeats >= 1")
    u_ideal = propagate_batch(params, waveform, np.zeros((1, waveform.n_steps)))[0]
    foms = np.empty(repeats)
    fid_sum = 0.0
    for m in range(repeats):
        seeds = seed_block(master_seed, n, STREAM_EVAL, start + m * n)
        betas = sample_ensemble(ou, waveform.n_steps, waveform.dt, seeds)
        ensemble = propagate_rows(params, waveform, betas, threads)
        fid = fidelities(ensemble, gate.matrix)
        fid_sum += float(np.sum(fid))
        if fom_kind == "average":
            foms[m] = 1.0 - float(np.mean(fid))
        else:
            foms[m] = fom_cb(u_ideal, ensemble, gate)
    return Evaluation(fom_kind, n, repeats, foms, fid_sum / (n * repeats))


def dcrab_optimize(params: SystemParams, gate: TargetGate, t_f: float, config: OptimizerConfig,
                   ou: OuParams, progress=None, threads: int = 1) -> OptimizationResult:
    """Optimize a pulse of duration ``t_f`` for ``gate``.

    Parameters
    ----------
    params, gate, t_f
        System, target and pulse duration (us).
    config
        Budget, basis and seeding.
    ou
        Noise model used for both search and evaluation.
    progress
        Optional callable receiving each finished :class:`SuperiterationTrace`.
    threads
        Worker threads for the noise ensemble; results do not depend on it.

    Returns
    -------
    OptimizationResult
        Best basis and waveform, the best search-time FoM, a fresh-seed
        evaluation and one trace entry per superiteration.
    """
    config.check_duration(t_f)
    if config.fom_kind == "combined" and gate.weyl is None:
        raise ContractError("combined FoM needs a target with Weyl coordinates")
    n_steps = n_steps_for(t_f, config.dt)
    detuning = gate_detuning(params, gate)
    env = envelope(sample_times(n_steps, config.dt, config.sampling), t_f, config.rise_time)
    seeds, betas = _search_block(ou, n_steps, config)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(
        [int(config.master_seed) & 0xFFFFFFFFFFFFFFFF, STREAM_BASIS])))

    basis = BasisSet(t_f, amp_offset=initial_amplitude(params, t_f, config))
    best_fom = None
    k = config.freqs_per_superiteration
    scale = np.concatenate([[config.amplitude_step * params.omega_max, config.phase_step],
                            np.full(2 * k, config.amplitude_step * params.omega_max),
                            np.full(2 * k, config.phase_step)])
    trace = []
    for index in range(config.superiterations):
        amp_freqs = draw_frequencies(rng, k, t_f)
        phase_freqs = amp_freqs.copy() if config.shared_frequencies else draw_frequencies(rng, k, t_f)
        candidate = basis.extended(amp_freqs, phase_freqs)
        objective = Objective(params, gate, candidate, k, k, detuning, config, betas, env, threads)
        x0 = candidate.tail(k, k)
        result = nelder_mead(objective, x0, config.evals_per_superiteration, scale,
                             adaptive=config.adaptive_simplex)
        fom_start = result.trace[0][1] if result.trace else float("nan")
        if best_fom is None or result.fun <= best_fom:
            basis, best_fom = objective.basis_for(result.x), result.fun
            waveform = objective.waveform(result.x)
        else:
            # keep the incumbent; the new frequencies stay with zero weight
            basis = candidate
        entry = SuperiterationTrace(index, amp_freqs, phase_freqs, fom_start, best_fom, result.n_evals,
                                    result.n_nonfinite, result.reason, result.trace)
        trace.append(entry)
        if progress is not None:
            progress(entry)

    u_ideal = propagate_batch(params, waveform, np.zeros((1, n_steps)))[0]
    evaluation = evaluate_waveform(params, waveform, gate, ou, config.n_noise_eval, config.n_eval_repeats,
                                   config.master_seed, config.fom_kind, threads=threads)
    return OptimizationResult(gate.name, t_f, detuning, basis, waveform, float(best_fom), evaluation,
                              trace, seeds, u_ideal)


def nonlocal_infidelity(gate: TargetGate, u) -> float:
    return 1.0 - f_nl(gate.weyl, u)
