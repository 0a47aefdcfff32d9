"""
Command implementations behind the CLI.

Each command takes resolved inputs, writes its files into ``out_dir`` and
returns a small result object; printing and exit codes live in
:mod:`spingates.cli`.  Nothing written depends on wall-clock time, so a
repeated run with the same inputs reproduces every file byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig, echo_config
from .dcrab import (STREAM_BASIS, OptimizationResult, dcrab_optimize, evaluate_waveform,
                    nonlocal_infidelity)
from .errors import ContractError, SpinGatesError
from .gates import TargetGate
from .noise import (STREAM_DIAGNOSTIC, STREAM_EVAL, STREAM_SEARCH, OuParams, sample_ensemble,
                    seed_block, stationary_autocovariance)
from .propagator import read_waveform, state_trajectory, write_waveform
from .spin_model import TWO_PI, PRODUCT_STATES, SystemParams
from .weyl import (WeylPoint, closest_local_factorization, f_nl, swap_equivalence_check,
                   weyl_coordinates)

SWEEP_HEADER = ("t_f_us", "omega_i_mhz", "fom_mean", "fom_std", "fom_sem", "fom_search",
                "fidelity_mean", "status", "record")

# named initial states for population traces
SUPERPOSITIONS = {
    "plus_e_u": np.array([1, 0, 1, 0]) / np.sqrt(2),   # (|u> + |d>)/sqrt2 (x) |u>
    "plus_e_d": np.array([0, 1, 0, 1]) / np.sqrt(2),
    "u_plus_n": np.array([1, 1, 0, 0]) / np.sqrt(2),
    "d_plus_n": np.array([0, 0, 1, 1]) / np.sqrt(2),
    "bell_phi": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "bell_psi": np.array([0, 1, 1, 0]) / np.sqrt(2),
}
STATE_NAMES = PRODUCT_STATES + tuple(SUPERPOSITIONS)


@dataclass
class SweepRecord:
    gate: str
    t_f: float
    omega_i: float
    fom_search: float = float("nan")
    fom_eval_mean: float = float("nan")
    fom_eval_std: float = float("nan")
    fom_eval_sem: float = float("nan")
    fidelity_mean: float = float("nan")
    waveform_path: Path | None = None
    record_path: Path | None = None
    seeds: str = ""
    error: str | None = None
    result: OptimizationResult | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def point_stem(gate: str, t_f: float, omega_i: float | None = None) -> str:
    stem = f"{gate}_t{int(round(t_f * 1e3))}ns"
    if omega_i is not None:
        stem += f"_wi{omega_i / TWO_PI:.6g}MHz"
    return stem


def point_config(config: RunConfig, t_f: float, omega_i: float) -> RunConfig:
    """The single-point configuration of one sweep grid point."""
    return replace(config, duration=t_f, params=replace(config.params, omega_i=omega_i),
                   sweep_durations=(), sweep_omega_i=())


def _trace_lines(result: OptimizationResult) -> str:
    header = "superiteration\tevals\tfom_start\tfom_best\tnonfinite\tstop\tamp_freqs\tphase_freqs"
    lines = ["[trace]", header]
    for e in result.trace:
        lines.append("\t".join([str(e.index), str(e.n_evals), repr(float(e.fom_start)), repr(float(e.fom_best)),
                                str(e.n_nonfinite), e.stop_reason,
                                " ".join(repr(float(w)) for w in e.amp_freqs),
                                " ".join(repr(float(w)) for w in e.phase_freqs)]))
    return "\n".join(lines)


def _local_cost(u_ideal, target: TargetGate) -> float:
    """Cost of the best product approximation of ``U_ideal^dag V``."""
    return closest_local_factorization(u_ideal.conj().T @ target.matrix).cost


def cmd_optimize(config: RunConfig, out_dir, threads: int = 1, plot: bool = False,
                 stem: str | None = None, progress=None, base_dir=None) -> SweepRecord:
    """Run one optimization and write ``<stem>_waveform.tsv``, ``<stem>_record.txt``
    and ``<stem>_convergence.tsv`` (plus PNGs with ``plot``)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = config.target(base_dir)
    t_f = config.duration
    stem = stem or point_stem(config.gate_name, t_f)
    result = dcrab_optimize(config.params, target, t_f, config.optimizer, config.ou, progress=progress,
                            threads=threads)
    waveform_path = write_waveform(out_dir / f"{stem}_waveform.tsv", result.waveform)
    ev = result.evaluation
    o = config.optimizer
    seeds = f"search stream {STREAM_SEARCH} indices 0..{o.n_noise_opt - 1}; " \
            f"eval stream {STREAM_EVAL} indices 0..{o.n_noise_eval * o.n_eval_repeats - 1}"
    summary = {
        "gate": target.name,
        "t_f_us": float(t_f),
        "omega_i_rad_per_us": float(config.params.omega_i),
        "detuning_rad_per_us": float(result.detuning),
        "fom_kind": o.fom_kind,
        "fom_search": float(result.fom_search),
        "fom_eval_mean": ev.mean,
        "fom_eval_std": ev.std,
        "fom_eval_sem": ev.sem,
        "fidelity_eval_mean": float(ev.fidelity_mean),
        "n_eval": ev.n,
        "eval_repeats": ev.repeats,
        "nonlocal_infidelity_ideal": float(nonlocal_infidelity(target, result.u_ideal)),
        "local_cost_ideal": float(_local_cost(result.u_ideal, target)),
        "clamped_samples": result.waveform.clamped,
        "waveform_file": waveform_path.name,
    }
    seed_info = {"master_seed": o.master_seed, "search_stream": STREAM_SEARCH, "eval_stream": STREAM_EVAL,
                 "basis_stream": STREAM_BASIS, "search_realizations": o.n_noise_opt,
                 "eval_realizations": o.n_noise_eval * o.n_eval_repeats}
    text = io.format_record({"config": echo_config(config), "result": summary, "seeds": seed_info,
                             "trace": _trace_lines(result)})
    record_path = io.atomic_write(out_dir / f"{stem}_record.txt", text)
    rows, offset = [], 0
    for e in result.trace:
        for n, f in e.history:
            rows.append((e.index, offset + n, float(f)))
        offset += e.n_evals
    io.write_table(out_dir / f"{stem}_convergence.tsv", ("superiteration", "evals", "fom_best"), rows)
    if plot:
        from . import plotting
        plotting.plot_waveform(out_dir / f"{stem}_waveform.png", result.waveform, stem)
        plotting.plot_convergence(out_dir / f"{stem}_convergence.png", result.trace, stem)
    return SweepRecord(target.name, t_f, config.params.omega_i, result.fom_search, ev.mean, ev.std, ev.sem,
                       ev.fidelity_mean, waveform_path, record_path, seeds, None, result)


def cmd_sweep(config: RunConfig, out_dir, threads: int = 1, plot: bool = False, progress=None,
              base_dir=None) -> list:
    """One optimization per grid point, in grid order; failures are recorded and skipped."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with_larmor = bool(config.sweep_omega_i)
    records = []
    for t_f, omega_i in config.grid():
        point = point_config(config, t_f, omega_i)
        stem = point_stem(config.gate_name, t_f, omega_i if with_larmor else None)
        try:
            rec = cmd_optimize(point, out_dir, threads, plot, stem, base_dir=base_dir)
        except (SpinGatesError, ArithmeticError, ValueError) as exc:
            rec = SweepRecord(config.gate_name, t_f, omega_i, error=f"{type(exc).__name__}: {exc}")
        records.append(rec)
        if progress is not None:
            progress(rec)
    rows = []
    for r in records:
        rows.append((float(r.t_f), float(r.omega_i / TWO_PI), r.fom_eval_mean, r.fom_eval_std, r.fom_eval_sem,
                     r.fom_search, r.fidelity_mean, "ok" if r.ok else "failed: " + r.error.replace("\t", " "),
                     r.record_path.name if r.record_path else "-"))
    io.write_table(out_dir / f"{config.gate_name}_sweep.tsv", SWEEP_HEADER, rows)
    if plot:
        from . import plotting
        plotting.plot_sweep(out_dir / f"{config.gate_name}_sweep.png", records, config.gate_name)
    return records


@dataclass
class EvaluateResult:
    mean: float
    std: float
    sem: float
    foms: np.ndarray
    fidelity_mean: float


def cmd_evaluate(waveform_path, gate: TargetGate, n: int, m: int, params: SystemParams, ou: OuParams,
                 master_seed: int = 0, fom_kind: str = "average") -> EvaluateResult:
    """``m`` FoM evaluations over ``n`` fresh realizations each."""
    waveform = read_waveform(waveform_path, params.omega_max)
    ev = evaluate_waveform(params, waveform, gate, ou, n, m, master_seed, fom_kind)
    return EvaluateResult(ev.mean, ev.std, ev.sem, ev.foms, ev.fidelity_mean)


@dataclass
class Decomposition:
    weyl: WeylPoint
    infidelity_swap: float
    infidelity_cnot: float
    cost: float
    n1: np.ndarray
    n2: np.ndarray


def cmd_decompose(matrix_path) -> Decomposition:
    """Weyl point, nonlocal infidelities against SWAP and CNOT, and the SWAP factorization."""
    u = io.read_matrix(matrix_path)
    # re-project onto the unitaries so tiny file round-off does not trip stricter checks
    w, _, vh = np.linalg.svd(u)
    u = w @ vh
    swap_point = WeylPoint(np.pi / 2, np.pi / 2, np.pi / 2)
    cnot_point = WeylPoint(np.pi / 2, 0.0, 0.0)
    fact = swap_equivalence_check(u)
    return Decomposition(weyl_coordinates(u), 1.0 - f_nl(swap_point, u), 1.0 - f_nl(cnot_point, u),
                         fact.cost, fact.n1, fact.n2)


def initial_state(name: str) -> np.ndarray:
    if name in PRODUCT_STATES:
        psi = np.zeros(4, dtype=complex)
        psi[PRODUCT_STATES.index(name)] = 1.0
        return psi
    if name in SUPERPOSITIONS:
        return SUPERPOSITIONS[name].astype(complex)
    raise ContractError(f"unknown initial state {name!r}; expected one of {STATE_NAMES}")


def reduced_populations(states: np.ndarray):
    """``(p_e_up, p_n_up)`` for each row of ``states`` by partial trace."""
    p = np.abs(states) ** 2  # order uu, ud, du, dd
    return p[:, 0] + p[:, 1], p[:, 0] + p[:, 2]


def cmd_population_trace(waveform_path, state: str, params: SystemParams, out_path, plot: bool = False):
    """Noise-free reduced populations after every step; returns ``(t_ns, p_e_up, p_n_up)``."""
    waveform = read_waveform(waveform_path, params.omega_max)
    states = state_trajectory(params, waveform, initial_state(state))
    p_e, p_n = reduced_populations(states)
    t_ns = np.arange(waveform.n_steps + 1) * waveform.dt * 1e3
    out_path = Path(out_path)
    io.write_table(out_path, ("t_ns", "p_e_up", "p_n_up"),
                   [(float(t), float(a), float(b)) for t, a, b in zip(t_ns, p_e, p_n)])
    if plot:
        from . import plotting
        plotting.plot_populations(out_path.with_suffix(".png"), t_ns, p_e, p_n, f"{state}")
    return t_ns, p_e, p_n


@dataclass
class NoiseStats:
    sigma: float
    t_c: float
    variance: float
    variance_se: float
    lags: np.ndarray
    autocov: np.ndarray
    autocov_se: np.ndarray
    autocov_theory: np.ndarray
    fid_times: np.ndarray
    coherence: np.ndarray
    coherence_se: np.ndarray
    coherence_theory: np.ndarray


def fid_theory(ou: OuParams, t):
    """Coherence ``|<exp(-i int beta)>|`` of a stationary OU process."""
    t = np.asarray(t, dtype=float)
    x = t / ou.t_c
    return np.exp(-ou.sigma ** 2 * ou.t_c ** 2 * (x - 1.0 + np.exp(-x)))


def noise_statistics(ou: OuParams, n_real: int, n_steps: int, dt: float, master_seed: int,
                     n_lags: int = 20) -> NoiseStats:
    """Ensemble variance, autocovariance against beta(0) and free-induction coherence."""
    betas = sample_ensemble(ou, n_steps, dt, seed_block(master_seed, n_real, STREAM_DIAGNOSTIC))
    stride = max(1, (n_steps - 1) // n_lags)
    lag_idx = np.arange(0, n_steps, stride)[:n_lags + 1]
    # pairwise products with the stationary start sample
    products = betas[:, :1] * betas[:, lag_idx]
    autocov = products.mean(axis=0)
    autocov_se = products.std(axis=0, ddof=1) / np.sqrt(n_real)
    sq = betas[:, 0] ** 2
    # phase after j steps is sum_{k<j} beta_k dt (piecewise-constant noise)
    phases = np.cumsum(betas, axis=1) * dt
    fid_idx = np.unique(np.append(lag_idx[1:], n_steps))
    c = np.cos(phases[:, fid_idx - 1])
    fid_times = fid_idx * dt
    return NoiseStats(ou.sigma, ou.t_c, float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(n_real)),
                      lag_idx * dt, autocov, autocov_se, stationary_autocovariance(ou, lag_idx * dt),
                      fid_times, c.mean(axis=0), c.std(axis=0, ddof=1) / np.sqrt(n_real),
                      fid_theory(ou, fid_times))


def cmd_noise_stats(config: RunConfig, out_dir, plot: bool = False) -> NoiseStats:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    o = config.optimizer
    n_steps = int(round(config.duration / o.dt))
    stats = noise_statistics(config.ou, o.n_noise_eval, n_steps, o.dt, o.master_seed)
    io.write_table(out_dir / "noise_autocovariance.tsv", ("lag_us", "autocov", "autocov_se", "autocov_theory"),
                   [tuple(map(float, r)) for r in zip(stats.lags, stats.autocov, stats.autocov_se,
                                                      stats.autocov_theory)])
    io.write_table(out_dir / "noise_fid.tsv", ("t_us", "coherence", "coherence_se", "coherence_theory"),
                   [tuple(map(float, r)) for r in zip(stats.fid_times, stats.coherence, stats.coherence_se,
                                                      stats.coherence_theory)])
    if plot:
        from . import plotting
        plotting.plot_noise_stats(out_dir / "noise_autocovariance.png", stats.lags, stats.autocov,
                                  stats.autocov_theory)
    return stats
