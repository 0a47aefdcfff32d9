"""
Run configuration files.

INI-style text with sections ``[system]``, ``[noise]``, ``[gate]``,
``[optimizer]`` and ``[sweep]``.  Frequencies are ordinary frequencies in MHz
(multiplied by 2pi internally) unless the key ends in ``_rad_per_us``; times
are in us.  Every key is optional; :func:`echo_config` writes the fully
resolved configuration back out so a record reproduces its run.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dcrab import FOM_KINDS, OptimizerConfig
from .errors import ConfigError, ContractError
from .gates import GATE_NAMES, TargetGate, custom_gate, named_gate
from .noise import OuParams, ou_params_from_coherence
from .propagator import SAMPLINGS
from .spin_model import TWO_PI, SystemParams

SECTIONS = ("system", "noise", "gate", "optimizer", "sweep")

_SYSTEM_KEYS = ("omega_e", "omega_i", "a_zz", "a_zx", "omega_max")
_NOISE_KEYS = ("t2_star_us", "t2_us", "sigma_rad_per_us", "t_c_us")
_GATE_KEYS = ("name", "control", "duration_us", "matrix_file")
_OPTIMIZER_KEYS = ("superiterations", "evals_per_superiteration", "n_noise_opt", "n_noise_eval",
                   "n_eval_repeats", "fom", "rise_time_us", "master_seed", "freqs_per_superiteration",
                   "shared_frequencies", "dt_us", "sampling", "initial_amplitude_mhz",
                   "amplitude_step", "phase_step_rad", "adaptive_simplex")
_SWEEP_KEYS = ("durations_us", "omega_i_mhz")


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams = field(default_factory=SystemParams)
    t2_star: float = 1.542
    t2: float = 605.0
    sigma_override: float | None = None
    t_c_override: float | None = None
    gate_name: str = "cenotn"
    control: str | None = None
    matrix_file: str | None = None
    duration: float = 4.45
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    sweep_durations: tuple = ()
    sweep_omega_i: tuple = ()  # rad/us

    @property
    def ou(self) -> OuParams:
        base = ou_params_from_coherence(self.t2_star, self.t2)
        return OuParams(base.sigma if self.sigma_override is None else self.sigma_override,
                        base.t_c if self.t_c_override is None else self.t_c_override)

    def target(self, base_dir=None) -> TargetGate:
        if self.gate_name == "custom":
            if not self.matrix_file:
                raise ConfigError("[gate] matrix_file is required for name = custom")
            from .io import read_matrix
            path = Path(self.matrix_file)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return custom_gate(read_matrix(path))
        return named_gate(self.gate_name, self.control)

    def grid(self):
        """``(t_f, omega_i)`` pairs of the sweep in grid order (durations vary fastest)."""
        durations = self.sweep_durations or (self.duration,)
        larmor = self.sweep_omega_i or (self.params.omega_i,)
        return [(t_f, w) for w in larmor for t_f in durations]

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, optimizer=replace(self.optimizer, master_seed=int(seed)))


def _float(section, key, raw):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None
    if not np.isfinite(value):
        raise ConfigError(f"[{section}] {key}: must be finite, got {raw!r}")
    return value


def _int(section, key, raw):
    try:
        return int(raw, 0) if isinstance(raw, str) else int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def _bool(section, key, raw):
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected true/false, got {raw!r}")


def _floats(section, key, raw):
    parts = [p for p in raw.replace(",", " ").split() if p]
    if not parts:
        raise ConfigError(f"[{section}] {key}: empty list")
    return tuple(_float(section, key, p) for p in parts)


def _frequency(section, values, name):
    """``name_mhz`` or ``name_rad_per_us`` from ``values``; None if absent."""
    mhz, rad = values.pop(f"{name}_mhz", None), values.pop(f"{name}_rad_per_us", None)
    if mhz is not None and rad is not None:
        raise ConfigError(f"[{section}] give only one of {name}_mhz and {name}_rad_per_us")
    if mhz is not None:
        return TWO_PI * _float(section, f"{name}_mhz", mhz)
    if rad is not None:
        return _float(section, f"{name}_rad_per_us", rad)
    return None


def _check_unknown(section, values, allowed):
    if values:
        raise ConfigError(f"[{section}] unknown key(s) {sorted(values)}; allowed: {', '.join(allowed)}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text.

    A result record is accepted too: everything from its ``[result]``
    section on is ignored.
    """
    text = text.split("\n[result]", 1)[0]
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    unknown = set(parser.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}; allowed: {', '.join(SECTIONS)}")
    sec = {name: dict(parser[name]) if parser.has_section(name) else {} for name in SECTIONS}

    system = {}
    for name in _SYSTEM_KEYS:
        value = _frequency("system", sec["system"], name)
        if value is not None:
            system[name] = value
    _check_unknown("system", sec["system"], [f"{k}_mhz" for k in _SYSTEM_KEYS])
    try:
        params = SystemParams(**system)
    except ContractError as exc:
        raise ConfigError(f"[system] {exc}") from exc

    noise = sec["noise"]
    t2_star = _float("noise", "t2_star_us", noise.pop("t2_star_us", "1.542"))
    t2 = _float("noise", "t2_us", noise.pop("t2_us", "605"))
    sigma = noise.pop("sigma_rad_per_us", None)
    t_c = noise.pop("t_c_us", None)
    _check_unknown("noise", noise, _NOISE_KEYS)
    if not (t2_star > 0 and t2 > 0):
        raise ConfigError("[noise] coherence times must be positive")
    sigma = None if sigma is None else _float("noise", "sigma_rad_per_us", sigma)
    t_c = None if t_c is None else _float("noise", "t_c_us", t_c)
    if sigma is not None and sigma < 0:
        raise ConfigError("[noise] sigma_rad_per_us must be >= 0")
    if t_c is not None and t_c <= 0:
        raise ConfigError("[noise] t_c_us must be positive")

    gate = sec["gate"]
    gate_name = gate.pop("name", "cenotn").strip()
    if gate_name not in GATE_NAMES:
        raise ConfigError(f"[gate] name: unknown gate {gate_name!r}; expected one of {GATE_NAMES}")
    control = gate.pop("control", None)
    if control is not None and control not in ("up", "down"):
        raise ConfigError(f"[gate] control: expected up or down, got {control!r}")
    duration = _float("gate", "duration_us", gate.pop("duration_us", "4.45"))
    matrix_file = gate.pop("matrix_file", None)
    _check_unknown("gate", gate, _GATE_KEYS)

    opt = sec["optimizer"]
    kwargs = {}
    for key in ("superiterations", "evals_per_superiteration", "n_noise_opt", "n_noise_eval",
                "n_eval_repeats", "master_seed", "freqs_per_superiteration"):
        if key in opt:
            kwargs[key] = _int("optimizer", key, opt.pop(key))
    if "fom" in opt:
        kwargs["fom_kind"] = opt.pop("fom").strip()
        if kwargs["fom_kind"] not in FOM_KINDS:
            raise ConfigError(f"[optimizer] fom: expected one of {FOM_KINDS}, got {kwargs['fom_kind']!r}")
    for key, target in (("rise_time_us", "rise_time"), ("dt_us", "dt"), ("amplitude_step", "amplitude_step"),
                        ("phase_step_rad", "phase_step")):
        if key in opt:
            kwargs[target] = _float("optimizer", key, opt.pop(key))
    for key in ("shared_frequencies", "adaptive_simplex"):
        if key in opt:
            kwargs[key] = _bool("optimizer", key, opt.pop(key))
    if "sampling" in opt:
        kwargs["sampling"] = opt.pop("sampling").strip()
        if kwargs["sampling"] not in SAMPLINGS:
            raise ConfigError(f"[optimizer] sampling: expected one of {SAMPLINGS}")
    if opt.get("initial_amplitude_mhz", "").strip() == "auto":
        opt.pop("initial_amplitude_mhz")
    amp = _frequency("optimizer", opt, "initial_amplitude")
    if amp is not None:
        kwargs["initial_amplitude"] = amp
    _check_unknown("optimizer", opt, _OPTIMIZER_KEYS)
    try:
        optimizer = OptimizerConfig(**kwargs)
    except ContractError as exc:
        raise ConfigError(f"[optimizer] {exc}") from exc

    sweep = sec["sweep"]
    durations = _floats("sweep", "durations_us", sweep.pop("durations_us")) if "durations_us" in sweep else ()
    larmor = ()
    if "omega_i_mhz" in sweep:
        larmor = tuple(TWO_PI * w for w in _floats("sweep", "omega_i_mhz", sweep.pop("omega_i_mhz")))
    elif "omega_i_rad_per_us" in sweep:
        larmor = _floats("sweep", "omega_i_rad_per_us", sweep.pop("omega_i_rad_per_us"))
    _check_unknown("sweep", sweep, _SWEEP_KEYS)

    config = RunConfig(params, t2_star, t2, sigma, t_c, gate_name, control, matrix_file, duration,
                       optimizer, durations, larmor)
    for t_f, _ in config.grid():
        if not 2 * optimizer.rise_time < t_f:
            raise ConfigError(f"[gate] duration_us={t_f!r} must exceed 2 * rise_time_us = {2 * optimizer.rise_time!r}")
        if abs(t_f / optimizer.dt - round(t_f / optimizer.dt)) > 1e-6:
            raise ConfigError(f"duration {t_f!r} us is not a whole number of dt_us={optimizer.dt!r} steps")
    return config


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _r(x) -> str:
    return repr(float(x))


def echo_config(config: RunConfig) -> str:
    """Fully resolved configuration as parseable text (angular values, exact floats)."""
    p, o = config.params, config.optimizer
    lines = ["[system]"]
    for name in _SYSTEM_KEYS:
        lines.append(f"{name}_rad_per_us = {_r(getattr(p, name))}")
    lines += ["", "[noise]", f"t2_star_us = {_r(config.t2_star)}", f"t2_us = {_r(config.t2)}"]
    if config.sigma_override is not None:
        lines.append(f"sigma_rad_per_us = {_r(config.sigma_override)}")
    if config.t_c_override is not None:
        lines.append(f"t_c_us = {_r(config.t_c_override)}")
    lines += ["", "[gate]", f"name = {config.gate_name}"]
    if config.gate_name in ("cenotn", "cnnote"):
        from .gates import DEFAULT_CONTROL
        lines.append(f"control = {config.control or DEFAULT_CONTROL[config.gate_name]}")
    lines.append(f"duration_us = {_r(config.duration)}")
    if config.matrix_file:
        lines.append(f"matrix_file = {config.matrix_file}")
    lines += ["", "[optimizer]",
              f"superiterations = {o.superiterations}",
              f"evals_per_superiteration = {o.evals_per_superiteration}",
              f"n_noise_opt = {o.n_noise_opt}",
              f"n_noise_eval = {o.n_noise_eval}",
              f"n_eval_repeats = {o.n_eval_repeats}",
              f"fom = {o.fom_kind}",
              f"rise_time_us = {_r(o.rise_time)}",
              f"master_seed = {o.master_seed}",
              f"freqs_per_superiteration = {o.freqs_per_superiteration}",
              f"shared_frequencies = {str(o.shared_frequencies).lower()}",
              f"dt_us = {_r(o.dt)}",
              f"sampling = {o.sampling}",
              ("initial_amplitude_mhz = auto" if o.initial_amplitude is None
               else f"initial_amplitude_rad_per_us = {_r(o.initial_amplitude)}"),
              f"amplitude_step = {_r(o.amplitude_step)}",
              f"phase_step_rad = {_r(o.phase_step)}",
              f"adaptive_simplex = {str(o.adaptive_simplex).lower()}"]
    lines += ["", "[sweep]"]
    if config.sweep_durations:
        lines.append("durations_us = " + " ".join(_r(t) for t in config.sweep_durations))
    if config.sweep_omega_i:
        lines.append("omega_i_rad_per_us = " + " ".join(_r(w) for w in config.sweep_omega_i))
    return "\n".join(lines) + "\n"
