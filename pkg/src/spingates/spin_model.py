"""
Electron-nuclear spin pair in the electron rotating frame.

Basis ordering is ``{uu, ud, du, dd}`` with the electron as the first
tensor factor and ``u`` meaning m = +1/2, so ``S_z = diag(1, 1, -1, -1)/2``.
All frequencies are angular frequencies in rad/us and all times are in us.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ContractError, DegeneracyError

TWO_PI = 2.0 * np.pi

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

PRODUCT_STATES = ("uu", "ud", "du", "dd")

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the spin pair (rad/us).

    The defaults are the GeV / 13C values: A_zz = 2pi x 2.86234 MHz,
    A_zx = 2pi x 0.60281 MHz, omega_I = 2pi x 1.04 MHz and a drive bound
    of 2pi x 15 MHz.  ``omega_e`` cancels in the rotating frame and is only
    used to express transition frequencies in the lab frame.
    """

    omega_e: float = TWO_PI * 3000.0
    omega_i: float = TWO_PI * 1.04
    a_zz: float = TWO_PI * 2.86234
    a_zx: float = TWO_PI * 0.60281
    omega_max: float = TWO_PI * 15.0

    def __post_init__(self):
        values = (self.omega_e, self.omega_i, self.a_zz, self.a_zx, self.omega_max)
        if not all(np.isfinite(v) for v in values):
            raise ContractError(f"SystemParams must be finite, got {values}")
        if self.omega_max <= 0:
            raise ContractError(f"omega_max must be positive, got {self.omega_max}")

    @classmethod
    def from_mhz(cls, omega_e=3000.0, omega_i=1.04, a_zz=2.86234, a_zx=0.60281,
                 omega_max=15.0) -> "SystemParams":
        """Build from ordinary frequencies in MHz (multiplied by 2pi)."""
        return cls(TWO_PI * omega_e, TWO_PI * omega_i, TWO_PI * a_zz,
                   TWO_PI * a_zx, TWO_PI * omega_max)


@dataclass(frozen=True)
class HamiltonianTerm:
    matrix: np.ndarray = field(repr=False)
    label: str

    def __post_init__(self):
        if self.label not in ("drift", "control", "noise"):
            raise ContractError(f"unknown Hamiltonian label {self.label!r}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ContractError(f"Hamiltonian must be 4x4, got shape {m.shape}")
        defect = np.max(np.abs(m - m.conj().T))
        if defect > HERMITIAN_TOL:
            raise ContractError(f"{self.label} term is not Hermitian (defect {defect:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


class Transition(str, enum.Enum):
    """Named electron transitions used to pick the drive frequency."""

    ELECTRON_FLIP_N_UP = "electron_flip_n_up"  # |du> <-> |uu>
    FLIP_FLOP = "flip_flop"  # |ud> <-> |du>


_TRANSITION_STATES = {
    Transition.ELECTRON_FLIP_N_UP: ("uu", "du"),
    Transition.FLIP_FLOP: ("ud", "du"),
}


@lru_cache(maxsize=None)
def _operators():
    ops = []
    for sigma in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        ops.append(0.5 * np.kron(sigma, IDENTITY_2))
    for sigma in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        ops.append(0.5 * np.kron(IDENTITY_2, sigma))
    for op in ops:
        op.setflags(write=False)
    return tuple(ops)


def spin_operators():
    """Return ``(S_x, S_y, S_z, I_x, I_y, I_z)`` as read-only 4x4 arrays."""
    return _operators()


def _static_matrix(params: SystemParams) -> np.ndarray:
    _, _, sz, ix, _, iz = spin_operators()
    return -params.omega_i * iz + params.a_zz * sz @ iz + params.a_zx * sz @ ix


def drift_hamiltonian(params: SystemParams) -> HamiltonianTerm:
    """Static Hamiltonian in the electron frame (electron Zeeman term removed)."""
    return HamiltonianTerm(_static_matrix(params), "drift")


def control_coupling(amplitude, phase, detuning, t):
    """Complex ``<u|H_c|d>`` electron matrix element, ``(Omega/2) exp(i(Delta t - phi))``.

    Vectorised over array arguments; used by the propagators.
    """
    return 0.5 * np.asarray(amplitude) * np.exp(1j * (np.asarray(detuning) * np.asarray(t)
                                                      - np.asarray(phase)))


def control_hamiltonian(params: SystemParams, amplitude: float, phase: float,
                        detuning: float, t: float) -> HamiltonianTerm:
    """Microwave drive ``Omega [cos(Delta t - phi) S_x - sin(Delta t - phi) S_y]``."""
    if not abs(amplitude) <= params.omega_max * (1 + 1e-12):
        raise ContractError(
            f"drive amplitude {amplitude!r} rad/us exceeds omega_max={params.omega_max!r}")
    sx, sy = spin_operators()[:2]
    angle = detuning * t - phase
    return HamiltonianTerm(amplitude * (np.cos(angle) * sx - np.sin(angle) * sy), "control")


def noise_hamiltonian(beta: float) -> HamiltonianTerm:
    return HamiltonianTerm(beta * spin_operators()[2], "noise")


def product_state(label: str) -> np.ndarray:
    """Basis vector for ``uu``, ``ud``, ``du`` or ``dd``."""
    try:
        index = PRODUCT_STATES.index(label)
    except ValueError:
        raise ContractError(f"unknown product state {label!r}") from None
    vec = np.zeros(4, dtype=complex)
    vec[index] = 1.0
    return vec


def lab_hamiltonian(params: SystemParams) -> np.ndarray:
    sz = spin_operators()[2]
    return -params.omega_e * sz + _static_matrix(params)


def transition_frequency(params: SystemParams, transition) -> float:
    """Lab-frame angular frequency of a named transition.

    Eigenstates of the static lab Hamiltonian are labelled by their largest
    overlap with the product states; the drive detuning in the rotating frame
    is the returned value minus ``params.omega_e``.
    """
    transition = Transition(transition)
    energies, vectors = np.linalg.eigh(lab_hamiltonian(params))
    overlaps = np.abs(vectors) ** 2  # overlaps[state, eigenvector]
    chosen = {}
    for label in _TRANSITION_STATES[transition]:
        row = overlaps[PRODUCT_STATES.index(label)]
        order = np.argsort(row)[::-1]
        if row[order[0]] - row[order[1]] <= 1e-9:
            raise DegeneracyError(
                f"state {label} overlaps two eigenvectors equally ({row[order[0]]:.12f})")
        chosen[label] = energies[order[0]]
    up_member, down_member = _TRANSITION_STATES[transition]
    # the electron-up member has the lower lab energy under -omega_e S_z
    return float(chosen[down_member] - chosen[up_member])


def drive_detuning(params: SystemParams, transition) -> float:
    """Detuning ``Delta = omega_d - omega_e`` for driving the named transition."""
    return transition_frequency(params, transition) - params.omega_e
