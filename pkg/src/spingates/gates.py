"""Target gates and figures of merit."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .propagator import check_unitary
from .spin_model import IDENTITY_2, SIGMA_X
from .weyl import SWAP, WeylPoint, f_nl, weyl_coordinates

GATE_NAMES = ("cenotn", "cnnote", "swap", "hadamard_e", "hadamard_n", "x_e", "custom")

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_UP = np.diag([1.0, 0.0]).astype(complex)
_DOWN = np.diag([0.0, 1.0]).astype(complex)

# default control condition: electron |d> for C_eNOT_n, nucleus |u> for C_nNOT_e
DEFAULT_CONTROL = {"cenotn": "down", "cnnote": "up"}


@dataclass(frozen=True)
class TargetGate:
    name: str
    matrix: np.ndarray = field(repr=False)
    weyl: WeylPoint | None = None

    def __post_init__(self):
        m = check_unitary(self.matrix, tol=1e-12, name=f"target {self.name}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.weyl is None:
            object.__setattr__(self, "weyl", weyl_coordinates(m))


def _projector(control: str):
    if control not in ("up", "down"):
        raise ContractError(f"control must be 'up' or 'down', got {control!r}")
    return (_UP, _DOWN) if control == "up" else (_DOWN, _UP)


def named_gate(name: str, control: str | None = None) -> TargetGate:
    """Standard gate matrix in the ``{uu, ud, du, dd}`` basis.

    ``control`` selects which basis state of the control spin triggers the
    flip for the two CNOTs.
    """
    if name == "cenotn":
        on, off = _projector(control or DEFAULT_CONTROL[name])
        matrix = np.kron(on, SIGMA_X) + np.kron(off, IDENTITY_2)
        weyl = WeylPoint(np.pi / 2, 0.0, 0.0)
    elif name == "cnnote":
        on, off = _projector(control or DEFAULT_CONTROL[name])
        matrix = np.kron(SIGMA_X, on) + np.kron(IDENTITY_2, off)
        weyl = WeylPoint(np.pi / 2, 0.0, 0.0)
    elif name == "swap":
        matrix, weyl = SWAP, WeylPoint(np.pi / 2, np.pi / 2, np.pi / 2)
    elif name == "hadamard_e":
        matrix, weyl = np.kron(HADAMARD, IDENTITY_2), WeylPoint(0.0, 0.0, 0.0)
    elif name == "hadamard_n":
        matrix, weyl = np.kron(IDENTITY_2, HADAMARD), WeylPoint(0.0, 0.0, 0.0)
    elif name == "x_e":
        matrix, weyl = np.kron(SIGMA_X, IDENTITY_2), WeylPoint(0.0, 0.0, 0.0)
    else:
        raise ContractError(f"unknown gate {name!r}; expected one of {GATE_NAMES[:-1]}")
    return TargetGate(name, matrix, weyl)


def custom_gate(matrix, weyl=None) -> TargetGate:
    return TargetGate("custom", np.asarray(matrix, dtype=complex), weyl)


def gate_fidelity(u, v) -> float:
    """``|Tr(U^dag V)|^2 / 16``; insensitive to global phases."""
    u = check_unitary(u, name="u")
    v = check_unitary(v, name="v")
    return float(abs(np.vdot(u, v)) ** 2 / 16.0)


def fidelities(ensemble, target) -> np.ndarray:
    """Per-realization gate fidelities of a stack ``(N, 4, 4)`` against ``target``."""
    ensemble = np.asarray(ensemble, dtype=complex)
    if ensemble.ndim != 3 or ensemble.shape[0] == 0:
        raise ContractError("ensemble must be a non-empty stack of 4x4 matrices")
    check_unitary(target, name="target")
    overlaps = np.einsum("kij,ij->k", ensemble.conj(), np.asarray(target, dtype=complex))
    # round-off can push a perfect overlap a few ulp above 1
    return np.minimum(np.abs(overlaps) ** 2 / 16.0, 1.0)


def fom_av(ensemble, target) -> float:
    """``1 - mean_k |Tr(U_k^dag V)|^2 / 16``."""
    return float(1.0 - np.mean(fidelities(ensemble, target)))


def fom_cb(u_ideal, ensemble, target: TargetGate) -> float:
    """``[1 - F_nl(target, U_ideal)] + FoM_av(ensemble, U_ideal)``.

    The noisy ensemble is scored against the noiseless propagator of the same
    pulse, so only the nonlocal content is tied to the target.
    """
    if target.weyl is None:
        raise ContractError("combined FoM needs a target with Weyl coordinates")
    return (1.0 - f_nl(target.weyl, u_ideal)) + fom_av(ensemble, u_ideal)
