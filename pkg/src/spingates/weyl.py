"""
Nonlocal content of two-qubit gates.

Coordinates follow ``U = K1 exp[-(i/2)(c1 XX + c2 YY + c3 ZZ)] K2``.  The
canonical chamber is ``pi/2 >= c1 >= c2 >= |c3|`` with ``c3 >= 0`` on the
face ``c1 = pi/2``; CNOT sits at ``(pi/2, 0, 0)`` and SWAP at
``(pi/2, pi/2, pi/2)``.

Coordinates are read from the spectrum of ``U_B^T U_B`` where ``U_B`` is the
gate in the magic (Bell) basis.  In that basis local gates are real
orthogonal and the canonical core is diagonal, so the spectrum gives the four
core phases up to the symmetries of the chamber.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ContractError
from .spin_model import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z

HALF_PI = 0.5 * np.pi
CHAMBER_TOL = 1e-9

XX = np.kron(SIGMA_X, SIGMA_X)
YY = np.kron(SIGMA_Y, SIGMA_Y)
ZZ = np.kron(SIGMA_Z, SIGMA_Z)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

# columns: Phi+, i Phi-, i Psi+, Psi-
MAGIC = np.array([[1, 1j, 0, 0],
                  [0, 0, 1j, 1],
                  [0, 0, 1j, -1],
                  [1, -1j, 0, 0]], dtype=complex) / np.sqrt(2)

# (XX, YY, ZZ) eigenvalues on the magic basis vectors above
_BELL_SIGNS = np.array([[1, -1, 1],
                        [-1, 1, 1],
                        [1, 1, -1],
                        [-1, -1, -1]], dtype=float)


@dataclass(frozen=True)
class WeylPoint:
    c1: float
    c2: float
    c3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3])

    def __iter__(self):
        return iter((self.c1, self.c2, self.c3))


@dataclass(frozen=True)
class LocalFactorization:
    k1: np.ndarray = field(repr=False)
    k2: np.ndarray = field(repr=False)
    cost: float
    n1: np.ndarray
    n2: np.ndarray


def _check_unitary(u, tol=1e-9):
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ContractError(f"expected a 4x4 matrix, got shape {u.shape}")
    defect = np.max(np.abs(u.conj().T @ u - np.eye(4)))
    if not defect <= tol:
        raise ContractError(f"matrix is not unitary (defect {defect:.3e})")
    return u


def canonical_gate(c1, c2, c3) -> np.ndarray:
    """``exp[-(i/2)(c1 XX + c2 YY + c3 ZZ)]``."""
    return expm(-0.5j * (c1 * XX + c2 * YY + c3 * ZZ))


def canonicalize(c, tol=CHAMBER_TOL) -> WeylPoint:
    """Fold raw coordinates into the chamber.

    Uses the symmetries c_i -> c_i + pi, negation of any two coordinates and
    permutations, then identifies ``c3`` with ``-c3`` on the ``c1 = pi/2`` face.
    """
    c = np.mod(np.asarray(c, dtype=float), np.pi)
    c = np.where(c > HALF_PI, c - np.pi, c)
    n_negative = int(np.sum(c < 0))
    c = np.sort(np.abs(c))[::-1]
    if n_negative % 2 and c[2] > tol:
        c[2] = -c[2]
    if c[2] < 0 and c[0] >= HALF_PI - tol:
        c[2] = -c[2]
    # snap round-off onto the chamber faces
    c = np.where(np.abs(c - HALF_PI) <= tol, HALF_PI, c)
    c = np.where(np.abs(c) <= tol, 0.0, c)
    return WeylPoint(float(c[0]), float(c[1]), float(c[2]))


def weyl_coordinates(u) -> WeylPoint:
    u = _check_unitary(u)
    ub = MAGIC.conj().T @ u @ MAGIC
    eig = np.linalg.eigvals(ub.T @ ub)
    # removes the global phase; any 4th root is fine (absorbed below)
    eig = eig / np.linalg.det(ub) ** 0.5
    theta = 0.5 * np.angle(eig)
    # each theta is known mod pi; the core has sum(theta) = 0
    theta[3] -= np.pi * np.round(np.sum(theta) / np.pi)
    raw = -0.5 * _BELL_SIGNS.T @ theta
    return canonicalize(raw)


def _orbit(c):
    """All images of ``c`` under the chamber symmetries that stay near the chamber."""
    c = np.asarray(c, dtype=float)
    images = []
    for perm in itertools.permutations(range(3)):
        p = c[list(perm)]
        for signs in ((1, 1, 1), (-1, -1, 1), (-1, 1, -1), (1, -1, -1)):
            s = p * np.array(signs)
            for shift in itertools.product((-np.pi, 0.0, np.pi), repeat=3):
                images.append(s + np.array(shift))
    return np.array(images)


def f_nl(target, u) -> float:
    """Nonlocal fidelity ``prod cos(dc_i / 2)`` against a target class.

    ``target`` is a :class:`WeylPoint` (or anything with three coordinates).
    The differences are taken against the symmetry image of ``u``'s point that
    maximises the product, which equals the plain chamber difference away from
    the chamber faces and keeps the measure continuous across them.
    """
    t = canonicalize(np.asarray(tuple(target), dtype=float)).as_array()
    c = weyl_coordinates(u).as_array()
    values = np.prod(np.cos(0.5 * (t - _orbit(c))), axis=1)
    return float(min(1.0, max(0.0, values.max())))


def f_nl_chamber(target, u) -> float:
    """``prod cos(dc_i / 2)`` on the canonical chamber points only."""
    t = canonicalize(np.asarray(tuple(target), dtype=float)).as_array()
    c = weyl_coordinates(u).as_array()
    return float(np.prod(np.cos(0.5 * (t - c))))


def _reshuffle(k):
    # K[(a b), (c d)] -> R[(a c), (b d)]
    return k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)


def _nearest_unitary(m):
    w, _, vh = np.linalg.svd(m)
    return w @ vh


def _product_overlap(k, k1, k2):
    return np.trace(k.conj().T @ np.kron(k1, k2))


def _refine(kt, k, a, b, iterations):
    best = abs(_product_overlap(k, a, b))
    for _ in range(iterations):
        # Tr(K^dag (A (x) B)) = sum A[c, a] B[d, b] kt[a, b, c, d]
        a = _nearest_unitary(np.einsum("abcd,db->ac", kt, b).conj().T)
        b = _nearest_unitary(np.einsum("abcd,ca->bd", kt, a).conj().T)
        overlap = abs(_product_overlap(k, a, b))
        if overlap - best <= 1e-15:
            best = max(best, overlap)
            break
        best = overlap
    return best, a, b


def closest_local_factorization(k, iterations=500, restarts=8) -> LocalFactorization:
    """Best product unitary ``K1 (x) K2`` approximating ``k``.

    Starts from the leading operator-Schmidt pair (each factor projected to
    the nearest unitary) and then alternately re-optimises one factor with
    the other fixed, which can only increase the overlap.  A few fixed extra
    starting points guard against saddles when Schmidt values are degenerate.
    ``cost = 1 - |Tr(k^dag (K1 (x) K2))|^2 / 16``.
    """
    k = _check_unitary(k)
    w, _, vh = np.linalg.svd(_reshuffle(k))
    kt = k.conj().T.reshape(2, 2, 2, 2)  # kt[a, b, c, d] = K^dag[(a b), (c d)]
    starts = [(_nearest_unitary(w[:, 0].reshape(2, 2)), _nearest_unitary(vh[0].conj().reshape(2, 2)))]
    rng = np.random.default_rng(20240601)
    for _ in range(restarts):
        g = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
        starts.append((_nearest_unitary(g[0]), _nearest_unitary(g[1])))
    best = None
    for a, b in starts:
        result = _refine(kt, k, a, b, iterations)
        if best is None or result[0] > best[0] + 1e-14:
            best = result
        if 1.0 - best[0] ** 2 / 16.0 < 1e-13:
            break
    _, a, b = best
    # put the leftover global phase on k1 so that K1 (x) K2 ~ k
    phase = _product_overlap(k, a, b)
    if abs(phase) > 0:
        a = a * (np.conj(phase) / abs(phase))
    cost = max(0.0, 1.0 - abs(_product_overlap(k, a, b)) ** 2 / 16.0)
    return LocalFactorization(k1=a, k2=b, cost=float(cost),
                              n1=rotation_vector(a), n2=rotation_vector(b))


def rotation_vector(k) -> np.ndarray:
    """``n`` with ``k ~ exp(-i n . sigma)`` up to global phase, ``|n|`` in ``[0, pi]``."""
    k = np.asarray(k, dtype=complex)
    su = k / np.sqrt(np.linalg.det(k))
    a0 = 0.5 * np.trace(su).real
    vec = np.array([(0.5j * np.trace(su @ sigma)).real for sigma in (SIGMA_X, SIGMA_Y, SIGMA_Z)])
    norm = np.linalg.norm(vec)
    angle = np.arctan2(norm, a0)
    if norm < 1e-15:
        return np.zeros(3)
    n = angle * vec / norm
    if abs(angle - np.pi) < 1e-9:
        nz = n[np.abs(n) > 1e-12]
        if nz.size and nz[0] < 0:
            n = -n
    return n


def su2_from_vector(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return expm(-1j * (n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z))


def swap_equivalence_check(u_ideal) -> LocalFactorization:
    """Factorise ``K = U_ideal^dag SWAP``; a small cost certifies SWAP equivalence."""
    u_ideal = _check_unitary(u_ideal)
    return closest_local_factorization(u_ideal.conj().T @ SWAP)


def local_invariants(u):
    """Makhlin invariants ``(G1, G2)``; equal for locally equivalent gates."""
    u = _check_unitary(u)
    ub = MAGIC.conj().T @ u @ MAGIC
    m = ub.T @ ub
    det = np.linalg.det(u)
    g1 = np.trace(m) ** 2 / (16 * det)
    g2 = (np.trace(m) ** 2 - np.trace(m @ m)) / (4 * det)
    return complex(g1), float(g2.real)


__all__ = ["WeylPoint", "LocalFactorization", "SWAP", "MAGIC", "IDENTITY_2", "canonical_gate",
           "canonicalize", "weyl_coordinates", "f_nl", "f_nl_chamber", "closest_local_factorization",
           "rotation_vector", "su2_from_vector", "swap_equivalence_check", "local_invariants"]
