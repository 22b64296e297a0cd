"""Number-conserving two-mode unitaries stored block by total photon number.

Within the block of total photon number ``n`` the basis is ``|n1, n - n1>``
for ``n1 = 0..n``, which is the angular-momentum basis ``|j, m>`` with
``j = n/2`` and ``m = n1 - n/2`` (ascending ``m``).  The Schwinger generators

    J_x = J/2,  J_y = K/2,  J_z = N_d/2,
    J = a1^dag a2 + a2^dag a1,   K = -i (a1^dag a2 - a2^dag a1),

are tridiagonal in this basis with the standard Condon-Shortley phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import TruncationTooSmall
from .fock import TwoModeState

#: probability allowed above an operator's cap before ``apply`` refuses
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class PhasePair:
    """Sum and difference phases, ``phi_s = phi1 + phi2`` and ``phi_d = phi1 - phi2``."""

    phi_s: float = 0.0
    phi_d: float = 0.0

    @classmethod
    def from_arm_phases(cls, phi1: float, phi2: float) -> "PhasePair":
        return cls(phi1 + phi2, phi1 - phi2)

    def arm_phases(self) -> tuple[float, float]:
        return (self.phi_s + self.phi_d) / 2, (self.phi_s - self.phi_d) / 2


@dataclass(frozen=True, eq=False)
class TwoModeOperator:
    """``blocks[n]`` is the ``(n+1) x (n+1)`` matrix acting on total photon number ``n``."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        frozen = []
        for n, b in enumerate(self.blocks):
            b = np.array(b, dtype=complex)
            if b.shape != (n + 1, n + 1):
                raise ValueError(f"block {n} has shape {b.shape}, expected {(n + 1, n + 1)}")
            b.setflags(write=False)
            frozen.append(b)
        object.__setattr__(self, "blocks", tuple(frozen))

    @property
    def dim_cap(self) -> int:
        return len(self.blocks) - 1

    def dagger(self) -> "TwoModeOperator":
        return TwoModeOperator(tuple(b.conj().T for b in self.blocks))

    def __matmul__(self, other: "TwoModeOperator") -> "TwoModeOperator":
        cap = min(self.dim_cap, other.dim_cap)
        return TwoModeOperator(tuple(self.blocks[n] @ other.blocks[n] for n in range(cap + 1)))

    def max_unitarity_error(self) -> float:
        return max(float(np.max(np.abs(b @ b.conj().T - np.eye(len(b))))) for b in self.blocks)


# ------------------------------------------------------------- generators


def _m_values(n: int) -> np.ndarray:
    return np.arange(n + 1) - n / 2


def _raising_offdiag(n: int) -> np.ndarray:
    """``<n1+1, n2-1| a1^dag a2 |n1, n2>`` for ``n1 = 0..n-1``."""
    n1 = np.arange(n, dtype=float)
    return np.sqrt((n1 + 1) * (n - n1))


def generator_block(name: str, n: int) -> np.ndarray:
    """Matrix of ``J``, ``K``, ``Jx``, ``Jy``, ``Jz``, ``Ns`` or ``Nd`` on block ``n``."""
    up = np.diag(_raising_offdiag(n), -1).astype(complex)  # a1^dag a2
    if name == "J":
        return up + up.T
    if name == "K":
        return -1j * (up - up.T)
    if name == "Jx":
        return (up + up.T) / 2
    if name == "Jy":
        return -0.5j * (up - up.T)
    if name == "Jz":
        return np.diag(_m_values(n)).astype(complex)
    if name == "Nd":
        return np.diag(2 * _m_values(n)).astype(complex)
    if name == "Ns":
        return n * np.eye(n + 1, dtype=complex)
    raise ValueError(f"unknown generator {name!r}")


def generator(name: str, dim_cap: int) -> TwoModeOperator:
    return TwoModeOperator(tuple(generator_block(name, n) for n in range(dim_cap + 1)))


@lru_cache(maxsize=512)
def _j_eig(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the real symmetric tridiagonal ``J`` on block ``n``."""
    if n == 0:
        return np.zeros(1), np.ones((1, 1))
    w, v = eigh_tridiagonal(np.zeros(n + 1), _raising_offdiag(n))
    return w, v


@lru_cache(maxsize=512)
def jy_eig(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition ``J_y = V diag(mu) V^dag`` on block ``n``.

    ``J_y = D^dag J_x D`` with ``D = diag(i^k)``, so the eigenvectors follow
    from the real tridiagonal problem for ``J``.  The spectrum of ``J`` is
    exactly ``2m``, so the eigenvalues are snapped to those values.
    """
    w, v = _j_eig(n)
    phases = (-1j) ** np.arange(n + 1)
    vecs = phases[:, None] * v
    vecs.setflags(write=False)
    mu = np.round(w) / 2
    mu.setflags(write=False)
    return mu, vecs


def _exp_j(n: int, theta: float) -> np.ndarray:
    """``exp(-i theta J)`` on block ``n``."""
    w, v = _j_eig(n)
    return (v * np.exp(-1j * theta * w)) @ v.T


def exp_jy(n: int, theta: float) -> np.ndarray:
    """``exp(i theta J_y)`` on block ``n``."""
    mu, v = jy_eig(n)
    return (v * np.exp(1j * theta * mu)) @ v.conj().T


# -------------------------------------------------------------- unitaries


@lru_cache(maxsize=8)
def beam_splitter(dim_cap: int) -> TwoModeOperator:
    """50:50 beam splitter ``B = exp(-i J pi/4)`` up to total photon number ``dim_cap``."""
    if dim_cap < 0:
        raise ValueError("dim_cap must be >= 0")
    return TwoModeOperator(tuple(_exp_j(n, math.pi / 4) for n in range(dim_cap + 1)))


def phase_shift(pair: PhasePair, dim_cap: int) -> TwoModeOperator:
    """Diagonal ``U``: ``|n1,n2>`` picks up ``exp(i (n1+n2) phi_s/2 + i (n1-n2) phi_d/2)``."""
    blocks = []
    for n in range(dim_cap + 1):
        n1 = np.arange(n + 1)
        blocks.append(np.diag(np.exp(0.5j * (n * pair.phi_s + (2 * n1 - n) * pair.phi_d))))
    return TwoModeOperator(tuple(blocks))


def mach_zehnder(pair: PhasePair, dim_cap: int, method: str = "composed") -> TwoModeOperator:
    """Full interferometer with the second beam splitter taken as ``B^dag``.

    ``method="composed"`` multiplies ``B^dag U B``; ``method="generator"``
    exponentiates ``exp(i N_s phi_s / 2) exp(i J_y phi_d)`` directly.
    """
    if method == "composed":
        b = beam_splitter(dim_cap)
        return b.dagger() @ phase_shift(pair, dim_cap) @ b
    if method == "generator":
        return TwoModeOperator(
            tuple(np.exp(0.5j * n * pair.phi_s) * exp_jy(n, pair.phi_d) for n in range(dim_cap + 1))
        )
    raise ValueError(f"unknown method {method!r}")


def identity(dim_cap: int) -> TwoModeOperator:
    return TwoModeOperator(tuple(np.eye(n + 1, dtype=complex) for n in range(dim_cap + 1)))


# ------------------------------------------------------------- application


def support_cap(state: TwoModeState, tol: float = SUPPORT_TOL) -> int:
    """Smallest total photon number ``c`` with at most ``tol`` probability above ``c``."""
    dist = state.total_number_distribution()
    tail = np.cumsum(dist[::-1])[::-1]  # tail[n] = mass at >= n
    above = np.append(tail[1:], 0.0)
    return int(np.flatnonzero(above <= tol)[0])


def apply_blocks(op: TwoModeOperator, blocks: list[np.ndarray]) -> list[np.ndarray]:
    return [op.blocks[n] @ vec for n, vec in enumerate(blocks)]


def apply(op: TwoModeOperator, state: TwoModeState, tol: float = SUPPORT_TOL) -> TwoModeState:
    """Apply ``op`` block by block; the result lives on a ``(cap+1)^2`` grid."""
    cap = op.dim_cap
    dist = state.total_number_distribution()
    above = float(dist[cap + 1 :].sum())
    if above > tol:
        raise TruncationTooSmall(
            f"state has probability {above:.3e} above total photon number {cap}"
        )
    return TwoModeState.from_blocks(apply_blocks(op, state.blocks(cap)))


def expectation(op: TwoModeOperator, state: TwoModeState) -> complex:
    blocks = state.blocks(op.dim_cap)
    return complex(sum(np.vdot(v, op.blocks[n] @ v) for n, v in enumerate(blocks)))
