"""Truncated Fock-basis states for one and two bosonic modes.

Quadrature convention: ``a = (x + i p) / sqrt(2)``, so the vacuum has
``var_x = var_p = 1/2`` and ``<x^2> + <p^2> = 2<N> + 1``.

All moments are evaluated from exact ladder-operator matrix elements of the
stored amplitude vector, i.e. the truncated vector is treated as a state of
the untruncated oscillator.  This keeps identities such as the one above
exact, with no artefact from the top Fock level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import IndexOutOfRange, TruncationTooSmall

DEFAULT_TAIL_TOL = 1e-10


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TruncationPolicy:
    """Basis size (levels ``0..dim-1``) and the allowed tail mass."""

    dim: int
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")
        if not self.tail_tol >= 0:
            raise ValueError(f"tail_tol must be >= 0, got {self.tail_tol!r}")

    @classmethod
    def for_mean(cls, mean_photon: float, tail_tol: float = DEFAULT_TAIL_TOL) -> "TruncationPolicy":
        """Default sizing ``ceil(mu + 8 sqrt(mu) + 20)`` for Poisson-like states."""
        mu = max(float(mean_photon), 0.0)
        return cls(math.ceil(mu + 8.0 * math.sqrt(mu) + 20.0), tail_tol)

    @classmethod
    def for_squeezed(cls, r: float, tail_tol: float = DEFAULT_TAIL_TOL) -> "TruncationPolicy":
        """Smallest basis holding squeezed vacuum ``S(r)|0>`` to ``tail_tol``.

        Squeezed vacuum has a geometric tail (ratio ``tanh^2 r`` per pair of
        levels), much heavier than Poisson, so the mean-based rule is not
        enough.
        """
        return cls(max(squeezed_dim(r, tail_tol), 2), tail_tol)


@dataclass(frozen=True, eq=False)
class ModeState:
    amps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amps", _frozen(self.amps))
        if self.amps.ndim != 1 or self.amps.size < 2:
            raise ValueError("ModeState amplitudes must be a vector of length >= 2")

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "ModeState":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return ModeState(self.amps / nrm)

    def resized(self, dim: int, tail_tol: float = DEFAULT_TAIL_TOL) -> "ModeState":
        """Zero-pad or cut the basis; cutting fails if it drops more than ``tail_tol``."""
        if dim >= self.dim:
            return ModeState(np.concatenate([self.amps, np.zeros(dim - self.dim, complex)]))
        dropped = float(np.sum(self.probabilities[dim:]))
        if dropped > tail_tol:
            raise TruncationTooSmall(f"resizing to dim={dim} drops probability {dropped:.3e}")
        return ModeState(self.amps[:dim]).normalized()

    def overlap(self, other: "ModeState") -> complex:
        n = max(self.dim, other.dim)
        a = self.resized(n).amps
        b = other.resized(n).amps
        return complex(np.vdot(a, b))

    def fidelity(self, other: "ModeState") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Amplitude grid; entry ``(n1, n2)`` is the amplitude of ``|n1, n2>``."""

    amps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amps", _frozen(self.amps))
        if self.amps.ndim != 2:
            raise ValueError("TwoModeState amplitudes must be a 2-D grid")

    @property
    def shape(self) -> tuple[int, int]:
        return self.amps.shape

    @property
    def max_total(self) -> int:
        """Largest total photon number representable on the grid."""
        return self.amps.shape[0] + self.amps.shape[1] - 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "TwoModeState":
        return TwoModeState(self.amps / self.norm())

    def block(self, n_total: int) -> np.ndarray:
        """Amplitudes of ``|n1, n_total - n1>`` for ``n1 = 0..n_total`` (zeros off-grid)."""
        rows, cols = self.amps.shape
        out = np.zeros(n_total + 1, dtype=complex)
        lo = max(0, n_total - cols + 1)
        hi = min(n_total, rows - 1)
        if lo <= hi:
            n1 = np.arange(lo, hi + 1)
            out[lo : hi + 1] = self.amps[n1, n_total - n1]
        return out

    def blocks(self, cap: int | None = None) -> list[np.ndarray]:
        cap = self.max_total if cap is None else cap
        return [self.block(n) for n in range(cap + 1)]

    def total_number_distribution(self) -> np.ndarray:
        """Probability of each total photon number ``0..max_total``."""
        probs = np.abs(self.amps) ** 2
        flipped = np.fliplr(probs)
        cols = probs.shape[1]
        return np.array([flipped.diagonal(cols - 1 - n).sum() for n in range(self.max_total + 1)])

    def fidelity(self, other: "TwoModeState") -> float:
        r = max(self.shape[0], other.shape[0])
        c = max(self.shape[1], other.shape[1])
        a = np.zeros((r, c), complex)
        b = np.zeros((r, c), complex)
        a[: self.shape[0], : self.shape[1]] = self.amps
        b[: other.shape[0], : other.shape[1]] = other.amps
        return float(abs(np.vdot(a, b)) ** 2)

    @classmethod
    def from_blocks(cls, blocks: list[np.ndarray]) -> "TwoModeState":
        size = len(blocks)
        grid = np.zeros((size, size), dtype=complex)
        for n, vec in enumerate(blocks):
            n1 = np.arange(n + 1)
            grid[n1, n - n1] = vec
        return cls(grid)


class Moments(NamedTuple):
    mean_photon: float
    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    var_n: float


# ---------------------------------------------------------------- operators


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def quadratures(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``x`` and ``p`` matrices (the top level carries the usual truncation artefact)."""
    a = annihilation(dim)
    ad = a.conj().T
    return (a + ad) / math.sqrt(2), (a - ad) / (1j * math.sqrt(2))


def p_squared(dim: int) -> np.ndarray:
    """Exact matrix of ``p^2 = N + 1/2 - (a^2 + a^dag^2)/2`` restricted to the basis."""
    n = np.arange(dim, dtype=float)
    off = np.sqrt((n[:-2] + 1) * (n[:-2] + 2))
    return np.diag(n + 0.5) - 0.5 * (np.diag(off, 2) + np.diag(off, -2))


# ------------------------------------------------------------- constructors


def _gauge(amps: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first nonzero amplitude is real positive."""
    nz = np.flatnonzero(np.abs(amps) > 0)
    if nz.size:
        amps = amps * np.exp(-1j * np.angle(amps[nz[0]]))
    return amps


def _check_tail(probs_kept: np.ndarray, tail_mass: float, policy: TruncationPolicy, what: str):
    top = float(probs_kept[-1])
    if tail_mass > policy.tail_tol or top > policy.tail_tol:
        raise TruncationTooSmall(
            f"{what}: dim={policy.dim} leaves tail mass {tail_mass:.3e} and top-level "
            f"occupancy {top:.3e} (tail_tol={policy.tail_tol:.1e})"
        )


def make_coherent(alpha: complex, policy: TruncationPolicy) -> ModeState:
    alpha = complex(alpha)
    amps = np.zeros(policy.dim, dtype=complex)
    if alpha == 0:
        amps[0] = 1.0
        return ModeState(amps)
    mu = abs(alpha) ** 2
    n = np.arange(policy.dim)
    log_mag = -0.5 * mu + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    _check_tail(np.exp(2 * log_mag), float(poisson.sf(policy.dim - 1, mu)), policy, "coherent state")
    return ModeState(_gauge(amps / np.linalg.norm(amps)))


def _squeezed_log_weights(r: float, levels: int) -> np.ndarray:
    """log|amplitude| of squeezed vacuum at Fock levels 0, 2, 4, ... (``levels`` pairs)."""
    k = np.arange(levels)
    t = abs(math.tanh(r))
    log_t = math.log(t) if t > 0 else -np.inf
    with np.errstate(invalid="ignore"):
        kl = np.where(k > 0, k * log_t, 0.0)
    return -0.5 * math.log(math.cosh(r)) + kl + 0.5 * gammaln(2 * k + 1) - k * math.log(2) - gammaln(k + 1)


def squeezed_dim(r: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Basis size such that squeezed vacuum ``S(r)|0>`` loses at most ``tail_tol``."""
    if r == 0:
        return 2
    tail_tol = max(tail_tol, 1e-15)
    pairs = 8
    while True:
        probs = np.exp(2 * _squeezed_log_weights(r, pairs))
        tail = 1.0 - np.cumsum(probs)
        ok = np.flatnonzero((tail <= tail_tol * 0.5) & (probs <= tail_tol * 0.5))
        if ok.size:
            return int(2 * ok[0] + 2)
        pairs *= 2


def make_squeezed_vacuum(r: float, policy: TruncationPolicy) -> ModeState:
    """``exp(r (a^2 - a^dag^2) / 2)|0>`` from the closed-form even-level series.

    Positive ``r`` anti-squeezes ``p``: ``var_p = e^{2r}/2``, ``var_x = e^{-2r}/2``.
    """
    r = float(r)
    amps = np.zeros(policy.dim, dtype=complex)
    if r == 0:
        amps[0] = 1.0
        return ModeState(amps)
    pairs = (policy.dim + 1) // 2
    logw = _squeezed_log_weights(r, pairs)
    k = np.arange(pairs)
    signs = (-np.sign(r)) ** k
    amps[0::2] = signs * np.exp(logw)
    probs = np.abs(amps) ** 2
    # the exact series sums to 1, so the mass beyond the basis is the remainder
    tail = max(0.0, 1.0 - float(np.exp(2 * logw).sum()))
    top = probs[-1] if policy.dim % 2 == 1 else probs[-2]
    _check_tail(np.array([top]), tail, policy, "squeezed vacuum")
    return ModeState(_gauge(amps / np.linalg.norm(amps)))


def make_number(n: int, policy: TruncationPolicy) -> ModeState:
    if n < 0 or n >= policy.dim:
        raise IndexOutOfRange(f"number state |{n}> does not fit in dim={policy.dim}")
    amps = np.zeros(policy.dim, dtype=complex)
    amps[n] = 1.0
    return ModeState(amps)


def vacuum(dim: int) -> ModeState:
    return make_number(0, TruncationPolicy(dim))


def _padding(scale: float) -> int:
    return int(math.ceil(scale**2 + 10 * scale + 40))


def _apply_generator(state: ModeState, gen_builder, scale: float, dim: int | None, tail_tol: float, what: str):
    out_dim = state.dim if dim is None else dim
    work = max(state.dim, out_dim) + _padding(scale)
    vec = state.resized(work).amps
    out = expm(gen_builder(work)) @ vec
    dropped = float(np.sum(np.abs(out[out_dim:]) ** 2))
    if dropped > tail_tol:
        raise TruncationTooSmall(f"{what} needs more than dim={out_dim} (drops {dropped:.3e})")
    return ModeState(out[:out_dim] / np.linalg.norm(out[:out_dim]))


def displace(state: ModeState, beta: complex, dim: int | None = None,
             tail_tol: float = DEFAULT_TAIL_TOL) -> ModeState:
    """Apply ``D(beta) = exp(beta a^dag - beta^* a)``.

    The exponential is taken in a padded basis so the truncation edge does not
    contaminate the result; the output lives in ``dim`` levels (default: the
    input's) and must fit there to within ``tail_tol``.
    """
    beta = complex(beta)
    if beta == 0:
        return state if dim is None else state.resized(dim, tail_tol)

    def gen(d):
        a = annihilation(d)
        return beta * a.conj().T - beta.conjugate() * a

    return _apply_generator(state, gen, abs(beta), dim, tail_tol, "displacement")


def squeeze(state: ModeState, r: float, dim: int | None = None,
            tail_tol: float = DEFAULT_TAIL_TOL) -> ModeState:
    """Apply ``S(r) = exp(r (a^2 - a^dag^2) / 2)`` by matrix exponential in a padded basis."""
    if r == 0:
        return state if dim is None else state.resized(dim, tail_tol)

    def gen(d):
        a = annihilation(d)
        a2 = a @ a
        return 0.5 * r * (a2 - a2.conj().T)

    return _apply_generator(state, gen, math.exp(2 * abs(r)), dim, tail_tol, "squeezing")


def tensor(s1: ModeState, s2: ModeState) -> TwoModeState:
    return TwoModeState(np.outer(s1.amps, s2.amps))


# ------------------------------------------------------------------ moments


def ladder_moments(state: ModeState) -> dict[str, complex | float]:
    """``<a>``, ``<a^2>``, ``<N>``, ``<N^2>`` and ``<N a>`` from exact matrix elements."""
    c = state.amps
    n = np.arange(state.dim, dtype=float)
    p = np.abs(c) ** 2
    a1 = np.vdot(c[:-1], np.sqrt(n[1:]) * c[1:])
    a2 = np.vdot(c[:-2], np.sqrt(n[1:-1] * n[2:]) * c[2:])
    na = np.vdot(c[:-1], n[:-1] * np.sqrt(n[1:]) * c[1:])
    return {
        "a": complex(a1),
        "a2": complex(a2),
        "n": float(p @ n),
        "n2": float(p @ n**2),
        "na": complex(na),
    }


def mean_amplitude(state: ModeState) -> complex:
    return ladder_moments(state)["a"]


def moments(state: ModeState) -> Moments:
    m = ladder_moments(state)
    nbar = m["n"]
    mean_x = math.sqrt(2) * m["a"].real
    mean_p = math.sqrt(2) * m["a"].imag
    x2 = nbar + 0.5 + m["a2"].real
    p2 = nbar + 0.5 - m["a2"].real
    return Moments(
        mean_photon=nbar,
        mean_x=mean_x,
        mean_p=mean_p,
        var_x=x2 - mean_x**2,
        var_p=p2 - mean_p**2,
        var_n=m["n2"] - nbar**2,
    )
