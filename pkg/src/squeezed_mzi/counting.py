"""Photon-count statistics at the Mach-Zehnder output and their Fisher information.

Outcome ``(n_s, n_d)`` is sum and difference of the two detector counts.  In
block ``n_s`` the output amplitude vector is ``exp(i phi_d J_y) c``, with
``c`` the input amplitudes of ``|n1, n_s - n1>``; its entry ``k`` belongs to
``n_d = 2k - n_s``.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import TruncationTooSmall
from .fock import TwoModeState
from .interferometer import SUPPORT_TOL, jy_eig, support_cap

#: below this probability an outcome's Fisher term uses the 4|A'|^2 limit
P_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class WignerBlock:
    """``mat[m, m'] = <j, m| exp(-i theta J_y) |j, m'>`` with ``m`` ascending from ``-j``."""

    j: Fraction
    theta: float
    mat: np.ndarray


def _block_size(j) -> int:
    two_j = Fraction(j) * 2
    if two_j.denominator != 1 or two_j < 0:
        raise ValueError(f"j must be a nonnegative half-integer, got {j!r}")
    return int(two_j)


def wigner_d(j, theta: float) -> WignerBlock:
    """Real Wigner small-d matrix from the eigendecomposition of ``J_y``."""
    n = _block_size(j)
    mu, v = jy_eig(n)
    full = (v * np.exp(-1j * theta * mu)) @ v.conj().T
    resid = float(np.max(np.abs(full.imag)))
    if resid > 1e-12:
        raise ArithmeticError(f"Wigner d-matrix has imaginary residue {resid:.2e}")
    mat = full.real.copy()
    mat.setflags(write=False)
    return WignerBlock(Fraction(n, 2), float(theta), mat)


def wigner_d_derivative(j, theta: float) -> np.ndarray:
    """``d/dtheta`` of :func:`wigner_d`, i.e. ``-i J_y exp(-i theta J_y)``."""
    n = _block_size(j)
    mu, v = jy_eig(n)
    return ((v * (-1j * mu * np.exp(-1j * theta * mu))) @ v.conj().T).real


# ------------------------------------------------------------ distributions


@dataclass(frozen=True, eq=False)
class CountDistribution:
    """Joint ``P(n_s, n_d | phi_d)``; ``blocks[n_s][k]`` holds ``n_d = 2k - n_s``.

    ``tail`` is the input probability above the largest ``n_s`` kept, which is
    reported rather than folded into the table.
    """

    blocks: tuple[np.ndarray, ...]
    phi_d: float
    tail: float = 0.0

    @property
    def total(self) -> float:
        return float(sum(b.sum() for b in self.blocks))

    @property
    def max_total(self) -> int:
        return len(self.blocks) - 1

    def prob(self, n_s: int, n_d: int) -> float:
        if n_s < 0 or n_s > self.max_total or abs(n_d) > n_s or (n_s + n_d) % 2:
            return 0.0
        return float(self.blocks[n_s][(n_s + n_d) // 2])

    def table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(n_s, n_d, p)`` arrays in the fixed order: ``n_s`` then ``n_d`` ascending."""
        ns = np.concatenate([np.full(n + 1, n) for n in range(len(self.blocks))])
        nd = np.concatenate([2 * np.arange(n + 1) - n for n in range(len(self.blocks))])
        return ns, nd, np.concatenate(self.blocks)

    def marginal_nd(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for n, b in enumerate(self.blocks):
            for k, p in enumerate(b):
                out[2 * k - n] = out.get(2 * k - n, 0.0) + float(p)
        return dict(sorted(out.items()))

    def to_csv(self) -> str:
        ns, nd, p = self.table()
        lines = ["n_s,n_d,probability"]
        lines += [f"{a},{b},{c:.17g}" for a, b, c in zip(ns, nd, p)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        ns, nd, p = self.table()
        return json.dumps(
            {
                "phi_d": self.phi_d,
                "tail": self.tail,
                "outcomes": [[int(a), int(b), float(c)] for a, b, c in zip(ns, nd, p)],
            },
            sort_keys=True,
        )


class CountModel:
    """Output amplitudes of a fixed input state as a function of ``phi_d``.

    Each block's input is expanded once in the ``J_y`` eigenbasis, after which
    amplitudes and their ``phi_d`` derivatives at any phase cost one
    matrix-vector product per block.
    """

    def __init__(self, state: TwoModeState, tol: float = SUPPORT_TOL):
        cap = support_cap(state, tol)
        self.cap = cap
        dist = state.total_number_distribution()
        self.tail = float(dist[cap + 1 :].sum())
        self._vecs = []
        self._mu = []
        self._w = []
        for n, c in enumerate(state.blocks(cap)):
            mu, v = jy_eig(n)
            self._mu.append(mu)
            self._vecs.append(v)
            self._w.append(v.conj().T @ c)
        self.real_input = bool(np.all(np.abs(state.amps.imag) < 1e-14))
        self._grid_cache: dict = {}
        self._grid_lock = threading.Lock()

    def __deepcopy__(self, memo):
        # read-only after construction; copies (e.g. sklearn.clone) share it
        return self

    def amplitudes(self, n: int, phi_d: float) -> tuple[np.ndarray, np.ndarray]:
        """Block ``n`` output amplitudes and their derivative at ``phi_d``."""
        ph = np.exp(1j * phi_d * self._mu[n]) * self._w[n]
        v = self._vecs[n]
        return v @ ph, v @ (1j * self._mu[n] * ph)

    def block_probs_grid(self, n: int, phis: np.ndarray) -> np.ndarray:
        """``P`` for every outcome of block ``n`` (rows) at every phase (columns)."""
        ph = np.exp(1j * np.outer(self._mu[n], phis)) * self._w[n][:, None]
        return np.abs(self._vecs[n] @ ph) ** 2

    def outcome_probs(self, n_s: np.ndarray, n_d: np.ndarray, phis) -> np.ndarray:
        """``P(n_s, n_d | phi)`` for paired outcome arrays (rows) and phases (columns)."""
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        n_s = np.asarray(n_s)
        n_d = np.asarray(n_d)
        out = np.zeros((n_s.size, phis.size))
        for n in np.unique(n_s):
            rows = np.flatnonzero(n_s == n)
            if n > self.cap:
                continue
            k = (n + n_d[rows]) // 2
            ph = np.exp(1j * np.outer(self._mu[n], phis)) * self._w[n][:, None]
            out[rows] = np.abs(self._vecs[n][k] @ ph) ** 2
        return out

    def nd_probs_grid(self, phis) -> np.ndarray:
        """Marginal ``P(n_d | phi)``; row ``n_d + cap`` for ``n_d = -cap..cap``."""
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        out = np.zeros((2 * self.cap + 1, phis.size))
        for n in range(self.cap + 1):
            out[2 * np.arange(n + 1) - n + self.cap] += self.block_probs_grid(n, phis)
        return out

    def grid_tables(self, lo: float, hi: float, points: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(phis, joint, nd)`` on an even grid, computed once per grid and shared.

        ``joint`` rows follow :meth:`CountDistribution.table` order (row
        ``n(n+1)/2 + k`` for ``n_d = 2k - n``); ``nd`` is :meth:`nd_probs_grid`.
        """
        key = (float(lo), float(hi), int(points))
        with self._grid_lock:
            if key not in self._grid_cache:
                phis = np.linspace(lo, hi, points)
                joint = np.concatenate([self.block_probs_grid(n, phis) for n in range(self.cap + 1)])
                nd = np.zeros((2 * self.cap + 1, points))
                offset = 0
                for n in range(self.cap + 1):
                    nd[2 * np.arange(n + 1) - n + self.cap] += joint[offset : offset + n + 1]
                    offset += n + 1
                for arr in (phis, joint, nd):
                    arr.setflags(write=False)
                self._grid_cache[key] = (phis, joint, nd)
            return self._grid_cache[key]

    def distribution(self, phi_d: float) -> CountDistribution:
        blocks = []
        for n in range(self.cap + 1):
            amp, _ = self.amplitudes(n, phi_d)
            blocks.append(np.abs(amp) ** 2)
        return CountDistribution(tuple(blocks), float(phi_d), self.tail)

    def fisher(self, phi_d: float) -> tuple[float, float]:
        """Classical Fisher information of joint counts and of ``n_d`` alone."""
        joint = 0.0
        p_nd = np.zeros(2 * self.cap + 1)
        dp_nd = np.zeros(2 * self.cap + 1)
        for n in range(self.cap + 1):
            amp, damp = self.amplitudes(n, phi_d)
            p = np.abs(amp) ** 2
            dp = 2 * (amp.conj() * damp).real
            small = p < P_FLOOR
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(small, 4 * np.abs(damp) ** 2, dp**2 / np.where(small, 1.0, p))
            joint += float(terms.sum())
            idx = 2 * np.arange(n + 1) - n + self.cap
            np.add.at(p_nd, idx, p)
            np.add.at(dp_nd, idx, dp)
        keep = p_nd >= P_FLOOR
        nd_only = float(np.sum(dp_nd[keep] ** 2 / p_nd[keep]))
        return joint, nd_only

    def mean_nd(self, phis) -> np.ndarray:
        """Expected ``n_d`` at each phase."""
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        out = np.zeros(phis.size)
        for n in range(self.cap + 1):
            nd = 2 * np.arange(n + 1) - n
            out += nd @ self.block_probs_grid(n, phis)
        return out


def count_distribution(state: TwoModeState, phi_d: float, max_tail: float = 1e-9) -> CountDistribution:
    model = CountModel(state)
    if model.tail > max_tail:
        raise TruncationTooSmall(f"input mass {model.tail:.3e} lies above the modelled range")
    return model.distribution(phi_d)


def classical_fisher(state: TwoModeState, phi_d: float) -> float:
    """``sum (dP/dphi)^2 / P`` over joint outcomes, with analytic derivatives."""
    return CountModel(state).fisher(phi_d)[0]


def classical_fisher_nd_only(state: TwoModeState, phi_d: float) -> float:
    """Fisher information of the difference-count marginal ``P(n_d | phi_d)``."""
    return CountModel(state).fisher(phi_d)[1]


def rotate_common(state: TwoModeState, theta: float) -> TwoModeState:
    """Apply ``exp(i N_s theta)``."""
    rows, cols = state.shape
    ns = np.add.outer(np.arange(rows), np.arange(cols))
    return TwoModeState(state.amps * np.exp(1j * theta * ns))
