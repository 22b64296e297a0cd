"""Quantum Fisher information for the (phi_s, phi_d) pair, and the F_dd bound.

Three independent routes to the QFI matrix are provided:

* :func:`qfi_from_derivatives` -- pure-state formula on ``U B |psi_in>``;
* :func:`qfi_from_covariance` -- covariance of ``N_s`` and ``K`` on the input;
* :func:`qfi_product_analytic` -- closed forms for ``|alpha> (x) |chi>``.

``qfi_finite_difference`` is the derivative route with central differences
in place of the known generators and exists only as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SingularFisher
from .fock import ModeState, TwoModeState, ladder_moments, moments
from .interferometer import (
    PhasePair,
    apply_blocks,
    beam_splitter,
    generator_block,
    phase_shift,
    support_cap,
)


@dataclass(frozen=True)
class FisherMatrix:
    f_ss: float
    f_sd: float
    f_dd: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.f_ss, self.f_sd], [self.f_sd, self.f_dd]])

    @property
    def scale(self) -> float:
        return max(abs(self.f_ss), abs(self.f_sd), abs(self.f_dd), 1.0)

    @property
    def det(self) -> float:
        return self.f_ss * self.f_dd - self.f_sd**2

    def is_psd(self, rtol: float = 1e-9) -> bool:
        s = self.scale
        return self.f_ss >= -rtol * s and self.f_dd >= -rtol * s and self.det >= -rtol * s * s

    def max_rel_diff(self, other: "FisherMatrix") -> float:
        """Largest entry difference relative to ``max(|F|, 1)``."""
        diff = np.max(np.abs(self.matrix - other.matrix))
        return float(diff / max(self.scale, other.scale))


def _psi_blocks(state: TwoModeState, pair: PhasePair, cap: int) -> list[np.ndarray]:
    b = beam_splitter(cap)
    u = phase_shift(pair, cap)
    return apply_blocks(u, apply_blocks(b, state.blocks(cap)))


def _pure_state_qfi(psi: list[np.ndarray], d_s: list[np.ndarray], d_d: list[np.ndarray]) -> FisherMatrix:
    def ip(x, y):
        return complex(sum(np.vdot(a, b) for a, b in zip(x, y)))

    ps, pd = ip(d_s, psi), ip(d_d, psi)
    f_ss = 4 * (ip(d_s, d_s) - ps * ps.conjugate())
    f_dd = 4 * (ip(d_d, d_d) - pd * pd.conjugate())
    f_sd = 4 * (ip(d_s, d_d) - ps * pd.conjugate())
    return FisherMatrix(f_ss.real, f_sd.real, f_dd.real)


def qfi_from_derivatives(state: TwoModeState, pair: PhasePair = PhasePair(), cap: int | None = None) -> FisherMatrix:
    """``F_jk = 4 Re(<d_j psi|d_k psi> - <d_j psi|psi><psi|d_k psi>)`` at ``|psi> = U B |in>``.

    The derivative states are exact: ``i N_s/2 |psi>`` and ``i N_d/2 |psi>``.
    """
    cap = support_cap(state) if cap is None else cap
    psi = _psi_blocks(state, pair, cap)
    d_s = [0.5j * n * v for n, v in enumerate(psi)]
    d_d = [0.5j * (2 * np.arange(n + 1) - n) * v for n, v in enumerate(psi)]
    return _pure_state_qfi(psi, d_s, d_d)


def qfi_finite_difference(state: TwoModeState, pair: PhasePair = PhasePair(), h: float = 1e-5,
                          cap: int | None = None) -> FisherMatrix:
    """Derivative route with central differences of ``U B |in>`` (test oracle)."""
    cap = support_cap(state) if cap is None else cap
    psi = _psi_blocks(state, pair, cap)

    def central(dps, ddd):
        plus = _psi_blocks(state, PhasePair(pair.phi_s + dps, pair.phi_d + ddd), cap)
        minus = _psi_blocks(state, PhasePair(pair.phi_s - dps, pair.phi_d - ddd), cap)
        return [(p - m) / (2 * h) for p, m in zip(plus, minus)]

    return _pure_state_qfi(psi, central(h, 0.0), central(0.0, h))


def _cov_blocks(blocks: list[np.ndarray], first: str, second: str) -> float:
    e1 = e2 = e12 = 0.0
    for n, v in enumerate(blocks):
        g1 = generator_block(first, n) @ v
        g2 = generator_block(second, n) @ v
        e1 += np.vdot(v, g1)
        e2 += np.vdot(v, g2)
        e12 += np.vdot(g1, g2)
    return float((e12 - e1 * e2).real)


def qfi_from_covariance(state: TwoModeState) -> FisherMatrix:
    """Covariances of ``N_s`` and ``K`` on the input state (no phase dependence)."""
    blocks = state.blocks(support_cap(state))
    return FisherMatrix(
        f_ss=_cov_blocks(blocks, "Ns", "Ns"),
        f_sd=_cov_blocks(blocks, "Ns", "K"),
        f_dd=_cov_blocks(blocks, "K", "K"),
    )


def var_k(state: TwoModeState) -> float:
    return qfi_from_covariance(state).f_dd


def qfi_product_analytic(alpha: complex, chi: ModeState) -> FisherMatrix:
    """Closed forms for the product input ``|alpha> (x) |chi>``.

    F_sd here is the Hermitian form ``2 Im(alpha^* <N2 da2>) + 2 Im(alpha^* <a2>)``;
    see :func:`fsd_as_printed` for the one-sided variant.
    """
    alpha = complex(alpha)
    m = ladder_moments(chi)
    beta, nbar = m["a"], m["n"]
    var_n2 = m["n2"] - nbar**2
    d_aad = nbar + 1 - abs(beta) ** 2  # <da da^dag>
    d_ada = nbar - abs(beta) ** 2  # <da^dag da>
    d_a2 = m["a2"] - beta**2  # <(da)^2>
    f_dd = abs(alpha) ** 2 * (d_aad + d_ada) - 2 * (alpha.conjugate() ** 2 * d_a2).real + nbar
    n_da = m["na"] - nbar * beta  # <N2 da2>
    f_sd = 2 * (alpha.conjugate() * n_da).imag + 2 * (alpha.conjugate() * beta).imag
    return FisherMatrix(abs(alpha) ** 2 + var_n2, float(f_sd), float(f_dd))


def fsd_as_printed(alpha: complex, chi: ModeState) -> complex:
    """F_sd with only the ``-i alpha^* <a2>`` trailing term (complex in general).

    Kept to quantify how far that form is from the covariance route.
    """
    alpha = complex(alpha)
    m = ladder_moments(chi)
    n_da = m["na"] - m["n"] * m["a"]
    return -1j * alpha.conjugate() * n_da + 1j * alpha * n_da.conjugate() - 1j * alpha.conjugate() * m["a"]


def fdd_quadrature(alpha_sq: float, chi: ModeState) -> float:
    """``2 alpha^2 var_p + <N>`` for a real coherent amplitude."""
    mo = moments(chi)
    return 2 * alpha_sq * mo.var_p + mo.mean_photon


# ------------------------------------------------------------------ bounds


class FmaxReport(NamedTuple):
    f_max: float
    remainder_R: float
    n_tot: float
    heisenberg_term: float
    imbalance_term: float


def fmax_bound(alpha_sq: float, nbar: float) -> FmaxReport:
    """Largest F_dd over secondary states with ``<N2> = nbar``, and its decomposition.

    ``f_max = 4 alpha^2 nbar + R = n_tot^2 - (alpha^2 - nbar)^2 + R``.
    """
    if alpha_sq < 0 or nbar < 0:
        raise ValueError("alpha_sq and nbar must be nonnegative")
    root = math.sqrt(nbar * (nbar + 1))
    f_max = alpha_sq * (2 * nbar + 2 * root + 1) + nbar
    remainder = nbar + alpha_sq * (2 * root - 2 * nbar + 1)
    n_tot = alpha_sq + nbar
    return FmaxReport(f_max, remainder, n_tot, n_tot**2, (alpha_sq - nbar) ** 2)


def fmax_from_squeeze(alpha_sq: float, r: float) -> float:
    return alpha_sq * math.exp(2 * r) + math.sinh(r) ** 2


class QcrbCheck(NamedTuple):
    satisfied: bool
    margin: float  # smallest eigenvalue of sigma - F^{-1}
    trace_ok: bool
    det_ok: bool


def qcrb_check(fm: FisherMatrix, sigma, rtol: float = 1e-12) -> QcrbCheck:
    """Test ``sigma >= F^{-1}`` as a matrix inequality, plus its trace/det corollaries."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2) or not np.allclose(sigma, sigma.T):
        raise ValueError("sigma must be a real symmetric 2x2 matrix")
    if fm.det <= rtol * fm.scale**2:
        raise SingularFisher(f"Fisher matrix is singular (det={fm.det:.3e})")
    finv = np.linalg.inv(fm.matrix)
    margin = float(np.linalg.eigvalsh(sigma - finv)[0])
    tol = rtol * max(np.max(np.abs(finv)), 1e-300)
    return QcrbCheck(
        satisfied=margin >= -tol,
        margin=margin,
        trace_ok=np.trace(sigma) >= np.trace(finv) - tol,
        det_ok=np.linalg.det(sigma) >= np.linalg.det(finv) - tol * np.max(np.abs(finv)),
    )
