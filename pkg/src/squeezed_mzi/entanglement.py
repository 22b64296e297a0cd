"""Modal entanglement of the two arms after the input beam splitter."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fock import (
    DEFAULT_TAIL_TOL,
    ModeState,
    TruncationPolicy,
    TwoModeState,
    displace,
    make_coherent,
    make_number,
    make_squeezed_vacuum,
    mean_amplitude,
    tensor,
)
from .interferometer import apply, beam_splitter, support_cap

PRODUCT_TOL = 1e-9
#: probability dropped above the beam-splitter cap; far below PRODUCT_TOL
CAP_TOL = 1e-16


@dataclass(frozen=True, eq=False)
class EntanglementReport:
    entropy: float
    schmidt_spectrum: np.ndarray
    is_product: bool


def _entropy(spectrum: np.ndarray) -> float:
    lam = spectrum[spectrum > 0]
    return float(-np.sum(lam * np.log(lam))) + 0.0  # no -0.0


def _drop_roundoff(spectrum: np.ndarray) -> np.ndarray:
    # Schmidt weights at the SVD noise floor carry no information
    floor = 4 * np.finfo(float).eps * spectrum.size
    kept = np.where(spectrum > floor, spectrum, 0.0)
    return kept / kept.sum()


def reduced_spectrum(state: TwoModeState, which_mode: int = 0) -> EntanglementReport:
    """Schmidt spectrum from the singular values of the amplitude grid.

    Both reduced states share the nonzero spectrum, so ``which_mode`` only
    selects which side of the decomposition is computed.
    """
    if which_mode not in (0, 1):
        raise ValueError("which_mode must be 0 or 1")
    grid = state.amps if which_mode == 0 else state.amps.T
    sv = np.linalg.svd(grid, compute_uv=False)
    spectrum = _drop_roundoff(np.sort(sv**2 / np.sum(sv**2))[::-1])
    ent = _entropy(spectrum)
    return EntanglementReport(ent, spectrum, ent < PRODUCT_TOL)


def coherent_offset_decomposition(chi: ModeState, tail_tol: float = DEFAULT_TAIL_TOL) -> tuple[complex, ModeState]:
    """Split ``chi = D(beta) chi0`` with ``beta = <a>`` so that ``chi0`` has zero mean amplitude."""
    beta = mean_amplitude(chi)
    return beta, displace(chi, -beta, tail_tol=tail_tol)


class ProductCriterion(NamedTuple):
    entropy_after_bs: float
    cross_moment: complex  # <a1^dag a2> - <a1^dag><a2> after B


def _cross_moment(state: TwoModeState) -> complex:
    m = state.amps
    rows, cols = m.shape
    n1 = np.sqrt(np.arange(rows, dtype=float))
    n2 = np.sqrt(np.arange(cols, dtype=float))
    # a2 |n1, n2> = sqrt(n2) |n1, n2-1>
    a2 = np.zeros_like(m)
    a2[:, :-1] = m[:, 1:] * n2[1:]
    a1 = np.zeros_like(m)
    a1[:-1, :] = m[1:, :] * n1[1:, None]
    mean_a1 = np.vdot(m, a1)
    mean_a2 = np.vdot(m, a2)
    # <a1^dag a2> = <a1 psi | a2 psi>
    a1_dag_a2 = np.vdot(a1, a2)
    return complex(a1_dag_a2 - mean_a1.conjugate() * mean_a2)


def after_beam_splitter(alpha: complex, chi: ModeState, tail_tol: float = DEFAULT_TAIL_TOL) -> TwoModeState:
    coh = make_coherent(alpha, TruncationPolicy.for_mean(abs(alpha) ** 2, tail_tol))
    state = tensor(coh, chi)
    return apply(beam_splitter(support_cap(state, CAP_TOL)), state, tol=CAP_TOL)


def product_criterion(chi: ModeState, alpha: complex, tail_tol: float = DEFAULT_TAIL_TOL) -> ProductCriterion:
    """Entanglement entropy of ``B(|alpha> (x) |chi>)`` and its cross-mode moment."""
    out = after_beam_splitter(alpha, chi, tail_tol)
    return ProductCriterion(reduced_spectrum(out).entropy, _cross_moment(out))


class EntropyComparison(NamedTuple):
    entropy_squeezed: float
    entropy_number: float


def entropy_comparison(nbar: int, alpha: complex = 2.0, tail_tol: float = DEFAULT_TAIL_TOL) -> EntropyComparison:
    """Post-beam-splitter entropy for a number state vs squeezed vacuum of equal mean photon number."""
    if nbar < 0 or int(nbar) != nbar:
        raise ValueError("nbar must be a nonnegative integer")
    nbar = int(nbar)
    r = math.asinh(math.sqrt(nbar))
    squeezed = make_squeezed_vacuum(r, TruncationPolicy.for_squeezed(r, tail_tol))
    number = make_number(nbar, TruncationPolicy(max(nbar + 2, 2)))
    return EntropyComparison(
        product_criterion(squeezed, alpha, tail_tol).entropy_after_bs,
        product_criterion(number, alpha, tail_tol).entropy_after_bs,
    )
