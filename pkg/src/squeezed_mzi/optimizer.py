"""Numerical maximization of F_dd over secondary-port states at fixed mean photon number.

Two independent routes:

* :func:`maximize_fdd_gradient` -- augmented-Lagrangian ascent of
  ``2 alpha^2 var_p + nbar`` over unit-norm complex amplitude vectors;
* :func:`maximize_fdd_eigensweep` -- top eigenvector of ``p^2 - lam N`` with
  the multiplier ``lam`` tuned by bracketing so that ``<N> = nbar``.

Both report the fidelity of their optimum to squeezed vacuum with
``sinh^2 r = nbar``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import NotConverged, SweepBracketFailure, TruncationTooSmall
from .fisher import fdd_quadrature, fmax_bound
from .fock import (
    DEFAULT_TAIL_TOL,
    ModeState,
    TruncationPolicy,
    make_squeezed_vacuum,
    moments,
    p_squared,
    squeezed_dim,
    vacuum,
)

#: levels at the top of the basis whose occupancy must stay below TOP_BAND_TOL
TOP_BAND = 4
TOP_BAND_TOL = 1e-8
MAX_DIM = 2000


@dataclass(frozen=True)
class OptimizationProblem:
    alpha_sq: float
    nbar: float
    dim: int | None = None
    tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.alpha_sq < 0 or self.nbar < 0:
            raise ValueError("alpha_sq and nbar must be nonnegative")
        if self.dim is not None and self.nbar >= self.dim - TOP_BAND - 1:
            raise ValueError(f"nbar={self.nbar} is not feasible with dim={self.dim}")

    @property
    def r(self) -> float:
        return math.asinh(math.sqrt(self.nbar))

    def resolved_dim(self) -> int:
        if self.dim is not None:
            return int(self.dim)
        return max(squeezed_dim(self.r, DEFAULT_TAIL_TOL) + 8, 16)


@dataclass
class OptimizationResult:
    chi_opt: ModeState
    fdd_achieved: float
    fmax_analytic: float
    fidelity_to_squeezed: float
    iterations: int
    converged: bool
    method: str = ""
    log: list[dict] = field(default_factory=list)


def gauge_fix(amps: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude amplitude real and positive."""
    k = int(np.argmax(np.abs(amps)))
    out = amps * (np.conj(amps[k]) / abs(amps[k]))
    out[k] = abs(amps[k])
    return out


def _top_band_mass(amps: np.ndarray) -> float:
    return float(np.sum(np.abs(amps[-TOP_BAND:]) ** 2))


def _result(prob: OptimizationProblem, amps: np.ndarray, iterations: int, converged: bool,
            method: str, log: list[dict]) -> OptimizationResult:
    chi = ModeState(gauge_fix(amps / np.linalg.norm(amps)))
    dim = chi.dim
    reference = make_squeezed_vacuum(prob.r, TruncationPolicy(dim, tail_tol=1.0))
    return OptimizationResult(
        chi_opt=chi,
        fdd_achieved=fdd_quadrature(prob.alpha_sq, chi),
        fmax_analytic=fmax_bound(prob.alpha_sq, prob.nbar).f_max,
        fidelity_to_squeezed=min(1.0, chi.fidelity(reference)),
        iterations=iterations,
        converged=converged,
        method=method,
        log=log,
    )


# ------------------------------------------------------------ gradient route


class _Objective:
    """``var_p`` and ``<N>`` of ``c / |c|`` with gradients in the real parametrization."""

    def __init__(self, dim: int):
        self.dim = dim
        self.p2 = p_squared(dim)
        k = np.sqrt(np.arange(1, dim, dtype=float))
        # p = (a - a^dag) / (i sqrt 2), a real antisymmetric times -i
        self.p = (np.diag(k, 1) - np.diag(k, -1)) / (1j * math.sqrt(2))
        self.n = np.arange(dim, dtype=float)

    @staticmethod
    def split(v: np.ndarray) -> np.ndarray:
        half = v.size // 2
        return v[:half] + 1j * v[half:]

    @staticmethod
    def join(c: np.ndarray) -> np.ndarray:
        return np.concatenate([c.real, c.imag])

    def evaluate(self, c: np.ndarray):
        nrm2 = float(np.vdot(c, c).real)
        p2c = self.p2 @ c
        pc = self.p @ c
        q_p2 = float(np.vdot(c, p2c).real) / nrm2
        q_p = float(np.vdot(c, pc).real) / nrm2
        q_n = float(np.sum(self.n * np.abs(c) ** 2)) / nrm2
        # d q_A / d conj(c) = (A c - q_A c) / |c|^2; real gradient = 2 * that
        g_p2 = 2 * (p2c - q_p2 * c) / nrm2
        g_p = 2 * (pc - q_p * c) / nrm2
        g_n = 2 * (self.n * c - q_n * c) / nrm2
        var_p = q_p2 - q_p**2
        g_var = g_p2 - 2 * q_p * g_p
        return var_p, g_var, q_n, g_n


def _projected_grad_norm(obj: _Objective, c: np.ndarray) -> float:
    """Norm of grad var_p on the tangent space of ``{|c| = 1, <N> = nbar}`` mod phase,
    relative to the unprojected gradient norm (floored at 1)."""
    c = c / np.linalg.norm(c)
    _, g_var, _, g_n = obj.evaluate(c)
    gv = obj.join(g_var)
    basis = np.stack([obj.join(c), obj.join(1j * c), obj.join(g_n)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, gv, rcond=None)
    return float(np.linalg.norm(gv - basis @ coef) / max(np.linalg.norm(gv), 1.0))


def _initial_vector(dim: int, nbar: float, rng: np.random.Generator, kind: str) -> np.ndarray:
    n = np.arange(dim)
    if kind == "random":
        weight = np.exp(-n / (2 * (nbar + 1)))
        c = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) * weight
    else:  # perturbed vacuum with small even-level noise
        c = np.zeros(dim, complex)
        c[0] = 1.0
        even = n[(n % 2 == 0) & (n > 0) & (n < 4 * (nbar + 1) + 4)]
        c[even] = 0.3 * (rng.standard_normal(even.size) + 1j * rng.standard_normal(even.size))
        c[1:] += 1e-3 * (rng.standard_normal(dim - 1) + 1j * rng.standard_normal(dim - 1)) * np.exp(-n[1:] / (nbar + 1))
    return c / np.linalg.norm(c)


def _augmented_lagrangian(obj: _Objective, prob: OptimizationProblem, c0: np.ndarray,
                          max_outer: int, log: list[dict]) -> tuple[np.ndarray, int, bool]:
    lam, mu = 0.0, 10.0
    x = obj.join(c0)
    total_iter = 0
    prev_viol = math.inf
    for outer in range(max_outer):
        def fun(v, lam=lam, mu=mu):
            c = obj.split(v)
            var_p, g_var, q_n, g_n = obj.evaluate(c)
            g = q_n - prob.nbar
            val = -var_p + lam * g + 0.5 * mu * g * g
            grad = -g_var + (lam + mu * g) * g_n
            return val, obj.join(grad)

        res = minimize(fun, x, jac=True, method="L-BFGS-B",
                       options={"maxiter": 5000, "gtol": 1e-12, "ftol": 1e-16, "maxcor": 30})
        total_iter += int(res.nit)
        c = obj.split(res.x)
        x = obj.join(c / np.linalg.norm(c))
        _, _, q_n, _ = obj.evaluate(c)
        viol = abs(q_n - prob.nbar)
        pg = _projected_grad_norm(obj, c)
        log.append({"outer": outer, "inner_iterations": int(res.nit), "multiplier": lam,
                    "penalty": mu, "constraint_violation": viol, "projected_gradient": pg})
        if viol < 1e-9 and pg < prob.tol:
            return obj.split(x), total_iter, True
        lam += mu * (q_n - prob.nbar)
        if viol > 1e-10 and viol > 0.25 * prev_viol:
            mu = min(mu * 10, 1e6)
        prev_viol = viol
    return obj.split(x), total_iter, False


def maximize_fdd_gradient(prob: OptimizationProblem, init: str = "perturbed-vacuum",
                          max_outer: int = 40) -> OptimizationResult:
    """Maximize ``2 alpha^2 var_p + nbar`` subject to ``<N> = nbar``, ``|chi| = 1``.

    ``init`` is ``"perturbed-vacuum"`` or ``"random"``; the seed in ``prob``
    drives both.  If the optimum leaks into the top of the basis the search
    restarts at a larger ``dim``.
    """
    dim = prob.resolved_dim()
    if prob.nbar == 0:
        return _result(prob, vacuum(dim).amps, 0, True, "gradient", [])
    rng = np.random.default_rng(prob.seed)
    while True:
        log: list[dict] = []
        obj = _Objective(dim)
        c0 = _initial_vector(dim, prob.nbar, rng, init)
        c, iters, converged = _augmented_lagrangian(obj, prob, c0, max_outer, log)
        if _top_band_mass(c) <= TOP_BAND_TOL:
            break
        if dim * 2 > MAX_DIM:
            raise TruncationTooSmall(f"optimum does not fit below dim={MAX_DIM}")
        dim *= 2
    if not converged:
        warnings.warn(f"gradient route did not converge in {max_outer} outer iterations", NotConverged)
    return _result(prob, c, iters, converged, "gradient", log)


# --------------------------------------------------------- eigensweep route


def _top_eigvec(p2: np.ndarray, n: np.ndarray, lam: float) -> np.ndarray:
    _, v = np.linalg.eigh(p2 - lam * np.diag(n))
    return v[:, -1]


def maximize_fdd_eigensweep(prob: OptimizationProblem, sweep_points: int = 24,
                            xtol: float = 1e-14) -> OptimizationResult:
    """Lagrangian route: the top eigenvector of ``p^2 - lam N`` for tuned ``lam``.

    ``lam`` only gives a bounded problem above 2, and ``<N>`` falls from the
    truncation edge to 0 as ``lam`` grows; a log-spaced sweep (jittered by the
    seed) brackets ``<N> = nbar`` and Brent's method finishes it.  The result
    is only accepted when ``<p> = 0`` holds for the eigenvector.
    """
    dim = prob.resolved_dim()
    if prob.nbar == 0:
        return _result(prob, vacuum(dim).amps, 0, True, "eigensweep", [])
    rng = np.random.default_rng(prob.seed)
    while True:
        p2 = p_squared(dim).real
        n = np.arange(dim, dtype=float)
        log: list[dict] = []

        def mean_n(lam):
            v = _top_eigvec(p2, n, lam)
            return float(np.sum(n * v**2))

        offsets = np.logspace(-6, 4, sweep_points) * np.exp(rng.uniform(-0.1, 0.1, sweep_points))
        lams = 2.0 + np.sort(offsets)
        values = []
        bracket = None
        for lam in lams:
            val = mean_n(lam)
            values.append(val)
            log.append({"multiplier": float(lam), "mean_photon": val})
            if len(values) > 1 and values[-2] >= prob.nbar > val:
                bracket = (lams[len(values) - 2], lam)
                break
        if bracket is None:
            raise SweepBracketFailure(f"no multiplier brackets nbar={prob.nbar} at dim={dim}")
        lam_star, info = brentq(lambda lam: mean_n(lam) - prob.nbar, *bracket, xtol=xtol,
                                rtol=4 * np.finfo(float).eps, full_output=True)
        v = _top_eigvec(p2, n, lam_star).astype(complex)
        if _top_band_mass(v) <= TOP_BAND_TOL:
            break
        if dim * 2 > MAX_DIM:
            raise TruncationTooSmall(f"optimum does not fit below dim={MAX_DIM}")
        dim *= 2
    mo = moments(ModeState(v))
    if abs(mo.mean_p) > 1e-8:
        raise SweepBracketFailure(f"eigenvector has <p> = {mo.mean_p:.2e}; Lagrangian route invalid")
    log.append({"multiplier": float(lam_star), "mean_photon": mo.mean_photon})
    return _result(prob, v, int(info.iterations), bool(info.converged), "eigensweep", log)
