"""Monte Carlo photon counting and phase estimators.

The estimators follow the scikit-learn estimator protocol: hyperparameters
go to ``__init__`` (so ``get_params``/``set_params``/``clone`` work), and
``fit(X)`` consumes one trial's counts ``X`` -- an ``(n, 2)`` integer array
of ``(n_s, n_d)`` outcomes -- and stores the estimate in ``phase_``.

Identifiability: for real-coefficient inputs ``P(n_s, n_d | phi)`` is even in
``phi``, so the phase is estimated on a window inside ``(0, pi)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .counting import CountDistribution, CountModel
from .errors import DegeneratePosterior, FlatLikelihood, OutOfFringeRange
from .fisher import var_k
from .fock import TruncationPolicy, make_coherent, make_squeezed_vacuum, tensor
from .validation import check_counts, check_window

DEFAULT_WINDOW = (0.0, math.pi)
INV_PHI = (math.sqrt(5) - 1) / 2


# ---------------------------------------------------------------- sampling


def sample_counts(dist: CountDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. outcomes by inverse CDF over the table in its fixed order."""
    ns, nd, p = dist.table()
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    idx = np.minimum(idx, p.size - 1)
    return np.column_stack([ns[idx], nd[idx]]).astype(np.int64)


# ---------------------------------------------------------- likelihoods


def _unique_counts(samples: np.ndarray, marginal: str):
    if marginal == "nd":
        vals, counts = np.unique(samples[:, 1], return_counts=True)
        return vals, None, counts
    keys, counts = np.unique(samples, axis=0, return_counts=True)
    return keys[:, 0], keys[:, 1], counts


def _nd_probs(model: CountModel, n_d: np.ndarray, phis: np.ndarray) -> np.ndarray:
    grid = model.nd_probs_grid(phis)
    rows = n_d + model.cap
    inside = (rows >= 0) & (rows < grid.shape[0])
    out = np.zeros((n_d.size, phis.size))
    out[inside] = grid[rows[inside]]
    return out


def log_likelihood(samples: np.ndarray, model: CountModel, phis, marginal: str = "joint") -> np.ndarray:
    """``sum log P(outcome | phi)`` at each phase; ``marginal="nd"`` uses ``P(n_d | phi)``."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    if samples.shape[0] == 0:
        return np.zeros(phis.size)
    a, b, counts = _unique_counts(samples, marginal)
    probs = _nd_probs(model, a, phis) if marginal == "nd" else model.outcome_probs(a, b, phis)
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    return counts @ logp


def _grid_log_likelihood(samples: np.ndarray, model: CountModel, lo: float, hi: float, points: int,
                         marginal: str) -> tuple[np.ndarray, np.ndarray]:
    """Log-likelihood on the cached even grid of the model."""
    grid, joint, nd = model.grid_tables(lo, hi, points)
    if samples.shape[0] == 0:
        return grid, np.zeros(points)
    a, b, counts = _unique_counts(samples, marginal)
    if marginal == "nd":
        rows, table = a + model.cap, nd
        inside = (rows >= 0) & (rows < table.shape[0])
    else:
        rows, table = a * (a + 1) // 2 + (a + b) // 2, joint
        inside = a <= model.cap
    probs = np.zeros((rows.size, points))
    probs[inside] = table[rows[inside]]
    with np.errstate(divide="ignore"):
        return grid, counts @ np.log(probs)


def _golden_max(f, lo: float, hi: float, xtol: float) -> float:
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > xtol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def ml_estimate(samples, model: CountModel, window=DEFAULT_WINDOW, grid_points: int = 720,
                xtol: float = 1e-8, marginal: str = "joint") -> float:
    """Grid search over the window, then golden-section refinement to ``xtol``."""
    samples = check_counts(samples)
    if samples.shape[0] == 0:
        raise ValueError("ml_estimate needs at least one sample")
    lo, hi = check_window(window)
    grid, ll = _grid_log_likelihood(samples, model, lo, hi, grid_points, marginal)
    finite = ll[np.isfinite(ll)]
    if finite.size == 0 or finite.max() - finite.min() < 1e-12:
        raise FlatLikelihood("log-likelihood is flat over the grid")
    i = int(np.argmax(ll))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    return _golden_max(lambda phi: float(log_likelihood(samples, model, phi, marginal)[0]), a, b, xtol)


def bayes_estimate(samples, model: CountModel, window=DEFAULT_WINDOW,
                   grid_points: int = 1441, marginal: str = "joint") -> tuple[float, float]:
    """Posterior mean and variance under a flat prior on the window (trapezoidal rule)."""
    samples = check_counts(samples)
    lo, hi = check_window(window)
    grid, ll = _grid_log_likelihood(samples, model, lo, hi, grid_points, marginal)
    top = ll.max()
    if not np.isfinite(top):
        raise DegeneratePosterior("no grid point has nonzero likelihood")
    w = np.exp(ll - top)
    norm = np.trapezoid(w, grid)
    if not (norm > 0 and np.isfinite(norm)):
        raise DegeneratePosterior("posterior normalization failed")
    mean = float(np.trapezoid(grid * w, grid) / norm)
    var = float(np.trapezoid((grid - mean) ** 2 * w, grid) / norm)
    return mean, var


@dataclass
class FringeCalibration:
    """Exact ``<n_d>(phi)`` of the model on the monotone branch around ``operating_point``."""

    spline: CubicSpline
    lo: float
    hi: float

    @classmethod
    def from_model(cls, model: CountModel, window=DEFAULT_WINDOW, operating_point: float | None = None,
                   points: int = 2049) -> "FringeCalibration":
        lo, hi = check_window(window)
        phis = np.linspace(lo, hi, points)
        curve = model.mean_nd(phis)
        op = 0.5 * (lo + hi) if operating_point is None else operating_point
        slope_sign = np.sign(np.diff(curve))
        k = int(np.clip(np.searchsorted(phis, op) - 1, 0, points - 2))
        if slope_sign[k] == 0:
            raise OutOfFringeRange(f"fringe is flat at the operating point {op}")
        left = k
        while left > 0 and slope_sign[left - 1] == slope_sign[k]:
            left -= 1
        right = k
        while right < points - 2 and slope_sign[right + 1] == slope_sign[k]:
            right += 1
        seg = slice(left, right + 2)
        return cls(CubicSpline(phis[seg], curve[seg]), float(phis[left]), float(phis[right + 1]))

    def invert(self, mean_nd: float) -> float:
        ends = self.spline(self.lo) - mean_nd, self.spline(self.hi) - mean_nd
        if ends[0] == 0:
            return self.lo
        if ends[1] == 0:
            return self.hi
        if np.sign(ends[0]) == np.sign(ends[1]):
            raise OutOfFringeRange(
                f"mean n_d={mean_nd:.6g} is outside the invertible branch "
                f"[{self.spline(self.lo):.6g}, {self.spline(self.hi):.6g}]"
            )
        return float(brentq(lambda p: float(self.spline(p)) - mean_nd, self.lo, self.hi, xtol=1e-13))


def linear_fringe_estimate(samples, calibration: FringeCalibration) -> float:
    """Invert the calibrated fringe at the sample mean of ``n_d``."""
    samples = check_counts(samples)
    if samples.shape[0] == 0:
        raise OutOfFringeRange("no samples")
    return calibration.invert(float(samples[:, 1].mean()))


# -------------------------------------------------------------- estimators


class _PhaseEstimator(BaseEstimator):
    def estimate(self, X) -> float:
        return self.fit(X).phase_

    def _model(self) -> CountModel:
        if self.model is None:
            raise ValueError(f"{type(self).__name__} needs a CountModel")
        return self.model


class MaximumLikelihood(_PhaseEstimator):
    def __init__(self, model=None, window=DEFAULT_WINDOW, grid_points=720, xtol=1e-8, marginal="joint"):
        self.model = model
        self.window = window
        self.grid_points = grid_points
        self.xtol = xtol
        self.marginal = marginal

    def fit(self, X, y=None):
        self.phase_ = ml_estimate(X, self._model(), self.window, self.grid_points, self.xtol, self.marginal)
        return self

    def score(self, X, y=None) -> float:
        """Log-likelihood of ``X`` at the fitted phase."""
        check_is_fitted(self, "phase_")
        return float(log_likelihood(check_counts(X), self._model(), self.phase_, self.marginal)[0])


class Bayesian(_PhaseEstimator):
    """Flat-prior posterior mean; ``posterior_variance_`` is stored alongside."""

    def __init__(self, model=None, window=DEFAULT_WINDOW, grid_points=1441, marginal="joint"):
        self.model = model
        self.window = window
        self.grid_points = grid_points
        self.marginal = marginal

    def fit(self, X, y=None):
        self.phase_, self.posterior_variance_ = bayes_estimate(
            X, self._model(), self.window, self.grid_points, self.marginal
        )
        return self


class LinearFringe(_PhaseEstimator):
    def __init__(self, model=None, window=DEFAULT_WINDOW, operating_point=None, calibration=None):
        self.model = model
        self.window = window
        self.operating_point = operating_point
        self.calibration = calibration

    def fit(self, X, y=None):
        cal = self.calibration
        if cal is None:
            cal = FringeCalibration.from_model(self._model(), self.window, self.operating_point)
        self.calibration_ = cal
        self.phase_ = linear_fringe_estimate(X, cal)
        return self


ESTIMATORS = {"LinearFringe": LinearFringe, "MaximumLikelihood": MaximumLikelihood, "Bayesian": Bayesian}


# ------------------------------------------------------------- experiments


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: complex
    r: float
    phi_true: float
    shots_per_trial: int
    trials: int
    seed: int = 0
    dim: int | None = None
    estimator: str = "MaximumLikelihood"
    window: tuple[float, float] = DEFAULT_WINDOW
    marginal: str = "joint"

    def __post_init__(self):
        if self.shots_per_trial < 1:
            raise ValueError("shots_per_trial must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}; choose from {sorted(ESTIMATORS)}")
        if self.marginal not in ("joint", "nd"):
            raise ValueError("marginal must be 'joint' or 'nd'")
        lo, hi = check_window(self.window)
        if not lo < self.phi_true < hi:
            raise ValueError(f"phi_true={self.phi_true} is outside the identifiable window {self.window}")

    def input_state(self):
        coh_dim = TruncationPolicy.for_mean(abs(self.alpha) ** 2).dim
        sq_dim = TruncationPolicy.for_squeezed(self.r).dim
        if self.dim is not None:
            coh_dim = sq_dim = int(self.dim)
        return tensor(make_coherent(self.alpha, TruncationPolicy(coh_dim)),
                      make_squeezed_vacuum(self.r, TruncationPolicy(sq_dim)))


@dataclass
class EstimationRun:
    config: ExperimentConfig
    estimates: np.ndarray
    sample_variance: float
    crb: float
    variance_ratio: float
    bias: float
    mc_error: float
    fisher: float
    posterior_variance: float | None = None
    extras: dict = field(default_factory=dict)

    def summary(self) -> dict:
        cfg = asdict(self.config)
        cfg["alpha"] = [self.config.alpha.real, self.config.alpha.imag] if isinstance(
            self.config.alpha, complex) else self.config.alpha
        cfg["window"] = list(self.config.window)
        out = {
            "config": cfg,
            "sample_variance": self.sample_variance,
            "crb": self.crb,
            "variance_ratio": self.variance_ratio,
            "bias": self.bias,
            "mc_error": self.mc_error,
            "fisher": self.fisher,
        }
        if self.posterior_variance is not None:
            out["posterior_variance"] = self.posterior_variance
            out["posterior_variance_ratio"] = self.posterior_variance / self.crb
        return out


def trial_generators(seed: int, trials: int) -> list[np.random.Generator]:
    """One independent stream per trial: ``SeedSequence(seed).spawn(trials)``.

    Trial ``k`` always sees the same stream whatever the thread count.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def batch_ratio_error(estimates: np.ndarray, crb: float, batches: int = 10) -> float:
    """Standard error of the variance ratio from the spread over ``batches`` groups."""
    groups = np.array_split(estimates, batches)
    ratios = np.array([np.var(g, ddof=1) / crb for g in groups if g.size > 1])
    if ratios.size < 2:
        return math.nan
    return float(np.std(ratios, ddof=1) / math.sqrt(ratios.size))


def run_experiment(config: ExperimentConfig, threads: int = 1) -> EstimationRun:
    state = config.input_state()
    model = CountModel(state)
    dist = model.distribution(config.phi_true)
    fisher = var_k(state)
    crb = 1.0 / (config.shots_per_trial * fisher)
    cls = ESTIMATORS[config.estimator]
    if cls is LinearFringe:
        cal = FringeCalibration.from_model(model, config.window, config.phi_true)
        proto = LinearFringe(model=model, window=config.window, calibration=cal)
    else:
        proto = cls(model=model, window=config.window, marginal=config.marginal)

    def one(rng):
        samples = sample_counts(dist, config.shots_per_trial, rng)
        est = clone(proto).fit(samples)
        return est.phase_, getattr(est, "posterior_variance_", None)

    rngs = trial_generators(config.seed, config.trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, rngs))
    else:
        results = [one(g) for g in rngs]
    estimates = np.array([r[0] for r in results])
    post = [r[1] for r in results if r[1] is not None]
    sample_var = float(np.var(estimates, ddof=1)) if estimates.size > 1 else math.nan
    return EstimationRun(
        config=config,
        estimates=estimates,
        sample_variance=sample_var,
        crb=crb,
        variance_ratio=sample_var / crb,
        bias=float(estimates.mean() - config.phi_true),
        mc_error=batch_ratio_error(estimates, crb),
        fisher=fisher,
        posterior_variance=float(np.mean(post)) if post else None,
    )
