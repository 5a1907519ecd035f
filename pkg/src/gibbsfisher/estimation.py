"""Monte Carlo check of entropy and temperature estimation by energy measurement.

Randomness comes from SplitMix64 so that results are reproducible across
platforms and independent of trial scheduling:

* ``mix64(z)``: z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31 (all arithmetic mod 2**64).
* The i-th draw (i = 0, 1, ...) of a stream seeded with ``s`` is
  ``mix64(s + (i + 1) * 0x9E3779B97F4A7C15)``, mapped to [0, 1) by its top 53 bits.
* Trial ``t`` of a simulation uses the stream seeded with
  ``mix64(master_seed + (t + 1) * 0x9E3779B97F4A7C15)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateModelError, ModelError, RangeError
from .spectra import FiniteSpectrum, ThermalModel
from .thermo import entropy, thermo_point

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# keeps each sampling block near 4M draws
_BLOCK_DRAWS = 1 << 22


def mix64(z):
    """SplitMix64 finaliser on a Python int or a uint64 array."""
    if isinstance(z, np.ndarray):
        z = z.astype(np.uint64, copy=True)
        z ^= z >> np.uint64(30)
        z *= _M1
        z ^= z >> np.uint64(27)
        z *= _M2
        z ^= z >> np.uint64(31)
        return z
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    return mix64((master_seed + (trial + 1) * GOLDEN_GAMMA) & _MASK64)


def uniform_stream(seeds: np.ndarray, n: int) -> np.ndarray:
    """Uniform [0, 1) draws, one row of length ``n`` per seed."""
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1)
    steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN_GAMMA)
    bits = mix64(seeds + steps[None, :])
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _require_finite(model: ThermalModel) -> FiniteSpectrum:
    if not model.finite:
        raise ModelError(
            f"{type(model).__name__} has an unbounded spectrum; truncate it before sampling"
        )
    return model.as_spectrum()


def _cumulative_table(spec: FiniteSpectrum, beta: float) -> np.ndarray:
    eps = spec.energies - spec.energies[0]
    w = spec.degeneracies * np.exp(-beta * eps)
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0
    return cdf


def _sample_indices(cdf: np.ndarray, seeds: np.ndarray, n: int) -> np.ndarray:
    idx = np.searchsorted(cdf, uniform_stream(seeds, n), side="right")
    return np.minimum(idx, len(cdf) - 1)


def sample_energies(model: ThermalModel, beta: float, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. outcomes of a projective energy measurement on the Gibbs state."""
    spec = _require_finite(model)
    if not (math.isfinite(beta) and beta > 0):
        raise RangeError(f"beta must be positive, got {beta!r}")
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n!r}")
    if n == 0:
        return np.empty(0)
    idx = _sample_indices(_cumulative_table(spec, beta), np.array([seed & _MASK64]), n)[0]
    return spec.energies[idx]


def _invert_many(spec: FiniteSpectrum, targets: np.ndarray, max_iter: int = 200) -> np.ndarray:
    """Solve U(beta) = target elementwise; NaN where the target is unattainable."""
    targets = np.asarray(targets, dtype=float)
    e0 = spec.energies[0]
    scale = spec.energy_scale
    tol = 1e-12 * scale
    shifted = targets - e0
    u_inf = spec.infinite_temperature_energy() - e0
    out = np.full(targets.shape, np.nan)
    ok = (shifted > 0) & (shifted < u_inf)
    if not ok.any():
        return out
    goal = shifted[ok]

    def excitation(b):
        m = spec.reduced_moments(b)
        return m.excitation, m.variance

    lo = np.full(goal.shape, 1e-6 / scale)
    hi = np.full(goal.shape, 1e6 / scale)
    # widen the bracket geometrically until U(lo) > goal > U(hi)
    for _ in range(200):
        u_lo, _ = excitation(lo)
        bad = u_lo <= goal
        if not bad.any():
            break
        lo = np.where(bad, lo * 0.5, lo)
    for _ in range(200):
        with np.errstate(under="ignore"):
            u_hi, _ = excitation(hi)
        bad = u_hi >= goal
        if not bad.any():
            break
        hi = np.where(bad, hi * 2.0, hi)

    beta = np.sqrt(lo * hi)
    done = np.zeros(goal.shape, dtype=bool)
    for _ in range(max_iter):
        active = ~done
        if not active.any():
            break
        b = beta[active]
        u, var = excitation(b)
        resid = u - goal[active]
        conv = np.abs(resid) < tol
        l, h = lo[active], hi[active]
        # U decreases with beta: positive residual means beta is too small
        l = np.where(resid > 0, b, l)
        h = np.where(resid < 0, b, h)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            newton = b + resid / var
        inside = np.isfinite(newton) & (newton > l) & (newton < h)
        wide = h > 4.0 * l
        fallback = np.where(wide, np.sqrt(l * h), 0.5 * (l + h))
        nxt = np.where(conv, b, np.where(inside, newton, fallback))
        # bracket collapsed to float resolution
        stuck = (h - l) <= 4 * np.spacing(h)
        lo[active], hi[active] = l, h
        beta[active] = nxt
        done[active] = conv | stuck
    if not done.all():
        raise ConvergenceError("mean-energy inversion did not converge")
    out[ok] = beta
    return out


def invert_mean_energy(model: ThermalModel, mean_E: float) -> float:
    """Maximum-likelihood beta for an observed sample-mean energy.

    The sample mean is sufficient for beta, and the likelihood equation reduces
    to U(beta_hat) = mean_E.  Solved by Newton's method (dU/dbeta = -Var H)
    safeguarded by a bisection bracket.

    Raises:
        RangeError: if ``mean_E`` is not strictly between the ground energy and
            the infinite-temperature mean energy.
    """
    spec = _require_finite(model)
    if len(spec.levels) < 2:
        raise DegenerateModelError("a single-level spectrum carries no information about beta")
    beta_hat = _invert_many(spec, np.array([float(mean_E)]))[0]
    if math.isnan(beta_hat):
        raise RangeError(
            f"mean energy {mean_E!r} outside the attainable open interval "
            f"({spec.energies[0]!r}, {spec.infinite_temperature_energy()!r})"
        )
    return float(beta_hat)


@dataclass(frozen=True)
class SimConfig:
    model: ThermalModel
    beta_true: float
    n_copies: int
    n_trials: int
    master_seed: int = 0

    def __post_init__(self) -> None:
        spec = _require_finite(self.model)
        if len(spec.levels) < 2:
            raise ModelError("simulation needs at least two distinct energy levels")
        if not (math.isfinite(self.beta_true) and self.beta_true > 0):
            raise RangeError(f"beta_true must be positive, got {self.beta_true!r}")
        if self.n_copies < 2:
            raise ModelError(f"n_copies must be at least 2, got {self.n_copies!r}")
        if self.n_trials < 1:
            raise ModelError(f"n_trials must be positive, got {self.n_trials!r}")
        if not 0 <= self.master_seed <= _MASK64:
            raise ModelError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed!r}")


@dataclass(frozen=True)
class TrialStatistics:
    mean_S_hat: float
    var_S_hat: float
    mean_T_hat: float
    var_T_hat: float
    ratio_S: float
    ratio_T: float
    product_ratio: float
    n_failed: int
    n_success: int
    degenerate: bool = False

    def ratio_S_stderr(self) -> float:
        """Approximate standard error of ``ratio_S`` from sample-variance noise."""
        if self.n_success < 2:
            return math.inf
        return self.ratio_S * math.sqrt(2.0 / (self.n_success - 1))


def _sample_means(spec: FiniteSpectrum, config: SimConfig) -> np.ndarray:
    n, trials = config.n_copies, config.n_trials
    cdf = _cumulative_table(spec, config.beta_true)
    energies = spec.energies
    k = len(energies)
    seeds = np.array([trial_seed(config.master_seed, t) for t in range(trials)], dtype=np.uint64)
    means = np.empty(trials)
    block = max(1, _BLOCK_DRAWS // n)
    for start in range(0, trials, block):
        stop = min(trials, start + block)
        idx = _sample_indices(cdf, seeds[start:stop], n)
        rows = stop - start
        offsets = (np.arange(rows) * k)[:, None]
        counts = np.bincount((idx + offsets).ravel(), minlength=rows * k).reshape(rows, k)
        # exact integer counts, combined in a fixed level order
        total = np.zeros(rows)
        for j in range(k):
            total += counts[:, j] * energies[j]
        means[start:stop] = total / n
    return means


def _mean_var(values: np.ndarray) -> tuple[float, float]:
    vals = [float(v) for v in values]
    mean = math.fsum(vals) / len(vals)
    if len(vals) < 2:
        return mean, 0.0
    return mean, math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)


def run_trials(config: SimConfig) -> TrialStatistics:
    """Sample, invert to beta_hat, plug into S and T, and compare with Cramer-Rao.

    Ratios equal to one mean the estimator saturates the bound.  Estimates are
    raw plug-in values; their O(1/n) bias is not corrected.
    """
    spec = _require_finite(config.model)
    beta_hat = _invert_many(spec, _sample_means(spec, config))
    good = ~np.isnan(beta_hat)
    n_ok = int(good.sum())
    if n_ok == 0:
        raise RangeError("every trial produced an unattainable mean energy")
    b = beta_hat[good]
    mean_s, var_s = _mean_var(entropy(spec, b))
    mean_t, var_t = _mean_var(1.0 / b)
    truth = thermo_point(spec, config.beta_true)
    n = config.n_copies
    t2 = truth.T**2
    return TrialStatistics(
        mean_S_hat=mean_s,
        var_S_hat=var_s,
        mean_T_hat=mean_t,
        var_T_hat=var_t,
        ratio_S=n * var_s / truth.C_v,
        ratio_T=n * var_t * truth.C_v / t2,
        product_ratio=var_s * var_t * n * n / t2,
        n_failed=config.n_trials - n_ok,
        n_success=n_ok,
        degenerate=n_ok < 2,
    )
