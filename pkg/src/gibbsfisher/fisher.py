"""Fisher information for beta, T, S and Renyi entropies of Gibbs states.

For a Gibbs family the eigenbasis does not move with beta, so the quantum
Fisher information is the classical one of the Boltzmann weights:
F_beta = Var(H).  Every other parameter follows by reparametrisation.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateModelError, ModelError, RangeError
from .spectra import Oscillator, ThermalModel
from .thermo import RENYI_UNIT_TOL, thermo_point


@dataclass(frozen=True)
class FisherReport:
    beta: float
    F_beta: float
    F_T: float
    F_S: float
    product_FS_FT: float
    cr_var_S: float
    cr_var_T: float
    cr_product: float
    n_copies: int

    @property
    def T(self) -> float:
        return 1.0 / self.beta

    @property
    def C_v(self) -> float:
        return 1.0 / self.F_S


@dataclass(frozen=True)
class RenyiFisherReport:
    alpha: float
    F_S_alpha: float
    C_v_alpha: float
    product_with_F_T: float


def _check_copies(n_copies: int) -> int:
    if int(n_copies) != n_copies or n_copies < 1:
        raise ModelError(f"n_copies must be a positive integer, got {n_copies!r}")
    return int(n_copies)


def _report(beta: float, var_h: float, c_v: float, n: int) -> FisherReport:
    t = 1.0 / beta
    return FisherReport(
        beta=beta,
        F_beta=var_h,
        F_T=c_v / (t * t),
        F_S=1.0 / c_v,
        product_FS_FT=(1.0 / c_v) * (c_v / (t * t)),
        cr_var_S=c_v / n,
        cr_var_T=t * t / (n * c_v),
        cr_product=t * t / (n * n),
        n_copies=n,
    )


def fisher_report(model: ThermalModel, beta: float, n_copies: int = 1) -> FisherReport:
    """All single-parameter Fisher quantities and Cramer-Rao bounds at ``beta``.

    Raises:
        DegenerateModelError: if C_v = 0, where F_S would be infinite.
    """
    n = _check_copies(n_copies)
    point = thermo_point(model, beta)
    if not point.C_v > 0:
        raise DegenerateModelError(
            f"heat capacity is zero at beta={point.beta!r} (single effective level); F_S undefined"
        )
    return _report(point.beta, point.var_H, point.C_v, n)


def classical_limit_report(f: int, T: float, n_copies: int = 1) -> FisherReport:
    """Equipartition values for ``f`` quadratic degrees of freedom: C_v = f / 2."""
    if int(f) != f or f < 1:
        raise ModelError(f"f must be a positive integer, got {f!r}")
    if not (math.isfinite(T) and T > 0):
        raise RangeError(f"T must be positive, got {T!r}")
    n = _check_copies(n_copies)
    report = _report(1.0 / T, f * T * T / 2.0, f / 2.0, n)
    # exact rational values rather than reciprocals of reciprocals
    return FisherReport(
        beta=report.beta,
        F_beta=report.F_beta,
        F_T=f / (2.0 * T * T),
        F_S=2.0 / f,
        product_FS_FT=report.product_FS_FT,
        cr_var_S=report.cr_var_S,
        cr_var_T=report.cr_var_T,
        cr_product=report.cr_product,
        n_copies=n,
    )


def _crossing_gap(tau: float) -> float:
    # C_v(T) - T in units of the oscillator quantum
    return float(Oscillator(1.0).heat_capacity(1.0 / tau)) - tau


def oscillator_crossings(omega: float) -> tuple[float, float]:
    """Temperatures where F_S = F_T for an oscillator, i.e. C_v(T) = T / omega.

    F_T carries units of 1/energy^2, so the comparison is made in units of the
    oscillator quantum; the roots are found once in reduced temperature and
    scaled by ``omega``.
    """
    if not (math.isfinite(omega) and omega > 0):
        raise ModelError(f"omega must be positive, got {omega!r}")
    grid = np.geomspace(1e-2, 1e2, 401)
    values = [_crossing_gap(t) for t in grid]
    roots = []
    for lo, hi, f_lo, f_hi in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if f_lo == 0.0:
            roots.append(float(lo))
        elif f_lo * f_hi < 0:
            roots.append(_bisect(_crossing_gap, float(lo), float(hi), f_lo))
    if len(roots) != 2:
        raise ConvergenceError(f"expected two crossings, found {len(roots)}")
    return roots[0] * omega, roots[1] * omega


def _bisect(fn, lo: float, hi: float, f_lo: float, xtol: float = 1e-12) -> float:
    for _ in range(200):
        if hi - lo <= xtol * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    else:
        raise ConvergenceError("bisection did not converge")
    # one secant polish step, kept only if it stays inside the bracket
    f_hi = fn(hi)
    if f_hi != f_lo:
        x = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        if lo <= x <= hi and abs(fn(x)) <= min(abs(f_lo), abs(f_hi)):
            return x
    return lo if abs(f_lo) <= abs(f_hi) else hi


def renyi_fisher(model: ThermalModel, beta: float, alpha: float) -> RenyiFisherReport:
    """Fisher information for the Renyi entropy S_alpha and its product with F_T."""
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 0):
        raise RangeError(f"Renyi order must be positive, got {alpha!r}")
    here = thermo_point(model, beta)
    if not here.C_v > 0:
        raise DegenerateModelError(f"heat capacity is zero at beta={here.beta!r}; F_S undefined")
    f_t = here.C_v * here.beta**2
    if abs(alpha - 1.0) < RENYI_UNIT_TOL:
        f_s = 1.0 / here.C_v
    else:
        there = model.reduced_moments(alpha * here.beta)
        d_u = float(there.excitation) - float(model.reduced_moments(here.beta).excitation)
        if d_u == 0.0:
            raise DegenerateModelError(f"U(alpha beta) = U(beta) at alpha={alpha!r}")
        f_s = (alpha - 1.0) ** 2 * here.var_H / (alpha**2 * d_u**2)
    return RenyiFisherReport(
        alpha=alpha, F_S_alpha=f_s, C_v_alpha=1.0 / f_s, product_with_F_T=f_s * f_t
    )


def quantum_correction_check(omegas: Sequence[float], beta: float) -> tuple[float, float]:
    """Exact oscillator-bank F_S against its leading high-temperature expansion.

    Each mode counts as two quadratic degrees of freedom (f = 2 * len(omegas)),
    which makes the single-mode expansion F_S = 1 + (beta omega)^2 / 12 and the
    bank expansion (2/f)(1 + sum (beta omega_i)^2 / (6 f)) agree.
    """
    omegas = [float(w) for w in omegas]
    if not omegas or any(not w > 0 for w in omegas):
        raise ModelError(f"frequencies must be positive, got {omegas!r}")
    c_v = math.fsum(float(Oscillator(w).heat_capacity(beta)) for w in omegas)
    f = 2 * len(omegas)
    series = (2.0 / f) * (1.0 + math.fsum((beta * w) ** 2 for w in omegas) / (6.0 * f))
    return 1.0 / c_v, series
