"""Equilibrium thermodynamics of a :class:`ThermalModel` at inverse temperature beta."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DegenerateModelError, RangeError
from .spectra import ThermalModel, distinct_levels

#: |alpha - 1| below this routes Renyi quantities to the von Neumann branch.
RENYI_UNIT_TOL = 1e-8


@dataclass(frozen=True)
class ThermoPoint:
    beta: float
    ln_Z: float
    U: float
    var_H: float
    C_v: float
    S: float
    T: float


@dataclass(frozen=True)
class RenyiPoint:
    alpha: float
    S_alpha: float
    dS_alpha_dbeta: float
    U_at_alpha_beta: float


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (math.isfinite(beta) and beta > 0):
        raise RangeError(f"beta must be finite and positive, got {beta!r}")
    return beta


def _finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise RangeError(f"{name} is not finite ({value!r}); beta outside the representable range")
    return value


def log_partition(model: ThermalModel, beta: float) -> float:
    beta = _check_beta(beta)
    m = model.reduced_moments(beta)
    return _finite("ln Z", float(m.ln_z_shifted) - beta * m.ground)


def thermo_point(model: ThermalModel, beta: float) -> ThermoPoint:
    beta = _check_beta(beta)
    m = model.reduced_moments(beta)
    ln_z_s = _finite("ln Z", float(m.ln_z_shifted))
    exc = float(m.excitation)
    var = float(m.variance)
    return ThermoPoint(
        beta=beta,
        ln_Z=_finite("ln Z", ln_z_s - beta * m.ground),
        U=m.ground + exc,
        var_H=var,
        C_v=float(model.heat_capacity(beta)),
        # ground-state terms cancel in S = beta U + ln Z
        S=beta * exc + ln_z_s,
        T=1.0 / beta,
    )


def entropy(model: ThermalModel, beta) -> np.ndarray:
    """Vectorised von Neumann entropy S(beta)."""
    m = model.reduced_moments(beta)
    return np.asarray(beta) * m.excitation + m.ln_z_shifted


def mean_energy(model: ThermalModel, beta) -> np.ndarray:
    """Vectorised mean energy U(beta)."""
    m = model.reduced_moments(beta)
    return m.ground + m.excitation


def renyi_point(model: ThermalModel, beta: float, alpha: float) -> RenyiPoint:
    """Renyi entropy S_alpha and its beta-derivative from Z(alpha beta) / Z(beta)^alpha."""
    beta = _check_beta(beta)
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 0):
        raise RangeError(f"Renyi order must be positive, got {alpha!r}")
    here = model.reduced_moments(beta)
    if abs(alpha - 1.0) < RENYI_UNIT_TOL:
        exc = float(here.excitation)
        return RenyiPoint(
            alpha=alpha,
            S_alpha=beta * exc + float(here.ln_z_shifted),
            dS_alpha_dbeta=-beta * float(here.variance),
            U_at_alpha_beta=here.ground + exc,
        )
    there = model.reduced_moments(alpha * beta)
    ln_z_ab = _finite("ln Z(alpha beta)", float(there.ln_z_shifted))
    ln_z_b = float(here.ln_z_shifted)
    # the ground energy cancels between the two log-partition terms
    s_alpha = (ln_z_ab - alpha * ln_z_b) / (1.0 - alpha)
    d_u = float(there.excitation) - float(here.excitation)
    return RenyiPoint(
        alpha=alpha,
        S_alpha=s_alpha,
        dS_alpha_dbeta=alpha / (alpha - 1.0) * d_u,
        U_at_alpha_beta=there.ground + float(there.excitation),
    )


def thermo_length(
    model: ThermalModel, beta_1: float, beta_2: float, quadrature_tol: float = 1e-10
) -> float:
    """Thermodynamic length in entropy coordinates between beta_1 and beta_2.

    Since dS = -(C_v / beta) dbeta, the length is the integral of sqrt(C_v) over
    ln beta, which is what the adaptive quadrature integrates.
    """
    beta_1 = _check_beta(beta_1)
    beta_2 = _check_beta(beta_2)
    if beta_1 > beta_2:
        raise RangeError(f"need beta_1 <= beta_2, got {beta_1!r} > {beta_2!r}")
    n_levels = distinct_levels(model)
    if n_levels is not None and n_levels < 2:
        raise DegenerateModelError("heat capacity vanishes identically for a single-level spectrum")
    if beta_1 == beta_2:
        return 0.0

    def integrand(u: float) -> float:
        c_v = float(model.heat_capacity(math.exp(u)))
        if not c_v > 0:
            raise DegenerateModelError(f"heat capacity vanishes at beta={math.exp(u)!r}")
        return math.sqrt(c_v)

    value, _ = integrate.quad(
        integrand, math.log(beta_1), math.log(beta_2), epsabs=quadrature_tol, epsrel=0.0, limit=500
    )
    return value
