"""Multiparameter Gibbs families with commuting charges.

Covers the generalised Gibbs ensemble (GGE), the grand canonical ensemble as
its two-charge case, and single conjugate pairs such as (-P, V) and (mu, N).
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateModelError, ModelError, RangeError


@dataclass(frozen=True)
class JointEnsemble:
    """Microstates with a charge vector each, plus the Lagrange multipliers.

    ``charges`` has shape (n_states, m) and ``degeneracies`` shape (n_states,).
    """

    charges: np.ndarray
    degeneracies: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self) -> None:
        charges = np.asarray(self.charges, dtype=float)
        if charges.ndim == 1:
            charges = charges[:, None]
        if charges.ndim != 2 or charges.shape[0] == 0 or charges.shape[1] == 0:
            raise ModelError("need at least one state and one charge")
        g = np.asarray(self.degeneracies, dtype=float).reshape(-1)
        lam = np.asarray(self.lambdas, dtype=float).reshape(-1)
        if g.shape[0] != charges.shape[0]:
            raise ModelError("one degeneracy per state required")
        if np.any(g < 1) or np.any(g != np.round(g)):
            raise ModelError("degeneracies must be positive integers")
        if lam.shape[0] != charges.shape[1]:
            raise ModelError(f"expected {charges.shape[1]} multipliers, got {lam.shape[0]}")
        if not (np.all(np.isfinite(charges)) and np.all(np.isfinite(lam))):
            raise ModelError("charges and multipliers must be finite")
        object.__setattr__(self, "charges", charges)
        object.__setattr__(self, "degeneracies", g)
        object.__setattr__(self, "lambdas", lam)

    @property
    def m(self) -> int:
        return self.charges.shape[1]

    def with_lambdas(self, lambdas) -> JointEnsemble:
        return JointEnsemble(self.charges, self.degeneracies, np.asarray(lambdas, dtype=float))

    def log_weights(self) -> np.ndarray:
        return np.log(self.degeneracies) - self.charges @ self.lambdas

    def ln_Z(self) -> float:
        value = float(logsumexp(self.log_weights()))
        if not math.isfinite(value):
            raise RangeError("partition sum is not finite for these multipliers")
        return value

    def probabilities(self) -> np.ndarray:
        lw = self.log_weights()
        return np.exp(lw - logsumexp(lw))

    def entropy(self) -> float:
        """S = sum_k lambda_k <I_k> + ln Z."""
        mean = self.probabilities() @ self.charges
        return float(self.lambdas @ mean) + self.ln_Z()


@dataclass(frozen=True)
class GgeReport:
    fisher_matrix: np.ndarray
    entropy_gradient: np.ndarray
    F_S: float
    C_v_eff: float


@dataclass(frozen=True)
class GceReport:
    F_beta_beta: float
    F_mu_mu: float
    F_beta_mu: float
    F_S_gce: float
    C_v_mu: float
    C_v_fixed_N: float | None

    @property
    def fisher_matrix(self) -> np.ndarray:
        return np.array([[self.F_beta_beta, self.F_beta_mu], [self.F_beta_mu, self.F_mu_mu]])


@dataclass(frozen=True)
class ConjugatePairReport:
    F_lambda: float
    F_A: float
    product: float
    beta: float

    def bound_for_n(self, n: int) -> float:
        """Lower bound T^2 / n^2 on the product of the two estimator variances."""
        if n < 1:
            raise ModelError(f"n must be positive, got {n!r}")
        return 1.0 / (self.beta * n) ** 2


def _covariance(values: np.ndarray, p: np.ndarray) -> np.ndarray:
    centred = values - p @ values
    return (centred * p[:, None]).T @ centred


def gge_report(ensemble: JointEnsemble) -> GgeReport:
    """Charge covariance matrix and the entropy Fisher information 1 / (lambda^T F lambda)."""
    p = ensemble.probabilities()
    fisher = _covariance(ensemble.charges, p)
    fisher = 0.5 * (fisher + fisher.T)
    lam = ensemble.lambdas
    # lambda^T F lambda is the variance of lambda . I; computed directly for accuracy
    combo = ensemble.charges @ lam
    c_eff = float(p @ (combo - p @ combo) ** 2)
    if not c_eff > _variance_floor(combo):
        raise DegenerateModelError("lambda^T F lambda vanishes; entropy is not identifiable")
    return GgeReport(fisher_matrix=fisher, entropy_gradient=-fisher @ lam, F_S=1.0 / c_eff, C_v_eff=c_eff)


def _variance_floor(x: np.ndarray) -> float:
    # rounding in the weighted mean leaves an ~eps^2 residue when x is constant
    return (64 * np.finfo(float).eps * float(np.max(np.abs(x)))) ** 2


def _state_columns(states: Sequence[Any], second: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    e, x, g = [], [], []
    for s in states:
        if isinstance(s, Mapping):
            e.append(float(s["E"] if "E" in s else s["e"]))
            x.append(float(s[second] if second in s else s[second.lower()]))
            g.append(int(s.get("degeneracy", s.get("g", 1))))
        else:
            e.append(float(s[0]))
            x.append(float(s[1]))
            g.append(int(s[2]) if len(s) > 2 else 1)
    if not e:
        raise ModelError("need at least one state")
    return np.array(e), np.array(x), np.array(g, dtype=float)


def _check_beta(beta: float) -> float:
    if not (math.isfinite(beta) and beta > 0):
        raise RangeError(f"beta must be positive, got {beta!r}")
    return float(beta)


def gce_report(states: Sequence[Any], beta: float, mu: float) -> GceReport:
    """Grand canonical Fisher matrix in (beta, mu) and the derived heat capacities.

    ``states`` are ``{"E", "N", "degeneracy"}`` mappings or ``(E, N, g)`` tuples.
    The ensemble is built with natural parameters (beta, -beta mu) on charges (E, N).
    """
    beta = _check_beta(beta)
    e, n, g = _state_columns(states, "N")
    ens = JointEnsemble(np.column_stack([e, n]), g, np.array([beta, -beta * mu]))
    p = ens.probabilities()
    cov = _covariance(ens.charges, p)
    var_h, cov_hn, var_n = cov[0, 0], cov[0, 1], cov[1, 1]
    k = e - mu * n
    centred = k - p @ k
    var_k = float(p @ centred**2)
    cov_kn = float(p @ (centred * (n - p @ n)))
    if not var_k > _variance_floor(k):
        raise DegenerateModelError("Var(H - mu N) vanishes; entropy is not identifiable")
    c_mu = beta**2 * var_k
    if not var_n > _variance_floor(n):
        var_n = 0.0
    c_fixed = beta**2 * (var_h - cov_hn**2 / var_n) if var_n > 0 else None
    return GceReport(
        F_beta_beta=var_k,
        F_mu_mu=beta**2 * float(var_n),
        F_beta_mu=-beta * cov_kn,
        F_S_gce=1.0 / c_mu,
        C_v_mu=c_mu,
        C_v_fixed_N=c_fixed,
    )


def conjugate_pair_report(states: Sequence[Any], beta: float, lam: float) -> ConjugatePairReport:
    """Fisher information for an intensive field and its conjugate extensive observable A.

    The family is p proportional to g exp(-beta E - beta lam A).  The field
    couples through beta A, so F_lambda = beta^2 Var(A), and reparametrising
    by <A> gives F_A = 1 / Var(A).
    """
    beta = _check_beta(beta)
    e, a, g = _state_columns(states, "A")
    ens = JointEnsemble(np.column_stack([e, a]), g, np.array([beta, beta * lam]))
    p = ens.probabilities()
    var_a = float(p @ (a - p @ a) ** 2)
    if not var_a > _variance_floor(a):
        raise DegenerateModelError("Var(A) vanishes; the conjugate pair carries no information")
    return ConjugatePairReport(
        F_lambda=beta**2 * var_a, F_A=1.0 / var_a, product=beta**2, beta=beta
    )


def ensemble_from_json(doc: Mapping[str, Any]) -> JointEnsemble:
    """Parse ``{"lambdas": [...], "states": [{"charges": [...], "g": 1}, ...]}``."""
    try:
        states = doc["states"]
        charges = [[float(c) for c in s["charges"]] for s in states]
        g = [int(s.get("g", 1)) for s in states]
        return JointEnsemble(np.array(charges, dtype=float), np.array(g), np.array(doc["lambdas"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"malformed ensemble description: {exc}") from exc
