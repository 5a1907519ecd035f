"""Exact finite-size 2D Ising thermodynamics and finite-size-scaling fits.

The lattice is an L x L torus with nearest-neighbour coupling J and energy
E = -J sum_<ij> s_i s_j.  For L = 2 periodic wrapping doubles every bond.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, DegenerateModelError, ModelError, RangeError

BETA_C = 0.5 * math.log(1.0 + math.sqrt(2.0))
T_C = 1.0 / BETA_C

#: C_v below this is treated as zero when forming F_S.
CV_FLOOR = 1e-14


class Backend(str, enum.Enum):
    ENUMERATE = "enumerate"
    TRANSFER = "transfer"


_MAX_L = {Backend.ENUMERATE: 4, Backend.TRANSFER: 12}


@dataclass(frozen=True)
class IsingLattice:
    L: int
    backend: Backend = Backend.TRANSFER
    J: float = 1.0

    def __post_init__(self) -> None:
        backend = Backend(self.backend)
        object.__setattr__(self, "backend", backend)
        if int(self.L) != self.L or self.L < 2:
            raise ModelError(f"L must be an integer >= 2, got {self.L!r}")
        if self.L > _MAX_L[backend]:
            raise RangeError(f"L={self.L} exceeds the {backend.value} backend limit {_MAX_L[backend]}")

    @property
    def n_spins(self) -> int:
        return self.L * self.L


@lru_cache(maxsize=None)
def _bond_sum_histogram(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values of sum_<ij> s_i s_j over all 2^(L^2) configurations and their counts."""
    n = L * L
    codes = np.arange(1 << n, dtype=np.int64)
    spins = (((codes[:, None] >> np.arange(n)) & 1) * 2 - 1).astype(np.int8).reshape(-1, L, L)
    bonds = (spins * np.roll(spins, 1, axis=1)).sum(axis=(1, 2), dtype=np.int64)
    bonds += (spins * np.roll(spins, 1, axis=2)).sum(axis=(1, 2), dtype=np.int64)
    values, counts = np.unique(bonds, return_counts=True)
    return values.astype(float), counts.astype(float)


@lru_cache(maxsize=None)
def _row_tables(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Intra-row bond sums and row-to-row bond sums for the 2^L row states."""
    rows = np.arange(1 << L)
    spins = ((rows[:, None] >> np.arange(L)) & 1) * 2 - 1
    intra = (spins * np.roll(spins, 1, axis=1)).sum(axis=1).astype(float)
    inter = (spins @ spins.T).astype(float)
    return intra, inter


def _ln_z_enumerate(L: int, coupling: float) -> float:
    values, counts = _bond_sum_histogram(L)
    return float(logsumexp(coupling * values, b=counts))


def _ln_z_transfer(L: int, coupling: float) -> float:
    intra, inter = _row_tables(L)
    # symmetric transfer matrix exp(K (h(s)/2 + h(s')/2 + s.s')) scaled by its largest entry
    expo = coupling * (0.5 * intra[:, None] + 0.5 * intra[None, :] + inter)
    shift = float(expo.max())
    t = np.exp(expo - shift)
    half = 1 << (L - 1)
    # global spin flip maps row index s to (2^L - 1) - s, splitting T into two blocks
    top = t[:half, :half]
    cross = t[:half, half:][:, ::-1]
    log_traces = []
    for block in (top + cross, top - cross):
        eig = np.linalg.eigvalsh(block)
        mags = np.abs(eig)
        nz = mags > 0
        signs = np.sign(eig[nz]) ** L
        log_traces.append((L * np.log(mags[nz]), signs))
    logs = np.concatenate([lt[0] for lt in log_traces])
    signs = np.concatenate([lt[1] for lt in log_traces])
    total, sign = logsumexp(logs, b=signs, return_sign=True)
    if sign <= 0:
        raise RangeError("transfer-matrix trace lost positivity to rounding")
    return L * shift + float(total)


def ising_ln_Z(lattice: IsingLattice, beta: float) -> float:
    """Exact ln Z of the periodic L x L Ising model."""
    if not (math.isfinite(beta) and beta > 0):
        raise RangeError(f"beta must be positive, got {beta!r}")
    coupling = beta * lattice.J
    if lattice.backend is Backend.ENUMERATE:
        return _ln_z_enumerate(lattice.L, coupling)
    return _ln_z_transfer(lattice.L, coupling)


@dataclass(frozen=True)
class IsingThermo:
    L: int
    T: float
    C_v_total: float
    C_v_per_spin: float
    F_S: float

    @property
    def t(self) -> float:
        return (self.T - T_C) / T_C


def _second_derivative(fn, x: float, h: float, rtol: float) -> float:
    """Central second difference with two Richardson levels (steps h, h/2, h/4)."""
    f0 = fn(x)
    cache = {}

    def d2(step: float) -> float:
        if step not in cache:
            cache[step] = (fn(x + step) - 2.0 * f0 + fn(x - step)) / (step * step)
        return cache[step]

    r1 = (4.0 * d2(h / 2) - d2(h)) / 3.0
    r2 = (4.0 * d2(h / 4) - d2(h / 2)) / 3.0
    if abs(r1 - r2) > rtol * max(abs(r2), 1e-300):
        raise ConvergenceError(
            f"unstable second derivative: Richardson levels {r1!r} and {r2!r} disagree"
        )
    return (16.0 * r2 - r1) / 15.0


def ising_thermo(
    lattice: IsingLattice, T: float, step: float = 4e-3, rtol: float = 1e-6
) -> IsingThermo:
    """Heat capacity beta^2 d^2 ln Z / dbeta^2 and F_S = 1 / C_v at temperature T.

    ``step`` is the coarsest beta step of the Richardson table, relative to beta.

    Raises:
        DegenerateModelError: if C_v falls below ``CV_FLOOR`` (F_S would diverge).
        ConvergenceError: if the Richardson levels disagree beyond ``rtol``.
    """
    if not (math.isfinite(T) and T > 0):
        raise RangeError(f"T must be positive, got {T!r}")
    beta = 1.0 / T
    h = step * beta
    if h >= beta:
        raise RangeError("difference step must be smaller than beta")
    # Popoviciu: Var(E) <= (E_max - E_min)^2 / 4 with |E| <= 2 L^2 |J|
    if beta * beta * (2.0 * lattice.n_spins * abs(lattice.J)) ** 2 <= CV_FLOOR:
        raise DegenerateModelError(f"C_v below {CV_FLOOR} at T={T!r}; F_S diverges")
    var_e = _second_derivative(lambda b: ising_ln_Z(lattice, b), beta, h, rtol)
    c_total = beta * beta * var_e
    if not c_total > CV_FLOOR:
        raise DegenerateModelError(f"C_v={c_total!r} below {CV_FLOOR}; F_S diverges at T={T!r}")
    return IsingThermo(lattice.L, float(T), c_total, c_total / lattice.n_spins, 1.0 / c_total)


@dataclass(frozen=True)
class ScalingSeries:
    entries: tuple[IsingThermo, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))


def scaling_series(
    sizes, T: float = T_C, backend: Backend | str = Backend.TRANSFER
) -> ScalingSeries:
    return ScalingSeries(tuple(ising_thermo(IsingLattice(L, backend), T) for L in sizes))


class FitMode(str, enum.Enum):
    POWER_LAW = "powerlaw"
    LOGARITHMIC = "logarithmic"


@dataclass(frozen=True)
class FitResult:
    mode: FitMode
    slope_or_amplitude: float
    intercept: float
    r_squared: float


def fss_fit(series: ScalingSeries, mode: FitMode | str = FitMode.LOGARITHMIC) -> FitResult:
    """Least-squares finite-size-scaling fit at a common temperature.

    ``powerlaw`` fits ln F_S against ln L (slope estimates -alpha/nu);
    ``logarithmic`` fits C_v per spin against ln L, the alpha = 0 case.
    """
    mode = FitMode(mode)
    entries = series.entries
    if len(entries) < 3:
        raise ModelError(f"need at least 3 sizes, got {len(entries)}")
    if len({e.T for e in entries}) != 1:
        raise ModelError("all entries must share one temperature")
    x = np.log([float(e.L) for e in entries])
    if np.ptp(x) == 0:
        raise ModelError("singular fit: all system sizes are equal")
    if mode is FitMode.POWER_LAW:
        y = np.log([e.F_S for e in entries])
    else:
        y = np.array([e.C_v_per_spin for e in entries])
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return FitResult(mode, float(slope), float(intercept), r2)
