"""Thermal models: finite degenerate spectra and closed-form families.

Every model reports its thermodynamics through :meth:`ThermalModel.reduced_moments`,
which works relative to the ground-state energy so that partition sums never
overflow.  Units: k_B = 1 and hbar is absorbed into the oscillator frequency.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from functools import cached_property
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ModelError, RangeError


@dataclass(frozen=True)
class EnergyLevel:
    energy: float
    degeneracy: int = 1

    def __post_init__(self) -> None:
        if not math.isfinite(self.energy):
            raise ModelError(f"energy must be finite, got {self.energy!r}")
        if int(self.degeneracy) != self.degeneracy or self.degeneracy < 1:
            raise ModelError(f"degeneracy must be a positive integer, got {self.degeneracy!r}")


@dataclass(frozen=True)
class ReducedMoments:
    """Moments of H measured from the ground energy.

    ``ln_z_shifted`` is ln Z + beta * ground, ``excitation`` is U - ground.
    """

    ground: float
    ln_z_shifted: np.ndarray
    excitation: np.ndarray
    variance: np.ndarray


def _as_beta(beta) -> np.ndarray:
    b = np.asarray(beta, dtype=float)
    if np.any(~np.isfinite(b)) or np.any(b <= 0):
        raise RangeError(f"beta must be finite and positive, got {beta!r}")
    return b


class ThermalModel(ABC):
    """Source of ln Z(beta) and its first two derivatives."""

    #: True when the model is an explicit finite list of levels.
    finite: bool = False

    @abstractmethod
    def reduced_moments(self, beta) -> ReducedMoments:
        """Vectorised (ln Z, <H>, Var H) relative to the ground energy."""

    def heat_capacity(self, beta) -> np.ndarray:
        b = _as_beta(beta)
        return b * b * self.reduced_moments(b).variance

    @property
    def energy_scale(self) -> float:
        """Characteristic energy used for solver brackets and tolerances."""
        return 1.0


def _spectrum_moments(energies: np.ndarray, degeneracies: np.ndarray, beta: np.ndarray) -> ReducedMoments:
    b = np.atleast_1d(beta)
    e0 = float(energies[0])
    eps = energies - e0
    w = degeneracies[None, :] * np.exp(-b[:, None] * eps[None, :])
    g0 = degeneracies[0]
    rest = w[:, 1:].sum(axis=1)
    total = g0 + rest
    ln_z = math.log(g0) + np.log1p(rest / g0)
    p = w / total[:, None]
    mean = p @ eps
    var = np.einsum("ij,ij->i", p, (eps[None, :] - mean[:, None]) ** 2)
    shape = np.shape(beta)
    return ReducedMoments(e0, ln_z.reshape(shape), mean.reshape(shape), var.reshape(shape))


@dataclass(frozen=True)
class FiniteSpectrum(ThermalModel):
    """Explicit spectrum; levels are sorted and equal energies merged on construction."""

    levels: tuple[EnergyLevel, ...]
    finite = True

    def __post_init__(self) -> None:
        levels = tuple(self.levels)
        if not levels:
            raise ModelError("spectrum must contain at least one level")
        merged: dict[float, int] = {}
        for lev in levels:
            if not isinstance(lev, EnergyLevel):
                lev = EnergyLevel(*lev)
            merged[lev.energy] = merged.get(lev.energy, 0) + int(lev.degeneracy)
        object.__setattr__(
            self, "levels", tuple(EnergyLevel(e, g) for e, g in sorted(merged.items()))
        )

    @cached_property
    def energies(self) -> np.ndarray:
        return np.array([lev.energy for lev in self.levels])

    @cached_property
    def degeneracies(self) -> np.ndarray:
        return np.array([lev.degeneracy for lev in self.levels], dtype=float)

    @property
    def total_degeneracy(self) -> int:
        return sum(lev.degeneracy for lev in self.levels)

    @property
    def energy_scale(self) -> float:
        span = self.levels[-1].energy - self.levels[0].energy
        return span if span > 0 else 1.0

    def infinite_temperature_energy(self) -> float:
        """Degeneracy-weighted mean energy, the beta -> 0 limit of U."""
        g = self.degeneracies
        return float(self.energies @ g / g.sum())

    def shifted(self, c: float) -> FiniteSpectrum:
        return FiniteSpectrum(tuple(EnergyLevel(lev.energy + c, lev.degeneracy) for lev in self.levels))

    def as_spectrum(self) -> FiniteSpectrum:
        return self

    def reduced_moments(self, beta) -> ReducedMoments:
        return _spectrum_moments(self.energies, self.degeneracies, _as_beta(beta))


@dataclass(frozen=True)
class TwoLevel(ThermalModel):
    gap: float
    finite = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gap) and self.gap > 0):
            raise ModelError(f"gap must be positive, got {self.gap!r}")

    @cached_property
    def _spectrum(self) -> FiniteSpectrum:
        return FiniteSpectrum((EnergyLevel(0.0, 1), EnergyLevel(self.gap, 1)))

    def as_spectrum(self) -> FiniteSpectrum:
        return self._spectrum

    @property
    def levels(self) -> tuple[EnergyLevel, ...]:
        return self.as_spectrum().levels

    @property
    def energy_scale(self) -> float:
        return self.gap

    def reduced_moments(self, beta) -> ReducedMoments:
        return self.as_spectrum().reduced_moments(beta)


def _oscillator_parts(omega: float, b: np.ndarray):
    x = b * omega
    ln_z = -np.log(-np.expm1(-x))
    with np.errstate(over="ignore"):
        excitation = omega / np.expm1(x)
        var = (omega / (2.0 * np.sinh(0.5 * x))) ** 2
    return ln_z, excitation, var


@dataclass(frozen=True)
class Oscillator(ThermalModel):
    """Harmonic oscillator with levels (n + 1/2) omega, zero-point energy kept."""

    omega: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ModelError(f"omega must be positive, got {self.omega!r}")

    @property
    def energy_scale(self) -> float:
        return self.omega

    def reduced_moments(self, beta) -> ReducedMoments:
        b = _as_beta(beta)
        ln_z, exc, var = _oscillator_parts(self.omega, b)
        return ReducedMoments(0.5 * self.omega, ln_z, exc, var)

    def heat_capacity(self, beta) -> np.ndarray:
        x = _as_beta(beta) * self.omega
        with np.errstate(over="ignore"):
            return (x / (2.0 * np.sinh(0.5 * x))) ** 2


@dataclass(frozen=True)
class OscillatorBank(ThermalModel):
    """Independent oscillators; each mode counts as two quadratic degrees of freedom."""

    omegas: tuple[float, ...]

    def __post_init__(self) -> None:
        omegas = tuple(float(w) for w in self.omegas)
        if not omegas:
            raise ModelError("oscillator bank needs at least one frequency")
        if any(not (math.isfinite(w) and w > 0) for w in omegas):
            raise ModelError(f"frequencies must be positive, got {omegas!r}")
        object.__setattr__(self, "omegas", omegas)

    @property
    def dof(self) -> int:
        return 2 * len(self.omegas)

    @property
    def energy_scale(self) -> float:
        return max(self.omegas)

    def reduced_moments(self, beta) -> ReducedMoments:
        b = _as_beta(beta)
        ln_z = np.zeros_like(b)
        exc = np.zeros_like(b)
        var = np.zeros_like(b)
        for w in self.omegas:
            lz, e, v = _oscillator_parts(w, b)
            ln_z = ln_z + lz
            exc = exc + e
            var = var + v
        return ReducedMoments(0.5 * sum(self.omegas), ln_z, exc, var)

    def heat_capacity(self, beta) -> np.ndarray:
        b = _as_beta(beta)
        return sum(Oscillator(w).heat_capacity(b) for w in self.omegas)


@dataclass(frozen=True)
class ClassicalQuadratic(ThermalModel):
    """``dof`` classical quadratic degrees of freedom: ln Z = -(dof/2) ln beta.

    The additive phase-space constant in ln Z is set to zero, which fixes the
    entropy origin but leaves every Fisher quantity untouched.
    """

    dof: int

    def __post_init__(self) -> None:
        if int(self.dof) != self.dof or self.dof < 1:
            raise ModelError(f"dof must be a positive integer, got {self.dof!r}")

    def reduced_moments(self, beta) -> ReducedMoments:
        b = _as_beta(beta)
        half = 0.5 * self.dof
        return ReducedMoments(0.0, -half * np.log(b), half / b, half / (b * b))

    def heat_capacity(self, beta) -> np.ndarray:
        return np.full(np.shape(_as_beta(beta)), 0.5 * self.dof)


@dataclass(frozen=True)
class DiatomicStaircase(ThermalModel):
    """Three translations plus rotor and vibration modes with smooth activation.

    The rotor and the vibration are each represented by an oscillator whose
    quantum equals its activation temperature, so C_v climbs 3/2 -> 5/2 -> 7/2.
    """

    t_rot: float
    t_vib: float

    def __post_init__(self) -> None:
        if not (0 < self.t_rot < self.t_vib and math.isfinite(self.t_vib)):
            raise ModelError(f"need 0 < t_rot < t_vib, got {self.t_rot!r}, {self.t_vib!r}")

    @property
    def energy_scale(self) -> float:
        return self.t_vib

    def _parts(self) -> tuple[ThermalModel, ...]:
        return (ClassicalQuadratic(3), Oscillator(self.t_rot), Oscillator(self.t_vib))

    def reduced_moments(self, beta) -> ReducedMoments:
        b = _as_beta(beta)
        parts = [m.reduced_moments(b) for m in self._parts()]
        return ReducedMoments(
            sum(p.ground for p in parts),
            sum(p.ln_z_shifted for p in parts),
            sum(p.excitation for p in parts),
            sum(p.variance for p in parts),
        )

    def heat_capacity(self, beta) -> np.ndarray:
        b = _as_beta(beta)
        return sum(m.heat_capacity(b) for m in self._parts())


def truncate_oscillator(omega: float, beta_min: float, eps: float = 1e-12) -> FiniteSpectrum:
    """Finite spectrum {(n + 1/2) omega : n = 0..N} with tail weight below eps * Z for beta >= beta_min.

    The dropped tail is a geometric series whose ratio to Z is exp(-beta (N+1) omega).
    """
    if not (math.isfinite(omega) and omega > 0):
        raise ModelError(f"omega must be positive, got {omega!r}")
    if not (math.isfinite(beta_min) and beta_min > 0):
        raise RangeError("cannot truncate an unbounded spectrum at infinite temperature (beta_min <= 0)")
    if not 0 < eps < 1:
        raise ModelError(f"eps must lie in (0, 1), got {eps!r}")
    n_max = math.ceil(-math.log(eps) / (beta_min * omega)) + 1
    return FiniteSpectrum(tuple(EnergyLevel((n + 0.5) * omega, 1) for n in range(n_max + 1)))


def _levels_from(items: Iterable[Any]) -> tuple[EnergyLevel, ...]:
    out = []
    for item in items:
        if isinstance(item, EnergyLevel):
            out.append(item)
        elif isinstance(item, Mapping):
            out.append(EnergyLevel(float(item["e"]), int(item.get("g", 1))))
        else:
            e, g = item
            out.append(EnergyLevel(float(e), int(g)))
    return tuple(out)


def build_model(spec: Mapping[str, Any]) -> ThermalModel:
    """Build a validated model from its JSON description.

    Accepted shapes mirror the model file format, e.g. ``{"model": "two-level",
    "gap": 1.0}`` or ``{"model": "spectrum", "levels": [{"e": 0.0, "g": 1}]}``.
    """
    try:
        kind = spec["model"]
        if kind == "two-level":
            return TwoLevel(float(spec.get("gap", 1.0)))
        if kind == "oscillator":
            return Oscillator(float(spec.get("omega", 1.0)))
        if kind == "oscillator-bank":
            return OscillatorBank(tuple(float(w) for w in spec["omegas"]))
        if kind == "classical":
            dof = spec["dof"]
            if isinstance(dof, float) and not dof.is_integer():
                raise ModelError(f"dof must be an integer, got {dof!r}")
            return ClassicalQuadratic(int(dof))
        if kind == "diatomic":
            return DiatomicStaircase(float(spec["t_rot"]), float(spec["t_vib"]))
        if kind == "spectrum":
            return FiniteSpectrum(_levels_from(spec["levels"]))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model description: {exc}") from exc
    raise ModelError(f"unknown model kind {spec.get('model')!r}")


def distinct_levels(model: ThermalModel) -> int | None:
    """Number of distinct energies for finite models, ``None`` for unbounded ones."""
    if not model.finite:
        return None
    return len(model.as_spectrum().levels)


__all__ = [
    "EnergyLevel",
    "ReducedMoments",
    "ThermalModel",
    "FiniteSpectrum",
    "TwoLevel",
    "Oscillator",
    "OscillatorBank",
    "ClassicalQuadratic",
    "DiatomicStaircase",
    "truncate_oscillator",
    "build_model",
    "distinct_levels",
]
