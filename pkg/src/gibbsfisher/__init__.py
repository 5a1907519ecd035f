"""Fisher information for entropy and temperature estimation in Gibbs states."""

from .criticality import T_C, Backend, IsingLattice, fss_fit, ising_ln_Z, ising_thermo, scaling_series
from .ensembles import JointEnsemble, conjugate_pair_report, gce_report, gge_report
from .errors import ConvergenceError, DegenerateModelError, GibbsFisherError, ModelError, RangeError
from .estimation import SimConfig, TrialStatistics, invert_mean_energy, run_trials, sample_energies
from .fisher import (
    FisherReport,
    RenyiFisherReport,
    classical_limit_report,
    fisher_report,
    oscillator_crossings,
    quantum_correction_check,
    renyi_fisher,
)
from .spectra import (
    ClassicalQuadratic,
    DiatomicStaircase,
    EnergyLevel,
    FiniteSpectrum,
    Oscillator,
    OscillatorBank,
    ThermalModel,
    TwoLevel,
    build_model,
    truncate_oscillator,
)
from .thermo import RenyiPoint, ThermoPoint, log_partition, renyi_point, thermo_length, thermo_point

__version__ = "0.1.0"
