"""Simulated heterodyne detection with finite quantum efficiency.

Build a state (:mod:`heterodyne.states`), draw detector outcomes
(:mod:`heterodyne.detector`), and estimate photon statistics, quadrature
fluctuations, phase distributions and density-matrix elements with
confidence intervals (:mod:`heterodyne.estimators`,
:mod:`heterodyne.reconstruction`).  :mod:`heterodyne.models` wraps the same
estimators in a scikit-learn style API and :mod:`heterodyne.cli` runs
configured experiments from the command line.
"""

__version__ = "0.1.0"

from .detector import (CountSampleSet, DetectorConfig, HeterodyneSampleSet, make_rng,
                       sample_direct, sample_heterodyne)
from .errors import (ConfigError, CutoffTooLarge, DegreeOutOfRange, EmptySample, EnvelopeFailure,
                     HeterodyneError, IndexBeyondTruncation, IndexOutOfRange, InvalidSpec,
                     PhaseOutOfDomain, TooFewSamples, TruncationTooSmall)
from .estimators import (CIMethod, EstimateWithCI, PhaseHistogram, block_confidence,
                         connect_orderings, estimate_generic, estimate_mean_photon,
                         estimate_normal_moment, estimate_photon_fluctuations,
                         estimate_photon_second_moment, estimate_quadrature,
                         estimate_shift_operator, laguerre, phase_histogram,
                         shift_operator_domain)
from .reconstruction import CutoffChoice, ReconstructionResult, choose_cutoff, reconstruct
from .states import (Coherent, DensityMatrix, Mixture, Number, SqueezedCoherent, StateSpec,
                     Superposition, build_state, canonical_phase_distribution, exact_moment,
                     exact_quadrature_stats, q_function, squeezed_vacuum)

__all__ = [
    "CIMethod", "Coherent", "ConfigError", "CountSampleSet", "CutoffChoice", "CutoffTooLarge",
    "DegreeOutOfRange", "DensityMatrix", "DetectorConfig", "EmptySample", "EnvelopeFailure",
    "EstimateWithCI", "HeterodyneError", "HeterodyneSampleSet", "IndexBeyondTruncation",
    "IndexOutOfRange", "InvalidSpec", "Mixture", "Number", "PhaseHistogram", "PhaseOutOfDomain",
    "ReconstructionResult", "SqueezedCoherent", "StateSpec", "Superposition", "TooFewSamples",
    "TruncationTooSmall", "block_confidence", "build_state", "canonical_phase_distribution",
    "choose_cutoff", "connect_orderings", "estimate_generic", "estimate_mean_photon",
    "estimate_normal_moment", "estimate_photon_fluctuations", "estimate_photon_second_moment",
    "estimate_quadrature", "estimate_shift_operator", "exact_moment", "exact_quadrature_stats",
    "laguerre", "make_rng", "phase_histogram", "q_function", "reconstruct", "sample_direct",
    "sample_heterodyne", "shift_operator_domain", "squeezed_vacuum",
]
