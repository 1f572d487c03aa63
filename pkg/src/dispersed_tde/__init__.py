"""Time delay estimation for signals spread over several dispersed bands."""
from .bounds import (BoundInput, crlb, crlb_constant_envelope, variance_equal,
                     variance_optimal_combining, variance_selection)
from .channel import (Band, BandPlan, ChannelRealization, ReceivedSignal,
                      draw_rayleigh_channel, sigma_to_snr, snr_to_sigma, synthesize_received)
from .combining import BranchWeightInput, CombinerKind, DegenerateCombination, combine, kappa
from .estimators import BranchEstimate, Refine, SearchGrid, branch_ml, correlate, joint_ml
from .harness import (ExperimentConfig, RmseReport, snr_study_config, band_study_config, run_band_sweep,
                      run_snr_sweep, run_sweep, run_trial)
from .waveform import (PulseShape, PulseSpec, SampledSignal, TrainingSpec, cross_term,
                       derivative_energy, effective_bandwidth, energy, gaussian_doublet,
                       modulated_train)

__version__ = "0.1.0"
