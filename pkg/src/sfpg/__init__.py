"""Strong-field pair generation: single-atom correlations to biphoton optics."""

from ._version import __version__
from .config import RunConfig, load_config, load_preset
from .macroscopic import (DispersionModel, InteractionGeometry,
                          angular_yield, coherence_factor, emission_angle,
                          phase_mismatch)
from .model import (AtomModel, LaserPulse, PropagationSettings, SpatialGrid,
                    soft_core_potential)
from .pipeline import Pipeline, run_pipeline
from .quantum_state import (HomCurve, JointSpectralAmplitude, SchmidtReport,
                            build_jsa, heralded_pulse, hom_curve,
                            schmidt_decompose)
from .spectra import (CutoffReport, HhgSpectrum, PairSpectrum, cutoff_report,
                      hhg_spectrum, pair_amplitude, pair_spectrum)
from .tdse import (CorrelationMatrix, DipoleRecord, find_ground_state,
                   propagate, snap_dt, two_time_correlation)

__all__ = [
    "__version__",
    "AtomModel", "CorrelationMatrix", "CutoffReport", "DipoleRecord",
    "DispersionModel", "HhgSpectrum", "HomCurve", "InteractionGeometry",
    "JointSpectralAmplitude", "LaserPulse", "PairSpectrum", "Pipeline",
    "PropagationSettings", "RunConfig", "SchmidtReport", "SpatialGrid",
    "angular_yield", "build_jsa", "coherence_factor", "cutoff_report",
    "emission_angle", "find_ground_state", "heralded_pulse", "hhg_spectrum",
    "hom_curve", "load_config", "load_preset", "pair_amplitude",
    "pair_spectrum", "phase_mismatch", "propagate", "run_pipeline",
    "schmidt_decompose", "snap_dt", "soft_core_potential",
    "two_time_correlation",
]
