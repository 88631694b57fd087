"""Discrete-time simulation of a differential-phase-shift QKD optical path.

The package models the full chain from laser rate equations through
modulators, fiber, a delay-line interferometer and avalanche detectors
to sifting and error-rate accounting, with a YAML-configured CLI for
seeded, reproducible runs and parameter sweeps.
"""
from .analysis import (Spectrum, optical_qber_from_visibility, power_meter,
                       pulse_fwhm, spectrum, visibility)
from .config import (ConfigError, RunConfig, RunSettings, SweepSpec,
                     apply_overrides, config_sha256, default_config_yaml,
                     expand_sweep, load_config, parse_config)
from .fiber import (FiberParams, FiberStream, PropagationError, linear_step,
                    nonlinear_step, propagate, suggested_guard)
from .field import (OpticalField, PulseWindowing, RandomStream, attenuate,
                    mean_photon_number, power_trace, pulse_energies,
                    pulse_energy)
from .laser import (ContinuousWaveSource, LaserError, LaserParams, integrate,
                    power_from_photon_density, rate_derivatives, steady_state,
                    synthesize_field, threshold_current)
from .modulators import (IMParams, PMParams, PolarizerParams, VOAParams,
                         im_general, im_operating_points, im_pushpull,
                         phase_modulate, polarize, synthesize_rf_drive,
                         voa_apply, voa_solve_attenuation)
from .protocol import (AliceTransmitter, EncodingRecord, ProtocolMetrics,
                       RunResult, SiftedKey, alice_prepare, binary_entropy,
                       differential_bits, estimate_qber, run_protocol, sift)
from .receiver import (CAUSE_AFTERPULSE, CAUSE_DARK, CAUSE_PHOTON,
                       DelayLineInterferometer, DetectionEvent, DLIParams,
                       SPADParams, SpadDetector, beam_splitter, dli_transform,
                       spad_click_probability, spad_detect)

__version__ = "0.1.0"
