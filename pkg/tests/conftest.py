"""Shared fixtures: noise-free configurations and synthetic fields."""
import math

import numpy as np

from dpssim import (DLIParams, FiberParams, IMParams, LaserParams,
                    OpticalField, PMParams, PolarizerParams, PulseWindowing,
                    RunConfig, RunSettings, SPADParams, VOAParams,
                    apply_overrides)

CARRIER = 299792458.0 / 1550e-9


def ideal_config(**overrides) -> RunConfig:
    """Every imperfection off: no loss, no noise, perfect extinction.

    Overrides use dotted keys, e.g. ideal_config(**{"run.n_pulses": 1000}).
    """
    cfg = RunConfig(
        run=RunSettings(n_pulses=10_000, seed=901),
        laser=LaserParams(linewidth=0.0, rin=float("-inf"), sigma_i=0.0),
        polarizer=PolarizerParams(insertion_loss=0.0, per=float("inf")),
        im=IMParams(insertion_loss=0.0, target_er=float("inf")),
        pm=PMParams(insertion_loss=0.0),
        voa=VOAParams(),
        fiber=FiberParams(length=0.0, dgd=0.0),
        dli=DLIParams(insertion_loss=0.0),
        spad=SPADParams(eta=1.0, p_dark=0.0, p0=0.0, a_coef=0.0,
                        deadtime=0.0, jitter_sigma=0.0, n_bg=0.0),
    )
    return apply_overrides(cfg, overrides) if overrides else cfg


def gaussian_field(sample_rate: float, n: int, width: float,
                   peak_power: float = 1.0,
                   carrier: float = CARRIER) -> OpticalField:
    """Single x-polarized Gaussian pulse centred in an n-sample window.

    ``width`` is the 1/e half width of the amplitude (T0).
    """
    t = (np.arange(n) - n / 2) / sample_rate
    env = math.sqrt(peak_power) * np.exp(-t ** 2 / (2.0 * width ** 2))
    return OpticalField(sample_rate, carrier, env.astype(complex),
                        np.zeros(n, dtype=complex))


def phase_train(phases, window: PulseWindowing, fwhm: float = 3.0e-10,
                peak_power: float = 1.0,
                carrier: float = CARRIER) -> OpticalField:
    """Carved pulse train, one Gaussian pulse per slot with the given phase."""
    phases = np.asarray(phases, dtype=float)
    s = window.samples_per_pulse
    fs = window.sample_rate
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    t = np.arange(phases.size * s) / fs
    centres = (np.repeat(np.arange(phases.size), s) + 0.5) * window.pulse_period
    env = np.sqrt(peak_power) * np.exp(
        -((t - centres) ** 2) / (4.0 * sigma ** 2))
    ex = env * np.exp(1j * np.repeat(phases, s))
    return OpticalField(fs, carrier, ex, np.zeros(ex.size, dtype=complex))
