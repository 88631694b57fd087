"""Alice-side pulse shaping: polarizer, intensity and phase modulators, VOA.

The intensity modulator is a dual-drive Mach-Zehnder: the general transfer
is the mean of the two arm phasors, and the push-pull special case reduces
to a cosine of the drive voltage.  A drive-synthesis helper builds one
pulse period of RF that hits a requested extinction ratio exactly and a
requested optical FWHM on the sample grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import pulse_fwhm
from .field import OpticalField, PulseWindowing, attenuate, mean_photon_number, pulse_energies

__all__ = [
    "PolarizerParams",
    "IMParams",
    "PMParams",
    "VOAParams",
    "polarize",
    "im_general",
    "im_pushpull",
    "im_operating_points",
    "synthesize_rf_drive",
    "phase_modulate",
    "voa_solve_attenuation",
    "voa_apply",
]


@dataclass(frozen=True)
class PolarizerParams:
    """In-line polarizer aligned to x.

    Attributes:
        insertion_loss: loss applied to the passed axis, dB.
        per: polarization extinction ratio, dB; may be ``inf``.
    """

    insertion_loss: float = 0.3
    per: float = 30.0

    def __post_init__(self) -> None:
        if self.insertion_loss < 0:
            raise ValueError("polarizer.insertion_loss must be >= 0")
        if self.per < 0:
            raise ValueError("polarizer.per must be >= 0")


@dataclass(frozen=True)
class IMParams:
    """Mach-Zehnder intensity modulator and its drive targets.

    Attributes:
        v_pi: half-wave voltage, V.
        v_dc: DC bias folded into the bright operating point, V.
        insertion_loss: dB.
        target_er: extinction ratio the carved pulses must reach, dB.
        fwhm: optical full width at half maximum of the carved pulse, s.
        rep_rate: drive repetition rate, Hz.
    """

    v_pi: float = 3.5
    v_dc: float = 0.0
    insertion_loss: float = 3.0
    target_er: float = 20.0
    fwhm: float = 3.0e-10
    rep_rate: float = 1.0e9

    def __post_init__(self) -> None:
        if not self.v_pi > 0:
            raise ValueError("im.v_pi must be > 0")
        if self.insertion_loss < 0:
            raise ValueError("im.insertion_loss must be >= 0")
        if not 0 <= self.v_dc < self.v_pi / 2:
            raise ValueError("im.v_dc must lie in [0, v_pi/2)")
        if not self.target_er > 0:
            raise ValueError("im.target_er must be > 0")
        if not self.rep_rate > 0:
            raise ValueError("im.rep_rate must be > 0")
        if not 0 < self.fwhm < 1.0 / self.rep_rate:
            raise ValueError("im.fwhm must lie in (0, 1/rep_rate)")


@dataclass(frozen=True)
class PMParams:
    """Phase modulator.

    Attributes:
        v_pi: half-wave voltage, V.
        bias_drift: slow bias offset added to the drive, V.
        insertion_loss: dB.
    """

    v_pi: float = 3.5
    bias_drift: float = 0.0
    insertion_loss: float = 2.0

    def __post_init__(self) -> None:
        if not self.v_pi > 0:
            raise ValueError("pm.v_pi must be > 0")
        if self.insertion_loss < 0:
            raise ValueError("pm.insertion_loss must be >= 0")


@dataclass(frozen=True)
class VOAParams:
    """Variable optical attenuator; fixed loss or closed-loop target.

    Exactly one of ``attenuation`` (dB) and ``target_mpn`` (mean photon
    number per pulse at the output) must be set.  In target mode the
    attenuation is solved on a warm-up block and then held.
    """

    attenuation: float | None = None
    target_mpn: float | None = 0.2
    warmup_pulses: int = 1000

    def __post_init__(self) -> None:
        if (self.attenuation is None) == (self.target_mpn is None):
            raise ValueError(
                "voa: exactly one of attenuation and target_mpn must be set")
        if self.attenuation is not None and self.attenuation < 0:
            raise ValueError("voa.attenuation must be >= 0")
        if self.target_mpn is not None and not self.target_mpn > 0:
            raise ValueError("voa.target_mpn must be > 0")
        if self.warmup_pulses < 1:
            raise ValueError("voa.warmup_pulses must be >= 1")


def polarize(field: OpticalField, params: PolarizerParams) -> OpticalField:
    """Pass x, suppress y by the extinction ratio, apply insertion loss."""
    a = 10.0 ** (-params.insertion_loss / 20.0)
    sup = 10.0 ** (-params.per / 20.0)
    return field.with_envelope(field.ex * a, field.ey * (a * sup))


def im_general(field: OpticalField, phi1, phi2, params: IMParams) -> OpticalField:
    """Dual-drive Mach-Zehnder: output is the mean of the two arm phasors.

    ``phi1``/``phi2`` are arm phases in radians, scalar or per-sample.
    """
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    for arr in (phi1, phi2):
        if arr.ndim not in (0, 1) or (arr.ndim == 1 and arr.size != field.n_samples):
            raise ValueError("arm phases must be scalar or one per sample")
    a = 10.0 ** (-params.insertion_loss / 20.0)
    tr = 0.5 * (np.exp(1j * phi1) + np.exp(1j * phi2)) * a
    return field.with_envelope(field.ex * tr, field.ey * tr)


def im_pushpull(field: OpticalField, drive, params: IMParams) -> OpticalField:
    """Push-pull Mach-Zehnder transfer cos(pi V / v_pi) on the amplitude."""
    v = np.asarray(drive, dtype=float)
    if v.ndim not in (0, 1) or (v.ndim == 1 and v.size != field.n_samples):
        raise ValueError("drive must be scalar or one sample per field sample")
    a = 10.0 ** (-params.insertion_loss / 20.0)
    tr = np.cos(np.pi * v / params.v_pi) * a
    return field.with_envelope(field.ex * tr, field.ey * tr)


def im_operating_points(params: IMParams) -> tuple[float, float]:
    """Bright and dim drive levels (v1, v0) realizing the target extinction.

    The bright point sits at the DC bias; the dim point solves
    ``cos^2(pi v0/v_pi) = cos^2(pi v1/v_pi) * 10^(-ER/10)`` on the
    monotonic half-period of the transfer.  An infinite target parks the
    dim point on the quadrature null at v_pi / 2.
    """
    v1 = params.v_dc
    p_max = math.cos(math.pi * v1 / params.v_pi) ** 2
    if math.isinf(params.target_er):
        p_min = 0.0
    else:
        p_min = p_max * 10.0 ** (-params.target_er / 10.0)
    if p_min >= p_max / 2.0:
        raise ValueError(
            "im.target_er too small; the carved pulse has no half-power point")
    v0 = (params.v_pi / math.pi) * math.acos(math.sqrt(p_min))
    return v1, v0


def synthesize_rf_drive(params: IMParams, window: PulseWindowing) -> np.ndarray:
    """One pulse period of drive voltage for the push-pull modulator.

    The waveform dwells at the dim level and ramps to the bright level
    through a raised-cosine bump whose width is solved in closed form so
    the transmitted optical pulse has the requested FWHM.  The returned
    array has ``window.samples_per_pulse`` samples with the pulse centred
    mid-slot; tile it for a pulse train.

    Raises:
        ValueError: if the extinction ratio or FWHM cannot be realized on
            this grid (checked against the actually sampled waveform).
    """
    if abs(window.rep_rate - params.rep_rate) > 1e-6 * params.rep_rate:
        raise ValueError("im.rep_rate must match the pulse grid rep rate")
    s = int(window.samples_per_pulse)
    dt = 1.0 / window.sample_rate
    period = window.pulse_period
    v1, v0 = im_operating_points(params)

    p_max = math.cos(math.pi * v1 / params.v_pi) ** 2
    v_half = (params.v_pi / math.pi) * math.acos(math.sqrt(p_max / 2.0))
    b_half = (v_half - v0) / (v1 - v0)
    width = math.pi * params.fwhm / math.acos(2.0 * b_half - 1.0)
    if width > period - 2.0 * dt:
        raise ValueError(
            "im.fwhm too close to the pulse period for this drive shape")

    t = np.arange(s) * dt
    tc = (s // 2) * dt
    bump = np.where(np.abs(t - tc) <= width / 2.0,
                    0.5 * (1.0 + np.cos(2.0 * np.pi * (t - tc) / width)),
                    0.0)
    drive = v0 + (v1 - v0) * bump

    power = np.cos(np.pi * drive / params.v_pi) ** 2
    if math.isfinite(params.target_er):
        achieved_er = 10.0 * math.log10(power.max() / power.min())
        if achieved_er < params.target_er - 0.5:
            raise ValueError(
                f"extinction ratio unreachable: achieved {achieved_er:.1f} dB "
                f"of {params.target_er:.1f} dB requested")
    measured = pulse_fwhm(power, dt)
    if abs(measured - params.fwhm) > 0.05 * params.fwhm:
        raise ValueError(
            f"optical FWHM off by more than 5% on this grid "
            f"({measured * 1e12:.1f} ps vs {params.fwhm * 1e12:.1f} ps); "
            "increase samples_per_pulse")
    return drive


def phase_modulate(field: OpticalField, drive, params: PMParams,
                   rng=None) -> OpticalField:
    """Phase shift pi (V + bias_drift) / v_pi, preserving power up to loss.

    ``rng`` is accepted for interface symmetry with the other stochastic
    stages; the bias drift is currently a constant offset.
    """
    v = np.asarray(drive, dtype=float)
    if v.ndim not in (0, 1) or (v.ndim == 1 and v.size != field.n_samples):
        raise ValueError("drive must be scalar or one sample per field sample")
    a = 10.0 ** (-params.insertion_loss / 20.0)
    tr = np.exp(1j * np.pi * (v + params.bias_drift) / params.v_pi) * a
    return field.with_envelope(field.ex * tr, field.ey * tr)


def voa_solve_attenuation(field: OpticalField, params: VOAParams,
                          window: PulseWindowing) -> float:
    """Attenuation in dB that brings the measured mean photon number to target.

    In fixed mode this is just the configured attenuation.  In target mode
    the mean per-pulse photon number of ``field`` is measured and the exact
    closing attenuation returned.

    Raises:
        ValueError: if the target exceeds the measured input (a VOA cannot
            amplify).
    """
    if params.attenuation is not None:
        return params.attenuation
    mu_in = float(np.mean(pulse_energies(field, window)))
    mu_in = mean_photon_number(mu_in, field.carrier_frequency)
    if mu_in <= 0 or mu_in < params.target_mpn:
        raise ValueError(
            f"voa: input mean photon number {mu_in:.3g} below target "
            f"{params.target_mpn:.3g}; attenuation cannot reach it")
    return 10.0 * math.log10(mu_in / params.target_mpn)


def voa_apply(field: OpticalField, params: VOAParams,
              window: PulseWindowing) -> OpticalField:
    """Apply the VOA, solving the attenuation on this block in target mode."""
    return attenuate(field, voa_solve_attenuation(field, params, window))
