"""Measurement instruments: optical spectrum, fringe visibility, power meter.

These operate on fields and power traces only; none of them mutate state
or draw randomness, so they can be pointed at any tap in the chain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import welch

from .field import OpticalField, PulseWindowing, mean_photon_number, power_trace, pulse_energies

__all__ = [
    "Spectrum",
    "spectrum",
    "visibility",
    "optical_qber_from_visibility",
    "power_meter",
    "pulse_fwhm",
]

# Equivalent noise bandwidth of the supported analysis windows, in bins.
_ENBW = {"rectangular": 1.0, "hann": 1.5}
_SCIPY_WINDOW = {"rectangular": "boxcar", "hann": "hann"}


@dataclass(frozen=True)
class Spectrum:
    """Two-sided power spectral density around the carrier.

    Attributes:
        frequencies: baseband offsets from the carrier, Hz, increasing.
        psd: power spectral density, W/Hz.
        resolution_bw: equivalent noise bandwidth of one bin, Hz.
    """

    frequencies: np.ndarray
    psd: np.ndarray
    resolution_bw: float


def spectrum(field: OpticalField, nfft: int,
             window_fn: str = "hann") -> Spectrum:
    """Welch-averaged periodogram of the optical field.

    Segments of ``nfft`` samples are windowed and averaged (50% overlap
    for the Hann window, none for rectangular).  The two polarization
    PSDs add.  With the rectangular window the integral of the PSD equals
    the mean power (Parseval).

    Raises:
        ValueError: if the field is shorter than one segment or the
            window name is unknown.
    """
    if window_fn not in _ENBW:
        raise ValueError(f"unknown analysis window {window_fn!r}")
    if nfft < 2:
        raise ValueError("nfft must be >= 2")
    if field.n_samples < nfft:
        raise ValueError("field shorter than one analysis segment")
    fs = field.sample_rate
    overlap = nfft // 2 if window_fn == "hann" else 0
    psd = None
    for comp in (field.ex, field.ey):
        f, pxx = welch(comp, fs=fs, window=_SCIPY_WINDOW[window_fn],
                       nperseg=nfft, noverlap=overlap, detrend=False,
                       return_onesided=False, scaling="density")
        psd = pxx if psd is None else psd + pxx
    order = np.argsort(np.fft.fftshift(f), kind="stable")
    freqs = np.fft.fftshift(f)[order]
    psd = np.fft.fftshift(psd)[order]
    return Spectrum(freqs, np.real(psd), _ENBW[window_fn] * fs / nfft)


def visibility(port_a_power: np.ndarray, port_b_power: np.ndarray,
               window: PulseWindowing) -> float:
    """Interference visibility from the two interferometer port powers.

    Each pulse slot routes its light predominantly to one port, so the
    pulse-centre power of the brighter port estimates I_max and of the
    dimmer port I_min; V = (I_max - I_min) / (I_max + I_min) averaged
    over all complete slots.  Driving an all-constructive then an
    all-destructive pattern reduces this to the classic two-point
    calibration.

    Raises:
        ValueError: on mismatched traces, fewer than one complete slot,
            or zero total power.
    """
    pa = np.asarray(port_a_power, dtype=float)
    pb = np.asarray(port_b_power, dtype=float)
    if pa.shape != pb.shape or pa.ndim != 1:
        raise ValueError("port powers must be equal-length 1-d traces")
    s = int(window.samples_per_pulse)
    n = pa.size // s
    if n < 1:
        raise ValueError("need at least one complete pulse slot")
    centre = s // 2
    ca = pa[:n * s].reshape(n, s)[:, centre]
    cb = pb[:n * s].reshape(n, s)[:, centre]
    hi = float(np.sum(np.maximum(ca, cb)))
    lo = float(np.sum(np.minimum(ca, cb)))
    if hi + lo <= 0:
        raise ValueError("zero total power; visibility undefined")
    return (hi - lo) / (hi + lo)


def optical_qber_from_visibility(v: float) -> float:
    """Interferometric error-rate floor e = (1 - V) / 2."""
    if not 0.0 <= v <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    return (1.0 - v) / 2.0


def power_meter(field: OpticalField,
                window: PulseWindowing) -> tuple[float, float]:
    """Average power (W) and mean per-pulse photon number of a field."""
    avg = float(np.mean(power_trace(field)))
    energies = pulse_energies(field, window)
    mu = mean_photon_number(float(np.mean(energies)), field.carrier_frequency)
    return avg, mu


def pulse_fwhm(power: np.ndarray, dt: float) -> float:
    """Full width at half maximum of a contained pulse, by interpolation.

    Finds the global peak and walks out to the half-maximum crossings,
    interpolating linearly between samples.

    Raises:
        ValueError: if a crossing is not bracketed inside the trace.
    """
    p = np.asarray(power, dtype=float)
    if p.ndim != 1 or p.size < 3:
        raise ValueError("power must be a 1-d trace of at least 3 samples")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    i = int(np.argmax(p))
    half = p[i] / 2.0

    j = i
    while j > 0 and p[j] >= half:
        j -= 1
    if p[j] >= half:
        raise ValueError("pulse is not contained: no left half-maximum crossing")
    left = j + (half - p[j]) / (p[j + 1] - p[j])

    k = i
    while k < p.size - 1 and p[k] >= half:
        k += 1
    if p[k] >= half:
        raise ValueError("pulse is not contained: no right half-maximum crossing")
    right = k - 1 + (half - p[k - 1]) / (p[k] - p[k - 1])
    return (right - left) * dt
