"""Sampled optical fields, the pulse grid, and seeded random streams.

Everything downstream (laser, modulators, fiber, receiver) exchanges
:class:`OpticalField` values: a dual-polarization complex envelope sampled
at a fixed rate, with the optical carrier carried analytically as a single
frequency rather than being resolved on the sample grid.  Envelope units
are sqrt(W), so ``|ex|^2 + |ey|^2`` is instantaneous power in watts.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import h as PLANCK

__all__ = [
    "OpticalField",
    "PulseWindowing",
    "RandomStream",
    "power_trace",
    "pulse_energy",
    "pulse_energies",
    "mean_photon_number",
    "attenuate",
]


@dataclass(frozen=True)
class PulseWindowing:
    """Mapping between the sample grid and protocol pulse slots.

    Attributes:
        rep_rate: pulse repetition rate in Hz.
        samples_per_pulse: integer number of samples per pulse slot.
    """

    rep_rate: float
    samples_per_pulse: int

    def __post_init__(self) -> None:
        if not self.rep_rate > 0:
            raise ValueError("rep_rate must be > 0")
        if not isinstance(self.samples_per_pulse, (int, np.integer)):
            raise ValueError("samples_per_pulse must be an integer")
        if self.samples_per_pulse < 1:
            raise ValueError("samples_per_pulse must be >= 1")

    @property
    def sample_rate(self) -> float:
        """Samples per second; samples_per_pulse * rep_rate by construction."""
        return self.rep_rate * self.samples_per_pulse

    @property
    def pulse_period(self) -> float:
        return 1.0 / self.rep_rate

    def n_pulses(self, n_samples: int) -> int:
        """Number of complete pulse slots contained in n_samples."""
        return int(n_samples) // int(self.samples_per_pulse)


@dataclass(frozen=True)
class OpticalField:
    """Dual-polarization sampled envelope around an optical carrier.

    The physical field is ``Re{(ex, ey) * exp(i 2 pi carrier_frequency t)}``
    up to the usual analytic-signal factor; the carrier itself is never
    sampled.  Treat instances as immutable: operations return new fields.

    Attributes:
        sample_rate: grid rate in samples/s.
        carrier_frequency: optical carrier in Hz.
        ex: x-polarization envelope, complex, sqrt(W).
        ey: y-polarization envelope, complex, sqrt(W).
        t0: start time of the block in seconds.
    """

    sample_rate: float
    carrier_frequency: float
    ex: np.ndarray
    ey: np.ndarray
    t0: float = 0.0

    def __post_init__(self) -> None:
        ex = np.asarray(self.ex, dtype=np.complex128)
        ey = np.asarray(self.ey, dtype=np.complex128)
        object.__setattr__(self, "ex", ex)
        object.__setattr__(self, "ey", ey)
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")
        if not self.carrier_frequency > 0:
            raise ValueError("carrier_frequency must be > 0")
        if ex.ndim != 1 or ey.ndim != 1:
            raise ValueError("envelopes must be one-dimensional")
        if ex.shape != ey.shape:
            raise ValueError("ex and ey must have equal length")
        if ex.size < 1:
            raise ValueError("field must contain at least one sample")
        if not (np.all(np.isfinite(ex.view(np.float64)))
                and np.all(np.isfinite(ey.view(np.float64)))):
            raise ValueError("field samples must be finite")

    @property
    def n_samples(self) -> int:
        return self.ex.size

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def with_envelope(self, ex: np.ndarray, ey: np.ndarray) -> "OpticalField":
        """New field on the same grid with replaced envelopes."""
        return replace(self, ex=ex, ey=ey)

    @staticmethod
    def vacuum(n_samples: int, sample_rate: float,
               carrier_frequency: float, t0: float = 0.0) -> "OpticalField":
        z = np.zeros(n_samples, dtype=np.complex128)
        return OpticalField(sample_rate, carrier_frequency, z, z.copy(), t0)

    def vacuum_like(self) -> "OpticalField":
        return OpticalField.vacuum(self.n_samples, self.sample_rate,
                                   self.carrier_frequency, self.t0)


def power_trace(field: OpticalField) -> np.ndarray:
    """Instantaneous power |ex|^2 + |ey|^2 in watts, one value per sample."""
    return np.abs(field.ex) ** 2 + np.abs(field.ey) ** 2


def pulse_energy(field: OpticalField, window: PulseWindowing, n: int) -> float:
    """Energy of pulse slot n in joules (rectangular-rule integral).

    Raises:
        ValueError: if slot n is not fully contained in the field.
    """
    s = int(window.samples_per_pulse)
    if n < 0 or (n + 1) * s > field.n_samples:
        raise ValueError(f"pulse slot {n} out of range for {field.n_samples} samples")
    p = power_trace(field)[n * s:(n + 1) * s]
    return float(np.sum(p)) / field.sample_rate


def pulse_energies(field: OpticalField, window: PulseWindowing) -> np.ndarray:
    """Energies of every complete pulse slot, in joules."""
    s = int(window.samples_per_pulse)
    n = field.n_samples // s
    if n == 0:
        raise ValueError("field shorter than one pulse slot")
    p = power_trace(field)[:n * s].reshape(n, s)
    return p.sum(axis=1) / field.sample_rate


def mean_photon_number(energy: float, carrier_frequency: float) -> float:
    """Photon number mu = energy / (h * nu) for a given carrier."""
    if energy < 0:
        raise ValueError("energy must be >= 0")
    if not carrier_frequency > 0:
        raise ValueError("carrier_frequency must be > 0")
    return energy / (PLANCK * carrier_frequency)


def attenuate(field: OpticalField, loss_db: float) -> OpticalField:
    """Apply a flat power loss in dB (amplitude factor 10^(-loss/20))."""
    if loss_db < 0:
        raise ValueError("loss_db must be >= 0")
    a = 10.0 ** (-loss_db / 20.0)
    return field.with_envelope(field.ex * a, field.ey * a)


def _label_entropy(label: str) -> int:
    """Stable 64-bit integer derived from a text label."""
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "big")


class RandomStream:
    """Seeded random source with named, independent substreams.

    One root seed drives a whole simulation; each stochastic component
    derives its own stream by a fixed label so that adding draws in one
    component never perturbs another.
    """

    def __init__(self, seed: int, _lineage: tuple[int, ...] = ()):
        if not isinstance(seed, (int, np.integer)) or seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = int(seed)
        self._lineage = _lineage
        ss = np.random.SeedSequence([self.seed, *(_lineage)])
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def substream(self, label: str) -> "RandomStream":
        """Independent stream identified by (seed, label path)."""
        return RandomStream(self.seed, self._lineage + (_label_entropy(label),))

    def uniform(self, size: int | None = None):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size: int | None = None):
        """Standard normal draws."""
        return self._gen.standard_normal(size)

    def bernoulli(self, p, size: int | None = None):
        """Bernoulli draws; returns bool scalar or array."""
        if size is None:
            return bool(self._gen.random() < p)
        return self._gen.random(size) < p

    def sample_indices(self, n: int, k: int) -> np.ndarray:
        """k distinct indices drawn uniformly from range(n), sorted."""
        if k < 0 or k > n:
            raise ValueError("need 0 <= k <= n")
        idx = self._gen.choice(n, size=k, replace=False)
        return np.sort(idx)
