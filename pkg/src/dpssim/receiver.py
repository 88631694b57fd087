"""Bob's receiver: delay-line interferometer and single-photon detectors.

The interferometer splits the incoming field, delays one arm by a whole
number of samples (one pulse period in the protocol), and recombines on a
second splitter.  Both splitters use the annihilation-operator convention

    out_bar = t in0 - i r in1
    out_cross = -i r in0 + t in1

so with equal-phase adjacent pulses the cross port (labelled ``port_a``,
wired to detector D1) receives all the light and the bar port (``port_b``,
detector D2) goes dark.

Detection is slotted per pulse period: each slot receives its mean photon
number and the detector draws one Bernoulli click from the combined
photon, afterpulse and dark probabilities, with deadtime blocking and
Gaussian timestamp jitter on top.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import OpticalField

__all__ = [
    "DLIParams",
    "SPADParams",
    "DetectionEvent",
    "CAUSE_PHOTON",
    "CAUSE_DARK",
    "CAUSE_AFTERPULSE",
    "beam_splitter",
    "DelayLineInterferometer",
    "dli_transform",
    "spad_click_probability",
    "SpadDetector",
    "spad_detect",
]

CAUSE_PHOTON = "photon"
CAUSE_DARK = "dark"
CAUSE_AFTERPULSE = "afterpulse"


@dataclass(frozen=True)
class DLIParams:
    """Delay-line interferometer.

    Attributes:
        delay: arm delay, s; must be a whole number of samples.
        t_coef: splitter transmission amplitude (both splitters).
        r_coef: splitter reflection amplitude.
        insertion_loss: dB, applied to both output ports.
        phase_offset: extra phase on the delayed arm, rad.
    """

    delay: float = 1.0e-9
    t_coef: float = math.sqrt(0.5)
    r_coef: float = math.sqrt(0.5)
    insertion_loss: float = 2.0
    phase_offset: float = 0.0

    def __post_init__(self) -> None:
        if not self.delay > 0:
            raise ValueError("dli.delay must be > 0")
        if self.insertion_loss < 0:
            raise ValueError("dli.insertion_loss must be >= 0")
        norm = self.t_coef ** 2 + self.r_coef ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(
                f"dli splitter not unitary: t^2 + r^2 = {norm!r}")

    @property
    def free_spectral_range(self) -> float:
        return 1.0 / self.delay


@dataclass(frozen=True)
class SPADParams:
    """Single-photon avalanche diode.

    Attributes:
        eta: detection efficiency.
        p_dark: dark-count probability per slot.
        p0: afterpulse probability immediately after a click.
        a_coef: afterpulse decay constant per elapsed slot.
        deadtime: blocking time after a click, s.
        jitter_sigma: rms Gaussian timestamp jitter, s.
        n_bg: mean background photons per slot, added to eta * mu.
    """

    eta: float = 0.2
    p_dark: float = 1.0e-6
    p0: float = 0.0317
    a_coef: float = 0.00115
    deadtime: float = 1.0e-5
    jitter_sigma: float = 5.0e-11
    n_bg: float = 1.0e-6

    def __post_init__(self) -> None:
        for name in ("eta", "p_dark", "p0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"spad.{name} must lie in [0, 1]")
        for name in ("a_coef", "deadtime", "jitter_sigma", "n_bg"):
            if getattr(self, name) < 0:
                raise ValueError(f"spad.{name} must be >= 0")


@dataclass(frozen=True)
class DetectionEvent:
    """One detector click.

    ``pulse_index`` is the slot the click belongs to in the caller's
    numbering; ``timestamp`` is the jittered arrival time in seconds.
    """

    pulse_index: int
    detector: str
    timestamp: float
    cause: str


def beam_splitter(in0: OpticalField, in1: OpticalField,
                  params: DLIParams) -> tuple[OpticalField, OpticalField]:
    """Combine two fields on a lossless splitter.

    Returns (bar, cross) = (t in0 - i r in1, -i r in0 + t in1) per
    polarization.  Power is conserved exactly for unitary (t, r).

    Raises:
        ValueError: if the fields are not on the same grid and carrier.
    """
    if (in0.n_samples != in1.n_samples
            or in0.sample_rate != in1.sample_rate
            or in0.carrier_frequency != in1.carrier_frequency):
        raise ValueError("beam splitter inputs must share grid and carrier")
    t, r = params.t_coef, params.r_coef
    bar_ex = t * in0.ex - 1j * r * in1.ex
    bar_ey = t * in0.ey - 1j * r * in1.ey
    cross_ex = -1j * r * in0.ex + t * in1.ex
    cross_ey = -1j * r * in0.ey + t * in1.ey
    return in0.with_envelope(bar_ex, bar_ey), in0.with_envelope(cross_ex, cross_ey)


class DelayLineInterferometer:
    """Streaming interferometer holding the delayed-arm tail across blocks.

    The delay line starts cold (vacuum), so the first ``delay`` samples of
    the first output block interfere with nothing; the protocol excludes
    that half-overlap slot from sifting.
    """

    def __init__(self, params: DLIParams, sample_rate: float):
        self.params = params
        d = params.delay * sample_rate
        if abs(d - round(d)) > 1e-6:
            raise ValueError(
                f"dli.delay of {params.delay:g} s is {d:g} samples at "
                f"{sample_rate:g} S/s; it must be a whole number of samples")
        self.delay_samples = int(round(d))
        if self.delay_samples < 1:
            raise ValueError("dli.delay must span at least one sample")
        self.sample_rate = sample_rate
        self._carry_ex = np.zeros(self.delay_samples, dtype=np.complex128)
        self._carry_ey = np.zeros(self.delay_samples, dtype=np.complex128)

    def transform(self, field: OpticalField) -> tuple[OpticalField, OpticalField]:
        """Next block of (port_a, port_b) fields."""
        if field.sample_rate != self.sample_rate:
            raise ValueError("field sample rate changed mid-stream")
        p = self.params
        t, r = p.t_coef, p.r_coef
        d = self.delay_samples
        n = field.n_samples

        # First splitter: short arm keeps t, long arm takes -i r.
        short_ex, short_ey = t * field.ex, t * field.ey
        long_ex, long_ey = -1j * r * field.ex, -1j * r * field.ey

        def delayed(arm: np.ndarray, carry: np.ndarray) -> np.ndarray:
            whole = np.concatenate([carry, arm])
            return whole[:n]

        rot = complex(math.cos(p.phase_offset), math.sin(p.phase_offset))
        del_ex = delayed(long_ex, self._carry_ex) * rot
        del_ey = delayed(long_ey, self._carry_ey) * rot
        if d <= n:
            self._carry_ex = long_ex[n - d:].copy()
            self._carry_ey = long_ey[n - d:].copy()
        else:
            self._carry_ex = np.concatenate([self._carry_ex[n:], long_ex])
            self._carry_ey = np.concatenate([self._carry_ey[n:], long_ey])

        a = 10.0 ** (-p.insertion_loss / 20.0)
        port_b_ex = (t * short_ex - 1j * r * del_ex) * a
        port_b_ey = (t * short_ey - 1j * r * del_ey) * a
        port_a_ex = (-1j * r * short_ex + t * del_ex) * a
        port_a_ey = (-1j * r * short_ey + t * del_ey) * a
        return (field.with_envelope(port_a_ex, port_a_ey),
                field.with_envelope(port_b_ex, port_b_ey))


def dli_transform(field: OpticalField,
                  params: DLIParams) -> tuple[OpticalField, OpticalField]:
    """One-shot interferometer on a single block (cold delay line)."""
    return DelayLineInterferometer(params, field.sample_rate).transform(field)


def spad_click_probability(mu, n_since_last, params: SPADParams):
    """Per-slot click probability and its components.

    Args:
        mu: mean photon number arriving in the slot (scalar or array).
        n_since_last: slots elapsed since the last click (0 for the very
            next slot), or None if no click has occurred yet.
        params: detector parameters.

    Returns:
        (p_click, components) where components is a dict with the photon,
        afterpulse and dark terms.  The total combines them as independent
        triggers (inclusion-exclusion), so any single certain cause forces
        p_click = 1.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mu must be >= 0")
    p_p = -np.expm1(-(params.eta * mu + params.n_bg))
    if n_since_last is None:
        p_ap = 0.0
    else:
        if n_since_last < 0:
            raise ValueError("n_since_last must be >= 0")
        p_ap = params.p0 * math.exp(-params.a_coef * n_since_last)
    p_d = params.p_dark
    p_click = (p_p + p_ap + p_d
               - p_p * p_ap - p_ap * p_d - p_d * p_p
               + p_p * p_ap * p_d)
    comps = {"photon": p_p if p_p.ndim else float(p_p),
             "afterpulse": p_ap, "dark": p_d}
    if p_click.ndim == 0:
        return float(p_click), comps
    return p_click, comps


class SpadDetector:
    """Stateful slotted detector; carries deadtime and afterpulse memory.

    A click at slot j blocks slots up to j + ceil(deadtime / period) - 1;
    the afterpulse probability decays as p0 exp(-a n) with n the slots
    elapsed since the last click.  jitter only perturbs the reported
    timestamp, never the gating.
    """

    def __init__(self, params: SPADParams, rng, pulse_period: float,
                 name: str = "D1"):
        self.params = params
        self.rng = rng
        self.pulse_period = pulse_period
        self.name = name
        if params.deadtime > 0:
            self.dead_slots = max(
                int(math.ceil(params.deadtime / pulse_period - 1e-9)), 1)
        else:
            self.dead_slots = 0
        self._last_click: int | None = None

    def detect(self, mu, start_slot: int = 0) -> list[DetectionEvent]:
        """Run the detector over consecutive slots starting at start_slot."""
        mu = np.asarray(mu, dtype=float)
        if np.any(mu < 0):
            raise ValueError("mu must be >= 0")
        pars = self.params
        n = mu.size
        if n == 0:
            return []
        p_p = -np.expm1(-(pars.eta * mu + pars.n_bg))

        if pars.p0 == 0.0 and self.dead_slots == 0:
            return self._detect_memoryless(p_p, start_slot)
        return self._detect_sequential(p_p, start_slot)

    def _detect_memoryless(self, p_p: np.ndarray,
                           start_slot: int) -> list[DetectionEvent]:
        # No afterpulsing and no deadtime: slots are independent.
        pars = self.params
        p_d = pars.p_dark
        p_click = p_p + p_d - p_p * p_d
        u = self.rng.uniform(p_p.size)
        idx = np.nonzero(u < p_click)[0]
        if idx.size == 0:
            return []
        times = (start_slot + idx + 0.5) * self.pulse_period
        if pars.jitter_sigma > 0:
            times = times + self.rng.normal(idx.size) * pars.jitter_sigma
        if p_d > 0:
            v = self.rng.uniform(idx.size)
            photon = v * (p_p[idx] + p_d) < p_p[idx]
        else:
            photon = np.ones(idx.size, dtype=bool)
        events = []
        for k, slot_off in enumerate(idx):
            cause = CAUSE_PHOTON if photon[k] else CAUSE_DARK
            events.append(DetectionEvent(int(start_slot + slot_off),
                                         self.name, float(times[k]), cause))
        if idx.size:
            self._last_click = int(start_slot + idx[-1])
        return events

    def _detect_sequential(self, p_p: np.ndarray,
                           start_slot: int) -> list[DetectionEvent]:
        pars = self.params
        period = self.pulse_period
        p0 = pars.p0
        a = pars.a_coef
        p_d = pars.p_dark
        dead = self.dead_slots
        jitter = pars.jitter_sigma
        last = self._last_click
        u = self.rng.uniform(p_p.size).tolist()
        pp = p_p.tolist()
        events = []
        for k in range(len(pp)):
            slot = start_slot + k
            if last is not None and slot - last < dead:
                continue
            if last is None:
                p_ap = 0.0
            else:
                p_ap = p0 * math.exp(-a * (slot - last - 1))
            ppk = pp[k]
            p_click = (ppk + p_ap + p_d
                       - ppk * p_ap - p_ap * p_d - p_d * ppk
                       + ppk * p_ap * p_d)
            if u[k] < p_click:
                ts = (slot + 0.5) * period
                if jitter > 0:
                    ts += float(self.rng.normal()) * jitter
                v = float(self.rng.uniform()) * (ppk + p_ap + p_d)
                if v < ppk:
                    cause = CAUSE_PHOTON
                elif v < ppk + p_ap:
                    cause = CAUSE_AFTERPULSE
                else:
                    cause = CAUSE_DARK
                events.append(DetectionEvent(slot, self.name, ts, cause))
                last = slot
        self._last_click = last
        return events


def spad_detect(mu, params: SPADParams, rng,
                pulse_period: float, name: str = "D1") -> list[DetectionEvent]:
    """Detect over a fresh detector starting at slot 0."""
    return SpadDetector(params, rng, pulse_period, name).detect(mu, 0)
