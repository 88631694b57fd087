"""Differential-phase key distribution over the simulated optical chain.

Alice phase-codes a carved pulse train with {0, pi} phases; the key bit
for index n is the phase difference between pulses n and n + 1 (equal
phases encode 0).  Bob's interferometer overlaps each pulse with its
predecessor, so detector slot k measures the difference of pulses k - 1
and k and maps to key index n = k - 1.  Slot 0 only ever sees one pulse
(the delay line starts empty) and is excluded, as is the symmetric
half-overlap slot after the last pulse, which is never even generated;
slots where both detectors click are discarded.

A run streams in blocks: the laser, fiber, interferometer and both
detectors carry state across block boundaries, so any block size gives
the same physics; only the noise realization depends on it, because the
block size sets the order random draws are consumed in.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .fiber import FiberStream
from .field import (OpticalField, PulseWindowing, RandomStream, attenuate,
                    power_trace, pulse_energies)
from .laser import ContinuousWaveSource
from .modulators import (im_pushpull, phase_modulate, polarize,
                         synthesize_rf_drive, voa_solve_attenuation)
from .receiver import DelayLineInterferometer, DetectionEvent, SpadDetector

__all__ = [
    "EncodingRecord",
    "SiftedKey",
    "ProtocolMetrics",
    "RunResult",
    "AliceTransmitter",
    "alice_prepare",
    "differential_bits",
    "sift",
    "estimate_qber",
    "binary_entropy",
    "run_protocol",
]


@dataclass(frozen=True)
class EncodingRecord:
    """Alice's private record of what went onto the wire.

    ``phases[n]`` is always ``pi * bits[n]``; the global phase is the
    laser's starting phase and affects no observable.
    """

    bits: np.ndarray
    phases: np.ndarray
    global_phase: float
    n_pulses: int

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8)
        phases = np.asarray(self.phases, dtype=float)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "phases", phases)
        if bits.ndim != 1 or phases.shape != bits.shape:
            raise ValueError("bits and phases must be equal-length 1-d")
        if self.n_pulses != bits.size:
            raise ValueError("n_pulses must match the bit count")
        if not np.allclose(phases, np.pi * bits):
            raise ValueError("phases must equal pi * bits")


@dataclass(frozen=True)
class SiftedKey:
    """Matched key material after sifting.

    ``positions`` are the key indices kept (single-click slots, strictly
    increasing); the two bit arrays are aligned with it.
    """

    positions: np.ndarray
    alice_bits: np.ndarray
    bob_bits: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.int64)
        a = np.asarray(self.alice_bits, dtype=np.uint8)
        b = np.asarray(self.bob_bits, dtype=np.uint8)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "alice_bits", a)
        object.__setattr__(self, "bob_bits", b)
        if not (pos.ndim == a.ndim == b.ndim == 1):
            raise ValueError("sifted key components must be 1-d")
        if not (pos.size == a.size == b.size):
            raise ValueError("sifted key components must have equal length")
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise ValueError("positions must be strictly increasing")

    @property
    def length(self) -> int:
        return int(self.positions.size)

    @property
    def errors(self) -> int:
        return int(np.count_nonzero(self.alice_bits != self.bob_bits))

    @property
    def qber(self) -> float | None:
        if self.length == 0:
            return None
        return self.errors / self.length


def differential_bits(record) -> np.ndarray:
    """Key bits from the pulse record: d[n] = bits[n] XOR bits[n + 1].

    Accepts an EncodingRecord or a plain bit sequence.
    """
    bits = record.bits if isinstance(record, EncodingRecord) else record
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1 or bits.size < 2:
        raise ValueError("need at least two pulse bits")
    return bits[:-1] ^ bits[1:]


def sift(record, events_d1: list[DetectionEvent],
         events_d2: list[DetectionEvent]) -> tuple[SiftedKey, int]:
    """Match Bob's single-click slots against Alice's key bits.

    ``record`` is an EncodingRecord or a precomputed differential-bit
    array; events must already carry key indices 0 .. N - 2.  D1 clicks
    decode as bit 0, D2 as bit 1; indices clicked on both detectors are
    double clicks and are thrown away.

    Returns:
        (key, n_double_clicks)

    Raises:
        ValueError: if an event's key index is out of range.
    """
    if isinstance(record, EncodingRecord):
        alice_key = differential_bits(record)
    else:
        alice_key = np.asarray(record, dtype=np.uint8)
    n = alice_key.size
    idx1 = {e.pulse_index for e in events_d1}
    idx2 = {e.pulse_index for e in events_d2}
    for i in idx1 | idx2:
        if not 0 <= i < n:
            raise ValueError(f"event key index {i} outside 0..{n - 1}")
    doubles = idx1 & idx2
    singles = sorted((idx1 | idx2) - doubles)
    positions = np.asarray(singles, dtype=np.int64)
    bob = np.fromiter((0 if i in idx1 else 1 for i in singles),
                      dtype=np.uint8, count=len(singles))
    key = SiftedKey(positions, alice_key[positions], bob)
    return key, len(doubles)


def estimate_qber(key: SiftedKey, sample_fraction: float,
                  rng: RandomStream) -> tuple[float, SiftedKey]:
    """Disclose a random key subset, estimate the error rate, drop the subset.

    Returns:
        (estimate, remaining_key); the disclosed positions are removed
        from the returned key since they are now public.

    Raises:
        ValueError: on an empty key or a fraction outside (0, 1].
    """
    if not 0.0 < sample_fraction <= 1.0:
        raise ValueError("sample_fraction must lie in (0, 1]")
    if key.length == 0:
        raise ValueError("cannot estimate the error rate of an empty key")
    k = max(1, int(round(sample_fraction * key.length)))
    disclosed = rng.sample_indices(key.length, k)
    errors = int(np.count_nonzero(
        key.alice_bits[disclosed] != key.bob_bits[disclosed]))
    keep = np.ones(key.length, dtype=bool)
    keep[disclosed] = False
    remaining = SiftedKey(key.positions[keep], key.alice_bits[keep],
                          key.bob_bits[keep])
    return errors / k, remaining


def binary_entropy(p: float) -> float:
    """h(p) = -p log2 p - (1 - p) log2 (1 - p), with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


class AliceTransmitter:
    """Streaming transmitter: laser through VOA, one block at a time.

    The VOA attenuation is solved on the first block (over at most
    ``warmup_pulses`` pulses) and held for the rest of the run, like a
    real attenuator closed on a power-meter reading.
    """

    def __init__(self, cfg: RunConfig, rng: RandomStream,
                 window: PulseWindowing):
        self.cfg = cfg
        self.window = window
        self.source = ContinuousWaveSource(cfg.laser, rng, window.sample_rate)
        self.drive_period = synthesize_rf_drive(cfg.im, window)
        self.attenuation: float | None = None
        if cfg.voa.target_mpn is not None and cfg.voa.target_mpn >= 1.0:
            raise ValueError(
                "protocol requires a mean photon number below one per pulse")

    def encode_block(self, bits: np.ndarray, t0: float = 0.0) -> OpticalField:
        """Modulate one block of pulses with the given phase bits."""
        cfg = self.cfg
        s = self.window.samples_per_pulse
        bits = np.asarray(bits, dtype=np.uint8)
        nb = bits.size
        field = self.source.emit(nb * s, t0=t0)
        field = polarize(field, cfg.polarizer)
        field = im_pushpull(field, np.tile(self.drive_period, nb), cfg.im)
        field = phase_modulate(field, np.repeat(bits * cfg.pm.v_pi, s), cfg.pm)
        if self.attenuation is None:
            m = min(cfg.voa.warmup_pulses, nb)
            warm = field.with_envelope(field.ex[:m * s], field.ey[:m * s])
            self.attenuation = voa_solve_attenuation(warm, cfg.voa,
                                                     self.window)
        return attenuate(field, self.attenuation)


def alice_prepare(bits, cfg: RunConfig,
                  rng: RandomStream) -> tuple[OpticalField, EncodingRecord]:
    """Prepare the fiber-input field for a bit sequence in one shot.

    Runs laser, polarizer, pulse carver, phase modulator and VOA over a
    single block and returns the field with Alice's encoding record.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        raise ValueError("bits must not be empty")
    window = PulseWindowing(cfg.run.rep_rate, cfg.run.samples_per_pulse)
    tx = AliceTransmitter(cfg, rng, window)
    field = tx.encode_block(bits)
    record = EncodingRecord(bits, np.pi * bits.astype(float),
                            cfg.laser.phi0, bits.size)
    return field, record


@dataclass(frozen=True)
class ProtocolMetrics:
    """Aggregate counters and rates for one run.

    ``qber`` is the error rate of the whole sifted key;
    ``qber_estimate`` comes from the randomly disclosed ``n_disclosed``
    bits only, and ``final_key_length`` is what remains after removing
    them.  ``leakage`` is the binary entropy of the full-key error rate:
    the minimum error-correction disclosure per sifted bit.
    ``sifted_rate`` is sifted bits per transmitted pulse.
    """

    n_pulses: int
    n_slots: int
    clicks_d1: int
    clicks_d2: int
    boundary_clicks: int
    double_clicks: int
    sifted_length: int
    sifted_rate: float
    errors: int
    qber: float | None
    qber_estimate: float | None
    n_disclosed: int
    final_key_length: int
    leakage: float | None
    key_asymmetry: float | None
    visibility: float | None
    mean_photon_number: float
    attenuation_db: float
    mean_power_w: float
    click_causes: dict[str, int]
    rin_clamped_samples: int


@dataclass(frozen=True)
class RunResult:
    """Everything a run produces besides file artifacts.

    ``sifted`` is the full sifted key used for the exact error counts;
    ``final_key`` has the publicly disclosed estimation bits removed.
    """

    metrics: ProtocolMetrics
    events_d1: list[DetectionEvent]
    events_d2: list[DetectionEvent]
    sifted: SiftedKey
    final_key: SiftedKey


def _renumber(events: list[DetectionEvent]) -> tuple[list[DetectionEvent], int]:
    """Shift detector-slot events to key indices, dropping slot 0."""
    out = []
    boundary = 0
    for e in events:
        if e.pulse_index == 0:
            boundary += 1
            continue
        out.append(dataclasses.replace(e, pulse_index=e.pulse_index - 1))
    return out, boundary


def run_protocol(cfg: RunConfig, seed: int | None = None) -> RunResult:
    """Run the full chain end to end and sift the key.

    The per-block pipeline: CW laser, polarizer, pulse-carving intensity
    modulator, phase modulator driven by Alice's bits, VOA, fiber span,
    delay-line interferometer, one detector per output port.  ``seed``
    overrides ``cfg.run.seed`` when given.  Any component failure is
    re-raised with the index of the block being processed.
    """
    run = cfg.run
    if seed is not None:
        run = dataclasses.replace(run, seed=seed)
    window = PulseWindowing(run.rep_rate, run.samples_per_pulse)
    fs = window.sample_rate
    s = run.samples_per_pulse
    n_total = run.n_pulses
    period = window.pulse_period

    root = RandomStream(run.seed)
    bits_rng = root.substream("alice-bits")

    tx = AliceTransmitter(cfg, root.substream("laser"), window)
    dli = DelayLineInterferometer(cfg.dli, fs)
    if dli.delay_samples != s:
        raise ValueError(
            "dli.delay must equal one pulse period "
            f"({dli.delay_samples} samples vs {s} per pulse)")
    det1 = SpadDetector(cfg.spad, root.substream("spad-d1"), period, "D1")
    det2 = SpadDetector(cfg.spad, root.substream("spad-d2"), period, "D2")
    fiber = FiberStream(cfg.fiber, fs)

    pulse_bits = np.empty(n_total, dtype=np.uint8)
    energy_sum = 0.0
    vis_hi = 0.0
    vis_lo = 0.0
    raw_d1: list[DetectionEvent] = []
    raw_d2: list[DetectionEvent] = []
    out_slot = 0
    hv = tx.source.carrier_frequency * cfg.laser.planck

    def consume(block: OpticalField) -> None:
        nonlocal out_slot, vis_hi, vis_lo
        port_a, port_b = dli.transform(block)
        nb = block.n_samples // s
        ca = power_trace(port_a).reshape(nb, s)[:, s // 2]
        cb = power_trace(port_b).reshape(nb, s)[:, s // 2]
        skip = 1 if out_slot == 0 else 0
        vis_hi += float(np.sum(np.maximum(ca[skip:], cb[skip:])))
        vis_lo += float(np.sum(np.minimum(ca[skip:], cb[skip:])))
        raw_d1.extend(det1.detect(pulse_energies(port_a, window) / hv,
                                  out_slot))
        raw_d2.extend(det2.detect(pulse_energies(port_b, window) / hv,
                                  out_slot))
        out_slot += nb

    n_blocks = -(-n_total // run.block_pulses)
    for i, start in enumerate(range(0, n_total, run.block_pulses)):
        nb = min(run.block_pulses, n_total - start)
        try:
            blk_bits = (bits_rng.uniform(nb) < 0.5).astype(np.uint8)
            pulse_bits[start:start + nb] = blk_bits
            field = tx.encode_block(blk_bits, t0=start * period)
            energy_sum += float(np.sum(pulse_energies(field, window)))
            out = fiber.push(field)
            if out is not None:
                consume(out)
            if i == n_blocks - 1:
                tail = fiber.flush()
                if tail is not None:
                    consume(tail)
        except Exception as exc:
            raise _with_block_context(exc, i, n_blocks) from exc
    assert out_slot == n_total

    alice_key = differential_bits(pulse_bits)
    events_d1, boundary1 = _renumber(raw_d1)
    events_d2, boundary2 = _renumber(raw_d2)
    key, doubles = sift(alice_key, events_d1, events_d2)
    qber = key.qber
    if key.length:
        est, final_key = estimate_qber(key, run.sample_fraction,
                                       root.substream("qber-sample"))
        n_disclosed = key.length - final_key.length
    else:
        est, final_key, n_disclosed = None, key, 0

    causes: dict[str, int] = {"photon": 0, "afterpulse": 0, "dark": 0}
    for e in raw_d1 + raw_d2:
        causes[e.cause] += 1

    ones = int(np.count_nonzero(key.bob_bits))
    vis_total = vis_hi + vis_lo
    metrics = ProtocolMetrics(
        n_pulses=n_total,
        n_slots=n_total - 1,
        clicks_d1=len(events_d1),
        clicks_d2=len(events_d2),
        boundary_clicks=boundary1 + boundary2,
        double_clicks=doubles,
        sifted_length=key.length,
        sifted_rate=key.length / n_total,
        errors=key.errors,
        qber=qber,
        qber_estimate=est,
        n_disclosed=n_disclosed,
        final_key_length=final_key.length,
        leakage=None if qber is None else binary_entropy(qber),
        key_asymmetry=(abs(2 * ones - key.length) / key.length
                       if key.length else None),
        visibility=(vis_hi - vis_lo) / vis_total if vis_total > 0 else None,
        mean_photon_number=energy_sum / n_total / hv,
        attenuation_db=float(tx.attenuation),
        mean_power_w=energy_sum / (n_total * period),
        click_causes=causes,
        rin_clamped_samples=tx.source.clamped,
    )
    return RunResult(metrics, events_d1, events_d2, key, final_key)


def _with_block_context(exc: Exception, block: int, n_blocks: int) -> Exception:
    msg = f"block {block + 1}/{n_blocks}: {exc}"
    try:
        return type(exc)(msg)
    except TypeError:
        return RuntimeError(msg)
