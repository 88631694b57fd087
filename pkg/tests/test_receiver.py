"""Interferometer routing and avalanche-detector statistics."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpssim import (CAUSE_AFTERPULSE, CAUSE_DARK, CAUSE_PHOTON, DLIParams,
                    DelayLineInterferometer, OpticalField, PulseWindowing,
                    RandomStream, SPADParams, SpadDetector, beam_splitter,
                    dli_transform, pulse_energies, spad_click_probability,
                    spad_detect)

from conftest import CARRIER, phase_train


def lossless_dli(phase_offset=0.0):
    return DLIParams(insertion_loss=0.0, phase_offset=phase_offset)


# ------------------------------------------------------------ beam splitter

def test_beam_splitter_convention():
    one = OpticalField(1e10, CARRIER, np.ones(4, complex), np.zeros(4, complex))
    zero = one.vacuum_like()
    p = lossless_dli()
    bar, cross = beam_splitter(one, zero, p)
    assert np.allclose(bar.ex, p.t_coef)
    assert np.allclose(cross.ex, -1j * p.r_coef)
    bar, cross = beam_splitter(zero, one, p)
    assert np.allclose(bar.ex, -1j * p.r_coef)
    assert np.allclose(cross.ex, p.t_coef)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False,
                                   allow_infinity=False),
                min_size=1, max_size=16),
       st.floats(min_value=0.05, max_value=0.95))
def test_beam_splitter_conserves_power(vals, t_sq):
    n = len(vals)
    in0 = OpticalField(1e10, CARRIER, np.asarray(vals), np.zeros(n, complex))
    in1 = OpticalField(1e10, CARRIER, np.asarray(vals[::-1]) * 1j,
                       np.zeros(n, complex))
    p = DLIParams(t_coef=math.sqrt(t_sq), r_coef=math.sqrt(1.0 - t_sq),
                  insertion_loss=0.0)
    bar, cross = beam_splitter(in0, in1, p)
    p_in = np.abs(in0.ex) ** 2 + np.abs(in1.ex) ** 2
    p_out = np.abs(bar.ex) ** 2 + np.abs(cross.ex) ** 2
    assert np.allclose(p_out, p_in, rtol=1e-12, atol=1e-12)


def test_beam_splitter_grid_mismatch_raises():
    a = OpticalField(1e10, CARRIER, np.ones(4, complex), np.zeros(4, complex))
    b = OpticalField(2e10, CARRIER, np.ones(4, complex), np.zeros(4, complex))
    with pytest.raises(ValueError):
        beam_splitter(a, b, lossless_dli())


# -------------------------------------------------------------------- DLI

def test_dli_rejects_fractional_sample_delay():
    with pytest.raises(ValueError, match="whole number"):
        DelayLineInterferometer(DLIParams(delay=1.03e-9), 1.6e10)


def test_dli_rejects_non_unitary_splitter():
    with pytest.raises(ValueError, match="unitary"):
        DLIParams(t_coef=0.8, r_coef=0.8)


def test_dli_free_spectral_range():
    assert math.isclose(DLIParams(delay=1e-9).free_spectral_range, 1e9,
                        rel_tol=1e-12)


def test_dli_equal_phases_route_to_port_a():
    w = PulseWindowing(rep_rate=1e9, samples_per_pulse=16)
    train = phase_train(np.zeros(12), w, peak_power=1e-3)
    a, b = dli_transform(train, lossless_dli())
    ea = pulse_energies(a, w)
    eb = pulse_energies(b, w)
    # Identical adjacent pulses cancel on port b in every slot after the
    # cold first one, and port a keeps the full input energy.
    assert np.all(eb[1:] < 1e-25 * ea[1:])
    e_in = pulse_energies(train, w)
    assert np.allclose(ea[1:-1], e_in[1:-1], rtol=1e-3)


def test_dli_opposite_phases_route_to_port_b():
    w = PulseWindowing(rep_rate=1e9, samples_per_pulse=16)
    train = phase_train(np.pi * (np.arange(12) % 2), w, peak_power=1e-3)
    a, b = dli_transform(train, lossless_dli())
    ea = pulse_energies(a, w)
    eb = pulse_energies(b, w)
    assert np.all(ea[1:] < 1e-25 * eb[1:])


def test_dli_phase_offset_pi_swaps_ports():
    w = PulseWindowing(rep_rate=1e9, samples_per_pulse=16)
    train = phase_train(np.zeros(12), w, peak_power=1e-3)
    a, b = dli_transform(train, lossless_dli(phase_offset=math.pi))
    ea = pulse_energies(a, w)
    eb = pulse_energies(b, w)
    assert np.all(ea[1:] < 1e-25 * eb[1:])


def test_dli_conserves_power_pointwise():
    w = PulseWindowing(rep_rate=1e9, samples_per_pulse=16)
    rng = np.random.default_rng(3)
    train = phase_train(rng.uniform(0, 2 * np.pi, size=10), w, peak_power=1e-3)
    p = lossless_dli(phase_offset=0.7)
    a, b = dli_transform(train, p)
    d = 16
    delayed = np.concatenate([np.zeros(d, complex), train.ex])[:train.n_samples]
    expect = (p.t_coef ** 2 * np.abs(train.ex) ** 2
              + p.r_coef ** 2 * np.abs(delayed) ** 2)
    got = np.abs(a.ex) ** 2 + np.abs(b.ex) ** 2
    assert np.allclose(got, expect, rtol=1e-12, atol=1e-30)


def test_dli_insertion_loss_scales_both_ports():
    w = PulseWindowing(rep_rate=1e9, samples_per_pulse=16)
    train = phase_train(np.zeros(6), w, peak_power=1e-3)
    a0, b0 = dli_transform(train, lossless_dli())
    a1, b1 = dli_transform(train, DLIParams(insertion_loss=2.0))
    scale = 10.0 ** (-2.0 / 20.0)
    assert np.allclose(a1.ex, a0.ex * scale)
    assert np.allclose(b1.ex, b0.ex * scale)


def test_dli_streaming_matches_single_block():
    w = PulseWindowing(rep_rate=1e9, samples_per_pulse=16)
    rng = np.random.default_rng(11)
    train = phase_train(rng.uniform(0, 2 * np.pi, size=24), w, peak_power=1e-3)
    whole_a, whole_b = dli_transform(train, lossless_dli(phase_offset=0.4))

    dli = DelayLineInterferometer(lossless_dli(phase_offset=0.4), w.sample_rate)
    parts_a, parts_b = [], []
    n = train.n_samples
    for lo, hi in ((0, 100), (100, 260), (260, n)):
        blk = OpticalField(w.sample_rate, CARRIER, train.ex[lo:hi],
                           train.ey[lo:hi], lo / w.sample_rate)
        a, b = dli.transform(blk)
        parts_a.append(a.ex)
        parts_b.append(b.ex)
    assert np.array_equal(np.concatenate(parts_a), whole_a.ex)
    assert np.array_equal(np.concatenate(parts_b), whole_b.ex)


# ------------------------------------------------------ click probability

def test_click_probability_zero_without_stimulus():
    p = SPADParams(p_dark=0.0, n_bg=0.0, p0=0.0)
    val, comps = spad_click_probability(0.0, None, p)
    assert val == 0.0
    assert comps["photon"] == 0.0


def test_click_probability_photon_term():
    p = SPADParams(eta=0.25, p_dark=0.0, n_bg=0.0, p0=0.0)
    val, _ = spad_click_probability(0.8, None, p)
    assert math.isclose(val, 1.0 - math.exp(-0.25 * 0.8), rel_tol=1e-12)


def test_click_probability_afterpulse_decay():
    p = SPADParams(p0=0.0317, a_coef=0.00115)
    _, c0 = spad_click_probability(0.0, 0, p)
    assert c0["afterpulse"] == 0.0317
    _, c100 = spad_click_probability(0.0, 100, p)
    assert math.isclose(c100["afterpulse"],
                        0.0317 * math.exp(-0.115), rel_tol=1e-12)
    assert c100["afterpulse"] < c0["afterpulse"]


def test_click_probability_saturates_at_one():
    p = SPADParams(eta=1.0, p_dark=0.5, p0=0.5)
    val, _ = spad_click_probability(1e6, 0, p)
    assert val == 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.0, max_value=5.0),
       st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.0, max_value=1.0),
       st.integers(min_value=0, max_value=1000))
def test_click_probability_is_complement_of_no_trigger(mu, p_dark, p0, n):
    p = SPADParams(eta=0.3, p_dark=p_dark, p0=p0, a_coef=0.01, n_bg=0.0)
    val, c = spad_click_probability(mu, n, p)
    direct = 1.0 - (1.0 - c["photon"]) * (1.0 - c["afterpulse"]) * (1.0 - p_dark)
    assert math.isclose(val, direct, rel_tol=1e-12, abs_tol=1e-12)


def test_click_probability_rejects_bad_args():
    p = SPADParams()
    with pytest.raises(ValueError):
        spad_click_probability(-0.1, None, p)
    with pytest.raises(ValueError):
        spad_click_probability(0.1, -1, p)


# ---------------------------------------------------------------- detector

def ideal_spad(**kw):
    base = dict(eta=1.0, p_dark=0.0, p0=0.0, a_coef=0.0, deadtime=0.0,
                jitter_sigma=0.0, n_bg=0.0)
    base.update(kw)
    return SPADParams(**base)


def test_detector_click_fraction_matches_probability():
    n = 200_000
    mu = 0.1
    p_click = 1.0 - math.exp(-mu)
    events = spad_detect(np.full(n, mu), ideal_spad(),
                         RandomStream(77), 1e-9)
    sigma = math.sqrt(n * p_click * (1 - p_click))
    assert abs(len(events) - n * p_click) < 3 * sigma
    assert all(e.cause == CAUSE_PHOTON for e in events)


def test_detector_deadtime_enforces_minimum_spacing():
    p = ideal_spad(eta=0.0, p_dark=0.4, deadtime=3.5e-9)
    det = SpadDetector(p, RandomStream(5), 1e-9)
    assert det.dead_slots == 4
    events = det.detect(np.zeros(20_000))
    slots = np.array([e.pulse_index for e in events])
    assert len(slots) > 100
    assert np.diff(slots).min() >= 4


def test_detector_deadtime_state_crosses_blocks():
    # A certain click every slot plus a 4-slot deadtime yields a strict
    # 0, 4, 8, ... comb regardless of block boundaries.
    p = ideal_spad(eta=0.0, p_dark=1.0, deadtime=4e-9)
    det = SpadDetector(p, RandomStream(1), 1e-9)
    slots = [e.pulse_index for e in det.detect(np.zeros(6))]
    slots += [e.pulse_index for e in det.detect(np.zeros(6), start_slot=6)]
    assert slots == [0, 4, 8]


def test_detector_afterpulses_follow_clicks():
    p = SPADParams(eta=0.0, p_dark=0.02, p0=0.5, a_coef=0.5,
                   deadtime=1e-9, jitter_sigma=0.0, n_bg=0.0)
    det = SpadDetector(p, RandomStream(21), 1e-9)
    events = det.detect(np.zeros(50_000))
    kinds = {e.cause for e in events}
    assert CAUSE_AFTERPULSE in kinds and CAUSE_DARK in kinds
    first = events[0]
    assert first.cause == CAUSE_DARK  # nothing to afterpulse from
    slots = [e.pulse_index for e in events]
    assert slots == sorted(slots)


def test_detector_timestamps_sit_mid_slot_with_jitter():
    sigma = 5e-11
    p = ideal_spad(jitter_sigma=sigma)
    events = spad_detect(np.full(40_000, math.log(2.0)), p,
                         RandomStream(9), 1e-9)
    resid = np.array([e.timestamp - (e.pulse_index + 0.5) * 1e-9
                      for e in events])
    assert len(resid) > 15_000
    assert abs(resid.mean()) < 5 * sigma / math.sqrt(len(resid))
    assert abs(resid.std() - sigma) < 0.1 * sigma


def test_detector_paths_agree_exactly_when_noise_free():
    mu = np.full(5_000, 0.3)
    fast = spad_detect(mu, ideal_spad(), RandomStream(13), 1e-9)
    # A vanishing deadtime forces the sequential path but blocks nothing.
    slow = spad_detect(mu, ideal_spad(deadtime=1e-12), RandomStream(13), 1e-9)
    assert fast == slow


def test_detector_paths_agree_on_slots_with_noise():
    mu = np.full(5_000, 0.3)
    noisy = dict(p_dark=0.01, jitter_sigma=5e-11)
    fast = spad_detect(mu, ideal_spad(**noisy), RandomStream(13), 1e-9)
    slow = spad_detect(mu, ideal_spad(deadtime=1e-12, **noisy),
                       RandomStream(13), 1e-9)
    assert [e.pulse_index for e in fast] == [e.pulse_index for e in slow]


def test_detector_start_slot_offsets_indices_and_times():
    p = ideal_spad(eta=0.0, p_dark=1.0)
    events = spad_detect(np.zeros(3), p, RandomStream(2), 1e-9)
    det = SpadDetector(p, RandomStream(2), 1e-9, name="D2")
    shifted = det.detect(np.zeros(3), start_slot=100)
    assert [e.pulse_index for e in shifted] == [100, 101, 102]
    assert shifted[0].detector == "D2"
    assert math.isclose(shifted[0].timestamp, 100.5e-9, rel_tol=1e-12)
    assert [e.pulse_index for e in events] == [0, 1, 2]


def test_detector_rejects_negative_mu_and_handles_empty():
    det = SpadDetector(ideal_spad(), RandomStream(1), 1e-9)
    assert det.detect(np.array([])) == []
    with pytest.raises(ValueError):
        det.detect(np.array([-0.1]))


def test_spad_params_validation():
    with pytest.raises(ValueError):
        SPADParams(eta=1.5)
    with pytest.raises(ValueError):
        SPADParams(p_dark=-0.1)
    with pytest.raises(ValueError):
        SPADParams(deadtime=-1.0)
