"""Polarizer, Mach-Zehnder intensity modulator, phase modulator, VOA."""
import math

import numpy as np
import pytest

from dpssim import (IMParams, OpticalField, PMParams, PolarizerParams,
                    PulseWindowing, VOAParams, im_general, im_operating_points,
                    im_pushpull, mean_photon_number, phase_modulate, polarize,
                    pulse_energies, synthesize_rf_drive, voa_apply,
                    voa_solve_attenuation)

from conftest import CARRIER, phase_train


def flat_field(n=256, fs=1.6e10, ex=1.0, ey=0.0):
    return OpticalField(fs, CARRIER,
                        np.full(n, ex, dtype=complex),
                        np.full(n, ey, dtype=complex))


# ---------------------------------------------------------------- polarizer

def test_polarize_extinction_and_loss():
    f = polarize(flat_field(ex=1.0, ey=1.0),
                 PolarizerParams(insertion_loss=0.3, per=30.0))
    a = 10.0 ** (-0.3 / 20.0)
    assert np.allclose(np.abs(f.ex), a)
    assert np.allclose(np.abs(f.ey), a * 10.0 ** (-30.0 / 20.0))


def test_polarize_infinite_per_kills_y():
    f = polarize(flat_field(ex=1.0, ey=1.0),
                 PolarizerParams(insertion_loss=0.0, per=float("inf")))
    assert np.allclose(f.ex, 1.0)
    assert np.all(f.ey == 0.0)


def test_polarizer_rejects_negative_loss():
    with pytest.raises(ValueError):
        PolarizerParams(insertion_loss=-0.1)


# ----------------------------------------------------- intensity modulator

def test_im_general_common_mode_is_pure_phase():
    p = IMParams(insertion_loss=0.0)
    f = im_general(flat_field(), 0.7, 0.7, p)
    assert np.allclose(f.ex, np.exp(0.7j))


def test_im_general_differential_mode_is_cosine():
    p = IMParams(insertion_loss=0.0)
    f = im_general(flat_field(), 0.4, -0.4, p)
    assert np.allclose(f.ex, math.cos(0.4))


def test_im_pushpull_matches_general():
    p = IMParams(insertion_loss=0.0)
    v = np.linspace(-2.0, 2.0, 256)
    phi = np.pi * v / p.v_pi
    a = im_pushpull(flat_field(), v, p)
    b = im_general(flat_field(), phi, -phi, p)
    assert np.allclose(a.ex, b.ex)


def test_im_pushpull_landmarks():
    p = IMParams(insertion_loss=0.0)
    assert np.allclose(im_pushpull(flat_field(), 0.0, p).ex, 1.0)
    assert np.allclose(im_pushpull(flat_field(), p.v_pi / 2, p).ex, 0.0,
                       atol=1e-15)
    assert np.allclose(im_pushpull(flat_field(), p.v_pi, p).ex, -1.0)


def test_im_pushpull_insertion_loss_scales_power():
    p = IMParams(insertion_loss=3.0)
    f = im_pushpull(flat_field(), 0.0, p)
    assert np.allclose(np.abs(f.ex) ** 2, 10.0 ** -0.3)


def test_im_drive_length_mismatch_raises():
    p = IMParams()
    with pytest.raises(ValueError):
        im_pushpull(flat_field(n=256), np.zeros(255), p)


def test_im_operating_points_hit_target_er():
    p = IMParams(target_er=20.0, v_dc=0.3)
    v1, v0 = im_operating_points(p)
    assert v1 == p.v_dc
    ratio = (math.cos(math.pi * v1 / p.v_pi) ** 2
             / math.cos(math.pi * v0 / p.v_pi) ** 2)
    assert math.isclose(10.0 * math.log10(ratio), 20.0, rel_tol=1e-12)


def test_im_operating_points_infinite_er_uses_null():
    p = IMParams(target_er=float("inf"))
    v1, v0 = im_operating_points(p)
    assert v1 == 0.0
    assert math.isclose(v0, p.v_pi / 2, rel_tol=1e-15)
    assert abs(math.cos(math.pi * v0 / p.v_pi)) < 1e-15


def test_im_operating_points_er_below_half_power_raises():
    with pytest.raises(ValueError):
        im_operating_points(IMParams(target_er=2.0))


def test_synthesize_rf_drive_meets_er_and_fwhm():
    p = IMParams(insertion_loss=0.0, target_er=20.0, fwhm=3.0e-10,
                 rep_rate=1.0e9)
    w = PulseWindowing(rep_rate=1.0e9, samples_per_pulse=64)
    drive = synthesize_rf_drive(p, w)
    assert drive.shape == (64,)
    power = np.cos(np.pi * drive / p.v_pi) ** 2
    er = 10.0 * math.log10(power.max() / power.min())
    assert math.isclose(er, 20.0, rel_tol=1e-9)
    from dpssim import pulse_fwhm
    assert abs(pulse_fwhm(power, 1.0 / w.sample_rate) - 3.0e-10) < 0.05 * 3.0e-10


def test_synthesize_rf_drive_rep_rate_mismatch_raises():
    p = IMParams(rep_rate=1.0e9)
    w = PulseWindowing(rep_rate=2.0e9, samples_per_pulse=64)
    with pytest.raises(ValueError):
        synthesize_rf_drive(p, w)


def test_synthesize_rf_drive_fwhm_too_wide_raises():
    p = IMParams(target_er=20.0, fwhm=9.0e-10, rep_rate=1.0e9)
    w = PulseWindowing(rep_rate=1.0e9, samples_per_pulse=64)
    with pytest.raises(ValueError):
        synthesize_rf_drive(p, w)


def test_im_params_validation():
    with pytest.raises(ValueError):
        IMParams(v_pi=-1.0)
    with pytest.raises(ValueError):
        IMParams(v_dc=3.0)  # >= v_pi / 2
    with pytest.raises(ValueError):
        IMParams(fwhm=2.0e-9, rep_rate=1.0e9)  # wider than the period


# --------------------------------------------------------- phase modulator

def test_phase_modulate_half_wave_flips_sign():
    p = PMParams(v_pi=3.5, insertion_loss=0.0)
    f = phase_modulate(flat_field(), p.v_pi, p)
    assert np.allclose(f.ex, -1.0)


def test_phase_modulate_preserves_power():
    p = PMParams(insertion_loss=0.0)
    v = np.linspace(-5.0, 5.0, 256)
    f = phase_modulate(flat_field(), v, p)
    assert np.allclose(np.abs(f.ex), 1.0)


def test_phase_modulate_bias_drift_offsets_phase():
    p = PMParams(v_pi=3.5, bias_drift=3.5 / 2, insertion_loss=0.0)
    f = phase_modulate(flat_field(), 0.0, p)
    assert np.allclose(f.ex, 1j)


def test_phase_modulate_insertion_loss():
    p = PMParams(insertion_loss=2.0)
    f = phase_modulate(flat_field(), 0.0, p)
    assert np.allclose(np.abs(f.ex) ** 2, 10.0 ** -0.2)


# --------------------------------------------------------------------- VOA

def test_voa_target_mode_closes_exactly():
    w = PulseWindowing(rep_rate=1.0e9, samples_per_pulse=32)
    train = phase_train(np.zeros(64), w, peak_power=1e-3)
    p = VOAParams(target_mpn=0.2)
    out = voa_apply(train, p, w)
    mu = mean_photon_number(float(np.mean(pulse_energies(out, w))),
                            out.carrier_frequency)
    assert math.isclose(mu, 0.2, rel_tol=1e-9)


def test_voa_fixed_mode_scales_power():
    w = PulseWindowing(rep_rate=1.0e9, samples_per_pulse=32)
    train = phase_train(np.zeros(8), w, peak_power=1e-3)
    p = VOAParams(attenuation=7.0, target_mpn=None)
    assert voa_solve_attenuation(train, p, w) == 7.0
    out = voa_apply(train, p, w)
    assert np.allclose(np.abs(out.ex) ** 2,
                       np.abs(train.ex) ** 2 * 10.0 ** -0.7)


def test_voa_target_above_input_raises():
    w = PulseWindowing(rep_rate=1.0e9, samples_per_pulse=32)
    train = phase_train(np.zeros(8), w, peak_power=1e-12)
    p = VOAParams(target_mpn=1e9)
    with pytest.raises(ValueError):
        voa_solve_attenuation(train, p, w)


def test_voa_params_exactly_one_mode():
    with pytest.raises(ValueError):
        VOAParams(attenuation=5.0, target_mpn=0.2)
    with pytest.raises(ValueError):
        VOAParams(attenuation=None, target_mpn=None)
