"""Semiconductor laser model: rate equations, steady state, noisy CW output.

The carrier/photon dynamics follow the standard single-mode DFB rate
equations with gain compression and spontaneous-emission coupling:

    dN/dt = I/(e Va) - N/tau_n - g0 (N - N0) S / (1 + eps_c S)
    dS/dt = (Gamma g0 (N - N0) / (1 + eps_c S) - 1/tau_p) S
            + beta_sp Gamma N / tau_n

with N the carrier density (1/m^3) and S the photon density (1/m^3).
Output power maps from S through the cavity volume, output efficiency and
photon energy.  The emitted field carries three noise processes: relative
intensity noise (white, Gaussian), phase noise (Wiener walk giving a
Lorentzian line of the configured FWHM), and optional injection-current
jitter mapped through the small-signal steady-state response.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import h as PLANCK

from .field import OpticalField

__all__ = [
    "LaserParams",
    "rate_derivatives",
    "integrate",
    "steady_state",
    "threshold_current",
    "power_from_photon_density",
    "synthesize_field",
    "ContinuousWaveSource",
    "LaserError",
]


class LaserError(RuntimeError):
    """Raised when the laser model diverges or fails to converge."""


@dataclass(frozen=True)
class LaserParams:
    """Device parameters for the rate-equation laser model.

    Defaults describe a generic 1550 nm DFB diode biased well above
    threshold (threshold is around 16 mA with these numbers).

    Attributes:
        gamma: optical confinement factor.
        g0: differential gain coefficient, m^3/s.
        n0: carrier density at transparency, 1/m^3.
        eps_c: gain compression factor, m^3.
        tau_p: photon lifetime, s.
        beta_sp: spontaneous-emission coupling factor.
        tau_n: carrier lifetime, s.
        v_a: active-region volume, m^3.
        eta0: differential quantum (output) efficiency.
        lambda0: vacuum wavelength at the reference temperature, m.
        linewidth: spectral linewidth (Lorentzian FWHM), Hz.
        rin: relative intensity noise, dB/Hz.
        sys_bandwidth: bandwidth over which RIN is integrated, Hz.
        sigma_i: rms injection-current jitter per sample, A.
        t_ref: reference temperature, K.
        t_set: operating temperature, K.
        dlambda_dt: wavelength-temperature coefficient, m/K.
        phi0: initial optical phase, rad.
        bias_current: CW injection current, A.
        e_charge: elementary charge, C.
        planck: Planck constant, J s.
    """

    gamma: float = 0.3
    g0: float = 2.1e-12
    n0: float = 1.0e24
    eps_c: float = 1.0e-23
    tau_p: float = 1.6e-12
    beta_sp: float = 1.0e-4
    tau_n: float = 2.0e-9
    v_a: float = 1.0e-16
    eta0: float = 0.3
    lambda0: float = 1550e-9
    linewidth: float = 1.0e5
    rin: float = -145.0
    sys_bandwidth: float = 1.0e10
    sigma_i: float = 0.0
    t_ref: float = 298.15
    t_set: float = 298.15
    dlambda_dt: float = 0.1e-9
    phi0: float = 0.0
    bias_current: float = 0.040
    e_charge: float = ELEMENTARY_CHARGE
    planck: float = PLANCK

    def __post_init__(self) -> None:
        for name in ("gamma", "g0", "n0", "tau_p", "tau_n", "v_a", "eta0",
                     "lambda0", "e_charge", "planck"):
            if not getattr(self, name) > 0:
                raise ValueError(f"laser.{name} must be > 0")
        for name in ("eps_c", "beta_sp", "linewidth", "sys_bandwidth",
                     "sigma_i", "bias_current"):
            if getattr(self, name) < 0:
                raise ValueError(f"laser.{name} must be >= 0")
        if self.gamma > 1 or self.eta0 > 1 or self.beta_sp > 1:
            raise ValueError("laser.gamma, eta0 and beta_sp must be <= 1")

    @property
    def wavelength(self) -> float:
        """Operating wavelength including the temperature shift, m."""
        return self.lambda0 + self.dlambda_dt * (self.t_set - self.t_ref)

    @property
    def carrier_frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength

    @property
    def photon_energy(self) -> float:
        return self.planck * self.carrier_frequency


def rate_derivatives(n: float, s: float, current: float,
                     params: LaserParams):
    """Right-hand side (dN/dt, dS/dt) of the rate equations.

    Accepts scalars or numpy arrays for ``n``, ``s`` and ``current``.
    """
    p = params
    sat = 1.0 + p.eps_c * s
    stim = p.g0 * (n - p.n0) * s / sat
    dn = current / (p.e_charge * p.v_a) - n / p.tau_n - stim
    ds = (p.gamma * p.g0 * (n - p.n0) / sat - 1.0 / p.tau_p) * s \
        + p.beta_sp * p.gamma * n / p.tau_n
    return dn, ds


def threshold_current(params: LaserParams) -> float:
    """Approximate threshold current e Va N_th / tau_n, amperes."""
    n_th = params.n0 + 1.0 / (params.gamma * params.g0 * params.tau_p)
    return params.e_charge * params.v_a * n_th / params.tau_n


def integrate(params: LaserParams, current, dt: float,
              initial: tuple[float, float] = (0.0, 0.0)):
    """Fixed-step RK4 integration of the rate equations.

    The drive current is held constant over each step (zero-order hold on
    the ``current`` samples, one RK4 step per sample).

    Args:
        params: laser parameters.
        current: sequence of injection-current samples, A.
        dt: step size, s; must satisfy dt <= tau_p / 10.
        initial: starting (N, S).

    Returns:
        (n_traj, s_traj, n_clamped): trajectories of length len(current)+1
        including the initial state, and the count of negativity clamps.

    Raises:
        ValueError: on a step size violating the stability guard.
        LaserError: if the state becomes non-finite.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if dt > params.tau_p / 10.0:
        raise ValueError(
            f"dt={dt:g} too large; need dt <= tau_p/10 = {params.tau_p / 10.0:g}")
    cur = np.asarray(current, dtype=float)
    if cur.ndim != 1 or cur.size < 1:
        raise ValueError("current must be a non-empty 1-d sequence")

    p = params
    inv_ev = 1.0 / (p.e_charge * p.v_a)
    inv_tn = 1.0 / p.tau_n
    inv_tp = 1.0 / p.tau_p
    g0 = p.g0
    n0 = p.n0
    eps = p.eps_c
    gam = p.gamma
    bsp = p.beta_sp * p.gamma * inv_tn

    n, s = float(initial[0]), float(initial[1])
    steps = cur.size
    n_traj = np.empty(steps + 1)
    s_traj = np.empty(steps + 1)
    n_traj[0] = n
    s_traj[0] = s
    clamped = 0
    half = 0.5 * dt
    sixth = dt / 6.0
    cur_list = cur.tolist()

    for k in range(steps):
        pump = cur_list[k] * inv_ev

        sat = 1.0 + eps * s
        gn = g0 * (n - n0) / sat
        k1n = pump - n * inv_tn - gn * s
        k1s = (gam * gn - inv_tp) * s + bsp * n

        na = n + half * k1n
        sa = s + half * k1s
        sat = 1.0 + eps * sa
        gn = g0 * (na - n0) / sat
        k2n = pump - na * inv_tn - gn * sa
        k2s = (gam * gn - inv_tp) * sa + bsp * na

        na = n + half * k2n
        sa = s + half * k2s
        sat = 1.0 + eps * sa
        gn = g0 * (na - n0) / sat
        k3n = pump - na * inv_tn - gn * sa
        k3s = (gam * gn - inv_tp) * sa + bsp * na

        na = n + dt * k3n
        sa = s + dt * k3s
        sat = 1.0 + eps * sa
        gn = g0 * (na - n0) / sat
        k4n = pump - na * inv_tn - gn * sa
        k4s = (gam * gn - inv_tp) * sa + bsp * na

        n = n + sixth * (k1n + 2.0 * (k2n + k3n) + k4n)
        s = s + sixth * (k1s + 2.0 * (k2s + k3s) + k4s)
        if n < 0.0:
            n = 0.0
            clamped += 1
        if s < 0.0:
            s = 0.0
            clamped += 1
        if not (math.isfinite(n) and math.isfinite(s)):
            raise LaserError(f"rate equations diverged at step {k}")
        n_traj[k + 1] = n
        s_traj[k + 1] = s

    return n_traj, s_traj, clamped


def steady_state(params: LaserParams, current: float,
                 tol: float = 1e-12, max_iter: int = 200):
    """Equilibrium (N*, S*) of the rate equations by damped Newton iteration.

    Seeds from the standard below/above-threshold estimates and halves the
    Newton step until the residual decreases, keeping both densities
    non-negative.  Converges to a scaled residual below ``tol`` (residuals
    are measured against the natural rates N/tau_n and S/tau_p).

    Raises:
        LaserError: if the iteration fails to converge.
    """
    p = params
    i_th = threshold_current(p)
    n_th = p.n0 + 1.0 / (p.gamma * p.g0 * p.tau_p)

    # Heuristic seed: clamp carriers at threshold, photons from the excess
    # current, with a small spontaneous floor so the Jacobian is regular.
    n = min(current * p.tau_n / (p.e_charge * p.v_a), n_th)
    s = max((current - i_th) * p.gamma * p.tau_p / (p.e_charge * p.v_a), 0.0)
    s += p.beta_sp * p.gamma * max(n, p.n0 * 1e-6) * p.tau_p / p.tau_n

    def scaled_residual(n_, s_):
        dn, ds = rate_derivatives(n_, s_, current, p)
        n_scale = max(abs(current) / (p.e_charge * p.v_a), n_th / p.tau_n)
        s_scale = max(s_ / p.tau_p, p.beta_sp * p.gamma * n_th / p.tau_n)
        return math.hypot(dn / n_scale, ds / s_scale), dn, ds

    res, dn, ds = scaled_residual(n, s)
    for _ in range(max_iter):
        if res < tol:
            return n, s
        sat = 1.0 + p.eps_c * s
        # Jacobian of (dN/dt, dS/dt) wrt (N, S).
        j11 = -1.0 / p.tau_n - p.g0 * s / sat
        j12 = -p.g0 * (n - p.n0) / (sat * sat)
        j21 = p.gamma * p.g0 * s / sat + p.beta_sp * p.gamma / p.tau_n
        j22 = p.gamma * p.g0 * (n - p.n0) * (sat - p.eps_c * s) / (sat * sat) \
            - 1.0 / p.tau_p
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            raise LaserError("singular Jacobian in steady-state solve")
        step_n = -(j22 * dn - j12 * ds) / det
        step_s = -(-j21 * dn + j11 * ds) / det
        # Damped update: halve until the residual actually drops.
        lam = 1.0
        for _ in range(60):
            n_new = max(n + lam * step_n, 0.0)
            s_new = max(s + lam * step_s, 0.0)
            res_new, dn_new, ds_new = scaled_residual(n_new, s_new)
            if res_new < res or lam < 1e-12:
                break
            lam *= 0.5
        n, s, res, dn, ds = n_new, s_new, res_new, dn_new, ds_new
    if res < tol * 10:
        return n, s
    raise LaserError(f"steady-state solve did not converge (residual {res:g})")


def power_from_photon_density(s, params: LaserParams):
    """Optical output power P = S Va eta0 h nu / (2 Gamma tau_p), watts."""
    p = params
    return s * p.v_a * p.eta0 * p.photon_energy / (2.0 * p.gamma * p.tau_p)


def synthesize_field(power, params: LaserParams, rng, sample_rate: float,
                     t0: float = 0.0):
    """Turn a power waveform into a noisy x-polarized optical field.

    Noise applied per sample, in order: RIN (Gaussian, variance
    ``10^(rin/10) * sys_bandwidth * P^2``, clamped at zero power) and a
    Wiener phase walk with increment variance ``2 pi linewidth * dt``.
    The carrier frequency includes the temperature wavelength shift.

    Args:
        power: power samples in watts.
        params: laser parameters.
        rng: RandomStream for the noise draws.
        sample_rate: grid rate, samples/s.
        t0: block start time, s.

    Returns:
        (field, n_clamped): field with ey = 0, and the count of samples
        whose noisy power was clamped at zero.
    """
    p = np.asarray(power, dtype=float)
    if np.any(p < 0):
        raise ValueError("power must be >= 0")
    n = p.size
    clamped = 0

    rin_lin = 10.0 ** (params.rin / 10.0)
    sigma_coef = math.sqrt(rin_lin * params.sys_bandwidth)
    if sigma_coef > 0:
        noisy = p + rng.normal(n) * (sigma_coef * p)
        neg = noisy < 0
        clamped = int(np.count_nonzero(neg))
        noisy[neg] = 0.0
        p = noisy

    if params.linewidth > 0:
        incr = rng.normal(n) * math.sqrt(
            2.0 * math.pi * params.linewidth / sample_rate)
        incr[0] = 0.0  # walk starts at phi0
        phase = params.phi0 + np.cumsum(incr)
    else:
        phase = params.phi0

    ex = np.sqrt(p) * np.exp(1j * phase)
    fld = OpticalField(sample_rate, params.carrier_frequency,
                       ex, np.zeros(n, dtype=np.complex128), t0)
    return fld, clamped


class ContinuousWaveSource:
    """Streaming CW laser output at the configured bias current.

    For a constant drive the transient is irrelevant, so the operating
    point comes from the algebraic steady state; injection-current jitter
    is mapped through the small-signal slope dP/dI at that point (the
    quasi-static response, valid for jitter bandwidths well below the
    relaxation resonance).  Phase continues across emitted blocks so the
    Wiener walk has no seams.
    """

    def __init__(self, params: LaserParams, rng, sample_rate: float):
        self.params = params
        self.rng = rng
        self.sample_rate = sample_rate
        _, s0 = steady_state(params, params.bias_current)
        self.power = float(power_from_photon_density(s0, params))
        self._slope = 0.0
        if params.sigma_i > 0:
            di = max(params.bias_current * 1e-4, 1e-7)
            _, s_hi = steady_state(params, params.bias_current + di)
            _, s_lo = steady_state(params, max(params.bias_current - di, 0.0))
            self._slope = float(power_from_photon_density(
                (s_hi - s_lo) / (2.0 * di), params))
        self._phase = params.phi0
        self.clamped = 0

    @property
    def carrier_frequency(self) -> float:
        return self.params.carrier_frequency

    def emit(self, n_samples: int, t0: float = 0.0) -> OpticalField:
        """Next block of noisy CW field, n_samples long."""
        pars = self.params
        fs = self.sample_rate
        p = np.full(n_samples, self.power)

        if pars.sigma_i > 0:
            p = p + self._slope * (self.rng.normal(n_samples) * pars.sigma_i)

        sigma_coef = math.sqrt(10.0 ** (pars.rin / 10.0) * pars.sys_bandwidth)
        if sigma_coef > 0:
            p = p + self.rng.normal(n_samples) * (sigma_coef * p)
        neg = p < 0
        if np.any(neg):
            self.clamped += int(np.count_nonzero(neg))
            p = np.where(neg, 0.0, p)

        if pars.linewidth > 0:
            incr = self.rng.normal(n_samples) * math.sqrt(
                2.0 * math.pi * pars.linewidth / fs)
            phase = self._phase + np.cumsum(incr)
            self._phase = float(phase[-1])
            ex = np.sqrt(p) * np.exp(1j * phase)
        else:
            ex = np.sqrt(p) * complex(math.cos(self._phase),
                                      math.sin(self._phase))

        return OpticalField(fs, pars.carrier_frequency, ex,
                            np.zeros(n_samples, dtype=np.complex128), t0)
