"""YAML run configuration: parsing, validation, overrides and sweeps.

A configuration file has one section per pipeline stage plus a ``run``
section for grid and protocol settings, and an optional ``sweep`` section
naming one dotted parameter and the values to scan.  Every key maps to a
field of the matching parameter dataclass; unknown sections or keys are
rejected by name so typos fail loudly instead of silently running with
defaults.
"""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from pathlib import Path

import yaml

from .fiber import FiberParams
from .laser import LaserParams
from .modulators import IMParams, PMParams, PolarizerParams, VOAParams
from .receiver import DLIParams, SPADParams

__all__ = [
    "ConfigError",
    "RunSettings",
    "SweepSpec",
    "RunConfig",
    "parse_config",
    "load_config",
    "apply_overrides",
    "expand_sweep",
    "default_config_yaml",
    "config_sha256",
]


class ConfigError(ValueError):
    """Invalid configuration content; the message names section.key."""


@dataclass(frozen=True)
class RunSettings:
    """Grid and protocol settings.

    Attributes:
        n_pulses: pulses to transmit.
        rep_rate: pulse repetition rate, Hz.
        samples_per_pulse: field samples per pulse period.
        seed: root seed for all random streams.
        block_pulses: pulses processed per streaming block.
        sample_fraction: fraction of the sifted key disclosed for the
            error-rate estimate.
        out_dir: default artifact directory for the CLI.
    """

    n_pulses: int = 100_000
    rep_rate: float = 1.0e9
    samples_per_pulse: int = 16
    seed: int = 12345
    block_pulses: int = 8192
    sample_fraction: float = 0.1
    out_dir: str = "out"

    def __post_init__(self) -> None:
        if self.n_pulses < 2:
            raise ValueError("run.n_pulses must be >= 2")
        if not self.rep_rate > 0:
            raise ValueError("run.rep_rate must be > 0")
        if self.samples_per_pulse < 4:
            raise ValueError("run.samples_per_pulse must be >= 4")
        if self.seed < 0:
            raise ValueError("run.seed must be >= 0")
        if self.block_pulses < 1:
            raise ValueError("run.block_pulses must be >= 1")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ValueError("run.sample_fraction must lie in (0, 1]")
        if not self.out_dir:
            raise ValueError("run.out_dir must not be empty")


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter scan: dotted ``section.key`` and the values to try."""

    parameter: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("sweep.values must not be empty")


_SECTIONS = {
    "run": RunSettings,
    "laser": LaserParams,
    "polarizer": PolarizerParams,
    "im": IMParams,
    "pm": PMParams,
    "voa": VOAParams,
    "fiber": FiberParams,
    "dli": DLIParams,
    "spad": SPADParams,
}


@dataclass(frozen=True)
class RunConfig:
    """Complete simulation configuration."""

    run: RunSettings = dataclasses.field(default_factory=RunSettings)
    laser: LaserParams = dataclasses.field(default_factory=LaserParams)
    polarizer: PolarizerParams = dataclasses.field(default_factory=PolarizerParams)
    im: IMParams = dataclasses.field(default_factory=IMParams)
    pm: PMParams = dataclasses.field(default_factory=PMParams)
    voa: VOAParams = dataclasses.field(default_factory=VOAParams)
    fiber: FiberParams = dataclasses.field(default_factory=FiberParams)
    dli: DLIParams = dataclasses.field(default_factory=DLIParams)
    spad: SPADParams = dataclasses.field(default_factory=SPADParams)
    sweep: SweepSpec | None = None


def _field_map(cls) -> dict[str, dataclasses.Field]:
    return {f.name: f for f in dataclasses.fields(cls)}

_INT_FIELDS = {
    "run.n_pulses", "run.samples_per_pulse", "run.seed", "run.block_pulses",
    "voa.warmup_pulses", "fiber.nfft",
}
_OPTIONAL_FIELDS = {"voa.attenuation", "voa.target_mpn", "fiber.dz"}
_STR_FIELDS = {"run.out_dir"}


def _coerce(section: str, key: str, value):
    """Check and convert one YAML scalar for a dataclass field."""
    dotted = f"{section}.{key}"
    if dotted in _STR_FIELDS:
        if not isinstance(value, str):
            raise ConfigError(f"{dotted} must be a string")
        return value
    if value is None:
        if dotted in _OPTIONAL_FIELDS:
            return None
        raise ConfigError(f"{dotted} must be a number, got null")
    if isinstance(value, bool):
        raise ConfigError(f"{dotted} must be a number, got a boolean")
    if isinstance(value, str):
        # YAML 1.1 resolvers read exponents without a sign ("1.0e9") as
        # strings; accept anything float() does.
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(
                f"{dotted} must be a number, got {value!r}") from None
    if not isinstance(value, (int, float)):
        raise ConfigError(
            f"{dotted} must be a number, got {type(value).__name__}")
    if dotted in _INT_FIELDS:
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"{dotted} must be an integer")
            value = int(value)
        return int(value)
    return float(value)


def _build_section(section: str, mapping) -> object:
    cls = _SECTIONS[section]
    if mapping is None:
        mapping = {}
    if not isinstance(mapping, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    fields = _field_map(cls)
    kwargs = {}
    for key, value in mapping.items():
        if key not in fields:
            raise ConfigError(f"unknown key {section}.{key}")
        kwargs[key] = _coerce(section, key, value)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_sweep(mapping) -> SweepSpec:
    if not isinstance(mapping, dict):
        raise ConfigError("section 'sweep' must be a mapping")
    extra = set(mapping) - {"parameter", "values"}
    if extra:
        raise ConfigError(f"unknown key sweep.{sorted(extra)[0]}")
    if "parameter" not in mapping or "values" not in mapping:
        raise ConfigError("sweep needs both 'parameter' and 'values'")
    param = mapping["parameter"]
    if not isinstance(param, str):
        raise ConfigError("sweep.parameter must be a dotted 'section.key'")
    _resolve_parameter(param)
    raw = mapping["values"]
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError("sweep.values must be a non-empty list of numbers")
    values = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError("sweep.values must be a non-empty list of numbers")
        values.append(float(v))
    return SweepSpec(param, tuple(values))


def _resolve_parameter(dotted: str) -> tuple[str, str]:
    """Split and validate a dotted parameter path."""
    parts = dotted.split(".")
    if len(parts) != 2:
        raise ConfigError(
            f"parameter {dotted!r} must have the form 'section.key'")
    section, key = parts
    if section not in _SECTIONS:
        raise ConfigError(f"unknown section {section!r} in {dotted!r}")
    if key not in _field_map(_SECTIONS[section]):
        raise ConfigError(f"unknown key {dotted}")
    return section, key


def _cross_validate(cfg: RunConfig) -> RunConfig:
    if abs(cfg.im.rep_rate - cfg.run.rep_rate) > 1e-6 * cfg.run.rep_rate:
        raise ConfigError(
            "im.rep_rate must equal run.rep_rate "
            f"({cfg.im.rep_rate:g} vs {cfg.run.rep_rate:g})")
    d = cfg.dli.delay * cfg.run.rep_rate
    if abs(d - 1.0) > 1e-9:
        raise ConfigError(
            "dli.delay must equal one pulse period "
            f"(delay covers {d:g} periods)")
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse a YAML document into a validated RunConfig.

    Raises:
        ConfigError: on malformed YAML, unknown sections or keys, wrong
            value types, or out-of-range values; messages name the
            offending ``section.key``.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping of sections")
    unknown = set(doc) - set(_SECTIONS) - {"sweep"}
    if unknown:
        raise ConfigError(f"unknown section {sorted(unknown)[0]!r}")
    kwargs = {name: _build_section(name, doc.get(name)) for name in _SECTIONS}
    if "sweep" in doc and doc["sweep"] is not None:
        kwargs["sweep"] = _build_sweep(doc["sweep"])
    return _cross_validate(RunConfig(**kwargs))


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a YAML configuration file."""
    return parse_config(Path(path).read_text())


def config_sha256(text: str | bytes) -> str:
    """Hex digest of the raw configuration document."""
    if isinstance(text, str):
        text = text.encode()
    return hashlib.sha256(text).hexdigest()


def apply_overrides(cfg: RunConfig, overrides: dict[str, object]) -> RunConfig:
    """Return a config with dotted-key overrides applied.

    String values are parsed as YAML scalars, so "1e6", "0.5" and "null"
    all do what they look like.
    """
    staged: dict[str, dict[str, object]] = {}
    for dotted, value in overrides.items():
        section, key = _resolve_parameter(dotted)
        if isinstance(value, str):
            try:
                value = yaml.safe_load(value)
            except yaml.YAMLError as exc:
                raise ConfigError(
                    f"cannot parse value for {dotted}: {exc}") from exc
        staged.setdefault(section, {})[key] = _coerce(section, key, value)
    new_sections = {}
    for section, fields in staged.items():
        current = getattr(cfg, section)
        try:
            new_sections[section] = dataclasses.replace(current, **fields)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return _cross_validate(dataclasses.replace(cfg, **new_sections))


def expand_sweep(cfg: RunConfig) -> list[tuple[float, RunConfig]]:
    """Materialize the sweep into (value, point-config) pairs.

    Each point drops the sweep section and carries the swept value in its
    own parameter slot.

    Raises:
        ConfigError: if the configuration has no sweep section.
    """
    if cfg.sweep is None:
        raise ConfigError("configuration has no sweep section")
    base = dataclasses.replace(cfg, sweep=None)
    return [(v, apply_overrides(base, {cfg.sweep.parameter: v}))
            for v in cfg.sweep.values]


def default_config_yaml() -> str:
    """Annotated template with every parameter at its default."""
    return """\
# Differential-phase-shift key distribution simulation -- all knobs.
# Values shown are the defaults; delete anything you do not change.

run:
  n_pulses: 100000          # pulses per run
  rep_rate: 1.0e9           # pulse repetition rate, Hz
  samples_per_pulse: 16     # field samples per pulse period
  seed: 12345               # root seed for every random stream
  block_pulses: 8192        # streaming block size, pulses
  sample_fraction: 0.1      # sifted-key fraction disclosed for QBER estimate
  out_dir: out              # default artifact directory

laser:
  gamma: 0.3                # optical confinement factor
  g0: 2.1e-12               # differential gain, m^3/s
  n0: 1.0e24                # transparency carrier density, 1/m^3
  eps_c: 1.0e-23            # gain compression, m^3
  tau_p: 1.6e-12            # photon lifetime, s
  beta_sp: 1.0e-4           # spontaneous-emission coupling
  tau_n: 2.0e-9             # carrier lifetime, s
  v_a: 1.0e-16              # active volume, m^3
  eta0: 0.3                 # output efficiency
  lambda0: 1550.0e-9        # wavelength at t_ref, m
  linewidth: 1.0e5          # Lorentzian FWHM, Hz
  rin: -145.0               # relative intensity noise, dB/Hz (-.inf disables)
  sys_bandwidth: 1.0e10     # RIN integration bandwidth, Hz
  sigma_i: 0.0              # rms injection-current jitter, A
  t_ref: 298.15             # reference temperature, K
  t_set: 298.15             # operating temperature, K
  dlambda_dt: 1.0e-10       # wavelength shift, m/K
  phi0: 0.0                 # initial optical phase, rad
  bias_current: 0.040       # CW bias current, A

polarizer:
  insertion_loss: 0.3       # dB
  per: 30.0                 # polarization extinction ratio, dB (.inf ideal)

im:                         # intensity modulator carving the pulse train
  v_pi: 3.5                 # half-wave voltage, V
  v_dc: 0.0                 # bias (bright-point) voltage, V
  insertion_loss: 3.0       # dB
  target_er: 20.0           # pulse extinction ratio, dB (.inf ideal)
  fwhm: 3.0e-10             # carved pulse width, s
  rep_rate: 1.0e9           # must equal run.rep_rate

pm:                         # phase modulator encoding the key
  v_pi: 3.5                 # half-wave voltage, V
  bias_drift: 0.0           # static drive offset, V
  insertion_loss: 2.0       # dB

voa:                        # exactly one of attenuation / target_mpn;
                            # set the unused mode to null
  attenuation: null         # fixed attenuation, dB
  target_mpn: 0.2           # mean photon number per pulse to close to
  warmup_pulses: 1000       # pulses measured before fixing the attenuation

fiber:
  length: 25.0              # km
  alpha: 0.2                # dB/km
  beta2: -2.17e-23          # s^2/km
  beta3: 1.2e-37            # s^3/km
  dgd: 5.0e-13              # total differential group delay, s
  gamma_nl: 1.3             # Kerr coefficient, 1/(W km)
  dz: null                  # split-step segment, km (null = auto)
  nfft: 0                   # FFT size, power of two (0 = auto)
  nl_phase_threshold: 1.0e-6  # rad; below this, one linear pass

dli:                        # delay-line interferometer
  delay: 1.0e-9             # arm delay, s; one pulse period
  t_coef: 0.7071067811865476  # splitter transmission amplitude
  r_coef: 0.7071067811865476  # splitter reflection amplitude
  insertion_loss: 2.0       # dB
  phase_offset: 0.0         # extra phase on the delayed arm, rad

spad:
  eta: 0.2                  # detection efficiency
  p_dark: 1.0e-6            # dark-count probability per slot
  p0: 0.0317                # afterpulse probability right after a click
  a_coef: 0.00115           # afterpulse decay per elapsed slot
  deadtime: 1.0e-5          # s
  jitter_sigma: 5.0e-11     # rms timestamp jitter, s
  n_bg: 1.0e-6              # mean background photons per slot

# Optional scan over one parameter:
# sweep:
#   parameter: laser.linewidth
#   values: [1.0e4, 1.0e5, 1.0e6, 1.0e7]
"""
