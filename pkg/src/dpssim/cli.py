"""Command-line front end: configured runs, sweeps, artifact emission.

A run writes, into the output directory:

    metrics.jsonl     one JSON object per run (or per sweep point)
    events_d1.csv     time-tagged clicks of detector D1
    events_d2.csv     same for D2
    sifted_alice.txt  Alice's final key, one bit per character
    sifted_bob.txt    Bob's final key
    run_info.json     provenance: config hash, seed, versions, file list
    spectrum.csv      transmitter output spectrum (with --emit-spectrum)

Sweep points write the same set into point_NNN/ subdirectories plus a
merged metrics.jsonl at the top level.  Every artifact embeds the config
hash and the seed, and reruns with the same config and seed are
byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import spectrum
from .config import (ConfigError, RunConfig, SweepSpec, apply_overrides,
                     config_sha256, default_config_yaml, expand_sweep,
                     parse_config)
from .field import RandomStream
from .protocol import RunResult, alice_prepare, run_protocol

_SPECTRUM_PULSES = 1024
_SPECTRUM_NFFT = 4096


def _derive_seed(root_seed: int, index: int) -> int:
    """Stable per-sweep-point seed; never Python's process-local hash()."""
    digest = hashlib.sha256(f"{root_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _provenance(cfg_hash: str, seed: int) -> str:
    return f"# config_sha256={cfg_hash} seed={seed}"


def _write_events(path: Path, events, cfg_hash: str, seed: int) -> None:
    with path.open("w", newline="") as fp:
        fp.write(_provenance(cfg_hash, seed) + "\n")
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["pulse_index", "detector", "timestamp_s", "cause"])
        for e in events:
            writer.writerow([e.pulse_index, e.detector, repr(e.timestamp),
                             e.cause])


def _write_key(path: Path, bits: np.ndarray, cfg_hash: str, seed: int) -> None:
    with path.open("w") as fp:
        fp.write(_provenance(cfg_hash, seed) + "\n")
        fp.write("".join("1" if b else "0" for b in bits) + "\n")


def _metrics_record(result: RunResult, cfg_hash: str, seed: int,
                    sweep_parameter: str | None,
                    sweep_value: float | None) -> dict:
    rec = dataclasses.asdict(result.metrics)
    rec["config_sha256"] = cfg_hash
    rec["seed"] = seed
    if sweep_parameter is not None:
        rec["sweep_parameter"] = sweep_parameter
        rec["sweep_value"] = sweep_value
    return rec


def _write_spectrum(path: Path, cfg: RunConfig, seed: int,
                    cfg_hash: str) -> None:
    """Analyzer capture of the transmitter output, independent of the run."""
    rng = RandomStream(seed).substream("spectrum")
    n_pulses = max(_SPECTRUM_PULSES,
                   -(-_SPECTRUM_NFFT // cfg.run.samples_per_pulse))
    bits = (rng.substream("bits").uniform(n_pulses) < 0.5).astype(np.uint8)
    field, _ = alice_prepare(bits, cfg, rng.substream("laser"))
    spec = spectrum(field, _SPECTRUM_NFFT)
    with path.open("w", newline="") as fp:
        fp.write(_provenance(cfg_hash, seed) + "\n")
        fp.write("# two-sided PSD, W/Hz, offsets relative to the carrier; "
                 f"resolution_bw_hz={spec.resolution_bw!r}\n")
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["frequency_offset_hz", "psd"])
        for f, p in zip(spec.frequencies, spec.psd):
            writer.writerow([repr(float(f)), repr(float(p))])


def _execute_point(cfg: RunConfig, seed: int, out_dir: Path, cfg_hash: str,
                   emit_spectrum: bool, sweep_parameter: str | None = None,
                   sweep_value: float | None = None) -> dict:
    """Run one configuration and write its artifact set into out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_protocol(cfg, seed=seed)
    record = _metrics_record(result, cfg_hash, seed, sweep_parameter,
                             sweep_value)
    _write_events(out_dir / "events_d1.csv", result.events_d1, cfg_hash, seed)
    _write_events(out_dir / "events_d2.csv", result.events_d2, cfg_hash, seed)
    _write_key(out_dir / "sifted_alice.txt", result.final_key.alice_bits,
               cfg_hash, seed)
    _write_key(out_dir / "sifted_bob.txt", result.final_key.bob_bits,
               cfg_hash, seed)
    artifacts = ["events_d1.csv", "events_d2.csv", "sifted_alice.txt",
                 "sifted_bob.txt", "metrics.jsonl", "run_info.json"]
    if emit_spectrum:
        _write_spectrum(out_dir / "spectrum.csv", cfg, seed, cfg_hash)
        artifacts.append("spectrum.csv")
    (out_dir / "metrics.jsonl").write_text(
        json.dumps(record, sort_keys=True) + "\n")
    info = {
        "config_sha256": cfg_hash,
        "seed": seed,
        "n_pulses": cfg.run.n_pulses,
        "package_version": __version__,
        "sweep_parameter": sweep_parameter,
        "sweep_value": sweep_value,
        "artifacts": sorted(artifacts),
    }
    (out_dir / "run_info.json").write_text(
        json.dumps(info, sort_keys=True, indent=2) + "\n")
    return record


def _execute_point_packed(args) -> dict:
    return _execute_point(*args)


def _fmt(value, width=10, digits=5) -> str:
    if value is None:
        return "-".rjust(width)
    return f"{value:.{digits}g}".rjust(width)


def _print_summary(records: list[dict], sweep_parameter: str | None) -> None:
    head = f"{'point':>6} {'qber':>10} {'visibility':>10} " \
           f"{'sifted_rate':>11} {'leakage':>10}"
    if sweep_parameter:
        head = f"{sweep_parameter:>18} " + head
    print(head)
    for i, rec in enumerate(records):
        row = (f"{i:>6} {_fmt(rec['qber'])} {_fmt(rec['visibility'])} "
               f"{_fmt(rec['sifted_rate'], 11)} {_fmt(rec['leakage'])}")
        if sweep_parameter:
            row = f"{rec['sweep_value']:>18.6g} " + row
        print(row)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpssim",
        description="Differential-phase-shift key distribution simulator.")
    parser.add_argument("--config", metavar="PATH",
                        help="YAML configuration file (defaults used if absent)")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="override run.seed")
    parser.add_argument("--pulses", type=int, metavar="N",
                        help="override run.n_pulses")
    parser.add_argument("--sweep", metavar="KEY=V1,V2,...",
                        help="sweep one dotted parameter over listed values")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default from run.out_dir)")
    parser.add_argument("--emit-spectrum", action="store_true",
                        help="also write a transmitter spectrum capture")
    parser.add_argument("--emit-default-config", action="store_true",
                        help="print the annotated default config and exit")
    return parser


def _parse_sweep_flag(text: str) -> SweepSpec:
    if "=" not in text:
        raise ConfigError("--sweep must look like section.key=v1,v2,...")
    param, _, values = text.partition("=")
    try:
        parsed = tuple(float(v) for v in values.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"--sweep values must be numbers: {exc}") from exc
    if not parsed:
        raise ConfigError("--sweep needs at least one value")
    return SweepSpec(param.strip(), parsed)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.emit_default_config:
        sys.stdout.write(default_config_yaml())
        return 0
    try:
        text = (Path(args.config).read_text() if args.config
                else default_config_yaml())
        cfg_hash = config_sha256(text)
        cfg = parse_config(text)
        overrides: dict[str, object] = {}
        if args.seed is not None:
            overrides["run.seed"] = args.seed
        if args.pulses is not None:
            overrides["run.n_pulses"] = args.pulses
        if overrides:
            cfg = apply_overrides(cfg, overrides)
        if args.sweep:
            cfg = dataclasses.replace(cfg, sweep=_parse_sweep_flag(args.sweep))

        out_dir = Path(args.out) if args.out else Path(cfg.run.out_dir)
        if cfg.sweep is None:
            record = _execute_point(cfg, cfg.run.seed, out_dir, cfg_hash,
                                    args.emit_spectrum)
            _print_summary([record], None)
        else:
            records = _run_sweep(cfg, out_dir, cfg_hash, args.emit_spectrum)
            out_dir.mkdir(parents=True, exist_ok=True)
            with (out_dir / "metrics.jsonl").open("w") as fp:
                for rec in records:
                    fp.write(json.dumps(rec, sort_keys=True) + "\n")
            info = {
                "config_sha256": cfg_hash,
                "seed": cfg.run.seed,
                "package_version": __version__,
                "sweep_parameter": cfg.sweep.parameter,
                "sweep_values": list(cfg.sweep.values),
                "points": [f"point_{i:03d}" for i in range(len(records))],
            }
            (out_dir / "run_info.json").write_text(
                json.dumps(info, sort_keys=True, indent=2) + "\n")
            _print_summary(records, cfg.sweep.parameter)
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"dpssim: error: {exc}", file=sys.stderr)
        return 1
    return 0


def _run_sweep(cfg: RunConfig, out_dir: Path, cfg_hash: str,
               emit_spectrum: bool) -> list[dict]:
    """Run all sweep points, in parallel when the host allows it."""
    assert cfg.sweep is not None
    points = expand_sweep(cfg)
    tasks = [(pcfg, _derive_seed(cfg.run.seed, i),
              out_dir / f"point_{i:03d}", cfg_hash, emit_spectrum,
              cfg.sweep.parameter, value)
             for i, (value, pcfg) in enumerate(points)]
    workers = min(len(tasks), os.cpu_count() or 1)
    if workers > 1:
        try:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(_execute_point_packed, tasks))
        except (OSError, PermissionError):
            pass  # hosts without working process pools fall through
    return [_execute_point_packed(t) for t in tasks]


if __name__ == "__main__":
    sys.exit(main())
