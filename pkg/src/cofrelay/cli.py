"""Command-line entry point for SNR sweeps and the exhaustive comparison.

Configuration comes from an optional flat ``key = value`` file (``#`` starts a
comment); any command-line flag overrides the file.  Exit codes: 0 success,
2 configuration error, 3 solver non-convergence in at least 10% of trials
(results are still written).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import fields

from .channel import ChannelVariances
from .errors import ConfigError
from .experiments import (NONCONVERGENCE_LIMIT, SweepConfig, aggregate, compare_exhaustive,
                          format_compare_csv, format_csv, nonconverged_fraction,
                          results_document, run_trials, write_traces)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE = 0, 2, 3
VARIANCE_KEYS = ("var_ar", "var_br", "var_ad", "var_bd", "var_rd")
OUTPUT_KEYS = ("out", "json", "trace", "compare")


def _parse_float(field_name, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(field_name, f"expected a number, got {text!r}") from None


def _parse_int(field_name, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(field_name, f"expected an integer, got {text!r}") from None


def _convert(key, value):
    """Typed value of one configuration key given as text."""
    if key in VARIANCE_KEYS or key in ("p_a_dbw", "p_b_dbw", "p_r_dbw", "p_dbw",
                                       "snr_min", "snr_max", "snr_step"):
        return _parse_float(key, value)
    if key in ("trials", "seed", "multistarts", "workers"):
        return _parse_int(key, value)
    if key == "strategies":
        return tuple(s.strip() for s in value.split(",") if s.strip())
    if key == "compare":
        return value.strip().lower() in ("1", "true", "yes", "on")
    return value


def _known_keys():
    return {f.name for f in fields(SweepConfig)} - {"variances"} | set(VARIANCE_KEYS) | set(OUTPUT_KEYS)


def read_config_file(path: str) -> dict:
    known = _known_keys()
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(key, f"{path}:{lineno}: unknown key")
        out[key] = _convert(key, value)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cofrelay", description=__doc__.split("\n")[0])
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--snr-min", help="first SNR point (dB)")
    p.add_argument("--snr-max", help="last SNR point (dB)")
    p.add_argument("--snr-step", help="SNR spacing (dB)")
    p.add_argument("--trials", help="channel draws per SNR point")
    p.add_argument("--seed", help="base seed; per-trial seeds are derived from it")
    p.add_argument("--strategies", help="comma list from AF,DF,CF,CoF,CoD,CoF-exhaustive")
    p.add_argument("--channel-mode", help="per-point or held-fixed")
    p.add_argument("--multistarts", help="starting points per descent run")
    p.add_argument("--workers", help="worker processes for trials")
    for key in VARIANCE_KEYS:
        p.add_argument("--" + key.replace("_", "-"), help=f"variance of {key[4:]} gain (dBW, -inf allowed)")
    for key in ("p_a_dbw", "p_b_dbw", "p_r_dbw", "p_dbw"):
        p.add_argument("--" + key.replace("_", "-"), help="power (dBW)")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--json", help="JSON results path")
    p.add_argument("--trace", help="directory for per-trial SCA traces")
    p.add_argument("--compare", action="store_true",
                   help="run algorithm A against the exhaustive-integer pipeline instead")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve(args) -> tuple:
    """Merge file and flags into (SweepConfig, output options)."""
    values = read_config_file(args.config) if args.config else {}
    for key in _known_keys():
        flag = getattr(args, key, None)
        if flag is None or flag is False:
            continue
        values[key] = flag if key == "compare" else _convert(key, flag)
    outputs = {k: values.pop(k, None) for k in OUTPUT_KEYS}
    defaults = SweepConfig.__dataclass_fields__["variances"].default
    variances = ChannelVariances(*(values.pop(k, getattr(defaults, k)) for k in VARIANCE_KEYS))
    for k in VARIANCE_KEYS:
        v = getattr(variances, k)
        if math.isnan(v) or v == math.inf:
            raise ConfigError(k, "must be finite or -inf")
    return SweepConfig(variances=variances, **values), outputs


def _emit(path, text):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config, outputs = resolve(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if outputs["compare"]:
        rows = compare_exhaustive(config)
        _emit(outputs["out"], format_compare_csv(rows))
        return EXIT_OK

    records = run_trials(config, keep_traces=bool(outputs["trace"]))
    rows = aggregate(config, records)
    _emit(outputs["out"], format_csv(rows))
    if outputs["json"]:
        with open(outputs["json"], "w") as fh:
            json.dump(results_document(config, rows, records), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if outputs["trace"]:
        write_traces(outputs["trace"], records)
    if nonconverged_fraction(records) >= NONCONVERGENCE_LIMIT:
        print("warning: solver did not converge in at least 10% of trials", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK
