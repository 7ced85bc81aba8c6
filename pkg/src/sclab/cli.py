"""Command line driver: ``sclab run <config.json>``, ``sclab list-templates``, ``sclab schema``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for
configuration or IO errors.  ``SCLAB_OUTPUT_DIR`` overrides the output
directory of every run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigurationError, ScLabError
from .experiments import EXPERIMENTS, ExperimentConfig
from .io import SCHEMA_VERSION, atomic_write, csv_text, dumps_report
from .templates import list_templates

OUTPUT_ENV = "SCLAB_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: malformed JSON: {exc}") from exc
    if isinstance(data, dict) and data.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigurationError(f"{path}: unsupported schema {data.get('schema')!r}")
    return ExperimentConfig.from_dict(data)


def output_dir(cfg: ExperimentConfig, config_path) -> Path:
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    d = cfg.output.get("dir")
    if d:
        p = Path(d)
        return p if p.is_absolute() else Path(config_path).parent / p
    return Path("results")


def run(config_path) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    exp = EXPERIMENTS[cfg.experiment]
    started = time.perf_counter()
    try:
        result = exp.run(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScLabError as exc:
        print(f"{cfg.experiment}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    elapsed = time.perf_counter() - started
    name = cfg.output.get("name", cfg.experiment)
    out = output_dir(cfg, config_path)
    report = {"schema": SCHEMA_VERSION, "experiment": cfg.experiment, "config": cfg.to_dict(),
              "ok": result.ok, "results": result.report}
    meta = {"schema": SCHEMA_VERSION, "experiment": cfg.experiment,
            "timestamp": datetime.now(timezone.utc).isoformat(), "runtime_seconds": elapsed}
    written = []
    try:
        atomic_write(out / f"{name}.json", dumps_report(report))
        written.append(out / f"{name}.json")
        for table, (cols, rows) in result.tables.items():
            path = out / f"{name}.{table}.csv"
            atomic_write(path, csv_text(cols, rows))
            written.append(path)
        atomic_write(out / f"{name}.meta.json", dumps_report(meta))
    except OSError as exc:
        print(f"cannot write results to {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = "PASS" if result.ok else "FAIL"
    print(f"{cfg.experiment}: {status} ({elapsed:.2f} s)")
    for p in written:
        print(f"  wrote {p}")
    return EXIT_OK if result.ok else EXIT_FAIL


def schema() -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "config": {
            "experiment": "one of " + ", ".join(sorted(EXPERIMENTS)),
            "scale": "{kind, params, ladder, max_level}; kind in sobolev_circle, fractal, grid_exponential",
            "templates": "slot -> {name, params}; slots: operator, map, f, g, retraction",
            "ladder": "strictly increasing truncation sizes (overrides the scale's ladder)",
            "tolerances": "name -> value",
            "seed": "integer, required for randomized experiments",
            "params": "experiment parameters",
            "output": "{dir, name}",
        },
        "output_env": OUTPUT_ENV,
        "experiments": {k: {"description": e.description, "randomized": e.randomized,
                            "csv": {t: cols for t, cols in e.tables.items()}}
                        for k, e in sorted(EXPERIMENTS.items())},
        "exit_codes": {"0": "all checks pass", "1": "a check failed", "2": "configuration or IO error"},
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sclab", description="scale calculus verification driver")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment configuration")
    p_run.add_argument("config")
    sub.add_parser("list-templates", help="list operator, map and retraction templates")
    sub.add_parser("schema", help="print the configuration and output schema")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config)
    if args.command == "list-templates":
        print(json.dumps(list_templates(), indent=2, sort_keys=True))
        return EXIT_OK
    print(json.dumps(schema(), indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
