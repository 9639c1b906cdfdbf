"""``otpsim`` command: run one named experiment from a JSON config.

Exit codes: 0 when every record passes, 1 when some record fails, 2 for
an unknown experiment or invalid configuration.

The payload (JSON or CSV) depends only on the experiment, the resolved
parameters and the seed, so reruns are byte-identical.  Wall-clock data
goes to ``<out>.meta.json`` next to it.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import EXPERIMENTS, ConfigError, resolve_params, run_experiment

__all__ = ["main", "build_payload", "payload_text", "param_hash"]

CSV_COLUMNS = ("experiment", "param-hash", "estimate", "ci_lo", "ci_hi", "predicted", "pass")


def param_hash(params: dict) -> str:
    """Short stable digest of a parameter map."""
    text = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _overall(records: list[dict]) -> bool:
    return all(r["pass"] is not False for r in records)


def build_payload(experiment: str, config: dict, seed: int, jobs: int = 1) -> dict:
    """Resolve ``config``, run the experiment and wrap its records."""
    params = resolve_params(experiment, config)
    records = run_experiment(experiment, params, seed, jobs)
    return {
        "experiment": experiment,
        "seed": seed,
        "config": {"experiment": experiment, "seed": seed, **params},
        "records": records,
        "pass": _overall(records),
    }


def payload_text(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in payload["records"]:
        writer.writerow(
            [
                f"{r['experiment']}/{r['check']}",
                param_hash(r["params"]),
                repr(r["estimate"]),
                repr(r["ci"][0]),
                repr(r["ci"][1]),
                "" if r["predicted"] is None else repr(r["predicted"]),
                "" if r["pass"] is None else str(r["pass"]).lower(),
            ]
        )
    return buf.getvalue()


def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _resolve_name(name: str, config: dict) -> str:
    """Experiment name; ``attack`` plus a ``name`` key spells ``attack-<name>``."""
    declared = config.pop("experiment", None)
    if "attack" in (name, declared) and "name" in config:
        sub = "attack-" + str(config.pop("name"))
        name = sub if name == "attack" else name
        declared = sub if declared == "attack" else declared
    if declared is not None and declared != name:
        raise ConfigError(f"config is for {declared!r}, not {name!r}")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    return name


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="otpsim", description="Run a one-time program experiment.")
    ap.add_argument("experiment", help="one of: " + ", ".join(EXPERIMENTS))
    ap.add_argument("--config", help="JSON file of parameters (unknown keys are rejected)")
    ap.add_argument("--seed", type=int, help="overrides the config seed (default 0)")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes; OTPSIM_JOBS overrides")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = _read_config(args.config)
        name = _resolve_name(args.experiment, config)
        seed = args.seed if args.seed is not None else config.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2**64)")
        jobs = args.jobs
        if os.environ.get("OTPSIM_JOBS"):
            try:
                jobs = int(os.environ["OTPSIM_JOBS"])
            except ValueError as exc:
                raise ConfigError("OTPSIM_JOBS must be an integer") from exc
        if jobs < 1:
            raise ConfigError("jobs must be at least 1")
        started = time.time()
        payload = build_payload(name, config, seed, jobs)
    except ConfigError as exc:
        print(f"otpsim: {exc}", file=sys.stderr)
        return 2
    text = payload_text(payload, args.format)
    if args.out:
        Path(args.out).write_text(text)
        meta = {
            "experiment": name,
            "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
            "seconds": round(time.time() - started, 3),
            "jobs": jobs,
            "version": __version__,
            "argv": list(argv if argv is not None else sys.argv[1:]),
        }
        Path(args.out + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    else:
        sys.stdout.write(text)
    for r in payload["records"]:
        if r["pass"] is not None:
            status = "PASS" if r["pass"] else "FAIL"
            print(f"{status} {r['experiment']}/{r['check']}: {r['estimate']:.6g} vs {r['predicted']} ({r['relation']})", file=sys.stderr)
    return 0 if payload["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
