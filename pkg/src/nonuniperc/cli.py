"""Command-line batch driver.

Exit codes: 0 when every check of the experiment passes, 1 on a failed check,
2 on a configuration error, 3 when a vertex budget is exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import traceback
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, ConfigError, RunConfig, load
from .families import family_to_dict
from .truncation import BudgetExceeded

OUTPUT_ROOT_ENV = "NONUNIPERC_OUTPUT_ROOT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def output_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def execute(cfg: RunConfig) -> int:
    from .experiments import RUNNERS

    out = output_dir(cfg)
    manifest = {
        "tool": "nonuniperc",
        "version": __version__,
        "config": cfg.raw,
        "resolved": {"experiment": cfg.experiment, "family": family_to_dict(cfg.family),
                     "radius": cfg.radius, "seed": cfg.seed, "max_vertices": cfg.max_vertices,
                     "replicas": cfg.replicas, "workers": cfg.workers},
        "started": _now(),
        "modules": [],
        "outputs": {},
    }
    code = EXIT_OK
    try:
        outcome = RUNNERS[cfg.experiment](cfg)
        manifest["modules"] = sorted(set(outcome.modules) | {"cli"})
        for name, body in sorted(outcome.artifacts.items()):
            atomic_write(out / name, body)
            manifest["outputs"][name] = hashlib.sha256(body.encode()).hexdigest()
        manifest["passed"] = outcome.passed
        if not outcome.passed:
            code = EXIT_FAIL
    except BudgetExceeded as exc:
        code = EXIT_BUDGET
        manifest["error"] = {"kind": "budget", "message": str(exc)}
    except Exception as exc:  # recorded in the manifest, then reported as a failure
        code = EXIT_FAIL
        manifest["error"] = {"kind": type(exc).__name__, "message": str(exc),
                             "traceback": traceback.format_exc()}
    manifest["finished"] = _now()
    manifest["exit_code"] = code
    atomic_write(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True,
                                                   default=str) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="nonuniperc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiment described by a config file")
    p_run.add_argument("config")
    sub.add_parser("list-experiments", help="print the experiment ids")
    p_val = sub.add_parser("validate", help="check a config file without running it")
    p_val.add_argument("config")
    args = ap.parse_args(argv)

    if args.command == "list-experiments":
        print("\n".join(EXPERIMENTS))
        return EXIT_OK
    try:
        cfg = load(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"ok: {cfg.experiment} on {cfg.family}, radius {cfg.radius}, seed {cfg.seed}")
        return EXIT_OK
    code = execute(cfg)
    status = {EXIT_OK: "passed", EXIT_FAIL: "failed", EXIT_BUDGET: "budget exceeded"}[code]
    print(f"{cfg.experiment}: {status} -> {output_dir(cfg)}")
    return code


if __name__ == "__main__":
    sys.exit(main())
