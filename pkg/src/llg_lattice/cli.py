"""Command-line experiment runner.

Usage::

    llg-lattice list-presets
    llg-lattice run --preset energy-decay --out runs/decay --seed 0
    llg-lattice run --config my.ini --out runs/custom

Config files are INI-style with sections ``experiment``, ``grid``,
``target``, ``solver``, ``analysis`` and ``output``.  ``experiment.preset``
names the pipeline; the other sections override that preset's defaults.

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration,
3 the run finished but one of its checks failed.
"""
from __future__ import annotations

import argparse
import configparser
import copy
import hashlib
import json
import os
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from threadpoolctl import threadpool_limits

from .presets import PRESETS, ConfigError, RunContext

__all__ = ["ExperimentConfig", "RunManifest", "load_config", "run", "list_presets", "main"]

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_CHECKS = 0, 1, 2, 3
SECTIONS = ("grid", "target", "solver", "analysis", "output")
LOCK_NAME = ".llg-lattice.lock"
MANIFEST_NAME = "manifest.json"


@dataclass
class ExperimentConfig:
    preset: str
    seed: int = 0
    out: Path = Path("runs")
    sections: dict[str, dict[str, str]] = field(default_factory=dict)

    def merged(self) -> dict[str, dict[str, str]]:
        """Preset defaults overlaid with the explicit sections."""
        merged = copy.deepcopy(PRESETS[self.preset].defaults)
        for name, values in self.sections.items():
            merged.setdefault(name, {}).update(values)
        return merged

    def input_hash(self) -> str:
        blob = json.dumps({"preset": self.preset, "seed": self.seed, "sections": self.merged()},
                          sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class RunManifest:
    config: dict
    input_hash: str
    status: str = "running"
    files: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    pgm_scales: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def exit_code(self) -> int:
        return {"ok": EXIT_OK, "checks_failed": EXIT_CHECKS}.get(self.status, EXIT_ERROR)

    def write(self, out: Path) -> None:
        payload = {k: getattr(self, k) for k in
                   ("status", "config", "input_hash", "files", "checks", "summary",
                    "pgm_scales", "error")}
        (out / MANIFEST_NAME).write_text(json.dumps(payload, indent=2, sort_keys=True,
                                                    default=_json_default) + "\n")


def _json_default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_config(path, seed: int | None = None, out=None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    exp = dict(parser["experiment"]) if parser.has_section("experiment") else {}
    preset = exp.get("preset")
    if preset is None:
        raise ConfigError("experiment.preset: missing value")
    if seed is None:
        try:
            seed = int(exp.get("seed", "0"))
        except ValueError as exc:
            raise ConfigError(f"experiment.seed: not an integer: {exp['seed']!r}") from exc
    unknown = [s for s in parser.sections() if s not in SECTIONS + ("experiment",)]
    if unknown:
        raise ConfigError(f"config: unknown section(s) {', '.join(unknown)}")
    sections = {s: dict(parser[s]) for s in parser.sections() if s in SECTIONS}
    if out is None:
        out = sections.get("output", {}).get("dir", f"runs/{preset}")
    return ExperimentConfig(preset, seed, Path(out), sections)


def validate(config: ExperimentConfig) -> None:
    """Raise :class:`ConfigError` unless the preset exists and its parameters parse."""
    if config.preset not in PRESETS:
        raise ConfigError(f"experiment.preset: unknown preset {config.preset!r}; "
                          f"choose from {', '.join(PRESETS)}")
    if not 0 <= config.seed < 2**64:
        raise ConfigError(f"experiment.seed: must be an unsigned 64-bit integer, got {config.seed}")
    ctx = RunContext(config.merged(), config.out, config.seed)
    sections = ctx.sections
    if "grid" in sections:
        ctx.grid()
    if "target" in sections:
        ctx.surface()
    if "solver" in sections and "grid" in sections:
        ctx.solver(ctx.grid())
    for key in ("h", "R0", "eps0"):
        if key in sections.get("analysis", {}) and ctx.number("analysis", key) <= 0:
            raise ConfigError(f"analysis.{key}: must be positive")


class _DirectoryLock:
    def __init__(self, out: Path):
        self.path = out / LOCK_NAME

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as exc:
            raise RuntimeError(f"output directory {self.path.parent} is locked by another run "
                               f"(remove {self.path.name} if stale)") from exc
        with os.fdopen(fd, "w") as fh:
            fh.write(f"{os.getpid()}\n")
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


def run(config: ExperimentConfig, threads: int | None = None) -> RunManifest:
    """Validate, execute the preset and write its artifacts plus ``manifest.json``.

    Configuration problems raise :class:`ConfigError` before anything is
    written.  Runtime failures are recorded in the manifest, which is always
    written last.
    """
    validate(config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    echo = {"preset": config.preset, "seed": config.seed, "sections": config.merged()}
    manifest = RunManifest(echo, config.input_hash())
    ctx = RunContext(config.merged(), out, config.seed)
    with _DirectoryLock(out):
        try:
            with threadpool_limits(limits=threads):
                checks = PRESETS[config.preset].run(ctx)
            manifest.checks = {k: bool(v) for k, v in checks.items()}
            manifest.status = "ok" if all(manifest.checks.values()) else "checks_failed"
        except ConfigError:
            raise
        except Exception as exc:  # recorded, not swallowed: the exit code reflects it
            manifest.status = "failed"
            manifest.error = f"{type(exc).__name__}: {exc}"
            manifest.summary["traceback"] = traceback.format_exc()
        manifest.summary.update(ctx.summary)
        manifest.pgm_scales = ctx.pgm_scales
        manifest.files = [{"name": name, "sha256": _sha256(out / name),
                           "bytes": (out / name).stat().st_size}
                          for name in ctx.files if (out / name).exists()]
        manifest.write(out)
    return manifest


def list_presets() -> str:
    width = max(len(n) for n in PRESETS)
    return "\n".join(f"{name:<{width}}  {p.description}" for name, p in PRESETS.items())


def _threads(arg: int | None) -> int | None:
    env = os.environ.get("LLG_LATTICE_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"LLG_LATTICE_THREADS: not an integer: {env!r}") from exc
    else:
        value = arg
    if value is not None and value < 1:
        raise ConfigError(f"threads: must be at least 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llg-lattice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a preset or a config file")
    src = run_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS), metavar="NAME")
    src.add_argument("--config", type=Path, metavar="PATH")
    run_p.add_argument("--out", type=Path, default=None, help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    run_p.add_argument("--threads", type=int, default=None,
                       help="BLAS/FFT thread limit (LLG_LATTICE_THREADS overrides)")
    sub.add_parser("list-presets", help="print preset names and descriptions")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-presets":
        print(list_presets())
        return EXIT_OK
    try:
        threads = _threads(args.threads)
        if args.config is not None:
            config = load_config(args.config, args.seed, args.out)
        else:
            config = ExperimentConfig(args.preset, 0 if args.seed is None else args.seed,
                                      args.out or Path("runs") / args.preset)
        manifest = run(config, threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for name, ok in manifest.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    if manifest.error:
        print(f"error: {manifest.error}", file=sys.stderr)
    print(f"{manifest.status}: {config.out / MANIFEST_NAME}")
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
