"""Experiment configuration: the dataclass, the key-value file grammar,
and initial-vector resolution.

Config file grammar (one ``key = value`` pair per line, ``#`` comments,
blank lines ignored):

    n = 3
    horizon = 2000
    trials = 500
    seed = 20240601
    x0 = unit-spike              # or "uniform-random 7", or "0 2 1" (explicit)
    family = periodic            # static | periodic | schedule
    B = 2
    epsilon = 0.5                # optional; inferred as the smallest positive entry
    phase = 1 0 0 / 0.5 1 0 / 0 0.5 1    # rows separated by '/'; repeat per phase
    phase = 1 0 0.5 / 0 1 0 / 0 0 1
    schedule_file = my.sched     # only for family = schedule
    diagnostics = f-metric, products     # any of f-metric, products, brute-cut
    threshold = 1e-8
    workers = 1
    out = results

Defaults: ``horizon = 1000``, ``trials = 100``, ``seed = 0``, diagnostics
off, ``threshold = 1e-8``, ``workers = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .randgen import ProbabilitySequence, ValidationReport, load_schedule_file, validate

__all__ = ["Config", "parse_config", "validate_config", "DIAGNOSTIC_FLAGS"]

DIAGNOSTIC_FLAGS = frozenset({"f-metric", "products", "brute-cut"})

UNIT_SPIKE = "unit-spike"
UNIFORM_RANDOM = "uniform-random"


@dataclass
class Config:
    """Everything needed to reproduce an experiment."""

    n: int
    horizon: int = 1000
    trials: int = 100
    seed: int = 0
    x0: tuple | str = UNIT_SPIKE
    family: str = "static"
    B: int = 1
    epsilon: float | None = None
    phases: tuple = ()
    schedule_file: str | None = None
    diagnostics: frozenset = frozenset()
    threshold: float = 1e-8
    workers: int = 1
    out: str | None = None
    ln_floor: float = 1e-300
    slack_sigmas: float = 3.0

    def sequence(self) -> ProbabilitySequence:
        if self.family == "schedule":
            if not self.schedule_file:
                raise ConfigError("family = schedule requires schedule_file")
            ps = load_schedule_file(self.schedule_file)
            if ps.n != self.n:
                raise ConfigError(
                    f"schedule file has n={ps.n}, config has n={self.n}"
                )
            return ps
        if not self.phases:
            raise ConfigError(f"family = {self.family} requires phase matrices")
        phases = tuple(np.asarray(p, dtype=float) for p in self.phases)
        if self.family == "static":
            if len(phases) != 1:
                raise ConfigError("family = static takes exactly one phase")
            return ProbabilitySequence.static(phases[0], B=self.B, epsilon=self.epsilon)
        if self.family == "periodic":
            return ProbabilitySequence.periodic(phases, B=self.B, epsilon=self.epsilon)
        raise ConfigError(f"unknown family {self.family!r}")

    def resolve_x0(self) -> np.ndarray:
        """Initial vector, fixed once per experiment (shared by all trials)."""
        if isinstance(self.x0, str):
            parts = self.x0.split()
            if parts[0] == UNIT_SPIKE:
                x0 = np.zeros(self.n)
                x0[0] = 1.0
                return x0
            if parts[0] == UNIFORM_RANDOM:
                sub_seed = int(parts[1]) if len(parts) > 1 else self.seed
                gen = np.random.default_rng(np.random.SeedSequence(sub_seed))
                return gen.random(self.n)
            raise ConfigError(f"unknown x0 generator {self.x0!r}")
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.size != self.n:
            raise ConfigError(f"x0 has length {x0.size}, expected n = {self.n}")
        return x0

    def with_(self, **kwargs) -> "Config":
        return replace(self, **kwargs)


def validate_config(config: Config) -> ValidationReport:
    """Structural checks plus the schedule invariants.

    Raises ``ConfigError`` on structural problems (bad sizes, unknown
    toggles); schedule-invariant violations come back in the report.
    """
    if config.n < 1:
        raise ConfigError(f"n must be >= 1, got {config.n}")
    if config.horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {config.horizon}")
    if config.trials < 1:
        raise ConfigError(f"trials must be >= 1, got {config.trials}")
    if config.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {config.workers}")
    unknown = set(config.diagnostics) - DIAGNOSTIC_FLAGS
    if unknown:
        raise ConfigError(f"unknown diagnostics {sorted(unknown)}")
    config.resolve_x0()
    ps = config.sequence()
    if ps.n != config.n:
        raise ConfigError(f"schedule n={ps.n} does not match config n={config.n}")
    return validate(ps, config.horizon)


def _parse_vector(text: str, lineno: int, path: Path) -> tuple:
    try:
        return tuple(float(v) for v in text.split())
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: bad number in vector: {exc}") from exc


def _parse_phase(text: str, lineno: int, path: Path) -> tuple:
    rows = []
    for row_text in text.split("/"):
        row = row_text.split()
        if not row:
            raise ConfigError(f"{path}:{lineno}: empty row in phase matrix")
        try:
            rows.append(tuple(float(v) for v in row))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad number in phase: {exc}") from exc
    width = len(rows[0])
    if any(len(r) != width for r in rows) or len(rows) != width:
        raise ConfigError(f"{path}:{lineno}: phase matrix must be square")
    return tuple(rows)


_INT_KEYS = {"n", "horizon", "trials", "seed", "B", "workers"}
_FLOAT_KEYS = {"epsilon", "threshold", "ln_floor", "slack_sigmas"}


def parse_config(path: str | Path) -> Config:
    """Parse a config file; syntax errors carry the offending line."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    phases: list[tuple] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not value:
            raise ConfigError(f"{path}:{lineno}: empty value for {key!r}")
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: field {key!r}: {exc}") from exc
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: field {key!r}: {exc}") from exc
        elif key == "x0":
            if value.split()[0] in (UNIT_SPIKE, UNIFORM_RANDOM):
                values["x0"] = value
            else:
                values["x0"] = _parse_vector(value, lineno, path)
        elif key == "phase":
            phases.append(_parse_phase(value, lineno, path))
        elif key == "family":
            values["family"] = value
        elif key == "schedule_file":
            candidate = Path(value)
            if not candidate.is_absolute():
                candidate = path.parent / candidate
            values["schedule_file"] = str(candidate)
        elif key == "diagnostics":
            flags = {f.strip() for f in value.replace(",", " ").split()}
            values["diagnostics"] = frozenset(flags)
        elif key == "out":
            values["out"] = value
        else:
            raise ConfigError(f"{path}:{lineno}: unknown field {key!r}")
    if "n" not in values:
        raise ConfigError(f"{path}: missing required field 'n'")
    if phases:
        values["phases"] = tuple(phases)
    config = Config(**values)
    # early shape check so mistakes name the field
    if isinstance(config.x0, tuple) and len(config.x0) != config.n:
        raise ConfigError(
            f"{path}: field 'x0' has length {len(config.x0)}, expected n = {config.n}"
        )
    for idx, phase in enumerate(config.phases):
        if len(phase) != config.n:
            raise ConfigError(
                f"{path}: field 'phase' #{idx} is {len(phase)}x{len(phase)}, "
                f"expected {config.n}x{config.n}"
            )
    return config
