"""Declarative benchmark run configuration.

The on-disk form is one ``key = value`` per line; ``#`` starts a comment.
Sweep keys take comma-separated lists; two-component points (line
endpoints) are written as space-separated pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .dynamics import QuadratureGrid
from .synth import CORRUPTION_KINDS, PATTERN_KINDS

MODELS = ("continuous", "discrete")
INV_SQRT_D = "invsqrtd"
FULL = "full"


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")


@dataclass(frozen=True)
class RunConfig:
    kind: str = "smooth_embedding"
    l: int = 512
    d: int = 64
    seeds: tuple = (0,)
    radius: float | None = None
    line_start: tuple | None = None
    line_end: tuple | None = None
    amplitude: float | None = None
    frequency: float | None = None
    scale: float | None = None
    k: int | None = None
    bandwidth: float | None = None
    corruption: str = "gaussian_noise"
    sigma: float = 5.0
    fraction: float = 0.5
    model: tuple = MODELS
    n: tuple = (256,)
    l_sub: tuple = (None,)
    lam: tuple = (1e-3,)
    beta: tuple = (INV_SQRT_D,)
    quad: tuple = ("trapezoid:500",)
    tol: float = 1e-6
    max_iters: int = 100
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def pattern_params(self) -> dict:
        params = {}
        if self.kind == "circle" and self.radius is not None:
            params["radius"] = self.radius
        if self.kind == "line":
            if self.line_start is not None:
                params["start"] = self.line_start
            if self.line_end is not None:
                params["end"] = self.line_end
        if self.kind == "sinusoid":
            for name in ("amplitude", "frequency", "scale"):
                if getattr(self, name) is not None:
                    params[name] = getattr(self, name)
        if self.kind == "smooth_embedding":
            for name in ("k", "bandwidth", "amplitude"):
                if getattr(self, name) is not None:
                    params[name] = getattr(self, name)
        return params

    def resolve_beta(self, token) -> float:
        return 1.0 / math.sqrt(self.d) if token == INV_SQRT_D else float(token)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(key, f"line {lineno} is not 'key = value'")
            name = _KEY_TO_FIELD.get(key)
            if name is None:
                raise ConfigError(key, "unknown key")
            if name in values:
                raise ConfigError(key, "given more than once")
            try:
                values[name] = _PARSERS[name](value.strip())
            except (ValueError, TypeError) as exc:
                raise ConfigError(key, str(exc)) from None
        return cls(**values)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{_FIELD_TO_KEY.get(f.name, f.name)} = {_format(f.name, value)}")
        return "\n".join(lines) + "\n"

    def validate(self) -> None:
        checks = [
            ("kind", self.kind in PATTERN_KINDS, f"must be one of {PATTERN_KINDS}"),
            ("l", self.l >= 1, "must be >= 1"),
            ("d", self.d >= 1, "must be >= 1"),
            ("seeds", len(self.seeds) >= 1, "needs at least one seed"),
            ("corruption", self.corruption in CORRUPTION_KINDS, f"must be one of {CORRUPTION_KINDS}"),
            ("sigma", self.sigma >= 0, "must be >= 0"),
            ("fraction", 0 <= self.fraction <= 1, "must lie in [0, 1]"),
            ("model", len(self.model) >= 1 and set(self.model) <= set(MODELS), f"entries must be in {MODELS}"),
            ("n", all(v >= 1 for v in self.n), "entries must be >= 1"),
            ("l_sub", all(v is None or 1 <= v <= self.l for v in self.l_sub), f"entries must lie in [1, {self.l}] or be '{FULL}'"),
            ("lambda", all(v > 0 for v in self.lam), "entries must be > 0"),
            ("beta", all(self.resolve_beta(b) > 0 for b in self.beta), "entries must be > 0"),
            ("tol", self.tol > 0, "must be > 0"),
            ("max_iters", self.max_iters >= 1, "must be >= 1"),
        ]
        for key, ok, message in checks:
            if not ok:
                raise ConfigError(key, message)
        for token in self.quad:
            try:
                QuadratureGrid.parse(token)
            except ValueError as exc:
                raise ConfigError("quad", str(exc)) from None
        if self.kind != "smooth_embedding" and self.d != 2:
            raise ConfigError("d", f"{self.kind} patterns are 2-D")


def _list(item):
    def parse(text):
        parts = [p.strip() for p in text.split(",")]
        if not all(parts):
            raise ValueError(f"empty list entry in {text!r}")
        return tuple(item(p) for p in parts)

    return parse


def _point(text):
    parts = text.split()
    if len(parts) != 2:
        raise ValueError(f"expected two space-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def _int(text):
    return int(text)


def _l_sub(text):
    return None if text == FULL else int(text)


def _beta(text):
    return INV_SQRT_D if text == INV_SQRT_D else float(text)


def _quad(text):
    return QuadratureGrid.parse(text).label


def _word(text):
    if not text or any(c.isspace() for c in text):
        raise ValueError(f"expected a single word, got {text!r}")
    return text


_PARSERS = {
    "kind": _word,
    "l": _int,
    "d": _int,
    "seeds": _list(_int),
    "radius": float,
    "line_start": _point,
    "line_end": _point,
    "amplitude": float,
    "frequency": float,
    "scale": float,
    "k": _int,
    "bandwidth": float,
    "corruption": _word,
    "sigma": float,
    "fraction": float,
    "model": _list(_word),
    "n": _list(_int),
    "l_sub": _list(_l_sub),
    "lam": _list(float),
    "beta": _list(_beta),
    "quad": _list(_quad),
    "tol": float,
    "max_iters": _int,
    "out": lambda s: s,
}
_FIELD_TO_KEY = {"lam": "lambda"}
_KEY_TO_FIELD = {_FIELD_TO_KEY.get(name, name): name for name in _PARSERS}


def _format_item(value) -> str:
    if value is None:
        return FULL
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _format(name: str, value) -> str:
    if name in ("line_start", "line_end"):
        return " ".join(repr(float(v)) for v in value)
    if isinstance(value, tuple):
        return ", ".join(_format_item(v) for v in value)
    return _format_item(value)
