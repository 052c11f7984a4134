"""Synthetic memories, corruptions, retrieval metrics and the benchmark harness."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .basis import make_rectangular_basis, uniform_times
from .dynamics import (
    ContinuousHopfield,
    DiscreteHopfield,
    IterationConfig,
    QuadratureGrid,
    retrieve_batch,
)
from .errors import DimensionError, UndefinedMetricError
from .memfit import DEFAULT_LAMBDA, as_memory, fit_continuous_memory

PATTERN_KINDS = ("circle", "line", "sinusoid", "smooth_embedding")
CORRUPTION_KINDS = ("mask_fraction", "gaussian_noise")

DEFAULT_PARAMS = {
    "circle": {"radius": 1.0},
    "line": {"start": (0.0, 0.0), "end": (1.0, 1.0)},
    "sinusoid": {"amplitude": 1.0, "frequency": 1.0, "scale": 1.0},
    "smooth_embedding": {"k": 8, "bandwidth": 4.0, "amplitude": 1.0},
}

# Distinct streams for pattern generation and corruption under the same seed.
_GEN_STREAM = 0
_NOISE_STREAM = 1


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream]))


@dataclass(frozen=True)
class PatternSpec:
    """Description of a synthetic memory.

    ``params`` overrides entries of :data:`DEFAULT_PARAMS` for the kind:
    circle ``radius``; line ``start``/``end``; sinusoid ``amplitude``,
    ``frequency`` (cycles over the sequence) and ``scale`` (x extent);
    smooth_embedding ``k`` (sinusoids per dimension), ``bandwidth`` (highest
    frequency in cycles) and ``amplitude`` (per-coordinate RMS).
    """

    kind: str
    l: int
    d: int = 2
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        if int(self.l) != self.l or self.l < 1:
            raise ValueError(f"l must be >= 1, got {self.l}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.kind != "smooth_embedding" and self.d != 2:
            raise ValueError(f"{self.kind} patterns are 2-D, got d={self.d}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} parameters: {sorted(unknown)}")

    def resolved(self) -> dict:
        return {**DEFAULT_PARAMS[self.kind], **self.params}


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    fraction: float = 0.5
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ValueError(f"unknown corruption kind {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {self.fraction}")
        if not self.sigma >= 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def generate(spec: PatternSpec) -> np.ndarray:
    """Sample an ``(l, d)`` memory; identical specs give identical arrays."""
    p = spec.resolved()
    l = spec.l
    t = uniform_times(l)
    if spec.kind == "circle":
        radius = float(p["radius"])
        if not radius > 0:
            raise ValueError(f"radius must be > 0, got {radius}")
        angle = 2.0 * np.pi * np.arange(l) / l
        return radius * np.column_stack([np.cos(angle), np.sin(angle)])
    if spec.kind == "line":
        start = np.asarray(p["start"], dtype=float)
        end = np.asarray(p["end"], dtype=float)
        if start.shape != (2,) or end.shape != (2,):
            raise ValueError("line endpoints must be 2-D points")
        return start + t[:, None] * (end - start)
    if spec.kind == "sinusoid":
        amp, freq, scale = (float(p[k]) for k in ("amplitude", "frequency", "scale"))
        return np.column_stack([t * scale, amp * np.sin(2.0 * np.pi * freq * t)])

    k = int(p["k"])
    bandwidth = float(p["bandwidth"])
    amplitude = float(p["amplitude"])
    if k < 1 or not bandwidth > 0 or not amplitude > 0:
        raise ValueError("smooth_embedding needs k >= 1, bandwidth > 0, amplitude > 0")
    rng = _rng(spec.seed, _GEN_STREAM)
    d = spec.d
    freqs = rng.uniform(0.0, bandwidth, size=(d, k))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(d, k))
    amps = rng.normal(0.0, amplitude * np.sqrt(2.0 / k), size=(d, k))
    # (l, d, k) -> sum over k
    waves = np.sin(2.0 * np.pi * t[:, None, None] * freqs[None] + phases[None])
    return np.einsum("ldk,dk->ld", waves, amps)


def corrupt(x, spec: CorruptionSpec) -> np.ndarray:
    """Return a corrupted copy of ``x``; the input is left untouched."""
    x = as_memory(x)
    out = x.copy()
    if spec.kind == "mask_fraction":
        masked = int(np.floor(spec.fraction * x.shape[1]))
        if masked:
            out[:, x.shape[1] - masked :] = 0.0
    elif spec.sigma > 0:
        out += _rng(spec.seed, _NOISE_STREAM).normal(0.0, spec.sigma, size=x.shape)
    return out


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise UndefinedMetricError("cosine similarity is undefined for zero vectors")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def row_cosines(a, b) -> np.ndarray:
    """Cosine similarity between matching rows of two equally shaped matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    zero = np.flatnonzero((na == 0) | (nb == 0))
    if zero.size:
        raise UndefinedMetricError(f"row {zero[0]} has zero norm")
    return np.clip(np.einsum("ij,ij->i", a, b) / (na * nb), -1.0, 1.0)


def subsample_indices(l: int, l_sub: int) -> np.ndarray:
    if int(l_sub) != l_sub or not 1 <= l_sub <= l:
        raise ValueError(f"l_sub must lie in [1, {l}], got {l_sub}")
    if l_sub == 1:
        return np.zeros(1, dtype=int)
    pos = np.arange(l_sub) * ((l - 1) / (l_sub - 1))
    return np.floor(pos + 0.5).astype(int)


def subsample(x, l_sub: int) -> np.ndarray:
    """Keep ``l_sub`` rows at evenly spaced, rounded indices over ``[0, L-1]``."""
    x = as_memory(x)
    return x[subsample_indices(x.shape[0], l_sub)]


@dataclass(frozen=True)
class DiscreteModel:
    """Discrete baseline; ``l_sub=None`` uses the full memory."""

    l_sub: int | None = None


@dataclass(frozen=True)
class ContinuousModel:
    n: int
    lam: float = DEFAULT_LAMBDA


@dataclass(frozen=True, eq=False)
class BenchmarkResult:
    cosines: np.ndarray
    mean: float
    std: float
    wall_ms: float
    steps: np.ndarray


def build_model(memory, model, quad: QuadratureGrid | None = None):
    """Instantiate the Hopfield network described by a model spec."""
    memory = as_memory(memory)
    if isinstance(model, DiscreteModel):
        rows = memory if model.l_sub is None else subsample(memory, model.l_sub)
        return DiscreteHopfield(rows)
    if isinstance(model, ContinuousModel):
        cm = fit_continuous_memory(memory, make_rectangular_basis(model.n), model.lam)
        return ContinuousHopfield(cm, quad)
    raise TypeError(f"unknown model spec {model!r}")


def benchmark_retrieval(
    memory,
    corruption: CorruptionSpec,
    model,
    cfg: IterationConfig,
    quad: QuadratureGrid | None = None,
) -> BenchmarkResult:
    """Corrupt every stored pattern, retrieve it, and score against the original.

    The wall-clock figure covers model construction (subsampling or the ridge
    fit) and retrieval of all queries; the standard deviation is over patterns
    (``ddof=0``).
    """
    memory = as_memory(memory)
    queries = corrupt(memory, corruption)
    start = time.perf_counter()
    net = build_model(memory, model, quad)
    result = retrieve_batch(net, queries, cfg)
    wall_ms = (time.perf_counter() - start) * 1e3
    cos = row_cosines(result.final, memory)
    return BenchmarkResult(cos, float(np.mean(cos)), float(np.std(cos)), wall_ms, result.steps)
