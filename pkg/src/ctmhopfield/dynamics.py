"""Energies, update rules and CCCP fixed-point iteration.

Both Hopfield variants reduce to attention over a finite set of weighted
rows. For the discrete memory the rows are the stored patterns with unit
weights. For a continuous memory with a rectangular basis the rows are the
coefficient rows of ``B`` and the weight of row ``j`` is the quadrature mass
assigned to cell ``j``: its width for the exact scheme, or the summed
trapezoid weights of the grid points falling inside it. The energy is then

    E(q) = -(1/beta) log sum_j w_j exp(beta r_j^T q) + 0.5 ||q||^2

and the CCCP step ``q <- R^T softmax(beta R q + log w)`` is its exact
minimizer-of-the-linearization, so energy decrease holds for both schemes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import RECTANGULAR
from .errors import DimensionError, NumericalFailure
from .memfit import ContinuousMemory, as_memory

TRAPEZOID = "trapezoid"
EXACT_SEGMENT = "exact_segment"
DEFAULT_POINTS = 500


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Integration scheme over [0, 1].

    ``trapezoid`` carries ``points`` and matching ``weights``; ``exact_segment``
    carries neither and integrates piecewise-constant reconstructions in
    closed form.
    """

    scheme: str
    points: np.ndarray | None = None
    weights: np.ndarray | None = None

    @classmethod
    def trapezoid(cls, p: int = DEFAULT_POINTS) -> "QuadratureGrid":
        if isinstance(p, bool) or int(p) != p or p < 2:
            raise ValueError(f"trapezoid rule needs at least 2 points, got {p}")
        p = int(p)
        h = 1.0 / (p - 1)
        weights = np.full(p, h)
        weights[[0, -1]] = h / 2
        points = np.arange(p) / (p - 1)
        points.setflags(write=False)
        weights.setflags(write=False)
        return cls(TRAPEZOID, points, weights)

    @classmethod
    def exact(cls) -> "QuadratureGrid":
        return cls(EXACT_SEGMENT)

    @classmethod
    def parse(cls, text: str) -> "QuadratureGrid":
        """Parse ``"trapezoid:P"``, ``"trapezoid"`` or ``"exact"``."""
        text = text.strip().lower()
        if text in ("exact", EXACT_SEGMENT):
            return cls.exact()
        kind, _, count = text.partition(":")
        if kind != TRAPEZOID:
            raise ValueError(f"unknown quadrature {text!r}")
        try:
            return cls.trapezoid(int(count) if count else DEFAULT_POINTS)
        except ValueError as exc:
            raise ValueError(f"bad quadrature {text!r}: {exc}") from None

    @property
    def label(self) -> str:
        if self.scheme == EXACT_SEGMENT:
            return "exact"
        return f"trapezoid:{self.points.size}"

    def __eq__(self, other):
        return isinstance(other, QuadratureGrid) and self.label == other.label

    def __hash__(self):
        return hash(self.label)


@dataclass(frozen=True)
class IterationConfig:
    beta: float = 1.0
    max_iters: int = 100
    tol: float = 1e-6

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")


@dataclass(frozen=True, eq=False)
class RetrievalTrace:
    """Accepted iterates ``q0 .. qk`` and their energies.

    Iteration stops once an update moves the state by less than ``tol``; that
    final sub-tolerance update is not appended.
    """

    iterates: np.ndarray
    energies: np.ndarray
    converged: bool

    @property
    def steps(self) -> int:
        return len(self.iterates) - 1

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]


@dataclass(frozen=True, eq=False)
class BatchRetrieval:
    final: np.ndarray
    steps: np.ndarray
    converged: np.ndarray
    energies: np.ndarray


def _check_beta(beta) -> float:
    beta = float(beta)
    if not 0 < beta < math.inf:
        raise ValueError(f"beta must be > 0, got {beta}")
    return beta


def _logsumexp(z: np.ndarray, axis=None) -> np.ndarray:
    m = np.max(z, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(z - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


class _AttentionModel:
    """Weighted-row attention shared by both memory variants."""

    _rows: np.ndarray
    _logw: np.ndarray | None  # None: all weights equal
    _offset: float  # log of the common weight when _logw is None

    @property
    def d(self) -> int:
        return self._rows.shape[1]

    def _query(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != self._rows.shape[1:]:
            raise DimensionError(f"query must have shape ({self.d},), got {q.shape}")
        return q

    def _logits(self, q, beta):
        z = self._rows @ q
        z *= beta
        if self._logw is not None:
            z += self._logw
        return z

    def weights(self, q, beta) -> np.ndarray:
        """Softmax weights over the rows at state ``q``."""
        z = self._logits(self._query(q), _check_beta(beta))
        z -= z.max()
        np.exp(z, out=z)
        z *= 1.0 / z.sum()
        return z

    def update(self, q, beta) -> np.ndarray:
        """One CCCP step: the attention-weighted mean of the rows."""
        z = self._logits(self._query(q), _check_beta(beta))
        z -= z.max()
        np.exp(z, out=z)
        # trailing ones column yields the normalizer in the same product
        y = z @ self._rows_ones
        return y[:-1] / y[-1]

    @cached_property
    def _rows_ones(self) -> np.ndarray:
        return np.hstack([self._rows, np.ones((self._rows.shape[0], 1))])

    def energy(self, q, beta) -> float:
        q = self._query(q)
        beta = _check_beta(beta)
        lse = _logsumexp(self._logits(q, beta)) + self._offset
        return -lse / beta + 0.5 * float(q @ q)

    def gradient(self, q, beta) -> np.ndarray:
        """``q`` minus the update; vanishes exactly at fixed points."""
        q = self._query(q)
        return q - self.update(q, beta)

    def update_batch(self, qs, beta) -> np.ndarray:
        z = np.asarray(qs, dtype=float) @ self._rows.T
        z *= _check_beta(beta)
        if self._logw is not None:
            z += self._logw
        z -= z.max(axis=1, keepdims=True)
        np.exp(z, out=z)
        z /= z.sum(axis=1, keepdims=True)
        return z @ self._rows

    def energy_batch(self, qs, beta) -> np.ndarray:
        qs = np.asarray(qs, dtype=float)
        beta = _check_beta(beta)
        z = beta * (qs @ self._rows.T)
        if self._logw is not None:
            z += self._logw
        lse = _logsumexp(z, axis=1) + self._offset
        return -lse / beta + 0.5 * np.einsum("ij,ij->i", qs, qs)


class DiscreteHopfield(_AttentionModel):
    """Modern Hopfield network over the stored patterns ``X`` (L x D)."""

    def __init__(self, x):
        self.patterns = as_memory(x)
        self._rows = self.patterns
        self._logw = None
        self._offset = 0.0


class ContinuousHopfield(_AttentionModel):
    """Hopfield network over a continuous memory ``x_bar(t) = B^T psi(t)``.

    Args:
        memory: Fitted continuous memory.
        quad: Integration scheme for the Gibbs normalizer and expectation.
    """

    def __init__(self, memory: ContinuousMemory, quad: QuadratureGrid | None = None):
        quad = quad if quad is not None else QuadratureGrid.trapezoid()
        if memory.basis.kind != RECTANGULAR:
            raise ValueError(f"unsupported basis kind {memory.basis.kind!r}")
        self.memory = memory
        self.quad = quad
        if quad.scheme == EXACT_SEGMENT:
            mass = memory.basis.widths
        else:
            cells = memory.basis.cell_index(quad.points)
            mass = np.bincount(cells, weights=quad.weights, minlength=memory.n)
        keep = mass > 0
        self._rows = memory.coeffs[keep]
        mass = mass[keep]
        if np.all(mass == mass[0]):
            self._logw = None
            self._offset = float(np.log(mass[0]))
        else:
            self._logw = np.log(mass)
            self._offset = 0.0
        self._keep = keep

    def cell_masses(self, q, beta) -> np.ndarray:
        """Gibbs probability mass of every basis cell (length ``n``)."""
        out = np.zeros(self.memory.n)
        out[self._keep] = self.weights(q, beta)
        return out


def discrete_energy(x, q, beta: float) -> float:
    """Log-sum-exp energy of the modern Hopfield network (constant taken as 0)."""
    return DiscreteHopfield(x).energy(q, beta)


def discrete_update(x, q, beta: float) -> np.ndarray:
    """``X^T softmax(beta X q)``."""
    return DiscreteHopfield(x).update(q, beta)


def continuous_energy(cm: ContinuousMemory, q, beta: float, quad: QuadratureGrid) -> float:
    """``-(1/beta) log int_0^1 exp(beta x_bar(t)^T q) dt + 0.5 ||q||^2``."""
    return ContinuousHopfield(cm, quad).energy(q, beta)


def continuous_update(cm: ContinuousMemory, q, beta: float, quad: QuadratureGrid) -> np.ndarray:
    """Gibbs expectation ``E_p[x_bar(t)]`` of the reconstructed signal."""
    return ContinuousHopfield(cm, quad).update(q, beta)


def gibbs_density(cm: ContinuousMemory, q, beta: float, quad: QuadratureGrid) -> np.ndarray:
    """Gibbs density ``p(t) ∝ exp(beta q^T x_bar(t))``.

    For the trapezoid scheme returns the density sampled at ``quad.points``,
    normalized by the trapezoid estimate of the partition function. For the
    exact scheme returns the probability mass of each basis cell.
    """
    model = ContinuousHopfield(cm, quad)
    if quad.scheme == EXACT_SEGMENT:
        return model.cell_masses(q, beta)
    q = model._query(q)
    beta = _check_beta(beta)
    sim = cm.coeffs[cm.basis.cell_index(quad.points)] @ q
    z = beta * sim
    log_norm = _logsumexp(z + np.log(quad.weights))
    return np.exp(z - log_norm)


def energy_gradient(model: _AttentionModel, q, beta: float) -> np.ndarray:
    """Gradient of the model's energy at ``q``: ``q - E_p[patterns]``."""
    return model.gradient(q, beta)


def cccp_iterate(model: _AttentionModel, q0, cfg: IterationConfig) -> RetrievalTrace:
    """Run CCCP updates from ``q0`` until the step norm drops below ``cfg.tol``.

    Raises:
        NumericalFailure: If an update yields a non-finite state or energy.
    """
    q = model._query(q0).copy()
    if not np.all(np.isfinite(q)):
        raise ValueError("initial query contains non-finite entries")
    beta = cfg.beta
    iterates = [q]
    with np.errstate(over="ignore", invalid="ignore"):
        energies = [model.energy(q, beta)]
    if not np.isfinite(energies[0]):
        raise NumericalFailure(0, "energy of the initial query is not finite")
    converged = False
    for step in range(1, cfg.max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            q_new = model.update(q, beta)
        if not np.all(np.isfinite(q_new)):
            raise NumericalFailure(step)
        if np.linalg.norm(q_new - q) < cfg.tol:
            converged = True
            break
        with np.errstate(over="ignore", invalid="ignore"):
            energy = model.energy(q_new, beta)
        if not np.isfinite(energy):
            raise NumericalFailure(step)
        q = q_new
        iterates.append(q)
        energies.append(energy)
    return RetrievalTrace(np.array(iterates), np.array(energies), converged)


def retrieve_batch(model: _AttentionModel, queries, cfg: IterationConfig) -> BatchRetrieval:
    """Vectorized :func:`cccp_iterate` over the rows of ``queries``.

    Each row follows the same stopping rule as the single-query loop; rows
    that have converged are frozen while the rest keep iterating.
    """
    qs = np.array(queries, dtype=float)
    if qs.ndim != 2 or qs.shape[1] != model.d:
        raise DimensionError(f"queries must have shape (M, {model.d}), got {qs.shape}")
    bad = np.flatnonzero(~np.all(np.isfinite(qs), axis=1))
    if bad.size:
        raise ValueError(f"query row {bad[0]} contains non-finite entries")
    m = qs.shape[0]
    steps = np.zeros(m, dtype=int)
    converged = np.zeros(m, dtype=bool)
    active = np.arange(m)
    for step in range(1, cfg.max_iters + 1):
        if active.size == 0:
            break
        cur = qs[active]
        with np.errstate(over="ignore", invalid="ignore"):
            new = model.update_batch(cur, cfg.beta)
        if not np.all(np.isfinite(new)):
            raise NumericalFailure(step)
        done = np.linalg.norm(new - cur, axis=1) < cfg.tol
        moving = active[~done]
        qs[moving] = new[~done]
        steps[moving] = step
        converged[active[done]] = True
        active = moving
    with np.errstate(over="ignore", invalid="ignore"):
        energies = model.energy_batch(qs, cfg.beta)
    if not np.all(np.isfinite(energies)):
        raise NumericalFailure(int(steps.max()), "non-finite final energy")
    return BatchRetrieval(qs, steps, converged, energies)
