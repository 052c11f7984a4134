"""Basis families on [0, 1], time assignment and design matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RECTANGULAR = "rectangular"
KINDS = (RECTANGULAR,)


@dataclass(frozen=True)
class BasisFamily:
    """A family of ``n`` basis functions on the unit interval.

    Only uniformly spaced rectangular (indicator) functions are implemented.
    Function ``j`` is 1 on ``[edges[j], edges[j + 1])`` and 0 elsewhere; the
    last cell is closed on the right so every ``t`` in [0, 1] activates
    exactly one function.
    """

    n: int
    kind: str = RECTANGULAR

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"number of basis functions must be >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def edges(self) -> np.ndarray:
        """Breakpoints ``0 = e_0 < ... < e_n = 1``."""
        return np.arange(self.n + 1) / self.n

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def cell_index(self, t) -> np.ndarray:
        """Index of the active cell for each time in ``t`` (vectorized)."""
        t = _check_times(t)
        idx = np.searchsorted(self.edges, t, side="right") - 1
        return np.minimum(idx, self.n - 1)

    def evaluate(self, t) -> np.ndarray:
        """Evaluate all basis functions at ``t``.

        Returns an ``(n,)`` vector for scalar ``t`` and an ``(n, len(t))``
        matrix otherwise.
        """
        t_arr = np.asarray(t, dtype=float)
        idx = self.cell_index(np.atleast_1d(t_arr))
        out = np.zeros((self.n, idx.size))
        out[idx, np.arange(idx.size)] = 1.0
        if t_arr.ndim == 0:
            return out[:, 0]
        return out


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("time points must lie in [0, 1]")
    return t


def make_rectangular_basis(n: int) -> BasisFamily:
    """Build ``n`` uniformly spaced rectangular basis functions on [0, 1]."""
    return BasisFamily(n=n, kind=RECTANGULAR)


def eval_basis(basis: BasisFamily, t: float) -> np.ndarray:
    """Evaluate ``psi(t)`` for a scalar ``t``; returns a length-``n`` vector."""
    if np.ndim(t) != 0:
        raise ValueError("eval_basis expects a scalar time; use design_matrix")
    return basis.evaluate(t)


def uniform_times(l: int) -> np.ndarray:
    """Evenly spaced, endpoint-inclusive times for ``l`` samples.

    A single sample is placed at 0.5.
    """
    if isinstance(l, bool) or int(l) != l or l < 1:
        raise ValueError(f"number of time points must be >= 1, got {l}")
    l = int(l)
    if l == 1:
        return np.array([0.5])
    return np.arange(l) / (l - 1)


def design_matrix(basis: BasisFamily, times) -> np.ndarray:
    """Stack ``psi(t_l)`` as columns, giving the ``(n, L)`` matrix ``F``."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be non-decreasing")
    return basis.evaluate(times)
