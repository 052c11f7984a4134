"""Ridge-regression compression of a discrete memory into basis coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import RECTANGULAR, BasisFamily, design_matrix, uniform_times
from .errors import DimensionError

DEFAULT_LAMBDA = 1e-3


def as_memory(x, name: str = "memory") -> np.ndarray:
    """Validate a stored-pattern matrix and return it as float64 ``(L, D)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


@dataclass(frozen=True, eq=False)
class ContinuousMemory:
    """Coefficient matrix ``B`` (n x D) with the basis and fit metadata.

    The reconstruction is ``x_bar(t) = B.T @ psi(t)``.
    """

    coeffs: np.ndarray
    basis: BasisFamily
    lam: float
    times: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != self.basis.n:
            raise DimensionError(
                f"coefficients need {self.basis.n} rows, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients contain non-finite entries")
        if not self.lam > 0:
            raise ValueError(f"ridge parameter must be > 0, got {self.lam}")
        coeffs.setflags(write=False)
        times = np.array(self.times, dtype=float)
        times.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]


def _solve_dense(f: np.ndarray, x: np.ndarray, lam: float) -> np.ndarray:
    gram = f @ f.T
    gram[np.diag_indices_from(gram)] += lam
    return cho_solve(cho_factor(gram, lower=True), f @ x)


def _solve_diagonal(basis: BasisFamily, times: np.ndarray, x: np.ndarray, lam: float):
    # One-hot design: F F^T is diagonal with per-cell sample counts.
    cells = basis.cell_index(times)
    counts = np.bincount(cells, minlength=basis.n).astype(float)
    sums = np.zeros((basis.n, x.shape[1]))
    np.add.at(sums, cells, x)
    return sums / (counts + lam)[:, None]


def fit_continuous_memory(
    x, basis: BasisFamily, lam: float = DEFAULT_LAMBDA, method: str = "auto"
) -> ContinuousMemory:
    """Fit ``B`` so that ``B.T @ psi(t_l)`` approximates each stored pattern.

    Solves the regularized normal equations ``(F F^T + lam I) B = F X`` with
    ``F`` the design matrix at :func:`uniform_times` of the memory length.

    Args:
        x: Stored patterns, shape ``(L, D)``.
        basis: Basis family defining ``psi``.
        lam: Ridge parameter, strictly positive.
        method: ``"diagonal"`` (rectangular bases only), ``"dense"`` (Cholesky
            on the n x n system) or ``"auto"`` to pick the diagonal path when
            it applies.

    Raises:
        ValueError: On non-positive ``lam``, non-finite data or unknown method.
    """
    x = as_memory(x)
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"ridge parameter must be > 0, got {lam}")
    times = uniform_times(x.shape[0])
    if method == "auto":
        method = "diagonal" if basis.kind == RECTANGULAR else "dense"
    if method == "diagonal":
        if basis.kind != RECTANGULAR:
            raise ValueError("diagonal solve requires a rectangular basis")
        coeffs = _solve_diagonal(basis, times, x, lam)
    elif method == "dense":
        coeffs = _solve_dense(design_matrix(basis, times), x, lam)
    else:
        raise ValueError(f"unknown solve method {method!r}")
    return ContinuousMemory(coeffs=coeffs, basis=basis, lam=lam, times=times)


def reconstruct(cm: ContinuousMemory, t) -> np.ndarray:
    """Evaluate ``x_bar(t)``; scalar ``t`` gives ``(D,)``, a vector gives ``(len(t), D)``."""
    t_arr = np.asarray(t, dtype=float)
    rows = cm.coeffs[cm.basis.cell_index(np.atleast_1d(t_arr))]
    return rows[0] if t_arr.ndim == 0 else rows


def reconstruction_error(cm: ContinuousMemory, x) -> float:
    """Mean squared reconstruction error over the stored patterns."""
    x = as_memory(x)
    if x.shape[1] != cm.d:
        raise DimensionError(f"memory has D={x.shape[1]}, model has D={cm.d}")
    recon = reconstruct(cm, uniform_times(x.shape[0]))
    return float(np.mean(np.sum((recon - x) ** 2, axis=1)))


def ridge_objective(coeffs, x, basis: BasisFamily, lam: float) -> float:
    """``||F^T B - X||_F^2 + lam ||B||_F^2`` at the memory's uniform times."""
    x = as_memory(x)
    f = design_matrix(basis, uniform_times(x.shape[0]))
    resid = f.T @ coeffs - x
    return float(np.sum(resid**2) + lam * np.sum(np.asarray(coeffs) ** 2))
