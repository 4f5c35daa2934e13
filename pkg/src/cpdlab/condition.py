"""Geometric condition number of a rank-1 decomposition.

The Terracini matrix of ``(A_1, ..., A_r)`` stacks orthonormal bases of the
tangent spaces ``T_{A_i} S`` side by side. The condition number is the
inverse of its ``(r n)``-th singular value, and is infinite when the tangent
spaces are not in general position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidArgumentError
from .geometry import _kron_columns, tangent_frames
from .tensor import Rank1Tuple

__all__ = [
    "INFINITY_RTOL",
    "TerraciniMatrix",
    "ConditionResult",
    "terracini_matrix",
    "condition_number",
    "condition_oracle",
    "condition_numbers_batch",
    "kappa_from_singular_values",
]

# sigma_min below INFINITY_RTOL * (bound on |T|_2) is reported as kappa = inf
INFINITY_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class TerraciniMatrix:
    """``Π x (r n)`` matrix; block ``i`` holds the tangent basis of term ``i``."""

    data: NDArray[np.float64]
    r: int
    n: int

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def block(self, i: int) -> NDArray[np.float64]:
        return self.data[:, i * self.n:(i + 1) * self.n]

    def norm_bound(self) -> float:
        """Upper bound ``sqrt(|T|_1 |T|_inf)`` on the spectral norm."""
        return float(_norm_bounds(self.data))

    def to_csv(self, path: str | Path) -> None:
        """Debug dump: ``Π`` rows of comma-separated values, canonical row order."""
        np.savetxt(path, self.data, delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of a condition number evaluation.

    ``kappa`` is ``math.inf`` exactly when ``infinite`` is set; callers doing
    statistics should branch on ``infinite`` rather than on the float.
    """

    kappa: float
    sigma_min: float
    rows: int
    cols: int
    infinite: bool
    shape_forced_infinite: bool = False

    def as_dict(self) -> dict:
        return {
            "kappa": None if self.infinite else self.kappa,
            "sigma_min": self.sigma_min,
            "rows": self.rows,
            "cols": self.cols,
            "infinite": self.infinite,
            "shape_forced_infinite": self.shape_forced_infinite,
        }


def _unit_factor_stacks(t: Rank1Tuple) -> list[NDArray[np.float64]]:
    return _normalize_rows([
        np.stack([term.factors[k] for term in t.terms]) for k in range(t.format.order)
    ])


def _normalize_rows(stacks: list[NDArray[np.float64]]) -> list[NDArray[np.float64]]:
    return [f / np.linalg.norm(f, axis=-1, keepdims=True) for f in stacks]


def _assemble(frames: NDArray[np.float64]) -> NDArray[np.float64]:
    # (..., r, Π, n) -> (..., Π, r n), block i = frame of term i
    *lead, r, rows, n = frames.shape
    return np.moveaxis(frames, -3, -2).reshape(*lead, rows, r * n)


def terracini_matrix(t: Rank1Tuple) -> TerraciniMatrix:
    if not isinstance(t, Rank1Tuple):
        t = Rank1Tuple(t)
    data = _assemble(tangent_frames(_unit_factor_stacks(t)))
    return TerraciniMatrix(data, r=t.r, n=t.format.segre_dim)


def _norm_bounds(T: NDArray[np.float64]) -> NDArray[np.float64]:
    a = np.abs(T)
    return np.sqrt(a.sum(axis=-2).max(axis=-1) * a.sum(axis=-1).max(axis=-1))


def kappa_from_singular_values(sigma: NDArray[np.float64], norm_bound: float) -> tuple[float, float]:
    """Return ``(kappa, sigma_min)`` from the singular values of a Terracini matrix."""
    sigma_min = float(sigma[-1])
    if sigma_min < INFINITY_RTOL * norm_bound:
        return math.inf, sigma_min
    return 1.0 / sigma_min, sigma_min


def condition_number(t: Rank1Tuple) -> ConditionResult:
    """Condition number of the decomposition ``t`` as ``1 / sigma_min(T)``.

    When ``r n > Π`` the Terracini matrix cannot have full column rank, so the
    result is infinite without an SVD.
    """
    if not isinstance(t, Rank1Tuple):
        t = Rank1Tuple(t)
    fmt = t.format
    rows, cols = fmt.ambient_dim, t.r * fmt.segre_dim
    if cols > rows:
        return ConditionResult(math.inf, 0.0, rows, cols, True, True)
    T = terracini_matrix(t)
    sigma = np.linalg.svd(T.data, compute_uv=False)
    kappa, sigma_min = kappa_from_singular_values(sigma, T.norm_bound())
    return ConditionResult(kappa, sigma_min, rows, cols, math.isinf(kappa))


def condition_numbers_batch(factors: list[NDArray[np.float64]]) -> NDArray[np.float64]:
    """Condition numbers of a stack of decompositions sharing one format.

    ``factors[k]`` has shape ``(B, r, n_k)`` (factor vectors need not be
    normalized). Returns ``B`` values, ``inf`` where ill-posed. Same arithmetic
    as :func:`condition_number`, vectorized over the batch.
    """
    stacks = [np.asarray(f, dtype=np.float64) for f in factors]
    _, r, _ = stacks[0].shape
    dims = [f.shape[-1] for f in stacks]
    rows, cols = int(np.prod(dims)), r * (1 - len(dims) + sum(dims))
    if cols > rows:
        return np.full(stacks[0].shape[0], np.inf)
    T = _assemble(tangent_frames(_normalize_rows(stacks)))
    sigma_min = np.linalg.svd(T, compute_uv=False)[..., -1]
    kappa = 1.0 / sigma_min
    kappa[sigma_min < INFINITY_RTOL * _norm_bounds(T)] = np.inf
    return kappa


_ORACLE_SEED = 0x5EED_0AC1E


def _random_frame(factors, rng: np.random.Generator) -> NDArray[np.float64]:
    """Orthonormal tangent frame built from random (non-orthogonal) directions."""
    units = [(f / np.linalg.norm(f))[:, None] for f in factors]
    cols = [_kron_columns(units)]
    for k, u in enumerate(units):
        g = rng.standard_normal((u.shape[0], u.shape[0]))
        cols.append(_kron_columns(units[:k] + [g] + units[k + 1:]))
    spanning = np.hstack(cols)
    n = 1 - len(factors) + sum(u.shape[0] for u in units)
    q, _, _ = np.linalg.svd(spanning, full_matrices=False)
    return q[:, :n]


def condition_oracle(t: Rank1Tuple) -> float:
    """Independent evaluation of the condition number.

    Each tangent space is spanned by randomly chosen directions and then
    orthonormalized by SVD, and kappa is taken as the spectral norm of the
    pseudoinverse of the resulting matrix. It shares no code with
    :func:`condition_number` beyond the Kronecker column helper.
    """
    if not isinstance(t, Rank1Tuple):
        t = Rank1Tuple(t)
    fmt = t.format
    if t.r * fmt.segre_dim > fmt.ambient_dim:
        raise InvalidArgumentError(
            f"oracle needs r*n <= Π, got {t.r}*{fmt.segre_dim} > {fmt.ambient_dim}"
        )
    rng = np.random.default_rng(_ORACLE_SEED)
    T = np.hstack([_random_frame(term.factors, rng) for term in t.terms])
    return float(np.linalg.norm(np.linalg.pinv(T, rcond=1e-15), 2))
