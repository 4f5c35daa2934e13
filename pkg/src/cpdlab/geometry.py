"""Tangent spaces of the Segre manifold and the distances between them.

Three notions of distance appear here:

* the Fubini-Study angle between projective points, its product version, and
  the weighted product version on decompositions (weights ``n - n_k``);
* the projection distance ``max sin(theta_i)`` between subspaces;
* the Riemannian Grassmann distance ``sqrt(sum theta_i**2)``.

The tuple versions combine per-space values as a root sum of squares.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError
from .tensor import Rank1Tensor, Rank1Tuple

__all__ = [
    "OrthoBasis",
    "Subspace",
    "PrincipalAngles",
    "orthonormal_complement",
    "tangent_basis",
    "tangent_frames",
    "fubini_study_distance",
    "product_fs_distance",
    "tuple_fs_distance",
    "weighted_distance",
    "principal_angles",
    "projection_distance",
    "grassmann_distance",
    "projection_distance_tuple",
    "grassmann_distance_tuple",
]

ORTHO_TOL = 1e-12
SMALL_ANGLE = 1e-4


@dataclass(frozen=True, eq=False)
class OrthoBasis:
    """``k`` orthonormal vectors in ``R^ambient_dim``, stored as matrix columns."""

    matrix: NDArray[np.float64]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim == 1:
            m = m[:, None]
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def vectors(self) -> list[NDArray[np.float64]]:
        return [self.matrix[:, j] for j in range(self.dim)]

    def gram_error(self) -> float:
        """``max |Q^T Q - I|``."""
        q = self.matrix
        return float(np.max(np.abs(q.T @ q - np.eye(self.dim)), initial=0.0))

    def check(self, tol: float = ORTHO_TOL) -> "OrthoBasis":
        err = self.gram_error()
        if err > tol:
            raise InvalidArgumentError(f"basis is not orthonormal (max |Gram - I| = {err:.2e})")
        return self


@dataclass(frozen=True, eq=False)
class Subspace:
    basis: OrthoBasis

    @classmethod
    def from_basis(cls, matrix: ArrayLike, check: bool = True) -> "Subspace":
        b = OrthoBasis(matrix)
        return cls(b.check() if check else b)

    @classmethod
    def span(cls, vectors: ArrayLike) -> "Subspace":
        """Subspace spanned by the columns of ``vectors`` (orthonormalized by QR)."""
        a = np.asarray(vectors, dtype=np.float64)
        if a.ndim == 1:
            a = a[:, None]
        q, _ = np.linalg.qr(a)
        return cls(OrthoBasis(q))

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def ambient_dim(self) -> int:
        return self.basis.ambient_dim

    def project(self, x: ArrayLike) -> NDArray[np.float64]:
        q = self.basis.matrix
        return q @ (q.T @ np.asarray(x, dtype=np.float64))

    def residual(self, x: ArrayLike) -> float:
        """Relative norm of the part of ``x`` orthogonal to the subspace."""
        x = np.asarray(x, dtype=np.float64)
        return float(np.linalg.norm(x - self.project(x)) / np.linalg.norm(x))


@dataclass(frozen=True, eq=False)
class PrincipalAngles:
    """Principal angles in radians, nondecreasing, each in ``[0, pi/2]``."""

    angles: NDArray[np.float64]

    def __post_init__(self):
        a = np.sort(np.clip(np.asarray(self.angles, dtype=np.float64), 0.0, np.pi / 2))
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    def __len__(self) -> int:
        return self.angles.size

    def __iter__(self):
        return iter(self.angles)


def _householder_complement(v: NDArray[np.float64]) -> NDArray[np.float64]:
    """Columns 2..m of the Householder reflector sending ``v`` to a multiple of ``e_1``.

    ``H = I - 2 w w^T / (w^T w)`` with ``w = v + sign(v_1) |v| e_1``. Works on
    stacks: ``v`` has shape ``(..., m)`` and the result ``(..., m, m - 1)``.
    """
    m = v.shape[-1]
    alpha = np.linalg.norm(v, axis=-1)
    w = np.array(v, dtype=np.float64, copy=True)
    w[..., 0] += np.where(v[..., 0] >= 0, alpha, -alpha)
    coef = -2.0 / np.einsum("...i,...i->...", w, w)
    h = coef[..., None, None] * w[..., :, None] * w[..., None, 1:]
    h[..., 1:, :] += np.eye(m - 1)
    return h


def orthonormal_complement(v: ArrayLike) -> OrthoBasis:
    """Orthonormal basis of ``v^⊥`` in ``R^m`` (``m - 1`` vectors), via a Householder reflector."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size == 0 or not np.any(v):
        raise InvalidArgumentError("orthonormal_complement needs a nonzero vector")
    return OrthoBasis(_householder_complement(v))


def _kron_columns(blocks: Sequence[NDArray[np.float64]]) -> NDArray[np.float64]:
    """Columnwise mode-1-fastest vectorization of ``b_1 ⊗ ... ⊗ b_d``.

    Each block is ``(..., n_k, c)`` where either all share ``c`` or ``c == 1``
    (broadcast); the result is ``(..., Π, c)``.
    """
    out = blocks[0]
    for b in blocks[1:]:
        prod = b[..., :, None, :] * out[..., None, :, :]
        out = prod.reshape(prod.shape[:-3] + (-1, prod.shape[-1]))
    return out


def tangent_frames(units: Sequence[NDArray[np.float64]]) -> NDArray[np.float64]:
    """Stacked orthonormal tangent bases from unit factor vectors.

    ``units[k]`` has shape ``(..., n_k)``; the result has shape ``(..., Π, n)``.
    Column order: the tensor itself, then for each mode ``k`` the tensors with
    factor ``k`` replaced by the columns of its Householder complement.
    """
    cols = [u[..., :, None] for u in units]
    blocks = [_kron_columns(cols)]
    for k, u in enumerate(units):
        blocks.append(_kron_columns(cols[:k] + [_householder_complement(u)] + cols[k + 1:]))
    return np.concatenate(blocks, axis=-1)


def tangent_basis(t: Rank1Tensor) -> OrthoBasis:
    """Orthonormal basis of the tangent space to the Segre manifold at ``t``.

    The first column is ``t / |t|``; then, mode by mode, the tensors obtained by
    swapping the (unit) k-th factor for each vector of its orthogonal
    complement. Returns ``segre_dim`` columns in ``R^Π``.
    """
    if not isinstance(t, Rank1Tensor):
        t = Rank1Tensor(t)
    return OrthoBasis(tangent_frames(t.normalized_factors()))


def _as_vector(x: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == 0 or not np.any(x):
        raise InvalidArgumentError("projective points need a nonzero representative")
    return x


def fubini_study_distance(x: ArrayLike, y: ArrayLike) -> float:
    """Angle in ``[0, pi/2]`` between the lines spanned by ``x`` and ``y``."""
    x, y = _as_vector(x), _as_vector(y)
    if x.size != y.size:
        raise InvalidArgumentError(f"dimension mismatch: {x.size} vs {y.size}")
    x = x / np.linalg.norm(x)
    y = y / np.linalg.norm(y)
    dot = float(x @ y)
    c = abs(dot)
    if c > 0.9:
        # arccos is ill-conditioned near 1; use the chord between aligned representatives
        chord = float(np.linalg.norm(x - np.copysign(1.0, dot) * y))
        return float(2.0 * np.arcsin(min(chord / 2.0, 1.0)))
    return float(np.arccos(min(c, 1.0)))


def product_fs_distance(p: Sequence[ArrayLike], q: Sequence[ArrayLike]) -> float:
    """Root sum of squares of componentwise Fubini-Study distances."""
    if len(p) != len(q):
        raise InvalidArgumentError(f"length mismatch: {len(p)} vs {len(q)}")
    return float(np.sqrt(sum(fubini_study_distance(a, b) ** 2 for a, b in zip(p, q))))


def _factor_lists(p) -> list[Sequence[ArrayLike]]:
    if isinstance(p, Rank1Tuple):
        return [t.factors for t in p.terms]
    if isinstance(p, Rank1Tensor):
        return [p.factors]
    return [t.factors if isinstance(t, Rank1Tensor) else t for t in p]


def _check_pair(p, q) -> tuple[list, list]:
    pf, qf = _factor_lists(p), _factor_lists(q)
    if len(pf) != len(qf):
        raise InvalidArgumentError(f"tuple length mismatch: {len(pf)} vs {len(qf)}")
    for a, b in zip(pf, qf):
        if [np.size(f) for f in a] != [np.size(f) for f in b]:
            raise InvalidArgumentError("format mismatch between decompositions")
    return pf, qf


def tuple_fs_distance(p, q) -> float:
    """Product Fubini-Study distance extended over the terms of two decompositions."""
    pf, qf = _check_pair(p, q)
    return float(np.sqrt(sum(product_fs_distance(a, b) ** 2 for a, b in zip(pf, qf))))


def weighted_distance(p, q) -> float:
    """Weighted distance between two decompositions (or two rank-1 tensors).

    Per term, ``d_w^2 = sum_k (n - n_k) * d_FS(p_k, q_k)^2`` with ``n`` the
    Segre dimension; the decomposition distance is the root sum over terms.
    Arguments may be :class:`Rank1Tuple`, :class:`Rank1Tensor`, or nested
    lists of factor vectors.
    """
    pf, qf = _check_pair(p, q)
    total = 0.0
    for a, b in zip(pf, qf):
        dims = [np.size(f) for f in a]
        n = 1 - len(dims) + sum(dims)
        total += sum((n - nk) * fubini_study_distance(x, y) ** 2
                     for nk, x, y in zip(dims, a, b))
    return float(np.sqrt(total))


def _matrix(u: Subspace | OrthoBasis | ArrayLike) -> NDArray[np.float64]:
    if isinstance(u, Subspace):
        return u.basis.matrix
    if isinstance(u, OrthoBasis):
        return u.matrix
    m = np.asarray(u, dtype=np.float64)
    return m[:, None] if m.ndim == 1 else m


def principal_angles(u, v) -> PrincipalAngles:
    """Principal angles between two subspaces given by orthonormal bases.

    Cosines come from the SVD of ``U^T V`` (clamped to [0, 1]). Angles below
    1e-4 are recomputed from the sines, i.e. the singular values of
    ``V - U U^T V``, which keeps full relative accuracy near zero.
    """
    a, b = _matrix(u), _matrix(v)
    if a.shape[0] != b.shape[0]:
        raise InvalidArgumentError(f"ambient dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if b.shape[1] > a.shape[1]:
        a, b = b, a
    k = b.shape[1]
    if k == 0:
        return PrincipalAngles(np.empty(0))
    cross = a.T @ b
    cos = np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)
    theta = np.arccos(cos)  # ascending, since cos is descending
    if theta[0] < SMALL_ANGLE:
        sin = np.clip(np.linalg.svd(b - a @ cross, compute_uv=False)[::-1], 0.0, 1.0)
        small = theta < SMALL_ANGLE
        theta[small] = np.arcsin(sin[small])
    return PrincipalAngles(theta)


def _check_equal_dims(u, v) -> None:
    a, b = _matrix(u), _matrix(v)
    if a.shape != b.shape:
        raise InvalidArgumentError(
            f"subspaces must have equal dimension and ambient space, got {a.shape} vs {b.shape}"
        )


def projection_distance(u, v) -> float:
    """Spectral distance ``|P_U - P_V|`` between equal-dimensional subspaces."""
    _check_equal_dims(u, v)
    theta = principal_angles(u, v).angles
    return float(np.max(np.sin(theta), initial=0.0))


def grassmann_distance(u, v) -> float:
    """Geodesic distance ``sqrt(sum theta_i^2)`` on the Grassmannian."""
    _check_equal_dims(u, v)
    return float(np.linalg.norm(principal_angles(u, v).angles))


def _tuple_distance(fn, us, vs) -> float:
    if len(us) != len(vs):
        raise InvalidArgumentError(f"tuple length mismatch: {len(us)} vs {len(vs)}")
    return float(np.sqrt(sum(fn(a, b) ** 2 for a, b in zip(us, vs))))


def projection_distance_tuple(us: Sequence, vs: Sequence) -> float:
    return _tuple_distance(projection_distance, us, vs)


def grassmann_distance_tuple(us: Sequence, vs: Sequence) -> float:
    return _tuple_distance(grassmann_distance, us, vs)
