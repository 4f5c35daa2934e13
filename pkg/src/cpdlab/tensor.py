"""Dense and factored rank-1 tensors.

Dense tensors are stored as a flat vector in the canonical vectorization
order: the entry at 1-based multi-index ``(i_1, ..., i_d)`` lives at flat
position ``(i_1 - 1) + n_1 (i_2 - 1) + n_1 n_2 (i_3 - 1) + ...``, i.e. the
first mode varies fastest (Fortran order). Every matrix and CSV file produced
by this package uses this order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError, NotRankOneError

__all__ = [
    "TensorFormat",
    "DenseTensor",
    "Rank1Tensor",
    "Rank1Tuple",
    "outer_product",
    "vectorize",
    "inner_product",
    "extract_factors",
    "segre_dimension",
]


def _frozen(x: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(x, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TensorFormat:
    """Shape ``(n_1, ..., n_d)`` of a tensor space.

    For ``d >= 2`` every ``n_k`` must be at least 2. Dense plumbing such as
    :func:`outer_product` passes ``strict=False`` to allow size-1 modes; such
    formats have no Segre geometry attached.
    """

    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int], *, strict: bool = True):
        dims = tuple(int(n) for n in dims)
        if len(dims) == 0:
            raise InvalidArgumentError("a tensor format needs at least one mode")
        if any(n < 1 for n in dims):
            raise InvalidArgumentError(f"mode sizes must be positive, got {dims}")
        if strict and len(dims) >= 2 and any(n < 2 for n in dims):
            raise InvalidArgumentError(
                f"mode sizes must be >= 2 for tensors of order >= 2, got {dims}"
            )
        object.__setattr__(self, "dims", dims)

    @classmethod
    def parse(cls, text: str) -> "TensorFormat":
        """Parse ``"7,7,5"`` (also accepts ``x`` as separator)."""
        parts = text.replace("x", ",").replace("X", ",").split(",")
        try:
            return cls([int(p) for p in parts if p.strip()])
        except ValueError as exc:
            raise InvalidArgumentError(f"cannot parse format {text!r}") from exc

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def ambient_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def segre_dim(self) -> int:
        return 1 - self.order + sum(self.dims)

    def __str__(self) -> str:
        return "x".join(str(n) for n in self.dims)


@dataclass(frozen=True, eq=False)
class DenseTensor:
    format: TensorFormat
    entries: NDArray[np.float64]

    def __post_init__(self):
        entries = _frozen(self.entries).reshape(-1)
        if entries.size != self.format.ambient_dim:
            raise InvalidArgumentError(
                f"expected {self.format.ambient_dim} entries for format "
                f"{self.format}, got {entries.size}"
            )
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_array(cls, array: ArrayLike) -> "DenseTensor":
        """Wrap a d-dimensional numpy array (indexed ``[i_1, ..., i_d]``)."""
        array = np.asarray(array, dtype=np.float64)
        return cls(TensorFormat(array.shape, strict=False), array.reshape(-1, order="F"))

    def to_array(self) -> NDArray[np.float64]:
        return self.entries.reshape(self.format.dims, order="F")

    def __getitem__(self, index):
        return self.to_array()[index]


@dataclass(frozen=True, eq=False)
class Rank1Tensor:
    """A rank-1 tensor ``a_1 ⊗ ... ⊗ a_d`` kept in factored form."""

    factors: tuple[NDArray[np.float64], ...]

    def __init__(self, factors: Sequence[ArrayLike]):
        fs = tuple(_frozen(f).reshape(-1) for f in factors)
        if len(fs) == 0:
            raise InvalidArgumentError("a rank-1 tensor needs at least one factor")
        for k, f in enumerate(fs):
            if f.size == 0:
                raise InvalidArgumentError(f"factor {k} is empty")
            if not np.any(f):
                raise InvalidArgumentError(f"factor {k} is the zero vector")
        object.__setattr__(self, "factors", fs)

    @property
    def format(self) -> TensorFormat:
        return TensorFormat([f.size for f in self.factors])

    @property
    def norm(self) -> float:
        return float(np.prod([np.linalg.norm(f) for f in self.factors]))

    def normalized_factors(self) -> tuple[NDArray[np.float64], ...]:
        return tuple(f / np.linalg.norm(f) for f in self.factors)

    def scaled(self, alpha: float) -> "Rank1Tensor":
        return Rank1Tensor((alpha * self.factors[0],) + self.factors[1:])

    def to_dense(self) -> DenseTensor:
        return outer_product(self.factors)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rank1Tensor) or len(other.factors) != len(self.factors):
            return NotImplemented
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.factors, other.factors)
        )


@dataclass(frozen=True, eq=False)
class Rank1Tuple:
    """An ordered decomposition ``(A_1, ..., A_r)`` of rank-1 tensors."""

    format: TensorFormat
    terms: tuple[Rank1Tensor, ...]

    def __init__(self, terms: Sequence[Rank1Tensor | Sequence[ArrayLike]],
                 format: TensorFormat | None = None):
        terms = tuple(t if isinstance(t, Rank1Tensor) else Rank1Tensor(t) for t in terms)
        if len(terms) == 0:
            raise InvalidArgumentError("a rank-1 tuple needs at least one term")
        fmt = terms[0].format if format is None else format
        for i, t in enumerate(terms):
            if t.format != fmt:
                raise InvalidArgumentError(
                    f"term {i} has format {t.format}, expected {fmt}"
                )
        object.__setattr__(self, "format", fmt)
        object.__setattr__(self, "terms", terms)

    @property
    def r(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __getitem__(self, i) -> Rank1Tensor:
        return self.terms[i]

    def to_dense(self) -> DenseTensor:
        """The tensor ``A_1 + ... + A_r``."""
        total = sum(vectorize(t.to_dense()) for t in self.terms)
        return DenseTensor(self.format, total)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rank1Tuple):
            return NotImplemented
        return self.r == other.r and all(a == b for a, b in zip(self.terms, other.terms))


def outer_product(factors: Sequence[ArrayLike]) -> DenseTensor:
    """Dense tensor product ``f_1 ⊗ ... ⊗ f_d`` of a list of vectors."""
    if len(factors) == 0:
        raise InvalidArgumentError("outer_product needs at least one factor")
    vecs = [np.asarray(f, dtype=np.float64).reshape(-1) for f in factors]
    if any(v.size == 0 for v in vecs):
        raise InvalidArgumentError("outer_product factors must be nonempty")
    fmt = TensorFormat([v.size for v in vecs], strict=False)
    # kron(f_d, ..., f_1) is the mode-1-fastest vectorization
    flat = reduce(lambda acc, v: np.kron(v, acc), vecs[1:], vecs[0])
    return DenseTensor(fmt, flat)


def vectorize(t: DenseTensor | Rank1Tensor) -> NDArray[np.float64]:
    """Flat vector of length Π in canonical order (a read-only view for dense input)."""
    if isinstance(t, Rank1Tensor):
        return t.to_dense().entries
    return t.entries


def inner_product(a: Rank1Tensor, b: Rank1Tensor) -> float:
    """Euclidean inner product of two rank-1 tensors, computed factorwise."""
    if a.format != b.format:
        raise InvalidArgumentError(f"format mismatch: {a.format} vs {b.format}")
    return float(np.prod([fa @ fb for fa, fb in zip(a.factors, b.factors)]))


def _sign_normalize(u: NDArray[np.float64]) -> tuple[NDArray[np.float64], float]:
    # entries below this fraction of the max are treated as zero for the sign rule
    big = np.flatnonzero(np.abs(u) > 1e-8 * np.max(np.abs(u)))
    sign = 1.0 if u[big[0]] >= 0 else -1.0
    return sign * u, sign


def extract_factors(t: DenseTensor, tol: float = 1e-10) -> Rank1Tensor:
    """Recover factors of a numerically rank-1 dense tensor.

    Each factor is the dominant left singular vector of the corresponding
    mode-k unfolding. Factors 2..d are unit vectors whose first significant
    entry is positive; factor 1 carries the magnitude and the sign.

    Raises
    ------
    NotRankOneError
        If some unfolding has ``sigma_2 > tol * sigma_1``.
    """
    arr = t.to_array()
    d = arr.ndim
    if not np.any(arr):
        raise NotRankOneError("the zero tensor has no rank-1 factorization")
    units = []
    for k in range(d):
        unfolding = np.moveaxis(arr, k, 0).reshape(arr.shape[k], -1)
        u, s, _ = np.linalg.svd(unfolding, full_matrices=False)
        if s.size > 1 and s[1] > tol * s[0]:
            raise NotRankOneError(
                f"mode-{k + 1} unfolding has sigma_2/sigma_1 = {s[1] / s[0]:.3e} > {tol:g}"
            )
        units.append(_sign_normalize(u[:, 0])[0])
    scale = float(t.entries @ outer_product(units).entries)
    return Rank1Tensor([scale * units[0]] + units[1:])


def segre_dimension(fmt: TensorFormat | Sequence[int]) -> int:
    """Dimension ``1 - d + sum(n_k)`` of the manifold of rank-1 tensors."""
    if not isinstance(fmt, TensorFormat):
        fmt = TensorFormat(fmt)
    return fmt.segre_dim
