"""Reproducible random decompositions, ill-posed constructions and perturbations.

Random numbers come from Philox4x64-10, a counter-based generator. A stream
is identified by its key ``(seed, purpose)`` and three counter words, so a
sample can be regenerated from ``(seed, index)`` alone, independent of how the
work was split across processes.

Stream derivation rule (stable across releases):

* key = ``(seed, purpose)`` where purpose is one of the ``STREAM_*`` tags;
* counter = ``(0, w1, w2, w3)``; the low word is the block counter, the other
  three identify the stream (e.g. ``(0, 0, index)`` for random tuple ``index``);
* each raw 64-bit output ``x`` becomes a uniform ``(x >> 11) * 2**-53``;
  consecutive pairs ``(u1, u2)`` give two normals by Box-Muller,
  ``sqrt(-2 log(1 - u1)) * (cos, sin)(2 pi u2)``.

Within a random tuple the normals are laid out term-major, then mode-major:
term ``i`` mode ``k`` occupies a fixed slice determined only by ``i``, ``k`` and
the format.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidArgumentError, UnsupportedFormatError
from .tensor import Rank1Tensor, Rank1Tuple, TensorFormat

__all__ = [
    "STREAM_TUPLES",
    "STREAM_ANCHORS",
    "STREAM_PERTURBATIONS",
    "NormalStream",
    "SampleSpec",
    "random_rank1_tuple",
    "illposed_shared_first_factor",
    "illposed_shared_third_factor",
    "perturb_tuple",
    "parse_seed",
]

STREAM_TUPLES = 0
STREAM_ANCHORS = 1
STREAM_PERTURBATIONS = 2

_U64 = (1 << 64) - 1


class NormalSource(Protocol):
    def standard_normal(self, size=None) -> NDArray[np.float64]: ...


def parse_seed(value: int | str) -> int:
    """Seed as an unsigned 64-bit integer; strings may be decimal or ``0x`` hex."""
    try:
        seed = int(value, 0) if isinstance(value, str) else int(value)
    except ValueError as exc:
        raise InvalidArgumentError(f"invalid seed {value!r}") from exc
    if not 0 <= seed <= _U64:
        raise InvalidArgumentError(f"seed must fit in 64 unsigned bits, got {value!r}")
    return seed


class NormalStream:
    """Standard normal variates from one Philox counter stream.

    Parameters
    ----------
    seed : int
        64-bit seed, the first key word.
    purpose : int
        Second key word; separates unrelated uses of one seed.
    *words : int
        Up to three stream identifiers placed in the high counter words.
    """

    def __init__(self, seed: int, purpose: int = STREAM_TUPLES, *words: int):
        if len(words) > 3:
            raise InvalidArgumentError("at most three stream words")
        ids = [0] * (3 - len(words)) + [int(w) for w in words]
        self._bitgen = np.random.Philox(
            key=np.array([parse_seed(seed), purpose], dtype=np.uint64),
            counter=np.array([0] + ids, dtype=np.uint64),
        )
        self._spare: NDArray[np.float64] = np.empty(0)

    def _uniforms(self, n: int) -> NDArray[np.float64]:
        raw = self._bitgen.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def standard_normal(self, size=None):
        count = 1 if size is None else int(np.prod(size))
        need = count - self._spare.size
        fresh = np.empty(0)
        if need > 0:
            pairs = (need + 1) // 2
            u = self._uniforms(2 * pairs).reshape(pairs, 2)
            rad = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
            ang = 2.0 * np.pi * u[:, 1]
            fresh = np.column_stack((rad * np.cos(ang), rad * np.sin(ang))).reshape(-1)
        pool = np.concatenate((self._spare, fresh))
        out, self._spare = pool[:count], pool[count:]
        return float(out[0]) if size is None else out.reshape(size)


@dataclass(frozen=True)
class SampleSpec:
    format: TensorFormat
    r: int
    seed: int = 0
    count: int = 1

    def __post_init__(self):
        if not isinstance(self.format, TensorFormat):
            object.__setattr__(self, "format", TensorFormat(self.format))
        object.__setattr__(self, "seed", parse_seed(self.seed))
        if self.r < 1:
            raise InvalidArgumentError(f"r must be >= 1, got {self.r}")
        if self.count < 1:
            raise InvalidArgumentError(f"count must be >= 1, got {self.count}")


def _gaussian_terms(fmt: TensorFormat, r: int, rng: NormalSource) -> list[list[NDArray]]:
    dims = fmt.dims
    flat = rng.standard_normal(r * sum(dims))
    cuts = np.cumsum([0] + list(dims) * r)
    vecs = [flat[a:b] for a, b in zip(cuts[:-1], cuts[1:])]
    return [vecs[i * len(dims):(i + 1) * len(dims)] for i in range(r)]


def random_rank1_tuple(spec: SampleSpec, index: int) -> Rank1Tuple:
    """The ``index``-th random decomposition of ``spec``: i.i.d. N(0, 1) factor entries."""
    if not 0 <= index < spec.count:
        raise InvalidArgumentError(f"index {index} out of range for count {spec.count}")
    rng = NormalStream(spec.seed, STREAM_TUPLES, 0, 0, index)
    return Rank1Tuple(_gaussian_terms(spec.format, spec.r, rng), format=spec.format)


def _check_third_order(fmt: TensorFormat, r: int) -> None:
    if fmt.order != 3:
        raise UnsupportedFormatError(f"ill-posed constructions need 3 modes, got {fmt}")
    if r < 2:
        raise InvalidArgumentError(f"ill-posed constructions need r >= 2, got {r}")


def illposed_shared_first_factor(fmt: TensorFormat, r: int, rng: NormalSource) -> Rank1Tuple:
    """Random decomposition whose last term reuses the first term's mode-1 factor.

    ``A_1 + A_r = a ⊗ (b_1 ⊗ c_1 + x ⊗ y)`` has a positive-dimensional family
    of decompositions, so the condition number is infinite.
    """
    fmt = fmt if isinstance(fmt, TensorFormat) else TensorFormat(fmt)
    _check_third_order(fmt, r)
    terms = _gaussian_terms(fmt, r - 1, rng)
    n1, n2, n3 = fmt.dims
    terms.append([terms[0][0], rng.standard_normal(n2), rng.standard_normal(n3)])
    return Rank1Tuple(terms, format=fmt)


def illposed_shared_third_factor(fmt: TensorFormat, r: int, rng: NormalSource) -> Rank1Tuple:
    """Random decomposition whose last term reuses the first term's mode-3 factor.

    The tangent spaces at ``a_1 ⊗ b_1 ⊗ c`` and ``a_r ⊗ b_r ⊗ c`` both contain
    ``a_r ⊗ b_1 ⊗ c``, so they are not in general position.
    """
    fmt = fmt if isinstance(fmt, TensorFormat) else TensorFormat(fmt)
    _check_third_order(fmt, r)
    terms = _gaussian_terms(fmt, r - 1, rng)
    n1, n2, n3 = fmt.dims
    terms.append([rng.standard_normal(n1), rng.standard_normal(n2), terms[0][2]])
    return Rank1Tuple(terms, format=fmt)


def perturb_tuple(t: Rank1Tuple, scale: float, rng: NormalSource) -> Rank1Tuple:
    """Add ``scale * N(0, I)`` independently to every factor vector."""
    if scale < 0:
        raise InvalidArgumentError(f"scale must be nonnegative, got {scale}")
    if scale == 0:
        return t
    noise = _gaussian_terms(t.format, t.r, rng)
    terms = [
        [f + scale * x for f, x in zip(term.factors, xs)]
        for term, xs in zip(t.terms, noise)
    ]
    return Rank1Tuple([Rank1Tensor(fs) for fs in terms], format=t.format)
