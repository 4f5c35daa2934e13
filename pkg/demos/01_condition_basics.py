"""Condition number of a rank-1 decomposition, step by step.

Run with ``python3 demos/01_condition_basics.py``.
"""

import numpy as np

from cpdlab import (
    NormalStream,
    Rank1Tuple,
    SampleSpec,
    TensorFormat,
    condition_number,
    condition_oracle,
    illposed_shared_first_factor,
    random_rank1_tuple,
    terracini_matrix,
)

fmt = TensorFormat((7, 7, 5))
print(f"format {fmt}: ambient dimension {fmt.ambient_dim}, Segre dimension {fmt.segre_dim}")

# a random decomposition with seven terms
t = random_rank1_tuple(SampleSpec(fmt, r=7, seed=1), 0)
T = terracini_matrix(t)
print(f"Terracini matrix: {T.rows} x {T.cols}")

sigma = np.linalg.svd(T.data, compute_uv=False)
print(f"singular values: largest {sigma[0]:.4f}, smallest {sigma[-1]:.3e}")

res = condition_number(t)
print(f"kappa = {res.kappa:.6g} (oracle {condition_oracle(t):.6g})")

# rescaling the terms leaves kappa unchanged
scaled = Rank1Tuple([term.scaled(s) for term, s in zip(t.terms, [2, -3, 0.5, 7, 1, 1, 10])])
print(f"kappa after rescaling terms = {condition_number(scaled).kappa:.6g}")

# a single term always has kappa = 1
print(f"r = 1: kappa = {condition_number(random_rank1_tuple(SampleSpec(fmt, 1, 1), 0)).kappa!r}")

# sharing a mode-1 factor between two terms makes the decomposition ill-posed
bad = illposed_shared_first_factor(TensorFormat((11, 10, 5)), 3, NormalStream(1))
print("shared first factor:", condition_number(bad).as_dict())

# too many terms for the ambient space: infinite without any SVD
wide = random_rank1_tuple(SampleSpec((2, 2, 2), r=3, seed=0), 0)
print("r n > ambient dimension:", condition_number(wide).as_dict())
