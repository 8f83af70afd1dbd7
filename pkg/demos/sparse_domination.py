"""Walk through a sparse family, the operators on it and a maximal-function domination.

Run with ``python3 demos/sparse_domination.py``.
"""

import numpy as np

from dyadiclab import Domain
from dyadiclab.operators import dyadic_multilinear_maximal, maximal, sparse_operator
from dyadiclab.sparse import default_base, random_sparse, sparse_from_maximal, verify_sparse
from dyadiclab.weights import lognormal_weight

d = Domain(1, 6)
S = random_sparse(d, seed=3, eta=0.5)
print(f"{len(S)} cubes, witness method: {S.method}")

# the witness survives a round trip through the verifier
again = verify_sparse(S.cubes, 0.5, d)
print("re-verified:", again.method)

f, g = lognormal_weight(d, 1), lognormal_weight(d, 2)
A = sparse_operator(S, [f, g])
M = dyadic_multilinear_maximal([f, g])
print(f"max A_S(f, g) = {A.values.max():.4f}, max M(f, g) = {M.values.max():.4f}")

# a maximal function is dominated pointwise by a sparse operator built from its own level sets
T = sparse_from_maximal([f])
base = default_base(1, d.dim)
ratio = maximal(f).values / sparse_operator(T, [f]).values
print(f"sup M f / A_T f = {ratio.max():.4f} <= {base:g}")
assert np.all(ratio <= base * (1 + 1e-12))
