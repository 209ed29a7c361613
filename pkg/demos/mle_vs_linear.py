"""Linear inversion against maximum likelihood on a small, noisy data set.

With few counts, linear inversion often lands outside the Bloch ball.
The likelihood fit always returns a valid density matrix.
"""

import numpy as np

from qconvsim.statekit import KET_PLUS_I, density_of, fidelity, is_physical
from qconvsim.tomography import linear_reconstruct, mle_reconstruct, run_tomography

rng = np.random.default_rng(3)
target = density_of(KET_PLUS_I)

bad = 0
for trial in range(20):
    counts = run_tomography(target, shots=30, noise=True, rng=rng)
    rho_lin, ok = linear_reconstruct(counts)
    res = mle_reconstruct(counts, target=target)
    bad += not ok
    print(f"{trial:2d}  linear physical {str(ok):5}  MLE F = {res.fidelity_vs_target:.4f}  MLE physical {is_physical(res.rho_rec, atol=1e-7)}")
print(f"{bad} of 20 linear estimates were not physical")

# Noise-free counts: linear inversion is exact.
exact = run_tomography(target, shots=10**6, noise=False)
rho_lin, _ = linear_reconstruct(exact)
print("exact-count linear fidelity", round(fidelity(rho_lin, target), 12))
