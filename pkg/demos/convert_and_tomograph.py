"""Convert the six cardinal time-bin qubits to path qubits and reconstruct them.

Run with ``python3 demos/convert_and_tomograph.py``.
"""

import numpy as np

from qconvsim.experiments import average_fidelity, device_fidelities, run_single_qubit_conversion
from qconvsim.io import load_shipped

sc = load_shipped("calibrated")

# Device-level fidelities: no shot noise, just the converter and the slot window.
for label, f in device_fidelities(sc).items():
    print(f"device  {label:>2}  F = {f:.4f}")

# Full pipeline with finite counts and maximum-likelihood reconstruction.
results = run_single_qubit_conversion(sc)
for label, res in results:
    print(f"tomo    {label:>2}  F = {res.fidelity_vs_target:.4f}  linear physical: {res.linear_physical}")
print(f"average fidelity {average_fidelity(results):.4f}")

# The reconstructed |+> state, for a look at the coherence that survives.
rho = dict(results)["+"].rho_rec
np.set_printoptions(precision=3, suppress=True)
print(rho)
