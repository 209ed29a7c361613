"""Two-photon interference fringes after conversion at both receivers.

The pulse count per point is reduced so the script finishes in a few seconds;
the CLI and the acceptance tests use the scenario's full budget.
"""

import numpy as np

from qconvsim.experiments import bell_check, fit_visibility, run_fringe_scan
from qconvsim.io import load_shipped

sc = load_shipped("calibrated")

for scan, phi_b in (("alice_phase", 0.0), ("alice_phase", np.pi / 2), ("source_theta", 0.0)):
    data = run_fringe_scan(sc, scan=scan, phi_b=phi_b, pulses_per_point=10**9)
    fit = fit_visibility(data)
    print(
        f"{scan:12} phi_B={phi_b:.2f}  V = {fit.visibility:.3f} +- {fit.visibility_stderr:.3f}"
        f"  phase {fit.phase_offset:+.2f}  Bell violation possible: {bell_check(fit)}"
    )

# A coarse text plot of the last scan.
top = data.coincidences.max()
for x, y in zip(data.scan_values, data.coincidences):
    print(f"{x:5.2f} {'#' * int(40 * y / top)}")
