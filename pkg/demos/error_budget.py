"""Which converter imperfection costs the most fidelity?

Each line switches on a single imperfection on top of the ideal device.
"""

from dataclasses import replace

from qconvsim.experiments import Scenario, device_fidelities
from qconvsim.io import load_shipped

cal = load_shipped("calibrated")
ideal = Scenario.ideal()


def mean_f(sc):
    f = device_fidelities(sc)
    return sum(f.values()) / len(f)


print(f"ideal       {mean_f(ideal):.4f}")
print(f"calibrated  {mean_f(cal):.4f}")
print(f"switch only {mean_f(ideal.with_(converter_alice=cal.converter_alice)):.4f}")
# jitter alone only drops events evenly from both slots, so the postselected state is untouched
print(f"detector only {mean_f(ideal.with_(detector_alice=cal.detector_alice)):.4f}")
for er in (10.0, 17.0, 25.0):
    eos = replace(cal.converter_alice.eos, er_through_db=er, er_cross_db=er)
    conv = replace(cal.converter_alice, eos=eos)
    print(f"switch ER {er:4.1f} dB  {mean_f(cal.with_(converter_alice=conv)):.4f}")
