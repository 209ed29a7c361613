"""Time-bin BBM92 key distribution, back to back and over fiber."""

from dataclasses import replace

from qconvsim.experiments import run_bbm92
from qconvsim.io import load_shipped

for name in ("calibrated", "calibrated_fiber"):
    sc = load_shipped(name)
    rep = run_bbm92(sc, pulses=10**10)
    print(
        f"{name:17} QBER {100 * rep.qber:.2f} %  (Z {100 * rep.qber_z:.2f}, X {100 * rep.qber_x:.2f})"
        f"  raw key rate {rep.raw_key_rate:.0f} bit/s  CAR {rep.car:.0f}"
    )

# Pair rate trades key rate against accidental coincidences.
sc = load_shipped("calibrated")
for mu in (3e-4, 1e-3, 3e-3, 1e-2):
    rep = run_bbm92(sc.with_(source=replace(sc.source, mean_pairs_per_pulse=mu)), pulses=5 * 10**9)
    print(f"mu {mu:.0e}  QBER {100 * rep.qber:5.2f} %  rate {rep.raw_key_rate:7.0f} bit/s  CAR {rep.car:8.1f}")
