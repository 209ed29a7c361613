"""Two-photon interference scans and visibility fitting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..stochastics import parallel_map
from .scenario import Scenario
from .twophoton import simulate

#: Two-photon visibility above which a CHSH inequality can be violated.
BELL_VISIBILITY = 1.0 / np.sqrt(2.0)

_SCAN_KEYS = {"alice_phase": 2, "source_theta": 3}


class FitError(RuntimeError):
    pass


def ideal_fringe(theta, phi_a, phi_b):
    """Normalized coincidence probability ``(1 + cos(phi_a + phi_b + 2 theta)) / 2``."""
    return 0.5 * (1.0 + np.cos(np.asarray(phi_a) + np.asarray(phi_b) + 2.0 * np.asarray(theta)))


@dataclass(frozen=True)
class FringeDataset:
    scan_values: np.ndarray
    coincidences: np.ndarray
    scan: str = "alice_phase"
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.scan_values, dtype=float)
        if np.any(np.diff(x) <= 0):
            raise ValueError("scan values must be strictly increasing")
        object.__setattr__(self, "scan_values", x)
        object.__setattr__(self, "coincidences", np.asarray(self.coincidences, dtype=np.int64))

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.coincidences)

    @property
    def omega(self) -> float:
        """Fringe phase advanced per unit of the scan variable (2 for the source phase)."""
        return 2.0 if self.scan == "source_theta" else 1.0

    def rows(self):
        return list(zip(self.scan_values.tolist(), self.coincidences.tolist(), self.stderr.tolist()))


@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    visibility: float
    phase_offset: float
    residual: float
    visibility_stderr: float
    omega: float = 1.0

    def curve(self, x):
        return self.amplitude * (1.0 + self.visibility * np.cos(self.omega * np.asarray(x) + self.phase_offset))

    def curve_visibility(self, n: int = 4096) -> float:
        c = self.curve(np.linspace(0.0, 2 * np.pi / self.omega, n, endpoint=False))
        return float((c.max() - c.min()) / (c.max() + c.min()))


def default_grid(points: int) -> np.ndarray:
    # one fringe period for the phase scan, two for the source phase
    return np.linspace(0.0, 2 * np.pi, points, endpoint=False)


def run_fringe_scan(
    sc: Scenario,
    scan: str | None = None,
    grid=None,
    phi_b: float | None = None,
    pulses_per_point: int | None = None,
) -> FringeDataset:
    """Coincidences between like X outputs (1-1 plus 2-2) along a phase scan."""
    scan = scan or sc.fringe.scan
    if scan not in _SCAN_KEYS:
        raise ValueError(f"unknown scan variable {scan!r}")
    grid = default_grid(sc.fringe.points) if grid is None else np.asarray(grid, dtype=float)
    if grid.size < 8:
        raise ValueError("a fringe scan needs at least 8 points")
    phi_b = sc.phase_bob if phi_b is None else phi_b
    pulses = sc.fringe.pulses_per_point if pulses_per_point is None else pulses_per_point

    def point(i):
        x = float(grid[i])
        if scan == "alice_phase":
            t = simulate(sc, pulses, (_SCAN_KEYS[scan], i), phase_alice=x, phase_bob=phi_b, theta=sc.source.theta, parallel=False)
        else:
            t = simulate(sc, pulses, (_SCAN_KEYS[scan], i), phase_alice=sc.phase_alice, phase_bob=phi_b, theta=x, parallel=False)
        return int(t.coincidences[1, 1] + t.coincidences[2, 2])

    counts = parallel_map(point, range(grid.size))
    fixed = {
        "phase_bob": phi_b,
        "pulses_per_point": int(pulses),
        "theta": sc.source.theta if scan == "alice_phase" else None,
        "phase_alice": sc.phase_alice if scan == "source_theta" else None,
    }
    return FringeDataset(grid, np.array(counts), scan, fixed)


def fit_visibility(d: FringeDataset, iterations: int = 3) -> FringeFit:
    """Weighted least-squares fit of ``A (1 + V cos(omega x + phi0))``.

    The model is linear in ``(A, A V cos phi0, -A V sin phi0)``, so it is solved
    directly with Poisson weights, re-evaluated at the fitted curve.  The
    visibility error comes from the parameter covariance.
    """
    x, y = d.scan_values, d.coincidences.astype(float)
    if x.size < 8:
        raise FitError("need at least 8 points")
    if y.sum() <= 0:
        raise FitError("no counts to fit")
    design = np.column_stack([np.ones_like(x), np.cos(d.omega * x), np.sin(d.omega * x)])
    var = np.maximum(y, 1.0)
    for _ in range(iterations):
        w = 1.0 / var
        normal = design.T @ (design * w[:, None])
        try:
            cov = np.linalg.inv(normal)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"singular fit: {exc}") from exc
        beta = cov @ (design.T @ (w * y))
        model = design @ beta
        var = np.maximum(model, 1.0)
    a, b, c = beta
    if a <= 0:
        raise FitError(f"nonpositive fitted mean {a:.3g}; residual {np.sum(w * (y - model) ** 2):.3g}")
    r = float(np.hypot(b, c))
    v = r / a
    if r > 0:
        grad = np.array([-v / a, b / (a * r), c / (a * r)])
        v_err = float(np.sqrt(grad @ cov @ grad))
    else:
        v_err = float(np.sqrt(0.5 * (cov[1, 1] + cov[2, 2])) / a)
    residual = float(np.sum((y - model) ** 2 / var))
    return FringeFit(float(a), float(v), float(np.arctan2(-c, b)), residual, v_err, d.omega)


def bell_check(v) -> bool:
    """True when the fringe visibility strictly exceeds ``1/sqrt(2)``."""
    vis = v.visibility if isinstance(v, FringeFit) else float(v)
    return bool(vis > BELL_VISIBILITY)
