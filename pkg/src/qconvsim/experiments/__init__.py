"""End-to-end experiments: single-qubit tomography, two-photon fringes and BBM92."""

from .fringes import (
    BELL_VISIBILITY,
    FitError,
    FringeDataset,
    FringeFit,
    bell_check,
    fit_visibility,
    ideal_fringe,
    run_fringe_scan,
)
from .qkd import NoKeyError, QkdReport, qber_visibility_consistency, run_bbm92, sift
from .scenario import (
    FringePlan,
    QkdPlan,
    Scenario,
    TomographyPlan,
    circuit_transmission,
    scenario_from_dict,
    scenario_to_dict,
    visibility_from_interference_er,
)
from .single_qubit import (
    CARDINAL_INPUTS,
    average_fidelity,
    device_fidelities,
    run_single_qubit_conversion,
)
