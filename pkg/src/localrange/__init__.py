"""Variation range of variational-circuit costs under a single tunable local gate.

Measures how much the cost C = tr(H U rho U+) can change when one local gate
inside a random circuit is optimized freely, and checks the measured ranges
against their dimension-dependent upper bounds and the Haar-moment identities
behind them.
"""

from .circuits import CircuitEnsemble, GateSpec, LocalUnitaryParams, assemble, sample_circuit
from .harness import ExperimentConfig, ExperimentRow, fit_slope, run_layer_sweep, run_scaling
from .landscape import (
    AdamConfig,
    BoundReport,
    TransferTensor,
    VariationResult,
    bound_report,
    transfer_tensor,
    variation_range,
    variation_range_adam,
    variation_range_exact_m1,
    variation_range_grid,
)
from .linalg import BipartitePartition, Operator, PauliTerm

__all__ = [
    "AdamConfig",
    "BipartitePartition",
    "BoundReport",
    "CircuitEnsemble",
    "ExperimentConfig",
    "ExperimentRow",
    "GateSpec",
    "LocalUnitaryParams",
    "Operator",
    "PauliTerm",
    "TransferTensor",
    "VariationResult",
    "assemble",
    "bound_report",
    "fit_slope",
    "run_layer_sweep",
    "run_scaling",
    "sample_circuit",
    "transfer_tensor",
    "variation_range",
    "variation_range_adam",
    "variation_range_exact_m1",
    "variation_range_grid",
]

__version__ = "0.1.0"
