"""Experiment runner: qubit-count scaling, layer sweeps, CSV and slope fits.

Three tasks are wired in: ground-state search on the periodic Heisenberg chain
(``vqe``), one-qubit compression of a Haar-random pure input (``qae``), and
state learning against |0...0> (``qsl``). For each (task, n) the tunable local
gate sits on qubit 0 (qubits 0 and 1 when m=2) and the surrounding circuits
are drawn per the ensemble configuration.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .circuits import CircuitEnsemble, sample_circuit
from .costs import heisenberg, qae_hamiltonian, qsl_hamiltonian
from .landscape import (
    AdamConfig,
    qsl_bound,
    task_tight_bound,
    theorem1_bound,
    tight_bound,
    transfer_tensor,
    variation_range_adam,
    variation_range_exact_m1,
    variation_range_grid,
)
from .linalg import BipartitePartition, random_pure_state, spectral_width

TASK_IDS = {"vqe": 0, "qae": 1, "qsl": 2}
ENSEMBLE_CONFIGS = {"v1_design": 0, "v2_design": 1, "both": 2}
DESIGN_KINDS = ("two_design", "one_design", "identity")
OPTIMIZERS = ("exact", "adam", "grid")

CSV_HEADER = (
    "task,n,m,ensemble_config,samples,mean_delta_over_w,std_delta,"
    "bound_general,bound_tight,bound_qsl,seed"
)


class ConfigError(ValueError):
    """Experiment configuration failed validation; message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    n_min: int
    n_max: int
    m: int = 1
    ensemble_config: str = "both"
    design_kind: str = "two_design"
    layers: int | None = None  # None: layers_multiplier * n for two_design
    layers_multiplier: int = 10
    samples: int = 20
    seed: int = 0
    optimizer: str = "exact"

    def __post_init__(self):
        if self.task not in TASK_IDS:
            raise ConfigError(f"task: expected one of {sorted(TASK_IDS)}, got {self.task!r}")
        if not (isinstance(self.n_min, int) and isinstance(self.n_max, int)):
            raise ConfigError("n_min/n_max: expected integers")
        if not 2 <= self.n_min <= self.n_max <= 12:
            raise ConfigError(
                f"n_min/n_max: need 2 <= n_min <= n_max <= 12, got [{self.n_min}, {self.n_max}]"
            )
        if self.m not in (1, 2):
            raise ConfigError(f"m: subsystem size must be 1 or 2, got {self.m}")
        if self.m >= self.n_min:
            raise ConfigError(f"m: must be smaller than every n, got m={self.m}, n_min={self.n_min}")
        if self.ensemble_config not in ENSEMBLE_CONFIGS:
            raise ConfigError(
                f"ensemble_config: expected one of {sorted(ENSEMBLE_CONFIGS)}, got {self.ensemble_config!r}"
            )
        if self.design_kind not in DESIGN_KINDS:
            raise ConfigError(f"design_kind: expected one of {DESIGN_KINDS}, got {self.design_kind!r}")
        if self.layers is not None and (not isinstance(self.layers, int) or self.layers < 0):
            raise ConfigError(f"layers: must be a nonnegative integer, got {self.layers!r}")
        if self.layers_multiplier < 0:
            raise ConfigError(f"layers_multiplier: must be nonnegative, got {self.layers_multiplier}")
        if not isinstance(self.samples, int) or self.samples < 2:
            raise ConfigError(f"samples: need at least 2, got {self.samples!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed: expected an integer, got {self.seed!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer: expected one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.m == 2 and self.optimizer != "adam":
            raise ConfigError("optimizer: m=2 requires the adam optimizer")


@dataclass(frozen=True)
class ExperimentRow:
    task: str
    n: int
    m: int
    ensemble_config: str
    samples: int
    mean_delta_over_w: float
    std_delta: float
    bound_general: float
    bound_tight: float
    bound_qsl: float | None
    seed: int


@dataclass(frozen=True)
class _TaskInstance:
    h: np.ndarray
    rho: np.ndarray | None  # fixed input state; None means drawn per sample
    w: float
    part: BipartitePartition


def _setup_task(task: str, n: int, m: int) -> _TaskInstance:
    part = BipartitePartition(n, tuple(range(m)))
    if task == "vqe":
        h = heisenberg(n, periodic=True)
        rho = np.zeros(2**n, dtype=complex)
        rho[0] = 1.0
    elif task == "qae":
        h = qae_hamiltonian(n, (n - 1,))
        rho = None
    else:  # qsl
        e0 = np.zeros(2**n, dtype=complex)
        e0[0] = 1.0
        h = qsl_hamiltonian(e0)
        rho = e0
    return _TaskInstance(h=h, rho=rho, w=spectral_width(h), part=part)


def _effective_layers(cfg: ExperimentConfig, n: int) -> int:
    if cfg.design_kind != "two_design":
        return 0
    return cfg.layers if cfg.layers is not None else cfg.layers_multiplier * n


def _side_ensemble(cfg: ExperimentConfig, n: int, layers: int) -> CircuitEnsemble:
    kind = {
        "two_design": "hardware_efficient",
        "one_design": "one_design_layer",
        "identity": "identity",
    }[cfg.design_kind]
    return CircuitEnsemble(kind=kind, n=n, layers=layers if kind == "hardware_efficient" else None)


def _sample_delta(cfg: ExperimentConfig, inst: _TaskInstance, n: int, k: int, layers: int) -> float:
    """Variation range for sample k, fully determined by the config and indices."""
    ss = np.random.SeedSequence(
        (cfg.seed, TASK_IDS[cfg.task], n, k, layers, ENSEMBLE_CONFIGS[cfg.ensemble_config])
    )
    rng_v1, rng_v2, rng_rho, rng_opt = (np.random.default_rng(s) for s in ss.spawn(4))
    ens = _side_ensemble(cfg, n, layers)
    v1 = v2 = None
    if cfg.ensemble_config in ("v1_design", "both") and ens.kind != "identity":
        v1 = sample_circuit(ens, rng_v1)
    if cfg.ensemble_config in ("v2_design", "both") and ens.kind != "identity":
        v2 = sample_circuit(ens, rng_v2)
    rho = inst.rho if inst.rho is not None else random_pure_state(2**n, rng_rho)
    t = transfer_tensor(inst.h, rho, v1, v2, inst.part)
    if cfg.optimizer == "exact":
        return variation_range_exact_m1(t).delta
    if cfg.optimizer == "grid":
        return variation_range_grid(t).delta
    acfg = AdamConfig(seed=int(rng_opt.integers(0, 2**63)))
    return variation_range_adam(t, acfg).delta


def _worker_count() -> int | None:
    raw = os.environ.get("BARREN_THREADS", "0")
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"BARREN_THREADS: expected an integer, got {raw!r}")
    return None if val <= 0 else val


def _run_point(cfg: ExperimentConfig, n: int, layers: int) -> ExperimentRow:
    inst = _setup_task(cfg.task, n, cfg.m)
    deltas = [0.0] * cfg.samples
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        futures = [pool.submit(_sample_delta, cfg, inst, n, k, layers) for k in range(cfg.samples)]
        for k, fut in enumerate(futures):
            deltas[k] = fut.result()
    mean = math.fsum(deltas) / cfg.samples
    var = math.fsum((d - mean) ** 2 for d in deltas) / (cfg.samples - 1)
    bound_general = theorem1_bound(inst.w, n, cfg.m)
    if cfg.task == "qsl":
        b_tight = tight_bound(inst.h, inst.part)
        b_qsl = qsl_bound(n, cfg.m)
    else:
        b_tight = task_tight_bound(cfg.task, n, inst.w)
        b_qsl = None
    row = ExperimentRow(
        task=cfg.task,
        n=n,
        m=cfg.m,
        ensemble_config=cfg.ensemble_config,
        samples=cfg.samples,
        mean_delta_over_w=mean / inst.w,
        std_delta=math.sqrt(var),
        bound_general=bound_general,
        bound_tight=b_tight,
        bound_qsl=b_qsl,
        seed=cfg.seed,
    )
    if row.mean_delta_over_w * inst.w > bound_general:
        raise AssertionError(
            f"mean variation range {mean} exceeds its bound {bound_general} at n={n}"
        )
    return row


def run_scaling(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """One row per n in [n_min, n_max], ascending; deterministic in the seed."""
    return [_run_point(cfg, n, _effective_layers(cfg, n)) for n in range(cfg.n_min, cfg.n_max + 1)]


def run_layer_sweep(cfg: ExperimentConfig, layer_list) -> dict[tuple[int, int], ExperimentRow]:
    """Rows keyed by (layers, n) for every layer count in layer_list."""
    layer_list = sorted({int(x) for x in layer_list})
    if any(x < 0 for x in layer_list):
        raise ConfigError(f"layers: counts must be nonnegative, got {layer_list}")
    if cfg.design_kind != "two_design":
        raise ConfigError("design_kind: layer sweeps only apply to two_design ensembles")
    out = {}
    for layers in layer_list:
        sub = replace(cfg, layers=layers)
        for n in range(cfg.n_min, cfg.n_max + 1):
            out[(layers, n)] = _run_point(sub, n, layers)
    return out


def fit_slope(rows) -> tuple[float, float, float]:
    """Least-squares slope of log2(mean) vs n; returns (slope, intercept, r2).

    ``rows`` is a list of ExperimentRow or (n, mean) pairs. Constant means give
    slope 0 and r2 = 0 rather than an error.
    """
    pts = []
    for r in rows:
        if isinstance(r, ExperimentRow):
            pts.append((r.n, r.mean_delta_over_w))
        else:
            pts.append((int(r[0]), float(r[1])))
    if len(pts) < 3:
        raise ValueError("need at least 3 rows to fit a slope")
    if any(mean <= 0 for _, mean in pts):
        raise ValueError("cannot fit a log-scale slope through nonpositive means")
    x = np.array([n for n, _ in pts], dtype=float)
    y = np.log2([mean for _, mean in pts])
    if np.allclose(y, y[0], atol=1e-12):
        return 0.0, float(y[0]), 0.0
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(intercept), r2


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17e")
    return str(x)


def emit_csv(rows, path) -> None:
    """Write rows with the fixed header; floats in full-precision scientific form."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.task, r.n, r.m, r.ensemble_config, r.samples,
                    r.mean_delta_over_w, r.std_delta, r.bound_general,
                    r.bound_tight, r.bound_qsl, r.seed,
                )
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
