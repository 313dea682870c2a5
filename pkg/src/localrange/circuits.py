"""Parameterized gates, the layered hardware-efficient ansatz, and circuit assembly.

Rotation convention: R_P(theta) = exp(-i theta P / 2). Circuits are
materialized as dense unitaries because the variation-range optimization
re-evaluates the cost for many local gates while V1, V2 stay fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .linalg import PAULI, BipartitePartition, DimensionError, kron, permute_qubits

ROTATION_KINDS = ("rx", "ry", "rz")


@dataclass(frozen=True)
class GateSpec:
    """One gate: a single-qubit rotation or a CZ between two qubits.

    ``angle=None`` marks a free parameter (filled in by a parameterized
    circuit); CZ has no angle.
    """

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.lower())
        if self.kind not in ROTATION_KINDS + ("cz",):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "cz" and self.control is None:
            raise ValueError("cz gate needs a control qubit")


@dataclass(frozen=True)
class CircuitEnsemble:
    """Recipe for sampling V1 or V2.

    kind: 'identity' | 'one_design_layer' | 'hardware_efficient' | 'haar'.
    ``layers`` applies to hardware_efficient only and defaults to 10 * n.
    """

    kind: str
    n: int
    layers: int | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "one_design_layer", "hardware_efficient", "haar"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if self.layers is not None and self.layers < 0:
            raise ValueError("layer count must be nonnegative")

    @property
    def effective_layers(self) -> int:
        return 10 * self.n if self.layers is None else self.layers


@dataclass(frozen=True)
class LocalUnitaryParams:
    """Parameters of the tunable local gate.

    Three Euler angles (phi, theta, alpha) for one qubit, or 15 generator
    coefficients for a two-qubit gate.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) not in (3, 15):
            raise ValueError("expected 3 Euler angles (m=1) or 15 coefficients (m=2)")

    @property
    def m(self) -> int:
        return 1 if len(self.values) == 3 else 2


def rotation(axis: str, theta: float) -> np.ndarray:
    """exp(-i theta P / 2) for P in {X, Y, Z}."""
    p = PAULI[axis.upper()]
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return c * np.eye(2, dtype=complex) - 1j * s * p


def euler_zyz(phi: float, theta: float, alpha: float) -> np.ndarray:
    """Rz(phi) Ry(theta) Rz(alpha)."""
    return rotation("z", phi) @ rotation("y", theta) @ rotation("z", alpha)


@lru_cache(maxsize=None)
def _cz_chain_diag(n: int) -> np.ndarray:
    """Diagonal of the nearest-neighbor CZ chain on qubits 0..n-1."""
    diag = np.ones(2**n)
    for idx in range(2**n):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        flips = sum(bits[q] and bits[q + 1] for q in range(n - 1))
        if flips % 2:
            diag[idx] = -1.0
    return diag


def _cz_diag(n: int, control: int, target: int) -> np.ndarray:
    diag = np.ones(2**n)
    for idx in range(2**n):
        if (idx >> (n - 1 - control)) & 1 and (idx >> (n - 1 - target)) & 1:
            diag[idx] = -1.0
    return diag


def apply_single_qubit(mat: np.ndarray, gate2: np.ndarray, q: int, n: int) -> np.ndarray:
    """Left-multiply a single-qubit gate on qubit q into a dense d x d matrix."""
    d = 2**n
    view = mat.reshape(2**q, 2, 2 ** (n - 1 - q), d)
    return np.einsum("ab,xbyc->xayc", gate2, view).reshape(d, d)


def gate_matrix(g: GateSpec, n: int) -> np.ndarray:
    """Full 2^n x 2^n unitary embedding the gate."""
    for q in (g.target,) + (() if g.control is None else (g.control,)):
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range for n={n}")
    if g.kind == "cz":
        return np.diag(_cz_diag(n, g.control, g.target)).astype(complex)
    if g.angle is None:
        raise ValueError("rotation gate has no angle bound")
    g2 = rotation(g.kind[1], g.angle)
    return apply_single_qubit(np.eye(2**n, dtype=complex), g2, g.target, n)


def sample_circuit(ensemble: CircuitEnsemble, rng: np.random.Generator) -> np.ndarray:
    """Draw one dense unitary from the ensemble."""
    n = ensemble.n
    d = 2**n
    if ensemble.kind == "identity":
        return np.eye(d, dtype=complex)
    if ensemble.kind == "haar":
        from .haar import haar_random_unitary

        return haar_random_unitary(d, rng)
    if ensemble.kind == "one_design_layer":
        u = np.eye(1, dtype=complex)
        for _ in range(n):
            phi, theta, alpha = rng.uniform(0.0, 2 * np.pi, size=3)
            u = np.kron(u, euler_zyz(phi, theta, alpha))
        return u
    # hardware_efficient: Ry(pi/4) on every qubit, then `layers` random layers of
    # uniform-axis rotations plus the nearest-neighbor CZ chain.
    u = np.eye(1, dtype=complex)
    ry8 = rotation("y", np.pi / 4)
    for _ in range(n):
        u = np.kron(u, ry8)
    cz = _cz_chain_diag(n)
    for _ in range(ensemble.effective_layers):
        axes = rng.integers(0, 3, size=n)
        angles = rng.uniform(0.0, 2 * np.pi, size=n)
        for q in range(n):
            u = apply_single_qubit(u, rotation("xyz"[axes[q]], angles[q]), q, n)
        u = cz[:, None] * u
    return u


_SU4_GENERATORS: list[np.ndarray] | None = None


def su4_generators() -> list[np.ndarray]:
    """The 15 nonidentity two-qubit Pauli words, in lexicographic order."""
    global _SU4_GENERATORS
    if _SU4_GENERATORS is None:
        _SU4_GENERATORS = [
            np.kron(PAULI[a], PAULI[b]) for a in "IXYZ" for b in "IXYZ" if a + b != "II"
        ]
    return _SU4_GENERATORS


def local_unitary(params: LocalUnitaryParams) -> np.ndarray:
    """The tunable local gate: ZYZ Euler angles (m=1) or exp(-i sum c_k G_k) (m=2)."""
    if params.m == 1:
        return euler_zyz(*params.values)
    gen = sum(c * g for c, g in zip(params.values, su4_generators()))
    return expm(-1j * gen)


def embed_local(ua: np.ndarray, part: BipartitePartition) -> np.ndarray:
    """Embed a d_A x d_A gate at part.a_sites, identity elsewhere."""
    if ua.shape[0] != part.d_A:
        raise DimensionError(f"local gate dim {ua.shape[0]} != d_A={part.d_A}")
    full = kron(ua, np.eye(part.d_B, dtype=complex))
    order = list(part.a_sites) + list(part.b_sites)
    if order == list(range(part.n)):
        return full
    return permute_qubits(full, order)


def assemble(v1, ua, v2, part: BipartitePartition) -> np.ndarray:
    """The full circuit V2 (U_A x I_B) V1."""
    from .linalg import as_matrix

    m1, m2, ma = as_matrix(v1), as_matrix(v2), np.asarray(ua, dtype=complex)
    d = part.d
    if m1.shape[0] != d or m2.shape[0] != d:
        raise DimensionError("V1/V2 dimension does not match the partition")
    return m2 @ embed_local(ma, part) @ m1
