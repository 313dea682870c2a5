"""Variation range of the cost over one local gate, and the bounds it obeys.

The cost C(U_A) = tr(H V2 (U_A x I_B) V1 rho V1+ (U_A+ x I_B) V2+) is quadratic
in the entries of U_A, so everything outside subsystem A is contracted once
into a d_A^2 x d_A^2 transfer tensor; each candidate local gate then costs
O(d_A^4) to evaluate. For a single-qubit gate the range
max C - min C is available in closed form through a constrained orthogonal
Procrustes problem on the induced Bloch-sphere rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm, expm_frechet

from .circuits import (
    GateSpec,
    LocalUnitaryParams,
    apply_single_qubit,
    gate_matrix,
    rotation,
    su4_generators,
)
from .costs import generic_cost
from .linalg import (
    PAULI,
    BipartitePartition,
    DimensionError,
    as_matrix,
    kron,
    max_abs,
    partial_trace,
    permute_qubits,
    schatten_norm,
)

DEGENERACY_RTOL = 1e-10
COUPLING_CUTOFF = 1e-12
GRID_DEFAULT_RESOLUTION = 64


# ---------------------------------------------------------------------------
# transfer tensor


@dataclass(frozen=True)
class TransferTensor:
    """Quadratic form of the cost in the local gate: C(U) = sum T[ijkl] U_ij U*_kl."""

    part: BipartitePartition
    tensor: np.ndarray  # shape (d_A, d_A, d_A, d_A), indices (i, j, k, l)

    def __post_init__(self):
        d_a = self.part.d_A
        t = np.asarray(self.tensor, dtype=complex)
        if t.shape != (d_a, d_a, d_a, d_a):
            raise DimensionError(f"tensor shape {t.shape} != (d_A,)*4 with d_A={d_a}")
        object.__setattr__(self, "tensor", t)

    def evaluate(self, ua) -> float:
        u = np.asarray(ua, dtype=complex)
        val = np.einsum("ijkl,ij,kl->", self.tensor, u, u.conj())
        return float(val.real)

    def as_matrix(self) -> np.ndarray:
        d2 = self.part.d_A ** 2
        return self.tensor.reshape(d2, d2)


def _gather_a_front(mat: np.ndarray, part: BipartitePartition) -> np.ndarray:
    """Reorder tensor factors so subsystem A occupies the leading positions."""
    sigma = list(part.a_sites) + list(part.b_sites)
    if sigma == list(range(part.n)):
        return mat
    order = [0] * part.n
    for pos, q in enumerate(sigma):
        order[q] = pos
    return permute_qubits(mat, order)


def transfer_tensor(h, rho, v1, v2, part: BipartitePartition) -> TransferTensor:
    """Contract H, rho, V1, V2 into the quadratic form over the local gate.

    ``rho`` may be a density matrix or a pure-state vector; ``v1``/``v2`` may be
    None for identity (skips the conjugations).
    """
    hm = as_matrix(h)
    d, d_a, d_b = part.d, part.d_A, part.d_B
    if hm.shape[0] != d:
        raise DimensionError(f"H dim {hm.shape[0]} != 2^{part.n}")
    q = hm if v2 is None else as_matrix(v2).conj().T @ hm @ as_matrix(v2)
    rho_arr = np.asarray(rho, dtype=complex)
    if rho_arr.ndim == 1:
        if rho_arr.size != d:
            raise DimensionError(f"state dim {rho_arr.size} != 2^{part.n}")
        psi = rho_arr if v1 is None else as_matrix(v1) @ rho_arr
        r = np.outer(psi, psi.conj())
    else:
        rm = as_matrix(rho_arr)
        if rm.shape[0] != d:
            raise DimensionError(f"rho dim {rm.shape[0]} != 2^{part.n}")
        r = rm if v1 is None else as_matrix(v1) @ rm @ as_matrix(v1).conj().T
    q = _gather_a_front(q, part)
    r = _gather_a_front(r, part)
    qr = q.reshape(d_a, d_b, d_a, d_b)
    rr = r.reshape(d_a, d_b, d_a, d_b)
    t = np.einsum("kaib,jbla->ijkl", qr, rr, optimize=True)
    return TransferTensor(part=part, tensor=t)


# ---------------------------------------------------------------------------
# optimizers


@dataclass(frozen=True)
class VariationResult:
    max_value: float
    min_value: float
    delta: float
    argmax: LocalUnitaryParams
    argmin: LocalUnitaryParams
    method: str
    iterations: int
    converged: bool
    degenerate: bool = False


_PAULI_VEC = [PAULI[a] for a in "XYZ"]


def pauli_reduction_m1(t: TransferTensor) -> tuple[float, np.ndarray]:
    """Rewrite a single-qubit cost as c0 + tr(M^T R(U)) over Bloch rotations R."""
    if t.part.m != 1:
        raise DimensionError("Bloch reduction requires a single-qubit subsystem")
    sig = [PAULI["I"]] + _PAULI_VEC
    a = np.empty((4, 4), dtype=complex)
    for p in range(4):
        for q in range(4):
            a[p, q] = 0.5 * np.einsum("ijkl,ik,lj->", t.tensor, sig[p], sig[q])
    if max_abs(a.imag) > 1e-9 * max(1.0, max_abs(a.real)):
        raise ValueError("cost quadratic form is not real; H or rho not Hermitian?")
    return float(a[0, 0].real), a[1:, 1:].real.copy()


def _zyz_angles(r: np.ndarray) -> tuple[float, float, float]:
    """Euler angles (phi, theta, alpha) with Rz(phi) Ry(theta) Rz(alpha) = r."""
    c = float(np.clip(r[2, 2], -1.0, 1.0))
    if c > 1.0 - 1e-12:
        return float(np.arctan2(r[1, 0], r[0, 0])), 0.0, 0.0
    if c < -1.0 + 1e-12:
        return float(np.arctan2(-r[1, 0], -r[0, 0])), np.pi, 0.0
    theta = float(np.arccos(c))
    phi = float(np.arctan2(r[1, 2], r[0, 2]))
    alpha = float(np.arctan2(r[2, 1], -r[2, 0]))
    return phi, theta, alpha


def variation_range_exact_m1(t: TransferTensor) -> VariationResult:
    """Closed-form range via constrained Procrustes on the Bloch-transfer matrix."""
    c0, m = pauli_reduction_m1(t)
    u, s, vt = np.linalg.svd(m)
    det_sign = 1.0 if np.linalg.det(u @ vt) >= 0 else -1.0
    r_max = u @ np.diag([1.0, 1.0, det_sign]) @ vt
    # minimizing tr(M^T R) is maximizing for -M
    r_min = (-u) @ np.diag([1.0, 1.0, -det_sign]) @ vt
    max_val = c0 + s[0] + s[1] + det_sign * s[2]
    min_val = c0 - (s[0] + s[1] - det_sign * s[2])
    degenerate = bool(s[2] < DEGENERACY_RTOL * s[0]) if s[0] > 0 else True
    return VariationResult(
        max_value=max_val,
        min_value=min_val,
        delta=2.0 * (s[0] + s[1]),
        argmax=LocalUnitaryParams(_zyz_angles(r_max)),
        argmin=LocalUnitaryParams(_zyz_angles(r_min)),
        method="exact",
        iterations=0,
        converged=True,
        degenerate=degenerate,
    )


def _euler_grid(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """All resolution^3 ZYZ unitaries on the uniform [0, 2pi)^3 grid."""
    angles = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
    phi, theta, alpha = np.meshgrid(angles, angles, angles, indexing="ij")
    phi, theta, alpha = phi.ravel(), theta.ravel(), alpha.ravel()
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    us = np.empty((phi.size, 2, 2), dtype=complex)
    us[:, 0, 0] = np.exp(-0.5j * (phi + alpha)) * c
    us[:, 0, 1] = -np.exp(-0.5j * (phi - alpha)) * s
    us[:, 1, 0] = np.exp(0.5j * (phi - alpha)) * s
    us[:, 1, 1] = np.exp(0.5j * (phi + alpha)) * c
    return us, np.stack([phi, theta, alpha], axis=1)


_GRID_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def variation_range_grid(t: TransferTensor, resolution: int = GRID_DEFAULT_RESOLUTION) -> VariationResult:
    """Exhaustive scan of the Euler-angle grid; single-qubit subsystems only."""
    if t.part.m != 1:
        raise DimensionError("grid search requires a single-qubit subsystem")
    if resolution < 4:
        raise ValueError("grid resolution must be at least 4")
    if resolution not in _GRID_CACHE:
        _GRID_CACHE[resolution] = _euler_grid(resolution)
    us, angs = _GRID_CACHE[resolution]
    vals = np.einsum("ijkl,nij,nkl->n", t.tensor, us, us.conj(), optimize=True).real
    hi, lo = int(np.argmax(vals)), int(np.argmin(vals))
    return VariationResult(
        max_value=float(vals[hi]),
        min_value=float(vals[lo]),
        delta=float(vals[hi] - vals[lo]),
        argmax=LocalUnitaryParams(angs[hi]),
        argmin=LocalUnitaryParams(angs[lo]),
        method="grid",
        iterations=resolution**3,
        converged=True,
    )


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    iterations: int = 300
    restarts: int = 3
    grad_tol: float = 1e-6
    seed: int = 0


def _cost_and_grad_m1(t: TransferTensor, x: np.ndarray) -> tuple[float, np.ndarray]:
    phi, theta, alpha = x
    rz1, ry, rz2 = rotation("z", phi), rotation("y", theta), rotation("z", alpha)
    u = rz1 @ ry @ rz2
    gens = (
        -0.5j * PAULI["Z"] @ u,
        rz1 @ (-0.5j * PAULI["Y"]) @ ry @ rz2,
        u @ (-0.5j * PAULI["Z"]),
    )
    tu = np.einsum("ijkl,kl->ij", t.tensor, u.conj())
    val = float(np.einsum("ij,ij->", tu, u).real)
    grad = np.array([2.0 * np.einsum("ij,ij->", tu, du).real for du in gens])
    return val, grad


def _cost_and_grad_m2(t: TransferTensor, x: np.ndarray) -> tuple[float, np.ndarray]:
    gens = su4_generators()
    a = -1j * sum(c * g for c, g in zip(x, gens))
    u = expm(a)
    tu = np.einsum("ijkl,kl->ij", t.tensor, u.conj())
    val = float(np.einsum("ij,ij->", tu, u).real)
    grad = np.empty(15)
    for k, g in enumerate(gens):
        _, du = expm_frechet(a, -1j * g)
        grad[k] = 2.0 * np.einsum("ij,ij->", tu, du).real
    return val, grad


def _adam_run(fg, x0: np.ndarray, sign: float, cfg: AdamConfig) -> tuple[np.ndarray, float, int, bool]:
    """Maximize sign * cost starting from x0. Returns (x, best value, iters, converged)."""
    x = x0.astype(float).copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    val, grad = fg(x)
    best_x, best_val = x.copy(), sign * val
    it, converged = 0, False
    for it in range(1, cfg.iterations + 1):
        g = sign * grad
        if float(np.linalg.norm(g)) < cfg.grad_tol:
            converged = True
            it -= 1
            break
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        mhat = m / (1 - cfg.beta1**it)
        vhat = v / (1 - cfg.beta2**it)
        x = x + cfg.learning_rate * mhat / (np.sqrt(vhat) + 1e-8)
        val, grad = fg(x)
        if sign * val > best_val:
            best_val, best_x = sign * val, x.copy()
    else:
        converged = float(np.linalg.norm(sign * grad)) < cfg.grad_tol
    return best_x, best_val, it, converged


def variation_range_adam(t: TransferTensor, cfg: AdamConfig = AdamConfig()) -> VariationResult:
    """Gradient-ascent/descent estimate of the range, best of several restarts.

    Restart 0 starts at the zero parameter vector (U = I); subsequent restarts
    are drawn uniformly. Never raises on non-convergence; the flag reports it.
    """
    m = t.part.m
    if m not in (1, 2):
        raise DimensionError("gradient optimizer supports one- or two-qubit subsystems")
    raw = _cost_and_grad_m1 if m == 1 else _cost_and_grad_m2

    def fg(x):
        return raw(t, x)

    dim = 3 if m == 1 else 15
    rng = np.random.default_rng(cfg.seed)
    inits = [np.zeros(dim)]
    inits += [rng.uniform(-np.pi, np.pi, size=dim) for _ in range(max(0, cfg.restarts - 1))]
    total_iters = 0
    best = {}
    all_converged = True
    for sign, key in ((1.0, "max"), (-1.0, "min")):
        results = []
        for x0 in inits:
            x, sval, iters, conv = _adam_run(fg, x0, sign, cfg)
            total_iters += iters
            results.append((sval, x, conv))
        sval, x, conv = max(results, key=lambda r: r[0])
        best[key] = (sign * sval, x)
        all_converged = all_converged and conv
    max_val, x_max = best["max"]
    min_val, x_min = best["min"]
    if cfg.iterations == 0:
        max_val = min_val = fg(np.zeros(dim))[0]
        x_max = x_min = np.zeros(dim)
    return VariationResult(
        max_value=max_val,
        min_value=min_val,
        delta=max_val - min_val,
        argmax=LocalUnitaryParams(x_max),
        argmin=LocalUnitaryParams(x_min),
        method="adam",
        iterations=total_iters,
        converged=all_converged,
    )


def variation_range(t: TransferTensor, method: str = "exact", **kwargs) -> VariationResult:
    if method == "exact":
        return variation_range_exact_m1(t)
    if method == "grid":
        return variation_range_grid(t, **kwargs)
    if method == "adam":
        return variation_range_adam(t, **kwargs)
    raise ValueError(f"unknown optimizer {method!r}")


# ---------------------------------------------------------------------------
# bounds


def theorem1_bound(w: float, n: int, m: int) -> float:
    """E[delta] <= w / 2^(n/2 - 3m - 2) for a Haar-random side."""
    if w < 0:
        raise ValueError("spectral width must be nonnegative")
    return w * 2.0 ** (3 * m + 2 - n / 2)


def general_bound(w: float, d_a: int, d_b: int) -> float:
    """Dimension-explicit form 4 w d_A^2 sqrt(d_A / d_B) of the same bound."""
    if w < 0:
        raise ValueError("spectral width must be nonnegative")
    return 4.0 * w * d_a**2 * np.sqrt(d_a / d_b)


def variance_bound(w: float, n: int, m: int) -> float:
    """Var[delta] <= w^2 / 2^(n/2 - 3m - 2)."""
    return w * theorem1_bound(w, n, m)


def markov_tail(w: float, n: int, m: int, eps: float) -> float:
    """Pr[delta >= eps] <= (1/eps) * w / 2^(n/2 - 3m - 2) (not capped at 1)."""
    if eps <= 0:
        raise ValueError("tail threshold must be positive")
    return theorem1_bound(w, n, m) / eps


def qsl_bound(n: int, m: int) -> float:
    """State-learning range bound E[delta] <= 1 / 2^(n - 2m)."""
    return 2.0 ** (2 * m - n)


def _a_words(m: int) -> list[np.ndarray]:
    if m == 1:
        return list(_PAULI_VEC)
    return su4_generators()


def coupling_rank(h, part: BipartitePartition) -> tuple[int, int]:
    """(N_A, N_AB): presence of an A-local part and the interaction coupling rank.

    N_A is 1 when tr_B(H) is nonzero. N_AB counts non-identity Pauli words on A
    that pair with a nonzero B-operator in H with both marginals removed.
    """
    hm = as_matrix(h)
    if hm.shape[0] != part.d:
        raise DimensionError(f"H dim {hm.shape[0]} != 2^{part.n}")
    scale = max(1.0, max_abs(hm))
    trb = partial_trace(hm, part, "B")
    tra = partial_trace(hm, part, "A")
    n_a = 1 if max_abs(trb) > COUPLING_CUTOFF * scale else 0
    h_int = (
        hm
        - kron_aligned(trb / part.d_B, np.eye(part.d_B, dtype=complex), part)
        - kron_aligned(np.eye(part.d_A, dtype=complex) / part.d_A, tra, part)
        + (np.trace(hm) / part.d) * np.eye(part.d, dtype=complex)
    )
    n_ab = 0
    eye_b = np.eye(part.d_B, dtype=complex)
    for sigma in _a_words(part.m):
        o = partial_trace(kron_aligned(sigma, eye_b, part) @ h_int, part, "A") / part.d_A
        if max_abs(o) > COUPLING_CUTOFF * scale:
            n_ab += 1
    return n_a, n_ab


def kron_aligned(op_a: np.ndarray, op_b: np.ndarray, part: BipartitePartition) -> np.ndarray:
    """op_a on part.a_sites tensored with op_b on part.b_sites, in label order."""
    full = kron(op_a, op_b)
    order = list(part.a_sites) + list(part.b_sites)
    if order == list(range(part.n)):
        return full
    return permute_qubits(full, order)


def tight_bound(h, part: BipartitePartition) -> float:
    """max{N_A + 2 N_AB, d_A sqrt(d/(d-1))} * ||H - tr(H) I/d||_inf * sqrt(d_A/d_B)."""
    hm = as_matrix(h)
    n_a, n_ab = coupling_rank(hm, part)
    d = part.d
    h_tl = hm - (np.trace(hm) / d) * np.eye(d, dtype=complex)
    factor = max(n_a + 2 * n_ab, part.d_A * np.sqrt(d / (d - 1)))
    return float(factor * schatten_norm(h_tl, np.inf) * np.sqrt(part.d_A / part.d_B))


@dataclass(frozen=True)
class BoundReport:
    general: float
    variance: float
    tight: float
    qsl: float | None
    n_a: int
    n_ab: int
    markov: dict[float, float] = field(default_factory=dict)


def bound_report(h, part: BipartitePartition, w: float, qsl: bool = False,
                 eps_list=(0.1, 0.01)) -> BoundReport:
    n_a, n_ab = coupling_rank(h, part)
    n, m = part.n, part.m
    return BoundReport(
        general=theorem1_bound(w, n, m),
        variance=variance_bound(w, n, m),
        tight=tight_bound(h, part),
        qsl=qsl_bound(n, m) if qsl else None,
        n_a=n_a,
        n_ab=n_ab,
        markov={float(e): markov_tail(w, n, m, float(e)) for e in eps_list},
    )


def task_tight_bound(task: str, n: int, w: float) -> float:
    """Published per-task constants: 24 w 2^{-n/2} (vqe) and (8/sqrt 3) 2^{-n/2} (qae)."""
    if task == "vqe":
        return 24.0 * w * 2.0 ** (-n / 2)
    if task == "qae":
        return (8.0 / np.sqrt(3.0)) * 2.0 ** (-n / 2)
    raise ValueError(f"no published tight constant for task {task!r}")


# ---------------------------------------------------------------------------
# parameterized circuits, shift rule, telescoping


class ParameterizedCircuit:
    """Ordered gate list with free rotation angles filled in at call time.

    convention 'half' uses R_P(theta) = exp(-i theta P / 2); 'unit' uses
    exp(-i theta P), for which the quarter-shift rule is exact.
    """

    def __init__(self, n: int, gates: list[GateSpec], convention: str = "half"):
        if convention not in ("half", "unit"):
            raise ValueError(f"unknown rotation convention {convention!r}")
        self.n = n
        self.gates = list(gates)
        self.convention = convention
        self.free = [i for i, g in enumerate(self.gates) if g.kind != "cz" and g.angle is None]

    @property
    def num_parameters(self) -> int:
        return len(self.free)

    def bind(self, theta) -> list[GateSpec]:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (len(self.free),):
            raise ValueError(f"expected {len(self.free)} parameters, got shape {theta.shape}")
        scale = 1.0 if self.convention == "half" else 2.0
        bound = list(self.gates)
        for val, idx in zip(theta, self.free):
            bound[idx] = replace(bound[idx], angle=scale * float(val))
        return bound

    def unitary(self, theta) -> np.ndarray:
        u = np.eye(2**self.n, dtype=complex)
        for g in self.bind(theta):
            if g.kind == "cz":
                u = gate_matrix(g, self.n) @ u
            else:
                u = apply_single_qubit(u, rotation(g.kind[1], g.angle), g.target, self.n)
        return u

    def cost(self, h, rho, theta) -> float:
        return generic_cost(h, rho, self.unitary(theta))


def parameter_shift_derivative(pc: ParameterizedCircuit, h, rho, theta, mu: int) -> float:
    """Exact derivative of the cost in parameter mu via shifted evaluations.

    Half-angle convention: [C(+pi/2 shift) - C(-pi/2 shift)] / 2; unit
    convention: C(+pi/4 shift) - C(-pi/4 shift), no division.
    """
    theta = np.asarray(theta, dtype=float)
    if not 0 <= mu < pc.num_parameters:
        raise ValueError(f"parameter index {mu} out of range")
    shift = np.pi / 2 if pc.convention == "half" else np.pi / 4
    e = np.zeros_like(theta)
    e[mu] = shift
    diff = pc.cost(h, rho, theta + e) - pc.cost(h, rho, theta - e)
    return diff / 2 if pc.convention == "half" else diff


def _split_at_gate(pc: ParameterizedCircuit, bound: list[GateSpec], gate_idx: int):
    """(V1, target qubit, V2): circuit before and after gate gate_idx."""
    d = 2**pc.n
    v1 = np.eye(d, dtype=complex)
    v2 = np.eye(d, dtype=complex)
    for i, g in enumerate(bound):
        if i == gate_idx:
            continue
        target = v1 if i < gate_idx else v2
        if g.kind == "cz":
            out = gate_matrix(g, pc.n) @ target
        else:
            out = apply_single_qubit(target, rotation(g.kind[1], g.angle), g.target, pc.n)
        if i < gate_idx:
            v1 = out
        else:
            v2 = out
    return v1, bound[gate_idx].target, v2


def delta_mu(pc: ParameterizedCircuit, h, rho, theta, mu: int) -> VariationResult:
    """Variation range over arbitrary replacement of the gate carrying theta_mu."""
    if not 0 <= mu < pc.num_parameters:
        raise ValueError(f"parameter index {mu} out of range")
    bound = pc.bind(theta)
    v1, target, v2 = _split_at_gate(pc, bound, pc.free[mu])
    part = BipartitePartition(pc.n, (target,))
    return variation_range_exact_m1(transfer_tensor(h, rho, v1, v2, part))


def telescoping_bound_check(pc: ParameterizedCircuit, h, rho, theta, theta_prime) -> tuple[float, float]:
    """|C(theta') - C(theta)| against the sum of per-parameter ranges.

    Walks from theta to theta' one coordinate at a time; each step is bounded
    by the range of the gate being changed, with all other gates held at the
    intermediate point.
    """
    theta = np.asarray(theta, dtype=float)
    theta_prime = np.asarray(theta_prime, dtype=float)
    if theta.shape != theta_prime.shape:
        raise ValueError("parameter vectors must have the same length")
    lhs = abs(pc.cost(h, rho, theta_prime) - pc.cost(h, rho, theta))
    rhs = 0.0
    current = theta.copy()
    for mu in range(pc.num_parameters):
        rhs += delta_mu(pc, h, rho, current, mu).delta
        current[mu] = theta_prime[mu]
    if lhs > rhs + 1e-9:
        raise AssertionError(f"telescoping bound violated: {lhs} > {rhs}")
    return lhs, rhs
