"""Outcome-averaged channel of the monitored dynamics and its fixed points.

The channel averages rho -> G rho G^dagger over measurement outcomes
(exact sum) and gate couplings (exact for Floquet, Monte Carlo for the
temporally random model), with G one full brickwork period: odd layer,
measurements, even layer, measurements.  A unique and positive-definite
fixed state certifies outcome-independence of the Lyapunov spectrum; the
operator-spanning condition behind it is probed by closing the algebra
generated by the trajectory operators.

Vectorization is column-stacking: rho -> A rho B^dagger has matrix
conj(B) (x) A, acting on rho.flatten(order='F').
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import CircuitModel, FLOQUET, dense_layer_unitary, measurement_weights, sample_theta
from .core import PAULI, build_kraus
from .errors import BrokenChannelError, InvalidParameterError, SizeLimitError

_MAX_SUPEROP_SITES = 4
_MAX_CLOSURE_SITES = 3
_NEW_DIRECTION_TOL = 1e-10


def vec(rho: np.ndarray) -> np.ndarray:
    return rho.flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    n = int(round(np.sqrt(v.size)))
    return v.reshape(n, n, order="F")


@dataclass
class SuperOperator:
    """Dense matrix of the averaged channel on vectorized density matrices."""

    matrix: np.ndarray
    num_sites: int
    description: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        dim = 4**self.num_sites
        if self.matrix.shape != (dim, dim):
            raise InvalidParameterError(
                f"superoperator must be {dim}x{dim} for L={self.num_sites}"
            )

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))

    def trace_preservation_residual(self) -> float:
        """max |adjoint(identity) - identity|; zero for an exact channel."""
        n = 2**self.num_sites
        image = unvec(self.matrix.conj().T @ vec(np.eye(n, dtype=complex)))
        return float(np.max(np.abs(image - np.eye(n))))

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


@dataclass
class StationaryReport:
    """Fixed-point census of a channel."""

    multiplicity: int
    min_eigenvalue: float
    unique: bool
    positive_definite: bool


@dataclass
class AlgebraClosure:
    """Result of closing the span of generator words."""

    basis_dim: int
    target_dim: int
    generators_used: int
    iterations: int
    closed: bool


def outcome_patterns(num_sites: int):
    """All 2**L outcome tuples, + before - at each site."""
    return itertools.product((1, -1), repeat=num_sites)


def measurement_layer_operators(eta: float, num_sites: int) -> list[np.ndarray]:
    """Dense (diagonal) measurement layer for every outcome pattern."""
    kraus = build_kraus(eta)
    return [
        np.diag(measurement_weights(np.array(p), kraus, num_sites)).astype(complex)
        for p in outcome_patterns(num_sites)
    ]


def _period_operators(
    thetas: Sequence, eta: float, num_sites: int
) -> list[np.ndarray]:
    """Composites M(zeta_k) U(theta_k) ... M(zeta_1) U(theta_1), one per
    joint outcome pattern; thetas holds one coupling set per step and
    step k uses layer parity k.
    """
    kraus = build_kraus(eta)
    composites = [np.eye(2**num_sites, dtype=complex)]
    for k, theta in enumerate(thetas, start=1):
        u = dense_layer_unitary(theta, k, num_sites)
        step_ops = [
            measurement_weights(np.array(p), kraus, num_sites)[:, None] * u
            for p in outcome_patterns(num_sites)
        ]
        composites = [m @ g for g in composites for m in step_ops]
    return composites


def build_superoperator(
    model: CircuitModel,
    theta_samples: int = 256,
    steps: int = 2,
    seed: int = 0,
) -> SuperOperator:
    """Average of G rho G^dagger over outcomes (exact) and couplings.

    steps is the number of time steps composed into G; the default 2 is
    one full brickwork period.  The Floquet model needs a single exact
    term; the temporally random model draws theta_samples iid coupling
    sets per step (the sixteen-dimensional coupling integral is far
    beyond product quadrature).
    """
    L = model.num_sites
    if L > _MAX_SUPEROP_SITES:
        raise SizeLimitError(f"superoperator limited to L <= {_MAX_SUPEROP_SITES}")
    if steps < 1:
        raise InvalidParameterError("steps must be >= 1")
    dim2 = 4**L
    total = np.zeros((dim2, dim2), dtype=complex)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n_samples = 1 if model.variant == FLOQUET else theta_samples
    if n_samples < 1:
        raise InvalidParameterError("theta_samples must be >= 1")
    for _ in range(n_samples):
        thetas = [sample_theta(model, t, rng) for t in range(1, steps + 1)]
        for g in _period_operators(thetas, model.eta, L):
            total += np.kron(g.conj(), g)
    total /= n_samples
    desc = (
        f"{model.variant} L={L} eta={model.eta:g} steps={steps} "
        f"theta_samples={n_samples}"
    )
    return SuperOperator(total, L, desc)


def stationary_analysis(
    gamma: SuperOperator, unit_tol: float = 1e-8, pd_tol: float = 1e-10
) -> StationaryReport:
    """Count unit eigenvalues and inspect the reconstructed fixed state."""
    eigvals, eigvecs = np.linalg.eig(gamma.matrix)
    fixed = np.flatnonzero(np.abs(eigvals - 1.0) <= unit_tol)
    if fixed.size == 0:
        raise BrokenChannelError(
            "no eigenvalue within tolerance of 1; channel is not trace preserving"
        )
    candidates = [unvec(eigvecs[:, i]) for i in fixed]
    traces = [abs(np.trace(c)) for c in candidates]
    rho = candidates[int(np.argmax(traces))]
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise BrokenChannelError("fixed space contains no normalizable state")
    rho /= tr
    min_eig = float(np.linalg.eigvalsh(rho).min())
    multiplicity = int(fixed.size)
    return StationaryReport(
        multiplicity=multiplicity,
        min_eigenvalue=min_eig,
        unique=multiplicity == 1,
        positive_definite=min_eig > pd_tol,
    )


def algebra_closure(
    generators: Sequence[np.ndarray], max_iterations: int = 64
) -> AlgebraClosure:
    """Close span(generators + identity) under left multiplication by generators.

    Operators live in the Hilbert-Schmidt space of N x N matrices; new
    products enter the basis when their component orthogonal to the
    current span exceeds a relative tolerance.  Reaching dimension N**2
    means the generators span everything.
    """
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise InvalidParameterError("need at least one generator")
    n = gens[0].shape[0]
    if any(g.shape != (n, n) for g in gens):
        raise InvalidParameterError("generators must share one square shape")
    if n > 2**_MAX_CLOSURE_SITES:
        raise SizeLimitError(f"closure limited to L <= {_MAX_CLOSURE_SITES}")
    target = n * n

    basis: list[np.ndarray] = []

    def try_add(op: np.ndarray) -> bool:
        v = op.flatten()
        scale = np.linalg.norm(v)
        if scale == 0.0:
            return False
        for _ in range(2):
            for b in basis:
                v -= (b.conj() @ v) * b
        resid = np.linalg.norm(v)
        if resid <= _NEW_DIRECTION_TOL * scale:
            return False
        basis.append(v / resid)
        return True

    try_add(np.eye(n, dtype=complex))
    for g in gens:
        try_add(g)

    iterations = 0
    closed = False
    while iterations < max_iterations:
        iterations += 1
        added = False
        for b_vec in list(basis):
            b_mat = b_vec.reshape(n, n)
            for g in gens:
                if try_add(g @ b_mat):
                    added = True
            if len(basis) == target:
                break
        if len(basis) == target or not added:
            closed = True
            break
    return AlgebraClosure(
        basis_dim=len(basis),
        target_dim=target,
        generators_used=len(gens),
        iterations=iterations,
        closed=closed,
    )


def _single_site_rotation(nu: int, sign: int) -> np.ndarray:
    """exp(sign * i pi sigma^nu / 4) = (I + sign * i sigma^nu) / sqrt(2)."""
    return (np.eye(2) + sign * 1j * PAULI[nu]) / np.sqrt(2)


def exemplar_rotations(num_sites: int) -> dict[str, np.ndarray]:
    """Global products prod_x exp(+-i pi sigma_x^nu / 4) for nu = 1, 2."""
    out = {}
    for nu in (1, 2):
        for sign, tag in ((1, "+"), (-1, "-")):
            op = np.ones((1, 1), dtype=complex)
            for _ in range(num_sites):
                op = np.kron(op, _single_site_rotation(nu, sign))
            out[f"U{nu}{tag}"] = op
    return out


def spanning_generator_set(
    eta: float, num_sites: int, n_random: int = 8, seed: int = 0
) -> list[np.ndarray]:
    """Measurement layers composed with exemplar rotations and random layers.

    This is the generator family whose closure is expected to reach the
    full operator space for the temporally random model.
    """
    meas = measurement_layer_operators(eta, num_sites)
    unitaries = list(exemplar_rotations(num_sites).values())
    model = CircuitModel.temporally_random(num_sites, eta)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    for k in range(n_random):
        theta = sample_theta(model, k + 1, rng)
        unitaries.append(dense_layer_unitary(theta, 1 + k % 2, num_sites))
    return [m @ u for m in meas for u in unitaries]


def _proportional_to(op: np.ndarray, pauli: np.ndarray, tol: float = 1e-12) -> bool:
    coeff = np.trace(pauli.conj().T @ op) / np.trace(pauli.conj().T @ pauli)
    if abs(coeff) < tol:
        return False
    return bool(np.max(np.abs(op - coeff * pauli)) <= tol)


def pauli_construction_check(eta: float) -> bool:
    """Verify the single-site construction identities behind the spanning claim.

    Sums/differences of the Kraus pair give sigma^0 and sigma^3, and the
    quarter-turn rotations map sigma^3 onto sigma^1 and sigma^2.  The
    sigma^3 identity degenerates (difference vanishes) at eta = 0.
    """
    if not 0.0 <= eta <= 0.5:
        raise InvalidParameterError(f"eta={eta} outside [0, 1/2]")
    kraus = build_kraus(eta)
    u1p, u1m = _single_site_rotation(1, 1), _single_site_rotation(1, -1)
    u2p, u2m = _single_site_rotation(2, 1), _single_site_rotation(2, -1)
    checks = [
        _proportional_to(kraus.m_plus + kraus.m_minus, PAULI[0]),
        _proportional_to(kraus.m_plus - kraus.m_minus, PAULI[3]),
        _proportional_to(u2p @ PAULI[3] @ u2m, PAULI[1]),
        _proportional_to(u1p @ PAULI[3] @ u1m, PAULI[2]),
    ]
    return all(checks)
