"""Entanglement observables and the spectral gap.

Entropies are in nats.  The ground-state proxy of the effective
Hamiltonian is the first probe after orthonormalization, which tracks
the top left singular vector of the trajectory product.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import StateVector
from .errors import (
    ContractViolationError,
    InvalidParameterError,
    StaleEstimateWarning,
)
from .lyapunov import LyapunovEstimate, ProbeEnsemble


@dataclass
class ReducedDensityMatrix:
    """State of a site subset after tracing out the rest."""

    matrix: np.ndarray
    region: tuple

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.region = tuple(self.region)
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > 1e-12:
            raise ContractViolationError("reduced density matrix not Hermitian")
        if abs(np.trace(self.matrix).real - 1.0) > 1e-10:
            raise ContractViolationError("reduced density matrix trace != 1")


@dataclass
class GapValue:
    """Spectral gap eps_2 - eps_1 at one (eta, L) point."""

    delta: float
    eta: float
    num_sites: int

    def __post_init__(self):
        if self.delta < -1e-9:
            raise InvalidParameterError(f"gap {self.delta} is negative")


def reduced_density_matrix(state: StateVector, region: Iterable[int]) -> ReducedDensityMatrix:
    """Partial trace onto the given sites (1-based, any order)."""
    L = state.num_sites
    region = tuple(sorted(set(int(x) for x in region)))
    if any(x < 1 or x > L for x in region):
        raise InvalidParameterError(f"region {region} outside [1, {L}]")
    if len(region) == 0:
        return ReducedDensityMatrix(np.ones((1, 1), dtype=complex), region)
    psi = state.amplitudes
    if len(region) == L:
        return ReducedDensityMatrix(np.outer(psi, psi.conj()), region)
    keep_axes = [x - 1 for x in region]
    drop_axes = [ax for ax in range(L) if ax not in keep_axes]
    tensor = psi.reshape([2] * L).transpose(keep_axes + drop_axes)
    mat = tensor.reshape(2 ** len(region), -1)
    return ReducedDensityMatrix(mat @ mat.conj().T, region)


def von_neumann_entropy(rho: ReducedDensityMatrix) -> float:
    """-sum lambda ln lambda over the eigenvalues, with 0 ln 0 = 0."""
    if abs(np.trace(rho.matrix).real - 1.0) > 1e-6:
        raise ContractViolationError("density matrix trace deviates from 1")
    lam = np.linalg.eigvalsh(rho.matrix)
    lam = np.clip(lam.real, 0.0, None)
    nz = lam[lam > 0.0]
    return float(-(nz * np.log(nz)).sum())


def half_chain_entropy(state: StateVector) -> float:
    """Entropy of sites 1..L/2; even L only."""
    L = state.num_sites
    if L % 2 != 0:
        raise InvalidParameterError("half-chain entropy needs even L")
    return von_neumann_entropy(reduced_density_matrix(state, range(1, L // 2 + 1)))


def mutual_information(state: StateVector, region_a: Iterable[int], region_b: Iterable[int]) -> float:
    """S^A + S^B - S^{A union B} for disjoint regions (>= 0 up to rounding)."""
    a = tuple(sorted(set(region_a)))
    b = tuple(sorted(set(region_b)))
    if set(a) & set(b):
        raise InvalidParameterError("regions must be disjoint")
    s_a = von_neumann_entropy(reduced_density_matrix(state, a))
    s_b = von_neumann_entropy(reduced_density_matrix(state, b))
    s_ab = von_neumann_entropy(reduced_density_matrix(state, a + b))
    return s_a + s_b - s_ab


def endpoint_mutual_information(state: StateVector) -> float:
    """Mutual information between the two boundary sites, I^{1,L}."""
    return mutual_information(state, (1,), (state.num_sites,))


def ground_state_probe(probes: ProbeEnsemble, converged: Optional[bool] = None) -> StateVector:
    """First probe as the ground-state proxy of the effective Hamiltonian."""
    if converged is False:
        warnings.warn(
            "ground-state probe read before the i=1 estimate converged",
            StaleEstimateWarning,
            stacklevel=2,
        )
    num_sites = probes.dim.bit_length() - 1
    return StateVector(probes.vector(0), num_sites)


def spectral_gap(estimate: LyapunovEstimate, eta: float, num_sites: int) -> GapValue:
    """Gap eps_2 - eps_1 of an estimate (identical before and after shifting)."""
    if estimate.exponents.size < 2:
        raise InvalidParameterError("need at least two exponents for a gap")
    return GapValue(estimate.gap, eta, num_sites)
