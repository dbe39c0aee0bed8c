"""Elementary objects for spin-1/2 chains.

State vectors, Pauli algebra, two-site gates built from a 4x4 Hermitian
generator, and the single-site measurement (Kraus) pair.

Basis convention: site x in [1, L] occupies axis (x-1) of the [2]*L
amplitude tensor, i.e. site 1 is the most significant bit of the basis
index and dense operators read kron(op_1, op_2, ..., op_L).  Bit value 0
is spin-up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass
class StateVector:
    """Pure state of an L-site chain: 2**L complex amplitudes."""

    amplitudes: np.ndarray
    num_sites: int

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.num_sites < 1:
            raise InvalidParameterError("num_sites must be >= 1")
        if self.amplitudes.shape != (2**self.num_sites,):
            raise InvalidParameterError(
                f"amplitude length {self.amplitudes.shape} does not match "
                f"2**{self.num_sites} sites"
            )

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        """Rescale to unit norm in place."""
        n = self.norm()
        if n == 0.0:
            raise InvalidParameterError("cannot normalize a zero vector")
        self.amplitudes /= n
        return self

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.num_sites)

    @classmethod
    def haar_random(cls, num_sites: int, rng: np.random.Generator) -> "StateVector":
        """Normalized complex-Gaussian vector (Haar-distributed direction)."""
        dim = 2**num_sites
        z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return cls(z, num_sites).normalize()

    @classmethod
    def computational_basis(cls, num_sites: int, index: int) -> "StateVector":
        amps = np.zeros(2**num_sites, dtype=complex)
        amps[index] = 1.0
        return cls(amps, num_sites)


@dataclass
class TwoSiteUnitary:
    """4x4 unitary acting on a nearest-neighbour pair."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (4, 4):
            raise InvalidParameterError("two-site gate must be 4x4")
        residual = self.matrix.conj().T @ self.matrix - np.eye(4)
        if np.max(np.abs(residual)) > 1e-12:
            raise InvalidParameterError("two-site gate is not unitary")


@dataclass
class KrausPair:
    """Single-site measurement pair; both branches are real diagonals."""

    m_plus: np.ndarray
    m_minus: np.ndarray
    eta: float

    def __post_init__(self):
        self.m_plus = np.asarray(self.m_plus, dtype=complex)
        self.m_minus = np.asarray(self.m_minus, dtype=complex)
        for m in (self.m_plus, self.m_minus):
            if m.shape != (2, 2):
                raise InvalidParameterError("Kraus branches must be 2x2")
            if np.max(np.abs(m - np.diag(m.diagonal().real))) > 1e-12:
                raise InvalidParameterError("Kraus branches must be real diagonal")
        total = (
            self.m_plus.conj().T @ self.m_plus + self.m_minus.conj().T @ self.m_minus
        )
        if np.max(np.abs(total - np.eye(2))) > 1e-12:
            raise InvalidParameterError("Kraus pair is not trace preserving")

    def branch(self, outcome: int) -> np.ndarray:
        return self.m_plus if outcome > 0 else self.m_minus

    def diagonals(self) -> np.ndarray:
        """(2, 2) real array: row 0/1 = diag of the +/- branch."""
        return np.stack(
            [self.m_plus.diagonal().real, self.m_minus.diagonal().real]
        )


@dataclass
class ThetaSet:
    """4x4 real couplings theta[mu, nu] (radians) of the two-site generator."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.shape != (4, 4):
            raise InvalidParameterError("theta must be a 4x4 real array")
        if not np.all(np.isfinite(self.theta)):
            raise InvalidParameterError("theta entries must be finite")


@dataclass
class PauliString:
    """Word of single-site Paulis; labels[x-1] in {0,1,2,3} for site x."""

    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.ndim != 1 or self.labels.size < 1:
            raise InvalidParameterError("labels must be a nonempty 1-d sequence")
        if np.any((self.labels < 0) | (self.labels > 3)):
            raise InvalidParameterError("labels must lie in {0,1,2,3}")

    @property
    def num_sites(self) -> int:
        return self.labels.size


def build_two_site_gate(theta: ThetaSet) -> TwoSiteUnitary:
    """exp(-i H) with H = sum_{mu,nu} theta[mu,nu] sigma^mu x sigma^nu.

    The exponential goes through the eigendecomposition of the 4x4
    Hermitian generator, so the result is unitary to rounding.
    """
    h = np.einsum("mn,mab,ncd->acbd", theta.theta, PAULI, PAULI).reshape(4, 4)
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w)) @ v.conj().T
    return TwoSiteUnitary(u)


def build_kraus(eta: float) -> KrausPair:
    """Measurement pair of strength eta in [0, 1/2].

    M_plus = diag(sqrt(1/2+eta), sqrt(1/2-eta)) and M_minus swaps the
    entries; eta=0 is no measurement, eta=1/2 the projective limit.
    """
    if not 0.0 <= eta <= 0.5:
        raise InvalidParameterError(f"eta={eta} outside [0, 1/2]")
    a = np.sqrt(0.5 + eta)
    b = np.sqrt(0.5 - eta)
    return KrausPair(np.diag([a, b]), np.diag([b, a]), eta)


def apply_local_operator(amps: np.ndarray, op: np.ndarray, x: int, num_sites: int) -> np.ndarray:
    """Apply op on sites (x, ..., x+k-1) of one state or a batch of columns.

    amps is (2**L,) or (2**L, m); a new array of the same shape is returned.
    """
    blk = op.shape[0]
    k = blk.bit_length() - 1
    if not 1 <= x <= num_sites - k + 1:
        raise IndexError(f"site {x} out of range for a {k}-site operator on L={num_sites}")
    batch = 1 if amps.ndim == 1 else amps.shape[1]
    outer = 1 << (x - 1)
    inner = (1 << (num_sites - x - k + 1)) * batch
    blocked = amps.reshape(outer, blk, inner)
    out = np.einsum("ab,obi->oai", op, blocked)
    return out.reshape(amps.shape)


def apply_two_site(state: StateVector, gate: TwoSiteUnitary, x: int) -> StateVector:
    """Apply a two-site gate on (x, x+1) in place; norm is preserved."""
    state.amplitudes[:] = apply_local_operator(
        state.amplitudes, gate.matrix, x, state.num_sites
    )
    return state


def apply_single_site(state: StateVector, op: np.ndarray, x: int) -> StateVector:
    """Apply a 2x2 operator on site x in place; contractive ops shrink the norm."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise InvalidParameterError("single-site operator must be 2x2")
    state.amplitudes[:] = apply_local_operator(
        state.amplitudes, op, x, state.num_sites
    )
    return state


def pauli_dense(p: PauliString) -> np.ndarray:
    """Dense 2**L x 2**L matrix kron(sigma^{labels[0]}, ..., sigma^{labels[L-1]})."""
    out = PAULI[p.labels[0]]
    for mu in p.labels[1:]:
        out = np.kron(out, PAULI[mu])
    return out
