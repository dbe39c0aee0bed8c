"""Monitored brickwork circuits on a spin-1/2 chain.

Two models share the layer structure: "random" redraws all sixteen gate
couplings uniformly from [-pi, pi] at every step, "floquet" keeps one
fixed coupling set for all times.  A time step applies the brickwork
unitary layer for that step's parity, then measures every site with the
strength-eta Kraus pair, outcomes drawn from the Born rule of the
physical reference state.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import (
    KrausPair,
    StateVector,
    ThetaSet,
    apply_local_operator,
    build_kraus,
    build_two_site_gate,
)
from .errors import (
    ContractViolationError,
    DegenerateOutcomeError,
    InvalidParameterError,
)

TEMPORALLY_RANDOM = "random"
FLOQUET = "floquet"

# Fixed coupling set of the Floquet model, in units of pi: entry [mu][nu]
# couples sigma^mu on the left site to sigma^nu on the right site.
_FLOQUET_THETA_OVER_PI = np.array(
    [
        [0.00, 0.43, 0.62, 0.47],
        [1.21, 0.71, 0.35, 1.87],
        [0.83, 0.69, 1.43, 1.19],
        [1.53, 0.12, 0.75, 0.27],
    ]
)


def floquet_theta() -> ThetaSet:
    """The fixed coupling set used by the Floquet model."""
    return ThetaSet(np.pi * _FLOQUET_THETA_OVER_PI)


@dataclass
class CircuitModel:
    """Model choice plus chain size and measurement strength."""

    variant: str
    num_sites: int
    eta: float
    fixed_theta: Optional[ThetaSet] = None

    def __post_init__(self):
        if self.variant not in (TEMPORALLY_RANDOM, FLOQUET):
            raise InvalidParameterError(f"unknown variant {self.variant!r}")
        if self.num_sites < 1:
            raise InvalidParameterError("num_sites must be >= 1")
        if not 0.0 <= self.eta <= 0.5:
            raise InvalidParameterError(f"eta={self.eta} outside [0, 1/2]")
        if self.variant == FLOQUET and self.fixed_theta is None:
            self.fixed_theta = floquet_theta()
        if self.variant == TEMPORALLY_RANDOM and self.fixed_theta is not None:
            raise InvalidParameterError("temporally random model takes no fixed theta")

    @classmethod
    def temporally_random(cls, num_sites: int, eta: float) -> "CircuitModel":
        return cls(TEMPORALLY_RANDOM, num_sites, eta)

    @classmethod
    def floquet(cls, num_sites: int, eta: float, theta: Optional[ThetaSet] = None) -> "CircuitModel":
        return cls(FLOQUET, num_sites, eta, fixed_theta=theta)


@dataclass
class OutcomeRecord:
    """One time step: outcomes (+1/-1 per site) and the couplings used."""

    step: int
    outcomes: np.ndarray
    theta_used: ThetaSet

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes, dtype=int)


def sample_theta(model: CircuitModel, t: int, rng: np.random.Generator) -> ThetaSet:
    """Couplings for step t: fixed for Floquet, 16 iid uniform draws otherwise."""
    if model.variant == FLOQUET:
        return model.fixed_theta
    return ThetaSet(rng.uniform(-np.pi, np.pi, size=(4, 4)))


def layer_bonds(num_sites: int, t: int) -> range:
    """Left sites x of the bonds (x, x+1) gated at step t (odd t starts at 1)."""
    start = 1 if t % 2 == 1 else 2
    return range(start, num_sites, 2)


def _brickwork_apply(amps: np.ndarray, gate_matrix: np.ndarray, t: int, num_sites: int) -> np.ndarray:
    for x in layer_bonds(num_sites, t):
        amps = apply_local_operator(amps, gate_matrix, x, num_sites)
    return amps


def brickwork_layer(state: StateVector, theta: ThetaSet, t: int) -> StateVector:
    """Apply the parity-t brickwork layer (all bonds share one gate) in place."""
    if state.num_sites < 2:
        raise InvalidParameterError("brickwork layer needs at least two sites")
    gate = build_two_site_gate(theta)
    state.amplitudes[:] = _brickwork_apply(
        state.amplitudes, gate.matrix, t, state.num_sites
    )
    return state


def measurement_weights(outcomes: np.ndarray, kraus: KrausPair, num_sites: int) -> np.ndarray:
    """Diagonal of the full measurement layer for a given outcome pattern.

    Every branch is diagonal, so the layer acts as one real weight per
    basis state: w[n] = prod_x m(outcome_x)[bit_x(n)].
    """
    diag = kraus.diagonals()
    w = np.ones(1)
    for zeta in outcomes:
        w = np.kron(w, diag[0] if zeta > 0 else diag[1])
    return w


def _site_probability_plus(amps: np.ndarray, kraus: KrausPair, x: int, num_sites: int) -> float:
    """Born probability of outcome + at site x for a normalized state."""
    outer = 1 << (x - 1)
    inner = 1 << (num_sites - x)
    prob = np.abs(amps.reshape(outer, 2, inner)) ** 2
    s0 = float(prob[:, 0, :].sum())
    s1 = float(prob[:, 1, :].sum())
    d = kraus.m_plus.diagonal().real
    return d[0] ** 2 * s0 + d[1] ** 2 * s1


def _sample_and_measure(
    amps: np.ndarray, kraus: KrausPair, num_sites: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, float]:
    """Draw one outcome pattern and apply its measurement layer.

    Sites are visited in order 1..L; at each site the outcome is drawn
    from the conditional Born probability given the branches already
    applied at earlier sites, the branch is applied, and the state is
    renormalized.  Because the branches act on disjoint sites this chain
    rule reproduces the joint Born distribution exactly.

    Returns (outcomes, renormalized amplitudes, log-norm of the
    unnormalized result).
    """
    work = amps.copy()
    outcomes = np.empty(num_sites, dtype=int)
    log_norm = 0.0
    diag = kraus.diagonals()
    for x in range(1, num_sites + 1):
        p_plus = _site_probability_plus(work, kraus, x, num_sites)
        zeta = 1 if rng.random() < p_plus else -1
        outcomes[x - 1] = zeta
        factors = diag[0] if zeta > 0 else diag[1]
        outer = 1 << (x - 1)
        inner = 1 << (num_sites - x)
        view = work.reshape(outer, 2, inner)
        view *= factors[None, :, None]
        n = np.linalg.norm(work)
        if n == 0.0:
            raise DegenerateOutcomeError(
                f"outcome {zeta:+d} at site {x} annihilated the state"
            )
        work /= n
        log_norm += float(np.log(n))
    return outcomes, work, log_norm


def sample_outcomes(state: StateVector, eta: float, rng: np.random.Generator) -> np.ndarray:
    """Born-rule outcome pattern (+1/-1 per site) for a normalized state."""
    if abs(state.norm() - 1.0) > 1e-6:
        raise ContractViolationError("state must be normalized before sampling")
    outcomes, _, _ = _sample_and_measure(
        state.amplitudes, build_kraus(eta), state.num_sites, rng
    )
    return outcomes


def apply_measurement_layer(
    state: StateVector, outcomes: np.ndarray, eta: float
) -> tuple[StateVector, float]:
    """Measure every site with the given outcomes; renormalize in place.

    Returns the state and the log-norm of the unnormalized result, so
    callers tracking contraction rates keep the discarded scale.
    """
    outcomes = np.asarray(outcomes)
    if outcomes.size != state.num_sites:
        raise InvalidParameterError("need one outcome per site")
    w = measurement_weights(outcomes, build_kraus(eta), state.num_sites)
    state.amplitudes *= w
    n = state.norm()
    if n == 0.0:
        raise DegenerateOutcomeError("measurement layer annihilated the state")
    state.amplitudes /= n
    return state, float(np.log(n))


class TrajectoryEngine:
    """Physical reference state plus probe vectors advanced in lockstep.

    Outcomes are always drawn from the physical state; every probe then
    receives the identical (theta, outcomes) pair.  Probe columns are
    kept unit-normalized with the true magnitude carried in
    ``probes.log_scales``, which represents the unnormalized vectors
    exactly while staying inside double-precision range for any bin size.
    """

    def __init__(
        self,
        model: CircuitModel,
        seed: int,
        probes=None,
        keep_log: bool = False,
    ):
        self.model = model
        self.rng_seed = seed
        self.rng = np.random.default_rng(np.random.SeedSequence(seed))
        self.physical = StateVector.haar_random(model.num_sites, self.rng)
        self.probes = probes
        self.step_count = 0
        self.log: Optional[list[OutcomeRecord]] = [] if keep_log else None
        self._kraus = build_kraus(model.eta)

    @property
    def num_sites(self) -> int:
        return self.model.num_sites

    def step(self) -> "TrajectoryEngine":
        """Advance one time step: brickwork layer, then measure all sites."""
        t = self.step_count + 1
        theta = sample_theta(self.model, t, self.rng)
        gate = build_two_site_gate(theta)
        L = self.num_sites

        self.physical.amplitudes[:] = _brickwork_apply(
            self.physical.amplitudes, gate.matrix, t, L
        )
        if self.probes is not None:
            self.probes.vectors[:] = _brickwork_apply(
                self.probes.vectors, gate.matrix, t, L
            )

        outcomes, measured, _ = _sample_and_measure(
            self.physical.amplitudes, self._kraus, L, self.rng
        )
        self.physical.amplitudes[:] = measured

        if self.probes is not None:
            w = measurement_weights(outcomes, self._kraus, L)
            self.probes.vectors *= w[:, None]
            norms = np.linalg.norm(self.probes.vectors, axis=0)
            if np.any(norms == 0.0):
                raise DegenerateOutcomeError(
                    "a probe was annihilated by the sampled outcome pattern"
                )
            self.probes.vectors /= norms[None, :]
            self.probes.log_scales += np.log(norms)

        self.step_count = t
        if self.log is not None:
            self.log.append(OutcomeRecord(t, outcomes, theta))
        return self

    def run(self, steps: int) -> "TrajectoryEngine":
        for _ in range(steps):
            self.step()
        return self


# --- dense builders (oracle work and superoperator assembly, small L only) ---

def dense_layer_unitary(theta: ThetaSet, t: int, num_sites: int) -> np.ndarray:
    """Full 2**L x 2**L brickwork layer for step parity t."""
    gate = build_two_site_gate(theta).matrix
    eye2 = np.eye(2)
    bonds = set(layer_bonds(num_sites, t))
    out = np.ones((1, 1))
    x = 1
    while x <= num_sites:
        if x in bonds:
            out = np.kron(out, gate)
            x += 2
        else:
            out = np.kron(out, eye2)
            x += 1
    return out


def dense_step_matrix(record: OutcomeRecord, eta: float, num_sites: int) -> np.ndarray:
    """Dense one-step evolution M(outcomes) U(theta) for a logged record."""
    u = dense_layer_unitary(record.theta_used, record.step, num_sites)
    w = measurement_weights(record.outcomes, build_kraus(eta), num_sites)
    return w[:, None] * u


# --- trajectory log round-trip ------------------------------------------------

_THETA_COLS = [f"theta_{mu}{nu}" for mu in range(4) for nu in range(4)]


def write_trajectory_log(path, records: Iterable[OutcomeRecord], num_sites: int) -> None:
    """CSV log: (t, zeta_1..zeta_L, 16 theta values at 17 significant digits)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t"] + [f"zeta_{x}" for x in range(1, num_sites + 1)] + _THETA_COLS
        )
        for rec in records:
            row = [rec.step]
            row += [f"{z:+d}" for z in rec.outcomes]
            row += [f"{v:.17g}" for v in rec.theta_used.theta.ravel()]
            writer.writerow(row)
    os.replace(tmp, path)


def read_trajectory_log(path) -> tuple[list[OutcomeRecord], int]:
    """Inverse of write_trajectory_log; returns (records, num_sites)."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        num_sites = sum(1 for col in header if col.startswith("zeta_"))
        for row in reader:
            t = int(row[0])
            outcomes = np.array([int(v) for v in row[1 : 1 + num_sites]])
            theta = np.array([float(v) for v in row[1 + num_sites :]]).reshape(4, 4)
            records.append(OutcomeRecord(t, outcomes, ThetaSet(theta)))
    return records, num_sites
