"""Lyapunov spectrum of the trajectory operator product.

The estimator evolves q orthonormal probe vectors through the same
(theta, outcomes) sequence as the physical state, re-orthonormalizes
them by classical Gram-Schmidt every b steps, and accumulates the log of
each orthogonalized norm.  The i-th running estimate after s bins is

    eps_i = -(1/(s*b)) * sum_r log ||chi_i(bin r)||,

which converges to the i-th exponent of the singular-value spectrum of
the product; a direct dense-SVD oracle is provided for cross-checks at
small sizes.  Estimates are nonnegative for monitored dynamics and sort
ascending (slowest decay first).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .circuit import CircuitModel, OutcomeRecord, TrajectoryEngine, dense_step_matrix
from .errors import (
    BinOverflowError,
    InsufficientLogError,
    InvalidParameterError,
    RankDeficiencyError,
)

_RANK_TOL = 1e-14


@dataclass
class ProbeEnsemble:
    """q probe columns, unit-normalized, with true log-magnitudes alongside.

    The represented (unnormalized) i-th vector is exp(log_scales[i]) times
    column i; scales are zero right after orthonormalization.
    """

    vectors: np.ndarray
    log_scales: np.ndarray = None

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=complex)
        if self.vectors.ndim != 2:
            raise InvalidParameterError("probe ensemble must be a (dim, q) array")
        if self.log_scales is None:
            self.log_scales = np.zeros(self.vectors.shape[1])
        self.log_scales = np.asarray(self.log_scales, dtype=float)

    @property
    def q(self) -> int:
        return self.vectors.shape[1]

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def vector(self, i: int) -> np.ndarray:
        """Unit-normalized i-th probe (copy)."""
        return self.vectors[:, i].copy()

    def gram(self) -> np.ndarray:
        return self.vectors.conj().T @ self.vectors


def init_probes(q: int, num_sites: int, rng: np.random.Generator) -> ProbeEnsemble:
    """q Haar-random orthonormal probes (Gaussian draw, then Gram-Schmidt)."""
    dim = 2**num_sites
    if not 1 <= q <= dim:
        raise InvalidParameterError(f"q={q} outside [1, 2**{num_sites}]")
    z = rng.normal(size=(dim, q)) + 1j * rng.normal(size=(dim, q))
    probes = ProbeEnsemble(z)
    orthonormalize(probes)
    probes.log_scales[:] = 0.0
    return probes


def orthonormalize(probes: ProbeEnsemble) -> tuple[ProbeEnsemble, np.ndarray]:
    """Classical Gram-Schmidt in index order, applied twice, in place.

    Returns the ensemble and the log-norms log||chi_i|| of the
    orthogonalized (pre-normalization) vectors, including the carried
    log-scales.  The second pass only scrubs rounding-level residuals, so
    the recorded norms are the Gram-Schmidt norms evaluated stably.
    """
    v = probes.vectors
    q = probes.q
    log_norms = np.empty(q)
    for i in range(q):
        col = v[:, i]
        for _pass in range(2):
            if i > 0:
                basis = v[:, :i]
                col -= basis @ (basis.conj().T @ col)
        n = np.linalg.norm(col)
        if n < _RANK_TOL:
            raise RankDeficiencyError(
                f"probe {i + 1} collapsed onto the span of its predecessors; "
                "reduce the bin size or the number of probes"
            )
        col /= n
        log_norms[i] = probes.log_scales[i] + np.log(n)
    probes.log_scales[:] = 0.0
    return probes, log_norms


@dataclass
class LyapunovAccumulator:
    """Running exponent estimates with a convergence history window.

    bin_size is b, window is f (history length for the time average), and
    rel_threshold is d: index i is converged once s >= 2f bins are done
    and std/mean over the last f estimates drops to d or below.
    """

    q: int
    bin_size: int
    window: int = 256
    rel_threshold: float = 5e-3
    sum_log_norms: np.ndarray = None
    bins_done: int = 0
    history: deque = None

    def __post_init__(self):
        if self.bin_size < 1:
            raise InvalidParameterError("bin_size must be >= 1")
        if self.window < 1:
            raise InvalidParameterError("window must be >= 1")
        if self.sum_log_norms is None:
            self.sum_log_norms = np.zeros(self.q)
        if self.history is None:
            self.history = deque(maxlen=self.window)

    @property
    def total_steps(self) -> int:
        return self.bins_done * self.bin_size

    def estimates(self) -> np.ndarray:
        """Current eps_i = -sum_log_norms / (s*b)."""
        if self.bins_done == 0:
            raise InvalidParameterError("no bins recorded yet")
        return -self.sum_log_norms / self.total_steps


def record_bin(acc: LyapunovAccumulator, log_norms: np.ndarray) -> LyapunovAccumulator:
    """Fold one bin's Gram-Schmidt log-norms into the running estimates."""
    log_norms = np.asarray(log_norms, dtype=float)
    if log_norms.shape != (acc.q,):
        raise InvalidParameterError("log_norms length must equal q")
    acc.sum_log_norms += log_norms
    acc.bins_done += 1
    acc.history.append(acc.estimates())
    return acc


def check_convergence(acc: LyapunovAccumulator) -> np.ndarray:
    """Per-index flags: s >= 2f and relative std over the last f estimates <= d.

    Mean and variance follow E[x^2] - E[x]^2 over the history window; the
    raw (unshifted) estimates are assessed, including index 1.
    """
    flags = np.zeros(acc.q, dtype=bool)
    if acc.bins_done < 2 * acc.window or len(acc.history) < acc.window:
        return flags
    h = np.asarray(acc.history)
    mean = h.mean(axis=0)
    var = np.maximum((h**2).mean(axis=0) - mean**2, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(mean != 0.0, np.sqrt(var) / np.abs(mean), np.sqrt(var))
    return rel <= acc.rel_threshold


def evolve_bin(engine: TrajectoryEngine, acc: LyapunovAccumulator) -> TrajectoryEngine:
    """Advance the engine by one bin (b steps) without orthonormalizing."""
    if engine.probes is None:
        raise InvalidParameterError("engine carries no probes")
    for _ in range(acc.bin_size):
        engine.step()
        if not np.all(np.isfinite(engine.probes.log_scales)):
            raise BinOverflowError(
                "probe magnitude left floating-point range inside a bin; "
                "use a smaller bin size"
            )
    return engine


@dataclass
class LyapunovEstimate:
    """Exponents (ascending index order), per-index convergence, step count."""

    exponents: np.ndarray
    converged: np.ndarray
    total_steps: int
    shifted: bool = False

    def __post_init__(self):
        self.exponents = np.asarray(self.exponents, dtype=float)
        self.converged = np.asarray(self.converged, dtype=bool)

    @property
    def gap(self) -> float:
        """Spectral gap eps_2 - eps_1 (shift invariant)."""
        return float(self.exponents[1] - self.exponents[0])


def shift_spectrum(estimate: LyapunovEstimate) -> LyapunovEstimate:
    """Pin eps_1 to zero by a constant shift; gaps are unchanged."""
    if estimate.exponents.size == 0:
        raise InvalidParameterError("empty spectrum")
    return LyapunovEstimate(
        estimate.exponents - estimate.exponents[0],
        estimate.converged.copy(),
        estimate.total_steps,
        shifted=True,
    )


def prepare_engine(
    model: CircuitModel, seed: int, q: int, keep_log: bool = False
) -> TrajectoryEngine:
    """Engine with q orthonormal probes, all randomness from one seed."""
    engine = TrajectoryEngine(model, seed, keep_log=keep_log)
    engine.probes = init_probes(q, model.num_sites, engine.rng)
    return engine


def run_spectrum(
    engine: TrajectoryEngine,
    acc: LyapunovAccumulator,
    max_bins: int,
    required: Optional[Sequence[int]] = None,
    on_bin: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None,
) -> LyapunovEstimate:
    """Drive bins until the required indices converge or max_bins is hit.

    required holds 1-based exponent indices (default: all q).  on_bin, if
    given, receives (t, estimates, converged_flags) after every bin.
    """
    if required is None:
        required_idx = np.arange(acc.q)
    else:
        required_idx = np.asarray([i - 1 for i in required], dtype=int)
        if np.any((required_idx < 0) | (required_idx >= acc.q)):
            raise InvalidParameterError("required indices must lie in [1, q]")
    flags = np.zeros(acc.q, dtype=bool)
    for _ in range(max_bins):
        evolve_bin(engine, acc)
        _, log_norms = orthonormalize(engine.probes)
        record_bin(acc, log_norms)
        flags = check_convergence(acc)
        if on_bin is not None:
            on_bin(acc.total_steps, acc.estimates(), flags)
        if np.all(flags[required_idx]):
            break
    return LyapunovEstimate(acc.estimates(), flags, acc.total_steps)


def default_bin_size(eta: float, variant: str = "random") -> int:
    """Default bin size per measurement strength: small bins suffice at
    strong measurement, weak measurement needs long bins before the
    estimates become bin-size independent."""
    if eta >= 0.3:
        return 8
    if eta >= 0.2:
        return 32
    if eta >= 0.15:
        return 64
    return 512 if variant == "floquet" else 256


def _mp_matrix(a: np.ndarray):
    import mpmath

    m = mpmath.mp.matrix(a.shape[0], a.shape[1])
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            m[i, j] = mpmath.mp.mpc(a[i, j].real, a[i, j].imag)
    return m


def svd_oracle(
    records: Sequence[OutcomeRecord],
    num_sites: int,
    eta: float,
    t_max: int,
    dps: Optional[int] = 160,
    chunk_steps: int = 8,
) -> tuple[np.ndarray, np.ndarray]:
    """Exponents and left singular vectors from a dense rebuild of the product.

    Multiplies the logged step matrices into a dense 2**L x 2**L product,
    factoring out the largest column norm every chunk_steps steps
    (log-scale carried separately), then takes one full SVD.  Returns
    exponents ascending and the matching left singular vectors as columns.

    Sub-leading singular values decay exponentially below the top one, so
    for long products they drop under the double-precision floor; the
    rescaled chunks are therefore composed and decomposed at dps decimal
    digits (mpmath), which resolves exponent spreads up to roughly
    dps * ln(10) / t_max above the leading one.  Pass dps=None to stay in
    plain double precision (adequate for short products).  Small sizes
    only; cost grows steeply with L.
    """
    if num_sites > 8 or t_max > 512:
        raise InvalidParameterError("dense oracle limited to L <= 8, t <= 512")
    if len(records) < t_max:
        raise InsufficientLogError(
            f"log holds {len(records)} steps, {t_max} requested"
        )
    dim = 2**num_sites
    chunks = []
    log_scale = 0.0
    v = np.eye(dim, dtype=complex)
    for t in range(1, t_max + 1):
        v = dense_step_matrix(records[t - 1], eta, num_sites) @ v
        if t % chunk_steps == 0 or t == t_max:
            scale = np.linalg.norm(v, axis=0).max()
            if scale == 0.0:
                raise BinOverflowError("product annihilated; cannot continue")
            chunks.append(v / scale)
            log_scale += np.log(scale)
            v = np.eye(dim, dtype=complex)

    if dps is None:
        prod = chunks[0]
        for c in chunks[1:]:
            prod = c @ prod
        u, s, _ = np.linalg.svd(prod)
        exponents = -(np.log(s) + log_scale) / t_max
        return exponents, u

    import mpmath

    with mpmath.mp.workdps(dps):
        prod = _mp_matrix(chunks[0])
        for c in chunks[1:]:
            prod = _mp_matrix(c) * prod
        u_mp, s_mp, _ = mpmath.mp.svd_c(prod, full_matrices=True, compute_uv=True)
        exponents = np.array(
            [
                np.inf if s_mp[i] <= 0 else -(float(mpmath.log(s_mp[i])) + log_scale) / t_max
                for i in range(dim)
            ]
        )
        u = np.array(
            [[complex(u_mp[i, j]) for j in range(dim)] for i in range(dim)]
        )
    return exponents, u


def bin_doubling_check(
    model: CircuitModel,
    seed: int,
    q: int,
    bin_size: int,
    total_steps: int,
    window: int = 256,
    rel_threshold: float = 5e-3,
) -> tuple[LyapunovEstimate, LyapunovEstimate, float]:
    """Consistency probe: run b and 2b to the same total time, compare spectra.

    Both runs see the identical trajectory (same seed) and are compared
    at the same step count, so the deviation isolates the bin-size
    artifact (known to appear at weak measurement with small b).  Returns
    both shifted estimates and the worst relative deviation over indices
    2..q.
    """
    if total_steps < 2 * window * 2 * bin_size:
        raise InvalidParameterError(
            "total_steps too short for the convergence window at bin size 2b"
        )
    results = []
    for b in (bin_size, 2 * bin_size):
        engine = prepare_engine(model, seed, q)
        acc = LyapunovAccumulator(
            q=q, bin_size=b, window=window, rel_threshold=rel_threshold
        )
        flags = np.zeros(q, dtype=bool)
        for _ in range(total_steps // b):
            evolve_bin(engine, acc)
            _, log_norms = orthonormalize(engine.probes)
            record_bin(acc, log_norms)
            flags = check_convergence(acc)
        est = LyapunovEstimate(acc.estimates(), flags, acc.total_steps)
        results.append(shift_spectrum(est))
    a, b_ = results
    denom = np.where(np.abs(b_.exponents[1:]) > 0, np.abs(b_.exponents[1:]), 1.0)
    worst = float(np.max(np.abs(a.exponents[1:] - b_.exponents[1:]) / denom))
    return a, b_, worst
