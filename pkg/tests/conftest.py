"""Shared dense oracles, kept independent of the package's strided kernels.

Everything here goes through explicit Kronecker products and
scipy.linalg.expm so the fast paths are checked against a second route.
Convention matches the package: site 1 is the most significant bit.
"""

import numpy as np
import pytest
import scipy.linalg

SIGMA = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def kron_chain(ops):
    out = np.array([[1.0]], dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def embed(op, x, num_sites):
    """I x ... x op x ... x I with op starting at site x (1-based)."""
    width = op.shape[0].bit_length() - 1
    return kron_chain(
        [np.eye(2**(x - 1)), op, np.eye(2**(num_sites - x - width + 1))]
    )


def gate_oracle(theta):
    """4x4 gate via scaling-and-squaring expm of the summed generator."""
    h = np.zeros((4, 4), dtype=complex)
    for mu in range(4):
        for nu in range(4):
            h += theta[mu, nu] * np.kron(SIGMA[mu], SIGMA[nu])
    return scipy.linalg.expm(-1j * h)


def kraus_oracle(eta, zeta):
    a = np.sqrt(0.5 + eta)
    b = np.sqrt(0.5 - eta)
    return np.diag([a, b]) if zeta > 0 else np.diag([b, a])


def dense_layer_oracle(theta, t, num_sites):
    """Brickwork layer as an explicit operator product."""
    u = gate_oracle(theta)
    out = np.eye(2**num_sites, dtype=complex)
    start = 1 if t % 2 == 1 else 2
    for x in range(start, num_sites, 2):
        out = embed(u, x, num_sites) @ out
    return out


def dense_measurement_oracle(outcomes, eta, num_sites):
    return kron_chain([kraus_oracle(eta, z) for z in outcomes])


def dense_step_oracle(record, eta, num_sites):
    return dense_measurement_oracle(
        record.outcomes, eta, num_sites
    ) @ dense_layer_oracle(record.theta_used.theta, record.step, num_sites)


def replay_product_oracle(records, eta, num_sites):
    """Unnormalized product V = G_t ... G_1 from a logged trajectory."""
    v = np.eye(2**num_sites, dtype=complex)
    for rec in records:
        v = dense_step_oracle(rec, eta, num_sites) @ v
    return v


def partial_trace_oracle(psi, region, num_sites):
    """Naive double loop over kept/traced basis labels."""
    region = sorted(region)
    traced = [x for x in range(1, num_sites + 1) if x not in region]
    dk = 2 ** len(region)
    dt = 2 ** len(traced)

    def full_index(kept_bits, traced_bits):
        bits = {}
        for site, b in zip(region, kept_bits):
            bits[site] = b
        for site, b in zip(traced, traced_bits):
            bits[site] = b
        idx = 0
        for site in range(1, num_sites + 1):
            idx = (idx << 1) | bits[site]
        return idx

    def bits_of(value, width):
        return [(value >> (width - 1 - k)) & 1 for k in range(width)]

    rho = np.zeros((dk, dk), dtype=complex)
    for a in range(dk):
        for b in range(dk):
            for e in range(dt):
                ia = full_index(bits_of(a, len(region)), bits_of(e, len(traced)))
                ib = full_index(bits_of(b, len(region)), bits_of(e, len(traced)))
                rho[a, b] += psi[ia] * np.conj(psi[ib])
    return rho


def random_state(dim, rng):
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
