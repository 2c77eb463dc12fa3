"""Seeded, reproducible sampling of circuit angles and reference Haar states.

Streams are counter-based (Philox) and splittable: a ``RandomStream`` is the
immutable (seed, stream_id) key of a generator, and batch APIs derive one
independent substream per item, so parallel and serial generation produce
identical output and results are byte-exact across platforms for a given
NumPy version.

One-dimensional angle laws are sampled by exact inverse transforms:

    t1  = arcsin(sqrt(B))        B ~ Beta(5, 3)     (law cos^5 sin^9)
    t2  = arcsin(sqrt(B))/2      B ~ Beta(2, 3)     (law cos^5(2t) sin^3(2t))
    t8, t11 = arccos(1 - 2u)/2                      (law sin(2t) on [0, pi/2])
    t13 = arcsin(2u - 1)/2                          (law cos(2t) on [-pi/4, pi/4])
    t7, t9, t10, t12, t14 ~ U[0, pi)

and the coupled block (t3, t4, t5, t6) by rejection sampling against its
joint density with envelope constant ``JOINT_BOUND``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import build_state_3q, build_states_3q_batch, build_states_2q_batch
from .density import joint_density_3456
from .statevec import StateVector

__all__ = [
    "RandomStream",
    "SampleRecord",
    "EnvelopeViolation",
    "SamplingError",
    "JOINT_BOUND",
    "sample_theta1",
    "sample_theta2",
    "sample_sin2",
    "sample_cos2",
    "sample_uniform_z",
    "sample_joint_3456",
    "joint_proposal_stats",
    "sample_angles14",
    "sample_angles14_batch",
    "sample_state_3q",
    "sample_states_3q_batch",
    "sample_angles_2q",
    "sample_angles_2q_batch",
    "sample_state_2q",
    "haar_reference_state",
    "haar_reference_states",
    "mutant_angles14_batch",
    "MUTATIONS",
]

PI = np.pi
JOINT_BOUND = 0.85
# proposals are drawn in fixed blocks so the stream layout never depends on
# where acceptance happens
_PROPOSAL_BLOCK = 64


class EnvelopeViolation(RuntimeError):
    """The joint density exceeded the rejection bound at a proposal."""


class SamplingError(RuntimeError):
    """Rejection sampling failed to accept within the proposal budget."""


def _mix64(x: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit words."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RandomStream:
    """Immutable key of a counter-based generator."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & 0xFFFFFFFFFFFFFFFF, self.stream_id & 0xFFFFFFFFFFFFFFFF)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, _mix64(self.stream_id ^ _mix64(index + 1)))


def _gen(stream) -> np.random.Generator:
    if isinstance(stream, RandomStream):
        return stream.generator()
    if isinstance(stream, np.random.Generator):
        return stream
    raise TypeError("expected a RandomStream or numpy Generator")


# ---------------------------------------------------------------------------
# one-dimensional laws


def sample_theta1(stream, size=None):
    rng = _gen(stream)
    return np.arcsin(np.sqrt(rng.beta(5.0, 3.0, size)))


def sample_theta2(stream, size=None):
    rng = _gen(stream)
    return 0.5 * np.arcsin(np.sqrt(rng.beta(2.0, 3.0, size)))


def sample_sin2(stream, size=None):
    rng = _gen(stream)
    return 0.5 * np.arccos(1.0 - 2.0 * rng.random(size))


def sample_cos2(stream, size=None):
    rng = _gen(stream)
    return 0.5 * np.arcsin(2.0 * rng.random(size) - 1.0)


def sample_uniform_z(stream, size=None):
    rng = _gen(stream)
    return PI * rng.random(size)


# ---------------------------------------------------------------------------
# rejection sampling of the coupled block


def _proposal_block(rng, n):
    u = rng.random((n, 5))
    t3 = u[:, 0] * (PI / 4)
    t4 = u[:, 1] * PI
    t5 = u[:, 2] * (PI / 2)
    t6 = u[:, 3] * PI
    return t3, t4, t5, t6, u[:, 4]


def sample_joint_3456(stream, bound: float = JOINT_BOUND, max_proposals: int = 1_000_000):
    """One accepted (t3, t4, t5, t6) tuple plus the number of proposals used.

    Raises EnvelopeViolation if the density ever exceeds ``bound`` (which
    would make the sample biased) and SamplingError if no proposal is
    accepted within ``max_proposals``.
    """
    rng = _gen(stream)
    used = 0
    while used < max_proposals:
        t3, t4, t5, t6, x = _proposal_block(rng, _PROPOSAL_BLOCK)
        d = joint_density_3456(t3, t4, t5, t6)
        if np.any(d > bound):
            raise EnvelopeViolation(
                f"joint density {d.max():.6f} exceeds bound {bound}"
            )
        hits = np.nonzero(x * bound < d)[0]
        if hits.size:
            k = int(hits[0])
            return float(t3[k]), float(t4[k]), float(t5[k]), float(t6[k]), used + k + 1
        used += _PROPOSAL_BLOCK
    raise SamplingError(f"no acceptance within {max_proposals} proposals")


def joint_proposal_stats(stream, n_proposals: int, bound: float = JOINT_BOUND):
    """(n_accepted, max_density) over a fixed number of uniform proposals."""
    rng = _gen(stream)
    accepted = 0
    dmax = 0.0
    left = n_proposals
    while left > 0:
        n = min(left, 65536)
        t3, t4, t5, t6, x = _proposal_block(rng, n)
        d = joint_density_3456(t3, t4, t5, t6)
        dmax = max(dmax, float(d.max()))
        accepted += int(np.count_nonzero(x * bound < d))
        left -= n
    return accepted, dmax


# ---------------------------------------------------------------------------
# full angle vectors


@dataclass(frozen=True)
class SampleRecord:
    """One draw: angles, resulting state and provenance."""

    angles: np.ndarray
    state: StateVector
    proposals_used: int
    seed: int
    stream_id: int


def _angles14_from_gen(rng) -> tuple[np.ndarray, int]:
    th = np.empty(14)
    th[0] = sample_theta1(rng)
    th[1] = sample_theta2(rng)
    th[2], th[3], th[4], th[5], used = sample_joint_3456(rng)
    th[6] = sample_uniform_z(rng)   # t7
    th[7] = sample_sin2(rng)        # t8
    th[8] = sample_uniform_z(rng)   # t9
    th[9] = sample_uniform_z(rng)   # t10
    th[10] = sample_sin2(rng)       # t11
    th[11] = sample_uniform_z(rng)  # t12
    th[12] = sample_cos2(rng)       # t13
    th[13] = sample_uniform_z(rng)  # t14
    return th, used


def sample_angles14(stream) -> np.ndarray:
    """One 14-angle vector drawn from the exact joint law."""
    th, _ = _angles14_from_gen(_gen(stream))
    return th


def sample_angles14_batch(stream: RandomStream, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(n, 14) angles and (n,) proposal counts, one substream per row."""
    thetas = np.empty((n, 14))
    used = np.empty(n, dtype=int)
    for i in range(n):
        thetas[i], used[i] = _angles14_from_gen(stream.substream(i).generator())
    return thetas, used


def sample_state_3q(stream: RandomStream) -> SampleRecord:
    rng = stream.generator() if isinstance(stream, RandomStream) else stream
    th, used = _angles14_from_gen(rng)
    sid = stream.stream_id if isinstance(stream, RandomStream) else -1
    seed = stream.seed if isinstance(stream, RandomStream) else -1
    return SampleRecord(
        angles=th,
        state=build_state_3q(th),
        proposals_used=used,
        seed=seed,
        stream_id=sid,
    )


def sample_states_3q_batch(stream: RandomStream, n: int):
    """(angles (n, 14), amplitudes (n, 8), proposals (n,)); vectorized build."""
    thetas, used = sample_angles14_batch(stream, n)
    return thetas, build_states_3q_batch(thetas), used


# ---------------------------------------------------------------------------
# two-qubit circuit


def _angles2q_from_gen(rng) -> np.ndarray:
    th = np.empty(6)
    w = np.cbrt(2.0 * rng.random() - 1.0)  # w = cos(2 t1) has law w^2 on [-1, 1]
    th[0] = 0.5 * np.arccos(w)
    th[1] = sample_uniform_z(rng)
    th[2] = sample_sin2(rng)
    th[3] = sample_uniform_z(rng)
    th[4] = sample_sin2(rng)
    th[5] = sample_uniform_z(rng)
    return th


def sample_angles_2q(stream) -> np.ndarray:
    return _angles2q_from_gen(_gen(stream))


def sample_angles_2q_batch(stream: RandomStream, n: int) -> np.ndarray:
    return np.stack([_angles2q_from_gen(stream.substream(i).generator()) for i in range(n)])


def sample_state_2q(stream) -> StateVector:
    from .circuits import build_state_2q

    return build_state_2q(_angles2q_from_gen(_gen(stream)))


def sample_states_2q_batch(stream: RandomStream, n: int):
    thetas = sample_angles_2q_batch(stream, n)
    return thetas, build_states_2q_batch(thetas)


# ---------------------------------------------------------------------------
# Gaussian Haar oracle


def haar_reference_states(n_qubits: int, stream, size: int) -> np.ndarray:
    """(size, 2**n) Haar states from normalized complex Gaussian vectors."""
    rng = _gen(stream)
    dim = 2**n_qubits
    z = rng.standard_normal((size, dim)) + 1j * rng.standard_normal((size, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_reference_state(n_qubits: int, stream) -> StateVector:
    return StateVector(n_qubits, haar_reference_states(n_qubits, stream, 1)[0])


# ---------------------------------------------------------------------------
# deliberately wrong samplers (negative controls for the test suites)

MUTATIONS = ("theta8_uniform", "theta1_uniform")


def mutant_angles14_batch(stream: RandomStream, n: int, mutation: str) -> np.ndarray:
    """Angle batches with one law deliberately replaced; for negative controls.

    "theta8_uniform" draws t8 uniformly instead of by sin(2 t8);
    "theta1_uniform" draws t1 uniformly instead of by cos^5 sin^9.
    """
    if mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}")
    thetas, _ = sample_angles14_batch(stream, n)
    mrng = stream.substream(0x6D75).generator()
    if mutation == "theta8_uniform":
        thetas[:, 7] = mrng.random(n) * (PI / 2)
    else:
        thetas[:, 0] = mrng.random(n) * (PI / 2)
    return thetas
