"""Closed-form angle densities for the Haar-exact circuit templates.

All densities are exposed unnormalized. The full 14-angle law factorizes as

    P(theta) = |P1(t1) P2(t2) P(t3,t4,t5,t6) sin(2 t8) sin(2 t11) cos(2 t13)|

with uniform factors for t7, t9, t10, t12, t14, where

    P1(t1) = cos(t1)^5 sin(t1)^9
    P2(t2) = cos(2 t2)^5 sin(2 t2)^3
    P(t3..t6) = sin(2 t5) sin(4 t3) sin(phi1)^2 cos(phi2)

and phi1, phi2 are the angles between the single-qubit branch states
|a>, |b> of the circuit and the bit-flip of |b>:  |<a|x|b>| = cos(phi1),
<b|x|b> = cos(phi2).  The two-qubit law is

    P(theta) = |cos(2 t1)^2 sin(2 t1) sin(2 t3) sin(2 t5)|.

Proportionality of each law to the Fubini-Study volume density of its
template is checked numerically in :mod:`q3haar.fsmetric`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .statevec import StateVector

__all__ = [
    "alpha_beta",
    "OverlapTerms",
    "overlap_terms",
    "joint_density_3456",
    "density_theta1",
    "density_theta2",
    "density_tail_factors",
    "density_full_14",
    "density_2q",
    "normalization_constant",
]


def alpha_beta(t3, t4, t5, t6) -> tuple[StateVector, StateVector]:
    """The two single-qubit branch states of the three-qubit circuit.

    These are the states carried by the third qubit on the q1=0 / q1=1
    branches just before the third CNOT. Both are exactly the printed
    closed forms; <a|b> = sin(2 t3).
    """
    e4 = np.exp(2j * t4)
    e6 = np.exp(2j * t6)
    c3, s3 = np.cos(t3), np.sin(t3)
    c5, s5 = np.cos(t5), np.sin(t5)
    a = np.array([c3 * c5 - e4 * s3 * s5, e6 * (c3 * s5 + e4 * s3 * c5)])
    b = np.array([s3 * c5 - e4 * c3 * s5, e6 * (e4 * c3 * c5 + s3 * s5)])
    return StateVector(1, a), StateVector(1, b)


@dataclass(frozen=True)
class OverlapTerms:
    """Ingredients of the joint (t3..t6) density at one point.

    ``cos_sq_phi1`` is |<a|flip(b)>|^2 and ``cos_phi2`` is <b|flip(b)>
    (real by construction); c_i = cos(2 t_i), s_i = sin(2 t_i).
    """

    sin_2t5: float
    sin_4t3: float
    sin_sq_phi1: float
    cos_phi2: float
    c3: float
    s3: float
    c4: float
    s4: float
    c5: float
    s5: float
    c6: float
    s6: float


def _phi_terms_raw(t3, t4, t5, t6):
    c3, s3 = np.cos(2 * np.asarray(t3)), np.sin(2 * np.asarray(t3))
    c4, s4 = np.cos(2 * np.asarray(t4)), np.sin(2 * np.asarray(t4))
    c5, s5 = np.cos(2 * np.asarray(t5)), np.sin(2 * np.asarray(t5))
    c6, s6 = np.cos(2 * np.asarray(t6)), np.sin(2 * np.asarray(t6))
    cos_sq_phi1 = (c4 * c5 * c6 - s4 * s6) ** 2 + (c3 * c4 * s6 + c3 * s4 * c5 * c6) ** 2
    cos_phi2 = -s3 * s4 * s6 + c6 * (s3 * c4 * c5 - c3 * s5)
    return cos_sq_phi1, cos_phi2, (c3, s3, c4, s4, c5, s5, c6, s6)


def overlap_terms(t3, t4, t5, t6) -> OverlapTerms:
    cos_sq_phi1, cos_phi2, cs = _phi_terms_raw(t3, t4, t5, t6)
    c3, s3, c4, s4, c5, s5, c6, s6 = (float(x) for x in cs)
    return OverlapTerms(
        sin_2t5=s5,
        sin_4t3=float(np.sin(4 * t3)),
        sin_sq_phi1=float(1.0 - cos_sq_phi1),
        cos_phi2=float(cos_phi2),
        c3=c3, s3=s3, c4=c4, s4=s4, c5=c5, s5=s5, c6=c6, s6=s6,
    )


def joint_density_3456(t3, t4, t5, t6):
    """|sin(2 t5) sin(4 t3) sin(phi1)^2 cos(phi2)|, unnormalized; vectorized."""
    cos_sq_phi1, cos_phi2, _ = _phi_terms_raw(t3, t4, t5, t6)
    val = np.sin(2 * np.asarray(t5)) * np.sin(4 * np.asarray(t3))
    val = val * (1.0 - cos_sq_phi1) * cos_phi2
    return np.abs(val)


def density_theta1(t1):
    """|cos^5 sin^9|, the entangling-angle law of the three-qubit circuit."""
    t1 = np.asarray(t1, dtype=float)
    return np.abs(np.cos(t1) ** 5 * np.sin(t1) ** 9)


def density_theta2(t2):
    t2 = np.asarray(t2, dtype=float)
    return np.abs(np.cos(2 * t2) ** 5 * np.sin(2 * t2) ** 3)


def density_tail_factors(thetas_7_to_14):
    """|sin(2 t8) sin(2 t11) cos(2 t13)| from the last eight angles.

    t7, t9, t10, t12 and t14 are uniform on their ranges and contribute
    constant factors.
    """
    t = np.asarray(thetas_7_to_14, dtype=float)
    if t.shape[-1] != 8:
        raise ValueError("expected the eight angles t7..t14")
    return np.abs(
        np.sin(2 * t[..., 1]) * np.sin(2 * t[..., 4]) * np.cos(2 * t[..., 6])
    )


def density_full_14(theta):
    """Unnormalized joint density of all 14 angles; vectorized over batches."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != 14:
        raise ValueError("expected 14 angles")
    return (
        density_theta1(theta[..., 0])
        * density_theta2(theta[..., 1])
        * joint_density_3456(theta[..., 2], theta[..., 3], theta[..., 4], theta[..., 5])
        * density_tail_factors(theta[..., 6:14])
    )


def density_2q(theta):
    """Unnormalized joint density of the six two-qubit angles."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != 6:
        raise ValueError("expected 6 angles")
    t1, t3, t5 = theta[..., 0], theta[..., 2], theta[..., 4]
    return np.abs(np.cos(2 * t1) ** 2 * np.sin(2 * t1) * np.sin(2 * t3) * np.sin(2 * t5))


def normalization_constant(density, lo: float, hi: float) -> float:
    """Integral of a 1-D density over [lo, hi], for normalized comparisons."""
    val, _ = quad(lambda x: float(density(x)), lo, hi, limit=200)
    return val
