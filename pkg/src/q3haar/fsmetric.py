"""Fubini-Study metric tensor and volume density of a circuit parametrization.

For a parametrized family psi(theta) the pullback metric is

    g_ij = Re[ <d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi> ]

and the invariant volume density is sqrt(det g). Derivatives are exact:
each rotation gate exp(-i s sigma theta) differentiates to a Pauli insertion
(-i s sigma) at the gate position, summed over the occurrences of the
parameter. A central finite-difference path is kept as an independent
cross-check oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import CircuitTemplate, apply_template
from .statevec import apply_gate_array

__all__ = [
    "tangent_states",
    "metric_tensor",
    "metric_tensor_fd",
    "volume_density",
    "ProportionalityReport",
    "check_proportionality",
]

_PAULI_AXIS = {"ry": "y", "rz": "z"}


def _pauli_apply(amps: np.ndarray, n: int, qubit: int, axis: str) -> np.ndarray:
    """sigma_y or sigma_z on one qubit of raw amplitudes."""
    batch = amps.shape[:-1]
    t = amps.reshape(batch + (2,) * n)
    ax = len(batch) + qubit - 1
    a0 = np.take(t, 0, axis=ax)
    a1 = np.take(t, 1, axis=ax)
    if axis == "y":
        out = np.stack((-1j * a1, 1j * a0), axis=ax)
    else:
        out = np.stack((a0, -a1), axis=ax)
    return out.reshape(amps.shape)


def tangent_states(template: CircuitTemplate, theta) -> np.ndarray:
    """Exact derivatives d psi / d theta_k, shape (n_params, dim).

    For each occurrence of parameter k at gate position p with sign s, insert
    (-i s sigma_axis) after gate p and push through the remaining gates; sum
    the insertions.
    """
    theta = np.asarray(theta, dtype=float)
    n = template.n_qubits
    angles = template.gate_angles(theta)
    # forward pass: states[p] = amplitudes after gates 0..p-1
    states = np.zeros((len(template.gates) + 1, 2**n), dtype=complex)
    states[0, 0] = 1.0
    for i, g in enumerate(template.gates):
        states[i + 1] = apply_gate_array(states[i], n, g, theta=angles[i])
    out = np.zeros((template.n_params, 2**n), dtype=complex)
    for k in range(1, template.n_params + 1):
        acc = np.zeros(2**n, dtype=complex)
        for pos, sign in template.occurrences(k):
            g = template.gates[pos]
            v = -1j * sign * _pauli_apply(states[pos + 1], n, g.qubits[0], _PAULI_AXIS[g.kind])
            for j in range(pos + 1, len(template.gates)):
                v = apply_gate_array(v, n, template.gates[j], theta=angles[j])
            acc += v
        out[k - 1] = acc
    return out


def metric_tensor(template: CircuitTemplate, theta) -> np.ndarray:
    """Symmetric PSD metric of the parametrization at ``theta``."""
    psi = apply_template(template, theta)
    d = tangent_states(template, theta)
    gram = d.conj() @ d.T
    b = d.conj() @ psi
    g = (gram - np.outer(b, b.conj())).real
    return (g + g.T) / 2.0


def metric_tensor_fd(template: CircuitTemplate, theta, step: float = 1e-5) -> np.ndarray:
    """Finite-difference oracle for the metric (central differences)."""
    theta = np.asarray(theta, dtype=float)
    psi = apply_template(template, theta)
    d = np.zeros((template.n_params, 2**template.n_qubits), dtype=complex)
    for k in range(template.n_params):
        tp = theta.copy()
        tm = theta.copy()
        tp[k] += step
        tm[k] -= step
        d[k] = (apply_template(template, tp) - apply_template(template, tm)) / (2 * step)
    gram = d.conj() @ d.T
    b = d.conj() @ psi
    g = (gram - np.outer(b, b.conj())).real
    return (g + g.T) / 2.0


def volume_density(template: CircuitTemplate, theta) -> float:
    """sqrt(det g) >= 0; tiny negative round-off in det is clamped to zero."""
    det = float(np.linalg.det(metric_tensor(template, theta)))
    return float(np.sqrt(max(det, 0.0)))


@dataclass(frozen=True)
class ProportionalityReport:
    ratio_mean: float
    ratio_rel_spread: float
    worst_point: np.ndarray
    n_points: int


def check_proportionality(
    template: CircuitTemplate,
    density,
    points: np.ndarray,
    *,
    threshold_frac: float = 1e-3,
) -> ProportionalityReport:
    """Measure volume_density / density over sample points.

    Points where the analytic density falls below ``threshold_frac`` times
    its running maximum are excluded (the ratio would be 0/0 noise near the
    measure-zero vanishing set). Raises ValueError if fewer than 10 points
    survive.
    """
    points = np.asarray(points, dtype=float)
    dens = np.asarray([float(density(p)) for p in points])
    mask = dens > threshold_frac * dens.max(initial=0.0)
    if mask.sum() < 10:
        raise ValueError("fewer than 10 points above the density threshold")
    vols = np.asarray([volume_density(template, p) for p in points[mask]])
    ratios = vols / dens[mask]
    mean = float(ratios.mean())
    spread = float((ratios.max() - ratios.min()) / mean) if mean else float("inf")
    worst = points[mask][int(np.argmax(np.abs(ratios - mean)))]
    return ProportionalityReport(
        ratio_mean=mean,
        ratio_rel_spread=spread,
        worst_point=worst,
        n_points=int(mask.sum()),
    )
