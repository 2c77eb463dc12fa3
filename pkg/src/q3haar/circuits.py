"""Circuit templates that generate arbitrary two- and three-qubit pure states.

The three-qubit template uses 3 CNOTs and 15 rotations driven by 14
independent angles (the second angle appears twice with opposite signs); the
two-qubit template uses 1 CNOT and 6 angles. Applied to |0..0> they cover the
whole state space, and with angles drawn from the densities in
:mod:`q3haar.density` they produce exactly Haar-distributed states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .statevec import GateOp, StateVector, apply_gate_array

PI = math.pi

# Fundamental ranges (lo, hi) for each angle, 1-based slots. Chosen so every
# one-dimensional density factor is nonnegative on its interval and each Z
# rotation covers its phase circle exactly once (rz has period pi up to a
# global sign).
THETA14_RANGES: tuple[tuple[float, float], ...] = (
    (0.0, PI / 2),   # theta1
    (0.0, PI / 4),   # theta2
    (0.0, PI / 4),   # theta3
    (0.0, PI),       # theta4
    (0.0, PI / 2),   # theta5
    (0.0, PI),       # theta6
    (0.0, PI),       # theta7
    (0.0, PI / 2),   # theta8
    (0.0, PI),       # theta9
    (0.0, PI),       # theta10
    (0.0, PI / 2),   # theta11
    (0.0, PI),       # theta12
    (-PI / 4, PI / 4),  # theta13
    (0.0, PI),       # theta14
)

THETA6_RANGES: tuple[tuple[float, float], ...] = (
    (0.0, PI / 2),   # theta1
    (0.0, PI),       # theta2
    (0.0, PI / 2),   # theta3
    (0.0, PI),       # theta4
    (0.0, PI / 2),   # theta5
    (0.0, PI),       # theta6
)


@dataclass(frozen=True)
class CircuitTemplate:
    """Ordered gate list with named parameter slots."""

    n_qubits: int
    n_params: int
    gates: tuple[GateOp, ...]

    @property
    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == "cnot")

    @property
    def rotation_count(self) -> int:
        return sum(1 for g in self.gates if g.kind != "cnot")

    def gate_angles(self, theta) -> np.ndarray:
        """Concrete rotation angle for each gate (0.0 for CNOT slots).

        ``theta`` may carry leading batch axes; result has shape
        ``batch + (len(gates),)``.
        """
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.n_params:
            raise ValueError(
                f"expected {self.n_params} angles, got {theta.shape[-1]}"
            )
        out = np.zeros(theta.shape[:-1] + (len(self.gates),))
        for i, g in enumerate(self.gates):
            if g.kind == "cnot":
                continue
            if g.slot:
                out[..., i] = g.sign * theta[..., g.slot - 1]
            else:
                out[..., i] = g.angle
        return out

    def occurrences(self, slot: int) -> list[tuple[int, float]]:
        """(gate index, sign) pairs where parameter ``slot`` appears."""
        return [(i, g.sign) for i, g in enumerate(self.gates) if g.slot == slot]


def three_qubit_template() -> CircuitTemplate:
    """3-CNOT / 15-rotation template for arbitrary three-qubit states.

    Application order on |000>: Y(t1) q1; Y(t2) q2; CNOT 1->2; Y(-t2) q2;
    Y(t3) q3; CNOT 1->3; Z(t4) Y(t5) Z(t6) q3; CNOT 2->3; then local frames
    Z(t7) Y(t8) Z(t9) on q1, Z(t10) Y(t11) Z(t12) on q2, Z(t13) Y(t14) on q3.
    """
    g = (
        GateOp("ry", (1,), slot=1),
        GateOp("ry", (2,), slot=2),
        GateOp("cnot", (1, 2)),
        GateOp("ry", (2,), slot=2, sign=-1.0),
        GateOp("ry", (3,), slot=3),
        GateOp("cnot", (1, 3)),
        GateOp("rz", (3,), slot=4),
        GateOp("ry", (3,), slot=5),
        GateOp("rz", (3,), slot=6),
        GateOp("cnot", (2, 3)),
        GateOp("rz", (1,), slot=7),
        GateOp("ry", (1,), slot=8),
        GateOp("rz", (1,), slot=9),
        GateOp("rz", (2,), slot=10),
        GateOp("ry", (2,), slot=11),
        GateOp("rz", (2,), slot=12),
        GateOp("rz", (3,), slot=13),
        GateOp("ry", (3,), slot=14),
    )
    return CircuitTemplate(n_qubits=3, n_params=14, gates=g)


def two_qubit_template() -> CircuitTemplate:
    """1-CNOT / 7-rotation template for arbitrary two-qubit states."""
    g = (
        GateOp("ry", (1,), slot=1),
        GateOp("cnot", (1, 2)),
        GateOp("rz", (1,), slot=2),
        GateOp("ry", (1,), slot=3),
        GateOp("rz", (1,), slot=4),
        GateOp("ry", (2,), slot=5),
        GateOp("rz", (2,), slot=6),
    )
    return CircuitTemplate(n_qubits=2, n_params=6, gates=g)


THREE_QUBIT = three_qubit_template()
TWO_QUBIT = two_qubit_template()


def apply_template(
    template: CircuitTemplate,
    theta,
    *,
    upto: int | None = None,
    initial: np.ndarray | None = None,
) -> np.ndarray:
    """Raw amplitudes after applying the first ``upto`` gates (default all).

    ``theta`` may carry leading batch axes, giving batched output.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("angles must be finite")
    n = template.n_qubits
    angles = template.gate_angles(theta)
    batch = theta.shape[:-1]
    if initial is None:
        amps = np.zeros(batch + (2**n,), dtype=complex)
        amps[..., 0] = 1.0
    else:
        amps = np.broadcast_to(initial, batch + (2**n,)).astype(complex)
    stop = len(template.gates) if upto is None else upto
    for i, g in enumerate(template.gates[:stop]):
        amps = apply_gate_array(amps, n, g, theta=angles[..., i])
    return amps


def build_state_3q(theta) -> StateVector:
    """State produced by the three-qubit template for the given 14 angles."""
    return StateVector(3, apply_template(THREE_QUBIT, theta))


def build_state_2q(theta) -> StateVector:
    """State produced by the two-qubit template for the given 6 angles."""
    return StateVector(2, apply_template(TWO_QUBIT, theta))


def build_states_3q_batch(thetas: np.ndarray) -> np.ndarray:
    """(N, 8) amplitudes for an (N, 14) batch of angle vectors."""
    return apply_template(THREE_QUBIT, np.asarray(thetas, dtype=float))


def build_states_2q_batch(thetas: np.ndarray) -> np.ndarray:
    return apply_template(TWO_QUBIT, np.asarray(thetas, dtype=float))


def intermediate_state_3q(t1, t2, t3, t4, t5, t6) -> StateVector:
    """Closed form of the three-qubit state just before the third CNOT.

    Equals the template prefix through the Z(t6) gate up to the global phase
    exp(-i(t4 + t6)):

        cos(t1)|00>|a> + sin(t1)|1>(sin(2 t2)|0> + cos(2 t2)|1>)|b>

    with |a>, |b> from :func:`q3haar.density.alpha_beta`.
    """
    from .density import alpha_beta

    a, b = alpha_beta(t3, t4, t5, t6)
    amps = np.zeros(8, dtype=complex)
    amps[0:2] = math.cos(t1) * a.amps
    amps[4:6] = math.sin(t1) * math.sin(2 * t2) * b.amps
    amps[6:8] = math.sin(t1) * math.cos(2 * t2) * b.amps
    return StateVector(3, amps)


def validate_angles(theta, ranges, tol: float = 1e-9):
    """Raise ValueError if any angle leaves its fundamental range."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != len(ranges):
        raise ValueError(f"expected {len(ranges)} angles")
    for k, (lo, hi) in enumerate(ranges):
        t = theta[..., k]
        if np.any(t < lo - tol) or np.any(t > hi + tol):
            raise ValueError(
                f"theta{k + 1} = {np.atleast_1d(t)[0]!r} outside [{lo}, {hi}]"
            )


def angles_to_json(theta) -> dict:
    return {"theta": np.asarray(theta, dtype=float).tolist()}


def angles_from_json(obj: dict) -> np.ndarray:
    theta = np.asarray(obj["theta"], dtype=float)
    if theta.shape not in ((14,), (6,)):
        raise ValueError("expected 14 or 6 angles")
    return theta


def format_template(template: CircuitTemplate) -> str:
    """Plain-text wire diagram, one row per qubit."""
    rows = {q: [f"q{q}: |0>"] for q in range(1, template.n_qubits + 1)}
    for g in template.gates:
        width = 0
        cells = {}
        if g.kind == "cnot":
            c, t = g.qubits
            cells[c] = "--o--"
            cells[t] = "--X--"
        else:
            name = "RY" if g.kind == "ry" else "RZ"
            sgn = "-" if g.sign < 0 else ""
            arg = f"{sgn}t{g.slot}" if g.slot else f"{g.angle:g}"
            cells[g.qubits[0]] = f"-{name}({arg})-"
        width = max(len(v) for v in cells.values())
        for q in rows:
            rows[q].append(cells.get(q, "-" * width).ljust(width, "-"))
    return "\n".join("".join(rows[q]) for q in sorted(rows))
