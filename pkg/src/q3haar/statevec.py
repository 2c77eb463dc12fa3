"""Dense state-vector kernel for one- to three-qubit systems.

Basis convention: amplitudes are ordered as |q1 q2 ... qn> with qubit 1 the
most significant bit, so for three qubits index 0b110 = 6 is |110>.

Rotation conventions (exp(-i * sigma * theta) with Pauli sigma_y, sigma_z):

    rz(theta) = diag(exp(-i*theta), exp(+i*theta))
    ry(theta) = [[cos(theta), -sin(theta)],
                 [sin(theta),  cos(theta)]]

All operations are pure; states are immutable once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

NORM_TOL = 1e-12

__all__ = [
    "StateVector",
    "GateOp",
    "apply_gate",
    "fidelity",
    "fubini_study_distance",
    "reduced_purity",
    "basis_state",
    "state_to_json",
    "state_from_json",
]


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on ``n_qubits`` qubits (1, 2 or 3)."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        if self.n_qubits not in (1, 2, 3):
            raise ValueError(f"n_qubits must be 1, 2 or 3, got {self.n_qubits}")
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi| = {norm!r}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


@dataclass(frozen=True)
class GateOp:
    """One circuit gate: a Y/Z rotation on one qubit or a CNOT.

    Rotations either carry a fixed ``angle`` or reference a named parameter
    ``slot`` (1-based index into the circuit's angle vector) with a ``sign``
    multiplier; a gate with slot 0 is fixed. Qubit indices are 1-based.
    """

    kind: str  # "ry", "rz" or "cnot"
    qubits: tuple[int, ...]
    angle: float = 0.0
    slot: int = 0
    sign: float = 1.0

    def __post_init__(self):
        if self.kind not in ("ry", "rz", "cnot"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        n_expected = 2 if self.kind == "cnot" else 1
        if len(self.qubits) != n_expected:
            raise ValueError(f"{self.kind} takes {n_expected} qubit(s)")
        if self.kind == "cnot" and self.qubits[0] == self.qubits[1]:
            raise ValueError("CNOT control and target must differ")


def _check_qubits(n: int, qubits: Iterable[int]):
    for q in qubits:
        if not 1 <= q <= n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")


@lru_cache(maxsize=None)
def _cnot_perm(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit = 1 << (n - control)
    tbit = 1 << (n - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def _qubit_slices(amps: np.ndarray, n: int, qubit: int):
    """Split the last axis into the qubit=0 / qubit=1 halves."""
    batch = amps.shape[:-1]
    t = amps.reshape(batch + (2,) * n)
    ax = len(batch) + qubit - 1
    return np.take(t, 0, axis=ax), np.take(t, 1, axis=ax), ax, batch


def _bcast(x, batch: tuple, n: int):
    x = np.asarray(x)
    if x.ndim:
        return x.reshape(batch + (1,) * (n - 1))
    return x


def apply_ry(amps: np.ndarray, n: int, qubit: int, theta) -> np.ndarray:
    """Y rotation on ``qubit``; supports leading batch axes and batched theta."""
    a0, a1, ax, batch = _qubit_slices(amps, n, qubit)
    c = _bcast(np.cos(theta), batch, n)
    s = _bcast(np.sin(theta), batch, n)
    out = np.stack((c * a0 - s * a1, s * a0 + c * a1), axis=ax)
    return out.reshape(amps.shape)


def apply_rz(amps: np.ndarray, n: int, qubit: int, theta) -> np.ndarray:
    """Z rotation diag(e^{-i theta}, e^{+i theta}) on ``qubit``."""
    a0, a1, ax, batch = _qubit_slices(amps, n, qubit)
    ph = _bcast(np.exp(1j * np.asarray(theta)), batch, n)
    out = np.stack((a0 * np.conj(ph), a1 * ph), axis=ax)
    return out.reshape(amps.shape)


def apply_cnot(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    return amps[..., _cnot_perm(n, control, target)]


def apply_gate_array(amps: np.ndarray, n: int, gate: GateOp, theta=None) -> np.ndarray:
    """Apply a bound gate to raw amplitudes; ``theta`` overrides gate.angle."""
    _check_qubits(n, gate.qubits)
    if gate.kind == "cnot":
        return apply_cnot(amps, n, *gate.qubits)
    ang = gate.angle if theta is None else theta
    if gate.kind == "ry":
        return apply_ry(amps, n, gate.qubits[0], ang)
    return apply_rz(amps, n, gate.qubits[0], ang)


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Apply one gate to a state. The gate must carry a concrete angle."""
    if gate.slot != 0:
        raise ValueError("gate has an unbound parameter slot")
    if not np.isfinite(gate.angle):
        raise ValueError("gate angle must be finite")
    amps = apply_gate_array(state.amps, state.n_qubits, gate)
    return StateVector(state.n_qubits, amps)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|, invariant under global phases of either argument."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("dimension mismatch")
    return float(abs(np.vdot(a.amps, b.amps)))


def fubini_study_distance(a: StateVector, b: StateVector) -> float:
    """Angle between two states: arccos |<a|b>| in [0, pi/2]."""
    return float(np.arccos(np.clip(fidelity(a, b), 0.0, 1.0)))


def reduced_purity(state: StateVector, subsystem: Iterable[int]) -> float:
    """Tr(rho_A^2) for the reduced state on the given qubit subset."""
    sub = sorted(set(subsystem))
    n = state.n_qubits
    _check_qubits(n, sub)
    if not sub or len(sub) >= n:
        raise ValueError("subsystem must be a nonempty proper subset of qubits")
    keep = [q - 1 for q in sub]
    rest = [ax for ax in range(n) if ax not in keep]
    t = state.amps.reshape((2,) * n).transpose(keep + rest)
    m = t.reshape(2 ** len(keep), 2 ** len(rest))
    rho = m @ m.conj().T
    return float(np.sum(np.abs(rho) ** 2).real)


def purities_batch(amps: np.ndarray, n: int, qubit: int) -> np.ndarray:
    """Single-qubit reduced purities for a (N, 2**n) batch of states."""
    batch = amps.shape[:-1]
    t = amps.reshape(batch + (2,) * n)
    ax = len(batch) + qubit - 1
    t = np.moveaxis(t, ax, len(batch)).reshape(batch + (2, 2 ** (n - 1)))
    rho = np.einsum("...ik,...jk->...ij", t, t.conj())
    return np.sum(np.abs(rho) ** 2, axis=(-2, -1)).real


def basis_state(n: int, bits) -> StateVector:
    """Computational basis state; ``bits`` is an int index or a string like "110"."""
    if isinstance(bits, str):
        index = int(bits, 2)
    else:
        index = int(bits)
    amps = np.zeros(2**n, dtype=complex)
    amps[index] = 1.0
    return StateVector(n, amps)


def state_to_json(state: StateVector) -> dict:
    """JSON-friendly form: {"n": int, "re": [...], "im": [...]}."""
    return {
        "n": state.n_qubits,
        "re": state.amps.real.tolist(),
        "im": state.amps.imag.tolist(),
    }


def state_from_json(obj: dict) -> StateVector:
    n = int(obj["n"])
    amps = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    return StateVector(n, amps)
