"""Angle extraction: invert the three-qubit template for an arbitrary state.

The algorithm peels the circuit off the state in reverse order. A canonical
two-term split isolates the product component and fixes the local frame
angles (t8, t9, t11, t12); a Y/Z pair on qubit 3 (t14, t13) aligns the two
entangled branch states into bit-flip partners; undoing the last CNOT exposes
the phase angle t10 and the single-qubit pair whose Euler
inversion yields (t3, t4, t5, t6); undoing the middle CNOT exposes t7, t2
and t1.

The parametrization covers the state space four times over the fundamental
ranges: a generic state has two canonical-split roots, and within each root
an exact coordinate symmetry pairs the sheets

    (t4, t5, t6, t10, t13, t14) ->
        (t4 - pi/2, pi/2 - t5, pi/2 - t6, t10 + pi/2, -t13, t14 - pi/2)

(shifts mod pi; all other angles fixed). ``extract_angles`` picks a
deterministic canonical sheet: the root whose product-term qubit-1 factor has
the smaller polar angle, then the sheet with t13 >= 0. Batch extraction can
instead select uniformly at random among valid sheets, which makes angles
extracted from Haar states follow the joint density over the full ranges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import THREE_QUBIT, apply_template, build_state_3q
from .statevec import StateVector, apply_cnot, apply_ry, apply_rz

__all__ = [
    "QubitPolarForm",
    "polar_form",
    "CanonicalSplit",
    "DegenerateState",
    "IndeterminateRatio",
    "canonical_form",
    "canonical_roots",
    "theta14_from",
    "theta13_from",
    "invert_q3_zyz",
    "Extraction",
    "extract_angles",
    "extract_angles_full",
    "extract_all_sheets",
    "sheet_partner",
]

PI = math.pi
HALF = PI / 2

# component magnitudes below this are treated as exact zeros
EPS = 1e-12
# a sheet counts as valid if it rebuilds the input at least this well
FID_ACCEPT = 1.0 - 1e-10
# product-term isolation tolerance of the canonical split
DEGENERATE_TOL = 1e-10


class DegenerateState(ValueError):
    """No canonical two-term split could be isolated (measure-zero inputs)."""


class IndeterminateRatio(ValueError):
    """Both sides of the t14 equation vanish; any t14 works."""


@dataclass(frozen=True)
class QubitPolarForm:
    """One qubit written as cos(phi)|0> + exp(i xi) sin(phi)|1>."""

    phi: float
    xi: float


def polar_form(v) -> QubitPolarForm:
    v = np.asarray(v, dtype=complex)
    phi = math.atan2(abs(v[1]), abs(v[0]))
    if abs(v[0]) < EPS or abs(v[1]) < EPS:
        xi = 0.0
    else:
        xi = float((np.angle(v[1]) - np.angle(v[0])) % (2 * PI))
    return QubitPolarForm(phi=phi, xi=xi)


def _fold(x: float, period: float) -> float:
    return float(x % period)


def _fold_centered(x: float, period: float) -> float:
    return float((x + period / 2) % period - period / 2)


# ---------------------------------------------------------------------------
# canonical two-term split


def _slice_matrices(amps: np.ndarray):
    t = amps.reshape(2, 2, 2)
    return t[0], t[1]


def canonical_roots(psi: StateVector | np.ndarray) -> list[np.ndarray]:
    """Unit qubit-1 vectors w such that (<w| x I)|psi> is a product state.

    Generically two solutions, returned ordered by polar angle (then by
    relative phase). Solves det(conj(a) T0 + conj(b) T1) = 0 for the slice
    matrices T0, T1 of the input.
    """
    amps = psi.amps if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    t0, t1 = _slice_matrices(amps)
    d0 = t0[0, 0] * t0[1, 1] - t0[0, 1] * t0[1, 0]
    d1 = t1[0, 0] * t1[1, 1] - t1[0, 1] * t1[1, 0]
    c = (
        t0[0, 0] * t1[1, 1]
        + t1[0, 0] * t0[1, 1]
        - t0[0, 1] * t1[1, 0]
        - t1[0, 1] * t0[1, 0]
    )
    scale = max(abs(d0), abs(d1), abs(c))
    mus: list[complex | None] = []  # None encodes the mu -> infinity root
    if scale < 1e-14:
        # every direction is singular: qubit 1 factors out entirely; take the
        # dominant eigenvector of its reduced state
        m = amps.reshape(2, 4)
        rho = m @ m.conj().T
        _, vecs = np.linalg.eigh(rho)
        w = vecs[:, -1]
        w = w * np.exp(-1j * np.angle(w[np.argmax(np.abs(w))]))
        return [w]
    if abs(d1) < 1e-13 * scale:
        mus.append(None)
        if abs(c) > 1e-13 * scale:
            mus.append(-d0 / c)
    else:
        disc = np.sqrt(c * c - 4.0 * d0 * d1)
        # subtraction-safe quadratic roots
        q = -0.5 * (c + disc) if abs(c + disc) > abs(c - disc) else -0.5 * (c - disc)
        roots = []
        if abs(q) > 0:
            roots = [q / d1, d0 / q]
        else:
            roots = [0.0 + 0.0j, 0.0 + 0.0j]
        mus.extend(roots)
    out = []
    for mu in mus:
        if mu is None:
            w = np.array([0.0, 1.0], dtype=complex)
        else:
            a = 1.0 / math.sqrt(1.0 + abs(mu) ** 2)
            w = np.array([a, np.conj(mu) * a])
        if not any(abs(abs(np.vdot(w, o)) - 1.0) < 1e-9 for o in out):
            out.append(w)
    out.sort(key=lambda w: (round(polar_form(w).phi, 12), polar_form(w).xi))
    return out


@dataclass(frozen=True)
class CanonicalSplit:
    """|psi> = product_weight |w1 w2 w3> + |w1_perp>|xi_rest>."""

    omega1: StateVector
    omega1_perp: StateVector
    omega2: StateVector
    omega3: StateVector
    product_weight: complex
    xi: np.ndarray  # unnormalized 2-qubit remainder on qubits 2, 3
    residual: float  # product defect of the first term

    def reassemble(self) -> StateVector:
        prod = np.kron(self.omega2.amps, self.omega3.amps)
        amps = self.product_weight * np.kron(self.omega1.amps, prod)
        amps = amps + np.kron(self.omega1_perp.amps, self.xi)
        return StateVector(3, amps)


def _split_from_omega1(amps: np.ndarray, w: np.ndarray):
    """Product slice, remainder and the rank-1 factors for a given omega1."""
    t0, t1 = _slice_matrices(amps)
    a_slice = np.conj(w[0]) * t0 + np.conj(w[1]) * t1
    xi = -w[1] * t0 + w[0] * t1
    u, s, vh = np.linalg.svd(a_slice)
    omega2 = u[:, 0]
    omega3 = vh[0, :]
    weight = s[0]
    # push the arbitrary SVD phases into the scalar weight
    k2 = int(np.argmax(np.abs(omega2)))
    ph2 = np.exp(1j * np.angle(omega2[k2])) if abs(omega2[k2]) > EPS else 1.0
    k3 = int(np.argmax(np.abs(omega3)))
    ph3 = np.exp(1j * np.angle(omega3[k3])) if abs(omega3[k3]) > EPS else 1.0
    omega2 = omega2 / ph2
    omega3 = omega3 / ph3
    weight = weight * ph2 * ph3
    residual = float(s[1])
    return a_slice, xi, omega2, omega3, weight, residual


def canonical_form(psi: StateVector) -> CanonicalSplit:
    """Two-term split of a three-qubit state with the canonical root choice."""
    if psi.n_qubits != 3:
        raise ValueError("canonical_form expects a three-qubit state")
    roots = canonical_roots(psi)
    w = roots[0]
    _, xi, omega2, omega3, weight, residual = _split_from_omega1(psi.amps, w)
    if residual > DEGENERATE_TOL and abs(weight) > DEGENERATE_TOL:
        raise DegenerateState(
            f"no product term isolated: residual {residual:.3e}"
        )
    w_perp = np.array([-np.conj(w[1]), np.conj(w[0])])
    if abs(weight) < EPS:
        omega2 = np.array([1.0, 0.0], dtype=complex)
        omega3 = np.array([1.0, 0.0], dtype=complex)
    return CanonicalSplit(
        omega1=StateVector(1, w),
        omega1_perp=StateVector(1, w_perp),
        omega2=StateVector(1, omega2),
        omega3=StateVector(1, omega3),
        product_weight=complex(weight),
        xi=xi.reshape(4),
        residual=residual,
    )


# ---------------------------------------------------------------------------
# tail rotations on qubit 3


def theta14_from(
    g1: QubitPolarForm, g2: QubitPolarForm, *, on_indeterminate: str = "zero"
) -> float:
    """Y angle aligning two qubit states into bit-flip partners.

    Solves -tan(2 t14) = (cos 2phi1 + cos 2phi2) /
    (sin 2phi1 cos xi1 + sin 2phi2 cos xi2), branch in [0, pi). After the
    rotation the two states have complementary |0> magnitudes (the squared
    magnitudes sum to one).
    """
    num = math.cos(2 * g1.phi) + math.cos(2 * g2.phi)
    den = math.sin(2 * g1.phi) * math.cos(g1.xi) + math.sin(2 * g2.phi) * math.cos(g2.xi)
    if abs(num) < EPS and abs(den) < EPS:
        if on_indeterminate == "raise":
            raise IndeterminateRatio("both sides of the t14 relation vanish")
        return 0.0
    return _fold(0.5 * math.atan2(-num, den), PI)


def theta13_from(delta1: float, delta2: float) -> float:
    """-(delta1 + delta2)/4 folded into [-pi/4, pi/4)."""
    return _fold_centered(-(delta1 + delta2) / 4.0, HALF)


def _ry_vec(v: np.ndarray, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _phase_deltas(g1r: np.ndarray, g2r: np.ndarray) -> tuple[float, float]:
    d1 = float(np.angle(g1r[0]) - np.angle(g1r[1]))
    d2 = float(np.angle(g2r[0]) - np.angle(g2r[1]))
    return d1, d2


# ---------------------------------------------------------------------------
# Euler inversion of the qubit-3 branch pair


def _polar_angles(v: np.ndarray) -> tuple[float, float, float]:
    """(phi, xi, global phase) with v = e^{i g}(cos phi, e^{i xi} sin phi)."""
    p = polar_form(v)
    if abs(v[0]) >= EPS:
        g = float(np.angle(v[0]))
    else:
        g = float(np.angle(v[1]) - p.xi)
    return p.phi, p.xi, g


def invert_q3_zyz(chi1, chi2) -> tuple[float, float, float]:
    """Rotation angles (t4, t5, t6) mapping the branch pair to real form.

    Given unit vectors chi1, chi2 equal (up to phases) to the circuit's
    qubit-3 branch states, find angles such that applying rz(-t6), ry(-t5),
    rz(-t4) in that order sends chi1 to cos(t3)|0> + sin(t3)|1> and chi2 to
    its bit-flip, up to a common phase, with t3 fixed by
    sin(2 t3) = |<chi1|chi2>|.
    """
    t3, t4, t5, t6, _ = _invert_q3(np.asarray(chi1, dtype=complex),
                                   np.asarray(chi2, dtype=complex))
    return t4, t5, t6


def _invert_q3(chi1: np.ndarray, chi2: np.ndarray):
    """Full solver; returns (t3, t4, t5, t6, flags)."""
    flags: set[str] = set()
    ov = complex(np.vdot(chi1, chi2))
    s2t3 = min(abs(ov), 1.0)
    t3 = 0.5 * math.asin(s2t3)

    if s2t3 < EPS:
        # orthogonal pair: t3 = 0, alpha = chi1 up to phase, t4 free -> 0
        phi, xi, _ = _polar_angles(chi1)
        return 0.0, 0.0, phi, _fold(xi / 2.0, PI), flags

    chi2a = chi2 * np.exp(-1j * np.angle(ov))
    c3, s3 = math.cos(t3), math.sin(t3)
    u = c3 * chi1 - s3 * chi2a          # e^{ia} cos(2 t3) (cos t5, e^{2i t6} sin t5)
    w = s3 * chi1 + c3 * chi2a          # e^{ia} (s2t3 c5 - e^{2i t4} s5, ...)
    c2t3 = math.cos(2 * t3)

    if c2t3 < 1e-9:
        # parallel pair (t3 = pi/4): one-parameter gauge family; fix t4 = 0
        flags.add("parallel_branches")
        phi, xi, _ = _polar_angles(chi1)
        t5 = phi - PI / 4
        t6 = xi / 2.0
        if t5 < 0:
            t5 = -t5
            t6 += HALF
        return PI / 4, 0.0, t5, _fold(t6, PI), flags

    t5 = math.atan2(abs(u[1]), abs(u[0]))
    c5, s5 = math.cos(t5), math.sin(t5)
    if c5 >= s5:
        a = float(np.angle(u[0]))
        t6 = _fold((np.angle(u[1]) - a) / 2.0, PI) if s5 > EPS else 0.0
    else:
        # |0> component of u too small for a stable global phase; use w
        # w0 = e^{ia}(s2t3 c5 - e^{2i t4} s5): at c5 ~ 0 it pins a + 2 t4
        t6_plus_a = float(np.angle(u[1]))
        if c5 < 1e-9:
            flags.add("gauge_t4_t6")
            a = float(np.angle(-w[0]))  # choose t4 = 0
            t6 = _fold((t6_plus_a - a) / 2.0, PI)
            return t3, 0.0, t5, t6, flags
        a = float(np.angle(u[0]))
        t6 = _fold((t6_plus_a - a) / 2.0, PI)

    if s5 < 1e-9:
        # t6 invisible in u; pin it from the |1> component of w, t4 = 0
        flags.add("gauge_t4_t6")
        t6 = _fold((float(np.angle(w[1])) - a) / 2.0, PI)
        return t3, 0.0, t5, t6, flags

    w0 = w[0] * np.exp(-1j * a)
    w1 = w[1] * np.exp(-1j * (a + 2 * t6))
    z0 = s2t3 * c5 - w0                 # e^{2i t4} sin t5
    z1 = w1 - s2t3 * s5                 # e^{2i t4} cos t5
    z = z0 * s5 + z1 * c5
    t4 = _fold(0.5 * float(np.angle(z)), PI)
    return t3, t4, t5, t6, flags


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True)
class Extraction:
    theta: np.ndarray
    fidelity: float
    sheet: tuple[int, int]  # (root index, t14 branch)
    flags: frozenset[str]


def _pipeline(amps: np.ndarray, w1: np.ndarray, t14_branch: int):
    """Extract one angle candidate for a fixed root and t14 branch."""
    flags: set[str] = set()
    th = np.zeros(14)

    p1 = polar_form(w1)
    th[7] = p1.phi                      # t8
    th[8] = _fold(p1.xi / 2.0, PI)      # t9

    _, _, omega2, _, weight, residual = _split_from_omega1(amps, w1)
    if residual > 1e-6:
        flags.add("split_residual")
    if abs(weight) < EPS:
        flags.add("vanishing_product_term")
        omega2 = np.array([1.0, 0.0], dtype=complex)
    p2 = polar_form(omega2)
    th[10] = p2.phi                     # t11
    th[11] = _fold(p2.xi / 2.0, PI)     # t12

    # undo the local frames on qubits 1 and 2
    v = apply_rz(amps, 3, 1, -th[8])
    v = apply_ry(v, 3, 1, -th[7])
    v = apply_rz(v, 3, 2, -th[11])
    v = apply_ry(v, 3, 2, -th[10])
    t = v.reshape(2, 2, 2)
    g1 = t[1, 0].copy()
    g2 = t[1, 1].copy()
    n1, n2 = np.linalg.norm(g1), np.linalg.norm(g2)

    # Y/Z pair on qubit 3
    if min(n1, n2) < EPS:
        flags.add("indeterminate_t14")
        th[13] = 0.0 if t14_branch == 0 else HALF
        th[12] = 0.0
    else:
        th[13] = theta14_from(polar_form(g1), polar_form(g2))
        if t14_branch:
            th[13] = _fold(th[13] + HALF, PI)
        r1 = _ry_vec(g1 / n1, -th[13])
        r2 = _ry_vec(g2 / n2, -th[13])
        if abs(abs(r1[0]) ** 2 + abs(r2[0]) ** 2 - 1.0) > 1e-7:
            flags.add("t14_misaligned")
        d1, d2 = _phase_deltas(r1, r2)
        th[12] = theta13_from(d1, d2)

    v = apply_ry(v, 3, 3, -th[13])
    v = apply_rz(v, 3, 3, -th[12])
    v = apply_cnot(v, 3, 2, 3)
    t = v.reshape(2, 2, 2)

    # t10 from the qubit-2 factor of the entangled branch
    b = t[1]
    bu, bs, bvh = np.linalg.svd(b)
    if bs[0] > EPS and bs[1] > 1e-6 * bs[0]:
        flags.add("branch_not_product")
    omega4 = bu[:, 0]
    if min(abs(omega4[0]), abs(omega4[1])) < EPS:
        th[9] = 0.0
        if np.linalg.norm(b) < EPS:
            flags.add("vanishing_entangled_term")
    else:
        th[9] = _fold((float(np.angle(omega4[1]) - np.angle(omega4[0]))) / 2.0, PI)
    v = apply_rz(v, 3, 2, -th[9])
    t = v.reshape(2, 2, 2)

    # branch pair on qubit 3
    c00 = t[0, 0]
    n00 = np.linalg.norm(c00)
    nb = np.linalg.norm(t[1])
    chi2 = bvh[0, :]
    if n00 < EPS:
        # no product branch: t3 = 0 convention, invert chi2 against |1>
        flags.add("vanishing_product_term")
        phi, xi, _ = _polar_angles(chi2)
        th[2] = 0.0
        th[4] = HALF - phi
        th[5] = _fold((xi - PI) / 2.0, PI)
        th[3] = 0.0
    elif nb < EPS:
        # pure product state: chi2 unconstrained, align with chi1
        flags.add("vanishing_entangled_term")
        phi, xi, _ = _polar_angles(c00 / n00)
        th[2] = 0.0
        th[4] = phi
        th[5] = _fold(xi / 2.0, PI)
        th[3] = 0.0
    else:
        t3, t4, t5, t6, fl = _invert_q3(c00 / n00, chi2)
        flags |= fl
        th[2], th[3], th[4], th[5] = t3, t4, t5, t6

    v = apply_rz(v, 3, 3, -th[5])
    v = apply_ry(v, 3, 3, -th[4])
    v = apply_rz(v, 3, 3, -th[3])
    v = apply_cnot(v, 3, 1, 3)
    t = v.reshape(2, 2, 2)

    # project qubit 3 onto its (real) factor
    vq3 = np.array([math.cos(th[2]), math.sin(th[2])])
    m = np.einsum("jkm,m->jk", t, vq3)
    if np.linalg.norm(t - np.multiply.outer(m, vq3)) > 1e-6:
        flags.add("q3_factor_residual")
    m00, m10, m11 = m[0, 0], m[1, 0], m[1, 1]
    if abs(m[0, 1]) > 1e-6:
        flags.add("q2_leakage")

    a1 = abs(m10)
    a2 = abs(m11)
    if max(a1, a2) < EPS:
        th[6] = 0.0
        th[1] = 0.0
        th[0] = 0.0 if abs(m00) > EPS else HALF
    else:
        ref = m10 if a1 >= a2 else m11
        if abs(m00) < EPS:
            th[6] = 0.0
            th[0] = HALF
        else:
            th[6] = _fold((float(np.angle(ref) - np.angle(m00))) / 2.0, PI)
            th[0] = math.atan2(math.hypot(a1, a2), abs(m00))
        th[1] = 0.5 * math.atan2(a1, a2)
    return th, flags


def _polish_theta(theta: np.ndarray, target: np.ndarray, iters: int = 3) -> np.ndarray:
    """Gauss-Newton refinement of an angle vector against the exact state.

    Closed-form extraction can lose accuracy near degenerate configurations
    (phases of nearly vanishing components are ill-conditioned); a few
    least-squares steps on the phase-aligned residual with exact tangent
    vectors restore it. The step stays within the selected sheet.
    """
    from .fsmetric import tangent_states

    th = np.asarray(theta, dtype=float).copy()
    for _ in range(iters):
        psi = apply_template(THREE_QUBIT, th)
        ov = np.vdot(target, psi)
        ph = ov / abs(ov) if abs(ov) > EPS else 1.0
        r = psi - ph * target
        if np.linalg.norm(r) < 1e-14:
            break
        jac = tangent_states(THREE_QUBIT, th)
        j = np.concatenate([jac.real, jac.imag], axis=1).T  # (16, 14)
        rhs = np.concatenate([r.real, r.imag])
        step, *_ = np.linalg.lstsq(j, -rhs, rcond=None)
        nstep = np.linalg.norm(step)
        if nstep > 1e-3:
            step *= 1e-3 / nstep
        th += step
    # restore fundamental ranges: mod-pi folds are exact state symmetries for
    # the phase-type angles, the rest only ever needs a round-off clip
    for k in (3, 5, 6, 8, 9, 11, 13):
        th[k] = _fold(th[k], PI)
    th[12] = float(np.clip(th[12], -PI / 4, PI / 4))
    for k, himax in ((0, HALF), (1, PI / 4), (2, PI / 4), (4, HALF), (7, HALF), (10, HALF)):
        th[k] = float(np.clip(th[k], 0.0, himax))
    return th


def sheet_partner(theta: np.ndarray) -> np.ndarray:
    """The coordinate-symmetry partner producing the same state."""
    t = np.asarray(theta, dtype=float).copy()
    t[3] = _fold(t[3] - HALF, PI)
    t[4] = HALF - t[4]
    t[5] = _fold(HALF - t[5], PI)
    t[9] = _fold(t[9] + HALF, PI)
    t[12] = -t[12]
    t[13] = _fold(t[13] - HALF, PI)
    return t


def extract_all_sheets(psi: StateVector, *, polish: bool = True) -> list[Extraction]:
    """All extraction candidates (root x t14 branch), in canonical root order."""
    amps = np.asarray(psi.amps, dtype=complex)
    roots = canonical_roots(psi)
    out = []
    for ri, w1 in enumerate(roots):
        for br in (0, 1):
            theta, flags = _pipeline(amps, w1, br)
            if polish:
                theta = _polish_theta(theta, amps)
            fid = float(abs(np.vdot(build_state_3q(theta).amps, amps)))
            out.append(
                Extraction(
                    theta=theta,
                    fidelity=fid,
                    sheet=(ri, br),
                    flags=frozenset(flags),
                )
            )
    return out


def _select_canonical(cands: list[Extraction]) -> Extraction:
    valid = [c for c in cands if c.fidelity >= FID_ACCEPT]
    if not valid:
        best = max(cands, key=lambda c: c.fidelity)
        return Extraction(
            theta=best.theta,
            fidelity=best.fidelity,
            sheet=best.sheet,
            flags=best.flags | {"no_exact_sheet"},
        )
    root = valid[0].sheet[0]
    group = [c for c in valid if c.sheet[0] == root]
    if len(group) == 1:
        return group[0]
    t13s = [c.theta[12] for c in group]
    if max(abs(x) for x in t13s) < 1e-7:
        # t13 ~ 0 tie: prefer the sheet whose t14 is nearest 0 mod pi, so the
        # selection stays continuous across the t13 = 0 locus
        group.sort(key=lambda c: (min(c.theta[13], PI - c.theta[13]), c.sheet[1]))
        return group[0]
    group.sort(key=lambda c: (0 if c.theta[12] >= 0 else 1, c.sheet[1]))
    return group[0]


def extract_angles_full(psi: StateVector) -> Extraction:
    """Deterministic extraction with canonical sheet selection."""
    return _select_canonical(extract_all_sheets(psi))


def extract_angles(psi: StateVector) -> np.ndarray:
    """Angles whose circuit rebuilds ``psi`` (canonical sheet)."""
    return extract_angles_full(psi).theta


# ---------------------------------------------------------------------------
# batched extraction
#
# Vectorized mirror of the scalar pipeline for large ensembles. Degenerate
# configurations are handled with guard epsilons and a scalar fallback on any
# state whose best sheet misses the fidelity threshold; this keeps the batch
# path simple while the scalar path stays authoritative.


def _angles_of(z: np.ndarray) -> np.ndarray:
    return np.angle(z)


def _batch_roots(amps: np.ndarray):
    """Both canonical-split qubit-1 roots per state, ordered small polar first.

    Returns (N, 2, 2): root index on axis 1, component on axis 2.
    """
    t = amps.reshape(-1, 2, 2, 2)
    t0, t1 = t[:, 0], t[:, 1]
    det = lambda m: m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    d0, d1 = det(t0), det(t1)
    c = (
        t0[:, 0, 0] * t1[:, 1, 1]
        + t1[:, 0, 0] * t0[:, 1, 1]
        - t0[:, 0, 1] * t1[:, 1, 0]
        - t1[:, 0, 1] * t0[:, 1, 0]
    )
    disc = np.sqrt(c * c - 4.0 * d0 * d1)
    plus, minus = c + disc, c - disc
    q = np.where(np.abs(plus) >= np.abs(minus), -0.5 * plus, -0.5 * minus)
    big = 1e300
    safe_d1 = np.where(np.abs(d1) > 0, d1, 1.0)
    safe_q = np.where(np.abs(q) > 0, q, 1.0)
    mu_a = np.where(np.abs(d1) > 0, q / safe_d1, big)      # |mu| large -> (0, 1)
    mu_b = np.where(np.abs(q) > 0, d0 / safe_q, 0.0)
    mu_a, mu_b = (
        np.where(np.abs(mu_a) <= np.abs(mu_b), mu_a, mu_b),
        np.where(np.abs(mu_a) <= np.abs(mu_b), mu_b, mu_a),
    )
    out = np.empty((amps.shape[0], 2, 2), dtype=complex)
    for i, mu in enumerate((mu_a, mu_b)):
        mu = np.where(np.abs(mu) > 1e150, 1e150 + 0j, mu)
        a = 1.0 / np.sqrt(1.0 + np.abs(mu) ** 2)
        out[:, i, 0] = a
        out[:, i, 1] = np.conj(mu) * a
    return out


def _batch_polar(v: np.ndarray):
    """phi, xi for (N, 2) qubit vectors (xi = 0 where a component vanishes)."""
    m0, m1 = np.abs(v[:, 0]), np.abs(v[:, 1])
    phi = np.arctan2(m1, m0)
    xi = np.where(
        (m0 > EPS) & (m1 > EPS),
        (_angles_of(v[:, 1]) - _angles_of(v[:, 0])) % (2 * PI),
        0.0,
    )
    return phi, xi


def _batch_svd_factors(m: np.ndarray):
    """Left/right unit factors and singular values of (N, 2, 2) stacks."""
    u, s, vh = np.linalg.svd(m)
    return u[:, :, 0], vh[:, 0, :], s


def _ry_cols(v: np.ndarray, theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c * v[:, 0] - s * v[:, 1], s * v[:, 0] + c * v[:, 1]], axis=1)


def _batch_pipeline(amps: np.ndarray, w1: np.ndarray, t14_branch: int) -> np.ndarray:
    """Vectorized angle extraction for one (root, branch) combination."""
    n = amps.shape[0]
    th = np.zeros((n, 14))

    phi1, xi1 = _batch_polar(w1)
    th[:, 7] = phi1
    th[:, 8] = (xi1 / 2.0) % PI

    t = amps.reshape(n, 2, 2, 2)
    a_slice = (
        np.conj(w1[:, 0])[:, None, None] * t[:, 0]
        + np.conj(w1[:, 1])[:, None, None] * t[:, 1]
    )
    omega2, _, s_a = _batch_svd_factors(a_slice)
    degenerate_prod = s_a[:, 0] < EPS
    omega2 = np.where(degenerate_prod[:, None], [[1.0, 0.0]], omega2)
    phi2, xi2 = _batch_polar(omega2)
    th[:, 10] = phi2
    th[:, 11] = (xi2 / 2.0) % PI

    v = apply_rz(amps, 3, 1, -th[:, 8])
    v = apply_ry(v, 3, 1, -th[:, 7])
    v = apply_rz(v, 3, 2, -th[:, 11])
    v = apply_ry(v, 3, 2, -th[:, 10])
    t = v.reshape(n, 2, 2, 2)
    g1, g2 = t[:, 1, 0], t[:, 1, 1]
    n1 = np.linalg.norm(g1, axis=1)
    n2 = np.linalg.norm(g2, axis=1)
    ok = (n1 > EPS) & (n2 > EPS)
    g1n = g1 / np.where(n1 > EPS, n1, 1.0)[:, None]
    g2n = g2 / np.where(n2 > EPS, n2, 1.0)[:, None]

    p1, q1 = _batch_polar(g1n)
    p2, q2 = _batch_polar(g2n)
    num = np.cos(2 * p1) + np.cos(2 * p2)
    den = np.sin(2 * p1) * np.cos(q1) + np.sin(2 * p2) * np.cos(q2)
    t14 = np.where(
        (np.abs(num) > EPS) | (np.abs(den) > EPS),
        (0.5 * np.arctan2(-num, den)) % PI,
        0.0,
    )
    if t14_branch:
        t14 = (t14 + HALF) % PI
    th[:, 13] = np.where(ok, t14, HALF * t14_branch)
    r1 = _ry_cols(g1n, -th[:, 13])
    r2 = _ry_cols(g2n, -th[:, 13])
    dsum = (
        _angles_of(r1[:, 0]) - _angles_of(r1[:, 1])
        + _angles_of(r2[:, 0]) - _angles_of(r2[:, 1])
    )
    th[:, 12] = np.where(ok, (-dsum / 4.0 + PI / 4) % HALF - PI / 4, 0.0)

    v = apply_ry(v, 3, 3, -th[:, 13])
    v = apply_rz(v, 3, 3, -th[:, 12])
    v = apply_cnot(v, 3, 2, 3)
    t = v.reshape(n, 2, 2, 2)

    omega4, chi2, _ = _batch_svd_factors(t[:, 1])
    o4_ok = (np.abs(omega4[:, 0]) > EPS) & (np.abs(omega4[:, 1]) > EPS)
    th[:, 9] = np.where(
        o4_ok,
        ((_angles_of(omega4[:, 1]) - _angles_of(omega4[:, 0])) / 2.0) % PI,
        0.0,
    )
    v = apply_rz(v, 3, 2, -th[:, 9])
    t = v.reshape(n, 2, 2, 2)

    c00 = t[:, 0, 0]
    n00 = np.linalg.norm(c00, axis=1)
    chi1 = c00 / np.where(n00 > EPS, n00, 1.0)[:, None]
    t3, t4, t5, t6 = _batch_invert_q3(chi1, chi2)
    # states with no product branch: t3 = 0, align chi2 with |1>
    no_prod = n00 <= EPS
    if np.any(no_prod):
        pphi, pxi = _batch_polar(chi2)
        t3 = np.where(no_prod, 0.0, t3)
        t4 = np.where(no_prod, 0.0, t4)
        t5 = np.where(no_prod, HALF - pphi, t5)
        t6 = np.where(no_prod, ((pxi - PI) / 2.0) % PI, t6)
    th[:, 2], th[:, 3], th[:, 4], th[:, 5] = t3, t4, t5, t6

    v = apply_rz(v, 3, 3, -th[:, 5])
    v = apply_ry(v, 3, 3, -th[:, 4])
    v = apply_rz(v, 3, 3, -th[:, 3])
    v = apply_cnot(v, 3, 1, 3)
    t = v.reshape(n, 2, 2, 2)

    vq3 = np.stack([np.cos(th[:, 2]), np.sin(th[:, 2])], axis=1)
    m = np.einsum("njkm,nm->njk", t, vq3.astype(complex))
    m00, m10, m11 = m[:, 0, 0], m[:, 1, 0], m[:, 1, 1]
    a1, a2 = np.abs(m10), np.abs(m11)
    ref = np.where(a1 >= a2, m10, m11)
    have_ent = np.maximum(a1, a2) > EPS
    have_prod = np.abs(m00) > EPS
    th[:, 6] = np.where(
        have_ent & have_prod,
        ((_angles_of(ref) - _angles_of(m00)) / 2.0) % PI,
        0.0,
    )
    th[:, 0] = np.where(
        have_ent,
        np.where(have_prod, np.arctan2(np.hypot(a1, a2), np.abs(m00)), HALF),
        np.where(have_prod, 0.0, 0.0),
    )
    th[:, 1] = np.where(have_ent, 0.5 * np.arctan2(a1, a2), 0.0)
    return th


def _batch_invert_q3(chi1: np.ndarray, chi2: np.ndarray):
    """Vectorized Euler inversion of the branch pair; generic path only."""
    ov = np.einsum("ni,ni->n", np.conj(chi1), chi2)
    s2t3 = np.minimum(np.abs(ov), 1.0)
    t3 = 0.5 * np.arcsin(s2t3)
    ortho = s2t3 < EPS

    ph = np.where(np.abs(ov) > EPS, ov / np.where(np.abs(ov) > 0, np.abs(ov), 1.0), 1.0)
    chi2a = chi2 * np.conj(ph)[:, None]
    c3, s3 = np.cos(t3)[:, None], np.sin(t3)[:, None]
    u = c3 * chi1 - s3 * chi2a
    w = s3 * chi1 + c3 * chi2a
    c2t3 = np.cos(2 * t3)
    parallel = c2t3 < 1e-9

    t5 = np.arctan2(np.abs(u[:, 1]), np.abs(u[:, 0]))
    c5, s5 = np.cos(t5), np.sin(t5)
    gauge = (c5 < 1e-9) | (s5 < 1e-9)

    a = np.where(c5 >= 1e-9, _angles_of(u[:, 0]), _angles_of(-w[:, 0]))
    t6 = np.where(
        s5 > EPS,
        ((_angles_of(u[:, 1]) - a) / 2.0) % PI,
        ((_angles_of(w[:, 1]) - a) / 2.0) % PI,
    )
    w0 = w[:, 0] * np.exp(-1j * a)
    w1 = w[:, 1] * np.exp(-1j * (a + 2 * t6))
    z0 = s2t3 * c5 - w0
    z1 = w1 - s2t3 * s5
    z = z0 * s5 + z1 * c5
    t4 = np.where(gauge, 0.0, (0.5 * _angles_of(z)) % PI)

    # orthogonal pair: alpha = chi1 up to phase, t4 = 0
    pphi, pxi = _batch_polar(chi1)
    t3 = np.where(ortho, 0.0, t3)
    t4 = np.where(ortho, 0.0, t4)
    t5 = np.where(ortho, pphi, t5)
    t6 = np.where(ortho, (pxi / 2.0) % PI, t6)

    # parallel pair: one-parameter gauge, t4 = 0, shift polar by pi/4
    if np.any(parallel):
        pp5 = pphi - PI / 4
        pp6 = pxi / 2.0 + np.where(pp5 < 0, HALF, 0.0)
        t3 = np.where(parallel, PI / 4, t3)
        t4 = np.where(parallel, 0.0, t4)
        t5 = np.where(parallel, np.abs(pp5), t5)
        t6 = np.where(parallel, pp6 % PI, t6)
    return t3, t4, t5, t6


def extract_angles_batch(
    amps: np.ndarray,
    *,
    sheet_rng: np.random.Generator | None = None,
    fallback: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Extract angles for an (N, 8) batch; returns (thetas (N, 14), fidelities).

    With ``sheet_rng`` the sheet is drawn uniformly among the valid candidates
    of each state, which makes angles of Haar-distributed inputs follow the
    joint density over the full fundamental ranges (a fixed selection rule
    would restrict them to one fundamental domain of the sheet symmetry).
    Without it the canonical deterministic sheet is returned.
    """
    from .circuits import build_states_3q_batch

    amps = np.asarray(amps, dtype=complex)
    n = amps.shape[0]
    roots = _batch_roots(amps)
    cand_theta = np.empty((n, 4, 14))
    cand_fid = np.empty((n, 4))
    for ri in range(2):
        for br in range(2):
            th = _batch_pipeline(amps, roots[:, ri], br)
            rebuilt = build_states_3q_batch(th)
            fid = np.abs(np.einsum("ni,ni->n", np.conj(rebuilt), amps))
            cand_theta[:, 2 * ri + br] = th
            cand_fid[:, 2 * ri + br] = fid

    valid = cand_fid >= FID_ACCEPT
    any_valid = valid.any(axis=1)
    if sheet_rng is not None:
        # uniform pick among valid sheets
        counts = valid.sum(axis=1)
        ks = (sheet_rng.random(n) * np.maximum(counts, 1)).astype(int)
        order = np.argsort(~valid, axis=1, kind="stable")  # valid sheets first
        pick = order[np.arange(n), ks]
    else:
        pick = np.empty(n, dtype=int)
        for i in range(n):
            if not any_valid[i]:
                pick[i] = int(np.argmax(cand_fid[i]))
                continue
            cands = [
                Extraction(cand_theta[i, j], cand_fid[i, j], (j // 2, j % 2), frozenset())
                for j in range(4)
            ]
            sel = _select_canonical(cands)
            pick[i] = 2 * sel.sheet[0] + sel.sheet[1]
    pick = np.where(any_valid, pick, np.argmax(cand_fid, axis=1))
    thetas = cand_theta[np.arange(n), pick]
    fids = cand_fid[np.arange(n), pick]

    if fallback and np.any(~any_valid):
        for i in np.nonzero(~any_valid)[0]:
            ext = extract_angles_full(StateVector(3, amps[i]))
            thetas[i] = ext.theta
            fids[i] = ext.fidelity
    return thetas, fids
