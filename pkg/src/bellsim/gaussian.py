"""Covariance-matrix engine for centered Gaussian states.

Quadratures are ordered xi = (q_1..q_n, p_1..p_n). A state is stored as
the matrix G of its Wigner exponent, W ~ exp(-xi^T G xi); the variance
matrix is V = G^{-1}/2, the vacuum has V = I/2, and the uncertainty
principle reads G^{-1} + i beta >= 0 with beta the symplectic form. All
detection rates come from one fact: the probability of finding vacuum in a
mode subset is 1/sqrt(det(V_s + I/2)) for the reduced variance block V_s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import detection
from ._concurrency import map_ordered
from .fock import vacuum_state
from .linear_optics import (
    apply_passive,
    apply_single_mode_squeeze,
    beam_wiring,
    check_unitary,
    entangling_unitary,
    polarizer_rotation,
)
from .policy import DEFAULT_POLICY


def symplectic_form(mode_count):
    """The matrix beta with [q, p] blocks: [[0, I], [-I, 0]]."""
    eye = np.eye(mode_count)
    zero = np.zeros((mode_count, mode_count))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class GaussianState:
    """Centered Gaussian state, stored through its Wigner exponent matrix."""

    g: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise ValueError(f"G must be 2n x 2n, got shape {g.shape}")
        asym = np.max(np.abs(g - g.T))
        if asym > 1e-10:
            raise ValueError(f"G is not symmetric (residual {asym:.3e})")
        g = 0.5 * (g + g.T)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise ValueError("G is not positive definite") from None
        n = g.shape[0] // 2
        uncertainty = np.linalg.inv(g) + 1j * symplectic_form(n)
        low = float(np.linalg.eigvalsh(uncertainty)[0])
        if low < -1e-9:
            raise ValueError(
                f"G violates the uncertainty principle (eigenvalue {low:.3e})"
            )
        object.__setattr__(self, "g", g)

    @property
    def mode_count(self):
        return self.g.shape[0] // 2


def variance_matrix(state):
    """Quadrature covariance V = G^{-1}/2; the vacuum gives I/2."""
    return np.linalg.inv(state.g) / 2.0


def is_squeezed(state, policy=DEFAULT_POLICY):
    """Whether any quadrature direction beats the vacuum variance.

    Returns (squeezed, min_eigenvalue): squeezed when the smallest
    eigenvalue of V sits below 1/2 by more than the policy margin.
    """
    low = float(np.linalg.eigvalsh(variance_matrix(state))[0])
    return low < 0.5 - policy.squeezed_eig_margin, low


@dataclass(frozen=True)
class SqueezedThermalSpec:
    """Two-parameter squeezed thermal family on four modes.

    Modes 0 and 3 are squeezed by equal and opposite amounts u, modes 1
    and 2 by equal and opposite amounts v, the pairs are mixed by the
    entangling unitary, and kappa in (0, 1] sets the thermal occupation
    (kappa = 1 is the pure squeezed vacuum).
    """

    u: float
    v: float
    kappa: float

    def __post_init__(self):
        for name in ("u", "v", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 < self.kappa <= 1.0:
            raise ValueError(f"kappa must be in (0, 1], got {self.kappa}")
        if max(abs(self.u), abs(self.v)) > 5.0:
            raise ValueError("|u| and |v| must not exceed 5")


def _squeeze_q_exponents(u, v):
    # q-quadrature log-scalings of the four modes in the S matrix
    return np.array([-u, v, -v, u])


def build_squeezed_thermal(spec):
    """The G matrix of the squeezed thermal family.

    The core sandwich is G = U^T S^T (kappa I) S U with S the diagonal
    squeeze scalings and U the embedded entangling mixer; the result is
    then relabeled by the beam wiring so that the u-squeezed pair feeds
    beam one and the v-squeezed pair feeds beam two.
    """
    qe = _squeeze_q_exponents(spec.u, spec.v)
    s_diag = np.exp(np.concatenate([qe, -qe]))
    u8 = embed_passive(entangling_unitary())
    g = spec.kappa * u8.T @ np.diag(s_diag**2) @ u8
    w8 = embed_passive(beam_wiring())
    return GaussianState(w8 @ g @ w8.T)


def embed_passive(matrix, policy=DEFAULT_POLICY):
    """Symplectic-orthogonal embedding of a passive n x n unitary.

    [[Re U, -Im U], [Im U, Re U]] in (q..., p...) ordering; this is the
    quadrature action of the transformation z -> U z.
    """
    matrix = check_unitary(matrix, policy)
    re, im = matrix.real, matrix.imag
    return np.block([[re, -im], [im, re]])


def apply_symplectic(state, matrix, policy=DEFAULT_POLICY):
    """Transform the state along xi -> M xi, so V -> M V M^T."""
    m = np.asarray(matrix, dtype=np.float64)
    n = state.mode_count
    if m.shape != (2 * n, 2 * n):
        raise ValueError(f"expected a {2 * n} x {2 * n} matrix, got {m.shape}")
    beta = symplectic_form(n)
    residual = np.max(np.abs(m @ beta @ m.T - beta))
    if residual > policy.unitarity_tol:
        raise ValueError(f"matrix is not symplectic (residual {residual:.3e})")
    m_inv = -beta @ m.T @ beta  # symplectic inverse, exact up to rounding
    g = m_inv.T @ state.g @ m_inv
    return GaussianState(0.5 * (g + g.T))


def _vacuum_prob_from_variance(v, modes, mode_count):
    rows = list(modes) + [m + mode_count for m in modes]
    block = v[np.ix_(rows, rows)]
    det = float(np.linalg.det(block + 0.5 * np.eye(len(rows))))
    if det <= 0.0:
        raise ValueError(f"vacuum-overlap determinant is {det}; state is invalid")
    return 1.0 / math.sqrt(det)


def vacuum_probability(state, modes):
    """Probability of finding vacuum in every listed mode."""
    return _vacuum_prob_from_variance(variance_matrix(state), modes, state.mode_count)


def _rotation(theta1, theta2):
    rot = np.eye(4, dtype=np.complex128)
    if theta1 is not None:
        rot = polarizer_rotation(theta1, detection.BEAM_ONE, 4) @ rot
    if theta2 is not None:
        rot = polarizer_rotation(theta2, detection.BEAM_TWO, 4) @ rot
    return rot


def _probability_from_variance(v, theta1, theta2):
    m = embed_passive(_rotation(theta1, theta2))
    rotated = m @ v @ m.T
    s1 = (0,) if theta1 is not None else detection.BEAM_ONE
    s2 = (2,) if theta2 is not None else detection.BEAM_TWO
    q1 = _vacuum_prob_from_variance(rotated, s1, 4)
    q2 = _vacuum_prob_from_variance(rotated, s2, 4)
    q12 = _vacuum_prob_from_variance(rotated, s1 + s2, 4)
    return 1.0 - q1 - q2 + q12


def coincidence_probability(state, theta1, theta2):
    """Joint rate P(theta1, theta2); None removes that polarizer."""
    if state.mode_count != 4:
        raise ValueError("coincidence rates are defined on four-mode states")
    return _probability_from_variance(variance_matrix(state), theta1, theta2)


def gaussian_ch(state, angles, policy=DEFAULT_POLICY):
    """CH report for a four-mode Gaussian state."""
    if state.mode_count != 4:
        raise ValueError("the CH functional needs a four-mode state")
    v = variance_matrix(state)
    return detection.assemble_report(
        lambda t1, t2: _probability_from_variance(v, t1, t2), angles, 0.0, policy
    )


def scan_tables(state, thetas):
    """Rate tables over an angle grid, for the shared scan core."""
    v = variance_matrix(state)
    n = len(thetas)
    p_tt = np.empty((n, n))
    p_t_any = np.empty(n)
    p_any_t = np.empty(n)
    for i, t1 in enumerate(thetas):
        p_t_any[i] = _probability_from_variance(v, t1, None)
        p_any_t[i] = _probability_from_variance(v, None, t1)
        for j, t2 in enumerate(thetas):
            p_tt[i, j] = _probability_from_variance(v, t1, t2)
    p_any_any = _probability_from_variance(v, None, None)
    return p_tt, p_t_any, p_any_t, p_any_any


def fock_equivalent_state(spec, cutoff, policy=DEFAULT_POLICY):
    """Fock-engine replica of a pure squeezed thermal state.

    Only kappa = 1 has a pure-state replica: squeeze each mode of the
    vacuum by the S scalings, then apply the entangling mixer. The
    returned state carries the truncation tail of the squeezes.
    """
    if spec.kappa != 1.0:
        raise ValueError("only pure (kappa = 1) states have a Fock replica")
    state = vacuum_state(4, cutoff, policy)
    for mode, w in enumerate(_squeeze_q_exponents(spec.u, spec.v)):
        if w != 0.0:
            state = apply_single_mode_squeeze(state, mode, float(w), policy)
    return apply_passive(state, beam_wiring() @ entangling_unitary().T, policy)


SWEEP_SCENARIOS = ("equal", "zero", "opposite")


def scenario_v(scenario, u):
    if scenario == "equal":
        return u
    if scenario == "zero":
        return 0.0
    if scenario == "opposite":
        return -u
    raise ValueError(f"unknown sweep scenario {scenario!r}")


def sweep_rows(u_values, scenarios, kappas, angles, policy=DEFAULT_POLICY):
    """Evaluate the CH functional over a (kappa, scenario, u) grid.

    Returns one dict per point, in deterministic (kappa, scenario, u)
    order, with the CSV fields u, v, kappa, f, neg_p_both, violated.
    """
    points = [
        (kappa, scenario, u)
        for kappa in kappas
        for scenario in scenarios
        for u in u_values
    ]

    def run(point):
        kappa, scenario, u = point
        v = scenario_v(scenario, u)
        state = build_squeezed_thermal(SqueezedThermalSpec(u=u, v=v, kappa=kappa))
        report = gaussian_ch(state, angles, policy)
        neg_p_both = -report.p_any_any
        # the flag is the raw bound test on the emitted values, so a CSV
        # row is self-consistent: violated = 0 exactly when
        # neg_p_both <= f <= 0 holds for the numbers in the row
        return {
            "u": u,
            "v": v,
            "kappa": kappa,
            "f": report.f,
            "neg_p_both": neg_p_both,
            "violated": 0 if neg_p_both <= report.f <= 0.0 else 1,
        }

    return map_ordered(run, points)
