"""Detection probabilities, coincidence rates and the CH functional.

A detector answers one question per beam: did at least one photon arrive.
The operator behind that answer is identity minus the vacuum projector, so
every rate in this module reduces to vacuum-probability marginals computed
straight from amplitudes or diagonals; no detection operator is ever built
as a matrix.

Beam one holds modes (0, 1), beam two modes (2, 3). A polarizer angle of
``None`` means the polarizer is removed and the whole beam is watched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .fock import DensityOperator, OccupationState, partial_trace
from .linear_optics import apply_passive, polarizer_rotation
from .policy import DEFAULT_POLICY

BEAM_ONE = (0, 1)
BEAM_TWO = (2, 3)

VIOLATED = "violated"
NOT_VIOLATED = "not violated"
INCONCLUSIVE = "inconclusive"


def canonical_angle(theta):
    """Fold an angle into [0, pi); the physics is pi-periodic."""
    return float(theta) % math.pi


@dataclass(frozen=True)
class AngleSettings:
    """The four polarizer angles of a CH run, canonicalized to [0, pi)."""

    theta1: float
    theta2: float
    theta1_alt: float
    theta2_alt: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta1_alt", "theta2_alt"):
            object.__setattr__(self, name, canonical_angle(getattr(self, name)))

    def as_tuple(self):
        return (self.theta1, self.theta2, self.theta1_alt, self.theta2_alt)


@dataclass(frozen=True)
class FourRates:
    """Joint detection rates with both, one, or no polarizers in place."""

    p_tt: float
    p_t_any: float
    p_any_t: float
    p_any_any: float


@dataclass(frozen=True)
class CoincidenceReport:
    """Every rate entering the CH functional, plus the verdict.

    ``lower_margin`` is f + P(any, any) and ``upper_margin`` is -f; both are
    nonnegative when the inequality holds. ``tail_err`` is the accumulated
    truncation error bar inherited from the state.
    """

    angles: AngleSettings
    p_tt: float
    p_t_any: float
    p_any_t: float
    p_any_any: float
    p_t_talt: float
    p_talt_t: float
    p_talt_talt: float
    p_talt_any: float
    f: float
    lower_margin: float
    upper_margin: float
    tail_err: float
    verdict: str


def vacuum_probability(state, modes):
    """Probability that every listed mode carries zero photons."""
    mask = state.basis.vacuum_mask(modes)
    if isinstance(state, OccupationState):
        return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))
    return float(np.real(np.sum(np.diag(state.matrix)[mask])))


def prob_at_least_one(state, modes):
    """Probability of finding one or more photons among the listed modes."""
    return 1.0 - vacuum_probability(state, modes)


def polarizer_apply(state, theta, policy=DEFAULT_POLICY):
    """Send a two-mode state through a polarizer at angle theta.

    Rotates the pair so the transmitted polarization is the first mode,
    then traces out the blocked orthogonal mode. Returns the single-mode
    reduced density operator.
    """
    if state.mode_count != 2:
        raise ValueError("polarizer_apply expects a two-mode state")
    rotated = apply_passive(state, polarizer_rotation(theta, (0, 1), 2), policy)
    return partial_trace(rotated, keep=(0,), policy=policy)


def _rotated(state, theta1, theta2, policy):
    out = state
    if theta1 is not None:
        out = apply_passive(out, polarizer_rotation(theta1, BEAM_ONE, 4), policy)
    if theta2 is not None:
        out = apply_passive(out, polarizer_rotation(theta2, BEAM_TWO, 4), policy)
    return out


def coincidence_probability(state, theta1, theta2, policy=DEFAULT_POLICY):
    """Joint rate P(theta1, theta2) on a four-mode state.

    Either angle may be None, meaning that polarizer is removed and the
    detector watches the full beam. Computed by inclusion-exclusion over
    vacuum marginals of the rotated state.
    """
    if state.mode_count != 4:
        raise ValueError("coincidence rates are defined on four-mode states")
    rotated = _rotated(state, theta1, theta2, policy)
    s1 = (0,) if theta1 is not None else BEAM_ONE
    s2 = (2,) if theta2 is not None else BEAM_TWO
    q1 = vacuum_probability(rotated, s1)
    q2 = vacuum_probability(rotated, s2)
    q12 = vacuum_probability(rotated, s1 + s2)
    return 1.0 - q1 - q2 + q12


def coincidence_rates(state, theta1, theta2, policy=DEFAULT_POLICY):
    """The four rates at one angle pair: both, first-only, second-only, none."""
    return FourRates(
        p_tt=coincidence_probability(state, theta1, theta2, policy),
        p_t_any=coincidence_probability(state, theta1, None, policy),
        p_any_t=coincidence_probability(state, None, theta2, policy),
        p_any_any=coincidence_probability(state, None, None, policy),
    )


def assemble_report(prob, angles, tail_err=0.0, policy=DEFAULT_POLICY):
    """Build a CoincidenceReport from a joint-rate callable.

    ``prob(theta1, theta2)`` must accept None for a removed polarizer. This
    is the single place where the CH functional, its margins and the
    verdict are put together, shared by every engine.
    """
    if not isinstance(angles, AngleSettings):
        angles = AngleSettings(*angles)
    t1, t2, t1a, t2a = angles.as_tuple()

    p_tt = prob(t1, t2)
    p_t_talt = prob(t1, t2a)
    p_talt_t = prob(t1a, t2)
    p_talt_talt = prob(t1a, t2a)
    p_talt_any = prob(t1a, None)
    p_any_t = prob(None, t2)
    p_t_any = prob(t1, None)
    p_any_any = prob(None, None)

    tol = policy.verdict_tol + tail_err
    for value in (p_tt, p_t_talt, p_talt_t, p_talt_talt,
                  p_talt_any, p_any_t, p_t_any, p_any_any):
        if value < -tol or value > 1.0 + tol:
            raise ValueError(f"rate {value} outside [0, 1] beyond the error bar")

    f = p_tt - p_t_talt + p_talt_t + p_talt_talt - p_talt_any - p_any_t
    lower_margin = f + p_any_any
    upper_margin = -f
    # A violation is only claimed when a bound is broken by more than the
    # numerical error bar; a bound broken within the error bar is
    # inconclusive, and saturated bounds count as holding.
    if upper_margin < -tol or lower_margin < -tol:
        verdict = VIOLATED
    elif upper_margin < 0.0 or lower_margin < 0.0:
        verdict = INCONCLUSIVE
    else:
        verdict = NOT_VIOLATED

    return CoincidenceReport(
        angles=angles,
        p_tt=p_tt,
        p_t_any=p_t_any,
        p_any_t=p_any_t,
        p_any_any=p_any_any,
        p_t_talt=p_t_talt,
        p_talt_t=p_talt_t,
        p_talt_talt=p_talt_talt,
        p_talt_any=p_talt_any,
        f=f,
        lower_margin=lower_margin,
        upper_margin=upper_margin,
        tail_err=tail_err,
        verdict=verdict,
    )


def ch_functional(state, angles, policy=DEFAULT_POLICY):
    """Evaluate the CH functional on a Fock-engine state."""
    return assemble_report(
        lambda t1, t2: coincidence_probability(state, t1, t2, policy),
        angles,
        tail_err=state.truncation_tail,
        policy=policy,
    )


@dataclass(frozen=True)
class ScanResult:
    """Best angle settings found by a scan, with the f value reached."""

    angles: AngleSettings
    f: float
    grid_f: float
    grid_density: int
    refined: bool


def _fock_scan_tables(state, thetas, policy):
    """Rate tables over an angle grid for a Fock-engine state.

    Returns (p_tt[i, j], p_t_any[i], p_any_t[j], p_any_any). Only vacuum
    marginals of rotated states are needed, so the cost is a pair of
    rotations per grid point.
    """
    n = len(thetas)
    rotated_one = [
        apply_passive(state, polarizer_rotation(t, BEAM_ONE, 4), policy)
        for t in thetas
    ]
    rotated_two = [
        apply_passive(state, polarizer_rotation(t, BEAM_TWO, 4), policy)
        for t in thetas
    ]
    q12 = vacuum_probability(state, BEAM_ONE)
    q34 = vacuum_probability(state, BEAM_TWO)
    q_all = vacuum_probability(state, BEAM_ONE + BEAM_TWO)

    q1 = np.array([vacuum_probability(s, (0,)) for s in rotated_one])
    q134 = np.array([vacuum_probability(s, (0, 2, 3)) for s in rotated_one])
    q3 = np.array([vacuum_probability(s, (2,)) for s in rotated_two])
    q123 = np.array([vacuum_probability(s, (0, 1, 2)) for s in rotated_two])

    q13 = np.empty((n, n))
    for i, s in enumerate(rotated_one):
        for j, t in enumerate(thetas):
            both = apply_passive(s, polarizer_rotation(t, BEAM_TWO, 4), policy)
            q13[i, j] = vacuum_probability(both, (0, 2))

    p_tt = 1.0 - q1[:, None] - q3[None, :] + q13
    p_t_any = 1.0 - q1 - q34 + q134
    p_any_t = 1.0 - q12 - q3 + q123
    p_any_any = 1.0 - q12 - q34 + q_all
    return p_tt, p_t_any, p_any_t, p_any_any


def scan_angle_tables(p_tt, p_t_any, p_any_t, p_any_any, thetas):
    """Exhaustive CH maximization over a grid, from precomputed rate tables.

    Returns (best angle 4-tuple, best f). Ties break toward the
    lexicographically first grid point.
    """
    f = (
        p_tt[:, :, None, None]
        - p_tt[:, None, None, :]
        + p_tt.T[None, :, :, None]
        + p_tt[None, None, :, :]
        - p_t_any[None, None, :, None]
        - p_any_t[None, :, None, None]
    )
    flat_best = int(np.argmax(f))
    idx = np.unravel_index(flat_best, f.shape)
    best = tuple(float(thetas[k]) for k in idx)
    return best, float(f[idx])


def _f_value(evaluate, angles):
    report = evaluate(AngleSettings(*angles))
    return report.f


def _refine(evaluate, start, grid_f):
    result = optimize.minimize(
        lambda x: -_f_value(evaluate, x),
        x0=np.asarray(start, dtype=float),
        method="Nelder-Mead",
        options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 600},
    )
    refined_f = -float(result.fun)
    if refined_f > grid_f:
        return tuple(float(a) for a in result.x), refined_f
    return start, grid_f


def angle_scan(state, grid_density=16, refine=False, policy=DEFAULT_POLICY):
    """Search polarizer angles maximizing the CH functional for a state.

    Scans an exhaustive grid of the four angles over [0, pi), then
    optionally polishes the best grid point with a derivative-free simplex.
    Dispatches on the state type: Fock states directly, Gaussian states and
    classical mixtures through their engines.

    Args:
        state: OccupationState, DensityOperator, GaussianState or
            ClassicalMixture.
        grid_density: points per angle axis (at least 2).
        refine: run a Nelder-Mead polish from the best grid point.

    Returns:
        ScanResult with canonicalized best angles.
    """
    if grid_density < 2:
        raise ValueError("grid density must be at least 2")
    thetas = np.arange(grid_density) * math.pi / grid_density

    if isinstance(state, (OccupationState, DensityOperator)):
        tables = _fock_scan_tables(state, thetas, policy)
        evaluate = lambda a: ch_functional(state, a, policy)
    else:
        from . import coherent, gaussian

        if isinstance(state, gaussian.GaussianState):
            tables = gaussian.scan_tables(state, thetas)
            evaluate = lambda a: gaussian.gaussian_ch(state, a, policy)
        elif isinstance(state, coherent.ClassicalMixture):
            tables = coherent.scan_tables(state, thetas)
            evaluate = lambda a: coherent.mixture_ch(state, a, policy)
        else:
            raise TypeError(f"cannot scan angles for {type(state).__name__}")

    best, grid_f = scan_angle_tables(*tables, thetas)
    angles, best_f = (best, grid_f)
    if refine:
        angles, best_f = _refine(evaluate, best, grid_f)
    return ScanResult(
        angles=AngleSettings(*angles),
        f=best_f,
        grid_f=grid_f,
        grid_density=grid_density,
        refined=refine,
    )
