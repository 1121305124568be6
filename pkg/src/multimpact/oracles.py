"""Independent reference computations used to audit the main pipeline.

Two oracles live here, both deliberately implemented with different
numerics than the code they check:

- :func:`brute_force_lcp` enumerates every complementary support set of a
  small LCP and returns all solutions, so pivoting results can be compared
  against an exhaustive ground truth;
- :func:`routh_dense_reference` integrates a single frictional contact
  through impulse space with a dense explicit scheme (sliding, sticking
  and reversed-sliding phases), the classical construction the capped
  stepping scheme discretizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contact import ImpactProblem, mass_norm
from .lcp import LcpInstance
from .resolution import compute_r

__all__ = [
    "brute_force_lcp",
    "DenseTrajectory",
    "routh_dense_reference",
    "frictionless_terminal",
]

_BRUTE_FORCE_MAX = 14


def brute_force_lcp(lcp: LcpInstance, tol: float = 1e-8) -> list[np.ndarray]:
    """All solutions of a small LCP by support enumeration.

    For every subset S of indices, solves ``M[S,S] z_S = -q[S]`` and keeps
    the candidate when it is feasible (``z >= -tol`` and ``w >= -tol``).
    Solutions closer than ``tol`` to an already-found one are dropped.
    Limited to n <= 14 (2^n subsets).
    """
    n = lcp.n
    if n > _BRUTE_FORCE_MAX:
        raise ValueError(f"brute force supports n <= {_BRUTE_FORCE_MAX}, got {n}")
    scale = 1.0 + float(np.abs(lcp.q).max(initial=0.0))
    solutions: list[np.ndarray] = []
    for mask in range(1 << n):
        support = [i for i in range(n) if mask >> i & 1]
        z = np.zeros(n)
        if support:
            sub = lcp.m[np.ix_(support, support)]
            rhs = -lcp.q[support]
            z_s, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
            if np.abs(sub @ z_s - rhs).max() > tol * scale:
                continue  # support system inconsistent
            z[support] = z_s
        if z.min(initial=0.0) < -tol:
            continue
        w = lcp.m @ z + lcp.q
        if w.min(initial=0.0) < -tol:
            continue
        if any(np.abs(z - known).max() <= tol for known in solutions):
            continue
        solutions.append(z)
    return solutions


@dataclass(eq=False)
class DenseTrajectory:
    """A finely resolved single-contact resolution path.

    ``s_grid`` is accumulated normal impulse; ``v_grid[k]`` the velocity
    after impulse ``s_grid[k]``.  ``modes`` records the friction phase used
    on each segment ("slide+", "slide-", or "stick")."""

    s_grid: np.ndarray
    v_grid: np.ndarray
    modes: list[str]

    @property
    def v_final(self) -> np.ndarray:
        return self.v_grid[-1]


def frictionless_terminal(problem: ImpactProblem, v0: np.ndarray) -> np.ndarray:
    """Closed-form terminal velocity for a single frictionless contact:
    remove the normal approach speed along the mass-weighted normal."""
    jn = problem.jn[0]
    minv_jn = problem.mass_solve(jn)
    rate = float(jn @ v0)
    if rate >= 0.0:
        return np.asarray(v0, dtype=float).copy()
    return v0 - (rate / float(jn @ minv_jn)) * minv_jn


def routh_dense_reference(
    problem: ImpactProblem, v0: np.ndarray, ds: float
) -> DenseTrajectory:
    """Integrate a single contact's impact through impulse space.

    Velocity evolves as ``dv/ds = M^-1 (jn + f(s) jt)`` where the friction
    coefficient ``f`` is ``-mu sign(slip)`` while sliding, and while the
    slip rate is zero the force that holds it zero, provided it lies in
    the friction cone (otherwise sliding resumes in the consistent
    direction).  Integration stops exactly where the approach rate crosses
    zero (the final partial step is cut to the crossing).
    """
    if problem.n_contacts != 1:
        raise ValueError("the dense reference handles exactly one contact")
    if ds <= 0.0:
        raise ValueError("impulse increment ds must be positive")
    v = np.asarray(v0, dtype=float).copy()
    jn = problem.jn[0]
    jt = problem.jd[0]
    mu = float(problem.mu[0])
    minv_jn = problem.mass_solve(jn)
    minv_jt = problem.mass_solve(jt)
    a_tn = float(jt @ minv_jn)
    a_tt = float(jt @ minv_jt)

    slip_tol = 1e-6 * float(np.linalg.norm(v0))
    band = ds * slip_tol

    if a_tt > 0.0:
        eta = -a_tn / a_tt  # tangential force per unit normal holding slip
        stick_feasible = abs(eta) <= mu
    else:
        eta = 0.0  # degenerate tangent (frictionless): normal-only force
        stick_feasible = True
    stick_accel = minv_jn + eta * minv_jt

    def slide_accel(direction: float) -> np.ndarray:
        return minv_jn - mu * direction * minv_jt

    # Impulse budget from the progress certificate: total normal impulse
    # cannot exceed |r| * (|v*| + |v0|); exceeding it means a bug.
    r = compute_r(problem)
    sigma = float(np.linalg.eigvalsh(problem.mass)[0])
    budget = 4.0 * float(np.linalg.norm(r)) * mass_norm(problem, v0) / math.sqrt(sigma)
    max_steps = int(math.ceil(budget / ds)) + 16

    s_values = [0.0]
    v_values = [v.copy()]
    modes: list[str] = []
    sticking = False
    s = 0.0

    for _ in range(max_steps):
        rate_n = float(jn @ v)
        if rate_n >= 0.0:
            break
        slip = float(jt @ v)
        if sticking:
            accel = stick_accel
            mode = "stick"
        elif abs(slip) <= band:
            if stick_feasible:
                sticking = True
                accel = stick_accel
                mode = "stick"
            else:
                # Pick the self-consistent sliding direction: slip leaves
                # zero with the same sign as its own acceleration.
                cand = 1.0 if float(jt @ slide_accel(1.0)) > 0.0 else -1.0
                accel = slide_accel(cand)
                mode = "slide+" if cand > 0 else "slide-"
        else:
            direction = math.copysign(1.0, slip)
            accel = slide_accel(direction)
            mode = "slide+" if direction > 0 else "slide-"

        step = ds
        # Cut the step at the approach-rate zero crossing (termination).
        dn = float(jn @ accel)
        if dn > 0.0 and rate_n + step * dn >= 0.0:
            step = -rate_n / dn
        elif not sticking and abs(slip) > band:
            # Cut at a slip reversal so the stick test happens at the
            # crossing instead of overshooting.
            dt_ = float(jt @ accel)
            if dt_ != 0.0 and (slip + step * dt_) * slip < 0.0:
                step = -slip / dt_
        v = v + step * accel
        s += step
        s_values.append(s)
        v_values.append(v.copy())
        modes.append(mode)
        if step < ds and float(jn @ v) >= -1e-15 * (1.0 + float(np.linalg.norm(v))):
            break
    else:
        raise RuntimeError(
            "dense reference exceeded its impulse budget; integration diverged"
        )

    return DenseTrajectory(
        s_grid=np.array(s_values), v_grid=np.array(v_values), modes=modes
    )
