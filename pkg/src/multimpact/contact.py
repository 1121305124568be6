"""Frictional contact problem data for planar multibody impacts.

An :class:`ImpactProblem` bundles the generalized mass matrix, the normal
and tangential contact Jacobians, and per-contact friction coefficients.
Tangential directions are carried in doubled form: for contact ``i`` the
rows ``2i`` and ``2i+1`` of ``jd`` are the two opposite tangent directions,
so frictional impulses decompose into nonnegative coordinates.

Velocities are plain 1-D numpy arrays over the generalized coordinates;
the helpers here evaluate kinetic energy, the kinetic metric norm, the
impact-activity test, and a feasibility audit for post-impact states.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "ImpactProblem",
    "kinetic_energy",
    "mass_norm",
    "is_impacting",
    "in_linear_cone",
    "problem_to_dict",
    "problem_from_dict",
    "save_problem",
    "load_problem",
]


@dataclass(eq=False)
class ImpactProblem:
    """Mass matrix, contact Jacobians and friction data for one pose.

    Attributes
    ----------
    mass : (n_v, n_v) symmetric positive definite generalized mass matrix.
    jn : (m, n_v) normal contact Jacobian; row i maps generalized velocity
        to the separation rate of contact i (positive = separating).
    jd : (2m, n_v) doubled tangential Jacobian; rows 2i and 2i+1 are exact
        opposites and span the tangent line of contact i.
    mu : (m,) positive friction coefficients.
    labels : human-readable contact names, one per contact.
    """

    mass: np.ndarray
    jn: np.ndarray
    jd: np.ndarray
    mu: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        self.mass = np.asarray(self.mass, dtype=float)
        self.jn = np.atleast_2d(np.asarray(self.jn, dtype=float))
        self.jd = np.atleast_2d(np.asarray(self.jd, dtype=float))
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))

        n_v = self.mass.shape[0]
        if self.mass.shape != (n_v, n_v):
            raise ValueError("mass matrix must be square")
        if not np.allclose(self.mass, self.mass.T, atol=1e-12 * (1 + abs(self.mass).max())):
            raise ValueError("mass matrix must be symmetric")
        try:
            self._cho = cho_factor(self.mass)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises ValueError
            raise ValueError("mass matrix must be positive definite") from exc
        except ValueError as exc:
            raise ValueError("mass matrix must be positive definite") from exc

        m = self.jn.shape[0]
        if self.jn.shape != (m, n_v):
            raise ValueError("jn must have shape (m, n_v)")
        if np.any(np.linalg.norm(self.jn, axis=1) == 0.0):
            raise ValueError("every normal Jacobian row must be nonzero")
        if self.jd.shape != (2 * m, n_v):
            raise ValueError("jd must have shape (2m, n_v)")
        pair_gap = self.jd[0::2] + self.jd[1::2]
        if not np.allclose(pair_gap, 0.0, atol=1e-12 * (1 + abs(self.jd).max())):
            raise ValueError("jd rows must come in opposite-direction pairs")
        if self.mu.shape != (m,):
            raise ValueError("mu must have one entry per contact")
        if np.any(self.mu <= 0.0):
            raise ValueError("friction coefficients must be positive")
        if not self.labels:
            self.labels = tuple(chr(ord("A") + i) if m <= 26 else f"c{i}" for i in range(m))
        if len(self.labels) != m:
            raise ValueError("labels must have one entry per contact")
        self.labels = tuple(self.labels)

    @property
    def n_v(self) -> int:
        return self.mass.shape[0]

    @property
    def n_contacts(self) -> int:
        return self.jn.shape[0]

    @property
    def jbar(self) -> np.ndarray:
        """Stacked contact Jacobian [jn; jd], shape (3m, n_v)."""
        return np.vstack([self.jn, self.jd])

    def mass_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the inverse mass matrix to a vector or stack of columns."""
        return cho_solve(self._cho, rhs)

    def __getstate__(self) -> dict:
        state = dict(self.__dict__)
        state.pop("_cho", None)
        state.pop("_workspace", None)
        return state

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)
        self._cho = cho_factor(self.mass)


def kinetic_energy(problem: ImpactProblem, v: np.ndarray) -> float:
    """Kinetic energy ``v . M v / 2`` of a generalized velocity."""
    v = np.asarray(v, dtype=float)
    return 0.5 * float(v @ problem.mass @ v)


def mass_norm(problem: ImpactProblem, v: np.ndarray) -> float:
    """Kinetic-metric norm ``sqrt(v . M v)``."""
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(max(0.0, float(v @ problem.mass @ v))))


def is_impacting(problem: ImpactProblem, v: np.ndarray, tol_v: float = 1e-10) -> bool:
    """True when some contact is approaching: ``min_i jn_i . v`` is below
    ``-tol_v * (1 + |v|)``.  The relative term keeps the test meaningful
    across velocity scales."""
    v = np.asarray(v, dtype=float)
    rates = problem.jn @ v
    return bool(rates.min() < -tol_v * (1.0 + float(np.linalg.norm(v))))


def in_linear_cone(
    problem: ImpactProblem,
    v_plus: np.ndarray,
    lambda_n: np.ndarray,
    beta: np.ndarray,
    tol: float = 1e-8,
) -> bool:
    """Audit a post-impact velocity and impulse pair against the linearized
    friction-cone feasibility conditions.

    Checks, per contact i (with the canonical tangential slack
    ``gamma_i = max(0, -min_k jd_{i,k} . v_plus)``):

    - nonnegative impulses: ``lambda_n_i >= -tol`` and ``beta >= -tol``;
    - no impulse at a separating contact: ``lambda_n_i * (jn_i . v_plus) <= tol``;
    - doubled friction weights only on non-increasing tangent directions:
      ``beta_{i,k} * ((jd_{i,k} . v_plus) + gamma_i) <= tol``;
    - cone budget: ``mu_i * lambda_n_i - sum_k beta_{i,k} >= -tol``;
    - slipping contacts exhaust the budget:
      ``gamma_i * (mu_i lambda_n_i - sum_k beta_{i,k}) <= tol``.
    """
    v_plus = np.asarray(v_plus, dtype=float)
    lambda_n = np.atleast_1d(np.asarray(lambda_n, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    m = problem.n_contacts
    if lambda_n.shape != (m,) or beta.shape != (2 * m,):
        raise ValueError("impulse vectors do not match the contact count")

    jn_v = problem.jn @ v_plus
    jd_v = (problem.jd @ v_plus).reshape(m, 2)
    beta2 = beta.reshape(m, 2)
    gamma = np.maximum(0.0, -jd_v.min(axis=1))
    budget = problem.mu * lambda_n - beta2.sum(axis=1)

    if np.any(lambda_n < -tol) or np.any(beta < -tol):
        return False
    if np.any(lambda_n * jn_v > tol):
        return False
    if np.any(beta2 * (jd_v + gamma[:, None]) > tol):
        return False
    if np.any(budget < -tol):
        return False
    if np.any(gamma * budget > tol):
        return False
    return True


def problem_to_dict(problem: ImpactProblem) -> dict:
    return {
        "mass": problem.mass.tolist(),
        "jn": problem.jn.tolist(),
        "jd": problem.jd.tolist(),
        "mu": problem.mu.tolist(),
        "labels": list(problem.labels),
    }


def problem_from_dict(data: dict) -> ImpactProblem:
    return ImpactProblem(
        mass=np.array(data["mass"], dtype=float),
        jn=np.array(data["jn"], dtype=float),
        jd=np.array(data["jd"], dtype=float),
        mu=np.array(data["mu"], dtype=float),
        labels=tuple(data.get("labels", ())),
    )


def save_problem(problem: ImpactProblem, path: str | Path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=2))


def load_problem(path: str | Path) -> ImpactProblem:
    return problem_from_dict(json.loads(Path(path).read_text()))
