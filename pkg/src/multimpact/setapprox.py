"""Sampling-based outer approximation of the set of post-impact velocities.

The stochastic integrator maps a draw sequence to one resolved outcome;
running many trajectories with low-discrepancy or pseudorandom draws and
applying a small finishing step yields a point cloud covering the reachable
post-impact set.  This module provides:

- a deterministic Sobol sequence (52-bit, Gray-code order, up to 32
  dimensions) with direction numbers frozen in source;
- draw samplers with per-trajectory determinism, so results do not depend
  on worker scheduling;
- the finishing-step stiffness bound ``psi``, the sampling driver
  ``approximate`` (optionally multi-process), a coverage audit
  ``epsilon_net_check``, and the grid-based ``sample_count_bound``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .contact import ImpactProblem, is_impacting
from .lcp import SolverOptions
from .resolution import _workspace, sim, sim_step

__all__ = [
    "MAXBIT",
    "SobolStream",
    "sobol_next",
    "sobol_block",
    "SobolSampler",
    "UniformSampler",
    "PostImpactSet",
    "psi",
    "approximate",
    "epsilon_net_check",
    "sample_count_bound",
    "estimate_step_lipschitz",
]

MAXBIT = 52
MAX_DIMENSION = 32
_SENTINEL = 2**63 - 1

# Primitive polynomials and initial direction integers for dimensions
# 2..32 (dimension 1 uses the plain van der Corput sequence).  Each entry
# is (polynomial, m_values); the polynomial integer encodes coefficients
# of a primitive polynomial over GF(2) including leading and trailing 1.
_DIRECTION_DATA: tuple[tuple[int, tuple[int, ...]], ...] = (
    (3, (1,)),
    (7, (1, 3)),
    (11, (1, 3, 1)),
    (13, (1, 1, 1)),
    (19, (1, 1, 3, 3)),
    (25, (1, 3, 5, 13)),
    (37, (1, 1, 5, 5, 17)),
    (41, (1, 1, 5, 5, 5)),
    (47, (1, 1, 7, 11, 19)),
    (55, (1, 1, 5, 1, 1)),
    (59, (1, 1, 1, 3, 11)),
    (61, (1, 3, 5, 5, 31)),
    (67, (1, 3, 3, 9, 7, 49)),
    (91, (1, 1, 1, 15, 21, 21)),
    (97, (1, 3, 1, 13, 27, 49)),
    (103, (1, 1, 1, 15, 7, 5)),
    (109, (1, 3, 1, 15, 13, 25)),
    (115, (1, 1, 5, 5, 19, 61)),
    (131, (1, 3, 7, 11, 23, 15, 103)),
    (137, (1, 3, 7, 13, 13, 15, 69)),
    (143, (1, 1, 3, 13, 7, 35, 63)),
    (145, (1, 3, 5, 9, 1, 25, 53)),
    (157, (1, 3, 1, 13, 9, 35, 107)),
    (167, (1, 3, 1, 5, 27, 61, 31)),
    (171, (1, 1, 5, 11, 19, 41, 61)),
    (185, (1, 3, 5, 3, 3, 13, 69)),
    (191, (1, 1, 7, 13, 1, 19, 1)),
    (193, (1, 3, 7, 5, 13, 19, 59)),
    (203, (1, 1, 3, 9, 25, 29, 41)),
    (211, (1, 3, 5, 13, 23, 1, 55)),
    (213, (1, 3, 7, 3, 13, 59, 17)),
)


def _direction_table(dimension: int) -> np.ndarray:
    """Direction integers, shape (dimension, MAXBIT), as uint64 with the
    leading bit of column k at position MAXBIT-1-k."""
    if dimension < 1:
        raise ValueError("dimension must be at least 1")
    if dimension > MAX_DIMENSION:
        raise ValueError(
            f"Sobol stream supports at most {MAX_DIMENSION} dimensions, got {dimension}"
        )
    table = np.zeros((dimension, MAXBIT), dtype=np.uint64)
    table[0] = [1 << (MAXBIT - 1 - k) for k in range(MAXBIT)]
    for dim in range(1, dimension):
        poly, m_init = _DIRECTION_DATA[dim - 1]
        degree = len(m_init)
        coeff = [(poly >> (degree - i)) & 1 for i in range(1, degree)]
        m_vals = list(m_init)
        for k in range(degree, MAXBIT):
            new = m_vals[k - degree] ^ (m_vals[k - degree] << degree)
            for i in range(1, degree):
                if coeff[i - 1]:
                    new ^= m_vals[k - i] << i
            m_vals.append(new)
        table[dim] = [m_vals[k] << (MAXBIT - 1 - k) for k in range(MAXBIT)]
    return table


@dataclass(eq=False)
class SobolStream:
    """A Sobol low-discrepancy stream over the unit cube.

    ``next_index`` starts at 1 by default: index 0 is the all-zeros point,
    which would waste a draw (a zero impulse cap makes no progress).
    """

    dimension: int
    next_index: int = 1
    direction_numbers: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        if self.next_index < 0:
            raise ValueError("next_index must be nonnegative")
        if self.direction_numbers is None:
            self.direction_numbers = _direction_table(self.dimension)


def _values_at(table: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Sobol points for explicit indices (Gray-code construction allows
    random access: XOR the direction columns of the set bits)."""
    gray = indices ^ (indices >> 1)
    out = np.zeros((len(indices), table.shape[0]), dtype=np.uint64)
    for bit in range(MAXBIT):
        mask = (gray >> bit) & 1 == 1
        if mask.any():
            out[mask] ^= table[:, bit]
    return out / float(1 << MAXBIT)


def sobol_block(dimension: int, start: int, count: int) -> np.ndarray:
    """Points ``start .. start+count-1`` of the sequence, shape (count, dimension)."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    if start + count >= 1 << MAXBIT:
        raise ValueError("Sobol index range exceeds the 52-bit sequence")
    table = _direction_table(dimension)
    indices = np.arange(start, start + count, dtype=np.uint64)
    return _values_at(table, indices)


def sobol_next(stream: SobolStream) -> np.ndarray:
    """The next point of the stream (advances ``next_index``)."""
    if stream.next_index >= 1 << MAXBIT:
        raise ValueError("Sobol stream exhausted")
    point = _values_at(
        stream.direction_numbers, np.array([stream.next_index], dtype=np.uint64)
    )[0]
    stream.next_index += 1
    return point


class SobolSampler:
    """Low-discrepancy draw source.  Trajectory ``i`` with step cap ``n``
    consumes the consecutive index block ``[1 + i*n, 1 + (i+1)*n)``, so the
    draw a trajectory sees is independent of scheduling or job count."""

    kind = "sobol"

    def __init__(self, seed: int | None = None):
        self.seed = seed  # accepted for interface parity; the stream is seedless

    def draws(self, traj_index: int, n: int, m: int):
        block = sobol_block(m, 1 + traj_index * n, n)
        return iter(block)


class UniformSampler:
    """Pseudorandom draw source; trajectory ``i`` uses an independent
    generator keyed by ``(seed, i)``, again scheduling-independent."""

    kind = "uniform"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def draws(self, traj_index: int, n: int, m: int):
        rng = np.random.default_rng([self.seed, traj_index])
        remaining = n
        while remaining > 0:
            yield rng.random(m)
            remaining -= 1


@dataclass(eq=False)
class PostImpactSet:
    """Sampled outer approximation of the reachable post-impact velocities."""

    samples: np.ndarray  # (n_kept, n_v)
    traj_indices: np.ndarray  # (n_kept,)
    rejected_count: int
    params: dict


def psi(problem: ImpactProblem) -> float:
    """Stiffness bound for the finishing step: how much total impulse a
    unit of residual approach speed can require.  Computed as
    ``sigma_max(M^-1 Jbar^T) * m * (1 + max mu) + 1``."""
    ws = _workspace(problem)
    sigma = float(np.linalg.norm(ws.minv_jbar_t, 2))
    return sigma * problem.n_contacts * (1.0 + float(problem.mu.max())) + 1.0


def _run_trajectories(
    problem: ImpactProblem,
    v0: np.ndarray,
    h: float,
    n_max: int,
    sampler,
    finishing: np.ndarray,
    indices: list[int],
    opts: SolverOptions | None,
) -> list[tuple[int, np.ndarray | None]]:
    out: list[tuple[int, np.ndarray | None]] = []
    for idx in indices:
        traj = sim(problem, v0, h, n_max, sampler, traj_index=idx, opts=opts)
        v_fin, _ = sim_step(problem, traj.v_final, finishing, opts)
        if is_impacting(problem, v_fin):
            out.append((idx, None))
        else:
            out.append((idx, v_fin))
    return out


def approximate(
    problem: ImpactProblem,
    v0: np.ndarray,
    h: float,
    epsilon: float,
    n_max: int,
    m_trajectories: int,
    sampler,
    jobs: int = 1,
    opts: SolverOptions | None = None,
) -> PostImpactSet:
    """Sample ``m_trajectories`` resolutions of the impact at ``v0``.

    Each trajectory runs the capped stochastic integrator for at most
    ``n_max`` steps, then takes one finishing step with per-contact cap
    ``epsilon / (3 psi)``; endpoints still impacting afterwards are
    discarded (counted in ``rejected_count``).  Requires
    ``0 < epsilon < h``.  With ``jobs > 1`` trajectories are distributed
    over worker processes; outputs are identical for any job count.
    """
    if not 0.0 < epsilon < h:
        raise ValueError("epsilon must satisfy 0 < epsilon < h")
    if m_trajectories < 1:
        raise ValueError("at least one trajectory is required")
    v0 = np.asarray(v0, dtype=float)
    finishing = (epsilon / (3.0 * psi(problem))) * np.ones(problem.n_contacts)

    indices = list(range(m_trajectories))
    if jobs <= 1 or m_trajectories == 1:
        results = _run_trajectories(
            problem, v0, h, n_max, sampler, finishing, indices, opts
        )
    else:
        jobs = min(jobs, m_trajectories)
        chunks = [indices[k::jobs] for k in range(jobs)]
        results = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(
                    _run_trajectories,
                    problem, v0, h, n_max, sampler, finishing, chunk, opts,
                )
                for chunk in chunks
            ]
            for future in futures:
                results.extend(future.result())
        results.sort(key=lambda item: item[0])

    kept = [(idx, v) for idx, v in results if v is not None]
    samples = (
        np.array([v for _, v in kept])
        if kept
        else np.zeros((0, problem.n_v))
    )
    return PostImpactSet(
        samples=samples,
        traj_indices=np.array([idx for idx, _ in kept], dtype=int),
        rejected_count=m_trajectories - len(kept),
        params={
            "h": h,
            "epsilon": epsilon,
            "n_max": n_max,
            "m_trajectories": m_trajectories,
            "sampler": sampler.kind,
            "seed": getattr(sampler, "seed", None),
        },
    )


def epsilon_net_check(
    candidate: np.ndarray, reference: np.ndarray, epsilon: float
) -> tuple[bool, float]:
    """Audit that ``candidate`` is an epsilon-net of ``reference``: every
    reference point must be within Euclidean ``epsilon`` of some candidate.
    Returns ``(ok, worst_gap)``."""
    candidate = np.asarray(candidate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if candidate.size == 0 or reference.size == 0:
        raise ValueError("both point sets must be nonempty")
    worst = 0.0
    chunk = max(1, int(2**22) // max(1, candidate.shape[0]))
    for start in range(0, reference.shape[0], chunk):
        block = reference[start : start + chunk]
        d2 = (
            np.sum(block * block, axis=1)[:, None]
            - 2.0 * block @ candidate.T
            + np.sum(candidate * candidate, axis=1)[None, :]
        )
        worst = max(worst, float(np.sqrt(np.maximum(d2, 0.0).min(axis=1)).max()))
    return worst <= epsilon, worst


def sample_count_bound(
    h: float, lipschitz_l: float, box_dim: int, epsilon: float, delta: float
) -> int:
    """How many trajectories suffice for epsilon-coverage with confidence.

    Covers the draw cube by a grid fine enough that the trajectory map
    moves points less than epsilon within a cell (``cells = ceil(h * L *
    sqrt(box_dim) / epsilon)`` per axis, hit probability ``omega`` =
    cells^-box_dim), then returns the least M with
    ``M >= ln(delta * omega) / ln(1 - omega)``.  Astronomically large
    requirements saturate to ``2**63 - 1``.
    """
    if h <= 0 or lipschitz_l <= 0 or epsilon <= 0:
        raise ValueError("h, lipschitz_l and epsilon must be positive")
    if box_dim < 1:
        raise ValueError("box_dim must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    cells = math.ceil(h * lipschitz_l * math.sqrt(box_dim) / epsilon)
    if cells <= 1:
        return 1
    log_omega = -box_dim * math.log(cells)
    omega = math.exp(log_omega)
    if omega == 0.0:
        return _SENTINEL
    log_miss = math.log1p(-omega)
    if log_miss == 0.0:
        return _SENTINEL
    required = (math.log(delta) + log_omega) / log_miss
    if not math.isfinite(required) or required >= _SENTINEL:
        return _SENTINEL
    return max(1, math.ceil(required))


def estimate_step_lipschitz(
    problem: ImpactProblem,
    h: float,
    n_pairs: int = 10000,
    seed: int = 0,
    scale: float = 1.0,
    opts: SolverOptions | None = None,
) -> float:
    """Empirical (non-certified) Lipschitz constant of the one-step map in
    its velocity argument: the largest observed ratio
    ``|step(v1) - step(v2)| / |v1 - v2|`` over random velocity pairs that
    share a drawn cap vector."""
    rng = np.random.default_rng(seed)
    m = problem.n_contacts
    worst = 0.0
    for _ in range(n_pairs):
        v1 = scale * rng.normal(size=problem.n_v)
        v2 = v1 + scale * 10.0 ** rng.uniform(-4, 0) * rng.normal(size=problem.n_v)
        caps = h * rng.random(m)
        out1, _ = sim_step(problem, v1, caps, opts)
        out2, _ = sim_step(problem, v2, caps, opts)
        gap = float(np.linalg.norm(v1 - v2))
        if gap > 0.0:
            worst = max(worst, float(np.linalg.norm(out1 - out2)) / gap)
    return worst
