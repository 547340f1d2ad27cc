"""Fixed-point ascent to the modes of a Gaussian mixture density.

The update map sends ``x`` to the solution of

    (sum_g w_g(x) Sigma_g^{-1}) y = sum_g w_g(x) Sigma_g^{-1} mean_g

where ``w_g(x)`` are the component responsibilities at ``x``.  Iterating it
is a mean-shift style hill climb whose fixed points are the critical points
of the density; an algebraically equivalent formulation is a quasi-Newton
step ``x + S(x) grad(x) / f(x)`` with ``S`` the responsibility-weighted
harmonic mean of the component covariances.  Both are implemented as
independent code paths and agree to floating-point noise; tests hold them
to 1e-10.

All tolerances are relative to :func:`data_scale`, the root mean
per-coordinate variance of the mixture, so configs transfer across data
scalings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from modalmix import _backend, parallel
from modalmix.errors import (
    AscentViolation,
    DimensionMismatch,
    NotPositiveDefinite,
)
from modalmix.mixture import GaussianMixture

# Density may drop by at most this much between iterates (rounding slack).
ASCENT_SLACK = 1e-12
# A registered mode must satisfy |grad| * data_scale / density <= this.
REGISTRATION_GRAD_TOL = 1e-6
# Step-converged trajectories longer than this get the gradient gate.
_QUICK_CONVERGENCE_ITERS = 3


@dataclass(frozen=True)
class MeanShiftConfig:
    """Tolerances for ascent and mode registration.

    All distance thresholds are multiplied by :func:`data_scale` before use.
    ``gradient_stall_tol`` classifies a max-iteration trajectory as resolved
    anyway when its terminal relative gradient is this small (the step rule
    simply never fired at a critical point).
    """

    step_tol: float = 1e-8
    max_iterations: int = 1000
    mode_merge_tol: float = 1e-3
    gradient_stall_tol: float = 1e-10


@dataclass
class Trajectory:
    """One recorded ascent: ``iterates[0]`` is the start, ``iterates[-1]``
    the terminal point."""

    iterates: np.ndarray
    converged: bool
    terminal_mode_index: int | None = None

    @property
    def start(self) -> np.ndarray:
        return self.iterates[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def iterations(self) -> int:
        return self.iterates.shape[0] - 1


@dataclass
class ModeSet:
    """Registered modes in first-found order.

    ``modes[m]`` is the representative terminal of the first trajectory that
    reached mode ``m``; later terminals within ``mode_merge_tol * data_scale``
    merged into it.  ``gradient_tol`` is the relative-gradient threshold every
    registered mode passed.
    """

    modes: np.ndarray
    densities: np.ndarray
    data_scale: float
    gradient_tol: float = REGISTRATION_GRAD_TOL

    def __len__(self) -> int:
        return self.modes.shape[0]


@dataclass
class ModeSearch:
    """Full result of a batch ascent: per-start assignments (-1 when the
    trajectory did not resolve to a mode), terminals, and iteration counts."""

    mode_set: ModeSet
    assignments: np.ndarray
    terminals: np.ndarray
    iterations: np.ndarray
    resolved: np.ndarray


def data_scale(mixture: GaussianMixture) -> float:
    """Root mean per-coordinate variance of the mixture distribution."""
    total = mixture.total_covariance()
    return math.sqrt(float(np.trace(total)) / mixture.dimension)


def shift_map(mixture: GaussianMixture, x):
    """One fixed-point update, in responsibility-weighted precision form."""
    pts, single = mixture._points(x)
    p = mixture._packed
    y, _ = _backend.shift_steps(
        pts, p.log_weights, p.means, p.chol, p.log_det, p.prec, p.prec_mu
    )
    return y[0] if single else y


def quasi_newton_step(mixture: GaussianMixture, x):
    """The same update computed the long way round: ``x + S(x) grad/f``.

    Deliberately composed from the standalone gradient, density, and
    harmonic-mean-covariance operations rather than the solver in
    :func:`shift_map`, so the two routes cross-check each other.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("quasi_newton_step takes a single point")
    f = mixture.density(x)
    g = mixture.gradient(x)
    S = mixture.harmonic_mean_covariance(x)
    return x + S @ (g / f)


def ascend(mixture: GaussianMixture, x0, config: MeanShiftConfig | None = None) -> Trajectory:
    """Iterate the fixed-point map from ``x0``, recording every iterate.

    Stops when the step norm drops below ``step_tol * data_scale`` or after
    ``max_iterations`` updates (``converged=False`` then).  Raises
    :class:`AscentViolation` if the density decreases beyond rounding slack.
    """
    cfg = config or MeanShiftConfig()
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1:
        raise DimensionMismatch("ascend takes a single start point")
    tol = cfg.step_tol * data_scale(mixture)
    iterates = [x0]
    cur = x0
    f_cur = mixture.density(cur)
    converged = False
    for _ in range(cfg.max_iterations):
        nxt = shift_map(mixture, cur)
        f_nxt = mixture.density(nxt)
        iterates.append(nxt)
        if f_nxt < f_cur - ASCENT_SLACK:
            raise AscentViolation(
                f"density decreased {f_cur:.17g} -> {f_nxt:.17g} during ascent"
            )
        step = float(np.linalg.norm(nxt - cur))
        cur, f_cur = nxt, f_nxt
        if step < tol:
            converged = True
            break
    return Trajectory(iterates=np.asarray(iterates), converged=converged)


def mode_search(
    mixture: GaussianMixture,
    starts,
    config: MeanShiftConfig | None = None,
    workers: int | None = None,
) -> ModeSearch:
    """Batch-ascend ``starts`` and register the distinct terminals as modes.

    Registration is serial in start order: a terminal within
    ``mode_merge_tol * data_scale`` of an already-registered mode joins it
    (first-registered representative wins); otherwise it becomes a new mode,
    provided it passes the relative-gradient test.  Trajectories that fail
    the test or exhaust ``max_iterations`` stay unassigned (-1); they never
    abort the batch.
    """
    cfg = config or MeanShiftConfig()
    pts, _ = mixture._points(starts)
    n = pts.shape[0]
    scale = data_scale(mixture)
    tol = cfg.step_tol * scale
    p = mixture._packed

    def run(chunk):
        return _backend.ascend(
            chunk, p.log_weights, p.means, p.chol, p.log_det, p.prec, p.prec_mu,
            tol, cfg.max_iterations, ASCENT_SLACK,
        )

    nworkers = parallel.worker_count(workers)
    chunks = _split(pts, nworkers)
    try:
        results = parallel.thread_map(run, chunks, nworkers)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"ascent linear algebra failed: {exc}") from exc
    terminals = np.concatenate([r[0] for r in results])
    iters = np.concatenate([r[2] for r in results])
    status = np.concatenate([r[3] for r in results])

    if np.any(status == _backend.STATUS_NOT_SPD):
        raise NotPositiveDefinite("ascent shift system not positive definite")
    if np.any(status == _backend.STATUS_ASCENT_VIOLATION):
        bad = np.flatnonzero(status == _backend.STATUS_ASCENT_VIOLATION)
        raise AscentViolation(f"density decreased for starts {bad[:8].tolist()}")

    rel = np.atleast_2d(mixture.relative_gradient(terminals))
    rel_grad = np.linalg.norm(rel, axis=1) * scale
    stepped = status == _backend.STATUS_CONVERGED
    resolved = stepped & (
        (iters <= _QUICK_CONVERGENCE_ITERS) | (rel_grad <= REGISTRATION_GRAD_TOL)
    )
    resolved |= (status == _backend.STATUS_MAX_ITER) & (
        rel_grad <= cfg.gradient_stall_tol
    )

    merge_tol = cfg.mode_merge_tol * scale
    modes: list[np.ndarray] = []
    assignments = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if not resolved[i]:
            continue
        t = terminals[i]
        for m, rep in enumerate(modes):
            if np.linalg.norm(t - rep) < merge_tol:
                assignments[i] = m
                break
        else:
            modes.append(t)
            assignments[i] = len(modes) - 1
    mode_arr = (
        np.asarray(modes) if modes else np.empty((0, mixture.dimension))
    )
    densities = (
        np.atleast_1d(mixture.density(mode_arr)) if len(modes) else np.empty(0)
    )
    mode_set = ModeSet(modes=mode_arr, densities=densities, data_scale=scale)
    return ModeSearch(
        mode_set=mode_set,
        assignments=assignments,
        terminals=terminals,
        iterations=iters,
        resolved=resolved,
    )


def find_modes(
    mixture: GaussianMixture,
    starts,
    config: MeanShiftConfig | None = None,
    workers: int | None = None,
):
    """Distinct modes reached from ``starts``.

    Returns ``(ModeSet, assignments)`` where ``assignments[i]`` is the
    0-based mode index start ``i`` ascended to, or -1 for an unresolved
    trajectory.
    """
    search = mode_search(mixture, starts, config, workers)
    return search.mode_set, search.assignments


def _split(pts: np.ndarray, workers: int):
    if workers <= 1 or pts.shape[0] <= 1:
        return [pts]
    k = min(workers, pts.shape[0])
    return np.array_split(pts, k)
