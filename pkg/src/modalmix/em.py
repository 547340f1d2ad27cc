"""Maximum-likelihood mixture fitting by EM, with BIC model selection.

The E-step runs in log space on the kernel backend; the M-step is weighted
moment matching with a relative diagonal ridge (``covariance_floor`` times
the mean pooled variance) keeping every covariance factorizable.  Restarts
use farthest-point seeded initialization, and a component whose effective
weight collapses below 10/n is re-seeded once per restart at the current
lowest-density point; a second collapse abandons the restart.

Everything is deterministic given (data, config): restart and per-G seeds
are derived by fixed hashing of the config seed and the job index, so
results do not depend on execution order or thread count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from modalmix import _backend, parallel
from modalmix.errors import DegenerateData, DimensionMismatch, InvalidArgument
from modalmix.mixture import GaussianMixture

# A component is considered emptied when its effective count drops below this.
_EMPTY_COUNT = 10.0


@dataclass(frozen=True)
class FitConfig:
    """EM controls.

    ``rel_tol`` applies to the log-likelihood change relative to its
    magnitude (floored at 1).  ``covariance_floor`` is the diagonal ridge
    added after every M-step, as a fraction of the pooled per-coordinate
    variance of the data.
    """

    max_iterations: int = 500
    rel_tol: float = 1e-8
    restarts: int = 5
    covariance_floor: float = 1e-6
    rng_seed: int = 0


@dataclass
class FitResult:
    """A fitted mixture plus the likelihood and score it earned."""

    mixture: GaussianMixture
    log_likelihood: float
    bic: float
    n_params: int
    iterations_used: int
    converged: bool
    n_points: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mixture": self.mixture.to_dict(),
            "log_likelihood": self.log_likelihood,
            "bic": self.bic,
            "n_params": self.n_params,
            "iterations_used": self.iterations_used,
            "converged": self.converged,
            "n_points": self.n_points,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FitResult":
        return cls(
            mixture=GaussianMixture.from_dict(payload["mixture"]),
            log_likelihood=float(payload["log_likelihood"]),
            bic=float(payload["bic"]),
            n_params=int(payload["n_params"]),
            iterations_used=int(payload["iterations_used"]),
            converged=bool(payload["converged"]),
            n_points=int(payload["n_points"]),
            diagnostics=dict(payload.get("diagnostics", {})),
        )

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "FitResult":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class GScore:
    """One row of the model-selection table."""

    n_components: int
    bic: float
    log_likelihood: float
    converged: bool
    iterations: int
    error: str | None = None
    max_loglik_decrease: float = 0.0


@dataclass
class SelectionResult:
    """Best-BIC fit plus the per-G score table it was chosen from."""

    best: FitResult
    table: list[GScore]

    @property
    def best_g(self) -> int:
        return self.best.mixture.n_components


def parameter_count(n_components: int, dimension: int) -> int:
    """Free parameters of a full-covariance mixture: weights, means, and
    covariance upper triangles."""
    G, d = n_components, dimension
    return (G - 1) + G * d + G * (d * (d + 1) // 2)


def bic_score(fit: FitResult) -> float:
    """``2 log L - n_params log n``, recomputed from the fit.  Larger is
    better; selection maximizes this."""
    return 2.0 * fit.log_likelihood - fit.n_params * math.log(fit.n_points)


def derived_seed(seed: int, *path: int) -> int:
    """Fixed hash of a seed and a job-index path; basis of all sub-seeding."""
    ss = np.random.SeedSequence([int(seed), *[int(p) for p in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class _RestartFailed(Exception):
    """Internal: one EM restart collapsed irrecoverably."""


def _validate_data(data) -> np.ndarray:
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise InvalidArgument(f"data must be a nonempty (n, d) array, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgument("data contains non-finite entries")
    return np.ascontiguousarray(X)


def _pooled_covariance(X: np.ndarray) -> np.ndarray:
    diff = X - X.mean(axis=0)
    return diff.T @ diff / X.shape[0]


def _starvation_floor(n, d):
    """Member count below which a component needs a neighborhood footprint."""
    return min(n, max(2 * d, int(2 * _EMPTY_COUNT)))


def _local_footprint(X, anchor, k, ridge, eye):
    """Second moment of the k nearest neighbors about ``anchor``."""
    near = np.argsort(np.sum((X - anchor) ** 2, axis=1))[:k]
    diff = X[near] - anchor
    return diff.T @ diff / near.shape[0] + ridge * eye


def _seed_params(X, G, rng, pooled_cov, ridge):
    """Farthest-point traversal from a random start, then per-cluster moments.

    Farthest-point centers land on extreme points, so their clusters can
    start with almost no members.  Such a component instead anchors on its
    center with the covariance of the center's nearest neighbors, which
    gives it a neighborhood's worth of mass to defend.
    """
    n, d = X.shape
    first = int(rng.integers(n))
    centers = [first]
    d2 = np.sum((X - X[first]) ** 2, axis=1)
    for _ in range(G - 1):
        nxt = int(np.argmax(d2))
        centers.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    C = X[centers]
    dists = np.sum((X[:, None, :] - C[None, :, :]) ** 2, axis=2)
    assign = np.argmin(dists, axis=1)
    eye = np.eye(d)
    floor_count = _starvation_floor(n, d)
    weights = np.empty(G)
    means = np.empty((G, d))
    covs = np.empty((G, d, d))
    for g in range(G):
        members = X[assign == g]
        count = members.shape[0]
        if count >= floor_count:
            weights[g] = count
            means[g] = members.mean(axis=0)
            diff = members - means[g]
            covs[g] = diff.T @ diff / count + ridge * eye
        else:
            weights[g] = floor_count
            means[g] = C[g]
            covs[g] = _local_footprint(X, C[g], floor_count, ridge, eye)
    weights /= weights.sum()
    return weights, means, covs


def _log_terms(X, weights, means, covs):
    try:
        chol = np.linalg.cholesky(covs)
    except np.linalg.LinAlgError as exc:
        raise _RestartFailed(f"covariance collapse: {exc}") from exc
    log_det = 2.0 * np.sum(np.log(np.einsum("gii->gi", chol)), axis=1)
    lt = _backend.log_component_terms(
        X, np.log(weights), np.ascontiguousarray(means), chol, log_det
    )
    m = np.max(lt, axis=1)
    logf = m + np.log(np.sum(np.exp(lt - m[:, None]), axis=1))
    return lt, logf


def _single_em(X, G, cfg, rng, pooled_cov, ridge, init):
    n, d = X.shape
    eye = np.eye(d)
    if init is not None:
        weights = init.weights.copy()
        means = init.means.copy()
        covs = np.array([c.covariance for c in init.components])
    else:
        weights, means, covs = _seed_params(X, G, rng, pooled_cov, ridge)
    reinit_used = False
    n_reinit = 0
    max_drop = 0.0
    ll_prev = None
    ll = -np.inf
    converged = False
    iterations = 0
    for it in range(1, cfg.max_iterations + 1):
        iterations = it
        lt, logf = _log_terms(X, weights, means, covs)
        # Exactly-rounded total, so the monotonicity bookkeeping is not
        # polluted by accumulation order.
        ll = math.fsum(logf)
        if ll_prev is not None:
            max_drop = max(max_drop, ll_prev - ll)
            if abs(ll - ll_prev) / max(1.0, abs(ll)) < cfg.rel_tol:
                converged = True
                break
        if it == cfg.max_iterations:
            break
        ll_prev = ll
        resp = np.exp(lt - logf[:, None])
        nk = resp.sum(axis=0)
        new_weights = nk / n
        # A single component always holds the whole sample; the starvation
        # rule only makes sense with competitors.
        empty = (new_weights < _EMPTY_COUNT / n) if G > 1 else np.zeros(1, dtype=bool)
        safe_nk = np.maximum(nk, 1e-300)
        means = resp.T @ X / safe_nk[:, None]
        for g in range(G):
            diff = X - means[g]
            covs[g] = (resp[:, g, None] * diff).T @ diff / safe_nk[g]
        # Floor only scatters that need it.  An unconditional ridge would
        # push every M-step off the Q-maximizer and cost the monotone
        # ascent guarantee at the 1e-10 level.
        mineig = np.linalg.eigvalsh(covs)[:, 0]
        for g in np.flatnonzero(mineig < ridge):
            covs[g] = covs[g] + ridge * eye
        if np.any(empty):
            if reinit_used:
                raise _RestartFailed("component emptied twice")
            reinit_used = True
            n_reinit += 1
            # Re-seed each emptied component on the nearest neighbors of a
            # poorly-covered point.  The local footprint lets it claim that
            # neighborhood outright, so it can survive the next starvation
            # check instead of being squeezed out again immediately.
            order = np.argsort(logf)
            k = _starvation_floor(n, d)
            for j, g in enumerate(np.flatnonzero(empty)):
                anchor = X[order[j % n]]
                means[g] = anchor
                covs[g] = _local_footprint(X, anchor, k, ridge, eye)
                new_weights[g] = 1.0 / G
            weights = new_weights / new_weights.sum()
            ll_prev = None
        else:
            weights = new_weights / new_weights.sum()
    return {
        "weights": weights,
        "means": means,
        "covs": covs,
        "log_likelihood": ll,
        "iterations": iterations,
        "converged": converged,
        "max_drop": max_drop,
        "n_reinit": n_reinit,
    }


def em_fit(
    data,
    n_components: int,
    config: FitConfig | None = None,
    *,
    init: GaussianMixture | None = None,
) -> FitResult:
    """Fit a ``n_components``-component mixture by best-of-restarts EM.

    With ``init`` given, a single EM run starts from those parameters
    instead of the seeded restarts.

    Raises
    ------
    DegenerateData
        If ``n <= n_components`` or every restart collapsed.
    """
    cfg = config or FitConfig()
    X = _validate_data(data)
    n, d = X.shape
    G = int(n_components)
    if G < 1:
        raise InvalidArgument("n_components must be >= 1")
    if n <= G:
        raise DegenerateData(f"need more than {G} points to fit {G} components, got {n}")
    if init is not None:
        if init.n_components != G:
            raise InvalidArgument("init mixture has wrong component count")
        if init.dimension != d:
            raise DimensionMismatch("init mixture has wrong dimension")
    pooled_cov = _pooled_covariance(X)
    ridge = cfg.covariance_floor * float(np.trace(pooled_cov)) / d
    n_runs = 1 if init is not None else max(1, cfg.restarts)
    best = None
    restart_lls = []
    failures = []
    max_drop = 0.0
    n_reinit = 0
    for r in range(n_runs):
        rng = np.random.default_rng(derived_seed(cfg.rng_seed, r))
        try:
            res = _single_em(X, G, cfg, rng, pooled_cov, ridge, init)
        except _RestartFailed as exc:
            failures.append(str(exc))
            restart_lls.append(None)
            continue
        restart_lls.append(res["log_likelihood"])
        max_drop = max(max_drop, res["max_drop"])
        n_reinit += res["n_reinit"]
        if best is None or res["log_likelihood"] > best["log_likelihood"]:
            best = res
    if best is None:
        raise DegenerateData(
            f"all {n_runs} restarts collapsed ({failures[-1] if failures else 'no detail'})"
        )
    order = sorted(
        range(G),
        key=lambda g: (-best["weights"][g], tuple(best["means"][g])),
    )
    mixture = GaussianMixture.from_arrays(
        best["weights"][order], best["means"][order], best["covs"][order]
    )
    k = parameter_count(G, d)
    ll = best["log_likelihood"]
    return FitResult(
        mixture=mixture,
        log_likelihood=ll,
        bic=2.0 * ll - k * math.log(n),
        n_params=k,
        iterations_used=best["iterations"],
        converged=best["converged"],
        n_points=n,
        diagnostics={
            "restart_log_likelihoods": restart_lls,
            "restart_failures": failures,
            "max_loglik_decrease": max_drop,
            "reinit_events": n_reinit,
        },
    )


def select_model(
    data,
    g_values,
    config: FitConfig | None = None,
    workers: int | None = None,
) -> SelectionResult:
    """Fit every G in ``g_values`` and keep the best BIC.

    Ties go to the smaller G.  Each G runs with a seed derived from
    ``(config seed, G)``, so the winner is independent of evaluation order
    and worker count.
    """
    cfg = config or FitConfig()
    X = _validate_data(data)
    gs = sorted({int(g) for g in g_values})
    if not gs:
        raise InvalidArgument("g_values must be nonempty")

    def job(G):
        sub = replace(cfg, rng_seed=derived_seed(cfg.rng_seed, G))
        try:
            return G, em_fit(X, G, sub), None
        except (DegenerateData, InvalidArgument) as exc:
            return G, None, str(exc)

    nworkers = min(parallel.worker_count(workers), len(gs))
    results = parallel.thread_map(job, gs, nworkers)
    table = []
    best = None
    for G, fit, err in results:
        if fit is None:
            table.append(GScore(G, float("nan"), float("nan"), False, 0, err))
            continue
        table.append(
            GScore(
                G, fit.bic, fit.log_likelihood, fit.converged, fit.iterations_used,
                max_loglik_decrease=fit.diagnostics.get("max_loglik_decrease", 0.0),
            )
        )
        if best is None or fit.bic > best.bic:
            best = fit
    if best is None:
        raise DegenerateData(f"every candidate G failed; last error: {table[-1].error}")
    return SelectionResult(best=best, table=table)
