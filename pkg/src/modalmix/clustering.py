"""Cluster labelings derived from a fitted mixture, and their comparison.

Three routes to labels:

* ``component_assign`` - one cluster per mixture component, each point to
  its highest posterior component.
* ``merge_components`` - components whose means ascend to the same density
  mode are merged, so clusters correspond to modes but points still follow
  their component.
* ``modal_assign`` - each point ascends the density itself and takes the
  mode it converges to; clusters are the domains of attraction restricted
  to the sample.

Labels are 1-based (1..K).  Partitions are compared with the adjusted Rand
index.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from modalmix.em import FitResult
from modalmix.errors import InvalidArgument, LengthMismatch, UnresolvedTrajectory
from modalmix.meanshift import MeanShiftConfig, ModeSet, mode_search
from modalmix.mixture import GaussianMixture

METHOD_COMPONENT = "component"
METHOD_MERGE = "merge"
METHOD_MODAL = "modal"
METHOD_EXTERNAL = "external"


@dataclass
class Clustering:
    """A labeling of n points into clusters 1..n_clusters.

    ``flagged`` marks points whose assignment needed a fallback (unresolved
    trajectories); ``empty_clusters`` lists label values with no member
    (possible when whole-space clusters are restricted to a finite sample).
    """

    labels: np.ndarray
    n_clusters: int
    method: str
    flagged: np.ndarray = None
    empty_clusters: tuple = ()

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.flagged is None:
            self.flagged = np.zeros(self.labels.shape[0], dtype=bool)

    @property
    def n_points(self) -> int:
        return self.labels.shape[0]


def _as_mixture(fit) -> GaussianMixture:
    if isinstance(fit, GaussianMixture):
        return fit
    if isinstance(fit, FitResult):
        return fit.mixture
    raise InvalidArgument(f"expected a mixture or fit result, got {type(fit)!r}")


def component_assign(fit, data) -> Clustering:
    """Each point to its maximum-posterior component (ties to the smaller
    index).  K equals the component count; empty labels are recorded."""
    mixture = _as_mixture(fit)
    pts, _ = mixture._points(np.atleast_2d(np.asarray(data, dtype=np.float64)))
    lt = mixture.log_component_terms(pts)
    labels = np.argmax(lt, axis=1) + 1
    G = mixture.n_components
    present = np.unique(labels)
    empty = tuple(int(g) for g in range(1, G + 1) if g not in present)
    return Clustering(
        labels=labels,
        n_clusters=G,
        method=METHOD_COMPONENT,
        empty_clusters=empty,
    )


def merge_components(fit, data, config: MeanShiftConfig | None = None, workers=None):
    """Merge components that ascend to a common mode, then label points by
    their merged component.

    Returns ``(Clustering, ModeSet, merge_map)`` where ``merge_map[g]`` is
    the 1-based cluster of 1-based component ``g`` (index 0 unused).  A
    component whose mean does not resolve becomes its own singleton cluster,
    numbered after the modes, and its points are flagged.
    """
    mixture = _as_mixture(fit)
    comp = component_assign(mixture, data)
    search = mode_search(mixture, mixture.means, config, workers)
    n_modes = len(search.mode_set)
    G = mixture.n_components
    merge_map = np.zeros(G + 1, dtype=np.int64)
    next_label = n_modes
    for g in range(G):
        if search.assignments[g] >= 0:
            merge_map[g + 1] = search.assignments[g] + 1
        else:
            next_label += 1
            merge_map[g + 1] = next_label
    labels = merge_map[comp.labels]
    flagged = search.assignments[comp.labels - 1] < 0
    clustering = Clustering(
        labels=labels,
        n_clusters=next_label,
        method=METHOD_MERGE,
        flagged=flagged,
    )
    return clustering, search.mode_set, merge_map


def modal_assign(fit, data, config: MeanShiftConfig | None = None, workers=None):
    """Label each point by the mode its ascent converges to.

    Points whose trajectories do not resolve are assigned to the nearest
    registered mode by Mahalanobis distance under the local harmonic-mean
    covariance at their terminal point, and flagged.  Returns
    ``(Clustering, ModeSet)``.
    """
    mixture = _as_mixture(fit)
    X = np.atleast_2d(np.asarray(data, dtype=np.float64))
    search = mode_search(mixture, X, config, workers)
    assignments = search.assignments.copy()
    unresolved = np.flatnonzero(assignments < 0)
    modes = search.mode_set.modes
    if modes.shape[0] == 0:
        raise UnresolvedTrajectory(
            "no trajectory resolved to a mode; cannot label the sample"
        )
    p = mixture._packed
    for i in unresolved:
        t = search.terminals[i]
        w = mixture.responsibilities(t)
        local_prec = np.einsum("g,gij->ij", w, p.prec)
        diff = modes - t
        d2 = np.einsum("mi,ij,mj->m", diff, local_prec, diff)
        assignments[i] = int(np.argmin(d2))
    flagged = np.zeros(X.shape[0], dtype=bool)
    flagged[unresolved] = True
    clustering = Clustering(
        labels=assignments + 1,
        n_clusters=modes.shape[0],
        method=METHOD_MODAL,
        flagged=flagged,
    )
    return clustering, search.mode_set


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected agreement of two labelings of the same points.

    1 for identical partitions, about 0 for independent ones; can be
    negative.  Label values themselves are irrelevant.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"label lengths differ: {a.shape[0]} vs {b.shape[0]}")
    n = a.shape[0]
    if n < 2:
        return 1.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka = int(ai.max()) + 1
    kb = int(bi.max()) + 1
    table = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    sum_cells = sum(math.comb(int(v), 2) for v in table.ravel())
    sum_a = sum(math.comb(int(v), 2) for v in table.sum(axis=1))
    sum_b = sum(math.comb(int(v), 2) for v in table.sum(axis=0))
    total = math.comb(n, 2)
    # All quantities are integers; doing the ratio in exact rationals keeps
    # clean answers (1, -1/2, 0) free of rounding.
    expected = Fraction(sum_a * sum_b, total)
    max_index = Fraction(sum_a + sum_b, 2)
    if max_index == expected:
        # Only when both partitions are all-singletons or both are a single
        # cluster, i.e. identical.
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def write_labels_csv(path, labels) -> None:
    """Write ``point_index,label`` rows (0-based point index, 1-based label)."""
    labels = np.asarray(labels, dtype=np.int64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_index", "label"])
        for i, lab in enumerate(labels):
            writer.writerow([i, int(lab)])


def read_labels_csv(path) -> np.ndarray:
    """Read labels written by :func:`write_labels_csv` (header optional)."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                out.append(int(row[-1]))
            except ValueError:
                continue  # header row
    if not out:
        raise InvalidArgument(f"no labels found in {path}")
    return np.asarray(out, dtype=np.int64)


def sidecar_dict(clustering: Clustering, mode_set: ModeSet | None = None,
                 merge_map: np.ndarray | None = None) -> dict:
    """JSON-ready description of a clustering (cluster count, method, modes,
    merge map, flagged points)."""
    out = {
        "n_clusters": int(clustering.n_clusters),
        "n_points": int(clustering.n_points),
        "method": clustering.method,
        "flagged_points": [int(i) for i in np.flatnonzero(clustering.flagged)],
        "empty_clusters": [int(g) for g in clustering.empty_clusters],
    }
    if mode_set is not None:
        out["modes"] = [[float(v) for v in row] for row in mode_set.modes]
        out["mode_densities"] = [float(v) for v in mode_set.densities]
        out["data_scale"] = float(mode_set.data_scale)
    if merge_map is not None:
        out["merge_map"] = {
            str(g): int(merge_map[g]) for g in range(1, merge_map.shape[0])
        }
    return out
