"""Synthetic scenarios with known ground truth, and point-file I/O.

The ``overlapping`` scenario is the stress case this package is built
around: six components in the plane, four of which pairwise share a mean or
overlap into a common density bump, so the density has only four modes.
Component labels and modal labels genuinely disagree there.  The
``trimodal`` scenario is the easy control: three well-separated isotropic
bumps where every method should agree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from modalmix.clustering import Clustering, modal_assign
from modalmix.errors import InvalidArgument, UnknownScenario
from modalmix.meanshift import MeanShiftConfig
from modalmix.mixture import GaussianComponent, GaussianMixture


@dataclass(frozen=True)
class NamedScenario:
    """A named ground-truth mixture."""

    name: str
    true_mixture: GaussianMixture
    notes: str = ""

    def sample(self, count: int, rng):
        """Draw ``count`` points; returns ``(points, component_labels)``."""
        return self.true_mixture.sample(count, rng)


def overlapping_components_scenario() -> NamedScenario:
    """Six plane components with only four density modes.

    Component 1 sits alone at the origin with a +60-degree rotated narrow
    ellipse, component 2 alone at (8, 5) with the opposite rotation;
    components 3/4 share mean (1, 5) and components 5/6 overlap at (8, 0),
    each such pair crossing a vertical with a horizontal ellipse.  Weights
    0.2 on the first four, 0.1 on the last two.
    """
    a = np.diag([1.0, 0.1])
    b = np.diag([0.1, 1.0])
    s3 = math.sqrt(3.0)
    rot = 0.5 * np.array([[1.0, -s3], [s3, 1.0]])
    weights = [0.2, 0.2, 0.2, 0.2, 0.1, 0.1]
    means = [
        [0.0, 0.0],
        [8.0, 5.0],
        [1.0, 5.0],
        [1.0, 5.0],
        [8.0, 0.0],
        [8.0, 0.0],
    ]
    covs = [rot @ a @ rot.T, rot.T @ a @ rot, b, a, b, a]
    mixture = GaussianMixture(
        GaussianComponent(w, m, c) for w, m, c in zip(weights, means, covs)
    )
    return NamedScenario(
        name="overlapping",
        true_mixture=mixture,
        notes="six components, four modes; component and modal labels differ",
    )


def trimodal_wellseparated_scenario() -> NamedScenario:
    """Three equal-weight unit-variance isotropic components at mutual
    distance 8, far enough apart that components, modes, and basins agree."""
    means = [[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]]
    eye = np.eye(2)
    mixture = GaussianMixture(
        GaussianComponent(1.0 / 3.0, m, eye) for m in means
    )
    return NamedScenario(
        name="trimodal",
        true_mixture=mixture,
        notes="well-separated control case; all methods agree",
    )


_SCENARIOS = {
    "overlapping": overlapping_components_scenario,
    "trimodal": trimodal_wellseparated_scenario,
}


def scenario_names() -> list[str]:
    return sorted(_SCENARIOS)


def scenario_by_name(name: str) -> NamedScenario:
    try:
        build = _SCENARIOS[name]
    except KeyError:
        raise UnknownScenario(
            f"unknown scenario {name!r}; available: {', '.join(scenario_names())}"
        ) from None
    return build()


def true_modal_labels(
    scenario: NamedScenario, data, config: MeanShiftConfig | None = None
) -> Clustering:
    """Ground-truth modal labels: domains of attraction of the true density."""
    clustering, _ = modal_assign(scenario.true_mixture, data, config)
    return clustering


def write_points_csv(path, points) -> None:
    """Write one observation per row in plain decimal, with a header row."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    header = ",".join(f"x{i + 1}" for i in range(pts.shape[1]))
    np.savetxt(path, pts, fmt="%.17g", delimiter=",", header=header, comments="")


def read_points_csv(path) -> np.ndarray:
    """Read an (n, d) point file; a non-numeric first row is treated as a
    header."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        skip = 0
        try:
            [float(v) for v in first.replace(",", " ").split()]
        except ValueError:
            skip = 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if data.size == 0:
        raise InvalidArgument(f"no data rows in {path}")
    return data
