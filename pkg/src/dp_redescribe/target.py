"""Target variable construction.

Targets drive the supervised tree builders: the initial target comes from a
raw attribute (numerics discretized with the Freedman-Diaconis rule), later
targets from the leaves of the previously built tree. Entities that cannot
be assigned (missing values) go to a designated extra class so that class
counts always sum to the entity count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Attribute, View
from .privacy import CuratorHandle


class DegenerateAttributeError(ValueError):
    """Attribute has no usable (non-missing) values."""


@dataclass
class TargetVariable:
    """Per-entity class labels in [0, class_count); the last class is the
    unassigned class when has_unassigned is set."""

    labels: np.ndarray
    class_count: int
    origin: str
    has_unassigned: bool = False

    @property
    def assigned_class_count(self) -> int:
        return self.class_count - (1 if self.has_unassigned else 0)


def freedman_diaconis_bins(values: np.ndarray) -> int:
    """Equal-width bin count from bin width 2*IQR*n^(-1/3), at least 1.

    Quartiles use linear interpolation so the count is deterministic.
    """
    n = values.shape[0]
    q1, q3 = np.percentile(values, [25.0, 75.0])
    width = 2.0 * (q3 - q1) * n ** (-1.0 / 3.0)
    span = float(values.max() - values.min())
    if width <= 0 or span <= 0:
        return 1
    return max(1, math.ceil(span / width))


def make_initial_target(curator: CuratorHandle, side: str,
                        attribute: Attribute) -> TargetVariable:
    """Server-side target from one attribute: one class per distinct value
    (boolean/categorical) or per Freedman-Diaconis bin (numeric)."""
    view = curator.dataset.view(side)
    j = view.attribute_index(attribute.name)
    col = view.columns[j]
    missing = view.missing_mask(j)
    if np.all(missing):
        raise DegenerateAttributeError(
            f"attribute {attribute.name!r} has no non-missing values"
        )
    n = view.entity_count
    if attribute.kind == "numeric":
        present = col[~missing]
        bins = freedman_diaconis_bins(present)
        lo, hi = float(present.min()), float(present.max())
        labels = np.zeros(n, dtype=np.int64)
        if bins > 1 and hi > lo:
            scaled = (col - lo) / (hi - lo) * bins
            labels = np.clip(np.floor(scaled), 0, bins - 1)
            labels = np.where(missing, 0, labels).astype(np.int64)
        class_count = bins
    else:
        values = np.unique(col[~missing])
        code = {v: k for k, v in enumerate(values.tolist())}
        labels = np.array([code.get(v, 0) for v in col.tolist()], dtype=np.int64)
        class_count = len(values)
    has_unassigned = bool(missing.any())
    if has_unassigned:
        labels = np.where(missing, class_count, labels)
        class_count += 1
    return TargetVariable(
        labels=labels,
        class_count=class_count,
        origin=f"attribute({attribute.name})",
        has_unassigned=has_unassigned,
    )


def target_from_leaves(curator: CuratorHandle, tree) -> TargetVariable:
    """Server-side target with one class per leaf of the given tree; entities
    dropped by a missing split attribute go to the unassigned class."""
    view = curator.dataset.view(tree.side)
    leaf = tree.route(view)
    n_leaves = tree.leaf_count
    unrouted = leaf < 0
    has_unassigned = bool(unrouted.any())
    labels = np.where(unrouted, n_leaves, leaf).astype(np.int64)
    return TargetVariable(
        labels=labels,
        class_count=n_leaves + (1 if has_unassigned else 0),
        origin="tree-leaves",
        has_unassigned=has_unassigned,
    )
