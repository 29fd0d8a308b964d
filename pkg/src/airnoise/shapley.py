"""Exact Shapley attributions for boosted-tree noise models.

The coalition value f(S) is path-dependent: walking a tree, a node whose
split feature is in S follows the row's branch, any other node contributes
the cover-weighted average of both branches. phi_i is the classic Shapley
average of marginal contributions f(S u {i}) - f(S) over all coalitions, and
phi0 is f(empty), so phi0 + sum(phi) equals the model prediction exactly
(local accuracy).

Two independent evaluation paths exist on purpose. ``shapley_bruteforce``
enumerates all 2^M coalitions through ``coalition_value`` and is the oracle
(capped at 15 features). ``shapley_fast`` exploits that within one tree f(S)
only depends on S intersected with the features on each root-to-leaf path:
per leaf it runs the Shapley sum over at most ``depth`` distinct features,
which features never split on receive exactly 0, and contributions are summed
over leaves and trees. Cost is O(trees * leaves * 2^depth) independent of the
total feature count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyInput, TooManyFeatures, UnknownFeature
from .gbm import Ensemble, TreeNode

BRUTEFORCE_FEATURE_CAP = 15


@dataclass(frozen=True)
class Attribution:
    """Per-feature contributions for one explained row."""

    key: object
    row: np.ndarray            # feature values, aligned with feature_names
    phi0: float
    phis: np.ndarray           # one value per feature
    feature_names: list[str]

    def prediction(self) -> float:
        return self.phi0 + float(np.sum(self.phis))


def _row_values(ensemble: Ensemble, row) -> np.ndarray:
    if isinstance(row, Mapping):
        try:
            return np.array([float(row[name]) for name in ensemble.feature_names])
        except KeyError as exc:
            raise UnknownFeature(exc.args[0]) from None
    values = np.asarray(row, dtype=np.float64)
    if values.shape != (len(ensemble.feature_names),):
        raise UnknownFeature(f"row must carry {len(ensemble.feature_names)} feature values")
    return values


def _subset_indices(ensemble: Ensemble, subset: Iterable[str]) -> set[int]:
    index = {name: i for i, name in enumerate(ensemble.feature_names)}
    out = set()
    for name in subset:
        if name not in index:
            raise UnknownFeature(name)
        out.add(index[name])
    return out


def coalition_value(ensemble: Ensemble, row, subset: Iterable[str]) -> float:
    """Path-dependent expected prediction conditioned on the features in ``subset``."""
    values = _row_values(ensemble, row)
    idx = _subset_indices(ensemble, subset)

    def walk(node: TreeNode) -> float:
        if node.is_leaf:
            return node.weight
        if node.feature_index in idx:
            child = node.left if values[node.feature_index] < node.split_value else node.right
            return walk(child)
        return node.cover_left * walk(node.left) + node.cover_right * walk(node.right)

    return ensemble.base_score + ensemble.learning_rate * sum(walk(t) for t in ensemble.trees)


def _shapley_weights(d: int) -> list[float]:
    """w[k] = k! (d-1-k)! / d! for coalition size k."""
    return [math.factorial(k) * math.factorial(d - 1 - k) / math.factorial(d) for k in range(d)]


def shapley_bruteforce(ensemble: Ensemble, row, key: object = None) -> Attribution:
    """Exact Shapley values by full coalition enumeration (oracle path)."""
    m = len(ensemble.feature_names)
    if m > BRUTEFORCE_FEATURE_CAP:
        raise TooManyFeatures(f"brute force capped at {BRUTEFORCE_FEATURE_CAP} features, got {m}")
    values = _row_values(ensemble, row)
    names = ensemble.feature_names

    value_by_mask = np.empty(1 << m)
    for mask in range(1 << m):
        subset = [names[i] for i in range(m) if mask >> i & 1]
        value_by_mask[mask] = coalition_value(ensemble, values, subset)

    weights = _shapley_weights(m) if m else []
    phis = np.zeros(m)
    for i in range(m):
        bit = 1 << i
        for mask in range(1 << m):
            if mask & bit:
                continue
            k = bin(mask).count("1")
            phis[i] += weights[k] * (value_by_mask[mask | bit] - value_by_mask[mask])

    return Attribution(
        key=key,
        row=values,
        phi0=float(value_by_mask[0]),
        phis=phis,
        feature_names=list(names),
    )


# ---------------------------------------------------------------------------
# fast exact path: per-leaf games over the distinct features on each path

def _leaf_games(tree: TreeNode) -> list[tuple[float, list[tuple[int, float, list[tuple[float, bool]]]]]]:
    """Flatten a tree into (leaf_weight, per-feature path factors).

    For each leaf, each distinct feature on its path carries the product of
    branch covers along the path and the list of (split_value, went_left)
    conditions a row must satisfy to follow the path at that feature's nodes.
    """
    games = []

    def walk(node: TreeNode, state: dict[int, tuple[float, list[tuple[float, bool]]]]):
        if node.is_leaf:
            games.append((node.weight, [(j, cov, conds) for j, (cov, conds) in state.items()]))
            return
        j = node.feature_index
        prev = state.get(j, (1.0, []))
        state[j] = (prev[0] * node.cover_left, prev[1] + [(node.split_value, True)])
        walk(node.left, state)
        state[j] = (prev[0] * node.cover_right, prev[1] + [(node.split_value, False)])
        walk(node.right, state)
        if prev[1]:
            state[j] = prev
        else:
            del state[j]

    walk(tree, {})
    return games


def shapley_batch(ensemble: Ensemble, X: np.ndarray, keys: Sequence[object] | None = None) -> list[Attribution]:
    """Exact attributions for every row of ``X`` (fast path, vectorized)."""
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    if m != len(ensemble.feature_names):
        raise UnknownFeature(f"expected {len(ensemble.feature_names)} features, got {m}")

    phis = np.zeros((n, m))
    phi0 = ensemble.base_score
    eta = ensemble.learning_rate

    for tree in ensemble.trees:
        for weight, factors in _leaf_games(tree):
            d = len(factors)
            if d == 0:
                phi0 += eta * weight
                continue
            covers = np.array([cov for _, cov, _ in factors])
            indicators = np.empty((d, n))
            for i, (j, _, conds) in enumerate(factors):
                follow = np.ones(n, dtype=bool)
                for split, went_left in conds:
                    follow &= (X[:, j] < split) == went_left
                indicators[i] = follow

            w = _shapley_weights(d)
            # P(S) per coalition mask over the d path features
            ind_prod = np.empty((1 << d, n))
            ind_prod[0] = 1.0
            cov_out = np.empty(1 << d)
            for mask in range(1, 1 << d):
                low = (mask & -mask).bit_length() - 1
                ind_prod[mask] = ind_prod[mask & (mask - 1)] * indicators[low]
            for mask in range(1 << d):
                prod = 1.0
                for i in range(d):
                    if not mask >> i & 1:
                        prod *= covers[i]
                cov_out[mask] = prod

            phi0 += eta * weight * cov_out[0]
            scale = eta * weight
            cols = [j for j, _, _ in factors]
            for mask in range(1 << d):
                p = ind_prod[mask] * cov_out[mask]
                k = bin(mask).count("1")
                for i in range(d):
                    if mask >> i & 1:
                        phis[:, cols[i]] += (scale * w[k - 1]) * p
                    else:
                        phis[:, cols[i]] -= (scale * w[k]) * p

    out = []
    for r in range(n):
        out.append(Attribution(
            key=None if keys is None else keys[r],
            row=X[r].copy(),
            phi0=phi0,
            phis=phis[r].copy(),
            feature_names=list(ensemble.feature_names),
        ))
    return out


def shapley_fast(ensemble: Ensemble, row, key: object = None) -> Attribution:
    """Exact attribution for one row; equals the brute-force oracle."""
    values = _row_values(ensemble, row)
    att = shapley_batch(ensemble, values.reshape(1, -1), keys=[key])[0]
    return att


def summary(attributions: Sequence[Attribution]) -> list[tuple[str, float]]:
    """Features ranked by mean absolute contribution, descending.

    Ties keep feature-index order.
    """
    if not attributions:
        raise EmptyInput("no attributions to summarize")
    names = attributions[0].feature_names
    stack = np.vstack([a.phis for a in attributions])
    means = np.mean(np.abs(stack), axis=0)
    order = sorted(range(len(names)), key=lambda i: (-means[i], i))
    return [(names[i], float(means[i])) for i in order]


def dependence(attributions: Sequence[Attribution], feature: str) -> list[tuple[float, float]]:
    """(feature value, phi) pairs sorted by value, for dependence plots.

    Positive phi marks rows where the feature pushes the predicted level up.
    """
    if not attributions:
        raise EmptyInput("no attributions")
    names = attributions[0].feature_names
    if feature not in names:
        raise UnknownFeature(feature)
    j = names.index(feature)
    pairs = [(float(a.row[j]), float(a.phis[j])) for a in attributions]
    pairs.sort(key=lambda p: p[0])
    return pairs


# ---------------------------------------------------------------------------
# file outputs

def write_shap_values(attributions: Sequence[Attribution], dest) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_shap_values(attributions, fh)
        return
    if not attributions:
        raise EmptyInput("no attributions")
    names = attributions[0].feature_names
    cols = ",".join(f"phi_{n}" for n in names)
    dest.write(f"key,phi0,{cols}\n")
    for a in attributions:
        phis = ",".join(repr(float(v)) for v in a.phis)
        dest.write(f"{a.key},{a.phi0!r},{phis}\n")


def write_shap_summary(ranking: Sequence[tuple[str, float]], dest) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_shap_summary(ranking, fh)
        return
    dest.write("feature,mean_abs_phi\n")
    for name, value in ranking:
        dest.write(f"{name},{value!r}\n")


def write_shap_dependence(pairs: Sequence[tuple[float, float]], feature: str, dest) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_shap_dependence(pairs, feature, fh)
        return
    dest.write(f"{feature},phi\n")
    for value, phi in pairs:
        dest.write(f"{value!r},{phi!r}\n")
