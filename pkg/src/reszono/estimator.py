"""Resilient set-based state estimator for LTI plants with up to ``q`` attacked sensors.

Each step predicts every member of the estimate through the dynamics, builds
the state region consistent with each sensor, intersects those regions over
every sensor subset of size ``p - q``, and keeps every non-empty
(prediction, candidate) intersection. The union of the resulting members
contains the true state as long as at most ``q`` sensors lie at any step.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Sequence

import numpy as np
import scipy.linalg

from .constants import RANK_ATOL, RANK_RTOL
from .errors import ConfigError, EmptyEstimateError, InvalidInputError
from .model import SensorModel, SystemModel
from .setops import (
    ConstrainedZonotope,
    Zonotope,
    box_radius,
    contains_set_sufficient,
    intersect,
    interval_hull,
    is_empty,
    linear_map,
    minkowski_sum,
    overbound_union,
    reduce_generators,
    translate,
)


class PrunePolicy(str, Enum):
    NONE = "none"
    DROP_EMPTY_AND_CONTAINED = "drop_empty_and_contained"
    MERGE_INTERSECTING = "merge_intersecting"
    OVERBOUND_ALL = "overbound_all"
    BUDGET = "budget"


_BUDGET_RE = re.compile(r"^budget\((\d+)\)$")


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator knobs.

    ``max_members`` is the budget for :attr:`PrunePolicy.BUDGET`.
    ``reduction_order`` (optional) applies Girard reduction to unconstrained
    predicted members. ``constraint_factor`` caps constraint rows per member
    at ``constraint_factor * n_x``.
    """

    q: int
    prune_policy: PrunePolicy = PrunePolicy.MERGE_INTERSECTING
    max_members: int | None = None
    reduction_order: float | None = None
    constraint_factor: int = 4

    def __post_init__(self):
        object.__setattr__(self, "prune_policy", PrunePolicy(self.prune_policy))
        if self.q < 0:
            raise ConfigError("q must be non-negative", "q")
        if self.prune_policy is PrunePolicy.BUDGET and (self.max_members is None or self.max_members < 1):
            raise ConfigError("budget policy needs max_members >= 1", "estimator.max_members")
        if self.reduction_order is not None and self.reduction_order < 1:
            raise ConfigError("reduction_order must be >= 1", "estimator.reduction_order")

    @classmethod
    def from_policy_string(cls, q: int, policy: str, **kwargs) -> "EstimatorConfig":
        """Accepts the policy names plus the shorthand ``budget(N)``."""
        m = _BUDGET_RE.match(policy.strip())
        if m:
            return cls(q, PrunePolicy.BUDGET, max_members=int(m.group(1)), **kwargs)
        try:
            return cls(q, PrunePolicy(policy), **kwargs)
        except ValueError:
            raise ConfigError(f"unknown prune policy {policy!r}", "estimator.prune") from None

    @property
    def policy_label(self) -> str:
        if self.prune_policy is PrunePolicy.BUDGET:
            return f"budget({self.max_members})"
        return self.prune_policy.value


@dataclass(frozen=True)
class SubsetIndex:
    h: int
    sensors: tuple


@dataclass(frozen=True, eq=False)
class EstimateCollection:
    """Set-valued estimate at step ``k``: the union of ``members`` contains the state.

    ``provenance[i]`` holds the subset indices ``h`` whose candidates produced
    member ``i`` at the last update (several after a merge, none at k = 0).
    Omitted provenance means empty entries.
    """

    k: int
    members: tuple
    provenance: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.provenance is None:
            object.__setattr__(self, "provenance", ((),) * len(self.members))
        object.__setattr__(self, "provenance", tuple(frozenset(p) for p in self.provenance))
        if len(self.members) != len(self.provenance):
            raise InvalidInputError("one provenance entry per member required")

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class DetectionEvent:
    k: int
    sensor: int
    clause: str  # "prediction" or "pairwise"


@dataclass(frozen=True)
class DetectionState:
    detected: frozenset = frozenset()
    evidence: tuple = ()


@dataclass(frozen=True, eq=False)
class ErrorBound:
    center: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class StepOutcome:
    """Everything one estimator step computed, for telemetry and plotting."""

    collection: EstimateCollection
    detection: DetectionState
    bound: ErrorBound
    predicted: tuple
    consistent: tuple
    subsets: tuple
    candidates: tuple
    candidate_empty: tuple


# ---------------------------------------------------------------- building blocks

def init(sys: SystemModel, cfg: EstimatorConfig) -> EstimateCollection:
    if cfg.q >= sys.p:
        raise ConfigError(f"need q < p, got q={cfg.q}, p={sys.p}", "q")
    if sys.state_bound is None:
        raise ConfigError("system has no state bound M", "system.state_bound")
    return EstimateCollection(0, (sys.initial_set.to_constrained(),), (frozenset(),))


def reachable_set(sys: SystemModel, inputs: Sequence) -> Zonotope:
    """Open-loop reachable set after ``len(inputs)`` steps from ``X_0``, in closed form."""
    k = len(inputs)
    powers = [np.eye(sys.n_x)]
    for _ in range(k):
        powers.append(sys.a @ powers[-1])
    center = powers[k] @ sys.initial_set.center
    gens = [powers[k] @ sys.initial_set.generators]
    for j, u in enumerate(inputs):
        a_pow = powers[k - j - 1]
        center = center + a_pow @ (sys.b @ np.atleast_1d(u) + sys.process_noise.center)
        gens.append(a_pow @ sys.process_noise.generators)
    return Zonotope(center, np.hstack(gens))


def time_update(coll: EstimateCollection, u, sys: SystemModel, reduction_order: float | None = None) -> list:
    """``A X (+) B u (+) W`` for every member; member count is unchanged."""
    shift = sys.b @ np.atleast_1d(np.asarray(u, dtype=float))
    out = []
    for m in coll.members:
        pred = minkowski_sum(translate(linear_map(sys.a, m), shift), sys.process_noise.to_constrained())
        if reduction_order is not None and pred.is_zonotope:
            pred = reduce_generators(pred.to_zonotope(), reduction_order).to_constrained()
        out.append(pred)
    return out


def nullspace_scale(sensor: SensorModel) -> float:
    """Largest 1-norm over the kernel basis columns of ``C_i`` (1 when the kernel is trivial).

    For ``||x||_inf <= M`` each kernel coordinate obeys ``|v_j^T x| <= ||v_j||_1 M``,
    so ``M * nullspace_scale`` is the half-width that keeps the consistent set sound.
    """
    if sensor.kernel.shape[1] == 0:
        return 1.0
    return float(max(1.0, np.abs(sensor.kernel).sum(axis=0).max()))


def consistent_set(sensor: SensorModel, y, m_bound: float) -> Zonotope:
    """``<C^+ (y - c_v), [C^+ G_v, m_bound * V_2]>`` with ``V_2`` a kernel basis of ``C``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (sensor.num_outputs,):
        raise InvalidInputError(f"sensor {sensor.id} expects {sensor.num_outputs} outputs, got {y.shape}")
    pinv = sensor.pinv
    center = pinv @ (y - sensor.noise.center)
    gens = np.hstack([pinv @ sensor.noise.generators, m_bound * sensor.kernel])
    return Zonotope(center, gens)


def enumerate_subsets(p: int, q: int) -> list:
    if not 0 <= q < p:
        raise InvalidInputError(f"need 0 <= q < p, got q={q}, p={p}")
    return [SubsetIndex(h, combo) for h, combo in enumerate(combinations(range(1, p + 1), p - q), start=1)]


def subset_count(p: int, q: int) -> int:
    return math.comb(p, p - q)


def candidate_intersections(consistent: Sequence, subsets: Sequence) -> list:
    out = []
    for sub in subsets:
        acc = consistent[sub.sensors[0] - 1].to_constrained()
        for j in sub.sensors[1:]:
            acc = intersect(acc, consistent[j - 1])
        out.append(acc)
    return out


def _independent_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aug = np.hstack([a, b[:, None]])
    _, r, piv = scipy.linalg.qr(aug.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        return np.arange(0)
    tol = max(diag[0] * max(aug.shape) * RANK_RTOL, RANK_ATOL)
    rank = int(np.sum(diag > tol))
    return np.sort(piv[:rank])


def limit_constraints(member: ConstrainedZonotope, max_rows: int) -> ConstrainedZonotope:
    """Keep the constraint count at or below ``max_rows``.

    Redundant rows are dropped first; if that is not enough the member is
    replaced by its interval hull, which contains it.
    """
    if member.num_constraints <= max_rows:
        return member
    keep = _independent_rows(member.constraint_lhs, member.constraint_rhs)
    if len(keep) <= max_rows:
        return ConstrainedZonotope(member.center, member.generators,
                                   member.constraint_lhs[keep], member.constraint_rhs[keep])
    return interval_hull(member).to_zonotope().to_constrained()


def measurement_update(predicted: Sequence, candidates: Sequence, cfg: EstimatorConfig,
                       subsets: Sequence | None = None, k: int = 0,
                       candidate_empty: Sequence | None = None) -> EstimateCollection:
    """Intersect every predicted member with every non-empty candidate, drop empties, prune."""
    if subsets is None:
        subsets = [SubsetIndex(h, ()) for h in range(1, len(candidates) + 1)]
    if candidate_empty is None:
        candidate_empty = [is_empty(c) for c in candidates]
    members, prov = [], []
    for pred in predicted:
        for sub, cand, empty in zip(subsets, candidates, candidate_empty):
            if empty:
                continue
            x = intersect(pred, cand)
            if not is_empty(x):
                members.append(x)
                prov.append({sub.h})
    if not members:
        raise EmptyEstimateError(
            f"measurement update at k={k} is empty: more than q sensors attacked or an assumption failed"
        )
    coll = EstimateCollection(k, members, prov)
    coll = prune(coll, cfg)
    n_x = coll.members[0].dim
    limited = tuple(limit_constraints(m, cfg.constraint_factor * n_x) for m in coll.members)
    return EstimateCollection(coll.k, limited, coll.provenance)


# ---------------------------------------------------------------- pruning

def _components(n: int, edges: Sequence) -> list:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _merge_once(coll: EstimateCollection) -> EstimateCollection:
    members = coll.members
    edges = [
        (i, j)
        for i, j in combinations(range(len(members)), 2)
        if not is_empty(intersect(members[i], members[j]))
    ]
    new_members, new_prov = [], []
    for group in _components(len(members), edges):
        if len(group) == 1:
            new_members.append(members[group[0]])
        else:
            new_members.append(overbound_union([members[i] for i in group]))
        new_prov.append(frozenset().union(*(coll.provenance[i] for i in group)))
    return EstimateCollection(coll.k, new_members, new_prov)


def _overbound_all(coll: EstimateCollection) -> EstimateCollection:
    if len(coll.members) == 1:
        return coll
    return EstimateCollection(coll.k, (overbound_union(coll.members),),
                              (frozenset().union(*coll.provenance),))


def prune(coll: EstimateCollection, cfg: EstimatorConfig) -> EstimateCollection:
    """Reduce the member count; every policy keeps the union covered."""
    policy = cfg.prune_policy
    if policy is PrunePolicy.NONE:
        return coll
    if policy is PrunePolicy.DROP_EMPTY_AND_CONTAINED:
        keep = [i for i, m in enumerate(coll.members) if not is_empty(m)]
        survivors = []
        for i in keep:
            others = [j for j in keep if j != i and (j in survivors or j > i)]
            if not any(contains_set_sufficient(coll.members[i], coll.members[j]) for j in others):
                survivors.append(i)
        return EstimateCollection(coll.k, [coll.members[i] for i in survivors],
                                  [coll.provenance[i] for i in survivors])
    if policy is PrunePolicy.MERGE_INTERSECTING:
        return _merge_once(coll)
    if policy is PrunePolicy.OVERBOUND_ALL:
        return _overbound_all(coll)
    # budget: merge until stable or within budget, then overbound everything
    while len(coll.members) > cfg.max_members:
        merged = _merge_once(coll)
        if len(merged.members) == len(coll.members):
            return _overbound_all(merged)
        coll = merged
    return coll


# ---------------------------------------------------------------- error bound & detection

def error_bound(coll: EstimateCollection) -> ErrorBound:
    """Center and radius of the box hull of all members: ``||center - x|| <= radius``."""
    box = interval_hull(overbound_union(coll.members))
    return ErrorBound(box.center, box_radius(box))


def detect(consistent: Sequence, predicted: Sequence, det: DetectionState, *, q: int, k: int = 0) -> DetectionState:
    """Accumulate sensors whose consistent set is provably incompatible.

    Sensor ``i`` is flagged when its consistent set misses every predicted
    member, or when it meets fewer than ``p - q - 1`` of the other sensors'
    consistent sets (an honest sensor always meets the other ``>= p - q - 1``
    honest ones, since all of them contain the state). For ``p - q = 2`` the
    second clause reads "misses every other sensor". Flags are never removed.
    """
    p = len(consistent)
    pair_empty = {}
    for i, j in combinations(range(p), 2):
        pair_empty[i, j] = pair_empty[j, i] = is_empty(intersect(consistent[i], consistent[j]))
    detected = set(det.detected)
    evidence = list(det.evidence)
    for i in range(p):
        sid = i + 1
        misses_prediction = all(is_empty(intersect(consistent[i], pred)) for pred in predicted)
        meets = sum(1 for j in range(p) if j != i and not pair_empty[i, j])
        clause = None
        if misses_prediction:
            clause = "prediction"
        elif meets < p - q - 1:
            clause = "pairwise"
        if clause is not None:
            if sid not in detected:
                evidence.append(DetectionEvent(k, sid, clause))
            detected.add(sid)
    return DetectionState(frozenset(detected), tuple(evidence))


# ---------------------------------------------------------------- full step

def step_detailed(coll: EstimateCollection, det: DetectionState, sys: SystemModel,
                  cfg: EstimatorConfig, u, measurements: Sequence) -> StepOutcome:
    if len(measurements) != sys.p:
        raise InvalidInputError(f"expected {sys.p} measurements, got {len(measurements)}")
    k = coll.k + 1
    predicted = time_update(coll, u, sys, cfg.reduction_order)
    consistent = [
        consistent_set(s, y, sys.state_bound * nullspace_scale(s))
        for s, y in zip(sys.sensors, measurements)
    ]
    subsets = enumerate_subsets(sys.p, cfg.q)
    candidates = candidate_intersections(consistent, subsets)
    cand_empty = [is_empty(c) for c in candidates]
    new_coll = measurement_update(predicted, candidates, cfg, subsets, k, cand_empty)
    new_det = detect(consistent, predicted, det, q=cfg.q, k=k)
    bound = error_bound(new_coll)
    return StepOutcome(new_coll, new_det, bound, tuple(predicted), tuple(consistent),
                       tuple(subsets), tuple(candidates), tuple(cand_empty))


def step(coll: EstimateCollection, det: DetectionState, sys: SystemModel, cfg: EstimatorConfig,
         u, measurements: Sequence):
    """One full filter iteration; returns ``(collection, detection, error_bound)``."""
    out = step_detailed(coll, det, sys, cfg, u, measurements)
    return out.collection, out.detection, out.bound
