"""Zonotopes, constrained zonotopes and the set operations the estimator needs.

A zonotope ``<c, G>`` is ``{c + G beta : beta in [-1, 1]^xi}``. A constrained
zonotope adds ``A beta = b``. Empty constrained zonotopes are ordinary values:
they flow through linear maps and Minkowski sums and are only detected by
:func:`is_empty`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence, Union

import numpy as np

from . import lp
from .constants import MEMBERSHIP_TOL
from .errors import EmptySetError, InvalidInputError
from .linalg import as_matrix


def _vector(v, name) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def _generators(g, n, name="generators") -> np.ndarray:
    arr = np.array(g, dtype=float)
    if arr.size == 0:
        return np.zeros((n, 0))
    if arr.ndim == 1:
        arr = arr.reshape(n, -1)
    if arr.ndim != 2 or arr.shape[0] != n:
        raise InvalidInputError(f"{name} must have {n} rows, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Zonotope:
    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = _vector(self.center, "center")
        g = _generators(self.generators, len(c))
        _freeze(c, g)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", g)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def num_generators(self) -> int:
        return self.generators.shape[1]

    @classmethod
    def point(cls, x) -> "Zonotope":
        x = _vector(x, "point")
        return cls(x, np.zeros((len(x), 0)))

    @classmethod
    def box(cls, center, half_widths) -> "Zonotope":
        return cls(center, np.diag(_vector(half_widths, "half_widths")))

    def to_constrained(self) -> "ConstrainedZonotope":
        return ConstrainedZonotope(self.center, self.generators)

    def __repr__(self):
        return f"Zonotope(dim={self.dim}, generators={self.num_generators})"


@dataclass(frozen=True, eq=False)
class ConstrainedZonotope:
    center: np.ndarray
    generators: np.ndarray
    constraint_lhs: np.ndarray | None = None
    constraint_rhs: np.ndarray | None = None

    def __post_init__(self):
        c = _vector(self.center, "center")
        g = _generators(self.generators, len(c))
        xi = g.shape[1]
        if self.constraint_lhs is None:
            a = np.zeros((0, xi))
            b = np.zeros(0)
        else:
            a = np.array(self.constraint_lhs, dtype=float)
            b = _vector(self.constraint_rhs, "constraint_rhs")
            if a.size == 0:
                a = np.zeros((len(b), xi))
            if a.ndim == 1:
                a = a.reshape(len(b), xi)
            if a.shape != (len(b), xi):
                raise InvalidInputError(
                    f"constraint_lhs must be {len(b)}x{xi}, got {a.shape}"
                )
            if not np.all(np.isfinite(a)):
                raise InvalidInputError("constraint_lhs has non-finite entries")
        _freeze(c, g, a, b)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", g)
        object.__setattr__(self, "constraint_lhs", a)
        object.__setattr__(self, "constraint_rhs", b)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def num_generators(self) -> int:
        return self.generators.shape[1]

    @property
    def num_constraints(self) -> int:
        return self.constraint_lhs.shape[0]

    @property
    def is_zonotope(self) -> bool:
        return self.num_constraints == 0

    def to_zonotope(self) -> Zonotope:
        if not self.is_zonotope:
            raise InvalidInputError("set has equality constraints")
        return Zonotope(self.center, self.generators)

    def to_constrained(self) -> "ConstrainedZonotope":
        return self

    def __repr__(self):
        return (
            f"ConstrainedZonotope(dim={self.dim}, generators={self.num_generators}, "
            f"constraints={self.num_constraints})"
        )


AnySet = Union[Zonotope, ConstrainedZonotope]


@dataclass(frozen=True)
class IntervalBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _vector(self.lower, "lower")
        hi = _vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise InvalidInputError("lower/upper dimension mismatch")
        if np.any(lo > hi):
            raise InvalidInputError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def contains(self, other: "IntervalBox", tol: float = MEMBERSHIP_TOL) -> bool:
        return bool(np.all(other.lower >= self.lower - tol) and np.all(other.upper <= self.upper + tol))

    def corners(self) -> np.ndarray:
        return np.array(list(product(*zip(self.lower, self.upper))))

    def to_zonotope(self) -> Zonotope:
        """Box as a zonotope; degenerate (zero-width) axes carry no generator."""
        hw = self.half_widths
        keep = hw > 0
        return Zonotope(self.center, np.diag(hw)[:, keep])


def as_constrained(z: AnySet) -> ConstrainedZonotope:
    return z.to_constrained()


def _same_kind(template: AnySet, c, g, a=None, b=None) -> AnySet:
    if isinstance(template, Zonotope):
        return Zonotope(c, g)
    return ConstrainedZonotope(c, g, a, b)


# ---------------------------------------------------------------- affine ops

def linear_map(l, z: AnySet) -> AnySet:
    mat = as_matrix(l, "map")
    if mat.shape[1] != z.dim:
        raise InvalidInputError(f"map has {mat.shape[1]} columns, set has dimension {z.dim}")
    if isinstance(z, Zonotope):
        return Zonotope(mat @ z.center, mat @ z.generators)
    return ConstrainedZonotope(mat @ z.center, mat @ z.generators, z.constraint_lhs, z.constraint_rhs)


def translate(z: AnySet, offset) -> AnySet:
    offset = _vector(offset, "offset")
    if isinstance(z, Zonotope):
        return Zonotope(z.center + offset, z.generators)
    return ConstrainedZonotope(z.center + offset, z.generators, z.constraint_lhs, z.constraint_rhs)


def minkowski_sum(z1: AnySet, z2: AnySet) -> AnySet:
    """Center sum, generators concatenated, constraints block-diagonal.

    Two plain zonotopes give a zonotope; anything else gives a constrained one.
    """
    if z1.dim != z2.dim:
        raise InvalidInputError(f"dimension mismatch: {z1.dim} vs {z2.dim}")
    c = z1.center + z2.center
    g = np.hstack([z1.generators, z2.generators])
    if isinstance(z1, Zonotope) and isinstance(z2, Zonotope):
        return Zonotope(c, g)
    c1, c2 = as_constrained(z1), as_constrained(z2)
    a = np.block([
        [c1.constraint_lhs, np.zeros((c1.num_constraints, c2.num_generators))],
        [np.zeros((c2.num_constraints, c1.num_generators)), c2.constraint_lhs],
    ])
    b = np.concatenate([c1.constraint_rhs, c2.constraint_rhs])
    return ConstrainedZonotope(c, g, a, b)


def intersect(s1: AnySet, s2: AnySet) -> ConstrainedZonotope:
    """Exact intersection ``<c1, [G1 0], [[A1 0], [0 A2], [G1 -G2]], [b1; b2; c2 - c1]>``."""
    c1, c2 = as_constrained(s1), as_constrained(s2)
    if c1.dim != c2.dim:
        raise InvalidInputError(f"dimension mismatch: {c1.dim} vs {c2.dim}")
    x1, x2 = c1.num_generators, c2.num_generators
    g = np.hstack([c1.generators, np.zeros((c1.dim, x2))])
    a = np.vstack([
        np.hstack([c1.constraint_lhs, np.zeros((c1.num_constraints, x2))]),
        np.hstack([np.zeros((c2.num_constraints, x1)), c2.constraint_lhs]),
        np.hstack([c1.generators, -c2.generators]),
    ])
    b = np.concatenate([c1.constraint_rhs, c2.constraint_rhs, c2.center - c1.center])
    return ConstrainedZonotope(c1.center, g, a, b)


# ---------------------------------------------------------------- LP queries

def is_empty(s: AnySet) -> bool:
    if isinstance(s, Zonotope) or s.is_zonotope:
        return False
    return not lp.feasible_box(s.constraint_lhs, s.constraint_rhs)


def contains_point(s: AnySet, x, tol: float = MEMBERSHIP_TOL) -> bool:
    """Decide ``x in s`` by LP feasibility of ``[G; A] beta = [x - c; b]`` over the unit box.

    ``tol`` only matters for point sets (no generators); otherwise the LP
    feasibility tolerance applies.
    """
    x = _vector(x, "point")
    if len(x) != s.dim:
        raise InvalidInputError(f"point has dimension {len(x)}, set has {s.dim}")
    c = as_constrained(s)
    if c.num_generators == 0:
        return bool(np.all(np.abs(x - c.center) <= tol)) and not is_empty(c)
    a = np.vstack([c.generators, c.constraint_lhs])
    b = np.concatenate([x - c.center, c.constraint_rhs])
    return lp.feasible_box(a, b)


def support(s: AnySet, direction) -> float:
    """``max d^T x`` over the set; raises :class:`EmptySetError` for an empty set."""
    d = _vector(direction, "direction")
    c = as_constrained(s)
    w = c.generators.T @ d
    if c.is_zonotope:
        return float(d @ c.center + np.abs(w).sum())
    n = c.num_generators
    status, beta = lp.solve(c.constraint_lhs, c.constraint_rhs, -w, -np.ones(n), np.ones(n), True)
    if status == lp.INFEASIBLE:
        raise EmptySetError("support function of an empty set")
    if status != lp.OPTIMAL:
        raise ArithmeticError(f"support LP failed ({lp._STATUS_NAMES[status]})")
    return float(d @ c.center + w @ beta)


def interval_hull(s: AnySet) -> IntervalBox:
    c = as_constrained(s)
    if c.is_zonotope:
        r = np.abs(c.generators).sum(axis=1)
        return IntervalBox(c.center - r, c.center + r)
    eye = np.eye(c.dim)
    upper = np.array([support(c, e) for e in eye])
    lower = np.array([-support(c, -e) for e in eye])
    # LP round-off can invert a degenerate (zero-width) axis by ~1e-16
    lower = np.minimum(lower, upper)
    return IntervalBox(lower, upper)


def radius(s: AnySet) -> float:
    """Upper bound on the radius of the smallest ball centred at ``s.center`` that covers ``s``.

    Computed as the distance from the center to the farthest corner of the
    interval hull, which is exact for axis-aligned boxes.
    """
    box = interval_hull(s)
    reach = np.maximum(np.abs(box.lower - s.center), np.abs(box.upper - s.center))
    return float(np.linalg.norm(reach))


def box_radius(box: IntervalBox) -> float:
    return float(np.linalg.norm(box.half_widths))


def contains_set_sufficient(inner: AnySet, outer: AnySet, max_vertex_generators: int = 6) -> bool:
    """One-sided containment certificate: ``True`` guarantees ``inner`` is a subset of ``outer``.

    ``False`` means "not certified". A finite candidate set whose convex hull
    covers ``inner`` is tested for membership in the convex ``outer``: all
    vertices of a plain zonotope with few generators, otherwise the corners of
    the interval hull.
    """
    if inner.dim != outer.dim:
        raise InvalidInputError("dimension mismatch")
    if is_empty(inner):
        return True
    if is_empty(outer):
        return False
    box_in = interval_hull(inner)
    box_out = interval_hull(outer)
    if not box_out.contains(box_in):
        return False
    ci = as_constrained(inner)
    if ci.is_zonotope and ci.num_generators <= max_vertex_generators:
        signs = np.array(list(product((-1.0, 1.0), repeat=ci.num_generators)))
        candidates = ci.center + signs @ ci.generators.T if ci.num_generators else ci.center[None, :]
    else:
        candidates = box_in.corners()
    return all(contains_point(outer, p) for p in candidates)


def overbound_union(sets: Sequence[AnySet]) -> ConstrainedZonotope:
    """Single box-shaped set containing every non-empty input.

    The box is the interval hull of the per-set hulls. Its radius is not minimal.
    """
    if len(sets) == 0:
        raise InvalidInputError("overbound_union needs at least one set")
    boxes = []
    for s in sets:
        try:
            boxes.append(interval_hull(s))
        except EmptySetError:
            continue
    if not boxes:
        raise EmptySetError("all sets are empty")
    lower = np.min([b.lower for b in boxes], axis=0)
    upper = np.max([b.upper for b in boxes], axis=0)
    return IntervalBox(lower, upper).to_zonotope().to_constrained()


def reduce_generators(z: Zonotope, target_order: float) -> Zonotope:
    """Girard-style order reduction: keep the longest generators and box the rest.

    The result has at most ``ceil(target_order * n)`` generators and contains ``z``.
    """
    n = z.dim
    if target_order < 1:
        raise InvalidInputError("target_order must be at least 1")
    budget = math.ceil(target_order * n)
    if z.num_generators <= budget:
        return z
    g = z.generators
    # Girard's ranking: generators with small 1-norm minus inf-norm lose least when boxed
    score = np.abs(g).sum(axis=0) - np.abs(g).max(axis=0)
    keep_count = budget - n
    order = np.argsort(-score, kind="stable")
    keep = np.sort(order[:keep_count])
    rest = np.sort(order[keep_count:])
    boxed = np.diag(np.abs(g[:, rest]).sum(axis=1))
    return Zonotope(z.center, np.hstack([g[:, keep], boxed]))


# ---------------------------------------------------------------- sampling & plotting

def sample_point(z: AnySet, rng: np.random.Generator) -> np.ndarray:
    """``c + G beta`` with ``beta`` uniform on the coefficient box (not volume-uniform)."""
    if isinstance(z, ConstrainedZonotope) and not z.is_zonotope:
        raise InvalidInputError("sample_point needs an unconstrained zonotope; use sample_members")
    beta = rng.uniform(-1.0, 1.0, z.num_generators)
    return z.center + z.generators @ beta


def sample_members(s: AnySet, rng: np.random.Generator, count: int, vertices: int = 12) -> np.ndarray:
    """Points of a (possibly constrained) set: random convex combinations of LP vertices."""
    c = as_constrained(s)
    if c.is_zonotope:
        return np.array([sample_point(c, rng) for _ in range(count)])
    n = c.num_generators
    verts = []
    for _ in range(vertices):
        status, beta = lp.solve(c.constraint_lhs, c.constraint_rhs, rng.normal(size=n),
                                -np.ones(n), np.ones(n), True)
        if status == lp.INFEASIBLE:
            raise EmptySetError("cannot sample an empty set")
        if status == lp.OPTIMAL:
            verts.append(beta)
    verts = np.array(verts)
    weights = rng.dirichlet(np.ones(len(verts)), size=count)
    betas = weights @ verts
    return c.center + betas @ c.generators.T


def support_polygon_2d(s: AnySet, projection, directions: int = 64) -> np.ndarray:
    """Outer polygon of the 2-D projection, vertices in counter-clockwise order.

    Built from ``directions`` equally spaced support lines; consecutive lines
    are intersected to get the vertices.
    """
    proj = as_matrix(projection, "projection")
    if proj.shape != (2, s.dim):
        raise InvalidInputError(f"projection must be 2x{s.dim}, got {proj.shape}")
    if directions < 3:
        raise InvalidInputError("need at least 3 directions")
    flat = linear_map(proj, s)
    angles = 2.0 * np.pi * np.arange(directions) / directions
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    h = np.array([support(flat, d) for d in normals])
    verts = []
    for k in range(directions):
        j = (k + 1) % directions
        mat = np.vstack([normals[k], normals[j]])
        verts.append(np.linalg.solve(mat, [h[k], h[j]]))
    return np.array(verts)
