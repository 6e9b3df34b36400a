"""Plant description, assumption checks, simulation and the state bound ``M``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import linalg
from .errors import InvalidInputError, InvariantViolation
from .setops import Zonotope, contains_point, interval_hull


@dataclass(frozen=True, eq=False)
class SensorModel:
    """Sensor ``y = C x + v + a`` with ``v`` in the zonotope ``noise``. ``id`` is 1-based."""

    output_matrix: np.ndarray
    noise: Zonotope
    id: int

    def __post_init__(self):
        c = linalg.as_matrix(self.output_matrix, f"C_{self.id}")
        c.setflags(write=False)
        object.__setattr__(self, "output_matrix", c)
        if self.noise.dim != c.shape[0]:
            raise InvalidInputError(
                f"sensor {self.id}: noise dimension {self.noise.dim} != output rows {c.shape[0]}"
            )

    @property
    def num_outputs(self) -> int:
        return self.output_matrix.shape[0]

    @cached_property
    def pinv(self) -> np.ndarray:
        return linalg.pseudo_inverse(self.output_matrix)

    @cached_property
    def kernel(self) -> np.ndarray:
        return linalg.null_space_basis(self.output_matrix)


@dataclass(frozen=True, eq=False)
class SystemModel:
    """``x(k+1) = A x(k) + B u(k) + w(k)`` with per-sensor outputs.

    ``state_bound`` is the constant ``M`` with ``||x(k)||_inf <= M``; ``None``
    until pinned by the user or filled by :func:`estimate_state_bound`.
    """

    a: np.ndarray
    b: np.ndarray
    sensors: tuple
    process_noise: Zonotope
    initial_set: Zonotope
    state_bound: float | None = None

    def __post_init__(self):
        a = linalg.as_matrix(self.a, "A")
        n = a.shape[0]
        if a.shape != (n, n):
            raise InvalidInputError(f"A must be square, got {a.shape}")
        b = np.array(self.b, dtype=float)
        if b.ndim == 1:
            b = b.reshape(n, -1)
        b = linalg.as_matrix(b, "B")
        if b.shape[0] != n:
            raise InvalidInputError(f"B must have {n} rows, got {b.shape[0]}")
        sensors = tuple(self.sensors)
        if not sensors:
            raise InvalidInputError("at least one sensor is required")
        for s in sensors:
            if s.output_matrix.shape[1] != n:
                raise InvalidInputError(f"C_{s.id} must have {n} columns")
        if [s.id for s in sensors] != list(range(1, len(sensors) + 1)):
            raise InvalidInputError("sensor ids must be 1..p in order")
        if self.process_noise.dim != n:
            raise InvalidInputError(f"W must have dimension {n}")
        if self.initial_set.dim != n:
            raise InvalidInputError(f"X_0 must have dimension {n}")
        if self.state_bound is not None and not (np.isfinite(self.state_bound) and self.state_bound > 0):
            raise InvalidInputError("state bound M must be positive and finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sensors", sensors)

    @property
    def n_x(self) -> int:
        return self.a.shape[0]

    @property
    def n_u(self) -> int:
        return self.b.shape[1]

    @property
    def p(self) -> int:
        return len(self.sensors)

    def with_state_bound(self, m: float) -> "SystemModel":
        return SystemModel(self.a, self.b, self.sensors, self.process_noise, self.initial_set, float(m))


@dataclass(frozen=True)
class AssumptionReport:
    observable: tuple  # (sensor id, rank, verdict) per sensor
    spectral_radius: float
    schur: bool
    q: int
    p: int
    attack_bound_ok: bool
    state_bound: float | None
    state_bound_ok: bool
    failures: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = []
        for sid, rank, good in self.observable:
            out.append(f"sensor {sid}: observability rank {rank} -> {'observable' if good else 'NOT observable'}")
        out.append(
            f"spectral radius {self.spectral_radius:.6f} -> {'Schur stable' if self.schur else 'NOT Schur stable'}"
        )
        out.append(f"q = {self.q}, p = {self.p} -> {'q < p' if self.attack_bound_ok else 'q >= p'}")
        if self.state_bound is None:
            out.append("state bound M: not set")
        else:
            out.append(
                f"state bound M = {self.state_bound:.6g} -> {'covers X_0' if self.state_bound_ok else 'does NOT cover X_0'}"
            )
        return out


def _inf_norm_bound(z: Zonotope) -> float:
    """max ||x||_inf over ``z``."""
    box = interval_hull(z)
    return float(np.max(np.maximum(np.abs(box.lower), np.abs(box.upper))))


def validate_assumptions(sys: SystemModel, q: int) -> AssumptionReport:
    failures = []
    observable = []
    for s in sys.sensors:
        rank = linalg.observability_rank(sys.a, s.output_matrix)
        good = rank == sys.n_x
        observable.append((s.id, rank, good))
        if not good:
            failures.append(f"(A, C_{s.id}) is not observable (rank {rank} < {sys.n_x})")
    rho = linalg.spectral_radius_upper(sys.a)
    schur = linalg.is_schur(rho)
    if not schur:
        failures.append(f"A is not Schur stable (spectral radius estimate {rho:.6g})")
    q_ok = 0 <= q < sys.p
    if not q_ok:
        failures.append(f"attack bound requires 0 <= q < p, got q={q}, p={sys.p}")
    m_ok = True
    if sys.state_bound is not None:
        m_ok = _inf_norm_bound(sys.initial_set) <= sys.state_bound
        if not m_ok:
            failures.append(f"X_0 is not inside the state bound box <0, {sys.state_bound:g} I>")
    return AssumptionReport(
        observable=tuple(observable),
        spectral_radius=rho,
        schur=schur,
        q=q,
        p=sys.p,
        attack_bound_ok=q_ok,
        state_bound=sys.state_bound,
        state_bound_ok=m_ok,
        failures=tuple(failures),
    )


def estimate_state_bound(sys: SystemModel, u_bound: float, horizon: int = 200) -> float:
    """Guaranteed bound on ``sup_k ||x(k)||_inf`` for inputs with ``||u||_inf <= u_bound``.

    With ``x(k) = A^k x0 + sum_{j<k} A^j (B u + w)`` and a power ``kappa`` such
    that ``||A^kappa||_inf < 1``, submultiplicativity gives
    ``sup_k ||A^k|| <= max_{r<kappa} ||A^r||`` and
    ``sum_j ||A^j|| <= sum_{r<kappa} ||A^r|| / (1 - ||A^kappa||)``.
    The per-step bounds for ``k <= horizon`` never exceed that tail bound, which
    is what gets returned.
    """
    if u_bound < 0:
        raise InvalidInputError("u_bound must be non-negative")
    a = sys.a
    x0_bound = _inf_norm_bound(sys.initial_set)
    drive = np.linalg.norm(sys.b, np.inf) * u_bound + _inf_norm_bound(sys.process_noise)

    norms = [1.0]
    power = np.eye(sys.n_x)
    kappa = None
    for k in range(1, horizon + 1):
        power = power @ a
        norms.append(float(np.linalg.norm(power, np.inf)))
        if norms[-1] < 1.0:
            kappa = k
            break
    if kappa is None:
        raise InvalidInputError(
            f"no power of A with ||A^k||_inf < 1 found up to k={horizon}; increase the horizon"
        )
    head = norms[:kappa]
    contraction = norms[kappa]
    peak = max(head)
    series = sum(head) / (1.0 - contraction)

    per_step = max(
        norms[k] * x0_bound + sum(norms[:k]) * drive for k in range(len(norms))
    )
    tail = peak * x0_bound + series * drive
    return float(max(per_step, tail))


@dataclass(frozen=True, eq=False)
class PlantState:
    k: int
    x: np.ndarray


def plant_step(sys: SystemModel, state: PlantState, u, w, check: bool = True) -> PlantState:
    """Exact affine update. With ``check`` the noise is tested against W and the
    new state against the state bound (when one is set)."""
    u = np.array(u, dtype=float).reshape(-1)
    w = np.array(w, dtype=float).reshape(-1)
    if check and not contains_point(sys.process_noise, w):
        raise InvariantViolation(f"process noise {w} outside W")
    x = sys.a @ state.x + sys.b @ u + w
    if check and sys.state_bound is not None and np.max(np.abs(x)) > sys.state_bound:
        raise InvariantViolation(
            f"||x({state.k + 1})||_inf = {np.max(np.abs(x)):.6g} exceeds M = {sys.state_bound:.6g}"
        )
    return PlantState(state.k + 1, x)


def measure(sensor: SensorModel, x, v, attack, check: bool = True) -> np.ndarray:
    """``C x + v + a``; the attack is added as-is, without clamping."""
    v = np.array(v, dtype=float).reshape(-1)
    if check and not contains_point(sensor.noise, v):
        raise InvariantViolation(f"measurement noise {v} outside V_{sensor.id}")
    return sensor.output_matrix @ np.asarray(x, dtype=float) + v + np.asarray(attack, dtype=float)


def make_sensors(output_matrices: Sequence, noises: Sequence[Zonotope]) -> tuple:
    return tuple(SensorModel(c, v, i + 1) for i, (c, v) in enumerate(zip(output_matrices, noises)))
