"""Sensor attack generators.

Each policy maps ``(k, rng)`` to one injected vector per sensor plus the set of
attacked sensor ids. The estimator never sees the result; only the plant
measurements and the ground-truth trace do.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConfigError


class AttackKind(str, Enum):
    NONE = "none"
    LARGE_BIAS = "large_bias"
    RANDOM_STEALTHY = "random_stealthy"
    ROTATING = "rotating"
    SCRIPTED = "scripted"


@dataclass(frozen=True)
class ScriptEntry:
    k: int
    sensor: int
    vector: tuple


@dataclass(frozen=True)
class AttackPolicy:
    """Attack policy with its parameters already resolved.

    targets
        Attacked sensor ids for ``large_bias`` and ``random_stealthy``. ``None``
        means the first ``q`` sensors; ``"random"`` draws ``q`` sensors per step.
    bias
        Per-component offset for ``large_bias``.
    scale
        Shrink factor in (0, 1] applied to the noise generators for ``random_stealthy``.
    magnitudes
        Per-phase offsets for ``rotating``; phase ``k mod p`` attacks sensor ``1 + (k mod p)``.
    start
        First step at which the attack is active.
    """

    kind: AttackKind
    q: int
    targets: tuple | str | None = None
    bias: float | None = None
    scale: float = 1.0
    magnitudes: tuple | None = None
    script: tuple = field(default=())
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.q < 0:
            raise ConfigError("q must be non-negative", "attack.q")
        if self.kind is AttackKind.LARGE_BIAS and self.bias is None:
            raise ConfigError("large_bias needs a bias (default is 1e3 * M)", "attack.bias")
        if self.kind is AttackKind.RANDOM_STEALTHY and not (0.0 < self.scale <= 1.0):
            raise ConfigError("scale must lie in (0, 1]", "attack.scale")
        if isinstance(self.targets, (list, tuple)):
            object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
            if len(self.targets) > self.q:
                raise ConfigError(f"{len(self.targets)} targets exceed q={self.q}", "attack.targets")
        elif self.targets not in (None, "random"):
            raise ConfigError(f"unknown targets spec {self.targets!r}", "attack.targets")
        if self.kind in (AttackKind.LARGE_BIAS, AttackKind.RANDOM_STEALTHY, AttackKind.ROTATING) and self.q < 1:
            raise ConfigError(f"{self.kind.value} attack needs q >= 1", "attack.q")
        script = tuple(
            e if isinstance(e, ScriptEntry) else ScriptEntry(int(e[0]), int(e[1]), tuple(np.ravel(e[2]).tolist()))
            for e in self.script
        )
        object.__setattr__(self, "script", script)
        per_step: dict[int, set] = {}
        for i, e in enumerate(script):
            per_step.setdefault(e.k, set()).add(e.sensor)
            if len(per_step[e.k]) > self.q:
                raise ConfigError(
                    f"script attacks {len(per_step[e.k])} sensors at k={e.k}, more than q={self.q}",
                    f"attack.script[{i}]",
                )

    def check_sensors(self, sensors: Sequence) -> None:
        """Dimension and id checks that need the sensor list."""
        p = len(sensors)
        ids = self.targets if isinstance(self.targets, tuple) else ()
        for t in ids:
            if not 1 <= t <= p:
                raise ConfigError(f"target sensor {t} not in 1..{p}", "attack.targets")
        for i, e in enumerate(self.script):
            if not 1 <= e.sensor <= p:
                raise ConfigError(f"sensor {e.sensor} not in 1..{p}", f"attack.script[{i}].sensor")
            if len(e.vector) != sensors[e.sensor - 1].num_outputs:
                raise ConfigError(
                    f"vector length {len(e.vector)} != outputs of sensor {e.sensor}",
                    f"attack.script[{i}].vector",
                )
        if self.kind is AttackKind.ROTATING and self.magnitudes is not None and len(self.magnitudes) != p:
            raise ConfigError(f"need one magnitude per sensor ({p})", "attack.magnitudes")


@dataclass(frozen=True, eq=False)
class AttackStep:
    k: int
    vectors: tuple
    attacked: frozenset

    def safe(self, p: int) -> frozenset:
        """The uncompromised sensors ``S_k``."""
        return frozenset(range(1, p + 1)) - self.attacked


def _targets(policy: AttackPolicy, rng: np.random.Generator, p: int) -> tuple:
    if policy.targets == "random":
        return tuple(sorted(int(i) + 1 for i in rng.choice(p, size=policy.q, replace=False)))
    if policy.targets is None:
        return tuple(range(1, policy.q + 1))
    return policy.targets


def evaluate(policy: AttackPolicy, k: int, rng: np.random.Generator, sensors: Sequence) -> AttackStep:
    p = len(sensors)
    vectors = [np.zeros(s.num_outputs) for s in sensors]
    attacked: set = set()
    kind = policy.kind
    active = k >= policy.start
    if kind is AttackKind.NONE or not active:
        pass
    elif kind is AttackKind.LARGE_BIAS:
        for t in _targets(policy, rng, p):
            vectors[t - 1] = np.full(sensors[t - 1].num_outputs, float(policy.bias))
            attacked.add(t)
    elif kind is AttackKind.RANDOM_STEALTHY:
        for t in _targets(policy, rng, p):
            noise = sensors[t - 1].noise
            beta = rng.uniform(-1.0, 1.0, noise.num_generators)
            vectors[t - 1] = noise.center + policy.scale * (noise.generators @ beta)
            attacked.add(t)
    elif kind is AttackKind.ROTATING:
        phase = k % p
        t = phase + 1
        mags = policy.magnitudes if policy.magnitudes is not None else (1.0,) * p
        vectors[t - 1] = np.full(sensors[t - 1].num_outputs, float(mags[phase]))
        attacked.add(t)
    elif kind is AttackKind.SCRIPTED:
        for e in policy.script:
            if e.k == k:
                vectors[e.sensor - 1] = vectors[e.sensor - 1] + np.array(e.vector, dtype=float)
                attacked.add(e.sensor)
    if len(attacked) > policy.q:
        raise ConfigError(f"policy attacked {len(attacked)} sensors at k={k}, more than q={policy.q}")
    return AttackStep(k, tuple(vectors), frozenset(attacked))


def step_rng(seed: int, k: int) -> np.random.Generator:
    """Per-step attack RNG; attack draws depend only on ``(seed, k)``."""
    return np.random.default_rng([seed, k, 0xA77AC])


def from_config(spec: dict, q: int, state_bound: float | None) -> AttackPolicy:
    """Build a policy from its JSON form, filling the large-bias default ``1e3 * M``."""
    spec = dict(spec or {"kind": "none"})
    kind = spec.pop("kind", "none")
    try:
        kind = AttackKind(kind)
    except ValueError:
        raise ConfigError(f"unknown attack kind {kind!r}", "attack.kind") from None
    bias = spec.pop("bias", None)
    if kind is AttackKind.LARGE_BIAS and bias is None:
        if state_bound is None:
            raise ConfigError("large_bias default needs the state bound M", "attack.bias")
        bias = 1e3 * state_bound
    script = [(e["k"], e["sensor"], e["vector"]) for e in spec.pop("script", [])]
    mags = spec.pop("magnitudes", None)
    targets = spec.pop("targets", None)
    if isinstance(targets, list):
        targets = tuple(targets)
    policy = AttackPolicy(
        kind=kind,
        q=q,
        targets=targets,
        bias=bias,
        scale=float(spec.pop("scale", 1.0)),
        magnitudes=tuple(mags) if mags is not None else None,
        script=tuple(script),
        start=int(spec.pop("start", 0)),
    )
    if spec:
        raise ConfigError(f"unknown attack fields {sorted(spec)}", "attack")
    return policy
