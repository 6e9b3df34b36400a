"""Closed-loop runs: plant + attacker + estimator, with per-step telemetry."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .. import attacks
from .. import estimator as est
from ..errors import InvariantViolation
from ..model import PlantState, measure, plant_step
from ..setops import contains_point, sample_point
from .config import ScenarioConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StepRecord:
    k: int
    u: np.ndarray
    x_true: np.ndarray
    y: tuple
    attacked: tuple  # one bool per sensor
    member_count: int
    members: tuple
    predicted: tuple
    consistent: tuple
    candidate_empty: tuple
    detected: tuple
    bound_center: np.ndarray
    bound_radius: float
    inclusion: bool
    safe_candidate_inclusion: bool
    millis: float


@dataclass
class RunReport:
    name: str
    seed: int
    policy: str
    attack: str
    q: int
    p: int
    state_bound: float
    records: list = field(default_factory=list)
    error: str | None = None
    config: dict = field(default_factory=dict, repr=False)

    @property
    def max_members(self) -> int:
        return max((r.member_count for r in self.records), default=0)

    @property
    def inclusion_rate(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.inclusion for r in self.records) / len(self.records)

    @property
    def mean_radius(self) -> float:
        return float(np.mean([r.bound_radius for r in self.records])) if self.records else float("nan")

    @property
    def ever_attacked(self) -> frozenset:
        return frozenset(i + 1 for r in self.records for i, a in enumerate(r.attacked) if a)

    @property
    def false_positives(self) -> frozenset:
        """Detected sensors that were never attacked during the run."""
        detected = set(self.records[-1].detected) if self.records else set()
        return frozenset(detected - self.ever_attacked)

    @property
    def detection_monotone(self) -> bool:
        sizes = [len(r.detected) for r in self.records]
        return all(a <= b for a, b in zip(sizes, sizes[1:]))

    @property
    def detection_latency(self) -> int | None:
        """Steps from the first attack to the first flagged attacked sensor."""
        first_attack = next((r.k for r in self.records if any(r.attacked)), None)
        if first_attack is None:
            return None
        for r in self.records:
            if set(r.detected) & self.ever_attacked:
                return r.k - first_attack
        return None

    @property
    def invariants_ok(self) -> bool:
        return (
            self.error is None
            and self.inclusion_rate == 1.0
            and all(r.safe_candidate_inclusion for r in self.records)
            and all(
                np.linalg.norm(r.bound_center - r.x_true) <= r.bound_radius + 1e-7 for r in self.records
            )
            and self.detection_monotone
            and not self.false_positives
        )

    def summary(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "policy": self.policy,
            "attack": self.attack,
            "steps": len(self.records),
            "state_bound": self.state_bound,
            "max_members": self.max_members,
            "inclusion_rate": self.inclusion_rate,
            "detection_latency": self.detection_latency,
            "detected": sorted(self.records[-1].detected) if self.records else [],
            "false_positives": sorted(self.false_positives),
            "mean_radius": self.mean_radius,
            "invariants_ok": self.invariants_ok,
            "error": self.error,
        }


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Simulate ``cfg.steps`` steps from ``cfg.seed``; deterministic for a fixed config and seed.

    Per step ``k``: draw ``u(k-1)`` and ``w(k-1)``, advance the plant, draw the
    sensor noise, apply the attack for step ``k``, then run one estimator step.
    An empty estimate ends the run and is reported in ``error``.
    """
    sys = cfg.system
    rng = np.random.default_rng(cfg.seed)
    report = RunReport(
        name=cfg.name, seed=cfg.seed, policy=cfg.estimator.policy_label, attack=cfg.attack.kind.value,
        q=cfg.q, p=sys.p, state_bound=sys.state_bound, config=cfg.raw,
    )
    state = PlantState(0, sample_point(sys.initial_set, rng))
    coll = est.init(sys, cfg.estimator)
    det = est.DetectionState()
    for k in range(1, cfg.steps + 1):
        u = cfg.input.sample(rng)
        w = sample_point(sys.process_noise, rng)
        state = plant_step(sys, state, u, w)
        noise = [sample_point(s.noise, rng) for s in sys.sensors]
        hit = attacks.evaluate(cfg.attack, k, attacks.step_rng(cfg.seed, k), sys.sensors)
        ys = tuple(measure(s, state.x, v, a) for s, v, a in zip(sys.sensors, noise, hit.vectors))

        t0 = time.perf_counter()
        try:
            out = est.step_detailed(coll, det, sys, cfg.estimator, u, ys)
        except InvariantViolation as exc:
            report.error = f"k={k}: {exc}"
            log.error("run %s seed %d stopped: %s", cfg.name, cfg.seed, report.error)
            break
        millis = 1e3 * (time.perf_counter() - t0)
        coll, det = out.collection, out.detection

        x = state.x
        safe = hit.safe(sys.p)
        inclusion = any(contains_point(m, x) for m in coll.members)
        safe_ok = any(
            contains_point(c, x)
            for sub, c, empty in zip(out.subsets, out.candidates, out.candidate_empty)
            if set(sub.sensors) <= safe and not empty
        )
        if not inclusion:
            log.warning("k=%d: true state outside every member", k)
        report.records.append(StepRecord(
            k=k, u=u, x_true=x.copy(), y=ys,
            attacked=tuple(i + 1 in hit.attacked for i in range(sys.p)),
            member_count=len(coll.members), members=coll.members, predicted=out.predicted,
            consistent=out.consistent, candidate_empty=out.candidate_empty,
            detected=tuple(sorted(det.detected)), bound_center=out.bound.center,
            bound_radius=out.bound.radius, inclusion=inclusion, safe_candidate_inclusion=safe_ok,
            millis=millis,
        ))
    return report
