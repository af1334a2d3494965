"""Managerial metrics. All values are exact; ``None`` marks an undefined value."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .follower import FollowerOracle
from .model import Instance, JointOutcome
from .space import CompiledInstance


class Behaviour(enum.Enum):
    OPTIMISTIC = "optimistic"
    PESSIMISTIC = "pessimistic"


@dataclass(frozen=True)
class ScenarioAssumption:
    behaviour: Behaviour
    rho: Fraction

    def __post_init__(self):
        object.__setattr__(self, "behaviour", Behaviour(self.behaviour))
        object.__setattr__(self, "rho", Fraction(self.rho))
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")


def opportunity_gap(optimal, heuristic) -> Fraction | None:
    optimal, heuristic = Fraction(optimal), Fraction(heuristic)
    if optimal == 0:
        return None
    if heuristic < 0 or heuristic > optimal:
        raise ValueError(f"heuristic value {heuristic} outside [0, {optimal}]")
    return 100 * (optimal - heuristic) / optimal


def price_of_competition(coop_joint, comp_leader, comp_follower) -> Fraction | None:
    total = Fraction(comp_leader) + Fraction(comp_follower)
    if total == 0:
        return None
    return Fraction(coop_joint) / total


def _solve_leader(inst: Instance, behaviour: Behaviour):
    from .solver import brute_force_oracle
    return brute_force_oracle(inst, behaviour.value)


def resilience_ratio(inst: Instance, assumption: ScenarioAssumption, truth: ScenarioAssumption,
                     solver: Callable | None = None) -> Fraction | None:
    """Leader profit of the plan made under ``assumption`` when ``truth`` holds, relative to the truth optimum.

    ``solver(inst, behaviour)`` must return an object with ``y_star`` and
    ``leader_profit``; the default is the brute-force oracle.
    """
    solver = solver or _solve_leader
    planned = solver(inst.with_rho(assumption.rho), assumption.behaviour)
    truth_inst = inst.with_rho(truth.rho)
    best = solver(truth_inst, truth.behaviour).leader_profit
    compiled = CompiledInstance(truth_inst)
    rec = FollowerOracle(compiled).reaction(compiled.leader_space.index(planned.y_star))
    realised = compiled.to_fraction(rec.opt_l if truth.behaviour is Behaviour.OPTIMISTIC else rec.pes_l)
    if best == 0:
        return None
    return 100 * realised / best


def service_quality(outcome: JointOutcome, inst: Instance) -> tuple[Fraction, Fraction | None]:
    avg = Fraction(len(outcome.events), inst.n_customers) if inst.n_customers else Fraction(0)
    total = sum(sum(row) for row in inst.demands)
    captured = sum(e.captured_demand for e in outcome.events)
    return avg, (None if total == 0 else Fraction(100 * captured, total))


REPORT_FIELDS = ["instance", "metric", "num", "den", "decimal"]


def report_row(instance: str, metric: str, value: Fraction | None) -> dict:
    if value is None:
        return {"instance": instance, "metric": metric, "num": "NA", "den": "NA", "decimal": "NA"}
    value = Fraction(value)
    return {"instance": instance, "metric": metric, "num": value.numerator, "den": value.denominator,
            "decimal": f"{float(value):.6f}"}


def write_report(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        w.writeheader()
        w.writerows(rows)


def read_report(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
