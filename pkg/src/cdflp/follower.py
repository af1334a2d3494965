"""Follower best response by exhaustive enumeration."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from . import kernels
from .model import Instance, JointOutcome, Schedule, check_budget, simulate_outcome
from .space import CompiledInstance, ScheduleSpace


def enumerate_schedules(inst: Instance, budget: int) -> Iterator[Schedule]:
    """Every budget-feasible schedule exactly once, in enumeration order."""
    return iter(ScheduleSpace(inst.n_locations, inst.n_periods, budget))


@dataclass(frozen=True)
class Reaction:
    z: Schedule
    outcome: JointOutcome


@dataclass(frozen=True)
class ReactionSummary:
    best_follower_value: Fraction
    optimistic: Reaction
    pessimistic: Reaction
    optimal_count: int


@dataclass(frozen=True)
class ReactionRecord:
    """Kernel-level reaction for one leader index (scaled integers, follower indices)."""
    best_f: int
    opt_l: int
    opt_z: int
    pes_l: int
    pes_z: int
    count: int


class FollowerOracle:
    """Memoised exhaustive best responses over one compiled instance."""

    def __init__(self, compiled: CompiledInstance, backend: str | None = None):
        self.compiled = compiled
        self.backend = backend
        self._memo: dict[int, ReactionRecord] = {}
        self._table = None
        self.solves = 0

    def reaction(self, y_index: int) -> ReactionRecord:
        rec = self._memo.get(y_index)
        if rec is None:
            if self._table is not None:
                rec = self._record(self._table, y_index)
            else:
                out = kernels.run("reaction_scan", self.compiled, y_rows=[y_index], backend=self.backend)
                rec = self._record(out, 0)
            self._memo[y_index] = rec
        self.solves += 1
        return rec

    def table(self):
        """(best_f, opt_l, opt_z, pes_l, pes_z, n_opt) arrays for every leader schedule."""
        if self._table is None:
            self._table = kernels.run("reaction_scan", self.compiled, backend=self.backend)
        return self._table

    @staticmethod
    def _record(out, row):
        return ReactionRecord(*(int(a[row]) for a in out))

    def follower_values(self, y_index: int) -> tuple[np.ndarray, np.ndarray]:
        """Scaled (leader, follower) profits of every follower schedule against one leader schedule."""
        lead, foll = kernels.run("pair_profits", self.compiled, y_rows=[y_index], backend=self.backend)
        return lead[0], foll[0]


def best_response(inst: Instance, y: Schedule, compiled: CompiledInstance | None = None) -> ReactionSummary:
    check_budget(inst, y, inst.leader_budget, "leader")
    compiled = compiled or CompiledInstance(inst)
    y_idx = compiled.leader_space.index(y)
    rec = FollowerOracle(compiled).reaction(y_idx)
    fspace = compiled.follower_space
    z_opt = fspace.schedule(rec.opt_z)
    z_pes = fspace.schedule(rec.pes_z)
    return ReactionSummary(
        best_follower_value=compiled.to_fraction(rec.best_f),
        optimistic=Reaction(z_opt, simulate_outcome(inst, y, z_opt)),
        pessimistic=Reaction(z_pes, simulate_outcome(inst, y, z_pes)),
        optimal_count=rec.count,
    )


def follower_optimal_set(inst: Instance, y: Schedule,
                         compiled: CompiledInstance | None = None) -> list[Reaction]:
    check_budget(inst, y, inst.leader_budget, "leader")
    compiled = compiled or CompiledInstance(inst)
    y_idx = compiled.leader_space.index(y)
    _, foll = FollowerOracle(compiled).follower_values(y_idx)
    best = foll.max()
    fspace = compiled.follower_space
    result = []
    for z_idx in np.flatnonzero(foll == best):
        z = fspace.schedule(int(z_idx))
        result.append(Reaction(z, simulate_outcome(inst, y, z)))
    return result
