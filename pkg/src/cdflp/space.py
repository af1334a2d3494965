"""Schedule enumeration and the dense integer arrays the kernels operate on.

Schedules are indexed in enumeration order: period-major (period 1 varies
slowest); inside a period the option list is the empty set, then singletons,
then pairs, ... each group in sorted-id order.
"""
from __future__ import annotations

import itertools
import os
from fractions import Fraction
from functools import cached_property

import numpy as np

from .model import Instance, Schedule

DEFAULT_CAP = 20000
INT_LIMIT = 2 ** 62


class CapExceeded(RuntimeError):
    pass


def default_cap() -> int:
    return int(os.environ.get("CDFLP_CAP", DEFAULT_CAP))


def period_options(n_locations: int, budget: int) -> list[frozenset[int]]:
    opts = []
    for size in range(min(budget, n_locations) + 1):
        opts.extend(frozenset(c) for c in itertools.combinations(range(n_locations), size))
    return opts


def count_schedules(n_locations: int, n_periods: int, budget: int) -> int:
    return len(period_options(n_locations, budget)) ** n_periods


class ScheduleSpace:
    """All budget-feasible schedules of one player, with index <-> schedule maps."""

    def __init__(self, n_locations: int, n_periods: int, budget: int):
        if budget < 1:
            raise ValueError("budget must be >= 1")
        self.n_locations = n_locations
        self.n_periods = n_periods
        self.budget = budget
        self.options = period_options(n_locations, budget)
        self._option_index = {o: k for k, o in enumerate(self.options)}
        self.size = len(self.options) ** n_periods

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        for combo in itertools.product(self.options, repeat=self.n_periods):
            yield tuple(combo)

    @cached_property
    def option_matrix(self) -> np.ndarray:
        """(size, T) option index per period, rows in enumeration order."""
        n_opt = len(self.options)
        idx = np.arange(self.size, dtype=np.int64)
        cols = []
        for t in range(self.n_periods):
            stride = n_opt ** (self.n_periods - 1 - t)
            cols.append((idx // stride) % n_opt)
        return np.stack(cols, axis=1) if cols else np.zeros((self.size, 0), dtype=np.int64)

    @cached_property
    def contains(self) -> np.ndarray:
        """(n_options, I) 0/1 membership."""
        m = np.zeros((len(self.options), self.n_locations), dtype=np.int8)
        for k, o in enumerate(self.options):
            for i in o:
                m[k, i] = 1
        return m

    def index(self, schedule: Schedule) -> int:
        n_opt = len(self.options)
        k = 0
        for locs in schedule:
            k = k * n_opt + self._option_index[frozenset(locs)]
        return k

    def schedule(self, index: int) -> Schedule:
        return tuple(self.options[o] for o in self.option_matrix[index])

    @cached_property
    def _indicator(self) -> np.ndarray:
        arr = self.contains[self.option_matrix].astype(np.int64)
        arr.flags.writeable = False
        return arr

    def indicator(self) -> np.ndarray:
        """(size, T, I) 0/1 array y[t][i] for every schedule (read-only, cached)."""
        return self._indicator


class CompiledInstance:
    """Integer arrays describing an instance, scaled so all profits are exact ints.

    Every profit is multiplied by ``scale`` (the denominator of rho): a full
    capture is worth ``r*D*scale``, a shared one ``r*D*rho_num`` for the
    leader and ``r*D*(scale-rho_num)`` for the follower.
    """

    def __init__(self, inst: Instance, cap: int | None = None):
        self.inst = inst
        cap = default_cap() if cap is None else cap
        self.leader_space = ScheduleSpace(inst.n_locations, inst.n_periods, inst.leader_budget)
        self.follower_space = ScheduleSpace(inst.n_locations, inst.n_periods, inst.follower_budget)
        for who, space in (("leader", self.leader_space), ("follower", self.follower_space)):
            if space.size > cap:
                raise CapExceeded(f"{who} has {space.size} schedules, cap is {cap}")
        rho = Fraction(inst.rho)
        self.rho_num = rho.numerator
        self.scale = rho.denominator
        n_cust, n_per = inst.n_customers, inst.n_periods
        width = max((len(p) for p in inst.rankings), default=0)
        # rank positions >= width mean "not served by this option"
        self.none = width
        self.reward_at = np.zeros((n_cust, width + 1), dtype=np.int64)
        self.rank_of = np.full((n_cust, inst.n_locations), width, dtype=np.int64)
        for j, pref in enumerate(inst.rankings):
            for p, i in enumerate(pref):
                self.reward_at[j, p] = inst.rewards[i]
                self.rank_of[j, i] = p
        self.cum = np.zeros((n_cust, n_per + 1), dtype=np.int64)
        for j in range(n_cust):
            self.cum[j, 1:] = np.cumsum(inst.demands[j])
        bound = sum(max((inst.rewards[i] for i in pref), default=0) * sum(inst.demands[j])
                    for j, pref in enumerate(inst.rankings)) * self.scale * 2
        if bound >= INT_LIMIT:
            raise OverflowError("instance profits exceed the 64-bit exact-integer range")

    def _best_rank(self, space: ScheduleSpace) -> np.ndarray:
        # (n_options, J): best rank position among open locations
        ranks = np.where(space.contains[:, None, :] == 1, self.rank_of[None, :, :], self.none)
        return ranks.min(axis=2) if self.inst.n_locations else np.full((len(space.options), 0), self.none)

    @cached_property
    def leader_rank(self) -> np.ndarray:
        """(NY, J, T) best rank position offered by each leader schedule."""
        best = self._best_rank(self.leader_space)
        return np.ascontiguousarray(best[self.leader_space.option_matrix].transpose(0, 2, 1))

    @cached_property
    def follower_rank(self) -> np.ndarray:
        best = self._best_rank(self.follower_space)
        return np.ascontiguousarray(best[self.follower_space.option_matrix].transpose(0, 2, 1))

    def to_fraction(self, scaled: int) -> Fraction:
        return Fraction(int(scaled), self.scale)

    def to_scaled(self, value: Fraction) -> int:
        v = Fraction(value) * self.scale
        if v.denominator != 1:
            raise ValueError(f"{value} is not representable at scale {self.scale}")
        return int(v.numerator)
