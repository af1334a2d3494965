"""Problem data and the exact capture simulation for fixed schedules."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

# One frozenset of open location ids per period.
Schedule = tuple[frozenset[int], ...]


class Owner(enum.Enum):
    LEADER = "LeaderOnly"
    FOLLOWER = "FollowerOnly"
    SHARED = "Shared"


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    rewards: tuple[int, ...]
    demands: tuple[tuple[int, ...], ...]
    rankings: tuple[tuple[int, ...], ...]
    rho: Fraction
    leader_budget: int = 1
    follower_budget: int = 1
    name: str = ""
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "rewards", tuple(int(r) for r in self.rewards))
        object.__setattr__(self, "demands", tuple(tuple(int(x) for x in row) for row in self.demands))
        object.__setattr__(self, "rankings", tuple(tuple(int(i) for i in row) for row in self.rankings))
        object.__setattr__(self, "rho", Fraction(self.rho))

    @property
    def n_locations(self) -> int:
        return len(self.rewards)

    @property
    def n_customers(self) -> int:
        return len(self.rankings)

    @property
    def n_periods(self) -> int:
        return len(self.demands[0]) if self.demands else 0

    def with_rho(self, rho) -> "Instance":
        return Instance(self.rewards, self.demands, self.rankings, Fraction(rho),
                        self.leader_budget, self.follower_budget, self.name, self.seed)

    def rank(self, j: int, i: int) -> int | None:
        """Position of location ``i`` in customer ``j``'s list, None if not considered."""
        try:
            return self.rankings[j].index(i)
        except ValueError:
            return None

    def empty_schedule(self) -> Schedule:
        return tuple(frozenset() for _ in range(self.n_periods))


def make_schedule(periods: Iterable[Iterable[int]]) -> Schedule:
    return tuple(frozenset(int(i) for i in p) for p in periods)


def validate_instance(inst: Instance) -> list[str]:
    """Return every violated invariant; an empty list means the instance is valid."""
    errors = []
    n_loc = inst.n_locations
    if n_loc < 1:
        errors.append("locationCount must be positive")
    if inst.n_customers < 1:
        errors.append("customerCount must be positive")
    if len(inst.demands) != inst.n_customers:
        errors.append(f"demands has {len(inst.demands)} rows, expected {inst.n_customers}")
    n_per = inst.n_periods
    if n_per < 1:
        errors.append("periodCount must be positive")
    for j, row in enumerate(inst.demands):
        if len(row) != n_per:
            errors.append(f"customer {j}: demand row has {len(row)} periods, expected {n_per}")
        for t, d in enumerate(row):
            if d < 0:
                errors.append(f"customer {j}: negative demand {d} at period {t + 1}")
    for i, r in enumerate(inst.rewards):
        if r <= 0:
            errors.append(f"location {i}: reward {r} must be positive")
    for j, pref in enumerate(inst.rankings):
        if len(set(pref)) != len(pref):
            errors.append(f"customer {j}: duplicate location id in ranking")
        for i in pref:
            if not 0 <= i < n_loc:
                errors.append(f"customer {j}: invalid location id {i} in ranking")
    if not 0 <= inst.rho <= 1:
        errors.append("splittingFactor out of [0,1]")
    if inst.leader_budget < 1:
        errors.append("leaderBudget must be positive")
    if inst.follower_budget < 1:
        errors.append("followerBudget must be positive")
    return errors


def accumulated_demand(inst: Instance, j: int, last: int, t: int) -> int:
    """Demand of customer ``j`` spawned in periods ``last+1 .. t`` (1-based)."""
    if not 0 <= j < inst.n_customers:
        raise IndexError(f"customer {j} out of range")
    if not (0 <= last < t <= inst.n_periods):
        raise IndexError(f"need 0 <= last < t <= T, got last={last}, t={t}")
    return sum(inst.demands[j][last:t])


def preferred_open_location(inst: Instance, j: int, open_locs) -> int | None:
    for i in inst.rankings[j]:
        if i in open_locs:
            return i
    return None


@dataclass(frozen=True)
class CaptureEvent:
    customer: int
    period: int
    location: int
    owner: Owner
    window_start: int
    captured_demand: int
    leader_share: Fraction
    follower_share: Fraction


@dataclass(frozen=True)
class JointOutcome:
    events: tuple[CaptureEvent, ...]
    leader_profit: Fraction
    follower_profit: Fraction
    unmet_demand_at_end: tuple[int, ...] = field(default=())

    def customer_events(self, j: int) -> list[CaptureEvent]:
        return [e for e in self.events if e.customer == j]


def check_budget(inst: Instance, schedule: Schedule, budget: int, who: str = "schedule") -> None:
    if len(schedule) != inst.n_periods:
        raise BudgetError(f"{who}: {len(schedule)} periods, expected {inst.n_periods}")
    for t, locs in enumerate(schedule, start=1):
        if len(locs) > budget:
            raise BudgetError(f"{who}: {len(locs)} facilities at period {t} exceeds budget {budget}")
        for i in locs:
            if not 0 <= i < inst.n_locations:
                raise BudgetError(f"{who}: invalid location {i} at period {t}")


def simulate_outcome(inst: Instance, y: Schedule, z: Schedule) -> JointOutcome:
    """Play both schedules forward and record every capture with exact shares."""
    check_budget(inst, y, inst.leader_budget, "leader")
    check_budget(inst, z, inst.follower_budget, "follower")
    rho = inst.rho
    events = []
    unmet = []
    leader = Fraction(0)
    follower = Fraction(0)
    for j in range(inst.n_customers):
        last = 0
        for t in range(1, inst.n_periods + 1):
            i_l = preferred_open_location(inst, j, y[t - 1])
            i_f = preferred_open_location(inst, j, z[t - 1])
            if i_l is None and i_f is None:
                continue
            if i_l is None:
                i = i_f
            elif i_f is None:
                i = i_l
            else:
                i = i_l if inst.rank(j, i_l) <= inst.rank(j, i_f) else i_f
            in_y = i in y[t - 1]
            in_z = i in z[t - 1]
            demand = accumulated_demand(inst, j, last, t)
            value = inst.rewards[i] * demand
            if in_y and in_z:
                owner, ls, fs = Owner.SHARED, rho * value, (1 - rho) * value
            elif in_y:
                owner, ls, fs = Owner.LEADER, Fraction(value), Fraction(0)
            else:
                owner, ls, fs = Owner.FOLLOWER, Fraction(0), Fraction(value)
            events.append(CaptureEvent(j, t, i, owner, last, demand, ls, fs))
            leader += ls
            follower += fs
            last = t
        unmet.append(sum(inst.demands[j][last:]))
    return JointOutcome(tuple(events), leader, follower, tuple(unmet))


def schedule_to_lists(s: Schedule) -> list[list[int]]:
    return [sorted(p) for p in s]


def total_demand(inst: Instance, j: int | None = None) -> int:
    if j is None:
        return sum(sum(row) for row in inst.demands)
    return sum(inst.demands[j])


def monopoly_value(inst: Instance, y: Schedule) -> Fraction:
    return simulate_outcome(inst, y, inst.empty_schedule()).leader_profit

