"""Value-function and no-good cuts.

A cut is plain data (:class:`GeneratedCut`). It can be evaluated in closed
form against a leader schedule (search master) or turned into a
:class:`LinearBlock` of rows over named master variables (MILP master).
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import Instance, Owner, Schedule, schedule_to_lists, simulate_outcome
from .space import CompiledInstance


class CutKind(enum.Enum):
    TAILORED = "tailored"
    TIGHTENED = "tightened"
    NOGOOD = "nogood"


class ShareLevel(enum.Enum):
    FULL = "full"
    PARTIAL = "partial"


@dataclass(frozen=True)
class ProfileEntry:
    customer: int
    period: int
    location: int
    window_start: int
    level: ShareLevel


@dataclass(frozen=True)
class GeneratedCut:
    kind: CutKind
    inst: Instance = field(repr=False, compare=False)
    source_leader: Schedule | None
    source_follower: Schedule
    profile: tuple[ProfileEntry, ...] = ()

    def rhs(self, y: Schedule) -> Fraction:
        if self.kind is CutKind.TAILORED:
            return tailored_rhs(self, y)
        if self.kind is CutKind.TIGHTENED:
            return tightened_rhs(self, y)
        raise TypeError("no-good cuts have no right-hand side value")

    def satisfied(self, y: Schedule, z: Schedule, follower_value: Fraction | None = None) -> bool:
        if self.kind is CutKind.NOGOOD:
            return hamming(y, z, self.source_leader, self.source_follower) >= 1
        if follower_value is None:
            follower_value = simulate_outcome(self.inst, y, z).follower_profit
        return follower_value >= self.rhs(y)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "sourceLeader": None if self.source_leader is None else schedule_to_lists(self.source_leader),
            "sourceFollower": schedule_to_lists(self.source_follower),
            "profile": [
                {"customer": e.customer, "period": e.period, "location": e.location,
                 "windowStart": e.window_start, "level": e.level.value}
                for e in self.profile
            ],
        }


def capture_profile(inst: Instance, y: Schedule, z: Schedule) -> tuple[ProfileEntry, ...]:
    """Follower captures of the outcome (y, z): FollowerOnly as Full, Shared as Partial."""
    entries = []
    for e in simulate_outcome(inst, y, z).events:
        if e.owner is Owner.FOLLOWER:
            level = ShareLevel.FULL
        elif e.owner is Owner.SHARED:
            level = ShareLevel.PARTIAL
        else:
            continue
        entries.append(ProfileEntry(e.customer, e.period, e.location, e.window_start, level))
    return tuple(entries)


def tailored_cut(inst: Instance, y_prime: Schedule, z_star: Schedule) -> GeneratedCut:
    return GeneratedCut(CutKind.TAILORED, inst, y_prime, z_star, capture_profile(inst, y_prime, z_star))


def tightened_cut(inst: Instance, z_star: Schedule, y_prime: Schedule | None = None) -> GeneratedCut:
    """Cut built from z_star's captures against an empty leader; y_prime is kept only for bookkeeping."""
    profile = capture_profile(inst, inst.empty_schedule(), z_star)
    return GeneratedCut(CutKind.TIGHTENED, inst, y_prime, z_star, profile)


def no_good(inst: Instance, y_prime: Schedule, z_prime: Schedule) -> GeneratedCut:
    return GeneratedCut(CutKind.NOGOOD, inst, y_prime, z_prime)


def hamming(y: Schedule, z: Schedule, y_ref: Schedule, z_ref: Schedule) -> int:
    dist = 0
    for a, b in zip(y, y_ref):
        dist += len(a ^ b)
    for a, b in zip(z, z_ref):
        dist += len(a ^ b)
    return dist


def _require(cut: GeneratedCut, kind: CutKind):
    if cut.kind is not kind:
        raise TypeError(f"expected a {kind.value} cut, got {cut.kind.value}")


def _share(inst: Instance, level: ShareLevel) -> Fraction:
    return Fraction(1) if level is ShareLevel.FULL else 1 - inst.rho


def _better(inst: Instance, j: int, i: int) -> tuple[int, ...]:
    pref = inst.rankings[j]
    return pref[:pref.index(i)]


def tailored_rhs(cut: GeneratedCut, y: Schedule) -> Fraction:
    _require(cut, CutKind.TAILORED)
    inst = cut.inst
    total = Fraction(0)
    for e in cut.profile:
        j, t, i, last = e.customer, e.period, e.location, e.window_start
        acceptable = set(inst.rankings[j])
        coef = inst.rewards[i] * sum(inst.demands[j][last:t]) * _share(inst, e.level)
        a = sum(len(y[s - 1] & acceptable) for s in range(last + 1, t))
        b = sum(1 for k in _better(inst, j, i) if k in y[t - 1])
        c = 1 if (e.level is ShareLevel.FULL and inst.rho > 0 and i in y[t - 1]) else 0
        total += coef * (1 - a - b - c)
    return total


def interception(inst: Instance, j: int, i: int, s: int, t: int, y: Schedule) -> int:
    """1 when the leader takes demand spawned at s before the follower's capture at t through i."""
    acceptable = set(inst.rankings[j])
    for s2 in range(s, t):
        if y[s2 - 1] & acceptable:
            return 1
    return 1 if any(k in y[t - 1] for k in _better(inst, j, i)) else 0


def tightened_rhs(cut: GeneratedCut, y: Schedule) -> Fraction:
    _require(cut, CutKind.TIGHTENED)
    inst = cut.inst
    total = Fraction(0)
    for e in cut.profile:
        if e.level is not ShareLevel.FULL:
            continue
        j, t, i, last = e.customer, e.period, e.location, e.window_start
        d = inst.demands[j]
        co_located = 1 if i in y[t - 1] else 0
        term = Fraction(sum(d[last:t]))
        for s in range(last + 1, t + 1):
            o = interception(inst, j, i, s, t, y)
            term -= d[s - 1] * o + inst.rho * co_located * d[s - 1] * (1 - o)
        total += inst.rewards[i] * term
    return total


# ---------------------------------------------------------------- vectorised

def rhs_table(cut: GeneratedCut, compiled: CompiledInstance) -> np.ndarray:
    """Right-hand side for every leader schedule, scaled like kernel profits."""
    inst = compiled.inst
    ind = compiled.leader_space.indicator()  # (NY, T, I)
    scale, num = compiled.scale, compiled.rho_num
    ny = ind.shape[0]
    out = np.zeros(ny, dtype=np.int64)
    if cut.kind is CutKind.TAILORED:
        for e in cut.profile:
            j, t, i, last = e.customer, e.period, e.location, e.window_start
            pref = list(inst.rankings[j])
            level = scale if e.level is ShareLevel.FULL else scale - num
            coef = inst.rewards[i] * sum(inst.demands[j][last:t]) * level
            a = ind[:, last:t - 1][:, :, pref].sum(axis=(1, 2)) if t - 1 > last else 0
            better = list(_better(inst, j, i))
            b = ind[:, t - 1, better].sum(axis=1) if better else 0
            c = ind[:, t - 1, i] if (e.level is ShareLevel.FULL and num > 0) else 0
            out += coef * (1 - a - b - c)
        return out
    if cut.kind is CutKind.TIGHTENED:
        served_by: dict[int, np.ndarray] = {}
        for e in cut.profile:
            if e.level is not ShareLevel.FULL:
                continue
            j, t, i, last = e.customer, e.period, e.location, e.window_start
            if j not in served_by:
                served_by[j] = ind[:, :, list(inst.rankings[j])].any(axis=2)  # (NY, T)
            served = served_by[j]
            d = np.asarray(inst.demands[j][last:t], dtype=np.int64)
            better = list(_better(inst, j, i))
            at_t = ind[:, t - 1, better].any(axis=1) if better else np.zeros(ny, dtype=bool)
            co = ind[:, t - 1, i]
            # o[:, k] = 1 when the customer is intercepted somewhere in periods last+k+1 .. t
            window = np.concatenate([served[:, last:t - 1], at_t[:, None]], axis=1)
            o = np.logical_or.accumulate(window[:, ::-1], axis=1)[:, ::-1].astype(np.int64)
            term = int(d.sum()) * scale - (scale * o + num * co[:, None] * (1 - o)) @ d
            out += inst.rewards[i] * term
        return out
    raise TypeError("no-good cuts have no right-hand side table")


# ---------------------------------------------------------------- linear blocks

def y_name(t: int, i: int) -> str:
    return f"y_{t}_{i}"


def z_name(t: int, i: int) -> str:
    return f"z_{t}_{i}"


def u_name(last: int, t: int, i: int, j: int) -> str:
    return f"u_{last}_{t}_{i}_{j}"


def v_name(last: int, t: int, i: int, j: int) -> str:
    return f"v_{last}_{t}_{i}_{j}"


@dataclass(frozen=True)
class VarDecl:
    name: str
    lb: float = 0.0
    ub: float = 1.0
    integer: bool = False


@dataclass(frozen=True)
class Row:
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: str  # "<=", ">=", "=="
    rhs: Fraction
    tag: str = ""

    def value(self, point: dict) -> Fraction:
        return sum((c * Fraction(point.get(n, 0)) for n, c in self.coeffs), Fraction(0))

    def holds(self, point: dict, tol: float = 0) -> bool:
        lhs = self.value(point)
        if self.sense == "<=":
            return lhs <= self.rhs + tol
        if self.sense == ">=":
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol


@dataclass
class LinearBlock:
    variables: list[VarDecl] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)

    def referenced(self) -> set[str]:
        return {n for r in self.rows for n, _ in r.coeffs}

    def count(self, tag: str) -> int:
        return sum(1 for r in self.rows if r.tag == tag)


def _collect(terms) -> tuple[tuple[str, Fraction], ...]:
    acc: dict[str, Fraction] = {}
    for name, c in terms:
        acc[name] = acc.get(name, Fraction(0)) + Fraction(c)
    return tuple((n, c) for n, c in acc.items() if c != 0)


def follower_objective_terms(inst: Instance):
    """(v-variable name, coefficient) pairs of the follower's linear profit."""
    terms = []
    for j, pref in enumerate(inst.rankings):
        d = inst.demands[j]
        for t in range(1, inst.n_periods + 1):
            for last in range(t):
                dem = sum(d[last:t])
                for i in pref:
                    terms.append((v_name(last, t, i, j), inst.rewards[i] * dem))
    return terms


def materialize_tailored(cut: GeneratedCut) -> LinearBlock:
    _require(cut, CutKind.TAILORED)
    inst = cut.inst
    terms = list(follower_objective_terms(inst))
    const = Fraction(0)
    for e in cut.profile:
        j, t, i, last = e.customer, e.period, e.location, e.window_start
        coef = inst.rewards[i] * sum(inst.demands[j][last:t]) * _share(inst, e.level)
        const += coef
        for s in range(last + 1, t):
            for k in inst.rankings[j]:
                terms.append((y_name(s, k), coef))
        for k in _better(inst, j, i):
            terms.append((y_name(t, k), coef))
        if e.level is ShareLevel.FULL and inst.rho > 0:
            terms.append((y_name(t, i), coef))
    return LinearBlock([], [Row(_collect(terms), ">=", const, "value-function")])


def materialize_tightened(cut: GeneratedCut, tag: str = "c") -> LinearBlock:
    """Auxiliary interception variables o, products p = y*(1-o), and the cut row."""
    _require(cut, CutKind.TIGHTENED)
    inst = cut.inst
    block = LinearBlock()
    terms = list(follower_objective_terms(inst))
    const = Fraction(0)
    for e in cut.profile:
        if e.level is not ShareLevel.FULL:
            continue
        j, t, i, last = e.customer, e.period, e.location, e.window_start
        r, d = inst.rewards[i], inst.demands[j]
        const += r * sum(d[last:t])
        better = _better(inst, j, i)
        for s in range(last + 1, t + 1):
            o = f"o_{tag}_{last}_{s}_{t}_{i}_{j}"
            block.variables.append(VarDecl(o))
            bound = [(o, 1)]
            bound += [(y_name(s2, k), -1) for s2 in range(s, t) for k in inst.rankings[j]]
            bound += [(y_name(t, k), -1) for k in better]
            block.rows.append(Row(_collect(bound), "<=", Fraction(0), "interception"))
            terms.append((o, r * d[s - 1]))
            if inst.rho > 0:
                p = f"p_{tag}_{last}_{s}_{t}_{i}_{j}"
                yv = y_name(t, i)
                block.variables.append(VarDecl(p))
                block.rows += [
                    Row(((p, Fraction(1)), (yv, Fraction(-1))), "<=", Fraction(0), "envelope"),
                    Row(((p, Fraction(1)), (o, Fraction(1))), "<=", Fraction(1), "envelope"),
                    Row(((p, Fraction(1)), (yv, Fraction(-1)), (o, Fraction(1))), ">=", Fraction(0), "envelope"),
                    Row(((p, Fraction(1)),), ">=", Fraction(0), "envelope"),
                ]
                terms.append((p, inst.rho * r * d[s - 1]))
    block.rows.insert(0, Row(_collect(terms), ">=", const, "value-function"))
    return block


def materialize_no_good(cut: GeneratedCut) -> LinearBlock:
    _require(cut, CutKind.NOGOOD)
    inst = cut.inst
    terms = []
    const = Fraction(1)
    for schedule, name in ((cut.source_leader, y_name), (cut.source_follower, z_name)):
        for t, i in itertools.product(range(1, inst.n_periods + 1), range(inst.n_locations)):
            if i in schedule[t - 1]:
                terms.append((name(t, i), -1))
                const -= 1
            else:
                terms.append((name(t, i), 1))
    return LinearBlock([], [Row(_collect(terms), ">=", const, "no-good")])


def materialize(cut: GeneratedCut, tag: str = "c") -> LinearBlock:
    if cut.kind is CutKind.TAILORED:
        return materialize_tailored(cut)
    if cut.kind is CutKind.TIGHTENED:
        return materialize_tightened(cut, tag)
    return materialize_no_good(cut)
