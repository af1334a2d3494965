"""Exact bilevel solvers, the brute-force oracle and the two benchmark policies."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .cuts import CutKind, GeneratedCut, no_good, tailored_cut, tightened_cut
from .follower import FollowerOracle
from .master import (MasterCandidate, PairTables, Verdict, build_high_point_model, get_backend,
                     model_solve_contract, search_solve)
from .model import Instance, Schedule, schedule_to_lists
from .space import CompiledInstance


class Variant(enum.Enum):
    OPTIMISTIC = "optimistic"
    PESSIMISTIC = "pessimistic"
    COOPERATIVE = "cooperative"
    MONOPOLISTIC = "monopolistic-heuristic"


class CutFamily(enum.Enum):
    TAILORED = "tailored"
    TIGHTENED = "tightened"


class Mode(enum.Enum):
    SEARCH = "search"
    MODEL = "model"


def _enum(cls, value):
    return value if isinstance(value, cls) else cls(str(value).lower())


@dataclass
class SolveStats:
    tailored_cuts: int = 0
    tightened_cuts: int = 0
    no_good_cuts: int = 0
    candidates_examined: int = 0
    follower_solves: int = 0

    def count(self, cut: GeneratedCut) -> None:
        if cut.kind is CutKind.TAILORED:
            self.tailored_cuts += 1
        elif cut.kind is CutKind.TIGHTENED:
            self.tightened_cuts += 1
        else:
            self.no_good_cuts += 1

    def to_json(self) -> dict:
        return {
            "tailoredCuts": self.tailored_cuts,
            "tightenedCuts": self.tightened_cuts,
            "noGoodCuts": self.no_good_cuts,
            "candidatesExamined": self.candidates_examined,
            "followerSolves": self.follower_solves,
        }


@dataclass
class BilevelSolution:
    variant: Variant
    y_star: Schedule
    z_star: Schedule
    leader_profit: Fraction
    follower_profit: Fraction
    stats: SolveStats = field(default_factory=SolveStats)
    proof_of_optimality: bool = True
    cut_family: CutFamily | None = None
    mode: Mode | None = None
    trace: list[GeneratedCut] = field(default_factory=list, repr=False)
    # (y', z', pi_F(y', z')) of the rejected candidate behind each trace entry
    cut_sources: list[tuple[Schedule, Schedule, Fraction]] = field(default_factory=list, repr=False)

    def to_json(self, include_trace: bool = False) -> dict:
        out = {
            "variant": self.variant.value,
            "cutFamily": None if self.cut_family is None else self.cut_family.value,
            "mode": None if self.mode is None else self.mode.value,
            "yStar": schedule_to_lists(self.y_star),
            "zStar": schedule_to_lists(self.z_star),
            "leaderProfit": fraction_json(self.leader_profit),
            "followerProfit": fraction_json(self.follower_profit),
            "stats": self.stats.to_json(),
            "proofOfOptimality": self.proof_of_optimality,
        }
        if include_trace:
            out["trace"] = [c.to_json() for c in self.trace]
        return out


def fraction_json(x: Fraction) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


class _Acceptor:
    """Decides master candidates against exact follower best responses."""

    def __init__(self, compiled: CompiledInstance, variant: Variant, family: CutFamily,
                 both_cuts: bool, stats: SolveStats, trace: list, backend: str | None, sources: list):
        self.compiled = compiled
        self.inst = compiled.inst
        self.variant = variant
        self.family = family
        self.both_cuts = both_cuts
        self.stats = stats
        self.trace = trace
        self.sources = sources
        self.oracle = FollowerOracle(compiled, backend)

    def _cuts_for(self, y: Schedule, z_star: Schedule) -> list[GeneratedCut]:
        if self.both_cuts:
            return [tailored_cut(self.inst, y, z_star), tightened_cut(self.inst, z_star, y)]
        if self.family is CutFamily.TAILORED:
            return [tailored_cut(self.inst, y, z_star)]
        return [tightened_cut(self.inst, z_star, y)]

    def __call__(self, cand: MasterCandidate) -> Verdict:
        self.stats.candidates_examined += 1
        y_idx = cand.y_index if cand.y_index is not None else self.compiled.leader_space.index(cand.y)
        rec = self.oracle.reaction(y_idx)
        self.stats.follower_solves = self.oracle.solves
        scaled_f = self.compiled.to_scaled(cand.follower_value)
        if scaled_f == rec.best_f:
            if self.variant is Variant.OPTIMISTIC:
                return Verdict(True)
            if self.compiled.to_scaled(cand.leader_value) == rec.pes_l:
                return Verdict(True)
            cuts = [no_good(self.inst, cand.y, cand.z)]
        elif scaled_f > rec.best_f:
            raise AssertionError("master candidate beats the follower's exact best response")
        else:
            z_star = self.compiled.follower_space.schedule(rec.opt_z)
            cuts = self._cuts_for(cand.y, z_star)
        for cut in cuts:
            self.stats.count(cut)
        self.trace.extend(cuts)
        self.sources.extend([(cand.y, cand.z, cand.follower_value)] * len(cuts))
        return Verdict(False, tuple(cuts))


def _solve(inst: Instance, variant: Variant, cut_family, mode, both_cuts: bool = False,
           cap: int | None = None, backend: str | None = None, milp_backend: str | None = None,
           candidate_budget: int | None = None) -> BilevelSolution:
    family = _enum(CutFamily, cut_family)
    mode = _enum(Mode, mode)
    compiled = CompiledInstance(inst, cap)
    stats = SolveStats()
    trace: list[GeneratedCut] = []
    sources: list = []
    acceptor = _Acceptor(compiled, variant, family, both_cuts, stats, trace, backend, sources)
    proof = True
    if mode is Mode.SEARCH:
        tables = PairTables(compiled, backend)
        result = search_solve(inst, (), acceptor, compiled=compiled, tables=tables,
                              candidate_budget=candidate_budget)
        cand = result.candidate
        if cand is None:
            # only reachable through the candidate budget; (empty, best response) is always feasible
            proof = False
            y = inst.empty_schedule()
            rec = acceptor.oracle.reaction(0)
            z_idx = rec.opt_z if variant is Variant.OPTIMISTIC else rec.pes_z
            lead, foll = kernels.run("pair_profits", compiled, y_rows=[0], z_rows=[z_idx], backend=backend)
            cand = MasterCandidate(y, compiled.follower_space.schedule(z_idx),
                                   compiled.to_fraction(lead[0, 0]), compiled.to_fraction(foll[0, 0]))
    else:
        model = build_high_point_model(inst)
        engine = get_backend(milp_backend, inst)
        cand = model_solve_contract(model, acceptor, engine)
    return BilevelSolution(variant, cand.y, cand.z, cand.leader_value, cand.follower_value, stats, proof,
                           family, mode, trace, sources)


def solve_optimistic(inst: Instance, cut_family="tightened", mode="search", both_cuts: bool = False,
                     **kw) -> BilevelSolution:
    return _solve(inst, Variant.OPTIMISTIC, cut_family, mode, both_cuts, **kw)


def solve_pessimistic(inst: Instance, cut_family="tightened", mode="search", both_cuts: bool = False,
                      **kw) -> BilevelSolution:
    return _solve(inst, Variant.PESSIMISTIC, cut_family, mode, both_cuts, **kw)


def solve(inst: Instance, variant="optimistic", cut_family="tightened", mode="search", **kw) -> BilevelSolution:
    variant = _enum(Variant, variant)
    if variant is Variant.OPTIMISTIC:
        return solve_optimistic(inst, cut_family, mode, **kw)
    if variant is Variant.PESSIMISTIC:
        return solve_pessimistic(inst, cut_family, mode, **kw)
    raise ValueError(f"{variant.value} is not a bilevel variant")


def _realize(compiled: CompiledInstance, y_idx: int, z_idx: int, backend=None) -> tuple[Fraction, Fraction]:
    lead, foll = kernels.run("pair_profits", compiled, y_rows=[y_idx], z_rows=[z_idx], backend=backend)
    return compiled.to_fraction(lead[0, 0]), compiled.to_fraction(foll[0, 0])


def brute_force_oracle(inst: Instance, variant="optimistic", cap: int | None = None,
                       backend: str | None = None, compiled: CompiledInstance | None = None) -> BilevelSolution:
    """Enumerate every leader schedule against its exact reaction."""
    variant = _enum(Variant, variant)
    compiled = compiled or CompiledInstance(inst, cap)
    oracle = FollowerOracle(compiled, backend)
    best_f, opt_l, opt_z, pes_l, pes_z, _ = oracle.table()
    values, reply = (opt_l, opt_z) if variant is Variant.OPTIMISTIC else (pes_l, pes_z)
    y_idx = int(np.argmax(values))
    z_idx = int(reply[y_idx])
    lead, foll = _realize(compiled, y_idx, z_idx, backend)
    stats = SolveStats(candidates_examined=compiled.leader_space.size, follower_solves=compiled.leader_space.size)
    return BilevelSolution(variant, compiled.leader_space.schedule(y_idx), compiled.follower_space.schedule(z_idx),
                           lead, foll, stats)


def solve_cooperative(inst: Instance, cap: int | None = None, backend: str | None = None) -> BilevelSolution:
    compiled = CompiledInstance(inst, cap)
    best, arg = kernels.run("joint_scan", compiled, backend=backend)
    y_idx = int(np.argmax(best))
    z_idx = int(arg[y_idx])
    lead, foll = _realize(compiled, y_idx, z_idx, backend)
    stats = SolveStats(candidates_examined=compiled.leader_space.size * compiled.follower_space.size)
    return BilevelSolution(Variant.COOPERATIVE, compiled.leader_space.schedule(y_idx),
                           compiled.follower_space.schedule(z_idx), lead, foll, stats)


def monopolistic_heuristic(inst: Instance, truth="optimistic", cap: int | None = None,
                           backend: str | None = None) -> BilevelSolution:
    """Plan as if the follower stays out, then face its true reaction."""
    truth = _enum(Variant, truth)
    compiled = CompiledInstance(inst, cap)
    alone, _ = kernels.run("pair_profits", compiled, z_rows=[0], backend=backend)
    y_idx = int(np.argmax(alone[:, 0]))
    rec = FollowerOracle(compiled, backend).reaction(y_idx)
    z_idx = rec.opt_z if truth is Variant.OPTIMISTIC else rec.pes_z
    lead, foll = _realize(compiled, y_idx, z_idx, backend)
    stats = SolveStats(candidates_examined=compiled.leader_space.size, follower_solves=1)
    return BilevelSolution(Variant.MONOPOLISTIC, compiled.leader_space.schedule(y_idx),
                           compiled.follower_space.schedule(z_idx), lead, foll, stats, proof_of_optimality=False)
