"""Master problems over the high-point relaxation.

Two interchangeable masters:

* :func:`search_solve` enumerates every (y, z) pair in descending order of
  leader profit and skips pairs removed by installed cuts. The first pair the
  acceptor accepts is optimal.
* :class:`ModelBackend` describes how an external MILP engine hosts the same
  acceptor loop on :class:`AbstractModel`. ``scipy`` (HiGHS) is registered
  when available; it re-solves after each batch of lazy rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Protocol

import numpy as np

from . import kernels
from .cuts import (CutKind, GeneratedCut, LinearBlock, Row, VarDecl, materialize, rhs_table, u_name,
                   v_name, y_name, z_name)
from .model import Instance, Schedule, simulate_outcome
from .space import CapExceeded, CompiledInstance

DEFAULT_PAIR_CAP = 4_000_000
TOLERANCE = 1e-6


class BackendUnavailable(RuntimeError):
    pass


class ToleranceViolation(RuntimeError):
    pass


# ---------------------------------------------------------------- abstract model

@dataclass
class AbstractModel:
    variables: list[VarDecl] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    objective: dict[str, Fraction] = field(default_factory=dict)
    sense: str = "max"

    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def add_block(self, block: LinearBlock) -> None:
        known = set(self.names())
        for var in block.variables:
            if var.name not in known:
                self.variables.append(var)
                known.add(var.name)
        missing = block.referenced() - known
        if missing:
            raise KeyError(f"block references undeclared variables: {sorted(missing)[:5]}")
        self.rows.extend(block.rows)

    def count(self, prefix: str) -> int:
        return sum(1 for v in self.variables if v.name.startswith(prefix + "_"))

    def rows_tagged(self, tag: str) -> list[Row]:
        return [r for r in self.rows if r.tag == tag]

    def to_lp(self) -> str:
        """CPLEX LP-format text."""
        def expr(coeffs):
            parts = []
            for name, c in coeffs:
                c = float(c)
                sign = "-" if c < 0 else "+"
                parts.append(f"{sign} {abs(c):.12g} {name}")
            text = " ".join(parts) if parts else "0 y_dummy"
            return text[2:] if text.startswith("+ ") else text

        out = ["\\ high-point relaxation", "Maximize" if self.sense == "max" else "Minimize"]
        out.append(" obj: " + expr(sorted(self.objective.items())))
        out.append("Subject To")
        for k, r in enumerate(self.rows):
            op = {"<=": "<=", ">=": ">=", "==": "="}[r.sense]
            out.append(f" {r.tag.replace('-', '_') or 'r'}_{k}: {expr(r.coeffs)} {op} {float(r.rhs):.12g}")
        out.append("Bounds")
        for v in self.variables:
            out.append(f" {v.lb:g} <= {v.name} <= {v.ub:g}")
        ints = [v.name for v in self.variables if v.integer]
        if ints:
            out.append("Binaries")
            for k in range(0, len(ints), 8):
                out.append(" " + " ".join(ints[k:k + 8]))
        out.append("End")
        return "\n".join(out) + "\n"


def _row(terms, sense, rhs, tag) -> Row:
    acc: dict[str, Fraction] = {}
    for n, c in terms:
        acc[n] = acc.get(n, Fraction(0)) + Fraction(c)
    return Row(tuple((n, c) for n, c in acc.items() if c != 0), sense, Fraction(rhs), tag)


def end_name(last: int, j: int) -> str:
    return f"e_{last}_{j}"


def w_name(t: int, i: int) -> str:
    return f"w_{t}_{i}"


def build_high_point_model(inst: Instance) -> AbstractModel:
    """Capture-flow model with follower optimality dropped."""
    T, I = inst.n_periods, inst.n_locations
    rho = inst.rho
    m = AbstractModel()
    periods = range(1, T + 1)
    for prefix in (y_name, z_name):
        for t in periods:
            for i in range(I):
                m.variables.append(VarDecl(prefix(t, i), 0, 1, True))
    for t in periods:
        for i in range(I):
            m.variables.append(VarDecl(w_name(t, i)))
    for j, pref in enumerate(inst.rankings):
        for t in periods:
            for last in range(t):
                for i in pref:
                    m.variables.append(VarDecl(u_name(last, t, i, j)))
                    m.variables.append(VarDecl(v_name(last, t, i, j)))
        for last in range(T + 1):
            m.variables.append(VarDecl(end_name(last, j)))

    for j, pref in enumerate(inst.rankings):
        d = inst.demands[j]
        for t in periods:
            for last in range(t):
                dem = sum(d[last:t])
                for i in pref:
                    m.objective[u_name(last, t, i, j)] = Fraction(inst.rewards[i] * dem)

    for t in periods:
        m.rows.append(_row([(y_name(t, i), 1) for i in range(I)], "<=", inst.leader_budget, "budget"))
        m.rows.append(_row([(z_name(t, i), 1) for i in range(I)], "<=", inst.follower_budget, "budget"))
        for i in range(I):
            w, y, z = w_name(t, i), y_name(t, i), z_name(t, i)
            m.rows += [
                _row([(w, 1), (y, -1)], "<=", 0, "mccormick"),
                _row([(w, 1), (z, -1)], "<=", 0, "mccormick"),
                _row([(w, 1), (y, -1), (z, -1)], ">=", -1, "mccormick"),
                _row([(w, 1)], ">=", 0, "mccormick"),
            ]

    for j, pref in enumerate(inst.rankings):
        for t in periods:
            windows = range(t)
            for pos, i in enumerate(pref):
                y, z, w = y_name(t, i), z_name(t, i), w_name(t, i)
                # capture only through open facilities, split on co-location
                m.rows.append(_row([(u_name(l, t, i, j), 1) for l in windows] + [(y, -1), (w, 1 - rho)],
                                   "<=", 0, "open-leader"))
                m.rows.append(_row([(v_name(l, t, i, j), 1) for l in windows] + [(z, -1), (w, rho)],
                                   "<=", 0, "open-follower"))
                # an open acceptable facility forces a capture at least as preferred
                at_least = [(n(l, t, k, j), -1) for l in windows for k in pref[:pos + 1] for n in (u_name, v_name)]
                m.rows.append(_row([(y, 1)] + at_least, "<=", 0, "must-serve"))
                m.rows.append(_row([(z, 1)] + at_least, "<=", 0, "must-serve"))
                # nothing captured through a less preferred location
                worse = pref[pos + 1:]
                for owner, n in (("u", u_name), ("v", v_name)):
                    lower = [(n(l, t, k, j), 1) for l in windows for k in worse]
                    m.rows.append(_row([(y, 1)] + lower, "<=", 1, "preference"))
                    m.rows.append(_row([(z, 1)] + lower, "<=", 1, "preference"))
        # flow over capture windows: source 0, sink T+1 (the e-variables)
        out0 = [(n(0, t, i, j), 1) for t in periods for i in pref for n in (u_name, v_name)]
        m.rows.append(_row(out0 + [(end_name(0, j), 1)], "==", 1, "flow"))
        for t in periods:
            inflow = [(n(l, t, i, j), 1) for l in range(t) for i in pref for n in (u_name, v_name)]
            outflow = [(n(t, s, i, j), -1) for s in range(t + 1, T + 1) for i in pref for n in (u_name, v_name)]
            m.rows.append(_row(inflow + outflow + [(end_name(t, j), -1)], "==", 0, "flow"))
    return m


# ---------------------------------------------------------------- candidates

@dataclass(frozen=True)
class MasterCandidate:
    y: Schedule
    z: Schedule
    leader_value: Fraction
    follower_value: Fraction
    status: str = "integer-feasible"
    y_index: int | None = None
    z_index: int | None = None


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    cuts: tuple[GeneratedCut, ...] = ()


Acceptor = Callable[[MasterCandidate], Verdict]


@dataclass
class SearchResult:
    candidate: MasterCandidate | None
    examined: int
    visited: set = field(default_factory=set, repr=False)

    @property
    def infeasible(self) -> bool:
        return self.candidate is None


class PairTables:
    """Scaled leader/follower profits of every (y, z) pair."""

    def __init__(self, compiled: CompiledInstance, backend: str | None = None, pair_cap: int = DEFAULT_PAIR_CAP):
        n_pairs = compiled.leader_space.size * compiled.follower_space.size
        if n_pairs > pair_cap:
            raise CapExceeded(f"{n_pairs} schedule pairs exceed the search cap {pair_cap}")
        self.compiled = compiled
        self.leader, self.follower = kernels.run("pair_profits", compiled, backend=backend)

    def order(self) -> np.ndarray:
        """Flat pair indices by descending leader profit, then y index, then z index."""
        flat = -self.leader.ravel()
        return np.argsort(flat, kind="stable")


class CutPool:
    """Installed cuts in the form the search master checks quickly."""

    def __init__(self, compiled: CompiledInstance, follower_table: np.ndarray | None = None):
        self.compiled = compiled
        self.follower_table = follower_table
        self.max_rhs = np.full(compiled.leader_space.size, np.iinfo(np.int64).min, dtype=np.int64)
        self.banned: set[tuple[int, int]] = set()
        self.cuts: list[GeneratedCut] = []

    def install(self, cut: GeneratedCut) -> None:
        self.cuts.append(cut)
        if cut.kind is CutKind.NOGOOD:
            self.banned.add((self.compiled.leader_space.index(cut.source_leader),
                             self.compiled.follower_space.index(cut.source_follower)))
        else:
            np.maximum(self.max_rhs, self.table_for(cut), out=self.max_rhs)

    def table_for(self, cut: GeneratedCut) -> np.ndarray:
        # a tightened cut built from (empty, z*) equals pi_F(y, z*) for every y,
        # which is one column of the precomputed follower table
        if cut.kind is CutKind.TIGHTENED and self.follower_table is not None:
            return self.follower_table[:, self.compiled.follower_space.index(cut.source_follower)]
        return rhs_table(cut, self.compiled)

    def allows(self, y_idx: int, z_idx: int, follower_scaled: int) -> bool:
        if follower_scaled < self.max_rhs[y_idx]:
            return False
        return (y_idx, z_idx) not in self.banned


def search_solve(inst: Instance, cuts: Iterable[GeneratedCut], acceptor: Acceptor,
                 compiled: CompiledInstance | None = None, tables: PairTables | None = None,
                 backend: str | None = None, candidate_budget: int | None = None) -> SearchResult:
    """Best-first enumeration of the high-point relaxation with lazy cuts."""
    compiled = compiled or CompiledInstance(inst)
    tables = tables or PairTables(compiled, backend)
    pool = CutPool(compiled, tables.follower)
    for cut in cuts:
        pool.install(cut)
    nz = compiled.follower_space.size
    lead, foll = tables.leader.ravel(), tables.follower.ravel()
    visited: set[tuple[int, int]] = set()
    examined = 0
    for flat in tables.order():
        y_idx, z_idx = divmod(int(flat), nz)
        if not pool.allows(y_idx, z_idx, int(foll[flat])):
            continue
        if (y_idx, z_idx) in visited:
            raise AssertionError(f"pair {(y_idx, z_idx)} visited twice")
        visited.add((y_idx, z_idx))
        examined += 1
        cand = MasterCandidate(
            compiled.leader_space.schedule(y_idx), compiled.follower_space.schedule(z_idx),
            compiled.to_fraction(lead[flat]), compiled.to_fraction(foll[flat]),
            y_index=y_idx, z_index=z_idx)
        verdict = acceptor(cand)
        if verdict.accepted:
            return SearchResult(cand, examined, visited)
        for cut in verdict.cuts:
            pool.install(cut)
        if candidate_budget is not None and examined >= candidate_budget:
            break
    return SearchResult(None, examined, visited)


# ---------------------------------------------------------------- model back-ends

class ModelBackend(Protocol):
    """Contract for a MILP engine hosting the lazy-cut loop.

    ``solve`` must (a) optimise ``model`` to proven optimality over the rows
    installed so far, (b) pass every integer-feasible incumbent to ``hook``
    before accepting it, (c) add the rows of every returned block and restore
    optimality, (d) work to ``TOLERANCE`` and let the hook confirm values
    exactly with the simulator.
    """

    name: str

    def solve(self, model: AbstractModel, hook: Callable[[MasterCandidate], Verdict | None],
              block_for: Callable[[GeneratedCut], LinearBlock]) -> MasterCandidate: ...


_BACKENDS: dict[str, Callable[[Instance], ModelBackend]] = {}


def register_backend(name: str, factory: Callable[[Instance], ModelBackend]) -> None:
    _BACKENDS[name] = factory


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None, inst: Instance) -> ModelBackend:
    if not _BACKENDS:
        raise BackendUnavailable("no MILP back-end is registered")
    if name is None:
        name = available_backends()[0]
    if name not in _BACKENDS:
        raise BackendUnavailable(f"MILP back-end {name!r} is not registered")
    return _BACKENDS[name](inst)


def read_schedule(inst: Instance, values: dict, prefix: Callable[[int, int], str]) -> Schedule:
    return tuple(frozenset(i for i in range(inst.n_locations) if values.get(prefix(t, i), 0) > 0.5)
                 for t in range(1, inst.n_periods + 1))


def exact_check(inst: Instance, values: dict, y: Schedule, z: Schedule) -> tuple[Fraction, Fraction]:
    """Simulate (y, z) exactly and compare with the LP's u/v-based profits."""
    outcome = simulate_outcome(inst, y, z)
    lp_leader = lp_follower = 0.0
    for j, pref in enumerate(inst.rankings):
        d = inst.demands[j]
        for t in range(1, inst.n_periods + 1):
            for last in range(t):
                dem = sum(d[last:t])
                for i in pref:
                    lp_leader += inst.rewards[i] * dem * values.get(u_name(last, t, i, j), 0.0)
                    lp_follower += inst.rewards[i] * dem * values.get(v_name(last, t, i, j), 0.0)
    scale = max(1.0, float(abs(outcome.leader_profit)) + float(abs(outcome.follower_profit)))
    if (abs(lp_leader - float(outcome.leader_profit)) > TOLERANCE * scale
            or abs(lp_follower - float(outcome.follower_profit)) > TOLERANCE * scale):
        raise ToleranceViolation(
            f"model profits ({lp_leader:.9g}, {lp_follower:.9g}) disagree with exact "
            f"({outcome.leader_profit}, {outcome.follower_profit})")
    return outcome.leader_profit, outcome.follower_profit


class ScipyBackend:
    """HiGHS through ``scipy.optimize.milp``; lazy rows are handled by re-solving."""

    name = "scipy"

    def __init__(self, inst: Instance, max_rounds: int = 100000):
        self.inst = inst
        self.max_rounds = max_rounds
        self.rounds = 0

    def _solve_once(self, model: AbstractModel) -> dict:
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import coo_matrix

        names = model.names()
        index = {n: k for k, n in enumerate(names)}
        c = np.zeros(len(names))
        for n, coef in model.objective.items():
            c[index[n]] = -float(coef) if model.sense == "max" else float(coef)
        rows, cols, vals, lo, hi = [], [], [], [], []
        for k, r in enumerate(model.rows):
            for n, coef in r.coeffs:
                rows.append(k)
                cols.append(index[n])
                vals.append(float(coef))
            rhs = float(r.rhs)
            lo.append(rhs if r.sense in (">=", "==") else -np.inf)
            hi.append(rhs if r.sense in ("<=", "==") else np.inf)
        a = coo_matrix((vals, (rows, cols)), shape=(len(model.rows), len(names))).tocsr()
        integrality = np.array([1 if v.integer else 0 for v in model.variables])
        bounds = Bounds([v.lb for v in model.variables], [v.ub for v in model.variables])
        res = milp(c, constraints=[LinearConstraint(a, lo, hi)], integrality=integrality, bounds=bounds,
                   options={"mip_rel_gap": 0.0})
        if res.status != 0 or res.x is None:
            raise BackendUnavailable(f"HiGHS failed: {res.message}")
        return dict(zip(names, res.x))

    def solve(self, model, hook, block_for):
        while self.rounds < self.max_rounds:
            self.rounds += 1
            values = self._solve_once(model)
            y = read_schedule(self.inst, values, y_name)
            z = read_schedule(self.inst, values, z_name)
            leader, follower = exact_check(self.inst, values, y, z)
            cand = MasterCandidate(y, z, leader, follower, status="optimal")
            verdict = hook(cand)
            if verdict is None or verdict.accepted:
                return cand
            if not verdict.cuts:
                raise RuntimeError("hook rejected an incumbent without adding a cut")
            for cut in verdict.cuts:
                model.add_block(block_for(cut))
        raise RuntimeError("model master exceeded its round limit")


def model_solve_contract(model: AbstractModel, hook, backend: ModelBackend,
                         block_for: Callable[[GeneratedCut], LinearBlock] | None = None) -> MasterCandidate:
    counter = iter(range(1, 1 << 62))
    block_for = block_for or (lambda cut: materialize(cut, tag=f"c{next(counter)}"))
    return backend.solve(model, hook, block_for)


def _scipy_ok() -> bool:
    try:
        from scipy.optimize import milp  # noqa: F401
    except ImportError:  # pragma: no cover
        return False
    return True


if _scipy_ok():
    register_backend("scipy", ScipyBackend)

__all__ = [
    "AbstractModel", "BackendUnavailable", "MasterCandidate", "ModelBackend", "PairTables",
    "SearchResult", "ToleranceViolation", "Verdict", "build_high_point_model", "get_backend",
    "model_solve_contract", "register_backend", "search_solve", "available_backends",
]
