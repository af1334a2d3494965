"""Gadget instances from exists-forall 3CNF formulas.

Location of variable s (1-based) with level L and value V has id
``4*(s-1) + 2*L + V`` where L=0 is upper, L=1 lower, V=0 true, V=1 false.
Customers come in the order: 2n literal-customers ([x_s = true], [x_s =
false] per variable), 2n level-customers (upper, lower per variable), then
one clause-customer per clause.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .model import Instance

UPPER, LOWER = 0, 1
TRUE, FALSE = 0, 1


class FormulaError(ValueError):
    pass


@dataclass(frozen=True)
class SatFormula:
    exist_count: int
    var_count: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(int(l) for l in c) for c in self.clauses))
        problems = self.problems()
        if problems:
            raise FormulaError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not 1 <= self.exist_count < self.var_count:
            out.append(f"need 1 <= k < n, got k={self.exist_count}, n={self.var_count}")
        for c, clause in enumerate(self.clauses):
            if len(clause) != 3:
                out.append(f"clause {c} has {len(clause)} literals")
            for lit in clause:
                if lit == 0 or abs(lit) > self.var_count:
                    out.append(f"clause {c}: literal {lit} out of range")
        return out

    @property
    def clause_count(self) -> int:
        return len(self.clauses)

    def satisfied(self, assignment) -> bool:
        """``assignment[s-1]`` is the truth value of variable s."""
        return all(any(assignment[abs(l) - 1] == (l > 0) for l in clause) for clause in self.clauses)


def location(s: int, level: int, value: int) -> int:
    return 4 * (s - 1) + 2 * level + value


def constants(m: int) -> tuple[int, int, int]:
    return 3 * m + 3, 2 * m + 2, m + 1


def threshold(n: int, m: int) -> Fraction:
    m1, m2, _ = constants(m)
    return Fraction(n * (m1 + m2) + 1)


def clause_ranking(clause) -> list[int]:
    ranking = []
    for lit in clause:
        ranking.append(location(abs(lit), LOWER, TRUE if lit > 0 else FALSE))
    ranking.append(location(abs(clause[-1]), UPPER, FALSE))
    # repeated literals would repeat a location; keep first occurrence
    return list(dict.fromkeys(ranking))


def reduce_eafa3sat(f: SatFormula) -> tuple[Instance, Fraction]:
    n, k, m = f.var_count, f.exist_count, f.clause_count
    m1, m2, m3 = constants(m)
    rankings, demands = [], []

    def spike(period: int, amount: int) -> list[int]:
        d = [0] * n
        d[period - 1] = amount
        return d

    for s in range(1, n + 1):
        if s <= k:
            rankings.append([location(s, UPPER, TRUE), location(s, LOWER, FALSE)])
            rankings.append([location(s, UPPER, FALSE), location(s, LOWER, TRUE)])
        else:
            rankings.append([location(s, LOWER, TRUE), location(s, UPPER, FALSE)])
            rankings.append([location(s, LOWER, FALSE), location(s, UPPER, TRUE)])
        demands += [spike(s, m1), spike(s, m1)]
    for s in range(1, n + 1):
        rankings.append([location(s, UPPER, TRUE), location(s, UPPER, FALSE)])
        rankings.append([location(s, LOWER, TRUE), location(s, LOWER, FALSE)])
        demands += [spike(s, m2), spike(s, m3)]
    for clause in f.clauses:
        rankings.append(clause_ranking(clause))
        demands.append(spike(1, 1))
    inst = Instance(rewards=[1] * (4 * n), demands=demands, rankings=rankings, rho=Fraction(1, 2),
                    name=f"eafa3sat-n{n}-k{k}-m{m}")
    return inst, threshold(n, m)


def decide_threshold(inst: Instance, pi: Fraction, oracle=None) -> bool:
    if oracle is None:
        from .solver import brute_force_oracle as oracle
    return oracle(inst, "optimistic").leader_profit >= pi


def exists_forall_unsat(f: SatFormula) -> bool:
    """Is there an assignment of x_1..x_k under which no completion satisfies every clause?"""
    k, n = f.exist_count, f.var_count
    for head in itertools.product((True, False), repeat=k):
        if not any(f.satisfied(head + tail) for tail in itertools.product((True, False), repeat=n - k)):
            return True
    return False


def parse_formula(text: str) -> SatFormula:
    """First line ``k n m``, then m lines of three signed variable indices."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith(("#", "c "))]
    if not lines or len(lines[0]) != 3:
        raise FormulaError("header must be 'k n m'")
    try:
        k, n, m = (int(x) for x in lines[0])
        clauses = [tuple(int(x) for x in ln) for ln in lines[1:]]
    except ValueError as exc:
        raise FormulaError(str(exc)) from None
    if len(clauses) != m:
        raise FormulaError(f"header announces {m} clauses, found {len(clauses)}")
    return SatFormula(k, n, tuple(clauses))


def format_formula(f: SatFormula) -> str:
    lines = [f"{f.exist_count} {f.var_count} {f.clause_count}"]
    lines += [" ".join(str(l) for l in c) for c in f.clauses]
    return "\n".join(lines) + "\n"
