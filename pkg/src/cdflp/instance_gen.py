"""Reproducible synthetic instances.

Randomness comes from splitmix64. Each purpose ("points", "population",
"sites", "demand") gets its own stream whose state starts at
``mix(fnv1a64(purpose) ^ seed)``, so adding draws for one purpose never
shifts another and the output is identical in any language that implements
the same three functions.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .model import Instance

MASK = (1 << 64) - 1


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode():
        h = ((h ^ b) * 0x100000001B3) & MASK
    return h


class SplitMix64:
    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, state: int):
        self.state = state & MASK

    @classmethod
    def stream(cls, purpose: str, seed: int) -> "SplitMix64":
        return cls(_mix(fnv1a64(purpose) ^ (seed & MASK)))

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & MASK
        return _mix(self.state)

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] by rejection (no modulo bias)."""
        span = hi - lo + 1
        if span <= 0:
            raise ValueError("empty integer range")
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % span

    def shuffle(self, items: list) -> list:
        out = list(items)
        for k in range(len(out) - 1, 0, -1):
            m = self.integer(0, k)
            out[k], out[m] = out[m], out[k]
        return out


class RewardScheme(enum.Enum):
    IDENTICAL = "identical"
    INVERSE = "inverse"


class DemandScheme(enum.Enum):
    CONSTANT = "constant"
    SPARSE = "sparse"


class ConfigError(ValueError):
    pass


@dataclass
class GenConfig:
    customer_count: int = 40
    period_count: int = 3
    max_travel_minutes: float = 15
    reward_scheme: RewardScheme = RewardScheme.IDENTICAL
    demand_scheme: DemandScheme = DemandScheme.CONSTANT
    rho: Fraction = Fraction(1, 2)
    seed: int = 1
    population_range: tuple[int, int] = (1, 30)
    area_km: float = 20.0
    speed_kmh: float = 40.0
    leader_budget: int = 1
    follower_budget: int = 1

    def __post_init__(self):
        self.reward_scheme = RewardScheme(self.reward_scheme)
        self.demand_scheme = DemandScheme(self.demand_scheme)
        self.rho = Fraction(self.rho)
        self.population_range = tuple(int(x) for x in self.population_range)

    def problems(self) -> list[str]:
        out = []
        if self.customer_count < 2 or self.customer_count % 2:
            out.append("customer count must be even and >= 2")
        if self.period_count < 1:
            out.append("period count must be >= 1")
        if self.max_travel_minutes <= 0 or self.area_km <= 0 or self.speed_kmh <= 0:
            out.append("travel limit, area and speed must be positive")
        lo, hi = self.population_range
        if not 1 <= lo <= hi:
            out.append("population range must satisfy 1 <= lo <= hi")
        if not 0 <= self.rho <= 1:
            out.append("rho must lie in [0, 1]")
        if self.leader_budget < 1 or self.follower_budget < 1:
            out.append("budgets must be >= 1")
        return out

    def to_json(self) -> dict:
        d = asdict(self)
        d["reward_scheme"] = self.reward_scheme.value
        d["demand_scheme"] = self.demand_scheme.value
        d["rho"] = {"num": self.rho.numerator, "den": self.rho.denominator}
        d["population_range"] = list(self.population_range)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "GenConfig":
        obj = dict(obj)
        rho = obj.get("rho")
        if isinstance(rho, dict):
            obj["rho"] = Fraction(int(rho["num"]), int(rho["den"]))
        elif rho is not None:
            obj["rho"] = Fraction(str(rho))
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def instance_name(cfg: GenConfig) -> str:
    return (f"syn-J{cfg.customer_count}-T{cfg.period_count}-M{cfg.max_travel_minutes:g}-"
            f"{cfg.reward_scheme.value}-{cfg.demand_scheme.value}-rho{cfg.rho.numerator}_{cfg.rho.denominator}"
            f"-s{cfg.seed}")


def generate_synthetic(cfg: GenConfig) -> Instance:
    problems = cfg.problems()
    if problems:
        raise ConfigError("; ".join(problems))
    n_cust = cfg.customer_count
    pts = SplitMix64.stream("points", cfg.seed)
    points = [(pts.uniform() * cfg.area_km, pts.uniform() * cfg.area_km) for _ in range(n_cust)]
    pop = SplitMix64.stream("population", cfg.seed)
    populations = [pop.integer(*cfg.population_range) for _ in range(n_cust)]
    site_rng = SplitMix64.stream("sites", cfg.seed)
    sites = sorted(site_rng.shuffle(list(range(n_cust)))[: n_cust // 2])

    rankings = []
    for j in range(n_cust):
        options = []
        for i, c in enumerate(sites):
            km = math.dist(points[j], points[c])
            minutes = km / cfg.speed_kmh * 60
            if minutes <= cfg.max_travel_minutes:
                options.append((minutes, i))
        rankings.append([i for _, i in sorted(options)])

    n_loc = len(sites)
    if cfg.reward_scheme is RewardScheme.IDENTICAL:
        rewards = [n_loc] * n_loc
    else:
        counts = [0] * n_loc
        for pref in rankings:
            for i in pref:
                counts[i] += 1
        rewards = [-(-n_loc // c) if c else n_loc for c in counts]

    if cfg.demand_scheme is DemandScheme.CONSTANT:
        demands = [[p] * cfg.period_count for p in populations]
    else:
        dem = SplitMix64.stream("demand", cfg.seed)
        demands = [[dem.integer(0, p) for _ in range(cfg.period_count)] for p in populations]

    return Instance(rewards, demands, rankings, cfg.rho, cfg.leader_budget, cfg.follower_budget,
                    name=instance_name(cfg), seed=cfg.seed)


MANIFEST_FIELDS = ["seed", "name", "file", "customers", "locations", "periods", "maxTravelMinutes",
                   "rewardScheme", "demandScheme", "rho", "totalDemand"]


def manifest_row(cfg: GenConfig, inst: Instance, file: str = "") -> dict:
    return {
        "seed": cfg.seed, "name": inst.name, "file": file, "customers": inst.n_customers,
        "locations": inst.n_locations, "periods": inst.n_periods,
        "maxTravelMinutes": f"{cfg.max_travel_minutes:g}", "rewardScheme": cfg.reward_scheme.value,
        "demandScheme": cfg.demand_scheme.value, "rho": str(cfg.rho),
        "totalDemand": sum(sum(r) for r in inst.demands),
    }


def write_manifest(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=MANIFEST_FIELDS)
        w.writeheader()
        w.writerows(rows)


def desk_corpus(count: int = 200, base_seed: int = 1) -> list[Instance]:
    """Small instances (J in {4, 6}, T in {2, 3}, five rho values) cycling through both schemes."""
    rhos = [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
    out = []
    k = 0
    while len(out) < count:
        j = (4, 6)[k % 2]
        t = (2, 3)[(k // 2) % 2]
        rho = rhos[(k // 4) % 5]
        cfg = GenConfig(customer_count=j, period_count=t, max_travel_minutes=15, rho=rho,
                        reward_scheme=("identical", "inverse")[(k // 20) % 2],
                        demand_scheme=("constant", "sparse")[(k // 40) % 2],
                        seed=base_seed + k, area_km=12.0, population_range=(1, 10))
        out.append(generate_synthetic(cfg))
        k += 1
    return out


__all__ = ["DemandScheme", "GenConfig", "RewardScheme", "SplitMix64", "desk_corpus", "fnv1a64",
           "generate_synthetic", "manifest_row", "write_manifest"]
