"""JSON formats for instances, schedules and solutions."""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .model import Instance, Schedule, make_schedule, schedule_to_lists, validate_instance

FORMAT = "cdflp-1"


class FormatError(ValueError):
    pass


def fraction_to_json(x) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def fraction_from_json(obj) -> Fraction:
    if isinstance(obj, dict):
        return Fraction(int(obj["num"]), int(obj["den"]))
    if isinstance(obj, (int, str)):
        return Fraction(obj)
    raise FormatError(f"cannot read a rational from {obj!r}")


def instance_to_json(inst: Instance) -> dict:
    return {
        "version": FORMAT,
        "name": inst.name,
        "seed": inst.seed,
        "periods": inst.n_periods,
        "rewards": list(inst.rewards),
        "demands": [list(row) for row in inst.demands],
        "rankings": [list(row) for row in inst.rankings],
        "rho": fraction_to_json(inst.rho),
        "leaderBudget": inst.leader_budget,
        "followerBudget": inst.follower_budget,
    }


def instance_from_json(obj: dict, validate: bool = True) -> Instance:
    try:
        if obj.get("version", FORMAT) != FORMAT:
            raise FormatError(f"unsupported instance version {obj.get('version')!r}")
        inst = Instance(
            rewards=obj["rewards"],
            demands=obj["demands"],
            rankings=obj["rankings"],
            rho=fraction_from_json(obj["rho"]),
            leader_budget=int(obj.get("leaderBudget", 1)),
            follower_budget=int(obj.get("followerBudget", 1)),
            name=str(obj.get("name", "")),
            seed=obj.get("seed"),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed instance: {exc}") from None
    if "periods" in obj and int(obj["periods"]) != inst.n_periods:
        raise FormatError(f"periods={obj['periods']} but demand rows have {inst.n_periods} entries")
    if validate:
        problems = validate_instance(inst)
        if problems:
            raise FormatError("; ".join(problems))
    return inst


def schedule_from_json(obj) -> Schedule:
    return make_schedule(obj)


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def load_instance(path) -> Instance:
    return instance_from_json(read_json(path))


def save_instance(path, inst: Instance) -> None:
    write_json(path, instance_to_json(inst))


def solution_profits(obj: dict) -> tuple[Fraction, Fraction]:
    return fraction_from_json(obj["leaderProfit"]), fraction_from_json(obj["followerProfit"])


__all__ = [
    "FORMAT", "FormatError", "fraction_from_json", "fraction_to_json", "instance_from_json", "instance_to_json",
    "load_instance", "read_json", "save_instance", "schedule_from_json", "schedule_to_lists", "solution_profits",
    "write_json",
]
