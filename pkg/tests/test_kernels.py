import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given

from cdflp import Instance, make_schedule, simulate_outcome
from cdflp import kernels
from cdflp.follower import enumerate_schedules
from cdflp.space import CapExceeded, CompiledInstance, ScheduleSpace, count_schedules

from conftest import ex1, small_instances

E = frozenset()
needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


def test_enumeration_order():
    inst = Instance([1, 1], [[1]], [[0]], Fraction(1, 2))
    assert list(enumerate_schedules(inst, 1)) == [(E,), (frozenset({0}),), (frozenset({1}),)]
    assert len(list(enumerate_schedules(ex1(), 1))) == 9


def test_enumeration_count_budget_two():
    inst = Instance([1, 1, 1], [[1, 1]], [[0]], Fraction(1, 2))
    scheds = list(enumerate_schedules(inst, 2))
    assert len(scheds) == 49 == count_schedules(3, 2, 2)
    assert len(set(scheds)) == 49


def test_space_index_roundtrip():
    space = ScheduleSpace(3, 3, 2)
    for k, s in enumerate(space):
        assert space.index(s) == k
        assert space.schedule(k) == s
    ind = space.indicator()
    assert ind.shape == (space.size, 3, 3)
    assert ind[space.index(make_schedule([[0, 2], [], [1]]))].tolist() == [[1, 0, 1], [0, 0, 0], [0, 1, 0]]


def test_cap_and_overflow():
    inst = Instance([1] * 4, [[1] * 4], [[0]], Fraction(1, 2))
    with pytest.raises(CapExceeded):
        CompiledInstance(inst, cap=100)
    huge = Instance([2 ** 40], [[2 ** 40]], [[0]], Fraction(1, 3))
    with pytest.raises(OverflowError):
        CompiledInstance(huge)


def test_cap_from_environment(monkeypatch):
    monkeypatch.setenv("CDFLP_CAP", "5")
    with pytest.raises(CapExceeded):
        CompiledInstance(ex1())


@given(small_instances(max_budget=2))
def test_pair_kernel_matches_simulation(inst):
    compiled = CompiledInstance(inst)
    lead, foll = kernels.run("pair_profits", compiled, backend="numpy")
    ys, zs = list(compiled.leader_space), list(compiled.follower_space)
    for a in range(0, len(ys), max(1, len(ys) // 7)):
        for b in range(0, len(zs), max(1, len(zs) // 7)):
            out = simulate_outcome(inst, ys[a], zs[b])
            assert compiled.to_fraction(lead[a, b]) == out.leader_profit
            assert compiled.to_fraction(foll[a, b]) == out.follower_profit


@needs_numba
@given(small_instances(max_budget=2))
def test_numba_and_numpy_agree(inst):
    compiled = CompiledInstance(inst)
    for name in ("pair_profits", "reaction_scan", "joint_scan"):
        a = kernels.run(name, compiled, backend="numpy")
        b = kernels.run(name, compiled, backend="numba")
        for x, y in zip(a, b):
            assert np.array_equal(x, y), name


def test_reaction_scan_semantics():
    inst = ex1()
    compiled = CompiledInstance(inst)
    lead, foll = kernels.run("pair_profits", compiled)
    best_f, opt_l, opt_z, pes_l, pes_z, n_opt = kernels.run("reaction_scan", compiled)
    for y in range(compiled.leader_space.size):
        mask = foll[y] == foll[y].max()
        assert best_f[y] == foll[y].max()
        assert opt_l[y] == lead[y][mask].max() and pes_l[y] == lead[y][mask].min()
        assert opt_z[y] == np.flatnonzero(mask & (lead[y] == opt_l[y]))[0]
        assert pes_z[y] == np.flatnonzero(mask & (lead[y] == pes_l[y]))[0]
        assert n_opt[y] == mask.sum()


def test_env_flag_selects_numpy():
    code = "from cdflp import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, CDFLP_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_kernels("fortran")


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path
    bench = runpy.run_path(str(Path(__file__).resolve().parent.parent / "benchmarks" / "bench_kernels.py"))
    bench["main"](["--customers", "4", "--periods", "2", "--repeat", "1"])
    assert "pair_profits" in capsys.readouterr().out
