from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from cdflp import Instance

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def ex1(rho=Fraction(1, 2)) -> Instance:
    """Two locations, two customers, two periods."""
    return Instance(rewards=[1, 1], demands=[[2, 2], [3, 3]], rankings=[[0, 1], [1]], rho=rho, name="EX1")


@pytest.fixture
def inst_ex1():
    return ex1()


RHOS = [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1), Fraction(1, 3)]


@st.composite
def small_instances(draw, max_loc=3, max_cust=3, max_per=3, max_budget=1):
    n_loc = draw(st.integers(1, max_loc))
    n_cust = draw(st.integers(1, max_cust))
    n_per = draw(st.integers(1, max_per))
    rewards = draw(st.lists(st.integers(1, 4), min_size=n_loc, max_size=n_loc))
    demands = draw(st.lists(st.lists(st.integers(0, 5), min_size=n_per, max_size=n_per),
                            min_size=n_cust, max_size=n_cust))
    rankings = [draw(st.permutations(range(n_loc)).flatmap(
        lambda p: st.integers(0, len(p)).map(lambda k: list(p[:k])))) for _ in range(n_cust)]
    rho = draw(st.sampled_from(RHOS))
    lb = draw(st.integers(1, max_budget))
    fb = draw(st.integers(1, max_budget))
    return Instance(rewards, demands, rankings, rho, lb, fb)


def schedules_of(inst, budget=None):
    from cdflp.follower import enumerate_schedules
    return list(enumerate_schedules(inst, budget or inst.leader_budget))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
