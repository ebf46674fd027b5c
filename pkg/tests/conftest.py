import math

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from linevac.closed_form import params_31
from linevac.schedule import ScheduleParams

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

R_31 = 6.833921
Q_31_ROUNDED = 1.518949
A_31_ROUNDED = 1.699557


@pytest.fixture(scope="session")
def p31() -> ScheduleParams:
    a, q = params_31(R_31)
    return ScheduleParams(n=3, f=1, r=R_31, q=q, a=a)


@pytest.fixture(scope="session")
def p31_rounded() -> ScheduleParams:
    return ScheduleParams(n=3, f=1, r=R_31, q=Q_31_ROUNDED, a=A_31_ROUNDED)


odd_n = st.sampled_from([3, 5, 7, 9])
ratios_r = st.floats(min_value=1.2, max_value=12.0, allow_nan=False)


@st.composite
def generalized_params(draw, n=None):
    n = draw(odd_n) if n is None else n
    r = draw(ratios_r)
    s = draw(st.floats(min_value=0.0, max_value=r + 1.0))
    a = draw(st.floats(min_value=max(s - 1.0, 0.0), max_value=r))
    return ScheduleParams.from_s(n, r, s, a)


@st.composite
def proportional_params(draw, n=None):
    n = draw(odd_n) if n is None else n
    return ScheduleParams.proportional(n, draw(ratios_r))


any_params = st.one_of(generalized_params(), proportional_params())


@st.composite
def interior_target(draw, params):
    """A point strictly inside some interval ``(d_{i,j}, r^{2/n} d_{i,j})``."""
    from linevac.schedule import TurningPointRef, scale, turning_point

    i = draw(st.integers(0, params.n - 1))
    j = draw(st.integers(-2, 3))
    u = draw(st.floats(min_value=1e-4, max_value=1 - 1e-4))
    z = 1.0 + (scale(params, 2.0 / params.n) - 1.0) * u
    return z * turning_point(params, TurningPointRef(i, j))


def rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def isclose(a, b, tol):
    return math.isclose(a, b, rel_tol=0, abs_tol=tol)


# ------------------------------------------------------------ acceptance report

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
