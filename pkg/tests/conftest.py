import random

import pytest
from hypothesis import settings, strategies as st

from dcsp.core import Constraint, Instance
from dcsp.corpus import HORN, NEQ, random_language

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@st.composite
def instances(draw, language=None, n_max=6, m_max=8, d_max=3):
    """Small instances; over a fresh random language unless one is given."""
    if language is None:
        seed = draw(st.integers(0, 2**32 - 1))
        language = random_language(random.Random(seed), draw(st.integers(1, d_max)), draw(st.integers(1, 3)), 3)
    n = draw(st.integers(1, n_max))
    rels = language.relations
    cons = draw(
        st.lists(
            st.sampled_from(rels).flatmap(
                lambda r: st.tuples(st.just(r), st.tuples(*[st.integers(0, n - 1)] * r.arity))
            ),
            max_size=m_max,
        )
    )
    return Instance(n, language.domain_size, tuple(Constraint(scope, r) for r, scope in cons))


def horn_instances(n_max=6, m_max=8):
    return instances(HORN, n_max, m_max)


@pytest.fixture
def neq_pair():
    return Instance(2, 2, (Constraint((0, 1), NEQ),))


# acceptance results, printed as one line per criterion at the end of the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(key: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE[key] = (ok, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (len(k), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
