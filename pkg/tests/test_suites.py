import numpy as np
import pytest

from cdds.sdpcore import FEASIBLE, INFEASIBLE, decide
from cdds.suites import (SUITES, assembly_suite, inequality_suite, random_sdp_case, run_suite,
                         sdp_suite)


def test_small_runs_pass():
    for rep in (inequality_suite(cases=20), assembly_suite(models=2), sdp_suite(cases=12)):
        assert rep.passed, rep.lines()
        assert all(line.split("\t")[2] == "PASS" for line in rep.lines())


@pytest.mark.parametrize("i", range(8))
def test_generated_cases_match_their_labels(i):
    case = random_sdp_case(np.random.default_rng(100 + i), i)
    assert decide(case.problem).status == (FEASIBLE if case.feasible else INFEASIBLE)


def test_unknown_suite():
    assert set(SUITES) == {"inequalities", "hierarchy", "assembly", "sdp"}
    with pytest.raises(ValueError):
        run_suite("everything")
