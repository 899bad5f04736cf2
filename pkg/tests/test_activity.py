import pytest
from hypothesis import given
from hypothesis import strategies as st

from slc.activity import (
    ActivityClass,
    check_assignment_activity,
    check_condition_passive,
    check_index_passive,
    classify_symbol,
    propagate_variedness,
)
from slc.errors import CompileError


@pytest.mark.parametrize(
    "name,expected",
    [
        ("x", ActivityClass.ACTIVE),
        ("M", ActivityClass.PASSIVE),
        ("I", ActivityClass.PASSIVE),
        ("payoff", ActivityClass.ACTIVE),
        ("K2", ActivityClass.PASSIVE),
        ("_v", ActivityClass.ACTIVE),
        ("a_x", ActivityClass.ACTIVE),
    ],
)
def test_classify_symbol(name, expected):
    assert classify_symbol(name) is expected


@given(st.text(alphabet="abcdefgh_", min_size=1, max_size=8))
def test_lowercase_and_underscore_names_are_active(name):
    assert classify_symbol(name) is ActivityClass.ACTIVE


@given(st.text(alphabet="ABCDEFGH", min_size=1, max_size=1),
       st.text(alphabet="abcXYZ09_", max_size=8))
def test_uppercase_initial_names_are_passive(first, rest):
    assert classify_symbol(first + rest) is ActivityClass.PASSIVE


@pytest.mark.parametrize(
    "flags,expected",
    [([True, False], True), ([], False), ([False, False], False), ([True, True], True)],
)
def test_propagate_variedness(flags, expected):
    assert propagate_variedness(flags) is expected


@given(st.lists(st.booleans(), max_size=10))
def test_variedness_is_disjunction(flags):
    assert propagate_variedness(flags) == (True in flags)


def test_passive_condition_is_accepted():
    check_condition_passive(False, line=3)


def test_active_condition_is_rejected_with_line():
    with pytest.raises(CompileError) as exc:
        check_condition_passive(True, line=7)
    assert str(exc.value) == "error[active-branch]: active branch condition at line 7"


def test_assignment_activity_combinations():
    check_assignment_activity(True, True, line=1)
    check_assignment_activity(True, False, line=1)
    check_assignment_activity(False, False, line=1)
    with pytest.raises(CompileError) as exc:
        check_assignment_activity(False, True, line=5)
    assert "active value assigned to passive variable" in str(exc.value)
    assert exc.value.code == "active-assign"


def test_index_passivity_check():
    check_index_passive(False, line=2)
    with pytest.raises(CompileError) as exc:
        check_index_passive(True, line=9)
    assert str(exc.value) == "error[active-index]: active index expression at line 9"
