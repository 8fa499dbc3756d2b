import pytest

from asseopf.grid import (
    CaseParseError,
    UnsupportedFeatureError,
    parse_matpower_case,
    serialize_case,
)

MINI_CASE = """
function mpc = mini
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0   0  0 0 1 1 0 230 1 1.1 0.9;
    2 1 50 10  0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
    1 60 0 100 -100 1.0 100 1 200 0;
];
mpc.branch = [
    1 2 0.01 0.1 0.02 100 100 100 0 0 1;
];
mpc.gencost = [
    2 0 0 3 0.02 10 5;
];
"""


def test_parse_nine_bus_fixture(case9):
    assert case9.n_bus == 9
    assert case9.n_gen == 3
    assert len(case9.branches) == 9
    assert case9.base_mva == 100.0
    costs = [(g.c2, g.c1, g.c0) for g in case9.generators]
    assert costs == [(0.11, 5.0, 150.0), (0.085, 1.2, 600.0), (0.1225, 1.0, 335.0)]
    loads = {b.id: b.pd for b in case9.buses if b.pd > 0}
    assert loads == {5: 90.0, 7: 100.0, 9: 125.0}
    assert case9.slack_position() == 0


def test_empty_input_missing_base():
    with pytest.raises(CaseParseError, match="missing baseMVA"):
        parse_matpower_case("")


def test_comments_do_not_change_parse():
    commented = MINI_CASE.replace(
        "mpc.bus = [", "% leading comment\nmpc.bus = [  % trailing\n% row comment"
    )
    assert parse_matpower_case(commented) == parse_matpower_case(MINI_CASE)


def test_round_trip_parse_serialize_parse(case9):
    text = serialize_case(case9)
    again = parse_matpower_case(text, name=case9.name)
    assert again == case9
    # a second round trip is exact as well
    assert parse_matpower_case(serialize_case(again), name=case9.name) == again


def test_non_numeric_token_names_line():
    bad = MINI_CASE.replace("1 2 0.01 0.1", "1 2 oops 0.1")
    with pytest.raises(CaseParseError, match=r"line \d+"):
        parse_matpower_case(bad)


def test_missing_section():
    without = MINI_CASE.replace("mpc.gencost", "mpc.ignored")
    with pytest.raises(CaseParseError, match="missing gencost"):
        parse_matpower_case(without)


def test_piecewise_cost_unsupported():
    pw = MINI_CASE.replace("2 0 0 3 0.02 10 5;", "1 0 0 2 0 0 100 2000;")
    with pytest.raises(UnsupportedFeatureError, match="piecewise"):
        parse_matpower_case(pw)


def test_transformer_tap_unsupported():
    tap = MINI_CASE.replace("1 2 0.01 0.1 0.02 100 100 100 0 0 1;",
                            "1 2 0.01 0.1 0.02 100 100 100 0.95 0 1;")
    with pytest.raises(UnsupportedFeatureError, match="tap"):
        parse_matpower_case(tap)


def test_two_slack_buses_rejected():
    two = MINI_CASE.replace("2 1 50 10", "2 3 50 10")
    with pytest.raises(CaseParseError, match="slack"):
        parse_matpower_case(two)


def test_unknown_branch_endpoint():
    bad = MINI_CASE.replace("1 2 0.01", "1 7 0.01")
    with pytest.raises(CaseParseError, match="unknown bus"):
        parse_matpower_case(bad)


def test_out_of_service_rows_skipped_with_warning():
    off = MINI_CASE.replace(
        "mpc.branch = [\n    1 2 0.01 0.1 0.02 100 100 100 0 0 1;",
        "mpc.branch = [\n    1 2 0.01 0.1 0.02 100 100 100 0 0 1;\n    1 2 0.05 0.5 0 100 100 100 0 0 0;",
    )
    case = parse_matpower_case(off)
    assert len(case.branches) == 1
    assert any("out of service" in w for w in case.warnings)


def test_linear_cost_padded():
    lin = MINI_CASE.replace("2 0 0 3 0.02 10 5;", "2 0 0 2 10 5;")
    case = parse_matpower_case(lin)
    g = case.generators[0]
    assert (g.c2, g.c1, g.c0) == (0.0, 10.0, 5.0)


def test_cost_helper(case9):
    # quadratic polynomial evaluated per generator and summed
    val = case9.cost([10.0, 20.0, 30.0])
    expected = (0.11 * 100 + 5 * 10 + 150) + (0.085 * 400 + 1.2 * 20 + 600) + (
        0.1225 * 900 + 1 * 30 + 335
    )
    assert val == pytest.approx(expected, rel=1e-12)
