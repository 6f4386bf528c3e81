import datetime as dt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conceptviz.builtins import BUILTINS, EvalContext
from conceptviz.evaluate import (
    DuplicateOutputColumn,
    TypeMismatch,
    UnknownColumn,
    apply_derivation,
    eval_row,
)
from conceptviz.formula import (
    ArityError,
    FormulaTypeError,
    ParseError,
    UnknownIdentifier,
    parse_formula,
)
from conceptviz.table import build_table
from conceptviz.values import SemanticType

DIFF = "fn(seattleTemp, atlantaTemp) = seattleTemp - atlantaTemp"
WARMER = ("fn(a, b) = if a > b then 'Seattle' "
          "else (if b > a then 'Atlanta' else 'Same')")
CENTERED_AVG = "fn(t, index, t_list) = list_avg(slice(t_list, index - 3, index + 4))"
TRAILING_AVG = "fn(t, index, t_list) = list_avg(slice(t_list, index - 6, index + 1))"


class TestParse:
    def test_simple_two_params(self):
        f = parse_formula(DIFF)
        assert f.param_names == ["seattleTemp", "atlantaTemp"]
        assert not f.analytical

    def test_analytical_flag(self):
        f = parse_formula(CENTERED_AVG)
        assert f.analytical
        assert f.param_names == ["t"]

    def test_comments_and_quotes(self):
        f = parse_formula("fn(a) = concat(a, 'it''s')  # trailing note")
        assert eval_row(f, ["x "]) == "x it's"

    def test_year_on_integer_is_type_error(self):
        with pytest.raises(FormulaTypeError):
            parse_formula("fn(a) = year(a)", [SemanticType.INTEGER])

    def test_year_on_date_ok(self):
        f = parse_formula("fn(a) = year(a)", [SemanticType.DATE])
        assert eval_row(f, [dt.date(2020, 3, 1)]) == 2020

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifier):
            parse_formula("fn(a) = frobnicate(a)")
        with pytest.raises(UnknownIdentifier):
            parse_formula("fn(a) = a + b")

    def test_arity_error(self):
        with pytest.raises(ArityError):
            parse_formula("fn(a) = abs(a, a)")

    def test_parse_error_position(self):
        with pytest.raises(ParseError) as err:
            parse_formula("fn(a) = a +")
        assert err.value.position == 11

    def test_list_param_without_index_rejected(self):
        with pytest.raises(ParseError):
            parse_formula("fn(a, a_list) = list_len(a_list)")

    def test_index_outside_analytical_unknown(self):
        with pytest.raises(UnknownIdentifier):
            parse_formula("fn(a) = index + a")

    def test_let_binding(self):
        f = parse_formula("fn(a) = let d = a * 2 in d + d")
        assert eval_row(f, [3]) == 12


class TestEvalRow:
    def test_difference(self):
        f = parse_formula(DIFF)
        assert eval_row(f, [51, 45]) == 6

    def test_warmer_conditional(self):
        f = parse_formula(WARMER)
        assert eval_row(f, [45, 47]) == "Atlanta"
        assert eval_row(f, [51, 45]) == "Seattle"
        assert eval_row(f, [45, 45]) == "Same"

    def test_null_propagation(self):
        f = parse_formula(DIFF)
        assert eval_row(f, [None, 45]) is None
        assert eval_row(f, [51, None]) is None

    def test_division_by_zero_is_null(self):
        f = parse_formula("fn(a, b) = a / b")
        assert eval_row(f, [1, 0]) is None
        assert eval_row(f, [6, 3]) == 2.0

    def test_modulo_by_zero_is_null(self):
        f = parse_formula("fn(a, b) = a % b")
        assert eval_row(f, [5, 0]) is None

    def test_list_get_out_of_range_is_null(self):
        f = parse_formula("fn(t, index, t_list) = list_get(t_list, 99)")
        assert eval_row(f, [1], index=0, lists=[[1, 2, 3]]) is None

    def test_centered_window_against_brute_force(self):
        f = parse_formula(CENTERED_AVG)
        col = [51, 45, 48, 50, 52, 49, 47, 53, 55, 44]
        for i in range(len(col)):
            ctx = EvalContext()
            got = eval_row(f, [col[i]], index=i, lists=[col], ctx=ctx)
            lo, hi = i - 3, i + 4
            window = col[max(0, lo):min(len(col), hi)]
            expected = sum(window) / len(window)
            assert got == pytest.approx(expected)
            assert ctx.truncated == (lo < 0 or hi > len(col))

    @pytest.mark.parametrize("name", sorted(
        n for n, s in BUILTINS.items()
        if s.null_propagating and "list" not in s.arg_types))
    def test_scalar_builtins_propagate_null(self, name):
        spec = BUILTINS[name]
        samples = {
            "number": 2, "integer": 2, "float": 2.0, "text": "ab",
            "temporal": dt.date(2020, 1, 1), "any": "x",
        }
        for k in range(len(spec.arg_types)):
            args = [samples[t] for t in spec.arg_types]
            args[k] = None
            src = f"fn({', '.join(chr(97 + i) for i in range(len(args)))}) = " \
                  f"{name}({', '.join(chr(97 + i) for i in range(len(args)))})"
            f = parse_formula(src)
            assert eval_row(f, args) is None, name

    def test_purity(self):
        f = parse_formula(CENTERED_AVG)
        col = [1, 2, 3, 4, 5, 6, 7, 8]
        first = [eval_row(f, [v], index=i, lists=[col]) for i, v in enumerate(col)]
        second = [eval_row(f, [v], index=i, lists=[col]) for i, v in enumerate(col)]
        assert first == second

    def test_percentile_rank(self):
        f = parse_formula("fn(t, index, t_list) = percentile_rank(t_list, t)")
        col = [10, 20, 30, 40]
        assert eval_row(f, [10], index=0, lists=[col]) == pytest.approx(12.5)
        assert eval_row(f, [40], index=3, lists=[col]) == pytest.approx(87.5)


class TestApplyDerivation:
    def make_wide(self):
        return build_table(
            "w", [("Date", SemanticType.DATE), ("Seattle", SemanticType.INTEGER),
                  ("Atlanta", SemanticType.INTEGER)],
            [(dt.date(2020, 1, 1), 51, 45),
             (dt.date(2020, 1, 2), 45, 47),
             (dt.date(2020, 1, 3), 48, 56)])

    def test_difference_column(self):
        t = self.make_wide()
        f = parse_formula(DIFF, [SemanticType.INTEGER, SemanticType.INTEGER])
        out = apply_derivation(t, f, ["Seattle", "Atlanta"], "Difference")
        assert out.column_values("Difference") == [6, -2, -8]
        # pre-existing columns untouched
        for name in t.column_names:
            assert out.column_values(name) == t.column_values(name)

    def test_centered_window_boundaries(self):
        col = list(range(10, 110, 10))
        t = build_table("t", [("v", SemanticType.INTEGER)], [(v,) for v in col])
        f = parse_formula(CENTERED_AVG, [SemanticType.FLOAT])
        out = apply_derivation(t, f, ["v"], "avg")
        got = out.column_values("avg")
        for i in (0, 1, 2, 7, 8, 9):
            assert got[i] is None
        for i in range(3, 7):
            assert got[i] == pytest.approx(sum(col[i - 3:i + 4]) / 7)

    def test_trailing_window_boundaries(self):
        col = list(range(10, 110, 10))
        t = build_table("t", [("v", SemanticType.INTEGER)], [(v,) for v in col])
        f = parse_formula(TRAILING_AVG, [SemanticType.FLOAT])
        out = apply_derivation(t, f, ["v"], "avg")
        got = out.column_values("avg")
        for i in range(6):
            assert got[i] is None
        for i in range(6, 10):
            assert got[i] == pytest.approx(sum(col[i - 6:i + 1]) / 7)

    def test_empty_table(self):
        t = build_table("t", [("v", SemanticType.INTEGER)], [])
        f = parse_formula("fn(v) = v + 1", [SemanticType.INTEGER])
        out = apply_derivation(t, f, ["v"], "w")
        assert out.column_names == ["v", "w"]
        assert out.rows == ()

    def test_unknown_column(self):
        f = parse_formula("fn(v) = v")
        with pytest.raises(UnknownColumn):
            apply_derivation(self.make_wide(), f, ["Nope"], "x")

    def test_duplicate_output(self):
        f = parse_formula("fn(v) = v")
        with pytest.raises(DuplicateOutputColumn):
            apply_derivation(self.make_wide(), f, ["Seattle"], "Atlanta")

    def test_param_count_mismatch(self):
        f = parse_formula("fn(a, b, c) = a + b + c")
        with pytest.raises(TypeMismatch):
            apply_derivation(self.make_wide(), f, ["Seattle", "Atlanta"], "x")

    @settings(max_examples=40)
    @given(st.lists(st.one_of(st.none(), st.integers(-100, 100)),
                    min_size=1, max_size=25))
    def test_moving_average_matches_oracle(self, col):
        t = build_table("t", [("v", SemanticType.INTEGER)],
                        [(v,) for v in col])
        f = parse_formula(CENTERED_AVG, [SemanticType.FLOAT])
        out = apply_derivation(t, f, ["v"], "avg")
        got = out.column_values("avg")
        for i in range(len(col)):
            lo, hi = i - 3, i + 4
            if lo < 0 or hi > len(col):
                assert got[i] is None
            else:
                window = [v for v in col[lo:hi] if v is not None]
                if not window:
                    assert got[i] is None
                else:
                    assert got[i] == pytest.approx(sum(window) / len(window))
