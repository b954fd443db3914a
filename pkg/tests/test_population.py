import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from worcs import (
    EnumerationCapError,
    PopulationSpec,
    StateError,
    ValidationError,
    draw_stream,
    draw_stream_batch,
    enumerate_orderings,
    load_population,
    split_seeds,
)


class TestSpecValidation:
    def test_binary_ok(self):
        spec = PopulationSpec.binary(10, 4)
        assert spec.n == 10 and spec.n_plus == 4
        assert spec.mean == 0.4

    @pytest.mark.parametrize("n,n_plus", [(0, 0), (5, 6), (5, -1)])
    def test_binary_bad(self, n, n_plus):
        with pytest.raises(ValidationError):
            PopulationSpec.binary(n, n_plus)

    def test_categorical(self):
        spec = PopulationSpec.categorical([3, 2, 5])
        assert spec.n == 10 and spec.k == 3

    def test_categorical_bad(self):
        with pytest.raises(ValidationError):
            PopulationSpec.categorical([5])
        with pytest.raises(ValidationError):
            PopulationSpec.categorical([3, -1])

    def test_bounded(self):
        spec = PopulationSpec.bounded([0.2, 0.9], 0, 1)
        assert spec.n == 2 and spec.mean == pytest.approx(0.55)

    def test_bounded_value_outside(self):
        with pytest.raises(ValidationError, match="outside bounds"):
            PopulationSpec.bounded([1.5], 0, 1)

    def test_bounded_bad_bounds(self):
        with pytest.raises(ValidationError):
            PopulationSpec.bounded([0.5], 1, 0)


class TestStream:
    def test_multiset_conservation_binary(self):
        spec = PopulationSpec.binary(2, 1)
        for seed in range(20):
            out = draw_stream(spec, seed).drain()
            assert sorted(out) == [0, 1]

    def test_single_item(self):
        spec = PopulationSpec.bounded([0.5], 0, 1)
        assert draw_stream(spec, 123).drain() == [0.5]

    def test_determinism_byte_identical(self):
        spec = PopulationSpec.bounded(list(np.linspace(0, 1, 30)), 0, 1)
        a = draw_stream(spec, 7).drain()
        b = draw_stream(spec, 7).drain()
        assert a == b
        c = draw_stream(spec, 8).drain()
        assert a != c

    def test_seed_zero_legal(self):
        spec = PopulationSpec.binary(10, 5)
        out = draw_stream(spec, 0).drain()
        assert sorted(out) == [0] * 5 + [1] * 5

    def test_exhaustion(self):
        stream = draw_stream(PopulationSpec.binary(3, 1), 5)
        stream.drain()
        with pytest.raises(StopIteration):
            next(stream)
        with pytest.raises(StateError):
            stream.take(1)

    def test_first_draw_marginal_monte_carlo(self):
        # exact marginal is 3/6; 1e5 seeds stay within 0.5 +- 0.01
        spec = PopulationSpec.binary(6, 3)
        seeds = split_seeds(99, 10**5)
        hits = sum(next(draw_stream(spec, s)) for s in seeds)
        assert abs(hits / 10**5 - 0.5) < 0.01

    def test_batch_matches_stream(self):
        spec = PopulationSpec.binary(40, 17)
        seeds = split_seeds(5, 8)
        batch = draw_stream_batch(spec, seeds)
        for row, seed in zip(batch, seeds):
            assert row.tolist() == draw_stream(spec, seed).drain()

    def test_batch_matches_stream_bounded(self):
        spec = PopulationSpec.bounded(list(np.linspace(0, 1, 25)), 0, 1)
        seeds = split_seeds(6, 4)
        batch = draw_stream_batch(spec, seeds)
        for row, seed in zip(batch, seeds):
            assert row.tolist() == draw_stream(spec, seed).drain()

    def test_categorical_conservation(self):
        spec = PopulationSpec.categorical([2, 3, 1])
        for seed in range(10):
            out = draw_stream(spec, seed).drain()
            assert sorted(out) == [0, 0, 1, 1, 1, 2]

    @given(st.integers(1, 12), st.data())
    @settings(max_examples=30, deadline=None)
    def test_conservation_property(self, n, data):
        n_plus = data.draw(st.integers(0, n))
        seed = data.draw(st.integers(0, 2**64 - 1))
        out = draw_stream(PopulationSpec.binary(n, n_plus), seed).drain()
        assert sum(out) == n_plus and len(out) == n


class TestEnumeration:
    def test_binary_two_items(self):
        out = dict(enumerate_orderings(PopulationSpec.binary(2, 1)))
        assert out == {(0, 1): Fraction(1, 2), (1, 0): Fraction(1, 2)}

    def test_binary_c42(self):
        out = enumerate_orderings(PopulationSpec.binary(4, 2))
        assert len(out) == 6
        assert all(p == Fraction(1, 6) for _, p in out)

    def test_bounded_three_items(self):
        out = enumerate_orderings(PopulationSpec.bounded([0, 0.4, 1], 0, 1))
        assert len(out) == 6
        assert all(p == Fraction(1, 6) for _, p in out)

    def test_probabilities_sum_to_one(self):
        for spec in (PopulationSpec.binary(7, 3),
                     PopulationSpec.categorical([2, 2, 1]),
                     PopulationSpec.bounded([0.1, 0.2, 0.2, 0.9], 0, 1)):
            total = sum(p for _, p in enumerate_orderings(spec))
            assert total == 1

    def test_cap_refusal_names_cap(self):
        with pytest.raises(EnumerationCapError, match="1000000"):
            enumerate_orderings(PopulationSpec.binary(100, 50))

    def test_exchangeability_exact(self):
        # marginal law of X_t equals the population law for every t
        spec = PopulationSpec.binary(6, 2)
        orderings = enumerate_orderings(spec)
        for t in range(6):
            marginal = sum(p for seq, p in orderings if seq[t] == 1)
            assert marginal == Fraction(2, 6)

    def test_exchangeability_categorical(self):
        spec = PopulationSpec.categorical([1, 2, 3])
        orderings = enumerate_orderings(spec)
        for t in range(6):
            for cat, count in enumerate(spec.counts):
                marginal = sum(p for seq, p in orderings if seq[t] == cat)
                assert marginal == Fraction(count, 6)


class TestLoad:
    def test_csv_binary(self):
        spec = load_population("1\n0\n1", "csv", kind="binary")
        assert spec.kind == "binary" and spec.n == 3 and spec.n_plus == 2

    def test_csv_bounded(self):
        spec = load_population(b"0.2\n0.9", "csv", kind="bounded",
                               lower=0, upper=1)
        assert spec.values == (0.2, 0.9)

    def test_csv_bounded_outside(self):
        with pytest.raises(ValidationError, match="outside bounds") as ei:
            load_population("1.5", "csv", kind="bounded", lower=0, upper=1)
        assert ei.value.line == 1

    def test_csv_missing_bounds(self):
        with pytest.raises(ValidationError, match="missing bounds"):
            load_population("0.5", "csv", kind="bounded")

    def test_csv_parse_error_line_number(self):
        with pytest.raises(ValidationError) as ei:
            load_population("0.1\nxyz", "csv", kind="bounded",
                            lower=0, upper=1)
        assert ei.value.line == 2

    def test_csv_header_flag(self):
        spec = load_population("value\n1\n1\n0", "csv", kind="binary",
                               header=True)
        assert spec.n == 3 and spec.n_plus == 2

    def test_json_binary(self):
        spec = load_population('{"kind":"binary","N":1000,"n_plus":650}',
                               "json")
        assert spec.n == 1000 and spec.n_plus == 650

    def test_json_bounded_needs_bounds(self):
        with pytest.raises(ValidationError, match="missing bounds"):
            load_population('{"kind":"bounded","values":[0.5]}', "json")

    def test_json_categorical(self):
        spec = load_population('{"kind":"categorical","counts":[3,4,5]}',
                               "json")
        assert spec.k == 3 and spec.n == 12

    def test_file_like(self):
        spec = load_population(io.BytesIO(b"1\n1"), "csv", kind="binary")
        assert spec.n_plus == 2


class TestHugePopulations:
    def test_billion_item_urn_streams_in_constant_memory(self):
        spec = PopulationSpec.binary(10**9, 65 * 10**7)
        stream = draw_stream(spec, 7)
        first = stream.take(200)
        assert all(x in (0, 1) for x in first)
        assert stream.remaining == 10**9 - 200
        # deterministic replay
        assert draw_stream(spec, 7).take(200) == first

    def test_billion_item_urn_rejects_materialization(self):
        spec = PopulationSpec.binary(10**9, 1)
        with pytest.raises(Exception):
            spec.items()
