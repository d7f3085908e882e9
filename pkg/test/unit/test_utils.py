"""Unit tests for seeding, the chunked worker pool, statistics, parsing and output."""

import math

import numpy as np
import pytest

from multijet.exceptions import DimensionMismatchError, ValidationError
from multijet.utils.output import (
    config_hash,
    exponent_label,
    file_digest,
    format_value,
    render_csv,
    render_json,
    to_jsonable,
    write_csv,
)
from multijet.utils.parallel import chunk_bounds, fsum_columns, map_chunks
from multijet.utils.points import parse_floats, parse_points
from multijet.utils.seeding import MAX_SEED, label_key, stream, validate_seed
from multijet.utils.stats import combined_se, mean_and_se, weighted_intercept, weighted_slope, within_band


class TestSeeding:
    """Tests for counter-based random streams."""

    def test_same_keys_same_draws(self):
        """Test that a stream is rebuilt from its keys."""
        a = stream(42, "trials", 3).standard_normal(5)
        b = stream(42, "trials", 3).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_different_keys_differ(self):
        """Test that labels and counters select distinct streams."""
        base = stream(42, "trials", 3).standard_normal(5)
        assert not np.array_equal(base, stream(42, "trials", 4).standard_normal(5))
        assert not np.array_equal(base, stream(42, "paths", 3).standard_normal(5))
        assert not np.array_equal(base, stream(43, "trials", 3).standard_normal(5))

    def test_label_key_is_stable(self):
        """Test that label keys are 32-bit and deterministic."""
        assert label_key("rho") == label_key("rho")
        assert 0 <= label_key("rho") < 2**32

    def test_seed_range(self):
        """Test the unsigned 64-bit seed range."""
        assert validate_seed(MAX_SEED) == MAX_SEED
        with pytest.raises(ValidationError):
            validate_seed(-1)
        with pytest.raises(ValidationError):
            validate_seed(2**64)

    def test_negative_key_rejected(self):
        """Test that negative counters raise."""
        with pytest.raises(ValidationError):
            stream(1, -2)


class TestParallel:
    """Tests for the deterministic chunked pool."""

    def test_chunk_bounds(self):
        """Test chunk boundaries with a short last chunk."""
        assert chunk_bounds(10, 4) == [(0, 0, 4), (1, 4, 8), (2, 8, 10)]
        assert chunk_bounds(0, 4) == []

    def test_chunk_size_positive(self):
        """Test that a zero chunk size raises."""
        with pytest.raises(ValueError):
            chunk_bounds(10, 0)

    def test_results_in_chunk_order(self):
        """Test that results come back in chunk order for any thread count."""
        fn = lambda idx, start, stop: (idx, list(range(start, stop)))  # noqa: E731
        serial = map_chunks(fn, 23, 5, threads=1)
        parallel = map_chunks(fn, 23, 5, threads=4)
        assert serial == parallel
        assert [idx for idx, _ in serial] == [0, 1, 2, 3, 4]

    def test_seeded_reduction_ignores_threads(self):
        """Test bit-identical seeded sums for 1 and 3 threads."""

        def run(idx, start, stop):
            z = stream(7, "sum", idx).standard_normal(stop - start)
            return [math.fsum(z), math.fsum(z * z)]

        one = fsum_columns(map_chunks(run, 1000, 64, threads=1))
        three = fsum_columns(map_chunks(run, 1000, 64, threads=3))
        assert one == three


class TestStats:
    """Tests for the statistical helpers."""

    def test_mean_and_se(self):
        """Test the mean and SE of 1, 2, 3, 4."""
        mean, se = mean_and_se(10.0, 30.0, 4)
        assert mean == pytest.approx(2.5)
        assert se == pytest.approx(math.sqrt(5 / 3 / 4))

    def test_single_sample(self):
        """Test that one sample has zero SE."""
        assert mean_and_se(3.0, 9.0, 1) == (3.0, 0.0)

    def test_exact_line(self):
        """Test that points on a line give its slope with zero SE."""
        slope, se, intercept = weighted_slope([0, 1, 2, 3], [1, 3, 5, 7])
        assert slope == pytest.approx(2.0)
        assert intercept == pytest.approx(1.0)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_weights_favour_precise_points(self):
        """Test that a noisy outlier with a large sigma barely moves the fit."""
        slope, _, _ = weighted_slope([0, 1, 2, 3], [0, 1, 2, 10], [0.01, 0.01, 0.01, 100.0])
        assert slope == pytest.approx(1.0, abs=1e-3)

    def test_intercept_extrapolation(self):
        """Test the value at zero of a line through two points and its SE."""
        intercept, se = weighted_intercept([1.0, 2.0], [3.0, 5.0], [1.0, 1.0])
        assert intercept == pytest.approx(1.0)
        assert se == pytest.approx(math.sqrt(5.0))

    def test_intercept_needs_positive_sigmas(self):
        """Test that a zero sigma is rejected."""
        with pytest.raises(ValueError):
            weighted_intercept([1.0, 2.0], [3.0, 5.0], [1.0, 0.0])

    def test_band(self):
        """Test the 3-SE band and its floor."""
        assert combined_se(3.0, 4.0) == pytest.approx(5.0)
        assert within_band(1.0, 1.25, 0.1)
        assert not within_band(1.0, 1.5, 0.1)
        assert within_band(1.0, 1.5, 0.0, floor=0.6)


class TestParsePoints:
    """Tests for point-list parsing."""

    def test_scalar_list(self):
        """Test the comma-separated form for n=1."""
        np.testing.assert_array_equal(parse_points("0,0,1"), [[0.0], [0.0], [1.0]])

    def test_tuple_list(self):
        """Test the parenthesised form."""
        np.testing.assert_array_equal(parse_points("(0,0);(0,1)"), [[0.0, 0.0], [0.0, 1.0]])

    def test_ragged_tuples(self):
        """Test that tuples of different lengths raise."""
        with pytest.raises(DimensionMismatchError):
            parse_points("(0,0);(1)")

    def test_expected_dimension(self):
        """Test that tuples of the wrong dimension raise."""
        with pytest.raises(DimensionMismatchError):
            parse_points("(0,0)", n=3)

    @pytest.mark.parametrize("text", ["", "(0,a)", "(0,0) junk", "1,,2"])
    def test_malformed(self, text):
        """Test that malformed lists raise."""
        with pytest.raises(ValidationError):
            parse_points(text)

    def test_parse_floats(self):
        """Test comma-separated floats with a trailing comma."""
        assert parse_floats("1e-2, 0.5,") == [0.01, 0.5]


class TestOutput:
    """Tests for CSV and JSON emission."""

    def test_format_value(self):
        """Test scalar formatting with 17 significant digits."""
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(np.int64(3)) == "3"
        assert format_value(True) == "true"
        assert format_value(float("nan")) == "nan"
        assert format_value(-math.inf) == "-inf"
        assert format_value(None) == ""

    def test_csv_trailer(self):
        """Test the header, quoting and trailing hash line."""
        text = render_csv(["points", "value"], [["(0,0);(0,1)", 1.5]], "abc")
        assert text.splitlines() == ['points,value', '"(0,0);(0,1)",1.5', "# config_sha256=abc"]

    def test_csv_row_length(self):
        """Test that rows of the wrong length raise."""
        with pytest.raises(ValueError):
            render_csv(["a", "b"], [[1]], "abc")

    def test_hash_ignores_non_result_settings(self):
        """Test that threads and output paths do not change the hash."""
        base = {"seed": 1, "trials": 100}
        assert config_hash(base) == config_hash({**base, "threads": 8, "out": "/tmp/x"})
        assert config_hash(base) != config_hash({**base, "seed": 2})

    def test_json_is_canonical(self):
        """Test sorted keys and numpy conversion."""
        text = render_json({"b": np.float64(1.5), "a": np.arange(2), "c": math.nan})
        assert text.index('"a"') < text.index('"b"')
        assert to_jsonable({"x": (np.bool_(True), np.int32(2))}) == {"x": [True, 2]}
        assert '"c": "nan"' in text

    def test_write_and_digest(self, tmp_path):
        """Test that written files hash to the digest of their text."""
        path = write_csv(tmp_path / "sub" / "t.csv", ["k"], [[1]], "h")
        assert path.read_text() == "k\n1\n# config_sha256=h\n"
        assert len(file_digest(path)) == 64

    def test_exponent_label(self):
        """Test multi-index labels."""
        assert exponent_label((2, 0)) == "2,0"
