import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indefrf.data import (
    MAX_INDEX,
    Dataset,
    l2_normalize,
    load_libsvm,
    minmax_normalize,
    parse_libsvm,
    serialize_libsvm,
    synthetic_blobs,
)
from indefrf.errors import ParseError


class TestParse:
    def test_basic(self):
        ds = parse_libsvm("+1 1:0.5 3:0.5")
        np.testing.assert_array_equal(ds.rows, [[0.5, 0.0, 0.5]])
        np.testing.assert_array_equal(ds.labels, [1])

    def test_empty(self):
        ds = parse_libsvm("")
        assert ds.n == 0 and ds.d == 0

    def test_comments_blank_and_bytes(self):
        ds = parse_libsvm(b"# header\n\n-1 2:1e-3  # trailing\n+1\n")
        assert ds.n == 2 and ds.d == 2
        np.testing.assert_array_equal(ds.labels, [-1, 1])

    def test_stream_and_file(self, tmp_path):
        p = tmp_path / "x.svm"
        p.write_text("3 1:1\n")
        assert load_libsvm(p) == parse_libsvm(io.StringIO("3 1:1\n"))

    @pytest.mark.parametrize("text,line", [
        ("+1 1:0.5\n-1 3:x", 2),
        ("+1 2:1 1:1", 1),
        ("+1 2:1 2:1", 1),
        ("abc 1:1", 1),
        ("1.5 1:1", 1),
        ("+1 0:1", 1),
        ("+1 1:nan", 1),
        ("+1 1", 1),
        (f"+1 {MAX_INDEX + 1}:1", 1),
        ("1e30 1:1", 1),
    ])
    def test_errors_report_line(self, text, line):
        with pytest.raises(ParseError) as exc:
            parse_libsvm(text)
        assert exc.value.line == line
        assert str(exc.value).startswith(f"line {line}:")

    def test_invalid_utf8(self):
        with pytest.raises(ParseError):
            parse_libsvm(b"+1 1:1\n\xff\xfe")


labels = st.integers(-5, 5)
values = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def datasets(draw):
    n = draw(st.integers(0, 8))
    d = draw(st.integers(1, 6))
    rows = np.array(draw(st.lists(st.lists(values, min_size=d, max_size=d), min_size=n, max_size=n)),
                    dtype=float).reshape(n, d)
    lab = np.array(draw(st.lists(labels, min_size=n, max_size=n)), dtype=int)
    return Dataset(rows, lab)


@settings(max_examples=100, deadline=None)
@given(datasets())
def test_roundtrip(ds):
    back = parse_libsvm(serialize_libsvm(ds))
    if ds.n == 0:
        assert back.n == 0
    else:
        assert back == ds


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_arbitrary_bytes(blob):
    try:
        ds = parse_libsvm(blob)
    except ParseError:
        return
    assert ds.rows.shape[0] == ds.labels.shape[0]


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="0123456789+-.:eE #\n\tx", max_size=120))
def test_near_valid_text(text):
    try:
        parse_libsvm(text)
    except ParseError:
        pass


class TestNormalize:
    def test_l2(self):
        ds = l2_normalize(Dataset(np.array([[3.0, 4.0]]), np.array([1])))
        np.testing.assert_allclose(ds.rows, [[0.6, 0.8]])
        assert ds.normalized

    def test_zero_row_warns(self):
        with pytest.warns(RuntimeWarning, match="1 zero rows"):
            ds = l2_normalize(Dataset(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([1, -1])))
        np.testing.assert_array_equal(ds.rows[0], [0.0, 0.0])

    def test_idempotent(self):
        g = np.random.default_rng(0)
        ds = Dataset(g.standard_normal((20, 5)), np.ones(20, dtype=int))
        once = l2_normalize(ds)
        np.testing.assert_allclose(l2_normalize(once).rows, once.rows, atol=1e-12)

    def test_minmax(self):
        ds = minmax_normalize(Dataset(np.array([[1.0, 5.0], [3.0, 5.0]]), np.array([1, 1])))
        np.testing.assert_array_equal(ds.rows, [[0.0, 0.0], [1.0, 0.0]])


def test_synthetic_blobs():
    ds = synthetic_blobs(50, 7, rng=3)
    np.testing.assert_allclose(np.linalg.norm(ds.rows, axis=1), 1.0)
    assert set(np.unique(ds.labels)) <= {-1, 1}
    assert synthetic_blobs(50, 7, rng=3) == ds
    assert set(np.unique(synthetic_blobs(200, 4, classes=3, rng=1).labels)) == {0, 1, 2}
