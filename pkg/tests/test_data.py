import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_erm.data import (
    ParseError,
    SampleView,
    SparseDataset,
    convert_mnist_idx,
    dump_libsvm,
    make_synthetic,
    parse_libsvm,
    shuffle,
)

from conftest import dense_dataset


def test_parse_single_line():
    data = parse_libsvm("+1 3:0.5 7:1.2\n")
    assert data.n_samples == 1
    assert data.n_features == 7
    assert data.y.tolist() == [1.0]
    assert data.row(0) == [(2, 0.5), (6, 1.2)]


@pytest.mark.parametrize("label, expected", [
    ("0", -1.0), ("-1", -1.0), ("1", 1.0), ("+1", 1.0), ("2", 1.0),
    ("-0.5", -1.0), ("3.5", 1.0),
])
def test_label_sign_mapping(label, expected):
    assert parse_libsvm(f"{label} 1:1").y[0] == expected


def test_n_features_override():
    assert parse_libsvm("1 2:1", n_features=10).n_features == 10
    with pytest.raises(ParseError):
        parse_libsvm("1 12:1", n_features=10)


def test_blank_lines_and_comments_skipped():
    data = parse_libsvm("# header\n\n1 1:2 # trailing\n-1\n")
    assert data.n_samples == 2
    assert data.row(1) == []


@pytest.mark.parametrize("text, lineno, fragment", [
    ("1 2:1 2:1", 1, "non-ascending index"),
    ("1 1:1\n1 3:1 2:1", 2, "non-ascending index"),
    ("1 1:1\n-1 a:1", 2, "malformed pair"),
    ("1 1-1", 1, "malformed pair"),
    ("1 1:x", 1, "malformed pair"),
    ("1 0:1", 1, "not 1-based"),
    ("1\nfoo 1:1", 2, "bad label"),
])
def test_malformed_lines_report_line_number(text, lineno, fragment):
    with pytest.raises(ParseError) as err:
        parse_libsvm(text)
    assert err.value.lineno == lineno
    assert fragment in str(err.value)
    assert f"at line {lineno}" in str(err.value)


def test_non_ascending_message_exact():
    with pytest.raises(ParseError, match="^non-ascending index at line 1$"):
        parse_libsvm("1 2:1 2:1")


@pytest.mark.parametrize("text", ["", "\n\n", "# only a comment\n"])
def test_empty_file(text):
    with pytest.raises(ParseError, match="empty"):
        parse_libsvm(text)


@st.composite
def libsvm_text(draw):
    n = draw(st.integers(1, 8))
    lines = []
    for _ in range(n):
        label = draw(st.sampled_from(["1", "-1", "0", "+1", "2.5"]))
        idx = sorted(draw(st.sets(st.integers(1, 30), max_size=6)))
        vals = draw(st.lists(
            st.floats(allow_nan=False, allow_infinity=False, width=64),
            min_size=len(idx), max_size=len(idx)))
        lines.append(" ".join([label] + [f"{i}:{v!r}" for i, v in zip(idx, vals)]))
    return "\n".join(lines) + "\n"


@settings(max_examples=100, deadline=None)
@given(libsvm_text())
def test_round_trip(text):
    first = parse_libsvm(text)
    buf = io.StringIO()
    dump_libsvm(first, buf)
    second = parse_libsvm(buf.getvalue(), n_features=first.n_features)
    assert first == second


def test_dataset_invariants_enforced():
    with pytest.raises(ValueError, match="labels"):
        dense_dataset([[1.0]], [0.0])
    with pytest.raises(ValueError, match="length"):
        dense_dataset([[1.0], [2.0]], [1.0])


def test_dataset_is_read_only():
    data = dense_dataset([[1.0, 2.0]], [1.0])
    with pytest.raises(ValueError):
        data.y[0] = -1.0
    with pytest.raises(ValueError):
        data.X.data[0] = 5.0


def _idx_bytes(magic, dims, payload):
    return (struct.pack(">I", magic) + struct.pack(f">{len(dims)}I", *dims)
            + bytes(payload))


def _mnist_streams(images, labels):
    images = np.asarray(images, dtype=np.uint8)
    n = images.shape[0]
    return (io.BytesIO(_idx_bytes(0x803, (n, 28, 28), images.ravel())),
            io.BytesIO(_idx_bytes(0x801, (n,), labels)))


def test_mnist_filter_and_labels():
    rng = np.random.default_rng(0)
    labels = [0, 1, 8, 3, 4, 0, 5, 6, 7, 9]
    images = rng.integers(0, 256, size=(10, 28, 28))
    data = convert_mnist_idx(*_mnist_streams(images, labels), 0, 8)
    assert data.n_samples == 3
    assert data.n_features == 784
    assert data.y.tolist() == [1.0, -1.0, 1.0]


def test_mnist_zero_image_and_scaling():
    images = np.zeros((2, 28, 28), dtype=np.uint8)
    images[1, 0, 3] = 255
    data = convert_mnist_idx(*_mnist_streams(images, [0, 8]), 0, 8)
    assert data.row(0) == []
    assert data.y[0] == 1.0
    assert data.row(1) == [(3, 1.0)]


def test_mnist_bad_magic():
    imgs, lbls = _mnist_streams(np.zeros((1, 28, 28)), [0])
    with pytest.raises(ParseError, match="magic"):
        convert_mnist_idx(lbls, imgs)


def test_mnist_length_mismatch():
    imgs, _ = _mnist_streams(np.zeros((2, 28, 28)), [0, 0])
    _, lbls = _mnist_streams(np.zeros((3, 28, 28)), [0, 0, 8])
    with pytest.raises(ParseError, match="labels"):
        convert_mnist_idx(imgs, lbls)


def test_shuffle_deterministic_and_bijective(rng):
    data = make_synthetic(50, 4, seed=3)
    a, b = shuffle(data, 7), shuffle(data, 7)
    assert a == b
    assert a != data
    assert sorted(a.row_fingerprints()) == sorted(data.row_fingerprints())
    assert a.fingerprint() == data.fingerprint()
    assert sorted(a.y.tolist()) == sorted(data.y.tolist())


def test_shuffle_single_row():
    data = dense_dataset([[1.0, 0.0, 2.0]], [-1.0])
    assert shuffle(data, 123) == data


def test_prefix_views_are_nested():
    data = shuffle(make_synthetic(40, 3, seed=0), 1)
    fps = data.row_fingerprints()
    for m in range(1, 41, 7):
        for n in range(m, 41, 5):
            vm, vn = SampleView(data, m), SampleView(data, n)
            assert vm.X.shape[0] == m
            np.testing.assert_array_equal(vm.X.toarray(), vn.X[:m].toarray())
            assert set(fps[:m]) <= set(fps[:n])


def test_view_size_bounds():
    data = make_synthetic(5, 2, seed=0)
    with pytest.raises(ValueError):
        SampleView(data, 0)
    with pytest.raises(ValueError):
        SampleView(data, 6)


def test_dataset_equality_type():
    data = make_synthetic(5, 2, seed=0)
    assert data == SparseDataset(data.X.copy(), data.y.copy())
    assert (data == "x") is False
