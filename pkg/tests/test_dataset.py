import numpy as np
import pytest

from mbsvm.core.dataset import Dataset, load_dataset, make_example, normalize, read_text, save_dataset, split
from mbsvm.core.errors import DatasetParseError, DegenerateDataError, DimensionError, DomainError


def test_parse_basic():
    ds = read_text("+1 1:0.5 3:1\n-1 2:2\n")
    assert ds.n == 2
    assert ds.dim == 3
    np.testing.assert_array_equal(ds.labels, [1.0, -1.0])
    np.testing.assert_array_equal(ds.example(0).indices, [0, 2])
    np.testing.assert_array_equal(ds.example(0).values, [0.5, 1.0])
    assert ds.example(1).sq_norm == 4.0
    assert ds.nnz == 3


def test_zero_label_maps_to_negative_and_comments_are_skipped():
    ds = read_text("# header\n0 1:1\n\n2 2:1 # trailing\n")
    np.testing.assert_array_equal(ds.labels, [-1.0, 1.0])


def test_zero_values_are_dropped():
    ds = read_text("1 1:0 2:3\n")
    np.testing.assert_array_equal(ds.example(0).indices, [1])


def test_forced_dimension():
    assert read_text("1 2:1\n", dim=10).dim == 10
    with pytest.raises(DimensionError):
        read_text("1 5:1\n", dim=3)


@pytest.mark.parametrize("text, line, reason", [
    ("1 1:1\n1 3:1 2:1\n", 2, "indices not increasing"),
    ("1 2:1 2:3\n", 1, "duplicate index"),
    ("1 0:1\n", 1, "1-based"),
    ("1 a:b\n", 1, "malformed"),
    ("x 1:1\n", 1, "malformed label"),
])
def test_parse_errors_report_the_line(text, line, reason):
    with pytest.raises(DatasetParseError) as info:
        read_text(text)
    assert info.value.line_number == line
    assert reason in str(info.value)


def test_empty_input_is_degenerate():
    with pytest.raises(DegenerateDataError):
        read_text("# nothing here\n\n")


def test_make_example_validation():
    with pytest.raises(DomainError):
        make_example([2, 1], [1.0, 1.0], 1.0)
    with pytest.raises(DomainError):
        make_example([0], [np.nan], 1.0)
    with pytest.raises(DomainError):
        make_example([0], [1.0], 0.5)


def test_normalize_scales_by_global_max_norm():
    ds = normalize(read_text("1 1:3 2:4\n-1 1:1\n"))
    assert ds.max_norm == pytest.approx(1.0)
    assert ds.scale_factor == pytest.approx(5.0)
    np.testing.assert_allclose(ds.example(1).values, [0.2])


def test_normalize_is_idempotent():
    once = normalize(read_text("1 1:3 2:4\n-1 1:1\n"))
    twice = normalize(once)
    assert twice.scale_factor == 1.0
    np.testing.assert_array_equal(twice.matrix.toarray(), once.matrix.toarray())


def test_normalize_all_zero_is_degenerate():
    with pytest.raises(DegenerateDataError):
        normalize(read_text("1\n-1\n"))


def test_split_is_seeded_and_disjoint(small_random):
    train, test = split(small_random, 0.25, seed=5)
    assert test.n == 3
    assert train.n == 9
    again_train, again_test = split(small_random, 0.25, seed=5)
    assert test.fingerprint() == again_test.fingerprint()
    rows = {tuple(small_random.matrix[i].toarray().ravel()) for i in range(small_random.n)}
    assert {tuple(r) for r in train.matrix.toarray()} | {tuple(r) for r in test.matrix.toarray()} <= rows


def test_save_and_load_compressed(tmp_path, small_random):
    path = str(tmp_path / "data.txt.zst")
    save_dataset(small_random, path)
    loaded = load_dataset(path, dim=small_random.dim)
    assert loaded.n == small_random.n
    np.testing.assert_array_equal(loaded.labels, small_random.labels)
    np.testing.assert_array_equal(loaded.matrix.toarray(), small_random.matrix.toarray())


def test_fingerprint_depends_on_labels():
    a = read_text("1 1:1\n-1 2:1\n")
    b = read_text("1 1:1\n1 2:1\n")
    assert a.fingerprint() == read_text("+1 1:1\n-1 2:1\n").fingerprint()
    assert a.fingerprint() != b.fingerprint()


def test_dataset_rejects_small_dimension():
    with pytest.raises(DimensionError):
        Dataset([make_example([4], [1.0], 1.0)], dim=2)


def test_invalid_utf8_reports_the_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_bytes(b"+1 1:0.5\n-1 2:\xff\xfe\n")
    with pytest.raises(DatasetParseError) as excinfo:
        load_dataset(str(path))
    assert excinfo.value.line_number == 2
    assert "0xff" in str(excinfo.value)


def test_corrupt_zstd_file_is_a_parse_error(tmp_path):
    path = tmp_path / "bad.txt.zst"
    path.write_bytes(b"+1 1:0.5\n-1 2:1.0\n")
    with pytest.raises(DatasetParseError) as excinfo:
        load_dataset(str(path))
    assert excinfo.value.line_number is None
