import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghsv.partitions import (EnumerationGuardError, Partition, SPath, bell_number, catalan_number,
                             enumerate_partitions, enumerate_spaths, partition_to_spath, spath_multiplicity,
                             validate_spath)
from tests.oracles import brute_partitions


def test_validate_spath_examples():
    assert validate_spath((2, 1, 0))
    assert not validate_spath((1, 0, 2))
    assert validate_spath((4, 0, 0, 0))
    assert not validate_spath((1, 2))  # does not sum to n
    assert not validate_spath((2, -1, 2))


def test_partition_to_spath_examples():
    assert partition_to_spath(Partition([[1, 3], [2]])) == (2, 1, 0)
    assert partition_to_spath(Partition([[1], [2], [3]])) == (1, 1, 1)
    assert partition_to_spath(Partition([[1, 2, 3]])) == (3, 0, 0)


def test_partition_canonical_and_errors():
    p = Partition([[3, 1], [2]])
    assert p.cells == ((1, 3), (2,))
    assert p == Partition.from_labels(["a", "b", "a"])
    np.testing.assert_array_equal(p.labels(), [0, 1, 0])
    assert p.sizes == (2, 1) and p.i_stars == (1, 2) and p.n_cells == 2
    with pytest.raises(ValueError):
        Partition([[1, 2], [2, 3]])
    with pytest.raises(ValueError):
        Partition([[1], [3]])


@pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (6, 203)])
def test_partition_counts(n, count):
    parts = enumerate_partitions(n)
    assert len(parts) == count == bell_number(n)
    assert len(set(parts)) == count


@pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 5), (4, 14), (5, 42), (6, 132)])
def test_spath_counts(n, count):
    paths = enumerate_spaths(n)
    assert len(paths) == count == catalan_number(n)
    assert all(validate_spath(m) for m in paths)


@pytest.mark.parametrize("n", range(1, 7))
def test_enumeration_matches_brute_force(n):
    ours = {p.cells for p in enumerate_partitions(n)}
    assert ours == set(brute_partitions(n))


@pytest.mark.parametrize("n", range(1, 8))
def test_spaths_are_images_of_partitions(n):
    from collections import Counter
    image = Counter(partition_to_spath(p) for p in enumerate_partitions(n))
    assert set(image) == set(enumerate_spaths(n))
    for m, c in image.items():
        assert spath_multiplicity(m) == c


def test_guards():
    with pytest.raises(EnumerationGuardError):
        enumerate_partitions(11)
    with pytest.raises(EnumerationGuardError):
        enumerate_spaths(13)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=8))
def test_labels_roundtrip(labels):
    p = Partition.from_labels(labels)
    assert Partition.from_labels(p.labels()) == p
    m = partition_to_spath(p)
    assert isinstance(m, SPath) and m.is_valid()
    assert sum(m.xi) == p.n_cells
