import os

import numpy as np
import pytest
import scipy.sparse as sp

from steklov_lab import io


def test_fmt():
    assert io.fmt(1.0) == "1.000000000000e+00"
    assert io.fmt(np.float64(-0.5)) == "-5.000000000000e-01"
    assert io.fmt(True) == "1"
    assert io.fmt(3) == "3"
    assert io.fmt("OE") == "OE"


def test_csv_layout():
    text = io.csv_text(("a", "b"), [(1, 2.0)], {"z": 1, "k": "x"})
    assert text.splitlines() == ["# config: k=x z=1", "a,b", "1,2.000000000000e+00"]


def test_coo_sorted():
    m = sp.coo_matrix(([3.0, 1.0, 2.0], ([1, 0, 0], [0, 1, 0])), shape=(2, 2))
    assert io.coo_text(m).splitlines() == [
        "0 0 2.000000000000e+00", "0 1 1.000000000000e+00", "1 0 3.000000000000e+00"]


def test_atomic_write(tmp_path):
    path = tmp_path / "sub" / "f.txt"
    io.atomic_write_text(path, "one\n")
    io.atomic_write_text(path, "two\n")
    assert path.read_text() == "two\n"
    assert os.listdir(path.parent) == ["f.txt"]


def test_atomic_write_failure_leaves_nothing(tmp_path):
    with pytest.raises(TypeError):
        io.atomic_write_text(tmp_path / "f.txt", 5)
    assert os.listdir(tmp_path) == []
