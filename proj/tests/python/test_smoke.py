import math

import numpy as np
import pytest

import nlfem


def test_structured_mesh():
    m = nlfem.structured_mesh(0.5, 0.2, 5)
    assert m.element_count == 162
    assert m.vertices().shape == (100, 2)
    assert m.elements().shape == (162, 3)
    assert math.isclose(m.h, math.sqrt(2) * 0.1)
    assert set(np.unique(m.labels())) == {1, 2}


def test_symmetric_stiffness():
    m = nlfem.structured_mesh(0.5, 0.2, 5)
    A, free = nlfem.stiffness_matrix(m, kernel="fractional", all_rows=True)
    assert A.shape == (100, 100)
    assert free.sum() == 16
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()


def test_study_rate():
    rows = nlfem.run_study(kernel="fractional", levels=[5, 10])
    assert [r["dof"] for r in rows] == [16, 81]
    assert 1.5 < rows[1]["rate"] < 2.7


def test_infinity_clip():
    area = nlfem.intersect_area([[0, 0], [1, 0], [0, 1]], [0, 0], 0.5, "infinity")
    assert math.isclose(area, 0.25, rel_tol=1e-12)


def test_kernel_value():
    v = nlfem.kernel_value("constant-infinity", 0.0, 0.1, [0, 0], [0.05, 0])
    assert math.isclose(v[0], 3 / (4 * 0.1**4))


def test_errors():
    with pytest.raises(ValueError):
        nlfem.structured_mesh(0.5, 0.2, 1)
    with pytest.raises(ValueError):
        nlfem.parse_mesh("nlmesh 1 3 1\n0 0\n1 0\n")
