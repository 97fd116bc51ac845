import pytest

from dgtau.mesh import BOUNDARY, build_cartesian_mesh, dof_count, with_element_orders


def test_row_major_numbering_and_geometry():
    m = build_cartesian_mesh(4, 3, (2, 3))
    e = m.elements[5]
    assert e.grid == (1, 1)
    assert e.cell_origin == pytest.approx((0.25, 1 / 3))
    assert e.jacobian == pytest.approx(0.25 * (1 / 3) / 4)
    assert m.element_at(1, 1) is e


def test_face_counts_and_boundaries():
    m = build_cartesian_mesh(4, 4)
    assert len(m.faces) == 2 * 4 * 5
    assert sum(f.is_boundary for f in m.faces) == 16
    for f in m.faces:
        assert f.normal in ((1.0, 0.0), (0.0, 1.0))


def test_face_trace_orders_are_tangential():
    m = build_cartesian_mesh(2, 1, [(3, 5), (4, 2)])
    inner = [f for f in m.faces if not f.is_boundary][0]
    assert (inner.left, inner.right, inner.axis) == (0, 1, 0)
    assert (inner.left_order, inner.right_order) == (5, 2)


def test_neighbours():
    m = build_cartesian_mesh(3, 3)
    assert m.neighbor(4, "-x") == 3
    assert m.neighbor(4, "+y") == 7
    assert m.neighbor(0, "-y") == BOUNDARY
    assert m.neighbor(2, "+x") == BOUNDARY


def test_locate_uses_half_open_cells():
    m = build_cartesian_mesh(4, 4)
    assert m.locate(0.5, 0.5) == 10
    assert m.locate(0.0, 0.0) == 0
    assert m.locate(1.0, 1.0) == 15


def test_with_element_orders_changes_one_element():
    m = build_cartesian_mesh(2, 2, (5, 5))
    m2 = with_element_orders(m, 3, (2, 4))
    assert m2.orders == [(5, 5)] * 3 + [(2, 4)]
    assert m.orders == [(5, 5)] * 4


def test_dofs():
    assert dof_count((2, 4)) == 15
    assert build_cartesian_mesh(2, 2, (1, 1)).total_dofs() == 16
    with pytest.raises(ValueError):
        dof_count((0, 3))


@pytest.mark.parametrize("args", [(0, 2, (2, 2)), (2, 2, (0, 2)), (2, 2, (2, 21)),
                                  (2, 2, [(1, 1)] * 3)])
def test_invalid_meshes(args):
    with pytest.raises(ValueError):
        build_cartesian_mesh(*args)
