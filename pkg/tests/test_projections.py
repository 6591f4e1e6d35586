import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsfloorplan.model import make_placement
from fsfloorplan.projections import (
    BoundarySegment,
    BoxConstraint,
    EmptyCellError,
    HalfSpacePair,
    InfeasibleRegionError,
    in_cell,
    make_cell,
    project_box,
    project_boundary_segment,
    project_cell,
    project_halfspace_pair,
    qp_oracle,
)

from helpers import instance, oracle_cell_projection, random_cell_case

seeds = st.integers(0, 2**32 - 1)


def _two(die=(10, 10), a=(4, 4), b=(4, 4)):
    return instance(die, [a, b])


# -- examples ------------------------------------------------------------------

def test_project_box_examples():
    inst = instance((10, 10), [(4, 4)])
    c = BoxConstraint.for_module(inst, 0)
    assert (c.x_hi, c.y_hi) == (6, 6)
    z = make_placement(inst, [(-1, 3)])
    assert project_box(z, c, inst.n)[0] == 0
    z = make_placement(inst, [(2, 3)])
    assert np.array_equal(project_box(z, c, inst.n), z)
    z = make_placement(inst, [(9, 3)])
    out = project_box(z, c, inst.n)
    assert out[0] == 6 and out[1] == 3 and np.linalg.norm(out - z) == 3
    assert np.allclose(qp_oracle([9.0], [[-1.0], [1.0]], [0.0, 6.0]), [6.0])


def test_project_halfspace_pair_examples():
    h = HalfSpacePair(0, 1, 0, 4.0)
    out = project_halfspace_pair(np.array([5.0, 7.0, 0.0, 0.0]), h, 2)
    assert out[:2].tolist() == [4.0, 8.0]
    assert np.allclose(qp_oracle([5.0, 7.0], [[1.0, -1.0]], [-4.0]), [4.0, 8.0])
    z = np.array([0.0, 7.0, 0.0, 0.0])
    assert np.array_equal(project_halfspace_pair(z, h, 2), z)
    z = np.array([3.0, 7.0, 0.0, 0.0])  # tight
    assert np.array_equal(project_halfspace_pair(z, h, 2), z)


def test_project_cell_examples():
    inst = instance((10, 10), [(2, 2), (2, 2)])
    cell = make_cell(inst, 0, 1, "L")
    z = make_placement(inst, [(5, 0), (5, 0)])
    out = project_cell(z, cell, inst.n)
    assert out[0] == 4 and out[1] == 6
    inside = make_placement(inst, [(1, 0), (5, 0)])
    assert np.array_equal(project_cell(inside, cell, inst.n), inside)

    inst = instance((12, 10), [(4, 2), (4, 2)])
    cell = make_cell(inst, 0, 1, "L")
    z = make_placement(inst, [(7, 0), (7, 0)])
    out = project_cell(z, cell, inst.n)
    assert out[0] == 4 and out[1] == 8
    A, b = np.array([[-1, 0], [1, 0], [0, -1], [0, 1], [1, -1]], float), np.array([0, 8, 0, 8, -4], float)
    assert np.allclose(qp_oracle([7, 7], A, b), [4, 8])


def test_project_cell_directions_map_to_half_spaces():
    inst = instance((10, 10), [(3, 2), (1, 4)])
    z = make_placement(inst, [(4, 4), (4, 4)])
    N = inst.n
    L = project_cell(z, make_cell(inst, 0, 1, "L"), N)
    R = project_cell(z, make_cell(inst, 0, 1, "R"), N)
    B = project_cell(z, make_cell(inst, 0, 1, "B"), N)
    A = project_cell(z, make_cell(inst, 0, 1, "A"), N)
    assert L[0] + 3 <= L[1] + 1e-12
    assert R[1] + 1 <= R[0] + 1e-12
    assert B[N] + 2 <= B[N + 1] + 1e-12
    assert A[N + 1] + 4 <= A[N] + 1e-12


def test_empty_cell_is_reported():
    # both modules wider than half the die: no left/right arrangement exists
    inst = instance((10, 10), [(6, 2), (6, 2)])
    cell = make_cell(inst, 0, 1, "L")
    assert cell.empty
    with pytest.raises(EmptyCellError):
        project_cell(make_placement(inst, [(0, 0), (0, 0)]), cell, inst.n)
    A, b = np.array([[-1, 0], [1, 0], [0, -1], [0, 1], [1, -1]], float), np.array([0, 4, 0, 4, -6], float)
    with pytest.raises(InfeasibleRegionError):
        qp_oracle([0, 0], A, b)
    assert not make_cell(inst, 0, 1, "B").empty


def test_project_boundary_segment_examples():
    inst = instance((10, 10), [(1, 1)], io=[("L",)])
    seg = BoundarySegment.for_io(inst, 0)
    N = inst.n
    z = make_placement(inst, [(0, 0)], [(3, 5)])
    out = project_boundary_segment(z, seg, N)
    assert (out[1], out[N + 1]) == (0, 5)
    z = make_placement(inst, [(0, 0)], [(-2, 12)])
    out = project_boundary_segment(z, seg, N)
    assert (out[1], out[N + 1]) == (0, 10)
    z = make_placement(inst, [(0, 0)], [(0, 7)])
    assert np.array_equal(project_boundary_segment(z, seg, N), z)


def test_qp_oracle_examples():
    assert np.array_equal(qp_oracle([1.0, 2.0], np.zeros((0, 2)), []), [1.0, 2.0])
    assert np.allclose(qp_oracle([3.0], [[1.0]], [0.0]), [0.0])
    with pytest.raises(ValueError):
        qp_oracle(np.zeros(5), np.zeros((1, 5)), [0])


# -- properties -----------------------------------------------------------------

def _projectors(rng):
    """Random (projector, membership test) pairs over a two-module-plus-pin instance."""
    inst, z, cell = random_cell_case(rng)
    W, H = inst.die.width, inst.die.height
    full = instance((W, H), [(m.width, m.height) for m in inst.modules], io=[(str(rng.choice(list("LRBT"))),)])
    N = full.n
    cell = make_cell(full, 0, 1, cell.direction)
    box = BoxConstraint.for_module(full, int(rng.integers(2)))
    hs = HalfSpacePair(0, 1, int(rng.integers(2)), float(rng.uniform(0.1, 5)))
    seg = BoundarySegment.for_io(full, 0)

    def in_box(p):
        return 0 <= p[box.target] <= box.x_hi and 0 <= p[N + box.target] <= box.y_hi

    def in_hs(p):
        off = 0 if hs.axis == 0 else N
        return p[off] + hs.separation <= p[off + 1] + 1e-9

    def in_seg(p):
        fixed, free = (p[2], p[N + 2]) if seg.axis == 0 else (p[N + 2], p[2])
        return fixed == seg.value and seg.lo <= free <= seg.hi

    def in_c(p):
        q = p.tolist()
        off = 0 if cell.axis == 0 else N
        tol = 1e-9
        return (all(-tol <= q[k] <= hi + tol for k, hi in ((0, cell.x_hi[0]), (1, cell.x_hi[1]),
                                                           (N, cell.y_hi[0]), (N + 1, cell.y_hi[1])))
                and q[off + cell.first] + cell.separation <= q[off + cell.second] + tol)

    return full, [
        (lambda p: project_box(p, box, N), in_box),
        (lambda p: project_halfspace_pair(p, hs, N), in_hs),
        (lambda p: project_cell(p, cell, N), in_c),
        (lambda p: project_boundary_segment(p, seg, N), in_seg),
    ]


def _rand_point(rng, inst):
    W, H = inst.die.width, inst.die.height
    return np.concatenate([rng.uniform(-W, 2 * W, inst.n), rng.uniform(-H, 2 * H, inst.n)])


@settings(max_examples=200, deadline=None)
@given(seed=seeds)
def test_projectors_idempotent_and_members(seed):
    rng = np.random.default_rng(seed)
    inst, projs = _projectors(rng)
    z = _rand_point(rng, inst)
    for P, member in projs:
        p = P(z)
        assert member(p)
        pp = P(p)
        assert np.allclose(pp, p, rtol=1e-12, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(seed=seeds)
def test_projectors_non_expansive(seed):
    rng = np.random.default_rng(seed)
    inst, projs = _projectors(rng)
    z1, z2 = _rand_point(rng, inst), _rand_point(rng, inst)
    for P, _ in projs:
        p1, p2 = P(z1), P(z2)
        # firm non-expansiveness: |P1-P2|^2 <= <P1-P2, z1-z2>
        d = p1 - p2
        assert d @ d <= d @ (z1 - z2) + 1e-9 * (1 + np.linalg.norm(z1 - z2) ** 2)
        assert np.linalg.norm(d) <= np.linalg.norm(z1 - z2) + 1e-9


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_projections_beat_random_feasible_points(seed):
    rng = np.random.default_rng(seed)
    inst, projs = _projectors(rng)
    z = _rand_point(rng, inst)
    for P, member in projs:
        dist = np.linalg.norm(z - P(z))
        found = 0
        while found < 1000:
            # members of each set are easy to sample by projecting random points
            c = P(_rand_point(rng, inst) * rng.uniform(0.2, 1.0))
            assert member(c)
            assert dist <= np.linalg.norm(z - c) + 1e-9
            found += 1


@settings(max_examples=300, deadline=None)
@given(seed=seeds)
def test_project_cell_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    inst, z, cell = random_cell_case(rng)
    got = project_cell(z, cell, inst.n)
    ref = oracle_cell_projection(z, cell, inst.n)
    assert np.max(np.abs(got - ref)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_empty_cells_agree_with_oracle(seed):
    rng = np.random.default_rng(seed)
    inst, z, cell = random_cell_case(rng, allow_empty=True)
    if cell.empty:
        with pytest.raises(EmptyCellError):
            project_cell(z, cell, inst.n)
        with pytest.raises(InfeasibleRegionError):
            oracle_cell_projection(z, cell, inst.n)
    else:
        got = project_cell(z, cell, inst.n)
        assert np.max(np.abs(got - oracle_cell_projection(z, cell, inst.n))) < 1e-9


def test_projection_touches_at_most_four_entries():
    rng = np.random.default_rng(0)
    inst = instance((10, 10), [(3, 3)] * 4)
    z = rng.uniform(-5, 15, 2 * inst.n)
    cell = make_cell(inst, 1, 3, "B")
    changed = np.flatnonzero(project_cell(z, cell, inst.n) != z)
    assert set(changed) <= {1, 3, inst.n + 1, inst.n + 3}


def test_in_cell_accepts_projection_of_exact_inputs():
    inst = instance((10, 10), [(2, 2), (2, 2)])
    cell = make_cell(inst, 0, 1, "A")
    out = project_cell(make_placement(inst, [(3, 3), (3, 4)]), cell, inst.n)
    assert in_cell(out.tolist(), inst.n, cell)
    assert out[inst.n + 1] + 2 == out[inst.n]
