import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdlab.lattice import (Boundary, BoxSpec, CenteredSample, EmptyGradientError,
                           HeightField, LatticeSymmetry,
                           all_symmetries, apply_symmetry, box_sites, gradient_field,
                           neighbors, path_sum, recenter)


@pytest.mark.parametrize("d,N,expected", [
    (1, 1, [(-1,), (0,), (1,)]),
    (2, 0, [(0, 0)]),
])
def test_box_sites_small(d, N, expected):
    assert box_sites(BoxSpec(d, N)) == expected


def test_box_sites_d2_n1_has_nine():
    sites = box_sites(BoxSpec(2, 1))
    assert len(sites) == 9
    assert sites == sorted(sites)


@pytest.mark.parametrize("d,N", [(d, N) for d in range(1, 5) for N in (0, 1, 2, 5, 20)
                                 if (2 * N + 1) ** d <= 200_000])
def test_site_count(d, N):
    box = BoxSpec(d, N)
    assert box.size == (2 * N + 1) ** d == len(box.coords())


def test_index_roundtrip():
    box = BoxSpec(3, 2)
    for k, x in enumerate(box_sites(box)):
        assert box.index(x) == k and box.site(k) == x


def test_bad_box():
    with pytest.raises(ValueError):
        BoxSpec(0, 3)
    with pytest.raises(ValueError):
        BoxSpec(1, -1)


@pytest.mark.parametrize("x,expected", [
    ((0,), [(1,), (-1,)]),
    ((0, 0), [(1, 0), (-1, 0), (0, 1), (0, -1)]),
    ((5,), [(6,), (4,)]),
])
def test_neighbors(x, expected):
    assert neighbors(x) == expected


def test_gradient_of_constant_is_zero():
    h = HeightField.from_array(BoxSpec(2, 3), np.full((7, 7), 4))
    g = gradient_field(h)
    assert all((c == 0).all() for c in g.components)


def test_gradient_d1():
    g = gradient_field(HeightField.from_array(BoxSpec(1, 1), [0, 1, 2]))
    assert g.components[0].tolist() == [1, 1]


def test_gradient_needs_an_edge():
    with pytest.raises(EmptyGradientError):
        gradient_field(HeightField.zeros(BoxSpec(1, 0)))


@settings(max_examples=200, deadline=None)
@given(N=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_curl_free_on_random_fields(N, seed):
    rng = np.random.default_rng(seed)
    box = BoxSpec(2, N)
    h = HeightField.from_array(box, rng.integers(-50, 50, size=box.shape))
    assert gradient_field(h).is_curl_free()


def test_curl_free_1000_trials():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        box = BoxSpec(2, int(rng.integers(1, 11)))
        h = HeightField.from_array(box, rng.integers(-9, 9, size=box.shape))
        assert gradient_field(h).is_curl_free()


@settings(max_examples=100, deadline=None)
@given(d=st.integers(1, 3), N=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_path_sum_inverts_gradient(d, N, seed):
    rng = np.random.default_rng(seed)
    box = BoxSpec(d, N)
    s = recenter(HeightField.from_array(box, rng.integers(-20, 20, size=box.shape)))
    back = recenter(HeightField.from_array(box, path_sum(s.gradient())))
    assert np.array_equal(back.heights, s.heights)


def test_recenter_constant():
    s = recenter(HeightField.from_array(BoxSpec(2, 2), np.full((5, 5), 7)))
    assert (s.heights == 0).all() and s.raw_origin == 7


def test_recenter_d1():
    s = recenter(HeightField.from_array(BoxSpec(1, 1), [0, 3, 5]))
    assert s.heights.tolist() == [-3, 0, 2]


def test_recenter_is_idempotent():
    s = recenter(HeightField.from_array(BoxSpec(1, 2), [4, 1, 3, 3, 9]))
    t = recenter(s)
    assert np.array_equal(s.heights, t.heights)


def test_restrict_window():
    s = recenter(HeightField.from_array(BoxSpec(1, 3), np.arange(7)))
    w = s.restrict(1)
    assert w.heights.tolist() == [-1, 0, 1]
    with pytest.raises(ValueError):
        s.restrict(4)


def test_identity_symmetry():
    h = HeightField.from_array(BoxSpec(2, 1), np.arange(9).reshape(3, 3))
    assert apply_symmetry(LatticeSymmetry.identity(2), h).equals(h)


def test_reflection_d1():
    (refl,) = [s for s in all_symmetries(1) if s.signs == (-1,)]
    h = HeightField.from_array(BoxSpec(1, 1), [0, 1, 2])
    assert apply_symmetry(refl, h).heights.tolist() == [2, 1, 0]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_symmetry_of_constant(d):
    box = BoxSpec(d, 2)
    h = HeightField.from_array(box, np.full(box.shape, 3))
    for s in all_symmetries(d):
        assert apply_symmetry(s, h).equals(h)


@pytest.mark.parametrize("d,count", [(1, 2), (2, 8), (3, 48)])
def test_group_order(d, count):
    assert len(all_symmetries(d)) == count


def test_symmetry_moves_values_with_sites():
    rng = np.random.default_rng(3)
    box = BoxSpec(2, 2)
    h = HeightField.from_array(box, rng.integers(0, 100, size=box.shape))
    for s in all_symmetries(2):
        g = apply_symmetry(s, h)
        for x in box_sites(box):
            assert g.at(s(x)) == h.at(x)


def test_group_action_laws():
    rng = np.random.default_rng(11)
    box = BoxSpec(2, 3)
    h = HeightField.from_array(box, rng.integers(0, 50, size=box.shape))
    group = all_symmetries(2)
    e = LatticeSymmetry.identity(2)
    for s in group:
        assert apply_symmetry(s.compose(s.inverse()), h).equals(h)
        assert s.compose(e) == s and e.compose(s) == s
    for s, t in itertools.product(group, group):
        lhs = apply_symmetry(s, apply_symmetry(t, h))
        assert lhs.equals(apply_symmetry(s.compose(t), h))


def test_frozen_halo_defaults_to_edge_values():
    h = HeightField.from_array(BoxSpec(1, 1), [4, 5, 6], Boundary.FROZEN_INITIAL)
    assert h.at((-2,)) == 4 and h.at((2,)) == 6
    assert HeightField.from_array(BoxSpec(1, 1), [4, 5, 6]).at((2,)) == 0


def test_recenter_of_centred_sample_is_noop():
    s = CenteredSample(BoxSpec(1, 1), np.array([2, 0, -1]))
    assert recenter(s).heights.tolist() == [2, 0, -1]


def test_non_integer_heights_rejected():
    with pytest.raises(TypeError):
        HeightField.from_array(BoxSpec(1, 1), [1.5, 0, 0])
