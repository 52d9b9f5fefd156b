import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from granureg import (
    BoundingBox,
    DimensionMismatchError,
    EmptyModelError,
    Granule,
    GranuleSet,
    Instance,
    covering_granules,
    covers,
    find_closest_granule,
    mindist_sq,
    predict,
)
from _oracles import oracle_grid_mindist_sq, oracle_predict

UNIT = BoundingBox([0.0, 0.0], [1.0, 1.0])


def box(lo, hi):
    return BoundingBox(lo, hi)


class TestInstance:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Instance([0.0, np.nan], [1.0])

    def test_rejects_inf_target(self):
        with pytest.raises(ValueError):
            Instance([0.0], [np.inf])

    def test_rejects_negative_sequence_id(self):
        with pytest.raises(ValueError):
            Instance([0.0], [1.0], sequence_id=-1)

    def test_dims(self):
        inst = Instance([1.0, 2.0, 3.0], [4.0, 5.0], 7)
        assert inst.d_x == 3 and inst.d_y == 2 and inst.sequence_id == 7


class TestBoundingBox:
    def test_degenerate_allowed(self):
        b = box([1.0], [1.0])
        assert b.d == 1

    def test_inverted_rejected(self):
        with pytest.raises(ValueError):
            box([2.0], [1.0])

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            box([0.0], [1.0, 2.0])


class TestCovers:
    def test_interior_point(self):
        assert covers(UNIT, [0.5, 0.5])

    def test_boundary_inclusive(self):
        assert covers(UNIT, [1.0, 1.0])
        assert covers(UNIT, [0.0, 0.0])

    def test_ignored_dimension(self):
        assert not covers(UNIT, [1.5, 0.5])
        assert covers(UNIT, [1.5, 0.5], ignore_dims={0})

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            covers(UNIT, [0.5])


class TestMindistSq:
    def test_covered_point_is_zero(self):
        assert mindist_sq(UNIT, [0.5, 0.5]) == 0.0

    def test_outside_one_axis(self):
        # frozen from the dense-grid minimization oracle
        assert oracle_grid_mindist_sq([0, 0], [1, 1], [2.0, 0.5]) == pytest.approx(1.0, abs=1e-4)
        assert mindist_sq(UNIT, [2.0, 0.5]) == 1.0

    def test_outside_corner(self):
        assert oracle_grid_mindist_sq([0, 0], [1, 1], [2.0, 3.0]) == pytest.approx(5.0, abs=1e-3)
        assert mindist_sq(UNIT, [2.0, 3.0]) == 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            mindist_sq(UNIT, [0.5, 0.5, 0.5])

    @given(
        st.integers(1, 5),
        st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_zero_iff_covered(self, d, seed):
        rng = np.random.default_rng(seed)
        lo = rng.uniform(-5, 5, d)
        hi = lo + rng.uniform(0, 3, d)
        b = box(lo, hi)
        q = rng.uniform(-8, 8, d)
        assert (mindist_sq(b, q) == 0.0) == covers(b, q)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_grid_oracle(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 4))
        lo = rng.uniform(-3, 3, d)
        hi = lo + rng.uniform(0.1, 2, d)
        q = rng.uniform(-5, 5, d)
        approx = oracle_grid_mindist_sq(list(lo), list(hi), list(q), steps=60)
        assert mindist_sq(box(lo, hi), q) == pytest.approx(approx, rel=0.0, abs=2e-2)


def two_granules():
    a = Granule(
        box=box([0.0, 0.0], [1.0, 1.0]),
        members=(Instance([0.5, 0.5], [2.0], 0),),
        mean_target=np.array([2.0]),
        granule_id=0,
    )
    b = Granule(
        box=box([5.0, 5.0], [6.0, 6.0]),
        members=(Instance([5.5, 5.5], [4.0], 1),),
        mean_target=np.array([4.0]),
        granule_id=1,
    )
    return [a, b]


class TestFindClosest:
    def test_nearer_granule_wins(self):
        a, b = two_granules()
        # distances at (2, 2): a is 2.0, b is 18.0
        assert find_closest_granule([a, b], [2.0, 2.0]) is a

    def test_single_granule(self):
        a, _ = two_granules()
        assert find_closest_granule([a], [100.0, 100.0]) is a

    def test_tie_breaks_to_smaller_id(self):
        left = Granule(
            box=box([0.0], [1.0]), members=(Instance([0.5], [1.0], 0),),
            mean_target=np.array([1.0]), granule_id=3,
        )
        right = Granule(
            box=box([3.0], [4.0]), members=(Instance([3.5], [2.0], 1),),
            mean_target=np.array([2.0]), granule_id=1,
        )
        # query at 2.0 is 1.0 away from both boxes
        assert find_closest_granule([left, right], [2.0]) is right

    def test_empty_raises(self):
        with pytest.raises(EmptyModelError):
            find_closest_granule([], [0.0])


class TestCoveringGranules:
    def test_single_cover(self):
        a, b = two_granules()
        assert covering_granules([a, b], [0.5, 0.5]) == [a]

    def test_overlapping_covers_ordered_by_id(self):
        a = Granule(box=box([0.0], [2.0]), members=(Instance([1.0], [1.0], 0),),
                    mean_target=np.array([1.0]), granule_id=5)
        b = Granule(box=box([1.0], [3.0]), members=(Instance([2.0], [2.0], 1),),
                    mean_target=np.array([2.0]), granule_id=2)
        got = covering_granules([a, b], [1.5])
        assert [g.granule_id for g in got] == [2, 5]

    def test_no_cover(self):
        a, b = two_granules()
        assert covering_granules([a, b], [3.0, 3.0]) == []


class TestPredict:
    def test_mean_of_two_covering(self, rng):
        a = Granule(box=box([0.0], [2.0]), members=(Instance([1.0], [2.0], 0),),
                    mean_target=np.array([2.0]), granule_id=0)
        b = Granule(box=box([1.0], [3.0]), members=(Instance([2.0], [4.0], 1),),
                    mean_target=np.array([4.0]), granule_id=1)
        assert predict([a, b], [1.5]) == pytest.approx([3.0])

    def test_fallback_to_nearest(self):
        far = Granule(
            box=box([90.0, 90.0], [91.0, 91.0]),
            members=(Instance([90.5, 90.5], [7.0], 2),),
            mean_target=np.array([7.0]), granule_id=2,
        )
        assert predict([far], [0.0, 0.0]) == pytest.approx([7.0])

    def test_single_cover_exact(self):
        g = Granule(box=box([0.0], [1.0]), members=(Instance([0.5], [-1.5], 0),),
                    mean_target=np.array([-1.5]), granule_id=0)
        assert predict([g], [0.25])[0] == -1.5

    def test_empty_model(self):
        with pytest.raises(EmptyModelError):
            predict([], [0.0])

    def test_permutation_invariance(self, rng):
        granules = []
        for gid in range(6):
            lo = rng.uniform(-4, 4, 3)
            hi = lo + rng.uniform(0, 2, 3)
            member = Instance(rng.uniform(lo, hi), rng.normal(0, 1, 2), gid)
            granules.append(Granule(box=box(lo, hi), members=(member,),
                                    mean_target=member.target, granule_id=gid))
        for _ in range(50):
            q = rng.uniform(-6, 6, 3)
            base = predict(granules, q)
            perm = [granules[i] for i in rng.permutation(len(granules))]
            assert np.array_equal(predict(perm, q), base)

    def test_matches_linear_scan_oracle(self, rng):
        for _ in range(20):
            d = int(rng.integers(1, 4))
            granules = []
            plain = []
            for gid in range(int(rng.integers(1, 8))):
                lo = rng.uniform(-5, 5, d)
                hi = lo + rng.uniform(0, 3, d)
                member = Instance(rng.uniform(lo, hi), rng.normal(0, 2, 1), gid)
                granules.append(Granule(box=box(lo, hi), members=(member,),
                                        mean_target=member.target, granule_id=gid))
                plain.append((gid, list(lo), list(hi), list(member.target)))
            for _ in range(25):
                q = rng.uniform(-7, 7, d)
                expected = oracle_predict(plain, list(q))
                got = predict(granules, q)
                assert [float(v) for v in got] == expected


class TestGranuleSet:
    def test_sorted_by_id_and_unique(self):
        a, b = two_granules()
        gs = GranuleSet([b, a])
        assert [g.granule_id for g in gs] == [0, 1]
        with pytest.raises(ValueError):
            GranuleSet([a, a])

    def test_empty_rejected(self):
        with pytest.raises(EmptyModelError):
            GranuleSet([])

    def test_consistent_with_loop_ops(self, rng):
        granules = []
        for gid in range(10):
            lo = rng.uniform(-5, 5, 2)
            hi = lo + rng.uniform(0, 4, 2)
            member = Instance(rng.uniform(lo, hi), rng.normal(0, 1, 1), gid)
            granules.append(Granule(box=box(lo, hi), members=(member,),
                                    mean_target=member.target, granule_id=gid))
        gs = GranuleSet(granules)
        for _ in range(100):
            q = rng.uniform(-7, 7, 2)
            mask = gs.covering_mask(q)
            loop_ids = [g.granule_id for g in covering_granules(granules, q)]
            assert list(gs.ids[mask]) == loop_ids
            dists = gs.mindist_sq_all(q)
            for i, g in enumerate(gs):
                assert dists[i] == mindist_sq(g.box, q)
            assert gs[gs.closest_index(q)] is find_closest_granule(granules, q)
