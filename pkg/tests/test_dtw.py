import math

import pytest
from hypothesis import given, settings, strategies as st

from bankrisk.dtw import dtw_distance, median_gamma, similarity
from bankrisk.errors import AllZeroDistances, EmptySeries, InvalidInput


def naive_dtw(a, b, i=None, j=None):
    # memoization-free reference recursion, exponential on purpose
    if i is None:
        i, j = len(a), len(b)
    if i == 0 and j == 0:
        return 0.0
    if i == 0 or j == 0:
        return math.inf
    d = abs(a[i - 1] - b[j - 1])
    return d + min(naive_dtw(a, b, i - 1, j),
                   naive_dtw(a, b, i, j - 1),
                   naive_dtw(a, b, i - 1, j - 1))


class TestDtwDistance:
    def test_identical_sequences(self):
        assert dtw_distance([3.0, 1.0, 4.0], [3.0, 1.0, 4.0]) == 0.0

    def test_pair_of_constant_sequences(self):
        assert dtw_distance([0.0, 0.0], [1.0, 1.0]) == 2.0

    def test_shifted_ramp(self):
        assert dtw_distance([1.0, 2.0, 3.0], [2.0, 3.0, 4.0]) == 2.0

    def test_unequal_lengths(self):
        assert dtw_distance([0.0], [1.0, 1.0, 1.0]) == 3.0

    def test_warping_beats_lockstep(self):
        # lockstep distance would be 2, warping collapses it to 0 choices:
        # [0,1,1] vs [0,0,1] aligns 0-0, 0-0? table value checked by oracle
        a, b = [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]
        assert dtw_distance(a, b) == naive_dtw(a, b)

    def test_empty_rejected(self):
        with pytest.raises(EmptySeries):
            dtw_distance([], [1.0])
        with pytest.raises(EmptySeries):
            dtw_distance([1.0], [])

    def test_nan_rejected(self):
        with pytest.raises(InvalidInput):
            dtw_distance([float("nan")], [1.0])

    ints = st.lists(st.integers(0, 5).map(float), min_size=1, max_size=5)

    @settings(max_examples=150, deadline=None)
    @given(a=ints, b=ints)
    def test_matches_naive_recursion_exactly_on_integers(self, a, b):
        assert dtw_distance(a, b) == naive_dtw(a, b)

    reals = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1,
                     max_size=5)

    @settings(max_examples=150, deadline=None)
    @given(a=reals, b=reals)
    def test_matches_naive_recursion_on_floats(self, a, b):
        assert dtw_distance(a, b) == pytest.approx(naive_dtw(a, b),
                                                   abs=1e-9)

    @settings(max_examples=150, deadline=None)
    @given(a=reals, b=reals)
    def test_symmetry_and_nonnegativity(self, a, b):
        d = dtw_distance(a, b)
        assert d >= 0.0
        assert d == dtw_distance(b, a)

    @settings(max_examples=100, deadline=None)
    @given(a=reals)
    def test_self_distance_zero(self, a):
        assert dtw_distance(a, a) == 0.0

    @settings(max_examples=150, deadline=None)
    @given(a=reals, b=reals)
    def test_repeat_extension_bound(self, a, b):
        # appending a repeat of the last value can cost at most one more
        # alignment of that value against b's endpoint
        base = dtw_distance(a, b)
        extended = dtw_distance(a + [a[-1]], b)
        assert extended <= base + abs(a[-1] - b[-1]) + 1e-12


class TestSimilarity:
    def test_zero_distance(self):
        assert similarity(0.0, 0.5) == 1.0

    def test_half_at_ln2(self):
        assert similarity(1.0, math.log(2.0)) == pytest.approx(0.5)

    def test_large_distance_positive(self):
        v = similarity(500.0, 1.0)
        assert 0.0 < v < 1e-100

    def test_underflow_stays_positive(self):
        assert similarity(1e6, 10.0) > 0.0

    @settings(max_examples=100)
    @given(st.floats(0, 50, allow_nan=False), st.floats(0.01, 2),
           st.floats(0.01, 50))
    def test_strictly_decreasing(self, d, gamma, bump):
        # domain kept clear of exp underflow, where the clamp flattens it
        assert similarity(d + bump, gamma) < similarity(d, gamma)

    def test_invalid(self):
        with pytest.raises(InvalidInput):
            similarity(-1.0, 1.0)
        with pytest.raises(InvalidInput):
            similarity(1.0, 0.0)


class TestMedianGamma:
    def test_unit_distances(self):
        assert median_gamma([1.0, 1.0, 1.0]) == pytest.approx(math.log(2.0))

    def test_single_distance(self):
        assert median_gamma([2.0]) == pytest.approx(math.log(2.0) / 2.0)

    def test_zeros_rejected(self):
        with pytest.raises(AllZeroDistances):
            median_gamma([0.0, 0.0])

    def test_zeros_excluded_from_median(self):
        # positive distances {1, 3}: median 2
        assert median_gamma([0.0, 1.0, 3.0]) == pytest.approx(
            math.log(2.0) / 2.0)

    def test_median_pair_maps_to_half(self):
        dists = [0.5, 2.0, 7.0]
        g = median_gamma(dists)
        assert similarity(2.0, g) == pytest.approx(0.5)
