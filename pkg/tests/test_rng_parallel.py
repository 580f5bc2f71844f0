import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from focusing_gibbs.parallel import chunk_bounds, concat, map_chunks
from focusing_gibbs.rng import SampleStream, canonical_order, half_lattice_order


def _squares(start, stop):
    return np.arange(start, stop) ** 2


def _draws(stream, start, stop):
    return np.array([stream.generator(i).standard_normal() for i in range(start, stop)])


class TestStreams:
    def test_same_key_same_numbers(self):
        a = SampleStream(42, "x").generator(17).standard_normal(5)
        b = SampleStream(42, "x").generator(17).standard_normal(5)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("other", [SampleStream(43, "x"), SampleStream(42, "y"), SampleStream(42, "")])
    def test_distinct_keys_differ(self, other):
        a = SampleStream(42, "x").generator(0).standard_normal(5)
        assert not np.array_equal(a, other.generator(0).standard_normal(5))

    def test_child_labels_nest(self):
        assert SampleStream(1, "a").child("b") == SampleStream(1, "a/b")
        assert SampleStream(1).child("b") == SampleStream(1, "b")

    def test_seed_range(self):
        SampleStream(2**64 - 1)
        with pytest.raises(ValueError):
            SampleStream(2**64)
        with pytest.raises(ValueError):
            SampleStream(-1)

    def test_indices_look_independent(self):
        x = _draws(SampleStream(3), 0, 20_000)
        assert abs(np.corrcoef(x[:-1], x[1:])[0, 1]) < 4 / np.sqrt(20_000)
        assert abs(x.mean()) < 4 / np.sqrt(20_000)

    def test_large_indices(self):
        g = SampleStream(0).generator(2**70)
        assert np.isfinite(g.standard_normal())


class TestLatticeOrder:
    @given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 3))
    def test_prefix_property(self, d, small, extra):
        big = small + extra
        side_s, side_b = 2 * small + 1, 2 * big + 1
        pts_s = np.stack(np.unravel_index(canonical_order(d, small), (side_s,) * d), -1) - small
        pts_b = np.stack(np.unravel_index(canonical_order(d, big), (side_b,) * d), -1) - big
        assert np.array_equal(pts_b[: side_s**d], pts_s)

    @given(st.integers(1, 3), st.integers(1, 4))
    def test_half_lattice_pairs(self, d, modes):
        reps, partner = half_lattice_order(d, modes)
        side = 2 * modes + 1
        assert len(reps) == (side**d - 1) // 2
        covered = np.concatenate([reps, partner])
        assert len(np.unique(covered)) == side**d - 1
        centre = np.ravel_multi_index((modes,) * d, (side,) * d)
        assert centre not in covered


class TestMapChunks:
    def test_bounds(self):
        assert chunk_bounds(5, 2) == [(0, 2), (2, 4), (4, 5)]
        assert chunk_bounds(0, 2) == []

    @pytest.mark.parametrize("workers", [1, 2, 5])
    def test_order_and_content(self, workers):
        out = concat(map_chunks(_squares, 23, workers, chunk=4))
        assert np.array_equal(out, np.arange(23) ** 2)

    def test_random_draws_independent_of_workers(self):
        from functools import partial

        fn = partial(_draws, SampleStream(5, "w"))
        one = concat(map_chunks(fn, 300, 1, chunk=32))
        four = concat(map_chunks(fn, 300, 4, chunk=32))
        assert np.array_equal(one, four)

    def test_empty(self):
        assert len(concat(map_chunks(_squares, 0, 3))) == 0
