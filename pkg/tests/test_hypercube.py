import numpy as np
import pytest
from hypothesis import given, strategies as st

from priorlens.hypercube import (
    InputSetError, OutputPattern, SubsetMask, bin_points, build_input_set, entropy,
    entropy_of_t, load_input_set, pack_bits, point_index, popcount_words, restrict,
    restrict_words, t_value, unpack_bits,
)
from priorlens.netsample import NetParams, NetSpec, eval_pattern


def patterns(max_m=200):
    return st.integers(1, max_m).flatmap(
        lambda m: st.lists(st.booleans(), min_size=m, max_size=m)).map(OutputPattern.from_bits)


class TestInputSets:
    def test_hypercube01_order(self):
        inp = build_input_set(2)
        np.testing.assert_array_equal(inp.points, [[0, 0], [0, 1], [1, 0], [1, 1]])
        assert inp.label == "hypercube01"

    def test_pm1_order(self):
        inp = build_input_set(2, "hypercube±1")
        np.testing.assert_array_equal(inp.points, [[-1, -1], [-1, 1], [1, -1], [1, 1]])
        np.testing.assert_array_equal(build_input_set(3, "hypercube_pm1").points,
                                      2 * build_input_set(3).points - 1)

    def test_subsample(self):
        a = build_input_set(7, subsample=(64, 5))
        b = build_input_set(7, subsample=(64, 5))
        full = build_input_set(7).points
        assert a.m == 64 and a.label == "subsample"
        assert len({tuple(r) for r in a.points}) == 64
        np.testing.assert_array_equal(a.points, full[a.source_index])
        np.testing.assert_array_equal(a.points, b.points)
        assert not np.array_equal(a.source_index, build_input_set(7, subsample=(64, 6)).source_index)

    def test_subsample_too_large(self):
        with pytest.raises(InputSetError):
            build_input_set(3, subsample=(9, 0))

    def test_dimension_guard(self):
        with pytest.raises(InputSetError):
            build_input_set(0)
        with pytest.raises(InputSetError):
            build_input_set(21)

    def test_load_csv(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,0,1\n0,0,0\n1,1,1\n0.5,2,3\n")
        inp = load_input_set(p)
        assert (inp.m, inp.n, inp.label) == (4, 3, "external")
        np.testing.assert_array_equal(inp.points[3], [0.5, 2, 3])

    def test_load_errors(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(InputSetError, match="empty"):
            load_input_set(p)
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(InputSetError, match="row 1"):
            load_input_set(p)
        p.write_text("1,2,3\n1,2\n")
        with pytest.raises(InputSetError, match="row 2"):
            load_input_set(p)

    @given(st.integers(1, 12), st.data())
    def test_index_roundtrip(self, n, data):
        i = data.draw(st.integers(0, 2**n - 1))
        assert point_index(bin_points(n)[i]) == i


class TestPatterns:
    def test_t_examples(self):
        assert t_value(OutputPattern.from_bits(np.zeros(128, bool))) == 0
        assert t_value(OutputPattern.from_string("01" * 64)) == 64
        assert t_value(OutputPattern.from_string("0110")) == 2

    def test_entropy_examples(self):
        assert entropy(OutputPattern.from_bits(np.zeros(128, bool))) == 0.0
        assert entropy(OutputPattern.from_string("01" * 64)) == 1.0
        assert entropy_of_t(32, 128) == pytest.approx(0.811278, abs=1e-6)

    def test_hex_and_int(self):
        p = OutputPattern.from_string("0111")
        assert p.to_int() == 0b1110
        assert p.hex() == "e"
        assert OutputPattern.from_hex("e", 4) == p
        q = OutputPattern.from_string("1" + "0" * 99)
        assert q.hex() == "1".zfill(25)

    def test_word_layout(self):
        bits = np.zeros(130, bool)
        bits[[0, 63, 64, 129]] = True
        w = pack_bits(bits)
        assert w.dtype == np.uint64 and w.shape == (3,)
        assert int(w[0]) == 1 | (1 << 63) and int(w[1]) == 1 and int(w[2]) == 2

    @given(patterns())
    def test_pack_roundtrip(self, p):
        np.testing.assert_array_equal(unpack_bits(p.words, p.m), p.bits())
        assert int(popcount_words(p.words[None, :])[0]) == p.t
        assert OutputPattern.from_int(p.to_int(), p.m) == p
        assert OutputPattern.from_hex(p.hex(), p.m) == p

    @given(patterns())
    def test_complement(self, p):
        c = p.complement()
        assert c.t == p.m - p.t
        assert entropy(c) == pytest.approx(entropy(p), abs=1e-15)
        assert c.complement() == p

    @given(patterns(), patterns())
    def test_equality_is_bitwise(self, p, q):
        assert (p == q) == (p.m == q.m and np.array_equal(p.bits(), q.bits()))
        if p == q:
            assert hash(p) == hash(q)


class TestRestrict:
    def test_examples(self):
        assert str(restrict(OutputPattern.from_string("0110"), SubsetMask((1,), 2))) == "01"
        f = OutputPattern.from_bits(bin_points(3)[:, 0] > 0)
        assert str(restrict(f, SubsetMask((0,), 3))) == "01"

    @given(patterns(16).filter(lambda p: p.m == 16))
    def test_full_mask_identity(self, p):
        assert restrict(p, SubsetMask.full(4)) == p

    @given(st.integers(2, 6), st.data())
    def test_perceptron_restriction(self, n, data):
        w = np.array(data.draw(st.lists(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3),
                                        min_size=n, max_size=n)))
        coords = data.draw(st.sets(st.integers(0, n - 1), min_size=1))
        mask = SubsetMask(tuple(coords), n)
        spec = NetSpec.perceptron(n)
        p = eval_pattern(spec, NetParams((w[None, :],), (np.zeros(1),)), build_input_set(n))
        sub = build_input_set(n).points[mask.indices()]
        direct = OutputPattern.from_bits(sub @ w > 0)
        assert restrict(p, mask) == direct
        np.testing.assert_array_equal(restrict_words(p.words[None, :], p.m, mask)[0],
                                      restrict(p, mask).words)
