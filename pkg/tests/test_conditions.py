import json
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from priorlens.conditions import (
    LinearCondition, build_condition_tree, chain_function, chain_weights, enumerate_signatures,
    facet_points, forced_positive, leaf_regions, ordering_rows, realizing_weights,
    single_positive, t_max_special, t_min, upsilon_facets,
)
from priorlens.exactlp import cone_contains, interior_point, strictly_feasible
from priorlens.hypercube import build_input_set
from priorlens.netsample import NetParams, NetSpec, eval_pattern
from priorlens.oracle import enumerate_threshold_patterns

FIG_T4 = """a4<a1+a2
  ---+
a4>a1+a2
  a3<a1+a2
    ++--
  a3>a1+a2
    --+-"""

FIG_T5 = """a5<a1+a2
  ----+
a5>a1+a2
  a4<a1+a2
    ++---
  a4>a1+a2
    a4<a1+a3
      ---+-
    a4>a1+a3
      +-+--"""

signatures = st.integers(1, 7).flatmap(
    lambda n: st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)).map(tuple)


def sorted_magnitudes(rng, n, size):
    return np.sort(rng.exponential(size=(size, n)), axis=1)


class TestLinearCondition:
    def test_canonical_form(self):
        c = LinearCondition.from_row((1, 1, 0, -1))
        assert str(c) == "a4<a1+a2" and c.relation == "<"
        assert str(c.complement()) == "a4>a1+a2"
        assert c.complement().complement() == c
        assert c.size == 3 and c.top == 3

    def test_holds(self):
        c = LinearCondition((-1, -1, 0, 1), ">")
        assert c.holds(np.array([1, 2, 3, 4])) and not c.holds(np.array([1, 2, 3, 2.5]))

    def test_coefficients_printed(self):
        assert str(LinearCondition((-2, 0, 1))) == "a3>2a1"

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            LinearCondition((0, 0))


class TestTMin:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_single_positive(self, n):
        for k in range(1, n + 1):
            assert t_min(single_positive(k, n)) == k
            assert t_max_special(k, n) == 2 ** (k - 1)

    def test_all_negative(self):
        assert t_min((-1,) * 6) == 0

    @given(signatures, st.data())
    def test_flip_increases(self, sigma, data):
        neg = [i for i, s in enumerate(sigma) if s < 0]
        if not neg:
            return
        i = data.draw(st.sampled_from(neg))
        flipped = tuple(1 if j == i else s for j, s in enumerate(sigma))
        assert t_min(flipped) > t_min(sigma)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matching_rule_equals_lp(self, n):
        base = ordering_rows(n)
        for sigma in product((-1, 1), repeat=n):
            for x in product((0, 1), repeat=n):
                u = tuple(s * v for s, v in zip(sigma, x))
                lp = any(u) and cone_contains(base, u)
                assert forced_positive(sigma, x) == lp

    @given(signatures, st.integers(0, 10**6))
    def test_lower_bound_on_samples(self, sigma, seed):
        n = len(sigma)
        a = sorted_magnitudes(np.random.default_rng(seed), n, 200)
        X = build_input_set(n).points
        T = ((a * np.array(sigma)) @ X.T > 0).sum(axis=1)
        assert T.min() >= t_min(sigma)


class TestSignatures:
    def test_t4(self):
        sig = enumerate_signatures(6, 4)
        for s in ((-1, -1, -1, 1, -1, -1), (1, 1, -1, -1, -1, -1), (-1, -1, 1, -1, -1, -1)):
            assert s in sig
        assert all(s[4:] == (-1, -1) for s in sig)

    def test_t0(self):
        assert enumerate_signatures(5, 0) == [(-1,) * 5]

    def test_range(self):
        with pytest.raises(ValueError):
            enumerate_signatures(3, 8)


class TestTrees:
    @pytest.mark.parametrize("n", [5, 6])
    def test_fig_t4(self, n):
        assert build_condition_tree(n, 4).render() == FIG_T4

    @pytest.mark.parametrize("n", [5, 6])
    def test_fig_t5(self, n):
        assert build_condition_tree(n, 5).render() == FIG_T5

    def test_json(self):
        d = json.loads(build_condition_tree(5, 4).to_json())
        root = d["tree"]
        assert root["condition"] is None
        assert [c["condition"] for c in root["children"]] == ["a4<a1+a2", "a4>a1+a2"]
        assert root["children"][0]["signature"] == "---+"

    @pytest.mark.parametrize("t", [3, 4, 5, 6, 7])
    def test_single_positive_leaf(self, t):
        tree = build_condition_tree(7, t)
        leaf = [l for l in tree.leaves() if l.signature == single_positive(t, 7)]
        assert len(leaf) == 1
        assert [str(c) for c in leaf[0].leaf_conditions] == [f"a{t}<a1+a2"]

    @pytest.mark.parametrize("n,t", [(5, 4), (5, 5), (6, 6), (7, 7)])
    def test_structure(self, n, t):
        tree = build_condition_tree(n, t)
        base = ordering_rows(n)

        def walk(node, path):
            if node.children:
                assert len(node.children) == 2
                a, b = node.children
                assert a.condition.relation == "<" and b.condition == a.condition.complement()
            for c in node.children:
                rows = path + [c.condition.row()]
                assert strictly_feasible(base + rows)
                walk(c, rows)

        walk(tree.root, [])
        for leaf in tree.leaves():
            assert all(c.size >= 3 for c in leaf.leaf_conditions)

    @pytest.mark.parametrize("t", [4, 5])
    def test_tiling(self, t):
        n = 5
        tree = build_condition_tree(n, t)
        X = build_input_set(n).points
        A = sorted_magnitudes(np.random.default_rng(t), n, 10_000)
        paths = list(tree.root.paths())
        hit = np.zeros((A.shape[0], len(paths)), bool)
        for j, (conds, leaf) in enumerate(paths):
            ok = np.ones(A.shape[0], bool)
            for c in conds:
                ok &= c.holds(A)
            hit[:, j] = ok
        assert (hit.sum(axis=1) == 1).all()
        for j, (conds, leaf) in enumerate(paths):
            sel = A[hit[:, j]]
            T = ((sel * np.array(leaf.signature)) @ X.T > 0).sum(axis=1)
            assert (T == t).all()
            for c in leaf.leaf_conditions:
                assert c.holds(sel).all()

    @pytest.mark.parametrize("n,t", [(5, 4), (5, 5), (6, 5)])
    def test_interior_points(self, n, t):
        tree = build_condition_tree(n, t)
        base = ordering_rows(n)
        inp = build_input_set(n)
        for conds, leaf in tree.root.paths():
            a = interior_point(base + [c.row() for c in conds])
            w = np.array([float(v) for v in a]) * np.array(leaf.signature)
            p = eval_pattern(NetSpec.perceptron(n), NetParams((w[None, :],), (np.zeros(1),)), inp)
            assert p.t == t

    def test_regions_cover_bijection(self):
        # each t at n=4 has at least one region, and regions of one t never overlap
        for t in range(0, 16):
            regs = leaf_regions(4, t)
            assert regs
            base = ordering_rows(4)
            for i in range(len(regs)):
                for j in range(i + 1, len(regs)):
                    assert not strictly_feasible(base + regs[i].rows() + regs[j].rows())

    def test_size_guard(self):
        with pytest.raises(ValueError):
            build_condition_tree(9, 3)


class TestChain:
    def test_n2(self):
        p = chain_function(2)
        bits = p.bits()
        assert bits[2] and not bits[3]

    @pytest.mark.parametrize("n", range(2, 8))
    def test_chain_labels(self, n):
        p = chain_function(n)
        bits = p.bits()
        for i in range(1, n + 1):
            idx = int("1" * i + "0" * (n - i), 2)
            assert bits[idx] == (i % 2 == 1)

    def test_upsilon_n4(self):
        assert upsilon_facets(chain_function(4), 4) == 2

    @pytest.mark.parametrize("n", range(3, 7))
    def test_upsilon_at_least(self, n):
        assert upsilon_facets(chain_function(n), n) >= n - 2

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_oracle_membership(self, n):
        assert chain_function(n) in enumerate_threshold_patterns(build_input_set(n))

    def test_realizing_weights(self):
        p = chain_function(5)
        w = realizing_weights(p, 5)
        X = build_input_set(5).points.astype(int)
        got = [sum(a * int(b) for a, b in zip(w, x)) > 0 for x in X]
        assert got == list(p.bits())
        assert chain_weights(2)[0] == 1

    def test_facets_are_points(self):
        pts = facet_points(chain_function(4), 4)
        assert all(any(x) for x in pts)
