import numpy as np
import pytest

from rpfgcn import rptree
from rpfgcn.errors import ShapeError
from rpfgcn.rptree import Internal, Leaf, build_tree, leaves, project


def all_leaves(node):
    if isinstance(node, Leaf):
        return [node]
    return all_leaves(node.left) + all_leaves(node.right)


def structures_equal(a, b):
    if isinstance(a, Leaf) and isinstance(b, Leaf):
        return np.array_equal(a.indices, b.indices) and a.unsplittable == b.unsplittable
    if isinstance(a, Internal) and isinstance(b, Internal):
        return (
            np.array_equal(a.direction, b.direction)
            and a.threshold == b.threshold
            and structures_equal(a.left, b.left)
            and structures_equal(a.right, b.right)
        )
    return False


class TestProject:
    def test_axis_direction(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((6, 3))
        e1 = np.array([1.0, 0.0, 0.0])
        out = project(x, np.arange(6), e1)
        assert np.array_equal(out, x[:, 0])

    def test_negated_axis(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((6, 3))
        out = project(x, np.arange(6), np.array([-1.0, 0.0, 0.0]))
        assert np.array_equal(out, -x[:, 0])

    def test_matches_dot_product_oracle(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((5, 4))
        direction = rng.standard_normal(4)
        direction /= np.linalg.norm(direction)
        out = project(x, np.arange(5), direction)
        for i in range(5):
            expected = sum(x[i, k] * direction[k] for k in range(4))
            assert abs(out[i] - expected) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            project(np.ones((3, 2)), [0, 1], np.ones(3))


class TestBuildTree:
    def test_no_split_single_leaf(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((5, 2))
        tree = build_tree(x, max_leaf_size=5, seed=0)
        assert isinstance(tree.root, Leaf)
        assert np.array_equal(tree.root.indices, np.arange(5))

    def test_eight_point_split(self):
        # Seed chosen so the root split alone brings both sides under the
        # leaf cap; the quantile in [0.25, 0.75] puts at least 2 of the 8
        # distinct projections on each side.
        rng = np.random.default_rng(99)
        x = rng.standard_normal((8, 2))
        tree = build_tree(x, max_leaf_size=4, seed=1)
        ls = leaves(tree)
        assert len(ls) == 2
        sizes = [len(s) for s in ls]
        assert all(size >= 2 for size in sizes)
        assert np.array_equal(np.sort(np.concatenate(ls)), np.arange(8))

    def test_duplicate_points_terminate_unsplittable(self):
        x = np.ones((10, 3))
        tree = build_tree(x, max_leaf_size=2, seed=0)
        assert isinstance(tree.root, Leaf)
        assert tree.root.unsplittable
        assert np.array_equal(tree.root.indices, np.arange(10))

    def test_max_leaf_size_validation(self):
        with pytest.raises(ShapeError):
            build_tree(np.ones((3, 2)), max_leaf_size=0, seed=0)

    def test_unknown_split_rule(self):
        with pytest.raises(ShapeError):
            build_tree(np.ones((3, 2)), max_leaf_size=1, seed=0, split_rule="widest")


class TestTreeProperties:
    @pytest.mark.parametrize("seed", range(8))
    def test_partition_property(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 120))
        d = int(rng.integers(1, 6))
        mls = int(rng.integers(1, 12))
        x = rng.standard_normal((n, d))
        tree = build_tree(x, max_leaf_size=mls, seed=seed)
        ls = leaves(tree)
        joined = np.concatenate(ls)
        assert joined.size == n
        assert np.array_equal(np.sort(joined), np.arange(n))

    @pytest.mark.parametrize("rule", ["quantile", "median", "range"])
    def test_leaf_bound_unless_unsplittable(self, rule):
        rng = np.random.default_rng(17)
        x = rng.standard_normal((200, 3))
        # Inject duplicates to exercise the unsplittable path too.
        x[50:80] = x[50]
        tree = build_tree(x, max_leaf_size=6, seed=2, split_rule=rule)
        for leaf in all_leaves(tree.root):
            assert len(leaf.indices) <= 6 or leaf.unsplittable

    def test_determinism(self):
        rng = np.random.default_rng(23)
        x = rng.standard_normal((60, 4))
        t1 = build_tree(x, max_leaf_size=5, seed=77)
        t2 = build_tree(x, max_leaf_size=5, seed=77)
        assert structures_equal(t1.root, t2.root)

    def test_seed_changes_tree(self):
        rng = np.random.default_rng(23)
        x = rng.standard_normal((60, 4))
        t1 = build_tree(x, max_leaf_size=5, seed=0)
        t2 = build_tree(x, max_leaf_size=5, seed=1)
        assert not structures_equal(t1.root, t2.root)

    def test_rotation_keeps_partition_property(self):
        rng = np.random.default_rng(31)
        x = rng.standard_normal((80, 3))
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        rotated = x @ q
        tree = build_tree(rotated, max_leaf_size=7, seed=5)
        ls = leaves(tree)
        assert np.array_equal(np.sort(np.concatenate(ls)), np.arange(80))
        for leaf in all_leaves(tree.root):
            assert len(leaf.indices) <= 7 or leaf.unsplittable

    def test_internal_directions_unit_norm(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((50, 5))
        tree = build_tree(x, max_leaf_size=4, seed=9)

        def walk(node):
            if isinstance(node, Internal):
                assert abs(np.linalg.norm(node.direction) - 1.0) < 1e-12
                walk(node.left)
                walk(node.right)

        walk(tree.root)

    def test_median_rule_balances_split(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((64, 2))
        tree = build_tree(x, max_leaf_size=63, seed=0, split_rule="median")
        assert isinstance(tree.root, Internal)
        left = all_leaves(tree.root.left)[0].indices
        assert len(left) == 32
