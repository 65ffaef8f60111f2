import numpy as np
import pytest

from blinkbench import tensor as T

from oracles import matmul_naive


def test_sign_definition():
    assert np.array_equal(T.sign([-2.0, 0.0, 3.5]), [-1.0, 0.0, 1.0])


def test_clamp_definition():
    assert np.array_equal(T.clamp([-0.5, 0.3, 1.7], 0, 1), [0.0, 0.3, 1.0])


def test_add_definition():
    assert np.array_equal(T.add([1, 2], [3, 4]), [4.0, 6.0])


def test_norm_345():
    assert T.norm(np.array([3.0, 4.0]), "l2") == 5.0


def test_norm_linf():
    assert T.norm(np.array([3.0, -7.0, 2.0]), "linf") == 7.0


def test_norm_zeros():
    assert T.norm(np.zeros(10), "l2") == 0.0


def test_matmul_identity():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(T.matmul(np.eye(2), a), a)


def test_matmul_row_col():
    assert np.array_equal(T.matmul([[1.0, 2.0]], [[3.0], [4.0]]), [[11.0]])


def test_matmul_matches_naive_oracle():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((5, 7))
    b = rng.standard_normal((7, 3))
    got = T.matmul(a, b)
    want = matmul_naive(a, b)
    assert np.max(np.abs(got - want)) < 1e-12


def test_shape_mismatch_names_both_shapes():
    with pytest.raises(ValueError, match=r"\(2,\).*\(3,\)"):
        T.add(np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError, match="inner dimensions"):
        T.matmul(np.zeros((2, 3)), np.zeros((2, 3)))


def test_construction_rejects_non_finite():
    with pytest.raises(ValueError, match="non-finite"):
        T.tensor([1.0, np.nan])
    with pytest.raises(ValueError, match="non-finite"):
        T.validate(np.array([np.inf]))


def test_add_commutes():
    rng = np.random.default_rng(0)
    for _ in range(20):
        shape = tuple(rng.integers(1, 6, size=rng.integers(1, 4)))
        a = rng.standard_normal(shape)
        b = rng.standard_normal(shape)
        assert np.array_equal(T.add(a, b), T.add(b, a))


def test_norm_ordering_and_homogeneity():
    rng = np.random.default_rng(1)
    for _ in range(30):
        x = rng.standard_normal(rng.integers(2, 40))
        assert T.norm(x, "linf") <= T.norm(x, "l2") + 1e-15
        c = float(rng.standard_normal())
        for p in ("l2", "linf"):
            assert T.norm(c * x, p) == pytest.approx(abs(c) * T.norm(x, p), rel=1e-12)


def test_clamp_always_within_bounds():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.standard_normal(50) * 10
        lo, hi = sorted(rng.standard_normal(2))
        out = T.clamp(x, lo, hi)
        assert out.min() >= lo and out.max() <= hi


def test_scale_and_abs():
    x = np.array([-1.5, 2.0])
    assert np.array_equal(T.scale(x, -2.0), [3.0, -4.0])
    assert np.array_equal(T.absolute(x), [1.5, 2.0])
