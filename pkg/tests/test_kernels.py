# -------------------------------------------------
# Tests for the Helmholtz kernels.
# -------------------------------------------------

import cmath
import math

import numpy as np
import pytest

from helpers.errors import DomainError
from kernels.helmholtz import (
    FOUR_PI, WaveNumber, double_layer_kernel, kernel_split, remainder_kernel, single_layer_kernel
)

ORIGIN = np.zeros(3)
E3 = np.array([0.0, 0.0, 1.0])


def test_single_layer_values():
    print("TEST: Single Layer Kernel")
    x = np.array([1.0, 0.0, 0.0])
    assert single_layer_kernel(0.0, x, ORIGIN) == pytest.approx(1.0 / FOUR_PI, rel=1e-15)
    assert single_layer_kernel(5.0, x, ORIGIN) == pytest.approx(cmath.exp(5j) / FOUR_PI, rel=1e-14)
    assert single_layer_kernel(WaveNumber(5.0), x, ORIGIN) == single_layer_kernel(5.0, x, ORIGIN)

    rng = np.random.default_rng(3)
    xs, ys = rng.normal(size=(50, 3)), rng.normal(size=(50, 3))
    values = single_layer_kernel(2.5, xs, ys)
    r = np.linalg.norm(xs - ys, axis=1)
    assert np.allclose(np.abs(values), 1.0 / (FOUR_PI * r), rtol=1e-14)
    print("PASS: values and modulus")


def test_single_layer_symmetries():
    print("\nTEST: Reciprocity and Conjugation")
    rng = np.random.default_rng(4)
    xs, ys = rng.normal(size=(20, 3)), rng.normal(size=(20, 3))
    assert np.array_equal(single_layer_kernel(5.0, xs, ys), single_layer_kernel(5.0, ys, xs))
    assert np.allclose(single_layer_kernel(-5.0, xs, ys), np.conj(single_layer_kernel(5.0, xs, ys)),
                       rtol=1e-15, atol=0.0)
    print("PASS: G(x, y) = G(y, x) and G_-k = conj(G_k)")


def test_singular_points_rejected():
    print("\nTEST: Singular Points")
    with pytest.raises(DomainError):
        single_layer_kernel(1.0, ORIGIN, ORIGIN)
    with pytest.raises(DomainError):
        double_layer_kernel(1.0, ORIGIN, ORIGIN, E3)
    with pytest.raises(DomainError):
        WaveNumber(math.inf)
    with pytest.raises(ValueError):
        single_layer_kernel(1.0, ORIGIN, ORIGIN)
    print("PASS: x = y raises a domain error")


def test_kernel_split():
    print("\nTEST: Kernel Split")
    split = kernel_split(0.0, ORIGIN, np.array([0.3, 0.0, 0.0]))
    assert split.remainder == 0.0
    assert split.total() == pytest.approx(1.0 / (FOUR_PI * 0.3))

    at_zero = kernel_split(5.0, ORIGIN, ORIGIN)
    assert math.isinf(at_zero.static)
    assert at_zero.remainder == pytest.approx(5j / FOUR_PI, rel=1e-15)
    assert remainder_kernel(5.0, 1e-12) == pytest.approx(5j / FOUR_PI, rel=1e-10)

    y = np.array([0.0, 0.3, 0.0])
    assert kernel_split(5.0, ORIGIN, y).total() == pytest.approx(single_layer_kernel(5.0, ORIGIN, y), rel=1e-15)
    print("PASS: static + remainder, remainder limit ik/(4 pi)")


def test_split_consistency_range():
    print("\nTEST: Split Consistency Over kr")
    k = 2.0
    kr = np.logspace(-8, 1, 200)
    r = kr / k
    total = 1.0 / (FOUR_PI * r) + remainder_kernel(k, r)
    exact = np.exp(1j * k * r) / (FOUR_PI * r)
    assert np.max(np.abs(total - exact) / np.abs(exact)) < 1e-14

    # the remainder itself keeps full relative accuracy across the series threshold
    exact_remainder = np.array([complex(cmath.exp(1j * k * v) - 1.0) for v in r]) / (FOUR_PI * r)
    big = kr > 1e-3
    assert np.allclose(remainder_kernel(k, r)[big], exact_remainder[big], rtol=1e-10, atol=0.0)
    print("PASS: relative error below 1e-14 for kr in [1e-8, 10]")


def test_double_layer_kernel():
    print("\nTEST: Double Layer Kernel")
    assert double_layer_kernel(0.0, E3, ORIGIN, E3) == pytest.approx(1.0 / FOUR_PI, rel=1e-15)
    x = np.array([1.0, 0.0, 0.0])
    assert double_layer_kernel(5.0, x, ORIGIN, E3) == 0.0

    # finite difference of the single layer kernel in the direction of n_y
    k, step = 5.0, 1e-6
    x = np.array([0.0, 0.0, 2.0])
    fd = (single_layer_kernel(k, x, ORIGIN + step * E3) - single_layer_kernel(k, x, ORIGIN - step * E3)) / (2 * step)
    assert double_layer_kernel(k, x, ORIGIN, E3) == pytest.approx(fd, rel=1e-6)
    print("PASS: k = 0 limit, orthogonal normal, finite difference")


if __name__ == "__main__":
    test_single_layer_values()
    test_single_layer_symmetries()
    test_singular_points_rejected()
    test_kernel_split()
    test_split_consistency_range()
    test_double_layer_kernel()
