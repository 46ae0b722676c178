# -------------------------------------------------
# Helmholtz kernels: the single layer kernel e^{ikr}/(4 pi r), its split into
# the static (Laplace) part and a continuous remainder, and the double layer
# kernel used to evaluate the representation potential off the screen.
#
# The hypersingular operator carries a global -1/(4 pi) in front of its
# double-normal derivative; that sign lives in the operator. The double layer
# kernel here is the plain (1/4 pi) d/dn_y [e^{ikr}/r], which for k = 0 is
# n_y.(x - y) / (4 pi r^3).
# -------------------------------------------------

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from helpers.errors import DomainError

FOUR_PI = 4.0 * math.pi

# below this value of k*r the remainder is summed from its Taylor series
SERIES_THRESHOLD = 1e-2

# (ik)^n r^(n-1) / n!, n = 1..6, written as ik * sum_m (ikr)^m / (m+1)!
_SERIES_COEFFS = np.array([1.0 / math.factorial(m + 1) for m in range(6)])

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class WaveNumber:
    """
    Real wave number. k = 0 is the Laplace case; negative values only appear
    when assembling the adjoint form (W_{-k} is the adjoint of W_k).
    """
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError(f"wave number must be finite, got {self.value}")

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class KernelSplit:
    """
    static + remainder equals the full kernel for r > 0. At r = 0 the static
    part is +inf and the remainder takes its limit ik/(4 pi).
    """
    static: ArrayLike
    remainder: ArrayLike

    def total(self) -> ArrayLike:
        return self.static + self.remainder


def _k(k) -> float:
    return float(k.value) if isinstance(k, WaveNumber) else float(k)


def distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|x - y| over the last axis, broadcasting leading axes."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return np.sqrt(np.sum(d * d, axis=-1))


def static_kernel(r: ArrayLike) -> ArrayLike:
    """1/(4 pi r), +inf at r = 0."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / (FOUR_PI * r)


def remainder_kernel(k, r: ArrayLike) -> ArrayLike:
    """
    (e^{ikr} - 1)/(4 pi r), continuous at r = 0 with value ik/(4 pi).

    @param k: wave number (float or WaveNumber).
    @param r: distances, any shape.
    @returns complex array of the same shape as r.
    """
    k = _k(k)
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape, dtype=complex)
    if k == 0.0:
        return out if out.ndim else complex(0.0)
    kr = abs(k) * r
    small = kr < SERIES_THRESHOLD
    big = ~small
    if np.any(big):
        rb = r[big]
        out[big] = np.expm1(1j * k * rb) / (FOUR_PI * rb)
    if np.any(small):
        z = 1j * k * r[small]
        series = np.zeros(z.shape, dtype=complex)
        for c in _SERIES_COEFFS[::-1]:
            series = series * z + c
        out[small] = 1j * k * series / FOUR_PI
    return out if out.ndim else complex(out)


def full_kernel(k, r: ArrayLike) -> ArrayLike:
    """e^{ikr}/(4 pi r) from distances."""
    k = _k(k)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.exp(1j * k * r) / (FOUR_PI * r)


def single_layer_kernel(k, x: np.ndarray, y: np.ndarray) -> ArrayLike:
    """
    Helmholtz fundamental solution e^{ik|x-y|}/(4 pi |x-y|).

    @param k: wave number.
    @param x: point(s), shape (..., 3).
    @param y: point(s), shape (..., 3).
    @returns complex kernel value(s).
    """
    r = distance(x, y)
    if np.any(r == 0.0):
        raise DomainError("single layer kernel is singular at x = y")
    val = full_kernel(k, r)
    return complex(val) if np.ndim(val) == 0 else val


def kernel_split(k, x: np.ndarray, y: np.ndarray) -> KernelSplit:
    """
    Splits the kernel into 1/(4 pi r) and (e^{ikr} - 1)/(4 pi r). x = y is allowed.
    """
    r = distance(x, y)
    static = static_kernel(r)
    remainder = remainder_kernel(k, r)
    if np.ndim(r) == 0:
        return KernelSplit(float(static), complex(remainder))
    return KernelSplit(static, remainder)


def double_layer_kernel(k, x: np.ndarray, y: np.ndarray, n_y: np.ndarray) -> ArrayLike:
    """
    (1/4 pi) d/dn_y [e^{ikr}/r] = e^{ikr} (ikr - 1) n_y.(y - x) / (4 pi r^3).

    @param k: wave number.
    @param x: observation point(s) off the screen, shape (..., 3).
    @param y: surface point(s), shape (..., 3).
    @param n_y: unit normal(s) at y, shape (..., 3).
    @returns complex kernel value(s).
    """
    k = _k(k)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = y - x
    r = np.sqrt(np.sum(d * d, axis=-1))
    if np.any(r == 0.0):
        raise DomainError("double layer kernel is singular at x = y")
    ndot = np.sum(np.asarray(n_y, dtype=float) * d, axis=-1)
    val = np.exp(1j * k * r) * (1j * k * r - 1.0) * ndot / (FOUR_PI * r ** 3)
    return complex(val) if np.ndim(val) == 0 else val
