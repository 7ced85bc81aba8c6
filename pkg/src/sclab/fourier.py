"""Real Fourier basis on the circle R/Z.

Coefficient layout (index -> function):
    0      -> 1
    2k - 1 -> cos(2 pi k t)
    2k     -> sin(2 pi k t)

Pointwise nonlinearities go through a sample grid with 2x oversampling, which
makes products of up to three truncated functions alias-free before the
result is projected back onto the first N coefficients.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def max_frequency(dim: int) -> int:
    return dim // 2


def require_odd(dim: int, what: str = "operator") -> None:
    if dim % 2 == 0:
        raise ShapeError(f"{what} needs complete cos/sin pairs (odd dimension), got {dim}")


def _oversampled_size(dim: int) -> int:
    m = 2 * dim
    return m + (m % 2)


def to_complex(coeffs: np.ndarray) -> np.ndarray:
    """Complex coefficients c_k, k = 0..K, with v = sum_k c_k e^{2 pi i k t} + c.c."""
    coeffs = np.asarray(coeffs, dtype=float)
    dim = coeffs.shape[-1]
    K = max_frequency(dim)
    c = np.zeros(coeffs.shape[:-1] + (K + 1,), dtype=complex)
    c[..., 0] = coeffs[..., 0]
    a = coeffs[..., 1::2]
    b = np.zeros_like(a)
    b_part = coeffs[..., 2::2]
    b[..., :b_part.shape[-1]] = b_part
    c[..., 1:a.shape[-1] + 1] = (a - 1j * b) / 2.0
    return c


def from_complex(c: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros(c.shape[:-1] + (dim,))
    out[..., 0] = c[..., 0].real
    n_cos = len(range(1, dim, 2))
    n_sin = len(range(2, dim, 2))
    out[..., 1::2] = 2.0 * c[..., 1:n_cos + 1].real
    out[..., 2::2] = -2.0 * c[..., 1:n_sin + 1].imag
    return out


def to_samples(coeffs: np.ndarray, n_samples: int | None = None) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    M = n_samples or _oversampled_size(coeffs.shape[-1])
    c = to_complex(coeffs)
    spectrum = np.zeros(c.shape[:-1] + (M // 2 + 1,), dtype=complex)
    spectrum[..., :c.shape[-1]] = c * M
    return np.fft.irfft(spectrum, n=M)


def from_samples(samples: np.ndarray, dim: int) -> np.ndarray:
    M = samples.shape[-1]
    c = np.fft.rfft(samples) / M
    K = max_frequency(dim)
    return from_complex(c[..., :K + 1], dim)


def pointwise(fn, coeffs: np.ndarray) -> np.ndarray:
    """Galerkin projection of t -> fn(v(t)) onto the first N coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    return from_samples(fn(to_samples(coeffs)), coeffs.shape[-1])


def multiply(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Truncated product of two functions with the same number of coefficients."""
    u = np.asarray(u, dtype=float)
    return from_samples(to_samples(u) * to_samples(v), u.shape[-1])


def evaluate(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Direct evaluation of the series at points t (no FFT)."""
    coeffs = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, coeffs[0])
    for n in range(1, coeffs.shape[0]):
        k = (n + 1) // 2
        basis = np.cos if n % 2 else np.sin
        out = out + coeffs[n] * basis(2 * np.pi * k * t)
    return out


def derivative(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of d/dt; (a_k, b_k) -> 2 pi k (b_k, -a_k)."""
    coeffs = np.asarray(coeffs, dtype=float)
    dim = coeffs.shape[-1]
    require_odd(dim, "d/dt")
    out = np.zeros_like(coeffs)
    k = np.arange(1, max_frequency(dim) + 1)
    a, b = coeffs[..., 1::2], coeffs[..., 2::2]
    out[..., 1::2] = 2 * np.pi * k * b
    out[..., 2::2] = -2 * np.pi * k * a
    return out


def shift(coeffs: np.ndarray, tau: float) -> np.ndarray:
    """Coefficients of t -> v(t + tau)."""
    coeffs = np.asarray(coeffs, dtype=float)
    dim = coeffs.shape[-1]
    require_odd(dim, "shift")
    k = np.arange(1, max_frequency(dim) + 1)
    theta = 2 * np.pi * k * tau
    cs, sn = np.cos(theta), np.sin(theta)
    a, b = coeffs[..., 1::2], coeffs[..., 2::2]
    out = np.array(coeffs, dtype=float)
    out[..., 1::2] = a * cs + b * sn
    out[..., 2::2] = b * cs - a * sn
    return out


def rotation_blocks_matrix(dim: int, angle_of_k) -> np.ndarray:
    """Block-diagonal matrix with 2x2 rotation blocks R(angle_of_k(k)).

    The convention matches :func:`shift`: block [[cos, sin], [-sin, cos]].
    """
    require_odd(dim)
    A = np.zeros((dim, dim))
    A[0, 0] = 1.0
    for k in range(1, max_frequency(dim) + 1):
        th = angle_of_k(k)
        c, s = np.cos(th), np.sin(th)
        i = 2 * k - 1
        A[i:i + 2, i:i + 2] = [[c, s], [-s, c]]
    return A


def derivative_matrix(dim: int, mass: float = 0.0, top: str = "galerkin") -> np.ndarray:
    """Matrix of d/dt + mass; blocks [[mass, 2 pi k], [-2 pi k, mass]] on (a_k, b_k).

    For an even dimension the top cosine has no sine partner.  With
    ``top="galerkin"`` it keeps only its ``mass`` entry (its derivative leaves
    the truncated span); ``top="modulus"`` scales it by |mass + 2 pi i K|,
    the singular value of the complete block, so the truncation does not
    leave one undamped mode.
    """
    if top not in ("galerkin", "modulus"):
        raise ValueError(f"unknown top-mode convention {top!r}")
    A = np.zeros((dim, dim))
    A[0, 0] = mass
    for i in range(1, dim, 2):
        k = (i + 1) // 2
        A[i, i] = mass
        if i + 1 < dim:
            A[i + 1, i + 1] = mass
            A[i, i + 1] = 2 * np.pi * k
            A[i + 1, i] = -2 * np.pi * k
        elif top == "modulus":
            A[i, i] = np.hypot(mass, 2 * np.pi * k)
    return A
