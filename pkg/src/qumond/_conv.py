"""Zero-padded FFT convolution against kernels sampled on lattice offsets.

A grid of ``n`` cells per axis is embedded in a ``2n`` box so that the
circular convolution equals the linear (free-space) one on the original
cells.  Kernel spectra are cached per (builder, n, h, params).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

# Mean of 1/|x| over the unit cube centred at the origin.
CUBE_INV_R_MEAN = 3.0 * math.log(2.0 + math.sqrt(3.0)) - math.pi / 2.0


def offset_mesh(n: int):
    """Integer lattice offsets of the padded ``2n`` box in FFT order, sparse."""
    m = np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
    return np.meshgrid(m, m, m, indexing="ij", sparse=True)


def forward(data: np.ndarray) -> np.ndarray:
    n = data.shape[0]
    padded = np.zeros((2 * n,) * 3)
    padded[:n, :n, :n] = data
    return sfft.rfftn(padded)


def inverse(spec: np.ndarray, n: int) -> np.ndarray:
    out = sfft.irfftn(spec, s=(2 * n,) * 3)
    return np.ascontiguousarray(out[:n, :n, :n])


def convolve(data: np.ndarray, spec: np.ndarray) -> np.ndarray:
    return inverse(forward(data) * spec, data.shape[0])


@lru_cache(maxsize=48)
def kernel_spectrum(builder, n: int, h: float, *params) -> np.ndarray:
    """rFFT of ``builder(mx, my, mz, h, *params)`` on the padded offsets."""
    mx, my, mz = offset_mesh(n)
    k = np.broadcast_to(builder(mx, my, mz, h, *params), (2 * n,) * 3)
    spec = sfft.rfftn(k)
    spec.setflags(write=False)
    return spec


def clear_cache() -> None:
    kernel_spectrum.cache_clear()
