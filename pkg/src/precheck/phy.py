"""
Single-carrier zero-padded block transmission.

The chain is: Gray-mapped square M-QAM -> blocks of ``N_b`` symbols ->
tall ``P x N_b`` Toeplitz convolution (``P = N_b + L_c``, the trailing
``L_c`` positions act as the zero-padding guard) -> AWGN -> zero-forcing
equalization -> minimum-distance demodulation.

Bit vectors are ``uint8`` arrays of 0/1, MSB first within each symbol.
Symbols and blocks are plain complex numpy arrays; a transmit block has
length ``N_b`` and an observed block has length ``P``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ChannelError, ComparisonError, ConfigError, FramingError

__all__ = [
    "Modulation",
    "ChannelModel",
    "modulate",
    "demodulate",
    "build_toeplitz",
    "transmit_block",
    "transmit",
    "equalize",
    "ber",
    "noise_variance_from_snr",
    "random_taps",
]

_RANK_TOL = 1e-12


def _gray(k: np.ndarray) -> np.ndarray:
    return k ^ (k >> 1)


@dataclass(frozen=True)
class Modulation:
    """Square M-QAM with per-axis Gray labelling and unit average energy.

    The first half of a symbol's bits selects the in-phase amplitude, the
    second half the quadrature amplitude. Along each axis the amplitudes
    ``-(m-1), ..., -1, +1, ..., +(m-1)`` (``m = sqrt(M)``) carry the
    reflected binary Gray code of their position, so for 16-QAM
    ``00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3`` before scaling by
    ``1/sqrt(10)``.

    ``constellation[i]`` is the point whose bit label is the binary
    expansion of ``i``.
    """

    order: int = 16

    def __post_init__(self):
        m = math.isqrt(self.order)
        if self.order < 4 or m * m != self.order or self.order & (self.order - 1):
            raise ConfigError(f"QAM order must be a power of 4, got {self.order}", key="modulation_order")

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    @property
    def side(self) -> int:
        return math.isqrt(self.order)

    @cached_property
    def normalization(self) -> float:
        # mean of (2k - m + 1)^2 over k, doubled for two axes
        m = self.side
        return 1.0 / math.sqrt(2.0 * (m * m - 1) / 3.0)

    @cached_property
    def _axis_levels(self) -> np.ndarray:
        """Amplitude for each per-axis Gray label (index = label value)."""
        m = self.side
        pos = np.arange(m)
        levels = np.empty(m)
        levels[_gray(pos)] = 2 * pos - (m - 1)
        return levels

    @cached_property
    def constellation(self) -> np.ndarray:
        half = self.bits_per_symbol // 2
        idx = np.arange(self.order)
        i_lab = idx >> half
        q_lab = idx & ((1 << half) - 1)
        pts = self._axis_levels[i_lab] + 1j * self._axis_levels[q_lab]
        pts = pts * self.normalization
        pts.setflags(write=False)
        return pts

    @cached_property
    def bit_labels(self) -> np.ndarray:
        """``(M, bits_per_symbol)`` array of the label of each point."""
        k = self.bits_per_symbol
        idx = np.arange(self.order)
        labels = ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
        labels.setflags(write=False)
        return labels

    @cached_property
    def _weights(self) -> np.ndarray:
        return 1 << np.arange(self.bits_per_symbol - 1, -1, -1)

    def indices_to_symbols(self, indices) -> np.ndarray:
        return self.constellation[np.asarray(indices)]


def modulate(bits, mod: Modulation) -> np.ndarray:
    """Map a bit vector onto constellation symbols, ``bits_per_symbol`` bits each."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    k = mod.bits_per_symbol
    if bits.size % k:
        raise FramingError(f"{bits.size} bits do not split into {k}-bit symbols")
    idx = bits.reshape(-1, k) @ mod._weights
    return mod.constellation[idx]


def nearest_indices(symbols, mod: Modulation) -> np.ndarray:
    """Index of the closest constellation point; lowest index wins exact ties."""
    z = np.asarray(symbols, dtype=complex).ravel()
    c = mod.constellation
    d = (z.real[:, None] - c.real[None, :]) ** 2 + (z.imag[:, None] - c.imag[None, :]) ** 2
    return np.argmin(d, axis=1)


def demodulate(symbols, mod: Modulation) -> np.ndarray:
    """Hard minimum-Euclidean-distance decision back to bits."""
    return mod.bit_labels[nearest_indices(symbols, mod)].ravel()


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Known FIR channel plus AWGN level for one link.

    ``noise_variance`` is per real dimension, so a complex noise sample has
    total variance ``2 * noise_variance``. ``channel_order`` defaults to
    ``len(taps) - 1``.
    """

    taps: np.ndarray
    block_size: int = 4
    noise_variance: float = 0.0
    channel_order: int = field(default=-1)

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex).ravel()
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        if self.channel_order < 0:
            object.__setattr__(self, "channel_order", taps.size - 1)
        if not np.any(taps):
            raise ConfigError("channel taps are all zero", key="taps")
        if self.block_size < 1:
            raise ConfigError("block size must be positive", key="block_size")
        if self.noise_variance < 0:
            raise ConfigError("noise variance must be non-negative", key="noise_variance")

    @property
    def conv_length(self) -> int:
        return self.block_size + self.channel_order

    @cached_property
    def matrix(self) -> np.ndarray:
        return build_toeplitz(self)

    @cached_property
    def zf(self) -> np.ndarray:
        if np.max(np.abs(self.taps)) < _RANK_TOL:
            raise ChannelError("channel is numerically rank deficient (all taps below 1e-12)")
        # H has full column rank, so pinv(H) = (H^H H)^-1 H^H
        Hh = self.matrix.conj().T
        return np.linalg.solve(Hh @ self.matrix, Hh)


def build_toeplitz(ch: ChannelModel) -> np.ndarray:
    """Tall convolution matrix with ``[H]_{p,n} = h(p - n)``."""
    if ch.taps.size != ch.channel_order + 1:
        raise ConfigError(
            f"expected {ch.channel_order + 1} taps for channel order {ch.channel_order}, got {ch.taps.size}",
            key="taps",
        )
    nb, lc = ch.block_size, ch.channel_order
    H = np.zeros((nb + lc, nb), dtype=complex)
    for n in range(nb):
        H[n:n + lc + 1, n] = ch.taps
    return H


def _awgn(shape, noise_variance: float, rng: np.random.Generator) -> np.ndarray:
    if noise_variance == 0:
        return np.zeros(shape, dtype=complex)
    s = math.sqrt(noise_variance)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit_block(u, ch: ChannelModel, rng: np.random.Generator) -> np.ndarray:
    """One observed block ``z = H u + noise`` of length ``P``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (ch.block_size,):
        raise FramingError(f"transmit block must have {ch.block_size} symbols, got shape {u.shape}")
    return ch.matrix @ u + _awgn(ch.conv_length, ch.noise_variance, rng)


def transmit(symbols, ch: ChannelModel, rng: np.random.Generator) -> np.ndarray:
    """Frame a symbol stream into blocks and pass each through the channel.

    Returns a ``(P, n_blocks)`` array whose columns are the observed blocks.
    """
    s = np.asarray(symbols, dtype=complex).ravel()
    if s.size % ch.block_size:
        raise FramingError(f"{s.size} symbols do not fill whole blocks of {ch.block_size}")
    U = s.reshape(-1, ch.block_size).T
    return ch.matrix @ U + _awgn((ch.conv_length, U.shape[1]), ch.noise_variance, rng)


def equalize(z, ch: ChannelModel) -> np.ndarray:
    """Zero-forcing estimate ``pinv(H) z``.

    Accepts one observed block (length ``P``) or the ``(P, n_blocks)``
    output of :func:`transmit`; in the latter case the recovered blocks are
    concatenated back into a symbol stream.
    """
    z = np.asarray(z, dtype=complex)
    if z.shape[0] != ch.conv_length:
        raise FramingError(f"observed block must have {ch.conv_length} samples, got {z.shape[0]}")
    u = ch.zf @ z
    if u.ndim == 2:
        return u.T.ravel()
    return u


def ber(a, b) -> float:
    a = np.asarray(a, dtype=np.uint8).ravel()
    b = np.asarray(b, dtype=np.uint8).ravel()
    if a.size == 0 or a.size != b.size:
        raise ComparisonError(f"cannot compare bit vectors of lengths {a.size} and {b.size}")
    return np.count_nonzero(a != b) / a.size


def noise_variance_from_snr(snr_db: float) -> float:
    """Per-dimension noise variance for unit-energy symbols at ``Es/N0 = snr_db``."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return 0.5 * 10.0 ** (-snr_db / 10.0)


def random_taps(channel_order: int, rng: np.random.Generator, decay_db: float = 6.0,
                count: int | None = None) -> np.ndarray:
    """Unit-energy taps: a fixed unit first tap, then complex Gaussian taps
    whose power falls by ``decay_db`` per tap.

    With ``count`` set, returns ``count`` independent tap vectors as rows.
    """
    n = 1 if count is None else count
    taps = np.ones((n, channel_order + 1), dtype=complex)
    if channel_order:
        k = np.arange(1, channel_order + 1)
        scale = np.sqrt(10.0 ** (-decay_db * k / 10.0) / 2.0)
        g = rng.standard_normal((n, 2 * channel_order))
        taps[:, 1:] = scale * (g[:, :channel_order] + 1j * g[:, channel_order:])
    taps /= np.linalg.norm(taps, axis=1, keepdims=True)
    return taps[0] if count is None else taps
