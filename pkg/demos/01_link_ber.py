# %% [markdown]
# # The link layer on its own
#
# Gray 16-QAM through a zero-padded block channel, equalized by zero forcing.
# We check the bit error rate against the exact AWGN curve, then watch what a
# frequency-selective channel costs once ZF has to undo it.

# %%
import math

import numpy as np

from precheck.phy import (
    ChannelModel, Modulation, ber, demodulate, equalize, modulate, noise_variance_from_snr, random_taps, transmit,
)

mod = Modulation(16)
rng = np.random.default_rng(1)

print("label  point")
for i in (0, 5, 10, 15):
    label = "".join(map(str, mod.bit_labels[i]))
    print(f" {label}  {mod.constellation[i] * math.sqrt(10):+.0f}")

# %% [markdown]
# The origin sits between four points. Ties go to the lowest index, which is
# `0101` (the point at -1-1j).

# %%
print("origin ->", demodulate([0j], mod))

# %% [markdown]
# ## One block through a three-tap channel
#
# `P = N_b + L_c` samples come out for every `N_b` symbols in. Without noise
# the tall Toeplitz matrix has full column rank, so ZF gets the block back
# exactly.

# %%
ch = ChannelModel([1.0, 0.5, 0.25], block_size=4)
u = modulate(rng.integers(0, 2, 16), mod)
z = transmit(u, ch, rng)
print(ch.matrix.real)
print("max recovery error:", np.max(np.abs(equalize(z, ch) - u)))

# %% [markdown]
# ## BER against the closed form
#
# For square Gray QAM with per-axis labels, each axis is an independent Gray
# PAM. The nearest-neighbour approximation below is tight once errors are
# rare.

# %%
def approx_ber(es_n0_db, order=16):
    m = math.isqrt(order)
    k = math.log2(order)
    es_n0 = 10 ** (es_n0_db / 10)
    arg = math.sqrt(3 * es_n0 / (order - 1))
    return 4 * (1 - 1 / m) / k * 0.5 * math.erfc(arg / math.sqrt(2))


bits = rng.integers(0, 2, 400_000).astype(np.uint8)
symbols = modulate(bits, mod)
print(" Eb/N0   awgn      approx    3-tap ZF")
for eb_n0 in (4, 8, 12):
    es_n0 = eb_n0 + 10 * math.log10(4)
    flat = ChannelModel([1.0], 4, noise_variance_from_snr(es_n0))
    sel = ChannelModel(random_taps(2, rng), 4, noise_variance_from_snr(es_n0))
    b_flat = ber(bits, demodulate(equalize(transmit(symbols, flat, rng), flat), mod))
    b_sel = ber(bits, demodulate(equalize(transmit(symbols, sel, rng), sel), mod))
    print(f"{eb_n0:5d}  {b_flat:.3e}  {approx_ber(es_n0):.3e}  {b_sel:.3e}")

# %% [markdown]
# The selective column is always worse: ZF amplifies noise wherever the
# channel is weak. This matters later, because the handover check compares
# bits that crossed two such links.
