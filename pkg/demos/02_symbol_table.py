# %% [markdown]
# # The public table and the precheck selection
#
# Everyone, the attacker included, knows the table. What stays secret is the
# start index the target base station picks for each handover.

# %%
import numpy as np

from precheck.phy import Modulation, demodulate
from precheck.seqtable import PrecheckSelection, generate_table, random_selection, select_precheck

mod = Modulation(16)
rng = np.random.default_rng(7)
table = generate_table(32, mod, rng)
print(len(table), "base symbols,", table.doubled.size, "stored")

# %% [markdown]
# Storing the table twice means a selection that runs off the end is still a
# plain slice. Start 30 with length 8 wraps to indices 30, 31, 0..5.

# %%
sel = PrecheckSelection(start_index=30, length=8)
wrapped = select_precheck(table, sel)
by_hand = table.base_symbols[[30, 31, 0, 1, 2, 3, 4, 5]]
print(np.array_equal(wrapped, by_hand))
print(demodulate(wrapped, mod).reshape(-1, 4))

# %% [markdown]
# ## How guessable is it?
#
# The target draws the start uniformly. An attacker who knows `T` and `L`
# but not the start is right with probability `1/T`.

# %%
for T in (16, 32, 64):
    truth = np.array([random_selection(T, 8, rng).start_index for _ in range(50_000)])
    guess = rng.integers(0, T, size=truth.size)
    print(f"T={T:3d}  hit rate {np.mean(truth == guess):.4f}  (1/T = {1 / T:.4f})")

# %% [markdown]
# A wrong guess lands near BER 0.5 on average, but with only 32 bits the
# spread is wide. That spread is what a noisy honest copy has to beat.

# %%
ref = demodulate(select_precheck(table, PrecheckSelection(0, 8)), mod)
dists = [np.mean(demodulate(select_precheck(table, PrecheckSelection(s, 8)), mod) != ref) for s in range(1, 32)]
print("BER of wrong starts vs start 0: min %.3f  mean %.3f  max %.3f" % (min(dists), np.mean(dists), max(dists)))
