# %% [markdown]
# # Successful cheating rate across parameters
#
# Each sweep point runs its own batch of trials with a seed derived from the
# point, so any subset of points can be rerun on its own. Trial counts are
# kept small here; the acceptance suite uses 10^4 to 10^5 per point.

# %%
import tempfile
from pathlib import Path

from precheck import ScenarioConfig, run_sweep, write_csv

base = ScenarioConfig(trials=3000)


def show(results, axis):
    for r in results:
        lo, hi = r.ci95
        coord = {"table_length": r.table_len, "seq_length": r.seq_len, "snr": r.snr_db,
                 "fbs_power": r.fbs_power_dbm}[axis]
        print(f"{axis}={coord:<6g} SCR {r.scr:.4f}  [{lo:.4f}, {hi:.4f}]")


# %% [markdown]
# ## Table length
#
# A wrong guess almost never wins, so SCR tracks `1/(2T)`: the `1/T` chance
# of guessing the start, times the coin toss between two perfect copies.

# %%
show(run_sweep(base, "table_length", [16, 32, 64]), "table_length")
print("1/(2T):", [round(1 / (2 * t), 4) for t in (16, 32, 64)])

# %% [markdown]
# ## Sequence length and SNR
#
# At a clean link the length hardly matters. At 10 dB per symbol the honest
# copy already carries about 15% bit errors, and a short 4-symbol
# sequence lets lucky wrong guesses through.

# %%
for snr in (10.0, 16.0):
    print(f"-- snr {snr:g} dB")
    show(run_sweep(base.with_values({"snr_db": snr}), "seq_length", [4, 8, 16]), "seq_length")

# %% [markdown]
# ## FBS transmit power
#
# Power does not help the attacker against the precheck: being louder does
# not make a wrong guess right.

# %%
power = run_sweep(base, "fbs_power", [10, 20, 30, 40])
show(power, "fbs_power")
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "fbs_power_sweep.csv"
    write_csv(power, out)
    print(out.read_text())
