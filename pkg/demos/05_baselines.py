# %% [markdown]
# # RSS-based detectors against a power-matching FBS
#
# The three baselines only look at how strong a signal is. An FBS that
# sizes its power so the UE hears it slightly louder than the real target
# slips past all of them, and the UE then picks it for being the strongest.

# %%
from dataclasses import replace

from precheck import ScenarioConfig, estimate_scr
from precheck.detectors import region_half_width_db

cfg = ScenarioConfig(trials=3000).with_values({"fbs.power_policy": "match_target"})
print(f"suspicious region half-width: {region_half_width_db(0.05, 2.0):.2f} dB")

for scheme in ("rss3sigma", "distance", "region", "psd"):
    est = estimate_scr(replace(cfg, detector=scheme))
    lo, hi = est.ci95
    print(f"{scheme:10s} SCR {est.scr:.4f}  [{lo:.4f}, {hi:.4f}]")

# %% [markdown]
# ## A loud FBS
#
# At a fixed 46 dBm the FBS, sitting 50 to 200 m from the UE, is far too
# strong. The 3-sigma and distance checks catch it easily.

# %%
loud = cfg.with_values({"fbs.power_policy": "fixed", "fbs.power_dbm": 46.0})
for scheme in ("rss3sigma", "distance", "region", "psd"):
    print(f"{scheme:10s} SCR {estimate_scr(replace(loud, detector=scheme)).scr:.4f}")
