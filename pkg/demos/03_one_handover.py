# %% [markdown]
# # A single handover, message by message
#
# One trial of the event-driven simulation, printed as a trace. The FBS
# overhears the sync request and answers with its own UL allocation, so the
# UE sees two candidates claiming to be the target.

# %%
import math

from precheck import ScenarioConfig, run_trial

cfg = ScenarioConfig(snr_db=15.0)
res = run_trial(cfg, trial_index=4, trace=True)
print("time,sender,receiver,kind")
print("\n".join(res.trace))

# %% [markdown]
# Each reply is scored by its bit distance to the reference copy that came
# via the source BS, then the arrival window is checked.

# %%
print(f"outcome:            {res.outcome.value}")
print(f"true start:         {res.true_start}")
print(f"BER legit / FBS:    {res.ber_legit:.3f} / {res.ber_fbs:.3f}")
print(f"arrival offset (us) legit {res.arrival_offset_legit * 1e6:+.2f}, FBS {res.arrival_offset_fbs * 1e6:+.2f}")
print(f"RSS at UE (dBm)     target {res.rss_target_dbm:.1f}, FBS {res.rss_fbs_dbm:.1f}")

# %% [markdown]
# ## When the FBS is too slow
#
# Forged replies that miss the arrival window are dropped whatever their
# bits say. Give the FBS the true start index (a stronger attacker than the
# threat model allows) but a 30 us reaction time.

# %%
slow = cfg.with_values({"fbs.oracle_start": True, "fbs.reaction_delay_us": 30.0, "snr_db": math.inf})
outcomes = [run_trial(slow, i).outcome.value for i in range(200)]
print({o: outcomes.count(o) for o in set(outcomes)})

# %% [markdown]
# With a fast oracle FBS and no noise, both replies are bit-perfect. The UE
# then has nothing to go on and flips a coin.

# %%
fast = slow.with_values({"fbs.reaction_delay_us": 12.0})
outcomes = [run_trial(fast, i).outcome.value for i in range(2000)]
print({o: outcomes.count(o) for o in set(outcomes)})
