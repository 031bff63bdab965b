"""
Measuring one pair after another
================================

Each same/different measurement is a real intervention. Finding (1,2) in the
same box and then (1,3) in the same box leaves a GHZ-like state that still
overlaps the post-selected state, so that path has probability 1/32.
A single measurement of (1,2) never yields "same" among selected runs.
"""

from pigeonsim import SamePair, build_scenario, chain_amplitude
from pigeonsim.montecarlo import RunConfig, compare_to_oracle, run_ensemble

s = build_scenario(3, 2)
chain = chain_amplitude(s.pre, [SamePair(s.shape, 1, 2), SamePair(s.shape, 1, 3)], s.post)
print("exact path probability (same, same, selected):", chain.path_probability)
print("step probabilities:", chain.step_probabilities)

# sample the same experiment
cfg = RunConfig.from_dict(
    {"n": 3, "m": 2, "intermediate": [[1, 2], [1, 3]], "samples": 100_000, "seed": 42}
)
rep = compare_to_oracle(cfg)
cell = rep.cell(("same", "same"), (0, 0, 0))
print(f"sampled {cell.count} of {rep.samples}, expected {cell.exact * rep.samples:.0f}, z = {cell.z:.2f}")
print("largest |z| over all cells:", round(rep.max_abs_z, 2))

# one measurement only: SAME never survives post-selection
single = RunConfig.from_dict({"n": 3, "m": 2, "intermediate": [[1, 2]], "samples": 100_000, "seed": 7})
table = run_ensemble(single)
print("selected runs:", table.selected_count, " frequency of SAME among them:",
      table.conditional_frequency(0, "same"))
