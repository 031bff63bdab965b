"""
Three particles, two boxes, no pair together
============================================

Prepare every particle in an equal superposition of the two boxes, then
keep only the runs in which each particle is found in the phase state
``|+i>``. Ask, for any pair, whether the two particles were in the same box.
"""

from pigeonsim import (
    abl_probabilities,
    box_measurement,
    build_scenario,
    same_diff_measurement,
)

# the scenario: uniform pre-selection, post-selection on outcome (0, 0, 0)
s = build_scenario(3, 2)
print("overlap <post|pre> =", s.ensemble.overlap)

# the coarse question "same box or not?" for each pair
for i, j in s.shape.pairs():
    probs = abl_probabilities(s.ensemble, same_diff_measurement(s.shape, i, j))
    print(f"pair ({i},{j}): P(same) = {probs['same']:.3g}, P(diff) = {probs['diff']:.3g}")

# asking which box each particle of pair (1,2) is in gives a very different answer
probs = abl_probabilities(s.ensemble, box_measurement(s.shape, 1, 2))
print("separate box outcomes for (1,2):", {k: round(v, 12) for k, v in probs.items()})
print("P(LL) + P(RR) =", round(probs["LL"] + probs["RR"], 12))
