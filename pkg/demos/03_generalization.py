"""
More particles than boxes
=========================

With ``N`` particles in ``M < N`` boxes, post-selecting every particle on the
first phase state still leaves no pair in the same box. The cancellation
rests on the ``M``-th roots of unity summing to zero.
"""

from pigeonsim import verify_general

print(" N  M   max P(same)   max |amplitude|   roots residual")
for n in range(3, 7):
    for m in range(2, n):
        if m**n > 2**20:
            continue
        r = verify_general(n, m)
        print(
            f"{n:2d} {m:2d}   {r.pair_same_prob_max:11.3g}   {r.pair_amplitude_max:15.3g}"
            f"   {r.roots_of_unity_residual:14.3g}"
        )
