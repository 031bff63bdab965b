"""
Which pairs end up together
===========================

Change the final outcome of one particle and the pattern of pairs found in
the same box changes with it. Here we tabulate all eight outcomes.
"""

from pigeonsim.pigeonhole import all_patterns

table = all_patterns(3, 2)
print("outcome    (1,2)      (1,3)      (2,3)")
for outcome, pattern in table.items():
    cells = "  ".join(f"{r.verdict.value:<9}" for r in pattern.pairs.values())
    print("".join(map(str, outcome)), "     ", cells)

# a pair is together exactly when its two final outcomes differ
for outcome, pattern in table.items():
    for (i, j), r in pattern.pairs.items():
        assert (r.verdict.value == "SAME") == (outcome[i - 1] != outcome[j - 1])
print("rule: a pair shares a box exactly when its two final outcomes differ")
