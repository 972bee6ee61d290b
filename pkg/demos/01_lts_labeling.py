"""Label road segments with the exact LTS rules.

Builds a handful of segments by hand, discretizes their raw features, and
prints the resulting stress labels, then sweeps the full discretized feature
grid to show the label distribution the rules induce.
"""

import numpy as np

from stressgraph import RawFeatures, compute_lts, discretize, iter_feature_grid, stress_class

streets = {
    "quiet residential":   RawFeatures("local", "twoway", 2, 30, "none", "no", 900),
    "protected track":     RawFeatures("arterial", "twoway", 4, 60, "cycle_track", "no", 20000),
    "painted lane":        RawFeatures("collector", "twoway", 2, 45, "bike_lane", "yes", 4000),
    "riverside trail":     RawFeatures("trail", None, None, None, None, None, None),
    "four-lane arterial":  RawFeatures("arterial", "twoway", 4, 60, "none", "no", 18000),
    "mid-speed collector": RawFeatures("collector", "twoway", 2, 50, "none", "no", 2500),
}

print("segment                 LTS  stress")
for name, raw in streets.items():
    label = compute_lts(discretize(raw))
    stress = "low" if stress_class(label) == 1 else "high"
    print(f"{name:22s}  {label}    {stress}")

labels = np.array([compute_lts(rec) for rec in iter_feature_grid()])
shares = np.bincount(labels - 1, minlength=4) / labels.size
print(f"\nfull {labels.size}-combination grid:")
for k in range(4):
    print(f"  LTS{k + 1}: {100 * shares[k]:5.1f}% of feature combinations")
