"""
Sweeping the pacing function
============================

One run per pacing function, summarised as a CSV table with the mean
test AUC and macro-F1 of every variant.
"""

from bcl.experiment import ExperimentConfig, sweep

config = ExperimentConfig(seeds=(0, 1))
reports, table = sweep(config, "pacing", ["linear", "root", "geometric"], deterministic=True)
print(table)

# The same machinery sweeps alpha, lambda0 or T. T values are fractions of
# max_epochs and numeric values must lie in [0.1, 0.9].
_, table = sweep(config, "alpha", [0.1, 0.5, 0.9], deterministic=True)
print(table)
