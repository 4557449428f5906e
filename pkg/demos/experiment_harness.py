"""
Running the seeded experiments
==============================

The harness reproduces the two experiments at desk scale and writes CSV.
The same runs are available from the command line as ``glmvi fig2``,
``glmvi fig3`` and ``glmvi rate``.
"""

from glmvi import Link
from glmvi.harness import EXPERIMENT_COLUMNS, ExperimentConfig, rate_table, run_fig2, run_fig3, to_csv

cfg = ExperimentConfig("fig2", master_seed=1, links=(Link.LINEAR, Link.HINGE), n=10,
                       K=(200, 800, 3200), replications=5, timing=False)
rows = run_fig2(cfg)
for r in rate_table(rows):
    print(r)

# rows are keyed by (link, K, replication), so a rerun reproduces them byte for byte
assert to_csv(rows, EXPERIMENT_COLUMNS) == to_csv(run_fig2(cfg), EXPERIMENT_COLUMNS)

fig3 = run_fig3(ExperimentConfig("fig3", master_seed=1, n=10, K=(200, 800), replications=3, timing=False))
print(to_csv(fig3[:4], EXPERIMENT_COLUMNS))
