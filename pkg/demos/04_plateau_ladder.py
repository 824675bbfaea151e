"""How the plateau shrinks with the difference length.

Halving l should cut the plateau by about 2^4.  This small version uses five
replicas per rung; the acceptance suite runs twenty.

Run: python demos/04_plateau_ladder.py   (about a minute)
"""

from zosaddle import Constant, EigenSearchConfig, SaddleConfig
from zosaddle.harness import ExperimentConfig, SummaryTable, plateau_stat, run_replicas

search = SaddleConfig(n_x_max=1000, alpha_x=Constant(1e-4), inner=EigenSearchConfig(n_v_max=100))
base = ExperimentConfig(benchmark="muller_brown", x0=[0.0, 1.0], search=search, replicas=5)

plateaus = {}
for e in range(8, 12):
    l = 2.0**-e
    plateaus[(l, 1e-4)] = plateau_stat(run_replicas(base.with_search(length=Constant(l))))

table = SummaryTable.from_plateaus(plateaus)
print(table.format())
print(f"fitted order: {table.fitted_order(1e-4):.2f}")
