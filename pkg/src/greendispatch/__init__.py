"""Green-energy dispatch simulator and training stack for data centers.

Subpackages:
  sim      -- environment dynamics, constraints, reward, DP dispatch oracle
  traces   -- trace preprocessing pipeline, CSV ingestion, synthetic generator
  forecast -- short-horizon renewable availability predictors
  nn       -- small differentiable policy/value network with analytic gradients
  agents   -- PPO controller, rule-based / heuristic / tabular-Q baselines
  metrics  -- episode metrics computed independently from logs
  harness  -- comparison / ablation / sweep experiment protocol
  cli      -- command-line entry point
"""

__version__ = "0.1.0"
