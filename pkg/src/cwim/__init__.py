"""Online influence maximization under corrupted users.

Independent-cascade simulation with edge-level semi-bandit feedback,
seed-selection oracles, confidence-weighted linear UCB learners and
baselines, plus an experiment harness that produces regret curves.
"""

__version__ = "0.1.0"
