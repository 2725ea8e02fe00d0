"""Rank estimation for game players from match records.

Combines per-move strength scores, selection priors from imitation
policies at multiple skill levels, and loss statistics against a strong
evaluator into feature vectors, then trains a boosted-tree regression
meta-model that maps averaged features to rank groups.
"""

__version__ = "0.1.0"
