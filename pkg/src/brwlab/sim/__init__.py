"""Monte Carlo of the branching particle system."""

from brwlab.sim.chain import ChainMode, chain_functionals, first_passage_laplace, large_deviation_freq
from brwlab.sim.estimators import (
    CSV_HEADER,
    DEFAULT_BUDGET,
    DEFAULT_HORIZON,
    DEFAULT_RELEASE,
    DEFAULT_REPS,
    LevelBatch,
    McEstimate,
    NestedSweep,
    dip_fraction,
    estimate_pgf,
    level_means,
    nested_sweep,
    simulate_levels,
    to_csv,
    winding_means,
)
from brwlab.sim.tree import (
    LevelCounts,
    ParticleRecord,
    PType,
    TreeLog,
    WindingCounts,
    level_counts,
    simulate_tree,
    winding_counts,
)

__all__ = [
    "CSV_HEADER", "ChainMode", "DEFAULT_BUDGET", "DEFAULT_HORIZON", "DEFAULT_RELEASE",
    "DEFAULT_REPS", "LevelBatch", "LevelCounts", "McEstimate", "NestedSweep", "PType",
    "ParticleRecord", "TreeLog", "WindingCounts", "chain_functionals", "dip_fraction",
    "estimate_pgf", "first_passage_laplace", "large_deviation_freq", "level_counts",
    "level_means", "nested_sweep", "simulate_levels", "simulate_tree", "to_csv",
    "winding_counts", "winding_means",
]
