"""Cherries and pitchforks of random trees under Ford's alpha model."""

from alphatree.errors import ValidationError
from alphatree.exact import (
    JointPmf,
    MomentTrace,
    cherry_pmf,
    joint_pmf,
    limit_curve_extrema,
    mean_closed_form,
    moment_trace,
    second_moment_asymptotics,
)
from alphatree.tree import (
    TreeShape,
    classify_edges,
    count_stats,
    grow_step,
    initial_tree,
    simulate_ford,
)
from alphatree.urn import LimitSummary, UrnState, initial_urn, limit_summary, urn_step

__version__ = "0.1.0"
