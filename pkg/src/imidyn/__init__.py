"""Synchronous proportional-imitation dynamics on rings and complete graphs.

Simulation engines, exact small-instance Markov-chain oracles, initial
configuration statistics, and a sweep harness for mapping convergence
behaviour over the normalised (S, T) payoff square.
"""

from .games import (GameParams, Quadrant, Region, SwitchTables, Zone,
                    classify, cycle_payoff, make_params, switch_prob_cycle,
                    switch_tables)
from .outcomes import AbsorptionReport, Outcome
from .cycle import (CycleState, Run, RunDecomposition, barrier_threshold,
                    decompose, is_steady, run_batch, run_to_absorption, step)
from .complete import (CompleteState, CriticalPoint, critical_point, payoffs,
                       run_complete, run_complete_batch, step_aggregate,
                       step_per_vertex)
from .configs import ConfigStats, InitialSpec, config_stats, sample
from .oracle import (ChainSolve, build_cycle_chain, complete_chain,
                     cycle_transition_row, gamblers_ruin_duration,
                     merging_times, solve_absorption, solve_chain,
                     solve_complete)
from .sweep import (ScalingFit, ScalingRow, SweepCell, SweepSpec, fit_scaling,
                    run_scaling, run_sweep)

__version__ = "0.1.0"
