"""Monte Carlo engines for the block counting chain, the partition-valued
coalescent, the fixation line, the lookdown model and the alpha = 1
branching process."""

from coalesce.simulator.alias import AliasTable
from coalesce.simulator.bs import POPULATION_CAP, BranchingResult, sim_bs_branching, sim_bs_depth
from coalesce.simulator.chains import (
    BlockCountingResult,
    FixationLineResult,
    Trajectory,
    sim_block_counting,
    sim_fixation_line,
)
from coalesce.simulator.config import SimConfig, run_batches
from coalesce.simulator.kernels import BlockJumps, FixationJumps
from coalesce.simulator.lookdown import CouplingError, LookdownRun, LookdownState, sim_lookdown
from coalesce.simulator.partition import PartitionResult, sim_partition_coalescent

__all__ = [
    "AliasTable",
    "BlockCountingResult",
    "BlockJumps",
    "BranchingResult",
    "CouplingError",
    "FixationJumps",
    "FixationLineResult",
    "LookdownRun",
    "LookdownState",
    "POPULATION_CAP",
    "PartitionResult",
    "SimConfig",
    "Trajectory",
    "run_batches",
    "sim_block_counting",
    "sim_bs_branching",
    "sim_bs_depth",
    "sim_fixation_line",
    "sim_lookdown",
    "sim_partition_coalescent",
]
