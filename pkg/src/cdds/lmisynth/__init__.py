"""LMI assembly for dissipativity and stability of coupled delay systems."""

from .channels import Channel, prepare_channel, prepare_channels
from .crosscheck import crosscheck_omega, dissipation_form
from .hierarchy import (HierarchyReport, LadderReport, RankOneReport, check_orthogonal,
                        e_ladder, hierarchy_probe, rank_one_update)
from .problem import (AffineExpr, Constraint, LmiProblem, Variable, build_problem,
                      count_decision_variables)
from .single import assemble_single_delay
from .supply import SupplyRate, supply_preset
from .theorem1 import assemble_theorem1, theorem1_data

__all__ = [
    "AffineExpr",
    "Channel",
    "Constraint",
    "HierarchyReport",
    "LadderReport",
    "LmiProblem",
    "RankOneReport",
    "SupplyRate",
    "Variable",
    "assemble_single_delay",
    "assemble_theorem1",
    "build_problem",
    "check_orthogonal",
    "count_decision_variables",
    "crosscheck_omega",
    "dissipation_form",
    "e_ladder",
    "hierarchy_probe",
    "prepare_channel",
    "prepare_channels",
    "rank_one_update",
    "supply_preset",
    "theorem1_data",
]
