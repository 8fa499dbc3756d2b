"""Power-system layer: case data, power flow, AC-OPF, and renewable injection."""

from .case import (
    Branch,
    Bus,
    CaseParseError,
    Generator,
    PowerSystemCase,
    UnsupportedFeatureError,
    load_case,
    parse_matpower_case,
    serialize_case,
)
from .powerflow import PowerFlowResult, newton_power_flow, power_mismatch
from .acopf import OpfSolution, OpfStatus, solve_ac_opf
from .renewables import PvPlant, ResModel, WindFarm, apply_uncertainty, res_power

__all__ = [
    "Branch",
    "Bus",
    "CaseParseError",
    "Generator",
    "PowerSystemCase",
    "UnsupportedFeatureError",
    "load_case",
    "parse_matpower_case",
    "serialize_case",
    "PowerFlowResult",
    "newton_power_flow",
    "power_mismatch",
    "OpfSolution",
    "OpfStatus",
    "solve_ac_opf",
    "PvPlant",
    "ResModel",
    "WindFarm",
    "apply_uncertainty",
    "res_power",
]
