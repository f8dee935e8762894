"""Contract-oriented processes: compliance, culpability, simulation and static honesty checking."""
from co2.contracts import (
    E, NIL, Atom, BilateralContract, ContractLabel, dual, exculpate, is_compliant, is_compliant_gfp, is_culpable,
    unblocks, unfold,
)
from co2.frontend import ParseError, parse_bilateral, parse_contract, parse_formula, parse_process, parse_system, render
from co2.honesty import HonestyVerdict, check_sharp_honesty, is_finite_control, realizes, x_safe
from co2.ltl import ltl_holds
from co2.simulate import SimTrace, simulate
from co2.system import System, SystemLabel, normalize, ready_do, system_steps

__all__ = [
    "E", "NIL", "Atom", "BilateralContract", "ContractLabel", "dual", "exculpate", "is_compliant",
    "is_compliant_gfp", "is_culpable", "unblocks", "unfold", "ParseError", "parse_bilateral", "parse_contract",
    "parse_formula", "parse_process", "parse_system", "render", "HonestyVerdict", "check_sharp_honesty",
    "is_finite_control", "realizes", "x_safe", "ltl_holds", "SimTrace", "simulate", "System", "SystemLabel",
    "normalize", "ready_do", "system_steps",
]
