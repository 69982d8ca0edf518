"""Exact solver for the rooted Steiner tree problem with revenues, budget and hop limit."""

from .bnb import SolveParams, SolveReport, solve_milp
from .instance import Instance, parse_stp, read_stp, write_stp
from .milp import MilpModel, export_lp, export_mps
from .popmodel import BASIC, POP1, POP1R, POP2, POP2R, VARIANTS, build_pop, decode_solution, start_assignment
from .reduce import eurc_reduce, shortest_paths, trim_unreachable
from .simplex import solve_lp
from .tree import SteinerTree
from .verify import brute_force, strength, verify_solution

__version__ = "0.1.0"
