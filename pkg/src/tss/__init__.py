"""Typechecker, time reconstruction, and timed interpreter for a
session-typed message-passing language with next/always/eventually
modalities."""

from .ast import Signature
from .checker import check_process, check_signature
from .cost import instrument
from .errors import (BudgetExceededError, ConfigTypeError,
                     ContractivenessError, EvalError, InstrumentError,
                     ParseError, ReconstructionError, RunError, ScopeError,
                     SessionTypeError, StuckError, TssError)
from .instantiate import instantiate, instantiate_many
from .parser import parse_program
from .printer import fmt_type, pretty_print
from .reconstruct import elaborate_process, elaborate_signature
from .runtime import (Configuration, Engine, Trace, check_configuration,
                      init_config, is_poised, make_scheduler, root_chain)
from .subtyping import is_subtype, is_weak_subtype
from .typeops import TypeOps, check_contractive

__all__ = [
    "Signature", "parse_program", "pretty_print", "fmt_type",
    "instantiate", "instantiate_many", "instrument",
    "TypeOps", "check_contractive", "check_process", "check_signature",
    "is_subtype", "is_weak_subtype",
    "elaborate_process", "elaborate_signature",
    "Configuration", "Engine", "Trace", "init_config", "is_poised",
    "check_configuration", "make_scheduler", "root_chain",
    "TssError", "ParseError", "ScopeError", "EvalError", "SessionTypeError",
    "ReconstructionError", "InstrumentError", "ConfigTypeError", "RunError",
    "StuckError", "ContractivenessError", "BudgetExceededError",
]
