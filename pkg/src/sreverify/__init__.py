"""Symbolic simulation and verification of recurrence-equation hardware models."""
from . import wimax  # registers the transmitter block functions
from .dsl import DslError, format_term, load, parse, parse_term, serialize
from .equivalence import EquivJob, EquivVerdict, check_equivalence, localize
from .library import DEFAULT, Registry, evaluate
from .matching import equiv_terms, match_q, normalize
from .properties import PropVerdict, check_property, property_suite, replay
from .rewrite import NonTermination, Rewriter, RuleSet, replace, replace_list, replace_repeated
from .rules import builtin_ruleset, simulation_rules
from .simulate import DeltaCycleLimit, SimConfig, Trace, run, run_multi_control
from .system import SreSystem

__version__ = "0.1.0"

__all__ = [
    "wimax", "DslError", "format_term", "load", "parse", "parse_term", "serialize",
    "EquivJob", "EquivVerdict", "check_equivalence", "localize", "DEFAULT", "Registry",
    "evaluate", "equiv_terms", "match_q", "normalize", "PropVerdict", "check_property",
    "property_suite", "replay", "NonTermination", "Rewriter", "RuleSet", "replace",
    "replace_list", "replace_repeated", "builtin_ruleset", "simulation_rules",
    "DeltaCycleLimit", "SimConfig", "Trace", "run", "run_multi_control", "SreSystem",
    "__version__",
]
