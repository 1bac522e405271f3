from .terms import Atom, Num, Struct, Term, Var, term_key
from .parser import RuleSyntaxError, UnsafeRule, UnstratifiedNegation, parse, parse_term
from .engine import (
    ActionProposal,
    DepthExceeded,
    MalformedProposal,
    Rule,
    RuleBase,
    format_rulebase,
    infer,
    propose,
    query,
)

__all__ = [
    "ActionProposal",
    "Atom",
    "DepthExceeded",
    "MalformedProposal",
    "Num",
    "Rule",
    "RuleBase",
    "RuleSyntaxError",
    "Struct",
    "Term",
    "UnsafeRule",
    "UnstratifiedNegation",
    "Var",
    "format_rulebase",
    "infer",
    "parse",
    "parse_term",
    "propose",
    "query",
    "term_key",
]
