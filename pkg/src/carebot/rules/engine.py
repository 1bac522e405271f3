"""Forward-chaining inference over the rule language.

Semi-naive evaluation per negation stratum to a fixpoint, plus the query and
action-proposal surfaces used by the executive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .parser import BodyLiteral, Cmp, Neg, Pos
from .terms import (
    Num,
    Struct,
    Term,
    eval_arith,
    is_ground,
    match,
    predicate_of,
    substitute,
    term_key,
)

MAX_DERIVATIONS = 10000
MAX_TERM_DEPTH = 100         # numeric constructor recursion guard


class DepthExceeded(Exception):
    pass


def _term_depth(t: Term) -> int:
    depth = 0
    stack = [(t, 1)]
    while stack:
        node, d = stack.pop()
        depth = max(depth, d)
        if isinstance(node, Struct):
            stack.extend((a, d + 1) for a in node.args)
    return depth


class MalformedProposal(Exception):
    pass


@dataclass(frozen=True)
class Rule:
    head: Term
    body: tuple[BodyLiteral, ...]
    rule_id: int = 0

    @property
    def is_fact(self) -> bool:
        return not self.body


@dataclass
class RuleBase:
    rules: list[Rule]
    strata: dict[tuple[str, int], int] = field(default_factory=dict)

    def max_stratum(self) -> int:
        return max(self.strata.values(), default=0)


@dataclass(frozen=True)
class ActionProposal:
    action: Term
    priority: float
    source: int                  # rule id that produced it (facts: -1)

    def name(self) -> str:
        return str(self.action)


def _cmp_holds(lit: Cmp, bindings: dict[str, Term]) -> bool:
    """Comparison semantics: ordering operators are numeric-only and fail on
    non-numeric bindings; = and != fall back to structural equality."""
    try:
        a = eval_arith(lit.left, bindings)
        b = eval_arith(lit.right, bindings)
    except ValueError:
        if lit.op in ("=", "!="):
            eq = substitute(lit.left, bindings) == substitute(lit.right, bindings)
            return eq if lit.op == "=" else not eq
        return False
    return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b,
            "=": a == b, "!=": a != b}[lit.op]


def _join(positives: list[Term], db: dict[Term, None], delta: dict[Term, None] | None,
          delta_pos: int | None, bindings: dict[str, Term],
          idx: int) -> list[dict[str, Term]]:
    """All bindings satisfying the positive literals left to right; literal
    delta_pos (if set) must match inside the delta set."""
    if idx == len(positives):
        return [bindings]
    source = delta if (delta is not None and idx == delta_pos) else db
    out: list[dict[str, Term]] = []
    pat = positives[idx]
    for fact in source:
        b2 = match(pat, fact, bindings)
        if b2 is not None:
            out.extend(_join(positives, db, delta, delta_pos, b2, idx + 1))
    return out


def _apply_rule(rule: Rule, db: dict[Term, None], delta: dict[Term, None] | None,
                delta_pos: int | None) -> list[Term]:
    positives = [l.term for l in rule.body if isinstance(l, Pos)]
    checks = [l for l in rule.body if not isinstance(l, Pos)]
    derived: list[Term] = []
    for bindings in _join(positives, db, delta, delta_pos, {}, 0):
        ok = True
        for lit in checks:
            if isinstance(lit, Neg):
                if substitute(lit.term, bindings) in db:
                    ok = False
                    break
            else:
                if not _cmp_holds(lit, bindings):
                    ok = False
                    break
        if ok:
            derived.append(substitute(rule.head, bindings))
    return derived


def infer(rb: RuleBase, facts) -> list[Term]:
    """Closure of the facts under the rulebase, in stable derivation order.

    Semi-naive iteration within each stratum; negated predicates are fully
    computed before any rule reading them runs. Derivation count is capped
    by MAX_DERIVATIONS (DepthExceeded).
    """
    db: dict[Term, None] = {}
    for f in facts:
        if not is_ground(f):
            raise ValueError(f"fact is not ground: {f}")
        db[f] = None
    derivations = 0

    by_stratum: dict[int, list[Rule]] = {}
    for rule in rb.rules:
        s = rb.strata.get(predicate_of(rule.head), 0)
        by_stratum.setdefault(s, []).append(rule)

    for s in range(rb.max_stratum() + 1):
        rules = by_stratum.get(s, [])
        if not rules:
            continue
        # initial round: full evaluation (facts plus lower strata)
        delta: dict[Term, None] = {}

        def admit(t: Term, into: dict[Term, None]) -> None:
            nonlocal derivations
            if t in db:
                return
            if _term_depth(t) > MAX_TERM_DEPTH:
                raise DepthExceeded(f"derived term deeper than {MAX_TERM_DEPTH}: "
                                    "runaway numeric recursion")
            db[t] = None
            into[t] = None
            derivations += 1
            if derivations > MAX_DERIVATIONS:
                raise DepthExceeded(f"more than {MAX_DERIVATIONS} derivations")

        for rule in rules:
            for t in _apply_rule(rule, db, None, None):
                admit(t, delta)
        # semi-naive rounds: require one positive literal in the delta
        while delta:
            new_delta: dict[Term, None] = {}
            for rule in rules:
                n_pos = sum(isinstance(l, Pos) for l in rule.body)
                for dpos in range(n_pos):
                    for t in _apply_rule(rule, db, delta, dpos):
                        admit(t, new_delta)
            delta = new_delta
    return list(db)


def query(rb: RuleBase, facts, goal: Term) -> list[dict[str, Term]]:
    """All substitutions making the goal a member of the closure, in
    derivation order."""
    out: list[dict[str, Term]] = []
    for fact in infer(rb, facts):
        b = match(goal, fact, {})
        if b is not None:
            out.append(b)
    return out


def propose(rb: RuleBase, facts) -> list[ActionProposal]:
    """Derived propose(Action, Priority) terms ranked by priority (desc),
    ties broken by the action's canonical order."""
    propose_rules = [r for r in rb.rules
                     if predicate_of(r.head) == ("propose", 2)]
    closure = infer(rb, facts)
    proposals: list[ActionProposal] = []
    for t in closure:
        if isinstance(t, Struct) and t.functor == "propose" and len(t.args) == 2:
            action, prio = t.args
            if not isinstance(prio, Num):
                raise MalformedProposal(f"non-numeric priority in {t}")
            source = next((r.rule_id for r in propose_rules
                           if match(r.head, t, {}) is not None), -1)
            proposals.append(ActionProposal(action=action, priority=prio.value,
                                            source=source))
    proposals.sort(key=lambda p: (-p.priority,) + term_key(p.action))
    return proposals


def format_rule(rule: Rule) -> str:
    if rule.is_fact:
        return f"{rule.head}."
    parts = []
    for lit in rule.body:
        if isinstance(lit, Pos):
            parts.append(str(lit.term))
        elif isinstance(lit, Neg):
            parts.append(f"not {lit.term}")
        else:
            parts.append(str(lit))
    return f"{rule.head} :- {', '.join(parts)}."


def format_rulebase(rb: RuleBase) -> str:
    return "\n".join(format_rule(r) for r in rb.rules) + "\n"
