"""Term representation for the rule language: atoms, numbers, variables and
compound terms, plus matching and arithmetic evaluation."""

from __future__ import annotations

from dataclasses import dataclass

ARITH_OPS = {"+", "-", "*"}


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self) -> str:
        v = self.value
        if isinstance(v, float) and v.is_integer():
            return str(int(v))
        return str(v)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Struct:
    functor: str
    args: tuple                      # tuple[Term, ...], arity >= 1

    def __str__(self) -> str:
        if self.functor in ARITH_OPS and len(self.args) == 2:
            return f"{self.args[0]} {self.functor} {self.args[1]}"
        return f"{self.functor}({', '.join(str(a) for a in self.args)})"


Term = Atom | Num | Var | Struct


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Struct):
        return all(is_ground(a) for a in t.args)
    return True


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Struct):
        out: set[str] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    return set()


def substitute(t: Term, bindings: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return bindings.get(t.name, t)
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(substitute(a, bindings) for a in t.args))
    return t


def match(pattern: Term, ground: Term, bindings: dict[str, Term]) -> dict[str, Term] | None:
    """One-way match of a pattern against a ground term; extends bindings."""
    if isinstance(pattern, Var):
        bound = bindings.get(pattern.name)
        if bound is None:
            out = dict(bindings)
            out[pattern.name] = ground
            return out
        return bindings if bound == ground else None
    if isinstance(pattern, Atom):
        return bindings if pattern == ground else None
    if isinstance(pattern, Num):
        return bindings if isinstance(ground, Num) and pattern.value == ground.value else None
    if isinstance(pattern, Struct):
        if not isinstance(ground, Struct) or ground.functor != pattern.functor \
                or len(ground.args) != len(pattern.args):
            return None
        for pa, ga in zip(pattern.args, ground.args):
            nxt = match(pa, ga, bindings)
            if nxt is None:
                return None
            bindings = nxt
        return bindings
    return None


def eval_arith(t: Term, bindings: dict[str, Term]) -> float:
    """Evaluate + - * over bound numbers; raises on unbound or non-numeric."""
    t = substitute(t, bindings)
    if isinstance(t, Num):
        return t.value
    if isinstance(t, Struct) and t.functor in ARITH_OPS and len(t.args) == 2:
        a = eval_arith(t.args[0], bindings)
        b = eval_arith(t.args[1], bindings)
        if t.functor == "+":
            return a + b
        if t.functor == "-":
            return a - b
        return a * b
    raise ValueError(f"non-numeric term in arithmetic context: {t}")


def predicate_of(t: Term) -> tuple[str, int]:
    if isinstance(t, Atom):
        return (t.name, 0)
    if isinstance(t, Struct):
        return (t.functor, len(t.args))
    raise ValueError(f"not a predicate term: {t}")


def term_key(t: Term):
    """Total, deterministic order key over ground terms (for tie-breaks)."""
    if isinstance(t, Num):
        return (0, t.value, "")
    if isinstance(t, Atom):
        return (1, 0.0, t.name)
    if isinstance(t, Var):
        return (2, 0.0, t.name)
    return (3, float(len(t.args)), t.functor) + tuple(term_key(a) for a in t.args)
