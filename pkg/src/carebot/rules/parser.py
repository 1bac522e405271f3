"""Parser for the rule language.

Grammar (comments run % to end of line):

    clause      := term ( ":-" literal ("," literal)* )? "."
    literal     := "not" callable | comparison | callable
    comparison  := additive op additive        op: < > <= >= = !=
    additive    := multiplicative (("+" | "-") multiplicative)*
    multiplicative := primary ("*" primary)*
    primary     := number | name args? | VARIABLE | "(" additive ")"

Load-time checks: range restriction (every head / negated / compared variable
must occur in a positive body literal) and stratified negation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import ARITH_OPS, Atom, Num, Struct, Term, Var, predicate_of, term_vars

CMP_OPS = ("<=", ">=", "!=", "<", ">", "=")


class RuleSyntaxError(Exception):
    def __init__(self, line: int, col: int, expected: str):
        self.line = line
        self.col = col
        self.expected = expected
        super().__init__(f"line {line}, col {col}: expected {expected}")


class UnsafeRule(Exception):
    """Range-restriction violation: a variable is not bound by any positive
    body literal."""


class UnstratifiedNegation(Exception):
    """The rulebase has a dependency cycle through negation."""


@dataclass(frozen=True)
class Pos:
    term: Term


@dataclass(frozen=True)
class Neg:
    term: Term


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Term
    right: Term

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


BodyLiteral = Pos | Neg | Cmp


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_PUNCT = (":-", *CMP_OPS, "(", ")", ",", ".", "+", "-", "*")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched = None
        for p in _PUNCT:
            if text.startswith(p, i):
                # '-' and '.' may begin a number; handled below by order of checks
                if p in ("-", ".") and i + 1 < n and text[i + 1].isdigit() and \
                        (not tokens or tokens[-1].kind in ("punct",) and tokens[-1].text != ")"):
                    break
                matched = p
                break
        if matched:
            tokens.append(Token("punct", matched, line, col))
            i += len(matched)
            col += len(matched)
            continue
        if ch.isdigit() or (ch in "-." and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            seen_dot = ch == "."
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # a trailing '.' is the clause terminator, not a decimal point
                    if j + 1 >= n or not text[j + 1].isdigit():
                        break
                    seen_dot = True
                j += 1
            tokens.append(Token("number", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "var" if (ch.isupper() or ch == "_") else "name"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise RuleSyntaxError(line, col, f"valid token (got {ch!r})")
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.kind == "punct" and t.text == text:
            return self.next()
        raise RuleSyntaxError(t.line, t.col, f"{text!r}")

    def at_punct(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text in texts

    # -- grammar -----------------------------------------------------------

    def parse_program(self) -> list[tuple[Term, list[BodyLiteral]]]:
        clauses = []
        while self.peek().kind != "eof":
            clauses.append(self.parse_clause())
        return clauses

    def parse_clause(self) -> tuple[Term, list[BodyLiteral]]:
        head = self.parse_callable()
        body: list[BodyLiteral] = []
        if self.at_punct(":-"):
            self.next()
            body.append(self.parse_literal())
            while self.at_punct(","):
                self.next()
                body.append(self.parse_literal())
        self.expect(".")
        return head, body

    def parse_literal(self) -> BodyLiteral:
        t = self.peek()
        if t.kind == "name" and t.text == "not":
            self.next()
            return Neg(self.parse_callable())
        left = self.parse_additive()
        if self.at_punct(*CMP_OPS):
            op = self.next().text
            right = self.parse_additive()
            return Cmp(op, left, right)
        if isinstance(left, (Atom, Struct)) and not (
                isinstance(left, Struct) and left.functor in ARITH_OPS):
            return Pos(left)
        raise RuleSyntaxError(t.line, t.col, "predicate or comparison")

    def parse_callable(self) -> Term:
        t = self.peek()
        term = self.parse_primary()
        if isinstance(term, (Atom, Struct)) and not (
                isinstance(term, Struct) and term.functor in ARITH_OPS):
            return term
        raise RuleSyntaxError(t.line, t.col, "atom or compound term")

    def parse_additive(self) -> Term:
        left = self.parse_multiplicative()
        while self.at_punct("+", "-"):
            op = self.next().text
            right = self.parse_multiplicative()
            left = Struct(op, (left, right))
        return left

    def parse_multiplicative(self) -> Term:
        left = self.parse_primary()
        while self.at_punct("*"):
            self.next()
            right = self.parse_primary()
            left = Struct("*", (left, right))
        return left

    def parse_primary(self) -> Term:
        t = self.peek()
        if t.kind == "number":
            self.next()
            return Num(float(t.text))
        if t.kind == "var":
            self.next()
            return Var(t.text)
        if t.kind == "name":
            self.next()
            if self.at_punct("("):
                self.next()
                args = [self.parse_additive()]
                while self.at_punct(","):
                    self.next()
                    args.append(self.parse_additive())
                self.expect(")")
                return Struct(t.text, tuple(args))
            return Atom(t.text)
        if self.at_punct("("):
            self.next()
            inner = self.parse_additive()
            self.expect(")")
            return inner
        raise RuleSyntaxError(t.line, t.col, "term")


def parse_term(text: str) -> Term:
    """Parse a single term (no trailing dot required)."""
    p = _Parser(tokenize(text))
    term = p.parse_additive()
    t = p.peek()
    if t.kind != "eof" and not (t.kind == "punct" and t.text == "."):
        raise RuleSyntaxError(t.line, t.col, "end of term")
    return term


def check_safety(head: Term, body: list[BodyLiteral]) -> None:
    bound: set[str] = set()
    for lit in body:
        if isinstance(lit, Pos):
            bound |= term_vars(lit.term)
    needed = term_vars(head)
    for lit in body:
        if isinstance(lit, Neg):
            needed |= term_vars(lit.term)
        elif isinstance(lit, Cmp):
            needed |= term_vars(lit.left) | term_vars(lit.right)
    unbound = needed - bound
    if unbound:
        raise UnsafeRule(f"variables {sorted(unbound)} not bound by a positive "
                         f"body literal in rule {head} :- ...")


def compute_strata(clauses) -> dict[tuple[str, int], int]:
    """Assign strata so negated dependencies strictly increase; raises
    UnstratifiedNegation on a cycle through negation."""
    preds: set[tuple[str, int]] = set()
    deps: list[tuple[tuple[str, int], tuple[str, int], bool]] = []
    for head, body in clauses:
        hp = predicate_of(head)
        preds.add(hp)
        for lit in body:
            if isinstance(lit, Pos):
                bp = predicate_of(lit.term)
                preds.add(bp)
                deps.append((hp, bp, False))
            elif isinstance(lit, Neg):
                bp = predicate_of(lit.term)
                preds.add(bp)
                deps.append((hp, bp, True))
    strata = {p: 0 for p in preds}
    for _ in range(len(preds) + 1):
        changed = False
        for hp, bp, negated in deps:
            need = strata[bp] + (1 if negated else 0)
            if strata[hp] < need:
                strata[hp] = need
                changed = True
        if not changed:
            return strata
    raise UnstratifiedNegation("negation cycle detected")


def parse(text: str):
    """Parse a rule program into a RuleBase (validates safety and strata)."""
    from .engine import Rule, RuleBase

    clauses = _Parser(tokenize(text)).parse_program()
    for head, body in clauses:
        check_safety(head, body)
    strata = compute_strata(clauses)
    rules = [Rule(head=h, body=tuple(b), rule_id=i) for i, (h, b) in enumerate(clauses)]
    return RuleBase(rules=rules, strata=strata)
