"""Boolean combinations of linear integer atoms.

Shared representation for solver queries: construction helpers,
evaluation under an assignment, free-variable collection and SMT-LIB 2
printing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .lang import Constraint


class Formula:
    def eval(self, assign: dict) -> bool:
        raise NotImplementedError

    def collect(self, bools: set, nums: set):
        raise NotImplementedError

    def smt(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class FTrue(Formula):
    def eval(self, assign):
        return True

    def collect(self, bools, nums):
        pass

    def smt(self):
        return "true"


@dataclass(frozen=True)
class FFalse(Formula):
    def eval(self, assign):
        return False

    def collect(self, bools, nums):
        pass

    def smt(self):
        return "false"


TRUE = FTrue()
FALSE = FFalse()


@dataclass(frozen=True)
class BVar(Formula):
    name: str

    def eval(self, assign):
        return bool(assign.get(self.name, False))

    def collect(self, bools, nums):
        bools.add(self.name)

    def smt(self):
        return self.name


@dataclass(frozen=True)
class Atom(Formula):
    """Linear comparison over integer variables."""

    constraint: Constraint

    def eval(self, assign):
        c = self.constraint
        store = {v: assign.get(v, 0) for v, _ in c.coeffs}
        lhs = sum(Fraction(k) * Fraction(store[v]) for v, k in c.coeffs)
        rhs = Fraction(c.const)
        op = c.op
        if op == "==":
            return lhs == rhs
        if op == "!=":
            return lhs != rhs
        if op == "<":
            return lhs < rhs
        if op == "<=":
            return lhs <= rhs
        if op == ">":
            return lhs > rhs
        return lhs >= rhs

    def collect(self, bools, nums):
        nums.update(self.constraint.vars())

    def smt(self):
        c = self.constraint
        terms = []
        for v, k in c.coeffs:
            if k == 1:
                terms.append(v)
            else:
                terms.append(f"(* {_smt_int(k)} {v})")
        if not terms:
            lhs = "0"
        elif len(terms) == 1:
            lhs = terms[0]
        else:
            lhs = f"(+ {' '.join(terms)})"
        rhs = _smt_int(c.const)
        op = c.op
        if op == "==":
            return f"(= {lhs} {rhs})"
        if op == "!=":
            return f"(not (= {lhs} {rhs}))"
        return f"({op} {lhs} {rhs})"


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def eval(self, assign):
        return not self.arg.eval(assign)

    def collect(self, bools, nums):
        self.arg.collect(bools, nums)

    def smt(self):
        return f"(not {self.arg.smt()})"


class _Nary(Formula):
    op = ""

    def __init__(self, args):
        self.args = tuple(args)

    def collect(self, bools, nums):
        for a in self.args:
            a.collect(bools, nums)

    def smt(self):
        if not self.args:
            return "true" if self.op == "and" else "false"
        if len(self.args) == 1:
            return self.args[0].smt()
        return f"({self.op} {' '.join(a.smt() for a in self.args)})"

    def __eq__(self, other):
        return type(self) is type(other) and self.args == other.args

    def __hash__(self):
        return hash((type(self), self.args))


class And(_Nary):
    op = "and"

    def eval(self, assign):
        return all(a.eval(assign) for a in self.args)


class Or(_Nary):
    op = "or"

    def eval(self, assign):
        return any(a.eval(assign) for a in self.args)


def _smt_int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def conj(args) -> Formula:
    args = [a for a in args if not isinstance(a, FTrue)]
    if any(isinstance(a, FFalse) for a in args):
        return FALSE
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return And(args)


def disj(args) -> Formula:
    args = [a for a in args if not isinstance(a, FFalse)]
    if any(isinstance(a, FTrue) for a in args):
        return TRUE
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return Or(args)


def implies(a: Formula, b: Formula) -> Formula:
    return disj([Not(a), b])


def iff(a: Formula, b: Formula) -> Formula:
    return conj([implies(a, b), implies(b, a)])


def atom(coeffs, op, const) -> Formula:
    return Atom(Constraint(tuple(sorted(coeffs)), op, const))


def value_formula(value, rename: dict[str, str] | None = None) -> Formula:
    """Formula view of an abstract value, optionally renaming variables."""
    if value.is_bottom:
        return FALSE
    cs = value.constraints()
    if rename:
        cs = [c.rename(rename) for c in cs]
    return conj([Atom(c) for c in cs])


def free_vars(f: Formula) -> tuple[set, set]:
    bools: set = set()
    nums: set = set()
    f.collect(bools, nums)
    return bools, nums
