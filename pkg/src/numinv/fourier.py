"""Exact linear arithmetic core: Fourier-Motzkin elimination with
rational witnesses and bounded branch-and-bound integer refinement.

Systems are conjunctions of rows sum(coeff * var) <= const over exact
rationals.  Feasibility and witness extraction never use floating
point.
"""

from __future__ import annotations

from fractions import Fraction

from .lang import Constraint

Row = tuple[tuple[tuple[str, Fraction], ...], Fraction]  # sum coeffs <= const

BB_DEPTH = 32


def row_from_leq(coeffs, const) -> Row:
    items = tuple(
        sorted((v, Fraction(c)) for v, c in coeffs if c != 0)
    )
    return (items, Fraction(const))


def rows_from_constraint(c: Constraint) -> list[Row]:
    """Rows for a non-strict normalization of c; != is not representable."""
    return [row_from_leq(coeffs, const) for coeffs, const in c.to_leq()]


def _subst(row: Row, var: str, value: Fraction) -> Row:
    coeffs, const = row
    kept = []
    for v, c in coeffs:
        if v == var:
            const = const - c * value
        else:
            kept.append((v, c))
    return (tuple(kept), const)


def _eliminate(rows: list[Row], var: str) -> list[Row] | None:
    """Project out var; None signals detected infeasibility."""
    pos, neg, rest = [], [], []
    for coeffs, const in rows:
        cv = None
        for v, c in coeffs:
            if v == var:
                cv = c
                break
        if cv is None:
            rest.append((coeffs, const))
        elif cv > 0:
            pos.append((coeffs, const, cv))
        else:
            neg.append((coeffs, const, cv))
    for pc, pconst, pcv in pos:
        for nc, nconst, ncv in neg:
            # pcv * (row_n scaled) + |ncv| * (row_p scaled)
            merged: dict[str, Fraction] = {}
            for v, c in pc:
                if v != var:
                    merged[v] = merged.get(v, Fraction(0)) + c * (-ncv)
            for v, c in nc:
                if v != var:
                    merged[v] = merged.get(v, Fraction(0)) + c * pcv
            const = pconst * (-ncv) + nconst * pcv
            items = tuple(sorted((v, c) for v, c in merged.items() if c != 0))
            if not items and const < 0:
                return None
            rest.append((items, const))
    out = []
    seen = set()
    for coeffs, const in rest:
        if not coeffs:
            if const < 0:
                return None
            continue
        key = (coeffs, const)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def fm_feasible(rows: list[Row]) -> bool:
    """Rational feasibility of a conjunction of <= rows."""
    rows = list(rows)
    for coeffs, const in rows:
        if not coeffs and const < 0:
            return False
    variables = sorted({v for coeffs, _ in rows for v, _ in coeffs})
    for var in variables:
        result = _eliminate(rows, var)
        if result is None:
            return False
        rows = result
    return True


def fm_sample(rows: list[Row]) -> dict[str, Fraction] | None:
    """A rational point satisfying the rows, or None if infeasible."""
    rows = [r for r in rows]
    for coeffs, const in rows:
        if not coeffs and const < 0:
            return None
    variables = sorted({v for coeffs, _ in rows for v, _ in coeffs})
    layers: list[tuple[str, list[Row]]] = []
    cur = rows
    for var in variables:
        layers.append((var, cur))
        nxt = _eliminate(cur, var)
        if nxt is None:
            return None
        cur = nxt
    assign: dict[str, Fraction] = {}
    for var, layer_rows in reversed(layers):
        lo: Fraction | None = None
        hi: Fraction | None = None
        for coeffs, const in layer_rows:
            cv = None
            rest = Fraction(const)
            ok = True
            for v, c in coeffs:
                if v == var:
                    cv = c
                elif v in assign:
                    rest -= c * assign[v]
                else:
                    ok = False
                    break
            if not ok or cv is None:
                continue
            bound = rest / cv
            if cv > 0:
                hi = bound if hi is None else min(hi, bound)
            else:
                lo = bound if lo is None else max(lo, bound)
        assign[var] = _pick(lo, hi)
    return assign


def _pick(lo: Fraction | None, hi: Fraction | None) -> Fraction:
    """Prefer an integer point of [lo, hi]; fall back to the midpoint."""
    if lo is None and hi is None:
        return Fraction(0)
    if lo is None:
        from math import floor

        return Fraction(min(0, floor(hi)))
    if hi is None:
        from math import ceil

        return Fraction(max(0, ceil(lo)))
    from math import ceil, floor

    ilo, ihi = ceil(lo), floor(hi)
    if ilo <= ihi:
        candidate = min(max(0, ilo), ihi)
        return Fraction(candidate)
    return (lo + hi) / 2


def integer_sample(rows: list[Row], depth: int = BB_DEPTH):
    """Search for an integer witness.

    Returns (status, model): status is "sat" with an integer model,
    "unsat", or "unknown" when the branching budget is exhausted (the
    rational witness is then returned as a conservative model).
    """
    model = fm_sample(rows)
    if model is None:
        return "unsat", None
    frac_var = None
    for v, val in sorted(model.items()):
        if val.denominator != 1:
            frac_var = (v, val)
            break
    if frac_var is None:
        return "sat", model
    if depth <= 0:
        return "unknown", model
    from math import ceil, floor

    v, val = frac_var
    left = rows + [row_from_leq(((v, 1),), floor(val))]
    status, m = integer_sample(left, depth - 1)
    if status != "unsat":
        return status, m
    right = rows + [row_from_leq(((v, -1),), -ceil(val))]
    return integer_sample(right, depth - 1)


def solve_conjunction(constraints: list[Constraint], depth: int = BB_DEPTH):
    """Integer satisfiability of a conjunction of comparisons.

    Disequalities split into the two strict sides.  Returns (status,
    model) like integer_sample.
    """
    disequalities = [c for c in constraints if c.op == "!="]
    rows: list[Row] = []
    for c in constraints:
        if c.op != "!=":
            rows.extend(rows_from_constraint(c))
    if not disequalities:
        return integer_sample(rows, depth)
    first, rest = disequalities[0], disequalities[1:]
    for side in ("<", ">"):
        branch = [Constraint(first.coeffs, side, first.const)]
        status, model = solve_conjunction(
            [c for c in constraints if c is not first] + branch, depth
        )
        if status != "unsat":
            return status, model
    return "unsat", None
