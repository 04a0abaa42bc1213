from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, product

from numinv.fourier import fm_feasible, fm_sample, integer_sample, solve_conjunction
from numinv.lang import Constraint

BOX = 8  # every random system is boxed to [-BOX, BOX]^2, so it is bounded


def random_system(rng: random.Random):
    rows = [((("x", 1),), BOX), ((("x", -1),), BOX),
            ((("y", 1),), BOX), ((("y", -1),), BOX)]
    for _ in range(rng.randint(1, 4)):
        cx, cy = rng.randint(-3, 3), rng.randint(-3, 3)
        coeffs = tuple(t for t in (("x", cx), ("y", cy)) if t[1])
        if not coeffs:
            continue
        rows.append((coeffs, rng.randint(-8, 8)))
    return rows


def _val(row, x, y):
    coeffs, c = row
    d = dict(coeffs)
    return d.get("x", 0) * x + d.get("y", 0) * y - c


def vertex_oracle(rows) -> bool:
    """Exact rational feasibility for a boxed 2-variable system.

    A nonempty bounded polyhedron has a vertex where two constraint
    lines meet; enumerate all pairs with exact arithmetic.
    """
    for r1, r2 in combinations(rows, 2):
        d1, d2 = dict(r1[0]), dict(r2[0])
        a, b, e = d1.get("x", 0), d1.get("y", 0), r1[1]
        c, d, f = d2.get("x", 0), d2.get("y", 0), r2[1]
        det = a * d - b * c
        if det == 0:
            continue
        x = Fraction(e * d - b * f, det)
        y = Fraction(a * f - e * c, det)
        if all(_val(r, x, y) <= 0 for r in rows):
            return True
    return False


def integer_oracle(rows):
    return {
        (x, y)
        for x, y in product(range(-BOX, BOX + 1), repeat=2)
        if all(_val(r, x, y) <= 0 for r in rows)
    }


def test_fm_feasible_vs_vertex_oracle_500():
    rng = random.Random(2024)
    disagreements = 0
    for _ in range(500):
        rows = random_system(rng)
        if fm_feasible(rows) != vertex_oracle(rows):
            disagreements += 1
    assert disagreements == 0


def test_fm_sample_satisfies_system():
    rng = random.Random(99)
    for _ in range(300):
        rows = random_system(rng)
        model = fm_sample(rows)
        if model is None:
            assert not vertex_oracle(rows)
        else:
            assert all(_val(r, model["x"], model["y"]) <= 0 for r in rows)


def test_integer_sample_vs_grid_oracle():
    rng = random.Random(7)
    for _ in range(300):
        rows = random_system(rng)
        grid = integer_oracle(rows)
        status, model = integer_sample(rows)
        assert status in ("sat", "unsat", "unknown")
        if grid:
            assert status == "sat"
        if status == "sat":
            assert (model["x"], model["y"]) in grid
        if status == "unsat":
            assert not grid


def test_solve_conjunction_splits_disequalities():
    cons = [
        Constraint((("x", 1),), ">=", 0),
        Constraint((("x", 1),), "<=", 1),
        Constraint((("x", 1),), "!=", 0),
    ]
    status, model = solve_conjunction(cons)
    assert status == "sat"
    assert model["x"] == 1
    cons.append(Constraint((("x", 1),), "!=", 1))
    status, _ = solve_conjunction(cons)
    assert status == "unsat"


def test_infeasible_contradiction():
    rows = [((("x", 1),), -1), ((("x", -1),), 0)]  # x <= -1 and x >= 0
    assert not fm_feasible(rows)
    assert integer_sample(rows)[0] == "unsat"
