from __future__ import annotations

import random
from itertools import chain, combinations

from numinv import formula as F
from numinv.pathsets import BddManager, PathSet

PREDS = ["p0", "p1", "p2", "p3", "p4"]
UNIVERSE = [
    frozenset(c)
    for r in range(len(PREDS) + 1)
    for c in combinations(PREDS, r)
]


def random_minterm(rng: random.Random) -> frozenset:
    return frozenset(p for p in PREDS if rng.random() < 0.5)


def test_pathset_vs_naive_set_oracle_1000_sequences():
    rng = random.Random(424242)
    disagreements = 0
    for _ in range(1000):
        manager = BddManager(PREDS)
        ps = PathSet.empty(manager)
        ref: set = set()
        others = [(PathSet.empty(manager), set()),
                  (PathSet.universe(manager), set(UNIVERSE))]
        for _ in range(rng.randint(1, 12)):
            op = rng.randrange(5)
            if op == 0:
                mt = random_minterm(rng)
                ps, ref = ps.add(mt), ref | {mt}
            elif op == 1:
                o, oref = others[rng.randrange(len(others))]
                ps, ref = ps.union(o), ref | oref
            elif op == 2:
                o, oref = others[rng.randrange(len(others))]
                ps, ref = ps.intersect(o), ref & oref
            elif op == 3:
                o, oref = others[rng.randrange(len(others))]
                ps, ref = ps.difference(o), ref - oref
            else:
                ps, ref = ps.complement(), set(UNIVERSE) - ref
            others.append((ps, set(ref)))
        ok = (
            ps.size() == len(ref)
            and ps.is_empty() == (not ref)
            and set(ps.minterms()) == ref
            and all(ps.contains(mt) == (mt in ref) for mt in UNIVERSE)
        )
        disagreements += 0 if ok else 1
    assert disagreements == 0


def test_bdd_canonicity():
    manager = BddManager(PREDS)
    a = PathSet.empty(manager)
    b = PathSet.empty(manager)
    for mt in (frozenset({"p0"}), frozenset({"p1", "p2"}), frozenset()):
        a = a.add(mt)
    for mt in (frozenset(), frozenset({"p1", "p2"}), frozenset({"p0"})):
        b = b.add(mt)
    # same set built in different orders shares the same root node
    assert a.root == b.root
    assert a.complement().complement().root == a.root


def _eval(f, assign):
    if isinstance(f, F.FTrue):
        return True
    if isinstance(f, F.FFalse):
        return False
    if isinstance(f, F.BVar):
        return assign[f.name]
    if isinstance(f, F.Not):
        return not _eval(f.arg, assign)
    if isinstance(f, F.And):
        return all(_eval(a, assign) for a in f.args)
    if isinstance(f, F.Or):
        return any(_eval(a, assign) for a in f.args)
    raise TypeError(f)


def test_formula_parts_match_membership():
    rng = random.Random(7)
    manager = BddManager(PREDS)
    ps = PathSet.empty(manager)
    for _ in range(6):
        ps = ps.add(random_minterm(rng))
    for negate in (False, True):
        defs, literal, names = ps.formula_parts(negate)
        f = F.conj([defs, literal])
        for mt in UNIVERSE:
            assign = {p: p in mt for p in PREDS}
            assign.update(ps.node_values(names, assign))
            want = ps.contains(mt) != negate
            assert _eval(f, assign) == want


def test_formula_is_linear_size():
    manager = BddManager(PREDS)
    ps = PathSet.universe(manager)
    defs, literal, names = ps.formula_parts(False)
    assert len(names) <= 2  # constant function needs no per-node clauses
