from __future__ import annotations

import random
from fractions import Fraction

from numinv import formula as F
from numinv.domains import Box
from numinv.ir import build_cfg, random_store, select_pr, to_ssa
from numinv.lang import parse_program
from numinv.smt import (
    FocusQuery,
    InternalBackend,
    b_name,
    bs_name,
    encode_semantics,
    extract_path,
)

from conftest import ALL_PROGRAMS, corpus_source


def _setup(name: str):
    cfg = build_cfg(parse_program(corpus_source(name)))
    sel = select_pr(cfg)
    ssa = to_ssa(cfg)
    return cfg, sel, ssa, encode_semantics(ssa, sel)


def _eval_formula(f, assign):
    if isinstance(f, F.FTrue):
        return True
    if isinstance(f, F.FFalse):
        return False
    if isinstance(f, F.BVar):
        return bool(assign.get(f.name, False))
    if isinstance(f, F.Atom):
        return f.eval({v: Fraction(assign.get(v, 0)) for v in f.constraint.vars()})
    if isinstance(f, F.Not):
        return not _eval_formula(f.arg, assign)
    if isinstance(f, F.And):
        return all(_eval_formula(a, assign) for a in f.args)
    if isinstance(f, F.Or):
        return any(_eval_formula(a, assign) for a in f.args)
    raise TypeError(f)


def test_concrete_runs_follow_encoded_paths():
    # every cut-point-to-cut-point segment of a concrete run must be one
    # of the encoded syntactic paths
    rng = random.Random(5)
    for name in ALL_PROGRAMS:
        cfg, sel, ssa, sf = _setup(name)
        from numinv.ir import run_cfg

        for _ in range(10):
            init = random_store(cfg, rng)
            draws = [rng.randint(-100, 100) for _ in range(30)]
            _, trace = run_cfg(cfg, init, draws, max_steps=120)
            cuts = [i for i, n in enumerate(trace) if n in sel.cut_points]
            for a, b in zip(cuts, cuts[1:]):
                nodes = trace[a:b + 1]
                found = any(
                    [cfg.edges[e].src for e in p.edges] + [p.dst] == nodes
                    for p in sf.paths(trace[a])
                )
                assert found, (name, nodes)


def test_focus_query_models_satisfy_their_formula():
    backend = InternalBackend()
    for name in ("rate_limiter.mil", "gopan_reps.mil", "phase_split.mil"):
        cfg, sel, ssa, sf = _setup(name)
        # small boxes that force growing paths to exist
        values = {}
        for p in sel.cut_points:
            v = Box.top(cfg.variables)
            if p != cfg.entry:
                for var in cfg.variables:
                    v = v.assign_input(var, 0, 1)
            values[p] = v
        for p in sel.cut_points:
            q = FocusQuery(sf, p, values)
            res = backend.solve(q)
            if res.status != "sat":
                continue
            assign = dict(res.model.assign)
            assert _eval_formula(q.formula(), assign), name
            path, _disjunct = extract_path(sf, res.model)
            assert path.src == p
            assert res.path.edges == path.edges


def test_extracted_path_matches_predicate_minterm():
    backend = InternalBackend()
    cfg, sel, ssa, sf = _setup("rate_limiter.mil")
    values = {p: Box.top(cfg.variables) for p in sel.cut_points}
    head = sel.widening_points[0]
    values[head] = Box.top(cfg.variables).assign_input("x_old", 0, 0)
    q = FocusQuery(sf, head, values)
    res = backend.solve(q)
    assert res.status == "sat"
    mt = sf.minterm(res.path)
    for pred in sf.pred_order:
        assert bool(res.model[pred]) == (pred in mt)


def test_unsat_when_values_are_inductive():
    # top at every point admits no escaping state
    backend = InternalBackend()
    cfg, sel, ssa, sf = _setup("rate_limiter.mil")
    values = {p: Box.top(cfg.variables) for p in sel.cut_points}
    for p in sel.cut_points:
        assert backend.solve(FocusQuery(sf, p, values)).status == "unsat"


def test_generic_solver_on_boolean_structure():
    backend = InternalBackend()
    x = F.atom((("x", 1),), "<=", 5)
    y = F.atom((("x", 1),), ">=", 7)
    res = backend.solve(F.conj([F.disj([x, y]), F.Not(x)]))
    assert res.status == "sat"
    assert res.model["x"] >= 7
    res = backend.solve(F.conj([x, y]))
    assert res.status == "unsat"


def test_restrict_and_exclude_are_complementary():
    from numinv.pathsets import BddManager, PathSet

    backend = InternalBackend()
    cfg, sel, ssa, sf = _setup("rate_limiter.mil")
    head = sel.widening_points[0]
    values = {p: Box.top(cfg.variables) for p in sel.cut_points}
    values[head] = Box.top(cfg.variables).assign_input("x_old", 0, 0)
    manager = BddManager(sf.pred_order)
    # collect every growing path once
    seen = PathSet.empty(manager)
    while True:
        res = backend.solve(FocusQuery(sf, head, values, exclude=seen))
        if res.status != "sat":
            break
        seen = seen.add(sf.minterm(res.path))
    assert seen.size() >= 2
    # restricted to the collected set, each path is rediscoverable
    res = backend.solve(FocusQuery(sf, head, values, restrict=seen))
    assert res.status == "sat"
    assert seen.contains(sf.minterm(res.path))
