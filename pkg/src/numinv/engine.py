"""Invariant inference engines.

Five strategies over the same control-flow graph:

- standard: Kleene iteration with widening at loop heads, then bounded
  decreasing iterations;
- guided: the standard analysis restricted to a growing set of
  transitions, restarted whenever newly feasible transitions appear;
- focused: solver-driven selection of whole paths between cut points,
  widening at loop heads and a local iteration for self loops;
- combined: guided analysis over the implicit path multigraph, keeping
  an explicit diagram of the paths discovered so far;
- disjunctive: the combined analysis with several abstract values per
  cut point and a learned routing of path images onto disjuncts.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from . import formula as F
from .domains import DOMAINS, transform_edge, transform_path
from .ir import Cfg, PrSelection, SsaCfg, build_cfg, select_pr, to_ssa
from .lang import parse_program
from .pathsets import BddManager, PathSet
from .smt import (
    FocusQuery,
    InternalBackend,
    SemanticsFormula,
    encode_semantics,
    make_backend,
)

QUERY_BUDGET = 200000

TECHNIQUES = ("S", "G", "PF", "G+PF", "DIS")


@dataclass
class RunConfig:
    technique: str = "S"
    domain: str = "intervals"
    solver: str = "internal"
    widening_delay: int = 1
    narrowing: int = 2
    max_disjuncts: int = 2


@dataclass
class Stats:
    queries: int = 0
    paths_added: int = 0
    widenings: int = 0
    narrowings: int = 0
    iterations: int = 0
    wall_time: float = 0.0


@dataclass
class AnalysisResult:
    technique: str
    domain: str
    cfg: Cfg
    ssa: SsaCfg
    sel: PrSelection
    sf: SemanticsFormula
    values: dict[int, object]  # cut point -> convex value
    disjuncts: dict[int, list] | None = None  # cut point -> disjunct list
    all_values: dict[int, object] | None = None  # per-node, standard/guided
    phase_values: list[dict] | None = None  # guided snapshots at cut points
    pathset: PathSet | None = None
    stats: Stats = field(default_factory=Stats)
    events: list[dict] = field(default_factory=list)

    def value_lists(self) -> dict[int, list]:
        if self.disjuncts is not None:
            return self.disjuncts
        return {p: [v] for p, v in self.values.items()}


class EngineError(Exception):
    pass


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


class _Ctx:
    def __init__(self, cfg, sel, domain_cls, config, backend, events):
        self.cfg = cfg
        self.sel = sel
        self.pw = set(sel.widening_points)
        self.pr = list(sel.cut_points)
        self.domain = domain_cls
        self.config = config
        self.backend = backend
        self.events = events if events is not None else []
        self.stats = Stats()
        self.counters: dict = {}

    def event(self, kind: str, **kw):
        self.events.append({"event": kind, **kw})

    def solve(self, query):
        if self.backend.query_count >= QUERY_BUDGET:
            raise EngineError("query budget exceeded")
        res = self.backend.solve(query)
        self.event(
            "query",
            source=getattr(query, "source", None),
            status=res.status,
            path=list(res.path.edges) if getattr(res, "path", None) else None,
        )
        return res

    def update(self, old, image, widen_here: bool, key):
        """Join with the image, widening at loop heads after the delay."""
        grown = old.join(image)
        if not widen_here or old.is_bottom:
            return grown
        c = self.counters.get(key, 0)
        self.counters[key] = c + 1
        if c < self.config.widening_delay:
            return grown
        self.stats.widenings += 1
        self.event("widening", key=str(key))
        return old.widen(grown)

    def top(self):
        return self.domain.top(self.cfg.variables)

    def bottom(self):
        return self.domain.bottom(self.cfg.variables)


def _local_loop_iterate(ctx: _Ctx, base, edges):
    """Ascend with widening then descend, for one self-loop path."""
    y = base
    joins = 0
    for _ in range(64):
        img = transform_path(y, edges)
        grown = y.join(img)
        if grown.leq(y):
            break
        if joins < ctx.config.widening_delay:
            joins += 1
            y = grown
        else:
            self_widened = y.widen(grown)
            ctx.stats.widenings += 1
            y = self_widened
    for _ in range(ctx.config.narrowing):
        img = transform_path(y, edges)
        ny = y.meet(base.join(img))
        if ny.equal(y):
            break
        y = ny
    return y


# ---------------------------------------------------------------------------
# Standard and guided analyses
# ---------------------------------------------------------------------------


def _standard_fixpoint(ctx: _Ctx, values: dict, edge_ids: set[int]):
    """Widening ascent then bounded decreasing iterations, restricted to
    the given edges.  Mutates values (a per-node map) in place."""
    cfg = ctx.cfg
    counters: dict = {}
    wl = deque(n for n in cfg.nodes if not values[n].is_bottom)
    queued = set(wl)
    while wl:
        n = wl.popleft()
        queued.discard(n)
        for e in cfg.out_edges(n):
            if e.id not in edge_ids:
                continue
            img = transform_edge(values[n], e)
            if img.is_bottom or img.leq(values[e.dst]):
                continue
            old = values[e.dst]
            grown = old.join(img)
            if e.dst in ctx.pw and not old.is_bottom:
                c = counters.get(e.dst, 0)
                counters[e.dst] = c + 1
                if c >= ctx.config.widening_delay:
                    grown = old.widen(grown)
                    ctx.stats.widenings += 1
            values[e.dst] = grown
            if e.dst not in queued:
                wl.append(e.dst)
                queued.add(e.dst)
    for _ in range(ctx.config.narrowing):
        changed = False
        for n in cfg.nodes:
            acc = ctx.top() if n == cfg.entry else ctx.bottom()
            for e in cfg.in_edges(n):
                if e.id in edge_ids:
                    acc = acc.join(transform_edge(values[e.src], e))
            nv = values[n].meet(acc)
            if not nv.equal(values[n]):
                values[n] = nv
                changed = True
                ctx.stats.narrowings += 1
        if not changed:
            break


def run_standard(ctx: _Ctx) -> dict:
    values = {n: ctx.bottom() for n in ctx.cfg.nodes}
    values[ctx.cfg.entry] = ctx.top()
    _standard_fixpoint(ctx, values, {e.id for e in ctx.cfg.edges})
    return values


def run_guided(ctx: _Ctx):
    cfg = ctx.cfg
    values = {n: ctx.bottom() for n in cfg.nodes}
    values[cfg.entry] = ctx.top()
    active: set[int] = set()
    phases: list[dict] = []
    for _ in range(len(cfg.edges) + 1):
        _standard_fixpoint(ctx, values, active)
        phases.append({p: values[p] for p in ctx.pr})
        frontier = [
            e.id
            for e in cfg.edges
            if e.id not in active
            and not values[e.src].is_bottom
            and not transform_edge(values[e.src], e).is_bottom
        ]
        if not frontier:
            break
        active.update(frontier)
        ctx.event("phase", new_edges=frontier)
        ctx.stats.iterations += 1
    return values, phases


# ---------------------------------------------------------------------------
# Path-focused analysis
# ---------------------------------------------------------------------------


def run_pathfocusing(ctx: _Ctx, sf: SemanticsFormula) -> dict:
    values = {p: ctx.bottom() for p in ctx.pr}
    values[ctx.cfg.entry] = ctx.top()
    wl = deque([ctx.cfg.entry])
    queued = {ctx.cfg.entry}
    while wl:
        i = wl.popleft()
        queued.discard(i)
        blocked: set = set()
        while True:
            q = FocusQuery(sf, i, values, blocked=frozenset(blocked))
            res = ctx.solve(q)
            if res.status == "unsat":
                break
            path = res.path
            if path is None:
                break
            mt = sf.minterm(path)
            image = transform_path(values[i], [ctx.cfg.edges[e] for e in path.edges])
            j = path.dst
            if image.is_bottom:
                blocked.add(mt)
                continue
            if j == i:
                new = _local_loop_iterate(
                    ctx, values[i], [ctx.cfg.edges[e] for e in path.edges]
                )
                if new.equal(values[i]):
                    blocked.add(mt)
                    continue
                values[i] = new
            else:
                old = values[j]
                if image.leq(old):
                    blocked.add(mt)
                    continue
                values[j] = ctx.update(old, image, j in ctx.pw, ("pf", j))
                if j not in queued:
                    wl.append(j)
                    queued.add(j)
    # global decreasing iterations over every syntactic path
    for _ in range(ctx.config.narrowing):
        changed = False
        for p in ctx.pr:
            acc = ctx.top() if p == ctx.cfg.entry else ctx.bottom()
            for q in ctx.pr:
                for path in sf.paths(q):
                    if path.dst != p:
                        continue
                    acc = acc.join(
                        transform_path(
                            values[q], [ctx.cfg.edges[e] for e in path.edges]
                        )
                    )
            nv = values[p].meet(acc)
            if not nv.equal(values[p]):
                values[p] = nv
                changed = True
                ctx.stats.narrowings += 1
        if not changed:
            break
    return values


# ---------------------------------------------------------------------------
# Combined and disjunctive analyses over the path multigraph
# ---------------------------------------------------------------------------


def exact_join_check(a, b, backend) -> bool:
    """True when join(a, b) adds no integer point beyond the union."""
    if a.is_bottom or b.is_bottom:
        return True
    joined = a.join(b)
    f = F.conj(
        [
            F.value_formula(joined),
            F.Not(F.value_formula(a)),
            F.Not(F.value_formula(b)),
        ]
    )
    return backend.solve(f).status == "unsat"


def sigma_extend(ctx: _Ctx, dst_list: list, image, max_disjuncts: int) -> int:
    """Pick (or create) the destination disjunct for a path image."""
    for t, dv in enumerate(dst_list):
        if not dv.is_bottom and exact_join_check(dv, image, ctx.backend):
            return t
    for t, dv in enumerate(dst_list):
        if dv.is_bottom:
            return t
    if len(dst_list) < max_disjuncts:
        dst_list.append(ctx.bottom())
        return len(dst_list) - 1
    return max_disjuncts - 1


def run_multigraph(ctx: _Ctx, sf: SemanticsFormula, max_disjuncts: int):
    """Guided ascent over paths discovered by solver queries.

    With a single disjunct per cut point this is the combined strategy;
    with more it is the disjunctive one.
    """
    cfg = ctx.cfg
    vals: dict[int, list] = {p: [ctx.bottom()] for p in ctx.pr}
    vals[cfg.entry] = [ctx.top()]
    manager = BddManager(sf.pred_order)
    pset = PathSet.empty(manager)
    paths_in: dict = {}  # minterm -> path
    routes: dict = {}  # (dst, src, src disjunct, minterm) -> target disjunct

    def route(path, k, image):
        key = (path.dst, path.src, k, sf.minterm(path))
        if key not in routes:
            if max_disjuncts == 1:
                routes[key] = 0
            else:
                routes[key] = sigma_extend(ctx, vals[path.dst], image, max_disjuncts)
        return routes[key]

    a_next = {cfg.entry}
    for _outer in range(len(cfg.edges) * max(4, len(ctx.pr)) + 16):
        if not a_next:
            break
        ctx.stats.iterations += 1
        a_prime = sorted(a_next)
        a_next = set()
        a_work: set[int] = set()
        changed = False

        # phase 1: discover paths outside the current set, join only
        for i in a_prime:
            blocked: set = set()
            while True:
                q = FocusQuery(
                    sf, i, vals, disjunctive=True, exclude=pset,
                    blocked=frozenset(blocked),
                )
                res = ctx.solve(q)
                if res.status == "unsat":
                    break
                path, k = res.path, res.disjunct or 0
                if path is None:
                    break
                mt = sf.minterm(path)
                edges = [cfg.edges[e] for e in path.edges]
                image = transform_path(vals[i][k], edges)
                t = route(path, k, image)
                old = vals[path.dst][t]
                if image.is_bottom or image.leq(old):
                    blocked.add(mt)  # witness was spurious over the integers
                    continue
                pset = pset.add(mt)
                paths_in[mt] = path
                ctx.stats.paths_added += 1
                ctx.event(
                    "path_added",
                    src=path.src,
                    dst=path.dst,
                    edges=list(path.edges),
                    pathset_size=pset.size(),
                )
                vals[path.dst][t] = old.join(image)
                changed = True
                a_work.update((i, path.dst))
                a_next.add(path.dst)

        # phase 2: ascend with widening, restricted to the known paths
        work = deque(sorted(a_work))
        queued = set(work)
        while work:
            i = work.popleft()
            queued.discard(i)
            blocked = set()
            while True:
                q = FocusQuery(
                    sf, i, vals, disjunctive=True, restrict=pset,
                    blocked=frozenset(blocked),
                )
                res = ctx.solve(q)
                if res.status == "unsat":
                    break
                path, k = res.path, res.disjunct or 0
                if path is None:
                    break
                mt = sf.minterm(path)
                edges = [cfg.edges[e] for e in path.edges]
                image = transform_path(vals[i][k], edges)
                if image.is_bottom:
                    blocked.add(mt)
                    continue
                t = route(path, k, image)
                old = vals[path.dst][t]
                if path.dst == i and t == k:
                    new = _local_loop_iterate(ctx, old, edges)
                    if new.equal(old):
                        blocked.add(mt)
                        continue
                    vals[i][k] = new
                elif path.dst == i:
                    # self loop landing on another disjunct: join then run
                    # the local sequence on the target, which also loops
                    # on this path
                    if image.leq(old):
                        blocked.add(mt)
                        continue
                    vals[i][t] = _local_loop_iterate(ctx, old.join(image), edges)
                else:
                    if image.leq(old):
                        blocked.add(mt)
                        continue
                    vals[path.dst][t] = ctx.update(
                        old, image, path.dst in ctx.pw, ("mg", path.dst, t)
                    )
                changed = True
                a_next.add(path.dst)
                if path.dst not in queued:
                    work.append(path.dst)
                    queued.add(path.dst)

        # phase 3: decreasing iterations over the discovered paths.
        # Every disjunct is met with the hull of all incoming path
        # images: meeting with a per-disjunct recomputation would not be
        # sound, since an image may be routed to a different disjunct
        # than the one currently covering its states.
        if changed:
            for _ in range(ctx.config.narrowing):
                ch = False
                for p in ctx.pr:
                    acc = ctx.top() if p == cfg.entry else ctx.bottom()
                    for mt, path in paths_in.items():
                        if path.dst != p:
                            continue
                        edges = [cfg.edges[e] for e in path.edges]
                        for sv in vals[path.src]:
                            if not sv.is_bottom:
                                acc = acc.join(transform_path(sv, edges))
                    for t in range(len(vals[p])):
                        nv = vals[p][t].meet(acc)
                        if not nv.equal(vals[p][t]):
                            vals[p][t] = nv
                            ch = True
                            ctx.stats.narrowings += 1
                if not ch:
                    break

        # any change may expose new growing paths elsewhere: re-examine
        # every populated cut point before concluding
        if changed:
            a_next.update(
                p for p in ctx.pr if any(not v.is_bottom for v in vals[p])
            )
    else:
        raise EngineError("path discovery did not stabilize")
    return vals, pset


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def analyze_source(src: str, config: RunConfig, backend=None, events=None) -> AnalysisResult:
    fn = parse_program(src)
    cfg = build_cfg(fn)
    return analyze_cfg(cfg, config, backend, events)


def analyze_cfg(cfg: Cfg, config: RunConfig, backend=None, events=None) -> AnalysisResult:
    if config.technique not in TECHNIQUES:
        raise EngineError(f"unknown technique {config.technique!r}")
    if config.domain not in DOMAINS:
        raise EngineError(f"unknown domain {config.domain!r}")
    sel = select_pr(cfg)
    ssa = to_ssa(cfg)
    sf = encode_semantics(ssa, sel)
    own_backend = backend is None
    if backend is None:
        backend = make_backend(config.solver)
    ctx = _Ctx(cfg, sel, DOMAINS[config.domain], config, backend, events)
    start = time.perf_counter()
    start_queries = backend.query_count
    result = AnalysisResult(
        technique=config.technique,
        domain=config.domain,
        cfg=cfg,
        ssa=ssa,
        sel=sel,
        sf=sf,
        values={},
        events=ctx.events,
    )
    try:
        if config.technique == "S":
            all_values = run_standard(ctx)
            result.all_values = all_values
            result.values = {p: all_values[p] for p in ctx.pr}
        elif config.technique == "G":
            all_values, phases = run_guided(ctx)
            result.all_values = all_values
            result.phase_values = phases
            result.values = {p: all_values[p] for p in ctx.pr}
        elif config.technique == "PF":
            result.values = run_pathfocusing(ctx, sf)
        elif config.technique == "G+PF":
            vals, pset = run_multigraph(ctx, sf, 1)
            result.values = {p: vals[p][0] for p in ctx.pr}
            result.pathset = pset
        else:  # DIS
            vals, pset = run_multigraph(ctx, sf, max(1, config.max_disjuncts))
            result.disjuncts = vals
            result.values = {p: _join_all(vals[p]) for p in ctx.pr}
            result.pathset = pset
    finally:
        ctx.stats.wall_time = time.perf_counter() - start
        ctx.stats.queries = backend.query_count - start_queries
        result.stats = ctx.stats
        if own_backend:
            backend.close()
    return result


def _join_all(values: list):
    acc = values[0]
    for v in values[1:]:
        acc = acc.join(v)
    return acc


# ---------------------------------------------------------------------------
# Inductiveness check and comparison
# ---------------------------------------------------------------------------


def check_inductive(result: AnalysisResult, backend=None):
    """Verify the result against the exact path semantics.

    Returns (ok, violations).  An invariant is accepted when the entry
    value covers every initial state and no feasible path leads from a
    covered state to a state outside the destination value.
    """
    own = backend is None
    if backend is None:
        backend = InternalBackend()
    try:
        sf = result.sf
        violations = []
        lists = result.value_lists()
        entry = result.cfg.entry
        if not any(v.is_top() for v in lists[entry]):
            violations.append({"point": entry, "reason": "entry misses initial states"})
        values = result.disjuncts if result.disjuncts is not None else result.values
        disjunctive = result.disjuncts is not None
        for i in result.sel.cut_points:
            if all(v.is_bottom for v in lists[i]):
                continue
            q = FocusQuery(sf, i, values, disjunctive=disjunctive)
            res = backend.solve(q)
            if res.status != "unsat":
                violations.append(
                    {
                        "point": i,
                        "reason": "feasible escaping path",
                        "path": list(res.path.edges) if res.path else None,
                    }
                )
        return not violations, violations
    finally:
        if own:
            backend.close()


def _union_formula(values: list) -> F.Formula:
    return F.disj([F.value_formula(v) for v in values])


def value_implies(a_list: list, b_list: list, backend) -> bool:
    f = F.conj([_union_formula(a_list), F.Not(_union_formula(b_list))])
    return backend.solve(f).status == "unsat"


def compare_invariants(ra: AnalysisResult, rb: AnalysisResult, backend=None):
    """Pointwise comparison of two results on shared cut points.

    Verdicts are given from the first result's perspective: stronger
    means strictly smaller concretization at that cut point.
    """
    own = backend is None
    if backend is None:
        backend = InternalBackend()
    try:
        la, lb = ra.value_lists(), rb.value_lists()
        verdicts: dict[int, str] = {}
        for p in ra.sel.cut_points:
            ab = value_implies(la[p], lb[p], backend)
            ba = value_implies(lb[p], la[p], backend)
            if ab and ba:
                verdicts[p] = "equal"
            elif ab:
                verdicts[p] = "stronger"
            elif ba:
                verdicts[p] = "weaker"
            else:
                verdicts[p] = "incomparable"
        n = len(verdicts)
        pct = {
            kind: 100.0 * sum(1 for v in verdicts.values() if v == kind) / n
            for kind in ("stronger", "weaker", "equal", "incomparable")
        }
        return verdicts, pct
    finally:
        if own:
            backend.close()
