"""Control-flow graph, SSA form and cut points.

Programs lower to a graph of edges carrying a guard (conjunction of
comparisons) followed by a list of actions (assignments and
nondeterministic reads).  Branches route through a dedicated node per
arm so no two nodes are connected by parallel edges; a path between cut
points is therefore identified by the set of nodes it visits.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .lang import (
    Assign,
    Break,
    Constraint,
    Function,
    If,
    InputExpr,
    LinExpr,
    While,
)


@dataclass(frozen=True)
class AssignAction:
    var: str
    expr: LinExpr


@dataclass(frozen=True)
class InputAction:
    var: str
    lo: int
    hi: int


@dataclass(frozen=True)
class Edge:
    id: int
    src: int
    dst: int
    guard: tuple[Constraint, ...]
    actions: tuple  # AssignAction | InputAction


@dataclass
class Cfg:
    name: str
    variables: tuple[str, ...]
    entry: int
    exit: int
    nodes: list[int]
    edges: list[Edge]

    def out_edges(self, n: int) -> list[Edge]:
        return self._out[n]

    def in_edges(self, n: int) -> list[Edge]:
        return self._in[n]

    def freeze(self):
        self._out = {n: [] for n in self.nodes}
        self._in = {n: [] for n in self.nodes}
        for e in self.edges:
            self._out[e.src].append(e)
            self._in[e.dst].append(e)
        seen_pairs = set()
        for e in self.edges:
            pair = (e.src, e.dst)
            assert pair not in seen_pairs, "parallel edges are never generated"
            seen_pairs.add(pair)


class _Lowerer:
    def __init__(self, fn: Function):
        self.fn = fn
        self.counter = 0
        self.edges: list[Edge] = []
        self.break_targets: list[int] = []

    def fresh(self) -> int:
        n = self.counter
        self.counter += 1
        return n

    def edge(self, src: int, dst: int, guard=(), actions=()):
        self.edges.append(Edge(len(self.edges), src, dst, tuple(guard), tuple(actions)))

    def run(self) -> Cfg:
        entry = self.fresh()
        exit_node = self.fresh()
        first = self.fresh()
        init_actions = [
            AssignAction(d.name, d.init) for d in self.fn.decls if d.init is not None
        ]
        self.edge(entry, first, (), init_actions)
        end = self.lower_block(self.fn.body, first)
        if end is not None:
            self.edge(end, exit_node)
        return self.prune(entry, exit_node)

    def lower_block(self, stmts: list, cur: int) -> int | None:
        for stmt in stmts:
            if cur is None:
                # unreachable code after a break; ignore
                return None
            cur = self.lower_stmt(stmt, cur)
        return cur

    def lower_stmt(self, stmt, cur: int) -> int | None:
        if isinstance(stmt, Assign):
            nxt = self.fresh()
            if isinstance(stmt.value, InputExpr):
                act = InputAction(stmt.name, stmt.value.lo, stmt.value.hi)
            else:
                act = AssignAction(stmt.name, stmt.value)
            self.edge(cur, nxt, (), (act,))
            return nxt
        if isinstance(stmt, If):
            then_entry = self.fresh()
            else_entry = self.fresh()
            join = self.fresh()
            tguard = () if stmt.cond is None else (stmt.cond,)
            eguard = () if stmt.cond is None else (stmt.cond.negate(),)
            if stmt.cond is None:
                # "if (true)": still emit the dead else arm for shape uniformity
                eguard = (Constraint((), "==", 1),)
            self.edge(cur, then_entry, tguard)
            self.edge(cur, else_entry, eguard)
            t_end = self.lower_block(stmt.then_body, then_entry)
            e_end = self.lower_block(stmt.else_body, else_entry)
            if t_end is not None:
                self.edge(t_end, join)
            if e_end is not None:
                self.edge(e_end, join)
            return join
        if isinstance(stmt, While):
            header = self.fresh()
            body_entry = self.fresh()
            after = self.fresh()
            self.edge(cur, header)
            if stmt.cond is None:
                self.edge(header, body_entry)
            else:
                self.edge(header, body_entry, (stmt.cond,))
                self.edge(header, after, (stmt.cond.negate(),))
            self.break_targets.append(after)
            b_end = self.lower_block(stmt.body, body_entry)
            self.break_targets.pop()
            if b_end is not None:
                self.edge(b_end, header)
            return after
        if isinstance(stmt, Break):
            self.edge(cur, self.break_targets[-1])
            return None
        raise TypeError(f"unknown statement {stmt!r}")

    def prune(self, entry: int, exit_node: int) -> Cfg:
        # keep nodes reachable from entry; the exit node is kept even when
        # unreachable (infinite loops) so it stays a valid cut point
        reach = {entry}
        adj: dict[int, list[int]] = {}
        for e in self.edges:
            adj.setdefault(e.src, []).append(e.dst)
        stack = [entry]
        while stack:
            n = stack.pop()
            for m in adj.get(n, ()):  # deterministic order is irrelevant here
                if m not in reach:
                    reach.add(m)
                    stack.append(m)
        keep = sorted(reach | {exit_node})
        remap = {old: i for i, old in enumerate(keep)}
        edges = [
            Edge(len_edges, remap[e.src], remap[e.dst], e.guard, e.actions)
            for len_edges, e in enumerate(
                e for e in self.edges if e.src in reach and e.dst in reach
            )
        ]
        cfg = Cfg(
            name=self.fn.name,
            variables=tuple(d.name for d in self.fn.decls),
            entry=remap[entry],
            exit=remap[exit_node],
            nodes=list(range(len(keep))),
            edges=edges,
        )
        cfg.freeze()
        return cfg


def build_cfg(fn: Function) -> Cfg:
    return _Lowerer(fn).run()


# ---------------------------------------------------------------------------
# SSA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SsaGuard:
    constraint: Constraint  # over ssa names


@dataclass(frozen=True)
class SsaDef:
    target: str  # ssa name
    expr: LinExpr  # over ssa names


@dataclass(frozen=True)
class SsaInput:
    target: str
    lo: int
    hi: int


@dataclass(frozen=True)
class Phi:
    var: str
    result: str  # ssa name
    sources: tuple[tuple[int, str], ...]  # (edge id, ssa name)


@dataclass
class SsaCfg:
    cfg: Cfg
    env_in: dict[int, dict[str, str]]  # node -> var -> ssa name
    env_out: dict[int, dict[str, str]]  # edge id -> var -> ssa name
    edge_items: dict[int, tuple]  # edge id -> (SsaGuard | SsaDef | SsaInput, ...)
    phis: dict[int, tuple[Phi, ...]]  # join node -> phis


def ssa_name(var: str, version: int) -> str:
    return f"v_{var}_{version}"


def to_ssa(cfg: Cfg) -> SsaCfg:
    """Rename variables so every assignment defines a fresh version.

    Every join node (in-degree >= 2) gets a phi for every declared
    variable; abstract values constrain the full environment, so every
    variable needs a version at every node.
    """
    versions = {v: 0 for v in cfg.variables}

    def fresh(var: str) -> str:
        versions[var] += 1
        return ssa_name(var, versions[var])

    joins = {n for n in cfg.nodes if len(cfg.in_edges(n)) >= 2}
    env_in: dict[int, dict[str, str]] = {}
    env_out: dict[int, dict[str, str]] = {}
    edge_items: dict[int, tuple] = {}
    phi_results: dict[int, dict[str, str]] = {}

    env_in[cfg.entry] = {v: ssa_name(v, 0) for v in cfg.variables}
    for n in sorted(joins):
        phi_results[n] = {v: fresh(v) for v in cfg.variables}
        env_in[n] = dict(phi_results[n])

    worklist = [cfg.entry] + sorted(joins - {cfg.entry})
    processed = set()
    while worklist:
        n = worklist.pop(0)
        if n in processed or n not in env_in:
            continue
        processed.add(n)
        for e in cfg.out_edges(n):
            env = dict(env_in[n])
            items: list = []
            for g in e.guard:
                items.append(SsaGuard(g.rename(env)))
            for act in e.actions:
                if isinstance(act, AssignAction):
                    rhs = act.expr.rename(env)
                    tgt = fresh(act.var)
                    items.append(SsaDef(tgt, rhs))
                    env[act.var] = tgt
                else:
                    tgt = fresh(act.var)
                    items.append(SsaInput(tgt, act.lo, act.hi))
                    env[act.var] = tgt
            edge_items[e.id] = tuple(items)
            env_out[e.id] = env
            if e.dst not in joins and e.dst not in env_in:
                env_in[e.dst] = env
                worklist.append(e.dst)

    phis: dict[int, tuple[Phi, ...]] = {}
    for n in sorted(joins):
        ps = []
        for v in cfg.variables:
            sources = tuple(
                (e.id, env_out[e.id][v]) for e in cfg.in_edges(n) if e.id in env_out
            )
            ps.append(Phi(v, phi_results[n][v], sources))
        phis[n] = tuple(ps)

    if cfg.exit not in env_in:  # unreachable exit of an infinite loop
        env_in[cfg.exit] = {v: ssa_name(v, 0) for v in cfg.variables}
    return SsaCfg(cfg, env_in, env_out, edge_items, phis)


# ---------------------------------------------------------------------------
# Cut points
# ---------------------------------------------------------------------------


@dataclass
class PrSelection:
    widening_points: tuple[int, ...]  # back-edge targets
    cut_points: tuple[int, ...]  # widening points plus entry and exit


def select_pr(cfg: Cfg) -> PrSelection:
    """Choose widening points as DFS back-edge targets.

    Removing the widening points makes the graph acyclic, so paths
    between consecutive cut points are finitely enumerable.
    """
    color = {n: 0 for n in cfg.nodes}  # 0 unseen, 1 on stack, 2 done
    back_targets: set[int] = set()
    stack: list[tuple[int, int]] = [(cfg.entry, 0)]
    color[cfg.entry] = 1
    while stack:
        n, i = stack.pop()
        outs = cfg.out_edges(n)
        if i < len(outs):
            stack.append((n, i + 1))
            m = outs[i].dst
            if color[m] == 0:
                color[m] = 1
                stack.append((m, 0))
            elif color[m] == 1:
                back_targets.add(m)
        else:
            color[n] = 2
    pw = tuple(sorted(back_targets))
    pr = tuple(sorted(back_targets | {cfg.entry, cfg.exit}))
    # sanity: removing the widening points must break every cycle
    assert _acyclic_without(cfg, set(pw)), "widening points must cut all cycles"
    return PrSelection(pw, pr)


def _acyclic_without(cfg: Cfg, removed: set[int]) -> bool:
    indeg = {
        n: sum(1 for e in cfg.in_edges(n) if e.src not in removed)
        for n in cfg.nodes
        if n not in removed
    }
    queue = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for e in cfg.out_edges(n):
            if e.dst in removed or e.src in removed:
                continue
            indeg[e.dst] -= 1
            if indeg[e.dst] == 0:
                queue.append(e.dst)
    return seen == len(indeg)


# ---------------------------------------------------------------------------
# Path enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Path:
    src: int
    dst: int
    edges: tuple[int, ...]  # edge ids

    def nodes(self, cfg: Cfg) -> tuple[int, ...]:
        ns = [self.src]
        for eid in self.edges:
            ns.append(cfg.edges[eid].dst)
        return tuple(ns)


def enumerate_paths(cfg: Cfg, sel: PrSelection, src: int, limit: int = 100000) -> list[Path]:
    """All syntactic paths from cut point src to the next cut point.

    Interior nodes are never cut points, so the expanded graph is
    acyclic and the enumeration terminates.  Deterministic depth-first
    order following ascending edge ids.
    """
    pr = set(sel.cut_points)
    out: list[Path] = []

    def walk(node: int, edges: list[int]):
        for e in cfg.out_edges(node):
            if e.dst in pr:
                out.append(Path(src, e.dst, tuple(edges + [e.id])))
                if len(out) > limit:
                    raise RuntimeError("path explosion")
            else:
                walk(e.dst, edges + [e.id])

    walk(src, [])
    return out


def successors(cfg: Cfg, sel: PrSelection) -> dict[int, list[int]]:
    succ: dict[int, list[int]] = {p: [] for p in sel.cut_points}
    for p in sel.cut_points:
        seen = []
        for path in enumerate_paths(cfg, sel, p):
            if path.dst not in seen:
                seen.append(path.dst)
        succ[p] = seen
    return succ


# ---------------------------------------------------------------------------
# Reference interpreters
# ---------------------------------------------------------------------------


def run_cfg(cfg: Cfg, init: dict[str, int], draws: list[int], max_steps: int):
    """Execute the graph, consuming one draw per nondeterministic read.

    Returns (final store, visited node sequence).  Guards at a branch
    are complementary, so execution is deterministic given the draws.
    """
    store = dict(init)
    node = cfg.entry
    trace = [node]
    di = 0
    for _ in range(max_steps):
        taken = None
        for e in cfg.out_edges(node):
            if all(g.holds(store) for g in e.guard):
                taken = e
                break
        if taken is None:
            break
        for act in taken.actions:
            if isinstance(act, AssignAction):
                store[act.var] = act.expr.eval(store)
            else:
                store[act.var] = draws[di] if di < len(draws) else act.lo
                di += 1
        node = taken.dst
        trace.append(node)
    return store, trace


def run_ssa(ssa: SsaCfg, init: dict[str, int], draws: list[int], max_steps: int):
    """Execute the SSA form and report the store over source variables."""
    cfg = ssa.cfg
    values: dict[str, int] = {ssa_name(v, 0): init[v] for v in cfg.variables}
    env = dict(ssa.env_in[cfg.entry])
    node = cfg.entry
    trace = [node]
    di = 0
    for _ in range(max_steps):
        taken = None
        for e in cfg.out_edges(node):
            ok = True
            for item in ssa.edge_items[e.id]:
                if isinstance(item, SsaGuard):
                    if not item.constraint.holds(values):
                        ok = False
                        break
                elif isinstance(item, SsaDef):
                    values[item.target] = item.expr.eval(values)
                elif isinstance(item, SsaInput):
                    values[item.target] = draws[di] if di < len(draws) else item.lo
                    di += 1
            if ok:
                taken = e
                break
            # roll back nothing: defs written by a failed guard prefix are
            # harmless, their targets are only read when the edge is taken
        if taken is None:
            break
        env = dict(ssa.env_out[taken.id])
        node = taken.dst
        for phi in ssa.phis.get(node, ()):
            for eid, src_name in phi.sources:
                if eid == taken.id:
                    values[phi.result] = values[src_name]
                    env[phi.var] = phi.result
        trace.append(node)
    return {v: values[env[v]] for v in cfg.variables}, trace


def random_store(cfg: Cfg, rng: random.Random, lo=-50, hi=50) -> dict[str, int]:
    return {v: rng.randint(lo, hi) for v in cfg.variables}


# ---------------------------------------------------------------------------
# Dumps
# ---------------------------------------------------------------------------


def cfg_to_json(cfg: Cfg, sel: PrSelection | None = None) -> str:
    data = {
        "function": cfg.name,
        "variables": list(cfg.variables),
        "entry": cfg.entry,
        "exit": cfg.exit,
        "nodes": list(cfg.nodes),
        "edges": [
            {
                "id": e.id,
                "src": e.src,
                "dst": e.dst,
                "guard": [str(g) for g in e.guard],
                "actions": [
                    f"{a.var} = {a.expr}"
                    if isinstance(a, AssignAction)
                    else f"{a.var} = input({a.lo}, {a.hi})"
                    for a in e.actions
                ],
            }
            for e in cfg.edges
        ],
    }
    if sel is not None:
        data["widening_points"] = list(sel.widening_points)
        data["cut_points"] = list(sel.cut_points)
    return json.dumps(data, indent=2, sort_keys=True)
