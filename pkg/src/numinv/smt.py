"""Satisfiability queries over the program's path semantics.

The transition relation between cut points is encoded once as a formula
over reachability predicates (a source and a destination copy per cut
point, one predicate per interior node), edge activation booleans and
the SSA-named integer variables.  Focused queries conjoin abstract
values at the source and negated abstract values at the destinations;
models are decoded back into the unique path they activate.

Two backends answer queries: an exact built-in one (path enumeration
plus Fourier-Motzkin with integer branch-and-bound) and a generic
SMT-LIB 2 subprocess client.
"""

from __future__ import annotations

import itertools
import os
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction

from . import formula as F
from .fourier import solve_conjunction
from .ir import (
    Path,
    PrSelection,
    SsaCfg,
    SsaDef,
    SsaGuard,
    SsaInput,
    enumerate_paths,
)
from .lang import Constraint, LinExpr


def bs_name(node: int) -> str:
    return f"bs_{node}"


def bd_name(node: int) -> str:
    return f"bd_{node}"


def b_name(node: int) -> str:
    return f"b_{node}"


def edge_name(eid: int) -> str:
    return f"e_{eid}"


def d_name(idx: int) -> str:
    return f"d_{idx}"


def dest_name(node: int, var: str) -> str:
    return f"vd_{node}_{var}"


class SemanticsFormula:
    """Transition semantics between cut points, with query helpers."""

    def __init__(self, ssa: SsaCfg, sel: PrSelection):
        self.ssa = ssa
        self.cfg = ssa.cfg
        self.sel = sel
        self.pr = set(sel.cut_points)
        self._paths: dict[int, list[Path]] = {}
        self._systems: dict[tuple[int, ...], list[Constraint]] = {}
        self._rho: F.Formula | None = None
        self.pred_order: list[str] = []
        for n in self.cfg.nodes:
            if n in self.pr:
                self.pred_order.append(bs_name(n))
                self.pred_order.append(bd_name(n))
            else:
                self.pred_order.append(b_name(n))

    # -- paths ---------------------------------------------------------------

    def paths(self, src: int) -> list[Path]:
        if src not in self._paths:
            self._paths[src] = enumerate_paths(self.cfg, self.sel, src)
        return self._paths[src]

    def successors(self, src: int) -> list[int]:
        seen: list[int] = []
        for p in self.paths(src):
            if p.dst not in seen:
                seen.append(p.dst)
        return seen

    def minterm(self, path: Path) -> frozenset[str]:
        preds = {bs_name(path.src), bd_name(path.dst)}
        for eid in path.edges[:-1]:
            preds.add(b_name(self.cfg.edges[eid].dst))
        return frozenset(preds)

    def path_by_minterm(self, src: int, minterm: frozenset[str]) -> Path | None:
        for p in self.paths(src):
            if self.minterm(p) == minterm:
                return p
        return None

    def src_env(self, node: int) -> dict[str, str]:
        return self.ssa.env_in[node]

    def dest_env(self, node: int) -> dict[str, str]:
        return {v: dest_name(node, v) for v in self.cfg.variables}

    # -- the transition formula ----------------------------------------------

    def rho(self) -> F.Formula:
        if self._rho is not None:
            return self._rho
        cfg, ssa = self.cfg, self.ssa
        parts: list[F.Formula] = []
        for e in cfg.edges:
            ev = F.BVar(edge_name(e.id))
            src_lit = F.BVar(bs_name(e.src) if e.src in self.pr else b_name(e.src))
            parts.append(F.implies(ev, src_lit))
            for item in ssa.edge_items[e.id]:
                for c in _item_constraints(item):
                    parts.append(F.implies(ev, F.Atom(c)))
        for n in cfg.nodes:
            incoming = [F.BVar(edge_name(e.id)) for e in cfg.in_edges(n)]
            if n in self.pr:
                parts.append(F.iff(F.BVar(bd_name(n)), F.disj(incoming)))
                for e in cfg.in_edges(n):
                    ev = F.BVar(edge_name(e.id))
                    env = ssa.env_out[e.id]
                    for v in cfg.variables:
                        eq = Constraint.make(
                            LinExpr.var(dest_name(n, v)), "==", LinExpr.var(env[v])
                        )
                        parts.append(F.implies(ev, F.Atom(eq)))
            else:
                parts.append(F.iff(F.BVar(b_name(n)), F.disj(incoming)))
                for phi in ssa.phis.get(n, ()):
                    for eid, src_ssa in phi.sources:
                        eq = Constraint.make(
                            LinExpr.var(phi.result), "==", LinExpr.var(src_ssa)
                        )
                        parts.append(F.implies(F.BVar(edge_name(eid)), F.Atom(eq)))
            outs = cfg.out_edges(n)
            for a, b in itertools.combinations(outs, 2):
                parts.append(
                    F.disj([F.Not(F.BVar(edge_name(a.id))), F.Not(F.BVar(edge_name(b.id)))])
                )
        self._rho = F.conj(parts)
        return self._rho

    # -- per-path constraint systems ------------------------------------------

    def path_system(self, path: Path) -> list[Constraint]:
        key = path.edges
        if key in self._systems:
            return self._systems[key]
        cfg, ssa = self.cfg, self.ssa
        atoms: list[Constraint] = []
        for idx, eid in enumerate(path.edges):
            e = cfg.edges[eid]
            for item in ssa.edge_items[eid]:
                atoms.extend(_item_constraints(item))
            if idx < len(path.edges) - 1:
                for phi in ssa.phis.get(e.dst, ()):
                    for peid, src_ssa in phi.sources:
                        if peid == eid:
                            atoms.append(
                                Constraint.make(
                                    LinExpr.var(phi.result), "==", LinExpr.var(src_ssa)
                                )
                            )
            else:
                env = ssa.env_out[eid]
                for v in cfg.variables:
                    atoms.append(
                        Constraint.make(
                            LinExpr.var(dest_name(e.dst, v)), "==", LinExpr.var(env[v])
                        )
                    )
        self._systems[key] = atoms
        return atoms


def _item_constraints(item) -> list[Constraint]:
    if isinstance(item, SsaGuard):
        return [item.constraint]
    if isinstance(item, SsaDef):
        return [Constraint.make(LinExpr.var(item.target), "==", item.expr)]
    if isinstance(item, SsaInput):
        return [
            Constraint.make(LinExpr.var(item.target), ">=", LinExpr.constant(item.lo)),
            Constraint.make(LinExpr.var(item.target), "<=", LinExpr.constant(item.hi)),
        ]
    raise TypeError(item)


def encode_semantics(ssa: SsaCfg, sel: PrSelection) -> SemanticsFormula:
    return SemanticsFormula(ssa, sel)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


@dataclass
class FocusQuery:
    """Find a feasible path from one cut point that grows a target value.

    values maps each cut point to either a single abstract value or a
    list of disjuncts.  When disjunctive is set, the source state is
    selected by one-hot d_k booleans over the source disjuncts.
    """

    sf: SemanticsFormula
    source: int
    values: dict[int, object]
    disjunctive: bool = False
    succ_filter: frozenset[int] | None = None
    restrict: object | None = None  # PathSet: only these paths
    exclude: object | None = None  # PathSet: never these paths
    blocked: frozenset = frozenset()  # minterms suppressed for progress
    _cached: F.Formula | None = field(default=None, repr=False)
    _aux: tuple | None = field(default=None, repr=False)

    def source_disjuncts(self) -> list:
        v = self.values[self.source]
        return list(v) if self.disjunctive else [v]

    def dest_disjuncts(self, node: int) -> list:
        v = self.values[node]
        return list(v) if self.disjunctive else [v]

    def targets(self) -> list[int]:
        succ = self.sf.successors(self.source)
        if self.succ_filter is None:
            return succ
        return [s for s in succ if s in self.succ_filter]

    def formula(self) -> F.Formula:
        if self._cached is not None:
            return self._cached
        sf = self.sf
        parts: list[F.Formula] = [sf.rho(), F.BVar(bs_name(self.source))]
        for p in sorted(sf.pr):
            if p != self.source:
                parts.append(F.Not(F.BVar(bs_name(p))))
        src_env = sf.src_env(self.source)
        srcs = self.source_disjuncts()
        if self.disjunctive:
            cases = []
            for k, val in enumerate(srcs):
                lits: list[F.Formula] = [F.BVar(d_name(k))]
                for l in range(len(srcs)):
                    if l != k:
                        lits.append(F.Not(F.BVar(d_name(l))))
                lits.append(F.value_formula(val, src_env))
                cases.append(F.conj(lits))
            parts.append(F.disj(cases))
        else:
            parts.append(F.value_formula(srcs[0], src_env))
        targets = []
        for j in self.targets():
            dst_env = sf.dest_env(j)
            neg = [
                F.Not(F.value_formula(dv, dst_env)) for dv in self.dest_disjuncts(j)
            ]
            targets.append(F.conj([F.BVar(bd_name(j))] + neg))
        parts.append(F.disj(targets))
        aux = []
        if self.restrict is not None:
            defs, lit, names = self.restrict.formula_parts(False)
            parts.extend([defs, lit])
            aux.append((self.restrict, names))
        if self.exclude is not None:
            defs, lit, names = self.exclude.formula_parts(True)
            parts.extend([defs, lit])
            aux.append((self.exclude, names))
        for mt in sorted(self.blocked, key=sorted):
            lits = [
                F.BVar(p) if p in mt else F.Not(F.BVar(p)) for p in sf.pred_order
            ]
            parts.append(F.Not(F.conj(lits)))
        self._aux = tuple(aux)
        self._cached = F.conj(parts)
        return self._cached

    def complete_model(self, assign: dict) -> dict:
        """Fill in the diagram booleans implied by the predicates."""
        self.formula()
        for ps, names in self._aux or ():
            assign.update(ps.node_values(names, assign))
        return assign


def build_focus_formula(sf, source, values, restrict=None, succ_filter=None,
                        blocked=frozenset()) -> FocusQuery:
    return FocusQuery(sf, source, values, restrict=restrict,
                      succ_filter=succ_filter, blocked=blocked)


def build_newpath_formula(sf, source, values, exclude, blocked=frozenset()) -> FocusQuery:
    return FocusQuery(sf, source, values, exclude=exclude, blocked=blocked)


def build_disjunctive_formula(sf, source, values, restrict=None, exclude=None,
                              succ_filter=None, blocked=frozenset()) -> FocusQuery:
    return FocusQuery(sf, source, values, disjunctive=True, restrict=restrict,
                      exclude=exclude, succ_filter=succ_filter, blocked=blocked)


@dataclass
class Model:
    assign: dict

    def __getitem__(self, name):
        return self.assign.get(name)


@dataclass
class SolveResult:
    status: str  # "sat", "unsat", "unknown"
    model: Model | None = None
    path: Path | None = None
    disjunct: int | None = None


# ---------------------------------------------------------------------------
# Internal backend
# ---------------------------------------------------------------------------


class InternalBackend:
    """Exact query evaluation by path enumeration plus Fourier-Motzkin."""

    name = "internal"

    def __init__(self):
        self.query_count = 0

    def close(self):
        pass

    def solve(self, query) -> SolveResult:
        self.query_count += 1
        if isinstance(query, FocusQuery):
            return self._solve_focus(query)
        return self._solve_generic(query)

    def _solve_focus(self, q: FocusQuery) -> SolveResult:
        sf = q.sf
        targets = set(q.targets())
        for path in sf.paths(q.source):
            if path.dst not in targets:
                continue
            mt = sf.minterm(path)
            if q.restrict is not None and not q.restrict.contains(mt):
                continue
            if q.exclude is not None and q.exclude.contains(mt):
                continue
            if mt in q.blocked:
                continue
            system = sf.path_system(path)
            src_env = sf.src_env(q.source)
            dst_env = sf.dest_env(path.dst)
            dest_vals = q.dest_disjuncts(path.dst)
            impossible = False
            for dv in dest_vals:
                if dv.is_bottom:
                    continue  # its negation is vacuously true
                if not dv.constraints():
                    impossible = True  # negating top: no state lies outside
                    break
            if impossible:
                continue
            factors = [
                [c.rename(dst_env).negate() for c in dv.constraints()]
                for dv in dest_vals
                if not dv.is_bottom
            ]
            for k, src_val in enumerate(q.source_disjuncts()):
                if src_val.is_bottom:
                    continue
                src_atoms = [c.rename(src_env) for c in src_val.constraints()]
                base = src_atoms + system
                status0, _ = solve_conjunction(base)
                if status0 == "unsat":
                    continue  # this source state cannot follow the path

                for combo in itertools.product(*factors):
                    status, numeric = solve_conjunction(base + list(combo))
                    if status == "unsat":
                        continue
                    assign: dict = {}
                    for p in sf.pred_order:
                        assign[p] = p in mt
                    for e in sf.cfg.edges:
                        assign[edge_name(e.id)] = e.id in path.edges
                    if q.disjunctive:
                        for l in range(len(q.source_disjuncts())):
                            assign[d_name(l)] = l == k
                    for v, val in (numeric or {}).items():
                        assign[v] = val
                    q.complete_model(assign)
                    return SolveResult(status, Model(assign), path,
                                       k if q.disjunctive else None)
        return SolveResult("unsat")

    def _solve_generic(self, f: F.Formula) -> SolveResult:
        cubes = _dnf(f)
        if cubes is None:
            return SolveResult("unknown")
        for bools, constraints in cubes:
            status, numeric = solve_conjunction(constraints)
            if status == "unsat":
                continue
            assign = dict(bools)
            for v, val in (numeric or {}).items():
                assign[v] = val
            return SolveResult(status, Model(assign))
        return SolveResult("unsat")


_DNF_LIMIT = 100000


def _dnf(f: F.Formula):
    """Cubes (bool assignment, constraints) covering the formula."""

    def go(node: F.Formula, negated: bool):
        if isinstance(node, F.FTrue):
            return [] if negated else [({}, [])]
        if isinstance(node, F.FFalse):
            return [({}, [])] if negated else []
        if isinstance(node, F.BVar):
            return [({node.name: not negated}, [])]
        if isinstance(node, F.Atom):
            c = node.constraint.negate() if negated else node.constraint
            return [({}, [c])]
        if isinstance(node, F.Not):
            return go(node.arg, not negated)
        if isinstance(node, F.And):
            branches = [go(a, negated) for a in node.args]
            return _cross(branches) if not negated else _concat(branches)
        if isinstance(node, F.Or):
            branches = [go(a, negated) for a in node.args]
            return _concat(branches) if not negated else _cross(branches)
        raise TypeError(node)

    def _concat(branches):
        out = []
        for b in branches:
            out.extend(b)
            if len(out) > _DNF_LIMIT:
                raise _TooBig
        return out

    def _cross(branches):
        out = [({}, [])]
        for b in branches:
            nxt = []
            for bools1, cs1 in out:
                for bools2, cs2 in b:
                    merged = dict(bools1)
                    clash = False
                    for k, v in bools2.items():
                        if merged.get(k, v) != v:
                            clash = True
                            break
                        merged[k] = v
                    if clash:
                        continue
                    nxt.append((merged, cs1 + cs2))
                    if len(nxt) > _DNF_LIMIT:
                        raise _TooBig
            out = nxt
        return out

    try:
        return go(f, False)
    except _TooBig:
        return None


class _TooBig(Exception):
    pass


# ---------------------------------------------------------------------------
# External backend (SMT-LIB 2 subprocess)
# ---------------------------------------------------------------------------


class SolverError(Exception):
    pass


class ExternalBackend:
    """Client for any SMT-LIB 2 solver reading from standard input."""

    def __init__(self, command: list[str]):
        self.command = command
        self.name = f"cmd:{' '.join(command)}"
        self.query_count = 0
        try:
            self.proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
            )
        except OSError as exc:
            raise SolverError(f"cannot start solver {command!r}: {exc}") from exc
        self._send("(set-option :print-success false)")
        self._send("(set-logic QF_LIA)")

    def close(self):
        try:
            self._send("(exit)")
            self.proc.stdin.close()
            self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()

    def _send(self, line: str):
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except OSError as exc:
            raise SolverError(f"solver process died: {exc}") from exc

    def _read_line(self) -> str:
        line = self.proc.stdout.readline()
        if not line:
            raise SolverError("solver closed its output stream")
        return line.strip()

    def _read_sexpr(self) -> str:
        buf = ""
        depth = 0
        while True:
            line = self.proc.stdout.readline()
            if not line:
                raise SolverError("solver closed its output stream")
            buf += line
            depth = buf.count("(") - buf.count(")")
            if depth == 0 and buf.strip():
                return buf.strip()

    def solve(self, query) -> SolveResult:
        self.query_count += 1
        f = query.formula() if isinstance(query, FocusQuery) else query
        bools, nums = F.free_vars(f)
        self._send("(push 1)")
        for v in sorted(bools):
            self._send(f"(declare-const {v} Bool)")
        for v in sorted(nums):
            self._send(f"(declare-const {v} Int)")
        self._send(f"(assert {f.smt()})")
        self._send("(check-sat)")
        status = self._read_line()
        result: SolveResult
        if status == "sat":
            assign: dict = {}
            names = sorted(bools) + sorted(nums)
            if names:
                self._send(f"(get-value ({' '.join(names)}))")
                text = self._read_sexpr()
                assign = _parse_values(text)
            model = Model(assign)
            path = disjunct = None
            if isinstance(query, FocusQuery):
                path, disjunct = extract_path(query.sf, model)
            result = SolveResult("sat", model, path, disjunct)
        elif status == "unsat":
            result = SolveResult("unsat")
        elif status == "unknown":
            result = SolveResult("unknown")
        else:
            raise SolverError(f"unexpected solver reply {status!r}")
        self._send("(pop 1)")
        return result


def _parse_values(text: str) -> dict:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()

    def parse(idx):
        if tokens[idx] == "(":
            items = []
            idx += 1
            while tokens[idx] != ")":
                item, idx = parse(idx)
                items.append(item)
            return items, idx + 1
        return tokens[idx], idx + 1

    tree, _ = parse(0)
    out: dict = {}
    for pair in tree:
        if not isinstance(pair, list) or len(pair) != 2:
            continue
        name, value = pair
        out[name] = _parse_value(value)
    return out


def _parse_value(v):
    if v == "true":
        return True
    if v == "false":
        return False
    if isinstance(v, list) and len(v) == 2 and v[0] == "-":
        return -int(v[1])
    try:
        return int(v)
    except (TypeError, ValueError):
        return v


def extract_path(sf: SemanticsFormula, model: Model):
    """Decode the unique activated path from a satisfying assignment."""
    cfg = sf.cfg
    source = None
    for p in sf.pr:
        if model[bs_name(p)]:
            source = p
            break
    if source is None:
        return None, None
    edges = []
    node = source
    while True:
        nxt = None
        for e in cfg.out_edges(node):
            if model[edge_name(e.id)]:
                nxt = e
                break
        if nxt is None:
            return None, None
        edges.append(nxt.id)
        node = nxt.dst
        if node in sf.pr:
            break
        if len(edges) > len(cfg.edges):
            return None, None
    path = Path(source, node, tuple(edges))
    disjunct = None
    k = 0
    while model[d_name(k)] is not None:
        if model[d_name(k)]:
            disjunct = k
            break
        k += 1
    return path, disjunct


def make_backend(spec: str) -> object:
    """internal | cmd:<executable and arguments>"""
    spec = (spec or "internal").strip()
    if spec == "internal":
        return InternalBackend()
    if spec.startswith("cmd:"):
        cmd = spec[4:].split()
        if not cmd:
            raise SolverError("empty external solver command")
        return ExternalBackend(cmd)
    raise SolverError(f"unknown solver spec {spec!r}")


def default_solver_spec() -> str:
    return os.environ.get("PAGAI_LITE_SOLVER", "internal")
