"""Sets of paths as reduced ordered binary decision diagrams.

A path between cut points is encoded as the full valuation of the
reachability predicates it makes true.  The diagram is hash-consed:
node identity is structural, so set equality is pointer equality on
roots.  Conversion to a solver formula introduces one definition per
reachable node, keeping the formula linear in the diagram size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import formula as F

ZERO = 0
ONE = 1


class BddManager:
    """Shared node store for one predicate ordering."""

    def __init__(self, var_order: list[str]):
        self.var_order = list(var_order)
        self.var_index = {v: i for i, v in enumerate(self.var_order)}
        # node id -> (var index, low child, high child); 0 and 1 terminals
        self.nodes: list[tuple[int, int, int] | None] = [None, None]
        self.unique: dict[tuple[int, int, int], int] = {}
        self.cache: dict[tuple, int] = {}

    def mk(self, var: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (var, lo, hi)
        n = self.unique.get(key)
        if n is None:
            n = len(self.nodes)
            self.nodes.append(key)
            self.unique[key] = n
        return n

    def apply_or(self, u: int, v: int) -> int:
        if u == ONE or v == ONE:
            return ONE
        if u == ZERO:
            return v
        if v == ZERO:
            return u
        if u == v:
            return u
        key = ("or", min(u, v), max(u, v))
        r = self.cache.get(key)
        if r is not None:
            return r
        uvar, ulo, uhi = self.nodes[u]
        vvar, vlo, vhi = self.nodes[v]
        if uvar == vvar:
            r = self.mk(uvar, self.apply_or(ulo, vlo), self.apply_or(uhi, vhi))
        elif uvar < vvar:
            r = self.mk(uvar, self.apply_or(ulo, v), self.apply_or(uhi, v))
        else:
            r = self.mk(vvar, self.apply_or(u, vlo), self.apply_or(u, vhi))
        self.cache[key] = r
        return r

    def apply_and(self, u: int, v: int) -> int:
        if u == ZERO or v == ZERO:
            return ZERO
        if u == ONE:
            return v
        if v == ONE:
            return u
        if u == v:
            return u
        key = ("and", min(u, v), max(u, v))
        r = self.cache.get(key)
        if r is not None:
            return r
        uvar, ulo, uhi = self.nodes[u]
        vvar, vlo, vhi = self.nodes[v]
        if uvar == vvar:
            r = self.mk(uvar, self.apply_and(ulo, vlo), self.apply_and(uhi, vhi))
        elif uvar < vvar:
            r = self.mk(uvar, self.apply_and(ulo, v), self.apply_and(uhi, v))
        else:
            r = self.mk(vvar, self.apply_and(u, vlo), self.apply_and(u, vhi))
        self.cache[key] = r
        return r

    def negate(self, u: int) -> int:
        if u == ZERO:
            return ONE
        if u == ONE:
            return ZERO
        key = ("not", u)
        r = self.cache.get(key)
        if r is not None:
            return r
        var, lo, hi = self.nodes[u]
        r = self.mk(var, self.negate(lo), self.negate(hi))
        self.cache[key] = r
        return r

    def diff(self, u: int, v: int) -> int:
        return self.apply_and(u, self.negate(v))

    def cube(self, true_vars: frozenset[str]) -> int:
        """Diagram of the full minterm given by a set of true predicates."""
        root = ONE
        for i in range(len(self.var_order) - 1, -1, -1):
            if self.var_order[i] in true_vars:
                root = self.mk(i, ZERO, root)
            else:
                root = self.mk(i, root, ZERO)
        return root

    def contains(self, u: int, true_vars: frozenset[str]) -> bool:
        while u not in (ZERO, ONE):
            var, lo, hi = self.nodes[u]
            u = hi if self.var_order[var] in true_vars else lo
        return u == ONE

    def count_minterms(self, u: int) -> int:
        n = len(self.var_order)

        def go(node: int, level: int) -> int:
            if node == ZERO:
                return 0
            if node == ONE:
                return 2 ** (n - level)
            var, lo, hi = self.nodes[node]
            return 2 ** (var - level) * (go(lo, var + 1) + go(hi, var + 1))

        return go(u, 0)

    def minterms(self, u: int):
        """All accepted full valuations, as frozensets of true predicates."""
        n = len(self.var_order)
        out: list[frozenset[str]] = []

        def go(node: int, level: int, acc: list[str]):
            if node == ZERO:
                return
            if level == n:
                out.append(frozenset(acc))
                return
            if node != ONE and self.nodes[node][0] == level:
                _, lo, hi = self.nodes[node]
                go(lo, level + 1, acc)
                go(hi, level + 1, acc + [self.var_order[level]])
            else:
                go(node, level + 1, acc)
                go(node, level + 1, acc + [self.var_order[level]])

        go(u, 0, [])
        return out

    def reachable(self, u: int) -> list[int]:
        seen: list[int] = []
        mark = set()
        stack = [u]
        while stack:
            n = stack.pop()
            if n in mark or n in (ZERO, ONE):
                continue
            mark.add(n)
            seen.append(n)
            _, lo, hi = self.nodes[n]
            stack.extend((lo, hi))
        return sorted(seen)


_aux_counter = [0]


@dataclass(frozen=True)
class PathSet:
    manager: BddManager = field(compare=False)
    root: int

    @classmethod
    def empty(cls, manager: BddManager) -> "PathSet":
        return cls(manager, ZERO)

    @classmethod
    def universe(cls, manager: BddManager) -> "PathSet":
        return cls(manager, ONE)

    def is_empty(self) -> bool:
        return self.root == ZERO

    def add(self, minterm: frozenset[str]) -> "PathSet":
        return PathSet(self.manager, self.manager.apply_or(self.root, self.manager.cube(minterm)))

    def union(self, other: "PathSet") -> "PathSet":
        return PathSet(self.manager, self.manager.apply_or(self.root, other.root))

    def intersect(self, other: "PathSet") -> "PathSet":
        return PathSet(self.manager, self.manager.apply_and(self.root, other.root))

    def difference(self, other: "PathSet") -> "PathSet":
        return PathSet(self.manager, self.manager.diff(self.root, other.root))

    def complement(self) -> "PathSet":
        return PathSet(self.manager, self.manager.negate(self.root))

    def contains(self, minterm: frozenset[str]) -> bool:
        return self.manager.contains(self.root, minterm)

    def size(self) -> int:
        return self.manager.count_minterms(self.root)

    def minterms(self):
        return self.manager.minterms(self.root)

    def node_count(self) -> int:
        return len(self.manager.reachable(self.root))

    def to_formula(self, negate: bool = False):
        defs, literal, _ = self.formula_parts(negate)
        return F.conj([defs, literal])

    def formula_parts(self, negate: bool = False):
        """(definitions, literal, node names) triple, linear in size.

        definitions constrain one fresh boolean per node; the literal
        asserts (or denies) membership of the encoded valuation.
        """
        if self.root == ONE:
            return F.TRUE, (F.FALSE if negate else F.TRUE), {}
        if self.root == ZERO:
            return F.TRUE, (F.TRUE if negate else F.FALSE), {}
        _aux_counter[0] += 1
        tag = _aux_counter[0]
        names: dict[int, str] = {}
        for n in self.manager.reachable(self.root):
            names[n] = f"t{tag}_{n}"

        def lit(n: int) -> F.Formula:
            if n == ZERO:
                return F.FALSE
            if n == ONE:
                return F.TRUE
            return F.BVar(names[n])

        defs = []
        for n, name in names.items():
            var, lo, hi = self.manager.nodes[n]
            pred = F.BVar(self.manager.var_order[var])
            defs.append(
                F.iff(
                    F.BVar(name),
                    F.disj(
                        [
                            F.conj([pred, lit(hi)]),
                            F.conj([F.Not(pred), lit(lo)]),
                        ]
                    ),
                )
            )
        root_lit = F.BVar(names[self.root])
        return F.conj(defs), (F.Not(root_lit) if negate else root_lit), names

    def node_values(self, names: dict[int, str], pred_assign) -> dict[str, bool]:
        """Values of the per-node booleans under a predicate valuation."""
        out: dict[str, bool] = {}
        for n, name in names.items():
            node = n
            while node not in (ZERO, ONE):
                var, lo, hi = self.manager.nodes[node]
                node = hi if pred_assign.get(self.manager.var_order[var], False) else lo
            out[name] = node == ONE
        return out

    def to_dot(self) -> str:
        lines = ["digraph pathset {", '  node [shape=circle];']
        lines.append('  n0 [shape=box, label="0"];')
        lines.append('  n1 [shape=box, label="1"];')
        for n in self.manager.reachable(self.root):
            var, lo, hi = self.manager.nodes[n]
            lines.append(f'  n{n} [label="{self.manager.var_order[var]}"];')
            lines.append(f"  n{n} -> n{lo} [style=dashed];")
            lines.append(f"  n{n} -> n{hi};")
        lines.append(f"  root -> n{self.root}; root [shape=point];")
        lines.append("}")
        return "\n".join(lines)
