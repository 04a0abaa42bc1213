"""Abstract domains: interval boxes and integer octagons.

Both domains expose the same surface: top/bottom constructors, lattice
operations, widening, constraint meets, assignment transformers, a
rendering and a constraint view used to build solver formulas.  Values
are immutable; every operation returns a new value.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .lang import Constraint, LinExpr
from .ir import AssignAction, InputAction

INF = math.inf


# ---------------------------------------------------------------------------
# Interval helpers (None encodes the missing bound)
# ---------------------------------------------------------------------------


def _it_add(a, b):
    return (
        None if a[0] is None or b[0] is None else a[0] + b[0],
        None if a[1] is None or b[1] is None else a[1] + b[1],
    )


def _it_scale(a, k):
    if k == 0:
        return (0, 0)
    lo, hi = a
    if k > 0:
        return (None if lo is None else k * lo, None if hi is None else k * hi)
    return (None if hi is None else k * hi, None if lo is None else k * lo)


def _it_empty(a) -> bool:
    return a[0] is not None and a[1] is not None and a[0] > a[1]


def _lo_max(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _hi_min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def eval_expr_interval(expr: LinExpr, itvs: dict[str, tuple]) -> tuple:
    acc = (expr.const, expr.const)
    for v, c in expr.coeffs:
        acc = _it_add(acc, _it_scale(itvs[v], c))
    return acc


class Box:
    """Non-relational product of integer intervals."""

    __slots__ = ("env", "itvs")

    def __init__(self, env: tuple[str, ...], itvs: dict[str, tuple] | None):
        self.env = env
        if itvs is not None and any(_it_empty(itvs[v]) for v in env):
            itvs = None
        self.itvs = itvs

    @classmethod
    def top(cls, env) -> "Box":
        return cls(tuple(env), {v: (None, None) for v in env})

    @classmethod
    def bottom(cls, env) -> "Box":
        return cls(tuple(env), None)

    @property
    def is_bottom(self) -> bool:
        return self.itvs is None

    def is_top(self) -> bool:
        return self.itvs is not None and all(
            self.itvs[v] == (None, None) for v in self.env
        )

    def leq(self, other: "Box") -> bool:
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        for v in self.env:
            alo, ahi = self.itvs[v]
            blo, bhi = other.itvs[v]
            if blo is not None and (alo is None or alo < blo):
                return False
            if bhi is not None and (ahi is None or ahi > bhi):
                return False
        return True

    def equal(self, other: "Box") -> bool:
        return self.leq(other) and other.leq(self)

    def join(self, other: "Box") -> "Box":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        itvs = {}
        for v in self.env:
            alo, ahi = self.itvs[v]
            blo, bhi = other.itvs[v]
            lo = None if alo is None or blo is None else min(alo, blo)
            hi = None if ahi is None or bhi is None else max(ahi, bhi)
            itvs[v] = (lo, hi)
        return Box(self.env, itvs)

    def meet(self, other: "Box") -> "Box":
        if self.is_bottom or other.is_bottom:
            return Box.bottom(self.env)
        itvs = {}
        for v in self.env:
            alo, ahi = self.itvs[v]
            blo, bhi = other.itvs[v]
            itvs[v] = (_lo_max(alo, blo), _hi_min(ahi, bhi))
        return Box(self.env, itvs)

    def widen(self, other: "Box") -> "Box":
        """Standard interval widening; other must include self."""
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        itvs = {}
        for v in self.env:
            alo, ahi = self.itvs[v]
            blo, bhi = other.itvs[v]
            lo = alo if (alo is not None and blo is not None and blo >= alo) else None
            hi = ahi if (ahi is not None and bhi is not None and bhi <= ahi) else None
            itvs[v] = (lo, hi)
        return Box(self.env, itvs)

    def meet_constraints(self, constraints) -> "Box":
        if self.is_bottom:
            return self
        itvs = dict(self.itvs)
        rows = []
        for c in constraints:
            if c.op == "!=":
                continue  # no interval information in a disequality
            rows.extend(c.to_leq())
        # two propagation passes pick up chains like x <= y, y <= 5
        for _ in range(2):
            for coeffs, const in rows:
                for v, cv in coeffs:
                    bound = Fraction(const)
                    dead = False
                    for w, cw in coeffs:
                        if w == v:
                            continue
                        hi_part = _it_scale(itvs[w], -cw)[1]
                        if hi_part is None:
                            dead = True
                            break
                        bound += hi_part
                    if dead:
                        continue
                    # cv * v <= bound holds for every point of the row
                    if cv > 0:
                        hi_b = math.floor(bound / cv)
                        itvs[v] = (itvs[v][0], _hi_min(itvs[v][1], hi_b))
                    else:
                        lo_b = math.ceil(bound / cv)
                        itvs[v] = (_lo_max(itvs[v][0], lo_b), itvs[v][1])
                    if _it_empty(itvs[v]):
                        return Box.bottom(self.env)
        return Box(self.env, itvs)

    def assign(self, var: str, expr: LinExpr) -> "Box":
        if self.is_bottom:
            return self
        itvs = dict(self.itvs)
        itvs[var] = eval_expr_interval(expr, self.itvs)
        return Box(self.env, itvs)

    def assign_input(self, var: str, lo: int, hi: int) -> "Box":
        if self.is_bottom:
            return self
        itvs = dict(self.itvs)
        itvs[var] = (lo, hi)
        return Box(self.env, itvs)

    def forget(self, var: str) -> "Box":
        if self.is_bottom:
            return self
        itvs = dict(self.itvs)
        itvs[var] = (None, None)
        return Box(self.env, itvs)

    def interval_of(self, var: str) -> tuple:
        return (None, None) if self.is_bottom else self.itvs[var]

    def constraints(self) -> list[Constraint]:
        """Canonical constraint view, <= atoms only, variable order."""
        if self.is_bottom:
            return [Constraint((), "<=", -1)]  # 0 <= -1
        out = []
        for v in self.env:
            lo, hi = self.itvs[v]
            if lo is not None:
                out.append(Constraint(((v, -1),), "<=", -lo))
            if hi is not None:
                out.append(Constraint(((v, 1),), "<=", hi))
        return out

    def contains_point(self, store: dict[str, int]) -> bool:
        if self.is_bottom:
            return False
        return all(c.holds(store) for c in self.constraints())

    def render(self) -> str:
        if self.is_bottom:
            return "bottom"
        parts = []
        for v in self.env:
            lo, hi = self.itvs[v]
            if lo is None and hi is None:
                continue
            lo_s = "-oo" if lo is None else str(lo)
            hi_s = "+oo" if hi is None else str(hi)
            if lo is not None and lo == hi:
                parts.append(f"{v} = {lo}")
            else:
                parts.append(f"{v} in [{lo_s}, {hi_s}]")
        return "top" if not parts else " and ".join(parts)

    def __repr__(self):
        return f"Box({self.render()})"


# ---------------------------------------------------------------------------
# Octagons
# ---------------------------------------------------------------------------
#
# Difference-bound matrix over the 2n signed forms V_{2k} = +x_k,
# V_{2k+1} = -x_k; entry m[i][j] bounds V_j - V_i.  Coherence
# m[i][j] == m[j^1][i^1] is maintained by every update.


def _pos(k):
    return 2 * k


def _neg(k):
    return 2 * k + 1


class Octagon:
    __slots__ = ("env", "mat", "_closed")

    def __init__(self, env: tuple[str, ...], mat):
        self.env = env
        self.mat = mat  # list of lists, or None for bottom
        self._closed = None

    @classmethod
    def top(cls, env) -> "Octagon":
        env = tuple(env)
        n = 2 * len(env)
        mat = [[0 if i == j else INF for j in range(n)] for i in range(n)]
        return cls(env, mat)

    @classmethod
    def bottom(cls, env) -> "Octagon":
        return cls(tuple(env), None)

    @property
    def is_bottom(self) -> bool:
        return self.mat is None or self.closed() is None

    def index(self, var: str) -> int:
        return self.env.index(var)

    def closed(self):
        """Tight integer closure; None when the value is empty."""
        if self.mat is None:
            return None
        if self._closed is not None:
            return self._closed if self._closed is not False else None
        n = len(self.mat)
        m = [row[:] for row in self.mat]
        for k in range(n):
            mk = m[k]
            for i in range(n):
                ik = m[i][k]
                if ik is INF:
                    continue
                mi = m[i]
                for j in range(n):
                    alt = ik + mk[j]
                    if alt < mi[j]:
                        mi[j] = alt
        for i in range(n):
            if m[i][i] < 0:
                self._closed = False
                return None
            m[i][i] = 0
        # integer tightening of the unary bounds, then strengthening
        for i in range(n):
            v = m[i][i ^ 1]
            if v is not INF:
                m[i][i ^ 1] = 2 * (v // 2)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                a = m[i][i ^ 1]
                b = m[j ^ 1][j]
                if a is not INF and b is not INF:
                    alt = a // 2 + b // 2
                    if alt < m[i][j]:
                        m[i][j] = alt
        for i in range(n):
            if m[i][i] < 0:
                self._closed = False
                return None
        self._closed = m
        return m

    def is_top(self) -> bool:
        c = self.closed()
        if c is None:
            return False
        n = len(c)
        return all(c[i][j] is INF for i in range(n) for j in range(n) if i != j)

    def leq(self, other: "Octagon") -> bool:
        a = self.closed()
        if a is None:
            return True
        b = other.closed()
        if b is None:
            return False
        n = len(a)
        return all(a[i][j] <= b[i][j] for i in range(n) for j in range(n))

    def equal(self, other: "Octagon") -> bool:
        return self.leq(other) and other.leq(self)

    def join(self, other: "Octagon") -> "Octagon":
        a = self.closed()
        b = other.closed()
        if a is None:
            return Octagon(self.env, None if b is None else [r[:] for r in b])
        if b is None:
            return Octagon(self.env, [r[:] for r in a])
        n = len(a)
        return Octagon(self.env, [[max(a[i][j], b[i][j]) for j in range(n)] for i in range(n)])

    def meet(self, other: "Octagon") -> "Octagon":
        if self.mat is None or other.mat is None:
            return Octagon.bottom(self.env)
        n = len(self.mat)
        return Octagon(
            self.env,
            [[min(self.mat[i][j], other.mat[i][j]) for j in range(n)] for i in range(n)],
        )

    def widen(self, other: "Octagon") -> "Octagon":
        """Keep stable bounds, drop the rest; result kept unclosed."""
        a = self.closed()
        if a is None:
            b = other.closed()
            return Octagon(self.env, None if b is None else [r[:] for r in b])
        b = other.closed()
        if b is None:
            return Octagon(self.env, [r[:] for r in a])
        n = len(a)
        mat = [[a[i][j] if b[i][j] <= a[i][j] else INF for j in range(n)] for i in range(n)]
        return Octagon(self.env, mat)

    # -- constraint handling ------------------------------------------------

    def _octagonal_rows(self, c: Constraint):
        """Rows (i, j, bound) meaning V_j - V_i <= bound, or None."""
        rows = []
        for coeffs, const in c.to_leq():
            if len(coeffs) == 1:
                (v, cv) = coeffs[0]
                k = self.index(v)
                if cv in (1, 2):
                    bound = 2 * const if cv == 1 else const
                    rows.append((_neg(k), _pos(k), bound))
                elif cv in (-1, -2):
                    bound = 2 * const if cv == -1 else const
                    rows.append((_pos(k), _neg(k), bound))
                else:
                    return None
            elif len(coeffs) == 2:
                (v1, c1), (v2, c2) = coeffs
                if abs(c1) != 1 or abs(c2) != 1:
                    return None
                k1, k2 = self.index(v1), self.index(v2)
                if c1 == 1 and c2 == -1:
                    rows.append((_pos(k2), _pos(k1), const))
                elif c1 == -1 and c2 == 1:
                    rows.append((_pos(k1), _pos(k2), const))
                elif c1 == 1 and c2 == 1:
                    rows.append((_neg(k1), _pos(k2), const))
                else:
                    rows.append((_pos(k1), _neg(k2), const))
            elif len(coeffs) == 0:
                if const < 0:
                    rows.append((0, 0, -1))  # infeasible marker
                continue
            else:
                return None
        return rows

    def _var_itvs(self) -> dict[str, tuple]:
        c = self.closed()
        itvs = {}
        for k, v in enumerate(self.env):
            hi = c[_neg(k)][_pos(k)]
            lo = c[_pos(k)][_neg(k)]
            itvs[v] = (
                None if lo is INF else -(lo // 2),
                None if hi is INF else hi // 2,
            )
        return itvs

    def meet_constraints(self, constraints) -> "Octagon":
        if self.is_bottom:
            return Octagon.bottom(self.env)
        m = [r[:] for r in self.closed()]
        box_fallback: list[Constraint] = []
        for c in constraints:
            if c.op == "!=":
                continue
            rows = self._octagonal_rows(c)
            if rows is None:
                box_fallback.append(c)
                continue
            for i, j, bound in rows:
                if i == j:
                    if bound < 0:
                        return Octagon.bottom(self.env)
                    continue
                if bound < m[i][j]:
                    m[i][j] = bound
                    m[j ^ 1][i ^ 1] = bound
        if box_fallback:
            # derive unary bounds through interval propagation
            box = Box(self.env, self._var_itvs()).meet_constraints(box_fallback)
            if box.is_bottom:
                return Octagon.bottom(self.env)
            for k, v in enumerate(self.env):
                lo, hi = box.itvs[v]
                if hi is not None and 2 * hi < m[_neg(k)][_pos(k)]:
                    m[_neg(k)][_pos(k)] = 2 * hi
                if lo is not None and -2 * lo < m[_pos(k)][_neg(k)]:
                    m[_pos(k)][_neg(k)] = -2 * lo
        return Octagon(self.env, m)

    def forget(self, var: str) -> "Octagon":
        if self.is_bottom:
            return Octagon.bottom(self.env)
        m = [r[:] for r in self.closed()]
        k = self.index(var)
        n = len(m)
        for idx in (_pos(k), _neg(k)):
            for j in range(n):
                if j != idx:
                    m[idx][j] = INF
                    m[j][idx] = INF
        m[_pos(k)][_neg(k)] = INF
        m[_neg(k)][_pos(k)] = INF
        return Octagon(self.env, m)

    def assign(self, var: str, expr: LinExpr) -> "Octagon":
        if self.is_bottom:
            return Octagon.bottom(self.env)
        coeffs = expr.coeff_map()
        k = self.index(var)
        # x := x + c, exact shift
        if set(coeffs) == {var} and coeffs[var] == 1:
            c = expr.const
            m = [r[:] for r in self.closed()]
            n = len(m)
            for j in range(n):
                if j in (_pos(k), _neg(k)):
                    continue
                if m[_pos(k)][j] is not INF:
                    m[_pos(k)][j] -= c
                if m[j][_pos(k)] is not INF:
                    m[j][_pos(k)] += c
                if m[_neg(k)][j] is not INF:
                    m[_neg(k)][j] += c
                if m[j][_neg(k)] is not INF:
                    m[j][_neg(k)] -= c
            if m[_neg(k)][_pos(k)] is not INF:
                m[_neg(k)][_pos(k)] += 2 * c
            if m[_pos(k)][_neg(k)] is not INF:
                m[_pos(k)][_neg(k)] -= 2 * c
            return Octagon(self.env, m)
        # x := +-y + c with y distinct from x, exact relational assignment
        if len(coeffs) == 1:
            (y, cy) = next(iter(coeffs.items()))
            if y != var and cy in (1, -1):
                out = self.forget(var)
                d = expr.const
                rows = []
                if cy == 1:  # x - y = d
                    rows.append(Constraint(((var, 1), (y, -1)), "==", d))
                else:  # x + y = d
                    rows.append(Constraint(((var, 1), (y, 1)), "==", d))
                return out.meet_constraints(rows)
        if not coeffs:  # constant
            out = self.forget(var)
            return out.meet_constraints([Constraint(((var, 1),), "==", expr.const)])
        # general linear: forget then constrain with the interval of the rhs
        bounds = eval_expr_interval(expr, self._var_itvs())
        out = self.forget(var)
        rows = []
        if bounds[0] is not None:
            rows.append(Constraint(((var, -1),), "<=", -bounds[0]))
        if bounds[1] is not None:
            rows.append(Constraint(((var, 1),), "<=", bounds[1]))
        return out.meet_constraints(rows) if rows else out

    def assign_input(self, var: str, lo: int, hi: int) -> "Octagon":
        if self.is_bottom:
            return Octagon.bottom(self.env)
        out = self.forget(var)
        return out.meet_constraints(
            [
                Constraint(((var, -1),), "<=", -lo),
                Constraint(((var, 1),), "<=", hi),
            ]
        )

    def interval_of(self, var: str) -> tuple:
        if self.is_bottom:
            return (None, None)
        return self._var_itvs()[var]

    def constraints(self) -> list[Constraint]:
        """Canonical constraint view from the closed matrix, <= atoms."""
        if self.is_bottom:
            return [Constraint((), "<=", -1)]
        m = self.closed()
        out = []
        for k, v in enumerate(self.env):
            hi = m[_neg(k)][_pos(k)]
            lo = m[_pos(k)][_neg(k)]
            if lo is not INF:
                out.append(Constraint(((v, -1),), "<=", lo // 2))
            if hi is not INF:
                out.append(Constraint(((v, 1),), "<=", hi // 2))
        for k1 in range(len(self.env)):
            for k2 in range(k1 + 1, len(self.env)):
                v1, v2 = self.env[k1], self.env[k2]
                pairs = [
                    ((_pos(k1), _pos(k2)), ((v2, 1), (v1, -1))),  # v2 - v1
                    ((_pos(k2), _pos(k1)), ((v1, 1), (v2, -1))),  # v1 - v2
                    ((_neg(k1), _pos(k2)), ((v1, 1), (v2, 1))),  # v1 + v2
                    ((_pos(k1), _neg(k2)), ((v1, -1), (v2, -1))),  # -v1 - v2
                ]
                for (i, j), coeffs in pairs:
                    if m[i][j] is not INF:
                        ordered = tuple(sorted(coeffs))
                        out.append(Constraint(ordered, "<=", m[i][j]))
        return out

    def contains_point(self, store: dict[str, int]) -> bool:
        if self.is_bottom:
            return False
        return all(c.holds(store) for c in self.constraints())

    def render(self) -> str:
        if self.is_bottom:
            return "bottom"
        cs = [c for c in self.constraints() if not self._redundant_binary(c)]
        if not cs:
            return "top"
        return " and ".join(self._render_constraint(c) for c in self._merge_unary(cs))

    def _redundant_binary(self, c: Constraint) -> bool:
        # hide binary bounds already implied by the unary intervals
        if len(c.coeffs) != 2:
            return False
        itvs = self._var_itvs()
        bound = eval_expr_interval(LinExpr(c.coeffs, 0), itvs)[1]
        return bound is not None and bound <= c.const

    @staticmethod
    def _merge_unary(cs: list[Constraint]):
        return cs

    @staticmethod
    def _render_constraint(c: Constraint) -> str:
        return str(c)

    def __repr__(self):
        return f"Octagon({self.render()})"


DOMAINS = {"intervals": Box, "octagons": Octagon}


# ---------------------------------------------------------------------------
# Transformers
# ---------------------------------------------------------------------------


def transform_edge(value, edge):
    v = value.meet_constraints(edge.guard)
    for act in edge.actions:
        if v.is_bottom:
            return v
        if isinstance(act, AssignAction):
            v = v.assign(act.var, act.expr)
        elif isinstance(act, InputAction):
            v = v.assign_input(act.var, act.lo, act.hi)
    return v


def transform_path(value, edges):
    """Abstract image of value through a sequence of edges."""
    v = value
    for e in edges:
        if v.is_bottom:
            return v
        v = transform_edge(v, e)
    return v
