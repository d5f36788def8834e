"""Projected CNF encoding of the unsafe property, DIMACS I/O, and exact counting.

For an instance whose edges all fail with probability 1/2 the formula is

    F_K = exists S . (OR_{j in K} s_j) & (OR_{k in K} ~s_k) & AND_e C_e
    C_e = (~s_u | ~x_e | s_v) & (~s_v | ~x_e | s_u)

over edge variables X (projected) and vertex variables S. An edge-state
vector X extends to a model exactly when K is disconnected under X, so the
projected count divided by 2^M is the unreliability.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractViolation, InvalidArgument, ResourceLimitError
from .transform import UnweightedInstance

DEFAULT_COUNT_LIMIT = 24
IND_PER_LINE = 10


@dataclass(frozen=True)
class ProjectedCnf:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    projection: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        object.__setattr__(self, "projection", tuple(sorted(self.projection)))
        for c in self.clauses:
            if not c:
                raise InvalidArgument("empty clause")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise InvalidArgument(f"literal {lit} out of range 1..{self.num_vars}")
            if any(-lit in c for lit in c):
                raise InvalidArgument(f"tautological clause {c}")
        if len(set(self.projection)) != len(self.projection):
            raise InvalidArgument("duplicate projection variables")
        if any(not 1 <= v <= self.num_vars for v in self.projection):
            raise InvalidArgument("projection variable out of range")

    @property
    def M(self) -> int:
        return len(self.projection)


@dataclass(frozen=True)
class VarMap:
    """Edge variables 1..M in edge order, then vertex variables in vertex order."""

    M: int
    vertex_ids: dict

    def edge(self, i: int) -> int:
        return i + 1

    def vertex(self, name) -> int:
        return self.vertex_ids[name]


def var_map(uw: UnweightedInstance) -> VarMap:
    g = uw.instance
    return VarMap(g.m, {v: g.m + 1 + i for i, v in enumerate(g.vertices)})


def encode(uw: UnweightedInstance) -> ProjectedCnf:
    g = uw.instance
    if not g.is_uniform_half():
        raise InvalidArgument("encode needs an unweighted instance (every p_e = 1/2)")
    if len(g.terminals) < 2:
        raise InvalidArgument("at least two terminals are required")
    vm = var_map(uw)
    clauses = [tuple(vm.vertex(t) for t in g.terminals),
               tuple(-vm.vertex(t) for t in g.terminals)]
    for i, e in enumerate(g.edges):
        x, su, sv = vm.edge(i), vm.vertex(e.u), vm.vertex(e.v)
        clauses.append((-su, -x, sv))
        clauses.append((-sv, -x, su))
    return ProjectedCnf(g.m + g.n, clauses, range(1, g.m + 1))


def count_to_unreliability(count: int, M: int) -> Fraction:
    if M < 1:
        raise InvalidArgument(f"M must be positive, got {M}")
    if not 0 <= count <= 1 << M:
        raise ContractViolation(f"count {count} is outside [0, 2^{M}]")
    return Fraction(count, 1 << M)


# -- DIMACS -------------------------------------------------------------------

def emit_dimacs(cnf: ProjectedCnf) -> str:
    lines = []
    proj = list(cnf.projection)
    for start in range(0, len(proj), IND_PER_LINE):
        chunk = proj[start:start + IND_PER_LINE]
        lines.append("c ind " + " ".join(map(str, chunk)) + " 0")
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    lines += [" ".join(map(str, c)) + " 0" for c in cnf.clauses]
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> ProjectedCnf:
    header = None
    projection: list[int] = []
    clauses = []
    pending: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) >= 2 and parts[1] == "ind":
                try:
                    ids = [int(t) for t in parts[2:]]
                except ValueError:
                    raise InvalidArgument(f"line {lineno}: bad 'c ind' line") from None
                if not ids or ids[-1] != 0:
                    raise InvalidArgument(f"line {lineno}: 'c ind' line must end in 0")
                projection += ids[:-1]
            continue
        if line.startswith("p"):
            m = re.match(r"^p\s+cnf\s+(\d+)\s+(\d+)$", line)
            if not m or header is not None:
                raise InvalidArgument(f"line {lineno}: bad problem line")
            header = int(m.group(1)), int(m.group(2))
            continue
        if header is None:
            raise InvalidArgument(f"line {lineno}: clause before 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise InvalidArgument(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
    if header is None:
        raise InvalidArgument("missing 'p cnf' header")
    if pending:
        raise InvalidArgument("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise InvalidArgument(f"header declares {header[1]} clauses, found {len(clauses)}")
    return ProjectedCnf(header[0], clauses, projection)


# -- exact projected counting -------------------------------------------------
#
# Clauses are frozensets of integer literals. A partial assignment is applied
# by dropping satisfied clauses and falsified literals. Nothing here looks at
# the graph the formula came from.

def _simplify(clauses, true_lits):
    out = set()
    for c in clauses:
        if not c.isdisjoint(true_lits):
            continue
        reduced = frozenset(lit for lit in c if -lit not in true_lits)
        if not reduced:
            return None
        out.add(reduced)
    return out


def _propagate(clauses):
    """Unit propagation to fixpoint. Returns (clauses, forced literals) or None."""
    forced = set()
    while True:
        units = {next(iter(c)) for c in clauses if len(c) == 1}
        if not units:
            return clauses, forced
        if any(-lit in units for lit in units):
            return None
        forced |= units
        clauses = _simplify(clauses, units)
        if clauses is None:
            return None


def _satisfiable(clauses) -> bool:
    """Small DPLL: unit propagation plus branching on the most frequent variable."""
    res = _propagate(clauses)
    if res is None:
        return False
    clauses, _ = res
    if not clauses:
        return True
    freq: dict[int, int] = {}
    for c in clauses:
        for lit in c:
            freq[abs(lit)] = freq.get(abs(lit), 0) + 1
    var = max(freq, key=lambda v: (freq[v], -v))
    for lit in (var, -var):
        nxt = _simplify(clauses, {lit})
        if nxt is not None and _satisfiable(nxt):
            return True
    return False


def _drop_subsumed(clauses):
    """Remove clauses that strictly contain another clause (short clauses only)."""
    out = set(clauses)
    for c in clauses:
        if len(c) < 2 or len(c) > 4:
            continue
        for r in range(1, len(c)):
            if any(frozenset(sub) in out for sub in itertools.combinations(c, r)):
                out.discard(c)
                break
    return out


def _merge_equivalences(clauses, projection):
    """Substitute variables proven equivalent by binary clause pairs.

    Clauses {p, q} and {-p, -q} together force p == -q. Each equivalence class
    is rewritten onto one representative: its projected variable if it has
    one, else its smallest variable. Classes that would hold two projected
    variables are left alone. Returns None on a contradiction.
    """
    parent: dict[int, tuple[int, int]] = {}

    def find(v):
        parity = 0
        path = []
        while v in parent:
            path.append(v)
            v, bit = parent[v]
            parity ^= bit
        # path compression: recompute parities from the root downwards
        acc = parity
        for w in path:
            _, bit = parent[w]
            parent[w] = (v, acc)
            acc ^= bit
        return v, parity

    changed = False
    for c in clauses:
        if len(c) != 2:
            continue
        p, q = c
        if frozenset((-p, -q)) not in clauses:
            continue
        a, b = abs(p), abs(q)
        rel = 1 ^ (p < 0) ^ (q < 0)  # value(a) xor value(b)
        ra, pa = find(a)
        rb, pb = find(b)
        if ra == rb:
            if pa ^ pb != rel:
                return None
            continue
        a_proj, b_proj = ra in projection, rb in projection
        if a_proj and b_proj:
            continue
        if b_proj or (not a_proj and rb < ra):
            ra, rb, pa, pb = rb, ra, pb, pa
        parent[rb] = (ra, pa ^ pb ^ rel)
        changed = True
    if not changed:
        return clauses

    def image(lit):
        root, parity = find(abs(lit))
        sign = -1 if (lit < 0) ^ parity else 1
        return sign * root

    out = set()
    for c in clauses:
        mapped = frozenset(image(lit) for lit in c)
        if any(-lit in mapped for lit in mapped):
            continue
        out.add(mapped)
    return out


def _components(clauses):
    """Split clauses into groups with pairwise disjoint variable sets."""
    parent: dict[int, int] = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for c in clauses:
        vs = [abs(lit) for lit in c]
        root = find(vs[0])
        for v in vs[1:]:
            r = find(v)
            if r != root:
                parent[r] = root
    groups: dict[int, list] = {}
    for c in clauses:
        groups.setdefault(find(abs(next(iter(c)))), []).append(c)
    return [frozenset(g) for g in groups.values()]


class _ProjectedCounter:
    """DPLL-style #exists-SAT with component caching.

    Decisions are taken on projected variables only. Each residual formula is
    pruned two ways before branching: if it is unsatisfiable no completion
    counts; if it stays satisfiable with every unassigned projected literal
    deleted, every completion counts.
    """

    def __init__(self, projection):
        self.projection = frozenset(projection)
        self.cache: dict[frozenset, int] = {}
        self.nodes = 0

    def count(self, clauses, free_proj) -> int:
        """Projected models of ``clauses`` over the unassigned set ``free_proj``."""
        while True:
            res = _propagate(clauses)
            if res is None:
                return 0
            clauses, forced = res
            free_proj = free_proj - {abs(lit) for lit in forced}
            merged = _merge_equivalences(clauses, self.projection)
            if merged is None:
                return 0
            if merged is clauses:
                break
            clauses = merged
        clauses = _drop_subsumed(clauses)
        used = {abs(lit) for c in clauses for lit in c}
        loose = free_proj - used
        total = 1 << len(loose)
        for comp in _components(clauses):
            sub = self._component(comp)
            if sub == 0:
                return 0
            total *= sub
        return total

    def _component(self, comp) -> int:
        if comp in self.cache:
            return self.cache[comp]
        self.nodes += 1
        # assigned variables never survive simplification
        free_proj = self.projection & {abs(lit) for c in comp for lit in c}
        if not free_proj:
            result = int(_satisfiable(set(comp)))
        elif not _satisfiable(set(comp)):
            result = 0
        elif self._valid_for_all(comp, free_proj):
            result = 1 << len(free_proj)
        else:
            freq: dict[int, int] = {}
            for c in comp:
                for lit in c:
                    if abs(lit) in free_proj:
                        freq[abs(lit)] = freq.get(abs(lit), 0) + 1
            var = max(freq, key=lambda v: (freq[v], -v))
            rest = free_proj - {var}
            result = 0
            for lit in (var, -var):
                nxt = _simplify(comp, {lit})
                if nxt is not None:
                    result += self.count(nxt, rest)
        self.cache[comp] = result
        return result

    @staticmethod
    def _valid_for_all(comp, free_proj) -> bool:
        stripped = set()
        for c in comp:
            reduced = frozenset(lit for lit in c if abs(lit) not in free_proj)
            if not reduced:
                return False
            stripped.add(reduced)
        return _satisfiable(stripped)


def exact_projected_count(cnf: ProjectedCnf, limit: int = DEFAULT_COUNT_LIMIT,
                          method: str = "search") -> int:
    """|{X : exists S . psi(X, S)}| computed exactly.

    ``method="search"`` runs the pruned, component-caching search;
    ``method="enumerate"`` visits all 2^M projected assignments and solves each
    residual formula, which is only practical for small M.
    """
    if cnf.M > limit:
        raise ResourceLimitError(
            f"projected counting over {cnf.M} variables exceeds the limit of {limit}; "
            "use an external counter (--counter-cmd)")
    clauses = {frozenset(c) for c in cnf.clauses}
    if method == "search":
        return _ProjectedCounter(cnf.projection).count(clauses, frozenset(cnf.projection))
    if method == "enumerate":
        proj = cnf.projection
        total = 0
        for values in itertools.product((False, True), repeat=len(proj)):
            lits = {v if val else -v for v, val in zip(proj, values)}
            residual = _simplify(clauses, lits)
            if residual is not None and _satisfiable(residual):
                total += 1
        return total
    raise InvalidArgument(f"unknown counting method {method!r}")
