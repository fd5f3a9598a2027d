"""Self-avoiding walks and trails, their canonical forms and orbit partitions."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from .exceptions import BudgetExceededError, LatticeError
from .lattice import LatticeSpec, Vec, _rule_index

DEFAULT_MAX_WALKS = 10_000_000


class Mode(str, enum.Enum):
    SAW = "saw"
    SAT = "sat"

    @classmethod
    def coerce(cls, value: "Mode | str") -> "Mode":
        try:
            return cls(str(value.value if isinstance(value, Mode) else value).lower())
        except ValueError:
            raise ValueError(f"mode must be 'saw' or 'sat', got {value!r}") from None


class WalkKey(NamedTuple):
    start_class: int
    offsets: tuple[int, ...]


@dataclass(frozen=True)
class Walk:
    start_class: int
    start: Vec
    steps: tuple[tuple[Vec, int], ...]

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def vertices(self) -> list[Vec]:
        out = [self.start]
        cur = self.start
        for offset, _ in self.steps:
            cur = tuple(a + b for a, b in zip(cur, offset))
            out.append(cur)
        return out

    def key(self) -> WalkKey:
        return WalkKey(self.start_class, tuple(c for off, _ in self.steps for c in off))


def edge_id(u: Vec, v: Vec) -> tuple[Vec, Vec]:
    """Undirected edge identity: ordered pair of endpoints."""
    return (u, v) if u <= v else (v, u)


def is_valid_walk(lattice: LatticeSpec, walk: Walk, mode: Mode | str) -> bool:
    mode = Mode.coerce(mode)
    if walk.start != lattice.representatives[walk.start_class]:
        return False
    cls = walk.start_class
    for offset, edge_class in walk.steps:
        if lattice.edge_class_of(cls, offset) != edge_class:
            return False
        cls = lattice.step_targets[cls][_rule_index(lattice, cls, offset)]
    verts = walk.vertices()
    if mode is Mode.SAW:
        return len(set(verts)) == len(verts)
    edges = [edge_id(a, b) for a, b in zip(verts, verts[1:])]
    return len(set(edges)) == len(edges)


def walk_from_key(lattice: LatticeSpec, key: WalkKey) -> Walk:
    D = lattice.dim
    cls = key.start_class
    steps = []
    for i in range(0, len(key.offsets), D):
        off = tuple(key.offsets[i:i + D])
        ec = lattice.edge_class_of(cls, off)
        if ec is None:
            raise LatticeError(f"key step {off} is not a step from class {cls}")
        steps.append((off, ec))
        cls = lattice.step_targets[cls][_rule_index(lattice, cls, off)]
    return Walk(key.start_class, lattice.representatives[key.start_class], tuple(steps))


def enumerate_walks(
    lattice: LatticeSpec,
    m: int,
    mode: Mode | str = Mode.SAW,
    *,
    start_classes: Sequence[int] | None = None,
    max_walks: int = DEFAULT_MAX_WALKS,
) -> list[Walk]:
    """All m-step walks of the given kind from each class representative.

    Walks are grown one step at a time (breadth first) in step-rule
    declaration order, so the output order is deterministic.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    mode = Mode.coerce(mode)
    classes = range(lattice.n_vertex_classes) if start_classes is None else start_classes
    rules = [vc.steps for vc in lattice.vertex_classes]
    targets = lattice.step_targets
    out: list[Walk] = []
    for k in classes:
        rep = lattice.representatives[k]
        # (steps, current vertex, current class, occupied vertices or edges)
        frontier = [((), rep, k, frozenset([rep]) if mode is Mode.SAW else frozenset())]
        for _ in range(m):
            nxt = []
            for steps, cur, cls, used in frontier:
                for j, rule in enumerate(rules[cls]):
                    v = tuple(a + b for a, b in zip(cur, rule.offset))
                    token = v if mode is Mode.SAW else edge_id(cur, v)
                    if token in used:
                        continue
                    nxt.append((steps + ((rule.offset, rule.edge_class),), v, targets[cls][j], used | {token}))
            if len(nxt) + len(out) > max_walks:
                raise BudgetExceededError(f"more than {max_walks} walks of length <= {m}")
            frontier = nxt
        out.extend(Walk(k, rep, steps) for steps, _, _, _ in frontier)
    return out


class Canonicalizer:
    """Cached canonical keys of walks under a lattice's symmetry list."""

    def __init__(self, lattice: LatticeSpec):
        self.lattice = lattice
        D = lattice.dim
        self._maps = [
            (lattice.symmetry_class_map[i], sym.linear)
            for i, sym in enumerate(lattice.symmetries)
        ]
        self._dim = D
        self._cache: dict[WalkKey, WalkKey] = {}

    def __call__(self, key: WalkKey) -> WalkKey:
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        D = self._dim
        offs = key.offsets
        chunks = [offs[i:i + D] for i in range(0, len(offs), D)]
        best = key
        for class_map, lin in self._maps:
            mapped = tuple(
                sum(row[j] * ch[j] for j in range(D)) for ch in chunks for row in lin
            )
            cand = WalkKey(class_map[key.start_class], mapped)
            if cand < best:
                best = cand
        self._cache[key] = best
        return best


def canonical_key(lattice: LatticeSpec, walk: Walk) -> WalkKey:
    """Lexicographically smallest key over all symmetry images of ``walk``."""
    if not lattice.symmetries:
        return walk.key()
    return Canonicalizer(lattice)(walk.key())


@dataclass(frozen=True)
class PartitionClass:
    representative: Walk
    size: int
    weight: tuple[int, ...]


@dataclass(frozen=True)
class Partition:
    m: int
    mode: Mode
    classes: tuple[PartitionClass, ...]

    @property
    def t(self) -> int:
        return len(self.classes)

    @cached_property
    def index(self) -> dict[WalkKey, int]:
        return {c.representative.key(): i for i, c in enumerate(self.classes)}

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.classes)


def partition_walks(
    lattice: LatticeSpec,
    m: int,
    mode: Mode | str = Mode.SAW,
    *,
    max_walks: int = DEFAULT_MAX_WALKS,
) -> Partition:
    """Group the m-step walks into symmetry orbits, ordered by canonical key.

    For m = 0 every vertex class is its own block, even where a symmetry
    exchanges vertex classes.
    """
    mode = Mode.coerce(mode)
    walks = enumerate_walks(lattice, m, mode, max_walks=max_walks)
    if m == 0:
        d = lattice.n_edge_classes
        classes = tuple(PartitionClass(w, 1, (0,) * d) for w in walks)
        return Partition(0, mode, classes)
    canon = Canonicalizer(lattice)
    sizes = Counter(canon(w.key()) for w in walks)
    classes = []
    for key in sorted(sizes):
        rep = walk_from_key(lattice, key)
        classes.append(PartitionClass(rep, sizes[key], weight_exponents(rep, lattice.n_edge_classes)))
    return Partition(m, mode, tuple(classes))


def weight_exponents(walk: Walk, d: int | None = None) -> tuple[int, ...]:
    """Number of steps in each edge class.

    ``d`` defaults to one more than the largest class used, so pass it
    explicitly for walks that may skip trailing classes (or are empty).
    """
    if d is None:
        d = 1 + max((ec for _, ec in walk.steps), default=-1)
    counts = [0] * d
    for _, ec in walk.steps:
        counts[ec] += 1
    return tuple(counts)


def monomial_value(exponents: Sequence[int], z: Sequence[float]) -> float:
    return math.prod(zi ** e for zi, e in zip(z, exponents))


def weighted_count(
    lattice: LatticeSpec,
    n: int,
    k: int,
    mode: Mode | str,
    z: Sequence[float],
    *,
    max_walks: int = DEFAULT_MAX_WALKS,
) -> float:
    """Sum of weights of all n-step walks from the representative of class k."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(z) != lattice.n_edge_classes or any(zi <= 0 for zi in z):
        raise ValueError("z must be a strictly positive vector with one entry per edge class")
    d = lattice.n_edge_classes
    walks = enumerate_walks(lattice, n, mode, start_classes=[k], max_walks=max_walks)
    return math.fsum(monomial_value(weight_exponents(w, d), z) for w in walks)


def count_by_weight(
    lattice: LatticeSpec,
    n_max: int,
    k: int,
    mode: Mode | str,
    *,
    min_counts: Sequence[int] | None = None,
    max_walks: int = DEFAULT_MAX_WALKS,
) -> list[Counter]:
    """Exponent-vector histograms of the walks from class k of each length 0..n_max.

    Walks are counted, not stored.  ``min_counts`` keeps only walks with at
    least that many steps in each edge class.
    """
    mode = Mode.coerce(mode)
    d = lattice.n_edge_classes
    rules = [vc.steps for vc in lattice.vertex_classes]
    targets = lattice.step_targets
    hist = [Counter() for _ in range(n_max + 1)]
    rep = lattice.representatives[k]
    used: set = {rep} if mode is Mode.SAW else set()
    exps = [0] * d
    work = 0

    def record(depth: int) -> None:
        if min_counts is None or all(e >= lo for e, lo in zip(exps, min_counts)):
            hist[depth][tuple(exps)] += 1

    record(0)
    # frames: (vertex, class, next rule index, token, edge class of the step in)
    stack = [(rep, k, 0, None, -1)]
    while stack:
        cur, cls, j, token, ec_in = stack[-1]
        depth = len(stack) - 1
        if depth == n_max or j == len(rules[cls]):
            stack.pop()
            if token is not None:
                used.discard(token)
                exps[ec_in] -= 1
            continue
        stack[-1] = (cur, cls, j + 1, token, ec_in)
        rule = rules[cls][j]
        v = tuple(a + b for a, b in zip(cur, rule.offset))
        tok = v if mode is Mode.SAW else edge_id(cur, v)
        if tok in used:
            continue
        work += 1
        if work > max_walks:
            raise BudgetExceededError(f"more than {max_walks} walks explored")
        used.add(tok)
        exps[rule.edge_class] += 1
        stack.append((v, targets[cls][j], 0, tok, rule.edge_class))
        record(depth + 1)
    return hist



def dump_walks(walks: Iterable[Walk]) -> str:
    """One line per walk: start class, then ``offset...,edgeclass`` per step."""
    lines = []
    for w in walks:
        parts = [str(w.start_class)]
        parts += [",".join(map(str, (*off, ec))) for off, ec in w.steps]
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_walks(lattice: LatticeSpec, text: str) -> list[Walk]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        head, *rest = line.split()
        k = int(head)
        steps = []
        for tok in rest:
            vals = tuple(int(v) for v in tok.split(","))
            steps.append((vals[:-1], vals[-1]))
        out.append(Walk(k, lattice.representatives[k], tuple(steps)))
    return out
