"""Symbolic transfer matrices between symmetry classes of m-step walks.

Entry (r, s) of the (m, n) matrix sums, over all n-step walks that begin
with the canonical member of class r and whose last m steps form a
translate of a member of class s, the weight of the whole walk divided by
the weight of the class-r prefix.  Every entry is a homogeneous
polynomial of degree n - m with nonnegative integer coefficients.
"""

from __future__ import annotations

import hashlib
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import BudgetExceededError, MatrixFileError
from .lattice import LatticeSpec
from .poly import Poly, format_poly, parse_poly, poly_div_monomial
from .walks import (
    DEFAULT_MAX_WALKS,
    Canonicalizer,
    Mode,
    Partition,
    PartitionClass,
    Walk,
    WalkKey,
    dump_walks,
    edge_id,
    partition_walks,
)

FORMAT_VERSION = 1
MAGIC = "sawbound-gmatrix"
DEFAULT_MAX_EXTENSIONS = 10**9


@dataclass(frozen=True)
class GMatrix:
    lattice_name: str
    scheme: str
    mode: Mode
    m: int
    n: int
    labels: tuple[str, ...]
    partition: Partition
    entries: tuple[tuple[Poly, ...], ...]

    @property
    def t(self) -> int:
        return len(self.entries)

    @property
    def d(self) -> int:
        return len(self.labels)

    @property
    def block(self) -> int:
        """Number of steps added per matrix factor, n - m."""
        return self.n - self.m

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GMatrix):
            return NotImplemented
        return (
            (self.lattice_name, self.scheme, self.mode, self.m, self.n, self.labels, self.entries)
            == (other.lattice_name, other.scheme, other.mode, other.m, other.n, other.labels, other.entries)
            and self.partition.classes == other.partition.classes
        )

    __hash__ = None  # type: ignore[assignment]

    @cached_property
    def _compiled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        flat, coef, exps = [], [], []
        for r, row in enumerate(self.entries):
            for s, p in enumerate(row):
                for e, c in p.terms:
                    flat.append(r * self.t + s)
                    coef.append(float(c))
                    exps.append(e)
        return (
            np.array(flat, dtype=np.intp),
            np.array(coef, dtype=float),
            np.array(exps, dtype=float).reshape(len(coef), self.d),
        )

    @cached_property
    def max_terms(self) -> int:
        return max((len(p) for row in self.entries for p in row), default=0)

    def evaluate(self, z: Sequence[float]) -> np.ndarray:
        """Numeric matrix at a positive weight vector."""
        return self.evaluate_many(np.asarray(z, dtype=float).reshape(1, -1))[0]

    def evaluate_many(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != self.d:
            raise ValueError(f"expected weight vectors of length {self.d}")
        flat, coef, exps = self._compiled
        vals = coef * np.prod(Z[:, None, :] ** exps[None, :, :], axis=2)
        out = np.zeros((Z.shape[0], self.t * self.t))
        # accumulate term by term in canonical order
        for i, f in enumerate(flat):
            out[:, f] += vals[:, i]
        return out.reshape(Z.shape[0], self.t, self.t)


def _row_accumulate(
    lattice: LatticeSpec,
    mode: Mode,
    m: int,
    n: int,
    rep: Walk,
    index: dict[WalkKey, int],
    max_extensions: int,
) -> tuple[Counter, int]:
    """Depth-first extension of one class representative to n steps.

    Returns counts keyed by (tail class, full exponent vector) and the
    number of extension steps explored.
    """
    D = lattice.dim
    d = lattice.n_edge_classes
    rules = [vc.steps for vc in lattice.vertex_classes]
    targets = lattice.step_targets
    canon = Canonicalizer(lattice)
    tail_cache: dict[WalkKey, int] = {}

    verts = rep.vertices()
    offsets: list[int] = [c for off, _ in rep.steps for c in off]
    class_hist = [rep.start_class]
    cls = rep.start_class
    for off, _ in rep.steps:
        cls = targets[cls][[r.offset for r in rules[cls]].index(off)]
        class_hist.append(cls)
    exps = [0] * d
    for _, ec in rep.steps:
        exps[ec] += 1
    if mode is Mode.SAW:
        used = set(verts)
    else:
        used = {edge_id(a, b) for a, b in zip(verts, verts[1:])}
    tokens: list = []
    edge_classes: list[int] = []

    acc: Counter = Counter()
    explored = 0
    tail_start = n - m
    stack = [(verts[-1], class_hist[-1], 0)]
    while stack:
        cur, cls, j = stack[-1]
        if j == len(rules[cls]):
            stack.pop()
            if stack:
                used.discard(tokens.pop())
                exps[edge_classes.pop()] -= 1
                del offsets[-D:]
                class_hist.pop()
            continue
        stack[-1] = (cur, cls, j + 1)
        rule = rules[cls][j]
        v = tuple(a + b for a, b in zip(cur, rule.offset))
        tok = v if mode is Mode.SAW else edge_id(cur, v)
        if tok in used:
            continue
        explored += 1
        if explored > max_extensions:
            raise BudgetExceededError(f"more than {max_extensions} extensions explored")
        nxt_cls = targets[cls][j]
        if m + len(stack) == n:
            if m == 0:
                s = nxt_cls
            else:
                tail = tuple(offsets[tail_start * D:]) + rule.offset
                raw = WalkKey(class_hist[tail_start], tail)
                s = tail_cache.get(raw)
                if s is None:
                    s = index[canon(raw)]
                    tail_cache[raw] = s
            exps[rule.edge_class] += 1
            acc[(s, tuple(exps))] += 1
            exps[rule.edge_class] -= 1
            continue
        used.add(tok)
        tokens.append(tok)
        edge_classes.append(rule.edge_class)
        exps[rule.edge_class] += 1
        offsets.extend(rule.offset)
        class_hist.append(nxt_cls)
        stack.append((v, nxt_cls, 0))
    return acc, explored


def build_gmatrix(
    lattice: LatticeSpec,
    m: int,
    n: int,
    mode: Mode | str = Mode.SAW,
    *,
    max_extensions: int = DEFAULT_MAX_EXTENSIONS,
    max_walks: int = DEFAULT_MAX_WALKS,
    workers: int | None = 1,
) -> GMatrix:
    """Build the symbolic (m, n) transfer matrix.

    ``workers`` > 1 builds rows in separate processes; the result does not
    depend on scheduling.  ``max_extensions`` caps the depth-first search
    (per row when rows run in parallel).
    """
    if not 0 <= m < n:
        raise ValueError(f"need 0 <= m < n, got m={m}, n={n}")
    mode = Mode.coerce(mode)
    partition = partition_walks(lattice, m, mode, max_walks=max_walks)
    if partition.t == 0:
        raise ValueError("partition is empty")
    index = partition.index
    reps = [c.representative for c in partition.classes]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(reps) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(reps))) as pool:
            futures = [
                pool.submit(_row_accumulate, lattice, mode, m, n, rep, index, max_extensions)
                for rep in reps
            ]
            results = [f.result() for f in futures]
    else:
        results = []
        remaining = max_extensions
        for rep in reps:
            acc, used = _row_accumulate(lattice, mode, m, n, rep, index, remaining)
            remaining -= used
            results.append((acc, used))

    d = lattice.n_edge_classes
    t = partition.t
    rows = []
    for cls, (acc, _) in zip(partition.classes, results):
        buckets: list[list] = [[] for _ in range(t)]
        for (s, exps), count in acc.items():
            buckets[s].append((exps, count))
        rows.append(tuple(poly_div_monomial(Poly(d, b), cls.weight) for b in buckets))
    return GMatrix(
        lattice_name=lattice.name,
        scheme=lattice.scheme,
        mode=mode,
        m=m,
        n=n,
        labels=lattice.edge_class_labels,
        partition=partition,
        entries=tuple(rows),
    )


def matrix_info(g: GMatrix) -> dict:
    pattern = ["".join("1" if p else "0" for p in row) for row in g.entries]
    degrees = sorted({deg for row in g.entries for p in row for deg in p.degrees()})
    return {
        "lattice": g.lattice_name,
        "scheme": g.scheme,
        "mode": g.mode.value,
        "m": g.m,
        "n": g.n,
        "t": g.t,
        "labels": list(g.labels),
        "pattern": pattern,
        "nonzero": sum(row.count("1") for row in pattern),
        "degrees": degrees,
        "class_sizes": list(g.partition.sizes),
        "terms": sum(len(p) for row in g.entries for p in row),
    }


# -- persistence -----------------------------------------------------------

def dumps_gmatrix(g: GMatrix) -> str:
    lines = [
        MAGIC,
        f"format_version: {FORMAT_VERSION}",
        f"lattice: {g.lattice_name}",
        f"scheme: {g.scheme}",
        f"mode: {g.mode.value}",
        f"m: {g.m}",
        f"n: {g.n}",
        f"d: {g.d}",
        f"t: {g.t}",
        "labels: " + " ".join(g.labels),
        "partition:",
    ]
    for c in g.partition.classes:
        walk_text = dump_walks([c.representative]).strip()
        lines.append(
            f"class: {c.size} | {' '.join(map(str, c.weight))} | "
            f"{' '.join(map(str, c.representative.start))} | {walk_text}"
        )
    lines.append("entries:")
    for r, row in enumerate(g.entries):
        for s, p in enumerate(row):
            lines.append(f"entry: {r} {s} | {format_poly(p, g.labels)}")
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode()).hexdigest()
    return body + f"checksum: sha256 {digest}\n"


def _field(lines: list[str], i: int, key: str) -> str:
    if i >= len(lines):
        raise MatrixFileError(f"truncated file: missing {key!r}")
    name, sep, value = lines[i].partition(": ")
    if name != key or not sep:
        raise MatrixFileError(f"line {i + 1}: expected {key!r}")
    return value


def _int_field(lines: list[str], i: int, key: str) -> int:
    value = _field(lines, i, key)
    try:
        return int(value)
    except ValueError:
        raise MatrixFileError(f"line {i + 1}: {key} must be an integer") from None


def loads_gmatrix(text: str) -> GMatrix:
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise MatrixFileError("not a matrix file (bad magic line)")
    if not text.endswith("\n") or not lines[-1].startswith("checksum: "):
        raise MatrixFileError("truncated file: missing checksum")
    version = _int_field(lines, 1, "format_version")
    if version != FORMAT_VERSION:
        raise MatrixFileError(f"unsupported format version {version} (expected {FORMAT_VERSION})")
    body = "\n".join(lines[:-1]) + "\n"
    algo, _, digest = lines[-1][len("checksum: "):].partition(" ")
    if algo != "sha256" or hashlib.sha256(body.encode()).hexdigest() != digest:
        raise MatrixFileError("checksum mismatch")

    name = _field(lines, 2, "lattice")
    scheme = _field(lines, 3, "scheme")
    try:
        mode = Mode.coerce(_field(lines, 4, "mode"))
    except ValueError as exc:
        raise MatrixFileError(str(exc)) from None
    m = _int_field(lines, 5, "m")
    n = _int_field(lines, 6, "n")
    d = _int_field(lines, 7, "d")
    t = _int_field(lines, 8, "t")
    labels = tuple(_field(lines, 9, "labels").split())
    if len(labels) != d:
        raise MatrixFileError("label count does not match d")
    if lines[10:11] != ["partition:"]:
        raise MatrixFileError("missing partition section")
    expected = 11 + t + 1 + t * t + 1
    if len(lines) != expected:
        raise MatrixFileError(f"expected {expected} lines, found {len(lines)}")

    classes = []
    try:
        for i in range(11, 11 + t):
            size, weight, start, walk_text = (p.strip() for p in _field(lines, i, "class").split("|"))
            head, *steps = walk_text.split()
            parsed = []
            for tok in steps:
                vals = tuple(int(v) for v in tok.split(","))
                parsed.append((vals[:-1], vals[-1]))
            rep = Walk(int(head), tuple(int(v) for v in start.split()), tuple(parsed))
            classes.append(PartitionClass(rep, int(size), tuple(int(v) for v in weight.split())))
        if lines[11 + t] != "entries:":
            raise MatrixFileError("missing entries section")
        entries = [[None] * t for _ in range(t)]
        for k in range(t * t):
            i = 12 + t + k
            loc, _, ptext = _field(lines, i, "entry").partition(" | ")
            r, s = (int(v) for v in loc.split())
            if (r, s) != divmod(k, t):
                raise MatrixFileError(f"line {i + 1}: entries out of row-major order")
            entries[r][s] = parse_poly(ptext, labels)
    except MatrixFileError:
        raise
    except ValueError as exc:
        raise MatrixFileError(f"malformed matrix file: {exc}") from None
    return GMatrix(
        lattice_name=name,
        scheme=scheme,
        mode=mode,
        m=m,
        n=n,
        labels=labels,
        partition=Partition(m, mode, tuple(classes)),
        entries=tuple(tuple(row) for row in entries),
    )


def save_gmatrix(g: GMatrix, path: str | Path) -> None:
    Path(path).write_text(dumps_gmatrix(g))


def load_gmatrix(path: str | Path) -> GMatrix:
    return loads_gmatrix(Path(path).read_text())
